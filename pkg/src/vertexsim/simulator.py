"""State-vector circuit engine with mid-circuit post-selection and shot sampling.

Conventions
-----------
* Basis index = sum_k bit_k * 2^k, qubit 0 least significant.  When an
  ancilla is present it is the highest-index qubit.
* Classical register strings print classical bit width-1 first (leftmost),
  so a register value v renders as format(v, "0{width}b").  Plan builders
  put post-selection outcomes in the HIGH bits and data-qubit measurements
  in the LOW bits, hence "meaningful" records are exactly those with value
  < 2^n_data_bits.
* Shot k draws its randomness from the counter-based substream (seed, k):
  one uniform per measurement instruction, in program order.  Results are
  therefore independent of chunking or execution order.

Shot execution shares work across shots: between measurements all shots see
the same deterministic evolution, so the engine tracks one state per distinct
measurement record (branch) and a per-shot branch id, splitting branches only
at measurement events.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    ImpossiblePostselectionError,
    ValidationError,
)
from .gates import apply_matrix, check_targets
from .rng import substream_seed, substream_value, to_unit

UNITARITY_TOL = 1e-10


@dataclass
class QuantumState:
    """Complex amplitudes over n qubits, kept normalized."""

    n_qubits: int
    amplitudes: np.ndarray

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def init_state(n: int, amplitudes: np.ndarray) -> QuantumState:
    """Validate and normalize an amplitude vector into a QuantumState."""
    if n < 1:
        raise ValidationError(f"need at least one qubit, got {n}")
    amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
    if amps.shape != (2 ** n,):
        raise DimensionError(f"state over {n} qubits needs 2^{n} amplitudes, got {amps.shape}")
    nrm = float(np.linalg.norm(amps))
    if nrm == 0.0:
        raise ValidationError("cannot initialize from the zero vector")
    if abs(nrm - 1.0) > 1e-9:
        raise ValidationError(f"input amplitudes must be normalized to 1e-9, got norm {nrm!r}")
    return QuantumState(n, amps / nrm)


def _check_unitary(matrix: np.ndarray, k: int) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (2 ** k, 2 ** k):
        raise DimensionError(f"matrix on {k} qubits must be {2 ** k}x{2 ** k}, got {m.shape}")
    defect = np.max(np.abs(m.conj().T @ m - np.eye(2 ** k)))
    if defect > UNITARITY_TOL:
        raise ValidationError(f"matrix is not unitary (defect {defect:.3e})")
    return m


def apply_unitary(state: QuantumState, matrix: np.ndarray, targets: list[int] | tuple[int, ...]) -> QuantumState:
    """Apply a k-qubit unitary in place; targets[0] is the gate's LSB."""
    check_targets(targets, state.n_qubits)
    m = _check_unitary(matrix, len(targets))
    state.amplitudes = apply_matrix(state.amplitudes, m, targets, state.n_qubits)
    return state


def _prob_zero(amps: np.ndarray, qubit: int, n_qubits: int) -> float:
    axis = n_qubits - 1 - qubit
    dens = np.abs(amps.reshape([2] * n_qubits)) ** 2
    return float(dens.take(0, axis=axis).sum())


def _collapse_qubit(amps: np.ndarray, qubit: int, outcome: int, n_qubits: int) -> np.ndarray:
    """Project a qubit onto an outcome and renormalize (probability must be > 0)."""
    view = amps.reshape([2] * n_qubits).copy()
    index = [slice(None)] * n_qubits
    index[n_qubits - 1 - qubit] = 1 - outcome
    view[tuple(index)] = 0.0
    flat = view.reshape(-1)
    p = float(np.linalg.norm(flat))
    if p == 0.0:
        raise ImpossiblePostselectionError(f"qubit {qubit} has zero weight on outcome {outcome}")
    return flat / p


def postselect_ancilla0(state: QuantumState) -> tuple[QuantumState, float]:
    """Project the ancilla (highest qubit) onto 0 and renormalize in place."""
    q = state.n_qubits - 1
    p0 = _prob_zero(state.amplitudes, q, state.n_qubits)
    if p0 <= 0.0:
        raise ImpossiblePostselectionError("ancilla has no weight on |0>")
    state.amplitudes = _collapse_qubit(state.amplitudes, q, 0, state.n_qubits)
    return state, p0


# --------------------------------------------------------------------------
# circuit plans


@dataclass(frozen=True)
class ApplyUnitary:
    matrix: np.ndarray
    targets: tuple[int, ...]
    label: str = ""

    def __eq__(self, other):
        return (
            isinstance(other, ApplyUnitary)
            and self.targets == other.targets
            and self.matrix.shape == other.matrix.shape
            and np.array_equal(self.matrix, other.matrix)
        )


@dataclass(frozen=True, eq=True)
class MeasureAncillaPostselect0:
    qubit: int
    cbit: int


@dataclass(frozen=True, eq=True)
class MeasureAll:
    qubits: tuple[int, ...]
    cbits: tuple[int, ...]


Instruction = ApplyUnitary | MeasureAncillaPostselect0 | MeasureAll


@dataclass
class CircuitPlan:
    """Straight-line program over n_qubits with a classical register.

    n_data_bits marks how many LOW classical bits hold data measurements;
    everything above them must be 0 for a record to count as meaningful.
    """

    n_qubits: int
    n_classical_bits: int
    instructions: list[Instruction] = field(default_factory=list)
    n_data_bits: int | None = None

    def __post_init__(self):
        if self.n_data_bits is None:
            n_post = sum(isinstance(i, MeasureAncillaPostselect0) for i in self.instructions)
            self.n_data_bits = self.n_classical_bits - n_post
        self.validate()

    def validate(self) -> None:
        if self.n_qubits < 1:
            raise ValidationError("plan needs at least one qubit")
        if not 0 <= self.n_data_bits <= self.n_classical_bits:
            raise ValidationError(
                f"bad register layout: {self.n_data_bits} data bits in "
                f"{self.n_classical_bits} classical bits"
            )
        for ins in self.instructions:
            if isinstance(ins, ApplyUnitary):
                check_targets(ins.targets, self.n_qubits)
                _check_unitary(ins.matrix, len(ins.targets))
            elif isinstance(ins, MeasureAncillaPostselect0):
                if not 0 <= ins.qubit < self.n_qubits:
                    raise ValidationError(f"measured qubit {ins.qubit} out of range")
                if not 0 <= ins.cbit < self.n_classical_bits:
                    raise ValidationError(f"classical bit {ins.cbit} out of range")
            elif isinstance(ins, MeasureAll):
                check_targets(ins.qubits, self.n_qubits)
                if len(ins.cbits) != len(ins.qubits):
                    raise ValidationError("measure needs one classical bit per qubit")
                for cb in ins.cbits:
                    if not 0 <= cb < self.n_classical_bits:
                        raise ValidationError(f"classical bit {cb} out of range")
            else:
                raise ValidationError(f"unknown instruction {ins!r}")

    def count_unitaries(self) -> int:
        return sum(isinstance(i, ApplyUnitary) for i in self.instructions)

    def count_postselects(self) -> int:
        return sum(isinstance(i, MeasureAncillaPostselect0) for i in self.instructions)

    def __eq__(self, other):
        return (
            isinstance(other, CircuitPlan)
            and self.n_qubits == other.n_qubits
            and self.n_classical_bits == other.n_classical_bits
            and self.n_data_bits == other.n_data_bits
            and self.instructions == other.instructions
        )


@dataclass(frozen=True)
class ShotHistogram:
    """Meaningful-record histogram: keys are full-width register strings
    whose post-selection bits are all 0; sum(counts) == meaningful_shots."""

    counts: dict[str, int]
    total_shots: int
    meaningful_shots: int
    seed: int
    width: int

    @property
    def meaningful_fraction(self) -> float:
        return self.meaningful_shots / self.total_shots if self.total_shots else 0.0


def run_exact(plan: CircuitPlan, input_state: QuantumState) -> tuple[QuantumState, float]:
    """Infinite-shot reference: force every post-selection to 0.

    Returns the final kept state (before any final measurement, which is
    skipped) and the product of the keep probabilities.
    """
    if input_state.n_qubits != plan.n_qubits:
        raise DimensionError(
            f"input has {input_state.n_qubits} qubits, plan needs {plan.n_qubits}"
        )
    amps = input_state.amplitudes.copy()
    keep = 1.0
    for ins in plan.instructions:
        if isinstance(ins, ApplyUnitary):
            amps = apply_matrix(amps, ins.matrix, ins.targets, plan.n_qubits)
        elif isinstance(ins, MeasureAncillaPostselect0):
            p0 = _prob_zero(amps, ins.qubit, plan.n_qubits)
            if p0 <= 0.0:
                raise ImpossiblePostselectionError(
                    f"post-selection on qubit {ins.qubit} has probability zero"
                )
            amps = _collapse_qubit(amps, ins.qubit, 0, plan.n_qubits)
            keep *= p0
        # MeasureAll: exact mode returns the pre-measurement state
    return QuantumState(plan.n_qubits, amps), keep


def _marginal_probs(amps: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Outcome distribution over `qubits` (qubits[0] = LSB of the outcome index)."""
    m = len(qubits)
    dens = np.abs(amps.reshape([2] * n_qubits)) ** 2
    axes = [n_qubits - 1 - q for q in reversed(qubits)]
    dens = np.moveaxis(dens, axes, range(m))
    probs = dens.reshape(2 ** m, -1).sum(axis=1)
    total = probs.sum()
    return probs / total


def _collapse_outcome(amps: np.ndarray, qubits: tuple[int, ...], outcome: int,
                      n_qubits: int) -> np.ndarray:
    view = amps.reshape([2] * n_qubits).copy()
    index = [slice(None)] * n_qubits
    keep = [slice(None)] * n_qubits
    for j, q in enumerate(qubits):
        keep[n_qubits - 1 - q] = (outcome >> j) & 1
    mask = np.zeros_like(view, dtype=bool)
    mask[tuple(keep)] = True
    view[~mask] = 0.0
    flat = view.reshape(-1)
    p = float(np.linalg.norm(flat))
    if p == 0.0:
        raise ImpossiblePostselectionError("measurement collapsed onto a zero-weight outcome")
    return flat / p


def _simulate_chunk(plan: CircuitPlan, amps0: np.ndarray, seed: int, start: int,
                    stop: int) -> tuple[np.ndarray, np.ndarray]:
    """(data word, post-selection word) per shot for shots [start, stop).

    Classical bits below n_data_bits land in the data word at their own
    position, the rest in the select word; a shot is meaningful iff its
    select word is 0.
    """
    n_shots = stop - start
    nq = plan.n_qubits
    nd = plan.n_data_bits
    subs = substream_seed(seed, np.arange(start, stop, dtype=np.uint64))
    states: list[np.ndarray] = [amps0]
    branch = np.zeros(n_shots, dtype=np.int64)
    data_word = np.zeros(n_shots, dtype=np.uint64)
    sel_word = np.zeros(n_shots, dtype=np.uint64)

    def record(bits: np.ndarray, cbit: int) -> None:
        if cbit < nd:
            np.bitwise_or(data_word, bits.astype(np.uint64) << np.uint64(cbit), out=data_word)
        else:
            np.bitwise_or(sel_word, bits.astype(np.uint64) << np.uint64(cbit - nd), out=sel_word)

    event = 0
    last = len(plan.instructions) - 1
    for pos, ins in enumerate(plan.instructions):
        if isinstance(ins, ApplyUnitary):
            states = [apply_matrix(s, ins.matrix, ins.targets, nq) for s in states]
        elif isinstance(ins, MeasureAncillaPostselect0):
            u = to_unit(substream_value(subs, event))
            event += 1
            p0 = np.array([_prob_zero(s, ins.qubit, nq) for s in states])
            outcome = (u >= p0[branch]).astype(np.int64)
            record(outcome, ins.cbit)
            if pos == last:
                continue
            key = 2 * branch + outcome
            realized, branch = np.unique(key, return_inverse=True)
            states = [
                _collapse_qubit(states[k >> 1], ins.qubit, int(k & 1), nq) for k in realized
            ]
        elif isinstance(ins, MeasureAll):
            u = to_unit(substream_value(subs, event))
            event += 1
            m = len(ins.qubits)
            out = np.zeros(n_shots, dtype=np.int64)
            for bi, s in enumerate(states):
                sel = branch == bi
                if not np.any(sel):
                    continue
                cum = np.cumsum(_marginal_probs(s, ins.qubits, nq))
                cum[-1] = 1.0
                out[sel] = np.minimum(
                    np.searchsorted(cum, u[sel], side="right"), 2 ** m - 1
                )
            for j, cb in enumerate(ins.cbits):
                record((out >> j) & 1, cb)
            if pos == last:
                continue
            key = branch * (2 ** m) + out
            realized, branch = np.unique(key, return_inverse=True)
            states = [
                _collapse_outcome(states[k // (2 ** m)], ins.qubits, int(k % (2 ** m)), nq)
                for k in realized
            ]
    return data_word, sel_word


def run_shots(plan: CircuitPlan, input_state: QuantumState, shots: int, seed: int,
              chunk_size: int = 1 << 16) -> ShotHistogram:
    """Sample the plan shot by shot and histogram the meaningful records.

    Every measurement samples via the Born rule and the shot continues
    (mid-circuit outcomes are recorded, never forced); records whose
    post-selection bits are not all 0 are dropped at histogram time.
    """
    if shots < 1:
        raise ValidationError(f"need at least one shot, got {shots}")
    if input_state.n_qubits != plan.n_qubits:
        raise DimensionError(
            f"input has {input_state.n_qubits} qubits, plan needs {plan.n_qubits}"
        )
    if plan.n_data_bits > 64 or plan.n_classical_bits - plan.n_data_bits > 64:
        raise ValidationError(
            "classical register too wide to sample: data and post-selection "
            "sections are limited to 64 bits each"
        )
    amps0 = input_state.amplitudes.astype(np.complex128)
    counts: dict[int, int] = {}
    meaningful = 0
    for begin in range(0, shots, chunk_size):
        data_word, sel_word = _simulate_chunk(
            plan, amps0, seed, begin, min(begin + chunk_size, shots)
        )
        mask = sel_word == 0
        meaningful += int(mask.sum())
        vals, cnts = np.unique(data_word[mask], return_counts=True)
        for v, cn in zip(vals.tolist(), cnts.tolist()):
            counts[v] = counts.get(v, 0) + cn
    width = plan.n_classical_bits
    keyed = {format(v, f"0{width}b"): c for v, c in sorted(counts.items())}
    return ShotHistogram(
        counts=keyed,
        total_shots=shots,
        meaningful_shots=meaningful,
        seed=seed,
        width=width,
    )


def histogram_to_csv(h: ShotHistogram) -> str:
    lines = ["bitstring,count"]
    lines += [f"{k},{v}" for k, v in h.counts.items()]
    return "\n".join(lines) + "\n"


def histogram_meta_json(h: ShotHistogram) -> str:
    return json.dumps(
        {"total_shots": h.total_shots, "meaningful_shots": h.meaningful_shots, "seed": h.seed},
        indent=2,
    )
