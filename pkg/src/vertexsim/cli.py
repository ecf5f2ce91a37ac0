"""Command-line front end.

Subcommands: gen-model, spectrum, simulate, estimate, export-circuit.
Every command is deterministic given an explicit --seed; without one a seed
is drawn from OS entropy once and recorded in the output metadata.  Exit
codes: 0 success, 2 validation error, 3 insufficient statistics, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuit_text import export_circuit_text
from .dilation import svd_scaled
from .errors import (
    ConvergenceError,
    InsufficientStatisticsError,
    NumericalError,
    ValidationError,
)
from .experiments import (
    build_t_plan,
    estimate_lambda1,
    simulated_t_action,
)
from .model import VertexModel, generate_model, model_from_json, model_to_json, r_matrix
from .rng import stream_u64, to_unit
from .simulator import histogram_meta_json, histogram_to_csv
from .svgplot import Chart, render
from .transfer import (
    DENSE_CAP_QUBITS,
    assemble_transfer,
    spectral_summary,
    summary_to_json,
    vector_to_csv,
)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientStatisticsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vertexsim", description=__doc__)
    p.add_argument("--version", action="version", version=f"vertexsim {__version__}")
    sub = p.add_subparsers(required=True)

    def add_model_source(sp, need_seed=True):
        sp.add_argument("--model", type=Path, help="model JSON file")
        sp.add_argument("--c", type=float, default=0.4, help="deterministic ramp strength")
        sp.add_argument("--beta", type=float, default=2.0, help="inverse temperature")
        if need_seed:
            sp.add_argument("--seed", type=int, help="RNG seed (drawn from entropy if omitted)")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--format", choices=["csv", "json", "svg"], action="append",
                        help="restrict outputs to these formats (repeatable)")

    g = sub.add_parser("gen-model", help="generate a model file")
    add_model_source(g)
    g.add_argument("--energies-file", type=Path,
                   help="pass an existing model file through to canonical JSON")
    g.set_defaults(func=cmd_gen_model)

    s = sub.add_parser("spectrum", help="spectral summary of the transfer operator")
    add_model_source(s)
    s.add_argument("--n", type=int, required=True, help="number of lattice columns")
    s.add_argument("--method", choices=["power", "dense"], default="power")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_spectrum)

    m = sub.add_parser("simulate", help="simulate transfer blocks acting on a state")
    add_model_source(m)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--m", type=int, default=1, help="number of transfer blocks")
    m.add_argument("--shots", type=int, default=40_000)
    m.add_argument("--mode", choices=["deep", "refeed", "exact"], default="deep")
    m.add_argument("--input-file", type=Path, help="CSV of input amplitudes (index,value)")
    m.add_argument("--meaningful-floor", type=int, default=1000)
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate the eigenvalue ratio lambda_1")
    add_model_source(e)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--shots", type=int, default=100_000)
    e.add_argument("--mode", choices=["deep", "exact"], default="deep",
                   help="'deep' uses the shot backend, 'exact' the projection backend")
    e.add_argument("--inputs", type=int, default=1, help="number of random input states")
    e.add_argument("--input-file", type=Path)
    e.add_argument("--meaningful-floor", type=int, default=1000)
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("export-circuit", help="write the circuit in text form")
    add_model_source(x)
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--m", type=int, default=1)
    x.set_defaults(func=cmd_export_circuit)
    return p


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return secrets.randbits(62)


def _load_model(args, seed: int) -> VertexModel:
    if args.model is not None:
        return model_from_json(args.model.read_text())
    return generate_model(args.c, args.beta, seed)


def _wants(args, fmt: str) -> bool:
    return args.format is None or fmt in args.format


def _outdir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(path)


def _random_positive_state(dim: int, seed: int) -> np.ndarray:
    v = to_unit(stream_u64(seed, dim))
    return v / np.linalg.norm(v)


def _load_input_vector(path: Path, dim: int) -> np.ndarray:
    v = np.zeros(dim)
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("index"):
            continue
        idx, val = line.split(",")
        v[int(idx)] = float(val)
    if not np.any(v):
        raise ValidationError(f"input file {path} holds no amplitudes")
    return v / np.linalg.norm(v)


def cmd_gen_model(args) -> int:
    out = _outdir(args)
    if args.energies_file is not None:
        model = model_from_json(args.energies_file.read_text())
    else:
        seed = _resolve_seed(args)
        model = generate_model(args.c, args.beta, seed)
    _write(out / "model.json", model_to_json(model))
    return 0


def cmd_spectrum(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model(args, seed)
    if args.n + 1 > DENSE_CAP_QUBITS:
        raise ValidationError(
            f"spectrum needs dense assembly, capped at n <= {DENSE_CAP_QUBITS - 1}"
        )
    t = assemble_transfer(r_matrix(model), args.n)
    summary = spectral_summary(t, tol=args.tol, method=args.method)
    out = _outdir(args)
    if _wants(args, "json"):
        meta = json.loads(summary_to_json(summary))
        meta["seed"] = seed
        meta["n"] = args.n
        _write(out / "spectrum.json", json.dumps(meta, indent=2))
    if _wants(args, "csv"):
        if args.method == "dense":
            mags = np.sort(np.abs(np.linalg.eigvals(t.entries)))[::-1]
        else:
            mags = np.array([summary.lambda0, summary.lambda1_abs])
        _write(out / "spectrum.csv", vector_to_csv(mags))
        _write(out / "psi0.csv", vector_to_csv(summary.psi0_right))
    return 0


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model(args, seed)
    dim = 2 ** (args.n + 1)
    if args.input_file is not None:
        vec = _load_input_vector(args.input_file, dim)
    else:
        vec = np.zeros(dim)
        vec[0] = 1.0
    result, diag = simulated_t_action(
        model, args.n, args.m, vec, shots=args.shots, seed=seed,
        mode=args.mode, meaningful_floor=args.meaningful_floor,
    )
    expected = None
    if args.mode != "exact":
        expected, _ = simulated_t_action(model, args.n, args.m, vec, mode="exact")
    out = _outdir(args)
    if _wants(args, "csv"):
        lines = ["index,simulated" + (",expected" if expected is not None else "")]
        for i, x in enumerate(result):
            row = f"{i},{float(x)!r}"
            if expected is not None:
                row += f",{float(expected[i])!r}"
            lines.append(row)
        _write(out / "action.csv", "\n".join(lines) + "\n")
        if diag.final_histogram is not None:
            _write(out / "histogram.csv", histogram_to_csv(diag.final_histogram))
    if _wants(args, "json"):
        meta = {
            "seed": seed,
            "n": args.n,
            "m": args.m,
            "mode": diag.mode,
            "shots_used": diag.shots_used,
            "meaningful_fractions": diag.meaningful_fractions,
            "keep_probability": diag.keep_probability,
        }
        if diag.final_histogram is not None:
            meta["histogram"] = json.loads(histogram_meta_json(diag.final_histogram))
        _write(out / "simulate.json", json.dumps(meta, indent=2))
    if _wants(args, "svg"):
        chart = Chart(
            title=f"Transfer action, n={args.n}, m={args.m}, mode={diag.mode}",
            xlabel="basis index",
            ylabel="amplitude",
        )
        xs = list(range(len(result)))
        chart.add(xs, result.tolist(), label="simulated")
        if expected is not None:
            chart.add(xs, expected.tolist(), label="expected")
        _write(out / "simulate.svg", render(chart))
    return 0


def cmd_estimate(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model(args, seed)
    dim = 2 ** (args.n + 1)
    backend = "exact" if args.mode == "exact" else "shot"
    inputs: list[np.ndarray] = []
    if args.input_file is not None:
        inputs.append(_load_input_vector(args.input_file, dim))
    else:
        for k in range(args.inputs):
            inputs.append(_random_positive_state(dim, seed + 1 + k))
    reports = []
    for k, vec in enumerate(inputs):
        reports.append(
            estimate_lambda1(
                model, args.n, vec, shots=args.shots, seed=seed + 7919 * (k + 1),
                backend=backend, meaningful_floor=args.meaningful_floor,
            )
        )
    out = _outdir(args)
    oracle = reports[0].oracle_lambda1
    if _wants(args, "json"):
        payload = {
            "seed": seed,
            "n": args.n,
            "backend": backend,
            "oracle_lambda1": oracle,
            "estimates": [json.loads(r.to_json()) for r in reports],
        }
        _write(out / "estimate.json", json.dumps(payload, indent=2))
    if _wants(args, "svg"):
        chart = Chart(
            title=f"lambda_1 estimator, n={args.n}",
            xlabel="trial",
            ylabel="estimate",
        )
        xs = [i for i, r in enumerate(reports) if not math.isnan(r.estimate)]
        ys = [r.estimate for r in reports if not math.isnan(r.estimate)]
        chart.add(xs, ys, label="estimates")
        if oracle is not None and xs:
            chart.add([min(xs), max(xs)], [oracle, oracle], label="oracle", kind="line")
        _write(out / "estimate.svg", render(chart))
    return 0


def cmd_export_circuit(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model(args, seed)
    factors = svd_scaled(r_matrix(model))
    plan = build_t_plan(factors, args.n, args.m)
    out = _outdir(args)
    _write(out / "circuit.txt", export_circuit_text(plan))
    return 0


if __name__ == "__main__":
    sys.exit(main())
