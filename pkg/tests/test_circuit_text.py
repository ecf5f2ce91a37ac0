import numpy as np
import pytest

from vertexsim import (
    ApplyUnitary,
    CircuitPlan,
    MeasureAll,
    ValidationError,
    build_d_test_plan,
    build_t_plan,
    dilate,
    export_circuit_text,
    generate_model,
    init_state,
    parse_circuit_text,
    r_matrix,
    run_shots,
    svd_scaled,
)

from conftest import positive_state


def test_empty_plan_exports_header_only():
    plan = CircuitPlan(n_qubits=2, n_classical_bits=0, instructions=[])
    text = export_circuit_text(plan)
    assert text == "circuit qubits=2 cbits=0 databits=0\n"
    assert parse_circuit_text(text) == plan


def test_d_test_plan_line_shape():
    # state preparation + dilation, one measure line per qubit: the classic
    # two-unitary, three-measurement protocol
    d = np.array([1.0, 0.5, 0.3, 0.1])
    prep = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)))[0]
    plan = CircuitPlan(
        n_qubits=3,
        n_classical_bits=3,
        instructions=[
            ApplyUnitary(matrix=prep, targets=(0, 1)),
            ApplyUnitary(matrix=dilate(d).matrix, targets=(0, 1, 2)),
            MeasureAll(qubits=(0,), cbits=(0,)),
            MeasureAll(qubits=(1,), cbits=(1,)),
            MeasureAll(qubits=(2,), cbits=(2,)),
        ],
        n_data_bits=2,
    )
    lines = export_circuit_text(plan).splitlines()
    assert sum(ln.startswith("unitary") for ln in lines) == 2
    assert sum(ln.startswith("measure ") for ln in lines) == 3
    assert parse_circuit_text(export_circuit_text(plan)) == plan


def test_transfer_plan_round_trip_is_exact():
    factors = svd_scaled(r_matrix(generate_model(0.4, 2.0, 3)))
    plan = build_t_plan(factors, 3, 2)
    text = export_circuit_text(plan)
    again = parse_circuit_text(text)
    assert again == plan
    # double round trip is a fixed point
    assert export_circuit_text(again) == text


def test_round_trip_preserves_shot_streams():
    d = np.array([1.0, 0.8, 0.4, 0.3])
    plan = build_d_test_plan(d)
    full = np.zeros(8)
    full[:4] = positive_state(4, 13)
    st = init_state(3, full)
    h1 = run_shots(plan, st, 3000, seed=21)
    h2 = run_shots(parse_circuit_text(export_circuit_text(plan)), st, 3000, seed=21)
    assert h1.counts == h2.counts


def test_matrices_are_deduplicated():
    factors = svd_scaled(r_matrix(generate_model(0.4, 2.0, 3)))
    text = export_circuit_text(build_t_plan(factors, 4, 3))
    # 36 unitary instructions, but only V, D, U matrix blocks
    headers = [ln for ln in text.splitlines() if ln.startswith("matrix ")]
    assert len(headers) == 3


def test_parser_rejects_malformed_input():
    with pytest.raises(ValidationError):
        parse_circuit_text("")
    with pytest.raises(ValidationError):
        parse_circuit_text("nonsense first line\n")
    with pytest.raises(ValidationError):
        parse_circuit_text("circuit qubits=2 cbits=1 databits=1\nunitary m9 0 1\n")
    with pytest.raises(ValidationError):
        parse_circuit_text(
            "circuit qubits=2 cbits=1 databits=1\nmatrix m0 4\n1 0 0 0\n"
        )
    with pytest.raises(ValidationError):
        parse_circuit_text("circuit qubits=2 cbits=1 databits=1\nmeasure 0 -> q3\n")
