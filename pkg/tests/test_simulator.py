import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qassert.circuit import Instruction
from qassert.parser import parse_and_inline
from qassert.simulator import (
    MAX_QUBITS,
    MeasurementCounts,
    SampleConfig,
    SimulationError,
    apply_gate,
    counts_from_array,
    gate_matrix,
    marginal_distribution,
    mixture_with_uniform,
    outcome_distribution,
    sample_distribution,
    simulate,
    zero_state,
)

SQ2 = 2 ** -0.5


def test_hadamard_on_zero():
    state = simulate([Instruction("h", (0,))], 1)
    assert np.allclose(state.amplitudes, [SQ2, SQ2])


def test_bell_pair_probabilities():
    state = simulate([Instruction("h", (0,)), Instruction("cx", (0, 1))], 2)
    assert np.allclose(state.probabilities(), [0.5, 0, 0, 0.5])


def test_running_example_prefix_reaches_target_state(bv_source):
    prog = parse_and_inline(bv_source)
    state = simulate(prog.instructions, prog.n_qubits)
    marg = marginal_distribution(state, [0, 1, 2])
    expected = np.zeros(8)
    expected[0b101] = 1.0
    assert np.allclose(marg, expected, atol=1e-12)


def test_first_qubit_is_most_significant():
    # x on qubit 0 of a 2-qubit register lands on index 10 (binary) = 2
    state = simulate([Instruction("x", (0,))], 2)
    assert np.argmax(state.probabilities()) == 2


def test_cx_operand_order_matters():
    up = simulate([Instruction("x", (0,)), Instruction("cx", (0, 1))], 2)
    down = simulate([Instruction("x", (0,)), Instruction("cx", (1, 0))], 2)
    assert np.argmax(up.probabilities()) == 0b11
    assert np.argmax(down.probabilities()) == 0b10


def test_swap_gate():
    state = simulate([Instruction("x", (0,)), Instruction("swap", (0, 1))], 2)
    assert np.argmax(state.probabilities()) == 0b01


def test_ccx_truth_table():
    state = simulate(
        [Instruction("x", (0,)), Instruction("x", (1,)), Instruction("ccx", (0, 1, 2))], 3
    )
    assert np.argmax(state.probabilities()) == 0b111


def test_qubit_cap():
    with pytest.raises(SimulationError, match="cap"):
        zero_state(MAX_QUBITS + 1)
    with pytest.raises(SimulationError):
        zero_state(0)


def test_apply_gate_rejects_measure_and_bad_indices():
    amps = zero_state(1)
    with pytest.raises(SimulationError):
        apply_gate(amps, Instruction("measure", (0,), clbit=("c", 0)), 1)
    with pytest.raises(SimulationError, match="out of range"):
        apply_gate(amps, Instruction("x", (1,)), 1)


def test_gate_matrix_unknown():
    with pytest.raises(SimulationError, match="unsupported"):
        gate_matrix("nope")


def test_marginal_ordering_contract():
    state = simulate([Instruction("x", (0,))], 2)  # |10>
    assert np.allclose(marginal_distribution(state, [0, 1]), [0, 0, 1, 0])
    assert np.allclose(marginal_distribution(state, [1, 0]), [0, 1, 0, 0])


def test_marginal_rejects_duplicates():
    state = simulate([], 2)
    with pytest.raises(SimulationError, match="duplicate"):
        marginal_distribution(state, [0, 0])


def test_mixture_with_uniform_endpoints():
    probs = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(mixture_with_uniform(probs, 1.0), probs)
    assert np.allclose(mixture_with_uniform(probs, 0.0), [0.25] * 4)
    mixed = mixture_with_uniform(probs, 0.6)
    assert np.allclose(mixed, [0.7, 0.1, 0.1, 0.1])


def test_measurement_counts_validation():
    with pytest.raises(ValueError, match="sum"):
        MeasurementCounts(10, {"0": 4}, ("a",))
    with pytest.raises(ValueError, match="outcome key"):
        MeasurementCounts(4, {"2": 4}, ("a",))
    counts = MeasurementCounts(7, {"01": 3, "11": 4}, ("a", "b"))
    assert counts.as_array().tolist() == [0, 3, 0, 4]


def test_counts_from_array_roundtrip():
    arr = np.array([5, 0, 2, 3])
    counts = counts_from_array(arr, ("a", "b"))
    assert counts.shots == 10
    assert counts.counts == {"00": 5, "10": 2, "11": 3}
    assert counts.as_array().tolist() == arr.tolist()


def test_sampling_is_deterministic_per_seed():
    probs = np.array([0.5, 0.5])
    cfg = SampleConfig(shots=1000, seed=42)
    a = sample_distribution(probs, ("b",), cfg)
    b = sample_distribution(probs, ("b",), cfg)
    assert a == b
    c = sample_distribution(probs, ("b",), SampleConfig(shots=1000, seed=43))
    assert c.shots == 1000 and c != a


def test_sample_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(shots=0)
    with pytest.raises(ValueError):
        SampleConfig(shots=1, fidelity=1.5)


def test_outcome_distribution_terminal_measures_match_marginal():
    gates = [Instruction("h", (0,)), Instruction("cx", (0, 1)), Instruction("ry", (1,), (0.9,))]
    measures = [
        Instruction("measure", (0,), clbit=("a", 0)),
        Instruction("measure", (1,), clbit=("b", 0)),
    ]
    dist = outcome_distribution(gates + measures, 2, [("a", 0), ("b", 0)])
    expected = marginal_distribution(simulate(gates, 2), [0, 1])
    assert np.allclose(dist, expected, atol=1e-12)


def test_outcome_distribution_mid_circuit_branching():
    # measuring one half of a Bell pair determines the other half
    instrs = [
        Instruction("h", (0,)),
        Instruction("cx", (0, 1)),
        Instruction("measure", (0,), clbit=("a", 0)),
        Instruction("x", (1,)),
        Instruction("measure", (1,), clbit=("b", 0)),
    ]
    dist = outcome_distribution(instrs, 2, [("a", 0), ("b", 0)])
    assert np.allclose(dist, [0, 0.5, 0.5, 0], atol=1e-12)


def test_outcome_distribution_unknown_bit():
    with pytest.raises(SimulationError, match="undeclared bit"):
        outcome_distribution([Instruction("measure", (0,), clbit=("a", 0))], 1, [("b", 0)])


_SINGLE = ["x", "y", "z", "h", "s", "t", "sdg", "tdg"]


@st.composite
def _gate_sequences(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    gates = []
    for _ in range(draw(st.integers(min_value=0, max_value=10))):
        if n > 1 and draw(st.booleans()):
            q1 = draw(st.integers(min_value=0, max_value=n - 1))
            q2 = draw(st.integers(min_value=0, max_value=n - 1).filter(lambda x: x != q1))
            gates.append(Instruction("cx", (q1, q2)))
        else:
            q = draw(st.integers(min_value=0, max_value=n - 1))
            gates.append(Instruction(draw(st.sampled_from(_SINGLE)), (q,)))
    return n, gates


@settings(max_examples=50, deadline=None)
@given(_gate_sequences())
def test_unitary_evolution_preserves_norm(seq):
    n, gates = seq
    state = simulate(gates, n)
    assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-9
