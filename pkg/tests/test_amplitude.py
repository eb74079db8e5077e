import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quso import ConfigError, CostTable, ResourceError
from quso.amplitude import (
    build_amplitude_estimation,
    build_cost_layer,
    build_grover,
    build_qpa,
    build_shortcut_preparation,
    cost_from_theta,
    cost_layer_distance_bound,
    estimation_state,
    ideal_layout,
    qft,
    qpe_amplitudes,
    shortcut_layout,
    theta_from_cost,
    unitary_with_first_column,
    walsh_coefficients,
)
from quso.statevector import Circuit, RegisterLayout, StateVector, circuit_unitary


def dummy_preparation(a, layout):
    """``a|0> + sqrt(1-a^2)|1>`` on the one-qubit ``d`` register."""
    return Circuit(layout.total).ry(layout.qubits("d")[0], 2 * math.acos(a))


def qae_distribution(a, k):
    lay = RegisterLayout((("p", k), ("d", 1)))
    circ = build_amplitude_estimation(dummy_preparation(a, lay), 0, lay, search=("d",), flags=())
    return StateVector(lay).run(circ)


# -- cost <-> phase ---------------------------------------------------------------------------


def test_theta_cost_pairs():
    assert theta_from_cost(0.0) == 0.0
    assert theta_from_cost(1.0) == pytest.approx(0.5)
    assert theta_from_cost(math.sin(math.pi / 8)) == pytest.approx(1 / 8)
    assert cost_from_theta(1 / 8) == pytest.approx(math.sin(math.pi / 8))
    with pytest.raises(ConfigError):
        theta_from_cost(1.2)
    with pytest.raises(ConfigError):
        theta_from_cost(-0.1)


@settings(max_examples=50)
@given(st.floats(0, 1))
def test_theta_roundtrip(c):
    assert cost_from_theta(theta_from_cost(c)) == pytest.approx(c, abs=1e-12)


# -- Grover and QFT -------------------------------------------------------------------------


@pytest.mark.parametrize("a", [0.2, 0.55, 0.8])
def test_grover_eigenvalues(a):
    lay = RegisterLayout((("d", 1),))
    g = circuit_unitary(build_grover(dummy_preparation(a, lay), 0, lay, search=("d",), flags=()))
    theta = theta_from_cost(a)
    ev = np.sort_complex(np.linalg.eigvals(g))
    np.testing.assert_allclose(ev, np.sort_complex(np.exp([2j * np.pi * theta, -2j * np.pi * theta])), atol=1e-12)


@pytest.mark.parametrize("a,expected", [(1.0, -1.0), (0.0, 1.0)])
def test_grover_edge_amplitudes(a, expected):
    lay = RegisterLayout((("d", 1),))
    g = circuit_unitary(build_grover(dummy_preparation(a, lay), 0, lay, search=("d",), flags=()))
    np.testing.assert_allclose(np.linalg.eigvals(g), [expected, expected], atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_qft_is_dft(k):
    n = 2**k
    u = circuit_unitary(qft(list(range(k)), k))
    dft = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / math.sqrt(n)
    np.testing.assert_allclose(u, dft, atol=1e-12)


def test_grover_rejects_bad_target():
    lay = RegisterLayout((("d", 1),))
    with pytest.raises(ConfigError):
        build_grover(dummy_preparation(0.5, lay), 2, lay, search=("d",), flags=())


# -- estimation ---------------------------------------------------------------------------------


def test_quarter_phase_two_bits():
    probs = qae_distribution(cost_from_theta(0.25), 2).register_distribution("p")
    np.testing.assert_allclose(probs, [0, 0.5, 0, 0.5], atol=1e-10)


def test_zero_phase_is_certain():
    probs = qae_distribution(0.0, 3).register_distribution("p")
    assert probs[0] == pytest.approx(1.0, abs=1e-12)


def test_two_nearest_bins_concentrate():
    rng = np.random.default_rng(2024)
    k = 4
    for theta in rng.uniform(0.01, 0.49, 20):
        probs = qae_distribution(cost_from_theta(theta), k).register_distribution("p")
        lo = math.floor(theta * 2**k)
        near = probs[lo] + probs[(lo + 1) % 2**k]
        mirror = probs[(-lo) % 2**k] + probs[(-lo - 1) % 2**k]
        assert near >= 4 / math.pi**2 - 1e-12
        assert near + mirror >= 8 / math.pi**2 - 1e-12


@pytest.mark.parametrize("a", [0.3, math.sin(math.pi / 8), 0.9])
@pytest.mark.parametrize("k", [2, 3])
def test_shortcut_state_equals_estimation_circuit(a, k):
    sv = qae_distribution(a, k)
    np.testing.assert_allclose(sv.amplitudes, estimation_state(a, k), atol=1e-12)


def test_qpe_amplitudes_aligned():
    plus, minus = qpe_amplitudes(3 / 8, 3)
    np.testing.assert_allclose(np.abs(plus), np.eye(8)[3], atol=1e-14)
    np.testing.assert_allclose(np.abs(minus), np.eye(8)[5], atol=1e-14)
    plus, minus = qpe_amplitudes(0.0, 3)
    np.testing.assert_allclose(plus, minus)
    np.testing.assert_allclose(plus, np.eye(8)[0], atol=1e-14)


@settings(max_examples=40)
@given(st.floats(0, 0.999))
def test_qpe_amplitudes_brute_force(theta):
    k = 3
    plus, minus = qpe_amplitudes(theta, k)
    j = np.arange(8)
    for sign, got in ((1, plus), (-1, minus)):
        brute = np.array([sum(np.exp(-2j * np.pi * l * (jj / 8 - sign * theta)) for l in range(8)) / 8 for jj in j])
        np.testing.assert_allclose(got, brute, atol=1e-12)


def test_unitary_with_first_column():
    rng = np.random.default_rng(1)
    for _ in range(10):
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        u = unitary_with_first_column(v)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(8), atol=1e-12)
        np.testing.assert_allclose(u[:, 0], v / np.linalg.norm(v), atol=1e-12)


# -- Walsh and phase application -----------------------------------------------------------------


def test_walsh_one_bit():
    np.testing.assert_allclose(walsh_coefficients(1).coefficients, [0.5, -0.5])


@pytest.mark.parametrize("k", range(0, 8))
def test_walsh_reconstruction(k):
    w = walsh_coefficients(k)
    np.testing.assert_allclose(w.reconstruct(), np.sin(np.pi * np.arange(2**k) / 2**k), atol=1e-13)


def test_walsh_zero_function_and_guard():
    assert np.all(walsh_coefficients(4, lambda th: np.zeros_like(th)).coefficients == 0)
    with pytest.raises(ResourceError):
        walsh_coefficients(13)


def test_qpa_identity_and_one_bit():
    lay = RegisterLayout((("p", 3),))
    np.testing.assert_allclose(circuit_unitary(build_qpa(0.0, lay)), np.eye(8))
    one = RegisterLayout((("p", 1),))
    np.testing.assert_allclose(np.diag(circuit_unitary(build_qpa(math.pi, one))), [1, np.exp(-1j * math.pi)],
                               atol=1e-14)


@settings(max_examples=30)
@given(st.floats(-7, 7), st.integers(1, 6))
def test_qpa_is_unit_modulus_diagonal(gamma, k):
    lay = RegisterLayout((("p", k),))
    u = circuit_unitary(build_qpa(gamma, lay))
    d = np.diag(u)
    np.testing.assert_allclose(u, np.diag(d), atol=1e-13)
    np.testing.assert_allclose(np.abs(d), 1, atol=1e-13)
    np.testing.assert_allclose(d, np.exp(-1j * gamma * np.sin(np.pi * np.arange(2**k) / 2**k)), atol=1e-12)


# -- cost layers -------------------------------------------------------------------------------------


def layer_outputs(gamma, costs, k):
    m = int(math.log2(len(costs)))
    lay = shortcut_layout(m, k)
    circ = build_cost_layer(gamma, "shortcut", lay, CostTable(m, costs), use_normalized=False)
    data = np.zeros((2**lay.total, len(costs)), dtype=complex)
    for x in range(len(costs)):
        data[lay.basis_index(c=x), x] = 1
    sv = StateVector(lay, data.copy()).run(circ)
    ideal = data * np.exp(-1j * gamma * np.asarray(costs))[None, :]
    return sv.data, ideal


def test_representable_costs_give_exact_phase_oracle():
    k = 3
    costs = np.sin(np.pi * np.array([0, 1, 2, 3]) / 2**k)
    got, ideal = layer_outputs(0.7, costs, k)
    np.testing.assert_allclose(got, ideal, atol=1e-10)


def test_zero_angle_layer_is_identity():
    costs = np.array([0.1, 0.37, 0.9, 0.55])
    got, ideal = layer_outputs(0.0, costs, 3)
    np.testing.assert_allclose(got, ideal, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.floats(0.1, 2.5), st.integers(2, 6))
def test_layer_error_bound(costs, gamma, k):
    got, ideal = layer_outputs(gamma, np.array(costs), k)
    err = (np.abs(got - ideal) ** 2).sum(axis=0)
    assert np.all(err <= cost_layer_distance_bound(gamma, k) + 1e-12)


def test_ideal_layer_and_mode_errors():
    lay = ideal_layout(2)
    table = CostTable(2, np.array([0.0, 0.5, 1.0, 0.25]))
    u = circuit_unitary(build_cost_layer(0.3, "ideal", lay, table))
    np.testing.assert_allclose(np.diag(u), np.exp(-0.3j * table.normalized))
    with pytest.raises(ConfigError):
        build_cost_layer(0.3, "ideal", lay)
    with pytest.raises(ConfigError):
        build_cost_layer(0.3, "full", lay)
    with pytest.raises(ConfigError):
        build_cost_layer(0.3, "bogus", lay, table)
    with pytest.raises(ConfigError):
        build_shortcut_preparation(np.zeros(3), shortcut_layout(2, 2))


def test_distance_bound_value():
    assert cost_layer_distance_bound(1.0, 2) == pytest.approx(math.pi**2 / 16)
