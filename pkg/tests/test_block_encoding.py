import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quso import ConfigError, ThermalNetwork, assemble_matrix
from quso.block_encoding import (
    LCUPlan,
    build_pair_block,
    build_permutation,
    build_UA,
    encoded_block,
    lcu_plan,
    prepare_amplitudes,
    rotation_tree,
    synthetic_network,
)
from quso.statevector import RegisterLayout, StateVector, circuit_unitary


def pair_layout(n):
    return RegisterLayout((("c", 0), ("lp", 1), ("f", 1), ("d", n)))


def pair_matrix(i, j, n):
    u = np.zeros((2**n, 2**n))
    u[i, i] = u[j, j] = 1
    u[i, j] = u[j, i] = -1
    return u


def pair_block(i, j, n):
    lay = pair_layout(n)
    return encoded_block(build_pair_block(i, j, lay), lay, 0, ancillas=("lp", "f"), extra_zero=())


# -- permutations -----------------------------------------------------------------------


def test_permutation_example_two_qubits():
    spec = build_permutation(3, 0, 2)
    assert spec.apply_to_index(3) == 0
    assert spec.apply_to_index(0) == 1


def test_permutation_already_in_place_is_empty():
    assert build_permutation(0, 1, 1).ops == ()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_permutations_are_permutation_matrices(n):
    for i, j in itertools.permutations(range(2**n), 2):
        spec = build_permutation(i, j, n)
        u = circuit_unitary(spec.circuit(list(range(n)), n))
        assert np.allclose(np.abs(u).sum(0), 1) and np.allclose(np.abs(u).sum(1), 1)
        assert set(np.unique(np.round(u.real, 12))) <= {0.0, 1.0}
        assert u[0, i] == 1 and u[1, j] == 1
        assert spec.apply_to_index(i) == 0 and spec.apply_to_index(j) == 1


def test_permutation_rejects_equal_or_out_of_range():
    with pytest.raises(ConfigError):
        build_permutation(1, 1, 2)
    with pytest.raises(ConfigError):
        build_permutation(0, 4, 2)


# -- pair blocks ----------------------------------------------------------------------------


def test_pair_block_minus_state_is_kept():
    block = pair_block(0, 1, 1)
    minus = np.array([1, -1]) / math.sqrt(2)
    np.testing.assert_allclose(block @ minus, minus, atol=1e-12)


def test_pair_block_plus_state_is_annihilated():
    block = pair_block(0, 1, 1)
    plus = np.array([1, 1]) / math.sqrt(2)
    np.testing.assert_allclose(block @ plus, 0, atol=1e-12)


def test_pair_block_three_qubits():
    np.testing.assert_allclose(pair_block(2, 5, 3), pair_matrix(2, 5, 3) / 2, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_all_pair_blocks(n):
    for i, j in itertools.combinations(range(2**n), 2):
        np.testing.assert_allclose(pair_block(i, j, n), pair_matrix(i, j, n) / 2, atol=1e-10)


# -- coefficient preparation -----------------------------------------------------------------


def test_single_term_preparation_is_trivial():
    lay = RegisterLayout((("l", 0),))
    plan = LCUPlan(np.array([3.0]), ("env",))
    circ = prepare_amplitudes(plan, lay)
    assert len(circ) == 0
    np.testing.assert_allclose(plan.amplitudes, [1.0])


def test_two_equal_terms_give_hadamard_amplitudes():
    lay = RegisterLayout((("l", 1),))
    plan = LCUPlan(np.array([2.0, 2.0]), ("a", "b"))
    sv = StateVector(lay).run(prepare_amplitudes(plan, lay))
    np.testing.assert_allclose(sv.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-14)


def test_four_node_plan_amplitudes(net):
    plan = lcu_plan(net)
    lam = np.array([50, 200, 1000 / 6, 1000 / 6, 1000 / 7, 1000 / 7, 125])
    np.testing.assert_allclose(plan.coefficients, lam, rtol=1e-12)
    assert plan.coefficients.sum() == pytest.approx(994.047619, rel=1e-8)
    assert plan.c_squared == pytest.approx(1.00599e-3, rel=1e-5)
    lay = RegisterLayout((("l", 3),))
    sv = StateVector(lay).run(prepare_amplitudes(plan, lay))
    probs = np.abs(sv.amplitudes) ** 2
    np.testing.assert_allclose(probs[:7], lam / lam.sum(), atol=1e-14)
    assert probs[7] == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_rotation_tree_prepares_signed_amplitudes(amps):
    amps = np.asarray(amps)
    sv = StateVector(RegisterLayout((("a", 3),))).run(rotation_tree(amps, [0, 1, 2], 3))
    np.testing.assert_allclose(sv.amplitudes, amps / np.linalg.norm(amps), atol=1e-12)


def test_rotation_tree_rejects_zero_vector():
    with pytest.raises(ConfigError):
        rotation_tree(np.zeros(2), [0], 1)


# -- full block-encoding ------------------------------------------------------------------------


def test_block_all_edges_off_is_scaled_identity(net):
    lay = RegisterLayout.standard(6, 0, 4)
    plan = lcu_plan(net)
    block = encoded_block(build_UA(net, lay), lay, 0)
    np.testing.assert_allclose(block, plan.c_squared * 50.0 * np.eye(4), atol=1e-12)
    np.testing.assert_allclose(np.linalg.svd(block, compute_uv=False), 0.0503, atol=5e-5)


def test_block_matches_matrix_for_every_configuration(net):
    lay = RegisterLayout.standard(6, 0, 4)
    ua = build_UA(net, lay)
    c2 = lcu_plan(net).c_squared
    worst = 0.0
    for x in net.configurations():
        worst = max(worst, np.abs(encoded_block(ua, lay, x.index) - c2 * assemble_matrix(net, x) / 2).max())
    assert worst <= 1e-10


def test_superposed_configuration_branches_are_independent(net):
    lay = RegisterLayout.standard(6, 0, 4)
    ua = build_UA(net, lay)
    c2 = lcu_plan(net).c_squared
    psi = np.array([0.3, -0.5, 0.7, 0.4])
    psi = psi / np.linalg.norm(psi)
    sv = StateVector(lay)
    sv.data[:] = 0
    for x in range(64):
        for v in range(4):
            sv.data[lay.basis_index(c=x, d=v), 0] = psi[v] / 8
    sv.run(ua)
    for x in (0, 13, 37, 63):
        got = sv.register_amplitudes(c=x, q=0, l=0, f=0, lp=0) * 8
        np.testing.assert_allclose(got, c2 * assemble_matrix(net, x) @ psi / 2, atol=1e-12)


@pytest.mark.parametrize("n_nodes,seed", [(3, 1), (5, 2), (6, 3)])
def test_padded_data_register(n_nodes, seed):
    net = synthetic_network(n_nodes, seed=seed, complete=False)
    lay = RegisterLayout.standard(net.edge_count, 0, n_nodes)
    ua = build_UA(net, lay)
    c2 = lcu_plan(net).c_squared
    nd = lay.width("d")
    for x in list(net.configurations())[:: max(1, 2**net.edge_count // 6)]:
        a = np.eye(2**nd) / net.r_env
        a[:n_nodes, :n_nodes] = assemble_matrix(net, x)
        np.testing.assert_allclose(encoded_block(ua, lay, x.index), c2 * a / 2, atol=1e-12)


def test_block_is_subnormalized(net):
    lay = RegisterLayout.standard(6, 0, 4)
    ua = build_UA(net, lay)
    for x in (0, 21, 63):
        assert np.linalg.norm(encoded_block(ua, lay, x), 2) <= 1 + 1e-12


def test_layout_mismatch_is_rejected(net):
    with pytest.raises(ConfigError):
        build_UA(net, RegisterLayout.standard(5, 0, 4))
    with pytest.raises(ConfigError):
        build_pair_block(0, 1, RegisterLayout((("lp", 1), ("f", 1), ("d", 0))))


def test_primitive_count_is_stable(net):
    lay = RegisterLayout.standard(6, 0, 4)
    assert build_UA(net, lay).stats(False).primitive_count == 72
