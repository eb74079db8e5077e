import warnings

import numpy as np
import pytest

from quso import ConfigError, ThermalNetwork, assemble_matrix, enumerate_costs, solve_direct
from quso.block_encoding import build_UA, encoded_block, lcu_plan
from quso.qsp import build_inversion_polynomial, find_phases, phases_for_chebyshev
from quso.qsvt import (
    build_qsvt_circuit,
    build_VB,
    encoded_sigma_min,
    heat_normalization,
    run_linear_solver,
    solver_scales,
    solver_temperatures,
)
from quso.statevector import RegisterLayout, StateVector


@pytest.fixture(scope="module")
def layout():
    return RegisterLayout.standard(6, 0, 4)


@pytest.fixture(scope="module")
def ua(net, layout):
    return build_UA(net, layout)


@pytest.fixture(scope="module")
def accurate_run(net, layout, ua):
    poly = build_inversion_polynomial(1 / 38, 1e-3)
    phases = find_phases(poly)
    sv = run_linear_solver(net, layout, poly, phases, ua=ua)
    return poly, sv


def test_encoded_sigma_min(net):
    assert encoded_sigma_min(net) == pytest.approx(100 * lcu_plan(net).c_squared / 2, rel=1e-12)
    assert encoded_sigma_min(net) == pytest.approx(0.0503, abs=1e-4)


def test_identity_transform_reproduces_block(net, layout, ua):
    seq = phases_for_chebyshev([0.0, 1.0])
    circ = build_qsvt_circuit(seq, ua, layout)
    for x in (0, 27, 63):
        got = encoded_block(circ, layout, x)
        np.testing.assert_allclose(got, encoded_block(ua, layout, x), atol=1e-10)


def test_transformed_block_is_inverse(net, layout, ua):
    poly = build_inversion_polynomial(1 / 38, 1e-3)
    circ = build_qsvt_circuit(find_phases(poly), ua, layout)
    c2 = lcu_plan(net).c_squared
    for x in (0, 45):
        encoded = c2 * assemble_matrix(net, x) / 2
        block = encoded_block(circ, layout, x)
        np.testing.assert_allclose(block, poly.scale * np.linalg.inv(encoded), atol=2 * poly.eps * poly.scale)
        assert np.linalg.norm(block, 2) <= 1 + 1e-12


def test_even_phase_count_rejected(ua, layout):
    with pytest.raises(ConfigError):
        build_qsvt_circuit(np.zeros(4), ua, layout)


def test_heat_preparation_amplitudes(net, layout):
    sv = StateVector(layout).run(build_VB(net, layout))
    amps = sv.register_amplitudes(c=0, q=0, l=0, f=0, lp=0)
    q = np.array([2000.0, 4000.0, -200.0, -2000.0])
    cb = 1 / np.sqrt((q**2).sum())
    np.testing.assert_allclose(amps.real, cb * q, atol=1e-14)
    assert heat_normalization(net) == pytest.approx(cb)
    assert np.linalg.norm(sv.amplitudes) == pytest.approx(1.0)


def test_single_heat_source_is_basis_state():
    net = ThermalNetwork(3, ((0, 1, 0.005),), 0.01, (0.0, 0.0, -700.0))
    lay = RegisterLayout.standard(1, 0, 3)
    sv = StateVector(lay).run(build_VB(net, lay))
    probs = sv.register_distribution("d")
    np.testing.assert_allclose(probs, [0, 0, 1, 0], atol=1e-15)


def test_all_edges_off_temperatures_recovered(net, accurate_run):
    poly, sv = accurate_run
    temps = solver_temperatures(sv, net, poly, 0, superposed=True)
    np.testing.assert_allclose(temps, [20, 40, -2, -20], rtol=2e-3, atol=1e-3)


def test_superposed_branches_match_classical_solves(net, accurate_run):
    poly, sv = accurate_run
    for x in range(64):
        got = solver_temperatures(sv, net, poly, x, superposed=True)
        exact = solve_direct(net, x).temperatures
        np.testing.assert_allclose(got, exact, atol=poly.eps * np.abs(exact).max() * 2 + 1e-9)


def test_normalized_cost_error_small(net, table, accurate_run):
    poly, sv = accurate_run
    c = np.array([solver_temperatures(sv, net, poly, x, superposed=True)[0] for x in range(64)])
    assert np.abs(c / c.max() - table.normalized).mean() <= 5e-4


def test_single_branch_run_matches_superposed(net, layout, ua, accurate_run):
    poly, sv = accurate_run
    phases = find_phases(poly)
    one = run_linear_solver(net, layout, poly, phases, configuration=21, ua=ua)
    np.testing.assert_allclose(solver_temperatures(one, net, poly, 21),
                               solver_temperatures(sv, net, poly, 21, superposed=True), atol=1e-9)


def test_large_threshold_distorts_costs(net, table, layout, ua):
    poly = build_inversion_polynomial(0.5, 1e-3)
    with pytest.warns(RuntimeWarning):
        sv = run_linear_solver(net, layout, poly, find_phases(poly), ua=ua)
    c = np.array([solver_temperatures(sv, net, poly, x, superposed=True)[0] for x in range(64)])
    assert np.abs(c / c.max() - table.normalized).mean() > 0.1


def test_amplitude_scale_constant(net):
    sc = solver_scales(net, 0.1)
    assert sc.amplitude_per_kelvin == pytest.approx(2 * 0.05 * heat_normalization(net) / lcu_plan(net).c_squared)


def test_no_warning_below_sigma_min(net, layout, ua):
    poly = build_inversion_polynomial(0.05, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        run_linear_solver(net, layout, poly, find_phases(poly), configuration=0, ua=ua)


def test_cost_targets_match_table(net, table):
    assert np.array_equal(enumerate_costs(net, 0).normalized, table.normalized)
