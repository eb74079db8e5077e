"""Singular value transformation circuit and the linear solver built on it.

The transformation alternates the block-encoding and its adjoint with
projector-controlled phase rotations. Each rotation uses the ``q`` qubit: a
multi-controlled NOT marks the ``(l, f, lp) = 0`` subspace on ``q``, a Z
rotation applies the phase, and a second NOT unmarks it.

A Hadamard on ``q`` before and after the sequence makes the ``q = 0`` block
the average of the sequence and its phase-negated twin, which is the real
part of the transformed block. For the real symmetric encoded matrix that is
exactly ``P(C^2 A / 2)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .block_encoding import build_UA, lcu_plan, rotation_tree
from .errors import ConfigError
from .qsp import InversionPolynomial, PhaseSequence
from .statevector import Circuit, RegisterLayout, StateVector
from .thermal import ThermalNetwork, spectral_stats

BLOCK_ANCILLAS = ("l", "f", "lp")


def projector_phase(phi: float, layout: RegisterLayout, ancillas=BLOCK_ANCILLAS) -> Circuit:
    """``exp(i phi (2 Pi - I))`` on ``q = 0``, with ``Pi`` the all-zero projector on ``ancillas``."""
    q = layout.qubits("q")[0]
    ctrls = layout.zero_controls(*ancillas)
    circ = Circuit(layout.total, name="projector_phase")
    circ.x(q, controls=ctrls, tag="projector")
    circ.zphase(q, -phi, tag="projector")
    circ.x(q, controls=ctrls, tag="projector")
    return circ


def build_qsvt_circuit(phases, ua: Circuit, layout: RegisterLayout, ancillas=BLOCK_ANCILLAS) -> Circuit:
    """Odd-degree transformation ``U_phi`` of the block encoded by ``ua``."""
    phi = np.asarray(phases.phases if isinstance(phases, PhaseSequence) else phases, dtype=float)
    d = len(phi)
    if d % 2 == 0:
        raise ConfigError(f"inversion needs an odd number of phases, got {d}")
    q = layout.qubits("q")[0]
    ua_inv = ua.inverse()
    circ = Circuit(layout.total, name="qsvt")
    circ.h(q, tag="real_part")
    for step, angle in enumerate(phi[::-1]):
        circ.sub(ua if step % 2 == 0 else ua_inv, tag=None)
        circ.extend(projector_phase(angle, layout, ancillas))
    circ.h(q, tag="real_part")
    return circ


def heat_amplitudes(net: ThermalNetwork, size: int):
    b = net.heat_vector
    nrm = np.linalg.norm(b)
    if not nrm > 0:
        raise ConfigError("heat vector is all zero; nothing to prepare")
    amps = np.zeros(size)
    amps[: len(b)] = b / nrm
    return amps, 1.0 / nrm


def build_VB(net: ThermalNetwork, layout: RegisterLayout) -> Circuit:
    """``|0>_d -> C_B sum_k Qdot_k |k>_d`` with signs kept."""
    d = layout.qubits("d")
    amps, _ = heat_amplitudes(net, 2 ** len(d))
    return rotation_tree(amps, d, layout.total, tag="prepare_b")


def heat_normalization(net: ThermalNetwork) -> float:
    return heat_amplitudes(net, net.node_count)[1]


def build_solver(net: ThermalNetwork, layout: RegisterLayout, phases, ua: Circuit | None = None) -> Circuit:
    """``L = U_phi V_B``."""
    ua = ua if ua is not None else build_UA(net, layout)
    circ = Circuit(layout.total, name="solver")
    circ.extend(build_VB(net, layout))
    circ.sub(build_qsvt_circuit(phases, ua, layout), tag=None)
    return circ


@dataclass(frozen=True)
class SolverScales:
    c_squared: float
    c_poly: float
    c_heat: float

    @property
    def amplitude_per_kelvin(self) -> float:
        """Factor turning a temperature into the matching ``d`` amplitude."""
        return 2.0 * self.c_poly * self.c_heat / self.c_squared


def solver_scales(net: ThermalNetwork, poly: InversionPolynomial | float) -> SolverScales:
    mu = poly.mu if isinstance(poly, InversionPolynomial) else float(poly)
    return SolverScales(lcu_plan(net).c_squared, mu / 2.0, heat_normalization(net))


def encoded_sigma_min(net: ThermalNetwork) -> float:
    """Smallest singular value of the encoded block over all configurations."""
    c2 = lcu_plan(net).c_squared
    # the environment diagonal bounds every eigenvalue from below and is attained at x = 0
    return c2 * spectral_stats(net, 0).sigma_min / 2.0


def initial_configuration_state(layout: RegisterLayout, configuration=None) -> StateVector:
    """Ancillas at zero, ``c`` either a basis value or the uniform superposition (``None``)."""
    sv = StateVector(layout)
    m = layout.width("c")
    if configuration is None:
        sv.data[:] = 0
        for x in range(2**m):
            sv.data[layout.basis_index(c=x), 0] = 2 ** (-m / 2)
    else:
        sv.data[:] = 0
        sv.data[layout.basis_index(c=int(configuration)), 0] = 1.0
    return sv


def run_linear_solver(net: ThermalNetwork, layout: RegisterLayout, poly: InversionPolynomial,
                      phases: PhaseSequence, configuration=None, ua: Circuit | None = None) -> StateVector:
    if poly.mu > encoded_sigma_min(net) * (1 + 1e-12):
        warnings.warn(
            f"mu={poly.mu:g} exceeds the smallest encoded singular value "
            f"{encoded_sigma_min(net):.4f}; inversion will be distorted",
            RuntimeWarning,
            stacklevel=2,
        )
    sv = initial_configuration_state(layout, configuration)
    return sv.run(build_solver(net, layout, phases, ua))


def branch_amplitudes(sv: StateVector, configuration: int) -> np.ndarray:
    """``d`` amplitudes on the all-zero ancilla subspace for one configuration branch."""
    layout = sv.layout
    fixed = {name: 0 for name in ("p", "q", "l", "f", "lp") if layout.widths.get(name, 0) > 0}
    if layout.width("c") > 0:
        fixed["c"] = configuration
    return sv.register_amplitudes(**fixed)


def solver_temperatures(sv: StateVector, net: ThermalNetwork, poly, configuration: int = 0,
                        superposed: bool = False) -> np.ndarray:
    """Temperatures recovered from the solver amplitudes by undoing the known constants."""
    amps = branch_amplitudes(sv, configuration)
    if superposed:
        amps = amps * 2 ** (sv.layout.width("c") / 2)
    scale = solver_scales(net, poly).amplitude_per_kelvin
    return amps[: net.node_count].real / scale
