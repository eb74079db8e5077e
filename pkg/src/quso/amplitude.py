"""Amplitude estimation, phase application and the cost layer built from them.

Phase register convention: ``p`` holds a ``k``-bit fraction read big-endian,
so basis value ``j`` stands for ``theta = j / 2^k`` and the qubit at offset
``i`` carries weight ``2^(k-1-i)``. Walsh characters use ``z_i = (-1)^bit_i``
and subsets are stored as masks over the same bit positions as ``j``.

The cost layer maps ``|x>|0>`` to ``exp(-i gamma c(x)) |x>|0>`` when
``theta(x) = arcsin(c(x)) / pi`` is a multiple of ``2^-k``; otherwise the
ancillas are left slightly entangled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, ResourceError
from .statevector import Circuit, RegisterLayout
from .thermal import CostTable

MAX_WALSH_BITS = 12
SEARCH_REGISTERS = ("q", "l", "f", "lp", "d")
FLAG_REGISTERS = ("q", "l", "f", "lp")


# -- cost <-> phase -------------------------------------------------------------


def theta_from_cost(c):
    c = np.asarray(c, dtype=float)
    if np.any(c < 0) or np.any(c > 1):
        raise ConfigError("costs must lie in [0, 1] to be encoded as an amplitude")
    out = np.arcsin(c) / np.pi
    return float(out) if out.ndim == 0 else out


def cost_from_theta(theta):
    out = np.sin(np.pi * np.asarray(theta, dtype=float))
    return float(out) if out.ndim == 0 else out


# -- Grover and phase estimation ----------------------------------------------


def reflection(controls, n_qubits: int, tag: str) -> Circuit:
    """``I - 2|s><s|`` for the basis pattern ``s`` given as polarity controls."""
    circ = Circuit(n_qubits, name=tag)
    circ.phase(math.pi, controls=tuple(controls), tag=tag)
    return circ


def build_grover(solver: Circuit, target_index: int, layout: RegisterLayout,
                 search=SEARCH_REGISTERS, flags=FLAG_REGISTERS, target_register: str = "d") -> Circuit:
    """``G = -L S_0 L^dag S_alpha``; the good state is ``|0>_flags |alpha>_target``."""
    if not 0 <= target_index < 2 ** layout.width(target_register):
        raise ConfigError(f"target index {target_index} outside the {target_register} register")
    n = layout.total
    good = layout.zero_controls(*flags) + layout.value_controls(target_register, target_index)
    zero = layout.zero_controls(*search)
    circ = Circuit(n, name="grover")
    circ.extend(reflection(good, n, "reflect_good"))
    circ.sub(solver.inverse(), tag=None)
    circ.extend(reflection(zero, n, "reflect_zero"))
    circ.sub(solver, tag=None)
    circ.phase(math.pi, tag="reflect_zero")
    return circ


def qft(qubits, n_qubits: int, tag: str = "qft") -> Circuit:
    """``|j> -> 2^{-k/2} sum_y exp(2 pi i j y / 2^k) |y>`` on big-endian ``qubits``."""
    k = len(qubits)
    circ = Circuit(n_qubits, name="qft")
    for i in range(k):
        circ.h(qubits[i], tag=tag)
        for j in range(i + 1, k):
            circ.phase(2 * math.pi / 2 ** (j - i + 1), controls=((qubits[i], 1), (qubits[j], 1)), tag=tag)
    for i in range(k // 2):
        circ.swap(qubits[i], qubits[k - 1 - i], tag=tag)
    return circ


def build_qae(grover: Circuit, layout: RegisterLayout, phase_register: str = "p") -> Circuit:
    """Hadamards on ``p``, controlled ``G^(2^t)`` ladder, inverse QFT.

    Assumes the search registers already hold ``L|0>``; ``build_amplitude_estimation``
    prepends that.
    """
    p = layout.qubits(phase_register)
    k = len(p)
    if k < 1:
        raise ConfigError("phase register must have at least one qubit")
    circ = Circuit(layout.total, name="qae")
    for q in p:
        circ.h(q, tag="qae_h")
    for t in range(k):
        ctrl = p[k - 1 - t]
        circ.sub(grover, controls=((ctrl, 1),), repeat=2**t, tag=None)
    circ.extend(qft(p, layout.total).inverse())
    return circ


def build_amplitude_estimation(solver: Circuit, target_index: int, layout: RegisterLayout, **kw) -> Circuit:
    """Full ``QAE``: prepare ``L|0>`` then estimate the phase of the good amplitude."""
    circ = Circuit(layout.total, name="amplitude_estimation")
    circ.sub(solver, tag=None)
    circ.extend(build_qae(build_grover(solver, target_index, layout, **kw), layout))
    return circ


def qpe_amplitudes(theta: float, k: int):
    """``alpha_pm(j) = 2^-k sum_l exp(-2 pi i l (j/2^k -+ theta))``."""
    if not 0 <= theta < 1:
        raise ConfigError(f"theta must lie in [0, 1), got {theta}")
    size = 2**k
    j = np.arange(size)

    def series(sign):
        r = np.exp(-2j * np.pi * (j / size - sign * theta))
        out = np.empty(size, dtype=complex)
        aligned = np.isclose(r, 1.0, rtol=0, atol=1e-14)
        out[aligned] = 1.0
        rr = r[~aligned]
        out[~aligned] = (1 - rr**size) / (1 - rr) / size
        return out

    return series(+1), series(-1)


# -- phase application -----------------------------------------------------------


@dataclass(frozen=True)
class WalshCoefficients:
    k: int
    coefficients: np.ndarray  # index is the subset mask

    def subsets(self, mask: int) -> list[int]:
        """Offsets of the phase qubits in the subset ``mask``."""
        return [i for i in range(self.k) if (mask >> (self.k - 1 - i)) & 1]

    def reconstruct(self) -> np.ndarray:
        return scipy.linalg.hadamard(2**self.k) @ self.coefficients if self.k else self.coefficients.copy()


def walsh_coefficients(k: int, func=None) -> WalshCoefficients:
    """Coefficients ``a_S`` with ``sum_S a_S prod_{i in S} z_i = f(j / 2^k)`` at every grid point."""
    if k > MAX_WALSH_BITS:
        raise ResourceError(f"Walsh table for k={k} exceeds the guard k <= {MAX_WALSH_BITS}")
    if k < 0:
        raise ConfigError("k must be non-negative")
    func = func if func is not None else (lambda th: np.sin(np.pi * th))
    size = 2**k
    values = np.asarray(func(np.arange(size) / size), dtype=float)
    coef = scipy.linalg.hadamard(size) @ values / size if k else values.copy()
    return WalshCoefficients(k, coef)


def build_qpa(gamma: float, layout: RegisterLayout, phase_register: str = "p", func=None,
              tol: float = 0.0) -> Circuit:
    """Diagonal ``exp(-i gamma f(j/2^k))`` on ``p`` as a product of multi-Z rotations."""
    p = layout.qubits(phase_register)
    w = walsh_coefficients(len(p), func)
    circ = Circuit(layout.total, name="qpa")
    for mask, a in enumerate(w.coefficients):
        if abs(a) <= tol or gamma == 0:
            continue
        if mask == 0:
            circ.phase(-gamma * a, tag="qpa")
            continue
        qs = [p[i] for i in w.subsets(mask)]
        parity = np.array([bin(v).count("1") & 1 for v in range(2 ** len(qs))])
        circ.diag(qs, np.exp(-1j * gamma * a * (1 - 2 * parity)), tag="qpa")
    return circ


# -- cost layers ---------------------------------------------------------------------


def shortcut_layout(m: int, k: int) -> RegisterLayout:
    """Registers for the statevector shortcut: configurations, phase and one dummy qubit."""
    return RegisterLayout((("c", m), ("p", k), ("d", 1)))


def ideal_layout(m: int) -> RegisterLayout:
    return RegisterLayout((("c", m),))


def estimation_state(cost: float, k: int) -> np.ndarray:
    """Output of amplitude estimation on ``(p, dummy)`` for good amplitude ``cost``.

    The dummy preparation is ``a|0> + sqrt(1-a^2)|1>`` with good state ``|0>``;
    its Grover eigenvectors are ``(|0> +- i|1>)/sqrt(2)`` with eigenphases
    ``+-theta``.
    """
    theta = theta_from_cost(cost)
    plus, minus = qpe_amplitudes(theta, k)
    c_plus = -1j / math.sqrt(2) * np.exp(1j * np.pi * theta)
    c_minus = 1j / math.sqrt(2) * np.exp(-1j * np.pi * theta)
    psi_plus = np.array([1, 1j]) / math.sqrt(2)
    psi_minus = np.array([1, -1j]) / math.sqrt(2)
    return np.kron(c_plus * plus, psi_plus) + np.kron(c_minus * minus, psi_minus)


def unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    """Householder-type unitary whose first column is the unit vector ``v``."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    dim = len(v)
    phase = v[0] / abs(v[0]) if abs(v[0]) > 1e-15 else 1.0
    w = v / phase
    u = w.copy()
    u[0] -= 1.0
    nrm = np.linalg.norm(u)
    if nrm < 1e-15:
        return phase * np.eye(dim, dtype=complex)
    u /= nrm
    house = np.eye(dim, dtype=complex) - 2.0 * np.outer(u, u.conj())
    # house maps e0 to w; undo the phase split
    return phase * house


def build_shortcut_preparation(costs, layout: RegisterLayout) -> Circuit:
    """Configuration-multiplexed ``V_psi`` on ``(p, dummy)``."""
    c = layout.qubits("c")
    targets = layout.qubits("p") + layout.qubits("d")
    k = layout.width("p")
    costs = np.asarray(costs, dtype=float)
    if len(costs) != 2 ** len(c):
        raise ConfigError(f"need {2 ** len(c)} costs, got {len(costs)}")
    mats = np.stack([unitary_with_first_column(estimation_state(cx, k)) for cx in costs])
    circ = Circuit(layout.total, name="V_psi")
    circ.multiplexed(c, targets, mats, tag="v_psi")
    return circ


def ideal_phase_oracle(gamma: float, costs, layout: RegisterLayout) -> Circuit:
    circ = Circuit(layout.total, name="phase_oracle")
    circ.diag(layout.qubits("c"), np.exp(-1j * gamma * np.asarray(costs, dtype=float)), tag="cost_oracle")
    return circ


def build_cost_layer(gamma: float, mode: str, layout: RegisterLayout, cost_table: CostTable | None = None,
                     estimation: Circuit | None = None, use_normalized: bool = True) -> Circuit:
    """``U_C(gamma)`` in one of three modes.

    ``ideal`` applies ``exp(-i gamma c(x))`` directly, ``shortcut`` replaces
    amplitude estimation by the prepared ``V_psi`` states, and ``full`` uses a
    supplied amplitude-estimation circuit.
    """
    circ = Circuit(layout.total, name=f"cost_layer_{mode}")
    if mode in ("ideal", "shortcut"):
        if cost_table is None:
            raise ConfigError(f"{mode} cost layer needs a cost table")
        costs = cost_table.normalized if use_normalized else cost_table.costs
        if mode == "ideal":
            return circ.extend(ideal_phase_oracle(gamma, costs, layout))
        prep = build_shortcut_preparation(costs, layout)
    elif mode == "full":
        if estimation is None:
            raise ConfigError("full cost layer needs an amplitude-estimation circuit")
        prep = estimation
    else:
        raise ConfigError(f"unknown cost-layer mode {mode!r}")
    circ.sub(prep, tag=None)
    circ.extend(build_qpa(gamma, layout))
    circ.sub(prep, adjoint=True, tag=None)
    return circ


def cost_layer_distance_bound(gamma: float, k: int) -> float:
    """Squared-distance bound ``gamma^2 pi^2 / 2^(k+2)`` for one imperfect cost layer."""
    return gamma**2 * math.pi**2 / 2 ** (k + 2)
