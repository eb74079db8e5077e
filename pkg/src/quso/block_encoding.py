"""Configuration-controlled block-encoding of the conductance matrix.

The matrix is written as a weighted sum of simple terms,

    A(x) / 2 = (1 / (2 R_env)) * I  +  sum_e (x_e / R_e) * U_e / 2

with one identity term and one rank-one term per edge. A coefficient register
``l`` selects the term, each edge term is realized by permuting its two nodes
onto basis states ``|0>`` and ``|1>`` of the data register ``d``, applying the
one-qubit combination ``(I - X) / 2`` with helper qubit ``lp``, and flagging
(qubit ``f``) every basis state outside that two-dimensional subspace.

Projecting ``l``, ``f`` and ``lp`` onto ``|0>`` leaves ``C^2 A(x) / 2`` on
``d``, where ``C^2 = 1 / sum(lambda)``. Edge terms are controlled on their
configuration bit; when the bit is off the term is flagged out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .statevector import Circuit, RegisterLayout, StateVector, ceil_log2
from .thermal import ThermalNetwork


@dataclass(frozen=True)
class LCUPlan:
    coefficients: np.ndarray  # lambda_k, identity term first, then edges in order
    labels: tuple[str, ...]

    @property
    def c_squared(self) -> float:
        return 1.0 / float(np.sum(self.coefficients))

    @property
    def c_lcu(self) -> float:
        return math.sqrt(self.c_squared)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.sqrt(self.coefficients * self.c_squared)

    def __len__(self):
        return len(self.coefficients)


def lcu_plan(net: ThermalNetwork) -> LCUPlan:
    lam = [1.0 / (2.0 * net.r_env)] + [1.0 / r for _, _, r in net.edges]
    return LCUPlan(np.asarray(lam), ("env",) + tuple(net.edge_labels()))


# -- state preparation -------------------------------------------------------


def rotation_tree(amplitudes, qubits, n_qubits: int, tag: str | None = None) -> Circuit:
    """Exact real state preparation ``|0> -> sum_j a_j |j>`` on ``qubits`` (big-endian).

    Intermediate levels split probability mass with ``ry`` rotations controlled
    on the prefix already prepared; the last level uses signed angles so
    negative amplitudes come out with the right sign.
    """
    a = np.asarray(amplitudes, dtype=float)
    w = len(qubits)
    if a.shape != (2**w,):
        raise ConfigError(f"need {2**w} amplitudes for {w} qubits, got {a.shape}")
    nrm = np.linalg.norm(a)
    if not nrm > 0:
        raise ConfigError("cannot prepare the zero vector")
    a = a / nrm
    circ = Circuit(n_qubits, name="rotation_tree")
    if w == 0:
        if a[0] < 0:
            circ.phase(math.pi, tag=tag)
        return circ
    for level in range(w):
        blocks = a.reshape(2**level, 2, -1)
        for prefix in range(2**level):
            left, right = blocks[prefix, 0], blocks[prefix, 1]
            if level == w - 1:
                l0, r0 = left[0], right[0]
                if l0 == 0 and r0 == 0:
                    continue
                theta = 2.0 * math.atan2(r0, l0)
            else:
                nl, nr = np.linalg.norm(left), np.linalg.norm(right)
                if nl == 0 and nr == 0:
                    continue
                theta = 2.0 * math.atan2(nr, nl)
            if theta == 0.0:
                continue
            ctrls = tuple((qubits[i], (prefix >> (level - 1 - i)) & 1) for i in range(level))
            circ.ry(qubits[level], theta, controls=ctrls, tag=tag)
    return circ


def prepare_amplitudes(plan: LCUPlan, layout: RegisterLayout) -> Circuit:
    """``V`` on the coefficient register: ``|0> -> sum_k C sqrt(lambda_k) |k>``."""
    qubits = layout.qubits("l")
    size = 2 ** len(qubits)
    if len(plan) > size:
        raise ConfigError(f"{len(plan)} LCU terms do not fit a {len(qubits)}-qubit register")
    amps = np.zeros(size)
    amps[: len(plan)] = plan.amplitudes
    return rotation_tree(amps, qubits, layout.total, tag="prepare")


# -- pair terms -----------------------------------------------------------------


@dataclass(frozen=True)
class PermutationSpec:
    """Gate list mapping basis ``|i>`` to ``|0>`` and ``|j>`` to ``|1>``.

    ``ops`` holds ``(kind, offsets)`` with offsets counted within the data
    register (offset 0 is its most significant qubit).
    """

    i: int
    j: int
    n: int
    ops: tuple[tuple[str, tuple[int, ...]], ...]

    def circuit(self, qubits, n_qubits: int, tag: str | None = "permute") -> Circuit:
        circ = Circuit(n_qubits, name=f"P{self.i}{self.j}")
        for kind, offs in self.ops:
            qs = [qubits[o] for o in offs]
            if kind == "x":
                circ.x(qs[0], tag=tag)
            elif kind == "cx":
                circ.x(qs[1], controls=((qs[0], 1),), tag=tag)
            else:
                circ.swap(qs[0], qs[1], tag=tag)
        return circ

    def apply_to_index(self, value: int) -> int:
        bits = [(value >> (self.n - 1 - o)) & 1 for o in range(self.n)]
        for kind, offs in self.ops:
            if kind == "x":
                bits[offs[0]] ^= 1
            elif kind == "cx":
                bits[offs[1]] ^= bits[offs[0]]
            else:
                a, b = offs
                bits[a], bits[b] = bits[b], bits[a]
        out = 0
        for b in bits:
            out = (out << 1) | b
        return out


def build_permutation(i: int, j: int, n: int) -> PermutationSpec:
    if i == j:
        raise ConfigError("permutation needs two distinct indices")
    if not (0 <= i < 2**n and 0 <= j < 2**n):
        raise ConfigError(f"indices ({i}, {j}) do not fit {n} qubits")
    ops = []
    offset_of = lambda bit: n - 1 - bit  # noqa: E731
    for bit in range(n):
        if (i >> bit) & 1:
            ops.append(("x", (offset_of(bit),)))
    diff = i ^ j
    ones = sorted(offset_of(b) for b in range(n) if (diff >> b) & 1)
    pivot = ones[0]
    for o in ones[1:]:
        ops.append(("cx", (pivot, o)))
    if pivot != n - 1:
        ops.append(("swap", (pivot, n - 1)))
    return PermutationSpec(i, j, n, tuple(ops))


def flag_circuit(layout: RegisterLayout, tag: str | None = "flag") -> Circuit:
    """Set ``f`` when any data qubit other than the least significant one is ``|1>``."""
    d = layout.qubits("d")
    f = layout.qubits("f")[0]
    circ = Circuit(layout.total, name="F")
    if len(d) <= 1:
        return circ
    circ.x(f, controls=tuple((q, 0) for q in d[:-1]), tag=tag)
    circ.x(f, tag=tag)
    return circ


def build_pair_block(i: int, j: int, layout: RegisterLayout) -> Circuit:
    """Block-encoding of ``U_ij / 2`` on ``(lp, f, d)``.

    ``U_ij`` has ``+1`` at ``(i,i)`` and ``(j,j)`` and ``-1`` at ``(i,j)`` and
    ``(j,i)``. Under the permutation it becomes ``(I - X) / 2`` on the least
    significant data qubit, restricted to the subspace the flag leaves alone.
    """
    d = layout.qubits("d")
    n = len(d)
    if n == 0:
        raise ConfigError("pair block needs a data register")
    perm = build_permutation(i, j, n).circuit(d, layout.total)
    lp = layout.qubits("lp")[0]
    circ = Circuit(layout.total, name=f"pair{i}{j}")
    circ.extend(perm)
    circ.h(lp, tag="pair_lcu")
    circ.x(d[-1], controls=((lp, 1),), tag="pair_lcu")
    circ.phase(math.pi, controls=((lp, 1),), tag="pair_lcu")
    circ.h(lp, tag="pair_lcu")
    circ.extend(flag_circuit(layout))
    circ.extend(perm.inverse())
    return circ


def build_UA(net: ThermalNetwork, layout: RegisterLayout) -> Circuit:
    """Block-encoding of ``C^2 A(x) / 2`` controlled by the configuration register."""
    widths = layout.widths
    m = net.edge_count
    if widths.get("c") != m:
        raise ConfigError(f"configuration register has width {widths.get('c')}, network has {m} edges")
    if 2 ** widths["l"] < m + 1:
        raise ConfigError("coefficient register too narrow for the LCU terms")
    if 2 ** widths["d"] < net.node_count:
        raise ConfigError("data register too narrow for the network")
    plan = lcu_plan(net)
    prep = prepare_amplitudes(plan, layout)
    c = layout.qubits("c")
    f = layout.qubits("f")[0]
    circ = Circuit(layout.total, name="UA")
    circ.extend(prep)
    for e, (i, j, _) in enumerate(net.edges):
        sel = layout.value_controls("l", e + 1)
        # unselected edge terms leave the block
        circ.x(f, controls=sel + ((c[e], 0),), tag="select")
        circ.sub(build_pair_block(i, j, layout), controls=sel + ((c[e], 1),), tag="select")
    circ.extend(prep.inverse())
    return circ


def encoded_block(circuit: Circuit, layout: RegisterLayout, config: int,
                  ancillas=("q", "l", "f", "lp"), extra_zero=("p",)) -> np.ndarray:
    """Dense ``d``-register block of ``circuit`` for a fixed configuration basis state.

    Rows index output ``d`` values, columns input ``d`` values; all named
    ancillas are prepared and projected on ``|0>``.
    """
    nd = layout.width("d")
    n = layout.total
    cols = np.zeros((2**n, 2**nd), dtype=complex)
    zeros = {name: 0 for name in tuple(ancillas) + tuple(extra_zero) if name in layout.widths}
    for v in range(2**nd):
        cols[layout.basis_index(c=config, d=v, **zeros), v] = 1.0
    sv = StateVector(layout, cols)
    sv.run(circuit)
    fixed = dict(zeros, c=config)
    fixed = {k: val for k, val in fixed.items() if layout.widths[k] > 0}
    return sv.register_amplitudes(**fixed)


def synthetic_network(n_nodes: int, seed: int = 0, complete: bool = True) -> ThermalNetwork:
    """Random network used for scaling studies (complete graph by default)."""
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    if not complete:
        pairs = [p for p in pairs if rng.random() < 0.5] or pairs[:1]
    edges = tuple((i, j, float(rng.uniform(0.005, 0.01))) for i, j in pairs)
    heat = tuple(float(q) for q in rng.uniform(-2000, 4000, n_nodes))
    return ThermalNetwork(n_nodes, edges, 0.01, heat)


def data_width(n_nodes: int) -> int:
    return ceil_log2(n_nodes)
