"""Dense statevector simulator with named registers.

Basis convention: the state of ``n`` qubits is stored as an array of shape
``[2] * n`` (plus a trailing batch axis). Qubit 0 is the most significant bit
of the flat basis index. Registers occupy contiguous qubit ranges in layout
order and are read big-endian: the lowest offset of a register is its most
significant bit, so the least significant qubit of ``d`` is its highest
offset.

Gates are applied in place on strided numpy views. Controls are
``(qubit, polarity)`` pairs; a control with polarity 0 fires on ``|0>``.
Multi-controlled gates are applied directly rather than decomposed;
``CircuitStats`` reports a decomposed estimate separately.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

STANDARD_ORDER = ("c", "p", "q", "l", "f", "lp", "d")


def ceil_log2(n: int) -> int:
    return max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers mapped to contiguous qubit ranges."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate register names in {names}")
        for name, width in self.registers:
            if width < 0:
                raise ConfigError(f"register {name} has negative width {width}")

    @classmethod
    def standard(cls, m: int, k: int, n_nodes: int) -> "RegisterLayout":
        """Layout for an ``m``-edge, ``n_nodes``-node network with a ``k``-qubit phase register."""
        widths = {
            "c": m,
            "p": k,
            "q": 1,
            "l": ceil_log2(m + 1),
            "f": 1,
            "lp": 1,
            "d": ceil_log2(n_nodes),
        }
        return cls(tuple((name, widths[name]) for name in STANDARD_ORDER))

    @property
    def total(self) -> int:
        return sum(w for _, w in self.registers)

    @property
    def widths(self) -> dict[str, int]:
        return dict(self.registers)

    @property
    def offsets(self) -> dict[str, int]:
        out, pos = {}, 0
        for name, width in self.registers:
            out[name] = pos
            pos += width
        return out

    def qubits(self, name: str) -> list[int]:
        if name not in self.widths:
            raise ConfigError(f"unknown register {name!r}")
        start = self.offsets[name]
        return list(range(start, start + self.widths[name]))

    def width(self, name: str) -> int:
        return self.qubits(name).__len__()

    def value_controls(self, name: str, value: int) -> tuple[tuple[int, int], ...]:
        """Polarity controls selecting basis value ``value`` of a register."""
        qs = self.qubits(name)
        w = len(qs)
        if not 0 <= value < 2**w:
            raise ConfigError(f"value {value} does not fit register {name} of width {w}")
        return tuple((q, (value >> (w - 1 - i)) & 1) for i, q in enumerate(qs))

    def zero_controls(self, *names: str) -> tuple[tuple[int, int], ...]:
        return tuple((q, 0) for name in names for q in self.qubits(name))

    def basis_index(self, **values: int) -> int:
        """Flat basis index for given register values; unspecified registers are 0."""
        idx = 0
        for name, width in self.registers:
            v = values.pop(name, 0)
            if not 0 <= v < 2**width:
                raise ConfigError(f"value {v} does not fit register {name} of width {width}")
            idx = (idx << width) | v
        if values:
            raise ConfigError(f"unknown registers {sorted(values)}")
        return idx

    def to_json(self) -> dict:
        return {
            "registers": [
                {"name": name, "width": w, "offset": self.offsets[name]} for name, w in self.registers
            ],
            "total": self.total,
            "bit_order": "qubit 0 is the most significant bit; registers are big-endian by offset",
        }


# -- gates ------------------------------------------------------------------

PRIMITIVE_KINDS = {"x", "h", "z", "zphase", "rx", "ry", "swap", "phase", "diag", "unitary", "multiplexed"}
SELF_INVERSE = {"x", "h", "z", "swap"}
ANGLE_KINDS = {"zphase", "rx", "ry", "phase"}


@dataclass(eq=False)
class GateOp:
    """One gate application.

    ``zphase`` is ``exp(i*angle*Z)``, ``rx`` is ``exp(i*angle*X)``, ``ry`` is
    the real rotation ``[[cos a/2, -sin a/2], [sin a/2, cos a/2]]``, and
    ``phase`` multiplies the controlled subspace by ``exp(i*angle)``.
    ``sub`` runs a nested circuit (optionally adjoint, repeated) under extra
    controls.
    """

    kind: str
    targets: tuple[int, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()
    angle: float = 0.0
    matrix: np.ndarray | None = None
    selector: tuple[int, ...] = ()
    circuit: "Circuit | None" = None
    adjoint: bool = False
    repeat: int = 1
    tag: str | None = None

    def __post_init__(self):
        self.targets = tuple(int(t) for t in self.targets)
        self.controls = tuple((int(q), int(p)) for q, p in self.controls)
        self.selector = tuple(int(s) for s in self.selector)
        if self.kind not in PRIMITIVE_KINDS and self.kind != "sub":
            raise ConfigError(f"unknown gate kind {self.kind!r}")
        for _, pol in self.controls:
            if pol not in (0, 1):
                raise ConfigError(f"control polarity must be 0 or 1, got {pol}")
        ctrl = [q for q, _ in self.controls]
        if len(set(ctrl)) != len(ctrl):
            raise ConfigError(f"repeated control qubit in {self.controls}")
        busy = set(self.targets) | set(self.selector)
        if len(busy) != len(self.targets) + len(self.selector):
            raise ConfigError("targets and selector qubits must be distinct")
        if busy & set(ctrl):
            raise ConfigError(f"controls {ctrl} overlap targets {sorted(busy)}")
        if self.kind == "sub":
            if self.circuit is None:
                raise ConfigError("sub gate needs a circuit")
            if set(ctrl) & self.circuit.touched:
                raise ConfigError("controls overlap qubits used by the nested circuit")
            if self.repeat < 0:
                raise ConfigError("repeat must be non-negative")
        expected = {"x": 1, "h": 1, "z": 1, "zphase": 1, "rx": 1, "ry": 1, "swap": 2, "phase": 0}
        if self.kind in expected and len(self.targets) != expected[self.kind]:
            raise ConfigError(f"{self.kind} needs {expected[self.kind]} targets, got {len(self.targets)}")
        if self.kind in ("diag", "unitary", "multiplexed"):
            mat = np.asarray(self.matrix, dtype=complex)
            dim = 2 ** len(self.targets)
            if self.kind == "diag":
                ok = mat.shape == (dim,)
            elif self.kind == "unitary":
                ok = mat.shape == (dim, dim)
            else:
                ok = mat.shape == (2 ** len(self.selector), dim, dim)
            if not ok:
                raise ConfigError(f"{self.kind} matrix has shape {mat.shape} for {len(self.targets)} targets")
            self.matrix = mat

    @property
    def qubits(self) -> set[int]:
        out = set(self.targets) | set(self.selector) | {q for q, _ in self.controls}
        if self.kind == "sub":
            out |= self.circuit.touched
        return out

    def inverse(self) -> "GateOp":
        kw = dict(targets=self.targets, controls=self.controls, selector=self.selector, tag=self.tag)
        if self.kind in SELF_INVERSE:
            return GateOp(self.kind, **kw)
        if self.kind in ANGLE_KINDS:
            return GateOp(self.kind, angle=-self.angle, **kw)
        if self.kind == "diag":
            return GateOp("diag", matrix=self.matrix.conj(), **kw)
        if self.kind == "unitary":
            return GateOp("unitary", matrix=self.matrix.conj().T, **kw)
        if self.kind == "multiplexed":
            return GateOp("multiplexed", matrix=np.conj(np.swapaxes(self.matrix, 1, 2)), **kw)
        return GateOp("sub", circuit=self.circuit, adjoint=not self.adjoint, repeat=self.repeat, **kw)

    def with_controls(self, extra) -> "GateOp":
        op = GateOp(
            self.kind, self.targets, self.controls + tuple(extra), self.angle, self.matrix,
            self.selector, self.circuit, self.adjoint, self.repeat, self.tag,
        )
        return op

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "targets": list(self.targets), "controls": [list(c) for c in self.controls]}
        if self.kind in ANGLE_KINDS:
            doc["angle"] = float(self.angle)
        if self.selector:
            doc["selector"] = list(self.selector)
        if self.tag:
            doc["tag"] = self.tag
        if self.matrix is not None:
            m = np.asarray(self.matrix)
            doc["matrix"] = {"re": np.round(m.real, 15).tolist(), "im": np.round(m.imag, 15).tolist()}
        if self.kind == "sub":
            doc["adjoint"] = self.adjoint
            doc["repeat"] = self.repeat
            doc["circuit"] = self.circuit.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "GateOp":
        matrix = None
        if "matrix" in doc:
            matrix = np.asarray(doc["matrix"]["re"]) + 1j * np.asarray(doc["matrix"]["im"])
        circuit = Circuit.from_json(doc["circuit"]) if "circuit" in doc else None
        return cls(
            doc["kind"], tuple(doc["targets"]), tuple(tuple(c) for c in doc["controls"]),
            doc.get("angle", 0.0), matrix, tuple(doc.get("selector", ())), circuit,
            doc.get("adjoint", False), doc.get("repeat", 1), doc.get("tag"),
        )


class Circuit:
    """Ordered gate list over ``n_qubits`` global qubit indices.

    Builder methods return ``self`` so calls can be chained. Circuits are
    treated as immutable once handed to another builder.
    """

    def __init__(self, n_qubits: int, ops: Iterable[GateOp] = (), name: str | None = None):
        self.n_qubits = int(n_qubits)
        self.name = name
        self.ops: list[GateOp] = []
        self._touched: set[int] = set()
        for op in ops:
            self.append(op)

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def touched(self) -> set[int]:
        return self._touched

    def append(self, op: GateOp) -> "Circuit":
        qs = op.qubits
        if qs and (min(qs) < 0 or max(qs) >= self.n_qubits):
            raise ConfigError(f"gate {op.kind} uses qubits {sorted(qs)} outside 0..{self.n_qubits - 1}")
        if op.kind == "sub" and op.circuit.n_qubits != self.n_qubits:
            raise ConfigError("nested circuit must share the qubit space of its parent")
        self.ops.append(op)
        self._touched |= qs
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        for op in other.ops:
            self.append(op)
        return self

    def gate(self, kind, targets=(), controls=(), angle=0.0, matrix=None, selector=(), tag=None):
        if isinstance(targets, (int, np.integer)):
            targets = (targets,)
        return self.append(GateOp(kind, tuple(targets), tuple(controls), angle, matrix, tuple(selector), tag=tag))

    def x(self, t, controls=(), tag=None):
        return self.gate("x", t, controls, tag=tag)

    def h(self, t, controls=(), tag=None):
        return self.gate("h", t, controls, tag=tag)

    def z(self, t, controls=(), tag=None):
        return self.gate("z", t, controls, tag=tag)

    def zphase(self, t, angle, controls=(), tag=None):
        return self.gate("zphase", t, controls, angle, tag=tag)

    def rx(self, t, angle, controls=(), tag=None):
        return self.gate("rx", t, controls, angle, tag=tag)

    def ry(self, t, angle, controls=(), tag=None):
        return self.gate("ry", t, controls, angle, tag=tag)

    def swap(self, a, b, controls=(), tag=None):
        return self.gate("swap", (a, b), controls, tag=tag)

    def phase(self, angle, controls=(), tag=None):
        return self.gate("phase", (), controls, angle, tag=tag)

    def diag(self, targets, phases, controls=(), tag=None):
        return self.gate("diag", targets, controls, matrix=phases, tag=tag)

    def unitary(self, targets, matrix, controls=(), tag=None):
        return self.gate("unitary", targets, controls, matrix=matrix, tag=tag)

    def multiplexed(self, selector, targets, matrices, controls=(), tag=None):
        return self.gate("multiplexed", targets, controls, matrix=matrices, selector=selector, tag=tag)

    def sub(self, circuit: "Circuit", controls=(), adjoint=False, repeat=1, tag=None):
        return self.append(GateOp("sub", (), tuple(controls), circuit=circuit, adjoint=adjoint, repeat=repeat, tag=tag))

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)], self.name)

    def controlled(self, controls, tag=None) -> "Circuit":
        return Circuit(self.n_qubits, [GateOp("sub", (), tuple(controls), circuit=self, tag=tag)])

    def stats(self, depth: bool = True) -> "CircuitStats":
        return circuit_stats(self, depth=depth)

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits, "name": self.name, "ops": [op.to_json() for op in self.ops]}

    @classmethod
    def from_json(cls, doc: dict) -> "Circuit":
        return cls(doc["n_qubits"], [GateOp.from_json(o) for o in doc["ops"]], doc.get("name"))


# -- simulation ---------------------------------------------------------------


@lru_cache(maxsize=65536)
def _index(n: int, fixed: tuple[tuple[int, int], ...]) -> tuple:
    idx = [slice(None)] * n
    for q, v in fixed:
        idx[q] = v
    return tuple(idx)


@lru_cache(maxsize=65536)
def _view_axes(targets: tuple[int, ...], controls: tuple[int, ...]) -> tuple[int, ...]:
    # axis of each target once control axes have been indexed away
    return tuple(t - sum(1 for c in controls if c < t) for t in targets)


def _one_qubit_matrix(kind: str, angle: float) -> np.ndarray:
    if kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind == "rx":
        c, s = math.cos(angle), math.sin(angle)
        return np.array([[c, 1j * s], [1j * s, c]])
    if kind == "ry":
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    raise ConfigError(kind)


class StateVector:
    """Amplitudes over a :class:`RegisterLayout`, with a trailing batch axis.

    A batch of ``b`` columns evolves ``b`` independent states under the same
    circuit, which is how dense unitaries are extracted.
    """

    def __init__(self, layout: RegisterLayout, data: np.ndarray | None = None, batch: int = 1):
        self.layout = layout
        n = layout.total
        if data is None:
            data = np.zeros((2**n, batch), dtype=complex)
            data[0, :] = 1.0
        data = np.asarray(data, dtype=complex)
        if data.ndim == 1:
            data = data[:, None]
        if data.shape[0] != 2**n:
            raise ConfigError(f"state has {data.shape[0]} amplitudes, layout needs {2**n}")
        self.data = np.ascontiguousarray(data)
        self.gate_count = 0

    @classmethod
    def basis(cls, layout: RegisterLayout, **values) -> "StateVector":
        sv = cls(layout)
        sv.data[:] = 0
        sv.data[layout.basis_index(**values), 0] = 1.0
        return sv

    @property
    def n_qubits(self) -> int:
        return self.layout.total

    @property
    def tensor(self) -> np.ndarray:
        return self.data.reshape([2] * self.n_qubits + [self.data.shape[1]])

    @property
    def amplitudes(self) -> np.ndarray:
        if self.data.shape[1] != 1:
            raise ConfigError("amplitudes of a batched state are ambiguous; use .data")
        return self.data[:, 0]

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.data, axis=0)

    def copy(self) -> "StateVector":
        out = StateVector(self.layout, self.data.copy())
        out.gate_count = self.gate_count
        return out

    # gate application

    def apply(self, op: GateOp) -> "StateVector":
        self._apply(op, (), False)
        return self

    def run(self, circuit: Circuit) -> "StateVector":
        if circuit.n_qubits != self.n_qubits:
            raise ConfigError(f"circuit acts on {circuit.n_qubits} qubits, state has {self.n_qubits}")
        self._run(circuit, (), False)
        return self

    def _run(self, circuit, extra, adjoint):
        ops = reversed(circuit.ops) if adjoint else circuit.ops
        for op in ops:
            self._apply(op, extra, adjoint)

    def _apply(self, op: GateOp, extra, adjoint):
        n = self.n_qubits
        controls = op.controls + extra if extra else op.controls
        kind = op.kind
        if kind == "sub":
            inner_adj = adjoint != op.adjoint
            for _ in range(op.repeat):
                self._run(op.circuit, controls, inner_adj)
            return
        qs = op.qubits | {q for q, _ in extra}
        if qs and max(qs) >= n:
            raise ConfigError(f"gate {kind} uses qubit {max(qs)} but the state has {n}")
        self.gate_count += 1
        psi = self.tensor
        sign = -1.0 if adjoint else 1.0
        if kind == "multiplexed":
            mats = op.matrix
            w = len(op.selector)
            for value in range(2**w):
                sel = tuple((s, (value >> (w - 1 - i)) & 1) for i, s in enumerate(op.selector))
                u = mats[value].conj().T if adjoint else mats[value]
                self._dense(psi, op.targets, controls + sel, u)
            return
        if kind == "phase":
            view = psi[_index(n, controls)] if controls else psi
            view *= np.exp(1j * sign * op.angle)
            return
        if kind in ("diag", "unitary"):
            mat = op.matrix
            if adjoint:
                mat = mat.conj() if kind == "diag" else mat.conj().T
            if kind == "diag":
                self._diag(psi, op.targets, controls, mat)
            else:
                self._dense(psi, op.targets, controls, mat)
            return
        if kind == "swap":
            a, b = op.targets
            s01 = psi[_index(n, controls + ((a, 0), (b, 1)))]
            s10 = psi[_index(n, controls + ((a, 1), (b, 0)))]
            tmp = s01.copy()
            s01[...] = s10
            s10[...] = tmp
            return
        t = op.targets[0]
        s0 = psi[_index(n, controls + ((t, 0),))]
        s1 = psi[_index(n, controls + ((t, 1),))]
        if kind == "x":
            tmp = s0.copy()
            s0[...] = s1
            s1[...] = tmp
        elif kind == "z":
            s1 *= -1.0
        elif kind == "zphase":
            e = np.exp(1j * sign * op.angle)
            s0 *= e
            s1 *= e.conjugate()
        else:
            u = _one_qubit_matrix(kind, sign * op.angle if kind != "h" else 0.0)
            a0 = s0.copy()
            s0 *= u[0, 0]
            s0 += u[0, 1] * s1
            s1 *= u[1, 1]
            s1 += u[1, 0] * a0

    def _moved(self, psi, targets, controls):
        view = psi[_index(self.n_qubits, controls)] if controls else psi
        axes = _view_axes(tuple(targets), tuple(q for q, _ in controls))
        k = len(targets)
        return np.moveaxis(view, axes, tuple(range(view.ndim - k, view.ndim)))

    def _dense(self, psi, targets, controls, u):
        k = len(targets)
        w = self._moved(psi, targets, controls)
        w[...] = (w.reshape(-1, 2**k) @ u.T).reshape(w.shape)

    def _diag(self, psi, targets, controls, phases):
        k = len(targets)
        w = self._moved(psi, targets, controls)
        w *= phases.reshape([2] * k)

    # measurement-free readout

    def project_ancilla_zero(self, registers: Sequence[str]):
        """Amplitude block with the named registers in ``|0>``, not renormalized.

        Returns ``(block, weight)`` where ``block`` is indexed by the remaining
        registers in layout order (flattened, batch axis kept when batched) and
        ``weight`` is the squared norm of that block.
        """
        layout = self.layout
        fixed = tuple((q, 0) for name in registers for q in layout.qubits(name))
        block = self.tensor[_index(self.n_qubits, fixed)]
        block = block.reshape(-1, self.data.shape[1])
        weight = np.sum(np.abs(block) ** 2, axis=0)
        if self.data.shape[1] == 1:
            return block[:, 0].copy(), float(weight[0])
        return block.copy(), weight

    def register_amplitudes(self, **values) -> np.ndarray:
        """Amplitudes with some registers fixed to given values, others kept (layout order)."""
        layout = self.layout
        fixed = ()
        for name, v in values.items():
            fixed += layout.value_controls(name, v)
        block = self.tensor[_index(self.n_qubits, fixed)]
        return block.reshape(-1, self.data.shape[1]).squeeze(-1) if self.data.shape[1] == 1 else block.reshape(-1, self.data.shape[1])

    def register_distribution(self, register: str) -> np.ndarray:
        """Marginal probabilities of one register (batch must be 1)."""
        layout = self.layout
        offsets = layout.offsets
        start, width = offsets[register], layout.widths[register]
        probs = np.abs(self.amplitudes) ** 2
        shaped = probs.reshape(2**start, 2**width, -1)
        return shaped.sum(axis=(0, 2))

    def reduced_density(self, register: str) -> np.ndarray:
        layout = self.layout
        start, width = layout.offsets[register], layout.widths[register]
        t = self.amplitudes.reshape(2**start, 2**width, -1)
        return np.einsum("aib,ajb->ij", t, t.conj())

    def dump(self, path) -> Path:
        """Write amplitudes as little-endian float64 re/im pairs plus a JSON layout sidecar."""
        path = Path(path)
        inter = np.empty(2 * self.data.shape[0], dtype="<f8")
        inter[0::2] = self.amplitudes.real
        inter[1::2] = self.amplitudes.imag
        inter.tofile(path)
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps({"layout": self.layout.to_json(), "dtype": "<f8 interleaved re,im"}, indent=2))
        return side


def load_dump(path) -> StateVector:
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    layout = RegisterLayout(tuple((r["name"], r["width"]) for r in side["layout"]["registers"]))
    raw = np.fromfile(path, dtype="<f8")
    return StateVector(layout, raw[0::2] + 1j * raw[1::2])


def simulate(circuit: Circuit, layout: RegisterLayout, state: StateVector | None = None) -> StateVector:
    sv = state if state is not None else StateVector(layout)
    return sv.run(circuit)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense matrix of a circuit, column ``j`` is the image of basis state ``j``."""
    n = circuit.n_qubits
    layout = RegisterLayout((("all", n),))
    sv = StateVector(layout, np.eye(2**n, dtype=complex))
    sv.run(circuit)
    return sv.data


# -- resource accounting ------------------------------------------------------


def mcx_cost(n_controls: int) -> int:
    """Elementary gates for an X with ``n_controls`` controls (fixed convention)."""
    if n_controls <= 1:
        return 1
    if n_controls == 2:
        return 15
    return 60 * (n_controls - 2)


def controlled_1q_cost(n_controls: int) -> int:
    if n_controls == 0:
        return 1
    if n_controls == 1:
        return 5
    return 2 * mcx_cost(n_controls) + 3


def decomposed_cost(op: GateOp, controls) -> int:
    """Convention-dependent elementary-gate estimate for one primitive."""
    nc = len(controls)
    flips = 2 * sum(1 for _, pol in controls if pol == 0)
    kind = op.kind
    k = len(op.targets)
    if kind == "x":
        base = mcx_cost(nc)
    elif kind in ("h", "z", "zphase", "rx", "ry"):
        base = controlled_1q_cost(nc)
    elif kind == "swap":
        base = 2 + mcx_cost(nc + 1)
    elif kind == "phase":
        base = 0 if nc == 0 else controlled_1q_cost(nc - 1)
    elif kind == "diag":
        base = sum(math.comb(k, s) * (2 * (s - 1) + controlled_1q_cost(nc)) for s in range(1, k + 1))
    elif kind == "unitary":
        base = controlled_1q_cost(nc) * (4**k if k > 1 else 1)
    elif kind == "multiplexed":
        sel = len(op.selector)
        base = 2**sel * controlled_1q_cost(nc + sel) * 4**k
    else:
        base = 0
    return base + flips


@dataclass
class CircuitStats:
    qubits: int
    primitive_count: int = 0
    depth: int | None = 0
    per_tag: Counter = field(default_factory=Counter)
    decomposed_estimate: int = 0

    def __add__(self, other: "CircuitStats") -> "CircuitStats":
        depth = None if self.depth is None or other.depth is None else self.depth + other.depth
        return CircuitStats(
            max(self.qubits, other.qubits),
            self.primitive_count + other.primitive_count,
            depth,
            self.per_tag + other.per_tag,
            self.decomposed_estimate + other.decomposed_estimate,
        )

    def to_json(self) -> dict:
        return {
            "qubits": self.qubits,
            "primitive_count": self.primitive_count,
            "depth": self.depth,
            "per_tag": dict(sorted(self.per_tag.items())),
            "decomposed_estimate": self.decomposed_estimate,
        }


def circuit_stats(circuit: Circuit, depth: bool = True, depth_limit: int = 5_000_000) -> CircuitStats:
    """Counts per primitive, per innermost tag, and a greedy as-soon-as-possible depth.

    Nested repeats are counted multiplicatively without unrolling; depth is
    only computed when the unrolled circuit stays under ``depth_limit``.
    """
    memo = {}

    def count(circ: Circuit, n_extra: tuple, tag):
        key = (id(circ), n_extra, tag)
        if key in memo:
            return memo[key]
        prim, dec, tags = 0, 0, Counter()
        for op in circ.ops:
            t = op.tag or tag
            ctrls = op.controls + n_extra
            if op.kind == "sub":
                p, d, tg = count(op.circuit, ctrls, t)
                prim += p * op.repeat
                dec += d * op.repeat
                for name, v in tg.items():
                    tags[name] += v * op.repeat
            else:
                prim += 1
                dec += decomposed_cost(op, ctrls)
                tags[t or "other"] += 1
        memo[key] = (prim, dec, tags)
        return memo[key]

    prim, dec, tags = count(circuit, (), None)
    d = None
    if depth and prim <= depth_limit:
        level = [0] * circuit.n_qubits
        for qs in _flat_qubits(circuit, frozenset()):
            top = max(level[q] for q in qs) + 1 if qs else 0
            for q in qs:
                level[q] = top
        d = max(level, default=0)
    return CircuitStats(circuit.n_qubits, prim, d, tags, dec)


def _flat_qubits(circuit: Circuit, extra: frozenset):
    for op in circuit.ops:
        ctrl = extra | {q for q, _ in op.controls}
        if op.kind == "sub":
            for _ in range(op.repeat):
                yield from _flat_qubits(op.circuit, ctrl)
        else:
            yield tuple(set(op.targets) | set(op.selector) | ctrl)
