"""Classical model of a resistive cooling network.

A network of ``N`` nodes exchanges heat along candidate edges ``(i, j)`` with
thermal resistance ``R_ij``; every node also couples to the environment
through ``R_env``. A configuration switches each edge on or off. The steady
state temperatures relative to the environment solve ``A(x) T = B`` with
``B`` the external heat rates.

Units are SI throughout: resistances in K/W, heat rates in W, temperatures in
K. The JSON ingestion format uses mK/W and kW and is converted on load.

Edges are kept in lexicographic ``(i, j)`` order; that order is also the bit
order of a configuration (bit 0 is the first edge) and the qubit order of the
configuration register.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, NetworkFormatError, ResourceError

MAX_ENUMERATED_EDGES = 24


@dataclass(frozen=True)
class ThermalNetwork:
    """Static description of the cooling problem instance."""

    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    r_env: float
    heat_rates: tuple[float, ...]
    t_env: float = 293.0

    def __post_init__(self):
        n = self.node_count
        if n < 2:
            raise ConfigError(f"node_count must be >= 2, got {n}")
        edges = tuple((int(i), int(j), float(r)) for i, j, r in self.edges)
        seen = set()
        for i, j, r in edges:
            if not 0 <= i < j <= n - 1:
                raise ConfigError(f"edge ({i}, {j}) must satisfy 0 <= i < j <= {n - 1}")
            if (i, j) in seen:
                raise ConfigError(f"duplicate edge ({i}, {j})")
            if not r > 0:
                raise ConfigError(f"edge ({i}, {j}) has non-positive resistance {r}")
            seen.add((i, j))
        if not self.r_env > 0:
            raise ConfigError(f"r_env must be positive, got {self.r_env}")
        if len(self.heat_rates) != n:
            raise ConfigError(f"expected {n} heat rates, got {len(self.heat_rates)}")
        # lexicographic edge order fixes the configuration bit order
        object.__setattr__(self, "edges", tuple(sorted(edges)))
        object.__setattr__(self, "heat_rates", tuple(float(q) for q in self.heat_rates))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def heat_vector(self) -> np.ndarray:
        return np.asarray(self.heat_rates, dtype=float)

    @property
    def max_degree(self) -> int:
        deg = np.zeros(self.node_count, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return int(deg.max()) if self.edges else 0

    @property
    def r_min(self) -> float:
        return min((r for _, _, r in self.edges), default=self.r_env)

    def edge_labels(self) -> list[str]:
        return [f"{i}{j}" if self.node_count <= 10 else f"{i}-{j}" for i, j, _ in self.edges]

    def configurations(self) -> Iterable["Configuration"]:
        m = self.edge_count
        for value in range(2**m):
            yield Configuration.from_int(value, m)

    def to_json(self) -> dict:
        return {
            "nodes": self.node_count,
            "r_env_mK_per_W": self.r_env * 1e3,
            "t_env_K": self.t_env,
            "edges": [{"i": i, "j": j, "r_mK_per_W": r * 1e3} for i, j, r in self.edges],
            "q_kW": [q / 1e3 for q in self.heat_rates],
        }


@dataclass(frozen=True)
class Configuration:
    """Edge activation bits, ``bits[e]`` switching ``network.edges[e]``.

    The integer value reads the bits big-endian (edge 0 is the most
    significant bit), which is also the configuration-register basis index.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ConfigError(f"configuration bits must be 0/1, got {self.bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_int(cls, value: int, m: int) -> "Configuration":
        if not 0 <= value < 2**m:
            raise ConfigError(f"configuration index {value} out of range for m={m}")
        return cls(tuple((value >> (m - 1 - e)) & 1 for e in range(m)))

    @classmethod
    def from_string(cls, s: str) -> "Configuration":
        return cls(tuple(int(ch) for ch in s))

    @property
    def index(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class SolveResult:
    temperatures: np.ndarray  # relative to the environment, K
    t_env: float
    residual: float

    @property
    def absolute(self) -> np.ndarray:
        return self.temperatures + self.t_env


@dataclass(frozen=True)
class SpectralStats:
    sigma_min: float
    sigma_max: float
    kappa_exact: float
    kappa_bound: float


def _as_config(net: ThermalNetwork, x) -> Configuration:
    if isinstance(x, Configuration):
        cfg = x
    elif isinstance(x, str):
        cfg = Configuration.from_string(x)
    elif isinstance(x, (int, np.integer)):
        cfg = Configuration.from_int(int(x), net.edge_count)
    else:
        cfg = Configuration(tuple(x))
    if len(cfg) != net.edge_count:
        raise ConfigError(
            f"configuration has {len(cfg)} bits but the network has {net.edge_count} edges"
        )
    return cfg


def assemble_matrix(net: ThermalNetwork, x) -> np.ndarray:
    """Conductance matrix ``A(x)`` in W/K."""
    cfg = _as_config(net, x)
    a = np.eye(net.node_count) / net.r_env
    for bit, (i, j, r) in zip(cfg.bits, net.edges):
        if bit:
            g = 1.0 / r
            a[i, i] += g
            a[j, j] += g
            a[i, j] -= g
            a[j, i] -= g
    return a


def solve_direct(net: ThermalNetwork, x) -> SolveResult:
    """Steady-state temperatures via a Cholesky solve (``A`` is SPD)."""
    a = assemble_matrix(net, x)
    b = net.heat_vector
    t = scipy.linalg.cho_solve(scipy.linalg.cho_factor(a), b)
    scale = np.abs(b).max()
    residual = float(np.abs(a @ t - b).max() / scale) if scale > 0 else float(np.abs(a @ t).max())
    return SolveResult(temperatures=t, t_env=net.t_env, residual=residual)


def spectral_stats(net: ThermalNetwork, x) -> SpectralStats:
    """Exact extreme singular values of ``A(x)`` and the Gershgorin bound on kappa."""
    eig = np.linalg.eigvalsh(assemble_matrix(net, x))
    lo, hi = float(eig[0]), float(eig[-1])
    bound = 1.0 + 2.0 * net.max_degree * net.r_env / net.r_min
    return SpectralStats(sigma_min=lo, sigma_max=hi, kappa_exact=hi / lo, kappa_bound=bound)


@dataclass(frozen=True)
class CostTable:
    """Scalar cost per configuration, indexed by the configuration integer."""

    edge_count: int
    costs: np.ndarray
    target_node: int | None = None
    scale: float = 1.0

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float)
        if costs.shape != (2**self.edge_count,):
            raise ConfigError(
                f"cost table needs {2**self.edge_count} entries, got shape {costs.shape}"
            )
        object.__setattr__(self, "costs", costs)

    def __len__(self):
        return len(self.costs)

    @cached_property
    def normalized(self) -> np.ndarray:
        top = self.costs.max()
        if not top > 0:
            raise ConfigError("cannot normalize a cost table whose maximum is not positive")
        return self.costs / top

    def normalized_table(self) -> "CostTable":
        return CostTable(self.edge_count, self.normalized, self.target_node, self.scale / self.costs.max())

    def bitstrings(self) -> list[str]:
        m = self.edge_count
        return [format(v, f"0{m}b") if m else "" for v in range(len(self.costs))]

    @property
    def c_min(self) -> float:
        return float(self.costs.min())

    @property
    def c_max(self) -> float:
        return float(self.costs.max())

    def argmin_set(self, rtol: float = 1e-12) -> set[int]:
        """All configurations attaining the minimum (ties are common)."""
        lo, span = self.c_min, max(self.c_max - self.c_min, abs(self.c_min), 1e-300)
        return {int(v) for v in np.flatnonzero(self.costs <= lo + rtol * span)}

    def rescaled(self, a: float, b: float = 0.0) -> "CostTable":
        return CostTable(self.edge_count, a * self.costs + b, self.target_node, self.scale * a)


def enumerate_costs(net: ThermalNetwork, target_node: int, scale: float = 1.0) -> CostTable:
    """Exhaustive table of ``c(x) = scale * T_target(x)`` over all configurations."""
    if not 0 <= target_node < net.node_count:
        raise ConfigError(f"target node {target_node} outside 0..{net.node_count - 1}")
    m = net.edge_count
    if m > MAX_ENUMERATED_EDGES:
        raise ResourceError(
            f"enumerating 2^{m} configurations exceeds the guard of 2^{MAX_ENUMERATED_EDGES}"
        )
    costs = np.empty(2**m)
    for cfg in net.configurations():
        costs[cfg.index] = solve_direct(net, cfg).temperatures[target_node]
    return CostTable(m, scale * costs, target_node, scale)


def monotonicity_violations(net: ThermalNetwork, target_node: int, coolers: Sequence[int] | None = None):
    """Pairs ``(x, x + edge)`` where adding an edge to a cooler raised the target temperature.

    Coolers default to nodes with negative heat rate. The check is a sanity
    report only; returned pairs are configuration integers.
    """
    if coolers is None:
        coolers = [k for k, q in enumerate(net.heat_rates) if q < 0]
    coolers = set(coolers)
    table = enumerate_costs(net, target_node).costs
    m = net.edge_count
    out = []
    for e, (i, j, _) in enumerate(net.edges):
        if not ({i, j} & coolers):
            continue
        bit = 1 << (m - 1 - e)
        for v in range(2**m):
            if not v & bit and table[v | bit] > table[v] + 1e-12 * abs(table[v]):
                out.append((v, v | bit))
    return out


def network_from_json(doc: dict, source=None) -> ThermalNetwork:
    try:
        return ThermalNetwork(
            node_count=int(doc["nodes"]),
            edges=tuple((e["i"], e["j"], float(e["r_mK_per_W"]) * 1e-3) for e in doc["edges"]),
            r_env=float(doc["r_env_mK_per_W"]) * 1e-3,
            heat_rates=tuple(float(q) * 1e3 for q in doc["q_kW"]),
            t_env=float(doc.get("t_env_K", 293.0)),
        )
    except KeyError as exc:
        raise NetworkFormatError(f"missing field {exc}", source) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise NetworkFormatError(str(exc), source) from exc
        raise NetworkFormatError(f"malformed value: {exc}", source) from exc


def load_network(path) -> ThermalNetwork:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkFormatError(f"cannot read network file: {exc.strerror}", path) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{exc.msg} (column {exc.colno})", path, exc.lineno) from exc
    if not isinstance(doc, dict):
        raise NetworkFormatError("top-level JSON value must be an object", path, 1)
    return network_from_json(doc, path)


def four_node_network() -> ThermalNetwork:
    """The four-node battery/engine/two-cooler instance shipped with the package."""
    doc = json.loads(resources.files("quso").joinpath("data/four_node.json").read_text())
    return network_from_json(doc, "four_node.json")


def all_bitstrings(m: int) -> list[str]:
    return ["".join(map(str, bits)) for bits in itertools.product((0, 1), repeat=m)]
