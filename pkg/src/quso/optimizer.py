"""QAOA outer loop over a configuration cost table.

The cost layer is selected by ``delta``: ``delta = 0`` applies the exact
phase oracle ``exp(-i gamma c(x))``; ``delta = 2^-k`` uses the shortcut
amplitude-estimation layer with a ``k``-qubit phase register. Costs are the
normalized table unless told otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amplitude import build_cost_layer, build_qpa, build_shortcut_preparation, ideal_layout, shortcut_layout
from .errors import ConfigError, ConvergenceError
from .statevector import Circuit, RegisterLayout, StateVector
from .thermal import CostTable


@dataclass(frozen=True)
class QAOAParams:
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.betas):
            raise ConfigError("gamma and beta sequences must have the same length")
        if len(self.gammas) < 1:
            raise ConfigError("depth must be at least 1")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @property
    def depth(self) -> int:
        return len(self.gammas)

    @classmethod
    def constant(cls, depth: int, value: float = 0.5) -> "QAOAParams":
        return cls((value,) * depth, (value,) * depth)

    @classmethod
    def from_vector(cls, vec) -> "QAOAParams":
        vec = np.asarray(vec, dtype=float)
        p = len(vec) // 2
        return cls(tuple(vec[:p]), tuple(vec[p:]))

    def vector(self) -> np.ndarray:
        return np.array(self.gammas + self.betas)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    threshold: float = 1e-5
    max_iter: int = 500
    mode: str = "exact"
    n_samples: int = 1024
    fd_step: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.threshold > 0:
            raise ConfigError("improvement threshold must be positive")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"unknown expectation mode {self.mode!r}")
        if self.learning_rate <= 0 or self.max_iter < 0 or self.fd_step <= 0:
            raise ConfigError("learning rate, step and iteration cap must be positive")


@dataclass
class RunResult:
    trace: list[float]
    params: QAOAParams
    probabilities: np.ndarray
    ratio: float
    ranking: list[tuple[str, float, float]]
    expectation: float
    delta: float = 0.0
    iterations: int = 0
    converged: bool = False
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "depth": self.params.depth,
            "delta": self.delta,
            "gammas": list(self.params.gammas),
            "betas": list(self.params.betas),
            "trace": [float(v) for v in self.trace],
            "expectation": float(self.expectation),
            "approximation_ratio": float(self.ratio),
            "iterations": self.iterations,
            "converged": self.converged,
            "probabilities": [float(p) for p in self.probabilities],
            "ranking": [{"bitstring": b, "cost": c, "probability": p} for b, c, p in self.ranking],
            **self.meta,
        }


def build_mixer(beta: float, layout: RegisterLayout) -> Circuit:
    """``exp(i beta X)`` on every configuration qubit."""
    circ = Circuit(layout.total, name="mixer")
    for q in layout.qubits("c"):
        circ.rx(q, beta, tag="mixer")
    return circ


def expectation_cost(state: StateVector | np.ndarray, costs, mode: str = "exact", n_samples: int = 1024,
                     rng: np.random.Generator | None = None) -> float:
    """``<H_C> = sum_x P(x) c(x)``, exactly or from ``n_samples`` seeded draws."""
    costs = np.asarray(costs.costs if isinstance(costs, CostTable) else costs, dtype=float)
    probs = state.register_distribution("c") if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if len(probs) != len(costs):
        raise ConfigError(f"distribution has {len(probs)} entries, cost table has {len(costs)}")
    if mode == "exact":
        return float(probs @ costs)
    if mode != "sampled":
        raise ConfigError(f"unknown expectation mode {mode!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    p = np.clip(probs, 0, None)
    draws = rng.choice(len(costs), size=n_samples, p=p / p.sum())
    return float(costs[draws].mean())


def approximation_ratio(c_qaoa: float, costs) -> float:
    costs = np.asarray(costs.costs if isinstance(costs, CostTable) else costs, dtype=float)
    lo, hi = costs.min(), costs.max()
    if hi == lo:
        return 1.0
    return float((hi - c_qaoa) / (hi - lo))


def ranked_distribution(probabilities, costs, m: int | None = None):
    """``(bitstring, cost, probability)`` sorted by cost, ties by bitstring value.

    Costs equal to 12 significant digits count as ties, so round-off in the
    linear solve does not reorder physically equal configurations.
    """
    costs = np.asarray(costs.costs if isinstance(costs, CostTable) else costs, dtype=float)
    m = m if m is not None else int(round(math.log2(len(costs))))
    keys = [float(f"{c:.12g}") for c in costs]
    order = sorted(range(len(costs)), key=lambda v: (keys[v], v))
    return [(format(v, f"0{m}b") if m else "", float(costs[v]), float(probabilities[v])) for v in order]


class QAOASimulator:
    """Builds and runs QAOA circuits for one cost table and one ``delta``."""

    def __init__(self, table: CostTable, delta: float = 0.0, use_normalized: bool = True):
        self.table = table
        self.costs = table.normalized if use_normalized else table.costs
        self.m = table.edge_count
        self.delta = float(delta)
        if self.delta == 0:
            self.k = 0
            self.layout = ideal_layout(self.m)
            self._prep = None
        else:
            k = -math.log2(self.delta)
            if abs(k - round(k)) > 1e-12 or round(k) < 1:
                raise ConfigError(f"delta must be 0 or 2^-k with k >= 1, got {delta}")
            self.k = int(round(k))
            self.layout = shortcut_layout(self.m, self.k)
            self._prep = build_shortcut_preparation(self.costs, self.layout)

    def cost_layer(self, gamma: float) -> Circuit:
        if self._prep is None:
            return build_cost_layer(gamma, "ideal", self.layout, CostTable(self.m, self.costs), use_normalized=False)
        circ = Circuit(self.layout.total, name="cost_layer_shortcut")
        circ.sub(self._prep)
        circ.extend(build_qpa(gamma, self.layout))
        circ.sub(self._prep, adjoint=True)
        return circ

    def circuit(self, params: QAOAParams) -> Circuit:
        circ = Circuit(self.layout.total, name="qaoa")
        for q in self.layout.qubits("c"):
            circ.h(q, tag="init")
        for g, b in zip(params.gammas, params.betas):
            circ.extend(self.cost_layer(g))
            circ.extend(build_mixer(b, self.layout))
        return circ

    def state(self, params: QAOAParams) -> StateVector:
        return StateVector(self.layout).run(self.circuit(params))

    def _ideal_amplitudes(self, params: QAOAParams) -> np.ndarray:
        # same gates as circuit() for delta = 0, applied without building it
        m = self.m
        psi = np.full(2**m, 2 ** (-m / 2), dtype=complex)
        for g, b in zip(params.gammas, params.betas):
            psi = psi * np.exp(-1j * g * self.costs)
            u = np.array([[math.cos(b), 1j * math.sin(b)], [1j * math.sin(b), math.cos(b)]])
            t = psi.reshape([2] * m)
            for axis in range(m):
                t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
            psi = t.reshape(-1)
        return psi

    def distribution(self, params: QAOAParams) -> np.ndarray:
        if self._prep is None:
            return np.abs(self._ideal_amplitudes(params)) ** 2
        return self.state(params).register_distribution("c")

    def expectation(self, params: QAOAParams, mode: str = "exact", n_samples: int = 1024, rng=None) -> float:
        return expectation_cost(self.distribution(params), self.costs, mode, n_samples, rng)

    def result(self, params: QAOAParams, trace=(), iterations=0, converged=False) -> RunResult:
        probs = self.distribution(params)
        exp = float(probs @ self.costs)
        return RunResult(
            trace=list(trace) or [exp],
            params=params,
            probabilities=probs,
            ratio=approximation_ratio(exp, self.costs),
            ranking=ranked_distribution(probs, self.costs, self.m),
            expectation=exp,
            delta=self.delta,
            iterations=iterations,
            converged=converged,
        )


def optimize(table: CostTable, params0: QAOAParams, cfg: OptimizerConfig = OptimizerConfig(),
             delta: float = 0.0, use_normalized: bool = True) -> RunResult:
    """Gradient descent with momentum; gradients by central differences."""
    sim = QAOASimulator(table, delta, use_normalized)
    rng = np.random.default_rng(cfg.seed)

    def f(vec):
        val = sim.expectation(QAOAParams.from_vector(vec), cfg.mode, cfg.n_samples, rng)
        if not np.isfinite(val):
            raise ConvergenceError(f"non-finite cost at parameters {vec.tolist()}")
        return val

    theta = params0.vector()
    vel = np.zeros_like(theta)
    h = cfg.fd_step
    current = f(theta)
    trace = [current]
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        grad = np.empty_like(theta)
        for i in range(len(theta)):
            e = np.zeros_like(theta)
            e[i] = h
            grad[i] = (f(theta + e) - f(theta - e)) / (2 * h)
        vel = cfg.momentum * vel - cfg.learning_rate * grad
        theta = theta + vel
        new = f(theta)
        trace.append(new)
        if abs(current - new) < cfg.threshold:
            converged = True
            current = new
            break
        current = new
    return sim.result(QAOAParams.from_vector(theta), trace, it, converged)


def evaluate(table: CostTable, params: QAOAParams, delta: float, use_normalized: bool = True) -> RunResult:
    """Run fixed parameters at a given ``delta`` (no re-optimization)."""
    return QAOASimulator(table, delta, use_normalized).result(params)


def result_from_distribution(probs, costs, params: QAOAParams, delta: float, m: int) -> RunResult:
    """Wrap an externally simulated ``c``-register distribution."""
    costs = np.asarray(costs, dtype=float)
    exp = float(probs @ costs)
    return RunResult(trace=[exp], params=params, probabilities=np.asarray(probs), ratio=approximation_ratio(exp, costs),
                     ranking=ranked_distribution(probs, costs, m), expectation=exp, delta=delta, converged=True)


def cost_landscape(table: CostTable, gammas, betas, delta: float = 0.0) -> np.ndarray:
    """``<H_C>`` at depth one on the ``gammas x betas`` grid."""
    sim = QAOASimulator(table, delta)
    out = np.empty((len(gammas), len(betas)))
    for i, g in enumerate(gammas):
        for j, b in enumerate(betas):
            out[i, j] = sim.expectation(QAOAParams((g,), (b,)))
    return out
