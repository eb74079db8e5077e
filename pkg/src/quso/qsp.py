"""Odd polynomial approximations of 1/x and their signal-processing phases.

The inversion polynomial approximates ``(mu/2)/x`` away from the origin. It is
built from the smooth odd function

    g(x) = (mu/2) * (1 - (1 - x^2)^b)^q / x

which is bounded near zero, expanded in Chebyshev polynomials and truncated
once the discarded tail drops below ``eps*mu/8``. The integer power ``q`` is
the smallest one keeping ``max |P| <= bound`` on ``[-1, 1]``; larger ``q``
flattens the overshoot just outside ``[-mu, mu]``.

Phase convention: with the reflection signal operator
``R(x) = [[x, s], [s, -x]]``, ``s = sqrt(1 - x^2)``, a phase list
``phi_1 .. phi_d`` realizes

    P(x) = Re <0| prod_j exp(i phi_j Z) R(x) |0>

with no extra leading phase. Phases are found by Newton iteration on a
symmetric sequence in the ``W_x`` convention and then converted.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft
from numpy.polynomial import chebyshev

from . import __version__
from .errors import ConfigError, ConvergenceError, ResourceError

DEFAULT_DEGREE_CAP = 2001
CONVENTION = "reflection-R/no-extra-phase"


@dataclass(frozen=True)
class InversionPolynomial:
    mu: float
    eps: float
    coefficients: np.ndarray  # Chebyshev basis, even entries are zero
    power: int
    exponent: int
    max_abs: float

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def scale(self) -> float:
        """Constant ``C_p = mu / 2`` multiplying the inverse."""
        return self.mu / 2.0

    def __call__(self, x):
        return chebyshev.chebval(x, self.coefficients)

    def target(self, x):
        return self.scale / np.asarray(x, dtype=float)

    def max_error(self, points: int = 10_000) -> float:
        xs = np.linspace(self.mu, 1.0, points)
        return float(np.abs(self(xs) - self.target(xs)).max())


def _smooth_reciprocal(mu: float, b: int, q: int):
    def g(x):
        x = np.asarray(x, dtype=float)
        return (mu / 2.0) * (-np.expm1(b * np.log1p(-x * x))) ** q / x

    return g


def chebyshev_nodes(count: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(count) + 0.5) / count)


def odd_chebyshev_fit(func, tol: float, start: int = 1024, max_points: int = 2**18):
    """Odd Chebyshev series of ``func`` truncated at the first odd degree whose tail is below ``tol``.

    Coefficients come from a type-II DCT at first-kind nodes. The node count
    doubles until the kept degree is under a quarter of it, so aliasing is
    negligible.
    """
    m = start
    while True:
        c = scipy.fft.dct(func(chebyshev_nodes(m)), type=2) / m
        c[0] /= 2.0
        c[0::2] = 0.0
        tail = np.cumsum(np.abs(c)[::-1])[::-1]
        degree = next((j for j in range(1, m - 1, 2) if tail[j + 1] <= tol), None)
        if degree is not None and degree < m // 4:
            return c[: degree + 1].copy()
        if m >= max_points:
            raise ResourceError(f"Chebyshev fit did not settle with {m} nodes")
        m *= 2


def build_inversion_polynomial(mu: float, eps: float, degree_cap: int = DEFAULT_DEGREE_CAP,
                               bound: float = 0.95, powers=(1, 2, 3, 4)) -> InversionPolynomial:
    if not 0 < mu < 1:
        raise ConfigError(f"mu must lie in (0, 1), got {mu}")
    if not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    grid = np.linspace(-1.0, 1.0, 20001)
    last = None
    for q in powers:
        b = max(1, math.ceil(math.log(eps * mu / (2 * q)) / math.log1p(-mu * mu)))
        coef = odd_chebyshev_fit(_smooth_reciprocal(mu, b, q), eps * mu / 8)
        if len(coef) - 1 > degree_cap:
            raise ResourceError(
                f"inversion polynomial for mu={mu:g}, eps={eps:g} needs degree {len(coef) - 1} > cap {degree_cap}"
            )
        peak = float(np.abs(chebyshev.chebval(grid, coef)).max())
        last = InversionPolynomial(mu, eps, coef, q, b, peak)
        if peak <= bound:
            return last
    raise ConfigError(f"no smoothing power kept |P| <= {bound} (last max {last.max_abs:.4f})")


# -- phases -------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseSequence:
    phases: np.ndarray
    convention: str = CONVENTION
    residual: float = 0.0
    iterations: int = 0

    @property
    def degree(self) -> int:
        return len(self.phases)

    def __len__(self):
        return len(self.phases)

    def to_json(self) -> dict:
        return {
            "convention": self.convention,
            "phases": [float(p) for p in self.phases],
            "residual": self.residual,
            "iterations": self.iterations,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PhaseSequence":
        return cls(np.asarray(doc["phases"], dtype=float), doc["convention"], doc.get("residual", 0.0),
                   doc.get("iterations", 0))


def evaluate_qsp_scalar(phases, x):
    """``Re <0| prod_j exp(i phi_j Z) R(x) |0>`` for scalar or array ``x``."""
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    s = np.sqrt(np.clip(1.0 - flat * flat, 0.0, None))
    v0 = np.ones_like(flat, dtype=complex)
    v1 = np.zeros_like(flat, dtype=complex)
    for phi in np.asarray(phases, dtype=float)[::-1]:
        w0 = flat * v0 + s * v1
        w1 = s * v0 - flat * v1
        e = np.exp(1j * phi)
        v0, v1 = e * w0, w1 / e
    out = v0.real.reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def _wx_sweeps(psi, x):
    # prefix row vectors a[j] = <0| e^{i psi_0 Z} W ... W (j signal steps), suffix column vectors b[j]
    d = len(psi) - 1
    s = np.sqrt(1.0 - x * x)
    a = np.empty((d + 1, len(x), 2), dtype=complex)
    b = np.empty((d + 1, len(x), 2), dtype=complex)
    a[0] = (1.0, 0.0)
    for j in range(1, d + 1):
        e = np.exp(1j * psi[j - 1])
        v0, v1 = a[j - 1][:, 0] * e, a[j - 1][:, 1] / e
        a[j, :, 0] = v0 * x + v1 * 1j * s
        a[j, :, 1] = v0 * 1j * s + v1 * x
    b[d] = (1.0, 0.0)
    for j in range(d - 1, -1, -1):
        e = np.exp(1j * psi[j + 1])
        u0, u1 = b[j + 1][:, 0] * e, b[j + 1][:, 1] / e
        b[j, :, 0] = x * u0 + 1j * s * u1
        b[j, :, 1] = 1j * s * u0 + x * u1
    return a, b


def _reduced_newton(coef, tol, max_iter):
    """Symmetric ``W_x`` phases whose ``Im <0|U|0>`` matches the odd Chebyshev series."""
    d = len(coef) - 1
    half = (d + 1) // 2
    nodes = np.cos((2 * np.arange(1, half + 1) - 1) * np.pi / (4 * half))
    goal = chebyshev.chebval(nodes, coef)
    red = np.zeros(half)
    best = math.inf
    for it in range(max_iter + 1):
        psi = np.concatenate([red, red[::-1]])
        a, b = _wx_sweeps(psi, nodes)
        e = np.exp(1j * psi)[:, None]
        value = a[0, :, 0] * e[0] * b[0, :, 0]
        resid = value.imag - goal
        r = float(np.abs(resid).max())
        if r < tol:
            return psi, it, r
        if not np.isfinite(r):
            break
        if r > 2 * best and it > 0:
            # diverging: back off half a step
            red = prev + 0.5 * (red - prev)
            continue
        best = min(best, r)
        deriv = 1j * (a[:, :, 0] * e * b[:, :, 0] - a[:, :, 1] / e * b[:, :, 1])
        jac = (deriv[:half] + deriv[::-1][:half]).imag.T
        prev = red
        try:
            red = red - np.linalg.solve(jac, resid)
        except np.linalg.LinAlgError:
            red = red - np.linalg.lstsq(jac, resid, rcond=None)[0]
    raise ConvergenceError(f"phase finding did not converge for degree {d}", residual=best)


def _to_reflection(psi):
    d = len(psi) - 1
    phi = np.empty(d)
    phi[0] = psi[0] + psi[d] - math.pi * d / 2
    phi[1:] = psi[1:d] + math.pi / 2
    return phi


def phases_for_chebyshev(coef, tol: float = 1e-13, max_iter: int = 100) -> PhaseSequence:
    """Phase list for an odd real Chebyshev series with ``sup |P| < 1``."""
    coef = np.asarray(coef, dtype=float)
    d = len(coef) - 1
    if d < 1 or d % 2 == 0:
        raise ConfigError(f"need an odd degree, got {d}")
    if np.abs(coef[0::2]).max(initial=0.0) > 0:
        raise ConfigError("polynomial must have odd parity")
    psi, it, r = _reduced_newton(coef, tol, max_iter)
    return PhaseSequence(_to_reflection(psi), CONVENTION, r, it)


def find_phases(poly: InversionPolynomial, tol: float = 1e-13, max_iter: int = 100) -> PhaseSequence:
    if poly.max_abs > 1:
        raise ConfigError("polynomial exceeds 1 in magnitude; no phases exist")
    return phases_for_chebyshev(poly.coefficients, tol, max_iter)


def phase_deviation(phases: PhaseSequence, coef, points: int = 1000) -> float:
    nodes = chebyshev_nodes(points)
    return float(np.abs(evaluate_qsp_scalar(phases.phases, nodes) - chebyshev.chebval(nodes, coef)).max())


# -- disk cache -----------------------------------------------------------------


class PhaseCache:
    """JSON phase cache keyed by (mu, eps, degree, convention, code version)."""

    def __init__(self, root):
        self.root = Path(root)

    @staticmethod
    def key(mu: float, eps: float, degree: int, convention: str = CONVENTION) -> str:
        raw = json.dumps([repr(float(mu)), repr(float(eps)), int(degree), convention, __version__])
        return hashlib.sha256(raw.encode()).hexdigest()[:20]

    def path(self, poly: InversionPolynomial) -> Path:
        return self.root / f"{self.key(poly.mu, poly.eps, poly.degree)}.json"

    def load(self, poly: InversionPolynomial) -> PhaseSequence | None:
        p = self.path(poly)
        if not p.exists():
            return None
        doc = json.loads(p.read_text())
        return PhaseSequence.from_json(doc["sequence"])

    def store(self, poly: InversionPolynomial, seq: PhaseSequence) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.path(poly)
        doc = {
            "mu": poly.mu, "eps": poly.eps, "degree": poly.degree, "version": __version__,
            "coefficients": [float(c) for c in poly.coefficients], "sequence": seq.to_json(),
        }
        tmp = p.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc))
        tmp.replace(p)
        return p

    def entries(self):
        for p in sorted(self.root.glob("*.json")):
            doc = json.loads(p.read_text())
            yield doc, PhaseSequence.from_json(doc["sequence"])

    def get_or_compute(self, poly: InversionPolynomial) -> PhaseSequence:
        seq = self.load(poly)
        if seq is None:
            seq = find_phases(poly)
            self.store(poly, seq)
        return seq
