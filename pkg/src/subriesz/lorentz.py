"""Rearrangements and Lorentz functionals of grid functions.

A grid function is a step function on a measure space: every sample
carries the mass ``cell_weight``.  Its decreasing rearrangement is a finite
staircase, so all Lorentz integrals reduce to sums of power integrals
over plateaus.  Zero samples are dropped; they only extend the support of
f* by a region where it vanishes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import comb

from .grid import GridFunction, convolve
from .report import ExperimentReport, TolerancePolicy

_GL_NODES, _GL_WEIGHTS = leggauss(64)


@dataclass(frozen=True)
class RearrangementProfile:
    """f* as plateaus: value ``values[k]`` on (T_{k-1}, T_k], T_k = cumulative measure."""

    values: np.ndarray
    measures: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.measures, dtype=float)
        if v.shape != m.shape or v.ndim != 1:
            raise ValueError("values and measures must be 1-d arrays of equal length")
        if np.any(m <= 0) or np.any(v < 0) or np.any(np.diff(v) >= 0):
            raise ValueError("profile needs strictly decreasing nonnegative values and positive measures")
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)

    @classmethod
    def from_samples(cls, values, weights) -> "RearrangementProfile":
        """Coalesce (value, mass) pairs into a canonical profile; zeros are dropped."""
        v = np.abs(np.asarray(values, dtype=float)).ravel()
        w = np.broadcast_to(np.asarray(weights, dtype=float), v.shape).ravel()
        keep = v > 0
        v, w = v[keep], w[keep]
        uniq, inv = np.unique(v, return_inverse=True)
        mass = np.bincount(inv, weights=w, minlength=len(uniq))
        return cls(uniq[::-1].copy(), mass[::-1].copy())

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @property
    def breakpoints(self) -> np.ndarray:
        return np.cumsum(self.measures)

    @property
    def partial_integrals(self) -> np.ndarray:
        """S_k = int_0^{T_k} f*."""
        return np.cumsum(self.values * self.measures)

    def __len__(self) -> int:
        return len(self.values)

    def scaled(self, c: float) -> "RearrangementProfile":
        if c == 0:
            return RearrangementProfile(np.zeros(0), np.zeros(0))
        return RearrangementProfile(abs(c) * self.values, self.measures)

    def power(self, gamma: float) -> "RearrangementProfile":
        return RearrangementProfile(self.values**gamma, self.measures)

    def star(self, x) -> np.ndarray | float:
        """f*(x), right-continuous."""
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.breakpoints, x, side="right")
        vals = np.append(self.values, 0.0)
        out = vals[k]
        return float(out) if out.ndim == 0 else out

    def distribution(self, y) -> np.ndarray | float:
        """m(y) = |{f* > y}|."""
        y = np.asarray(y, dtype=float)
        k = np.searchsorted(-self.values, -y, side="left")
        out = np.append(0.0, self.breakpoints)[k]
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "measure"])
            for v, m in zip(self.values, self.measures):
                w.writerow([repr(float(v)), repr(float(m))])
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "RearrangementProfile":
        with Path(path).open() as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([float(r["value"]) for r in rows]), np.array([float(r["measure"]) for r in rows]))


def _profile(f) -> RearrangementProfile:
    return f if isinstance(f, RearrangementProfile) else rearrange(f)


def distribution_function(f: GridFunction, y: float) -> float:
    """|{|f| > y}|."""
    return float(np.count_nonzero(np.abs(f.samples) > y)) * f.spec.cell_weight


def rearrange(f: GridFunction) -> RearrangementProfile:
    return RearrangementProfile.from_samples(f.samples, f.spec.cell_weight)


def double_star(profile: RearrangementProfile, x) -> np.ndarray | float:
    """f**(x) = (1/x) int_0^x f*."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("f** is defined for x > 0")
    T = np.append(0.0, profile.breakpoints)
    S = np.append(0.0, profile.partial_integrals)
    vals = np.append(profile.values, 0.0)
    k = np.clip(np.searchsorted(T, x, side="left") - 1, 0, len(vals) - 1)
    out = (S[k] + vals[k] * (np.minimum(x, T[-1]) - T[k]) * (k < len(profile))) / x
    return float(out) if out.ndim == 0 else out


def _pow_diff(lo: np.ndarray, hi: np.ndarray, e: float) -> np.ndarray:
    """hi^e - lo^e accurately, for 0 <= lo < hi."""
    out = hi**e - lo**e
    pos = lo > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = lo[pos] ** e * np.expm1(e * np.log1p((hi[pos] - lo[pos]) / lo[pos]))
    out[pos] = rel
    return out


def _check_qr(q: float, r: float, q_low: float) -> None:
    if not q >= q_low:
        raise ValueError(f"Lorentz index q must be at least {q_low}, got {q}")
    if not r > 0:
        raise ValueError(f"Lorentz index r must be positive, got {r}")


def lorentz_quasinorm(f, q: float, r: float) -> float:
    """(int_0^inf (t^(1/q) f*(t))^r dt/t)^(1/r), or sup t^(1/q) f*(t) for r = inf."""
    _check_qr(q, r, 1.0)
    p = _profile(f)
    if len(p) == 0:
        return 0.0
    if math.isinf(q):
        raise ValueError("quasinorm needs finite q")
    T = p.breakpoints
    if math.isinf(r):
        return float(np.max(p.values * T ** (1.0 / q)))
    lo = np.append(0.0, T[:-1])
    e = r / q
    total = np.sum(p.values**r * _pow_diff(lo, T, e)) / e
    return float(total ** (1.0 / r))


def lorentz_quasinorm_distribution(f, q: float, r: float) -> float:
    """Same functional through the distribution function: q^(1/r) (int (y m(y)^(1/q))^r dy/y)^(1/r)."""
    _check_qr(q, r, 1.0)
    p = _profile(f)
    if len(p) == 0:
        return 0.0
    v = p.values
    nxt = np.append(v[1:], 0.0)
    T = p.breakpoints
    # m(y) = T_k on [v_{k+1}, v_k)
    total = q * np.sum(T ** (r / q) * (v**r - nxt**r)) / r
    return float(total ** (1.0 / r))


def _plateau_integral(v: float, B: float, lo: float, hi: float, a: float, r: float) -> float:
    """int_lo^hi t^(a-1) (v + B/t)^r dt with v, B >= 0 and 0 <= lo < hi."""
    if B == 0.0:
        return v**r * (hi**a - lo**a) / a
    if float(r).is_integer():
        n = int(r)
        total = 0.0
        for j in range(n + 1):
            e = a - j
            if e == 0.0:
                piece = math.log(hi / lo)
            else:
                piece = (hi**e - lo**e) / e
            total += comb(n, j, exact=True) * v ** (n - j) * B**j * piece
        return total
    # fractional r: Gauss-Legendre in s = log t (integrand smooth on the plateau)
    s0, s1 = math.log(lo), math.log(hi)
    s = 0.5 * (s1 - s0) * _GL_NODES + 0.5 * (s1 + s0)
    t = np.exp(s)
    vals = t**a * (v + B / t) ** r
    return float(0.5 * (s1 - s0) * np.dot(_GL_WEIGHTS, vals))


def lorentz_norm(f, q: float, r: float) -> float:
    """(int_0^inf (t^(1/q) f**(t))^r dt/t)^(1/r), or the sup for r = inf.

    Diverges (returns inf) for q = 1 with finite r, and for q = inf with finite r.
    """
    _check_qr(q, r, 1.0)
    if not math.isinf(r) and r < 1:
        raise ValueError("the f** norm needs r >= 1")
    p = _profile(f)
    if len(p) == 0:
        return 0.0
    v = p.values
    T = p.breakpoints
    S = p.partial_integrals
    lo = np.append(0.0, T[:-1])
    Sprev = np.append(0.0, S[:-1])
    B = Sprev - v * lo
    B[0] = 0.0
    if math.isinf(q):
        return float(v[0]) if math.isinf(r) else math.inf
    iq = 1.0 / q
    if math.isinf(r):
        # sup over t of v t^(1/q) + B t^(1/q - 1) is at a breakpoint or a critical point
        cand = [float(S[-1] * T[-1] ** (iq - 1.0))]
        cand += list(v * T**iq + B * T ** (iq - 1.0))
        if q > 1:
            tc = B * (1.0 - iq) / (v * iq)
            inside = (tc > lo) & (tc < T)
            cand += list(v[inside] * tc[inside] ** iq + B[inside] * tc[inside] ** (iq - 1.0))
        return float(max(cand))
    if q == 1.0:
        return math.inf
    a = r * iq
    total = sum(_plateau_integral(float(v[k]), float(B[k]), float(lo[k]), float(T[k]), a, r) for k in range(len(v)))
    total += S[-1] ** r * T[-1] ** (a - r) / (r - a)
    return float(total ** (1.0 / r))


def holder_constant(q: float) -> float:
    """q' = q / (q - 1)."""
    return math.inf if q == 1 else (1.0 if math.isinf(q) else q / (q - 1.0))


def _recip(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def _validate_holder(q1, r1, q2, r2, q, r) -> None:
    if not math.isclose(_recip(q1) + _recip(q2), _recip(q), rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError("exponent relation 1/q1 + 1/q2 = 1/q fails")
    if not _recip(q) < 1:
        raise ValueError("exponent relation 1/q < 1 fails")
    if _recip(r1) + _recip(r2) < _recip(r) - 1e-15:
        raise ValueError("exponent relation 1/r1 + 1/r2 >= 1/r fails")
    if not r >= 1:
        raise ValueError("exponent relation r >= 1 fails")


def _validate_young(q1, r1, q2, r2, q, r) -> None:
    if not math.isclose(_recip(q1) + _recip(q2) - 1.0, _recip(q), rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError("exponent relation 1/q1 + 1/q2 - 1 = 1/q fails")
    if not (1 < q < math.inf):
        raise ValueError("exponent relation 1 < q < inf fails")
    if _recip(r1) + _recip(r2) < _recip(r) - 1e-15:
        raise ValueError("exponent relation 1/r1 + 1/r2 >= 1/r fails")
    if not r >= 1:
        raise ValueError("exponent relation r >= 1 fails")


def holder_lorentz_check(f: GridFunction, g: GridFunction, exponents) -> ExperimentReport:
    """||fg||_{q,r} <= q' ||f||_{q1,r1} ||g||_{q2,r2} with exponents (q1, r1, q2, r2, q, r)."""
    q1, r1, q2, r2, q, r = exponents
    _validate_holder(q1, r1, q2, r2, q, r)
    lhs = lorentz_norm(f * g, q, r)
    c = holder_constant(q)
    factors = lorentz_norm(f, q1, r1) * lorentz_norm(g, q2, r2)
    rhs = c * factors
    return ExperimentReport.judge(
        "holder-lorentz",
        f.group.tag,
        None,
        lhs,
        rhs,
        TolerancePolicy(1.0, "||fg|| <= q' ||f|| ||g||"),
        {"exponents": list(exponents), "constant": c, "best_constant": lhs / factors if factors > 0 else 0.0},
    )


def young_lorentz_check(f: GridFunction, g: GridFunction, exponents) -> ExperimentReport:
    """||f*g||_{q,r} <= 3q ||f||_{q1,r1} ||g||_{q2,r2} with exponents (q1, r1, q2, r2, q, r)."""
    q1, r1, q2, r2, q, r = exponents
    _validate_young(q1, r1, q2, r2, q, r)
    lhs = lorentz_norm(convolve(f, g), q, r)
    c = 3.0 * q
    factors = lorentz_norm(f, q1, r1) * lorentz_norm(g, q2, r2)
    rhs = c * factors
    return ExperimentReport.judge(
        "young-lorentz",
        f.group.tag,
        None,
        lhs,
        rhs,
        TolerancePolicy(1.0, "||f*g|| <= 3q ||f|| ||g||"),
        {"exponents": list(exponents), "constant": c, "best_constant": lhs / factors if factors > 0 else 0.0},
    )
