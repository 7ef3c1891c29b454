"""Horizontal perimeter of smooth regions, coarea and isoperimetric checks.

A region E = {phi > 0} is replaced by the smooth proxy u_eps = s(phi / eps)
with s a polynomial ramp from 0 (below -1) to 1 (above 1).  Its total
horizontal variation

    int |X u_eps| = int s'(phi / eps) / eps * |X phi|

converges to the horizontal perimeter of E as eps -> 0.  The ramp is odd
about 1/2, so the first-order bias in eps cancels and the two-width
Richardson step removes the second-order term.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridFunction, GridSpec, horizontal_gradient, integrate
from .group import GroupDescriptor, dilate, homogeneous_norm, multiply
from .report import ExperimentReport, TolerancePolicy

log = logging.getLogger(__name__)

SHAPES = ("euclidean-ball", "koranyi-ball", "box", "gaussian-superlevel")
DRIFT_WARN = 0.10


def ramp(s):
    """C^3 step: 0 for s <= -1, 1 for s >= 1, derivative 35/32 (1 - s^2)^3 in between."""
    s = np.clip(s, -1.0, 1.0)
    return 0.5 + (35.0 * s - 35.0 * s**3 + 21.0 * s**5 - 5.0 * s**7) / 32.0


def ramp_prime(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, 35.0 / 32.0 * (1.0 - s * s) ** 3, 0.0)


@dataclass(frozen=True)
class RegionSpec:
    """E = {phi > 0} for a named shape, optionally dilated by ``scale``.

    The level functions are gauge distances near the boundary, so eps is a
    length.  Dilating by r maps phi to r * phi(delta_{1/r} p) and eps to r * eps.
    """

    shape: str
    params: tuple[float, ...]
    epsilon: float
    group: GroupDescriptor
    scale: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; expected one of {SHAPES}")
        if not self.epsilon > 0 or not self.scale > 0:
            raise ValueError("epsilon and scale must be positive")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        need = {"euclidean-ball": 1, "koranyi-ball": 1, "gaussian-superlevel": 1}.get(self.shape)
        if need is not None and len(self.params) < need:
            raise ValueError(f"{self.shape} needs {need} parameter(s)")
        if self.shape == "box" and len(self.params) != self.group.topological_dimension:
            raise ValueError("box needs one half-width per coordinate")
        if any(p <= 0 for p in self.params[:1]):
            raise ValueError("shape parameters must be positive")

    @classmethod
    def parse(cls, text: str, epsilon: float, group: GroupDescriptor) -> "RegionSpec":
        """From a config string such as ``"koranyi-ball 1.5"``."""
        parts = text.split()
        if not parts:
            raise ValueError("empty region description")
        return cls(parts[0], tuple(float(p) for p in parts[1:]), epsilon, group)

    @property
    def eps(self) -> float:
        return self.epsilon * self.scale

    def dilated(self, r: float) -> "RegionSpec":
        return replace(self, scale=self.scale * r)

    def with_epsilon(self, epsilon: float) -> "RegionSpec":
        return replace(self, epsilon=epsilon)

    def _base_phi(self, p: np.ndarray) -> np.ndarray:
        g = self.group
        if self.shape == "euclidean-ball":
            return self.params[0] - np.sqrt(np.sum(p * p, axis=-1))
        if self.shape == "koranyi-ball":
            return self.params[0] - homogeneous_norm(g, p)
        if self.shape == "box":
            return np.min(np.asarray(self.params) - np.abs(p), axis=-1)
        s = self.params[0]
        level = self.params[1] if len(self.params) > 1 else math.exp(-0.5)
        n = homogeneous_norm(g, p)
        rb = s * math.sqrt(2.0 * math.log(1.0 / level))
        # normalised so that |d phi / d n| = 1 on the boundary n = rb
        return (np.exp(-0.5 * (n / s) ** 2) - level) * s * s / (level * rb)

    def phi(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.scale == 1.0:
            return self._base_phi(p)
        return self.scale * self._base_phi(dilate(self.group, 1.0 / self.scale, p))

    def hgrad_phi(self, p, step: float = 1e-6) -> np.ndarray:
        """(X_1 phi, ..., X_n phi) at p by centred differences along exp(s X_j)."""
        p = np.asarray(p, dtype=float)
        g = self.group
        h = step * self.scale
        out = []
        for j in range(g.horizontal_count):
            e = np.zeros(g.topological_dimension)
            e[j] = h
            out.append((self.phi(multiply(g, p, e)) - self.phi(multiply(g, p, -e))) / (2.0 * h))
        return np.stack(out, axis=-1)


def _check_margin(E: RegionSpec, spec: GridSpec) -> None:
    faces = []
    for k in range(spec.ndim):
        for end in (0, spec.resolution[k] - 1):
            sl = [slice(None)] * spec.ndim
            sl[k] = end
            faces.append(np.stack([m[tuple(sl)] for m in spec.mesh()], axis=-1).reshape(-1, spec.ndim))
    pts = np.concatenate(faces)
    if np.max(E.phi(pts)) > -3.0 * E.eps:
        raise ValueError("region must stay at least 3 eps inside the grid box")


def mollified_indicator(E: RegionSpec, spec: GridSpec) -> GridFunction:
    _check_margin(E, spec)
    return GridFunction(spec, ramp(E.phi(spec.points()).reshape(spec.shape) / E.eps), E.group)


def _variation(E: RegionSpec, spec: GridSpec, pts: np.ndarray, phi: np.ndarray, grad: np.ndarray | None) -> float:
    eps = E.eps
    w = ramp_prime(phi / eps) / eps
    band = w > 0
    if not np.any(band):
        return 0.0
    if grad is None:
        grad = E.hgrad_phi(pts[band])
    else:
        grad = grad[band]
    return float(np.sum(w[band] * np.sqrt(np.sum(grad * grad, axis=-1)))) * spec.cell_weight


@dataclass
class PerimeterEstimate:
    value: float
    coarse: float
    fine: float
    drift: float
    warning: str | None = None


def perimeter_estimate(E: RegionSpec, spec: GridSpec) -> PerimeterEstimate:
    """Richardson-extrapolated horizontal perimeter from widths 2 eps and eps."""
    _check_margin(E.with_epsilon(2.0 * E.epsilon), spec)
    pts = spec.points()
    phi = E.phi(pts)
    fine = _variation(E, spec, pts, phi, None)
    coarse = _variation(E.with_epsilon(2.0 * E.epsilon), spec, pts, phi, None)
    value = (4.0 * fine - coarse) / 3.0
    drift = abs(fine - coarse) / max(abs(fine), 1e-300) if fine else 0.0
    warn = None
    if drift > DRIFT_WARN:
        warn = f"perimeter changed by {drift:.1%} between widths 2eps and eps"
        log.warning(warn)
    return PerimeterEstimate(max(value, 0.0), coarse, fine, drift, warn)


def horizontal_perimeter(E: RegionSpec, spec: GridSpec) -> float:
    return perimeter_estimate(E, spec).value


def region_volume(E: RegionSpec, spec: GridSpec) -> float:
    """|E| from the mollified indicator, Richardson-extrapolated in eps like the perimeter."""
    fine = integrate(mollified_indicator(E, spec))
    coarse = integrate(mollified_indicator(E.with_epsilon(2.0 * E.epsilon), spec))
    return (4.0 * fine - coarse) / 3.0


def coarea_check(u: GridFunction, levels: int = 64, width: float = 1.5) -> ExperimentReport:
    """int |Xu| against int Per({u > t}) dt on ``levels`` midpoint nodes.

    Level sets are {u - t > 0}, mollified with eps = width * (level step); the
    t-range is widened by 2 eps on both sides so no node sits on an extreme
    value of u.
    """
    spec = u.spec
    grad = np.stack([g.samples for g in horizontal_gradient(u)], axis=-1).reshape(-1, u.group.horizontal_count)
    gmag = np.sqrt(np.sum(grad * grad, axis=-1))
    lhs = float(np.sum(gmag)) * spec.cell_weight
    vals = u.samples.ravel()
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo == 0.0:
        return ExperimentReport.judge("coarea", u.group.tag, None, 0.0, 0.0, TolerancePolicy(0.02, "relative gap <= 0.02"))
    eps = width * (hi - lo) / levels
    for _ in range(3):
        a, b = lo - 4.0 * eps, hi + 4.0 * eps
        dt = (b - a) / levels
        eps = width * dt
    t = a + (np.arange(levels) + 0.5) * dt
    per_fine = np.empty(levels)
    per_coarse = np.empty(levels)
    for k, tk in enumerate(t):
        s = (vals - tk) / eps
        per_fine[k] = np.sum(ramp_prime(s) / eps * gmag) * spec.cell_weight
        per_coarse[k] = np.sum(ramp_prime(0.5 * s) / (2.0 * eps) * gmag) * spec.cell_weight
    per = (4.0 * per_fine - per_coarse) / 3.0
    rhs = float(np.sum(per) * dt)
    gap = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    flat = int(np.count_nonzero(per_fine < 1e-12 * max(per_fine.max(), 1e-300)))
    rep = ExperimentReport.judge(
        "coarea",
        u.group.tag,
        None,
        gap,
        0.02,
        TolerancePolicy(1.0, "relative gap <= 0.02"),
        {"total_variation": lhs, "level_integral": rhs, "levels": levels, "t_range": [float(a), float(b)], "empty_levels": flat},
    )
    return rep


def isoperimetric_ratio(E: RegionSpec, spec: GridSpec, scales=(0.5, 1.0, 2.0)) -> ExperimentReport:
    """rho(E) = |E|^(1 - 1/Q) / Per(E), checked for invariance over dilations on dilated grids."""
    Q = E.group.homogeneous_dimension
    rhos = []
    for r in scales:
        Er = E.dilated(r)
        sr = spec.dilated(E.group, r)
        per = horizontal_perimeter(Er, sr)
        if not per > 0:
            raise ValueError("degenerate region: horizontal perimeter is zero")
        rhos.append(region_volume(Er, sr) ** (1.0 - 1.0 / Q) / per)
    base = rhos[list(scales).index(1.0)] if 1.0 in scales else rhos[0]
    drift = max(abs(x / base - 1.0) for x in rhos)
    return ExperimentReport.judge(
        "isoperimetric",
        E.group.tag,
        None,
        drift,
        0.01,
        TolerancePolicy(1.0, "max |rho(delta_r E)/rho(E) - 1| <= 0.01"),
        {"rho": base, "rho_by_scale": dict(zip([str(s) for s in scales], rhos)), "shape": E.shape, "params": list(E.params)},
    )
