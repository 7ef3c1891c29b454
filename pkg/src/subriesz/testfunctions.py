"""Families of smooth compactly supported test functions."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from .geometry import ramp
from .grid import GridFunction, GridSpec, horizontal_gradient
from .group import GroupDescriptor, dilate, homogeneous_norm, inverse, multiply

MARGIN_NODES = 3
SMOOTHNESS_LIMIT = 0.2


class Family(str, Enum):
    GAUSSIAN_BUMP = "gaussian_bump"
    MOLLIFIED_BALL = "mollified_ball"
    ANISOTROPIC_BUMP = "anisotropic_bump"
    DILATED = "dilated"
    TRANSLATED = "translated"
    SUM_OF_BUMPS = "sum_of_bumps"


@dataclass(frozen=True)
class Diagnostics:
    margin_ok: bool
    edge_value: float
    smoothness: float

    @property
    def smooth_ok(self) -> bool:
        return self.smoothness <= SMOOTHNESS_LIMIT


@dataclass(frozen=True)
class TestFunction:
    """A closed-form function on a group; ``realize`` samples it on a grid."""

    __test__ = False  # not a pytest class

    family: Family
    group: GroupDescriptor
    params: tuple[tuple[str, Any], ...]
    children: tuple["TestFunction", ...] = ()

    def param(self, key: str):
        return dict(self.params)[key]

    @property
    def label(self) -> str:
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in self.params)
        kids = ";".join(c.label for c in self.children)
        return f"{self.family.value}({inner}{'|' + kids if kids else ''})"

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "params": {k: list(v) if isinstance(v, tuple) else v for k, v in self.params},
            "children": [c.to_dict() for c in self.children],
        }

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        g = self.group
        fam = self.family
        if fam == Family.GAUSSIAN_BUMP:
            w = np.asarray(self.param("widths"))
            z = np.sqrt(np.sum((p / w) ** 2, axis=-1))
            # Gaussian cut off smoothly between 3 and 4 widths
            return self.param("amplitude") * np.exp(-0.5 * z * z) * ramp(2.0 * (3.5 - z))
        if fam == Family.ANISOTROPIC_BUMP:
            a = np.asarray(self.param("radii"))
            s = np.sum((p / a) ** 2, axis=-1)
            inside = s < 1.0
            out = np.zeros(s.shape)
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
            return self.param("amplitude") * out
        if fam == Family.MOLLIFIED_BALL:
            n = homogeneous_norm(g, p)
            return self.param("amplitude") * ramp((self.param("radius") - n) / self.param("eps"))
        if fam == Family.DILATED:
            return self.children[0](dilate(g, 1.0 / self.param("r"), p))
        if fam == Family.TRANSLATED:
            c = np.asarray(self.param("center"))
            return self.children[0](multiply(g, inverse(g, c), p))
        if fam == Family.SUM_OF_BUMPS:
            return sum(w * c(p) for w, c in zip(self.param("weights"), self.children))
        raise ValueError(f"unknown family {fam}")

    def realize(self, spec: GridSpec) -> GridFunction:
        return GridFunction(spec, self(spec.points()).reshape(spec.shape), self.group)

    def diagnostics(self, spec: GridSpec, f: GridFunction | None = None) -> Diagnostics:
        f = f if f is not None else self.realize(spec)
        s = np.abs(f.samples)
        top = float(s.max())
        inner = tuple(slice(MARGIN_NODES, n - MARGIN_NODES) for n in spec.resolution)
        shell = s.copy()
        shell[inner] = 0.0
        edge = float(shell.max()) / top if top > 0 else 0.0
        rng = float(f.samples.max() - f.samples.min())
        grads = horizontal_gradient(f)
        sm = max(float(np.abs(gj.samples).max()) * h for gj, h in zip(grads, spec.spacing))
        return Diagnostics(edge <= 1e-9, edge, sm / rng if rng > 0 else 0.0)

    def validated(self, spec: GridSpec, strict_smoothness: bool = False) -> GridFunction:
        """Realise and check the support margin (and optionally grid-scale smoothness)."""
        f = self.realize(spec)
        d = self.diagnostics(spec, f)
        if not d.margin_ok:
            raise ValueError(f"{self.label}: support reaches within {MARGIN_NODES} nodes of the box edge")
        if strict_smoothness and not d.smooth_ok:
            raise ValueError(f"{self.label}: too rough for the grid (index {d.smoothness:.3f})")
        return f

    def scaled(self, c: float) -> "TestFunction":
        return sum_of_bumps_from([self], [c])


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return "(" + ",".join(_fmt(x) for x in v) + ")"
    return f"{v:g}" if isinstance(v, float) else str(v)


def _vec(x, d: int) -> tuple[float, ...]:
    x = np.broadcast_to(np.asarray(x, dtype=float), (d,))
    return tuple(float(v) for v in x)


def gaussian_bump(group: GroupDescriptor, widths, amplitude: float = 1.0) -> TestFunction:
    return TestFunction(Family.GAUSSIAN_BUMP, group, (("widths", _vec(widths, group.topological_dimension)), ("amplitude", float(amplitude))))


def anisotropic_bump(group: GroupDescriptor, radii, amplitude: float = 1.0) -> TestFunction:
    return TestFunction(Family.ANISOTROPIC_BUMP, group, (("radii", _vec(radii, group.topological_dimension)), ("amplitude", float(amplitude))))


def mollified_ball(group: GroupDescriptor, radius: float, eps: float, amplitude: float = 1.0) -> TestFunction:
    return TestFunction(Family.MOLLIFIED_BALL, group, (("radius", float(radius)), ("eps", float(eps)), ("amplitude", float(amplitude))))


def dilated(u: TestFunction, r: float) -> TestFunction:
    """u o delta_{1/r}: the same shape at r times the scale."""
    return TestFunction(Family.DILATED, u.group, (("r", float(r)),), (u,))


def translated(u: TestFunction, center) -> TestFunction:
    """Left translate p -> u(center^-1 p)."""
    return TestFunction(Family.TRANSLATED, u.group, (("center", _vec(center, u.group.topological_dimension)),), (u,))


def sum_of_bumps_from(parts, weights) -> TestFunction:
    parts = tuple(parts)
    return TestFunction(Family.SUM_OF_BUMPS, parts[0].group, (("weights", tuple(float(w) for w in weights)),), parts)


def sum_of_bumps(group: GroupDescriptor, centers, widths, weights) -> TestFunction:
    parts = [translated(gaussian_bump(group, w), c) for c, w in zip(centers, widths)]
    return sum_of_bumps_from(parts, weights)


def standard_family(group: GroupDescriptor, half_width: float = 4.0) -> list[TestFunction]:
    """Ten members spanning three dyadic scales, sized for a box of the given half-width.

    On the Heisenberg group the box is twice as long in u, so every member
    is stretched by 2 in that coordinate.
    """
    d = group.topological_dimension
    s = half_width / 4.0
    stretch = np.ones(d)
    if not group.is_euclidean:
        stretch[group.horizontal_count:] = 2.0

    def w(x):
        return tuple(float(v) for v in s * x * stretch)

    def c(*x):
        v = np.zeros(d)
        x = x[:d]
        v[: len(x)] = x
        return tuple(float(t) for t in s * v * stretch)

    return [
        gaussian_bump(group, w(0.2)),
        gaussian_bump(group, w(0.4)),
        gaussian_bump(group, w(0.7)),
        anisotropic_bump(group, w(0.75)),
        anisotropic_bump(group, w(1.5)),
        anisotropic_bump(group, w(3.0)),
        mollified_ball(group, s * 1.0, s * 0.5),
        mollified_ball(group, s * 2.0, s * 1.0),
        translated(gaussian_bump(group, w(0.5)), c(0.8, -0.5, 0.5)),
        sum_of_bumps(group, [c(-1.0), c(1.0, 0.5)], [w(0.35), w(0.45)], [1.0, -0.7]),
    ]
