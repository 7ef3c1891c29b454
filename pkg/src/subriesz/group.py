"""Concrete stratified groups: Euclidean space and the first Heisenberg group.

Heisenberg coordinates are (x, y, u) with u central, law

    (x, y, u) . (x', y', u') = (x + x', y + y', u + u' + (x y' - y x') / 2)

so that inversion is negation and Haar measure is Lebesgue measure.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class LawTag(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    HEISENBERG1 = "heisenberg1"


@dataclass(frozen=True)
class GroupDescriptor:
    topological_dimension: int
    dilation_exponents: tuple[int, ...]
    horizontal_count: int
    law_tag: LawTag

    def __post_init__(self):
        if self.topological_dimension < 1:
            raise ValueError("topological_dimension must be positive")
        if len(self.dilation_exponents) != self.topological_dimension:
            raise ValueError("one dilation exponent per coordinate is required")
        if any(e < 1 for e in self.dilation_exponents):
            raise ValueError("dilation exponents must be positive integers")
        if not 1 <= self.horizontal_count <= self.topological_dimension:
            raise ValueError("horizontal_count must lie in [1, topological_dimension]")

    @property
    def homogeneous_dimension(self) -> int:
        return int(sum(self.dilation_exponents))

    @property
    def is_euclidean(self) -> bool:
        return self.law_tag is LawTag.EUCLIDEAN

    @property
    def tag(self) -> str:
        if self.is_euclidean:
            return f"euclidean:{self.topological_dimension}"
        return "heisenberg1"

    def __str__(self) -> str:
        return self.tag


def euclidean(d: int) -> GroupDescriptor:
    return GroupDescriptor(d, (1,) * d, d, LawTag.EUCLIDEAN)


HEISENBERG1 = GroupDescriptor(3, (1, 1, 2), 2, LawTag.HEISENBERG1)


def heisenberg() -> GroupDescriptor:
    return HEISENBERG1


def parse_group(tag: str) -> GroupDescriptor:
    """Parse ``"euclidean:d"`` or ``"heisenberg1"``."""
    tag = tag.strip().lower()
    if tag in ("heisenberg1", "heisenberg", "h1"):
        return HEISENBERG1
    if tag.startswith("euclidean"):
        _, _, d = tag.partition(":")
        try:
            d = int(d) if d else 2
        except ValueError:
            raise ValueError(f"bad euclidean dimension in group tag {tag!r}") from None
        return euclidean(d)
    raise ValueError(f"unknown group tag {tag!r}")


def _as_points(g: GroupDescriptor, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (g.topological_dimension,):
        raise ValueError(
            f"expected points with {g.topological_dimension} coordinates, got shape {p.shape}"
        )
    return p


def multiply(g: GroupDescriptor, p, q) -> np.ndarray:
    """Group product p.q; broadcasts over leading axes."""
    p = _as_points(g, p)
    q = _as_points(g, q)
    out = p + q
    if not g.is_euclidean:
        out = np.array(out, copy=True)
        out[..., 2] += 0.5 * (p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return out


def inverse(g: GroupDescriptor, p) -> np.ndarray:
    return -_as_points(g, p)


def dilate(g: GroupDescriptor, r: float, p) -> np.ndarray:
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    p = _as_points(g, p)
    scale = np.power(float(r), np.asarray(g.dilation_exponents, dtype=float))
    return p * scale


def homogeneous_norm(g: GroupDescriptor, p) -> np.ndarray | float:
    """Euclidean length, or the Koranyi gauge ((x^2 + y^2)^2 + 16 u^2)^(1/4) on H1."""
    p = _as_points(g, p)
    if g.is_euclidean:
        out = np.sqrt(np.sum(p * p, axis=-1))
    else:
        rho2 = p[..., 0] ** 2 + p[..., 1] ** 2
        out = (rho2 * rho2 + 16.0 * p[..., 2] ** 2) ** 0.25
    return float(out) if np.ndim(out) == 0 else out


def horizontal_coefficients(g: GroupDescriptor, p) -> np.ndarray:
    """Coefficient matrix of the horizontal fields at p.

    Returns shape (..., n, d): X_j = sum_i c[j, i] d/dx_i.  On H1,
    X_1 = d_x - (y/2) d_u and X_2 = d_y + (x/2) d_u.
    """
    p = _as_points(g, p)
    n, d = g.horizontal_count, g.topological_dimension
    c = np.zeros(p.shape[:-1] + (n, d))
    for j in range(n):
        c[..., j, j] = 1.0
    if not g.is_euclidean:
        c[..., 0, 2] = -0.5 * p[..., 1]
        c[..., 1, 2] = 0.5 * p[..., 0]
    return c


def translation_jacobian_det(g: GroupDescriptor, q) -> float:
    """|det D(p -> q.p)|, which is identically one for both laws."""
    q = _as_points(g, q)
    d = g.topological_dimension
    jac = np.eye(d)
    if not g.is_euclidean:
        # d/dp of u + u' + (x y' - y x')/2 in the (x', y', u') variables
        jac[2, 0] = -0.5 * q[1]
        jac[2, 1] = 0.5 * q[0]
    return abs(float(np.linalg.det(jac)))


def heat_scale_at_zero(g: GroupDescriptor) -> float:
    """p_1(identity): (4 pi)^(-d/2) on R^d and 1/16 on H1."""
    if g.is_euclidean:
        return (4.0 * math.pi) ** (-g.topological_dimension / 2.0)
    return 0.0625
