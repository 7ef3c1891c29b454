"""Riesz potentials by subordination to the heat semigroup.

    I_alpha(x) = (1 / Gamma(alpha/2)) int_0^inf t^(alpha/2 - 1) p_t(x) dt

The t-integral is a trapezoid rule in log t on [t_min, t_max] with analytic
corrections for both ends.  Because convolution is linear, the potential of
a grid function is one convolution with the accumulated lattice kernel.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma

from .grid import GridFunction, GridSpec, horizontal_gradient
from .group import GroupDescriptor, heat_scale_at_zero, homogeneous_norm
from .heat import _euclidean_factors, _outer, heat_kernel, heisenberg_terms
from .lattice import CentralFourier, LatticeKernel, apply_kernel, apply_kernel_at, offset_axes

log = logging.getLogger(__name__)

RIESZ_PAD = 4
TAIL_WARN = 0.01


class SingularityError(ValueError):
    """The Riesz kernel was requested at the identity."""


class TailWarning(UserWarning):
    """The analytic large-t tail is a sizeable part of the result."""


@dataclass(frozen=True)
class SubordinationRule:
    alpha: float
    t_min: float = 1e-4
    t_max: float = 1e4
    nodes_per_decade: int = 16

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.t_min < self.t_max:
            raise ValueError("need 0 < t_min < t_max")
        if self.nodes_per_decade < 8:
            raise ValueError("nodes_per_decade must be at least 8")

    def validate(self, g: GroupDescriptor) -> None:
        if not 0 < self.alpha < g.homogeneous_dimension:
            raise ValueError(f"alpha must lie in (0, {g.homogeneous_dimension}) for {g.tag}")

    @property
    def nodes(self) -> np.ndarray:
        k = int(round(self.nodes_per_decade * math.log10(self.t_max / self.t_min)))
        return self.t_min * 10.0 ** (np.arange(k + 1) / self.nodes_per_decade)

    @property
    def weights(self) -> np.ndarray:
        """w_k with sum_k w_k F(t_k) ~ (1/Gamma) int t^(alpha/2-1) F(t) dt over [t_min, t_max]."""
        t = self.nodes
        w = np.full(len(t), math.log(10.0) / self.nodes_per_decade)
        w[[0, -1]] *= 0.5
        return w * t ** (0.5 * self.alpha) / gamma(0.5 * self.alpha)

    def refined(self) -> "SubordinationRule":
        return SubordinationRule(self.alpha, self.t_min, self.t_max, 2 * self.nodes_per_decade)

    def with_alpha(self, alpha: float) -> "SubordinationRule":
        return SubordinationRule(alpha, self.t_min, self.t_max, self.nodes_per_decade)


def euclidean_riesz_constant(d: int, alpha: float) -> float:
    """c with I_alpha(x) = c |x|^(alpha - d) on R^d."""
    return gamma(0.5 * (d - alpha)) / (2.0**alpha * math.pi ** (0.5 * d) * gamma(0.5 * alpha))


def riesz_kernel(g: GroupDescriptor, rule: SubordinationRule, p, return_tails: bool = False):
    """I_alpha(p) by log-trapezoid subordination; p has shape (..., d)."""
    rule.validate(g)
    p = np.asarray(p, dtype=float)
    if np.any(homogeneous_norm(g, p) == 0.0):
        raise SingularityError("the Riesz kernel is singular at the identity")
    t = rule.nodes
    vals = np.stack([np.asarray(heat_kernel(g, tk, p), dtype=float) for tk in t])
    body = np.tensordot(rule.weights, vals, axes=1)
    q2 = 0.5 * g.homogeneous_dimension
    a2 = 0.5 * rule.alpha
    gam = gamma(a2)
    # p_t ~ p_T (T/t)^(Q/2) past T; below t_min p_t(x) <= p_{t_min}(x) when t_min << |x|^2
    large = vals[-1] * rule.t_max**a2 / ((q2 - a2) * gam)
    small = vals[0] * rule.t_min**a2 / (a2 * gam)
    out = body + large
    if return_tails:
        return out, large, small
    return float(out) if out.ndim == 0 else out


def _heisenberg_riesz_values(spec: GridSpec, rule: SubordinationRule, j, reflect, pad) -> np.ndarray:
    fourier = CentralFourier(spec, pad)
    off1, off2 = offset_axes(spec)[:2]
    h1, h2 = spec.spacing[:2]
    t = rule.nodes
    w = rule.weights
    a2 = 0.5 * rule.alpha
    gam = gamma(a2)
    ends = np.array([rule.t_min, rule.t_max])
    values = np.zeros((len(off1), len(off2), fourier.modes), dtype=complex)
    for m, lam in enumerate(fourier.lam):
        for coef, f1, f2 in heisenberg_terms(lam, t, off1, off2, h1, h2, j, reflect):
            values[:, :, m] += (f1.T * (w * coef)) @ f2
        # the lattice kernel is constant in t near 0 and decays like t^-1
        # (central mode) or exp(-lam t) (other modes) for large t
        tail_w = np.array([rule.t_min**a2 / a2, 0.0])
        if lam == 0.0:
            tail_w[1] = rule.t_max**a2 / (1.0 - a2)
        else:
            tail_w[1] = rule.t_max ** (a2 - 1.0) / lam
        for coef, f1, f2 in heisenberg_terms(lam, ends, off1, off2, h1, h2, j, reflect):
            values[:, :, m] += (f1.T * (tail_w * coef / gam)) @ f2
    return values


@lru_cache(maxsize=32)
def riesz_lattice_kernel(
    spec: GridSpec,
    group: GroupDescriptor,
    rule: SubordinationRule,
    j: int | None = None,
    reflect: bool = False,
    pad: int = RIESZ_PAD,
) -> LatticeKernel:
    """Accumulated cell-averaged kernel sum_k w_k K_{t_k} plus end corrections.

    With ``j`` the kernel is X_j I_alpha (reflected if requested).
    On H1 the central coordinate is periodised, which limits alpha to (0, 2).
    """
    rule.validate(group)
    if group.is_euclidean:
        d = group.topological_dimension
        acc = None
        for tk, wk in zip(rule.nodes, rule.weights):
            k = _outer(_euclidean_factors(spec, tk, j, reflect)) * wk
            acc = k if acc is None else acc + k
        a2 = 0.5 * rule.alpha
        gam = gamma(a2)
        decay = 0.5 * (d + (0 if j is None else 1))
        acc += _outer(_euclidean_factors(spec, rule.t_min, j, reflect)) * (rule.t_min**a2 / (a2 * gam))
        acc += _outer(_euclidean_factors(spec, rule.t_max, j, reflect)) * (rule.t_max**a2 / ((decay - a2) * gam))
        return LatticeKernel(spec, group, acc, pad)
    if rule.alpha >= 2.0:
        raise ValueError("lattice Riesz kernels on H1 are limited to alpha < 2")
    return LatticeKernel(spec, group, _heisenberg_riesz_values(spec, rule, j, reflect, pad), pad)


def _tail_fraction(f: GridFunction, rule: SubordinationRule, result: np.ndarray) -> float:
    """Size of the large-t correction relative to the result, bounded by p_T(0) ||f||_1."""
    g = f.group
    a2 = 0.5 * rule.alpha
    q2 = 0.5 * g.homogeneous_dimension
    p0 = heat_scale_at_zero(g) * rule.t_max ** (-q2)
    tail = p0 * rule.t_max**a2 / ((q2 - a2) * gamma(a2)) * float(np.sum(np.abs(f.samples))) * f.spec.cell_weight
    top = float(np.max(np.abs(result))) if result.size else 0.0
    return tail / top if top > 0 else 0.0


def _warn_tail(f, rule, result) -> None:
    frac = _tail_fraction(f, rule, result)
    if frac > TAIL_WARN:
        warnings.warn(f"large-t tail is {frac:.2%} of the Riesz potential; raise t_max", TailWarning, stacklevel=3)


def riesz_potential(f: GridFunction, rule: SubordinationRule, pad: int = RIESZ_PAD) -> GridFunction:
    """I_alpha f on the grid of f."""
    out = apply_kernel(f, riesz_lattice_kernel(f.spec, f.group, rule, pad=pad))
    _warn_tail(f, rule, out.samples)
    return out


def riesz_potential_at(f: GridFunction, rule: SubordinationRule, index, pad: int = RIESZ_PAD) -> np.ndarray:
    """I_alpha f at lattice nodes given by an integer (P, d) index array."""
    vals = apply_kernel_at(f, riesz_lattice_kernel(f.spec, f.group, rule, pad=pad), index)
    _warn_tail(f, rule, vals)
    return vals


def riesz_of_hgrad(u: GridFunction, rule: SubordinationRule, j: int, pad: int = RIESZ_PAD) -> GridFunction:
    """I_alpha X_j u with the finite-difference horizontal gradient (j is 1-based)."""
    return riesz_potential(_component(u, j), rule, pad)


def riesz_of_hgrad_at(u: GridFunction, rule: SubordinationRule, j: int, index, pad: int = RIESZ_PAD) -> np.ndarray:
    return riesz_potential_at(_component(u, j), rule, index, pad)


def _component(u: GridFunction, j: int) -> GridFunction:
    if not 1 <= j <= u.group.horizontal_count:
        raise ValueError(f"field index j must lie in 1..{u.group.horizontal_count}")
    return horizontal_gradient(u)[j - 1]
