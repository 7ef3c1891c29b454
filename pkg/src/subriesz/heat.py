"""Heat kernel of the sub-Laplacian J = -sum X_j^2 and the semigroup f -> f * p_t.

Euclidean: p_t(x) = (4 pi t)^(-d/2) exp(-|x|^2 / 4t).

H1: partial Fourier transform in the central variable gives the Mehler form

    int p_t(z, u) e^{-i lam u} du = lam / (4 pi sinh(lam t)) * exp(-(lam/4) coth(lam t) |z|^2)

Pointwise values come from a table of p_1 (built by trapezoidal Fourier
inversion, which is spectrally accurate for this analytic integrand) plus
the scaling law p_t(x) = t^(-Q/2) p_1(delta_{t^-1/2} x).  An independent
adaptive QUADPACK route is kept for checks.
"""
from __future__ import annotations

import logging
import math
import os
import threading
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate
from scipy import ndimage
from scipy.special import erf, erfc

from .grid import GridFunction, GridSpec
from .group import GroupDescriptor, dilate, inverse, multiply
from .lattice import (
    DEFAULT_PAD,
    CentralFourier,
    CentralShift,
    LatticeKernel,
    apply_kernel,
    offset_axes,
    unique_planar,
)

log = logging.getLogger(__name__)

CACHE_ENV = "SUBRIESZ_CACHE_DIR"
TABLE_VERSION = 1


class NumericFailure(RuntimeError):
    """A quadrature did not reach its tolerance; ``diagnostics`` says where."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _check_t(t) -> None:
    if not np.all(np.asarray(t) > 0):
        raise ValueError(f"heat time must be positive, got {t}")


# --------------------------------------------------------------------------
# Mehler factors
# --------------------------------------------------------------------------
def mehler_factors(lam, t):
    """Return (lam / (4 pi sinh(lam t)), (lam / 4) coth(lam t)) with the lam -> 0 limits."""
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    x = np.abs(lam) * t
    small = x < 1e-8
    xs = np.where(small, 1.0, x)
    em = np.exp(-2.0 * xs)
    denom = -np.expm1(-2.0 * xs)
    x_over_sinh = np.where(small, 1.0, 2.0 * xs * np.exp(-xs) / denom)
    x_coth = np.where(small, 1.0, xs * (1.0 + em) / denom)
    return x_over_sinh / (4.0 * np.pi * t), x_coth / (4.0 * t)


# --------------------------------------------------------------------------
# Pointwise H1 kernel
# --------------------------------------------------------------------------
def heisenberg_heat_direct(t: float, x: float, y: float, u: float, epsrel: float = 1e-10) -> float:
    """p_t(x, y, u) on H1 by adaptive Gauss-Kronrod quadrature in the central frequency."""
    _check_t(t)
    rho2 = x * x + y * y

    def integrand(lam):
        c, a = mehler_factors(lam, t)
        return float(c * np.exp(-a * rho2))

    # the integrand is below lam exp(-lam t) / (2 pi t), negligible past 60 / t
    upper = 60.0 / t
    with np.errstate(all="ignore"):
        if u == 0.0:
            val, err, info = sp_integrate.quad(integrand, 0.0, upper, epsabs=0.0, epsrel=epsrel, limit=400, full_output=1)[:3]
        else:
            val, err, info = sp_integrate.quad(
                integrand, 0.0, upper, weight="cos", wvar=abs(u), epsabs=0.0, epsrel=epsrel, limit=400, full_output=1
            )[:3]
    scale = 1.0 / (4.0 * np.pi * t)
    if not np.isfinite(val) or err > max(1e4 * epsrel * abs(val), 1e-12 * scale):
        raise NumericFailure(
            "H1 heat-kernel quadrature did not converge",
            {"t": t, "point": (x, y, u), "value": val, "abserr": err, "neval": info.get("neval")},
        )
    return val / np.pi


class HeisenbergHeatTable:
    """Cubic-spline table of p_1 on H1 as a function of (|z|, |u|).

    Outside ``|z| <= rho_max, |u| <= u_max`` the kernel is below 1e-11 of
    p_1(0) = 1/16 and is returned as zero.
    """

    def __init__(self, rho_max: float = 10.0, u_max: float = 12.0, step: float = 0.02, period: float = 40.96):
        self.rho_max, self.u_max, self.step = float(rho_max), float(u_max), float(step)
        self.n_rho = int(round(rho_max / step)) + 1
        self.n_u = int(round(u_max / step)) + 1
        self.period = period
        table = self._load_cached()
        if table is None:
            table = self._build()
            self._store_cached(table)
        self.table = table
        self._coeffs = ndimage.spline_filter(table, order=3, mode="mirror")

    @property
    def cache_name(self) -> str:
        return f"heat_p1_heisenberg1_v{TABLE_VERSION}_{self.n_rho}x{self.n_u}_{self.step:g}.npy"

    def _cache_path(self) -> Path | None:
        root = os.environ.get(CACHE_ENV)
        return Path(root) / self.cache_name if root else None

    def _load_cached(self):
        path = self._cache_path()
        if path is None or not path.exists():
            return None
        arr = np.load(path)
        if arr.shape != (self.n_rho, self.n_u):
            return None
        return arr

    def _store_cached(self, table) -> None:
        path = self._cache_path()
        if path is None:
            return
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, table)
        except OSError as exc:  # cache is optional
            log.warning("could not write heat table cache %s: %s", path, exc)

    def _build(self) -> np.ndarray:
        length = int(round(self.period / self.step))
        dmu = 2.0 * np.pi / (length * self.step)
        mu = dmu * np.fft.fftfreq(length, d=1.0 / length)
        rho2 = (self.step * np.arange(self.n_rho)) ** 2
        c, a = mehler_factors(mu[None, :], 1.0)
        spectrum = c * np.exp(-a * rho2[:, None])
        vals = np.fft.ifft(spectrum, axis=1).real * (length * dmu / (2.0 * np.pi))
        return vals[:, : self.n_u]

    def p1(self, rho, u) -> np.ndarray:
        rho = np.abs(np.asarray(rho, dtype=float))
        u = np.abs(np.asarray(u, dtype=float))
        rho, u = np.broadcast_arrays(rho, u)
        inside = (rho <= self.rho_max) & (u <= self.u_max)
        out = np.zeros(rho.shape)
        if np.any(inside):
            coords = np.stack([rho[inside] / self.step, u[inside] / self.step])
            out[inside] = ndimage.map_coordinates(self._coeffs, coords, order=3, mode="mirror", prefilter=False)
        return out


_TABLE: HeisenbergHeatTable | None = None
_TABLE_LOCK = threading.Lock()


def heisenberg_table() -> HeisenbergHeatTable:
    global _TABLE
    with _TABLE_LOCK:
        if _TABLE is None:
            _TABLE = HeisenbergHeatTable()
        return _TABLE


def heat_kernel(g: GroupDescriptor, t, p, exact: bool = False):
    """p_t(p); vectorised over points (..., d) and over t (broadcast)."""
    _check_t(t)
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != g.topological_dimension:
        raise ValueError("point dimension does not match the group")
    t = np.asarray(t, dtype=float)
    if g.is_euclidean:
        r2 = np.sum(p * p, axis=-1)
        out = (4.0 * np.pi * t) ** (-g.topological_dimension / 2.0) * np.exp(-r2 / (4.0 * t))
    elif exact:
        tt, x, y, u = np.broadcast_arrays(t, p[..., 0], p[..., 1], p[..., 2])
        out = np.array([heisenberg_heat_direct(*args) for args in zip(tt.ravel(), x.ravel(), y.ravel(), u.ravel())])
        out = out.reshape(tt.shape)
    else:
        rho = np.hypot(p[..., 0], p[..., 1])
        out = heisenberg_table().p1(rho / np.sqrt(t), p[..., 2] / t) / (t * t)
    return float(out) if np.ndim(out) == 0 else out


def heat_kernel_hgrad(g: GroupDescriptor, t, p, j: int, reflect: bool = False):
    """(X_j p_t)(p) by centred differences along exp(s X_j), step 1e-3 sqrt(t).

    ``j`` is 1-based.  With ``reflect`` the kernel is evaluated at p^-1,
    i.e. this returns (X_j p_t)^v(p).
    """
    _check_t(t)
    if not 1 <= j <= g.horizontal_count:
        raise ValueError(f"field index j must lie in 1..{g.horizontal_count}")
    p = np.asarray(p, dtype=float)
    if reflect:
        p = inverse(g, p)
    h = 1e-3 * math.sqrt(float(t))
    step = np.zeros(g.topological_dimension)
    step[j - 1] = h
    plus = multiply(g, p, step)
    minus = multiply(g, p, -step)
    return (np.asarray(heat_kernel(g, t, plus)) - np.asarray(heat_kernel(g, t, minus))) / (2.0 * h)


# --------------------------------------------------------------------------
# Cell-averaged lattice kernels
# --------------------------------------------------------------------------
def _erf_diff(lo, hi):
    """erf(hi) - erf(lo) without cancellation in the tails."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    out = erf(hi) - erf(lo)
    pos = lo > 0
    neg = hi < 0
    out = np.where(pos, erfc(lo) - erfc(hi), out)
    out = np.where(neg, erfc(-hi) - erfc(-lo), out)
    return out


def cell_avg_gauss(c, h, a):
    """Average of exp(-a x^2) over [c - h/2, c + h/2]."""
    sa = np.sqrt(a)
    return 0.5 * np.sqrt(np.pi) / (sa * h) * _erf_diff(sa * (c - 0.5 * h), sa * (c + 0.5 * h))


def cell_diff_gauss(c, h, a):
    """Average of 2 a x exp(-a x^2) over [c - h/2, c + h/2]."""
    return (np.exp(-a * (c - 0.5 * h) ** 2) - np.exp(-a * (c + 0.5 * h) ** 2)) / h


def _euclidean_factors(spec: GridSpec, t: float, j: int | None, reflect: bool) -> list[np.ndarray]:
    a = 1.0 / (4.0 * t)
    norm = math.sqrt(a / math.pi)
    factors = []
    for k, (off, h) in enumerate(zip(offset_axes(spec), spec.spacing)):
        if j is not None and k == j - 1:
            sign = 1.0 if reflect else -1.0
            factors.append(sign * norm * cell_diff_gauss(off, h, a))
        else:
            factors.append(norm * cell_avg_gauss(off, h, a))
    return factors


def _outer(factors: list[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def heisenberg_terms(lam: float, t, off1, off2, h1, h2, j: int | None, reflect: bool):
    """Separable terms (coef[T], A1[T, o1], A2[T, o2]) of the cell-averaged kernel transform."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c, a = mehler_factors(lam, t)
    a_ = a[:, None]
    ca1 = cell_avg_gauss(off1[None, :], h1, a_)
    ca2 = cell_avg_gauss(off2[None, :], h2, a_)
    if j is None:
        return [(c.astype(complex), ca1, ca2)]
    dg1 = cell_diff_gauss(off1[None, :], h1, a_)
    dg2 = cell_diff_gauss(off2[None, :], h2, a_)
    twist = 1j * lam * c / (4.0 * a)
    sign = 1.0 if reflect else -1.0
    if j == 1:
        return [(sign * c + 0j, dg1, ca2), (-twist, ca1, dg2)]
    if j == 2:
        return [(sign * c + 0j, ca1, dg2), (twist, dg1, ca2)]
    raise ValueError("H1 has two horizontal fields")


def heat_lattice_kernel(
    spec: GridSpec,
    group: GroupDescriptor,
    t: float,
    j: int | None = None,
    reflect: bool = False,
    pad: int = DEFAULT_PAD,
) -> LatticeKernel:
    """Cell-averaged p_t (or X_j p_t, optionally reflected) on the offset lattice."""
    _check_t(t)
    if group.is_euclidean:
        return LatticeKernel(spec, group, _outer(_euclidean_factors(spec, t, j, reflect)), pad)
    fourier = CentralFourier(spec, pad)
    off1, off2 = offset_axes(spec)[:2]
    h1, h2 = spec.spacing[:2]
    values = np.zeros((len(off1), len(off2), fourier.modes), dtype=complex)
    for m, lam in enumerate(fourier.lam):
        for coef, a1, a2 in heisenberg_terms(lam, t, off1, off2, h1, h2, j, reflect):
            values[:, :, m] += coef[0] * np.multiply.outer(a1[0], a2[0])
    return LatticeKernel(spec, group, values, pad)


def semigroup_apply(f: GridFunction, t: float, pad: int = DEFAULT_PAD) -> GridFunction:
    """f * p_t with the cell-averaged kernel."""
    return apply_kernel(f, heat_lattice_kernel(f.spec, f.group, t, pad=pad))


def heat_family(
    f: GridFunction,
    ts,
    j: int | None = None,
    reflect: bool = True,
    index: np.ndarray | None = None,
    pad: int = DEFAULT_PAD,
) -> np.ndarray:
    """f * k_t for every t in ``ts``; k_t = p_t, or (X_j p_t) (reflected by default).

    Returns shape (T, *grid shape) or, with ``index`` (P, d), shape (T, P).
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    _check_t(ts)
    if j is not None and not 1 <= j <= f.group.horizontal_count:
        raise ValueError(f"field index j must lie in 1..{f.group.horizontal_count}")
    if index is not None:
        index = np.atleast_2d(np.asarray(index, dtype=np.int64))
    if f.group.is_euclidean:
        out = []
        for t in ts:
            vals = apply_kernel(f, heat_lattice_kernel(f.spec, f.group, t, j, reflect, pad)).samples
            out.append(vals[tuple(index.T)] if index is not None else vals)
        return np.asarray(out)
    return _heisenberg_family(f, ts, j, reflect, index, pad)


def _heisenberg_family(f, ts, j, reflect, index, pad, zchunk: int = 128):
    spec = f.spec
    n1, n2, _ = spec.resolution
    h1, h2, hu = spec.spacing
    x, y = spec.axes()[:2]
    fourier = CentralFourier(spec, pad)
    spectrum = fourier.forward(f.samples)
    off1, off2 = offset_axes(spec)[:2]
    if index is None:
        zkeys = np.arange(n1 * n2)
    else:
        zkeys, zinv = unique_planar(index, spec)
    zi1, zi2 = np.divmod(zkeys, n2)
    T = len(ts)
    hhat = np.zeros((len(zkeys), T, fourier.modes), dtype=complex)
    s1 = np.arange(n1)
    s2 = np.arange(n2)
    for m, lam in enumerate(fourier.lam):
        terms = heisenberg_terms(lam, ts, off1, off2, h1, h2, j, reflect)
        fm = spectrum[:, :, m]
        for start in range(0, len(zkeys), zchunk):
            a1 = zi1[start : start + zchunk]
            a2 = zi2[start : start + zchunk]
            if lam != 0.0:
                omega = x[a1][:, None, None] * y[None, None, :] - y[a2][:, None, None] * x[None, :, None]
                b = fm[None, :, :] * CentralShift(0.5 * omega, hu).multiplier(lam)
            else:
                b = np.broadcast_to(fm, (len(a1), n1, n2))
            acc = np.zeros((len(a1), T), dtype=complex)
            for coef, fac1, fac2 in terms:
                g2 = fac2[:, a2[:, None] - s2[None, :] + n2 - 1].transpose(1, 2, 0)
                g1 = fac1[:, a1[:, None] - s1[None, :] + n1 - 1].transpose(1, 2, 0)
                prod = np.matmul(b, g2)
                acc += coef[None, :] * np.einsum("zst,zst->zt", g1, prod)
            hhat[start : start + zchunk, :, m] = acc
    hhat *= h1 * h2
    if index is None:
        grid = hhat.reshape(n1, n2, T, -1).transpose(2, 0, 1, 3)
        return fourier.inverse(grid)
    u = spec.axes()[2][index[:, 2]]
    return fourier.inverse_at(hhat[zinv].transpose(1, 0, 2), u)
