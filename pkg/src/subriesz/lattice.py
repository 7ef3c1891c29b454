"""Fast convolution with analytically known kernels on a GridSpec lattice.

Kernels are represented by their cell averages on the offset lattice
(offsets ``-(n-1) .. n-1`` per axis), so that convolution reproduces the
mass of a kernel even when it is narrower than a grid cell.

On H1 the central coordinate is handled spectrally: samples are
zero-padded to a period ``pad * n_u * h_u`` and the group convolution
becomes a twisted convolution in (x, y) for each central frequency.  The
kernels used are the exact kernels of the quotient of H1 by the central
lattice of that period.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import fftconvolve

from .grid import GridFunction, GridSpec
from .group import GroupDescriptor

DEFAULT_PAD = 2


class CentralFourier:
    """Partial Fourier transform in the central coordinate of an H1 grid."""

    def __init__(self, spec: GridSpec, pad: int = DEFAULT_PAD):
        if spec.ndim != 3:
            raise ValueError("central Fourier transform needs a 3-d grid")
        self.spec = spec
        self.n = spec.resolution[2]
        self.h = spec.spacing[2]
        length = int(pad * self.n)
        self.length = length + (length % 2)
        self.period = self.length * self.h
        self.lam = 2.0 * np.pi * np.arange(self.length // 2 + 1) / self.period
        self.u0 = spec.lower[2]
        self._shift = np.exp(-1j * self.lam * self.u0)

    @property
    def modes(self) -> int:
        return len(self.lam)

    def forward(self, samples: np.ndarray) -> np.ndarray:
        """int f(., u) exp(-i lam u) du by the rectangle rule, shape (..., modes)."""
        return np.fft.rfft(samples, n=self.length, axis=-1) * (self.h * self._shift)

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        out = np.fft.irfft(spectrum * np.conj(self._shift), n=self.length, axis=-1)
        return out[..., : self.n] / self.h

    def inverse_at(self, spectrum: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Inverse transform at arbitrary central coordinates; spectrum (..., P, modes), u (P,)."""
        weights = np.full(self.modes, 2.0)
        weights[0] = 1.0
        if self.length % 2 == 0:
            weights[-1] = 1.0
        phase = np.exp(1j * np.outer(u, self.lam)) * weights
        return np.sum((spectrum * phase).real, axis=-1) / self.period


@dataclass(frozen=True)
class LatticeKernel:
    """Cell-averaged kernel on the offset lattice of ``spec``.

    Euclidean: real array of shape ``(2n_1-1, ..., 2n_d-1)``.
    H1: complex array ``(2n_1-1, 2n_2-1, modes)`` holding the partial Fourier
    transform in the central coordinate, for the modes of ``fourier``.
    """

    spec: GridSpec
    group: GroupDescriptor
    values: np.ndarray
    pad: int = DEFAULT_PAD

    @cached_property
    def fourier(self) -> CentralFourier | None:
        return None if self.group.is_euclidean else CentralFourier(self.spec, self.pad)

    @classmethod
    def from_samples(cls, g: GridFunction, pad: int = DEFAULT_PAD) -> "LatticeKernel":
        """Kernel given by node samples of ``g`` (zero off the box), as in the direct sum.

        Needs a grid with the identity at a node so that node differences
        are lattice offsets.
        """
        spec = g.spec
        origin = spec.origin_index()
        if origin is None:
            raise ValueError("kernel grid must contain the identity as a node")
        n = spec.resolution
        if g.group.is_euclidean:
            values = np.zeros(tuple(2 * k - 1 for k in n))
            sl = tuple(slice(k - 1 - o, 2 * k - 1 - o) for k, o in zip(n, origin))
            values[sl] = g.samples
            return cls(spec, g.group, values, pad)
        fourier = CentralFourier(spec, pad)
        vals = fourier.forward(g.samples)
        values = np.zeros((2 * n[0] - 1, 2 * n[1] - 1, fourier.modes), dtype=complex)
        values[n[0] - 1 - origin[0] : 2 * n[0] - 1 - origin[0], n[1] - 1 - origin[1] : 2 * n[1] - 1 - origin[1]] = vals
        return cls(spec, g.group, values, pad)

    def __add__(self, other: "LatticeKernel") -> "LatticeKernel":
        return LatticeKernel(self.spec, self.group, self.values + other.values, self.pad)

    def scaled(self, c) -> "LatticeKernel":
        return LatticeKernel(self.spec, self.group, self.values * c, self.pad)


class CentralShift:
    """Fourier multiplier of reading f(u + c) by linear interpolation on the u-lattice.

    With c = (n + theta) h the interpolated shift is the lattice convolution
    (1 - theta) f(u + n h) + theta f(u + (n + 1) h), whose multiplier is
    exp(i lam n h) ((1 - theta) + theta exp(i lam h)).  Being a convex
    combination of lattice shifts it preserves positivity.
    """

    def __init__(self, c: np.ndarray, h: float):
        q = np.asarray(c, dtype=float) / h
        n = np.floor(q)
        self.theta = q - n
        self.nh = n * h
        self.h = h

    def multiplier(self, lam: float) -> np.ndarray:
        return np.exp(1j * lam * self.nh) * ((1.0 - self.theta) + self.theta * np.exp(1j * lam * self.h))


def offset_axes(spec: GridSpec) -> list[np.ndarray]:
    return [h * np.arange(-(n - 1), n) for h, n in zip(spec.spacing, spec.resolution)]


def _check(f: GridFunction, k: LatticeKernel) -> None:
    if f.spec != k.spec or f.group != k.group:
        raise ValueError("kernel was built for a different grid or group")


def apply_kernel(f: GridFunction, k: LatticeKernel) -> GridFunction:
    """f * k on the full lattice."""
    _check(f, k)
    spec = f.spec
    if f.group.is_euclidean:
        full = fftconvolve(f.samples, k.values, mode="full")
        sl = tuple(slice(n - 1, 2 * n - 1) for n in spec.resolution)
        return f.with_samples(full[sl] * spec.cell_weight)
    fourier = k.fourier
    spectrum = twisted_sum(fourier.forward(f.samples), k.values, spec, fourier.lam)
    return f.with_samples(fourier.inverse(spectrum.reshape(spec.resolution[:2] + (-1,))))


def apply_kernel_at(f: GridFunction, k: LatticeKernel, index: np.ndarray) -> np.ndarray:
    """f * k at lattice nodes given as an (P, d) integer index array."""
    _check(f, k)
    index = np.atleast_2d(np.asarray(index, dtype=np.int64))
    if f.group.is_euclidean:
        return apply_kernel(f, k).samples[tuple(index.T)]
    fourier = k.fourier
    zkeys, zinv = unique_planar(index, f.spec)
    spectrum = twisted_sum(fourier.forward(f.samples), k.values, f.spec, fourier.lam, zsel=zkeys)
    u = f.spec.axes()[2][index[:, 2]]
    return fourier.inverse_at(spectrum[zinv], u)


def unique_planar(index: np.ndarray, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unique flattened (x, y) node indices of an H1 index array, plus the inverse map."""
    flat = index[:, 0] * spec.resolution[1] + index[:, 1]
    return np.unique(flat, return_inverse=True)


def twisted_sum(
    spectrum: np.ndarray,
    kernel: np.ndarray,
    spec: GridSpec,
    lam: np.ndarray,
    zsel: np.ndarray | None = None,
    chunk: int = 2**21,
) -> np.ndarray:
    """sum_s F(s, lam) exp(i lam w(z, s) / 2) K(z - s, lam) dx dy for each mode.

    ``spectrum`` has shape (n1, n2, modes); returns (Z, modes) with Z the
    selected planar nodes (all of them by default, C order).
    """
    n1, n2 = spec.resolution[:2]
    x, y = spec.axes()[:2]
    hu = spec.spacing[2]
    if zsel is None:
        zsel = np.arange(n1 * n2)
    zi1, zi2 = np.divmod(zsel, n2)
    fs = spectrum.reshape(n1 * n2, -1)
    active = np.flatnonzero(np.any(fs != 0, axis=1))
    si1, si2 = np.divmod(active, n2)
    fs = fs[active]
    kflat = kernel.reshape((2 * n1 - 1) * (2 * n2 - 1), -1)
    out = np.zeros((len(zsel), len(lam)), dtype=complex)
    if len(active) == 0:
        return out
    rows = max(1, chunk // len(active))
    for start in range(0, len(zsel), rows):
        a1, a2 = zi1[start : start + rows], zi2[start : start + rows]
        off = (a1[:, None] - si1[None, :] + n1 - 1) * (2 * n2 - 1) + (a2[:, None] - si2[None, :] + n2 - 1)
        omega = x[a1][:, None] * y[si2][None, :] - y[a2][:, None] * x[si1][None, :]
        shift = CentralShift(0.5 * omega, hu)
        for m, lm in enumerate(lam):
            mat = kflat[off, m]
            if lm != 0.0:
                mat = mat * shift.multiplier(lm)
            out[start : start + rows, m] = mat @ fs[:, m]
    return out * (spec.spacing[0] * spec.spacing[1])
