"""Sampled functions on rectangular coordinate grids.

Nodes sit at ``lower + i * spacing`` for ``i = 0 .. resolution - 1`` so the
origin is a node whenever ``lower / spacing`` is an integer.  Functions are
extended by zero outside the box.
"""
from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .group import GroupDescriptor, horizontal_coefficients, inverse, multiply, parse_group

_MAGIC = b"SRGF"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    resolution: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        if not len(self.lower) == len(self.upper) == len(self.resolution):
            raise ValueError("lower, upper and resolution must have equal length")
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValueError("upper must exceed lower componentwise")
        if any(n < 1 for n in self.resolution):
            raise ValueError("resolution must be positive")

    @classmethod
    def cube(cls, half_widths, resolution) -> "GridSpec":
        half_widths = tuple(float(h) for h in half_widths)
        if isinstance(resolution, int):
            resolution = (resolution,) * len(half_widths)
        return cls(tuple(-h for h in half_widths), half_widths, tuple(resolution))

    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((u - l) / n for l, u, n in zip(self.lower, self.upper, self.resolution))

    @property
    def cell_weight(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    def axes(self) -> list[np.ndarray]:
        return [l + h * np.arange(n) for l, h, n in zip(self.lower, self.spacing, self.resolution)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an (N, d) array in C order (last coordinate fastest)."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def origin_index(self) -> tuple[int, ...] | None:
        idx = []
        for l, h in zip(self.lower, self.spacing):
            k = -l / h
            if abs(k - round(k)) > 1e-9:
                return None
            idx.append(int(round(k)))
        return tuple(idx)

    def dilated(self, group: GroupDescriptor, r: float) -> "GridSpec":
        """Box mapped by the group dilation; the lattice maps onto the lattice."""
        s = [r ** e for e in group.dilation_exponents]
        return GridSpec(
            tuple(l * f for l, f in zip(self.lower, s)),
            tuple(u * f for u, f in zip(self.upper, s)),
            self.resolution,
        )

    def refined(self, resolution) -> "GridSpec":
        if isinstance(resolution, int):
            resolution = (resolution,) * self.ndim
        return GridSpec(self.lower, self.upper, tuple(resolution))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "resolution": list(self.resolution)}


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    samples: np.ndarray = field(repr=False)
    group: GroupDescriptor

    def __post_init__(self):
        a = np.array(self.samples, dtype=float)
        if a.size != self.spec.size:
            raise ValueError(f"expected {self.spec.size} samples, got {a.size}")
        a = a.reshape(self.spec.shape)
        if not np.all(np.isfinite(a)):
            raise ValueError("grid samples must be finite")
        if self.group.topological_dimension != self.spec.ndim:
            raise ValueError("grid dimension does not match the group")
        a.flags.writeable = False
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_callable(cls, spec: GridSpec, group: GroupDescriptor, fn) -> "GridFunction":
        return cls(spec, fn(*spec.mesh()), group)

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.spec, samples, self.group)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_compatible(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_compatible(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c) -> "GridFunction":
        if isinstance(c, GridFunction):
            _check_compatible(self, c)
            return self.with_samples(self.samples * c.samples)
        return self.with_samples(self.samples * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self.with_samples(-self.samples)

    def abs(self) -> "GridFunction":
        return self.with_samples(np.abs(self.samples))

    def power(self, gamma: float) -> "GridFunction":
        return self.with_samples(np.abs(self.samples) ** gamma)

    def at(self, points) -> np.ndarray:
        """Multilinear interpolation at arbitrary points (zero outside the box)."""
        return interpolate(self.samples, self.spec, points)

    # -- serialization -------------------------------------------------------
    def header(self) -> dict:
        return {"version": _FORMAT_VERSION, "group": self.group.tag, "order": "C", **self.spec.to_dict()}

    def save(self, path) -> Path:
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with open(path, "w", newline="") as fh:
                fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
                fh.write("value\n")
                for v in self.samples.ravel().tolist():
                    fh.write(f"{v!r}\n")
        else:
            head = json.dumps(self.header(), sort_keys=True).encode()
            with open(path, "wb") as fh:
                fh.write(_MAGIC + struct.pack("<I", len(head)) + head)
                fh.write(np.ascontiguousarray(self.samples, dtype="<f8").tobytes())
        return path

    @classmethod
    def load(cls, path) -> "GridFunction":
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with open(path) as fh:
                first = fh.readline()
                if not first.startswith("#"):
                    raise ValueError(f"{path}: missing header line")
                head = json.loads(first[1:])
                fh.readline()
                values = np.loadtxt(fh, dtype=float, ndmin=1)
        else:
            raw = path.read_bytes()
            if raw[:4] != _MAGIC:
                raise ValueError(f"{path}: not a grid-function file")
            (n,) = struct.unpack("<I", raw[4:8])
            head = json.loads(raw[8 : 8 + n])
            values = np.frombuffer(raw[8 + n :], dtype="<f8")
        if head.get("version") != _FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {head.get('version')}")
        spec = GridSpec(head["lower"], head["upper"], head["resolution"])
        return cls(spec, values.reshape(spec.shape), parse_group(head["group"]))


def _check_compatible(f: GridFunction, g: GridFunction) -> None:
    if f.spec != g.spec:
        raise ValueError("grid functions live on different grids")
    if f.group != g.group:
        raise ValueError("grid functions live on different groups")


def interpolate(samples: np.ndarray, spec: GridSpec, points) -> np.ndarray:
    """Multilinear interpolation of lattice samples, zero beyond the outer nodes."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = spec.ndim
    padded = np.pad(samples, 1)
    base = []
    frac = []
    for k in range(d):
        pos = (pts[:, k] - spec.lower[k]) / spec.spacing[k] + 1.0
        pos = np.clip(pos, 0.0, spec.resolution[k] + 1.0)
        i0 = np.minimum(np.floor(pos).astype(np.int64), spec.resolution[k])
        base.append(i0)
        frac.append(pos - i0)
    out = np.zeros(len(pts))
    for corner in range(1 << d):
        w = np.ones(len(pts))
        idx = []
        for k in range(d):
            bit = (corner >> k) & 1
            w *= frac[k] if bit else 1.0 - frac[k]
            idx.append(base[k] + bit)
        out += w * padded[tuple(idx)]
    return out


def integrate(f: GridFunction) -> float:
    return float(np.sum(f.samples) * f.spec.cell_weight)


def lp_norm(f: GridFunction, p: float) -> float:
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    a = np.abs(f.samples)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    if p == 1:
        return float(np.sum(a) * f.spec.cell_weight)
    return float((np.sum(a**p) * f.spec.cell_weight) ** (1.0 / p))


def _euclidean_aligned(spec: GridSpec) -> bool:
    return spec.origin_index() is not None


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """(f * g)(x) = sum_y f(x y^-1) g(y) dV over the lattice.

    The Euclidean case is lattice aligned and summed exactly (by FFT).  On
    H1 the off-lattice reads f(x y^-1) use multilinear interpolation; the
    direct sum is O(N^2) and meant for small grids.
    """
    _check_compatible(f, g)
    spec = f.spec
    if f.group.is_euclidean and _euclidean_aligned(spec):
        full = fftconvolve(f.samples, g.samples, mode="full")
        o = spec.origin_index()
        sl = tuple(slice(ok, ok + n) for ok, n in zip(o, spec.shape))
        return f.with_samples(full[sl] * spec.cell_weight)
    values = evaluate_convolution_at(f, g, spec.points())
    return f.with_samples(np.asarray(values).reshape(spec.shape))


def evaluate_convolution_at(f: GridFunction, g: GridFunction, points, chunk: int = 2**22) -> np.ndarray:
    """The direct convolution sum restricted to the given points; O(len(points) N)."""
    _check_compatible(f, g)
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros(0)
    pts = np.atleast_2d(pts)
    ys = f.spec.points()
    gy = g.samples.ravel()
    keep = gy != 0.0
    ys, gy = ys[keep], gy[keep]
    yinv = inverse(f.group, ys)
    out = np.empty(len(pts))
    per = max(1, chunk // max(1, len(ys)))
    for start in range(0, len(pts), per):
        block = pts[start : start + per]
        args = multiply(f.group, block[:, None, :], yinv[None, :, :])
        vals = interpolate(f.samples, f.spec, args.reshape(-1, f.spec.ndim)).reshape(len(block), len(ys))
        out[start : start + per] = vals @ gy
    return out * f.spec.cell_weight


def horizontal_gradient(u: GridFunction) -> list[GridFunction]:
    """X_j u by second-order finite differences (one-sided at the faces)."""
    spec = u.spec
    if any(n < 3 for n in spec.resolution):
        raise ValueError("horizontal_gradient needs at least 3 nodes per axis")
    partials = np.gradient(u.samples, *spec.spacing, edge_order=2)
    if spec.ndim == 1:
        partials = [partials]
    grid_pts = np.stack(spec.mesh(), axis=-1)
    coeff = horizontal_coefficients(u.group, grid_pts)
    out = []
    for j in range(u.group.horizontal_count):
        acc = np.zeros(spec.shape)
        for i, d_i in enumerate(partials):
            c = coeff[..., j, i]
            if np.any(c != 0):
                acc = acc + c * d_i
        out.append(u.with_samples(acc))
    return out


def gradient_magnitude(u: GridFunction) -> GridFunction:
    comps = horizontal_gradient(u)
    return u.with_samples(np.sqrt(sum(c.samples**2 for c in comps)))
