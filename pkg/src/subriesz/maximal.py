"""Heat maximal functions over a finite set of times.

The supremum over t > 0 is replaced by a maximum over the nodes of a
TGrid, so every value here is a lower bound for the true maximal function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, lp_norm
from .heat import heat_family
from .report import ExperimentReport, TolerancePolicy


@dataclass(frozen=True)
class TGrid:
    nodes: tuple[float, ...]

    def __post_init__(self):
        n = np.asarray(self.nodes, dtype=float)
        if n.ndim != 1 or len(n) == 0 or np.any(n <= 0) or np.any(np.diff(n) <= 0):
            raise ValueError("TGrid nodes must be positive and strictly increasing")
        object.__setattr__(self, "nodes", tuple(float(x) for x in n))

    @classmethod
    def log_spaced(cls, t_min: float = 1e-3, t_max: float = 1e3, count: int = 64) -> "TGrid":
        return cls(tuple(np.geomspace(t_min, t_max, count)))

    @classmethod
    def default(cls) -> "TGrid":
        return cls.log_spaced()

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.nodes)

    def scaled(self, factor: float) -> "TGrid":
        return TGrid(tuple(factor * t for t in self.nodes))

    def doubled(self) -> "TGrid":
        """Insert the geometric midpoint between consecutive nodes."""
        t = self.array
        mids = np.sqrt(t[1:] * t[:-1])
        return TGrid(tuple(np.sort(np.concatenate([t, mids]))))

    def union(self, other: "TGrid") -> "TGrid":
        return TGrid(tuple(np.unique(np.concatenate([self.array, other.array]))))


def _max_abs(vals: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    vals = np.abs(vals)
    if weights is not None:
        vals = vals * weights.reshape((-1,) + (1,) * (vals.ndim - 1))
    return vals.max(axis=0)


def heat_maximal(f: GridFunction, tg: TGrid | None = None, index=None) -> GridFunction | np.ndarray:
    """max over t in tg of |f * p_t|; at lattice nodes ``index`` (P, d) if given."""
    tg = tg or TGrid.default()
    vals = _max_abs(heat_family(f, tg.array, index=index))
    return vals if index is not None else f.with_samples(vals)


def derivative_maximal(u: GridFunction, j: int, tg: TGrid | None = None, index=None) -> GridFunction | np.ndarray:
    """max over t in tg of |u * sqrt(t) (X_j p_t)^v| (j is 1-based)."""
    tg = tg or TGrid.default()
    vals = _max_abs(heat_family(u, tg.array, j=j, reflect=True, index=index), np.sqrt(tg.array))
    return vals if index is not None else u.with_samples(vals)


def weak11_ratio(f: GridFunction, tg: TGrid | None = None, levels: int = 40) -> ExperimentReport:
    """sup over lambda of lambda |{M f > lambda}| / ||f||_1 on a log grid of levels."""
    norm1 = lp_norm(f, 1)
    if not norm1 > 0:
        raise ValueError("weak-type ratio needs ||f||_1 > 0")
    mf = heat_maximal(f, tg).samples
    top = float(mf.max())
    lam = np.geomspace(1e-3, 1.0, levels) * top
    # counts of {Mf > lam} from one sort
    srt = np.sort(mf.ravel())
    counts = srt.size - np.searchsorted(srt, lam, side="right")
    vals = lam * counts * f.spec.cell_weight
    k = int(np.argmax(vals))
    return ExperimentReport.judge(
        "weak11",
        f.group.tag,
        None,
        float(vals[k]),
        norm1,
        TolerancePolicy(math.inf, "ratio finite", "no constant is asserted"),
        {"lambda_argmax": float(lam[k]), "maximal_sup": top, "levels": levels},
    )
