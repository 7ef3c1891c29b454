"""Static SVG figures for suite output (optional; needs matplotlib)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .group import GroupDescriptor
from .lorentz import rearrange
from .riesz import SubordinationRule, euclidean_riesz_constant, riesz_kernel


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # stable element ids so identical runs give identical files
    plt.rcParams["svg.hashsalt"] = "subriesz"
    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    fig.clf()
    return path


def plot_ratio_vs_scale(reports, path) -> Path | None:
    """Per-member ratio against dilation scale for every main-inequality report."""
    rows = [r for r in reports if r.experiment_id == "main-inequality"]
    if not rows:
        return None
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in rows:
        for m in r.extras["members"]:
            s = sorted(m["ratio_by_scale"], key=float)
            ax.plot([float(k) for k in s], [m["ratio_by_scale"][k] for k in s], marker="o", lw=0.8, label=None)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("dilation r")
    ax.set_ylabel("||I X_j u||_{q,1} / ||Xu||_1")
    ax.set_title("ratio against scale")
    return _save(fig, Path(path))


def plot_profiles(functions: dict, path) -> Path:
    """Decreasing rearrangements f* on log-log axes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, f in functions.items():
        prof = rearrange(f)
        if len(prof) == 0:
            continue
        x = np.repeat(np.concatenate([[0.0], prof.breakpoints]), 2)[1:-1]
        y = np.repeat(prof.values, 2)
        ax.loglog(np.maximum(x, x[1] * 1e-2), y, lw=0.9, label=label[:40])
    ax.set_xlabel("t")
    ax.set_ylabel("f*(t)")
    ax.legend(fontsize=6)
    return _save(fig, Path(path))


def plot_kernel_cross_section(group: GroupDescriptor, alphas, path, radius: float = 3.0) -> Path:
    """Riesz kernel along the first axis, with the closed form overlaid on R^d."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.geomspace(0.05, radius, 80)
    p = np.zeros((x.size, group.topological_dimension))
    p[:, 0] = x
    for a in alphas:
        k = riesz_kernel(group, SubordinationRule(a), p)
        ax.loglog(x, k, lw=1.0, label=f"alpha={a:g}")
        if group.is_euclidean:
            d = group.topological_dimension
            ax.loglog(x, euclidean_riesz_constant(d, a) * x ** (a - d), "k:", lw=0.7)
    ax.set_xlabel("x_1")
    ax.set_ylabel("I_alpha(x_1, 0, ...)")
    ax.set_title(str(group))
    ax.legend(fontsize=7)
    return _save(fig, Path(path))
