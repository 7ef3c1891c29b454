"""Weak-type ratio of grid-scale spikes with and without small-time t-nodes.

Without nodes below h^2 the finer spikes lose their small-time peak and the
ratio drifts with resolution for that reason alone.
"""
from subriesz.grid import GridSpec
from subriesz.group import euclidean
from subriesz.experiments import resolve_small_times, spike
from subriesz.maximal import TGrid, weak11_ratio

g = euclidean(2)
tg = TGrid.default()
print("resolution  fixed_tgrid  extended_tgrid")
for n in (24, 32, 48, 64, 96, 128):
    spec = GridSpec.cube((4, 4), n)
    f = spike(g, spec).validated(spec)
    fixed = weak11_ratio(f, tg).ratio
    ext = weak11_ratio(f, resolve_small_times(tg, spec)).ratio
    print(f"{n:10d}  {fixed:11.5f}  {ext:14.5f}")
