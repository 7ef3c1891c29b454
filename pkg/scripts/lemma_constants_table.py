"""Print C1, C2, C3 of the pointwise interpolation bound over a grid of alpha."""
import numpy as np

from subriesz.experiments import lemma_constants, lemma_constants_series

print("alpha   C1         C2         C3         series_gap")
for a in np.round(np.arange(0.05, 1.0, 0.05), 2):
    c = lemma_constants(a)
    s = lemma_constants_series(a)
    gap = max(abs(x / y - 1) for x, y in zip(c, s))
    print(f"{a:<7g} {c[0]:<10.5f} {c[1]:<10.5f} {c[2]:<10.5f} {gap:.1e}")
