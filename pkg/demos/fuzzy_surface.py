"""
What the RI surface looks like
==============================

RI rises with usage and free space and falls with tier depth and file size.
Here we slice the surface at mid level and mid file size.
"""

# %%
import numpy as np

from gridrep import FuzzySystemConfig, infer_ri

cfg = FuzzySystemConfig()
usage = np.linspace(0, 1, 6)
free = np.linspace(0, 1, 6)
U, N = np.meshgrid(usage, free, indexing="ij")
surface = infer_ri(0.5, 0.5, U, N, cfg)

np.set_printoptions(precision=2, suppress=True)
print("rows: usage 0..1, columns: node size 0..1")
print(surface)

# %%
# lam slides the averaging operator between pure min (0) and pure max (1).
for lam in (0.1, 0.5, 0.9):
    print(lam, infer_ri(0.25, 0.2, 0.8, 0.3, cfg.with_(lam=lam)))
