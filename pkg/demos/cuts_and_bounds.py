"""
Where the cuts come from
========================

The connectivity and cover inequalities are never written out in full.
This walk-through separates them by hand on a small fractional point and
then compares the root bound with and without the cover family.
"""

import numpy as np

from grsc import SeparationSettings, Variant, build, generate_grid, make_instance
from grsc.instance import grid_edges
from grsc.milp import root_bound
from grsc.separation import LoopState, SeparationPoint, cut_loop

# %%
# A 3 x 3 grid with one core species that lives in opposite corners.
inst = make_instance(9, grid_edges(3, 3), np.ones(9), weights_s1=[[4, 0, 0, 0, 0, 0, 0, 0, 4]],
                     lam=[8], max_components=1)

# %%
# A point that selects both corners as core but roots only the first one.
# Nothing connects corner 8 to a root, so a node-separator cut appears.
z = np.zeros(9)
z[[0, 8]] = 1
y = np.zeros(9)
y[0] = 1
point = SeparationPoint(u=np.ones(1), x=z.copy(), z=z, y=y)
for cut in cut_loop(inst, Variant.GRSC_C, point, LoopState(is_integer=True)):
    print(cut.family, "violation", round(cut.violation(point), 3))

# %%
# Half a core everywhere: the quota can only be met with both corners,
# which is what the cover cuts say.
half = np.full(9, 0.5)
point = SeparationPoint(u=np.ones(1), x=half, z=half, y=np.full(9, 1 / 9))
for cut in cut_loop(inst, Variant.GRSC_C, point, LoopState()):
    print(cut.family, "violation", round(cut.violation(point), 3))

# %%
# On a generated grid the cover family lifts the root bound.
grid = generate_grid(8, 1, 3, seed=2, scenario="A", max_components=1)
for cover in (False, True):
    form = build(grid, Variant.GRSC_CB, SeparationSettings(use_cover=cover))
    print(f"cover cuts {'on ' if cover else 'off'}: root bound {root_bound(form.model, form.generators):.3f}")
