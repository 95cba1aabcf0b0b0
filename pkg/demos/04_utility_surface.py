# coding: utf-8

# # The shape of the objective
#
# With three assets the whole feasible set fits on a grid. Looking at it shows
# why local methods can stop at different answers.

# In[1]:

import numpy as np

from cptport import DEFAULT_PARAMS, grid_search
from cptport.data import toy_returns

P = DEFAULT_PARAMS


# In[2]:

for seed in (0, 3, 4, 6):
    g = grid_search(toy_returns(seed).values, P, step=0.01)
    print(f"seed {seed}: optimum {g.weights.round(2)}  U = {g.utility:.5f}")
    for w, u in sorted(g.local_maxima, key=lambda t: -t[1]):
        print(f"    local max {w.round(2)}  U = {u:.5f}")


# Utility along the stocks/bonds edge, bills held at zero.

# In[3]:

R = toy_returns(3).values
g = grid_search(R[:, :2], P, step=0.05)
for w, u in zip(g.points, g.utilities):
    print(f"stocks {w[0]:.2f}  {'#' * int(max(0.0, 2000 * (u - 0.02)))}  {u:+.5f}")
