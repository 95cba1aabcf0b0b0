# coding: utf-8

# # Searching the efficient frontier
#
# A cheap alternative: trace the mean-variance frontier and keep whichever
# frontier portfolio has the highest utility. It is a good start point and a
# useful baseline, but the utility optimum does not have to lie on the frontier.

# In[1]:

import numpy as np

from cptport import DEFAULT_PARAMS, estimate_moments, frontier, grid_search, mv_heuristic
from cptport.data import toy_returns

P = DEFAULT_PARAMS
R = toy_returns(3).values


# In[2]:

m = estimate_moments(R)
fr = frontier(m, K=20)
for w, vol, mean in fr.points()[::4]:
    print(f"vol {vol:.4f}  mean {mean:.4f}  w {w.round(3)}")


# In[3]:

res = mv_heuristic(R, P)
g = grid_search(R, P, step=0.005)
print(f"best frontier portfolio {res.weights.round(3)}  U = {res.utility:.6f}  risk aversion {res.gamma:.3g}")
print(f"grid optimum           {g.weights.round(3)}  U = {g.utility:.6f}")
print(f"shortfall {g.utility - res.utility:.2e}")
