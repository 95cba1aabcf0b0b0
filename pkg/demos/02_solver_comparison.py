# coding: utf-8

# # Three solvers on the toy market
#
# The objective is neither concave nor smooth, so every method here is a local
# one. The exhaustive grid gives the reference answer for three assets.

# In[1]:

import time

import numpy as np

from cptport import DEFAULT_PARAMS, cc_optimize, ga_optimize, grid_search, mm_optimize, mv_heuristic
from cptport.data import toy_returns

P = DEFAULT_PARAMS
R = toy_returns(3).values


# Reference: utility on every multiple of 0.002 in the simplex.

# In[2]:

t = time.perf_counter()
g = grid_search(R, P, step=0.002)
print(f"grid optimum {g.weights.round(3)}  U = {g.utility:.6f}  ({time.perf_counter() - t:.1f}s)")
print(f"{len(g.local_maxima)} grid local maxima")


# Start each method from the equal-weight portfolio and from the best
# mean-variance portfolio.

# In[3]:

mv = mv_heuristic(R, P)
print(f"mean-variance pick {mv.weights.round(3)}  U = {mv.utility:.6f}")

starts = {"equal": np.full(3, 1 / 3), "mv": mv.weights}
solvers = {"mm": mm_optimize, "cc": cc_optimize, "ga": ga_optimize}
for label, w0 in starts.items():
    for name, solve in solvers.items():
        t = time.perf_counter()
        best = solve(w0, R, P).best
        print(f"{label:5s} {name}: {best.weights.round(3)}  U = {best.utility:.6f}  "
              f"gap {g.utility - best.utility:+.1e}  iters {best.iterations:4d}  "
              f"{time.perf_counter() - t:.2f}s")


# MM and CC never lose utility from one accepted iterate to the next.

# In[4]:

trace = np.array(mm_optimize(starts["equal"], R, P).best.utility_trace)
print("MM trace head", trace[:5].round(6), "monotone:", bool(np.all(np.diff(trace) >= -1e-12)))
