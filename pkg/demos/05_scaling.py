# coding: utf-8

# # More assets and more scenarios
#
# The grid stops being an option past three assets. This script fits a
# Gaussian mixture to a 14-asset market, samples extra scenarios from it and
# times the solvers as the scenario count grows.

# In[1]:

import time

import numpy as np

from cptport import DEFAULT_PARAMS, cc_optimize, dirichlet_starts, fit_gmm, ga_optimize, mm_optimize, sample_gmm
from cptport.ga import GaOptions
from cptport.data import synthetic_market

P = DEFAULT_PARAMS
R = synthetic_market(600, 14, seed=0).values


# In[2]:

model = fit_gmm(R, k=3, seed=0)
print("mixture weights", model.weights.round(3), f" EM iterations {len(model.log_likelihood_trace)}")


# In[3]:

w0 = np.full(14, 1 / 14)
for factor in (1, 2, 4):
    data = np.vstack([R, sample_gmm(model, (factor - 1) * len(R), seed=factor)]) if factor > 1 else R
    row = [f"N = {len(data):5d}"]
    for name, solve in (("mm", mm_optimize), ("cc", cc_optimize)):
        t = time.perf_counter()
        u = solve(w0, data, P).best.utility
        row.append(f"{name} U = {u:.5f} {time.perf_counter() - t:5.2f}s")
    print("  ".join(row))


# Many random starts at once: GA runs them as one batch.

# In[4]:

starts = dirichlet_starts(14, 200, seed=1)
t = time.perf_counter()
rep = ga_optimize(starts, R, P, opts=GaOptions(steps=300))
utils = np.array([r.utility for r in rep.records])
print(f"200 starts in {time.perf_counter() - t:.1f}s: best {utils.max():.5f}  median {np.median(utils):.5f}")
