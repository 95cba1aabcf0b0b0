# coding: utf-8

# # Evaluating a portfolio
#
# The utility of a portfolio is computed from its historical returns: sort the
# scenario returns, give each one a rank-dependent decision weight and add up the
# weighted value of each outcome. Losses hurt more than gains help.

# In[1]:

import numpy as np

from cptport import DEFAULT_PARAMS, cpt_supergradient, cpt_utility, decision_weights, pt_value, weight_fn
from cptport.data import toy_returns

P = DEFAULT_PARAMS
print(P)


# The value function is steeper on the loss side.

# In[2]:

x = np.array([-0.10, -0.05, 0.0, 0.05, 0.10])
for xi, v in zip(x, pt_value(x, P)):
    print(f"{xi:+.2f} -> {v:+.4f}")


# Small probabilities are overweighted and large ones underweighted.

# In[3]:

for p in (0.01, 0.1, 0.5, 0.9, 0.99):
    print(f"w+({p}) = {weight_fn(p, P.delta_pos):.4f}   w-({p}) = {weight_fn(p, P.delta_neg):.4f}")


# A three-asset toy market: stocks, bonds, bills.

# In[4]:

R = toy_returns(0)
print(R.values.shape, R.asset_names)
print("mean", R.values.mean(axis=0).round(4))
print("std ", R.values.std(axis=0, ddof=1).round(4))


# Utility of a few portfolios. The supergradient says which way to move.

# In[5]:

for w in ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]):
    w = np.array(w, dtype=float)
    g = cpt_supergradient(w, R.values, P)
    print(w.round(3), f"U = {cpt_utility(w, R.values, P):+.5f}", "grad", g.round(3))


# The decision weights for 200 equally likely scenarios, 60 of them losses.

# In[6]:

dw = decision_weights(140, 60, P)
print("total gain weight", dw.tail_pos.sum().round(4), " total loss weight", dw.tail_neg.sum().round(4))
print("largest gain weight", dw.tail_pos.max().round(4), " largest loss weight", dw.tail_neg.max().round(4))
print("a plain average would give each scenario", 1 / 200)
