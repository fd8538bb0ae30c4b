# %% [markdown]
# How big are the pieces?
#
# With decentralized placement every user caches a random fraction m of
# each file. A file then splits into sub-files indexed by the set of users
# that hold them, and the XOR combinations sent in delivery are built from
# those sub-files. This script prints the sizes for a small system and the
# load of one full delivery round as K grows.

# %%
import math

import numpy as np

from faircc import CacheParams, codeword_bits, standard_cc_load, subfile_size, subset_tables

p = CacheParams(K=3, m=0.6, F=1000.0)

# %%
# Sub-file sizes by cardinality of the caching set.
for s in range(p.K + 1):
    print(f"cached by {s} users: {subfile_size(s, p):7.2f} bits  x {math.comb(p.K, s)}")
total = sum(math.comb(p.K, s) * subfile_size(s, p) for s in range(p.K + 1))
print("total", total)

# %%
# A combination of demands from a set J of size j puts b(j, i) bits into
# every codeword queue I inside J with |I| = i.
for j in range(1, p.K + 1):
    row = [codeword_bits(j, i, p) for i in range(1, j + 1)]
    print(f"|J|={j}:", np.round(row, 2))

# %%
# Per-user bits of one combination always add up to (1-m)F, the part of
# the file the user does not have.
t = subset_tables(p.K, p.m, p.F)
for k in range(p.K):
    loads = t.subset_bit_load(t.membership_f[:, k])
    print(f"user {k}: {np.unique(np.round(loads[t.membership[:, k]], 9))}")

# %%
# Load of one round of the classical scheme, in files per user request.
for K in (1, 2, 4, 8, 16):
    print(f"K={K:2d}  T_tot={standard_cc_load(K, 0.6):.4f}")
print("limit (1-m)/m =", 0.4 / 0.6)
