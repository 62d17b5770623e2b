# The counter summary the sketch generalizes.
#
# Misra-Gries keeps ell counters for an item stream. When an arriving item
# matches no counter and none is free, every counter drops by one. The
# result: each stored count undercounts its item's true frequency by at
# most the number of decrement rounds, and that number is itself small
# whenever the stream is dominated by a few items. The matrix sketch in
# this package runs the same ledger with directions in place of items and
# squared singular values in place of counts.

from collections import Counter

import numpy as np

from fdsketch.heavy_hitters import MgSummary, error_certificate

rng = np.random.default_rng(11)

# zipf-flavored stream: item i with weight 1/(i+1)
universe = 50
weights = 1.0 / np.arange(1, universe + 1)
stream = rng.choice(universe, size=2000, p=weights / weights.sum())

mg = MgSummary(capacity=8)
mg.extend(int(x) for x in stream)

truth = Counter(int(x) for x in stream)
print("item   true  estimate  undercount")
for item, est in sorted(mg.items().items(), key=lambda kv: -kv[1]):
    print(f"{item:>4} {truth[item]:>6} {est:>9} {truth[item] - est:>11}")
print(f"\ndecrement rounds r = {mg.decrement_total}"
      f" (every undercount above is <= r)")

# The certificate audits the summary against the exact histogram with pure
# integer arithmetic. k picks how many head items the audit focuses on.
cert = error_certificate(mg, truth, k=3)
print(f"\ntop-{cert.k} true mass {cert.top_k_mass}, estimated {cert.top_k_mass_est}")
print(f"residual mass R_k = {cert.residual_mass}")
print(f"decrement bound r*(ell-k) <= R_k: {cert.decrement_bound_ok}")
print(f"head mass bound (F_k - F_k_est)*(ell-k) <= k*R_k: {cert.topk_mass_bound_ok}")
