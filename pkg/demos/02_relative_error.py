# How eps buys accuracy.
#
# The sketch promises that projecting the stream onto its top-k directions
# loses at most (1 + eps) times what the best possible rank-k projection
# loses. Here we sweep eps on the same stream and watch the promise and the
# actual loss move together. Smaller eps means more sketch rows
# (ell = ceil(k + k / eps)) and a tighter projection.

import numpy as np

from fdsketch.linalg import best_rank_k, frob_sq, project_rowspace
from fdsketch.sketch import FdSketch

rng = np.random.default_rng(21)
n, d, k = 400, 40, 3

# planted rank-3 signal plus noise, so the optimum is meaningful
u = np.linalg.qr(rng.normal(size=(n, k)))[0]
v = np.linalg.qr(rng.normal(size=(d, k)))[0]
rows = (u * [30.0, 20.0, 12.0]) @ v.T + 0.2 * rng.normal(size=(n, d))

opt = frob_sq(rows - best_rank_k(rows, k))
print(f"optimal rank-{k} residual: {opt:.2f}")
print()
print(f"{'eps':>6} {'ell':>5} {'residual':>10} {'ratio':>8} {'promised':>9}")

for eps in (1.0, 0.5, 0.25, 0.1):
    sk = FdSketch(k=k, eps=eps, d=d)
    sk.extend(rows)
    resid = frob_sq(rows - project_rowspace(rows, sk.query_topk()))
    print(f"{eps:>6} {sk.ell:>5} {resid:>10.2f} {resid / opt:>8.4f} {1 + eps:>9}")

# The ratio column stays under the promised column, usually far under it:
# the bound is worst-case over adversarial streams, and a benign stream
# leaves most of the budget unspent.
