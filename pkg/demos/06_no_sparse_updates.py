# Why the sketch must rotate its rows.
#
# Every compression rewrites the buffer as scaled singular directions,
# which destroys row sparsity. Could a cleverer update keep the original
# (possibly sparse) rows, just deleting one and rescaling the rest? For
# the update to play the same role as a shrink step it needs two things
# at once: drop enough total mass per deletion (call the per-step demand
# c * ell when the step charge is normalized to 1), and never hurt any
# single direction by more than that unit charge.
#
# This script measures both requirements on the instance that pins them
# against each other: ell rows that each mix a private coordinate with one
# shared coordinate. Rescaling can only trade mass between the two
# requirements through the shared column, and an exhaustive scan shows the
# trade only closes when c <= 2 / ell. A useful sketch needs c on the
# order of 1, so row-preserving updates are out and the rotation stays.

from fdsketch.counterexamples import (
    SparseFdInstance,
    orthogonal_residual_min,
    sparse_fd_check,
    sparse_feasibility_grid,
)

ell = 4
inst = SparseFdInstance(ell, ell + 1)
print("the hard instance (each row: shared first column + one private column):")
print(inst.matrix)

# What does deleting a row actually cost here? The smallest squared
# residual of the instance against itself minus one row:
val, idx = orthogonal_residual_min(inst.matrix, inst.weights)
print(f"\ncheapest row to delete: index {idx}, residual {val:.4f}"
      f" (= 1 + 1/{ell}: the shared column makes every deletion overpay)")

# Scan every rescaling alpha in [-2, 2]^(ell-1) at step 0.01 for a given
# demand c. Feasible means both requirements hold at once.
print(f"\n{'c':>6} {'feasible points':>16} {'verdict':>10}")
for c in (2.0, 1.0, 0.75, 0.5):
    scan = sparse_feasibility_grid(ell, c)
    verdict = "possible" if not scan.empty else "impossible"
    print(f"{c:>6} {scan.feasible_count:>16} {verdict:>10}")

print(f"\nthe crossover sits exactly at c = 2/ell = {2 / ell}")

# At the boundary the only move that works is doing nothing at all:
rep = sparse_fd_check(inst, [0.0] * (ell - 1), c=2 / ell)
print(f"alpha = 0 at c = 2/ell: mass demand met {rep.p1_satisfied}, "
      f"direction safe {rep.p2_satisfied}")
