"""Deterministic heavy-hitters summary (Misra-Gries counters).

Keeps at most ``capacity`` labeled counters. Every arrival either bumps its
counter, claims a free slot, or, when the summary is full of other labels,
decrements every counter by one and is itself discarded. Estimates are
therefore never above the true frequency, and each of the ``r`` decrement
rounds destroys ``capacity + 1`` units of count mass, which is where the
error guarantees come from.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping


class MgSummary:
    """Fixed-capacity frequency summary over a stream of hashable items."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._slots: list[tuple[Hashable, int] | None] = [None] * self.capacity
        self.n_processed = 0
        self.decrement_total = 0

    def update(self, item: Hashable) -> None:
        """Fold one arrival into the summary."""
        self.n_processed += 1
        slots = self._slots
        free = -1
        for i, slot in enumerate(slots):
            if slot is not None and slot[0] == item:
                slots[i] = (item, slot[1] + 1)
                return
            if slot is None and free < 0:
                free = i
        if free >= 0:
            # lowest-indexed empty slot wins, keeps replays bit-identical
            slots[free] = (item, 1)
            return
        self.decrement_total += 1
        for i, slot in enumerate(slots):
            label, count = slot  # type: ignore[misc]
            slots[i] = None if count == 1 else (label, count - 1)

    def extend(self, items: Iterable[Hashable]) -> None:
        for item in items:
            self.update(item)

    def estimate(self, item: Hashable) -> int:
        """Stored count for ``item``, or 0 when it holds no slot."""
        for slot in self._slots:
            if slot is not None and slot[0] == item:
                return slot[1]
        return 0

    def items(self) -> dict[Hashable, int]:
        """Currently tracked labels and their counters (counts > 0 only)."""
        return {slot[0]: slot[1] for slot in self._slots if slot is not None}


@dataclass(frozen=True)
class MgCertificate:
    """Exact-oracle audit of a summary against true frequencies.

    ``top_k_mass`` is the true count mass of the k most frequent items,
    ``top_k_mass_est`` the summary's estimate of the same items, and
    ``residual_mass`` everything outside the true top k. The two booleans
    check the decrement-count bound and the top-k mass bound at their exact
    integer thresholds.
    """

    n: int
    capacity: int
    k: int
    decrements: int
    top_k_mass: int
    top_k_mass_est: int
    residual_mass: int
    max_item_gap: int
    decrement_bound_ok: bool
    topk_mass_bound_ok: bool


def error_certificate(
    summary: MgSummary, true_freqs: Mapping[Hashable, int], k: int
) -> MgCertificate:
    """Audit ``summary`` against an exact histogram of the same stream.

    Requires ``k < summary.capacity``. All checks are integer arithmetic:
    with r decrements, ell counters and residual mass R_k, the summary
    guarantees r * (ell - k) <= R_k and (F_k - F_k_est) * (ell - k) <= k * R_k.
    """
    ell = summary.capacity
    if not 0 < k < ell:
        raise ValueError("k must satisfy 0 < k < capacity")
    n = summary.n_processed
    total = sum(true_freqs.values())
    if total != n:
        raise ValueError(
            f"histogram covers {total} items but the summary processed {n}"
        )
    ranked = sorted(true_freqs.items(), key=lambda kv: (-kv[1], repr(kv[0])))
    top = ranked[:k]
    f_k = sum(count for _, count in top)
    f_k_est = sum(summary.estimate(label) for label, _ in top)
    r_k = n - f_k
    r = summary.decrement_total
    gaps = [count - summary.estimate(label) for label, count in ranked]
    max_gap = max(gaps, default=0)
    return MgCertificate(
        n=n,
        capacity=ell,
        k=k,
        decrements=r,
        top_k_mass=f_k,
        top_k_mass_est=f_k_est,
        residual_mass=r_k,
        max_item_gap=max_gap,
        decrement_bound_ok=r * (ell - k) <= r_k,
        topk_mass_bound_ok=(f_k - f_k_est) * (ell - k) <= k * r_k,
    )
