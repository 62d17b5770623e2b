"""Streaming deterministic matrix sketch with spectral shrinkage.

The sketch maintains a small buffer Q of ``m`` rows while consuming an
arbitrarily long stream of d-dimensional rows. Whenever the buffer runs out
of zero rows it is factorized, every singular value is shrunk by the
ell-th largest squared singular value delta, and the buffer is rewritten as
``diag(s') @ V.T`` with at least ``m - ell + 1`` rows exactly zero again:

    delta   = s_ell ** 2
    s'_j    = sqrt(max(s_j ** 2 - delta, 0))
    Q      <- diag(s') @ V.T

With ``batch_factor == 1`` (``m == ell``) the factorization runs after every
append, which is the classical per-row variant; larger batch factors trade
memory for fewer factorizations without changing any guarantee.

Writing ``Delta`` for the running sum of shrink values, the sketch promises,
deterministically, for every direction x with |x| = 1:

    0 <= |A x|^2 - |Q x|^2 <= Delta <= |A|_F^2 / ell

and, with ``ell = ceil(k + k/eps)``, the relative-error family

    Delta <= |A - A_k|_F^2 / (ell - k)
    |A - proj_{Q_k}(A)|_F^2 <= (1 + eps) |A - A_k|_F^2
    |A|_F^2 - |A_k|_F^2 <= |A|_F^2 - |Q_k|_F^2 <= (1+eps)(|A|_F^2 - |A_k|_F^2)

where A_k is the best rank-k approximation of the stream so far and Q_k the
top k rows of the sketch. ``error_report`` evaluates all of these against an
explicitly materialized A.

Sketches over the same row order are bit-identical between runs; two
sketches with equal (k, eps, ell, d) can be merged by re-inserting one
sketch's rows into the other, at the cost of additional shrinkage.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .linalg import (
    as_matrix,
    best_rank_k,
    directional_norm_gap,
    frob_sq,
    project_rowspace,
    svd_thin,
)

# Pass tolerances for the bound checks: identities get 1e-8 relative, one-sided
# inequalities get an absolute slack of 1e-9 * |A|_F^2.
IDENTITY_REL_TOL = 1e-8
INEQ_REL_TOL = 1e-9

# Guard for ceil(k + k/eps) style expressions: floating noise in the division
# must not bump the ceiling to the next integer.
_CEIL_GUARD = 1.0 - 1e-12


def _ceil_guarded(v: float) -> int:
    return int(math.ceil(v * _CEIL_GUARD))


def sketch_rows_for(k: int, eps: float) -> int:
    """Number of sketch rows needed for rank target k at accuracy eps."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    # ell > k is structural (the error bounds divide by ell - k)
    return max(_ceil_guarded(k + k / eps), k + 1)


@dataclass(frozen=True)
class FdParams:
    """Frozen sketch geometry: accuracy knobs plus derived buffer sizes."""

    k: int
    eps: float
    d: int
    batch_factor: float
    ell: int
    buffer_rows: int

    @classmethod
    def create(cls, k: int, eps: float, d: int, batch_factor: float = 1.0) -> "FdParams":
        ell = sketch_rows_for(k, eps)
        if d < 1:
            raise ValueError("d must be >= 1")
        if not batch_factor >= 1.0:
            raise ValueError("batch_factor must be >= 1")
        m = max(_ceil_guarded(batch_factor * ell), ell)
        if ell > d:
            warnings.warn(
                f"sketch rows ell={ell} exceed dimension d={d}; the sketch will "
                "hold the stream exactly and shrinkage never happens",
                stacklevel=3,
            )
        return cls(k=int(k), eps=float(eps), d=int(d), batch_factor=float(batch_factor),
                   ell=ell, buffer_rows=m)


class _KahanSum:
    """Compensated accumulator (Neumaier variant)."""

    __slots__ = ("value", "_comp")

    def __init__(self, value: float = 0.0):
        self.value = float(value)
        self._comp = 0.0

    def add(self, x: float) -> None:
        t = self.value + x
        if abs(self.value) >= abs(x):
            self._comp += (self.value - t) + x
        else:
            self._comp += (x - t) + self.value
        self.value = t

    def total(self) -> float:
        return self.value + self._comp


CompressHook = Callable[[np.ndarray, np.ndarray, float], None]


class FdSketch:
    """Streaming sketch over rows of fixed dimension ``d``.

    Parameters
    ----------
    k : rank target the error guarantees are stated against.
    eps : relative accuracy; the sketch keeps ``ceil(k + k/eps)`` rows.
    d : row dimension.
    batch_factor : buffer over-allocation factor (>= 1). 1 reproduces the
        per-row variant exactly.
    compress_hook : optional callable ``(buffer_before, buffer_after, delta)``
        invoked after every compression; used by instrumented runs to check
        the per-step shrink bound.
    """

    def __init__(self, k: int, eps: float, d: int, batch_factor: float = 1.0,
                 compress_hook: Optional[CompressHook] = None):
        self.params = FdParams.create(k, eps, d, batch_factor)
        self._buf = np.zeros((self.params.buffer_rows, self.params.d))
        self._nonzero = 0
        self._pending = 0
        self._rows_seen = 0
        self._frob_acc = _KahanSum()
        self._delta_acc = _KahanSum()
        # widest buffer that ever contributed mass to this sketch; grows on
        # merge and controls how tight the lost-mass accounting can be
        self._bracket_rows = self.params.buffer_rows
        self.compress_hook = compress_hook

    # -- bookkeeping views ------------------------------------------------

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def ell(self) -> int:
        return self.params.ell

    @property
    def buffer_rows(self) -> int:
        return self.params.buffer_rows

    @property
    def rows_seen(self) -> int:
        return self._rows_seen

    @property
    def mass_bracket_rows(self) -> int:
        """Widest buffer that ever fed this sketch.

        Equal to ``buffer_rows`` for a pure stream. Merging in a sketch built
        with a larger buffer widens it, and with it the guaranteed window for
        the lost mass: ``ell * delta_sum <= |A|_F^2 - |Q|_F^2 <=
        mass_bracket_rows * delta_sum``. When this equals ``ell`` the window
        collapses to the exact identity.
        """
        return self._bracket_rows

    @property
    def input_frob_sq(self) -> float:
        """Running squared Frobenius norm of everything appended."""
        return self._frob_acc.total()

    @property
    def delta_sum(self) -> float:
        """Total shrinkage applied so far."""
        return self._delta_acc.total()

    # -- core operations --------------------------------------------------

    def append(self, row) -> None:
        """Consume one stream row."""
        r = np.asarray(row, dtype=np.float64).reshape(-1)
        if r.size != self.params.d:
            raise ValueError(f"row has {r.size} entries, expected {self.params.d}")
        if not np.isfinite(r).all():
            raise ValueError("row contains non-finite entries")
        self._rows_seen += 1
        norm_sq = float(r @ r)
        self._frob_acc.add(norm_sq)
        if norm_sq == 0.0:
            # contributes nothing; claiming a slot would only break the
            # "leading rows are nonzero" layout the serializer relies on
            return
        self._buf[self._nonzero] = r
        self._nonzero += 1
        self._pending += 1
        if self.params.buffer_rows == self.params.ell:
            self.compress()
        elif self._nonzero == self.params.buffer_rows:
            self.compress()

    def extend(self, rows: Iterable) -> None:
        for row in rows:
            self.append(row)

    def compress(self) -> float:
        """Factorize the buffer, shrink the spectrum, rewrite in rotated form.

        Returns the shrink value applied. Zero rows cost nothing; until the
        buffer reaches full rank the shrink value stays 0 and the rewrite is
        a pure rotation.
        """
        before = self._buf.copy() if self.compress_hook is not None else None
        f = svd_thin(self._buf)
        s = f.s
        ell = self.params.ell
        # square once and reuse: taking delta from the same array guarantees
        # the cut entry shrinks to exactly 0.0, which the slot bookkeeping
        # below relies on (a separately computed square can differ by one ulp)
        sq = s * s
        delta = float(sq[ell - 1]) if s.size >= ell else 0.0
        shrunk = np.sqrt(np.maximum(sq - delta, 0.0))
        self._buf[:] = 0.0
        self._buf[: shrunk.size] = shrunk[:, None] * f.v.T
        self._nonzero = int(np.count_nonzero(shrunk))
        self._pending = 0
        self._delta_acc.add(delta)
        if self.compress_hook is not None:
            self.compress_hook(before, self._buf.copy(), delta)
        return delta

    def flush(self) -> None:
        """Compress any rows appended since the last compression."""
        if self._pending:
            self.compress()

    def query(self) -> np.ndarray:
        """Current ell-row sketch, flushing buffered rows first."""
        self.flush()
        return self._buf[: self.params.ell].copy()

    def query_topk(self) -> np.ndarray:
        """Top-k rows of the flushed sketch (rows sorted by singular value)."""
        self.flush()
        return self._buf[: self.params.k].copy()

    def copy(self) -> "FdSketch":
        out = FdSketch.__new__(FdSketch)
        out.params = self.params
        out._buf = self._buf.copy()
        out._nonzero = self._nonzero
        out._pending = self._pending
        out._rows_seen = self._rows_seen
        out._frob_acc = _KahanSum(self._frob_acc.value)
        out._frob_acc._comp = self._frob_acc._comp
        out._delta_acc = _KahanSum(self._delta_acc.value)
        out._delta_acc._comp = self._delta_acc._comp
        out._bracket_rows = self._bracket_rows
        out.compress_hook = self.compress_hook
        return out

    def merge(self, other: "FdSketch") -> "FdSketch":
        """Combine two sketches of the same geometry into a new one.

        The other sketch is flushed (on a copy) and its nonzero rows are
        re-inserted here, then the stream bookkeeping is set to the true
        totals. Both inputs are left untouched.
        """
        mine, theirs = self.params, other.params
        if (mine.k, mine.eps, mine.ell, mine.d) != (theirs.k, theirs.eps, theirs.ell, theirs.d):
            raise ValueError(
                "cannot merge sketches with different (k, eps, ell, d): "
                f"{(mine.k, mine.eps, mine.ell, mine.d)} vs "
                f"{(theirs.k, theirs.eps, theirs.ell, theirs.d)}"
            )
        out = self.copy()
        donor = other.copy()
        donor.flush()
        for row in donor._buf[: donor._nonzero]:
            out.append(row)
        out._rows_seen = self._rows_seen + other._rows_seen
        out._frob_acc = _KahanSum(self.input_frob_sq + donor.input_frob_sq)
        out._delta_acc.add(donor.delta_sum)
        # lost-mass accounting inherits the looser of the two windows
        out._bracket_rows = max(self._bracket_rows, other._bracket_rows)
        return out


@dataclass(frozen=True)
class ErrorReport:
    """Every guarantee of one sketch evaluated against an explicit matrix A.

    Raw quantities are kept alongside the pass/fail booleans so callers can
    renormalize or log them. ``qk_norm_bounds`` is the admissible window
    ``((1-eps)|A_k|^2, |A_k|^2)`` for the top-k sketch mass; the window lower
    bound is only claimed when ``topk_window_applicable`` (the tail of A is
    no heavier than its top-k part).
    """

    k: int
    eps: float
    ell: int
    buffer_rows: int
    mass_bracket_rows: int
    rows_seen: int
    frob_a_sq: float
    frob_q_sq: float
    frob_qk_sq: float
    delta_sum: float
    max_dir_gap: float
    min_dir_gap: float
    frob_identity_residual: float
    rank_k_residual_sq: float
    rank_k_mass_sq: float
    proj_residual_sq: float
    proj_err_ratio: float
    qk_norm_bounds: tuple[float, float]
    gap_upper_ok: bool
    gap_lower_ok: bool
    mass_window_ok: bool
    shrink_budget_ok: bool
    proj_ratio_ok: bool
    sandwich_low_ok: bool
    sandwich_high_ok: bool
    topk_window_applicable: bool
    topk_low_ok: bool
    topk_high_ok: bool

    def bounds(self) -> dict[str, bool]:
        """Pass/fail map under the wire names the verification summary uses."""
        return {
            "eq1_upper": self.gap_upper_ok,
            "eq1_lower": self.gap_lower_ok,
            "lemma4_identity": self.mass_window_ok,
            "lemma5": self.shrink_budget_ok,
            "lemma6": self.proj_ratio_ok,
            "lemma7_low": self.sandwich_low_ok,
            "lemma7_high": self.sandwich_high_ok,
            "lemma8_low": self.topk_low_ok,
            "lemma8_high": self.topk_high_ok,
        }

    @property
    def all_ok(self) -> bool:
        return all(self.bounds().values())


def error_report(a, sketch: FdSketch) -> ErrorReport:
    """Evaluate every sketch guarantee against the matrix ``a``.

    The sketch is flushed on a copy, so the caller's object is not mutated.
    ``a`` must hold exactly the rows that were streamed, in any order for the
    directional bounds, in stream order if the mass identity is to be exact.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.size == 0:
        arr = arr.reshape(0, sketch.d)
    else:
        arr = as_matrix(arr)
    if arr.shape[1] != sketch.d:
        raise ValueError(f"matrix has {arr.shape[1]} columns, sketch expects {sketch.d}")

    snap = sketch.copy()
    snap.flush()
    q = snap.query()
    qk = snap.query_topk()
    p = snap.params

    fa = frob_sq(arr)
    fq = frob_sq(q)
    fqk = frob_sq(qk)
    delta = snap.delta_sum
    slack = INEQ_REL_TOL * fa
    tiny = 1e-12 * fa

    gap = directional_norm_gap(arr, q)

    if arr.shape[0] == 0:
        ak = arr
    else:
        ak = best_rank_k(arr, p.k)
    rank_k_residual_sq = frob_sq(arr - ak)
    rank_k_mass_sq = frob_sq(ak)
    proj_residual_sq = frob_sq(arr - project_rowspace(arr, qk))

    if proj_residual_sq <= tiny and rank_k_residual_sq <= tiny:
        ratio = 1.0
    elif rank_k_residual_sq == 0.0:
        ratio = math.inf
    else:
        ratio = proj_residual_sq / rank_k_residual_sq

    identity_residual = abs(fa - fq - p.ell * delta)
    bracket = snap.mass_bracket_rows
    if bracket == p.ell:
        mass_window_ok = identity_residual <= IDENTITY_REL_TOL * fa
    else:
        lost = fa - fq
        mass_window_ok = (
            p.ell * delta <= lost + IDENTITY_REL_TOL * fa
            and lost <= bracket * delta + IDENTITY_REL_TOL * fa
        )

    applicable = rank_k_residual_sq <= rank_k_mass_sq

    return ErrorReport(
        k=p.k,
        eps=p.eps,
        ell=p.ell,
        buffer_rows=p.buffer_rows,
        mass_bracket_rows=bracket,
        rows_seen=snap.rows_seen,
        frob_a_sq=fa,
        frob_q_sq=fq,
        frob_qk_sq=fqk,
        delta_sum=delta,
        max_dir_gap=gap.max_gap,
        min_dir_gap=gap.min_gap,
        frob_identity_residual=identity_residual,
        rank_k_residual_sq=rank_k_residual_sq,
        rank_k_mass_sq=rank_k_mass_sq,
        proj_residual_sq=proj_residual_sq,
        proj_err_ratio=ratio,
        qk_norm_bounds=((1.0 - p.eps) * rank_k_mass_sq, rank_k_mass_sq),
        gap_upper_ok=gap.max_gap <= fa / p.ell + slack,
        gap_lower_ok=gap.min_gap >= -slack,
        mass_window_ok=mass_window_ok,
        shrink_budget_ok=delta <= rank_k_residual_sq / (p.ell - p.k) + slack,
        proj_ratio_ok=proj_residual_sq <= (1.0 + p.eps) * rank_k_residual_sq + slack,
        sandwich_low_ok=rank_k_residual_sq <= fa - fqk + slack,
        sandwich_high_ok=fa - fqk <= (1.0 + p.eps) * (fa - rank_k_mass_sq) + slack,
        topk_window_applicable=applicable,
        topk_low_ok=(not applicable) or (1.0 - p.eps) * rank_k_mass_sq <= fqk + slack,
        topk_high_ok=fqk <= rank_k_mass_sq + slack,
    )
