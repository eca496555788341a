"""Edit distance, error rate, and monotone resegmentation of hypothesis streams.

The resegmentation algorithm cuts one hypothesis token stream into K segments
so that the summed edit distance to K reference segments is minimal. It runs a
single Levenshtein DP between the hypothesis and the concatenated references
and reads the cut points off the backtrace wherever the optimal path crosses a
reference-segment boundary; this is equivalent to minimizing the segment-wise
sum (the per-segment distances at the optimal cuts add up exactly to the
global edit distance) at O(|H|*|R|) cost instead of re-solving per segment.

Tie-breaking between equal-cost alignments is deterministic: the backtrace
prefers diagonal (match/substitute) over consuming a hypothesis token over
consuming a reference token, and hypothesis tokens consumed exactly at a
reference boundary attach to the earlier segment.

Two memory modes produce identical results: an explicit full matrix for
moderate sizes, and a checkpointed block backtrace that never materializes
more than a bounded number of cells for character-level talks where the full
matrix would exhaust memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tokenization import (
    TokenizationLevel,
    TokenStream,
    boundary_offsets,
    concat_streams,
    join_tokens,
    tokenize,
)

# Cell budget below which the full matrix (with backtrace) is used directly.
DEFAULT_MAX_CELLS = 40_000_000

_INF = np.int32(2**30)


@dataclass(frozen=True)
class AlignmentCost:
    """Unit-cost edit distance paired with the reference length it normalizes by."""

    distance: int
    ref_len: int

    def __post_init__(self) -> None:
        if self.distance < 0 or self.ref_len < 0:
            raise ValueError("alignment cost fields must be non-negative")

    @property
    def error_rate(self) -> float:
        if self.ref_len == 0:
            raise ValueError("error rate is undefined against an empty reference")
        return self.distance / self.ref_len


@dataclass(frozen=True)
class Segmentation:
    """Cut offsets into the hypothesis stream, one segment per reference segment.

    cut_points has K+1 monotonically non-decreasing entries, the first 0 and
    the last the hypothesis length; segment k is hyp[cut_points[k-1]:cut_points[k]].
    """

    cut_points: tuple[int, ...]
    total_distance: int
    approximate: bool = False

    def __post_init__(self) -> None:
        cuts = self.cut_points
        if len(cuts) < 2 or cuts[0] != 0:
            raise ValueError("cut_points must start at 0 and contain K+1 offsets")
        for a, b in zip(cuts, cuts[1:]):
            if b < a:
                raise ValueError("cut_points must be non-decreasing")

    @property
    def segment_count(self) -> int:
        return len(self.cut_points) - 1

    def segments(self, hyp: TokenStream) -> list[TokenStream]:
        if self.cut_points[-1] != len(hyp):
            raise ValueError("segmentation does not cover the given stream")
        return [
            hyp.slice(self.cut_points[k], self.cut_points[k + 1])
            for k in range(self.segment_count)
        ]


def _check_levels(a: TokenStream, b: TokenStream) -> None:
    if a.level is not b.level:
        raise ValueError(
            f"mixed tokenization levels: {a.level.value} vs {b.level.value}"
        )


def _encode(a: TokenStream, b: TokenStream) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    for tok in a.tokens:
        ids.setdefault(tok, len(ids))
    for tok in b.tokens:
        ids.setdefault(tok, len(ids))
    a_ids = np.fromiter((ids[t] for t in a.tokens), dtype=np.int32, count=len(a))
    b_ids = np.fromiter((ids[t] for t in b.tokens), dtype=np.int32, count=len(b))
    return a_ids, b_ids


def _next_row(
    prev: np.ndarray, a_tok: int, b_ids: np.ndarray, i: int, ar: np.ndarray
) -> np.ndarray:
    """Row i of the Levenshtein matrix given row i-1.

    The horizontal (reference-insertion) dependency is resolved in closed form:
    D[i][j] = min_{j' <= j} (t[j'] + (j - j')) where t holds the vertical and
    diagonal candidates, computed with a running minimum over t[j'] - j'.
    """
    out = np.empty_like(prev)
    out[0] = i
    np.minimum(prev[:-1] + (b_ids != a_tok), prev[1:] + 1, out=out[1:])
    np.subtract(out, ar, out=out)
    np.minimum.accumulate(out, out=out)
    np.add(out, ar, out=out)
    return out


def edit_distance(a: TokenStream, b: TokenStream) -> int:
    """Minimal number of unit insertions/deletions/substitutions turning a into b."""
    _check_levels(a, b)
    if len(a) == 0:
        return len(b)
    if len(b) == 0:
        return len(a)
    # Vectorize across the longer side; the distance is symmetric.
    if len(b) < len(a):
        a, b = b, a
    a_ids, b_ids = _encode(a, b)
    m = len(b_ids)
    ar = np.arange(m + 1, dtype=np.int32)
    row = ar.copy()
    for i in range(1, len(a_ids) + 1):
        row = _next_row(row, a_ids[i - 1], b_ids, i, ar)
    return int(row[m])


def alignment_cost(hyp: TokenStream, ref: TokenStream) -> AlignmentCost:
    return AlignmentCost(distance=edit_distance(hyp, ref), ref_len=len(ref))


def wer(hyp: TokenStream, ref: TokenStream) -> float:
    """Edit distance normalized by reference length."""
    cost = alignment_cost(hyp, ref)
    if cost.ref_len == 0:
        raise ValueError("WER is undefined against an empty reference")
    return cost.error_rate


def _full_matrix(a_ids: np.ndarray, b_ids: np.ndarray) -> np.ndarray:
    n, m = len(a_ids), len(b_ids)
    ar = np.arange(m + 1, dtype=np.int32)
    mat = np.empty((n + 1, m + 1), dtype=np.int32)
    mat[0] = ar
    for i in range(1, n + 1):
        mat[i] = _next_row(mat[i - 1], a_ids[i - 1], b_ids, i, ar)
    return mat


def _backtrace_block(
    sub: np.ndarray,
    a_ids: np.ndarray,
    b_ids: np.ndarray,
    col_base: int,
    start_i: int,
    start_l: int,
    entry: dict[int, int],
    want: frozenset[int],
) -> int:
    """Walk the backtrace inside one column block until its left edge.

    `sub` holds matrix rows 0..start_i for absolute columns
    col_base..col_base+W. Records the first-arrival (maximal) row for every
    wanted absolute column and returns the row at which the walk reaches the
    block's left edge.
    """
    i, l = start_i, start_l
    while l > 0:
        v = sub[i, l]
        j_abs = col_base + l
        if i > 0 and v == sub[i - 1, l - 1] + (a_ids[i - 1] != b_ids[j_abs - 1]):
            i -= 1
            l -= 1
            if (j_abs - 1) in want and (j_abs - 1) not in entry:
                entry[j_abs - 1] = i
        elif i > 0 and v == sub[i - 1, l] + 1:
            i -= 1
        else:
            l -= 1
            if (j_abs - 1) in want and (j_abs - 1) not in entry:
                entry[j_abs - 1] = i
    return i


def _entry_rows_full(
    a_ids: np.ndarray, b_ids: np.ndarray, want: frozenset[int]
) -> tuple[dict[int, int], int]:
    mat = _full_matrix(a_ids, b_ids)
    n, m = len(a_ids), len(b_ids)
    entry: dict[int, int] = {}
    if m in want:
        entry[m] = n
    i = _backtrace_block(mat, a_ids, b_ids, 0, n, m, entry, want)
    # Any remaining walk is vertical in column 0; nothing left to record.
    return entry, int(mat[n, m])


def _entry_rows_blocked(
    a_ids: np.ndarray, b_ids: np.ndarray, want: frozenset[int], max_cells: int
) -> tuple[dict[int, int], int]:
    """Same backtrace as the full matrix, materialized one column block at a time.

    A single forward sweep stores the matrix column at each block start; each
    block is then refilled from its checkpoint and backtraced right-to-left.
    Costs one extra sweep of time and O(num_blocks * |H| + block cells) memory.
    """
    n, m = len(a_ids), len(b_ids)
    width = max(1, max_cells // (n + 1))
    starts = list(range(0, m, width))
    ar = np.arange(m + 1, dtype=np.int32)
    checkpoints = np.empty((len(starts), n + 1), dtype=np.int32)
    row = ar.copy()
    for b_idx, c in enumerate(starts):
        checkpoints[b_idx, 0] = row[c]
    for i in range(1, n + 1):
        row = _next_row(row, a_ids[i - 1], b_ids, i, ar)
        for b_idx, c in enumerate(starts):
            checkpoints[b_idx, i] = row[c]
    total = int(row[m])

    entry: dict[int, int] = {}
    if m in want:
        entry[m] = n
    i_end = n
    for b_idx in range(len(starts) - 1, -1, -1):
        c0 = starts[b_idx]
        c1 = min(c0 + width, m)
        w = c1 - c0
        ar_loc = np.arange(w + 1, dtype=np.int32)
        sub = np.empty((i_end + 1, w + 1), dtype=np.int32)
        sub[0] = ar_loc + c0
        bslice = b_ids[c0:c1]
        for i in range(1, i_end + 1):
            prev = sub[i - 1]
            t = sub[i]
            t[0] = checkpoints[b_idx, i]
            np.minimum(prev[:-1] + (bslice != a_ids[i - 1]), prev[1:] + 1, out=t[1:])
            np.subtract(t, ar_loc, out=t)
            np.minimum.accumulate(t, out=t)
            np.add(t, ar_loc, out=t)
        i_end = _backtrace_block(sub, a_ids, b_ids, c0, i_end, c1 - c0, entry, want)
    return entry, total


def _entry_rows_banded(
    a_ids: np.ndarray, b_ids: np.ndarray, want: frozenset[int], band: int
) -> tuple[dict[int, int], int]:
    """Backtrace restricted to a diagonal band; an upper bound on the true optimum.

    The band is widened as needed to keep adjacent row windows connected, so a
    finite result always exists.
    """
    n, m = len(a_ids), len(b_ids)
    slope = m / max(n, 1)
    b_eff = max(band, math.ceil(slope) + 1, 1)
    windows: list[tuple[int, np.ndarray]] = []
    lo0, hi0 = 0, min(m, b_eff)
    row0 = np.arange(lo0, hi0 + 1, dtype=np.int32)
    windows.append((lo0, row0))
    for i in range(1, n + 1):
        center = round(i * slope)
        lo = max(0, center - b_eff)
        hi = min(m, center + b_eff)
        plo, prow = windows[i - 1]
        phi = plo + len(prow) - 1
        vals = np.full(hi - lo + 1, _INF, dtype=np.int32)
        if lo == 0:
            vals[0] = i
        # Diagonal candidates: columns j with j-1 inside the previous window.
        dlo, dhi = max(lo, plo + 1, 1), min(hi, phi + 1)
        if dlo <= dhi:
            cand = prow[dlo - 1 - plo : dhi - plo] + (
                b_ids[dlo - 1 : dhi] != a_ids[i - 1]
            )
            np.minimum(vals[dlo - lo : dhi - lo + 1], cand,
                       out=vals[dlo - lo : dhi - lo + 1])
        # Vertical candidates: columns shared with the previous window.
        vlo, vhi = max(lo, plo), min(hi, phi)
        if vlo <= vhi:
            np.minimum(vals[vlo - lo : vhi - lo + 1],
                       prow[vlo - plo : vhi - plo + 1] + 1,
                       out=vals[vlo - lo : vhi - lo + 1])
        # Horizontal closure within the window.
        ar_loc = np.arange(len(vals), dtype=np.int32)
        np.subtract(vals, ar_loc, out=vals)
        np.minimum.accumulate(vals, out=vals)
        np.add(vals, ar_loc, out=vals)
        windows.append((lo, vals))

    def cell(i: int, j: int) -> int:
        lo, vals = windows[i]
        if lo <= j < lo + len(vals):
            return int(vals[j - lo])
        return int(_INF)

    total = cell(n, m)
    entry: dict[int, int] = {}
    if m in want:
        entry[m] = n
    i, j = n, m
    while j > 0:
        v = cell(i, j)
        if i > 0 and v == cell(i - 1, j - 1) + (a_ids[i - 1] != b_ids[j - 1]):
            i -= 1
            j -= 1
            if j in want and j not in entry:
                entry[j] = i
        elif i > 0 and v == cell(i - 1, j) + 1:
            i -= 1
        else:
            j -= 1
            if j in want and j not in entry:
                entry[j] = i
    return entry, total


def resegment(
    hyp: TokenStream,
    refs: list[TokenStream],
    mode: str = "auto",
    max_cells: int = DEFAULT_MAX_CELLS,
    band: int | None = None,
) -> Segmentation:
    """Cut hyp into len(refs) segments minimizing the summed edit distance.

    mode selects the memory strategy: "full" keeps the whole matrix, "linear"
    uses the checkpointed block backtrace, "auto" picks by the max_cells
    budget. Both return identical cuts. A band width makes the result
    approximate and is flagged as such.
    """
    if not refs:
        raise ValueError("resegment requires at least one reference segment")
    if mode not in ("auto", "full", "linear"):
        raise ValueError(f"unknown mode: {mode!r}")
    ref_concat = concat_streams(refs)
    _check_levels(hyp, ref_concat)
    bounds = boundary_offsets(refs)
    k = len(refs)
    n, m = len(hyp), len(ref_concat)

    if n == 0:
        return Segmentation(tuple([0] * (k + 1)), m)

    if m == 0:
        # All reference segments empty: everything attaches to the first segment.
        cuts = [0] + [n] * k
        return Segmentation(tuple(cuts), n)

    a_ids, b_ids = _encode(hyp, ref_concat)
    want = frozenset(bounds)
    if band is not None:
        if band <= 0:
            raise ValueError("band width must be positive")
        entry, total = _entry_rows_banded(a_ids, b_ids, want, band)
        approximate = True
    elif mode == "full" or (mode == "auto" and (n + 1) * (m + 1) <= max_cells):
        entry, total = _entry_rows_full(a_ids, b_ids, want)
        approximate = False
    else:
        entry, total = _entry_rows_blocked(a_ids, b_ids, want, max_cells)
        approximate = False

    cuts = [0] * (k + 1)
    cuts[k] = n
    for seg in range(1, k):
        cuts[seg] = entry[bounds[seg]]
    for a, b in zip(cuts, cuts[1:]):
        if b < a:  # pragma: no cover - violated only by an implementation bug
            raise AssertionError("backtrace produced decreasing cut points")
    return Segmentation(tuple(cuts), total, approximate)


def resegment_system_output(
    sys_output,
    ref_doc,
    level: TokenizationLevel,
    reference_set: str | None = None,
    band: int | None = None,
):
    """Re-cut one document of a system output onto the reference segmentation.

    Returns a new SystemOutput whose hypothesis lines for ref_doc.doc_id are
    parallel to the reference segments; the token content of the original
    hypothesis is preserved exactly (text round-trips through tokenization).
    The resegmented flag stays False here; it is set by resegment_all once
    every document is parallel.
    """
    from .evalset import SystemOutput  # local import to avoid a cycle

    if ref_doc.doc_id not in sys_output.segments_by_doc:
        raise ValueError(
            f"system {sys_output.system_id!r} has no output for document "
            f"{ref_doc.doc_id!r}"
        )
    ref_set = _pick_reference_set(ref_doc, reference_set)
    hyp_stream = concat_streams(
        [tokenize(text, level) for text in sys_output.segments_by_doc[ref_doc.doc_id]]
        or [tokenize("", level)]
    )
    ref_streams = [tokenize(seg.references[ref_set], level) for seg in ref_doc.segments]
    seg_result = resegment(hyp_stream, ref_streams, band=band)
    pieces = [join_tokens(s) for s in seg_result.segments(hyp_stream)]
    new_segments = dict(sys_output.segments_by_doc)
    new_segments[ref_doc.doc_id] = pieces
    return SystemOutput(
        system_id=sys_output.system_id,
        condition=sys_output.condition,
        segments_by_doc=new_segments,
        resegmented=False,
    )


def resegment_all(
    sys_output,
    testset,
    level: TokenizationLevel,
    reference_set: str | None = None,
    band: int | None = None,
) -> tuple[object, dict[str, Segmentation]]:
    """Resegment every document of a system output against a test set.

    Returns the new SystemOutput (resegmented flag set) and the per-document
    Segmentation diagnostics (total distance, cuts).
    """
    from .evalset import SystemOutput

    out = sys_output
    diags: dict[str, Segmentation] = {}
    for doc in testset.documents:
        if doc.doc_id not in sys_output.segments_by_doc:
            continue
        ref_set = _pick_reference_set(doc, reference_set)
        hyp_stream = concat_streams(
            [tokenize(text, level) for text in out.segments_by_doc[doc.doc_id]]
            or [tokenize("", level)]
        )
        ref_streams = [tokenize(seg.references[ref_set], level) for seg in doc.segments]
        seg_result = resegment(hyp_stream, ref_streams, band=band)
        diags[doc.doc_id] = seg_result
        pieces = [join_tokens(s) for s in seg_result.segments(hyp_stream)]
        segments = dict(out.segments_by_doc)
        segments[doc.doc_id] = pieces
        out = SystemOutput(
            system_id=out.system_id,
            condition=out.condition,
            segments_by_doc=segments,
            resegmented=False,
        )
    complete = all(
        len(out.segments_by_doc.get(doc.doc_id, ())) == len(doc.segments)
        for doc in testset.documents
        if doc.doc_id in out.segments_by_doc
    )
    out = SystemOutput(
        system_id=out.system_id,
        condition=out.condition,
        segments_by_doc=out.segments_by_doc,
        resegmented=complete,
    )
    return out, diags


def _pick_reference_set(doc, reference_set: str | None) -> str:
    available = set(doc.segments[0].references)
    if reference_set is not None:
        if reference_set not in available:
            raise ValueError(
                f"reference set {reference_set!r} not present in document "
                f"{doc.doc_id!r} (has: {sorted(available)})"
            )
        return reference_set
    if len(available) == 1:
        return next(iter(available))
    if "new" in available:
        return "new"
    raise ValueError(
        f"ambiguous reference set for document {doc.doc_id!r}: {sorted(available)}; "
        "pass reference_set explicitly"
    )
