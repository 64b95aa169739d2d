"""Descent slopes of flag subbundles, the layer tower, and strata bookkeeping.

A *slope* records how the rank of a subbundle decays as it is dragged once
around the places by pullback-and-intersect: starting from rank ``r`` at
place ``i``, step ``j`` takes the essential-Verschiebung preimage (adding
``n~`` to the rank) and intersects with the distinguished bundle at place
``i-j`` -- except at the final step, where it intersects with the starting
bundle itself.  The drop at each step is the slope component ``r_j``; their
sum is at least ``sum n~_j``, with equality exactly for chains.

The *tower* grows the parallelogram of flag bundles generated by the
descent: layer by layer, each new rank is determined linearly by its
neighbours, and the construction terminates when a rank leaves the
admissible range (or immediately closes up, for chains).  All recursions
use the essential ranks ``m~``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .datum import DatumError, Signature


class SlopesError(DatumError):
    pass


@dataclass(frozen=True)
class SlopeVector:
    """Rank trace ``r_tilde[0..N]`` and per-step drops ``r[1..N]`` (stored
    0-indexed) of one full descent loop based at ``place`` with starting
    rank ``r_tilde[0]``."""

    place: int
    r_tilde: tuple[int, ...]
    r: tuple[int, ...]

    @property
    def start_rank(self) -> int:
        return self.r_tilde[0]

    @property
    def total(self) -> int:
        return sum(self.r)

    def to_json(self) -> dict:
        return {
            "place": self.place,
            "start_rank": self.start_rank,
            "r_tilde": list(self.r_tilde),
            "r": list(self.r),
        }


def slope_from_ranks(sig: Signature, i: int, r_tilde: Sequence[int]) -> SlopeVector:
    """Validate a rank trace and package it with its slope components.

    Step ``j`` must satisfy the intersection bounds
    ``max(0, pre + cap - n) <= r~_j <= min(cap, pre)`` where
    ``pre = n~_{i-j+1} + r~_{j-1}`` is the preimage rank and ``cap`` is
    ``m~_{i-j}`` (or the starting rank, at the final step).
    """
    i = sig.place(i)
    r_tilde = tuple(int(x) for x in r_tilde)
    if len(r_tilde) != sig.N + 1:
        raise SlopesError(
            f"rank trace needs N+1 = {sig.N + 1} entries, got {len(r_tilde)}"
        )
    r0 = r_tilde[0]
    if not 0 <= r0 <= sig.m_tilde(i):
        raise SlopesError(
            f"starting rank {r0} not in [0, m~_{i} = {sig.m_tilde(i)}]"
        )
    drops = []
    for j in range(1, sig.N + 1):
        pre = sig.n_tilde(i - j + 1) + r_tilde[j - 1]
        cap = sig.m_tilde(i - j) if j < sig.N else r0
        lo = max(0, pre + cap - sig.n)
        hi = min(cap, pre)
        if not lo <= r_tilde[j] <= hi:
            raise SlopesError(
                f"rank trace infeasible at step {j}: r~_{j} = {r_tilde[j]} "
                f"not in [{lo}, {hi}]"
            )
        drops.append(pre - r_tilde[j])
    return SlopeVector(place=i, r_tilde=r_tilde, r=tuple(drops))


def generic_slope(sig: Signature, i: int, r: int) -> SlopeVector:
    """Slope of a generically transverse subbundle: each intersection is as
    small as dimension counting allows."""
    i = sig.place(i)
    if not 0 <= r <= sig.m_tilde(i):
        raise SlopesError(f"starting rank {r} not in [0, m~_{i} = {sig.m_tilde(i)}]")
    trace = [r]
    for j in range(1, sig.N + 1):
        pre = sig.n_tilde(i - j + 1) + trace[-1]
        cap = sig.m_tilde(i - j) if j < sig.N else r
        trace.append(max(pre + cap - sig.n, 0))
    return slope_from_ranks(sig, i, trace)


def total_and_chain(sig: Signature, sv: SlopeVector) -> tuple[int, bool]:
    """Total drop and whether it is minimal (the subbundle generates a chain).

    The minimum of the total over all rank traces is ``sum_j n~_j``.
    """
    floor = sum(sig.n_tilde(j) for j in range(1, sig.N + 1))
    return sv.total, sv.total == floor


def compare_slopes(a: SlopeVector, b: SlopeVector) -> int:
    """Lexicographic comparison of the drop sequences (-1, 0, 1).

    Only slopes of the same base point are comparable.
    """
    if a.place != b.place or a.start_rank != b.start_rank:
        raise SlopesError("slopes based at different points are incomparable")
    if a.r == b.r:
        return 0
    return -1 if a.r < b.r else 1


# ---------------------------------------------------------------------------
# the layer tower

@dataclass(frozen=True)
class Tower:
    """Layers of the descent parallelogram.

    ``layers[l-1]`` holds ``(m^l_2, ..., m^l_{N+1})``; the closing value
    ``m^l_{N+1}`` doubles as ``m^l_1`` for the next layer.  ``m0`` is the
    rank ``m^0_1`` of the extra bundle below the base at the first place.
    ``termination_layer`` is the first layer whose construction failed
    (out-of-range rank) or would repeat forever (closure).
    """

    place: int
    base_rank: int
    slope: tuple[int, ...]  # in descent order, as produced by the slope ops
    m0: int
    layers: tuple[tuple[int, ...], ...]
    termination_layer: int
    termination_reason: str

    @property
    def height(self) -> int:
        return len(self.layers)

    def to_json(self) -> dict:
        return {
            "place": self.place,
            "base_rank": self.base_rank,
            "slope": list(self.slope),
            "m0": self.m0,
            "layers": [list(layer) for layer in self.layers],
            "termination_layer": self.termination_layer,
            "termination_reason": self.termination_reason,
        }


def tower(sig: Signature, i: int, m: int, slope: Sequence[int], max_height: int = 64) -> Tower:
    """Grow the layer tower over a base bundle of rank ``m`` at place ``i``.

    ``slope`` is given in descent order (``r_1`` = first drop, as produced
    by the slope operations); the tower recursion consumes it reversed,
    since layer columns run left-to-right while the descent runs right-to-
    left.  Ranks use the essential convention throughout, and each computed
    ``m^l_j`` must stay within ``[0, m~_j]``.

    Only towers based at the first place are supported; rotate the
    signature to move the base.
    """
    i = sig.place(i)
    if i != 1:
        raise SlopesError("tower construction is based at place 1; rotate the signature")
    slope = tuple(int(x) for x in slope)
    if len(slope) != sig.N:
        raise SlopesError(f"slope needs N = {sig.N} components, got {len(slope)}")
    if not 0 <= m <= sig.m_tilde(1):
        raise SlopesError(f"base rank {m} not in [0, m~_1 = {sig.m_tilde(1)}]")
    rr = tuple(reversed(slope))
    N = sig.N

    def mt(j):  # essential rank at column j in 2..N+1 (column N+1 = place 1)
        return sig.m_tilde(j if j <= N else 1)

    # layer 1, right to left: m^1_{N+1} = m, then
    # m^1_j = n - m~_{j+1} + m^1_{j+1} - rr_j   for j = N..2,
    # closing with m^0_1 = n - m~_2 + m^1_2 - rr_1.
    layer1 = {N + 1: m}
    out_of_range: Optional[str] = None
    for j in range(N, 1, -1):
        layer1[j] = sig.n - mt(j + 1) + layer1[j + 1] - rr[j - 1]
    m0 = sig.n - mt(2) + layer1[2] - rr[0]
    layers: list[tuple[int, ...]] = []
    first = tuple(layer1[j] for j in range(2, N + 2))
    for j, v in zip(range(2, N + 2), first):
        if not 0 <= v <= mt(j):
            out_of_range = f"m^1_{j} = {v} outside [0, {mt(j)}]"
            break
    if out_of_range is None and not 0 <= m0 <= sig.m_tilde(1):
        out_of_range = f"m^0_1 = {m0} outside [0, {sig.m_tilde(1)}]"
    if out_of_range is not None:
        return Tower(
            place=i, base_rank=m, slope=slope, m0=m0, layers=(),
            termination_layer=1, termination_reason=out_of_range,
        )
    layers.append(first)
    if m0 == m:
        return Tower(
            place=i, base_rank=m, slope=slope, m0=m0, layers=tuple(layers),
            termination_layer=2, termination_reason="closed: m^0_1 equals the base rank",
        )

    # layers l >= 2, left to right:
    # m^l_2 = m^{l-1}_1 + rr_1 + m~_2 - n, then
    # m^l_j = m^l_{j-1} + rr_{j-1} + m~_j - n   for j = 3..N+1.
    prev_first = m  # m^{l-1}_1
    for l in range(2, max_height + 1):
        cur = {}
        cur[2] = prev_first + rr[0] + mt(2) - sig.n
        for j in range(3, N + 2):
            cur[j] = cur[j - 1] + rr[j - 2] + mt(j) - sig.n
        vals = tuple(cur[j] for j in range(2, N + 2))
        for j, v in zip(range(2, N + 2), vals):
            if not 0 <= v <= mt(j):
                return Tower(
                    place=i, base_rank=m, slope=slope, m0=m0, layers=tuple(layers),
                    termination_layer=l,
                    termination_reason=f"m^{l}_{j} = {v} outside [0, {mt(j)}]",
                )
        if vals == layers[-1]:
            return Tower(
                place=i, base_rank=m, slope=slope, m0=m0, layers=tuple(layers),
                termination_layer=l, termination_reason="stationary layer",
            )
        layers.append(vals)
        prev_first = vals[-1]
    raise AssertionError(f"tower did not terminate within {max_height} layers")


# ---------------------------------------------------------------------------
# auxiliary signatures of strata

def aux_signature(
    sig: Signature, chain_ranks: Sequence[int], essential_variant: bool = True
) -> Signature:
    """Signature of the stratum cut out by a chain with the given ranks.

    Plain variant: ``m'_i = m_i - r_i + r_{i-1}``.  The essential variant
    corrects at extreme places: ``m'_i = 0`` when ``m_{i-1} = 0``, and
    ``m'_i = n - r_i + r_{i-1}`` when ``m_i = 0`` but ``m_{i-1}`` is not.
    """
    r = tuple(int(x) for x in chain_ranks)
    if len(r) != sig.N:
        raise SlopesError(f"chain needs N = {sig.N} ranks, got {len(r)}")
    for i in range(1, sig.N + 1):
        if not 0 <= r[i - 1] <= sig.m_tilde(i):
            raise SlopesError(
                f"chain rank at place {i} out of range: {r[i - 1]} not in "
                f"[0, m~_{i} = {sig.m_tilde(i)}]"
            )

    def rr(i):
        return r[sig.place(i) - 1]

    out = []
    for i in range(1, sig.N + 1):
        if essential_variant:
            if sig.m_at(i - 1) == 0:
                mp = 0
            elif sig.m_at(i) == 0:
                mp = sig.n - rr(i) + rr(i - 1)
            else:
                mp = sig.m_at(i) - rr(i) + rr(i - 1)
        else:
            mp = sig.m_at(i) - rr(i) + rr(i - 1)
        if not 0 <= mp <= sig.n:
            raise SlopesError(
                f"inconsistent chain ranks: m'_{i} = {mp} not in [0, {sig.n}]"
            )
        out.append(mp)
    return Signature(sig.N, sig.n, tuple(out))


def essential_degree_bounds(sig: Signature, aux: Signature, kind: str = "chain") -> dict:
    """Check the essential-count drop across a stratum passage.

    ``kind="chain"`` allows ``t' <= t``; ``kind="step5"`` (the passage that
    inserts one extra flag at a non-essential place) allows ``t' <= t + 1``.
    """
    if kind not in ("chain", "step5"):
        raise SlopesError(f"unknown bound kind {kind!r}")
    bound = sig.t if kind == "chain" else sig.t + 1
    report = {"t": sig.t, "t_prime": aux.t, "bound": bound, "ok": aux.t <= bound}
    if not report["ok"]:
        raise SlopesError(
            f"essential count {aux.t} exceeds the {kind} bound {bound} "
            f"(upstream construction bug)"
        )
    return report


# ---------------------------------------------------------------------------
# the descent diagram

@dataclass(frozen=True)
class DiagramNode:
    column: int
    height: int
    rank: int
    label: str


@dataclass(frozen=True)
class Diagram:
    """Node-and-trunk layout of the descent picture.

    Columns ``1..N+1`` host the places cyclically (column ``N+1`` repeats
    place 1).  Column bottoms satisfy ``B_{c+1} = B_c + n~`` of the new
    place; within a column, the rank-``l`` node sits ``l`` above the bottom,
    and ranks above ``m~`` are erased.  Overlay paths connect rank nodes
    across adjacent columns; their height drops reproduce slope components.
    """

    sig_m: tuple[int, ...]
    n: int
    nodes: tuple[DiagramNode, ...]
    trunk: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    overlays: tuple[tuple[tuple[int, int], ...], ...]

    def node_at(self, column: int, rank: int) -> DiagramNode:
        for nd in self.nodes:
            if nd.column == column and nd.rank == rank:
                return nd
        raise SlopesError(f"no node of rank {rank} in column {column}")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": list(self.sig_m),
            "nodes": [
                {"column": nd.column, "height": nd.height, "rank": nd.rank, "label": nd.label}
                for nd in self.nodes
            ],
            "trunk": [list(map(list, seg)) for seg in self.trunk],
            "overlays": [[list(pt) for pt in path] for path in self.overlays],
        }

    def to_ascii(self) -> str:
        """Plain-text node layout: one row per height, top first."""
        by_pos = {(nd.column, nd.height): nd.label for nd in self.nodes}
        overlay_pts = {pt for path in self.overlays for pt in path}
        if not by_pos:
            return ""
        max_h = max(h for _, h in by_pos)
        cols = max(c for c, _ in by_pos)
        widths = [
            max(
                [len(by_pos.get((c, h), "")) + 1 for h in range(max_h + 1)] + [4]
            )
            for c in range(1, cols + 1)
        ]
        lines = []
        for h in range(max_h, -1, -1):
            row = []
            for c in range(1, cols + 1):
                label = by_pos.get((c, h), "")
                if label and (c, h) in overlay_pts:
                    label = "*" + label
                row.append(label.ljust(widths[c - 1]))
            lines.append(" ".join(row).rstrip())
        return "\n".join(line for line in lines)

    def to_svg(self) -> str:
        """Standalone SVG with trunk, nodes, labels, and overlay paths."""
        if not self.nodes:
            return "<svg xmlns='http://www.w3.org/2000/svg'/>"
        xs = 90
        ys = 46
        pad = 60
        max_h = max(nd.height for nd in self.nodes)
        cols = max(nd.column for nd in self.nodes)
        width = pad * 2 + xs * (cols - 1)
        height = pad * 2 + ys * max_h

        def pos(column, h):
            return pad + xs * (column - 1), pad + ys * (max_h - h)

        parts = [
            f"<svg xmlns='http://www.w3.org/2000/svg' width='{width}' "
            f"height='{height}' viewBox='0 0 {width} {height}'>"
        ]
        for (c1, h1), (c2, h2) in self.trunk:
            x1, y1 = pos(c1, h1)
            x2, y2 = pos(c2, h2)
            parts.append(
                f"<line x1='{x1}' y1='{y1}' x2='{x2}' y2='{y2}' "
                f"stroke='#888' stroke-width='1.5'/>"
            )
        for path in self.overlays:
            pts = " ".join("{},{}".format(*pos(c, h)) for c, h in path)
            parts.append(
                f"<polyline points='{pts}' fill='none' stroke='#c22' "
                f"stroke-width='2.5'/>"
            )
        for nd in self.nodes:
            x, y = pos(nd.column, nd.height)
            parts.append(f"<circle cx='{x}' cy='{y}' r='3.5' fill='#222'/>")
            parts.append(
                f"<text x='{x + 6}' y='{y - 6}' font-size='13' "
                f"font-family='monospace'>{nd.label}</text>"
            )
        parts.append("</svg>")
        return "\n".join(parts)


def _column_place(sig: Signature, c: int) -> int:
    return (c - 1) % sig.N + 1


def render_diagram(sig: Signature, overlays: Sequence[Sequence[int]] = ()) -> Diagram:
    """Lay out the descent diagram, optionally with rank-trace overlays.

    Each overlay is a rank trace based at place 1 (as in
    :func:`slope_from_ranks`); entry ``j`` is drawn in column ``N+1-j``.
    """
    N, n = sig.N, sig.n
    bottoms = [0]
    for c in range(2, N + 2):
        bottoms.append(bottoms[-1] + sig.n_tilde(_column_place(sig, c)))
    nodes = []
    for c in range(1, N + 2):
        pl = _column_place(sig, c)
        B = bottoms[c - 1]
        mt = sig.m_tilde(pl)
        for l in range(0, mt + 1):
            if l == 0:
                label = "0"
            elif l == mt:
                label = f"omega~_{pl}" if sig.m_at(pl) == 0 else f"omega_{pl}"
            else:
                label = f"F^{pl}_{l}"
            nodes.append(DiagramNode(column=c, height=B + l, rank=l, label=label))
    trunk = []
    for c in range(1, N + 1):
        b1, b2 = bottoms[c - 1], bottoms[c]
        t1 = b1 + sig.m_tilde(_column_place(sig, c))
        t2 = b2 + sig.m_tilde(_column_place(sig, c + 1))
        trunk.append(((c, b1), (c + 1, b2)))
        trunk.append(((c, t1), (c + 1, t2)))

    overlay_paths = []
    for trace_like in overlays:
        sv = (
            trace_like
            if isinstance(trace_like, SlopeVector)
            else slope_from_ranks(sig, 1, trace_like)
        )
        if sv.place != 1:
            raise SlopesError("diagram overlays are based at place 1; rotate the signature")
        path = []
        for j in range(0, N + 1):
            c = N + 1 - j
            pl = _column_place(sig, c)
            rank = sv.r_tilde[j]
            if rank > sig.m_tilde(pl):
                raise SlopesError(
                    f"overlay references a nonexistent node: rank {rank} in column {c}"
                )
            path.append((c, bottoms[c - 1] + rank))
        overlay_paths.append(tuple(path))
    return Diagram(
        sig_m=sig.m,
        n=n,
        nodes=tuple(nodes),
        trunk=tuple(trunk),
        overlays=tuple(overlay_paths),
    )
