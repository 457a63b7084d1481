"""Representative streams: Cauchy sequences of Dirac chains for domains.

A :class:`ChainStream` produces snapshot ``j`` on demand (optionally in
chunks, for snapshots with millions of points), states the B^r norm it is
Cauchy in, and, where one is known, a rate c_j bounding |A_j - A_{j+1}|.
Integration folds pairings in index order and reports an accelerated value
next to a certified tail bound |omega|_{B^r} * sum_{i >= j} c_i.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import chainops as co
from . import form as fm
from .chain import DiracChain, OpenRegion
from .form import Form, SmoothMap
from .multivec import KVector, wedge, vector

CHUNK_ROWS = 1 << 18


@dataclass
class ChainStream:
    """A lazily generated sequence of Dirac chains."""

    dim: int
    snapshot_fn: Callable[[int], DiracChain]
    r: int = 1
    rate_fn: Optional[Callable[[int], float]] = None
    tail_fn: Optional[Callable[[int], float]] = None
    box: Optional[tuple[np.ndarray, np.ndarray]] = None
    chunks_fn: Optional[Callable[[int], Iterator[DiracChain]]] = None
    boundary_fn: Optional[Callable[[], "ChainStream"]] = None
    meta: dict = field(default_factory=dict)

    def snapshot(self, j: int) -> DiracChain:
        return self.snapshot_fn(j)

    def chunks(self, j: int) -> Iterator[DiracChain]:
        if self.chunks_fn is not None:
            yield from self.chunks_fn(j)
        else:
            yield self.snapshot_fn(j)

    def cauchy_rate(self, j: int) -> Optional[float]:
        return None if self.rate_fn is None else self.rate_fn(j)

    def tail(self, j: int) -> Optional[float]:
        """Bound on sum_{i >= j} c_i, i.e. on |A_j - lim A_i|."""
        if self.tail_fn is not None:
            return self.tail_fn(j)
        return None

    def boundary(self) -> "ChainStream":
        if self.boundary_fn is not None:
            return self.boundary_fn()
        return map_stream(self, co.boundary, r=self.r + 1, name="boundary")

    def evaluate(self, form: Form, j: int) -> float:
        return fm.exact_sum(np.array([fm.evalChain(form, c) for c in self.chunks(j)]))


def _geometric_tail(c0: float, ratio: float) -> Callable[[int], float]:
    return lambda j: c0 * ratio ** j / (1.0 - ratio)


def map_stream(S: ChainStream, op: Callable[[DiracChain], DiracChain], *, dim: Optional[int] = None,
               r: Optional[int] = None, name: str = "mapped", rate_scale: Optional[float] = None) -> ChainStream:
    """Apply a chain operator snapshot-wise; rates scale by ``rate_scale`` when
    the operator's norm bound is known."""
    rate = tail = None
    if rate_scale is not None and S.rate_fn is not None:
        rate = lambda j: rate_scale * S.rate_fn(j)
        tail = (lambda j: rate_scale * S.tail(j)) if S.tail_fn is not None else None
    return ChainStream(dim or S.dim, lambda j: op(S.snapshot(j)), S.r if r is None else r, rate, tail, None,
                       (lambda j: (op(c) for c in S.chunks(j))), None, {**S.meta, "op": name})


# ------------------------------------------------------------------------------
# cubes and affine cells
# ------------------------------------------------------------------------------

def _grid(counts: Sequence[int], start: int, stop: int) -> np.ndarray:
    """Rows start..stop of the C-ordered multi-index grid of the given shape."""
    idx = np.arange(start, stop)
    return np.stack(np.unravel_index(idx, tuple(counts)), axis=1).astype(float)


def _cell_chunks(origin: np.ndarray, edges: np.ndarray, kv: dict[int, float], per: int,
                 dtype=float) -> Iterator[DiracChain]:
    """Midpoint chain of a parallelepiped split into ``per`` steps per edge."""
    k, n = edges.shape
    total = per ** k
    scale = 1.0 / total
    masks = np.array(list(kv), np.int64)
    coefs = np.array([kv[m] * scale for m in kv], dtype=dtype)
    step = max(1, CHUNK_ROWS // max(len(masks), 1))
    for s in range(0, total, step):
        g = (_grid([per] * k, s, min(total, s + step)).astype(dtype) + 0.5) / per
        pts = origin.astype(dtype) + g @ edges.astype(dtype)
        N = len(pts)
        yield DiracChain(n, np.repeat(pts, len(masks), axis=0), np.zeros((N * len(masks), n), np.int64),
                         np.tile(masks, N), np.tile(coefs, N), canonical=len(masks) == 1)


def _cell_kv(edges: np.ndarray) -> dict[int, float]:
    n = edges.shape[1]
    kv = KVector.from_terms(n, 0, [((), 1.0)])
    for e in edges:
        kv = wedge(kv, vector(e))
    return kv.masks()


def _concat(n: int, chunks) -> DiracChain:
    return DiracChain.concat(n, list(chunks))


def cubeStream(lo: Sequence[float], hi: Sequence[float], base: int = 2, phase: float = 0.0) -> ChainStream:
    """A_j: midpoints of the base^{nj} subcubes, each carrying vol_j * e_1..n.

    A nonzero ``phase`` in (0, 1) shifts the grid by that fraction of a cell
    and clips the cells cut by the faces, which gives a second representative
    of the same box for uniqueness checks."""
    lo_a, hi_a = np.asarray(lo, float), np.asarray(hi, float)
    side = hi_a - lo_a
    if np.any(side <= 0):
        raise ValueError("degenerate cube")
    n = len(lo_a)
    vol = float(np.prod(side))
    edges = np.diag(side)
    kv = {(1 << n) - 1: vol}

    def chunks(j: int):
        if phase == 0.0:
            yield from _cell_chunks(lo_a, edges, kv, base ** j)
        else:
            yield from _phased_chunks(lo_a, side, base ** j, phase)

    def snap(j: int) -> DiracChain:
        return _concat(n, chunks(j))

    diam = float(side.max())
    ratio = 1.0 / base
    c0 = 2.0 * vol * diam
    rate = lambda j: c0 * ratio ** j
    S = ChainStream(n, snap, 1, rate, _geometric_tail(c0, ratio), (lo_a, hi_a), chunks, None,
                    {"kind": "cube", "lo": lo_a.tolist(), "hi": hi_a.tolist(), "base": base})
    S.boundary_fn = lambda: _box_boundary(lo_a, hi_a)
    return S


def _phased_chunks(lo: np.ndarray, side: np.ndarray, per: int, phase: float):
    """Grid shifted by phase/per along every axis; the cells cut by the box
    faces contribute their clipped midpoints and volumes."""
    n = len(lo)
    h = 1.0 / per
    cuts = np.concatenate([[0.0], np.arange(per) * h + phase * h, [1.0]])
    cuts = np.unique(np.clip(cuts, 0.0, 1.0))
    mids = 0.5 * (cuts[1:] + cuts[:-1])
    lens = np.diff(cuts)
    keep = lens > 0
    mids, lens = mids[keep], lens[keep]
    grids = np.meshgrid(*[mids] * n, indexing="ij")
    wgs = np.meshgrid(*[lens] * n, indexing="ij")
    pts = lo + np.stack([g.reshape(-1) for g in grids], axis=1) * side
    w = np.prod(np.stack([g.reshape(-1) for g in wgs], axis=1), axis=1) * float(np.prod(side))
    N = len(pts)
    yield DiracChain(n, pts, np.zeros((N, n), np.int64), np.full(N, (1 << n) - 1), w, canonical=True)


def cellStream(origin: Sequence[float], edges, kind: str = "parallelepiped") -> ChainStream:
    """Midpoint subdivision of an oriented affine k-cell.

    ``parallelepiped``: origin p0 and edge vectors v_1..v_k, orientation
    v_1 ^ ... ^ v_k.  ``simplex``: ``origin`` is v_0 and ``edges`` lists
    v_1..v_k as vertices (k <= 2), orientation (v_1-v_0) ^ ... ^ (v_k-v_0)."""
    p0 = np.asarray(origin, float)
    E = np.atleast_2d(np.asarray(edges, float))
    if kind == "simplex":
        return _simplex_stream(p0, E)
    if kind != "parallelepiped":
        raise ValueError(f"unknown cell kind {kind!r}")
    k, n = E.shape
    if E.size and p0.shape != (n,):
        raise ValueError("dimension mismatch")
    kv = _cell_kv(E) if k else {0: 1.0}
    if k and not kv:
        raise ValueError("degenerate cell")
    mass = float(np.sqrt(sum(c * c for c in kv.values())))
    spread = float(np.linalg.norm(E, axis=1).sum()) if k else 0.0
    n = len(p0)

    def chunks(j: int):
        if k == 0:
            yield DiracChain(n, p0[None], np.zeros((1, n), np.int64), np.array([0]), np.array([1.0]))
        else:
            yield from _cell_chunks(p0, E, kv, 2 ** j)

    c0 = mass * spread / 4.0
    S = ChainStream(n, lambda j: _concat(n, chunks(j)), 1, lambda j: c0 * 0.5 ** j,
                    _geometric_tail(c0, 0.5), _cell_box(p0, E), chunks, None,
                    {"kind": "cell", "origin": p0.tolist(), "edges": E.tolist()})
    S.boundary_fn = lambda: _cell_boundary(p0, E)
    return S


def _cell_box(p0, E):
    corners = p0 + np.array(list(itertools.product((0, 1), repeat=len(E))), float).reshape(-1, len(E)) @ E \
        if len(E) else p0[None]
    return corners.min(axis=0), corners.max(axis=0)


def _cell_boundary(p0: np.ndarray, E: np.ndarray) -> ChainStream:
    """sum_l (-1)^{l+1} [F_l(1) - F_l(0)] with F_l(t) the face through p0 + t v_l."""
    k = len(E)
    if k == 0:
        raise ValueError("a 0-cell has no boundary stream")
    cells, weights = [], []
    for l in range(k):
        rest = np.delete(E, l, axis=0)
        s = (-1.0) ** l
        cells += [cellStream(p0 + E[l], rest), cellStream(p0, rest)]
        weights += [s, -s]
    return polyhedral(list(zip(weights, cells)))


def _box_boundary(lo: np.ndarray, hi: np.ndarray) -> ChainStream:
    return _cell_boundary(lo, np.diag(hi - lo))


def _simplex_stream(v0: np.ndarray, V: np.ndarray) -> ChainStream:
    k, n = V.shape
    if k > 2:
        raise ValueError("simplex cells of dimension > 2 are not supported; use parallelepipeds")
    E = V - v0
    kv = _cell_kv(E)
    if not kv:
        raise ValueError("degenerate cell")
    if k == 1:
        S = cellStream(v0, E)
        S.meta["kind"] = "simplex"
        return S

    def snap(j: int) -> DiracChain:
        tris = _tri_subdivide(np.stack([v0, V[0], V[1]])[None], j)
        cent = tris.mean(axis=1)
        N = len(cent)
        masks = np.array(list(kv), np.int64)
        coefs = np.array([kv[m] / 2.0 / 4 ** j for m in kv])
        return DiracChain(n, np.repeat(cent, len(masks), axis=0), np.zeros((N * len(masks), n), np.int64),
                          np.tile(masks, N), np.tile(coefs, N))

    mass = float(np.sqrt(sum(c * c for c in kv.values()))) / 2.0
    diam = float(max(np.linalg.norm(E[0]), np.linalg.norm(E[1]), np.linalg.norm(E[1] - E[0])))
    c0 = mass * diam
    S = ChainStream(n, snap, 1, lambda j: c0 * 0.5 ** j, _geometric_tail(c0, 0.5),
                    (np.minimum(v0, V.min(axis=0)), np.maximum(v0, V.max(axis=0))), None, None,
                    {"kind": "simplex"})
    verts = [v0, V[0], V[1]]

    def bd():
        parts = []
        for i in range(3):
            rest = [verts[t] for t in range(3) if t != i]
            parts.append(((-1.0) ** i, cellStream(rest[0], [rest[1] - rest[0]])))
        return polyhedral(parts)

    S.boundary_fn = bd
    return S


def _tri_subdivide(T: np.ndarray, j: int) -> np.ndarray:
    """Midpoint subdivision into 4^j similar triangles of equal orientation."""
    for _ in range(j):
        a, b, c = T[:, 0], T[:, 1], T[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        T = np.concatenate([np.stack(t, axis=1) for t in
                            ((a, ab, ca), (ab, b, bc), (ca, bc, c), (bc, ca, ab))])
    return T


def polyhedral(cells: Sequence[tuple[float, ChainStream]]) -> ChainStream:
    """Weighted sum of streams."""
    cells = list(cells)
    n = cells[0][1].dim

    def chunks(j: int):
        for a, S in cells:
            for c in S.chunks(j):
                yield c * a

    rate = tail = None
    if all(S.rate_fn is not None for _, S in cells):
        rate = lambda j: sum(abs(a) * S.cauchy_rate(j) for a, S in cells)
    if all(S.tail_fn is not None for _, S in cells):
        tail = lambda j: sum(abs(a) * S.tail(j) for a, S in cells)
    boxes = [S.box for _, S in cells if S.box is not None]
    box = (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)) if boxes else None
    S = ChainStream(n, lambda j: _concat(n, chunks(j)), max(S.r for _, S in cells), rate, tail, box, chunks,
                    None, {"kind": "polyhedral", "cells": len(cells)})
    if all(T.boundary_fn is not None for _, T in cells):
        S.boundary_fn = lambda: polyhedral([(a, T.boundary()) for a, T in cells])
    return S


# ------------------------------------------------------------------------------
# open sets
# ------------------------------------------------------------------------------

def whitney_cells(U: OpenRegion, depth: int) -> list[tuple[int, np.ndarray]]:
    """Whitney-style dyadic cubes of the root cube around U, down to ``depth``.

    A cube is kept when its 3x dilate is certified inside U and no ancestor
    was kept.  Returns (level, lower-corner array) pairs."""
    lo = np.asarray(U.lo, float)
    side = float(np.max(np.asarray(U.hi, float) - lo))
    n = U.dim
    out = []
    active = np.zeros((1, n))
    for lev in range(depth + 1):
        h = side / 2 ** lev
        c_lo = lo + active * h
        ok = U.contains_box(c_lo - h, c_lo + 2 * h)
        if ok.any():
            out.append((lev, c_lo[ok]))
        rest = active[~ok]
        if lev == depth or len(rest) == 0:
            break
        # only refine cubes that can still meet U
        meets = ~_box_outside(U, lo + rest * h, lo + (rest + 1) * h)
        rest = rest[meets]
        kids = np.array(list(itertools.product((0, 1), repeat=n)), float)
        active = (2 * rest[:, None, :] + kids[None]).reshape(-1, n)
    return out


def _box_outside(U: OpenRegion, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if U.signed_distance is None:
        return np.zeros(len(lo), bool)
    c = 0.5 * (lo + hi)
    R = 0.5 * np.linalg.norm(hi - lo, axis=1)
    return U.signed_distance(c) >= R


def openSetStream(U: OpenRegion) -> ChainStream:
    """A_j: midpoints of the level-j dyadic cubes of the root cube whose centre
    lies in U, weighted by volume.

    The cubes inside the Whitney cubes of depth <= j are certified inside U;
    the remaining boundary band is decided by centre membership, which is
    what makes the stream converge at the Riemann rate on regular sets.  The
    Whitney volume is recorded per snapshot so that non-convergence of the
    certified part can be reported."""
    n = U.dim
    lo = np.asarray(U.lo, float)
    side = float(np.max(np.asarray(U.hi, float) - lo))
    if not np.isfinite(side) or side <= 0:
        raise ValueError("bounded region required")

    def chunks(j: int):
        per = 2 ** j
        h = side / per
        total = per ** n
        step = CHUNK_ROWS
        for s in range(0, total, step):
            g = _grid([per] * n, s, min(total, s + step))
            pts = lo + (g + 0.5) * h
            pts = pts[U.contains(pts)]
            N = len(pts)
            if N:
                yield DiracChain(n, pts, np.zeros((N, n), np.int64), np.full(N, (1 << n) - 1),
                                 np.full(N, h ** n), canonical=True)

    def whitney_volume(j: int) -> float:
        return float(sum(len(c) * (side / 2 ** lev) ** n for lev, c in whitney_cells(U, j)))

    S = ChainStream(n, lambda j: _concat(n, chunks(j)), 1, None, None, (lo, lo + side), chunks, None,
                    {"kind": "open", "region": U.name})
    S.meta["whitney_volume"] = whitney_volume
    return S


# ------------------------------------------------------------------------------
# fractals
# ------------------------------------------------------------------------------

def cantor_intervals(n: int) -> np.ndarray:
    """Integer left endpoints k of the stage-n intervals [k, k+1] / 3^n."""
    ks = np.zeros(1, np.int64)
    for _ in range(n):
        ks = np.concatenate([3 * ks, 3 * ks + 2])
    return np.sort(ks)


def cantorStream(scaled: bool = True, precision: str = "double") -> ChainStream:
    """A_n = (3/2)^n sum over the 2^n stage-n intervals of (midpoint; 3^{-n} e_1).

    ``precision="extended"`` stores points in extended precision, which keeps
    endpoint rounding below 1e-12 in boundary integrals at stage 20."""
    dt = np.longdouble if precision == "extended" else float

    def weight(n: int):
        return dt(1.5) ** n if scaled else dt(1.0)

    def snap(n: int) -> DiracChain:
        k = cantor_intervals(n).astype(dt)
        L = dt(3) ** n
        mids = (k + dt(0.5)) / L
        N = len(k)
        return DiracChain(1, mids[:, None], np.zeros((N, 1), np.int64), np.ones(N, np.int64),
                          np.full(N, weight(n) / L, dtype=dt), canonical=True)

    def bd_snap(n: int) -> DiracChain:
        k = cantor_intervals(n).astype(dt)
        L = dt(3) ** n
        pts = np.concatenate([(k + 1) / L, k / L])
        N = len(k)
        co_ = np.concatenate([np.full(N, weight(n), dtype=dt), np.full(N, -weight(n), dtype=dt)])
        return DiracChain(1, pts[:, None], np.zeros((2 * N, 1), np.int64), np.zeros(2 * N, np.int64), co_)

    rate = (lambda n: 3.0 ** (-(n + 1))) if scaled else None
    tail = (lambda n: 1.5 * 3.0 ** (-(n + 1))) if scaled else None
    S = ChainStream(1, snap, 1, rate, tail, (np.zeros(1), np.ones(1)), None, None,
                    {"kind": "cantor", "scaled": scaled})
    S.boundary_fn = lambda: ChainStream(1, bd_snap, 2, None, None, (np.zeros(1), np.ones(1)), None, None,
                                        {"kind": "cantor-boundary"})
    return S


def sierpinskiStream(vertices=((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)), scaled: bool = True) -> ChainStream:
    """(4/3)^k-weighted sum over the 3^k stage-k triangles of (centroid; area e_12)."""
    V = np.asarray(vertices, float)
    E = V[1:] - V[0]
    area = 0.5 * (E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0])
    s0 = float(max(np.linalg.norm(E[0]), np.linalg.norm(E[1]), np.linalg.norm(E[1] - E[0])))

    def tris(k: int) -> np.ndarray:
        T = V[None]
        for _ in range(k):
            a, b, c = T[:, 0], T[:, 1], T[:, 2]
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            T = np.concatenate([np.stack(t, axis=1) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c))])
        return T

    def snap(k: int) -> DiracChain:
        T = tris(k)
        N = len(T)
        w = (4.0 / 3.0) ** k if scaled else 1.0
        return DiracChain(2, T.mean(axis=1), np.zeros((N, 2), np.int64), np.full(N, 3),
                          np.full(N, w * area / 4 ** k))

    def bd_snap(k: int) -> DiracChain:
        T = tris(k)
        w = (4.0 / 3.0) ** k if scaled else 1.0
        parts = []
        for i, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
            mid = 0.5 * (T[:, a] + T[:, b])
            vec = T[:, b] - T[:, a]
            N = len(T)
            parts.append(DiracChain(2, np.repeat(mid, 2, axis=0), np.zeros((2 * N, 2), np.int64),
                                    np.tile([1, 2], N), (w * vec).reshape(-1)))
        return DiracChain.concat(2, parts)

    c0 = abs(area) * s0 / (2 * math.sqrt(3))
    S = ChainStream(2, snap, 1, (lambda k: c0 * 0.5 ** k) if scaled else None,
                    _geometric_tail(c0, 0.5) if scaled else None, (V.min(axis=0), V.max(axis=0)), None, None,
                    {"kind": "sierpinski"})
    S.boundary_fn = lambda: ChainStream(2, bd_snap, 2, None, None, S.box, None, None, {"kind": "sierpinski-boundary"})
    return S


# ------------------------------------------------------------------------------
# fields, algebraic chains, dipoles
# ------------------------------------------------------------------------------

def vectorFieldRep(X: Sequence[tuple[Form, KVector]], U: OpenRegion, base: Optional[ChainStream] = None) -> ChainStream:
    """sum_I m_{f_I} E_{alpha_I} perp U~ for X = sum_I f_I alpha_I."""
    X = list(X)
    for f, a in X:
        if f.grade != 0 or not isinstance(f, Form):
            raise ValueError("field components must be scalar forms")
    Ut = base if base is not None else openSetStream(U)

    def op(c: DiracChain) -> DiracChain:
        P = co.perp(c)
        return DiracChain.concat(c.dim, [co.multiplyChain(f, co.extrudeKV(a, P)) for f, a in X])

    S = map_stream(Ut, op, name="vector-field")
    S.meta["kind"] = "vector-field"
    return S


def algebraicStream(F: SmoothMap, base: ChainStream) -> ChainStream:
    """Snapshot-wise pushforward F_* A_j."""
    S = map_stream(base, lambda c: co.pushforward(F, c), dim=F.dim_out, name=f"pushforward:{F.name}")
    S.box = None
    S.boundary_fn = lambda: algebraicStream(F, base.boundary())
    return S


def dipoleCell(v: Sequence[float], base: ChainStream) -> ChainStream:
    """Snapshot-wise P_v A_j (a dipole cell)."""
    v = np.asarray(v, float)
    S = map_stream(base, lambda c: co.prederiv(v, c), r=base.r + 1, name="dipole",
                   rate_scale=float(np.linalg.norm(v)))
    return S


def circle_map(radius: float = 1.0) -> SmoothMap:
    """t -> radius (cos t, sin t)."""
    return SmoothMap([fm.TrigForm(1, 0, {0: [(radius, [1.0], math.pi / 2)]}),
                      fm.TrigForm(1, 0, {0: [(radius, [1.0], 0.0)]})], "circle")


# ------------------------------------------------------------------------------
# integration
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegrationConfig:
    j_min: int = 0
    j_max: int = 8
    method: str = "aitken"          # aitken | richardson | none
    ratio_window: tuple[float, float] = (0.1, 0.9)
    richardson_factor: float = 4.0


@dataclass
class IntegrationResult:
    value: float
    accelerated: float
    error_bound: Optional[float]
    rows: list[dict]
    diagnostics: dict

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "value", "diff", "accelerated", "certified_bound"])
        for r in self.rows:
            w.writerow([r["j"], _fmt(r["value"]), _fmt(r["diff"]), _fmt(r["accelerated"]),
                        _fmt(r["certified_bound"])])
        return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def aitken(xs: Sequence[float], window=(0.1, 0.9)) -> tuple[float, bool]:
    """Delta^2 estimate from the last three terms; falls back to the last
    term when the difference ratio leaves the window."""
    if len(xs) < 3:
        return xs[-1], False
    a, b, c = xs[-3:]
    d1, d2 = b - a, c - b
    if d1 == 0.0:
        return c, False
    rho = d2 / d1
    if not window[0] < abs(rho) < window[1]:
        return c, False
    return c + d2 * rho / (1.0 - rho), True


def richardson(xs: Sequence[float], factor: float = 4.0) -> float:
    """Romberg-style table with error ratios factor, factor^2, ..."""
    T = list(xs)
    f = factor
    while len(T) > 1:
        T = [(f * T[i + 1] - T[i]) / (f - 1.0) for i in range(len(T) - 1)]
        f *= factor
    return T[0]


def integrateStream(omega: Form, S: ChainStream, cfg: IntegrationConfig = IntegrationConfig(),
                    r: Optional[int] = None) -> IntegrationResult:
    r = S.r if r is None else r
    try:
        wnorm = fm.certifiedNorm(omega, r, S.box)
    except fm.NoCertificate:
        wnorm = None
    xs, rows = [], []
    accelerated_any = False
    for j in range(cfg.j_min, cfg.j_max + 1):
        x = S.evaluate(omega, j)
        tail = S.tail(j)
        bound = wnorm * tail if (wnorm is not None and tail is not None) else None
        xs.append(x)
        if cfg.method == "aitken":
            acc, used = aitken(xs, cfg.ratio_window)
            accelerated_any |= used
        elif cfg.method == "richardson":
            acc = richardson(xs[-3:], cfg.richardson_factor)
        else:
            acc = x
        rows.append({"j": j, "value": x, "diff": None if len(xs) < 2 else x - xs[-2], "accelerated": acc,
                     "certified_bound": bound})
    diffs = [abs(r_["diff"]) for r_ in rows if r_["diff"] is not None]
    diverging = len(diffs) >= 3 and diffs[-1] > diffs[-2] > diffs[-3] and diffs[-1] > 1e-12
    return IntegrationResult(xs[-1], rows[-1]["accelerated"], rows[-1]["certified_bound"], rows,
                             {"form_norm": wnorm, "accelerated": accelerated_any, "diverging": diverging,
                              "r": r})


# ------------------------------------------------------------------------------
# scenario domains
# ------------------------------------------------------------------------------

def region_from_json(obj) -> OpenRegion:
    from .chain import ball_region, box_region, slit_disk_region
    kind = obj["kind"]
    if kind == "ball":
        return ball_region(obj["centre"], float(obj["radius"]))
    if kind == "box":
        return box_region(obj["lo"], obj["hi"])
    if kind == "slit_disk":
        return slit_disk_region()
    raise ValueError(f"unknown region kind {kind!r}")


def domain_from_json(obj) -> ChainStream:
    kind = obj["kind"]
    if kind == "cube":
        return cubeStream(obj["lo"], obj["hi"])
    if kind == "cell":
        return cellStream(obj["origin"], obj["edges"], obj.get("cell", "parallelepiped"))
    if kind == "cantor":
        return cantorStream(precision=obj.get("precision", "extended"))
    if kind == "sierpinski":
        return sierpinskiStream()
    if kind == "open":
        return openSetStream(region_from_json(obj["region"]))
    if kind == "boundary":
        return domain_from_json(obj["base"]).boundary()
    if kind == "pushforward":
        if obj["map"] != "circle":
            raise ValueError(f"unknown map {obj['map']!r}")
        return algebraicStream(circle_map(float(obj.get("radius", 1.0))), domain_from_json(obj["base"]))
    raise ValueError(f"unknown domain kind {kind!r}")


def cube_difference(lo: Sequence[float], hi: Sequence[float], j: int):
    """A_j - A_{j+1} of the dyadic cube stream as a tiled chain: every level-j
    cell contributes the same pattern (its centre minus its 2^n children)."""
    from .norms import TiledChain
    lo_a, hi_a = np.asarray(lo, float), np.asarray(hi, float)
    n = len(lo_a)
    h = (hi_a - lo_a) / 2 ** j
    top = (1 << n) - 1
    kids = np.array(list(itertools.product((0.25, 0.75), repeat=n))) * h
    vol = float(np.prod(h))
    pts = np.vstack([0.5 * h, kids])
    coef = np.concatenate([[vol], np.full(len(kids), -vol / 2 ** n)])
    pattern = DiracChain(n, pts, np.zeros((len(pts), n), np.int64), np.full(len(pts), top), coef)
    offsets = lo_a + _grid([2 ** j] * n, 0, 2 ** (n * j)) * h
    return TiledChain(pattern, offsets)
