"""Two-sided estimates of B^r and B^{r,U} norms of Dirac chains.

Upper bounds come from explicit difference-chain decompositions.  Terms are
w * Delta_sigma(p; a) with a a unit-mass k-vector, per-unit cost
|sigma| = prod |u_i|.  Level j pairs an opposite-sign pair of order-(j-1)
terms sharing sigma and a:

    m Delta_sigma(p; a) - m Delta_sigma(q; a) = m Delta_{(p-q) o sigma}(q; a)

which costs m |p-q| |sigma| instead of 2 m |sigma|, so pairs closer than 2
are worth merging.  Small groups are paired optimally (assignment or a
transport LP), large ones greedily along k-d tree neighbour edges.

With an open set U, every term also carries a filtered per-unit cost F: its
own cost when the hull of its vertices lies in U, otherwise the filtered cost
of the two terms it was paired from (leaves cost 1 inside U, infinity
outside).  The pairing forest never looks at U, so enlarging U can only
lower the bound.

Lower bounds pair the chain with witness forms of certified norm:
|omega(A)| / ||omega||_{B^r} <= ||A||_{B^r}.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial import cKDTree

from . import form as fm
from .chain import POINT_TOL, DiracChain, OpenRegion
from .multivec import KVector, massUpper

EXACT_GROUP = 64        # groups up to this many terms are paired optimally
NEIGHBOURS = 8          # k-d tree candidates per term in greedy pairing
LIFT_MAX_TERMS = 400    # translation lift is only attempted on chains this small
KEY_TOL = 1e-12


class OrderError(ValueError):
    """The chain contains elements of an order the estimator does not handle."""


@dataclass
class NormEstimate:
    r: int
    upper: float
    lower: float = 0.0
    decomposition: Optional["Decomposition"] = None   # iterates (factors (j,n), point, KVector)
    remainder: float = 0.0
    witness: Optional[fm.Form] = None
    strategy: str = "matching"

    def to_json(self) -> dict:
        return {"r": self.r, "upper": self.upper, "lower": self.lower, "remainder": self.remainder,
                "strategy": self.strategy,
                "decomposition": [{"sigma": np.asarray(s).tolist(), "p": np.asarray(p).tolist(),
                                   "kv": kv.to_json()} for s, p, kv in (self.decomposition or [])]}


# ------------------------------------------------------------------------------
# mass norm and level-0 terms
# ------------------------------------------------------------------------------

def _point_groups(A: DiracChain):
    """Group rows by (point, grade): returns group ids, representative points, grades."""
    snap = np.round(A.points.astype(float) / POINT_TOL).astype(np.int64)
    key = np.concatenate([snap, A.grades[:, None]], axis=1)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return inv.reshape(-1), A.points[first].astype(float), A.grades[first]


def _dense(A: DiracChain, gid: np.ndarray, G: int) -> np.ndarray:
    vec = np.zeros((G, 1 << A.dim))
    np.add.at(vec, (gid, A.blade), A.coef.astype(float))
    return vec


def _masses(vec: np.ndarray, grades: np.ndarray, n: int) -> np.ndarray:
    out = np.linalg.norm(vec, axis=1)
    hard = ~np.isin(grades, [0, 1, n - 1, n])
    for i in np.flatnonzero(hard):
        kv = KVector.from_masks(n, int(grades[i]), {m: c for m, c in enumerate(vec[i]) if c != 0.0})
        out[i] = massUpper(kv)
    return out


def massNorm(A: DiracChain) -> float:
    """Sum of element masses (mass upper bounds where the mass is not exact)."""
    if A.size and A.max_order > 0:
        raise OrderError("mass norm is defined for order-0 chains")
    if A.size == 0:
        return 0.0
    gid, _, grades = _point_groups(A)
    vec = _dense(A, gid, len(grades))
    return math.fsum(_masses(vec, grades, A.dim).tolist())


# ------------------------------------------------------------------------------
# term blocks
# ------------------------------------------------------------------------------

@dataclass
class _Block:
    """Terms of one order s: w * Delta_{sig}(p; alpha_hat[aid])."""

    p: np.ndarray       # (N, n)
    sig: np.ndarray     # (N, s, n)
    aid: np.ndarray     # (N,)
    w: np.ndarray       # (N,)
    F: np.ndarray       # (N,) filtered per-unit cost

    @property
    def cost(self) -> np.ndarray:
        if self.sig.shape[1] == 0:
            return np.ones(len(self.w))
        return np.prod(np.linalg.norm(self.sig, axis=2), axis=1)

    def take(self, sel) -> "_Block":
        return _Block(self.p[sel], self.sig[sel], self.aid[sel], self.w[sel], self.F[sel])

    @staticmethod
    def cat(blocks: Sequence["_Block"], n: int, s: int) -> "_Block":
        blocks = [b for b in blocks if len(b.w)]
        if not blocks:
            return _Block(np.zeros((0, n)), np.zeros((0, s, n)), np.zeros(0, np.int64), np.zeros(0), np.zeros(0))
        return _Block(*(np.concatenate([getattr(b, f) for b in blocks])
                        for f in ("p", "sig", "aid", "w", "F")))


def _leading_negative(u: np.ndarray) -> np.ndarray:
    nz = np.abs(u) > 1e-15
    first = np.argmax(nz, axis=1)
    lead = u[np.arange(len(u)), first]
    return nz.any(axis=1) & (lead < 0)


def _lex_greater(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ka = np.round(a / KEY_TOL)
    kb = np.round(b / KEY_TOL)
    diff = ka != kb
    first = np.argmax(diff, axis=1)
    idx = np.arange(len(a))
    return diff.any(axis=1) & (ka[idx, first] > kb[idx, first])


def _canon(b: _Block) -> _Block:
    """Flip negative-leading factors (Delta_u X(p) = -Delta_{-u} X(p+u)) and sort factors."""
    p, sig, w = b.p.copy(), b.sig.copy(), b.w.copy()
    s = sig.shape[1]
    for i in range(s):
        neg = _leading_negative(sig[:, i])
        if neg.any():
            p[neg] += sig[neg, i]
            sig[neg, i] *= -1.0
            w[neg] *= -1.0
    for _ in range(s):
        for i in range(s - 1):
            sw = _lex_greater(sig[:, i], sig[:, i + 1])
            if sw.any():
                tmp = sig[sw, i].copy()
                sig[sw, i] = sig[sw, i + 1]
                sig[sw, i + 1] = tmp
    return _Block(p, sig, b.aid, w, b.F)


def _merge(b: _Block) -> _Block:
    """Merge identical unit terms; the filtered cost of the merged term is the
    smaller one since both provenances decompose the same object."""
    if len(b.w) == 0:
        return b
    N, s, n = b.sig.shape
    key = np.concatenate([np.round(b.p / POINT_TOL), np.round(b.sig.reshape(N, s * n) / KEY_TOL),
                          b.aid[:, None].astype(float)], axis=1)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    w = np.zeros(len(first))
    np.add.at(w, inv, b.w)
    F = np.full(len(first), np.inf)
    np.minimum.at(F, inv, b.F)
    scale = np.abs(b.w).max()
    keep = np.abs(w) > 1e-14 * scale
    return _Block(b.p[first][keep], b.sig[first][keep], b.aid[first][keep], w[keep], F[keep])


def _hull_inside(U: OpenRegion, base: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """Vectorized "inside U" test for the vertex hulls of Delta_sig(base)."""
    N, s, n = sig.shape
    eps = np.array(np.meshgrid(*[[0, 1]] * s, indexing="ij")).reshape(s, -1).T if s else np.zeros((1, 0))
    verts = base[:, None, :] + np.einsum("vs,nsd->nvd", eps, sig)
    ok = U.contains(verts.reshape(-1, n)).reshape(N, -1).all(axis=1)
    if U.convex or s == 0:
        return ok
    if U.signed_distance is None:
        return ok & U.contains(verts.mean(axis=1))
    c = verts.mean(axis=1)
    R = np.linalg.norm(verts - c[:, None], axis=2).max(axis=1)
    quick = U.signed_distance(c) <= -R
    out = ok & quick
    for i in np.flatnonzero(ok & ~quick):
        out[i] = U.contains_hull(verts[i])
    return out


# ------------------------------------------------------------------------------
# pairing
# ------------------------------------------------------------------------------

def _pair_exact(P: np.ndarray, Q: np.ndarray, wp: np.ndarray, wq: np.ndarray):
    d = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
    profit = np.where(d < 2.0, 2.0 - d, 0.0)
    if not (profit > 0).any():
        return []
    if np.allclose(wp, wp[0], rtol=1e-12, atol=0.0) and np.allclose(wq, wp[0], rtol=1e-12, atol=0.0):
        ri, ci = linear_sum_assignment(profit, maximize=True)
        return [(i, j, float(wp[0])) for i, j in zip(ri, ci) if profit[i, j] > 0]
    # the LP solver works with absolute tolerances, so solve with unit-scale weights
    scale = max(wp.max(), wq.max())
    wp, wq = wp / scale, wq / scale
    ii, jj = np.nonzero(profit > 0)
    nv = len(ii)
    A_ub = np.zeros((len(P) + len(Q), nv))
    A_ub[ii, np.arange(nv)] = 1.0
    A_ub[len(P) + jj, np.arange(nv)] = 1.0
    res = linprog(-profit[ii, jj], A_ub=A_ub, b_ub=np.concatenate([wp, wq]), bounds=(0, None), method="highs")
    if res.status != 0:
        return []
    return [(int(i), int(j), float(m) * scale) for i, j, m in zip(ii, jj, res.x) if m > 1e-13]


def _pair_greedy(P: np.ndarray, Q: np.ndarray, wp: np.ndarray, wq: np.ndarray):
    edges = []
    for src, dst, flip in ((P, Q, False), (Q, P, True)):
        k = min(NEIGHBOURS, len(dst))
        d, j = cKDTree(dst).query(src, k=k)
        d, j = d.reshape(len(src), k), j.reshape(len(src), k)
        i = np.repeat(np.arange(len(src)), k)
        d, j = d.reshape(-1), j.reshape(-1)
        if flip:
            i, j = j, i
        edges.append((np.round(d / KEY_TOL), i, j))
    d = np.concatenate([e[0] for e in edges])
    i = np.concatenate([e[1] for e in edges])
    j = np.concatenate([e[2] for e in edges])
    ok = d * KEY_TOL < 2.0
    d, i, j = d[ok], i[ok], j[ok]
    order = np.lexsort((j, i, d))
    remp, remq = wp.astype(float).tolist(), wq.astype(float).tolist()
    out = []
    seen = set()
    for e in order.tolist():
        a, b = int(i[e]), int(j[e])
        if (a, b) in seen:
            continue
        seen.add((a, b))
        m = min(remp[a], remq[b])
        if m <= 0.0:
            continue
        remp[a] -= m
        remq[b] -= m
        out.append((a, b, m))
    return out


def _pair_level(b: _Block, U: Optional[OpenRegion]) -> tuple[_Block, _Block]:
    """Pair order-(j-1) terms into order-j terms; returns (new, leftover)."""
    N, s, n = b.sig.shape
    if N == 0:
        return _Block.cat([], n, s + 1), b
    key = np.concatenate([np.round(b.sig.reshape(N, s * n) / KEY_TOL), b.aid[:, None].astype(float)], axis=1)
    _, gid = np.unique(key, axis=0, return_inverse=True)
    gid = gid.reshape(-1)
    order = np.argsort(gid, kind="stable")
    bounds = np.flatnonzero(np.diff(gid[order])) + 1
    rem = b.w.copy()
    new_p, new_sig, new_aid, new_w, new_F = [], [], [], [], []
    for grp in np.split(order, bounds):
        pos = grp[b.w[grp] > 0]
        neg = grp[b.w[grp] < 0]
        if len(pos) == 0 or len(neg) == 0:
            continue
        P, Q = b.p[pos], b.p[neg]
        wp, wq = b.w[pos], -b.w[neg]
        if len(grp) <= EXACT_GROUP:
            pairs = _pair_exact(P, Q, wp, wq)
        else:
            pairs = _pair_greedy(P, Q, wp, wq)
        if not pairs:
            continue
        ii = np.array([pos[a] for a, _, _ in pairs])
        jj = np.array([neg[c] for _, c, _ in pairs])
        m = np.array([x for _, _, x in pairs])
        np.subtract.at(rem, ii, m)
        np.add.at(rem, jj, m)
        u = b.p[ii] - b.p[jj]
        new_p.append(b.p[jj])
        new_sig.append(np.concatenate([u[:, None, :], b.sig[ii]], axis=1))
        new_aid.append(b.aid[ii])
        new_w.append(m)
        new_F.append(b.F[ii] + b.F[jj])
    if not new_w:
        return _Block.cat([], n, s + 1), b
    nb = _Block(np.concatenate(new_p), np.concatenate(new_sig), np.concatenate(new_aid),
                np.concatenate(new_w), np.concatenate(new_F))
    own = nb.cost
    if U is None:
        nb.F = own
    else:
        inside = _hull_inside(U, nb.p, nb.sig)
        nb.F = np.minimum(np.where(inside, own, np.inf), nb.F)
    nb = _merge(_canon(nb))
    scale = np.abs(b.w).max()
    left = b.take(np.abs(rem) > 1e-14 * scale)
    left.w = rem[np.abs(rem) > 1e-14 * scale]
    return nb, left


# ------------------------------------------------------------------------------
# level-0 decomposition of an order-0 chain
# ------------------------------------------------------------------------------

class _AlphaTable:
    def __init__(self, n: int):
        self.n = n
        self.keys: dict[tuple, int] = {}
        self.vecs: list[np.ndarray] = []
        self.grades: list[int] = []

    def ids(self, unit: np.ndarray, grades: np.ndarray) -> np.ndarray:
        rounded = np.round(unit / 1e-10).astype(np.int64)
        key = np.concatenate([grades[:, None].astype(np.int64), rounded], axis=1)
        uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
        lut = np.empty(len(uniq), np.int64)
        for u, (row, f) in enumerate(zip(map(tuple, uniq.tolist()), first.tolist())):
            if row not in self.keys:
                self.keys[row] = len(self.vecs)
                self.vecs.append(unit[f])
                self.grades.append(int(grades[f]))
            lut[u] = self.keys[row]
        return lut[inv.reshape(-1)]

    def kv(self, aid: int, w: float) -> KVector:
        v = self.vecs[aid]
        return KVector.from_masks(self.n, self.grades[aid], {m: w * c for m, c in enumerate(v) if c != 0.0})


def _level0(A: DiracChain, table: _AlphaTable, U: Optional[OpenRegion]) -> _Block:
    n = A.dim
    gid, pts, grades = _point_groups(A)
    vec = _dense(A, gid, len(grades))
    mass = _masses(vec, grades, n)
    keep = mass > 0
    vec, pts, grades, mass = vec[keep], pts[keep], grades[keep], mass[keep]
    unit = vec / mass[:, None]
    nz = np.abs(unit) > 1e-15
    lead = unit[np.arange(len(unit)), np.argmax(nz, axis=1)]
    sgn = np.where(lead < 0, -1.0, 1.0)
    unit *= sgn[:, None]
    aid = table.ids(unit, grades)
    F = np.ones(len(mass)) if U is None else np.where(U.contains(pts), 1.0, np.inf)
    return _Block(pts, np.zeros((len(mass), 0, n)), aid, sgn * mass, F)


def _total(blocks: dict[int, _Block]) -> float:
    return math.fsum(float(np.sum(np.abs(b.w) * b.F)) for b in blocks.values() if len(b.w))


class Decomposition:
    """Terms w * Delta_sigma(p; alpha) of an upper bound, kept as arrays.

    ``prefix`` holds factors prepended to every term (translation lifts)."""

    def __init__(self, blocks: dict[int, _Block], table: _AlphaTable, prefix: Sequence[np.ndarray] = ()):
        self.blocks = {s: b for s, b in blocks.items() if len(b.w)}
        self.table = table
        self.prefix = [np.asarray(v, float) for v in prefix]

    def __len__(self) -> int:
        return sum(len(b.w) for b in self.blocks.values())

    def lifted(self, v: np.ndarray) -> "Decomposition":
        return Decomposition(self.blocks, self.table, [v] + self.prefix)

    def terms(self):
        pre = np.array(self.prefix).reshape(len(self.prefix), -1) if self.prefix else None
        for s in sorted(self.blocks):
            b = self.blocks[s]
            for i in range(len(b.w)):
                sig = b.sig[i] if pre is None else np.concatenate([pre, b.sig[i]], axis=0)
                yield sig, b.p[i].copy(), self.table.kv(int(b.aid[i]), float(b.w[i]))

    def __iter__(self):
        return self.terms()


def _matching(A: DiracChain, r: int, U: Optional[OpenRegion], extra: Optional[_Block] = None,
              table: Optional[_AlphaTable] = None):
    """Level-by-level pairing; entry j of the result is the running minimum
    (cost, blocks) over levels 0..j."""
    n = A.dim
    table = table or _AlphaTable(n)
    blocks = {0: _level0(A, table, U)}
    if extra is not None:
        blocks[1] = extra
    best = [(_total(blocks), dict(blocks))]
    for j in range(1, r + 1):
        prev = blocks.get(j - 1)
        if prev is not None and len(prev.w):
            new, left = _pair_level(prev, U)
            blocks[j - 1] = left
            if j in blocks:
                new = _merge(_Block.cat([blocks[j], new], n, j))
            blocks[j] = new
        tot = _total(blocks)
        best.append((tot, dict(blocks)) if tot <= best[-1][0] else best[-1])
    return best, table


# ------------------------------------------------------------------------------
# order-1 elements
# ------------------------------------------------------------------------------

def _order1_nodes(A1: DiracChain, table: _AlphaTable, ts: np.ndarray, U: Optional[OpenRegion]):
    """Replace each (p; u (x) alpha) by Delta_{tu}(p - tu/2; alpha/t).

    The replacement error is at most t |u|^2 |alpha| in B^2: half from the
    forward difference quotient, half from the half-step shift."""
    n = A1.dim
    gid, pts, grades = _point_groups(A1)
    ps, sigs, aids, ws = [], [], [], []
    remainder = 0.0
    # split by monomial direction: each row is (p; e_i (x) e_I)
    for g in range(len(grades)):
        rows = np.flatnonzero(gid == g)
        by_dir: dict[int, np.ndarray] = {}
        for rr in rows:
            i = int(np.argmax(A1.sym[rr]))
            by_dir.setdefault(i, np.zeros(1 << n))
            by_dir[i][A1.blade[rr]] += float(A1.coef[rr])
        for i, vec in by_dir.items():
            m = _masses(vec[None], np.array([grades[g]]), n)[0]
            if m == 0.0:
                continue
            t = float(ts[g])
            u = np.zeros(n)
            u[i] = t
            unit = vec / m
            lead = unit[np.argmax(np.abs(unit) > 1e-15)]
            sg = -1.0 if lead < 0 else 1.0
            aid = table.ids((sg * unit)[None], np.array([grades[g]]))[0]
            ps.append(pts[g] - u / 2)
            sigs.append(u[None])
            aids.append(aid)
            ws.append(sg * m / t)
            remainder += t * m
    b = _Block(np.array(ps).reshape(-1, n), np.array(sigs).reshape(-1, 1, n), np.array(aids, np.int64),
               np.array(ws), np.zeros(len(ws)))
    own = b.cost
    if U is None:
        b.F = own
    else:
        inside = _hull_inside(U, b.p, b.sig)
        b.F = np.where(inside, own, np.inf)
    return _merge(_canon(b)), remainder


def _order1_candidates(A0: DiracChain, A1: DiracChain) -> list[np.ndarray]:
    """Step sizes for the order-1 substitution: a small default, and the
    spacing to the nearest order-0 point along the element's direction."""
    _, pts1, _ = _point_groups(A1)
    out = [np.full(len(pts1), 1e-4)]
    if A0.size:
        _, pts0, _ = _point_groups(A0)
        tree = cKDTree(pts0)
        d, _ = tree.query(pts1, k=1)
        t = np.where(d > 0, 2.0 * d, 1e-4)
        out.append(t)
    return out


# ------------------------------------------------------------------------------
# translation lift
# ------------------------------------------------------------------------------

def _lift_candidates(b: _Block, limit: int = 2) -> list[np.ndarray]:
    counts: Counter = Counter()
    vecs = {}
    for a in np.unique(b.aid):
        sel = np.flatnonzero(b.aid == a)
        pos, neg = sel[b.w[sel] > 0], sel[b.w[sel] < 0]
        for i in pos:
            for j in neg:
                if abs(b.w[i] + b.w[j]) > 1e-9 * abs(b.w[i]):
                    continue
                d = b.p[i] - b.p[j]
                k = tuple(np.round(d / 1e-9).astype(np.int64).tolist())
                counts[k] += 1
                vecs.setdefault(k, d)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    out = []
    for k, _ in ranked[:limit]:
        out.append(vecs[k])
        out.append(-vecs[k])
    return out


def _recover(A: DiracChain, v: np.ndarray, max_size: int) -> Optional[DiracChain]:
    """Solve T_v B - B = A for finitely supported B by summing along lines."""
    n = A.dim
    vv = float(v @ v)
    if vv == 0.0:
        return None
    gid, pts, grades = _point_groups(A)
    vec = _dense(A, gid, len(grades))
    t = pts @ v / vv
    perp_ = pts - t[:, None] * v
    frac = t - np.floor(t + 1e-9)
    key = np.concatenate([np.round(perp_ / 1e-9), np.round(frac[:, None] / 1e-9), grades[:, None]], axis=1)
    _, line = np.unique(key, axis=0, return_inverse=True)
    line = line.reshape(-1)
    out_p, out_b, out_c = [], [], []
    for L in np.unique(line):
        idx = np.flatnonzero(line == L)
        k = np.round(t[idx] - t[idx].min()).astype(np.int64)
        order = np.argsort(k)
        idx, k = idx[order], k[order]
        if np.abs(vec[idx].sum(axis=0)).max() > 1e-9 * np.abs(vec[idx]).max():
            return None
        acc = np.zeros(1 << n)
        base = pts[idx[0]]
        pos_of = dict(zip(k.tolist(), idx.tolist()))
        for kk in range(int(k[0]), int(k[-1])):
            if kk in pos_of:
                acc = acc - vec[pos_of[kk]]
                p = pts[pos_of[kk]]
            else:
                p = base + (kk - k[0]) * v
            for m in np.flatnonzero(np.abs(acc) > 0):
                out_p.append(p)
                out_b.append(m)
                out_c.append(acc[m])
            if len(out_c) > max_size:
                return None
    if not out_c:
        return None
    B = DiracChain(n, np.array(out_p), np.zeros((len(out_c), n), np.int64), np.array(out_b, np.int64),
                   np.array(out_c))
    if (B.translate(v) - B - A).max_abs() > 1e-9 * max(A.max_abs(), 1.0):
        return None
    return B


# ------------------------------------------------------------------------------
# public estimators
# ------------------------------------------------------------------------------

def _levels(A: DiracChain, r: int, U: Optional[OpenRegion], lift: bool) -> list[NormEstimate]:
    """Estimates for every order 0..r, each no larger than the previous."""
    n = A.dim
    if A.size == 0:
        return [NormEstimate(j, 0.0) for j in range(r + 1)]
    A0, A1 = A.of_order(0), A.of_order(1)
    if A1.size:
        out: list[Optional[NormEstimate]] = [None] * (r + 1)
        for ts in _order1_candidates(A0, A1):
            table = _AlphaTable(n)
            extra, rem = _order1_nodes(A1, table, ts, U)
            runs, table = _matching(A0, r, U, extra, table)
            for j in range(2, r + 1):
                cost, blocks = runs[j]
                if out[j] is None or cost + rem < out[j].upper:
                    out[j] = NormEstimate(j, cost + rem, decomposition=Decomposition(blocks, table), remainder=rem)
        return out
    runs, table = _matching(A, r, U)
    out = [NormEstimate(j, c, decomposition=Decomposition(b, table)) for j, (c, b) in enumerate(runs)]
    if lift and U is None and r >= 1:
        base = _level0(A, _AlphaTable(n), None)
        if len(base.w) <= LIFT_MAX_TERMS:
            for v in _lift_candidates(base):
                B = _recover(A, v, 4 * A.size)
                if B is None:
                    continue
                nv = float(np.linalg.norm(v))
                for j, sub in enumerate(_levels(B, r - 1, None, lift), start=1):
                    if nv * sub.upper < out[j].upper:
                        out[j] = NormEstimate(j, nv * sub.upper, decomposition=sub.decomposition.lifted(v),
                                              strategy="lift")
    for j in range(1, r + 1):
        if out[j - 1].upper < out[j].upper:
            prev = out[j - 1]
            out[j] = NormEstimate(j, prev.upper, decomposition=prev.decomposition, strategy=prev.strategy)
    return out


def estimateUB(A: DiracChain, r: int, U: Optional[OpenRegion] = None, *, lift: bool = True) -> NormEstimate:
    """Certified upper bound with an explicit decomposition."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if A.size and (A.max_order > 1 or (A.max_order == 1 and r < 2)):
        raise OrderError("order-0 chains (or order-1 elements with r >= 2) only")
    return _levels(A, r, U, lift)[r]


def normUB(A, r: int, U: Optional[OpenRegion] = None) -> float:
    if isinstance(A, TiledChain):
        return A.normUB(r, U)
    return estimateUB(A, r, U).upper


def reconstruct(n: int, decomposition: list) -> DiracChain:
    """Expand a decomposition back into a Dirac chain."""
    from .chain import differenceChain
    parts = [differenceChain([tuple(u) for u in s], p, kv) for s, p, kv in decomposition]
    return DiracChain.concat(n, parts)


# ------------------------------------------------------------------------------
# lower bounds
# ------------------------------------------------------------------------------

def default_dictionary(A: DiracChain, r: int) -> list[fm.Form]:
    """Constant blade forms, centred linear and quadratic coefficient forms on
    the support box, and unit-frequency sine forms (globally certified)."""
    n = A.dim
    grades = sorted(set(A.grades.tolist()))
    lo, hi = A.support_box()
    c = 0.5 * (lo + hi)
    out: list[fm.Form] = []
    for k in grades:
        for m in _blades(n, k):
            idx = _idx(m)
            out.append(fm.constant_form(n, idx))
            for i in range(n):
                e1 = [0] * n
                e1[i] = 1
                lin = fm.PolyForm.from_terms(n, k, [(idx, e1, 1.0), (idx, (0,) * n, -c[i])])
                out.append(lin)
                e2 = [0] * n
                e2[i] = 2
                quad = fm.PolyForm.from_terms(n, k, [(idx, e2, 1.0), (idx, e1, -2 * c[i]),
                                                     (idx, (0,) * n, c[i] ** 2)])
                out.append(quad)
                w = np.zeros(n)
                w[i] = 1.0
                for ph in (0.0, math.pi / 2):
                    out.append(fm.TrigForm.from_terms(n, k, [(idx, 1.0, w, ph - float(w @ c))]))
    return out


def _blades(n, k):
    from .multivec import blades_of_grade
    return blades_of_grade(n, k)


def _idx(m):
    from .multivec import indices_of
    return indices_of(m)


def normLB(A: DiracChain, r: int, dictionary: Optional[Sequence[fm.Form]] = None, box=None):
    """Lower bound max |omega(A)| / certifiedNorm(omega, r) and its witness.

    Polynomial witnesses are certified over the support box (or ``box``);
    see the module notes on what that certifies."""
    if A.size == 0:
        return 0.0, None
    if dictionary is not None and len(dictionary) == 0:
        raise ValueError("empty dictionary")
    forms = list(dictionary) if dictionary is not None else default_dictionary(A, r)
    if box is None:
        box = A.support_box()
    best, wit = 0.0, None
    for w in forms:
        if w.grade not in set(A.grades.tolist()):
            continue
        part = A.graded(w.grade)
        if part.max_order > w.order:
            continue
        bound = fm.certifiedNorm(w, r, box)
        if bound <= 0:
            continue
        val = abs(fm.evalChain(w, part)) / bound
        if val > best:
            best, wit = val, w
    return best, wit


def estimateNorm(A, r: int, U: Optional[OpenRegion] = None, dictionary=None, *, lift: bool = True) -> NormEstimate:
    if isinstance(A, TiledChain):
        return NormEstimate(r, A.normUB(r, U), strategy="tiled")
    est = estimateUB(A, r, U, lift=lift)
    est.lower, est.witness = normLB(A, r, dictionary)
    return est


# ------------------------------------------------------------------------------
# tiled chains
# ------------------------------------------------------------------------------

@dataclass
class TiledChain:
    """sum_k T_{o_k} pattern, for periodic chains too large to materialize.

    Any decomposition of the pattern translates to one of each tile, so
    count * UB(pattern) bounds the norm of the sum."""

    pattern: DiracChain
    offsets: np.ndarray

    @property
    def dim(self) -> int:
        return self.pattern.dim

    @property
    def size(self) -> int:
        return self.pattern.size * len(self.offsets)

    def materialize(self) -> DiracChain:
        P = self.pattern
        K = len(self.offsets)
        pts = (P.points[None, :, :] + self.offsets[:, None, :]).reshape(-1, P.dim)
        return DiracChain(P.dim, pts, np.tile(P.sym, (K, 1)), np.tile(P.blade, K), np.tile(P.coef, K))

    def normUB(self, r: int, U: Optional[OpenRegion] = None) -> float:
        if U is not None:
            return estimateUB(self.materialize(), r, U).upper
        return len(self.offsets) * estimateUB(self.pattern, r).upper

    def evaluate(self, form: fm.Form, chunk: int = 1 << 16) -> float:
        per = max(1, chunk // max(self.pattern.size, 1))
        vals = []
        for s in range(0, len(self.offsets), per):
            sub = TiledChain(self.pattern, self.offsets[s:s + per]).materialize()
            vals.append(fm.evalChain(form, sub))
        return math.fsum(vals)
