"""Dirac chains: finitely supported sums of elements (p; sigma (x) alpha).

A chain is held as parallel numpy arrays, one row per (point, monomial,
blade) triple::

    points  (N, n) float   the point p
    sym     (N, n) int     exponents a of the monomial e^a in S^s(R^n)
    blade   (N,)   int     bitmask of the basis blade e_I
    coef    (N,)   float   coefficient

so a row stands for coef * (p; e^a (x) e_I).  Symmetric tensors given as
products of arbitrary vectors are expanded into monomials on entry, which
makes every operator a finite index shuffle and keeps identities such as
boundary o boundary = 0 exact after canonicalization.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .multivec import PRUNE_REL, KVector, SymTensor

POINT_TOL = 1e-12


@dataclass(frozen=True)
class ChainElement:
    """One term (p; sigma (x) alpha)."""

    point: tuple[float, ...]
    sym: SymTensor
    kv: KVector

    @property
    def order(self) -> int:
        return self.sym.order

    @property
    def grade(self) -> int:
        return self.kv.grade


def _empty(n: int, dtype=float):
    return (np.zeros((0, n), dtype=dtype), np.zeros((0, n), dtype=np.int64),
            np.zeros(0, dtype=np.int64), np.zeros(0, dtype=dtype))


def _canonical(n, points, sym, blade, coef):
    dtype = points.dtype if points.dtype == np.longdouble else float
    points = np.asarray(points, dtype=dtype).reshape(-1, n)
    sym = np.asarray(sym, dtype=np.int64).reshape(-1, n)
    blade = np.asarray(blade, dtype=np.int64).reshape(-1)
    coef = np.asarray(coef, dtype=dtype).reshape(-1)
    keep = coef != 0
    if not keep.all():
        points, sym, blade, coef = points[keep], sym[keep], blade[keep], coef[keep]
    if coef.size == 0:
        return _empty(n, dtype)
    snap = np.round(points / POINT_TOL).astype(np.int64)
    order = sym.sum(axis=1)
    grade = np.bitwise_count(blade).astype(np.int64)
    # np.lexsort: last key is primary
    keys = [points[:, i] for i in reversed(range(n))]
    keys += [blade] + [sym[:, i] for i in reversed(range(n))] + [grade, order]
    keys += [snap[:, i] for i in reversed(range(n))]
    perm = np.lexsort(keys)
    points, sym, blade, coef, snap = points[perm], sym[perm], blade[perm], coef[perm], snap[perm]
    key = np.concatenate([snap, sym, blade[:, None]], axis=1)
    new = np.ones(len(coef), dtype=bool)
    new[1:] = np.any(key[1:] != key[:-1], axis=1)
    starts = np.flatnonzero(new)
    coef = np.add.reduceat(coef, starts)
    points, sym, blade, snap = points[starts], sym[starts], blade[starts], snap[starts]
    # relative pruning within each point
    newp = np.ones(len(coef), dtype=bool)
    newp[1:] = np.any(snap[1:] != snap[:-1], axis=1)
    pstarts = np.flatnonzero(newp)
    gmax = np.maximum.reduceat(np.abs(coef), pstarts)
    gid = np.cumsum(newp) - 1
    keep = np.abs(coef) > PRUNE_REL * gmax[gid]
    return points[keep], sym[keep], blade[keep], coef[keep]


class DiracChain:
    """A canonical Dirac chain in R^n (possibly of mixed grade and order).

    Instances are immutable; every operation returns a new chain.  The
    constructor canonicalizes unless ``canonical=True`` is passed by code that
    already guarantees canonical input.
    """

    __slots__ = ("dim", "points", "sym", "blade", "coef")

    def __init__(self, dim: int, points=None, sym=None, blade=None, coef=None, *, canonical=False):
        if points is None:
            points, sym, blade, coef = _empty(dim)
        elif not canonical:
            points, sym, blade, coef = _canonical(dim, points, sym, blade, coef)
        for arr in (points, sym, blade, coef):
            arr.setflags(write=False)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "sym", sym)
        object.__setattr__(self, "blade", blade)
        object.__setattr__(self, "coef", coef)

    def __setattr__(self, *_):
        raise AttributeError("DiracChain is immutable")

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "DiracChain":
        return cls(n)

    @classmethod
    def from_elements(cls, n: int, elements: Iterable[ChainElement]) -> "DiracChain":
        pts, syms, bls, cos = [], [], [], []
        for e in elements:
            if len(e.point) != n or e.sym.dim != n or e.kv.dim != n:
                raise ValueError("mixed dimensions")
            mons = e.sym.monomials() if e.sym.order else {(0,) * n: 1.0}
            for exps, sc in mons.items():
                for m, c in e.kv.masks().items():
                    pts.append(e.point)
                    syms.append(exps)
                    bls.append(m)
                    cos.append(sc * c)
        if not pts:
            return cls(n)
        return cls(n, np.array(pts, float), np.array(syms, np.int64), np.array(bls, np.int64),
                    np.array(cos, float))

    @classmethod
    def element(cls, p: Sequence[float], kv: KVector, sym: Optional[SymTensor] = None) -> "DiracChain":
        n = len(p)
        sym = sym if sym is not None else SymTensor(n)
        return cls.from_elements(n, [ChainElement(tuple(map(float, p)), sym, kv)])

    @classmethod
    def concat(cls, n: int, chains: Sequence["DiracChain"], weights: Optional[Sequence[float]] = None) -> "DiracChain":
        chains = list(chains)
        if not chains:
            return cls(n)
        if weights is None:
            weights = [1.0] * len(chains)
        dt = np.longdouble if any(c.points.dtype == np.longdouble for c in chains) else float
        return cls(n, np.concatenate([c.points.astype(dt) for c in chains]),
                   np.concatenate([c.sym for c in chains]),
                   np.concatenate([c.blade for c in chains]),
                   np.concatenate([w * c.coef.astype(dt) for c, w in zip(chains, weights)]))

    # -- basic properties ---------------------------------------------------
    @property
    def size(self) -> int:
        return int(self.coef.size)

    def __len__(self) -> int:
        return self.size

    def is_zero(self) -> bool:
        return self.size == 0

    @property
    def orders(self) -> np.ndarray:
        return self.sym.sum(axis=1)

    @property
    def grades(self) -> np.ndarray:
        return np.bitwise_count(self.blade).astype(np.int64)

    @property
    def max_order(self) -> int:
        return int(self.orders.max()) if self.size else 0

    def grade(self) -> int:
        """The common grade; raises for mixed-grade chains."""
        g = np.unique(self.grades)
        if g.size > 1:
            raise ValueError(f"mixed grades {g.tolist()}")
        return int(g[0]) if g.size else 0

    def graded(self, k: int) -> "DiracChain":
        sel = self.grades == k
        return self._take(sel)

    def of_order(self, s: int) -> "DiracChain":
        return self._take(self.orders == s)

    def _take(self, sel) -> "DiracChain":
        return DiracChain(self.dim, self.points[sel], self.sym[sel], self.blade[sel], self.coef[sel],
                          canonical=True)

    def elements(self) -> Iterator[ChainElement]:
        """Group rows into elements (p; e^a (x) alpha) with alpha a KVector."""
        n = self.dim
        start = 0
        N = self.size
        while start < N:
            stop = start + 1
            while (stop < N and np.array_equal(self.points[stop], self.points[start])
                   and np.array_equal(self.sym[stop], self.sym[start])
                   and self.grades[stop] == self.grades[start]):
                stop += 1
            k = int(self.grades[start])
            kv = KVector.from_masks(n, k, {int(self.blade[i]): float(self.coef[i]) for i in range(start, stop)})
            yield ChainElement(tuple(float(x) for x in self.points[start]),
                               SymTensor.from_exponents(self.sym[start]), kv)
            start = stop

    # -- linear structure -----------------------------------------------------
    def _check(self, other: "DiracChain") -> None:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")

    def __add__(self, other: "DiracChain") -> "DiracChain":
        self._check(other)
        return DiracChain.concat(self.dim, [self, other])

    def __sub__(self, other: "DiracChain") -> "DiracChain":
        self._check(other)
        return DiracChain.concat(self.dim, [self, other], [1.0, -1.0])

    def __neg__(self) -> "DiracChain":
        return DiracChain(self.dim, self.points, self.sym, self.blade, -self.coef, canonical=True)

    def __mul__(self, s: float) -> "DiracChain":
        return DiracChain(self.dim, self.points, self.sym, self.blade, self.coef * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "DiracChain":
        return self * (1.0 / s)

    def max_abs(self) -> float:
        return float(np.abs(self.coef).max()) if self.size else 0.0

    def allclose(self, other: "DiracChain", tol: float = 1e-12) -> bool:
        """True when A - B canonicalizes to coefficients all below ``tol``."""
        return (self - other).max_abs() <= tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiracChain):
            return NotImplemented
        return (self.dim == other.dim and self.size == other.size
                and np.array_equal(self.points, other.points) and np.array_equal(self.sym, other.sym)
                and np.array_equal(self.blade, other.blade) and np.array_equal(self.coef, other.coef))

    __hash__ = None

    def __repr__(self) -> str:
        return f"DiracChain(n={self.dim}, rows={self.size})"

    # -- geometry ----------------------------------------------------------------
    def translate(self, u: Sequence[float]) -> "DiracChain":
        u = np.asarray(u, dtype=self.points.dtype)
        if u.shape != (self.dim,):
            raise ValueError("dimension mismatch")
        return DiracChain(self.dim, self.points + u, self.sym, self.blade, self.coef)

    def support(self) -> np.ndarray:
        """Distinct points carrying nonzero canonical rows, sorted."""
        if not self.size:
            return np.zeros((0, self.dim))
        return np.unique(self.points, axis=0)

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.size:
            raise ValueError("empty chain has no support")
        return self.points.min(axis=0).astype(float), self.points.max(axis=0).astype(float)

    def restrict(self, W: "OpenRegion") -> "DiracChain":
        return self._take(W.contains(self.points))

    # -- JSON -----------------------------------------------------------------------
    def to_json(self) -> dict:
        out = []
        for e in self.elements():
            out.append({"p": list(e.point), "sym": [list(f) for f in e.sym.factors], "kv": e.kv.to_json()})
        return {"n": self.dim, "elements": out}

    @classmethod
    def from_json(cls, obj) -> "DiracChain":
        n = int(obj["n"])
        els = []
        for e in obj["elements"]:
            els.append(ChainElement(tuple(float(x) for x in e["p"]),
                                    SymTensor(n, tuple(tuple(f) for f in e.get("sym", []))),
                                    KVector.from_json(e["kv"])))
        return cls.from_elements(n, els)


def canonicalize(n: int, raw: Iterable[ChainElement]) -> DiracChain:
    return DiracChain.from_elements(n, raw)


def differenceChain(sigma: SymTensor | Sequence[Sequence[float]], p: Sequence[float], kv: KVector) -> DiracChain:
    """Expand Delta_sigma(p; alpha) on the 2^j parallelepiped vertices."""
    factors = sigma.factors if isinstance(sigma, SymTensor) else tuple(tuple(u) for u in sigma)
    n = len(p)
    j = len(factors)
    U = np.array(factors, dtype=float).reshape(j, n)
    eps = np.array(list(itertools.product((0, 1), repeat=j)), dtype=float).reshape(2 ** j, j)
    verts = np.asarray(p, float)[None, :] + eps @ U
    signs = (-1.0) ** (j - eps.sum(axis=1))
    masks = kv.masks()
    pts = np.repeat(verts, len(masks), axis=0)
    bl = np.tile(np.array(list(masks), np.int64), len(verts))
    co = np.repeat(signs, len(masks)) * np.tile(np.array(list(masks.values())), len(verts))
    return DiracChain(n, pts, np.zeros((len(pts), n), np.int64), bl, co)


def translate(u: Sequence[float], A: DiracChain) -> DiracChain:
    return A.translate(u)


def support(A: DiracChain) -> np.ndarray:
    return A.support()


def restrict(A: DiracChain, W: "OpenRegion") -> DiracChain:
    return A.restrict(W)


# ------------------------------------------------------------------------------
# open regions
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class OpenRegion:
    """A bounded open set given by a vectorized membership predicate.

    ``signed_distance`` (negative inside) is optional; when present it must be
    a lower bound on the distance to the complement for inside points, which
    is what the containment certificates rely on.  ``convex`` lets the hull
    test use vertex membership alone.
    """

    dim: int
    predicate: Callable[[np.ndarray], np.ndarray]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    signed_distance: Optional[Callable[[np.ndarray], np.ndarray]] = None
    convex: bool = False
    name: str = "region"

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        inbox = np.all((pts > lo) & (pts < hi), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if inbox.any():
            out[inbox] = np.asarray(self.predicate(pts[inbox]), dtype=bool)
        return out

    def contains_box(self, lo, hi) -> np.ndarray:
        """Certify that axis-aligned boxes (rows of lo/hi) lie in the region."""
        lo, hi = np.atleast_2d(lo), np.atleast_2d(hi)
        corners = np.array(list(itertools.product((0, 1), repeat=self.dim)), float)
        ok = np.ones(len(lo), dtype=bool)
        for c in corners:
            ok &= self.contains(lo + c * (hi - lo))
        if self.convex:
            return ok
        if self.signed_distance is not None:
            centre = 0.5 * (lo + hi)
            rad = 0.5 * np.linalg.norm(hi - lo, axis=1)
            return ok & (self.signed_distance(centre) <= -rad)
        return ok & self.contains(0.5 * (lo + hi))

    def contains_hull(self, vertices: np.ndarray, depth: int = 10) -> bool:
        """Certify conv(vertices) is inside the region.

        Convex regions only need vertex membership.  Otherwise a signed
        distance is required: the hull of a parallelepiped vertex set is
        covered by balls around recursively bisected sub-parallelepipeds.
        Without a signed distance only vertex membership (plus the centroid)
        is checked, which is a heuristic.
        """
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if not self.contains(vertices).all():
            return False
        if self.convex or len(vertices) == 1:
            return True
        if self.signed_distance is None:
            return bool(self.contains(vertices.mean(axis=0)[None])[0])
        return _ball_cover(vertices, self.signed_distance, depth)

    def to_json(self) -> dict:
        return {"kind": self.name}


def _ball_cover(vertices: np.ndarray, sd, depth: int) -> bool:
    # conv(V) is the union of the two hulls obtained by replacing either end
    # of its longest edge with the edge midpoint, so bisection stays sound
    stack = [(vertices, 0)]
    while stack:
        V, d = stack.pop()
        c = V.mean(axis=0)
        R = np.linalg.norm(V - c, axis=1).max()
        if sd(c[None])[0] <= -R:
            continue
        if d >= depth:
            return False
        d2 = ((V[:, None] - V[None]) ** 2).sum(-1)
        i, j = np.unravel_index(np.argmax(d2), d2.shape)
        m = 0.5 * (V[i] + V[j])
        left, right = V.copy(), V.copy()
        left[j] = m
        right[i] = m
        stack.append((left, d + 1))
        stack.append((right, d + 1))
    return True


def ball_region(centre: Sequence[float], radius: float) -> OpenRegion:
    c = np.asarray(centre, float)
    n = len(c)
    return OpenRegion(n, lambda x: np.linalg.norm(x - c, axis=1) < radius,
                      tuple(c - radius), tuple(c + radius),
                      lambda x: np.linalg.norm(np.atleast_2d(x) - c, axis=1) - radius,
                      convex=True, name="ball")


def box_region(lo: Sequence[float], hi: Sequence[float]) -> OpenRegion:
    lo_a, hi_a = np.asarray(lo, float), np.asarray(hi, float)

    def sd(x):
        x = np.atleast_2d(x)
        return np.max(np.maximum(lo_a - x, x - hi_a), axis=1)

    return OpenRegion(len(lo_a), lambda x: np.all((x > lo_a) & (x < hi_a), axis=1),
                      tuple(lo_a), tuple(hi_a), sd, convex=True, name="box")


def slit_disk_region() -> OpenRegion:
    """Open unit disk minus the segment [0, 1) x {0}."""

    def slit_dist(x):
        x = np.atleast_2d(x)
        t = np.clip(x[:, 0], 0.0, 1.0)
        return np.hypot(x[:, 0] - t, x[:, 1])

    def pred(x):
        return (np.linalg.norm(x, axis=1) < 1) & ~((x[:, 1] == 0) & (x[:, 0] >= 0))

    def sd(x):
        x = np.atleast_2d(x)
        return np.maximum(np.linalg.norm(x, axis=1) - 1.0, -slit_dist(x))

    return OpenRegion(2, pred, (-1.0, -1.0), (1.0, 1.0), sd, convex=False, name="slit_disk")
