"""Differential forms as evaluable objects with exact directional derivatives.

Every form answers one question: its Taylor jets at a batch of points, per
basis blade, up to a requested order.  Pairing with a chain row
coef * (p; e^a (x) e_I) is then coef * a! * jet_I[p][a], i.e. the iterated
directional derivative L_{e^a} omega_I(p).  Derived forms (d, star, interior
products, Lie derivatives, products, pullbacks) build their jets from the jets
of their arguments, so chain/form duality holds to rounding error.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.interpolate import BSpline

from . import _jets as jt
from .chain import DiracChain, OpenRegion
from .multivec import (KVector, SymTensor, blades_of_grade, indices_of, perp_sign, popcount,
                       wedge_sign)

Jets = dict  # blade mask -> (N, M) array


class SmoothnessError(ValueError):
    """The requested derivative order exceeds what the form supports."""


class NoCertificate(ValueError):
    """The form carries no certified derivative bounds."""


def _pos_sign(mask: int, bit: int) -> int:
    return -1 if popcount(mask & ((1 << bit) - 1)) & 1 else 1


class Form:
    """Base class.  Subclasses implement :meth:`_jets` and optionally
    :meth:`coefficient_bounds`."""

    dim: int
    grade: int
    order: float = math.inf
    region: Optional[OpenRegion] = None

    def jets(self, points, order: int) -> Jets:
        if order > self.order:
            raise SmoothnessError(f"order {order} requested, form supports {self.order}")
        pts = np.atleast_2d(np.asarray(points))
        if pts.dtype != np.longdouble:
            pts = pts.astype(float)
        if pts.shape[1] != self.dim:
            raise ValueError("dimension mismatch")
        return self._jets(pts, int(order))

    def _jets(self, pts: np.ndarray, order: int) -> Jets:
        raise NotImplementedError

    def coefficient_bounds(self, j: int, lo, hi) -> Jets:
        """Per blade, sup bounds of |d^a omega_I| over the box for |a| = j.

        Arrays are indexed like the degree-j block of the jet columns.
        """
        raise NoCertificate(f"{type(self).__name__} has no certified bounds")

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other: "Form") -> "Form":
        return SumForm([self, other], [1.0, 1.0])

    def __sub__(self, other: "Form") -> "Form":
        return SumForm([self, other], [1.0, -1.0])

    def __neg__(self) -> "Form":
        return SumForm([self], [-1.0])

    def __mul__(self, s: float) -> "Form":
        return SumForm([self], [float(s)])

    __rmul__ = __mul__

    def __call__(self, p, alpha: KVector, sigma: Optional[SymTensor] = None) -> float:
        return evalElement(self, DiracChain.element(p, alpha, sigma))

    def values(self, points) -> Jets:
        """Pointwise blade coefficients omega_I(p)."""
        return {m: v[:, 0] for m, v in self.jets(points, 0).items()}


# ------------------------------------------------------------------------------
# built-in families
# ------------------------------------------------------------------------------

class PolyForm(Form):
    """Polynomial coefficients: ``terms[mask] = {exps: c}``."""

    def __init__(self, n: int, grade: int, terms: Mapping[int, Mapping[tuple, float]], region=None):
        self.dim, self.grade, self.region = n, grade, region
        self.terms = {int(m): {tuple(int(x) for x in e): float(c) for e, c in t.items() if c != 0.0}
                      for m, t in terms.items()}
        self.terms = {m: t for m, t in self.terms.items() if t}
        for m in self.terms:
            if popcount(m) != grade:
                raise ValueError("blade grade mismatch")

    @classmethod
    def from_terms(cls, n: int, grade: int, items: Sequence[tuple[Sequence[int], Sequence[int], float]],
                   region=None) -> "PolyForm":
        """Items are (1-based blade indices, exponents, coefficient)."""
        acc: dict[int, dict[tuple, float]] = {}
        for idx, exps, c in items:
            kv = KVector.from_terms(n, grade, [(idx, c)])
            for m, cc in kv.masks().items():
                t = acc.setdefault(m, {})
                e = tuple(int(x) for x in exps)
                t[e] = t.get(e, 0.0) + cc
        return cls(n, grade, acc, region)

    def degree(self) -> int:
        return max((sum(e) for t in self.terms.values() for e in t), default=0)

    def _jets(self, pts, order):
        n = self.dim
        M = jt.count(n, order)
        mons = jt.monomials(n, order)
        deg = self.degree()
        powers = [[np.ones(len(pts), dtype=pts.dtype)] for _ in range(n)]
        for i in range(n):
            for _ in range(deg):
                powers[i].append(powers[i][-1] * pts[:, i])
        out = {}
        for m, t in self.terms.items():
            J = np.zeros((len(pts), M), dtype=pts.dtype)
            for exps, c in t.items():
                for col, a in enumerate(mons):
                    if any(int(a[i]) > exps[i] for i in range(n)):
                        continue
                    w = c * math.prod(math.comb(exps[i], int(a[i])) for i in range(n))
                    v = powers[0][exps[0] - int(a[0])]
                    for i in range(1, n):
                        v = v * powers[i][exps[i] - int(a[i])]
                    J[:, col] += w * v
            out[m] = J
        return out

    def coefficient_bounds(self, j, lo, hi):
        n = self.dim
        mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
        if lo is None:
            if self.degree() > 0:
                raise NoCertificate("polynomial form needs a bounding box")
            lo = hi = np.zeros(n)
        R = np.maximum(np.abs(np.asarray(lo, float)), np.abs(np.asarray(hi, float)))
        out = {}
        for m, t in self.terms.items():
            b = np.zeros(len(mons))
            for col, a in enumerate(mons):
                for exps, c in t.items():
                    if any(int(a[i]) > exps[i] for i in range(n)):
                        continue
                    fall = math.prod(math.perm(exps[i], int(a[i])) for i in range(n))
                    b[col] += abs(c) * fall * math.prod(R[i] ** (exps[i] - int(a[i])) for i in range(n))
            out[m] = b
        return out

    def to_json(self) -> dict:
        terms = []
        for m, t in sorted(self.terms.items()):
            for e, c in sorted(t.items()):
                terms.append({"idx": list(indices_of(m)), "monomial": {"exps": list(e)}, "c": c})
        return {"family": "poly", "n": self.dim, "grade": self.grade, "terms": terms}


class TrigForm(Form):
    """Coefficients are sums of c * sin(w . x + phase)."""

    def __init__(self, n: int, grade: int, terms: Mapping[int, Sequence[tuple[float, Sequence[float], float]]],
                 region=None):
        self.dim, self.grade, self.region = n, grade, region
        self.terms = {int(m): [(float(c), np.asarray(w, float), float(ph)) for c, w, ph in t]
                      for m, t in terms.items()}

    @classmethod
    def from_terms(cls, n: int, grade: int, items, region=None) -> "TrigForm":
        """Items are (1-based blade indices, c, w, phase)."""
        acc: dict[int, list] = {}
        for idx, c, w, ph in items:
            kv = KVector.from_terms(n, grade, [(idx, c)])
            for m, cc in kv.masks().items():
                acc.setdefault(m, []).append((cc, w, ph))
        return cls(n, grade, acc, region)

    def _jets(self, pts, order):
        n = self.dim
        mons = jt.monomials(n, order)
        fac = jt.factorials(n, order)
        degs = mons.sum(axis=1)
        out = {}
        for m, t in self.terms.items():
            J = np.zeros((len(pts), len(mons)), dtype=pts.dtype)
            for c, w, ph in t:
                arg = pts @ w + ph
                wa = np.prod(w[None, :] ** mons, axis=1) / fac
                for d in range(order + 1):
                    cols = degs == d
                    if cols.any():
                        J[:, cols] += c * np.sin(arg + d * math.pi / 2)[:, None] * wa[cols][None, :]
            out[m] = J
        return out

    def coefficient_bounds(self, j, lo, hi):
        n = self.dim
        mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
        out = {}
        for m, t in self.terms.items():
            b = np.zeros(len(mons))
            for c, w, _ in t:
                b += abs(c) * np.prod(np.abs(w)[None, :] ** mons, axis=1)
            out[m] = b
        return out

    def to_json(self) -> dict:
        terms = [{"idx": list(indices_of(m)), "c": c, "w": list(map(float, w)), "phase": ph}
                 for m, t in sorted(self.terms.items()) for c, w, ph in t]
        return {"family": "trig", "n": self.dim, "grade": self.grade, "terms": terms}


class BumpForm(Form):
    """Tensor product of cardinal B-splines: prod_i N_d((x_i - start_i) / h_i).

    Compactly supported and piecewise polynomial; integer shifts of one width
    sum to one, which is what partitions of unity are built from.
    """

    grade = 0

    def __init__(self, start: Sequence[float], width: Sequence[float] | float, degree: int = 3, scale: float = 1.0):
        self.start = np.asarray(start, float)
        self.dim = len(self.start)
        self.h = np.broadcast_to(np.asarray(width, float), (self.dim,)).copy()
        self.deg = int(degree)
        self.scale = float(scale)
        self.order = self.deg - 1
        self.region = None
        self._basis = BSpline.basis_element(np.arange(self.deg + 2, dtype=float), extrapolate=False)
        self._derivs = [self._basis] + [self._basis.derivative(k) for k in range(1, self.deg)]

    def _eval1(self, nu: int, t: np.ndarray) -> np.ndarray:
        v = self._derivs[nu](np.asarray(t, float))
        return np.nan_to_num(v, nan=0.0)

    def _jets(self, pts, order):
        n = self.dim
        mons = jt.monomials(n, order)
        tab = [[self._eval1(nu, (pts[:, i] - self.start[i]) / self.h[i]) / (self.h[i] ** nu * math.factorial(nu))
                for nu in range(order + 1)] for i in range(n)]
        J = np.empty((len(pts), len(mons)))
        for col, a in enumerate(mons):
            v = tab[0][int(a[0])]
            for i in range(1, n):
                v = v * tab[i][int(a[i])]
            J[:, col] = self.scale * v
        return {0: J}

    def coefficient_bounds(self, j, lo, hi):
        n = self.dim
        mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
        b = np.array([abs(self.scale) * np.prod([2.0 ** int(a[i]) / self.h[i] ** int(a[i]) for i in range(n)])
                      for a in mons])
        return {0: b}

    def to_json(self) -> dict:
        return {"family": "bump", "start": self.start.tolist(), "width": self.h.tolist(),
                "degree": self.deg, "scale": self.scale}


class CallableForm(Form):
    """A black-box form given by pointwise blade coefficients.

    Derivatives come from central differences with h = 1e-5 (1 + |p|) and one
    Richardson step; supported up to order 2.
    """

    def __init__(self, n: int, grade: int, fn: Callable[[np.ndarray], Mapping[int, np.ndarray]], region=None):
        self.dim, self.grade, self.fn, self.region = n, grade, fn, region
        self.order = 2

    def _raw(self, pts):
        return {int(m): np.asarray(v, float) for m, v in self.fn(pts).items()}

    def _jets(self, pts, order):
        n = self.dim
        mons = jt.monomials(n, order)
        base = self._raw(pts)
        out = {m: np.zeros((len(pts), len(mons))) for m in base}
        for m in base:
            out[m][:, 0] = base[m]
        if order == 0:
            return out
        h0 = 1e-5 * (1.0 + np.linalg.norm(pts, axis=1))
        idx = jt.index(n, order)

        def shifted(offsets, h):
            return self._raw(pts + offsets * h[:, None])

        def first(i, h):
            e = np.zeros(n)
            e[i] = 1
            fp, fm = shifted(e, h), shifted(-e, h)
            return {m: (fp.get(m, 0) - fm.get(m, 0)) / (2 * h) for m in out}

        def second(i, k, h):
            ei, ek = np.zeros(n), np.zeros(n)
            ei[i] = 1
            ek[k] = 1
            if i == k:
                fp, fm = shifted(ei, h), shifted(-ei, h)
                return {m: (fp.get(m, 0) - 2 * base[m] + fm.get(m, 0)) / h ** 2 for m in out}
            a, b = shifted(ei + ek, h), shifted(ei - ek, h)
            c, d = shifted(-ei + ek, h), shifted(-ei - ek, h)
            return {m: (a.get(m, 0) - b.get(m, 0) - c.get(m, 0) + d.get(m, 0)) / (4 * h ** 2) for m in out}

        for i in range(n):
            d1, d2 = first(i, h0), first(i, h0 / 2)
            a = [0] * n
            a[i] = 1
            for m in out:
                out[m][:, idx[tuple(a)]] = (4 * d2[m] - d1[m]) / 3
        if order >= 2:
            for i in range(n):
                for k in range(i, n):
                    s1, s2 = second(i, k, h0 * 10), second(i, k, h0 * 5)
                    a = [0] * n
                    a[i] += 1
                    a[k] += 1
                    fac = 0.5 if i == k else 1.0
                    for m in out:
                        out[m][:, idx[tuple(a)]] = fac * (4 * s2[m] - s1[m]) / 3
        return out


# ------------------------------------------------------------------------------
# derived forms
# ------------------------------------------------------------------------------

class SumForm(Form):
    def __init__(self, forms: Sequence[Form], weights: Sequence[float]):
        forms = list(forms)
        if len({f.dim for f in forms}) != 1 or len({f.grade for f in forms}) != 1:
            raise ValueError("summands must share dimension and grade")
        self.forms, self.weights = forms, [float(w) for w in weights]
        self.dim, self.grade = forms[0].dim, forms[0].grade
        self.order = min(f.order for f in forms)
        self.region = forms[0].region

    def _jets(self, pts, order):
        out: Jets = {}
        for f, w in zip(self.forms, self.weights):
            for m, v in f._jets(pts, order).items():
                out[m] = out[m] + w * v if m in out else w * v
        return out

    def coefficient_bounds(self, j, lo, hi):
        out: Jets = {}
        for f, w in zip(self.forms, self.weights):
            for m, v in f.coefficient_bounds(j, lo, hi).items():
                out[m] = out[m] + abs(w) * v if m in out else abs(w) * v
        return out


class BladeMapForm(Form):
    """omega o T for a constant linear map T on k-vectors.

    ``table[out_mask]`` lists (in_mask, c) with (omega o T)_out = sum c omega_in.
    """

    def __init__(self, base: Form, grade: int, table: Mapping[int, Sequence[tuple[int, float]]]):
        self.base, self.grade, self.table = base, grade, dict(table)
        self.dim, self.order, self.region = base.dim, base.order, base.region

    def _jets(self, pts, order):
        src = self.base._jets(pts, order)
        out: Jets = {}
        for mo, items in self.table.items():
            acc = None
            for mi, c in items:
                if mi in src:
                    acc = c * src[mi] if acc is None else acc + c * src[mi]
            if acc is not None:
                out[mo] = acc
        return out

    def coefficient_bounds(self, j, lo, hi):
        src = self.base.coefficient_bounds(j, lo, hi)
        out: Jets = {}
        for mo, items in self.table.items():
            acc = None
            for mi, c in items:
                if mi in src:
                    acc = abs(c) * src[mi] if acc is None else acc + abs(c) * src[mi]
            if acc is not None:
                out[mo] = acc
        return out


class ExteriorD(Form):
    def __init__(self, base: Form):
        if base.order < 1:
            raise SmoothnessError("exterior derivative needs order >= 1")
        if base.grade >= base.dim:
            raise ValueError("top-grade form has zero exterior derivative")
        self.base = base
        self.dim, self.grade = base.dim, base.grade + 1
        self.order, self.region = base.order - 1, base.region

    def _jets(self, pts, order):
        n = self.dim
        src = self.base._jets(pts, order + 1)
        out: Jets = {}
        for mi, v in src.items():
            for bit in range(n):
                if mi & (1 << bit):
                    continue
                mo = mi | (1 << bit)
                d = _pos_sign(mo, bit) * jt.deriv(v, n, order + 1, bit)
                out[mo] = out[mo] + d if mo in out else d
        return out

    def coefficient_bounds(self, j, lo, hi):
        n = self.dim
        src = self.base.coefficient_bounds(j + 1, lo, hi)
        mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
        up = jt.monomials(n, j + 1)[jt.count(n, j):]
        upidx = {tuple(int(x) for x in a): i for i, a in enumerate(up)}
        out: Jets = {}
        for mi, v in src.items():
            for bit in range(n):
                if mi & (1 << bit):
                    continue
                mo = mi | (1 << bit)
                b = np.array([v[upidx[tuple(int(x) + (1 if i == bit else 0) for i, x in enumerate(a))]]
                              for a in mons])
                out[mo] = out[mo] + b if mo in out else b
        return out


class ConstLie(Form):
    """L_v omega for a constant vector v."""

    def __init__(self, base: Form, v: Sequence[float]):
        if base.order < 1:
            raise SmoothnessError("Lie derivative needs order >= 1")
        self.base, self.v = base, np.asarray(v, float)
        self.dim, self.grade = base.dim, base.grade
        self.order, self.region = base.order - 1, base.region

    def _jets(self, pts, order):
        n = self.dim
        src = self.base._jets(pts, order + 1)
        out = {}
        for m, J in src.items():
            acc = sum(self.v[i] * jt.deriv(J, n, order + 1, i) for i in range(n) if self.v[i] != 0.0)
            out[m] = acc if not isinstance(acc, int) else np.zeros((len(pts), jt.count(n, order)))
        return out

    def coefficient_bounds(self, j, lo, hi):
        n = self.dim
        src = self.base.coefficient_bounds(j + 1, lo, hi)
        mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
        up = jt.monomials(n, j + 1)[jt.count(n, j):]
        upidx = {tuple(int(x) for x in a): i for i, a in enumerate(up)}
        out = {}
        for m, v in src.items():
            out[m] = np.array([sum(abs(self.v[i]) * v[upidx[tuple(int(x) + (1 if q == i else 0)
                                                                  for q, x in enumerate(a))]]
                                   for i in range(n)) for a in mons])
        return out


class ProductForm(Form):
    """f * omega for a scalar field f."""

    def __init__(self, f: Form, base: Form):
        if f.grade != 0 or f.dim != base.dim:
            raise ValueError("multiplier must be a scalar field of the same dimension")
        self.f, self.base = f, base
        self.dim, self.grade = base.dim, base.grade
        self.order, self.region = min(f.order, base.order), base.region

    def _jets(self, pts, order):
        fj = self.f._jets(pts, order).get(0)
        src = self.base._jets(pts, order)
        if fj is None:
            return {}
        return {m: jt.mul(fj, v, self.dim, order) for m, v in src.items()}


class FieldInterior(Form):
    """i_V omega (kind='interior') or V-flat wedge omega (kind='flat')."""

    def __init__(self, V: "VectorFieldB", base: Form, kind: str):
        if V.dim != base.dim:
            raise ValueError("dimension mismatch")
        self.V, self.base, self.kind = V, base, kind
        self.dim = base.dim
        self.grade = base.grade - 1 if kind == "interior" else base.grade + 1
        if not 0 <= self.grade <= self.dim:
            raise ValueError("grade out of range")
        self.order = min(V.order, base.order)
        self.region = base.region

    def _jets(self, pts, order):
        n = self.dim
        vj = [c._jets(pts, order).get(0) for c in self.V.components]
        src = self.base._jets(pts, order)
        out: Jets = {}
        for mo in blades_of_grade(n, self.grade):
            acc = None
            for bit in range(n):
                if vj[bit] is None:
                    continue
                if self.kind == "interior":
                    if mo & (1 << bit):
                        continue
                    mi, s = mo | (1 << bit), wedge_sign(1 << bit, mo)
                else:
                    if not mo & (1 << bit):
                        continue
                    mi, s = mo ^ (1 << bit), _pos_sign(mo, bit)
                if mi not in src:
                    continue
                term = s * jt.mul(vj[bit], src[mi], n, order)
                acc = term if acc is None else acc + term
            if acc is not None:
                out[mo] = acc
        return out


class Pullback(Form):
    def __init__(self, F: "SmoothMap", base: Form):
        if F.dim_out != base.dim:
            raise ValueError("map codomain does not match form dimension")
        self.F, self.base = F, base
        self.dim, self.grade = F.dim_in, base.grade
        if self.grade > self.dim:
            raise ValueError("grade exceeds source dimension")
        self.order = min(base.order, F.order - 1)
        self.region = None

    def _jets(self, pts, order):
        n, m, k = self.F.dim_in, self.F.dim_out, self.grade
        fj = [c._jets(pts, order + 1).get(0, np.zeros((len(pts), jt.count(n, order + 1))))
              for c in self.F.components]
        img = np.stack([f[:, 0] for f in fj], axis=1)
        trunc = jt.count(n, order)
        inner = [f[:, :trunc] for f in fj]
        partial = [[jt.deriv(fj[r], n, order + 1, c) for c in range(n)] for r in range(m)]
        src = self.base._jets(img, order)
        comp = {mi: jt.compose(v, inner, n, m, order) for mi, v in src.items()}
        perms = list(itertools.permutations(range(k)))
        psign = [_perm_parity(p) for p in perms]
        out: Jets = {}
        for mo in blades_of_grade(n, k):
            cols = [b for b in range(n) if mo & (1 << b)]
            acc = None
            for mi, wj in comp.items():
                rows = [b for b in range(m) if mi & (1 << b)]
                det = None
                for p, s in zip(perms, psign):
                    term = jt.constant(np.ones(len(pts)), n, order) * s
                    for a in range(k):
                        term = jt.mul(term, partial[rows[a]][cols[p[a]]], n, order)
                    det = term if det is None else det + term
                if det is None:
                    det = jt.constant(np.ones(len(pts)), n, order)
                term = jt.mul(wj, det, n, order)
                acc = term if acc is None else acc + term
            if acc is not None:
                out[mo] = acc
        return out


def _perm_parity(p: Sequence[int]) -> int:
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


# ------------------------------------------------------------------------------
# fields and maps
# ------------------------------------------------------------------------------

class VectorFieldB:
    """A vector field V = sum_i V_i e_i with scalar-field components."""

    def __init__(self, components: Sequence[Form], jacobian: Optional[Callable] = None):
        comps = list(components)
        n = len(comps)
        if any(c.grade != 0 or c.dim != n for c in comps):
            raise ValueError("components must be scalar fields on R^n")
        self.components, self.dim = comps, n
        self.order = min(c.order for c in comps)
        self._jac = jacobian

    @classmethod
    def constant(cls, v: Sequence[float]) -> "VectorFieldB":
        n = len(v)
        return cls([poly_scalar(n, {(0,) * n: float(c)}) for c in v])

    @classmethod
    def linear(cls, M) -> "VectorFieldB":
        """V(x) = M x."""
        M = np.asarray(M, float)
        n = M.shape[0]
        comps = []
        for i in range(n):
            t = {}
            for j in range(n):
                e = [0] * n
                e[j] = 1
                t[tuple(e)] = M[i, j]
            comps.append(poly_scalar(n, t))
        return cls(comps, jacobian=lambda x: np.broadcast_to(M, (len(x), n, n)))

    def values(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.stack([_scalar(c, pts, 0)[:, 0] for c in self.components], axis=1)

    def values_and_jacobian(self, pts):
        pts = np.atleast_2d(pts)
        js = [_scalar(c, pts, 1) for c in self.components]
        val = np.stack([j[:, 0] for j in js], axis=1)
        jac = np.stack([j[:, 1:] for j in js], axis=1)
        return val, jac

    def jacobian(self, pts) -> np.ndarray:
        if self._jac is not None:
            return np.asarray(self._jac(np.atleast_2d(pts)), float)
        return self.values_and_jacobian(pts)[1]

    def bracket(self, other: "VectorFieldB") -> "VectorFieldB":
        """[V, W] = DW V - DV W, the standard Lie bracket of vector fields."""
        n = self.dim
        comps = []
        for i in range(n):
            terms = []
            for j in range(n):
                e = np.zeros(n)
                e[j] = 1.0
                terms.append(ProductForm(self.components[j], ConstLie(other.components[i], e)))
                terms.append(-ProductForm(other.components[j], ConstLie(self.components[i], e)))
            comps.append(SumForm(terms, [1.0] * len(terms)))
        return VectorFieldB(comps)

    def __neg__(self) -> "VectorFieldB":
        return VectorFieldB([-c for c in self.components])


class SmoothMap:
    """F: R^n -> R^m with scalar-field coordinates."""

    def __init__(self, components: Sequence[Form], name: str = "map"):
        comps = list(components)
        n = comps[0].dim
        if any(c.grade != 0 or c.dim != n for c in comps):
            raise ValueError("coordinates must be scalar fields on a common R^n")
        self.components, self.dim_in, self.dim_out = comps, n, len(comps)
        self.order = min(c.order for c in comps)
        self.name = name

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.stack([_scalar(c, pts, 0)[:, 0] for c in self.components], axis=1)

    def evaluate(self, pts):
        """Values (N, m) and Jacobians (N, m, n)."""
        pts = np.atleast_2d(pts)
        js = [_scalar(c, pts, 1) for c in self.components]
        return np.stack([j[:, 0] for j in js], axis=1), np.stack([j[:, 1:] for j in js], axis=1)

    def jacobian(self, pts) -> np.ndarray:
        return self.evaluate(pts)[1]

    def second_order_vanishes(self, pts, tol: float = 0.0) -> bool:
        if self.order < 2:
            return False
        n = self.dim_in
        lo = jt.count(n, 1)
        return all(np.all(np.abs(_scalar(c, pts, 2)[:, lo:]) <= tol) for c in self.components)

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """self o inner, with coordinates as pullbacks of 0-forms."""
        return SmoothMap([Pullback(inner, c) for c in self.components], f"{self.name}o{inner.name}")

    @classmethod
    def identity(cls, n: int) -> "SmoothMap":
        return cls([coordinate(n, i) for i in range(n)], "identity")

    @classmethod
    def affine(cls, M, b=None) -> "SmoothMap":
        M = np.asarray(M, float)
        m, n = M.shape
        b = np.zeros(m) if b is None else np.asarray(b, float)
        comps = []
        for i in range(m):
            t = {(0,) * n: b[i]}
            for j in range(n):
                e = [0] * n
                e[j] = 1
                t[tuple(e)] = M[i, j]
            comps.append(poly_scalar(n, t))
        return cls(comps, "affine")


def _scalar(f: Form, pts, order) -> np.ndarray:
    v = f.jets(pts, order).get(0)
    if v is None:
        return np.zeros((len(np.atleast_2d(pts)), jt.count(f.dim, order)))
    return v


# ------------------------------------------------------------------------------
# constructors
# ------------------------------------------------------------------------------

def poly_scalar(n: int, terms: Mapping[tuple, float], region=None) -> PolyForm:
    return PolyForm(n, 0, {0: dict(terms)}, region)


def coordinate(n: int, i: int) -> PolyForm:
    """The 0-based i-th coordinate function."""
    e = [0] * n
    e[i] = 1
    return poly_scalar(n, {tuple(e): 1.0})


def constant_form(n: int, idx: Sequence[int], c: float = 1.0) -> PolyForm:
    return PolyForm.from_terms(n, len(idx), [(idx, (0,) * n, c)])


def form_from_json(obj: Mapping, n: Optional[int] = None) -> Form:
    fam = obj.get("family")
    if fam == "poly":
        terms = obj["terms"]
        if n is None:
            n = obj.get("n") or len(terms[0]["monomial"]["exps"])
        return PolyForm.from_terms(int(n), int(obj["grade"]),
                                   [(t["idx"], t["monomial"]["exps"], t["c"]) for t in terms])
    if fam == "trig":
        n = int(n or obj["n"])
        return TrigForm.from_terms(n, int(obj["grade"]),
                                   [(t["idx"], t["c"], t["w"], t.get("phase", 0.0)) for t in obj["terms"]])
    if fam == "bump":
        return BumpForm(obj["start"], obj["width"], int(obj.get("degree", 3)), float(obj.get("scale", 1.0)))
    raise ValueError(f"unknown form family {fam!r}")


# ------------------------------------------------------------------------------
# operations
# ------------------------------------------------------------------------------

def evalChain(form: Form, A: DiracChain) -> float:
    """Pair a form with a chain: sum over rows of coef * L_{e^a} omega_I(p)."""
    if A.dim != form.dim:
        raise ValueError("dimension mismatch")
    if A.size == 0:
        return 0.0
    if np.any(A.grades != form.grade):
        raise ValueError(f"grade mismatch: form has grade {form.grade}")
    s = A.max_order
    if s > form.order:
        raise SmoothnessError(f"chain has order {s}, form supports {form.order}")
    pts, inv = np.unique(A.points, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    J = form.jets(pts, s)
    cols = jt.lookup(A.dim, A.sym)
    weight = jt.factorials(A.dim, s)[cols] * A.coef
    terms = np.zeros(A.size, dtype=A.coef.dtype)
    for m in np.unique(A.blade):
        sel = A.blade == m
        v = J.get(int(m))
        if v is not None:
            terms[sel] = weight[sel] * v[inv[sel], cols[sel]]
    return exact_sum(terms)


def exact_sum(terms: np.ndarray) -> float:
    """Correctly rounded sum; extended-precision terms are split into two
    doubles first, which represents them exactly."""
    terms = np.asarray(terms)
    if terms.dtype == np.longdouble:
        hi = terms.astype(float)
        lo = (terms - hi).astype(float)
        return math.fsum(hi.tolist() + lo.tolist())
    return math.fsum(terms.tolist())


def evalElement(form: Form, e) -> float:
    if isinstance(e, DiracChain):
        return evalChain(form, e)
    return evalChain(form, DiracChain.from_elements(form.dim, [e]))


def exteriorD(form: Form) -> Form:
    return ExteriorD(form)


def hodge(form: Form) -> Form:
    """(star omega)(p; alpha) = omega(p; perp alpha)."""
    n = form.dim
    full = (1 << n) - 1
    table = {m: [(full ^ m, float(perp_sign(m, n)))] for m in blades_of_grade(n, n - form.grade)}
    return BladeMapForm(form, n - form.grade, table)


def interior_const(v: Sequence[float], form: Form) -> Form:
    n = form.dim
    table = {}
    for mo in blades_of_grade(n, form.grade - 1):
        table[mo] = [(mo | (1 << b), v[b] * wedge_sign(1 << b, mo)) for b in range(n)
                     if not mo & (1 << b) and v[b] != 0.0]
    return BladeMapForm(form, form.grade - 1, table)


def flat_wedge_const(v: Sequence[float], form: Form) -> Form:
    n = form.dim
    table = {}
    for mo in blades_of_grade(n, form.grade + 1):
        table[mo] = [(mo ^ (1 << b), v[b] * _pos_sign(mo, b)) for b in range(n)
                     if mo & (1 << b) and v[b] != 0.0]
    return BladeMapForm(form, form.grade + 1, table)


def lie_const(v: Sequence[float], form: Form) -> Form:
    return ConstLie(form, v)


def interiorLie(V, form: Form, kind: str) -> Form:
    """i_V, V-flat wedge, or L_V; V is a constant vector or a VectorFieldB."""
    const = not isinstance(V, VectorFieldB)
    if const:
        V = np.asarray(V, float)
        if V.shape != (form.dim,):
            raise ValueError("dimension mismatch")
    if kind == "interior":
        if form.grade == 0:
            raise ValueError("interior product of a 0-form")
        return interior_const(V, form) if const else FieldInterior(V, form, "interior")
    if kind in ("flat", "flat-wedge"):
        if form.grade == form.dim:
            raise ValueError("flat wedge of a top-grade form")
        return flat_wedge_const(V, form) if const else FieldInterior(V, form, "flat")
    if kind == "lie":
        if const:
            return ConstLie(form, V)
        parts = []
        if form.grade < form.dim:
            parts.append(FieldInterior(V, ExteriorD(form), "interior"))
        if form.grade > 0:
            parts.append(ExteriorD(FieldInterior(V, form, "interior")))
        return SumForm(parts, [1.0] * len(parts))
    raise ValueError(f"unknown kind {kind!r}")


def dir_exterior(v: Sequence[float], form: Form) -> Form:
    """d_v omega = v-flat wedge L_v omega."""
    return flat_wedge_const(v, ConstLie(form, v))


def codifferential(form: Form) -> Form:
    """delta = star d star."""
    return hodge(ExteriorD(hodge(form)))


def laplacian(form: Form) -> Form:
    """Delta = d delta + delta d, dropping terms that vanish for grade reasons."""
    parts = []
    if form.grade > 0:
        parts.append(ExteriorD(codifferential(form)))
    if form.grade < form.dim:
        parts.append(codifferential(ExteriorD(form)))
    return SumForm(parts, [1.0] * len(parts))


def multiplyForm(f: Form, form: Form) -> Form:
    return ProductForm(f, form)


def pullback(F: SmoothMap, form: Form) -> Form:
    return Pullback(F, form)


def certified_bounds(form: Form, j: int, box=None) -> float:
    """Upper bound of |omega|_{B^j} over the box (sup of the j-th derivative tensor)."""
    lo, hi = _box(form, box)
    n = form.dim
    mons = jt.monomials(n, j)[jt.count(n, j - 1) if j else 0:]
    w = np.array([math.factorial(j) / np.prod([math.factorial(int(x)) for x in a]) for a in mons])
    B = form.coefficient_bounds(j, lo, hi)
    return float(math.sqrt(sum(float(np.sum(w * b ** 2)) for b in B.values())))


def certifiedNorm(form: Form, r: int, box=None) -> float:
    """Certified upper bound of ||omega||_{B^r} = max_{j <= r} |omega|_{B^j}."""
    return max(certified_bounds(form, j, box) for j in range(r + 1))


def _box(form: Form, box):
    if box is not None:
        lo, hi = box
        return np.asarray(lo, float), np.asarray(hi, float)
    if form.region is not None:
        return np.asarray(form.region.lo, float), np.asarray(form.region.hi, float)
    return None, None


@dataclass(frozen=True)
class TimeForm:
    """omega_t = sum_i t^i omega_i, with exact time derivative."""

    parts: tuple[Form, ...]

    def at(self, t: float) -> Form:
        return SumForm(list(self.parts), [t ** i for i in range(len(self.parts))])

    def dt(self, t: float) -> Form:
        if len(self.parts) == 1:
            return SumForm([self.parts[0]], [0.0])
        return SumForm(list(self.parts[1:]), [i * t ** (i - 1) for i in range(1, len(self.parts))])
