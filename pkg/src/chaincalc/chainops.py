"""Chain-side operators.

Every operator acts on the row arrays of a :class:`DiracChain`.  Constant
vector operators are index shuffles: E_v and E_v^dagger touch only the blade
bitmask (they commute with prederivatives), P_v only the monomial exponents.
Field versions go through multiplication by a function, whose action on an
order-s element is the Leibniz expansion

    m_f (p; e^a (x) alpha) = sum_{b <= a} a!/(a-b)! c_b(f)(p) (p; e^{a-b} (x) alpha)

with c_b the Taylor coefficients of f at p.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _jets as jt
from . import form as fm
from .chain import DiracChain
from .form import Form, SmoothMap, VectorFieldB
from .multivec import KVector, below_count, blades_of_grade, expand_linear_product, perp_sign


def _vec(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError("dimension mismatch")
    return v


def _rows(A: DiracChain, parts) -> DiracChain:
    """Assemble a chain from (points, sym, blade, coef) row blocks."""
    parts = [p for p in parts if len(p[3])]
    if not parts:
        return DiracChain(A.dim)
    return DiracChain(A.dim, *(np.concatenate([p[i] for p in parts]) for i in range(4)))


# ------------------------------------------------------------------------------
# constant-vector primitives
# ------------------------------------------------------------------------------

def _extrude_const(v: np.ndarray, A: DiracChain) -> DiracChain:
    parts = []
    for bit in np.flatnonzero(v):
        sel = (A.blade & (1 << int(bit))) == 0
        if not sel.any():
            continue
        b = A.blade[sel]
        sign = np.where(below_count(b, int(bit)) & 1, -1.0, 1.0)
        parts.append((A.points[sel], A.sym[sel], b | (1 << int(bit)), A.coef[sel] * sign * v[bit]))
    return _rows(A, parts)


def extrudeKV(alpha: KVector, A: DiracChain) -> DiracChain:
    """Wedge a constant k-vector onto every row: (p; sigma (x) alpha ^ beta)."""
    if alpha.dim != A.dim:
        raise ValueError("dimension mismatch")
    parts = []
    for ma, ca in alpha.masks().items():
        sel = (A.blade & ma) == 0
        if not sel.any():
            continue
        b = A.blade[sel]
        swaps = np.zeros(len(b), np.int64)
        for bit in range(A.dim):
            if ma & (1 << bit):
                swaps += np.bitwise_count(b & ~((1 << (bit + 1)) - 1)).astype(np.int64)
        sign = np.where(swaps & 1, -1.0, 1.0)
        parts.append((A.points[sel], A.sym[sel], b | ma, A.coef[sel] * sign * ca))
    return _rows(A, parts)


def _retract_const(v: np.ndarray, A: DiracChain) -> DiracChain:
    parts = []
    for bit in np.flatnonzero(v):
        sel = (A.blade & (1 << int(bit))) != 0
        if not sel.any():
            continue
        b = A.blade[sel]
        sign = np.where(below_count(b, int(bit)) & 1, -1.0, 1.0)
        parts.append((A.points[sel], A.sym[sel], b ^ (1 << int(bit)), A.coef[sel] * sign * v[bit]))
    return _rows(A, parts)


def _prederiv_const(v: np.ndarray, A: DiracChain) -> DiracChain:
    parts = []
    for i in np.flatnonzero(v):
        sym = A.sym.copy()
        sym[:, i] += 1
        parts.append((A.points, sym, A.blade, A.coef * v[i]))
    return _rows(A, parts)


# ------------------------------------------------------------------------------
# multiplication by a function
# ------------------------------------------------------------------------------

def multiplyChain(f: Form, A: DiracChain) -> DiracChain:
    """m_f A, exact at every order through the Leibniz expansion."""
    if f.grade != 0:
        raise ValueError("multiplier must be a scalar field")
    if f.dim != A.dim:
        raise ValueError("dimension mismatch")
    if A.size == 0:
        return A
    n, s = A.dim, A.max_order
    if s > f.order:
        raise fm.SmoothnessError(f"chain order {s} exceeds multiplier order {f.order}")
    pts, inv = np.unique(A.points, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    J = f.jets(pts, s).get(0)
    if J is None:
        return DiracChain(n)
    parts = []
    for col, b in enumerate(jt.monomials(n, s)):
        sel = np.all(A.sym >= b, axis=1)
        if not sel.any():
            continue
        a = A.sym[sel]
        fall = np.ones(len(a))
        for i in range(n):
            for t in range(int(b[i])):
                fall *= a[:, i] - t
        parts.append((A.points[sel], a - b, A.blade[sel], A.coef[sel] * fall * J[inv[sel], col]))
    return _rows(A, parts)


# ------------------------------------------------------------------------------
# public primitives
# ------------------------------------------------------------------------------

def extrude(v, A: DiracChain) -> DiracChain:
    """E_v (constant v) or E_V = sum_i m_{V_i} E_{e_i} (vector field)."""
    if A.size and A.grades.max() >= A.dim:
        raise ValueError("extrusion of a top-grade chain")
    return _extrude(v, A)


def _extrude(v, A: DiracChain) -> DiracChain:
    if isinstance(v, VectorFieldB):
        return _field_sum(v, A, _extrude_const)
    return _extrude_const(_vec(v, A.dim), A)


def retract(v, A: DiracChain) -> DiracChain:
    """E_v^dagger (constant v) or its field version sum_i m_{V_i} E_{e_i}^dagger."""
    if A.size and A.grades.min() == 0:
        raise ValueError("retraction of a grade-0 chain")
    return _retract(v, A)


def _retract(v, A: DiracChain) -> DiracChain:
    if isinstance(v, VectorFieldB):
        return _field_sum(v, A, _retract_const)
    return _retract_const(_vec(v, A.dim), A)


def _field_sum(V: VectorFieldB, A: DiracChain, prim) -> DiracChain:
    if V.dim != A.dim:
        raise ValueError("dimension mismatch")
    out = []
    for i, comp in enumerate(V.components):
        e = np.zeros(A.dim)
        e[i] = 1.0
        B = prim(e, A)
        if B.size:
            out.append(multiplyChain(comp, B))
    return DiracChain.concat(A.dim, out)


def prederiv(v, A: DiracChain) -> DiracChain:
    """P_v (constant v: exact order bump) or P_V = boundary E_V + E_V boundary."""
    if isinstance(v, VectorFieldB):
        return boundary(_extrude(v, A)) + _extrude(v, boundary(A))
    return _prederiv_const(_vec(v, A.dim), A)


def boundary(A: DiracChain) -> DiracChain:
    """sum_i P_{e_i} E_{e_i}^dagger; grade-0 rows map to zero."""
    parts = []
    for bit in range(A.dim):
        sel = (A.blade & (1 << bit)) != 0
        if not sel.any():
            continue
        b = A.blade[sel]
        sign = np.where(below_count(b, bit) & 1, -1.0, 1.0)
        sym = A.sym[sel].copy()
        sym[:, bit] += 1
        parts.append((A.points[sel], sym, b ^ (1 << bit), A.coef[sel] * sign))
    return _rows(A, parts)


def dirBoundary(v, A: DiracChain) -> DiracChain:
    """partial_v = P_v E_v^dagger."""
    return prederiv(v, retract(v, A))


def perp(A: DiracChain) -> DiracChain:
    n = A.dim
    full = (1 << n) - 1
    table = np.array([perp_sign(m, n) for m in range(1 << n)], dtype=float)
    return DiracChain(n, A.points, A.sym, full ^ A.blade, A.coef * table[A.blade])


def clifford(v, A: DiracChain) -> DiracChain:
    """C_v = E_v + E_v^dagger."""
    return _extrude(v, A) + _retract(v, A)


def coboundary(A: DiracChain) -> DiracChain:
    """The geometric coboundary perp boundary perp."""
    return perp(boundary(perp(A)))


def geomLaplace(A: DiracChain) -> DiracChain:
    return coboundary(boundary(A)) + boundary(coboundary(A))


def geomDirac(A: DiracChain) -> DiracChain:
    return boundary(A) + coboundary(A)


# ------------------------------------------------------------------------------
# pushforward and Cartesian product
# ------------------------------------------------------------------------------

class UnsupportedPushforward(ValueError):
    """Order >= 1 elements pushed through a non-affine map."""


def _minor_dets(jac: np.ndarray, rows: list[int], cols: list[int]) -> np.ndarray:
    k = len(cols)
    if k == 0:
        return np.ones(len(jac))
    return np.linalg.det(jac[:, rows][:, :, cols])


def pushforward(F: SmoothMap, A: DiracChain) -> DiracChain:
    """F_*(p; sigma (x) alpha) = (F(p); F_{p*} sigma (x) F_{p*} alpha).

    Order-0 rows only need the Jacobian.  Rows of positive order are exact
    only for affine F (checked through vanishing second-order jets); other
    maps raise :class:`UnsupportedPushforward`.
    """
    n, m = F.dim_in, F.dim_out
    if A.dim != n:
        raise ValueError("dimension mismatch")
    if A.size == 0:
        return DiracChain(m)
    pts, inv = np.unique(A.points, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    img, jac = F.evaluate(pts)
    if A.max_order > 0 and not F.second_order_vanishes(pts[inv[A.orders > 0]], tol=1e-13):
        raise UnsupportedPushforward("pushforward of order >= 1 elements needs an affine map")
    out_pts, out_sym, out_bl, out_co = [], [], [], []
    for mi in np.unique(A.blade):
        mi = int(mi)
        sel = np.flatnonzero(A.blade == mi)
        cols = [b for b in range(n) if mi & (1 << b)]
        k = len(cols)
        if k > m:
            continue
        for mo in blades_of_grade(m, k):
            rows = [b for b in range(m) if mo & (1 << b)]
            det = _minor_dets(jac, rows, cols)[inv[sel]]
            nz = det != 0.0
            if not nz.any():
                continue
            s = sel[nz]
            d = det[nz]
            zero = A.orders[s] == 0
            if zero.any():
                out_pts.append(img[inv[s[zero]]])
                out_sym.append(np.zeros((int(zero.sum()), m), np.int64))
                out_bl.append(np.full(int(zero.sum()), mo, np.int64))
                out_co.append(A.coef[s[zero]] * d[zero])
            for r, dr in zip(s[~zero], d[~zero]):
                factors = []
                for i in range(n):
                    factors.extend([jac[inv[r], :, i]] * int(A.sym[r, i]))
                for exps, c in expand_linear_product(m, factors).items():
                    out_pts.append(img[inv[r]][None])
                    out_sym.append(np.array([exps], np.int64))
                    out_bl.append(np.array([mo], np.int64))
                    out_co.append(np.array([A.coef[r] * dr * c]))
    if not out_co:
        return DiracChain(m)
    return DiracChain(m, np.concatenate(out_pts), np.concatenate(out_sym), np.concatenate(out_bl),
                      np.concatenate(out_co))


def cartesian(A: DiracChain, B: DiracChain) -> DiracChain:
    """A x B in R^{n+m}: points and monomials concatenate, blades wedge as
    iota_1* alpha ^ iota_2* beta (sign +1 since all first-factor indices come first)."""
    n, m = A.dim, B.dim
    if A.size == 0 or B.size == 0:
        return DiracChain(n + m)
    ia = np.repeat(np.arange(A.size), B.size)
    ib = np.tile(np.arange(B.size), A.size)
    pts = np.concatenate([A.points[ia], B.points[ib]], axis=1)
    sym = np.concatenate([A.sym[ia], B.sym[ib]], axis=1)
    bl = A.blade[ia] | (B.blade[ib] << n)
    return DiracChain(n + m, pts, sym, bl, A.coef[ia] * B.coef[ib])


# ------------------------------------------------------------------------------
# operator registry
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainOperator:
    """A named chain operator with its form-side dual, when one exists."""

    name: str
    dk: int
    ds: int
    apply: Callable[[DiracChain], DiracChain]
    dual: Optional[Callable[[Form], Form]] = None

    def __call__(self, A: DiracChain) -> DiracChain:
        return self.apply(A)


def make_operator(name: str, v: Optional[Sequence[float]] = None, f: Optional[Form] = None,
                  F: Optional[SmoothMap] = None) -> ChainOperator:
    """Build a registered operator; vector-, function- and map-parametrized
    operators take ``v``, ``f`` or ``F``."""
    if name == "extrude":
        return ChainOperator(name, 1, 0, lambda A: extrude(v, A), lambda w: fm.interiorLie(v, w, "interior"))
    if name == "retract":
        return ChainOperator(name, -1, 0, lambda A: retract(v, A), lambda w: fm.interiorLie(v, w, "flat"))
    if name == "prederiv":
        return ChainOperator(name, 0, 1, lambda A: prederiv(v, A), lambda w: fm.interiorLie(v, w, "lie"))
    if name == "boundary":
        return ChainOperator(name, -1, 1, boundary, fm.exteriorD)
    if name == "dirBoundary":
        return ChainOperator(name, -1, 1, lambda A: dirBoundary(v, A), lambda w: fm.dir_exterior(v, w))
    if name == "perp":
        return ChainOperator(name, 0, 0, perp, fm.hodge)
    if name == "clifford":
        return ChainOperator(name, 0, 0, lambda A: clifford(v, A))
    if name == "coboundary":
        return ChainOperator(name, 1, 1, coboundary, fm.codifferential)
    if name == "geomLaplace":
        return ChainOperator(name, 0, 2, geomLaplace, fm.laplacian)
    if name == "geomDirac":
        return ChainOperator(name, 0, 1, geomDirac)
    if name == "multiply":
        return ChainOperator(name, 0, 0, lambda A: multiplyChain(f, A), lambda w: fm.multiplyForm(f, w))
    if name == "pushforward":
        return ChainOperator(name, 0, 0, lambda A: pushforward(F, A), lambda w: fm.pullback(F, w))
    raise KeyError(f"unknown operator {name!r}")


OPERATOR_NAMES = ("extrude", "retract", "prederiv", "boundary", "dirBoundary", "perp", "clifford",
                  "coboundary", "geomLaplace", "geomDirac", "multiply", "pushforward")


def perp_operator_product_table(n: int) -> dict[tuple[int, ...], float]:
    """Diagnostic: the sign s_I with C_{e_n} ... C_{e_1} e_I = s_I e_{I^c} (C_{e_1} applied first).

    Compared against :func:`perp_sign` this exposes the grade-dependent sign
    discrepancy between the operator-product formula and the wedge relation.
    """
    from .multivec import indices_of
    out = {}
    for m in range(1 << n):
        A = DiracChain(n, np.zeros((1, n)), np.zeros((1, n), np.int64), np.array([m]), np.array([1.0]))
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            A = clifford(e, A)
        out[indices_of(m)] = float(A.coef[0]) if A.size else 0.0
    return out
