"""Verification suites: one per acceptance criterion, plus a few diagnostics.

Every suite is a deterministic function of its seed and returns a list of
:class:`Line` records, one per measured quantity.  The CLI ``verify``
command and ``tests/test_acceptance.py`` both run these.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import chainops as co
from . import flow as fl
from . import form as fm
from . import norms as nm
from . import rep
from . import samplers as sm
from .chain import DiracChain, ball_region
from .config import DEFAULT_SEED
from .multivec import blades_of_grade, indices_of


@dataclass
class Line:
    suite: str
    name: str
    measured: float
    threshold: float
    passed: bool
    seconds: float = 0.0
    note: str = ""

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} [{self.suite}] {self.name}: measured={self.measured:.3e} threshold={self.threshold:.1e}" + \
            (f" ({self.note})" if self.note else "")

    @property
    def diagnostic(self) -> bool:
        return "diagnostic" in self.note

    def to_json(self) -> dict:
        return asdict(self)


def verdict(lines: list[Line]) -> bool:
    """A criterion passes when every non-diagnostic line passes."""
    return all(ln.passed for ln in lines if not ln.diagnostic)


def _le(suite, name, value, tol, t0=None, note="") -> Line:
    value = float(value)
    return Line(suite, name, value, tol, bool(value <= tol), 0.0 if t0 is None else time.time() - t0, note)


def _scaled(a: float, b: float) -> float:
    """|a - b| relative to max(1, |a|, |b|)."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


# ------------------------------------------------------------------------------
# 1. Stokes on Dirac chains
# ------------------------------------------------------------------------------

def suite_stokes(seed: int = DEFAULT_SEED, n: Optional[int] = None, grade: Optional[int] = None,
                 trials: int = 200) -> list[Line]:
    rng = np.random.default_rng(seed)
    t0 = time.time()
    worst: dict[tuple[int, int], float] = {}
    for _ in range(trials):
        nn = n or int(rng.integers(1, 5))
        k = grade if grade is not None else int(rng.integers(1, nn + 1))
        if not 1 <= k <= nn:
            raise ValueError("grade must lie in 1..n")
        A = sm.random_chain(rng, nn, k, 2, 6)
        w = sm.random_poly_form(rng, nn, k - 1, 3, 6)
        res = abs(fm.evalChain(w, co.boundary(A)) - fm.evalChain(fm.exteriorD(w), A))
        worst[(nn, k)] = max(worst.get((nn, k), 0.0), res)
    elapsed = time.time() - t0
    out = [_le("stokes", f"n={a} grade={b}", v, 1e-10) for (a, b), v in sorted(worst.items())]
    out.append(Line("stokes", f"runtime of {trials} chains (s)", elapsed, 5.0, elapsed < 5.0, elapsed))
    return out


# ------------------------------------------------------------------------------
# 2. operator dualities
# ------------------------------------------------------------------------------

def _duality_pairs(rng, n: int, k: int):
    """(name, chain-side value, form-side value) for one random input."""
    v = rng.normal(size=n)
    A = sm.random_chain(rng, n, k, 2, 5)
    A0 = sm.random_chain(rng, n, k, 0, 5)
    out = []
    if k < n:
        w = sm.random_poly_form(rng, n, k + 1)
        out.append(("E_v / i_v", fm.evalChain(w, co.extrude(v, A)), fm.evalChain(fm.interiorLie(v, w, "interior"), A)))
        w = sm.random_poly_form(rng, n, k + 1)
        out.append(("coboundary / codifferential", fm.evalChain(w, co.coboundary(A)),
                    fm.evalChain(fm.codifferential(w), A)))
    if k > 0:
        w = sm.random_poly_form(rng, n, k - 1)
        out.append(("E_v^dagger / v-flat wedge", fm.evalChain(w, co.retract(v, A)),
                    fm.evalChain(fm.interiorLie(v, w, "flat"), A)))
        w = sm.random_poly_form(rng, n, k - 1)
        out.append(("boundary / d", fm.evalChain(w, co.boundary(A)), fm.evalChain(fm.exteriorD(w), A)))
        w = sm.random_poly_form(rng, n, k - 1)
        out.append(("directional boundary / d_v", fm.evalChain(w, co.dirBoundary(v, A)),
                    fm.evalChain(fm.dir_exterior(v, w), A)))
    w = sm.random_poly_form(rng, n, k)
    out.append(("P_v / L_v", fm.evalChain(w, co.prederiv(v, A)), fm.evalChain(fm.interiorLie(v, w, "lie"), A)))
    w = sm.random_poly_form(rng, n, n - k)
    out.append(("perp / Hodge star", fm.evalChain(w, co.perp(A)), fm.evalChain(fm.hodge(w), A)))
    w = sm.random_poly_form(rng, n, k, 4)
    out.append(("geometric Laplace / Laplacian", fm.evalChain(w, co.geomLaplace(A)),
                fm.evalChain(fm.laplacian(w), A)))
    f = sm.random_poly_form(rng, n, 0, 3, 4)
    w = sm.random_poly_form(rng, n, k)
    out.append(("m_f / f.", fm.evalChain(w, co.multiplyChain(f, A)), fm.evalChain(fm.multiplyForm(f, w), A)))
    F = sm.random_quadratic_map(rng, n)
    w = sm.random_poly_form(rng, n, k)
    out.append(("F_* / F^* (quadratic, order 0)", fm.evalChain(w, co.pushforward(F, A0)),
                fm.evalChain(fm.pullback(F, w), A0)))
    Fa = sm.random_affine_map(rng, n)
    out.append(("F_* / F^* (affine, orders 0..2)", fm.evalChain(w, co.pushforward(Fa, A)),
                fm.evalChain(fm.pullback(Fa, w), A)))
    return out


def suite_duality(seed: int = DEFAULT_SEED, trials: int = 12) -> list[Line]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    t0 = time.time()
    for _ in range(trials):
        for n in (2, 3):
            for k in range(n + 1):
                for name, a, b in _duality_pairs(rng, n, k):
                    worst[name] = max(worst.get(name, 0.0), _scaled(a, b))
    lines = [_le("duality", name, v, 1e-10, note="relative to max(1, |value|)") for name, v in worst.items()]
    # higher order divergence: box^s against Delta^s
    for s in (1, 2):
        w_s = 0.0
        for _ in range(trials):
            n = int(rng.integers(2, 4))
            k = int(rng.integers(0, n + 1))
            A = sm.random_chain(rng, n, k, 1, 4)
            w = sm.random_poly_form(rng, n, k, 2 * s + 2)
            B, W = A, w
            for _ in range(s):
                B, W = co.geomLaplace(B), fm.laplacian(W)
            w_s = max(w_s, _scaled(fm.evalChain(w, B), fm.evalChain(W, A)))
        lines.append(_le("duality", f"geometric Laplace^{s} / Laplacian^{s}", w_s, 1e-9, t0))
    return lines


# ------------------------------------------------------------------------------
# 3. algebraic identities
# ------------------------------------------------------------------------------

def _diff(X: DiracChain, Y: DiracChain) -> float:
    return (X - Y).max_abs() if (X.size or Y.size) else 0.0


def suite_algebra(seed: int = DEFAULT_SEED, trials: int = 500) -> list[Line]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    t0 = time.time()

    def rec(name, val):
        worst[name] = max(worst.get(name, 0.0), val)

    for _ in range(trials):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(0, n + 1))
        A = sm.random_chain(rng, n, k, 2, 4)
        v, w = rng.normal(size=n), rng.normal(size=n)
        if k >= 2:
            rec("boundary o boundary = 0", co.boundary(co.boundary(A)).max_abs())
        else:
            rec("boundary o boundary = 0", 0.0)
        lhs = co.boundary(co._extrude(v, A)) + (co._extrude(v, co.boundary(A)) if k > 0 else DiracChain(n))
        rec("{boundary, E_v} = P_v", _diff(lhs, co.prederiv(v, A)))
        rec("[P_v, P_w] = 0", _diff(co.prederiv(v, co.prederiv(w, A)), co.prederiv(w, co.prederiv(v, A))))
        rec("[E_v, P_w] = 0", _diff(co._extrude(v, co.prederiv(w, A)), co.prederiv(w, co._extrude(v, A))))
        rec("[E_v^dagger, P_w] = 0", _diff(co._retract(v, co.prederiv(w, A)), co.prederiv(w, co._retract(v, A))))
        car = co._extrude(v, co._retract(w, A)) + co._retract(w, co._extrude(v, A))
        rec("{E_v, E_w^dagger} = <v,w> I", _diff(car, A * float(v @ w)))
        rec("C_v^2 = <v,v> I", _diff(co.clifford(v, co.clifford(v, A)), A * float(v @ v)))
        rec("perp perp = (-1)^{k(n-k)} I", _diff(co.perp(co.perp(A)), A * (-1.0) ** (k * (n - k))))
    return [_le("algebra", name, val, 1e-12, t0) for name, val in worst.items()]


# ------------------------------------------------------------------------------
# 4. vector-field commutators
# ------------------------------------------------------------------------------

def _killing_defect(V1: fm.VectorFieldB, V2: fm.VectorFieldB) -> fm.VectorFieldB:
    """W = (DV1 + DV1^T) V2."""
    n = V1.dim
    comps = []
    for i in range(n):
        parts = []
        for j in range(n):
            ej, ei = np.eye(n)[j], np.eye(n)[i]
            parts.append(fm.ProductForm(V2.components[j], fm.ConstLie(V1.components[i], ej)))
            parts.append(fm.ProductForm(V2.components[j], fm.ConstLie(V1.components[j], ei)))
        comps.append(fm.SumForm(parts, [1.0] * len(parts)))
    return fm.VectorFieldB(comps)


def commutator_residuals(rng, n: int, V1=None, V2=None) -> dict[str, float]:
    """Pairing residuals of the three stated identities (standard bracket
    [V, W] = DW V - DV W) and of their corrected forms."""
    V1 = V1 or sm.random_field(rng, n)
    V2 = V2 or sm.random_field(rng, n)
    br = V1.bracket(V2)
    out: dict[str, float] = {}
    k = int(rng.integers(0, n + 1))
    A = sm.random_chain(rng, n, k, 1, 4)
    w = sm.random_poly_form(rng, n, k, 3)
    PP = co.prederiv(V1, co.prederiv(V2, A)) - co.prederiv(V2, co.prederiv(V1, A))
    val = fm.evalChain(w, PP)
    out["[P_V1,P_V2] = P_[V1,V2]"] = _scaled(val, fm.evalChain(w, co.prederiv(br, A)))
    out["[P_V1,P_V2] = P_[V2,V1] (corrected)"] = _scaled(val, fm.evalChain(w, co.prederiv(-br, A)))
    if k < n:
        w = sm.random_poly_form(rng, n, k + 1, 3)
        EP = co._extrude(V2, co.prederiv(V1, A)) - co.prederiv(V1, co._extrude(V2, A))
        out["[E_V2,P_V1] = E_[V1,V2]"] = _scaled(fm.evalChain(w, EP), fm.evalChain(w, co._extrude(br, A)))
    if k > 0:
        w = sm.random_poly_form(rng, n, k - 1, 3)
        RP = co._retract(V2, co.prederiv(V1, A)) - co.prederiv(V1, co._retract(V2, A))
        lhs = fm.evalChain(w, RP)
        rhs = fm.evalChain(w, co._retract(br, A))
        out["[E_V2^dagger,P_V1] = E_[V1,V2]^dagger"] = _scaled(lhs, rhs)
        W = _killing_defect(V1, V2)
        out["[E_V2^dagger,P_V1] = E_[V1,V2]^dagger + E_W^dagger (corrected)"] = \
            _scaled(lhs, rhs + fm.evalChain(w, co._retract(W, A)))
    return out


def suite_commutators(seed: int = DEFAULT_SEED, trials: int = 10) -> list[Line]:
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    t0 = time.time()
    for _ in range(trials):
        for n in (2, 3):
            for name, val in commutator_residuals(rng, n).items():
                worst[name] = max(worst.get(name, 0.0), val)
    rot = fl.rotation_field(2)
    kill = 0.0
    for _ in range(trials):
        r = commutator_residuals(rng, 2, V1=rot)
        kill = max(kill, r.get("[E_V2^dagger,P_V1] = E_[V1,V2]^dagger", 0.0))
    lines = []
    for name, val in worst.items():
        corrected = "corrected" in name
        lines.append(_le("commutators", name, val, 1e-8,
                         note="diagnostic" if corrected else "as stated, standard bracket"))
    lines.append(_le("commutators", "[E_V2^dagger,P_V1] = E_[V1,V2]^dagger with V1 Killing (rotation)", kill, 1e-8,
                     t0, note="diagnostic"))
    return lines


# ------------------------------------------------------------------------------
# 5. cube-stream Cauchy rate
# ------------------------------------------------------------------------------

def suite_cube_rate(seed: int = DEFAULT_SEED, j_max: int = 8) -> list[Line]:
    t0 = time.time()
    lines = []
    for n in (2, 3):
        for j in range(1, j_max + 1):
            T = rep.cube_difference([0.0] * n, [1.0] * n, j)
            ub = nm.normUB(T, 1)
            lines.append(_le("cube-rate", f"n={n} j={j} normUB(P_j - P_j+1, 1)", ub, 2.0 ** (-j + 1)))
        # the tiled bound is cross-checked against the materialized chain where that is cheap
        S = rep.cubeStream([0.0] * n, [1.0] * n)
        for j in (1, 2):
            direct = nm.normUB(S.snapshot(j) - S.snapshot(j + 1), 1)
            tiled = nm.normUB(rep.cube_difference([0.0] * n, [1.0] * n, j), 1)
            lines.append(_le("cube-rate", f"n={n} j={j} tiled vs materialized bound", abs(direct - tiled), 1e-12,
                             note="diagnostic"))
    elapsed = time.time() - t0
    lines.append(Line("cube-rate", "runtime (s)", elapsed, 30.0, elapsed < 30.0, elapsed))
    return lines


# ------------------------------------------------------------------------------
# 6. Riemann agreement
# ------------------------------------------------------------------------------

def monomial_integral(exps) -> Fraction:
    """Integral of x^a over the unit cube."""
    out = Fraction(1)
    for a in exps:
        out /= a + 1
    return out


RIEMANN_EXPONENTS = {
    2: [(0, 0), (1, 1), (2, 1), (3, 0), (0, 4), (2, 2), (1, 3), (4, 1), (3, 2), (5, 0)],
    3: [(0, 0, 0), (1, 1, 1), (2, 1, 0), (0, 3, 1), (2, 0, 2), (1, 2, 1), (4, 0, 0), (0, 1, 3), (2, 2, 1), (3, 1, 1)],
}


def riemann_forms(rng, n: int):
    """Ten top-degree polynomial forms with their closed-form integrals."""
    top = tuple(range(1, n + 1))
    out = []
    for exps in RIEMANN_EXPONENTS[n]:
        c = float(np.round(rng.uniform(0.5, 2.0), 3))
        out.append((fm.PolyForm.from_terms(n, n, [(top, exps, c)]), c * float(monomial_integral(exps)), exps))
    return out


def suite_riemann(seed: int = DEFAULT_SEED, depth: Optional[dict] = None) -> list[Line]:
    rng = np.random.default_rng(seed)
    depth = depth or {2: 10, 3: 7}
    lines = []
    for n in (2, 3):
        S = rep.cubeStream([0.0] * n, [1.0] * n)
        J = depth[n]
        cfg = rep.IntegrationConfig(max(0, J - 3), J, "aitken")
        for w, exact, exps in riemann_forms(rng, n):
            t0 = time.time()
            res = rep.integrateStream(w, S, cfg)
            err_raw = abs(res.value - exact)
            err = abs(res.accelerated - exact)
            note = f"raw error {err_raw:.1e} at j={J}, certified tail bound {res.error_bound:.2e}"
            lines.append(_le("riemann", f"n={n} x^{exps}", err, 1e-6, t0, note))
    return lines


# ------------------------------------------------------------------------------
# 7. Cantor set
# ------------------------------------------------------------------------------

def suite_cantor(seed: int = DEFAULT_SEED, n_max: int = 20) -> list[Line]:
    t0 = time.time()
    C = rep.cantorStream(precision="extended")
    B = C.boundary()
    x = fm.coordinate(1, 0)
    worst = 0.0
    for n in range(n_max + 1):
        worst = max(worst, abs(float(B.evaluate(x, n)) - 1.0))
    lines = [_le("cantor", f"max_n<={n_max} |int over boundary of Gamma_n of x - 1|", worst, 1e-12, t0)]
    U = rep.cantorStream(scaled=False)
    mworst = 0.0
    for n in range(n_max + 1):
        m = nm.massNorm(U.snapshot(n))
        mworst = max(mworst, abs(Fraction(m) - Fraction(2, 3) ** n) / (Fraction(2, 3) ** n))
    lines.append(_le("cantor", "max relative |mass(E_n) - (2/3)^n|", float(mworst), 4e-15,
                     note="float64 summation of 2^n terms"))
    # per stage, the boundary pairing of f is the telescoping endpoint sum,
    # and the pairing of df over Gamma_n approaches it
    f = fm.poly_scalar(1, {(3,): 1.0, (1,): -0.5, (2,): 2.0})
    df = fm.exteriorD(f)
    tel_err = lim_err = 0.0
    for n in range(0, 13):
        ks = rep.cantor_intervals(n)
        L = 3.0 ** n
        fb = f.values(((ks + 1) / L)[:, None])[0]
        fa = f.values((ks / L)[:, None])[0]
        tel = 1.5 ** n * math.fsum(fb - fa)
        tel_err = max(tel_err, abs(float(B.evaluate(f, n)) - tel))
        if n >= 8:
            lim_err = max(lim_err, abs(float(C.evaluate(df, n)) - tel))
    lines.append(_le("cantor", "boundary pairing of f vs telescoping sum, n<=12", tel_err, 1e-8, note="diagnostic"))
    lines.append(_le("cantor", "pairing of df vs telescoping sum, 8<=n<=12", lim_err, 1e-8, note="diagnostic"))
    return lines


# ------------------------------------------------------------------------------
# 8. divergence and curl theorems
# ------------------------------------------------------------------------------

def _two_sided(wl: fm.Form, Sl: rep.ChainStream, wr: fm.Form, Sr: rep.ChainStream, j: int, r: int = 1):
    a, b = Sl.evaluate(wl, j), Sr.evaluate(wr, j)
    bound = fm.certifiedNorm(wl, r, Sl.box) * Sl.tail(j) + fm.certifiedNorm(wr, r, Sr.box or Sl.box) * Sr.tail(j)
    return a, b, bound


def _stress(n: int, k: int) -> fm.PolyForm:
    """High per-variable degree on every blade, so midpoint sums are not exact."""
    exps = (4, 3, 2)[:n]
    return fm.PolyForm.from_terms(n, k, [(indices_of(m), exps, 1.0) for m in blades_of_grade(n, k)])


def suite_divergence(seed: int = DEFAULT_SEED, depth: Optional[dict] = None) -> list[Line]:
    rng = np.random.default_rng(seed)
    depth = depth or {2: 9, 3: 7}
    lines = []
    for n in (2, 3):
        j = depth[n]
        Q = rep.cubeStream([0.0] * n, [1.0] * n)
        dQ = Q.boundary()
        perp_dQ = rep.map_stream(dQ, co.perp, name="perp", rate_scale=1.0)
        perp_Q = rep.map_stream(Q, co.perp, name="perp", rate_scale=1.0)
        perp_Q.box = Q.box
        perp_dQ.box = Q.box
        # divergence: int_Q d*w = int_{perp dQ} w, w a 1-form
        t0 = time.time()
        w = sm.random_poly_form(rng, n, 1, 5, 10) + _stress(n, 1)
        a, b, bound = _two_sided(fm.exteriorD(fm.hodge(w)), Q, w, perp_dQ, j)
        lines.append(_le("divergence", f"n={n} divergence theorem, j={j}", abs(a - b), min(1e-4, bound), t0,
                         f"certified bound {bound:.2e}"))
        # curl: int_{dQ} w = int_{perp Q} *dw, w an (n-1)-form
        t0 = time.time()
        w = sm.random_poly_form(rng, n, n - 1, 5, 10) + _stress(n, n - 1)
        a, b, bound = _two_sided(w, dQ, fm.hodge(fm.exteriorD(w)), perp_Q, j)
        lines.append(_le("divergence", f"n={n} curl theorem, j={j}", abs(a - b), min(1e-4, bound), t0,
                         f"certified bound {bound:.2e}"))
    # Kelvin-Stokes on a tilted square in R^3
    t0 = time.time()
    S = rep.cellStream([0.1, 0.2, 0.0], [[1.0, 0.0, 0.3], [0.0, 1.0, 0.5]])
    w = sm.random_poly_form(rng, 3, 1, 5, 10) + _stress(3, 1)
    perp_S = rep.map_stream(S, co.perp, name="perp", rate_scale=1.0)
    perp_S.box = S.box
    a, b, bound = _two_sided(w, S.boundary(), fm.hodge(fm.exteriorD(w)), perp_S, 8)
    lines.append(_le("divergence", "surface in R^3 curl theorem, j=8", abs(a - b), min(1e-4, bound), t0,
                     f"certified bound {bound:.2e}"))
    return lines


# ------------------------------------------------------------------------------
# 9. flows
# ------------------------------------------------------------------------------

FLOW_SPACE_DEPTH = {"segment": 8, "square": 5}


def flow_scenarios():
    seg = rep.cellStream([0.2, 0.1], [[1.0, 0.3]])
    sq = rep.cubeStream([0.0, 0.0], [1.0, 1.0])
    w1 = fm.PolyForm.from_terms(2, 1, [((2,), (1, 0), 1.0), ((1,), (0, 2), 0.5)])
    w2 = fm.PolyForm.from_terms(2, 2, [((1, 2), (2, 1), 1.0), ((1, 2), (0, 0), 0.5)])
    return [
        ("rotation, segment", fl.rotation_field(), seg, w1, "segment", 0.0, 1.0),
        ("dilation, segment", fl.dilation_field(), seg, w1, "segment", 0.0, 0.5),
        ("rotation, square", fl.rotation_field(), sq, w2, "square", 0.0, 1.0),
        ("dilation, square", fl.dilation_field(), sq, w2, "square", 0.0, 0.5),
    ]


def suite_flow(seed: int = DEFAULT_SEED, depth_time: int = 10) -> list[Line]:
    lines = []
    for name, V, J0, w, shape, a, b in flow_scenarios():
        t0 = time.time()
        tab = fl.ftcTable(J0, V, w, a, b, range(2, depth_time + 1), FLOW_SPACE_DEPTH[shape])
        lines.append(_le("flow", f"FTC {name}, time depth {depth_time}", tab.residual, 1e-4, t0,
                         f"space depth {FLOW_SPACE_DEPTH[shape]}"))
        ratios = [r["ratio"] for r in tab.table if r["ratio"] is not None]
        lines.append(Line("flow", f"FTC {name}, min reduction per time depth", min(ratios), 3.5,
                          min(ratios) >= 3.5, 0.0, "must be >= threshold"))
    t0 = time.time()
    sq = rep.cubeStream([0.0, 0.0], [1.0, 1.0])
    w = fm.PolyForm.from_terms(2, 1, [((1,), (1, 2), 1.0), ((2,), (2, 1), 0.5)])
    r = fl.stokesEvolvingCheck(sq, fl.rotation_field(), w, 0.0, 1.0, depth_time, 6)
    lines.append(_le("flow", "Stokes for evolving square, rotation", r.residual, 1e-3, t0, "space depth 6"))
    t0 = time.time()
    D = fl.dilation_field()
    area = fm.constant_form(2, (1, 2))
    fam = fl.flow_family(sq.snapshot(3), D)
    worst = 0.0
    for t in (0.0, 0.25, 0.5):
        rr = fl.reynoldsCheck(fam, fm.TimeForm((area,)), D, t, 1e-3, oracle=lambda s: 2 * math.exp(2 * s))
        worst = max(worst, rr.residual, abs(fm.evalChain(area, fam(t)) - math.exp(2 * t)))
    lines.append(_le("flow", "Reynolds transport, dilation, e^{2t} area oracle", worst, 1e-4, t0))
    t0 = time.time()
    static = lambda t: sq.snapshot(3)
    lz = fl.leibnizCheck(static, fm.TimeForm((fm.constant_form(2, (1, 2), 0.0), area)),
                         fl.VectorFieldB.constant([0.0, 0.0]), 0.7)
    lines.append(_le("flow", "Leibniz rule, static square, omega_t = t dx^dy", lz.residual, 1e-8, t0,
                     "diagnostic"))
    return lines


# ------------------------------------------------------------------------------
# 10. norm sandwich and monotonicity
# ------------------------------------------------------------------------------

def suite_norms(seed: int = DEFAULT_SEED, trials: int = 200) -> list[Line]:
    from .multivec import KVector
    from .chain import ChainElement
    from .multivec import SymTensor
    rng = np.random.default_rng(seed)
    U1, U2 = ball_region((0.5, 0.5), 0.6), ball_region((0.5, 0.5), 0.9)
    bad = {"normLB <= normUB": 0, "normUB decreasing in r": 0, "translation inequality": 0,
           "open-set monotonicity": 0}
    t0 = time.time()
    count = 0
    while count < trials:
        n = 2
        k = int(rng.integers(0, 3))
        N = int(rng.integers(1, 8))
        blades = blades_of_grade(n, k)
        pts = rng.uniform(0.2, 0.8, (N, n))
        # a small alphabet of k-vectors makes cancelling pairs likely
        alph = [KVector.from_masks(n, k, {m: float(c) for m, c in zip(blades, rng.integers(-2, 3, len(blades))) if c})
                for _ in range(2)]
        els = [ChainElement(tuple(p), SymTensor(n), alph[int(rng.integers(0, 2))] * float(rng.choice([-1, 1])))
               for p in pts]
        els = [e for e in els if not e.kv.is_zero()]
        if not els:
            continue
        A = DiracChain.from_elements(n, els)
        if A.size == 0:
            continue
        count += 1
        ubs = [nm.normUB(A, r) for r in range(4)]
        lbs = [nm.normLB(A, r)[0] for r in range(4)]
        if any(l > u + 1e-12 for l, u in zip(lbs, ubs)):
            bad["normLB <= normUB"] += 1
        if any(ubs[i + 1] > ubs[i] + 1e-15 for i in range(3)):
            bad["normUB decreasing in r"] += 1
        v = rng.normal(size=n) * 0.05
        for r in range(3):
            if nm.normUB(A.translate(v) - A, r + 1) > np.linalg.norm(v) * ubs[r] + 1e-12:
                bad["translation inequality"] += 1
                break
        for r in range(3):
            if nm.normUB(A, r, U2) > nm.normUB(A, r, U1) + 1e-12:
                bad["open-set monotonicity"] += 1
                break
    note = f"violations over {trials} chains"
    return [_le("norms", name, v, 0, t0 if name.startswith("open") else None, note) for name, v in bad.items()]


# ------------------------------------------------------------------------------
# 11. change of variables
# ------------------------------------------------------------------------------

def suite_change_of_variables(seed: int = DEFAULT_SEED, trials: int = 40) -> list[Line]:
    rng = np.random.default_rng(seed)
    t0 = time.time()
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        k = int(rng.integers(0, min(n, m) + 1))
        F = sm.random_quadratic_map(rng, n, m)
        A = sm.random_chain(rng, n, k, 0, 5)
        w = sm.random_poly_form(rng, m, k, 3)
        worst = max(worst, _scaled(fm.evalChain(w, co.pushforward(F, A)), fm.evalChain(fm.pullback(F, w), A)))
    lines = [_le("change-of-variables", "F_* / F^* for quadratic maps", worst, 1e-10, t0)]
    t0 = time.time()
    circ = rep.algebraicStream(rep.circle_map(), rep.cubeStream([0.0], [2 * math.pi]))
    w = fm.PolyForm.from_terms(2, 1, [((2,), (1, 0), 1.0), ((1,), (0, 1), -1.0)])
    val = circ.evaluate(w, 6)
    lines.append(_le("change-of-variables", "circle: int x dy - y dx = 2 pi", abs(val - 2 * math.pi), 1e-4, t0))
    return lines


# ------------------------------------------------------------------------------
# extra diagnostics
# ------------------------------------------------------------------------------

def suite_uniqueness(seed: int = DEFAULT_SEED, j: int = 8) -> list[Line]:
    """Two representatives of the unit square agree on a ten-form dictionary."""
    rng = np.random.default_rng(seed)
    S1 = rep.cubeStream([0.0, 0.0], [1.0, 1.0])
    S2 = rep.cubeStream([0.0, 0.0], [1.0, 1.0], phase=0.37)
    worst = 0.0
    for w, _, _ in riemann_forms(rng, 2):
        worst = max(worst, abs(S1.evaluate(w, j) - S2.evaluate(w, j)))
    return [_le("uniqueness", f"phased vs dyadic square, j={j}", worst, 1e-4)]


SUITES: dict[str, tuple[int, Callable[..., list[Line]], str]] = {
    "stokes": (1, suite_stokes, "exact Stokes on random Dirac chains"),
    "duality": (2, suite_duality, "ten operator dualities and higher order divergence"),
    "algebra": (3, suite_algebra, "algebraic identities after canonicalization"),
    "commutators": (4, suite_commutators, "vector-field commutation relations"),
    "cube-rate": (5, suite_cube_rate, "cube-stream Cauchy rate"),
    "riemann": (6, suite_riemann, "Riemann agreement on cubes"),
    "cantor": (7, suite_cantor, "Cantor set boundary integral and mass"),
    "divergence": (8, suite_divergence, "divergence and curl theorems on streams"),
    "flow": (9, suite_flow, "chains in a flow: FTC, Stokes, Reynolds"),
    "norms": (10, suite_norms, "norm sandwich and monotonicity"),
    "change-of-variables": (11, suite_change_of_variables, "pushforward / pullback and the circle"),
    "uniqueness": (0, suite_uniqueness, "representative uniqueness proxy"),
}


def run_suite(name: str, seed: int = DEFAULT_SEED, **opts) -> list[Line]:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name][1](seed=seed, **opts)
