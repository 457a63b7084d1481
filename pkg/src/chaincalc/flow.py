"""Flows of vector fields and chains carried along them.

Trajectories and their variational Jacobians are integrated together with
classical fixed-step RK4; the step is halved until two successive runs
agree to the point tolerance.  An evolving chain smears a Dirac chain over
a time interval: with time midpoints t_q and weight dt = (b - a) / 2^m,

    {J_t}_a^b  ~  sum_q sum_i dt * (phi_{t_q}(p_i); D phi_{t_q} alpha_i),

with the time factor ordered first so that no grade-dependent sign appears.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import chainops as co
from . import form as fm
from .chain import DiracChain
from .form import Form, TimeForm, VectorFieldB
from .multivec import blades_of_grade
from .rep import ChainStream


class FlowError(RuntimeError):
    """Step halving did not reach the point tolerance."""


@dataclass
class FlowMap:
    """phi_t for an autonomous field V, with D phi_t from the variational
    equation J' = DV(x) J."""

    field: VectorFieldB
    tol: float = 1e-10
    h0: float = 0.05
    max_halvings: int = 16
    _steps_per_unit: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.field.dim

    def _rhs(self, x: np.ndarray, J: Optional[np.ndarray]):
        if J is None:
            return self.field.values(x), None
        v, D = self.field.values(x), self.field.jacobian(x)
        return v, np.einsum("nij,njk->nik", D, J)

    def _rk4(self, x, J, dt: float, steps: int):
        h = dt / steps
        for _ in range(steps):
            k1x, k1J = self._rhs(x, J)
            k2x, k2J = self._rhs(x + 0.5 * h * k1x, None if J is None else J + 0.5 * h * k1J)
            k3x, k3J = self._rhs(x + 0.5 * h * k2x, None if J is None else J + 0.5 * h * k2J)
            k4x, k4J = self._rhs(x + h * k3x, None if J is None else J + h * k3J)
            x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            if J is not None:
                J = J + h / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J)
        return x, J

    def _calibrate(self, pts: np.ndarray, span: float, jac: bool) -> float:
        """Steps per unit time such that halving changes the endpoint by <= tol."""
        span = abs(span)
        if span == 0.0:
            return 1.0
        steps = max(1, math.ceil(span / self.h0))
        J0 = np.broadcast_to(np.eye(self.dim), (len(pts), self.dim, self.dim)).copy() if jac else None
        prev = self._rk4(pts, J0, span, steps)
        for _ in range(self.max_halvings):
            steps *= 2
            cur = self._rk4(pts, J0, span, steps)
            err = np.max(np.abs(cur[0] - prev[0])) if len(pts) else 0.0
            if jac and len(pts):
                err = max(err, np.max(np.abs(cur[1] - prev[1])))
            if err <= self.tol:
                return steps / span
            prev = cur
        raise FlowError(f"step halving failed to reach tolerance {self.tol:g} over time {span:g}")

    def _sample(self, pts: np.ndarray) -> np.ndarray:
        if len(pts) <= 64:
            return pts
        idx = np.linspace(0, len(pts) - 1, 64).round().astype(int)
        return pts[idx]

    def trajectory(self, pts, times: Sequence[float], jacobian: bool = True):
        """Yield (t, phi_t(pts), D phi_t(pts)) for increasing times."""
        pts = np.atleast_2d(np.asarray(pts, float))
        times = [float(t) for t in times]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("times must be non-decreasing")
        n = self.dim
        if not times:
            return
        span = max(abs(times[0]), abs(times[-1]), times[-1] - times[0])
        rate = self._calibrate(self._sample(pts), span, jacobian)
        x = pts.copy()
        J = np.broadcast_to(np.eye(n), (len(pts), n, n)).copy() if jacobian else None
        t = 0.0
        for tq in times:
            d = tq - t
            if d != 0.0:
                x, J = self._rk4(x, J, d, max(1, math.ceil(abs(d) * rate)))
            t = tq
            yield tq, x, J

    def __call__(self, t: float, pts) -> np.ndarray:
        return next(self.trajectory(pts, [t], jacobian=False))[1]

    def point_and_jacobian(self, t: float, pts):
        _, x, J = next(self.trajectory(pts, [t]))
        return x, J


def flowPoint(V: VectorFieldB, t: float, p, tol: float = 1e-10) -> np.ndarray:
    out = FlowMap(V, tol)(t, p)
    return out[0] if np.ndim(p) == 1 else out


def flowJacobian(V: VectorFieldB, t: float, p, tol: float = 1e-10) -> np.ndarray:
    _, J = FlowMap(V, tol).point_and_jacobian(t, p)
    return J[0] if np.ndim(p) == 1 else J


def push_rows(A: DiracChain, img: np.ndarray, jac: np.ndarray, weight: float = 1.0) -> DiracChain:
    """(p_i; alpha_i) -> (img_i; jac_i alpha_i) row by row, for order-0 chains."""
    if A.max_order > 0:
        raise ValueError("flow pushforward needs an order-0 chain")
    n = A.dim
    pts, bl, cf = [], [], []
    for mi in np.unique(A.blade):
        mi = int(mi)
        sel = np.flatnonzero(A.blade == mi)
        cols = [b for b in range(n) if mi & (1 << b)]
        for mo in blades_of_grade(n, len(cols)):
            rows = [b for b in range(n) if mo & (1 << b)]
            det = co._minor_dets(jac[sel], rows, cols)
            nz = det != 0.0
            if nz.any():
                pts.append(img[sel[nz]])
                bl.append(np.full(int(nz.sum()), mo, np.int64))
                cf.append(weight * A.coef[sel[nz]] * det[nz])
    if not cf:
        return DiracChain(n)
    N = sum(len(c) for c in cf)
    return DiracChain(n, np.concatenate(pts), np.zeros((N, n), np.int64), np.concatenate(bl), np.concatenate(cf))


def pushforwardFlow(V: VectorFieldB | FlowMap, t: float, A: DiracChain) -> DiracChain:
    """(p; alpha) -> (phi_t(p); D phi_t alpha)."""
    fl = V if isinstance(V, FlowMap) else FlowMap(V)
    if A.size == 0 or t == 0.0:
        return A
    x, J = fl.point_and_jacobian(t, A.points)
    return push_rows(A, x, J)


def time_midpoints(a: float, b: float, m: int) -> tuple[np.ndarray, float]:
    dt = (b - a) / 2 ** m
    return a + (np.arange(2 ** m) + 0.5) * dt, dt


def evolvingChain(J0: ChainStream | DiracChain, V: VectorFieldB, a: float, b: float, space_depth: int = 0,
                  tol: float = 1e-10) -> ChainStream:
    """Stream indexed by time depth m of the evolving chain {J_t}_a^b built on
    the space snapshot J0_{space_depth}."""
    base = J0 if isinstance(J0, DiracChain) else J0.snapshot(space_depth)
    fl = FlowMap(V, tol)

    def chunks(m: int):
        ts, dt = time_midpoints(a, b, m)
        if base.size == 0:
            return
        for _, x, J in fl.trajectory(base.points, ts):
            yield push_rows(base, x, J, dt)

    n = base.dim
    return ChainStream(n, lambda m: DiracChain.concat(n, list(chunks(m))), 1, None, None, None, chunks, None,
                       {"kind": "evolving", "a": a, "b": b, "space_depth": space_depth})


def _evaluate_chunks(form: Form, chunks) -> float:
    return fm.exact_sum(np.array([fm.evalChain(form, c) for c in chunks] or [0.0]))


# ------------------------------------------------------------------------------
# checks
# ------------------------------------------------------------------------------

@dataclass
class CheckResult:
    check: str
    residual: float
    values: dict
    table: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"check": self.check, "residual": self.residual, "values": self.values, "table": self.table}

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth_time", "residual", "ratio"])
        for r in self.table:
            w.writerow([r["depth_time"], repr(float(r["residual"])),
                        "" if r["ratio"] is None else repr(float(r["ratio"]))])
        return buf.getvalue()


def _snapshot(J0, j: int) -> DiracChain:
    return J0 if isinstance(J0, DiracChain) else J0.snapshot(j)


def ftcCheck(J0, V: VectorFieldB, omega: Form, a: float, b: float, m: int, space_depth: int = 0,
             tol: float = 1e-10) -> CheckResult:
    """|int_{J_b} omega - int_{J_a} omega - int_{{J_t}} L_V omega|."""
    A = _snapshot(J0, space_depth)
    fl = FlowMap(V, tol)
    ends = list(fl.trajectory(A.points, [a, b]))
    Ja, Jb = (push_rows(A, x, J) for _, x, J in ends)
    lhs = fm.evalChain(omega, Jb) - fm.evalChain(omega, Ja)
    LV = fm.interiorLie(V, omega, "lie")
    rhs = _evaluate_chunks(LV, evolvingChain(A, V, a, b, tol=tol).chunks(m))
    return CheckResult("ftc", abs(lhs - rhs), {"endpoint_difference": lhs, "evolving_integral": rhs})


def ftcTable(J0, V, omega, a, b, depths: Sequence[int], space_depth: int = 0, tol: float = 1e-10) -> CheckResult:
    """ftcCheck over several time depths, with successive reduction ratios."""
    rows, last = [], None
    for m in depths:
        r = ftcCheck(J0, V, omega, a, b, m, space_depth, tol)
        rows.append({"depth_time": m, "residual": r.residual,
                     "ratio": None if last is None or r.residual == 0 else last / r.residual})
        last = r.residual
    return CheckResult("ftc", rows[-1]["residual"], r.values, rows)


def stokesEvolvingCheck(J0: ChainStream, V: VectorFieldB, omega: Form, a: float, b: float, m: int,
                        space_depth: int = 0, tol: float = 1e-10) -> CheckResult:
    """|int_{{J_t}} d L_V omega - (int_{dJ_b} omega - int_{dJ_a} omega)|.

    The left side uses the evolving chain of J0; the right side pushes the
    independent boundary stream of J0 to the end times."""
    A = J0.snapshot(space_depth)
    dA = J0.boundary().snapshot(space_depth)
    fl = FlowMap(V, tol)
    dLV = fm.exteriorD(fm.interiorLie(V, omega, "lie"))
    lhs = _evaluate_chunks(dLV, evolvingChain(A, V, a, b, tol=tol).chunks(m))
    ends = [push_rows(dA, x, J) for _, x, J in fl.trajectory(dA.points, [a, b])]
    rhs = fm.evalChain(omega, ends[1]) - fm.evalChain(omega, ends[0])
    return CheckResult("stokes", abs(lhs - rhs), {"evolving_integral": lhs, "boundary_difference": rhs})


def leibnizCheck(family: Callable[[float], DiracChain], omega: TimeForm, V: VectorFieldB, t: float,
                 h: float = 1e-3) -> CheckResult:
    """|d/dt int_{J_t} omega_t - int_{P_V J_t} omega_t - int_{J_t} d_t omega_t|, d/dt by central difference."""
    I = lambda s: fm.evalChain(omega.at(s), family(s))
    ddt = (I(t + h) - I(t - h)) / (2 * h)
    Jt = family(t)
    transport = fm.evalChain(omega.at(t), co.prederiv(V, Jt))
    explicit = fm.evalChain(omega.dt(t), Jt)
    return CheckResult("leibniz", abs(ddt - transport - explicit),
                       {"derivative": ddt, "transport": transport, "explicit": explicit})


def reynoldsCheck(family: Callable[[float], DiracChain], omega: TimeForm, V: VectorFieldB, t: float,
                  h: float = 1e-3, oracle: Optional[Callable[[float], float]] = None) -> CheckResult:
    """|d/dt int_{J_t} omega_t - int_{J_t} d_t omega_t - int_{dJ_t} i_V omega_t| for top-grade omega.

    ``oracle`` is the closed-form derivative, reported next to the central difference."""
    I = lambda s: fm.evalChain(omega.at(s), family(s))
    ddt = (I(t + h) - I(t - h)) / (2 * h)
    Jt = family(t)
    wt = omega.at(t)
    if wt.grade != wt.dim:
        raise ValueError("Reynolds transport needs a top-grade form")
    flux = fm.evalChain(fm.interiorLie(V, wt, "interior"), co.boundary(Jt))
    explicit = fm.evalChain(omega.dt(t), Jt)
    vals = {"derivative": ddt, "flux": flux, "explicit": explicit}
    res = abs(ddt - explicit - flux)
    if oracle is not None:
        vals["oracle_derivative"] = oracle(t)
        res = max(res, abs(oracle(t) - explicit - flux))
    return CheckResult("reynolds", res, vals)


def flow_family(J0: DiracChain, V: VectorFieldB, tol: float = 1e-10) -> Callable[[float], DiracChain]:
    fl = FlowMap(V, tol)
    return lambda t: pushforwardFlow(fl, t, J0)


# ------------------------------------------------------------------------------
# named fields
# ------------------------------------------------------------------------------

def rotation_field(n: int = 2) -> VectorFieldB:
    """(-y, x, 0, ...)."""
    M = np.zeros((n, n))
    M[0, 1], M[1, 0] = -1.0, 1.0
    return VectorFieldB.linear(M)


def dilation_field(n: int = 2) -> VectorFieldB:
    return VectorFieldB.linear(np.eye(n))


def field_from_json(obj, n: int) -> VectorFieldB:
    kind = obj["kind"]
    if kind == "rotation":
        return rotation_field(n)
    if kind == "dilation":
        return dilation_field(n)
    if kind == "constant":
        return VectorFieldB.constant(obj["v"])
    if kind == "linear":
        return VectorFieldB.linear(obj["matrix"])
    if kind == "poly":
        return VectorFieldB([fm.form_from_json({**c, "family": "poly", "grade": 0}, n) for c in obj["components"]])
    raise ValueError(f"unknown field kind {kind!r}")
