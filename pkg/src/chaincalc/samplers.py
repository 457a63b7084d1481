"""Seeded random inputs for property checks and verification suites."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import form as fm
from .chain import DiracChain
from .multivec import blades_of_grade, indices_of


def random_poly_form(rng: np.random.Generator, n: int, k: int, degree: int = 3, terms: int = 6,
                     scale: float = 1.0) -> fm.PolyForm:
    blades = blades_of_grade(n, k)
    items = []
    for _ in range(terms):
        m = blades[int(rng.integers(len(blades)))]
        exps = np.zeros(n, int)
        for _ in range(int(rng.integers(0, degree + 1))):
            exps[int(rng.integers(n))] += 1
        items.append((indices_of(m), tuple(int(e) for e in exps), float(scale * rng.normal())))
    return fm.PolyForm.from_terms(n, k, items)


def random_chain(rng: np.random.Generator, n: int, k: int, max_order: int = 0, size: int = 4,
                 spread: float = 1.0, orders: Optional[Sequence[int]] = None) -> DiracChain:
    """Rows (p; e^a (x) e_I) with |a| drawn from ``orders`` (default 0..max_order)."""
    blades = np.array(blades_of_grade(n, k), np.int64)
    orders = list(range(max_order + 1)) if orders is None else list(orders)
    pts = rng.uniform(-spread, spread, (size, n))
    sym = np.zeros((size, n), np.int64)
    for i in range(size):
        for _ in range(int(rng.choice(orders))):
            sym[i, int(rng.integers(n))] += 1
    bl = blades[rng.integers(len(blades), size=size)]
    return DiracChain(n, pts, sym, bl, rng.normal(size=size))


def random_field(rng: np.random.Generator, n: int, degree: int = 2) -> fm.VectorFieldB:
    return fm.VectorFieldB([random_poly_form(rng, n, 0, degree, 4, 0.5) for _ in range(n)])


def random_quadratic_map(rng: np.random.Generator, n: int, m: Optional[int] = None) -> fm.SmoothMap:
    return fm.SmoothMap([random_poly_form(rng, n, 0, 2, 5, 0.5) for _ in range(m or n)], "quadratic")


def random_affine_map(rng: np.random.Generator, n: int) -> fm.SmoothMap:
    return fm.SmoothMap.affine(rng.normal(size=(n, n)), rng.normal(size=n))
