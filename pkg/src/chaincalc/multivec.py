"""Exterior and symmetric algebra over R^n with a fixed orthonormal basis.

Blades are stored two ways.  Public ``KVector`` keys are strictly increasing
1-based index tuples, matching the JSON encoding.  Internally (and inside the
vectorized chain arrays) a blade is an integer bitmask: bit ``i`` set means
``e_{i+1}`` is a factor.  The helpers at the top of the module work on masks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE_REL = 1e-14


# --------------------------------------------------------------------------
# bitmask helpers
# --------------------------------------------------------------------------

def mask_of(idx: Iterable[int]) -> int:
    """1-based index tuple -> bitmask."""
    m = 0
    for i in idx:
        m |= 1 << (i - 1)
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    """Bitmask -> strictly increasing 1-based index tuple."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i + 1)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def wedge_sign(a: int, b: int) -> int:
    """Sign of e_A ^ e_B relative to the sorted blade e_{A|B}; 0 if they overlap."""
    if a & b:
        return 0
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        # factors of A larger than this factor of B must be passed over
        swaps += popcount(a & ~((low << 1) - 1))
        bb ^= low
    return -1 if swaps & 1 else 1


def below_count(masks: np.ndarray, bit: int) -> np.ndarray:
    """Number of set bits strictly below ``bit`` in each mask (vectorized)."""
    return np.bitwise_count(masks & ((1 << bit) - 1)).astype(np.int64)


def perp_sign(mask: int, n: int) -> int:
    """Sign s with perp(e_I) = s * e_{I^c}.

    In even dimension this is the relation e_I ^ perp(e_I) = (-1)^k e_1..n.
    In odd dimension that relation is incompatible with perp o perp =
    (-1)^{k(n-k)}, and the involution law is kept instead, which gives
    e_I ^ perp(e_I) = +e_1..n.  Both cases are (-1)^{k(n+1)} sign(I, I^c).
    """
    full = (1 << n) - 1
    k = popcount(mask)
    eps = -1 if (k * (n + 1)) & 1 else 1
    return eps * wedge_sign(mask, full ^ mask)


def blades_of_grade(n: int, k: int) -> list[int]:
    return [mask_of(c) for c in itertools.combinations(range(1, n + 1), k)]


# --------------------------------------------------------------------------
# KVector
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KVector:
    """A k-vector in Lambda_k(R^n) as sparse blade coefficients.

    Construct through :meth:`from_terms` (or the helpers ``blade``, ``scalar``,
    ``vector``) so that keys are validated and zeros pruned.
    """

    dim: int
    grade: int
    coeffs: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_terms(cls, n: int, grade: int, terms: Iterable[tuple[Sequence[int], float]]) -> "KVector":
        if n < 0 or not 0 <= grade <= n:
            raise ValueError(f"grade {grade} out of range for dimension {n}")
        acc: dict[tuple[int, ...], float] = {}
        for idx, c in terms:
            idx = tuple(int(i) for i in idx)
            if len(idx) != grade:
                raise ValueError(f"index {idx} does not have grade {grade}")
            if any(i < 1 or i > n for i in idx):
                raise ValueError(f"index {idx} outside 1..{n}")
            if len(set(idx)) != len(idx):
                continue  # repeated factor: e_i ^ e_i = 0
            order = sorted(range(grade), key=lambda t: idx[t])
            sign = _perm_sign(order)
            key = tuple(sorted(idx))
            acc[key] = acc.get(key, 0.0) + sign * float(c)
        return cls(n, grade, _prune(acc))

    @classmethod
    def from_masks(cls, n: int, grade: int, items: Mapping[int, float]) -> "KVector":
        acc = {indices_of(m): float(c) for m, c in items.items()}
        return cls(n, grade, _prune(acc))

    def masks(self) -> dict[int, float]:
        return {mask_of(i): c for i, c in self.coeffs.items()}

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "KVector") -> None:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        if self.grade != other.grade and self.coeffs and other.coeffs:
            raise ValueError("grade mismatch")

    def __add__(self, other: "KVector") -> "KVector":
        self._check(other)
        acc = dict(self.coeffs)
        for i, c in other.coeffs.items():
            acc[i] = acc.get(i, 0.0) + c
        g = self.grade if self.coeffs else other.grade
        return KVector(self.dim, g, _prune(acc))

    def __neg__(self) -> "KVector":
        return KVector(self.dim, self.grade, {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other: "KVector") -> "KVector":
        return self + (-other)

    def __mul__(self, s: float) -> "KVector":
        return KVector(self.dim, self.grade, _prune({i: s * c for i, c in self.coeffs.items()}))

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "KVector":
        return self * (1.0 / s)

    def is_zero(self) -> bool:
        return not self.coeffs

    def allclose(self, other: "KVector", tol: float = 1e-12) -> bool:
        if self.dim != other.dim:
            return False
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) <= tol for k in keys)

    def to_array(self) -> np.ndarray:
        """Dense coefficient vector over the lexicographic blades of this grade."""
        basis = list(itertools.combinations(range(1, self.dim + 1), self.grade))
        return np.array([self.coeffs.get(b, 0.0) for b in basis])

    def norm(self) -> float:
        return math.sqrt(inner(self, self))

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"KVector(n={self.dim}, 0)"
        parts = []
        for idx, c in sorted(self.coeffs.items()):
            name = "e" + "".join(map(str, idx)) if idx else "1"
            parts.append(f"{c:+g}*{name}")
        return f"KVector(n={self.dim}, {' '.join(parts)})"

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {"n": self.dim, "grade": self.grade,
                "terms": [{"idx": list(i), "c": c} for i, c in sorted(self.coeffs.items())]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "KVector":
        return cls.from_terms(int(obj["n"]), int(obj["grade"]),
                              [(t["idx"], t["c"]) for t in obj["terms"]])


def _perm_sign(order: Sequence[int]) -> int:
    sign = 1
    seen = list(order)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def _prune(acc: Mapping[tuple[int, ...], float]) -> dict[tuple[int, ...], float]:
    if not acc:
        return {}
    top = max(abs(c) for c in acc.values())
    cut = PRUNE_REL * top
    return {i: c for i, c in sorted(acc.items()) if abs(c) > cut}


def blade(n: int, *idx: int, c: float = 1.0) -> KVector:
    return KVector.from_terms(n, len(idx), [(idx, c)])


def scalar(n: int, c: float = 1.0) -> KVector:
    return KVector.from_terms(n, 0, [((), c)])


def vector(v: Sequence[float]) -> KVector:
    n = len(v)
    return KVector.from_terms(n, 1, [((i + 1,), float(c)) for i, c in enumerate(v)])


def unit(n: int) -> KVector:
    """The unit n-vector e_1 ^ ... ^ e_n."""
    return blade(n, *range(1, n + 1))


# --------------------------------------------------------------------------
# products
# --------------------------------------------------------------------------

def wedge(a: KVector, b: KVector) -> KVector:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    n = a.dim
    g = a.grade + b.grade
    if g > n:
        return KVector(n, min(g, n), {})
    acc: dict[int, float] = {}
    for ma, ca in a.masks().items():
        for mb, cb in b.masks().items():
            s = wedge_sign(ma, mb)
            if s:
                acc[ma | mb] = acc.get(ma | mb, 0.0) + s * ca * cb
    return KVector.from_masks(n, g, acc)


def inner(a: KVector, b: KVector) -> float:
    """Euclidean inner product; blades are orthonormal."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.grade != b.grade:
        raise ValueError("grade mismatch")
    return float(sum(c * b.coeffs.get(i, 0.0) for i, c in a.coeffs.items()))


def retractKV(v: Sequence[float], a: KVector) -> KVector:
    """Contract v out of a: sum_m (-1)^(m+1) <v, e_{i_m}> e_{I minus i_m}."""
    if a.grade == 0:
        raise ValueError("retraction of a grade-0 element")
    v = np.asarray(v, dtype=float)
    if v.shape != (a.dim,):
        raise ValueError("dimension mismatch")
    acc: dict[int, float] = {}
    for m, c in a.masks().items():
        for bit in range(a.dim):
            if m & (1 << bit) and v[bit] != 0.0:
                sign = -1 if popcount(m & ((1 << bit) - 1)) & 1 else 1
                key = m ^ (1 << bit)
                acc[key] = acc.get(key, 0.0) + sign * v[bit] * c
    return KVector.from_masks(a.dim, a.grade - 1, acc)


def perpKV(a: KVector) -> KVector:
    n = a.dim
    full = (1 << n) - 1
    acc = {full ^ m: perp_sign(m, n) * c for m, c in a.masks().items()}
    return KVector.from_masks(n, n - a.grade, acc)


# --------------------------------------------------------------------------
# mass
# --------------------------------------------------------------------------

class MassUndetermined(ValueError):
    """Raised when no exact mass is available for a non-simple k-vector."""


def _wedge_rank_gap(a: KVector) -> int:
    """dim{v : v ^ a = 0} for a nonzero a; equals the grade iff a is simple."""
    n, k = a.dim, a.grade
    rows = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(wedge(vector(e), a))
    basis = blades_of_grade(n, k + 1)
    mat = np.array([[r.masks().get(b, 0.0) for b in basis] for r in rows])
    if mat.size == 0:
        return n
    rank = np.linalg.matrix_rank(mat, tol=1e-10 * max(1.0, np.abs(mat).max()))
    return n - rank


def is_simple(a: KVector) -> bool:
    if a.is_zero() or a.grade in (0, 1, a.dim - 1, a.dim):
        return True
    return _wedge_rank_gap(a) == a.grade


def _two_vector_mass(a: KVector) -> float:
    # normal form of a skew matrix: mass is the sum of one singular value per pair
    n = a.dim
    mat = np.zeros((n, n))
    for (i, j), c in a.coeffs.items():
        mat[i - 1, j - 1] = c
        mat[j - 1, i - 1] = -c
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(sv.sum() / 2.0)


def mass(a: KVector) -> float:
    """Exact mass where it is determined: simple inputs, grades 2 and n-2."""
    if a.is_zero():
        return 0.0
    if is_simple(a):
        return a.norm()
    if a.grade == 2:
        return _two_vector_mass(a)
    if a.grade == a.dim - 2:
        return _two_vector_mass(perpKV(a))
    raise MassUndetermined(f"no exact mass for a non-simple {a.grade}-vector in R^{a.dim}")


def massUpper(a: KVector) -> float:
    """Certified upper bound on the mass, exact whenever :func:`mass` is."""
    try:
        return mass(a)
    except MassUndetermined:
        return float(sum(abs(c) for c in a.coeffs.values()))


# --------------------------------------------------------------------------
# symmetric tensors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SymTensor:
    """An unordered product u_1 o ... o u_s of vectors in R^n."""

    dim: int
    factors: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        fs = tuple(tuple(float(x) for x in f) for f in self.factors)
        if any(len(f) != self.dim for f in fs):
            raise ValueError("factor dimension mismatch")
        object.__setattr__(self, "factors", tuple(sorted(fs)))

    @property
    def order(self) -> int:
        return len(self.factors)

    @classmethod
    def from_exponents(cls, exps: Sequence[int]) -> "SymTensor":
        n = len(exps)
        fs = []
        for i, a in enumerate(exps):
            e = [0.0] * n
            e[i] = 1.0
            fs.extend([tuple(e)] * int(a))
        return cls(n, tuple(fs))

    def monomials(self) -> dict[tuple[int, ...], float]:
        """Expand in the monomial basis e^a of S^s(R^n)."""
        return expand_linear_product(self.dim, self.factors)

    def to_json(self) -> dict:
        return {"n": self.dim, "factors": [list(f) for f in self.factors]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SymTensor":
        return cls(int(obj["n"]), tuple(tuple(f) for f in obj["factors"]))


def expand_linear_product(n: int, factors: Iterable[Sequence[float]]) -> dict[tuple[int, ...], float]:
    poly: dict[tuple[int, ...], float] = {(0,) * n: 1.0}
    for u in factors:
        nxt: dict[tuple[int, ...], float] = {}
        for exps, c in poly.items():
            for i, ui in enumerate(u):
                if ui == 0.0:
                    continue
                e = list(exps)
                e[i] += 1
                e = tuple(e)
                nxt[e] = nxt.get(e, 0.0) + c * ui
        poly = nxt
    return {e: c for e, c in poly.items() if c != 0.0}


def symCompose(a: SymTensor, b: SymTensor) -> SymTensor:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return SymTensor(a.dim, a.factors + b.factors)


def symNorm(a: SymTensor) -> float:
    return float(np.prod([np.linalg.norm(f) for f in a.factors])) if a.factors else 1.0
