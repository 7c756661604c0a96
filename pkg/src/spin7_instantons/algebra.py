"""Quaternionic model of sp(2) + sp(1) and its distinguished basis.

Elements are pairs ``(m, q)`` where ``m`` is a skew-Hermitian 2x2 matrix
of quaternions and ``q`` an imaginary quaternion.  Everything here is kept
exact (``fractions.Fraction``) whenever the inputs are exact, so the
structure constants of the unnormalised basis come out as rationals.

Indices of basis elements follow the 1-based labels ``I_1 ... I_13``:

* ``I_1..I_3``  vertical directions of the reductive complement m
* ``I_4..I_7``  horizontal directions of m
* ``I_8..I_10`` the sp(1)_u part of the isotropy algebra
* ``I_11..I_13`` the sp(1)_d part of the isotropy algebra
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

from .errors import BasisDecompositionError

DIM_G = 13
M_INDICES = tuple(range(1, 8))
VERTICAL = (1, 2, 3)
HORIZONTAL = (4, 5, 6, 7)
ISOTROPY = tuple(range(8, 14))
U_INDICES = (8, 9, 10)
D_INDICES = (11, 12, 13)

DECOMPOSITION_TOL = 1e-10


@dataclass(frozen=True)
class Quaternion:
    """``w + x i + y j + z k`` with real (possibly exact) coefficients."""

    w: Real = 0
    x: Real = 0
    y: Real = 0
    z: Real = 0

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            a1, b1, c1, d1 = self.components
            a2, b2, c2, d2 = other.components
            return Quaternion(
                a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
                a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
                a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
                a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
            )
        return Quaternion(self.w * other, self.x * other,
                          self.y * other, self.z * other)

    def __rmul__(self, scalar):
        return self * scalar

    @property
    def components(self) -> tuple:
        return (self.w, self.x, self.y, self.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self):
        return sum(c * c for c in self.components)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.components)

    def to_complex(self) -> np.ndarray:
        """2x2 complex matrix with i -> diag(i, -i), j -> [[0, 1], [-1, 0]]."""
        w, x, y, z = (float(c) for c in self.components)
        return np.array([[w + 1j * x, y + 1j * z],
                         [-y + 1j * z, w - 1j * x]])


ZERO_Q = Quaternion()
ONE = Quaternion(1)
QI = Quaternion(0, 1)
QJ = Quaternion(0, 0, 1)
QK = Quaternion(0, 0, 0, 1)
IMAGINARY_UNITS = (QI, QJ, QK)

QMatrix = tuple  # 2x2 nested tuple of Quaternion


def _qmat(rows: Sequence[Sequence[Quaternion]]) -> QMatrix:
    return tuple(tuple(entry for entry in row) for row in rows)


def _qmat_mul(a: QMatrix, b: QMatrix) -> QMatrix:
    return tuple(
        tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2))
        for i in range(2)
    )


def _qmat_combine(a: QMatrix, b: QMatrix, sa=1, sb=1) -> QMatrix:
    return tuple(
        tuple(a[i][j] * sa + b[i][j] * sb for j in range(2)) for i in range(2)
    )


@dataclass(frozen=True)
class LieElement:
    """An element ``(m, q)`` of sp(2) + sp(1).

    Parameters
    ----------
    m : 2x2 nested tuple of Quaternion
        Must satisfy ``m + m^dagger = 0``.
    q : Quaternion
        Imaginary quaternion, the sp(1) component.
    """

    m: QMatrix
    q: Quaternion = ZERO_Q

    def __post_init__(self):
        m = _qmat(self.m)
        object.__setattr__(self, "m", m)
        for i in range(2):
            for j in range(2):
                if not (m[i][j] + m[j][i].conj()).is_zero(1e-12):
                    raise ValueError("m must satisfy m + m^dagger = 0")
        if abs(self.q.w) > 1e-12:
            raise ValueError("the sp(1) component must be imaginary")

    @classmethod
    def zero(cls) -> "LieElement":
        return cls(((ZERO_Q, ZERO_Q), (ZERO_Q, ZERO_Q)), ZERO_Q)

    def __add__(self, other: "LieElement") -> "LieElement":
        return LieElement(_qmat_combine(self.m, other.m), self.q + other.q)

    def __sub__(self, other: "LieElement") -> "LieElement":
        return LieElement(_qmat_combine(self.m, other.m, 1, -1), self.q - other.q)

    def __neg__(self) -> "LieElement":
        return self * -1

    def __mul__(self, scalar) -> "LieElement":
        m = tuple(tuple(e * scalar for e in row) for row in self.m)
        return LieElement(m, self.q * scalar)

    __rmul__ = __mul__

    def vector(self) -> list:
        """The 20 real components (four matrix entries, then q)."""
        out = []
        for i in range(2):
            for j in range(2):
                out.extend(self.m[i][j].components)
        out.extend(self.q.components)
        return out

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.vector())

    def to_complex(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex realisation: a 4x4 matrix for sp(2) and a 2x2 for sp(1)."""
        blocks = [[self.m[i][j].to_complex() for j in range(2)] for i in range(2)]
        return np.block(blocks), self.q.to_complex()


def bracket(x: LieElement, y: LieElement, check: bool = True) -> LieElement:
    """Componentwise commutator ``([m_x, m_y], [q_x, q_y])``.

    With ``check`` set, the result is decomposed in the basis and a
    :class:`BasisDecompositionError` is raised if it leaves the span.
    """
    m = _qmat_combine(_qmat_mul(x.m, y.m), _qmat_mul(y.m, x.m), 1, -1)
    q = x.q * y.q - y.q * x.q
    out = LieElement(m, q)
    if check:
        coords(out)
    return out


@lru_cache(maxsize=None)
def basis_g() -> tuple[LieElement, ...]:
    """The thirteen basis elements ``I_1 ... I_13`` (position ``A-1`` holds ``I_A``)."""
    z = ZERO_Q
    out = []
    for u in IMAGINARY_UNITS:
        out.append(LieElement(((z, z), (z, u * 2)), u * -3))
    out.append(LieElement(((z, ONE), (-ONE, z)), z))
    for u in IMAGINARY_UNITS:
        out.append(LieElement(((z, -u), (-u, z)), z))
    for u in IMAGINARY_UNITS:
        out.append(LieElement(((u, z), (z, z)), z))
    for u in IMAGINARY_UNITS:
        out.append(LieElement(((z, z), (z, u)), u))
    return tuple(out)


def basis_element(index: int) -> LieElement:
    """``I_index`` for ``index`` in 1..13."""
    if not 1 <= index <= DIM_G:
        raise IndexError(f"basis index {index} outside 1..{DIM_G}")
    return basis_g()[index - 1]


@lru_cache(maxsize=None)
def _projector() -> tuple[tuple[tuple[Fraction, ...], ...], tuple[tuple[Fraction, ...], ...]]:
    """Exact left inverse of the 20x13 basis matrix, and the matrix itself."""
    columns = [[sp.Rational(c) for c in e.vector()] for e in basis_g()]
    B = sp.Matrix(columns).T
    P = (B.T * B).inv() * B.T
    to_frac = lambda v: Fraction(int(v.p), int(v.q))
    P_rows = tuple(tuple(to_frac(P[i, k]) for k in range(P.cols)) for i in range(P.rows))
    B_rows = tuple(tuple(to_frac(B[k, i]) for i in range(B.cols)) for k in range(B.rows))
    return P_rows, B_rows


def coords(x: LieElement, tol: float = DECOMPOSITION_TOL) -> tuple:
    """Coordinates of ``x`` in the basis ``I_1 ... I_13``.

    Raises
    ------
    BasisDecompositionError
        If ``x`` is not in the span to within ``tol``.
    """
    P, B = _projector()
    v = x.vector()
    c = tuple(sum(p * vk for p, vk in zip(row, v)) for row in P)
    residual = max(abs(vk - sum(b * ci for b, ci in zip(brow, c))) for vk, brow in zip(v, B))
    if residual > tol:
        raise BasisDecompositionError(
            f"element does not decompose in the basis (residual {float(residual):.3e})")
    return c


def from_coords(c: Sequence) -> LieElement:
    out = LieElement.zero()
    for ci, e in zip(c, basis_g()):
        if ci != 0:
            out = out + e * ci
    return out


@dataclass(frozen=True)
class StructureTensor:
    """Coefficients with ``[I_A, I_B] = sum_C f^C_{AB} I_C``.

    ``data[C-1][A-1][B-1]`` holds ``f^C_{AB}``; use :meth:`f` for 1-based access.
    """

    data: tuple

    def f(self, C: int, A: int, B: int):
        return self.data[C - 1][A - 1][B - 1]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.data, dtype=float)

    def bracket_coords(self, x: Sequence, y: Sequence) -> tuple:
        """Coordinates of the bracket of two coordinate vectors."""
        n = len(self.data)
        return tuple(
            sum(self.data[C][A][B] * x[A] * y[B]
                for A in range(n) if x[A] != 0
                for B in range(n) if y[B] != 0)
            for C in range(n)
        )

    def ad(self, x: Sequence) -> list[list]:
        n = len(self.data)
        return [[sum(self.data[C][A][B] * x[A] for A in range(n)) for B in range(n)]
                for C in range(n)]

    def nonzero(self) -> Iterable[tuple[int, int, int, Fraction]]:
        """1-based ``(C, A, B, value)`` with ``A < B`` and nonzero value."""
        n = len(self.data)
        for A in range(n):
            for B in range(A + 1, n):
                for C in range(n):
                    v = self.data[C][A][B]
                    if v != 0:
                        yield C + 1, A + 1, B + 1, v

    def to_json(self) -> str:
        entries = [[C, A, B, str(v)] for C, A, B, v in self.nonzero()]
        return json.dumps({"convention": "[I_A, I_B] = f^C_AB I_C",
                           "entries": entries}, indent=2)


@lru_cache(maxsize=None)
def structure_constants() -> StructureTensor:
    """Exact structure constants of the 13-element basis."""
    basis = basis_g()
    n = len(basis)
    data = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for A in range(n):
        for B in range(A + 1, n):
            c = coords(bracket(basis[A], basis[B], check=False))
            for C in range(n):
                data[C][A][B] = Fraction(c[C])
                data[C][B][A] = -Fraction(c[C])
    return StructureTensor(tuple(tuple(tuple(row) for row in plane) for plane in data))


def killing_form(x: LieElement, y: LieElement):
    """``Tr(ad x ad y)`` in exact arithmetic."""
    K = killing_matrix()
    cx, cy = coords(x), coords(y)
    n = len(K)
    return sum(cx[A] * K[A][B] * cy[B] for A in range(n) for B in range(n) if cx[A] and cy[B])


@lru_cache(maxsize=None)
def killing_matrix() -> tuple:
    """``K_AB = sum_{C,D} f^D_AC f^C_BD`` from the nonzero structure constants."""
    f = structure_constants()
    n = len(basis_g())
    rows: dict = {}
    for D, A, C, v in f.nonzero():
        rows.setdefault(A, []).append((D, C, v))
        rows.setdefault(C, []).append((D, A, -v))
    K = [[sum((v * f.f(C, B, D) for D, C, v in rows.get(A, ())), Fraction(0))
          for B in range(1, n + 1)] for A in range(1, n + 1)]
    return tuple(tuple(row) for row in K)


def squashed_metric_diagonal(alpha=3, beta2=Fraction(9, 5)) -> tuple:
    """Diagonal of ``alpha^2 sum e^i e^i + beta^2 sum e^a e^a`` on I_1..I_7."""
    return tuple([alpha * alpha] * 3 + [beta2] * 4)


def killing_normalization(alpha=3, beta2=Fraction(9, 5)) -> Fraction:
    """The constant ``c^2`` with ``g = -c^2 K`` on m.

    Raises ``ValueError`` if no single constant fits all seven directions.
    """
    K = killing_matrix()
    g = squashed_metric_diagonal(alpha, beta2)
    ratios = {Fraction(g[a]) / Fraction(-K[a][a]) for a in range(7)}
    if len(ratios) != 1:
        raise ValueError(f"metric is not proportional to the Killing form: {sorted(ratios)}")
    return ratios.pop()


def frame_scales(alpha: float = 3.0, beta: float = 3.0 / np.sqrt(5.0)) -> np.ndarray:
    """Factors ``s_a`` such that ``s_a I_a`` is orthonormal, a = 1..7."""
    return np.array([1.0 / alpha] * 3 + [1.0 / beta] * 4)


def orthonormal_m_basis(alpha: float = 3.0, beta: float = 3.0 / np.sqrt(5.0)) -> tuple[LieElement, ...]:
    """Orthonormal frame of m for ``alpha^2`` vertical and ``beta^2`` horizontal scales."""
    s = frame_scales(alpha, beta)
    return tuple(basis_element(a) * float(s[a - 1]) for a in M_INDICES)


def metric_on_m(x: LieElement, y: LieElement, alpha=3, beta2=Fraction(9, 5)):
    """Squashed metric evaluated on two elements of m."""
    cx, cy = coords(x), coords(y)
    if any(abs(c) > DECOMPOSITION_TOL for c in list(cx[7:]) + list(cy[7:])):
        raise ValueError("metric_on_m expects elements of m")
    g = squashed_metric_diagonal(alpha, beta2)
    return sum(g[a] * cx[a] * cy[a] for a in range(7))


def complex_basis() -> tuple[list[np.ndarray], list[np.ndarray]]:
    """4x4 and 2x2 complex realisations of ``I_1 ... I_13``."""
    pairs = [e.to_complex() for e in basis_g()]
    return [p[0] for p in pairs], [p[1] for p in pairs]
