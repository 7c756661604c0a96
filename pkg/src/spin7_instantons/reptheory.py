"""Matrix carriers for irreducible representations of Sp(2) x Sp(1).

Carriers are assembled from the 4-dimensional standard representation of
sp(2) and the 2-dimensional one of sp(1) by tensor products, symmetric
powers and projection onto a Casimir eigenspace.  The projection picks the
Cartan component because the Casimir is strictly larger on the highest
weight than on every lower dominant weight occurring in the product.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import svd

from .algebra import (D_INDICES, ISOTROPY, U_INDICES, complex_basis,
                      killing_matrix, killing_normalization, structure_constants)
from .errors import CarrierError, HomDimensionError

CASIMIR_TOL = 1e-9
HOMOMORPHISM_TOL = 1e-9
RANK_CUTOFF = 1e-9
MAX_CARRIER_DIM = 4096


class IrrepLabelG(NamedTuple):
    """Highest weight ``(a, b, c)``: ``V_(a,b)`` of Sp(2) times ``W_c`` of Sp(1).

    ``(0, 1)`` is the standard 4-dimensional and ``(1, 0)`` the
    5-dimensional representation of Sp(2).
    """

    a: int
    b: int
    c: int

    @classmethod
    def parse(cls, text: str) -> "IrrepLabelG":
        parts = [int(p) for p in text.replace(" ", "").strip("()").split(",")]
        if len(parts) != 3 or min(parts) < 0:
            raise ValueError(f"label must be three non-negative integers, got {text!r}")
        return cls(*parts)

    @property
    def dim(self) -> int:
        return weyl_dim_sp2(self.a, self.b) * (self.c + 1)

    def __str__(self):
        return f"({self.a},{self.b},{self.c})"


class IrrepLabelH(NamedTuple):
    """``W_(p,q) = W_p^u x W_q^d`` for Sp(1)_u x Sp(1)_d."""

    p: int
    q: int

    @property
    def dim(self) -> int:
        return (self.p + 1) * (self.q + 1)

    def __str__(self):
        return f"({self.p},{self.q})"


def weyl_dim_sp2(a: int, b: int) -> int:
    """Dimension of ``V_(a,b)``; ``a`` counts the 5-dimensional, ``b`` the 4-dimensional weight."""
    num = (a + 1) * (b + 1) * (a + b + 2) * (2 * a + b + 3)
    return num // 6


def casimir_g(label: Sequence[int]) -> Fraction:
    a, b, c = label
    return Fraction(-5, 9) * (4 * a * a + 2 * b * b + 3 * c * c + 4 * a * b + 12 * a + 8 * b + 6 * c)


def casimir_h(label: Sequence[int]) -> Fraction:
    p, q = label
    return Fraction(-2, 9) * (5 * p * p + 3 * q * q + 10 * p + 6 * q)


@lru_cache(maxsize=None)
def invariant_metric_diagonal() -> np.ndarray:
    """``-c^2 K(I_A, I_A)`` for A = 1..13, with ``c^2`` from the squashed metric."""
    c2 = killing_normalization()
    K = killing_matrix()
    d = np.array([float(-c2 * K[A][A]) for A in range(13)])
    d.setflags(write=False)
    return d


@dataclass(frozen=True, eq=False)
class RepCarrier:
    """Matrices ``rho(I_1) ... rho(I_13)`` on a complex vector space."""

    matrices: tuple
    label: IrrepLabelG | None = None

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def __getitem__(self, A: int) -> np.ndarray:
        """``rho(I_A)`` for 1-based ``A``."""
        return self.matrices[A - 1]

    def casimir(self) -> np.ndarray:
        g = invariant_metric_diagonal()
        return sum(x @ x / g[A] for A, x in enumerate(self.matrices))

    def restrict_to_h(self, name: str = "") -> "HRep":
        return HRep(tuple(self.matrices[i - 1] for i in ISOTROPY), name or str(self.label))

    def homomorphism_defect(self) -> float:
        f = structure_constants().array
        worst = 0.0
        for A in range(13):
            for B in range(A + 1, 13):
                lhs = np.tensordot(f[:, A, B], np.array(self.matrices), axes=1)
                rhs = self.matrices[A] @ self.matrices[B] - self.matrices[B] @ self.matrices[A]
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


@dataclass(frozen=True, eq=False)
class HRep:
    """A representation of the isotropy algebra by the images of ``I_8 ... I_13``."""

    matrices: tuple
    name: str = ""

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def casimirs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unnormalised ``sum rho(I_i)^2`` over the u and the d generators."""
        cu = sum(self.matrices[i - 8] @ self.matrices[i - 8] for i in U_INDICES)
        cd = sum(self.matrices[i - 8] @ self.matrices[i - 8] for i in D_INDICES)
        return cu, cd

    def tensor(self, other: "HRep", name: str = "") -> "HRep":
        return HRep(tuple(_kron_sum(x, y) for x, y in zip(self.matrices, other.matrices)),
                    name or f"{self.name}*{other.name}")


def _kron_sum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.kron(x, np.eye(y.shape[0])) + np.kron(np.eye(x.shape[0]), y)


def tensor(r1: RepCarrier, r2: RepCarrier) -> RepCarrier:
    return RepCarrier(tuple(_kron_sum(x, y) for x, y in zip(r1.matrices, r2.matrices)))


def subrepresentation(r: RepCarrier, P: np.ndarray) -> RepCarrier:
    """Restriction to the invariant subspace spanned by the orthonormal columns of ``P``."""
    Ph = P.conj().T
    return RepCarrier(tuple(Ph @ x @ P for x in r.matrices))


def trivial_carrier() -> RepCarrier:
    return RepCarrier(tuple(np.zeros((1, 1), dtype=complex) for _ in range(13)),
                      IrrepLabelG(0, 0, 0))


@lru_cache(maxsize=None)
def standard_sp2() -> RepCarrier:
    """sp(2) on C^4 with the sp(1) factor acting trivially."""
    m, _ = complex_basis()
    return RepCarrier(tuple(m), IrrepLabelG(0, 1, 0))


@lru_cache(maxsize=None)
def standard_sp1() -> RepCarrier:
    """sp(1) on C^2 with sp(2) acting trivially."""
    _, q = complex_basis()
    return RepCarrier(tuple(q), IrrepLabelG(0, 0, 1))


@lru_cache(maxsize=None)
def _sym_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal basis of ``Sym^k C^n`` inside ``(C^n)^{(x)k}``."""
    cols = []
    for combo in itertools.combinations_with_replacement(range(n), k):
        v = np.zeros(n ** k)
        for perm in set(itertools.permutations(combo)):
            v[np.ravel_multi_index(perm, [n] * k)] = 1.0
        cols.append(v / np.linalg.norm(v))
    return np.array(cols, dtype=complex).T


@lru_cache(maxsize=None)
def _wedge2_basis(n: int) -> np.ndarray:
    cols = []
    for i, j in itertools.combinations(range(n), 2):
        v = np.zeros(n * n)
        v[i * n + j], v[j * n + i] = 1.0, -1.0
        cols.append(v / np.sqrt(2.0))
    return np.array(cols, dtype=complex).T


def symmetric_power(r: RepCarrier, k: int) -> RepCarrier:
    if k == 0:
        return trivial_carrier()
    out = r
    for _ in range(k - 1):
        out = tensor(out, r)
    return subrepresentation(out, _sym_basis(r.dim, k))


def casimir_eigenspace(r: RepCarrier, value: float, tol: float = 1e-8) -> RepCarrier:
    C = r.casimir()
    w, v = np.linalg.eigh((C + C.conj().T) / 2)
    keep = np.abs(w - value) < tol
    if not np.any(keep):
        raise CarrierError(f"no Casimir eigenvalue {value} in the ambient carrier")
    return subrepresentation(r, v[:, keep])


@lru_cache(maxsize=None)
def _five_dim() -> RepCarrier:
    """V_(1,0) inside the second exterior power of C^4."""
    std = standard_sp2()
    ext2 = subrepresentation(tensor(std, std), _wedge2_basis(4))
    return casimir_eigenspace(ext2, float(casimir_g((1, 0, 0))))


def _construct(label: IrrepLabelG) -> RepCarrier:
    a, b, c = label
    ambient = math.comb(a + 4, 4) * math.comb(b + 3, 3)
    if ambient > MAX_CARRIER_DIM or max(5 ** a, 4 ** b, 2 ** c) > MAX_CARRIER_DIM:
        raise CarrierError(f"label {label} is outside the supported range")
    base = trivial_carrier()
    if a:
        base = tensor(base, symmetric_power(_five_dim(), a))
    if b:
        base = tensor(base, symmetric_power(standard_sp2(), b))
    if a or b:
        base = casimir_eigenspace(base, float(casimir_g((a, b, 0))))
    if c:
        base = tensor(base, symmetric_power(standard_sp1(), c))
    return RepCarrier(base.matrices, label)


def verify_carrier(r: RepCarrier, tol: float = CASIMIR_TOL) -> None:
    """Check dimension, homomorphism property and the scalar Casimir of a labelled carrier."""
    label = r.label
    if label is not None and r.dim != label.dim:
        raise CarrierError(f"carrier {label} has dimension {r.dim}, expected {label.dim}")
    hd = r.homomorphism_defect()
    if hd > HOMOMORPHISM_TOL:
        raise CarrierError(f"carrier {label} is not a homomorphism (defect {hd:.2e})")
    if label is not None:
        expected = float(casimir_g(label))
        dev = np.abs(r.casimir() - expected * np.eye(r.dim)).max()
        if dev > tol:
            raise CarrierError(f"Casimir of {label} deviates from {expected} by {dev:.2e}")


_CARRIERS: dict[IrrepLabelG, RepCarrier] = {}
_CARRIER_LOCK = threading.Lock()


def build_carrier(label: Sequence[int]) -> RepCarrier:
    """Verified carrier for ``V_(a,b,c)``, memoised process-wide.

    Raises
    ------
    CarrierError
        For labels beyond the supported size or if a construction check fails.
    """
    label = IrrepLabelG(*label)
    if min(label) < 0:
        raise CarrierError(f"label {label} has negative entries")
    hit = _CARRIERS.get(label)
    if hit is not None:
        return hit
    with _CARRIER_LOCK:
        hit = _CARRIERS.get(label)
        if hit is None:
            hit = _construct(label)
            verify_carrier(hit)
            _CARRIERS[label] = hit
    return hit


def _sp1_index(eigenvalue: float, tol: float = 1e-6) -> int:
    """Recover ``p`` from the unnormalised Casimir value ``-p (p + 2)``."""
    if eigenvalue > tol:
        raise CarrierError(f"Casimir value {eigenvalue} is positive, not of the form -p(p+2)")
    p = -1.0 + np.sqrt(1.0 - min(eigenvalue, 0.0))
    if abs(p - round(p)) > tol:
        raise CarrierError(f"Casimir value {eigenvalue} is not of the form -p(p+2)")
    return int(round(p))


def decompose_h(rep: HRep, tol: float = 1e-6) -> Counter:
    """Isotypic content of an isotropy representation.

    The u-Casimir is diagonalised first and the d-Casimir then inside each
    of its eigenspaces, so that no accidental coincidence of a combined
    eigenvalue can merge two components.
    """
    cu, cd = rep.casimirs()
    wu, vu = np.linalg.eigh((cu + cu.conj().T) / 2)
    out: Counter = Counter()
    for val in _clusters(wu, tol):
        cols = vu[:, np.abs(wu - val) < tol]
        p = _sp1_index(val)
        block = cols.conj().T @ cd @ cols
        wd = np.linalg.eigvalsh((block + block.conj().T) / 2)
        for vq in _clusters(wd, tol):
            q = _sp1_index(vq)
            count = int(np.sum(np.abs(wd - vq) < tol))
            d = (p + 1) * (q + 1)
            if count % d:
                raise CarrierError(f"multiplicity of W{(p, q)} is not integral ({count}/{d})")
            out[IrrepLabelH(p, q)] += count // d
    return Counter(dict(sorted(out.items())))


def _clusters(values: np.ndarray, tol: float) -> list[float]:
    reps: list[float] = []
    for v in np.sort(values):
        if not reps or abs(v - reps[-1]) > tol:
            reps.append(float(v))
    return reps


def branch_to_H(label: Sequence[int]) -> Counter:
    """Restriction of ``V_(a,b,c)`` to Sp(1)_u x Sp(1)_d."""
    r = build_carrier(label)
    return decompose_h(r.restrict_to_h())


@lru_cache(maxsize=None)
def isotropy_on_m() -> HRep:
    """The isotropy representation on m (adjoint action on I_1..I_7)."""
    f = structure_constants().array
    mats = tuple(f[:7, i - 1, :7].astype(complex) for i in ISOTROPY)
    return HRep(mats, "m")


def delta_tensor_decomposition() -> Counter:
    """Isotypic content of ``Delta (x) sp(1)_C`` under the isotropy algebra."""
    from .dirac import twisted_spinor_target
    return decompose_h(twisted_spinor_target())


@dataclass(frozen=True, eq=False)
class HomBlock:
    """Orthonormal basis of ``Hom(V_gamma, target)^H``.

    ``basis`` holds matrices of shape ``(target.dim, dim V_gamma)``;
    ``schur_count`` is the dimension predicted from the two branchings.
    """

    label: IrrepLabelG
    target: str
    basis: tuple
    schur_count: int
    carrier: RepCarrier = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def gram(self) -> np.ndarray:
        B = np.array([eta.ravel() for eta in self.basis])
        return B.conj() @ B.T if len(self.basis) else np.zeros((0, 0))

    def equivariance_defect(self, target: HRep) -> float:
        worst = 0.0
        for eta in self.basis:
            for X, Y in zip(self.carrier.restrict_to_h().matrices, target.matrices):
                worst = max(worst, float(np.abs(Y @ eta - eta @ X).max()))
        return worst


def schur_count(source: Counter, target: Counter) -> int:
    return sum(m * target.get(lab, 0) for lab, m in source.items())


def hom_block(label: Sequence[int], target: HRep, rcond: float = RANK_CUTOFF) -> HomBlock:
    """Intertwiners ``eta`` with ``eta rho_gamma(I_i) = rho_target(I_i) eta``, i = 8..13.

    The linear system is stacked over the six isotropy generators in
    column-major ``vec`` form and solved by SVD with relative cutoff ``rcond``.

    Raises
    ------
    HomDimensionError
        If the solution space does not have the Schur-lemma dimension.
    """
    label = IrrepLabelG(*label)
    r = build_carrier(label)
    n, N = r.dim, target.dim
    src_h = r.restrict_to_h()
    rows = [np.kron(np.eye(n), Y) - np.kron(X.T, np.eye(N))
            for X, Y in zip(src_h.matrices, target.matrices)]
    # economy SVD: only the right singular vectors are needed
    _, sv, vh = svd(np.vstack(rows), full_matrices=False)
    rank = int(np.sum(sv > rcond * sv[0])) if sv.size else 0
    ns = vh[rank:].conj().T
    basis = tuple(ns[:, k].reshape(n, N).T.copy() for k in range(ns.shape[1]))
    expected = schur_count(decompose_h(src_h), decompose_h(target))
    if len(basis) != expected:
        raise HomDimensionError(
            f"Hom({label}, {target.name}) has dimension {len(basis)}, Schur count {expected}")
    return HomBlock(label, target.name, basis, expected, r)
