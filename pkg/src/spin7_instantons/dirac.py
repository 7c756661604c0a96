"""Spinors on the squashed sphere and the Dirac family on Frobenius blocks.

The spinor module is the octonions ``O = R + R^7``: ``gamma_a`` is left
multiplication by the imaginary unit ``e_a`` with ``e_a e_b = -delta_ab -
phi_abc e_c``.  With this sign the 3-form ``phi`` acts by ``+7`` on the
real unit, the invariant spinor, and by ``-1`` on its complement.

On a block ``Hom(V_gamma, S)^H`` with ``S`` either the spinor module or its
twist by ``sp(1)_C``, the family is

``D^t eta = -sum_a gamma_a eta rho(Ihat_a) + (t - 1)/2 phi eta``.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import sympy as sp

from .algebra import ISOTROPY, frame_scales, structure_constants
from .closed_forms import SQUARE_SHIFT
from .errors import CliffordError, EmptyBlockError, SpectralError
from .geometry import octonion_structure_constants
from .reptheory import (HRep, IrrepLabelG, build_carrier, casimir_g,
                        hom_block, invariant_metric_diagonal)

CLUSTER_TOL = 1e-7
IMAG_TOL = 1e-9
SQUARE_TOL = 1e-8
TWISTS = ("twisted", "untwisted")
_TWIST_ALIASES = {"adjoint": "twisted", "twisted": "twisted", "none": "untwisted",
                  "untwisted": "untwisted"}


def normalize_twist(tag: str) -> str:
    try:
        return _TWIST_ALIASES[tag]
    except KeyError:
        raise ValueError(f"unknown twist {tag!r}; use 'adjoint' or 'none'") from None


@dataclass(frozen=True, eq=False)
class CliffordModule:
    """Gamma matrices of the 8-dimensional spinor module and the action of phi."""

    gammas: tuple
    phi_action: np.ndarray

    def form_action(self, terms: dict) -> np.ndarray:
        """Clifford action of a form given as ``{sorted index tuple: coefficient}`` on m*."""
        out = np.zeros((8, 8), dtype=complex)
        for key, c in terms.items():
            M = np.eye(8, dtype=complex)
            for i in key:
                M = M @ self.gammas[i - 1]
            out += complex(c) * M
        return out

    def anticommutation_defect(self) -> float:
        worst = 0.0
        for a, b in itertools.product(range(7), repeat=2):
            ga, gb = self.gammas[a], self.gammas[b]
            worst = max(worst, float(np.abs(ga @ gb + gb @ ga + 2.0 * (a == b) * np.eye(8)).max()))
        return worst


@lru_cache(maxsize=None)
def build_clifford() -> CliffordModule:
    """Gamma matrices from the octonion multiplication table.

    Raises
    ------
    CliffordError
        If the relations ``gamma_a gamma_b + gamma_b gamma_a = -2 delta_ab`` fail.
    """
    phi = octonion_structure_constants()
    gammas = []
    for a in range(1, 8):
        L = np.zeros((8, 8))
        L[a, 0] = 1.0
        L[0, a] = -1.0
        for b in range(1, 8):
            for c in range(1, 8):
                L[c, b] -= phi[a, b, c]
        gammas.append(L.astype(complex))
    action = np.zeros((8, 8), dtype=complex)
    for a, b, c in itertools.combinations(range(1, 8), 3):
        if phi[a, b, c]:
            action += phi[a, b, c] * gammas[a - 1] @ gammas[b - 1] @ gammas[c - 1]
    module = CliffordModule(tuple(gammas), action)
    defect = module.anticommutation_defect()
    if defect > 1e-12:
        raise CliffordError(f"Clifford relations fail (defect {defect:.2e})")
    return module


def spin_lift(X: int, clifford: CliffordModule | None = None) -> np.ndarray:
    """Spinor action of the isotropy generator ``I_X``.

    With ``[I_X, Ihat_a] = sum_b A_ba Ihat_b`` in the orthonormal frame,
    the lift is ``(1/4) sum A_ba gamma_a gamma_b``; it satisfies
    ``[S, gamma_c] = sum_b A_bc gamma_b``.
    """
    clifford = clifford or build_clifford()
    f = structure_constants().array
    scale = np.sqrt(invariant_metric_diagonal()[:7])
    A = f[:7, X - 1, :7] * scale[:, None] / scale[None, :]
    G = clifford.gammas
    return 0.25 * sum(A[b, a] * G[a] @ G[b] for a in range(7) for b in range(7) if A[b, a])


@lru_cache(maxsize=None)
def spinor_target() -> HRep:
    """The spinor module as a representation of the isotropy algebra."""
    cl = build_clifford()
    return HRep(tuple(spin_lift(X, cl) for X in ISOTROPY), "Delta")


def pauli_basis() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``T_a = -i sigma_a``, so that ``[T_a, T_b] = 2 eps_abc T_c``."""
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]])
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return (-1j * s1, -1j * s2, -1j * s3)


@lru_cache(maxsize=None)
def sp1_adjoint() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``ad T_a`` on ``sp(1)_C`` in the basis ``T_1, T_2, T_3``."""
    T = pauli_basis()
    flat = np.array([t.ravel() for t in T]).T
    out = []
    for Ta in T:
        cols = []
        for Tb in T:
            comm = Ta @ Tb - Tb @ Ta
            coeff, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
            cols.append(coeff)
        out.append(np.array(cols).T)
    return tuple(out)


@lru_cache(maxsize=None)
def twist_action() -> HRep:
    """Isotropy acting on ``sp(1)_C`` through ``I_{10+a} -> T_a`` (``I_8..I_10`` act trivially)."""
    ad = sp1_adjoint()
    zero = np.zeros((3, 3), dtype=complex)
    return HRep((zero, zero, zero) + ad, "sp1")


@lru_cache(maxsize=None)
def twisted_spinor_target() -> HRep:
    return spinor_target().tensor(twist_action(), "Delta*sp1")


def _target(twist: str) -> tuple[HRep, list[np.ndarray], np.ndarray]:
    cl = build_clifford()
    if twist == "twisted":
        eye = np.eye(3)
        return (twisted_spinor_target(), [np.kron(g, eye) for g in cl.gammas],
                np.kron(cl.phi_action, eye))
    return spinor_target(), list(cl.gammas), cl.phi_action


@dataclass(frozen=True, eq=False)
class DiracBlock:
    """The Dirac family restricted to one Frobenius block.

    ``matrix(t) = canonical + (t - 1)/2 * phi`` in the intertwiner basis,
    whose Gram matrix is ``gram``.
    """

    label: IrrepLabelG
    twist: str
    canonical: np.ndarray
    phi: np.ndarray
    gram: np.ndarray
    basis: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return self.canonical.shape[0]

    def matrix(self, t: float) -> np.ndarray:
        return self.canonical + 0.5 * (t - 1.0) * self.phi

    def square_target(self) -> float:
        return float(-casimir_g(self.label) + SQUARE_SHIFT[self.twist])


def _apply_family(eta: np.ndarray, rho: Sequence[np.ndarray], gammas, phi, scales, t: float):
    out = 0.5 * (t - 1.0) * (phi @ eta)
    for a in range(7):
        out = out - scales[a] * (gammas[a] @ eta @ rho[a])
    return out


def _inner(u: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.vdot(u.ravel(), v.ravel()))


_BLOCKS: dict = {}


def dirac_block(label: Sequence[int], twist: str = "twisted") -> DiracBlock:
    """Matrix of the Dirac family on ``Hom(V_gamma, S)^H``.

    ``twist`` is ``"twisted"``/``"adjoint"`` for spinors with values in
    ``sp(1)_C`` and ``"untwisted"``/``"none"`` for plain spinors.

    Raises
    ------
    EmptyBlockError
        If the block has no intertwiners.
    """
    label = IrrepLabelG(*label)
    twist = normalize_twist(twist)
    key = (label, twist)
    hit = _BLOCKS.get(key)
    if hit is not None:
        return hit
    target, gammas, phi = _target(twist)
    hb = hom_block(label, target)
    if hb.dim == 0:
        raise EmptyBlockError(f"block {label} ({twist}) is empty")
    rho = [hb.carrier[a] for a in range(1, 8)]
    scales = frame_scales()
    basis = hb.basis
    k = len(basis)
    D1 = [_apply_family(eta, rho, gammas, np.zeros_like(phi), scales, 1.0) for eta in basis]
    P = [phi @ eta for eta in basis]
    canonical = np.array([[_inner(basis[i], D1[j]) for j in range(k)] for i in range(k)])
    phim = np.array([[_inner(basis[i], P[j]) for j in range(k)] for i in range(k)])
    gram = np.array([[_inner(basis[i], basis[j]) for j in range(k)] for i in range(k)])
    block = DiracBlock(label, twist, canonical, phim, gram, basis)
    _BLOCKS.setdefault(key, block)
    return _BLOCKS[key]


def block_spectrum(block: DiracBlock, t: float = 0.0, imag_tol: float = IMAG_TOL) -> np.ndarray:
    """Sorted real eigenvalues of the block at ``t``.

    The generalised problem ``M v = lambda G v`` is solved with the Gram
    matrix ``G`` of the intertwiner basis.

    Raises
    ------
    SpectralError
        If ``M`` fails to be Hermitian by more than ``imag_tol``, which would
        allow non-real eigenvalues.
    """
    M = block.matrix(t)
    skew = float(np.abs(M - M.conj().T).max())
    if skew > imag_tol:
        raise SpectralError(f"block {block.label} is not self-adjoint (defect {skew:.2e})")
    H = 0.5 * (M + M.conj().T)
    G = 0.5 * (block.gram + block.gram.conj().T)
    return np.sort(sla.eigh(H, G, eigvals_only=True))


def cluster(values: Iterable[float], tol: float = CLUSTER_TOL) -> list[tuple[float, int]]:
    """Group sorted values closer than ``tol`` into ``(mean, multiplicity)`` pairs."""
    groups: list[list[float]] = []
    for v in sorted(values):
        if groups and abs(v - groups[-1][-1]) <= tol:
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(float(np.mean(g)), len(g)) for g in groups]


def casimir_square_check(block: DiracBlock, tol: float = SQUARE_TOL) -> float:
    """``|| (D^{1/3})^2 - (-c_gamma + s) Id ||_max`` with ``s = 1/9`` or ``49/9``.

    Raises
    ------
    SpectralError
        If the residual exceeds ``tol``.
    """
    M = block.matrix(1.0 / 3.0)
    Ginv = np.linalg.inv(block.gram)
    S = Ginv @ M @ Ginv @ M
    res = float(np.abs(S - block.square_target() * np.eye(block.dim)).max())
    if res > tol:
        raise SpectralError(f"squared block {block.label} deviates from scalar by {res:.2e}")
    return res


def eigen_lower_bound(label: Sequence[int]) -> float:
    """``L = sqrt(-c_gamma + 1/9) - 7/6``; twisted t=0 eigenvalues satisfy ``|lambda| >= L``."""
    return math.sqrt(float(-casimir_g(label)) + 1.0 / 9.0) - 7.0 / 6.0


def eigen_lower_bound_exact(label: Sequence[int]) -> sp.Expr:
    c = casimir_g(label)
    return sp.sqrt(sp.Rational(-c.numerator, c.denominator) + sp.Rational(1, 9)) - sp.Rational(7, 6)


def enumerate_candidates(threshold: float) -> list[IrrepLabelG]:
    """All labels with ``L_gamma <= threshold``, in lexicographic order.

    ``-c_gamma`` grows in each index separately, so the scan stops at
    the first index value whose single-index Casimir already exceeds the
    bound.
    """
    if threshold + 7.0 / 6.0 < 0:
        return []
    bound = (threshold + 7.0 / 6.0) ** 2 - 1.0 / 9.0 + 1e-12
    neg_c = lambda a, b, c: -float(casimir_g((a, b, c)))
    out = []
    a = 0
    while neg_c(a, 0, 0) <= bound:
        b = 0
        while neg_c(a, b, 0) <= bound:
            c = 0
            while neg_c(a, b, c) <= bound:
                if eigen_lower_bound((a, b, c)) <= threshold:
                    out.append(IrrepLabelG(a, b, c))
                c += 1
            b += 1
        a += 1
    return out


@dataclass(frozen=True)
class CriticalRate:
    """A rate ``nu = lambda - 5/2`` and the eigenspace dimension it carries."""

    rate: float
    eigenvalue: float
    dimension: int
    contributions: tuple  # (label, block multiplicity, dim V_gamma)


def twisted_spectra(labels: Iterable[Sequence[int]], t: float = 0.0, jobs: int = 1) -> dict:
    """``{label: eigenvalues}`` for the nonempty twisted blocks among ``labels``."""
    labels = [IrrepLabelG(*lab) for lab in labels]

    def one(lab):
        try:
            return lab, block_spectrum(dirac_block(lab, "twisted"), t)
        except EmptyBlockError:
            return lab, None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, labels))
    else:
        results = [one(lab) for lab in labels]
    return {lab: spec for lab, spec in results if spec is not None}


def critical_rates(interval: tuple[float, float], closed: bool = False,
                   tol: float = CLUSTER_TOL, jobs: int = 1) -> list[CriticalRate]:
    """Rates ``nu`` in the interval at which ``nu + 5/2`` is a twisted eigenvalue.

    The candidate scan uses ``enumerate_candidates`` at the largest
    ``|nu + 5/2|`` of the interval, so every block that could contribute
    is inspected.  The interval is open unless ``closed`` is set.
    """
    lo, hi = interval
    if lo > hi:
        raise ValueError("interval must satisfy lo <= hi")
    reach = max(abs(lo + 2.5), abs(hi + 2.5))
    spectra = twisted_spectra(enumerate_candidates(reach), jobs=jobs)
    found: dict[float, list] = {}
    for lab, spec in spectra.items():
        for value, mult in cluster(spec, tol):
            nu = value - 2.5
            inside = (lo - tol <= nu <= hi + tol) if closed else (lo + tol < nu < hi - tol)
            if inside:
                key = round(value / tol) * tol
                found.setdefault(key, []).append((lab, mult, lab.dim, value))
    out = []
    for key in sorted(found):
        entries = found[key]
        value = float(np.mean([e[3] for e in entries]))
        dim = sum(m * d for _, m, d, _ in entries)
        out.append(CriticalRate(value - 2.5, value, dim, tuple((lab, m, d) for lab, m, d, _ in entries)))
    return out
