"""Spectral flows, characteristic-class arithmetic and virtual dimensions.

The eta invariant is never evaluated.  What is computed are the pieces it
cancels against: the spectral flow of the connection family, positivity of
scalar curvature along a metric path (so that flow vanishes too) and exact
characteristic-number integrals on ``HP^2`` and ``HP^2 # HP^2-bar``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .dirac import (CLUSTER_TOL, block_spectrum, build_clifford, cluster,
                    critical_rates, dirac_block, enumerate_candidates, sp1_adjoint,
                    twisted_spinor_target)
from .errors import CriticalRateError, EmptyBlockError, SpectralError
from .reptheory import IrrepLabelG

SHIFT_BOUND = 4.0
P1_CONVENTIONS = ("4a", "2a")


@lru_cache(maxsize=None)
def fiber_operator() -> np.ndarray:
    """``sum_{a=1..3} gamma_a (x) ad T_a`` on ``Delta (x) sp(1)_C`` (24 x 24)."""
    G = build_clifford().gammas
    ad = sp1_adjoint()
    F = sum(np.kron(G[a], ad[a]) for a in range(3))
    F.setflags(write=False)
    return F


def fiber_operator_spectrum(tol: float = 1e-9) -> list[tuple[float, int]]:
    """Eigenvalues of the fiber operator with multiplicities, ascending."""
    F = fiber_operator()
    if np.abs(F - F.conj().T).max() > 1e-12:
        raise SpectralError("fiber operator is not self-adjoint")
    return cluster(np.linalg.eigvalsh(F), tol)


def trivial_isotypic_line(tol: float = 1e-8) -> np.ndarray:
    """Unit vector spanning the ``W_(0,0)`` component of ``Delta (x) sp(1)_C``."""
    target = twisted_spinor_target()
    cu, cd = target.casimirs()
    null = sla.null_space(np.vstack([cu, cd]), rcond=tol)
    if null.shape[1] != 1:
        raise SpectralError(f"trivial isotypic component has dimension {null.shape[1]}, expected 1")
    return null[:, 0]


def trivial_block_fiber_eigenvalue() -> float:
    """Eigenvalue of the fiber operator on the ``W_(0,0)`` line."""
    v = trivial_isotypic_line()
    Fv = fiber_operator() @ v
    lam = complex(np.vdot(v, Fv))
    if np.abs(Fv - lam * v).max() > 1e-9:
        raise SpectralError("the trivial line is not an eigenvector of the fiber operator")
    return lam.real


def flat_endpoint_labels(label: Sequence[int]) -> list[IrrepLabelG]:
    """Untwisted labels whose spectra make up the twisted block at the flat end.

    At ``s = -3`` the twisting bundle is flat, and the block for
    ``(a, b, c)`` splits along ``W_c (x) W_2 = W_{|c-2|} + ... + W_{c+2}``.
    """
    a, b, c = label
    return [IrrepLabelG(a, b, cp) for cp in range(abs(c - 2), c + 3, 2)]


def flat_endpoint_spectrum(label: Sequence[int]) -> np.ndarray:
    values = []
    for lab in flat_endpoint_labels(label):
        try:
            values.extend(block_spectrum(dirac_block(lab, "untwisted"), 0.0))
        except EmptyBlockError:
            continue
    return np.sort(np.array(values))


def fiber_block(label: Sequence[int]) -> np.ndarray:
    """The fiber operator on the twisted Frobenius block of ``label``."""
    block = dirac_block(label, "twisted")
    F = fiber_operator()
    return np.array([[complex(np.vdot(bi.ravel(), (F @ bj).ravel())) for bj in block.basis]
                     for bi in block.basis])


@dataclass(frozen=True)
class BlockFlow:
    label: IrrepLabelG
    s: np.ndarray
    paths: np.ndarray  # shape (len(s), block dim), sorted per grid point
    crossings: int
    min_abs: float
    max_step: float


@dataclass(frozen=True)
class SpectralFlowResult:
    total: int
    blocks: tuple = field(default_factory=tuple)
    shift_bound: float = SHIFT_BOUND
    candidates: tuple = field(default_factory=tuple)

    def block(self, label) -> BlockFlow:
        label = IrrepLabelG(*label)
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)


def _block_flow(label: IrrepLabelG, n_grid: int, zero_tol: float, max_refine: int) -> BlockFlow:
    block = dirac_block(label, "twisted")
    D0 = block.matrix(0.0)
    Fb = fiber_block(label)
    G = 0.5 * (block.gram + block.gram.conj().T)
    for _ in range(max_refine + 1):
        s = np.linspace(-3.0, 0.0, n_grid)
        paths = np.empty((n_grid, block.dim))
        for k, sk in enumerate(s):
            M = D0 + (sk / 3.0) * Fb
            paths[k] = sla.eigh(0.5 * (M + M.conj().T), G, eigvals_only=True)
        min_abs = float(np.abs(paths).min())
        if min_abs > zero_tol:
            break
        n_grid = 2 * n_grid - 1
    else:
        raise SpectralError(f"eigenvalue path of {label} stays within {zero_tol} of zero after refinement")
    signs = np.sign(paths)
    crossings = int(np.sum((signs[1:] > 0) & (signs[:-1] < 0)) - np.sum((signs[1:] < 0) & (signs[:-1] > 0)))
    max_step = float(np.abs(np.diff(paths, axis=0)).max()) if n_grid > 1 else 0.0
    return BlockFlow(label, s, paths, crossings, min_abs, max_step)


def spectral_flow_connection(n_grid: int = 301, zero_tol: float = 1e-6, max_refine: int = 4,
                             jobs: int = 1) -> SpectralFlowResult:
    """Signed zero crossings of ``D(s) = D_canonical + (s/3) F`` for ``s`` from -3 to 0.

    ``s = -3`` is the flat connection and ``s = 0`` the canonical one.  Only
    blocks with eigenvalue bound ``L_gamma <= 4`` are scanned: the
    perturbation ``(s/3) F`` has norm at most ``max|spec F| = 4``, so no other
    block can reach zero.
    """
    spec = fiber_operator_spectrum()
    bound = max(abs(v) for v, _ in spec)
    if bound > SHIFT_BOUND + 1e-9:
        raise SpectralError(f"fiber operator norm {bound} exceeds the shift bound {SHIFT_BOUND}")
    labels = []
    for lab in enumerate_candidates(SHIFT_BOUND):
        try:
            dirac_block(lab, "twisted")
        except EmptyBlockError:
            continue
        labels.append(lab)

    def run(lab):
        return _block_flow(lab, n_grid, zero_tol, max_refine)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            flows = list(pool.map(run, labels))
    else:
        flows = [run(lab) for lab in labels]
    total = sum(f.crossings for f in flows)
    return SpectralFlowResult(total, tuple(flows), SHIFT_BOUND, tuple(enumerate_candidates(SHIFT_BOUND)))


# ----------------------------------------------------------------------------
# metric family
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricFamilyPoint:
    """``a^2 (eta_1^2 + eta_2^2) + b^2 eta_3^2 + c^2 pi^* g_{S^4}``, stored through the squares.

    Keeping ``a^2, b^2, c^2`` lets rational squashings such as
    ``a^2 = 1/5`` stay exact.
    """

    a2: object
    b2: object
    c2: object

    def __post_init__(self):
        if not (self.a2 > 0 and self.b2 > 0 and self.c2 > 0):
            raise ValueError("squashing parameters must be positive")

    @classmethod
    def from_scales(cls, a: float, b: float, c: float) -> "MetricFamilyPoint":
        return cls(a * a, b * b, c * c)

    @property
    def a(self) -> float:
        return math.sqrt(self.a2)

    @property
    def b(self) -> float:
        return math.sqrt(self.b2)

    @property
    def c(self) -> float:
        return math.sqrt(self.c2)


def ricci_family(p: MetricFamilyPoint) -> tuple:
    """Ricci coefficients on ``eta_1^2 + eta_2^2``, ``eta_3^2`` and ``pi^* g_{S^4}``."""
    a2, b2, c2 = p.a2, p.b2, p.c2
    return (2 * (2 - b2 / a2 + 2 * a2 * a2 / (c2 * c2)),
            2 * (b2 * b2 / (a2 * a2) + 2 * b2 * b2 / (c2 * c2)),
            2 * (6 - (2 * a2 + b2) / c2))


def scalar_curvature(p: MetricFamilyPoint):
    """Trace of the Ricci tensor: two ``eta_{1,2}`` directions, one ``eta_3``, four on ``S^4``."""
    r1, r3, r4 = ricci_family(p)
    return 2 * r1 / p.a2 + r3 / p.b2 + 4 * r4 / p.c2


def scalar_family(a2):
    """Scalar curvature along ``b = a``, ``c = 1``: ``6/a^2 + 48 - 12 a^2``."""
    return 6 / a2 + 48 - 12 * a2


@dataclass(frozen=True)
class FamilyPositivity:
    positive: bool
    minimum: float
    argmin_a: float
    round_value: Fraction
    squashed_value: Fraction
    metric_flow: int


def scalar_family_positivity(a_lo: float = 1 / math.sqrt(5.0), a_hi: float = 1.0,
                             n: int = 10001) -> FamilyPositivity:
    """Grid minimum of the scalar curvature on ``b = a, c = 1`` for ``a`` in ``[a_lo, a_hi]``.

    Positive scalar curvature leaves no harmonic spinors along the path, so
    the metric spectral flow is reported as 0 when the minimum is positive.
    Each grid value is assembled from :func:`ricci_family` and compared with
    the simplified closed form.
    """
    a = np.linspace(a_lo, a_hi, n)
    values = np.array([float(scalar_curvature(MetricFamilyPoint(x * x, x * x, 1.0))) for x in a])
    closed = scalar_family(a * a)
    if np.abs(values - closed).max() > 1e-9 * np.abs(closed).max():
        raise ValueError("assembled scalar curvature disagrees with the simplified family")
    k = int(np.argmin(values))
    one = Fraction(1)
    round_value = scalar_curvature(MetricFamilyPoint(one, one, one))
    squashed = scalar_curvature(MetricFamilyPoint(Fraction(1, 5), Fraction(1, 5), one))
    positive = bool(values.min() > 0)
    return FamilyPositivity(positive, float(values[k]), float(a[k]), Fraction(round_value),
                            Fraction(squashed), 0 if positive else -1)


# ----------------------------------------------------------------------------
# characteristic classes
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CohomClass:
    """Element ``s + n_1 a_1 + n_2 a_2 + m_1 a_1^2 + m_2 a_2^2`` of the connect-sum ring.

    ``a_1 a_2 = 0`` and ``int a_i^2 = 1``.
    """

    scalar: Fraction = Fraction(0)
    n: tuple = (Fraction(0), Fraction(0))
    m: tuple = (Fraction(0), Fraction(0))

    def __post_init__(self):
        object.__setattr__(self, "scalar", Fraction(self.scalar))
        object.__setattr__(self, "n", tuple(Fraction(v) for v in self.n))
        object.__setattr__(self, "m", tuple(Fraction(v) for v in self.m))

    @classmethod
    def degree4(cls, n1, n2=0) -> "CohomClass":
        return cls(n=(n1, n2))

    @classmethod
    def degree8(cls, m1, m2=0) -> "CohomClass":
        return cls(m=(m1, m2))

    def __add__(self, other: "CohomClass") -> "CohomClass":
        return CohomClass(self.scalar + other.scalar,
                          tuple(x + y for x, y in zip(self.n, other.n)),
                          tuple(x + y for x, y in zip(self.m, other.m)))

    def __sub__(self, other: "CohomClass") -> "CohomClass":
        return self + other * -1

    def __mul__(self, other):
        if not isinstance(other, CohomClass):
            k = Fraction(other)
            return CohomClass(self.scalar * k, tuple(x * k for x in self.n), tuple(x * k for x in self.m))
        s, t = self, other
        return CohomClass(
            s.scalar * t.scalar,
            tuple(s.scalar * y + t.scalar * x for x, y in zip(s.n, t.n)),
            tuple(s.scalar * my + t.scalar * mx + nx * ny
                  for mx, my, nx, ny in zip(s.m, t.m, s.n, t.n)),
        )

    __rmul__ = __mul__

    def integrate(self) -> Fraction:
        return self.m[0] + self.m[1]


ZERO_CLASS = CohomClass()


def index_integrand(p1g: CohomClass, p2g: CohomClass, p1M: CohomClass, p2M: CohomClass,
                    dim_g: int) -> Fraction:
    """``-(1/12) int (p1(g)^2 - 2 p2(g)) + (1/24) int p1(M) p1(g) - (dim g/5760) int (7 p1(M)^2 - 4 p2(M))``."""
    t1 = -Fraction(1, 12) * (p1g * p1g - p2g * 2).integrate()
    t2 = Fraction(1, 24) * (p1M * p1g).integrate()
    t3 = -Fraction(dim_g, 5760) * (p1M * p1M * 7 - p2M * 4).integrate()
    return t1 + t2 + t3


def chern_sym2(c1: CohomClass, c2: CohomClass) -> tuple[CohomClass, CohomClass]:
    """``(c_1, c_2)`` of ``Sym^2 E`` for a rank-2 bundle: ``(3 c_1, 2 c_1^2 + 4 c_2)``."""
    return c1 * 3, c1 * c1 * 2 + c2 * 4


def hp2_pontryagin(convention: str = "4a") -> tuple[int, int]:
    """``p_1`` coefficient used on each ``HP^2`` summand of the connect sum, and ``p_2``."""
    if convention not in P1_CONVENTIONS:
        raise ValueError(f"p1 convention must be one of {P1_CONVENTIONS}")
    return (4, 28) if convention == "4a" else (2, 7)


@dataclass(frozen=True)
class IndexPipeline:
    """Every intermediate value of the index computation at rate ``-5/2``."""

    convention: str
    index_hp2: Fraction
    index_d8: Fraction
    index_m_sigma: Fraction
    connection_flow: int
    metric_flow: int
    family: Fraction
    n: tuple
    limiting_correction: Fraction
    limiting: Fraction
    identities: tuple

    @property
    def all_hold(self) -> bool:
        return all(ok for _, ok in self.identities)


def single_hp2_index(dim_g: int = 3) -> Fraction:
    """Index on ``HP^2`` for the trivial bundle, from ``p_1 = 2a`` and ``p_2 = 7a^2``."""
    return index_integrand(ZERO_CLASS, ZERO_CLASS, CohomClass.degree4(2), CohomClass.degree8(7), dim_g)


def limiting_bundle_classes() -> tuple:
    """``(n_1, n_2)`` with ``p_1(g) = n_1 a_1 + n_2 a_2`` for the glued limiting bundle."""
    c1 = ZERO_CLASS
    c2 = CohomClass.degree4(-1, 0)
    _, c2_sym = chern_sym2(c1, c2)
    return c2_sym.n


def index_pipeline(convention: str = "4a", connection_flow: int | None = None,
                   metric_flow: int | None = None) -> IndexPipeline:
    """Assemble both indices at rate ``-5/2`` and check the identities along the way.

    Spectral flows default to the values computed by
    :func:`spectral_flow_connection` and :func:`scalar_family_positivity`.
    """
    p1_coeff, p2_coeff = hp2_pontryagin(convention)
    if connection_flow is None:
        connection_flow = spectral_flow_connection().total
    if metric_flow is None:
        metric_flow = scalar_family_positivity().metric_flow
    index_hp2 = single_hp2_index()
    index_d8 = index_integrand(ZERO_CLASS, ZERO_CLASS, ZERO_CLASS, ZERO_CLASS, 3)
    index_m = index_hp2 - index_d8
    family = index_m - connection_flow - metric_flow
    n = limiting_bundle_classes()
    p1M = CohomClass.degree4(p1_coeff, p1_coeff)
    p2M = CohomClass.degree8(p2_coeff, p2_coeff)
    p1g = CohomClass.degree4(*n)
    correction = index_integrand(p1g, ZERO_CLASS, p1M, p2M, 3) - index_integrand(ZERO_CLASS, ZERO_CLASS, p1M, p2M, 3)
    limiting = family + correction
    closed = Fraction(p1_coeff, 24) * sum(n) - Fraction(1, 12) * sum(x * x for x in n)
    identities = (
        ("index on HP^2 vanishes", index_hp2 == 0),
        ("index on D^8 vanishes", index_d8 == 0),
        ("I(M_Sigma) = I(HP^2) - I(D^8)", index_m == index_hp2 - index_d8),
        ("connection spectral flow vanishes", connection_flow == 0),
        ("metric spectral flow vanishes", metric_flow == 0),
        ("limiting correction matches (1/12) sum", correction == closed),
        ("c_2(Sym^2 E) = 4 c_2(E) gives n = (-4, 0)", tuple(n) == (-4, 0)),
    )
    return IndexPipeline(convention, index_hp2, index_d8, index_m, connection_flow, metric_flow,
                         family, tuple(n), correction, limiting, identities)


def index_at_minus_5_2(which: str = "family", convention: str = "4a",
                       pipeline: IndexPipeline | None = None) -> Fraction:
    """Index of the deformation operator at rate ``-5/2``: ``family`` or ``limiting``."""
    pipeline = pipeline or index_pipeline(convention)
    if which == "family":
        return pipeline.family
    if which == "limiting":
        return pipeline.limiting
    raise ValueError("which must be 'family' or 'limiting'")


def virtual_dimension(which: str, nu: float, convention: str = "4a",
                      pipeline: IndexPipeline | None = None, tol: float = CLUSTER_TOL) -> Fraction:
    """Index at rate ``nu``: the value at ``-5/2`` plus the eigenspace jumps in between.

    Raises
    ------
    CriticalRateError
        If ``nu + 5/2`` is itself a twisted eigenvalue.
    """
    base = index_at_minus_5_2(which, convention, pipeline)
    lo, hi = sorted((-2.5, float(nu)))
    for cr in critical_rates((nu, nu), closed=True, tol=tol):
        raise CriticalRateError(f"nu = {nu} is a critical rate (eigenvalue {cr.eigenvalue:g})")
    jumps = sum(cr.dimension for cr in critical_rates((lo, hi), tol=tol))
    return base + jumps if nu >= -2.5 else base - jumps
