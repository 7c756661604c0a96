"""Left-invariant exterior calculus and the Bryant-Salamon cone flow.

Forms are sparse maps from strictly increasing index tuples to
coefficients.  Index 0 stands for ``dr``, indices 1..7 for the coframe of
m dual to ``I_1 ... I_7`` and 8..13 for the isotropy directions (these
only appear in the full Chevalley-Eilenberg differential).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from .algebra import ISOTROPY, StructureTensor, structure_constants
from .errors import FlowError, InconsistentSystemError, InvarianceError

MAX_DEGREE = 8


def _sort_with_sign(idx: Iterable[int]) -> tuple[int, tuple[int, ...]]:
    """Sort indices by bubble sort, returning the permutation sign (0 on repeats)."""
    arr = list(idx)
    if len(set(arr)) != len(arr):
        return 0, ()
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


def _is_zero(c) -> bool:
    if isinstance(c, sp.Basic):
        return sp.expand(c) == 0
    return c == 0


class Form:
    """Sparse exterior form with coefficients on sorted index tuples.

    Coefficients may be ints, ``Fraction``, floats or sympy expressions.
    Unsorted keys passed to the constructor are sorted with the
    corresponding sign; repeated indices drop out.
    """

    __slots__ = ("_terms", "degree")

    def __init__(self, terms: Mapping[tuple, object] | None = None, degree: int | None = None):
        acc: dict[tuple, object] = {}
        for key, c in (terms or {}).items():
            sign, k = _sort_with_sign(key)
            if sign == 0:
                continue
            acc[k] = acc.get(k, 0) + sign * c
        acc = {k: (sp.expand(v) if isinstance(v, sp.Basic) else v) for k, v in acc.items()}
        self._terms = {k: v for k, v in acc.items() if not _is_zero(v)}
        degrees = {len(k) for k in self._terms}
        if len(degrees) > 1:
            raise ValueError(f"inhomogeneous form with degrees {sorted(degrees)}")
        if degree is None:
            degree = degrees.pop() if degrees else 0
        elif degrees and degrees != {degree}:
            raise ValueError("declared degree does not match the terms")
        if degree > MAX_DEGREE:
            raise ValueError(f"degree {degree} exceeds {MAX_DEGREE}")
        self.degree = degree

    @classmethod
    def basis(cls, *idx: int, coeff=1) -> "Form":
        return cls({tuple(idx): coeff}, degree=len(idx))

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def __len__(self):
        return len(self._terms)

    def coefficient(self, *idx: int):
        sign, key = _sort_with_sign(idx)
        return sign * self._terms.get(key, 0) if sign else 0

    def is_zero(self, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return not self._terms
        return self.norm() <= tol

    def norm(self) -> float:
        """Coefficient 2-norm; ``inf`` for a nonzero form with symbolic coefficients."""
        total = 0.0
        for v in self._terms.values():
            if isinstance(v, sp.Basic) and not v.is_number:
                return math.inf
            total += abs(complex(v)) ** 2
        return math.sqrt(total)

    def _combine(self, other: "Form", s: int) -> "Form":
        if self._terms and other._terms and self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + s * v
        deg = self.degree if self._terms else other.degree
        return Form(out, degree=deg)

    def __add__(self, other: "Form") -> "Form":
        return self._combine(other, 1)

    def __sub__(self, other: "Form") -> "Form":
        return self._combine(other, -1)

    def __neg__(self) -> "Form":
        return self * -1

    def __mul__(self, scalar) -> "Form":
        return Form({k: v * scalar for k, v in self._terms.items()}, degree=self.degree)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (self - other).is_zero()

    def map(self, fn: Callable) -> "Form":
        return Form({k: fn(v) for k, v in self._terms.items()}, degree=self.degree)

    def subs(self, values: Mapping) -> "Form":
        return self.map(lambda v: v.subs(values) if isinstance(v, sp.Basic) else v)

    def evalf(self) -> "Form":
        return self.map(lambda v: float(v) if isinstance(v, sp.Basic) else v)

    def __repr__(self):
        if not self._terms:
            return f"Form(0, degree={self.degree})"
        body = " + ".join(f"({v})e^{''.join(map(str, k))}" for k, v in self)
        return f"Form({body})"


class InvariantForm(Form):
    """A form on m* whose isotropy invariance was verified once at construction."""

    __slots__ = ()

    def __init__(self, terms=None, degree=None, f: StructureTensor | None = None, tol: float = 1e-12):
        super().__init__(terms, degree)
        if any(i == 0 or i > 7 for k in self._terms for i in k):
            raise InvarianceError("invariant forms live on m*: indices must be in 1..7")
        worst = isotropy_defect(self, f)
        if worst > tol * max(1.0, self.norm()):
            raise InvarianceError(f"form is not isotropy invariant (defect {worst:.3e})")

    @classmethod
    def of(cls, form: Form, f: StructureTensor | None = None) -> "InvariantForm":
        return cls(form.terms, form.degree, f)


def wedge(a: Form, b: Form) -> Form:
    """Graded-commutative product of two forms."""
    if a.degree + b.degree > MAX_DEGREE:
        raise ValueError(f"wedge degree {a.degree + b.degree} exceeds {MAX_DEGREE}")
    out: dict[tuple, object] = {}
    for ka, va in a._terms.items():
        for kb, vb in b._terms.items():
            sign, key = _sort_with_sign(ka + kb)
            if sign:
                out[key] = out.get(key, 0) + sign * va * vb
    return Form(out, degree=a.degree + b.degree)


def _derivation(form: Form, image: Callable[[int], Form], shift: int) -> Form:
    """Extend ``e^i -> image(i)`` as a (graded, if ``shift`` is odd) derivation."""
    out = Form(degree=form.degree + shift)
    for key, c in form._terms.items():
        for pos, i in enumerate(key):
            img = image(i)
            if img.is_zero():
                continue
            left = Form.basis(*key[:pos]) if pos else Form({(): 1}, degree=0)
            right = Form.basis(*key[pos + 1:]) if pos + 1 < len(key) else Form({(): 1}, degree=0)
            sign = (-1) ** pos if shift % 2 else 1
            out = out + wedge(wedge(left, img), right) * (c * sign)
    return out


@lru_cache(maxsize=None)
def _generator_differentials() -> dict[int, Form]:
    f = structure_constants()
    out = {0: Form(degree=2)}
    for C in range(1, 14):
        terms = {}
        for A in range(1, 14):
            for B in range(A + 1, 14):
                v = f.f(C, A, B)
                if v != 0:
                    terms[(A, B)] = -v
        out[C] = Form(terms, degree=2)
    return out


def ce_differential(form: Form, f: StructureTensor | None = None) -> Form:
    """Chevalley-Eilenberg differential on left-invariant forms of the group.

    ``de^C = -(1/2) f^C_{AB} e^A ^ e^B`` (all A, B in 1..13), ``d(dr) = 0``,
    extended as an antiderivation.  Coefficients are treated as constants.
    """
    if f is None or f is structure_constants():
        gens = _generator_differentials()
    else:
        gens = {0: Form(degree=2)}
        for C in range(1, 14):
            gens[C] = Form({(A, B): -f.f(C, A, B) for A in range(1, 14)
                            for B in range(A + 1, 14) if f.f(C, A, B) != 0}, degree=2)
    return _derivation(form, lambda i: gens[i], 1)


def isotropy_action(form: Form, X: int, f: StructureTensor | None = None) -> Form:
    """Coadjoint action of ``I_X`` on a form: ``e^C -> -f^C_{XB} e^B``."""
    f = f or structure_constants()

    def image(C: int) -> Form:
        if C == 0:
            return Form(degree=1)
        return Form({(B,): -f.f(C, X, B) for B in range(1, 14) if f.f(C, X, B) != 0}, degree=1)

    return _derivation(form, image, 0)


def isotropy_defect(form: Form, f: StructureTensor | None = None) -> float:
    return max((isotropy_action(form, X, f).norm() for X in ISOTROPY), default=0.0)


def mc_differential(form: Form, f: StructureTensor | None = None, tol: float = 1e-12) -> Form:
    """Exterior derivative of an invariant form on the homogeneous space.

    The isotropy components of the full differential vanish on invariant
    input; they are checked and the m* part is returned.

    Raises
    ------
    InvarianceError
        If ``form`` is not isotropy invariant.
    """
    if not isinstance(form, InvariantForm):
        worst = isotropy_defect(form, f)
        if worst > tol * max(1.0, form.norm()):
            raise InvarianceError(f"mc_differential needs an invariant form (defect {worst:.3e})")
    d = ce_differential(form, f)
    stray = Form({k: v for k, v in d.terms.items() if any(i > 7 for i in k)}, degree=d.degree)
    if not stray.is_zero(tol * max(1.0, form.norm())):
        raise InvarianceError("isotropy terms survive in the differential")
    return Form({k: v for k, v in d.terms.items() if all(i <= 7 for i in k)}, degree=d.degree)


def hodge_star(form: Form, alpha, beta) -> Form:
    """Hodge star on m* for the metric ``alpha^2 (vertical) + beta^2 (horizontal)``.

    Orientation ``e^{1234567}``.  ``alpha`` and ``beta`` may be symbolic.
    """
    scale = {i: (alpha if i <= 3 else beta) for i in range(1, 8)}
    full = tuple(range(1, 8))
    out = {}
    for key, c in form._terms.items():
        if any(i == 0 or i > 7 for i in key):
            raise ValueError("hodge_star acts on forms over m* only")
        rest = tuple(i for i in full if i not in key)
        sign, _ = _sort_with_sign(key + rest)
        num = 1
        for j in rest:
            num = num * scale[j]
        den = 1
        for i in key:
            den = den * scale[i]
        out[rest] = out.get(rest, 0) + sign * c * num / den
    return Form(out, degree=7 - form.degree)


@dataclass(frozen=True)
class G2Forms:
    phi: Form
    psi: Form
    omegas: tuple[Form, Form, Form]
    dvol: Form


def self_dual_omegas() -> tuple[Form, Form, Form]:
    e = Form.basis
    return (e(4, 5) + e(6, 7), e(4, 6) - e(5, 7), e(4, 7) + e(5, 6))


def g2_forms(alpha=1, beta=1) -> G2Forms:
    """The invariant ansatz ``phi``, its dual ``psi`` and the volume form."""
    e = Form.basis
    w = self_dual_omegas()
    vertical = [e(1), e(2), e(3)]
    pairs = [e(2, 3), e(3, 1), e(1, 2)]
    mixed = Form(degree=3)
    squares = Form(degree=4)
    cross = Form(degree=4)
    for k in range(3):
        mixed = mixed + wedge(vertical[k], w[k])
        squares = squares + wedge(w[k], w[k])
        cross = cross + wedge(pairs[k], w[k])
    phi = e(1, 2, 3) * alpha ** 3 - mixed * (alpha * beta ** 2)
    psi = squares * (beta ** 4 * Fraction(1, 6)) - cross * (alpha ** 2 * beta ** 2)
    dvol = e(1, 2, 3, 4, 5, 6, 7) * (alpha ** 3 * beta ** 4)
    return G2Forms(phi, psi, w, dvol)


def nearly_g2_residual(alpha: float, beta: float) -> float:
    """``|| d phi - 4 psi ||`` (coefficient 2-norm) for the ansatz at ``(alpha, beta)``."""
    forms = g2_forms(alpha, beta)
    return (mc_differential(forms.phi) - forms.psi * 4).norm()


@dataclass(frozen=True)
class NearlyG2Solution:
    alpha: sp.Expr
    beta: sp.Expr
    residual: float
    all_solutions: tuple

    def as_floats(self) -> tuple[float, float]:
        return float(self.alpha), float(self.beta)


def solve_nearly_g2() -> NearlyG2Solution:
    """Solve ``d phi = 4 psi`` for the scales of the invariant ansatz.

    Coefficients of the 4-form ``d phi - 4 psi`` are equated to zero and the
    polynomial system is solved exactly; the solution with ``alpha, beta > 0``
    is returned with the signs of ``beta`` recorded in ``all_solutions``.
    """
    a, b = sp.symbols("alpha beta", real=True)
    forms = g2_forms(a, b)
    eqs = [sp.expand(c) for _, c in (mc_differential(forms.phi) - forms.psi * 4)]
    if not eqs:
        raise InconsistentSystemError("d phi - 4 psi vanishes identically")
    sols = sp.solve(eqs, [a, b], dict=True)
    nontrivial = [s for s in sols if s.get(a, 0) != 0 and s.get(b, 0) != 0
                  and a in s and b in s and s[a].is_real and s[b].is_real]
    positive = [s for s in nontrivial if s[a] > 0 and s[b] > 0]
    if not positive:
        raise InconsistentSystemError(f"no positive solution of d phi = 4 psi among {sols}")
    best = positive[0]
    res = nearly_g2_residual(float(best[a]), float(best[b]))
    pairs = tuple(sorted(((s[a], s[b]) for s in nontrivial), key=lambda p: (float(p[0]), float(p[1]))))
    return NearlyG2Solution(sp.nsimplify(best[a]), sp.nsimplify(best[b]), res, pairs)


@lru_cache(maxsize=None)
def octonion_structure_constants() -> np.ndarray:
    """Totally antisymmetric ``phi_abc`` (shape 8x8x8, entries at indices 1..7).

    Read off the unit-scale expansion of the invariant 3-form.  Index 0 is
    unused so that ``phi[a, b, c]`` matches the 1-based labels.  The array
    is read-only.
    """
    phi = g2_forms(1, 1).phi
    t = np.zeros((8, 8, 8), dtype=int)
    for key, c in phi:
        for perm in itertools.permutations(range(3)):
            idx = tuple(key[p] for p in perm)
            sign, _ = _sort_with_sign(perm)
            t[idx] = sign * int(c)
    t.setflags(write=False)
    return t


# ----------------------------------------------------------------------------
# Bryant-Salamon flow
# ----------------------------------------------------------------------------


def bs_rhs(r: float, y: np.ndarray) -> list[float]:
    """Right-hand side for the state ``(alpha, beta, int alpha, 5 beta^2 - alpha^2)``.

    ``w = 5 beta^2 - alpha^2`` is carried as its own variable; its equation
    ``w' = -4 alpha w / (5 beta^2)`` follows from the other two and avoids
    the cancellation in ``5 beta^2 - alpha^2`` once the metric is close to
    its cone.
    """
    alpha, beta, _, w = y
    b2 = beta * beta
    return [
        (25.0 * b2 - 2.0 * alpha * alpha) / (5.0 * b2),
        3.0 * alpha / (5.0 * beta),
        alpha,
        -4.0 * alpha * w / (5.0 * b2),
    ]


@dataclass(frozen=True)
class MetricCoeffs:
    """Scales of the cone metric ``dr^2 + alpha^2 (vertical) + beta^2 (horizontal)``."""

    r: float
    alpha: float
    beta: float
    beta0: float


@dataclass(frozen=True)
class BSPath:
    """Sampled Bryant-Salamon flow with dense evaluation.

    Attributes
    ----------
    r, alpha, beta, int_alpha, w : ndarray
        Samples on the output grid; ``w = 5 beta^2 - alpha^2``.
    conserved_drift : float
        ``max |beta^4 w^3 / (125 beta0^10) - 1|`` over the samples.
    """

    beta0: float
    eps: float
    r: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    int_alpha: np.ndarray
    w: np.ndarray
    conserved_drift: float
    _dense: Callable = field(repr=False, compare=False)

    def state(self, r) -> np.ndarray:
        """``(alpha, beta, int alpha, w)`` at arbitrary radii, rows by component.

        Below the launch radius the leading series is used.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((4, r.size))
        inner = r < self.eps
        if np.any(~inner):
            out[:, ~inner] = self._dense(r[~inner])
        if np.any(inner):
            out[:, inner] = np.vstack(launch_state(r[inner], self.beta0))
        return out

    def alpha_at(self, r):
        return self.state(r)[0]

    def beta_at(self, r):
        return self.state(r)[1]

    def int_alpha_at(self, r):
        return self.state(r)[2]

    def w_at(self, r):
        return self.state(r)[3]

    def coeffs(self, r: float) -> MetricCoeffs:
        a, b = self.state(r)[:2, 0]
        return MetricCoeffs(float(r), float(a), float(b), self.beta0)

    def conserved_residual(self) -> np.ndarray:
        """Pointwise ``beta^4 w^3 / (125 beta0^10) - 1``."""
        return self.beta ** 4 * self.w ** 3 / (125.0 * self.beta0 ** 10) - 1.0

    def constraint_residual(self) -> np.ndarray:
        """Relative mismatch between the carried ``w`` and ``5 beta^2 - alpha^2``."""
        b2 = self.beta ** 2
        return np.abs(5.0 * b2 - self.alpha ** 2 - self.w) / (5.0 * b2)

    def integral_residual(self) -> np.ndarray:
        """``beta^2 - beta0^2 - (6/5) int alpha`` on the samples."""
        return self.beta ** 2 - self.beta0 ** 2 - 1.2 * self.int_alpha


def launch_state(r, beta0: float):
    """Series start of the flow near the bolt: ``alpha = 5r``, ``beta = beta0 + 3r^2/(2 beta0)``."""
    r = np.asarray(r, dtype=float)
    alpha = 5.0 * r
    beta = beta0 + 1.5 * r * r / beta0
    return alpha, beta, 2.5 * r * r, 5.0 * beta * beta - alpha * alpha


def bs_flow(beta0: float = 1.0, r_max: float = 100.0, tol: float = 1e-8,
            rtol: float = 1e-10, atol: float = 1e-14, n_samples: int = 2001,
            eps_factor: float = 1e-6, grid: str = "log") -> BSPath:
    """Integrate the Bryant-Salamon system from the bolt out to ``r_max``.

    Parameters
    ----------
    beta0 : float
        Size of the zero section, ``beta(0)``.
    r_max : float
        Outer radius.
    tol : float
        Allowed drift of the conserved quantity along the path.
    rtol, atol : float
        Integrator tolerances (DOP853).
    n_samples : int
        Number of output samples.
    grid : {"log", "linear"}
        Spacing of the output samples between the launch radius and ``r_max``.

    Raises
    ------
    FlowError
        When the integrator fails (for instance through step-size underflow)
        or the conserved quantity drifts by more than ``tol``.
    """
    if beta0 <= 0 or r_max <= 0:
        raise ValueError("beta0 and r_max must be positive")
    eps = eps_factor * beta0
    if r_max <= eps:
        raise ValueError("r_max must exceed the launch radius")
    y0 = [float(v) for v in launch_state(eps, beta0)]
    if grid == "log":
        r_eval = np.geomspace(eps, r_max, n_samples)
    else:
        r_eval = np.linspace(eps, r_max, n_samples)
    r_eval[0], r_eval[-1] = eps, r_max
    sol = solve_ivp(bs_rhs, (eps, r_max), y0, method="DOP853", t_eval=r_eval,
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise FlowError(f"Bryant-Salamon integration failed: {sol.message}")
    alpha, beta, ia, w = sol.y
    drift = float(np.max(np.abs(beta ** 4 * w ** 3 / (125.0 * beta0 ** 10) - 1.0)))
    if drift > tol:
        raise FlowError(f"conserved quantity drifted by {drift:.3e} > {tol:.1e}")
    return BSPath(beta0, eps, sol.t, alpha, beta, ia, w, drift, sol.sol)


def cone_deviation(path: BSPath, r=None) -> np.ndarray:
    """Relative distance of the metric from its asymptotic cone.

    In the frame where the cone metric is ``dr^2 + r^2 g_squashed``, the
    ratio ``5 beta^2 / alpha^2`` is compared with 1 along the vertical and
    its inverse along the horizontal directions, giving
    ``sqrt((5b^2/a^2 - 1)^2 + 3 (a^2/(5b^2) - 1)^2)``; with
    ``u = w / (5 beta^2)`` both entries are evaluated without cancellation.
    """
    if r is None:
        beta, w = path.beta, path.w
    else:
        st = path.state(r)
        beta, w = st[1], st[3]
    u = w / (5.0 * beta * beta)
    return np.sqrt((u / (1.0 - u)) ** 2 + 3.0 * u ** 2)


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of ``log|y|`` against ``log x``."""
    slope, _ = np.polyfit(np.log(x), np.log(np.abs(y)), 1)
    return float(slope)


def cone_rate(path: BSPath, r_lo: float = 10.0, r_hi: float | None = None, n: int = 200) -> float:
    """Fitted exponent of ``cone_deviation`` on ``[r_lo, r_hi]``."""
    r_hi = float(path.r[-1]) if r_hi is None else r_hi
    r = np.geomspace(r_lo, r_hi, n)
    return fit_loglog_slope(r, cone_deviation(path, r))


@dataclass(frozen=True)
class BSMetricCoeffs:
    """Coefficients of ``radial d beta^2 + vertical sum + horizontal sum``."""

    radial: float
    vertical: float
    horizontal: float


def bs_metric_coeffs(beta: float, beta0: float, printed: bool = False) -> BSMetricCoeffs:
    """Bryant-Salamon metric written with ``beta`` as the radial coordinate.

    With ``u = (beta0/beta)^{10/3}`` the conserved quantity gives
    ``alpha^2 = 5 (1 - u) beta^2`` and ``dr = (5 beta / 3 alpha) d beta``, so the
    metric is ``(5/9)/(1 - u) d beta^2 + 5 (1 - u) beta^2 sum e^i e^i + beta^2 sum e^a e^a``.

    ``printed=True`` returns the variant with ``(25/9)/(5 - u)`` and
    ``(5 - u) beta^2`` instead; that variant does not pull back to the flow
    but is kept for comparison.

    At ``beta = beta0`` the radial coefficient of the default form is
    infinite (the bolt), reported as ``math.inf``.
    """
    if beta0 <= 0:
        raise ValueError("beta0 must be positive")
    if beta < beta0:
        raise ValueError("beta must be at least beta0")
    u = (beta0 / beta) ** (10.0 / 3.0)
    if printed:
        return BSMetricCoeffs((25.0 / 9.0) / (5.0 - u), (5.0 - u) * beta * beta, beta * beta)
    radial = math.inf if u >= 1.0 else (5.0 / 9.0) / (1.0 - u)
    return BSMetricCoeffs(radial, 5.0 * (1.0 - u) * beta * beta, beta * beta)
