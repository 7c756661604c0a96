"""Invariant instantons ``A = e^{a+10} T_a + phi(r) e^a T_a`` on the Bryant-Salamon space.

The profile ``phi`` solves

``alpha phi' = 12 - 12 alpha^2/(5 beta^2) - (2 + 4 alpha^2/(5 beta^2)) phi - 2 phi^2``

and is known in closed form, ``phi = alpha^2 / (1/y0 + 2 int_0^r alpha) - 3``.
``y0 = 0`` gives the flat connection ``phi = -3`` and ``y0 = inf`` the
limiting instanton, which is singular along the zero section.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from .algebra import structure_constants
from .geometry import BSPath, bs_rhs, fit_loglog_slope, launch_state, octonion_structure_constants

LIMITING = math.inf


def _rhs_terms(phi, alpha, beta):
    k = alpha * alpha / (5 * beta * beta)
    return (12, -12 * k, -(2 + 4 * k) * phi, -2 * phi * phi)


def instanton_rhs(phi, alpha, beta):
    """``phi'`` from the reduced instanton equation; needs ``alpha > 0``."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0):
        raise ValueError("instanton_rhs needs alpha > 0; start from the series near r = 0")
    out = sum(_rhs_terms(phi, alpha, np.asarray(beta, dtype=float))) / alpha
    return float(out) if np.ndim(out) == 0 else out


def shifted_rhs(x, alpha, beta):
    """``x'`` for ``x = phi + 3``: ``-(2/alpha) x (x - 5 + 2 alpha^2/(5 beta^2))``.

    Algebraically equal to ``instanton_rhs(x - 3, alpha, beta)``.
    """
    k = alpha * alpha / (5.0 * beta * beta)
    return -2.0 * x * (x - 5.0 + 2.0 * k) / alpha


def _inverse_y0(y0: float) -> float:
    if y0 < 0:
        raise ValueError("y0 must be non-negative")
    return 0.0 if math.isinf(y0) else 1.0 / y0


def closed_form_phi(r, y0: float, flow: BSPath):
    """``alpha^2 / (1/y0 + 2 int alpha) - 3`` along ``flow``; ``y0 = inf`` is the limit."""
    r = np.asarray(r, dtype=float)
    if y0 == 0:
        return np.full_like(r, -3.0) if r.ndim else -3.0
    inv = _inverse_y0(y0)
    if inv == 0.0 and np.any(r <= 0):
        raise ValueError("the limiting profile is only defined for r > 0")
    st = flow.state(r)
    out = st[0] ** 2 / (inv + 2.0 * st[2]) - 3.0
    return out if r.ndim else float(out[0])


def closed_form_phi_dot(r, y0: float, flow: BSPath):
    """Derivative of the closed form, using ``alpha'`` from the metric flow."""
    r = np.asarray(r, dtype=float)
    if y0 == 0:
        return np.zeros_like(r) if r.ndim else 0.0
    inv = _inverse_y0(y0)
    st = flow.state(r)
    alpha, beta = st[0], st[1]
    dalpha = (25.0 * beta ** 2 - 2.0 * alpha ** 2) / (5.0 * beta ** 2)
    D = inv + 2.0 * st[2]
    out = 2.0 * alpha * dalpha / D - 2.0 * alpha ** 3 / D ** 2
    return out if r.ndim else float(out[0])


def closed_form_phi_beta(beta, beta0: float, y0: float, printed: bool = False):
    """The closed form with ``beta`` as the coordinate.

    Uses ``alpha^2 = 5 beta^2 - 5 beta0^{10/3} beta^{-4/3}`` and ``2 int alpha =
    (5/3)(beta^2 - beta0^2)``, giving
    ``(5 beta0^2 - 5 beta0^{10/3} beta^{-4/3} - 3/y0) / (1/y0 + (5/3)(beta^2 - beta0^2))``.
    With ``printed=True`` the coefficient of ``beta0^{10/3}`` is 1, the
    variant that belongs to the normalisation ``beta^4 (5 beta^2 - alpha^2)^3 = beta0^10``.
    """
    beta = np.asarray(beta, dtype=float)
    inv = _inverse_y0(y0)
    c = 1.0 if printed else 5.0
    num = 5.0 * beta0 ** 2 - c * beta0 ** (10.0 / 3.0) * beta ** (-4.0 / 3.0) - 3.0 * inv
    return num / (inv + (5.0 / 3.0) * (beta ** 2 - beta0 ** 2))


def limiting_phi(r, flow: BSPath):
    """``alpha^2 / (2 int alpha) - 3``; tends to 2 at the zero section and to 0 at infinity."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("the limiting profile is only defined for r > 0")
    return closed_form_phi(r, LIMITING, flow)


@dataclass(frozen=True)
class InstantonProfile:
    """Samples of ``phi`` for one member of the family."""

    y0: float
    beta0: float
    r: np.ndarray
    phi: np.ndarray

    @property
    def is_limiting(self) -> bool:
        return math.isinf(self.y0)

    @property
    def is_flat(self) -> bool:
        return self.y0 == 0


def instanton_profile(y0: float, flow: BSPath, r=None) -> InstantonProfile:
    """Closed-form profile sampled on ``r`` (default: the flow grid)."""
    r = flow.r if r is None else np.asarray(r, dtype=float)
    return InstantonProfile(float(y0), flow.beta0, r, np.asarray(closed_form_phi(r, y0, flow)))


def integrate_instanton_ode(y0: float, beta0: float, r_eval: np.ndarray,
                            rtol: float = 1e-12, atol: float = 1e-14,
                            method: str = "LSODA", eps_factor: float = 1e-6) -> np.ndarray:
    """Numerical ``phi`` by integrating ``instanton_rhs`` together with the metric.

    Independent of the closed form: the state is ``(alpha, beta, int alpha,
    w, x)`` with ``x = phi + 3``, integrated with LSODA (not the DOP853 of the
    metric flow) from the
    leading series ``x = 25 y0 r^2``.  Carrying ``x`` rather than ``phi``
    matters: near the zero section every solution has ``x ~ C r^2``, so an
    absolute error in ``phi`` at the launch radius is amplified by
    ``(r/eps)^2``, while the relative error in ``x`` stays bounded.  The
    right-hand side is ``instanton_rhs`` in the factored form of
    :func:`shifted_rhs`, which keeps its relative accuracy for tiny ``x``.
    """
    if not 0 < y0 < math.inf:
        raise ValueError("the ODE oracle needs a finite positive y0")
    eps = eps_factor * beta0
    a, b, ia, w = (float(v) for v in launch_state(eps, beta0))
    x_eps = 25.0 * y0 * eps * eps

    def rhs(r, y):
        return bs_rhs(r, y[:4]) + [shifted_rhs(y[4], y[0], y[1])]

    r_eval = np.asarray(r_eval, dtype=float)
    if r_eval.min() < eps:
        raise ValueError("evaluation radii must not lie below the launch radius")
    tolerances = np.array([atol] * 4 + [atol * x_eps])
    sol = solve_ivp(rhs, (eps, float(r_eval.max())), [a, b, ia, w, x_eps], method=method,
                    t_eval=np.sort(r_eval), rtol=rtol, atol=tolerances)
    if not sol.success:
        raise RuntimeError(f"instanton integration failed: {sol.message}")
    order = np.argsort(np.argsort(r_eval))
    return sol.y[4][order] - 3.0


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    r_lo: float
    r_hi: float
    label: str = "phi-decay exponent"


def decay_rate(profile: InstantonProfile, decades: float = 1.0) -> DecayFit:
    """Slope of ``log|phi|`` against ``log r`` over the last ``decades`` of the profile.

    The exponent is that of ``phi`` itself (about -2); it is not converted
    into a rate for the connection form.
    """
    if profile.is_flat or np.all(profile.phi == profile.phi[0]):
        raise ValueError("phi does not decay: the profile is constant (flat member)")
    r_hi = float(profile.r[-1])
    if r_hi < 100.0:
        raise ValueError("decay_rate needs a profile sampled to r >= 100")
    r_lo = r_hi / 10.0 ** decades
    sel = profile.r >= r_lo
    return DecayFit(fit_loglog_slope(profile.r[sel], profile.phi[sel]), r_lo, r_hi)


def _epsilon(d: int, b: int, c: int) -> int:
    if {d, b, c} != {1, 2, 3}:
        return 0
    return 1 if (d, b, c) in ((1, 2, 3), (2, 3, 1), (3, 1, 2)) else -1


def curvature_components(phi: float) -> np.ndarray:
    """``F_bc`` on m as coefficients of ``T_d``: array ``F[d, b, c]`` (1-based, index 0 unused).

    ``F_bc = -f^{d+10}_bc - phi f^d_bc + 2 phi^2 eps_dbc``.
    """
    f = structure_constants()
    F = np.zeros((4, 8, 8))
    for d in range(1, 4):
        for b in range(1, 8):
            for c in range(1, 8):
                F[d, b, c] = (-float(f.f(d + 10, b, c)) - phi * float(f.f(d, b, c))
                              + 2.0 * phi * phi * _epsilon(d, b, c))
    return F


def instanton_equation_residual(phi: float, phi_dot: float, alpha: float, beta: float) -> float:
    """Sup over a = 1..3 of the mismatch in ``(1/alpha) F_0a = -(1/2) [...]``.

    The right-hand side contracts the curvature with ``phi_abc`` over the
    vertical pairs (weight ``1/alpha^2``) and the horizontal pairs (weight
    ``1/beta^2``).
    """
    o = octonion_structure_constants()
    F = curvature_components(phi)
    worst = 0.0
    for a in range(1, 4):
        lhs = np.zeros(4)
        lhs[a] = phi_dot / alpha
        rhs = np.zeros(4)
        for b in range(1, 8):
            for c in range(1, 8):
                if o[a, b, c] == 0:
                    continue
                if b <= 3 and c <= 3:
                    rhs += o[a, b, c] * F[:, b, c] / alpha ** 2
                elif b >= 4 and c >= 4:
                    rhs += o[a, b, c] * F[:, b, c] / beta ** 2
        rhs *= -0.5
        worst = max(worst, float(np.linalg.norm(lhs[1:] - rhs[1:])))
    return worst


def curvature_residual(profile: InstantonProfile, flow: BSPath, r: float) -> float:
    """Instanton-equation residual of the closed-form member ``profile.y0`` at radius ``r``."""
    alpha, beta = flow.state(r)[:2, 0]
    phi = closed_form_phi(float(r), profile.y0, flow)
    phi_dot = closed_form_phi_dot(float(r), profile.y0, flow)
    return instanton_equation_residual(phi, phi_dot, float(alpha), float(beta))


def substitution_residual(phi, alpha, beta) -> np.ndarray:
    """Mismatch of ``y' = -2 alpha y^2`` for ``y = (phi + 3)/alpha^2`` along samples.

    ``y'`` is assembled by the chain rule from ``instanton_rhs`` and the
    metric equation for ``alpha'``.  Near the zero section the terms of the
    chain rule nearly cancel, so the mismatch is divided by the sum of the
    magnitudes of every term that enters, which is the scale of the
    rounding error.
    """
    phi, alpha, beta = (np.asarray(v, dtype=float) for v in (phi, alpha, beta))
    x = phi + 3.0
    dalpha = (25.0 * beta ** 2 - 2.0 * alpha ** 2) / (5.0 * beta ** 2)
    y = x / alpha ** 2
    ydot = instanton_rhs(phi, alpha, beta) / alpha ** 2 - 2.0 * x * dalpha / alpha ** 3
    target = -2.0 * alpha * y ** 2
    size = sum(np.abs(t) for t in _rhs_terms(phi, alpha, beta)) / alpha ** 3
    scale = size + np.abs(2.0 * x * dalpha / alpha ** 3) + np.abs(target)
    return np.abs(ydot - target) / scale


def substitution_residual_exact() -> sp.Expr:
    """``y' + 2 alpha y^2`` after substituting ``phi = alpha^2 y - 3``, simplified symbolically.

    Zero exactly when the chain of substitutions is right.
    """
    a, b, y = sp.symbols("alpha beta y", positive=True)
    phi = a ** 2 * y - 3
    phi_dot = sum(_rhs_terms(phi, a, b)) / a
    dalpha = (25 * b ** 2 - 2 * a ** 2) / (5 * b ** 2)
    y_dot = (phi_dot - 2 * a * y * dalpha) / a ** 2
    return sp.simplify(y_dot + 2 * a * y ** 2)
