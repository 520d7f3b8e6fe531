"""Closed-form undepleted-pump solutions for the travelling-wave schemes.

With the pumps frozen at their initial coherent amplitudes, both interaction
schemes reduce to linear operator equations for the three signal modes.  The
cascaded scheme (downconversion feeding sum-frequency generation) has two
regimes set by the effective couplings kappa_1 = chi_1 <b_1(0)> and
kappa_2 = chi_2 <b_2(0)>:

* oscillatory, kappa_2 > kappa_1, rate Omega = sqrt(kappa_2^2 - kappa_1^2);
* hyperbolic, kappa_1 > kappa_2, rate zeta = sqrt(kappa_1^2 - kappa_2^2).

Equal couplings admit no closed form here; use ``moment_ode_oracle`` (which
integrates the same linear moment system numerically, any couplings) or the
stochastic route.

The concurrent scheme (two downconversions sharing the middle mode) always
grows hyperbolically with Omega = sqrt(gamma_1^2 + gamma_2^2), where
gamma_j = chi_j <b_j(0)>.

Hyperbolic/trigonometric differences are evaluated through half-angle forms
(e.g. cosh zt - 1 = 2 sinh^2(zt/2)) so that small-rate parameter sets do not
suffer cancellation against the rate-power denominators.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import Kind, MomentTable, CriteriaReport, criteria_from_values, vlf_criteria

__all__ = [
    "Regime",
    "AnalyticParams",
    "cascaded_intensities",
    "cascaded_moment_table",
    "concurrent_intensities",
    "concurrent_moment_table",
    "concurrent_vlf_closed_form",
    "moment_ode_oracle",
]


class Regime(enum.Enum):
    OSCILLATORY = "oscillatory"
    HYPERBOLIC = "hyperbolic"
    CONCURRENT = "concurrent"


@dataclass(frozen=True)
class AnalyticParams:
    """Effective pump couplings for one travelling-wave scheme.

    Cascaded parameters carry (kappa1, kappa2); concurrent parameters carry
    (gamma1, gamma2).  All couplings must be strictly positive, and the
    cascaded scheme rejects kappa1 == kappa2 (no closed-form rate).
    """

    scheme: Kind
    kappa1: float | None = None
    kappa2: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        if self.scheme == Kind.CASCADED_TW:
            if self.kappa1 is None or self.kappa2 is None:
                raise ValueError("cascaded parameters require kappa1 and kappa2")
            if self.gamma1 is not None or self.gamma2 is not None:
                raise ValueError("cascaded parameters carry no gamma couplings")
            if self.kappa1 <= 0 or self.kappa2 <= 0:
                raise ValueError("couplings must be strictly positive")
        elif self.scheme == Kind.CONCURRENT_TW:
            if self.gamma1 is None or self.gamma2 is None:
                raise ValueError("concurrent parameters require gamma1 and gamma2")
            if self.kappa1 is not None or self.kappa2 is not None:
                raise ValueError("concurrent parameters carry no kappa couplings")
            if self.gamma1 <= 0 or self.gamma2 <= 0:
                raise ValueError("couplings must be strictly positive")
        else:
            raise ValueError("analytic solutions exist for travelling-wave kinds only")

    @classmethod
    def cascaded(cls, kappa1: float, kappa2: float) -> "AnalyticParams":
        return cls(Kind.CASCADED_TW, kappa1=float(kappa1), kappa2=float(kappa2))

    @classmethod
    def concurrent(cls, gamma1: float, gamma2: float) -> "AnalyticParams":
        return cls(Kind.CONCURRENT_TW, gamma1=float(gamma1), gamma2=float(gamma2))

    @classmethod
    def from_system_spec(cls, spec) -> "AnalyticParams":
        """Effective couplings chi_j * b_j(0) from a travelling-wave spec."""
        if not spec.kind.travelling_wave:
            raise ValueError("undepleted-pump couplings need a travelling-wave spec")
        c1 = spec.chi1 * spec.pump1_init
        c2 = spec.chi2 * spec.pump2_init
        if abs(c1.imag) > 1e-12 * abs(c1) or abs(c2.imag) > 1e-12 * abs(c2):
            raise ValueError("effective couplings must be real and positive")
        if spec.kind == Kind.CASCADED_TW:
            return cls.cascaded(c1.real, c2.real)
        return cls.concurrent(c1.real, c2.real)

    @property
    def regime(self) -> Regime:
        if self.scheme == Kind.CONCURRENT_TW:
            return Regime.CONCURRENT
        if self.kappa1 == self.kappa2:
            raise ValueError(
                "kappa1 == kappa2 has no closed-form regime; use "
                "moment_ode_oracle or the stochastic route")
        return Regime.OSCILLATORY if self.kappa2 > self.kappa1 else Regime.HYPERBOLIC

    @property
    def rate(self) -> float:
        """Omega (oscillatory/concurrent) or zeta (hyperbolic)."""
        if self.scheme == Kind.CONCURRENT_TW:
            return math.hypot(self.gamma1, self.gamma2)
        if self.regime == Regime.OSCILLATORY:
            return math.sqrt(self.kappa2 ** 2 - self.kappa1 ** 2)
        return math.sqrt(self.kappa1 ** 2 - self.kappa2 ** 2)


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0:
        raise ValueError("scaled time must be >= 0")
    return t


def cascaded_intensities(p: AnalyticParams, t: float) -> tuple[float, float, float]:
    """Mean intensities (<n1>, <n2>, <n3>) of the cascaded scheme at time t.

    Vacuum initial signal modes; <n1> = <n2> + <n3> holds identically.
    """
    if p.scheme != Kind.CASCADED_TW:
        raise ValueError("cascaded_intensities needs cascaded parameters")
    t = _check_time(t)
    k1, k2, r = p.kappa1, p.kappa2, p.rate
    if p.regime == Regime.OSCILLATORY:
        s = math.sin(r * t)
        half2 = 2.0 * math.sin(0.5 * r * t) ** 2          # 1 - cos(rt)
    else:
        s = math.sinh(r * t)
        half2 = 2.0 * math.sinh(0.5 * r * t) ** 2         # cosh(rt) - 1
    n2 = (k1 * s / r) ** 2
    n3 = (k1 * k2 * half2 / r ** 2) ** 2
    return (n2 + n3, n2, n3)


def _cascaded_moments(p: AnalyticParams, t: float):
    """Second moments of the cascaded scheme in cancellation-free form."""
    k1, k2, r = p.kappa1, p.kappa2, p.rate
    r2, r3, r4 = r ** 2, r ** 3, r ** 4
    if p.regime == Regime.OSCILLATORY:
        s = math.sin(r * t)
        h = math.sin(0.5 * r * t)
    else:
        s = math.sinh(r * t)
        h = math.sinh(0.5 * r * t)
    h2 = h * h
    # kappa2^2 -+ kappa1^2 cos/cosh rewritten around the rate:
    # oscillatory: kappa2^2 - kappa1^2 cos = r^2 + 2 kappa1^2 sin^2(rt/2)
    # hyperbolic:  kappa1^2 cosh - kappa2^2 = r^2 + 2 kappa1^2 sinh^2(rt/2)
    core = r2 + 2.0 * k1 ** 2 * h2

    vx1 = 8.0 * k1 ** 2 * h2 * (r2 + k1 ** 2 * h2) / r4
    vx2 = 2.0 * (k1 * s) ** 2 / r2
    vx3 = 8.0 * (k1 * k2 * h2) ** 2 / r4
    cx12 = 2.0 * k1 * s * core / r3
    cx13 = 4.0 * k1 * k2 * h2 * core / r4
    cx23 = 4.0 * k1 ** 2 * k2 * s * h2 / r3
    return vx1, vx2, vx3, cx12, cx13, cx23


def cascaded_moment_table(p: AnalyticParams, t: float) -> MomentTable:
    """Exact moment table of the cascaded scheme (either regime) at time t.

    Sign pattern between quadratures: the (1,2) and (1,3) covariances flip
    sign from X to Y, the (2,3) covariance does not.
    """
    if p.scheme != Kind.CASCADED_TW:
        raise ValueError("cascaded_moment_table needs cascaded parameters")
    t = _check_time(t)
    vx1, vx2, vx3, cx12, cx13, cx23 = _cascaded_moments(p, t)
    sxx = np.array([[vx1, cx12, cx13],
                    [cx12, vx2, cx23],
                    [cx13, cx23, vx3]])
    syy = np.array([[vx1, -cx12, -cx13],
                    [-cx12, vx2, cx23],
                    [-cx13, cx23, vx3]])
    n1, n2, n3 = cascaded_intensities(p, t)
    return MomentTable.exact_from_moments(sxx, syy, np.array([n1, n2, n3]))


def concurrent_intensities(p: AnalyticParams, t: float) -> tuple[float, float, float]:
    """Mean intensities (<n1>, <n2>, <n3>) of the concurrent scheme at time t."""
    if p.scheme != Kind.CONCURRENT_TW:
        raise ValueError("concurrent_intensities needs concurrent parameters")
    t = _check_time(t)
    g1, g2, om = p.gamma1, p.gamma2, p.rate
    sh2 = math.sinh(om * t) ** 2
    return ((g1 / om) ** 2 * sh2, sh2, (g2 / om) ** 2 * sh2)


def concurrent_moment_table(p: AnalyticParams, t: float) -> MomentTable:
    """Exact moment table of the concurrent scheme at time t.

    Here the (1,3) covariance keeps its sign between X and Y while the other
    two flip, the reverse of the cascaded pattern.
    """
    if p.scheme != Kind.CONCURRENT_TW:
        raise ValueError("concurrent_moment_table needs concurrent parameters")
    t = _check_time(t)
    g1, g2, om = p.gamma1, p.gamma2, p.rate
    sh2 = math.sinh(om * t) ** 2
    s2 = math.sinh(2.0 * om * t)
    vx1 = 2.0 * (g1 / om) ** 2 * sh2
    vx2 = 2.0 * sh2
    vx3 = 2.0 * (g2 / om) ** 2 * sh2
    cx12 = g1 * s2 / om
    cx13 = 2.0 * g1 * g2 * sh2 / om ** 2
    cx23 = g2 * s2 / om
    sxx = np.array([[vx1, cx12, cx13],
                    [cx12, vx2, cx23],
                    [cx13, cx23, vx3]])
    syy = np.array([[vx1, -cx12, cx13],
                    [-cx12, vx2, -cx23],
                    [cx13, -cx23, vx3]])
    n1, n2, n3 = concurrent_intensities(p, t)
    return MomentTable.exact_from_moments(sxx, syy, np.array([n1, n2, n3]))


def concurrent_vlf_closed_form(gamma: float, t: float) -> CriteriaReport:
    """Criteria for the equal-coupling concurrent scheme, directly.

    V12 = V23 = 5 + 9 sinh^2(Om t) - 3 sqrt(2) sinh(2 Om t) with
    Om = sqrt(2) gamma, and V13 = 5 + 6 sinh^2 - 2 sqrt(2) sinh(2 Om t).
    Must agree with ``vlf_criteria(concurrent_moment_table(...))`` to 1e-12.
    """
    if gamma <= 0:
        raise ValueError("coupling must be strictly positive")
    t = _check_time(t)
    om = math.sqrt(2.0) * gamma
    sh2 = math.sinh(om * t) ** 2
    s2 = math.sinh(2.0 * om * t)
    v12 = 5.0 + 9.0 * sh2 - 3.0 * math.sqrt(2.0) * s2
    v13 = 5.0 + 6.0 * sh2 - 2.0 * math.sqrt(2.0) * s2
    return criteria_from_values(v12, v13, v12)


# -- independent moment-ODE oracle ------------------------------------------------

def _heisenberg_matrix(p: AnalyticParams) -> np.ndarray:
    """Generator L of the linear mode equations over (a1,a1+,a2,a2+,a3,a3+).

    For the concurrent scheme the third-mode equation carries gamma2, matching
    the coefficients of the closed-form solutions.
    """
    L = np.zeros((6, 6))
    if p.scheme == Kind.CASCADED_TW:
        k1, k2 = p.kappa1, p.kappa2
        L[0, 3] = k1
        L[1, 2] = k1
        L[2, 1] = k1
        L[2, 4] = -k2
        L[3, 0] = k1
        L[3, 5] = -k2
        L[4, 2] = k2
        L[5, 3] = k2
    else:
        g1, g2 = p.gamma1, p.gamma2
        L[0, 3] = g1
        L[1, 2] = g1
        L[2, 1] = g1
        L[2, 5] = g2
        L[3, 0] = g1
        L[3, 4] = g2
        L[4, 3] = g2
        L[5, 2] = g2
    return L


def _ordered_to_table(S: np.ndarray) -> MomentTable:
    """Normally ordered moment table from the operator-ordered 6x6 matrix S.

    S[i, j] = <u_i u_j> in the written order with u = (a1,a1+,a2,a2+,a3,a3+).
    """
    sxx = np.zeros((3, 3))
    syy = np.zeros((3, 3))
    n = np.zeros(3)
    for j in range(3):
        aj, cj = 2 * j, 2 * j + 1
        n[j] = S[cj, aj]
        for k in range(3):
            ak, ck = 2 * k, 2 * k + 1
            if j == k:
                # same mode: put creation operators left before summing
                sxx[j, j] = S[aj, aj] + 2.0 * S[cj, aj] + S[cj, cj]
                syy[j, j] = -(S[aj, aj] - 2.0 * S[cj, aj] + S[cj, cj])
            else:
                sxx[j, k] = S[aj, ak] + S[aj, ck] + S[cj, ak] + S[cj, ck]
                syy[j, k] = -(S[aj, ak] - S[aj, ck] - S[cj, ak] + S[cj, ck])
    return MomentTable.exact_from_moments(sxx, syy, n)


def moment_ode_oracle(p: AnalyticParams, t, rtol: float = 1e-10):
    """Ground-truth moment tables by numerical integration of the moment ODEs.

    The linear operator equations induce d S / dt = L S + S L^T for the
    ordered second-moment matrix S (vacuum initial condition S = the same-mode
    <a a+> = 1 entries).  First moments stay zero from vacuum.  Accepts a
    scalar time or an array; returns one table or a list of tables.

    Unlike the closed-form tables this route also covers equal cascaded
    couplings.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("scaled times must be >= 0")
    L = _heisenberg_matrix(p)

    S0 = np.zeros((6, 6))
    for j in range(3):
        S0[2 * j, 2 * j + 1] = 1.0

    def rhs(_t, y):
        S = y.reshape(6, 6)
        return (L @ S + S @ L.T).ravel()

    order = np.argsort(times)
    t_sorted = times[order]
    t_end = float(t_sorted[-1]) if t_sorted[-1] > 0 else 1.0
    sol = solve_ivp(rhs, (0.0, t_end), S0.ravel(), method="DOP853",
                    t_eval=np.unique(np.concatenate([t_sorted, [t_end]])),
                    rtol=rtol, atol=1e-13)
    if not sol.success:
        raise RuntimeError(f"moment-ODE integration failed: {sol.message} "
                           f"(nfev={sol.nfev})")

    lookup = {float(tv): sol.y[:, i].reshape(6, 6) for i, tv in enumerate(sol.t)}
    tables = [_ordered_to_table(lookup[float(tv)]) for tv in times]
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return tables[0]
    return tables


def vlf_from_analytic(p: AnalyticParams, t: float) -> CriteriaReport:
    """Criteria straight from the closed-form moment table."""
    if p.scheme == Kind.CASCADED_TW:
        return vlf_criteria(cascaded_moment_table(p, t))
    return vlf_criteria(concurrent_moment_table(p, t))
