"""Intracavity steady states, linearized fluctuations and output spectra.

For the two cavity models the analysis proceeds in three steps:

1. solve the classical (noise-free) field equations for a steady state,
   by damped Newton iteration seeded from the analytic candidates;
2. linearize the full doubled phase-space drift about that state, giving the
   10x10 drift matrix A, the noise matrix B evaluated at the steady state and
   the diffusion matrix D = B B^T; stability requires every eigenvalue of A
   to have a negative real part;
3. form stationary spectral correlations S(w) = (A + iw)^-1 D (A^T - iw)^-1
   and map them to measurable output spectra through the cavity mirrors:
   a normally ordered intracavity cross-spectrum between modes i and j picks
   up the factor 2 sqrt(gamma_i gamma_j), and the vacuum contributes 2 to an
   X-difference and 3 to the three-mode Y-sum.  The resulting S_ij(w) sit at
   5 for uncorrelated vacuum and certify entanglement below 4, exactly like
   the time-domain criteria.

The concurrent cavity admits simple below-threshold closed forms for
S_12 = S_23 and S_13 (``closed_form_spectra``); the numerical pipeline is
required to reproduce them to high accuracy, which pins the normalization.

Threshold bookkeeping for the symmetric concurrent cavity: the reference
oscillation threshold eps_th = gamma_a gamma_b / (2 chi) and the zero-signal
stability boundary eps_c = gamma_a gamma_b / (sqrt(2) chi) = sqrt(2) eps_th
do not coincide; ``thresholds`` reports both together with the numerically
located eigenvalue crossing, and ``find_steady_state`` treats the analytic
above-threshold candidates as Newton seeds only.  The candidate with pump
amplitude gamma_a / (2 chi) does not satisfy the mean-field equations (its
residual is reported, not hidden); the sqrt(2)-corrected candidate

    beta = gamma_a / (sqrt(2) chi),  alpha_2 = sqrt(2) alpha_1,
    alpha_1 = alpha_3 = sqrt((eps - eps_c) / (sqrt(2) chi))

solves them exactly for eps > eps_c.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Kind, SystemSpec
from . import ppsde

__all__ = [
    "Branch",
    "SteadyState",
    "LinearizedModel",
    "SpectrumSeries",
    "ThresholdReport",
    "SteadyStateError",
    "UnstableModelError",
    "classical_equations",
    "find_steady_state",
    "linearize",
    "spectrum",
    "output_quadrature_spectra",
    "closed_form_spectra",
    "thresholds",
    "explicit_cascaded_drift_matrix",
    "reference_above_threshold_candidate",
    "corrected_above_threshold_candidate",
]

MARGINAL_REAL_PART = -1e-3


class SteadyStateError(RuntimeError):
    """No usable steady state could be found."""


class UnstableModelError(RuntimeError):
    """Linearized fluctuation analysis is invalid (eigenvalue with Re >= 0)."""


class Branch(enum.Enum):
    BELOW_THRESHOLD = "below"
    ABOVE_THRESHOLD = "above"


@dataclass(frozen=True)
class SteadyState:
    """A root of the classical field equations."""

    a_ss: np.ndarray        # (3,) complex signal amplitudes
    b_ss: np.ndarray        # (2,) complex pump amplitudes
    branch: Branch
    residual: float         # max |classical rate| at the root

    def __post_init__(self):
        for name, size in (("a_ss", 3), ("b_ss", 2)):
            arr = np.asarray(getattr(self, name), dtype=complex).copy()
            if arr.shape != (size,):
                raise ValueError(f"{name} must have shape ({size},)")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def doubled(self) -> np.ndarray:
        """Embed into the ten doubled variables with conjugate partners."""
        v = np.empty(10, dtype=complex)
        v[0:6:2] = self.a_ss
        v[1:6:2] = np.conj(self.a_ss)
        v[6:10:2] = self.b_ss
        v[7:10:2] = np.conj(self.b_ss)
        return v


@dataclass(frozen=True)
class LinearizedModel:
    """Drift/noise/diffusion matrices of the fluctuations about a steady state."""

    A: np.ndarray           # (10, 10) complex drift matrix
    B: np.ndarray           # (10, 8) noise matrix at the steady state
    D: np.ndarray           # (10, 10) diffusion matrix B B^T
    eigenvalues: np.ndarray  # (10,) complex
    stable: bool
    steady_state: SteadyState

    def __post_init__(self):
        for name in ("A", "B", "D", "eigenvalues"):
            arr = np.asarray(getattr(self, name), dtype=complex).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def marginal(self) -> bool:
        """True when the slowest eigenvalue is within 1e-3 of instability."""
        return bool(np.max(self.eigenvalues.real) > MARGINAL_REAL_PART)


@dataclass(frozen=True)
class SpectrumSeries:
    """Output spectral criteria over an analysis-frequency grid."""

    omega: np.ndarray
    s12: np.ndarray
    s13: np.ndarray
    s23: np.ndarray
    marginal: bool = False

    def __post_init__(self):
        for name in ("omega", "s12", "s13", "s23"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


# -- classical equations and the doubled drift -------------------------------------

def _require_cavity(spec: SystemSpec) -> None:
    if not spec.kind.cavity:
        raise ValueError("cavity analysis applies to cavity kinds only")


def _concurrent_cavity_drift(spec: SystemSpec, v: np.ndarray) -> np.ndarray:
    """Doubled drift of the concurrent cavity (losses and drives added to the
    travelling-wave interaction terms; chi1 acts with pump 1, chi2 with pump 2)."""
    a1, a1p, a2, a2p, a3, a3p, b1, b1p, b2, b2p = v
    c1, c2 = spec.chi1, spec.chi2
    ga1, ga2, ga3 = spec.signal_losses
    gb1, gb2 = spec.pump_losses
    out = np.empty(10, dtype=complex)
    out[0] = -ga1 * a1 + c1 * a2p * b1
    out[1] = -ga1 * a1p + c1 * a2 * b1p
    out[2] = -ga2 * a2 + c1 * a1p * b1 + c2 * a3p * b2
    out[3] = -ga2 * a2p + c1 * a1 * b1p + c2 * a3 * b2p
    out[4] = -ga3 * a3 + c2 * a2p * b2
    out[5] = -ga3 * a3p + c2 * a2 * b2p
    out[6] = spec.eps1 - gb1 * b1 - c1 * a1 * a2
    out[7] = np.conj(spec.eps1) - gb1 * b1p - c1 * a1p * a2p
    out[8] = spec.eps2 - gb2 * b2 - c2 * a2 * a3
    out[9] = np.conj(spec.eps2) - gb2 * b2p - c2 * a2p * a3p
    return out


def _concurrent_cavity_noise(spec: SystemSpec, v: np.ndarray) -> np.ndarray:
    """Noise matrix of the concurrent interaction evaluated at fields ``v``
    (same columns as the travelling-wave system; pumps carry no noise)."""
    b1, b1p, b2, b2p = v[6], v[7], v[8], v[9]
    c1, c2 = spec.chi1, spec.chi2
    s1 = np.sqrt(0.5 * c1 * complex(b1))
    s1p = np.sqrt(0.5 * c1 * complex(b1p))
    s2 = np.sqrt(0.5 * c2 * complex(b2))
    s2p = np.sqrt(0.5 * c2 * complex(b2p))
    B = np.zeros((10, 8), dtype=complex)
    B[0, 0] = s1
    B[0, 5] = 1j * s1
    B[1, 1] = s1p
    B[1, 4] = -1j * s1p
    B[2, 0] = s1
    B[2, 5] = -1j * s1
    B[2, 2] = s2
    B[2, 6] = 1j * s2
    B[3, 1] = s1p
    B[3, 4] = 1j * s1p
    B[3, 3] = s2p
    B[3, 7] = 1j * s2p
    B[4, 2] = s2
    B[4, 6] = -1j * s2
    B[5, 3] = s2p
    B[5, 7] = -1j * s2p
    return B


def _doubled_drift(spec: SystemSpec, v: np.ndarray) -> np.ndarray:
    if spec.kind == Kind.CASCADED_CAVITY:
        return ppsde.drift_and_noise(spec, ppsde.PhaseSpacePoint(v))[0]
    return _concurrent_cavity_drift(spec, v)


def _noise_matrix(spec: SystemSpec, v: np.ndarray) -> np.ndarray:
    if spec.kind == Kind.CASCADED_CAVITY:
        return ppsde.drift_and_noise(spec, ppsde.PhaseSpacePoint(v))[1]
    return _concurrent_cavity_noise(spec, v)


def _embed(fields: np.ndarray) -> np.ndarray:
    v = np.empty(10, dtype=complex)
    v[0:6:2] = fields[:3]
    v[1:6:2] = np.conj(fields[:3])
    v[6:10:2] = fields[3:]
    v[7:10:2] = np.conj(fields[3:])
    return v


def classical_equations(spec: SystemSpec):
    """Deterministic rate function over the five mean fields.

    Returns ``rates(fields)`` mapping a complex 5-vector (alpha_1, alpha_2,
    alpha_3, beta_1, beta_2) to its time derivative with losses and pumps,
    i.e. the positive-P drift restricted to the conjugate subspace.
    """
    _require_cavity(spec)

    def rates(fields) -> np.ndarray:
        fields = np.asarray(fields, dtype=complex)
        if fields.shape != (5,):
            raise ValueError("classical fields form a complex 5-vector")
        return _doubled_drift(spec, _embed(fields))[0:10:2]

    return rates


# -- steady states ------------------------------------------------------------------

def _to_real(fields: np.ndarray) -> np.ndarray:
    return np.concatenate([fields.real, fields.imag])


def _to_complex(x: np.ndarray) -> np.ndarray:
    return x[:5] + 1j * x[5:]


def _newton_root(spec: SystemSpec, seed_fields: np.ndarray,
                 tol_scale: float, max_iter: int = 80) -> tuple[np.ndarray, float]:
    """Damped Newton iteration on the ten real field components.

    The rates are affine in each single real component, so the columnwise
    finite differences used for the Jacobian are exact up to rounding.
    """
    rates = classical_equations(spec)

    def resid(x):
        return _to_real(rates(_to_complex(x)))

    x = _to_real(np.asarray(seed_fields, dtype=complex))
    tol = 1e-11 * tol_scale
    r = resid(x)
    for _ in range(max_iter):
        norm = np.max(np.abs(r))
        if norm < tol:
            break
        J = np.empty((10, 10))
        h = 1.0
        for k in range(10):
            xp = x.copy()
            xm = x.copy()
            xp[k] += h
            xm[k] -= h
            J[:, k] = (resid(xp) - resid(xm)) / (2.0 * h)
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as err:
            raise SteadyStateError(f"singular Jacobian in Newton iteration: {err}")
        lam = 1.0
        while lam > 1e-8:
            x_new = x + lam * delta
            r_new = resid(x_new)
            if np.max(np.abs(r_new)) < norm:
                break
            lam *= 0.5
        else:
            raise SteadyStateError("Newton damping stalled without progress")
        x, r = x_new, r_new
    else:
        raise SteadyStateError(
            f"Newton iteration did not converge (residual {np.max(np.abs(r)):.3e})")
    return _to_complex(x), float(np.max(np.abs(r)))


def _below_candidate(spec: SystemSpec) -> np.ndarray:
    gb1, gb2 = spec.pump_losses
    return np.array([0, 0, 0, spec.eps1 / gb1, spec.eps2 / gb2], dtype=complex)


def _require_symmetric_concurrent(spec: SystemSpec) -> tuple[float, float, float, float]:
    if spec.kind != Kind.CONCURRENT_CAVITY:
        raise ValueError("analytic above-threshold candidates exist for the "
                         "concurrent cavity only")
    ga = spec.signal_losses
    gb = spec.pump_losses
    if spec.chi1 != spec.chi2 or spec.eps1 != spec.eps2:
        raise ValueError("analytic candidates require symmetric pumping "
                         "(equal couplings and drives)")
    if len(set(ga)) != 1 or len(set(gb)) != 1:
        raise ValueError("analytic candidates require equal loss rates")
    eps = spec.eps1
    if abs(eps.imag) > 1e-12 * abs(eps):
        raise ValueError("analytic candidates require a real positive drive")
    return spec.chi1, ga[0], gb[0], eps.real


def reference_above_threshold_candidate(spec: SystemSpec) -> np.ndarray:
    """The above-threshold candidate with the pump clamped at gamma_a/(2 chi).

    Direct substitution into the mean-field equations leaves a nonzero
    residual; kept as a documented seed/regression value, never as a root.
    """
    chi, ga, gb, eps = _require_symmetric_concurrent(spec)
    eps_th = ga * gb / (2.0 * chi)
    if eps <= eps_th:
        raise ValueError("reference candidate needs eps > gamma_a gamma_b / (2 chi)")
    a2 = math.sqrt(2.0 * (eps - eps_th) / chi)
    a1 = math.sqrt((eps - eps_th) / chi)
    return np.array([a1, a2, a1, ga / (2.0 * chi), ga / (2.0 * chi)], dtype=complex)


def corrected_above_threshold_candidate(spec: SystemSpec) -> np.ndarray:
    """Above-threshold state that satisfies the mean-field equations exactly:
    beta = gamma_a/(sqrt(2) chi), alpha_2 = sqrt(2) alpha_1 and
    alpha_1 = alpha_3 = sqrt((eps - eps_c)/(sqrt(2) chi)) for eps > eps_c."""
    chi, ga, gb, eps = _require_symmetric_concurrent(spec)
    eps_c = ga * gb / (math.sqrt(2.0) * chi)
    if eps <= eps_c:
        raise ValueError("corrected candidate needs eps > gamma_a gamma_b / (sqrt(2) chi)")
    a1 = math.sqrt((eps - eps_c) / (math.sqrt(2.0) * chi))
    beta = ga / (math.sqrt(2.0) * chi)
    return np.array([a1, math.sqrt(2.0) * a1, a1, beta, beta], dtype=complex)


def _classify(fields: np.ndarray, residual: float) -> SteadyState:
    scale = max(1.0, float(np.max(np.abs(fields[3:]))))
    branch = (Branch.BELOW_THRESHOLD
              if float(np.max(np.abs(fields[:3]))) < 1e-6 * scale
              else Branch.ABOVE_THRESHOLD)
    a_ss = fields[:3].copy()
    if branch == Branch.BELOW_THRESHOLD:
        a_ss[:] = 0.0  # below-threshold signal amplitudes vanish exactly
    return SteadyState(a_ss=a_ss, b_ss=fields[3:], branch=branch, residual=residual)


def find_steady_state(spec: SystemSpec, branch_hint: Branch | str | None = None,
                      initial_guess=None) -> SteadyState:
    """Locate a steady state by damped Newton iteration.

    Seeds come from the analytic candidates (zero-signal state; for the
    concurrent cavity also the sqrt(2)-corrected above-threshold state, with
    the reference candidate as fallback seed).  With no ``branch_hint`` the
    dynamically stable root is returned; with a hint, the converged root of
    that branch regardless of stability.  ``initial_guess`` (complex
    5-vector) bypasses the candidate table.
    """
    _require_cavity(spec)
    if isinstance(branch_hint, str):
        branch_hint = Branch(branch_hint)
    tol_scale = max(1.0, spec.field_scale())

    if initial_guess is not None:
        fields, residual = _newton_root(spec, np.asarray(initial_guess, dtype=complex),
                                        tol_scale)
        return _classify(fields, residual)

    def above_seeds():
        seeds = []
        if spec.kind == Kind.CONCURRENT_CAVITY:
            for candidate in (corrected_above_threshold_candidate,
                              reference_above_threshold_candidate):
                try:
                    seeds.append(candidate(spec))
                except ValueError:
                    pass
        return seeds

    def solve_above():
        last_err = None
        for seed in above_seeds():
            try:
                fields, residual = _newton_root(spec, seed, tol_scale)
            except SteadyStateError as err:
                last_err = err
                continue
            state = _classify(fields, residual)
            if state.branch == Branch.ABOVE_THRESHOLD:
                return state
        msg = "no converged above-threshold root"
        if last_err is not None:
            msg += f" ({last_err})"
        raise SteadyStateError(msg)

    if branch_hint == Branch.BELOW_THRESHOLD:
        fields, residual = _newton_root(spec, _below_candidate(spec), tol_scale)
        return _classify(fields, residual)
    if branch_hint == Branch.ABOVE_THRESHOLD:
        return solve_above()

    # no hint: prefer whichever branch is dynamically stable
    below_fields, below_res = _newton_root(spec, _below_candidate(spec), tol_scale)
    below = _classify(below_fields, below_res)
    if linearize(spec, below).stable:
        return below
    try:
        above = solve_above()
    except SteadyStateError as err:
        raise SteadyStateError(
            f"zero-signal branch is unstable and {err}") from err
    if linearize(spec, above).stable:
        return above
    raise SteadyStateError("both candidate branches are dynamically unstable")


# -- linearization -------------------------------------------------------------------

def linearize(spec: SystemSpec, ss: SteadyState) -> LinearizedModel:
    """Drift matrix (Jacobian of the doubled drift), noise and diffusion at ``ss``.

    The drift is affine in each doubled variable, so unit-step central
    differences give the Jacobian exactly.  D = B B^T uses the plain
    transpose of the noise matrix evaluated at the steady state.
    """
    _require_cavity(spec)
    v0 = ss.doubled()
    A = np.empty((10, 10), dtype=complex)
    for k in range(10):
        vp = v0.copy()
        vm = v0.copy()
        vp[k] += 1.0
        vm[k] -= 1.0
        A[:, k] = (_doubled_drift(spec, vp) - _doubled_drift(spec, vm)) / 2.0
    B = _noise_matrix(spec, v0)
    D = B @ B.T
    try:
        eigenvalues = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as err:
        raise RuntimeError(f"eigenvalue computation failed: {err}")
    # Structurally marginal modes (e.g. the above-threshold phase mode of the
    # concurrent cavity) sit at Re = 0 up to rounding; only meaningfully
    # positive real parts count as unstable.
    tol = 1e-9 * max(1.0, float(np.max(np.abs(eigenvalues))))
    stable = bool(np.all(eigenvalues.real < tol))
    return LinearizedModel(A=A, B=B, D=D, eigenvalues=eigenvalues,
                           stable=stable, steady_state=ss)


def explicit_cascaded_drift_matrix(spec: SystemSpec, fields) -> np.ndarray:
    """Entry-by-entry assembly of the cascaded 10x10 drift matrix.

    Independent of the finite-difference Jacobian in :func:`linearize`; the
    two must agree exactly at any field point, which pins both transcriptions.
    ``fields`` is the complex 5-vector (alpha_1, alpha_2, alpha_3, beta_1,
    beta_2).  The pump-coupling entries of the alpha_3 rows sit in the
    beta_2 columns (the third-mode equation has no beta_1 dependence).
    """
    if spec.kind != Kind.CASCADED_CAVITY:
        raise ValueError("the explicit drift matrix is the cascaded cavity form")
    a1, a2, a3, b1, b2 = np.asarray(fields, dtype=complex)
    c1, c2 = spec.chi1, spec.chi2
    g1, g2, g3 = spec.signal_losses
    k1, k2 = spec.pump_losses
    cj = np.conj
    A1 = np.array([
        [-g1, 0, 0, c1 * b1, 0, 0],
        [0, -g1, c1 * cj(b1), 0, 0, 0],
        [0, c1 * b1, -g2, 0, -c2 * cj(b2), 0],
        [c1 * cj(b1), 0, 0, -g2, 0, -c2 * b2],
        [0, 0, c2 * b2, 0, -g3, 0],
        [0, 0, 0, c2 * cj(b2), 0, -g3],
        [-c1 * a2, 0, -c1 * a1, 0, 0, 0],
        [0, -c1 * cj(a2), 0, -c1 * cj(a1), 0, 0],
        [0, 0, -c2 * cj(a3), 0, 0, -c2 * a2],
        [0, 0, 0, -c2 * a3, -c2 * cj(a2), 0],
    ], dtype=complex)
    A2 = np.array([
        [c1 * cj(a2), 0, 0, 0],
        [0, c1 * a2, 0, 0],
        [c1 * cj(a1), 0, 0, -c2 * a3],
        [0, c1 * a1, -c2 * cj(a3), 0],
        [0, 0, c2 * a2, 0],
        [0, 0, 0, c2 * cj(a2)],
        [-k1, 0, 0, 0],
        [0, -k1, 0, 0],
        [0, 0, -k2, 0],
        [0, 0, 0, -k2],
    ], dtype=complex)
    return np.hstack([A1, A2])


# -- spectra -------------------------------------------------------------------------

def _spectral_moments(model: LinearizedModel, omegas: np.ndarray):
    """Normally ordered intracavity quadrature spectra S^x_jk(w), S^y_jk(w).

    Returns two (3, 3, n) real arrays (symmetrized over the mode pair) and the
    largest imaginary residue encountered, for the reality check.
    """
    A = np.asarray(model.A)
    D = np.asarray(model.D)
    eye = np.eye(10)
    sxx = np.empty((3, 3, omegas.size))
    syy = np.empty((3, 3, omegas.size))
    max_imag = 0.0
    for i, w in enumerate(omegas):
        try:
            left = np.linalg.solve(A + 1j * w * eye, D)
            S = np.linalg.solve(A - 1j * w * eye, left.T).T
        except np.linalg.LinAlgError as err:
            raise RuntimeError(f"singular spectral matrix at omega={w}: {err}")
        for j in range(3):
            for k in range(3):
                aj, cjx = 2 * j, 2 * j + 1
                ak, ck = 2 * k, 2 * k + 1
                x = S[aj, ak] + S[aj, ck] + S[cjx, ak] + S[cjx, ck]
                y = -(S[aj, ak] - S[aj, ck] - S[cjx, ak] + S[cjx, ck])
                sxx[j, k, i] = x.real
                syy[j, k, i] = y.real
                max_imag = max(max_imag, abs(x.imag), abs(y.imag))
    sxx = 0.5 * (sxx + sxx.transpose(1, 0, 2))
    syy = 0.5 * (syy + syy.transpose(1, 0, 2))
    return sxx, syy, max_imag


def _check_stable(model: LinearizedModel) -> None:
    if not model.stable:
        worst = model.eigenvalues[np.argmax(model.eigenvalues.real)]
        raise UnstableModelError(
            "linearized fluctuation analysis is invalid: drift eigenvalue "
            f"{worst:.6g} has non-negative real part "
            f"(eigenvalues: {np.array2string(model.eigenvalues, precision=4)})")


def spectrum(model: LinearizedModel, spec: SystemSpec, omegas) -> SpectrumSeries:
    """Output spectral criteria S_12, S_13, S_23 over the frequency grid.

    Requires a stable model.  ``marginal`` flags linearization validity when
    the slowest eigenvalue sits within 1e-3 of the imaginary axis.
    """
    _require_cavity(spec)
    _check_stable(model)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    sxx, syy, _ = _spectral_moments(model, omegas)
    g = np.asarray(spec.signal_losses)
    scale = 2.0 * np.sqrt(np.outer(g, g))

    ysum = np.zeros(omegas.size)
    for j in range(3):
        for k in range(3):
            ysum += scale[j, k] * syy[j, k]
    out = {}
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        xdiff = (scale[i, i] * sxx[i, i] + scale[j, j] * sxx[j, j]
                 - 2.0 * scale[i, j] * sxx[i, j])
        out[(i, j)] = 5.0 + xdiff + ysum
    return SpectrumSeries(omega=omegas, s12=out[(0, 1)], s13=out[(0, 2)],
                          s23=out[(1, 2)], marginal=model.marginal)


def output_quadrature_spectra(model: LinearizedModel, spec: SystemSpec, omegas):
    """Per-mode output quadrature spectra (V^out(X_j), V^out(Y_j)).

    Values below 1 mean squeezing of that output quadrature.  Returns two
    (3, n) arrays over the frequency grid.
    """
    _require_cavity(spec)
    _check_stable(model)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    sxx, syy, _ = _spectral_moments(model, omegas)
    g = np.asarray(spec.signal_losses)
    vx = np.empty((3, omegas.size))
    vy = np.empty((3, omegas.size))
    for j in range(3):
        vx[j] = 1.0 + 2.0 * g[j] * sxx[j, j]
        vy[j] = 1.0 + 2.0 * g[j] * syy[j, j]
    return vx, vy


def closed_form_spectra(gamma_a: float, gamma_b: float, chi: float, eps: float,
                        omega):
    """Below-threshold output spectra of the symmetric concurrent cavity.

    Returns (S12, S13) with S23 = S12 by symmetry; direct transcription of the
    closed-form rational functions.
    """
    omega = np.asarray(omega, dtype=float)
    ce = chi * eps
    num_core = (gamma_a ** 2 * gamma_b ** 2 - 3.0 * gamma_a * gamma_b * ce
                + 2.0 * ce ** 2 + gamma_b ** 2 * omega ** 2)
    den = (gamma_a ** 4 * gamma_b ** 4
           + (2.0 * ce ** 2 + gamma_b ** 2 * omega ** 2) ** 2
           + 2.0 * gamma_a ** 2 * gamma_b ** 2
           * (gamma_b ** 2 * omega ** 2 - 2.0 * ce ** 2))
    if np.any(den == 0.0):
        raise ZeroDivisionError("closed-form spectrum denominator vanished")
    s12 = 5.0 - 24.0 * gamma_a * gamma_b * ce * num_core / den
    s13 = 5.0 - 16.0 * gamma_a * gamma_b * ce * num_core / den
    return s12, s13


@dataclass(frozen=True)
class ThresholdReport:
    """Reference thresholds of the symmetric concurrent cavity.

    ``eps_th`` is the nominal oscillation threshold gamma_a gamma_b / (2 chi);
    ``eps_c`` = sqrt(2) eps_th is where the zero-signal branch actually loses
    stability; ``eps_crossing`` is the numerically located eigenvalue
    crossing (it coincides with eps_c, not eps_th).
    """

    eps_th: float
    eps_c: float
    eps_crossing: float


def thresholds(spec: SystemSpec) -> ThresholdReport:
    """Threshold pump amplitudes of the symmetric concurrent cavity."""
    chi, ga, gb, _eps = _require_symmetric_concurrent(spec)
    eps_th = ga * gb / (2.0 * chi)
    eps_c = ga * gb / (math.sqrt(2.0) * chi)

    def max_real(eps):
        probe = SystemSpec.concurrent_cavity(chi, eps, ga, gb)
        state = find_steady_state(probe, Branch.BELOW_THRESHOLD)
        return float(np.max(linearize(probe, state).eigenvalues.real))

    lo, hi = 0.5 * eps_th, 2.5 * eps_th
    flo, fhi = max_real(lo), max_real(hi)
    if flo >= 0 or fhi <= 0:
        raise SteadyStateError("eigenvalue crossing not bracketed; "
                               "unexpected stability structure")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if max_real(mid) < 0:
            lo = mid
        else:
            hi = mid
    return ThresholdReport(eps_th=eps_th, eps_c=eps_c,
                           eps_crossing=0.5 * (lo + hi))
