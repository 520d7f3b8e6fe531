"""Positive-P stochastic integration of the twin-nonlinearity models.

The doubled phase space carries ten independent complex amplitudes

    (alpha_1, alpha_1+, alpha_2, alpha_2+, alpha_3, alpha_3+,
     beta_1, beta_1+, beta_2, beta_2+)

where the "+" variables are *not* pathwise conjugates of their partners;
only ensemble means are related by conjugation, and only statistically.
Trajectory averages of monomials in these variables are normally ordered
operator moments.

Three Ito systems are integrated, one per supported model kind: the two
travelling-wave schemes (independent coordinate z, reported through the
scaled length xi = |beta_0| chi z) and the cascaded cavity (time, reported
through gamma t).  The concurrent cavity has no stochastic system here and
is handled by the linearized route in :mod:`twinchi2.cavity`.

Integration is explicit Euler--Maruyama with a fixed step and noise
coefficients evaluated at the step start.  Reproducibility contract:
identical (spec, grid, config) produce bit-identical moment tables no matter
how many workers are used.  This is achieved by

* fixed-size trajectory blocks, each drawing its noise from a counter-based
  Philox stream keyed on (master seed, block index), and
* merging per-block accumulators in block order with compensated summation.

Trajectories whose components exceed the divergence bound (or go non-finite)
are excluded from all later sample averages and counted; a run aborts if the
diverged fraction exceeds the configured limit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Kind, MomentTable, SystemSpec

__all__ = [
    "PhaseSpacePoint",
    "GridKind",
    "IntegrationGrid",
    "EnsembleConfig",
    "EnsembleSeries",
    "ChargeReport",
    "DivergenceAbort",
    "drift_and_noise",
    "step_em",
    "run_ensemble",
    "conserved_charges",
]

N_VARS = 10
N_NOISES = 8
DEFAULT_SCALED_STEP = 1e-3


class DivergenceAbort(RuntimeError):
    """Raised when too many trajectories leave the divergence bound."""

    def __init__(self, n_diverged: int, n_traj: int, limit: float):
        self.n_diverged = n_diverged
        self.n_traj = n_traj
        self.limit = limit
        super().__init__(
            f"{n_diverged}/{n_traj} trajectories diverged "
            f"(fraction {n_diverged / n_traj:.3e} > limit {limit:.3e}); "
            "moments would be biased, aborting")


@dataclass(frozen=True)
class PhaseSpacePoint:
    """One point of the doubled phase space (ten complex amplitudes)."""

    values: np.ndarray  # (10,) complex

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex).copy()
        if arr.shape != (N_VARS,):
            raise ValueError("a phase-space point holds exactly 10 amplitudes")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_fields(cls, a=(0, 0, 0), ap=None, b=(0, 0), bp=None) -> "PhaseSpacePoint":
        """Build a point; omitted "+" fields default to complex conjugates."""
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        ap = np.conj(a) if ap is None else np.asarray(ap, dtype=complex)
        bp = np.conj(b) if bp is None else np.asarray(bp, dtype=complex)
        vec = np.empty(N_VARS, dtype=complex)
        vec[0:6:2] = a
        vec[1:6:2] = ap
        vec[6:10:2] = b
        vec[7:10:2] = bp
        return cls(vec)

    def a(self, j: int) -> complex:
        return complex(self.values[2 * (j - 1)])

    def ap(self, j: int) -> complex:
        return complex(self.values[2 * (j - 1) + 1])

    def b(self, j: int) -> complex:
        return complex(self.values[6 + 2 * (j - 1)])

    def bp(self, j: int) -> complex:
        return complex(self.values[6 + 2 * (j - 1) + 1])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


class GridKind:
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class IntegrationGrid:
    """Fixed-step grid; abscissae are reported in scaled units.

    ``scale`` converts the raw coordinate to the reported one: the scaled
    interaction length xi = |beta_1(0)| chi_1 z for spatial grids, gamma_1 t
    for temporal grids.
    """

    kind: str
    step: float
    n_steps: int
    scale: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")

    @classmethod
    def spatial(cls, spec: SystemSpec, xi_max: float, n_steps: int | None = None,
                scaled_step: float = DEFAULT_SCALED_STEP) -> "IntegrationGrid":
        """Grid over the scaled length xi = |beta_1(0)| chi_1 z."""
        if not spec.kind.travelling_wave:
            raise ValueError("spatial grids apply to travelling-wave kinds")
        scale = abs(spec.pump1_init) * spec.chi1
        if scale <= 0:
            raise ValueError("spatial scaling needs chi1 and pump1_init nonzero")
        if n_steps is None:
            n_steps = max(1, round(xi_max / scaled_step))
        return cls(GridKind.SPATIAL, xi_max / scale / n_steps, n_steps, scale)

    @classmethod
    def temporal(cls, spec: SystemSpec, t_max_scaled: float, n_steps: int | None = None,
                 scaled_step: float = DEFAULT_SCALED_STEP) -> "IntegrationGrid":
        """Grid over gamma_1 t for cavity kinds."""
        if not spec.kind.cavity:
            raise ValueError("temporal grids apply to cavity kinds")
        scale = spec.loss_a1
        if n_steps is None:
            n_steps = max(1, round(t_max_scaled / scaled_step))
        return cls(GridKind.TEMPORAL, t_max_scaled / scale / n_steps, n_steps, scale)

    def abscissae(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * (self.step * self.scale)

    def step_index(self, abscissa: float) -> int:
        """Grid step index of a scaled abscissa; must land on the grid."""
        unit = self.step * self.scale
        idx = round(abscissa / unit)
        if idx < 0 or idx > self.n_steps:
            raise ValueError(f"abscissa {abscissa} outside grid range")
        if abs(idx * unit - abscissa) > 1e-9 * max(1.0, abs(abscissa)):
            raise ValueError(f"abscissa {abscissa} does not lie on the grid "
                             f"(unit {unit})")
        return idx


@dataclass(frozen=True)
class EnsembleConfig:
    """Trajectory count, seeding and divergence policy for one ensemble run.

    ``traj_block`` fixes the internal block decomposition; it is part of the
    reproducibility contract (results depend on it, never on worker count).
    ``divergence_bound`` of ``None`` selects 1e8 * max(1, |beta_0|).
    """

    n_traj: int
    seed: int = 12345
    divergence_bound: float | None = None
    max_divergent_fraction: float = 1e-3
    traj_block: int = 4096
    workers: int = 1

    def __post_init__(self):
        if self.n_traj < 2:
            raise ValueError("n_traj must be >= 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit non-negative integer")
        if self.divergence_bound is not None and self.divergence_bound <= 0:
            raise ValueError("divergence_bound must be > 0")
        if self.traj_block < 1:
            raise ValueError("traj_block must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def bound_for(self, spec: SystemSpec) -> float:
        if self.divergence_bound is not None:
            return self.divergence_bound
        return 1e8 * max(1.0, spec.field_scale())


# -- drift and noise (reference transcription) ------------------------------------

def _sqrt_half(chi, field):
    # principal branch of sqrt(chi * field / 2) for complex field values
    return np.sqrt(0.5 * chi * np.asarray(field, dtype=complex))


def drift_and_noise(spec: SystemSpec, point: PhaseSpacePoint):
    """Deterministic rates and the 10x8 noise coefficient table at a point.

    The columns map the eight real Gaussian noises into each variable's
    increment, transcribed from the Ito systems of the three supported kinds.
    Square roots of complex arguments take the principal branch.
    """
    v = point.values
    a1, a1p, a2, a2p, a3, a3p, b1, b1p, b2, b2p = v
    c1, c2 = spec.chi1, spec.chi2
    drift = np.zeros(N_VARS, dtype=complex)
    B = np.zeros((N_VARS, N_NOISES), dtype=complex)

    if spec.kind == Kind.CASCADED_TW or spec.kind == Kind.CASCADED_CAVITY:
        drift[0] = c1 * a2p * b1
        drift[1] = c1 * a2 * b1p
        drift[2] = c1 * a1p * b1 - c2 * a3 * b2p
        drift[3] = c1 * a1 * b1p - c2 * a3p * b2
        drift[4] = c2 * a2 * b2
        drift[5] = c2 * a2p * b2p
        drift[6] = -c1 * a1 * a2
        drift[7] = -c1 * a1p * a2p
        drift[8] = -c2 * a2 * a3p
        drift[9] = -c2 * a2p * a3
        if spec.kind == Kind.CASCADED_CAVITY:
            g1, g2, g3 = spec.signal_losses
            k1, k2 = spec.pump_losses
            drift[0] -= g1 * a1
            drift[1] -= g1 * a1p
            drift[2] -= g2 * a2
            drift[3] -= g2 * a2p
            drift[4] -= g3 * a3
            drift[5] -= g3 * a3p
            drift[6] += spec.eps1 - k1 * b1
            drift[7] += np.conj(spec.eps1) - k1 * b1p
            drift[8] += spec.eps2 - k2 * b2
            drift[9] += np.conj(spec.eps2) - k2 * b2p

        s1 = _sqrt_half(c1, b1)
        s1p = _sqrt_half(c1, b1p)
        s3 = _sqrt_half(c2, a3)
        s3p = _sqrt_half(c2, a3p)
        B[0, 0] = s1
        B[0, 2] = 1j * s1
        B[1, 1] = s1p
        B[1, 3] = 1j * s1p
        B[2, 0] = s1
        B[2, 2] = -1j * s1
        B[2, 6] = -s3
        B[2, 4] = 1j * s3
        B[3, 1] = s1p
        B[3, 3] = -1j * s1p
        B[3, 7] = -s3p
        B[3, 5] = 1j * s3p
        B[8, 6] = s3
        B[8, 4] = 1j * s3
        B[9, 7] = s3p
        B[9, 5] = 1j * s3p

    elif spec.kind == Kind.CONCURRENT_TW:
        drift[0] = c1 * a2p * b1
        drift[1] = c1 * a2 * b1p
        drift[2] = c1 * a1p * b1 + c2 * a3p * b2
        drift[3] = c1 * a1 * b1p + c2 * a3 * b2p
        drift[4] = c2 * a2p * b2
        drift[5] = c2 * a2 * b2p
        drift[6] = -c1 * a1 * a2
        drift[7] = -c1 * a1p * a2p
        drift[8] = -c2 * a2 * a3
        drift[9] = -c2 * a2p * a3p

        s1 = _sqrt_half(c1, b1)
        s1p = _sqrt_half(c1, b1p)
        s2 = _sqrt_half(c2, b2)
        s2p = _sqrt_half(c2, b2p)
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

    else:
        raise ValueError(f"{spec.kind.value} has no stochastic system; "
                         "use the linearized cavity route")

    return drift, B


# -- fused block steppers ----------------------------------------------------------
#
# These advance a (10, M) block of trajectories in place.  Increments are
# assembled before any state update so that noise coefficients are evaluated
# at the step start (Ito).

def _step_cascaded_block(spec: SystemSpec, S: np.ndarray, eta: np.ndarray,
                         dz: float, sq: float) -> None:
    a1, a1p, a2, a2p, a3, a3p, b1, b1p, b2, b2p = S
    e1, e2, e3, e4, e5, e6, e7, e8 = eta
    c1, c2 = spec.chi1, spec.chi2
    s1 = np.sqrt(0.5 * c1 * b1)
    s1p = np.sqrt(0.5 * c1 * b1p)
    s3 = np.sqrt(0.5 * c2 * a3)
    s3p = np.sqrt(0.5 * c2 * a3p)

    d = np.empty_like(S)
    d[0] = (c1 * a2p * b1) * dz + s1 * (e1 + 1j * e3) * sq
    d[1] = (c1 * a2 * b1p) * dz + s1p * (e2 + 1j * e4) * sq
    d[2] = (c1 * a1p * b1 - c2 * a3 * b2p) * dz \
        + (s1 * (e1 - 1j * e3) - s3 * (e7 - 1j * e5)) * sq
    d[3] = (c1 * a1 * b1p - c2 * a3p * b2) * dz \
        + (s1p * (e2 - 1j * e4) - s3p * (e8 - 1j * e6)) * sq
    d[4] = (c2 * a2 * b2) * dz
    d[5] = (c2 * a2p * b2p) * dz
    d[6] = (-c1 * a1 * a2) * dz
    d[7] = (-c1 * a1p * a2p) * dz
    d[8] = (-c2 * a2 * a3p) * dz + s3 * (e7 + 1j * e5) * sq
    d[9] = (-c2 * a2p * a3) * dz + s3p * (e8 + 1j * e6) * sq

    if spec.kind == Kind.CASCADED_CAVITY:
        g1, g2, g3 = spec.signal_losses
        k1, k2 = spec.pump_losses
        d[0] += (-g1 * a1) * dz
        d[1] += (-g1 * a1p) * dz
        d[2] += (-g2 * a2) * dz
        d[3] += (-g2 * a2p) * dz
        d[4] += (-g3 * a3) * dz
        d[5] += (-g3 * a3p) * dz
        d[6] += (spec.eps1 - k1 * b1) * dz
        d[7] += (np.conj(spec.eps1) - k1 * b1p) * dz
        d[8] += (spec.eps2 - k2 * b2) * dz
        d[9] += (np.conj(spec.eps2) - k2 * b2p) * dz

    S += d


def _step_concurrent_block(spec: SystemSpec, S: np.ndarray, eta: np.ndarray,
                           dz: float, sq: float) -> None:
    a1, a1p, a2, a2p, a3, a3p, b1, b1p, b2, b2p = S
    e1, e2, e3, e4, e5, e6, e7, e8 = eta
    c1, c2 = spec.chi1, spec.chi2
    s1 = np.sqrt(0.5 * c1 * b1)
    s1p = np.sqrt(0.5 * c1 * b1p)
    s2 = np.sqrt(0.5 * c2 * b2)
    s2p = np.sqrt(0.5 * c2 * b2p)

    d = np.empty_like(S)
    d[0] = (c1 * a2p * b1) * dz + s1 * (e1 + 1j * e6) * sq
    d[1] = (c1 * a2 * b1p) * dz + s1p * (e2 - 1j * e5) * sq
    d[2] = (c1 * a1p * b1 + c2 * a3p * b2) * dz \
        + (s1 * (e1 - 1j * e6) + s2 * (e3 + 1j * e7)) * sq
    d[3] = (c1 * a1 * b1p + c2 * a3 * b2p) * dz \
        + (s1p * (e2 + 1j * e5) + s2p * (e4 + 1j * e8)) * sq
    d[4] = (c2 * a2p * b2) * dz + s2 * (e3 - 1j * e7) * sq
    d[5] = (c2 * a2 * b2p) * dz + s2p * (e4 - 1j * e8) * sq
    d[6] = (-c1 * a1 * a2) * dz
    d[7] = (-c1 * a1p * a2p) * dz
    d[8] = (-c2 * a2 * a3) * dz
    d[9] = (-c2 * a2p * a3p) * dz

    S += d


_STEPPERS = {
    Kind.CASCADED_TW: _step_cascaded_block,
    Kind.CASCADED_CAVITY: _step_cascaded_block,
    Kind.CONCURRENT_TW: _step_concurrent_block,
}


def initial_point(spec: SystemSpec) -> PhaseSpacePoint:
    """Default initial condition: vacuum signals; coherent pumps for
    travelling-wave kinds, vacuum pumps for cavity kinds."""
    if spec.kind.travelling_wave:
        return PhaseSpacePoint.from_fields(b=(spec.pump1_init, spec.pump2_init))
    return PhaseSpacePoint.from_fields()


def step_em(spec: SystemSpec, point: PhaseSpacePoint, grid: IntegrationGrid,
            deviates) -> PhaseSpacePoint:
    """One Euler--Maruyama step: point + drift*step + noise_map . (deviates*sqrt(step)).

    Uses the same arithmetic as the block integrator, so single-point stepping
    is bit-identical to an ensemble member's update.
    """
    deviates = np.asarray(deviates, dtype=float)
    if deviates.shape != (N_NOISES,):
        raise ValueError("step_em needs exactly 8 real deviates")
    if spec.kind not in _STEPPERS:
        raise ValueError(f"{spec.kind.value} has no stochastic system")
    S = point.values.reshape(N_VARS, 1).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        _STEPPERS[spec.kind](spec, S, deviates.reshape(N_NOISES, 1),
                             grid.step, math.sqrt(grid.step))
    return PhaseSpacePoint(S[:, 0])


# -- monomial accumulation ---------------------------------------------------------

N_MONOMIALS = 36
XX_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _monomials(S: np.ndarray) -> np.ndarray:
    """The 36 complex monomials tracked per trajectory; columns follow S."""
    out = np.empty((N_MONOMIALS, S.shape[1]), dtype=complex)
    a = S[0:6:2]
    ap = S[1:6:2]
    b = S[6:10:2]
    bp = S[7:10:2]
    x = a + ap
    y = -1j * (a - ap)
    out[0:3] = a
    out[3:6] = ap
    out[6:8] = b
    out[8:10] = bp
    for m, (j, k) in enumerate(XX_PAIRS):
        out[10 + m] = x[j] * x[k]
        out[16 + m] = y[j] * y[k]
    out[22:25] = ap * a
    out[25:27] = bp * b
    out[27:30] = x
    out[30:33] = y
    out[33:36] = ap - np.conj(a)
    return out


def _integrate_block(spec: SystemSpec, grid: IntegrationGrid, cfg: EnsembleConfig,
                     sample_steps: tuple[int, ...], block_index: int,
                     block_size: int, init_values: np.ndarray):
    """Integrate one trajectory block; returns per-sample partial sums."""
    rng = np.random.Generator(np.random.Philox(
        key=np.array([cfg.seed, block_index], dtype=np.uint64)))
    step_fn = _STEPPERS[spec.kind]
    bound = cfg.bound_for(spec)
    n_samp = len(sample_steps)

    S = np.repeat(init_values.reshape(N_VARS, 1), block_size, axis=1)
    alive = np.ones(block_size, dtype=bool)

    sums = np.zeros((n_samp, N_MONOMIALS), dtype=complex)
    re2 = np.zeros((n_samp, N_MONOMIALS))
    im2 = np.zeros((n_samp, N_MONOMIALS))
    counts = np.zeros(n_samp, dtype=np.int64)

    dz = grid.step
    sq = math.sqrt(dz)
    sample_set = {s: i for i, s in enumerate(sample_steps)}

    def take_sample(i_samp):
        with np.errstate(invalid="ignore"):
            ok = np.isfinite(S).all(axis=0) & (np.abs(S).max(axis=0) <= bound)
        alive[:] = alive & ok
        S[:, ~alive] = 0.0
        mono = _monomials(S[:, alive])
        sums[i_samp] = mono.sum(axis=1)
        re2[i_samp] = (mono.real ** 2).sum(axis=1)
        im2[i_samp] = (mono.imag ** 2).sum(axis=1)
        counts[i_samp] = int(alive.sum())

    if 0 in sample_set:
        take_sample(sample_set[0])
    last = max(sample_steps)
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, last + 1):
            eta = rng.standard_normal((N_NOISES, block_size))
            step_fn(spec, S, eta, dz, sq)
            if step in sample_set:
                take_sample(sample_set[step])

    n_diverged = int(block_size - alive.sum())
    return sums, re2, im2, counts, n_diverged


def _kahan_add(total: np.ndarray, comp: np.ndarray, value: np.ndarray) -> None:
    y = value - comp
    t = total + y
    comp[...] = (t - total) - y
    total[...] = t


@dataclass(frozen=True)
class EnsembleSeries:
    """Moment tables at the requested sample abscissae, plus run diagnostics."""

    abscissae: np.ndarray
    tables: tuple[MomentTable, ...]
    n_requested: int
    n_diverged: int

    def __post_init__(self):
        arr = np.asarray(self.abscissae, dtype=float).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "abscissae", arr)
        object.__setattr__(self, "tables", tuple(self.tables))


def _table_from_sums(sums, re2, im2, n: int) -> MomentTable:
    if n < 2:
        raise ValueError("fewer than 2 live trajectories at a sample point; "
                         "raise n_traj or loosen the divergence bound")
    mean = sums / n
    var_re = np.maximum(re2 / n - mean.real ** 2, 0.0)
    var_im = np.maximum(im2 / n - mean.imag ** 2, 0.0)
    se_re = np.sqrt(var_re / (n - 1))
    se_im = np.sqrt(var_im / (n - 1))

    sxx = np.zeros((3, 3))
    syy = np.zeros((3, 3))
    se_sxx = np.zeros((3, 3))
    se_syy = np.zeros((3, 3))
    for m, (j, k) in enumerate(XX_PAIRS):
        sxx[j, k] = sxx[k, j] = mean[10 + m].real
        syy[j, k] = syy[k, j] = mean[16 + m].real
        se_sxx[j, k] = se_sxx[k, j] = se_re[10 + m]
        se_syy[j, k] = se_syy[k, j] = se_re[16 + m]

    # normally ordered variances are bounded below by -1; a deeper dip than
    # statistics allows means the sampling is corrupt
    for j in range(3):
        mx2 = mean[27 + j].real ** 2
        my2 = mean[30 + j].real ** 2
        if sxx[j, j] - mx2 < -1.0 - 3.0 * se_sxx[j, j] \
                or syy[j, j] - my2 < -1.0 - 3.0 * se_syy[j, j]:
            raise RuntimeError(
                f"sampling failure: normally ordered variance of mode {j + 1} "
                "violates the physical bound beyond 3 standard errors")

    max_imag = float(np.max(np.abs(mean[10:33].imag)))
    return MomentTable(
        n_traj=n, exact=False,
        mean_x=mean[27:30].real, mean_y=mean[30:33].real,
        second_xx=sxx, second_yy=syy,
        intensity=mean[22:25].real,
        se_mean_x=se_re[27:30], se_mean_y=se_re[30:33],
        se_second_xx=se_sxx, se_second_yy=se_syy,
        se_intensity=se_re[22:25],
        max_imag=max_imag,
        pump_mean=mean[6:8],
        se_pump_mean=np.sqrt(se_re[6:8] ** 2 + se_im[6:8] ** 2),
        pump_intensity=mean[25:27].real,
        se_pump_intensity=se_re[25:27],
        mean_a=mean[0:3], mean_ap=mean[3:6],
        herm_resid=mean[33:36],
        se_herm=np.sqrt(se_re[33:36] ** 2 + se_im[33:36] ** 2),
    )


def run_ensemble(spec: SystemSpec, grid: IntegrationGrid, cfg: EnsembleConfig,
                 sample_points, initial: PhaseSpacePoint | None = None) -> EnsembleSeries:
    """Integrate an ensemble and accumulate moment tables at sample points.

    ``sample_points`` are scaled abscissae that must lie on the grid.  The
    result is independent of ``cfg.workers``; see the module docstring for
    the reproducibility contract.  Aborts with :class:`DivergenceAbort` when
    the diverged fraction exceeds ``cfg.max_divergent_fraction``; partial
    results are never returned.
    """
    if spec.kind not in _STEPPERS:
        raise ValueError(f"{spec.kind.value} has no stochastic system")
    sample_points = np.asarray(sample_points, dtype=float)
    if sample_points.ndim != 1 or sample_points.size == 0:
        raise ValueError("sample_points must be a non-empty 1-d sequence")
    steps = tuple(grid.step_index(s) for s in sample_points)
    if len(set(steps)) != len(steps):
        raise ValueError("sample_points contain duplicates")

    init = initial if initial is not None else initial_point(spec)
    init_values = np.asarray(init.values, dtype=complex)

    n_blocks = (cfg.n_traj + cfg.traj_block - 1) // cfg.traj_block
    sizes = [min(cfg.traj_block, cfg.n_traj - i * cfg.traj_block)
             for i in range(n_blocks)]

    results: dict[int, tuple] = {}
    if cfg.workers == 1 or n_blocks == 1:
        for idx, size in enumerate(sizes):
            results[idx] = _integrate_block(spec, grid, cfg, steps, idx, size,
                                            init_values)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {idx: pool.submit(_integrate_block, spec, grid, cfg,
                                        steps, idx, size, init_values)
                       for idx, size in enumerate(sizes)}
            for idx, fut in futures.items():
                results[idx] = fut.result()

    n_samp = len(steps)
    sums = np.zeros((n_samp, N_MONOMIALS), dtype=complex)
    re2 = np.zeros((n_samp, N_MONOMIALS))
    im2 = np.zeros((n_samp, N_MONOMIALS))
    comp_s = np.zeros_like(sums)
    comp_r = np.zeros_like(re2)
    comp_i = np.zeros_like(im2)
    counts = np.zeros(n_samp, dtype=np.int64)
    n_diverged = 0
    for idx in range(n_blocks):  # fixed merge order for bitwise determinism
        b_sums, b_re2, b_im2, b_counts, b_div = results[idx]
        _kahan_add(sums, comp_s, b_sums)
        _kahan_add(re2, comp_r, b_re2)
        _kahan_add(im2, comp_i, b_im2)
        counts += b_counts
        n_diverged += b_div

    if n_diverged / cfg.n_traj > cfg.max_divergent_fraction:
        raise DivergenceAbort(n_diverged, cfg.n_traj, cfg.max_divergent_fraction)

    tables = tuple(_table_from_sums(sums[i], re2[i], im2[i], int(counts[i]))
                   for i in range(n_samp))
    return EnsembleSeries(abscissae=sample_points, tables=tables,
                          n_requested=cfg.n_traj, n_diverged=n_diverged)


# -- conserved photon-flow combinations --------------------------------------------

_CHARGES = {
    Kind.CASCADED_TW: (
        ("n_a1 + n_b1", ((22, 1.0), (25, 1.0))),
        ("n_a3 + n_b2", ((24, 1.0), (26, 1.0))),
        ("n_a2 + n_b1 + n_a3", ((23, 1.0), (25, 1.0), (24, 1.0))),
    ),
    Kind.CONCURRENT_TW: (
        ("n_a1 + n_b1", ((22, 1.0), (25, 1.0))),
        ("n_a3 + n_b2", ((24, 1.0), (26, 1.0))),
        ("n_a2 + n_b1 + n_b2", ((23, 1.0), (25, 1.0), (26, 1.0))),
    ),
}


@dataclass(frozen=True)
class ChargeReport:
    """Residual series of the ensemble-mean invariants of one scheme."""

    names: tuple[str, ...]
    values: np.ndarray      # (3, n_samples)
    se: np.ndarray          # (3, n_samples)

    @property
    def residuals(self) -> np.ndarray:
        return self.values - self.values[:, :1]

    def max_sigma(self) -> float:
        """Largest |residual| in units of its combined standard error."""
        resid = self.residuals[:, 1:]
        comb = np.sqrt(self.se[:, 1:] ** 2 + self.se[:, :1] ** 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            sig = np.abs(resid) / comb
        sig[np.abs(resid) == 0.0] = 0.0
        return float(np.max(sig)) if sig.size else 0.0


def _intensity_entry(table: MomentTable, idx: int) -> tuple[float, float]:
    if idx < 25:
        return table.intensity[idx - 22], table.se_intensity[idx - 22]
    if table.pump_intensity is None:
        raise ValueError("charge checks need pump intensities "
                         "(stochastic moment tables)")
    return table.pump_intensity[idx - 25], table.se_pump_intensity[idx - 25]


def conserved_charges(spec: SystemSpec, series: EnsembleSeries) -> ChargeReport:
    """Evaluate the three photon-flow invariants along a travelling-wave run.

    Cascaded scheme: n_a1 + n_b1, n_a3 + n_b2 and n_a2 + n_b1 + n_a3 are
    constants of the motion; the concurrent scheme conserves n_a1 + n_b1,
    n_a3 + n_b2 and n_a2 + n_b1 + n_b2.  Residuals relative to the first
    sample are reported with combined errors; the caller decides tolerance.
    """
    if spec.kind not in _CHARGES:
        raise ValueError("conserved charges are defined for travelling-wave kinds")
    defs = _CHARGES[spec.kind]
    n_s = len(series.tables)
    values = np.zeros((len(defs), n_s))
    se = np.zeros((len(defs), n_s))
    for c, (_name, terms) in enumerate(defs):
        for s, table in enumerate(series.tables):
            tot, err2 = 0.0, 0.0
            for idx, w in terms:
                val, e = _intensity_entry(table, idx)
                tot += w * val
                err2 += (w * e) ** 2
            values[c, s] = tot
            se[c, s] = math.sqrt(err2)
    return ChargeReport(names=tuple(d[0] for d in defs), values=values, se=se)
