"""Physical system definitions, quadrature moments and tripartite criteria.

Conventions used throughout the package:

* Quadratures are X = a + a† and Y = -i(a - a†), so the vacuum state has
  V(X) = V(Y) = 1 and the uncertainty product is V(X)V(Y) >= 1.
* Moment tables store *normally ordered* second moments, which is what
  phase-space trajectory averages deliver directly.  The vacuum unit is
  restored by ``variance_x``/``variance_y`` (the "+1"), never stored.
* The tripartite criteria are

      V_ij = V(X_i - X_j) + V(Y_1 + Y_2 + Y_3)

  for the three mode pairs.  Violation (value < 4) of any two of the three
  certifies genuine tripartite entanglement.

Mode indices are 1-based (modes 1..3 are the signal fields, pumps 1..2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Kind",
    "SystemSpec",
    "MomentTable",
    "CriteriaReport",
    "variance_x",
    "variance_y",
    "covariance_x",
    "covariance_y",
    "vlf_criteria",
    "criteria_from_values",
]

VLF_BOUND = 4.0

_PAIRS = ((1, 2), (1, 3), (2, 3))


class Kind(enum.Enum):
    """The four physical models handled by the package."""

    CASCADED_TW = "CascadedTW"
    CONCURRENT_TW = "ConcurrentTW"
    CASCADED_CAVITY = "CascadedCavity"
    CONCURRENT_CAVITY = "ConcurrentCavity"

    @property
    def travelling_wave(self) -> bool:
        return self in (Kind.CASCADED_TW, Kind.CONCURRENT_TW)

    @property
    def cavity(self) -> bool:
        return not self.travelling_wave

    @property
    def cascaded(self) -> bool:
        return self in (Kind.CASCADED_TW, Kind.CASCADED_CAVITY)


@dataclass(frozen=True)
class SystemSpec:
    """Couplings, pumps and losses for one of the four models.

    Travelling-wave kinds carry initial pump amplitudes ``pump1_init``,
    ``pump2_init`` and no losses or drives; cavity kinds carry classical
    drives ``eps1``, ``eps2``, signal losses ``loss_a1..a3`` and pump losses
    ``loss_b1``, ``loss_b2``.  Construction rejects mixtures.

    Couplings may be zero (free fields), which is useful as a null test for
    the stochastic integrator.
    """

    kind: Kind
    chi1: float
    chi2: float
    pump1_init: complex | None = None
    pump2_init: complex | None = None
    eps1: complex | None = None
    eps2: complex | None = None
    loss_a1: float | None = None
    loss_a2: float | None = None
    loss_a3: float | None = None
    loss_b1: float | None = None
    loss_b2: float | None = None

    def __post_init__(self):
        if self.chi1 < 0 or self.chi2 < 0:
            raise ValueError("nonlinear couplings must be >= 0")
        tw_fields = (self.pump1_init, self.pump2_init)
        cav_fields = (self.eps1, self.eps2, self.loss_a1, self.loss_a2,
                      self.loss_a3, self.loss_b1, self.loss_b2)
        if self.kind.travelling_wave:
            if any(v is None for v in tw_fields):
                raise ValueError(f"{self.kind.value} requires pump1_init and pump2_init")
            if any(v is not None for v in cav_fields):
                raise ValueError(f"{self.kind.value} carries no drive or loss fields")
        else:
            if any(v is None for v in cav_fields):
                raise ValueError(f"{self.kind.value} requires eps1, eps2 and all loss rates")
            if any(v is not None for v in tw_fields):
                raise ValueError(f"{self.kind.value} carries no initial pump amplitudes")
            for rate in (self.loss_a1, self.loss_a2, self.loss_a3,
                         self.loss_b1, self.loss_b2):
                if rate <= 0:
                    raise ValueError("cavity loss rates must be > 0")

    # -- convenience constructors -------------------------------------------------

    @classmethod
    def cascaded_tw(cls, chi1, chi2, pump1_init, pump2_init) -> "SystemSpec":
        return cls(Kind.CASCADED_TW, chi1, chi2,
                   pump1_init=complex(pump1_init), pump2_init=complex(pump2_init))

    @classmethod
    def concurrent_tw(cls, chi1, chi2, pump1_init, pump2_init) -> "SystemSpec":
        return cls(Kind.CONCURRENT_TW, chi1, chi2,
                   pump1_init=complex(pump1_init), pump2_init=complex(pump2_init))

    @classmethod
    def cascaded_cavity(cls, chi1, chi2, eps1, eps2, loss_a, loss_b) -> "SystemSpec":
        """Build a cascaded cavity spec; ``loss_a``/``loss_b`` may be scalars."""
        ga = _triple(loss_a)
        gb = _pair(loss_b)
        return cls(Kind.CASCADED_CAVITY, chi1, chi2,
                   eps1=complex(eps1), eps2=complex(eps2),
                   loss_a1=ga[0], loss_a2=ga[1], loss_a3=ga[2],
                   loss_b1=gb[0], loss_b2=gb[1])

    @classmethod
    def concurrent_cavity(cls, chi, eps, gamma_a, gamma_b, chi2=None, eps2=None) -> "SystemSpec":
        """Concurrent cavity with equal signal losses gamma_a and pump losses gamma_b."""
        chi2 = chi if chi2 is None else chi2
        eps2 = eps if eps2 is None else eps2
        return cls(Kind.CONCURRENT_CAVITY, chi, chi2,
                   eps1=complex(eps), eps2=complex(eps2),
                   loss_a1=gamma_a, loss_a2=gamma_a, loss_a3=gamma_a,
                   loss_b1=gamma_b, loss_b2=gamma_b)

    @property
    def signal_losses(self) -> tuple[float, float, float]:
        if not self.kind.cavity:
            raise ValueError("travelling-wave kinds carry no loss rates")
        return (self.loss_a1, self.loss_a2, self.loss_a3)

    @property
    def pump_losses(self) -> tuple[float, float]:
        if not self.kind.cavity:
            raise ValueError("travelling-wave kinds carry no loss rates")
        return (self.loss_b1, self.loss_b2)

    def field_scale(self) -> float:
        """Characteristic pump magnitude, used for divergence bounds."""
        if self.kind.travelling_wave:
            return max(abs(self.pump1_init), abs(self.pump2_init))
        return max(abs(self.eps1) / self.loss_b1, abs(self.eps2) / self.loss_b2)


def _triple(v):
    try:
        a, b, c = v
        return (float(a), float(b), float(c))
    except TypeError:
        return (float(v),) * 3


def _pair(v):
    try:
        a, b = v
        return (float(a), float(b))
    except TypeError:
        return (float(v),) * 2


def _frozen(arr, dtype=float):
    out = np.asarray(arr, dtype=dtype).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MomentTable:
    """Ensemble (or exact) moments of the three signal modes.

    ``second_xx[j, k]`` holds the normally ordered mean of x_j x_k with
    x_j = alpha_j + alpha_j+, and likewise ``second_yy`` for
    y_j = -i(alpha_j - alpha_j+).  ``exact`` tables (analytic or spectral
    routes) carry zero standard errors and ``n_traj = 0``.

    Stochastic tables additionally carry complex pump means and intensities,
    plus the hermiticity residuals <alpha_j+> - conj(<alpha_j>), all of which
    vanish identically for exact tables and are ``None`` there.
    """

    n_traj: int
    exact: bool
    mean_x: np.ndarray          # (3,)
    mean_y: np.ndarray          # (3,)
    second_xx: np.ndarray       # (3, 3) symmetric
    second_yy: np.ndarray       # (3, 3) symmetric
    intensity: np.ndarray       # (3,)
    se_mean_x: np.ndarray
    se_mean_y: np.ndarray
    se_second_xx: np.ndarray
    se_second_yy: np.ndarray
    se_intensity: np.ndarray
    max_imag: float = 0.0
    pump_mean: np.ndarray | None = None        # (2,) complex
    se_pump_mean: np.ndarray | None = None     # (2,)
    pump_intensity: np.ndarray | None = None   # (2,)
    se_pump_intensity: np.ndarray | None = None
    mean_a: np.ndarray | None = None           # (3,) complex
    mean_ap: np.ndarray | None = None          # (3,) complex
    herm_resid: np.ndarray | None = None       # (3,) complex
    se_herm: np.ndarray | None = None          # (3,)

    def __post_init__(self):
        for name in ("mean_x", "mean_y", "intensity", "se_mean_x", "se_mean_y",
                     "se_intensity"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("second_xx", "second_yy", "se_second_xx", "se_second_yy"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (3, 3):
                raise ValueError(f"{name} must be 3x3")
            object.__setattr__(self, name, arr)
        for name, dtype in (("pump_mean", complex), ("se_pump_mean", float),
                            ("pump_intensity", float), ("se_pump_intensity", float),
                            ("mean_a", complex), ("mean_ap", complex),
                            ("herm_resid", complex), ("se_herm", float)):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen(val, dtype))
        if not self.exact and self.n_traj < 2:
            raise ValueError("stochastic moment tables need at least 2 trajectories")

    @classmethod
    def exact_from_moments(cls, second_xx, second_yy, intensity) -> "MomentTable":
        """Table from closed-form normally ordered moments (zero means, zero errors)."""
        z3 = np.zeros(3)
        z33 = np.zeros((3, 3))
        return cls(n_traj=0, exact=True,
                   mean_x=z3, mean_y=z3,
                   second_xx=second_xx, second_yy=second_yy,
                   intensity=intensity,
                   se_mean_x=z3, se_mean_y=z3,
                   se_second_xx=z33, se_second_yy=z33, se_intensity=z3)

    @classmethod
    def vacuum(cls) -> "MomentTable":
        return cls.exact_from_moments(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros(3))


@dataclass(frozen=True)
class CriteriaReport:
    """The three criterion values, their errors and the entanglement verdict.

    ``violated`` is the subset of pair labels {"12", "13", "23"} whose value
    lies strictly below 4; at least two violations certify entanglement.
    """

    v12: float
    v13: float
    v23: float
    se12: float = 0.0
    se13: float = 0.0
    se23: float = 0.0
    violated: frozenset[str] = field(default_factory=frozenset)
    entangled: bool = False

    def values(self) -> tuple[float, float, float]:
        return (self.v12, self.v13, self.v23)

    def conservative_values(self) -> tuple[float, float, float]:
        """Criterion values shifted up by three standard errors."""
        return (self.v12 + 3 * self.se12, self.v13 + 3 * self.se13,
                self.v23 + 3 * self.se23)


def _check_mode(j: int) -> int:
    if j not in (1, 2, 3):
        raise ValueError(f"mode index must be 1, 2 or 3, got {j!r}")
    return j - 1


def _check_table(table: MomentTable) -> None:
    if not table.exact and table.n_traj < 2:
        raise ValueError("empty ensemble: moment table has fewer than 2 trajectories")


def variance_x(table: MomentTable, j: int) -> float:
    """Quadrature variance V(X_j); the +1 restores the vacuum unit."""
    _check_table(table)
    i = _check_mode(j)
    return 1.0 + table.second_xx[i, i] - table.mean_x[i] ** 2


def variance_y(table: MomentTable, j: int) -> float:
    """Quadrature variance V(Y_j)."""
    _check_table(table)
    i = _check_mode(j)
    return 1.0 + table.second_yy[i, i] - table.mean_y[i] ** 2


def covariance_x(table: MomentTable, j: int, k: int) -> float:
    """Covariance V(X_j, X_k) for distinct modes (no vacuum term)."""
    _check_table(table)
    if j == k:
        raise ValueError("use variance_x for equal mode indices")
    i, m = _check_mode(j), _check_mode(k)
    return table.second_xx[i, m] - table.mean_x[i] * table.mean_x[m]


def covariance_y(table: MomentTable, j: int, k: int) -> float:
    """Covariance V(Y_j, Y_k) for distinct modes."""
    _check_table(table)
    if j == k:
        raise ValueError("use variance_y for equal mode indices")
    i, m = _check_mode(j), _check_mode(k)
    return table.second_yy[i, m] - table.mean_y[i] * table.mean_y[m]


def _se_variance(table: MomentTable, which: str, i: int) -> float:
    se2 = getattr(table, f"se_second_{which}")[i, i] ** 2
    mean = getattr(table, f"mean_{which[0]}")[i]
    se_m = getattr(table, f"se_mean_{which[0]}")[i]
    return math.sqrt(se2 + (2.0 * mean * se_m) ** 2)


def _se_covariance(table: MomentTable, which: str, i: int, m: int) -> float:
    se2 = getattr(table, f"se_second_{which}")[i, m] ** 2
    mean = getattr(table, f"mean_{which[0]}")
    se_m = getattr(table, f"se_mean_{which[0]}")
    return math.sqrt(se2 + (mean[m] * se_m[i]) ** 2 + (mean[i] * se_m[m]) ** 2)


def criteria_from_values(v12: float, v13: float, v23: float,
                         se12: float = 0.0, se13: float = 0.0,
                         se23: float = 0.0) -> CriteriaReport:
    """Assemble a report (violation subset, verdict) from criterion values."""
    values = {"12": v12, "13": v13, "23": v23}
    violated = frozenset(pair for pair, v in values.items() if v < VLF_BOUND)
    return CriteriaReport(v12=v12, v13=v13, v23=v23,
                          se12=se12, se13=se13, se23=se23,
                          violated=violated, entangled=len(violated) >= 2)


def vlf_criteria(table: MomentTable) -> CriteriaReport:
    """Evaluate the three tripartite criteria from a moment table.

    Each V_ij combines V(X_i - X_j) = V(X_i) + V(X_j) - 2 V(X_i, X_j) with
    the common phase-sum term V(Y_1 + Y_2 + Y_3).  Standard errors are
    propagated in quadrature, treating the per-moment errors as independent.
    """
    _check_table(table)
    vx = [variance_x(table, j) for j in (1, 2, 3)]
    vy = [variance_y(table, j) for j in (1, 2, 3)]
    cx = {(j, k): covariance_x(table, j, k) for j, k in _PAIRS}
    cy = {(j, k): covariance_y(table, j, k) for j, k in _PAIRS}
    se_vx = [_se_variance(table, "xx", i) for i in range(3)]
    se_vy = [_se_variance(table, "yy", i) for i in range(3)]
    se_cx = {(j, k): _se_covariance(table, "xx", j - 1, k - 1) for j, k in _PAIRS}
    se_cy = {(j, k): _se_covariance(table, "yy", j - 1, k - 1) for j, k in _PAIRS}

    ysum = sum(vy) + 2.0 * sum(cy.values())
    ysum_se2 = sum(s ** 2 for s in se_vy) + 4.0 * sum(s ** 2 for s in se_cy.values())

    out = {}
    for j, k in _PAIRS:
        xdiff = vx[j - 1] + vx[k - 1] - 2.0 * cx[(j, k)]
        se2 = (se_vx[j - 1] ** 2 + se_vx[k - 1] ** 2 + 4.0 * se_cx[(j, k)] ** 2
               + ysum_se2)
        out[f"{j}{k}"] = (xdiff + ysum, math.sqrt(se2))

    return criteria_from_values(out["12"][0], out["13"][0], out["23"][0],
                                out["12"][1], out["13"][1], out["23"][1])
