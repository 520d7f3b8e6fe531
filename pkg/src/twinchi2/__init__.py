"""Continuous-variable tripartite entanglement from twin chi(2) nonlinearities.

Three independent, cross-validating computation routes for the cascaded and
concurrent interaction schemes:

* :mod:`twinchi2.analytic` -- closed-form undepleted-pump solutions for the
  travelling-wave models, plus a moment-ODE oracle;
* :mod:`twinchi2.ppsde` -- full positive-P stochastic integration with
  reproducible parallel ensembles;
* :mod:`twinchi2.cavity` -- intracavity steady states, linearized fluctuation
  analysis and output spectral criteria.

:mod:`twinchi2.model` defines the shared types and the van Loock--Furusawa
tripartite criteria; :mod:`twinchi2.cli` is the experiment runner.
"""

from .model import (Kind, SystemSpec, MomentTable, CriteriaReport,
                    variance_x, variance_y, covariance_x, covariance_y,
                    vlf_criteria, criteria_from_values)
from .analytic import (AnalyticParams, Regime, cascaded_intensities,
                       cascaded_moment_table, concurrent_intensities,
                       concurrent_moment_table, concurrent_vlf_closed_form,
                       moment_ode_oracle)
from .ppsde import (PhaseSpacePoint, IntegrationGrid, EnsembleConfig,
                    EnsembleSeries, ChargeReport, DivergenceAbort,
                    drift_and_noise, step_em, run_ensemble, conserved_charges)
from .cavity import (Branch, SteadyState, LinearizedModel, SpectrumSeries,
                     ThresholdReport, SteadyStateError, UnstableModelError,
                     classical_equations, find_steady_state, linearize,
                     spectrum, output_quadrature_spectra, closed_form_spectra,
                     thresholds)

__version__ = "0.1.0"
