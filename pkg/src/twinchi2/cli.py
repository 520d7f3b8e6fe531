"""Experiment runner: config parsing, figure presets and CSV output.

Configs are flat ``key=value`` lines with ``#`` comments.  Every output file
echoes its fully resolved configuration (defaults included) as the first
line, ``# key=value ...``; feeding that file back as ``--config`` reproduces
the identical output.  Execution details (output path, worker count) are not
part of the echoed experiment identity.

Exit codes: 0 success, 2 configuration/validation error, 3 divergence abort,
4 unstable-linearization rejection.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .model import Kind, SystemSpec, vlf_criteria
from .analytic import AnalyticParams, Regime, cascaded_moment_table, concurrent_moment_table
from .ppsde import (IntegrationGrid, EnsembleConfig, DivergenceAbort, run_ensemble)
from .cavity import (Branch, SteadyStateError, UnstableModelError, find_steady_state,
                     linearize, spectrum, output_quadrature_spectra)

__all__ = ["ConfigError", "load_config", "resolve_config", "run_config",
           "run_preset", "main", "PRESETS"]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


_ROUTES = ("analytic", "sde", "cavity-spectrum", "preset")

# Known keys per route; aggregate keys expand before echoing.
_COMMON_KEYS = {"route", "seed"}
_ROUTE_KEYS = {
    "analytic": {"scheme", "kappa1", "kappa2", "gamma1", "gamma2", "gamma",
                 "t_max", "n_points"},
    "sde": {"kind", "chi", "chi1", "chi2", "pump1_init", "pump2_init",
            "eps", "eps1", "eps2", "loss_a", "loss_a1", "loss_a2", "loss_a3",
            "loss_b", "loss_b1", "loss_b2", "xi_max", "t_max", "n_steps",
            "n_samples", "n_traj", "traj_block", "divergence_bound",
            "max_divergent_fraction"},
    "cavity-spectrum": {"kind", "chi", "chi1", "chi2", "eps", "eps1", "eps2",
                        "loss_a", "loss_a1", "loss_a2", "loss_a3",
                        "loss_b", "loss_b1", "loss_b2", "branch",
                        "omega_min", "omega_max", "omega_points"},
    "preset": {"preset", "n_traj", "traj_block"},
}

# Echo order: stable, execution details (out/workers) excluded.
_ECHO_ORDER = (
    "route", "preset", "scheme", "kind",
    "kappa1", "kappa2", "gamma1", "gamma2",
    "chi1", "chi2", "pump1_init", "pump2_init", "eps1", "eps2",
    "loss_a1", "loss_a2", "loss_a3", "loss_b1", "loss_b2", "branch",
    "t_max", "xi_max", "n_steps", "n_samples", "n_points",
    "omega_min", "omega_max", "omega_points",
    "n_traj", "traj_block", "divergence_bound", "max_divergent_fraction",
    "seed",
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, complex):
        if value.imag == 0.0:
            return f"{value.real:.12g}"
        return f"{value.real:.12g}{value.imag:+.12g}j"
    return str(value)


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}")


def _parse_complex(raw: str, key: str) -> complex:
    try:
        return complex(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a (complex) number, got {raw!r}")


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}")


def load_config(path: str) -> dict[str, str]:
    """Read a flat key=value config; also accepts a previous output CSV."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if "=" in body:  # echoed header of an earlier run
                return _parse_pairs(body.split())
            continue
        break
    out: dict[str, str] = {}
    for line in lines:
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"malformed config line: {line!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_pairs(tokens) -> dict[str, str]:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"malformed config token: {tok!r}")
        key, _, value = tok.partition("=")
        out[key] = value
    return out


def _expand_aggregates(cfg: dict[str, str]) -> dict[str, str]:
    cfg = dict(cfg)
    for agg, targets in (("chi", ("chi1", "chi2")),
                         ("eps", ("eps1", "eps2")),
                         ("gamma", ("gamma1", "gamma2")),
                         ("loss_a", ("loss_a1", "loss_a2", "loss_a3")),
                         ("loss_b", ("loss_b1", "loss_b2"))):
        if agg in cfg:
            value = cfg.pop(agg)
            for t in targets:
                cfg.setdefault(t, value)
    return cfg


def _check_keys(cfg: dict[str, str], route: str) -> None:
    known = _COMMON_KEYS | _ROUTE_KEYS[route]
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys for route {route!r}: "
                          f"{sorted(unknown)}")


def _echo_line(resolved: dict) -> str:
    parts = [f"{k}={_fmt(resolved[k])}" for k in _ECHO_ORDER if k in resolved]
    return "# " + " ".join(parts)


def _write_csv(path: str, echo: str, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(echo + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


# -- route runners -------------------------------------------------------------------

def _run_analytic(cfg: dict[str, str], out: str, plain_columns: bool = False,
                  resolved_extra: dict | None = None) -> None:
    scheme_name = cfg.get("scheme")
    if scheme_name not in ("CascadedTW", "ConcurrentTW"):
        raise ConfigError("analytic route needs scheme=CascadedTW or ConcurrentTW")
    t_max = _parse_float(cfg.get("t_max", "6.283185307179586"), "t_max")
    n_points = _parse_int(cfg.get("n_points", "201"), "n_points")
    if t_max <= 0 or n_points < 2:
        raise ConfigError("t_max must be > 0 and n_points >= 2")

    if scheme_name == "CascadedTW":
        if "kappa1" not in cfg or "kappa2" not in cfg:
            raise ConfigError("cascaded analytic route needs kappa1 and kappa2")
        params = AnalyticParams.cascaded(_parse_float(cfg["kappa1"], "kappa1"),
                                         _parse_float(cfg["kappa2"], "kappa2"))
        table_fn = cascaded_moment_table
        abscissa = "Omega_t" if params.regime == Regime.OSCILLATORY else "zeta_t"
        resolved = {"route": "analytic", "scheme": scheme_name,
                    "kappa1": params.kappa1, "kappa2": params.kappa2}
    else:
        if "gamma1" not in cfg or "gamma2" not in cfg:
            raise ConfigError("concurrent analytic route needs gamma1/gamma2 "
                              "(or gamma for both)")
        params = AnalyticParams.concurrent(_parse_float(cfg["gamma1"], "gamma1"),
                                           _parse_float(cfg["gamma2"], "gamma2"))
        table_fn = concurrent_moment_table
        abscissa = "Omega_t"
        resolved = {"route": "analytic", "scheme": scheme_name,
                    "gamma1": params.gamma1, "gamma2": params.gamma2}
    resolved.update({"t_max": t_max, "n_points": n_points})
    if resolved_extra:
        resolved = resolved_extra

    rate = params.rate
    scaled = np.linspace(0.0, t_max, n_points)
    rows = []
    for s in scaled:
        rep = vlf_criteria(table_fn(params, s / rate))
        if plain_columns:
            rows.append((s, rep.v12, rep.v13, rep.v23))
        else:
            rows.append((s, rep.v12, rep.se12, rep.v13, rep.se13,
                         rep.v23, rep.se23))
    columns = ([abscissa, "V12", "V13", "V23"] if plain_columns else
               [abscissa, "V12", "se12", "V13", "se13", "V23", "se23"])
    _write_csv(out, _echo_line(resolved), columns, rows)


def _system_spec_from(cfg: dict[str, str], route: str) -> SystemSpec:
    kind_name = cfg.get("kind")
    try:
        kind = Kind(kind_name)
    except ValueError:
        raise ConfigError(f"unknown kind {kind_name!r}")
    chi1 = _parse_float(cfg.get("chi1", ""), "chi1") if "chi1" in cfg else None
    chi2 = _parse_float(cfg.get("chi2", ""), "chi2") if "chi2" in cfg else None
    if chi1 is None or chi2 is None:
        raise ConfigError("chi1 and chi2 (or chi) are required")
    try:
        if kind.travelling_wave:
            for key in ("pump1_init", "pump2_init"):
                if key not in cfg:
                    raise ConfigError(f"{kind.value} needs {key}")
            return SystemSpec(kind, chi1, chi2,
                              pump1_init=_parse_complex(cfg["pump1_init"], "pump1_init"),
                              pump2_init=_parse_complex(cfg["pump2_init"], "pump2_init"))
        for key in ("eps1", "eps2", "loss_a1", "loss_a2", "loss_a3",
                    "loss_b1", "loss_b2"):
            if key not in cfg:
                raise ConfigError(f"{kind.value} needs {key} (or an aggregate key)")
        return SystemSpec(kind, chi1, chi2,
                          eps1=_parse_complex(cfg["eps1"], "eps1"),
                          eps2=_parse_complex(cfg["eps2"], "eps2"),
                          loss_a1=_parse_float(cfg["loss_a1"], "loss_a1"),
                          loss_a2=_parse_float(cfg["loss_a2"], "loss_a2"),
                          loss_a3=_parse_float(cfg["loss_a3"], "loss_a3"),
                          loss_b1=_parse_float(cfg["loss_b1"], "loss_b1"),
                          loss_b2=_parse_float(cfg["loss_b2"], "loss_b2"))
    except ValueError as err:
        raise ConfigError(str(err))


def _spec_echo(spec: SystemSpec) -> dict:
    out = {"kind": spec.kind.value, "chi1": spec.chi1, "chi2": spec.chi2}
    if spec.kind.travelling_wave:
        out.update({"pump1_init": spec.pump1_init, "pump2_init": spec.pump2_init})
    else:
        out.update({"eps1": spec.eps1, "eps2": spec.eps2,
                    "loss_a1": spec.loss_a1, "loss_a2": spec.loss_a2,
                    "loss_a3": spec.loss_a3, "loss_b1": spec.loss_b1,
                    "loss_b2": spec.loss_b2})
    return out


def _run_sde(cfg: dict[str, str], out: str, workers: int,
             resolved_extra: dict | None = None) -> None:
    spec = _system_spec_from(cfg, "sde")
    if spec.kind == Kind.CONCURRENT_CAVITY:
        raise ConfigError("the concurrent cavity has no stochastic system; "
                          "use route=cavity-spectrum")
    n_samples = _parse_int(cfg.get("n_samples", "41"), "n_samples")
    if n_samples < 2:
        raise ConfigError("n_samples must be >= 2")
    n_steps = _parse_int(cfg["n_steps"], "n_steps") if "n_steps" in cfg else None

    if spec.kind.travelling_wave:
        if "xi_max" not in cfg:
            raise ConfigError("travelling-wave sde runs need xi_max")
        span = _parse_float(cfg["xi_max"], "xi_max")
        span_key, abscissa = "xi_max", "xi"
    else:
        if "t_max" not in cfg:
            raise ConfigError("cavity sde runs need t_max (in units of loss_a1)")
        span = _parse_float(cfg["t_max"], "t_max")
        span_key, abscissa = "t_max", "gamma_t"
    if span <= 0:
        raise ConfigError(f"{span_key} must be > 0")
    if spec.kind.travelling_wave:
        grid = IntegrationGrid.spatial(spec, span, n_steps=n_steps)
    else:
        grid = IntegrationGrid.temporal(spec, span, n_steps=n_steps)

    ens = EnsembleConfig(
        n_traj=_parse_int(cfg.get("n_traj", "100000"), "n_traj"),
        seed=_parse_int(cfg.get("seed", "12345"), "seed"),
        divergence_bound=(_parse_float(cfg["divergence_bound"], "divergence_bound")
                          if "divergence_bound" in cfg else None),
        max_divergent_fraction=_parse_float(
            cfg.get("max_divergent_fraction", "0.001"), "max_divergent_fraction"),
        traj_block=_parse_int(cfg.get("traj_block", "4096"), "traj_block"),
        workers=workers,
    )

    # samples must land on grid steps
    stride = grid.n_steps // (n_samples - 1)
    if stride < 1 or grid.n_steps % (n_samples - 1) != 0:
        raise ConfigError(f"n_steps={grid.n_steps} is not divisible into "
                          f"{n_samples - 1} sample intervals")
    unit = grid.step * grid.scale
    samples = np.arange(0, grid.n_steps + 1, stride) * unit

    series = run_ensemble(spec, grid, ens, samples)

    resolved = {"route": "sde", **_spec_echo(spec), span_key: span,
                "n_steps": grid.n_steps, "n_samples": n_samples,
                "n_traj": ens.n_traj, "traj_block": ens.traj_block,
                "max_divergent_fraction": ens.max_divergent_fraction,
                "seed": ens.seed}
    if "divergence_bound" in cfg:
        resolved["divergence_bound"] = ens.divergence_bound
    if resolved_extra:
        resolved = resolved_extra

    rows = []
    for s, table in zip(series.abscissae, series.tables):
        rep = vlf_criteria(table)
        cons = rep.conservative_values()
        rows.append((s, rep.v12, rep.se12, rep.v13, rep.se13, rep.v23, rep.se23,
                     cons[0], cons[1], cons[2],
                     table.intensity[0], table.se_intensity[0],
                     table.intensity[1], table.se_intensity[1],
                     table.intensity[2], table.se_intensity[2]))
    # V*_cons = V + 3 se, the conservative violation bound
    columns = [abscissa, "V12", "se12", "V13", "se13", "V23", "se23",
               "V12_cons", "V13_cons", "V23_cons",
               "n1", "se_n1", "n2", "se_n2", "n3", "se_n3"]
    _write_csv(out, _echo_line(resolved), columns, rows)


def _run_cavity_spectrum(cfg: dict[str, str], out: str,
                         resolved_extra: dict | None = None) -> None:
    spec = _system_spec_from(cfg, "cavity-spectrum")
    if not spec.kind.cavity:
        raise ConfigError("cavity-spectrum route needs a cavity kind")
    branch_name = cfg.get("branch", "auto")
    if branch_name not in ("auto", "below", "above"):
        raise ConfigError("branch must be auto, below or above")
    omega_min = _parse_float(cfg.get("omega_min", "-10"), "omega_min")
    omega_max = _parse_float(cfg.get("omega_max", "10"), "omega_max")
    omega_points = _parse_int(cfg.get("omega_points", "401"), "omega_points")
    if omega_points < 2 or omega_max <= omega_min:
        raise ConfigError("need omega_max > omega_min and omega_points >= 2")

    hint = None if branch_name == "auto" else Branch(branch_name)
    state = find_steady_state(spec, hint)
    model = linearize(spec, state)
    omegas = np.linspace(omega_min, omega_max, omega_points)
    series = spectrum(model, spec, omegas)
    vx, _vy = output_quadrature_spectra(model, spec, omegas)

    resolved = {"route": "cavity-spectrum", **_spec_echo(spec),
                "branch": branch_name, "omega_min": omega_min,
                "omega_max": omega_max, "omega_points": omega_points}
    if resolved_extra:
        resolved = resolved_extra
    rows = [(w, series.s12[i], series.s13[i], series.s23[i],
             vx[0, i], vx[1, i], vx[2, i])
            for i, w in enumerate(omegas)]
    columns = ["omega", "S12", "S13", "S23", "VX1", "VX2", "VX3"]
    _write_csv(out, _echo_line(resolved), columns, rows)


# -- figure presets ------------------------------------------------------------------
#
# One canned experiment per reference figure; axis ranges are pinned here and
# documented in the README preset table.

PRESETS: dict[str, dict[str, str]] = {
    # analytic criteria, cascaded oscillatory regime (kappa2 = 1.8 kappa1)
    "fig1": {"route": "analytic", "scheme": "CascadedTW",
             "kappa1": "1", "kappa2": "1.8",
             "t_max": "6.283185307179586", "n_points": "201"},
    # analytic criteria, cascaded hyperbolic regime (kappa1 = 1.2 kappa2)
    "fig2": {"route": "analytic", "scheme": "CascadedTW",
             "kappa1": "1.2", "kappa2": "1",
             "t_max": "2.5", "n_points": "201"},
    # stochastic cascaded run, symmetric couplings
    "fig3": {"route": "sde", "kind": "CascadedTW", "chi": "0.01",
             "pump1_init": "1000", "pump2_init": "1000",
             "xi_max": "2", "n_steps": "2000", "n_samples": "41"},
    # stochastic cascaded run, chi2 = 2 chi1 (criteria and intensities)
    "fig4": {"route": "sde", "kind": "CascadedTW",
             "chi1": "0.01", "chi2": "0.02",
             "pump1_init": "1000", "pump2_init": "1000",
             "xi_max": "1", "n_steps": "1000", "n_samples": "41"},
    # stochastic concurrent run (criteria and intensities)
    "fig5": {"route": "sde", "kind": "ConcurrentTW", "chi": "0.01",
             "pump1_init": "1000", "pump2_init": "1000",
             "xi_max": "0.4", "n_steps": "400", "n_samples": "41"},
    # cascaded cavity spectra at eps = 0.9 gamma kappa / chi1
    "fig6": {"route": "cavity-spectrum", "kind": "CascadedCavity",
             "chi": "0.01", "eps": "90", "loss_a": "1", "loss_b": "1",
             "branch": "below",
             "omega_min": "-10", "omega_max": "10", "omega_points": "401"},
    # concurrent cavity spectra below threshold (eps = 0.9 eps_th)
    "fig7": {"route": "cavity-spectrum", "kind": "ConcurrentCavity",
             "chi": "0.01", "eps": "45", "loss_a": "1", "loss_b": "1",
             "branch": "below",
             "omega_min": "-10", "omega_max": "10", "omega_points": "401"},
    # concurrent cavity spectra above threshold (eps = 2 eps_th); the grid
    # avoids omega = 0 where the marginal phase mode makes S diverge
    "fig8": {"route": "cavity-spectrum", "kind": "ConcurrentCavity",
             "chi": "0.01", "eps": "100", "loss_a": "1", "loss_b": "1",
             "branch": "above",
             "omega_min": "-10", "omega_max": "10", "omega_points": "400"},
}


def run_preset(name: str, out: str, seed: int | None = None,
               n_traj: int | None = None, workers: int = 1) -> None:
    """Run one figure preset, optionally overriding seed/trajectory count."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from "
                          f"{sorted(PRESETS)}")
    cfg = dict(PRESETS[name])
    route = cfg["route"]
    if seed is not None:
        cfg["seed"] = str(seed)
    if n_traj is not None:
        cfg["n_traj"] = str(n_traj)

    # echoed identity: the preset plus its stochastic overrides
    resolved: dict = {"route": "preset", "preset": name}
    if route == "sde":
        resolved.update({"n_traj": int(cfg.get("n_traj", "100000")),
                         "traj_block": int(cfg.get("traj_block", "4096")),
                         "seed": int(cfg.get("seed", "12345"))})

    body = {k: v for k, v in cfg.items() if k != "route"}
    if route == "analytic":
        _run_analytic(_expand_aggregates(body), out, plain_columns=True,
                      resolved_extra=resolved)
    elif route == "sde":
        _run_sde(_expand_aggregates(body), out, workers, resolved_extra=resolved)
    else:
        _run_cavity_spectrum(_expand_aggregates(body), out,
                             resolved_extra=resolved)


def run_config(cfg: dict[str, str], out: str, workers: int = 1) -> None:
    """Dispatch a validated flat configuration to its route runner."""
    route = cfg.get("route")
    if route not in _ROUTES:
        raise ConfigError(f"route must be one of {_ROUTES}, got {route!r}")
    expanded = _expand_aggregates(cfg)
    _check_keys(expanded, route)
    body = {k: v for k, v in expanded.items() if k != "route"}
    try:
        if route == "analytic":
            _run_analytic(body, out)
        elif route == "sde":
            _run_sde(body, out, workers)
        elif route == "cavity-spectrum":
            _run_cavity_spectrum(body, out)
        else:
            name = body.pop("preset", None)
            if name is None:
                raise ConfigError("preset route needs preset=<name>")
            seed = _parse_int(body["seed"], "seed") if "seed" in body else None
            n_traj = (_parse_int(body["n_traj"], "n_traj")
                      if "n_traj" in body else None)
            run_preset(name, out, seed=seed, n_traj=n_traj, workers=workers)
    except ConfigError:
        raise
    except ValueError as err:  # parameter rejections from the library surface
        raise ConfigError(str(err))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="twinchi2",
        description="Tripartite-entanglement simulator for twin-nonlinearity "
                    "schemes: analytic, stochastic and cavity-spectrum routes.")
    parser.add_argument("route", choices=_ROUTES)
    parser.add_argument("name", nargs="?", default=None,
                        help="preset name (preset route only), e.g. fig1")
    parser.add_argument("--config", help="flat key=value config file "
                                         "(or a previous output CSV)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--traj", type=int, default=None,
                        help="override trajectory count (stochastic routes)")
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel workers (does not affect results)")
    args = parser.parse_args(argv)

    try:
        cfg: dict[str, str] = {}
        if args.config:
            cfg = load_config(args.config)
        if "route" in cfg and cfg["route"] != args.route:
            raise ConfigError(f"config routes {cfg['route']!r} but the command "
                              f"line says {args.route!r}")
        cfg["route"] = args.route
        if args.route == "preset" and args.name:
            cfg["preset"] = args.name
        elif args.name:
            raise ConfigError("positional name is only valid for the preset route")
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
        if args.traj is not None:
            cfg["n_traj"] = str(args.traj)
        out = args.out
        if out is None:
            out = f"{cfg.get('preset', 'twinchi2')}.csv"
        run_config(cfg, out, workers=max(1, args.workers))
    except ConfigError as err:
        print(f"twinchi2: configuration error: {err}", file=sys.stderr)
        return 2
    except DivergenceAbort as err:
        print(f"twinchi2: {err}", file=sys.stderr)
        return 3
    except (UnstableModelError, SteadyStateError) as err:
        print(f"twinchi2: {err}", file=sys.stderr)
        return 4
    except OSError as err:
        print(f"twinchi2: i/o error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
