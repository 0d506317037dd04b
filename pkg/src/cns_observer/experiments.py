"""Named scenarios: configuration, sweep execution and CSV output."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .analysis import NonStationaryError, estimate_decay, fit_rate_vs_length, steady_amplitude
from .observer import DENSITY_FEEDBACK_FORMS, ObserverConfig, run_pair
from .solver import CFLError, FieldState, GridSpec, SolverError, TimeStepper
from .spectral import (
    FluidParams,
    ForcingSpec,
    KernelCoeffs,
    ResonanceError,
    design_kernels_density,
    design_kernels_velocity,
    eigenvalues_closed_form,
    forced_amplitude,
    partial_obs_rate,
)

SCENARIOS = (
    "table1",
    "table2",
    "partial_obs",
    "partial_obs_mean_fix",
    "forced",
    "nonlinear",
    "density_obs",
    "kernel_design_demo",
)

SCENARIO_DEFAULTS = {
    "table1": dict(sweep_param="phi_u", sweep=(0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 12.894, 15.0, 20.0)),
    "table2": dict(phi_u=20.0, sweep_param="phi_rho", sweep=(0.0, 0.5, 1.184, 1.5, 5.0, 10.0)),
    "partial_obs": dict(
        phi_u=10.0, phi_rho=0.5, sweep_param="obs_length",
        sweep=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0),
    ),
    "partial_obs_mean_fix": dict(
        phi_u=10.0, phi_rho=0.5, obs_length=0.5, density_feedback="localized",
        sweep_param="mean_correction", sweep=(0.0, 1.0),
    ),
    "forced": dict(
        model="linear", amplitude=0.0, forcing_c=1.0, forcing_omega=1.0, T=12.0, t_min=8.0,
        sweep_param="phi_u", sweep=(0.0, 5.0, 10.0),
    ),
    "nonlinear": dict(
        amplitude=0.5, phi_u=10.0, phi_rho=0.2, adaptive=True, sweep_param="mode", sweep=(1.0, 3.0),
    ),
    "density_obs": dict(
        observed="density", design_rate=5.0, design_cutoff=3.0, sweep_param="mode", sweep=(1.0, 2.0, 3.0),
    ),
    "kernel_design_demo": dict(
        design_rate=5.0, design_cutoff=5.0, sweep_param="mode", sweep=(1.0, 2.0, 3.0, 4.0, 5.0),
    ),
}

SUMMARY_COLUMNS = (
    "scenario", "param", "value",
    "theory_rate", "numeric_rate", "theory_period", "numeric_period", "r_squared",
    "theory_amplitude", "numeric_amplitude",
    "final_err_rho", "final_err_u", "mean_offset",
    "fit_slope", "fit_intercept", "fit_r_squared",
    "status",
)

_CHOICES = {
    "model": ("linear", "nonlinear"),
    "observed": ("velocity", "density"),
    "density_feedback": DENSITY_FEEDBACK_FORMS,
    "flux": ("vfroe", "llf"),
    "reconstruction": ("first", "minmod", "vanleer", "central"),
    "fit_var": ("rho", "u"),
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to rerun one scenario, as flat key-value pairs.

    ``design_cutoff > 0`` switches from uniform strengths (``phi_rho``,
    ``phi_u``) to kernels designed for ``design_rate``. Each sweep value
    replaces ``sweep_param`` in a copy of the config.
    """

    scenario: str
    gamma: float = 1.4
    nu: float = 0.05
    rho0: float = 1.0
    n_cells: int = 100
    dt: float = 1e-3
    cfl: float = 0.9
    adaptive: bool = False
    T: float = 5.0
    mode: int = 1
    amplitude: float = 0.05
    model: str = "nonlinear"
    observed: str = "velocity"
    phi_u: float = 0.0
    phi_rho: float = 0.0
    design_rate: float = 0.0
    design_cutoff: float = 0.0
    obs_length: float = 1.0
    mean_correction: bool = False
    gain: float = 1.0
    density_feedback: str = "divergence"
    forcing_c: float = 0.0
    forcing_omega: float = 1.0
    forcing_known: bool = False
    t_min: float = 0.0
    flux: str = "vfroe"
    reconstruction: str = "vanleer"
    fit_var: str = "rho"
    sweep_param: str = "phi_u"
    sweep: tuple[float, ...] = field(default_factory=tuple)
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        for name, choices in _CHOICES.items():
            if getattr(self, name) not in choices:
                raise ConfigError(name, f"must be one of {choices}, got {getattr(self, name)!r}")
        positive = ("gamma", "nu", "rho0", "dt", "cfl", "T", "forcing_omega")
        for name in positive:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(name, f"must be positive, got {v}")
        nonneg = ("phi_u", "phi_rho", "design_rate", "design_cutoff", "gain", "amplitude", "t_min")
        for name in nonneg:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(name, f"must be nonnegative, got {v}")
        if not math.isfinite(self.forcing_c):
            raise ConfigError("forcing_c", "must be finite")
        if self.n_cells < 8:
            raise ConfigError("n_cells", f"must be >= 8, got {self.n_cells}")
        if self.mode < 1 or self.mode > self.n_cells // 2:
            raise ConfigError("mode", f"must lie in [1, {self.n_cells // 2}], got {self.mode}")
        if self.amplitude >= self.rho0:
            raise ConfigError("amplitude", f"must be below rho0={self.rho0} to keep the density positive")
        if not 0.0 < self.obs_length <= 1.0:
            raise ConfigError("obs_length", f"must lie in (0, 1], got {self.obs_length}")
        if self.design_cutoff > 0 and not self.design_rate > 0:
            raise ConfigError("design_rate", "must be positive when design_cutoff is set")
        if self.mean_correction and self.observed != "velocity":
            raise ConfigError("mean_correction", "applies to velocity observations only")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if self.sweep_param not in _SWEEPABLE:
            raise ConfigError("sweep_param", f"cannot sweep {self.sweep_param!r}; choose from {', '.join(_SWEEPABLE)}")
        if not self.sweep:
            raise ConfigError("sweep", "needs at least one value")
        if len({format_value(v) for v in self.sweep}) != len(self.sweep):
            raise ConfigError("sweep", "values must be distinct")
        if self.scenario == "forced" and self.forcing_c == 0.0:
            raise ConfigError("forcing_c", "the forced scenario needs a nonzero forcing amplitude")

    @classmethod
    def default(cls, scenario: str, **overrides) -> "ScenarioConfig":
        if scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
        values = dict(SCENARIO_DEFAULTS[scenario])
        values.update(overrides)
        return cls(scenario=scenario, **values)

    # derived objects

    def fluid_params(self) -> FluidParams:
        return FluidParams.from_nu(self.nu, gamma=self.gamma, rho0=self.rho0)

    def grid(self) -> GridSpec:
        return GridSpec(self.n_cells)

    def stepper(self) -> TimeStepper:
        return TimeStepper(dt_max=self.dt, cfl=self.cfl, adaptive=self.adaptive)

    def kernels(self) -> KernelCoeffs:
        params = self.fluid_params()
        if self.design_cutoff > 0:
            design = design_kernels_velocity if self.observed == "velocity" else design_kernels_density
            return design(self.design_rate, self.design_cutoff, params)
        return KernelCoeffs.uniform(self.phi_rho, self.phi_u, target=self.observed)

    def forcing(self) -> Optional[ForcingSpec]:
        if self.forcing_c == 0.0:
            return None
        return ForcingSpec.single(self.mode, self.forcing_c, self.forcing_omega)

    def observer(self) -> ObserverConfig:
        return ObserverConfig(
            kernels=self.kernels(),
            model=self.model,
            observed=self.observed,
            obs_length=self.obs_length,
            mean_correction=self.mean_correction,
            gain=self.gain,
            density_feedback=self.density_feedback,
            forcing=self.forcing(),
            forcing_known=self.forcing_known,
            flux=self.flux,
            reconstruction=self.reconstruction,
        )

    def with_value(self, value: float) -> "ScenarioConfig":
        """Copy with the sweep parameter set to ``value``."""
        return with_field(self, self.sweep_param, value)

    def rows(self) -> list["ScenarioConfig"]:
        return [self.with_value(v) for v in self.sweep]

    # serialization

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["scenario"] = {f.name: _format_field(getattr(self, f.name)) for f in dataclasses.fields(self)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str, overrides: Sequence[str] = ()) -> "ScenarioConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("file", f"unreadable config: {exc}") from exc
        if "scenario" not in cp:
            raise ConfigError("scenario", "missing [scenario] section")
        values = dict(cp["scenario"])
        values.update(parse_overrides(overrides))
        if "scenario" not in values:
            raise ConfigError("scenario", "missing scenario id")
        return build_config(values)


_TYPES = {
    "float": float,
    "int": int,
    "bool": bool,
    "str": str,
    "tuple[float, ...]": tuple,
}
_FIELD_TYPES = {f.name: _TYPES[f.type] for f in dataclasses.fields(ScenarioConfig)}
_SWEEPABLE = tuple(
    name for name, t in _FIELD_TYPES.items()
    if t in (float, int, bool) and name not in ("workers", "n_cells")
)


def format_value(v: float) -> str:
    """Short, exact text for a sweep value: integers without a decimal point."""
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _format_field(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_field(name: str, text: str):
    kind = _FIELD_TYPES.get(name)
    if kind is None:
        raise ConfigError(name, "unknown configuration key")
    text = str(text).strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            f = float(text)
            if not f.is_integer():
                raise ValueError(f"not an integer: {text!r}")
            return int(f)
        if kind is float:
            return float(text)
        if kind is tuple:
            return tuple(float(x) for x in text.split(",") if x.strip())
        return text
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from exc


def parse_overrides(pairs: Sequence[str]) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError("set", f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def build_config(values: dict) -> ScenarioConfig:
    """Scenario defaults first, then the given (textual or typed) values."""
    scenario = str(values["scenario"]).strip()
    parsed = {}
    for key, value in values.items():
        if key == "scenario":
            continue
        parsed[key] = _parse_field(key, value) if isinstance(value, str) else value
    return ScenarioConfig.default(scenario, **parsed)


def with_field(cfg: ScenarioConfig, name: str, value: float) -> ScenarioConfig:
    kind = _FIELD_TYPES[name]
    if kind is bool:
        if value not in (0.0, 1.0):
            raise ConfigError(name, f"boolean sweep values must be 0 or 1, got {value}")
        typed = bool(value)
    elif kind is int:
        if not float(value).is_integer():
            raise ConfigError(name, f"must be an integer, got {value}")
        typed = int(value)
    else:
        typed = float(value)
    return dataclasses.replace(cfg, **{name: typed})


def load_config(source: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """Read a config file, or take ``source`` as a bare scenario id."""
    if source in SCENARIOS and not os.path.exists(source):
        values = {"scenario": source}
        values.update(parse_overrides(overrides))
        return build_config(values)
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise ConfigError("file", f"cannot read {source}: {exc}") from exc
    return ScenarioConfig.from_ini(text, overrides)


# execution


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list[dict]
    traces: list[tuple[str, str]]
    fit: Optional[tuple[float, float, float]] = None


def _initial_states(cfg: ScenarioConfig):
    grid = cfg.grid()
    truth = FieldState.uniform(grid, cfg.rho0)
    if cfg.amplitude > 0:
        observer = FieldState.perturbed(grid, cfg.amplitude, cfg.mode, cfg.rho0)
    else:
        observer = FieldState.uniform(grid, cfg.rho0)
    return truth, observer


def _theory(cfg: ScenarioConfig, params: FluidParams, kernels: KernelCoeffs, row: dict):
    if cfg.scenario == "forced":
        try:
            row["theory_amplitude"] = forced_amplitude(params, kernels, cfg.mode, cfg.forcing_c, cfg.forcing_omega)[0]
        except ResonanceError:
            row["theory_amplitude"] = math.inf
        return
    if cfg.scenario.startswith("partial_obs"):
        row["theory_rate"] = partial_obs_rate(params, kernels.u_at(cfg.mode**2), cfg.obs_length, cfg.mode)
        return
    eig = eigenvalues_closed_form(params, kernels, cfg.mode)
    row["theory_rate"] = eig.decay_rate
    row["theory_period"] = eig.period


def run_row(cfg: ScenarioConfig) -> tuple[dict, str]:
    """One sweep entry: summary row and error-trace CSV. Failures go into ``status``."""
    value = getattr(cfg, cfg.sweep_param)
    row = {
        "scenario": cfg.scenario,
        "param": cfg.sweep_param,
        "value": float(value),
        "status": "ok",
    }
    params = cfg.fluid_params()
    trace = "t,err_rho,err_u\n"
    try:
        kernels = cfg.kernels()
        _theory(cfg, params, kernels, row)
        truth, observer = _initial_states(cfg)
        run = run_pair(truth, observer, cfg.observer(), cfg.T, params, cfg.stepper(),
                       record_modes=max(8, cfg.mode))
        trace = run.to_csv()
        row["final_err_rho"] = float(run.err_rho[-1])
        row["final_err_u"] = float(run.err_u[-1])
        row["mean_offset"] = run.mean_offset()
        if cfg.scenario == "forced":
            row["numeric_amplitude"] = steady_amplitude(run.t, run.sine_coefficient(cfg.mode, "u"), cfg.t_min)
        else:
            series = run.err_rho if cfg.fit_var == "rho" else run.err_u
            est = estimate_decay(run.t, series)
            row["numeric_rate"] = est.rate
            row["numeric_period"] = est.period
            row["r_squared"] = est.r_squared
    except (SolverError, CFLError, NonStationaryError, ValueError) as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row, trace


def run_scenario(cfg: ScenarioConfig, workers: Optional[int] = None) -> ScenarioResult:
    """Run every sweep entry (in parallel when ``workers`` > 1), keeping sweep order."""
    row_cfgs = cfg.rows()
    workers = cfg.workers if workers is None else workers
    if workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {workers}")
    if workers == 1 or len(row_cfgs) == 1:
        outputs = [run_row(c) for c in row_cfgs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(row_cfgs))) as pool:
            outputs = list(pool.map(run_row, row_cfgs))
    rows = [o[0] for o in outputs]
    traces = [(f"{cfg.sweep_param}={format_value(c_value)}", o[1]) for c_value, o in zip(cfg.sweep, outputs)]
    fit = None
    if cfg.scenario == "partial_obs":
        pts = [(r["value"], r["numeric_rate"]) for r in rows if "numeric_rate" in r]
        if len(pts) >= 3:
            fit = fit_rate_vs_length(pts)
            for r in rows:
                r["fit_slope"], r["fit_intercept"], r["fit_r_squared"] = fit
    return ScenarioResult(cfg, rows, traces, fit)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_csv(result: ScenarioResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in result.rows:
        writer.writerow([_cell(row.get(c)) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def emit_plot_data(result: ScenarioResult, out_dir) -> list[Path]:
    """Write ``<out>/<scenario>/<param>=<value>.csv`` traces and ``summary.csv``."""
    base = Path(out_dir) / result.config.scenario
    written = []
    try:
        base.mkdir(parents=True, exist_ok=True)
        for label, text in result.traces:
            path = base / f"{label}.csv"
            path.write_text(text)
            written.append(path)
        path = base / "summary.csv"
        path.write_text(summary_csv(result))
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write results under {base}: {exc}") from exc
    return written
