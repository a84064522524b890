"""Experiment configuration, CSV/JSON emission and the command pipelines.

CSV files are comma-separated with a header row, LF line endings and floats
written with 17 significant digits, so every value round-trips exactly.
JSON reports are written with sorted keys and no timestamps; identical
configs give byte-identical output.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ConfigError, DataIntegrityError, ParameterError
from .intensity import GapState, PiEvaluator, intensity_at, intensity_series
from .levy_core import LevyModel
from .mc_oracle import OracleConfig
from .path_sim import EVENT, GRID, Path, default_time, sample_barrier, simulate_path
from .spread import default_horizons, spread_term_structure
from .streams import RngStream
from .validation import run_suite

__all__ = [
    "PRESETS",
    "ExperimentConfig",
    "fmt",
    "write_csv",
    "write_path_csv",
    "read_path_csv",
    "write_intensity_csv",
    "write_spread_csv",
    "write_json",
    "parse_model",
    "cmd_simulate",
    "cmd_intensity",
    "cmd_spread",
    "cmd_validate",
    "cmd_figures",
    "FIG1_SEED",
    "FIG2_SEED",
]

PRESETS = {
    # (c, nu, sigma, theta) used for both figure pipelines
    "vg-reference": {"family": "vg", "params": {"c": -0.02, "nu": 0.1, "sigma": 0.15, "theta": 0.01}},
    "dcp-unit": {"family": "dcp", "params": {"c": 1.0, "rho": 1.0, "beta": 1.0}},
    "dcp-negative-drift": {"family": "dcp", "params": {"c": -0.02, "rho": 1.0, "beta": 1.0}},
}

FIG1_SEED = 20140101
FIG2_SEED = 20140102
FIG2_GAP = 0.0585


# ----------------------------------------------------------------------------
# CSV / JSON
# ----------------------------------------------------------------------------


def fmt(v):
    return format(float(v), ".17g")


def _open_out(dest):
    d = os.path.dirname(os.fspath(dest))
    if d:
        os.makedirs(d, exist_ok=True)
    return open(dest, "w", newline="\n", encoding="utf-8")


def write_csv(dest, header, rows):
    with _open_out(dest) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return dest


def write_path_csv(p: Path, dest):
    return write_csv(dest, ("t", "x", "xmin", "gap"), zip(p.times, p.values, p.run_min, p.gaps))


def read_path_csv(src, scheme=None):
    """Read a path CSV back into a validated :class:`Path`.

    The scheme is event-driven when some time repeats (a jump), otherwise
    grid, unless given explicitly.
    """
    with open(src, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,x,xmin,gap":
            raise DataIntegrityError(f"unexpected path header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != 4 or data.shape[0] == 0:
        raise DataIntegrityError("path CSV needs four columns and at least one row")
    t, x, xmin, gap = data.T
    if scheme is None:
        scheme = EVENT if np.any(np.diff(t) == 0) else GRID
    p = Path(t, x, xmin, scheme)
    p.validate()
    if np.any(p.gaps != gap):
        raise DataIntegrityError("gap column differs from x - xmin")
    return p


def write_intensity_csv(series, dest):
    return write_csv(dest, ("t", "lambda", "pi_of_gap"),
                     zip(series.times, series.lambdas, series.pi_values))


def write_spread_csv(curve, dest):
    return write_csv(dest, ("h", "spread", "std_error"), curve.rows())


def _json_safe(obj):
    """Replace non-finite floats (strict JSON has none) by ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, dest):
    with _open_out(dest) as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return dest


# ----------------------------------------------------------------------------
# Configuration
# ----------------------------------------------------------------------------


def parse_model(value):
    """Model from a preset name, an inline JSON object, a file path or a dict."""
    if isinstance(value, LevyModel):
        return value
    if isinstance(value, str):
        if value in PRESETS:
            value = PRESETS[value]
        elif value.lstrip().startswith("{"):
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"model is not valid JSON: {exc}", field="model")
        else:
            value = _load_json(value, "model")
    return LevyModel.from_dict(value)


def _load_json(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{what} file {path!r} not found", field=what)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path!r} is not valid JSON: {exc}", field=what)


def _float_list(value, name):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if isinstance(value, (int, float)):
        value = [value]
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of numbers, got {value!r}", field=name)
    if not out or any(not math.isfinite(v) for v in out):
        raise ConfigError(f"{name} must be a nonempty list of finite numbers", field=name)
    return out


@dataclass
class ExperimentConfig:
    """Everything a command needs; validated on construction.

    Config files use the same keys as the fields below; ``model`` takes the
    ``{"family": ..., "params": {...}}`` layout or a preset name.
    """

    model: LevyModel = field(default_factory=lambda: parse_model("vg-reference"))
    seed: int = 0
    horizon: float = 5.0
    steps_per_year: Optional[float] = None
    event_driven: Optional[bool] = None
    gap: Optional[tuple] = None
    samples: int = 100_000
    h_schedule: tuple = (1e-1, 1e-2, 1e-3)
    horizons: Optional[tuple] = None
    out: str = "out"
    workers: Optional[int] = None
    block_size: int = 4096
    confidence: float = 3.0
    fail_on_inconclusive: bool = False
    pi_method: str = "auto"
    pi_scale: float = 1.0
    with_barrier: bool = False

    def __post_init__(self):
        self.model = parse_model(self.model)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a nonnegative 64-bit integer, got {self.seed!r}",
                              field="seed")
        if not (isinstance(self.horizon, (int, float)) and math.isfinite(self.horizon)
                and self.horizon > 0):
            raise ConfigError(f"horizon must be positive, got {self.horizon!r}", field="horizon")
        if self.steps_per_year is not None and not (
                isinstance(self.steps_per_year, (int, float)) and self.steps_per_year > 0):
            raise ConfigError("steps_per_year must be positive", field="steps_per_year")
        if self.event_driven and not self.model.supports_event_driven:
            raise ConfigError(f"event-driven simulation needs compound Poisson jumps, "
                              f"not family {self.model.family!r}", field="event_driven")
        if self.gap is not None:
            self.gap = _float_list(self.gap, "gap")
            if any(g < 0 for g in self.gap):
                raise ConfigError("gap must be nonnegative", field="gap")
        if isinstance(self.samples, bool) or not isinstance(self.samples, int) or self.samples < 2:
            raise ConfigError(f"samples must be an integer >= 2, got {self.samples!r}",
                              field="samples")
        self.h_schedule = _float_list(self.h_schedule, "h_schedule")
        if self.horizons is not None:
            self.horizons = _float_list(self.horizons, "horizons")
            if any(h <= 0 for h in self.horizons) or any(
                    b <= a for a, b in zip(self.horizons, self.horizons[1:])):
                raise ConfigError("horizons must be positive and increasing", field="horizons")
        if self.workers is not None and (not isinstance(self.workers, int) or self.workers < 1):
            raise ConfigError("workers must be a positive integer", field="workers")
        if self.pi_method not in ("auto", "quadrature", "closed"):
            raise ConfigError(f"unknown pi_method {self.pi_method!r}", field="pi_method")
        if not (isinstance(self.pi_scale, (int, float)) and math.isfinite(self.pi_scale)):
            raise ConfigError("pi_scale must be a finite number", field="pi_scale")
        # oracle settings, validated here so errors surface before any simulation
        self.oracle()

    @classmethod
    def from_sources(cls, config_path=None, defaults=None, **overrides):
        """Merge defaults, an optional JSON config file and explicit overrides.

        Later sources win; an override of ``None`` counts as unset.
        """
        doc = {}
        if config_path is not None:
            doc = _load_json(config_path, "config")
            if not isinstance(doc, dict):
                raise ConfigError("config file must hold a JSON object", field="config")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s) {unknown}", field=unknown[0])
        doc = {**(defaults or {}), **doc, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return cls(**doc)
        except ParameterError as exc:
            raise ConfigError(str(exc), field=exc.field or "model")

    def oracle(self):
        return OracleConfig(n_samples=self.samples, h_schedule=self.h_schedule,
                            confidence=self.confidence, block_size=self.block_size,
                            workers=self.workers, event_driven=self.event_driven,
                            steps_per_year=self.steps_per_year)

    def evaluator(self):
        return PiEvaluator(self.model, method=self.pi_method, scale=self.pi_scale)

    def use_events(self):
        if self.event_driven is not None:
            return self.event_driven
        return self.model.supports_event_driven and self.steps_per_year is None


# ----------------------------------------------------------------------------
# Commands. Each returns the list of files written.
# ----------------------------------------------------------------------------


def _paths_of(cfg, T, seed):
    events = cfg.use_events()
    spy = None if events else (cfg.steps_per_year or 250.0)
    root = RngStream(seed)
    p = simulate_path(cfg.model, float(T), root.paths(), steps_per_year=spy, event_driven=events)
    return p, root


def cmd_simulate(cfg: ExperimentConfig, prefix=""):
    """One path plus its intensity series."""
    p, root = _paths_of(cfg, cfg.horizon, cfg.seed)
    tau = None
    if cfg.with_barrier:
        tau = default_time(p, sample_barrier(root.barriers()))
    series = intensity_series(cfg.evaluator(), p, default_time=tau)
    out = cfg.out
    return [write_path_csv(p, os.path.join(out, f"{prefix}path.csv")),
            write_intensity_csv(series, os.path.join(out, f"{prefix}intensity.csv"))]


def cmd_intensity(cfg: ExperimentConfig):
    """Pi and the pre-default intensity at each requested gap."""
    ev = cfg.evaluator()
    gaps = cfg.gap if cfg.gap is not None else (0.0,)
    rows = [(g, ev.big_pi(g), intensity_at(ev, GapState(g))) for g in gaps]
    return [write_csv(os.path.join(cfg.out, "intensity_by_gap.csv"),
                      ("gap", "pi_of_gap", "lambda"), rows)]


def _spread_curve(cfg, gap, stream, horizons):
    oc = cfg.oracle()
    if not oc.use_events(cfg.model):
        # one grid spans every horizon, so keep blocks small to bound memory
        oc = oc.replace(block_size=min(oc.block_size, 1024))
    return spread_term_structure(cfg.model, gap, horizons, oc, stream, cfg.evaluator())


def cmd_spread(cfg: ExperimentConfig):
    hs = cfg.horizons if cfg.horizons is not None else tuple(default_horizons(cfg.horizon))
    gaps = cfg.gap if cfg.gap is not None else (FIG2_GAP,)
    written = []
    for i, g in enumerate(gaps):
        curve = _spread_curve(cfg, g, RngStream(cfg.seed).child(i), hs)
        name = "spread.csv" if len(gaps) == 1 else f"spread_gap_{i}.csv"
        written.append(write_spread_csv(curve, os.path.join(cfg.out, name)))
    return written


def cmd_validate(cfg: ExperimentConfig):
    """Run the suite; returns ``(files, report_dict, failing_check_names)``."""
    report = run_suite(cfg.model, cfg.oracle(), RngStream(cfg.seed), cfg.evaluator(),
                       gaps=cfg.gap)
    strict = cfg.fail_on_inconclusive
    doc = report.to_dict(strict)
    f = write_json(doc, os.path.join(cfg.out, "validation.json"))
    return [f], doc, [c.name for c in report.failures(strict)]


def cmd_figures(cfg: ExperimentConfig):
    """Data behind both figures: a long path with its intensity, and a spread curve.

    Uses the model of ``cfg`` (the VG preset by default), fixed seeds and
    ``cfg.samples`` paths for the spread curve.
    """
    fig1 = ExperimentConfig(model=cfg.model, seed=FIG1_SEED, horizon=cfg.horizon,
                            steps_per_year=cfg.steps_per_year or 250.0, out=cfg.out,
                            pi_method=cfg.pi_method, pi_scale=cfg.pi_scale)
    written = cmd_simulate(fig1, prefix="fig1_")
    p = read_path_csv(written[0])
    with open(written[1], encoding="utf-8") as fh:
        fh.readline()
        lam = np.loadtxt(fh, delimiter=",", ndmin=2)[:, 1]
    corr = float(np.corrcoef(p.gaps, lam)[0, 1]) if np.std(p.gaps) > 0 and np.std(lam) > 0 else 0.0

    hs = cfg.horizons if cfg.horizons is not None else tuple(default_horizons(4.5))
    curve = _spread_curve(cfg, FIG2_GAP, RngStream(FIG2_SEED), hs)
    written.append(write_spread_csv(curve, os.path.join(cfg.out, "fig2_spread.csv")))
    summary = {
        "model": cfg.model.to_dict(),
        "fig1": {"seed": FIG1_SEED, "horizon": fig1.horizon, "steps_per_year": fig1.steps_per_year,
                 "points": int(p.times.size), "corr_gap_lambda": corr},
        "fig2": {"seed": FIG2_SEED, "gap": FIG2_GAP, "samples": curve.n_samples,
                 "anchor": curve.anchor,
                 "intensity_at_gap": intensity_at(cfg.evaluator(), GapState(FIG2_GAP)),
                 "min_spread": float(np.min(curve.values)), "max_spread": float(np.max(curve.values))},
    }
    written.append(write_json(summary, os.path.join(cfg.out, "figures.json")))
    return written, summary
