"""Run configuration: the ``section.key = value`` text format, presets and validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .grid import Grid2D
from .model import ModelParams
from .propagator import PropagationPlan
from .twa import EnsembleSpec


class ConfigError(ValueError):
    """Syntax, unknown-key or domain error in a run configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


ENGINES = ("quantum", "semiclassical", "twa", "gauge")


@dataclass
class RunSection:
    engine: str = "quantum"


@dataclass
class ModelSection:
    omega: float = 0.02
    k: float = 0.01


@dataclass
class InitialSection:
    x0: float = 10.0
    y0: float = 0.0
    sigma: float = 1.0
    channel: int = 1
    spin0: tuple = (0.0, 0.0, 1.0)


@dataclass
class GridSection:
    n: int = 256
    extent: float = 25.0


@dataclass
class PlanSection:
    dt: float = 0.1
    t_final: float = 15000.0
    record_stride: int = 100
    spin_factor: int = 1


@dataclass
class TwaSection:
    n_traj: int = 50_000
    seed: int = 20240101
    dt: float = 0.1
    spin_factor: int = 1
    antithetic: bool = False
    workers: int = 1
    bins: int = 64


@dataclass
class OutputSection:
    dir: str = "out"
    snapshot_times: tuple = ()
    gauge_radii: tuple = (0.1, 1.0, 5.0)
    gauge_points: int = 1000


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    model: ModelSection = field(default_factory=ModelSection)
    initial: InitialSection = field(default_factory=InitialSection)
    grid: GridSection = field(default_factory=GridSection)
    plan: PlanSection = field(default_factory=PlanSection)
    twa: TwaSection = field(default_factory=TwaSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def engine(self) -> str:
        return self.run.engine

    def model_params(self) -> ModelParams:
        return ModelParams(omega=self.model.omega, k=self.model.k)

    def grid2d(self) -> Grid2D:
        return Grid2D(n=self.grid.n, extent=self.grid.extent)

    def propagation_plan(self) -> PropagationPlan:
        return PropagationPlan(dt=self.plan.dt, t_final=self.plan.t_final, record_stride=self.plan.record_stride)

    def ensemble_spec(self, seed: int | None = None) -> EnsembleSpec:
        # keep the TWA record interval in time units equal to the quantum one
        stride = max(1, int(round(self.plan.dt * self.plan.record_stride / self.twa.dt)))
        return EnsembleSpec(
            n_traj=self.twa.n_traj,
            center=(self.initial.x0, self.initial.y0),
            sigma=self.initial.sigma,
            seed=self.twa.seed if seed is None else seed,
            spin0=tuple(self.initial.spin0),
            dt=self.twa.dt,
            t_final=self.plan.t_final,
            spin_factor=self.twa.spin_factor,
            record_stride=stride,
            antithetic=self.twa.antithetic,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        lines = []
        for sec, values in self.as_dict().items():
            for key, val in values.items():
                if isinstance(val, (tuple, list)):
                    val = ", ".join(repr(v) for v in val)
                lines.append(f"{sec}.{key} = {val}")
        return "\n".join(lines) + "\n"


PRESETS: dict[str, str] = {
    "fig1-quantum": "run.engine = quantum\n",
    "fig1-semiclassical": "run.engine = semiclassical\nplan.dt = 0.01\nplan.record_stride = 1000\n",
    "fig1-twa": "run.engine = twa\ntwa.n_traj = 50000\ntwa.dt = 0.1\n",
    "gauge-report": "run.engine = gauge\n",
}


def _coerce(raw: str, target, name: str, line: int):
    raw = raw.strip()
    try:
        if isinstance(target, bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if isinstance(target, int):
            return int(raw, 0)
        if isinstance(target, float):
            return float(raw)
        if isinstance(target, tuple):
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} for {name} ({type(target).__name__})", line) from None


def apply_assignment(cfg: RunConfig, key: str, value: str, line: int | None = None) -> None:
    if "." not in key:
        raise ConfigError(f"key {key!r} must have the form section.key", line)
    sec_name, attr = key.split(".", 1)
    if sec_name not in {f.name for f in dataclasses.fields(RunConfig)}:
        raise ConfigError(f"unknown section {sec_name!r}", line)
    section = getattr(cfg, sec_name)
    if attr not in {f.name for f in dataclasses.fields(section)}:
        raise ConfigError(f"unknown key {key!r}", line)
    setattr(section, attr, _coerce(value, getattr(section, attr), key, line))


def parse_config(text: str, base: RunConfig | None = None, validate_result: bool = True) -> RunConfig:
    """Parse ``section.key = value`` lines (``#`` starts a comment) on top of ``base``."""
    if base is None:
        cfg = RunConfig()
    else:
        cfg = RunConfig(**{f.name: dataclasses.replace(getattr(base, f.name)) for f in dataclasses.fields(RunConfig)})
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = body.split("=", 1)
        key = key.strip()
        if not key or not value.strip():
            raise ConfigError(f"empty key or value in {raw.strip()!r}", lineno)
        apply_assignment(cfg, key, value, lineno)
    if validate_result:
        validate(cfg)
    return cfg


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return parse_config(PRESETS[name])


def validate(cfg: RunConfig) -> RunConfig:
    """Construct every typed object the run needs so module preconditions are checked up front."""
    if cfg.run.engine not in ENGINES:
        raise ConfigError(f"run.engine must be one of {ENGINES}, got {cfg.run.engine!r}")
    if cfg.initial.channel not in (1, 2):
        raise ConfigError("initial.channel must be 1 or 2")
    if len(cfg.initial.spin0) != 3:
        raise ConfigError("initial.spin0 needs three components")
    if cfg.plan.spin_factor not in (1, 2):
        raise ConfigError("plan.spin_factor must be 1 or 2")
    if cfg.twa.workers < 1:
        raise ConfigError("twa.workers must be >= 1")
    if cfg.twa.bins < 2:
        raise ConfigError("twa.bins must be >= 2")
    if cfg.output.gauge_points < 16:
        raise ConfigError("output.gauge_points must be >= 16")
    try:
        cfg.model_params()
        cfg.grid2d()
        cfg.propagation_plan()
        cfg.ensemble_spec()
        if cfg.run.engine == "quantum":
            g = cfg.grid2d()
            lo, hi = g.x[0], g.x[-1]
            m = 5 * cfg.initial.sigma
            if min(cfg.initial.x0 - lo, hi - cfg.initial.x0, cfg.initial.y0 - lo, hi - cfg.initial.y0) < m:
                raise ValueError("initial packet is closer than 5 sigma to the grid edge")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
