"""INI experiment configuration.

Sections only group keys for readability; every key is a field of
:class:`ExperimentConfig` and must be unique across sections.  The
``[sweep]`` section maps field names to comma-separated value lists; the
planned runs are the Cartesian product in the order the axes appear.
"""

from __future__ import annotations

import configparser
import dataclasses
import itertools
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import generators

TASKS = (
    "ml_identities",
    "smoothing",
    "l1_order",
    "cross_solver",
    "roundtrip",
    "stability",
    "gronwall",
    "noise",
    "forward",
)


class ConfigError(ValueError):
    """Parse or validation failure; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    task: str = "roundtrip"
    kind: str = "source"
    # time
    alpha: float = 0.5
    T: float = 1.0
    n_steps: int = 1024
    data_refine: int = 4
    data_solver: str = "l1"
    # space
    L: float = 1.0
    n_cells: int = 256
    n_modes: int = 64
    sigma_left: float = 0.0
    sigma_right: float = 0.0
    # problem generators
    a: str = "const value=1"
    R: str = "phi1"
    q: str = "const value=1"
    v0: str = "phi1"
    f: str = "one"
    # inverse
    x0: float = 0.5
    delta: float = 0.1
    gamma: float = 0.5
    presmooth: int = 0
    p: float = 2.0
    M: float = 2.0
    # noise
    noise: float = 0.0
    seed: int = 0
    # task knobs
    n_pairs: int = 20
    n_instances: int = 500
    levels: str = ""
    threshold: float = math.nan
    out: str = ""
    sweep: tuple = field(default=(), compare=False)

    def points(self) -> list["ExperimentConfig"]:
        """One config per sweep point; a config without axes is its own single point."""
        if not self.sweep:
            return [replace(self, sweep=())]
        names = [k for k, _ in self.sweep]
        out = []
        for combo in itertools.product(*(vals for _, vals in self.sweep)):
            out.append(replace(self, sweep=(), **dict(zip(names, combo))))
        return out

    @property
    def sweep_names(self) -> list[str]:
        return [k for k, _ in self.sweep]

    def level_list(self) -> list[float]:
        return [float(v) for v in self.levels.split()] if self.levels.strip() else []


_FIELDS = {f.name: f for f in fields(ExperimentConfig) if f.name != "sweep"}
_GEN_KINDS = ("a", "R", "q", "v0", "f")


def _coerce(name: str, raw: str):
    typ = _FIELDS[name].type
    raw = raw.strip()
    if typ == "int":
        v = float(raw)
        if v != int(v):
            raise ValueError(f"{name} must be an integer, got {raw!r}")
        return int(v)
    if typ == "float":
        return float(raw)
    return raw


def validate(cfg: ExperimentConfig) -> list[str]:
    """All violations for one concrete config (empty when valid)."""
    bad = []
    if cfg.task not in TASKS:
        bad.append(f"task: unknown task {cfg.task!r}")
    if cfg.kind not in ("source", "potential"):
        bad.append(f"kind: must be source or potential, got {cfg.kind!r}")
    if not (0.0 < cfg.alpha < 1.0):
        bad.append(f"alpha: must lie in (0, 1), got {cfg.alpha}")
    if not (cfg.T > 0 and math.isfinite(cfg.T)):
        bad.append(f"T: must be positive, got {cfg.T}")
    if cfg.n_steps < 2:
        bad.append(f"n_steps: must be >= 2, got {cfg.n_steps}")
    if cfg.data_refine < 1:
        bad.append(f"data_refine: must be >= 1, got {cfg.data_refine}")
    if cfg.data_solver not in ("l1", "spectral"):
        bad.append(f"data_solver: must be l1 or spectral, got {cfg.data_solver!r}")
    if not (cfg.L > 0):
        bad.append(f"L: must be positive, got {cfg.L}")
    if cfg.n_cells < 4:
        bad.append(f"n_cells: must be >= 4, got {cfg.n_cells}")
    if cfg.n_modes < 1 or cfg.n_modes > cfg.n_cells - 1:
        bad.append(f"n_modes: must lie in 1..n_cells-1, got {cfg.n_modes}")
    for s in ("sigma_left", "sigma_right"):
        v = getattr(cfg, s)
        if not (0.0 <= v <= 1.0):
            bad.append(f"{s}: must lie in [0, 1], got {v}")
    if not (0.0 <= cfg.x0 <= cfg.L):
        bad.append(f"x0: must lie in [0, L] = [0, {cfg.L}], got {cfg.x0}")
    if not (cfg.delta > 0):
        bad.append(f"delta: must be positive, got {cfg.delta}")
    if not (0.25 < cfg.gamma < 1.0) and cfg.task != "smoothing":
        bad.append(f"gamma: must lie in (0.25, 1), got {cfg.gamma}")
    if cfg.task == "smoothing" and not (0.0 <= cfg.gamma < 1.0):
        bad.append(f"gamma: must lie in [0, 1), got {cfg.gamma}")
    if cfg.presmooth < 0:
        bad.append(f"presmooth: must be >= 0, got {cfg.presmooth}")
    if not (cfg.p >= 1):
        bad.append(f"p: must be >= 1, got {cfg.p}")
    if not (cfg.M > 0):
        bad.append(f"M: must be positive, got {cfg.M}")
    if not (cfg.noise >= 0):
        bad.append(f"noise: must be >= 0, got {cfg.noise}")
    if cfg.n_pairs < 1:
        bad.append(f"n_pairs: must be >= 1, got {cfg.n_pairs}")
    if cfg.n_instances < 1:
        bad.append(f"n_instances: must be >= 1, got {cfg.n_instances}")
    try:
        cfg.level_list()
    except ValueError:
        bad.append(f"levels: expected space-separated numbers, got {cfg.levels!r}")
    for kind in _GEN_KINDS:
        try:
            spec = generators.parse_spec(getattr(cfg, kind))
        except ValueError as exc:
            bad.append(f"{kind}: {exc}")
            continue
        if not generators.known(kind, spec):
            bad.append(f"{kind}: unknown generator {spec.name!r}")
    return bad


def parse_config(path) -> ExperimentConfig:
    """Read and validate an INI file, reporting every violation at once."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError([f"{path}: parse error: {exc}"]) from exc
    return from_parser(parser, str(path))


def parse_config_string(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    return from_parser(parser, "<string>")


def from_parser(parser: configparser.ConfigParser, origin: str) -> ExperimentConfig:
    problems = []
    values = {}
    seen = {}
    sweep = []
    for section in parser.sections():
        for key, raw in parser.items(section):
            if section == "sweep":
                if key not in _FIELDS or key in ("sweep", "name", "task", "out"):
                    problems.append(f"sweep.{key}: not a sweepable field")
                    continue
                items = [s.strip().strip("'\"") for s in raw.split(",") if s.strip()]
                if not items:
                    problems.append(f"sweep.{key}: empty axis")
                    continue
                try:
                    sweep.append((key, tuple(_coerce(key, s) for s in items)))
                except ValueError as exc:
                    problems.append(f"sweep.{key}: {exc}")
                continue
            if key not in _FIELDS:
                problems.append(f"{section}.{key}: unknown field")
                continue
            if key in seen:
                problems.append(f"{section}.{key}: duplicates {seen[key]}.{key}")
                continue
            seen[key] = section
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                problems.append(f"{section}.{key}: {exc}")
    if problems:
        raise ConfigError([f"{origin}: {p}" for p in problems])
    cfg = ExperimentConfig(**values, sweep=tuple(sweep))
    for pt in cfg.points():
        for p in validate(pt):
            msg = f"{origin}: {p}"
            if pt.sweep_names or cfg.sweep:
                axes = ", ".join(f"{k}={getattr(pt, k)}" for k in cfg.sweep_names)
                msg += f" (at {axes})"
            if msg not in problems:
                problems.append(msg)
    if problems:
        raise ConfigError(problems)
    return cfg


def as_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d.pop("sweep")
    return d
