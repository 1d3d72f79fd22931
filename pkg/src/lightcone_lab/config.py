"""Experiment configuration: a flat INI file with one table per concern.

All physical quantities are in natural units (hbar = mass = 1).  The same
validation rules gate both the CLI and programmatic use: resolution of the
smearing width, the box-size rule against the propagation horizon, the decay
exponent constraint, and the dense-path capacity caps.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grids import bracket

EXPERIMENT_KINDS = (
    "onebody-scan",
    "propagation-norm",
    "manybody-scan",
    "condexp-check",
    "constants-report",
    "clustering",
    "volume-convergence",
)

DENSE_STATE_CAP = 4096
MODE_CAP = 14
DEFAULT_MAX_POINTS = 10_000


def _floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    # grid
    dimension: int = 1
    points_per_axis: int = 256
    box_length: float = 64.0
    # one-body model
    kappa: float = 0.5
    potential: str = "zero"
    potential_amplitude: float = 1.0
    potential_smoothness: int = 12
    sigma: float = 1.0
    smearing_center: tuple[float, ...] = (0.0,)
    # interaction
    interaction_kind: str = "zero"
    interaction_strength: float = 0.0
    interaction_width: float = 1.0
    interaction_decay_power: int = 4
    # modes
    mode_count: int = 8
    mode_spacing: float = 2.0
    mode_profile_power: float = 0.8
    centers: list[float] = field(default_factory=list)
    quad_weight: float = 2.0
    # sweeps
    t_list: list[float] = field(default_factory=lambda: [0.5, 1.0])
    distance_list: list[float] = field(default_factory=lambda: [4.0, 8.0])
    b_list: list[float] = field(default_factory=lambda: [1.0])
    volume_sizes: list[int] = field(default_factory=lambda: [2, 4, 6])
    n: int = 4
    delta: float = 0.5
    E: float = 4.0
    alpha: float = 2.0
    r: float = 2.0
    # output
    out_dir: str = "out"
    max_points: int = DEFAULT_MAX_POINTS
    jobs: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        return cls.from_parser(parser)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser) -> "ExperimentConfig":
        cfg = cls(kind=parser.get("experiment", "kind", fallback="onebody-scan"))
        exp = parser["experiment"] if parser.has_section("experiment") else {}
        cfg.seed = int(exp.get("seed", cfg.seed))
        if parser.has_section("grid"):
            g = parser["grid"]
            cfg.dimension = int(g.get("dimension", cfg.dimension))
            cfg.points_per_axis = int(g.get("points_per_axis", cfg.points_per_axis))
            cfg.box_length = float(g.get("box_length", cfg.box_length))
        if parser.has_section("model"):
            m = parser["model"]
            cfg.kappa = float(m.get("kappa", cfg.kappa))
            cfg.potential = m.get("potential", cfg.potential)
            cfg.potential_amplitude = float(
                m.get("potential_amplitude", cfg.potential_amplitude)
            )
            cfg.potential_smoothness = int(
                m.get("potential_smoothness", cfg.potential_smoothness)
            )
            cfg.sigma = float(m.get("sigma", cfg.sigma))
            if "smearing_center" in m:
                cfg.smearing_center = tuple(_floats(m["smearing_center"]))
        if parser.has_section("interaction"):
            w = parser["interaction"]
            cfg.interaction_kind = w.get("kind", cfg.interaction_kind)
            cfg.interaction_strength = float(w.get("strength", cfg.interaction_strength))
            cfg.interaction_width = float(w.get("width", cfg.interaction_width))
            cfg.interaction_decay_power = int(
                w.get("decay_power", cfg.interaction_decay_power)
            )
        if parser.has_section("modes"):
            mo = parser["modes"]
            cfg.mode_count = int(mo.get("count", cfg.mode_count))
            cfg.mode_spacing = float(mo.get("spacing", cfg.mode_spacing))
            cfg.mode_profile_power = float(
                mo.get("profile_power", cfg.mode_profile_power)
            )
            if "centers" in mo:
                cfg.centers = _floats(mo["centers"])
            cfg.quad_weight = float(mo.get("quad_weight", cfg.quad_weight))
        if parser.has_section("sweeps"):
            s = parser["sweeps"]
            if "t" in s:
                cfg.t_list = _floats(s["t"])
            if "distance" in s:
                cfg.distance_list = _floats(s["distance"])
            if "b" in s:
                cfg.b_list = _floats(s["b"])
            if "volumes" in s:
                cfg.volume_sizes = [int(v) for v in _floats(s["volumes"])]
            cfg.n = int(s.get("n", cfg.n))
            cfg.delta = float(s.get("delta", cfg.delta))
            cfg.E = float(s.get("E", cfg.E))
            cfg.alpha = float(s.get("alpha", cfg.alpha))
            cfg.r = float(s.get("r", cfg.r))
        if parser.has_section("output"):
            o = parser["output"]
            cfg.out_dir = o.get("directory", cfg.out_dir)
            cfg.max_points = int(o.get("max_points", cfg.max_points))
        return cfg

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    def horizon(self) -> float:
        """Largest light-cone radius probed across the time sweep."""
        tmax = max((abs(t) for t in self.t_list), default=0.0)
        return bracket(tmax) ** (1 + (1 + 2 * self.delta) / max(self.n, 1))

    def echo(self) -> dict:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, (list, tuple)):
                out[key] = list(val)
            else:
                out[key] = val
        return out


def validate(cfg: ExperimentConfig) -> list[str]:
    """Return the list of violated preconditions (empty means runnable)."""
    violations: list[str] = []
    if cfg.kind not in EXPERIMENT_KINDS:
        violations.append(f"unknown experiment kind {cfg.kind!r}")
    if cfg.dimension not in (1, 2):
        violations.append("dimension must be 1 or 2")
    P = cfg.points_per_axis
    if P < 2 or (P & (P - 1)) != 0:
        violations.append("points_per_axis must be a power of two")
    if not cfg.t_list:
        violations.append("time sweep is empty")
    if cfg.kind in ("onebody-scan", "propagation-norm", "manybody-scan") and not cfg.distance_list:
        violations.append("distance sweep is empty")
    if cfg.sigma < 2 * cfg.spacing:
        violations.append(
            f"sigma = {cfg.sigma} below the resolution floor 2h = {2 * cfg.spacing}"
        )
    n_v_half = cfg.potential_smoothness / 2
    if cfg.n > min(n_v_half, cfg.interaction_decay_power):
        violations.append(
            f"n = {cfg.n} violates n <= min(n_V/2, n_W) = "
            f"{min(n_v_half, cfg.interaction_decay_power)}"
        )
    max_dist = max(cfg.distance_list, default=0.0)
    needed = 4 * (max_dist + cfg.horizon())
    if cfg.kind in ("onebody-scan", "propagation-norm") and cfg.box_length < needed:
        violations.append(
            f"box_length = {cfg.box_length} below the wrap-safety rule "
            f"4*(max distance + horizon) = {needed:.3g}"
        )
    if cfg.kind in (
        "onebody-scan",
        "propagation-norm",
        "manybody-scan",
        "clustering",
        "volume-convergence",
        "condexp-check",
    ):
        if P**cfg.dimension > DENSE_STATE_CAP:
            violations.append(
                f"grid has {P**cfg.dimension} states, above the dense cap "
                f"{DENSE_STATE_CAP}; functional calculus unavailable"
            )
    if cfg.mode_count > MODE_CAP:
        violations.append(f"mode count {cfg.mode_count} exceeds {MODE_CAP}")
    if cfg.kind in ("manybody-scan", "clustering", "volume-convergence", "condexp-check"):
        if 2**cfg.mode_count > DENSE_STATE_CAP:
            violations.append(
                f"2^M = {2**cfg.mode_count} exceeds the dense evolution cap"
            )
    n_points = max(1, len(cfg.t_list)) * max(1, len(cfg.distance_list))
    if n_points > cfg.max_points:
        violations.append(f"sweep has {n_points} points, above max_points={cfg.max_points}")
    return violations
