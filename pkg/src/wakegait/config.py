"""Run configuration: strict JSON schema, validation, and round-tripping.

Configs are nested JSON blocks (wing / gait / flow / numerics / grid plus
an optional design block for the gait-design search).  Unknown keys are
rejected, omitted optional fields are filled with the documented defaults,
and saving echoes every field so load -> save -> load is the identity.
All angles are radians, lengths meters, times seconds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .morphology import GaitParams, WingGeometry, RejectedConfiguration


class ConfigError(ValueError):
    """Invalid configuration; .field names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


DESIGN_FIELDS = ("chord_proximal", "sweep_distal", "flap_amplitude",
                 "fold_amplitude", "fold_phase")

DEFAULT_BOUNDS = {
    "chord_proximal": (0.05, 0.30),
    "sweep_distal": (-0.6, 0.6),
    "flap_amplitude": (0.1, 1.2),
    "fold_amplitude": (0.0, 1.2),
    "fold_phase": (0.0, math.pi),
}

DEFAULT_ISO_THRESHOLDS = (300.0, 100.0, -300.0, -100.0)


@dataclass(frozen=True)
class GridSpec:
    """Sampling box for field output; origin/spacing None means auto.

    Auto places a 1.0 x 0.6 x 0.6 m box around the final gait cycle of
    wake, anchored to the body's end-of-run position.
    """

    origin: tuple[float, float, float] | None = None
    spacing: tuple[float, float, float] | None = None
    dims: tuple[int, int, int] = (60, 40, 40)
    iso_thresholds: tuple[float, ...] = DEFAULT_ISO_THRESHOLDS


@dataclass(frozen=True)
class DesignSpec:
    """Search definition for the gait-design problem."""

    fields: tuple[str, ...] = ("chord_proximal", "sweep_distal")
    x0: dict | None = None
    bounds: dict = field(default_factory=dict)
    budget: int = 200


@dataclass(frozen=True)
class SimConfig:
    """Everything one simulation needs; immutable and fully echoed on save."""

    wing: WingGeometry
    gait: GaitParams
    forward_speed: float = 1.0
    air_density: float = 1.225
    dt_per_cycle: int = 200
    n_cycles: int = 2
    n_warmup: int = 1
    n_keep_cycles: int = 3
    core_radius: float | None = None
    downwash_mode: str = "prandtl"
    wake_mode: str = "prescribed"
    body_mode: str = "prescribed"
    body_mass: float = 0.05
    grid: GridSpec = field(default_factory=GridSpec)
    design: DesignSpec | None = None
    seed: int = 0
    output_dir: str = "out"

    @property
    def dt(self) -> float:
        return self.gait.period / self.dt_per_cycle

    @property
    def total_steps(self) -> int:
        return self.n_cycles * self.dt_per_cycle

    def resolved_core_radius(self) -> float:
        if self.core_radius is not None:
            return self.core_radius
        mean_chord = 0.5 * (self.wing.chord_proximal + self.wing.chord_distal)
        return 0.05 * mean_chord


def _check(block: dict, path: str, known: dict) -> dict:
    """Reject unknown keys and fill defaults; known maps key -> default."""
    if not isinstance(block, dict):
        raise ConfigError(path, f"expected an object, got {type(block).__name__}")
    for key in block:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
    out = dict(known)
    out.update(block)
    return out


def _number(val, path: str, *, positive=False, nonneg=False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    v = float(val)
    if positive and not v > 0.0:
        raise ConfigError(path, f"must be > 0, got {v}")
    if nonneg and v < 0.0:
        raise ConfigError(path, f"must be >= 0, got {v}")
    return v


def _integer(val, path: str, minimum=None) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(path, f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {val}")
    return val


def _choice(val, path: str, options) -> str:
    if val not in options:
        raise ConfigError(path, f"must be one of {sorted(options)}, got {val!r}")
    return val


def _triple(val, path: str, kind=float):
    if val is None:
        return None
    if not isinstance(val, (list, tuple)) or len(val) != 3:
        raise ConfigError(path, "expected a list of 3 values")
    return tuple(kind(x) for x in val)


_WING_DEFAULTS = {"semispan_proximal": 0.05, "semispan_distal": 0.12,
                  "chord_proximal": 0.15, "chord_distal": 0.15,
                  "sweep_distal": 0.0, "n_elements_per_side": 8}
_GAIT_DEFAULTS = {"mode": "one_axis", "frequency": 2.0, "flap_amplitude": 0.6,
                  "flap_offset": 0.0, "fold_amplitude": 0.0,
                  "fold_phase": math.pi / 2, "pitch_gain": 0.0}
_FLOW_DEFAULTS = {"forward_speed": 1.0, "air_density": 1.225}
_NUM_DEFAULTS = {"dt_per_cycle": 200, "n_cycles": 2, "n_warmup": 1,
                 "n_keep_cycles": 3, "core_radius": None,
                 "downwash_mode": "prandtl", "wake_mode": "prescribed",
                 "body_mode": "prescribed", "body_mass": 0.05}
_GRID_DEFAULTS = {"origin": None, "spacing": None, "dims": [60, 40, 40],
                  "iso_thresholds": list(DEFAULT_ISO_THRESHOLDS)}
_TOP_DEFAULTS = {"wing": {}, "gait": {}, "flow": {}, "numerics": {},
                 "grid": {}, "design": None, "seed": 0, "output_dir": "out"}


def config_from_dict(raw: dict) -> SimConfig:
    """Validate a parsed JSON document into a SimConfig."""
    top = _check(raw, "config", _TOP_DEFAULTS)

    w = _check(top["wing"], "wing", _WING_DEFAULTS)
    try:
        wing = WingGeometry(
            semispan_proximal=_number(w["semispan_proximal"], "wing.semispan_proximal", positive=True),
            semispan_distal=_number(w["semispan_distal"], "wing.semispan_distal", positive=True),
            chord_proximal=_number(w["chord_proximal"], "wing.chord_proximal", positive=True),
            chord_distal=_number(w["chord_distal"], "wing.chord_distal", positive=True),
            sweep_distal=_number(w["sweep_distal"], "wing.sweep_distal"),
            n_elements_per_side=_integer(w["n_elements_per_side"], "wing.n_elements_per_side", minimum=2),
        )
    except RejectedConfiguration as exc:
        raise ConfigError("wing", str(exc)) from exc

    g = _check(top["gait"], "gait", _GAIT_DEFAULTS)
    try:
        gait = GaitParams(
            mode=_choice(g["mode"], "gait.mode", {"one_axis", "three_axes"}),
            frequency=_number(g["frequency"], "gait.frequency", positive=True),
            flap_amplitude=_number(g["flap_amplitude"], "gait.flap_amplitude", nonneg=True),
            flap_offset=_number(g["flap_offset"], "gait.flap_offset"),
            fold_amplitude=_number(g["fold_amplitude"], "gait.fold_amplitude", nonneg=True),
            fold_phase=_number(g["fold_phase"], "gait.fold_phase"),
            pitch_gain=_number(g["pitch_gain"], "gait.pitch_gain"),
        )
    except RejectedConfiguration as exc:
        raise ConfigError("gait", str(exc)) from exc

    f = _check(top["flow"], "flow", _FLOW_DEFAULTS)
    num = _check(top["numerics"], "numerics", _NUM_DEFAULTS)
    n_cycles = _integer(num["n_cycles"], "numerics.n_cycles", minimum=1)
    n_warmup = _integer(num["n_warmup"], "numerics.n_warmup", minimum=0)
    if not n_cycles > n_warmup:
        raise ConfigError("numerics.n_warmup", f"need n_cycles > n_warmup, got {n_cycles} <= {n_warmup}")
    core = num["core_radius"]
    if core is not None:
        core = _number(core, "numerics.core_radius", positive=True)

    gr = _check(top["grid"], "grid", _GRID_DEFAULTS)
    dims = _triple(gr["dims"], "grid.dims", kind=int)
    if dims is None or min(dims) < 3:
        raise ConfigError("grid.dims", "need at least 3 points per axis")
    spacing = _triple(gr["spacing"], "grid.spacing")
    if spacing is not None and min(spacing) <= 0.0:
        raise ConfigError("grid.spacing", "must be positive")
    iso = gr["iso_thresholds"]
    if not isinstance(iso, (list, tuple)) or not iso:
        raise ConfigError("grid.iso_thresholds", "expected a non-empty list")
    grid = GridSpec(origin=_triple(gr["origin"], "grid.origin"),
                    spacing=spacing, dims=dims,
                    iso_thresholds=tuple(float(x) for x in iso))

    design = None
    if top["design"] is not None:
        d = _check(top["design"], "design",
                   {"fields": list(DesignSpec.fields), "x0": None,
                    "bounds": {}, "budget": 200})
        fields = d["fields"]
        if not isinstance(fields, (list, tuple)) or not fields:
            raise ConfigError("design.fields", "expected a non-empty list")
        for name in fields:
            if name not in DESIGN_FIELDS:
                raise ConfigError(f"design.fields.{name}",
                                  f"not a design field (allowed: {DESIGN_FIELDS})")
        bounds = {}
        for name, pair in dict(d["bounds"] or {}).items():
            if name not in DESIGN_FIELDS:
                raise ConfigError(f"design.bounds.{name}", "not a design field")
            lo, hi = (_number(x, f"design.bounds.{name}") for x in pair)
            if not lo < hi:
                raise ConfigError(f"design.bounds.{name}", "need lo < hi")
            bounds[name] = (lo, hi)
        x0 = d["x0"]
        if x0 is not None:
            x0 = {k: _number(v, f"design.x0.{k}") for k, v in dict(x0).items()}
            for name in x0:
                if name not in fields:
                    raise ConfigError(f"design.x0.{name}", "not among design.fields")
        design = DesignSpec(fields=tuple(fields), x0=x0, bounds=bounds,
                            budget=_integer(d["budget"], "design.budget", minimum=1))

    return SimConfig(
        wing=wing,
        gait=gait,
        forward_speed=_number(f["forward_speed"], "flow.forward_speed", positive=True),
        air_density=_number(f["air_density"], "flow.air_density", positive=True),
        dt_per_cycle=_integer(num["dt_per_cycle"], "numerics.dt_per_cycle", minimum=50),
        n_cycles=n_cycles,
        n_warmup=n_warmup,
        n_keep_cycles=_integer(num["n_keep_cycles"], "numerics.n_keep_cycles", minimum=1),
        core_radius=core,
        downwash_mode=_choice(num["downwash_mode"], "numerics.downwash_mode",
                              {"prandtl", "paper_literal"}),
        wake_mode=_choice(num["wake_mode"], "numerics.wake_mode", {"free", "prescribed"}),
        body_mode=_choice(num["body_mode"], "numerics.body_mode", {"prescribed", "point_mass"}),
        body_mass=_number(num["body_mass"], "numerics.body_mass", positive=True),
        grid=grid,
        design=design,
        seed=_integer(top["seed"], "config.seed"),
        output_dir=str(top["output_dir"]),
    )


def config_to_dict(config: SimConfig) -> dict:
    """Full echo of a config, defaults included, in schema order."""
    out = {
        "wing": {
            "semispan_proximal": config.wing.semispan_proximal,
            "semispan_distal": config.wing.semispan_distal,
            "chord_proximal": config.wing.chord_proximal,
            "chord_distal": config.wing.chord_distal,
            "sweep_distal": config.wing.sweep_distal,
            "n_elements_per_side": config.wing.n_elements_per_side,
        },
        "gait": {
            "mode": config.gait.mode,
            "frequency": config.gait.frequency,
            "flap_amplitude": config.gait.flap_amplitude,
            "flap_offset": config.gait.flap_offset,
            "fold_amplitude": config.gait.fold_amplitude,
            "fold_phase": config.gait.fold_phase,
            "pitch_gain": config.gait.pitch_gain,
        },
        "flow": {
            "forward_speed": config.forward_speed,
            "air_density": config.air_density,
        },
        "numerics": {
            "dt_per_cycle": config.dt_per_cycle,
            "n_cycles": config.n_cycles,
            "n_warmup": config.n_warmup,
            "n_keep_cycles": config.n_keep_cycles,
            "core_radius": config.core_radius,
            "downwash_mode": config.downwash_mode,
            "wake_mode": config.wake_mode,
            "body_mode": config.body_mode,
            "body_mass": config.body_mass,
        },
        "grid": {
            "origin": list(config.grid.origin) if config.grid.origin else None,
            "spacing": list(config.grid.spacing) if config.grid.spacing else None,
            "dims": list(config.grid.dims),
            "iso_thresholds": list(config.grid.iso_thresholds),
        },
        "design": None,
        "seed": config.seed,
        "output_dir": config.output_dir,
    }
    if config.design is not None:
        out["design"] = {
            "fields": list(config.design.fields),
            "x0": dict(config.design.x0) if config.design.x0 is not None else None,
            "bounds": {k: list(v) for k, v in sorted(config.design.bounds.items())},
            "budget": config.design.budget,
        }
    return out


def load_config(path) -> SimConfig:
    """Load and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(raw)


def save_config(config: SimConfig, path) -> None:
    """Write the fully-echoed canonical form (stable bytes)."""
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def apply_design_values(config: SimConfig, values: dict) -> SimConfig:
    """Return a config with design-field values substituted in."""
    wing_updates = {}
    gait_updates = {}
    for name, val in values.items():
        if name not in DESIGN_FIELDS:
            raise ConfigError(f"design.{name}", "not a design field")
        if name in ("chord_proximal", "sweep_distal"):
            wing_updates[name] = float(val)
        else:
            gait_updates[name] = float(val)
    wing = replace(config.wing, **wing_updates) if wing_updates else config.wing
    gait = replace(config.gait, **gait_updates) if gait_updates else config.gait
    return replace(config, wing=wing, gait=gait)
