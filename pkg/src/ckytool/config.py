"""Run configuration: a YAML file validated completely before any computation."""

from __future__ import annotations

import dataclasses
import inspect
from dataclasses import dataclass, field

import yaml

from . import forms as fm
from . import shapes
from .charts import SpacetimeId
from .flow import PHI_MODES, FlowConfig
from .suites import VERIFY_SUITES, SurfaceJob

SURFACE_KINDS = {
    "sphere": shapes.sphere,
    "cap": shapes.cap,
    "ellipsoid": shapes.ellipsoid,
    "graph": shapes.graph,
    "ellipsoidal_cap": shapes.ellipsoidal_cap,
}
FLOW_KEYS = tuple(f.name for f in dataclasses.fields(FlowConfig)) + ("expect_constant",)
FORM_KEYS = ("name", "i", "l")


class ConfigError(ValueError):
    """Invalid configuration; the CLI exits with code 2."""


@dataclass
class RunConfig:
    spacetime: str = "minkowski"
    seed: int = 0
    order: int = 16
    points: int = 100
    tangency_points: int = 200
    workers: int = 1
    out: str = "ckytool-out"
    surface: dict = field(default_factory=lambda: {"kind": "cap"})
    form: dict = field(default_factory=lambda: {"name": "composite"})
    flow: dict = field(default_factory=dict)
    suites: list = field(default_factory=lambda: list(VERIFY_SUITES))
    expect_fail: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def spacetime_id(self) -> SpacetimeId:
        return SpacetimeId.parse(self.spacetime)

    def surface_params(self) -> dict:
        p = {k: v for k, v in self.surface.items() if k != "kind"}
        kind = self.surface["kind"]
        if "l" in inspect.signature(SURFACE_KINDS[kind]).parameters and p.get("l") is None:
            p["l"] = self.form.get("l")
        return p

    def build_surface(self):
        return shapes.make_surface(self.surface["kind"], self.spacetime_id, **self.surface_params())

    def flow_config(self) -> FlowConfig:
        return FlowConfig(**{k: v for k, v in self.flow.items() if k != "expect_constant"})

    def job(self) -> SurfaceJob:
        surf = self.build_surface()
        i = self.form.get("i")
        if i is None:
            i = surf.axis if surf.axis else 3
        l = self.form.get("l")
        if l is None and surf.support is not None and surf.support.l is not None:
            l = surf.support.l
        return SurfaceJob(
            surface=surf,
            order=self.order,
            i=int(i),
            l=l,
            expect_fail=tuple(self.expect_fail),
            n_points=self.tangency_points,
            seed=self.seed,
            flow=self.flow_config(),
            expect_constant=bool(self.flow.get("expect_constant", False)),
        )


def _check_keys(section: str, got: dict, allowed) -> None:
    if not isinstance(got, dict):
        raise ConfigError(f"{section} must be a mapping")
    extra = sorted(set(got) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(map(str, extra))}")


def validate(cfg: RunConfig) -> RunConfig:
    try:
        cfg.spacetime = SpacetimeId.parse(cfg.spacetime).value
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("seed", "order", "points", "tangency_points", "workers"):
        v = getattr(cfg, key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    if cfg.order < 2:
        raise ConfigError("order must be at least 2")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")

    if not isinstance(cfg.surface, dict):
        raise ConfigError("surface must be a mapping")
    kind = cfg.surface.get("kind", "cap")
    if kind not in SURFACE_KINDS:
        raise ConfigError(f"unknown surface kind {kind!r}; expected one of {sorted(SURFACE_KINDS)}")
    cfg.surface = dict(cfg.surface, kind=kind)
    params = set(inspect.signature(SURFACE_KINDS[kind]).parameters) - {"spacetime"}
    _check_keys(f"surface ({kind})", cfg.surface, params | {"kind", "null_shift"})

    _check_keys("form", cfg.form, FORM_KEYS)
    cfg.form = {"name": "composite", "i": None, "l": None, **cfg.form}
    if cfg.form["i"] is not None and cfg.form["i"] not in (1, 2, 3):
        raise ConfigError("form.i must be 1, 2 or 3")
    try:
        known = ["composite"] + [e.name for e in fm.catalog(cfg.spacetime_id, cfg.form["l"])]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.form["name"] not in known:
        raise ConfigError(f"unknown form {cfg.form['name']!r}; expected 'composite' or a catalog entry")

    _check_keys("flow", cfg.flow, FLOW_KEYS)
    if "phi_mode" in cfg.flow and cfg.flow["phi_mode"] not in PHI_MODES:
        raise ConfigError(f"flow.phi_mode must be one of {PHI_MODES}")

    if not isinstance(cfg.suites, list) or any(s not in VERIFY_SUITES for s in cfg.suites):
        raise ConfigError(f"suites must be a list drawn from {list(VERIFY_SUITES)}")
    if not isinstance(cfg.expect_fail, list):
        raise ConfigError("expect_fail must be a list of item keys")

    # Build once so bad parameter values surface as configuration errors.
    try:
        cfg.flow_config()
        cfg.build_surface()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def from_mapping(data: dict | None) -> RunConfig:
    data = {} if data is None else data
    names = {f.name for f in dataclasses.fields(RunConfig)}
    _check_keys("config", data, names)
    return validate(RunConfig(**data))


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return from_mapping(data)
