"""Scenario configuration: flat key-value files with dotted sections.

The format is deliberately plain text, one `key = value` per line, with
`#` comments.  Lists are comma-separated; per-axis pairs are separated by
semicolons (e.g. `domain.bounds = 0,1; 0,1`).  parse -> serialize ->
parse is the identity on every well-formed config.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import VectorFieldSpec, make_field
from .geometry import Domain, Grid
from .operators import ComplexField, weighted_norm
from .propagators import PropagatorConfig

__all__ = [
    "ConfigError",
    "InitialConditionSpec",
    "ScenarioConfig",
    "parse_scenario",
    "parse_scenario_text",
    "serialize_scenario",
    "build_initial_condition",
]

IC_KINDS = ("gaussian", "smoothed_indicator", "constant")


class ConfigError(ValueError):
    """Malformed or invalid scenario configuration."""


@dataclass(frozen=True)
class InitialConditionSpec:
    kind: str = "gaussian"
    center: tuple[float, ...] = ()
    sigma: float = 0.1
    wavevector: tuple[float, ...] = ()
    radius: float = 0.25
    width: float = 0.05

    def __post_init__(self) -> None:
        if self.kind not in IC_KINDS:
            raise ConfigError(f"unknown initial condition kind {self.kind!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    domain: Domain
    resolution: tuple[int, ...]
    field: VectorFieldSpec
    ic: InitialConditionSpec
    t_end: float
    propagator: PropagatorConfig
    snapshot_times: tuple[float, ...] = ()
    oracle: bool = True
    oracle_dt: float | None = None
    output_dir: str = "out"
    probe_seed: int = 12345
    classify_tol: float = 1e-10
    dt_over_h: float | None = None

    def __post_init__(self) -> None:
        if self.t_end < 0.0:
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end}")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_end:
                raise ConfigError(
                    f"snapshot time {t} outside [0, {self.t_end}]")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip() != "")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip() != "")


def _bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("true", "1", "yes", "on"):
        return True
    if val in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _pairs(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(part) for part in text.split(";") if part.strip() != "")


def parse_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_scenario_text(text)


def parse_scenario_text(text: str) -> ScenarioConfig:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)

    consumed: set[str] = set()

    def take(key: str, default=None, required: bool = False) -> str | None:
        consumed.add(key)
        if key in entries:
            return entries[key][0]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def convert(key: str, conv, default=None, required: bool = False):
        raw = take(key, required=required)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            line = entries[key][1]
            raise ConfigError(f"{key} (line {line}): {exc}") from exc

    name = take("name", required=True)

    dom_kind = take("domain.kind", required=True)
    try:
        if dom_kind == "interval":
            bounds = convert("domain.bounds", _pairs, required=True)
            domain = Domain.interval(*bounds[0])
        elif dom_kind == "rectangle":
            bounds = convert("domain.bounds", _pairs, required=True)
            domain = Domain.rectangle(*bounds)
        elif dom_kind == "disk":
            center = convert("domain.center", _floats, default=(0.0, 0.0))
            radius = convert("domain.radius", float, required=True)
            domain = Domain.disk(center, radius)
        else:
            raise ValueError(f"unknown domain kind {dom_kind!r}")
    except ValueError as exc:
        line = entries.get("domain.kind", ("", 0))[1]
        raise ConfigError(f"domain.kind (line {line}): {exc}") from exc

    resolution = convert("resolution", _ints, required=True)
    if len(resolution) == 1 and domain.dim > 1:
        resolution = resolution * domain.dim

    field_kind = take("field.kind", required=True)
    params: dict = {}
    if (v := take("field.value")) is not None:
        params["constant"] = _floats(v)
    if (v := take("field.matrix")) is not None:
        params["matrix"] = _pairs(v)
    if (v := take("field.omega")) is not None:
        params["omega"] = float(v)
    if (v := take("field.center")) is not None:
        params["rotation_center"] = _floats(v)
    poly = []
    for c in range(domain.dim):
        key = f"field.poly.{c}"
        if (v := take(key)) is not None:
            terms = []
            for term in v.split(";"):
                vals = _floats(term)
                terms.append((vals[0], tuple(int(e) for e in vals[1:])))
            poly.append(tuple(terms))
    if poly:
        params["poly"] = tuple(poly)
    try:
        field = make_field(field_kind, domain, **params)
    except ValueError as exc:
        line = entries.get("field.kind", ("", 0))[1]
        raise ConfigError(f"field.kind (line {line}): {exc}") from exc

    ic_kind = take("ic.kind", default="gaussian")
    lo, hi = domain.bounding_box
    mid = tuple(float(x) for x in 0.5 * (lo + hi))
    try:
        ic = InitialConditionSpec(
            kind=ic_kind,
            center=convert("ic.center", _floats, default=mid),
            sigma=convert("ic.sigma", float, default=0.1),
            wavevector=convert("ic.wavevector", _floats, default=(0.0,) * domain.dim),
            radius=convert("ic.radius", float, default=0.25),
            width=convert("ic.width", float, default=0.05),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"ic.kind: {exc}") from exc

    t_end = convert("t_end", float, required=True)
    snapshots = convert("snapshots", _floats, default=())

    try:
        propagator = PropagatorConfig(
            dt=convert("propagator.dt", float, required=True),
            scheme=take("propagator.scheme", default="cayley"),
            linear_solver_tol=convert("propagator.linear_solver_tol", float, default=1e-12),
            max_dense_dim=convert("propagator.max_dense_dim", int, default=4096),
            max_solver_iterations=convert("propagator.max_solver_iterations", int, default=500),
        )
    except ValueError as exc:
        raise ConfigError(f"propagator: {exc}") from exc

    cfg = dict(
        name=name,
        domain=domain,
        resolution=resolution,
        field=field,
        ic=ic,
        t_end=t_end,
        snapshot_times=snapshots,
        propagator=propagator,
        oracle=convert("oracle", _bool, default=True),
        oracle_dt=convert("oracle.dt", float, default=None),
        output_dir=take("output_dir", default=f"out/{name}"),
        probe_seed=convert("probe_seed", int, default=12345),
        classify_tol=convert("classify.tol", float, default=1e-10),
        dt_over_h=convert("converge.dt_over_h", float, default=None),
    )

    unknown = set(entries) - consumed
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r} (line {entries[key][1]})")

    try:
        return ScenarioConfig(**cfg)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _join(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    """Canonical text form; parsing it reproduces an equal config."""
    lines = [f"name = {cfg.name}", f"domain.kind = {cfg.domain.kind}"]
    if cfg.domain.kind == "disk":
        lines.append(f"domain.center = {_join(cfg.domain.center)}")
        lines.append(f"domain.radius = {cfg.domain.radius!r}")
    else:
        lines.append("domain.bounds = " + "; ".join(_join(b) for b in cfg.domain.bounds))
    lines.append("resolution = " + ",".join(str(r) for r in cfg.resolution))
    f = cfg.field
    lines.append(f"field.kind = {f.kind}")
    if f.kind == "constant":
        lines.append(f"field.value = {_join(f.constant)}")
    if f.kind == "linear":
        lines.append("field.matrix = " + "; ".join(_join(r) for r in f.matrix))
    if f.kind == "rotation":
        lines.append(f"field.omega = {f.omega!r}")
        lines.append(f"field.center = {_join(f.rotation_center)}")
    if f.kind == "custom_polynomial":
        for c, terms in enumerate(f.poly):
            parts = [_join((coef, *exps)) for coef, exps in terms]
            lines.append(f"field.poly.{c} = " + "; ".join(parts))
    ic = cfg.ic
    lines += [
        f"ic.kind = {ic.kind}",
        f"ic.center = {_join(ic.center)}",
        f"ic.sigma = {ic.sigma!r}",
        f"ic.wavevector = {_join(ic.wavevector)}",
        f"ic.radius = {ic.radius!r}",
        f"ic.width = {ic.width!r}",
        f"t_end = {cfg.t_end!r}",
    ]
    if cfg.snapshot_times:
        lines.append(f"snapshots = {_join(cfg.snapshot_times)}")
    p = cfg.propagator
    lines += [
        f"propagator.scheme = {p.scheme}",
        f"propagator.dt = {p.dt!r}",
        f"propagator.linear_solver_tol = {p.linear_solver_tol!r}",
        f"propagator.max_dense_dim = {p.max_dense_dim}",
        f"propagator.max_solver_iterations = {p.max_solver_iterations}",
        f"oracle = {'true' if cfg.oracle else 'false'}",
    ]
    if cfg.oracle_dt is not None:
        lines.append(f"oracle.dt = {cfg.oracle_dt!r}")
    lines += [
        f"output_dir = {cfg.output_dir}",
        f"probe_seed = {cfg.probe_seed}",
        f"classify.tol = {cfg.classify_tol!r}",
    ]
    if cfg.dt_over_h is not None:
        lines.append(f"converge.dt_over_h = {cfg.dt_over_h!r}")
    return "\n".join(lines) + "\n"


def build_initial_condition(ic: InitialConditionSpec, grid: Grid):
    """Return (analytic callable, grid field), normalized to unit weighted
    norm on the grid.  The callable maps (n, d) points to complex values
    and carries the same normalization, so the characteristics oracles and
    the stepped solution share one scale."""
    d = grid.dim
    center = np.asarray(ic.center if ic.center else np.zeros(d), dtype=float)
    if center.shape != (d,):
        raise ConfigError(f"ic.center needs {d} components")
    wavevector = np.asarray(ic.wavevector if ic.wavevector else np.zeros(d), dtype=float)
    if wavevector.shape != (d,):
        raise ConfigError(f"ic.wavevector needs {d} components")

    if ic.kind == "gaussian":
        sigma = ic.sigma

        def raw(x):
            x = np.atleast_2d(x)
            rel = x - center
            r2 = np.einsum("ij,ij->i", rel, rel)
            return np.exp(-r2 / (2.0 * sigma**2)) * np.exp(1j * (x @ wavevector))
    elif ic.kind == "smoothed_indicator":
        radius, width = ic.radius, ic.width

        def raw(x):
            x = np.atleast_2d(x)
            dist = np.linalg.norm(x - center, axis=1)
            return 0.5 * (1.0 - np.tanh((dist - radius) / width)) + 0.0j
    else:  # constant

        def raw(x):
            return np.ones(np.atleast_2d(x).shape[0], dtype=np.complex128)

    values = raw(grid.centers)
    nrm = weighted_norm(values, grid.volumes)
    if nrm == 0.0:
        raise ConfigError("initial condition vanishes on the grid")
    if abs(nrm - 1.0) > 1e-12:
        scale = 1.0 / nrm

        def normalized(x, _raw=raw, _s=scale):
            return _raw(x) * _s

        return normalized, ComplexField(grid, values * scale)
    return raw, ComplexField(grid, values)
