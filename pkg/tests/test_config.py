import importlib.resources as ir

import numpy as np
import pytest

from kvnsim import (ConfigError, Domain, build_grid, build_initial_condition,
                    parse_scenario, parse_scenario_text, serialize_scenario)
from kvnsim.config import InitialConditionSpec

MINIMAL = """
name = minimal
domain.kind = interval
domain.bounds = 0.0,1.0
resolution = 32
field.kind = logistic1d
t_end = 0.5
propagator.dt = 0.01
"""


def bundled_names():
    scen = ir.files("kvnsim") / "scenarios"
    return sorted(p.name for p in scen.iterdir() if p.name.endswith(".cfg"))


def test_parse_minimal_defaults():
    cfg = parse_scenario_text(MINIMAL)
    assert cfg.name == "minimal"
    assert cfg.domain.kind == "interval"
    assert cfg.resolution == (32,)
    assert cfg.field.kind == "logistic1d"
    assert cfg.propagator.scheme == "cayley"
    assert cfg.propagator.linear_solver_tol == 1e-12
    assert cfg.oracle is True
    assert cfg.ic.kind == "gaussian"
    assert cfg.ic.center == (0.5,)
    assert cfg.output_dir == "out/minimal"


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_scenarios_round_trip(name):
    text = (ir.files("kvnsim") / "scenarios" / name).read_text()
    cfg = parse_scenario_text(text)
    assert parse_scenario_text(serialize_scenario(cfg)) == cfg


def test_parse_from_file(tmp_path):
    path = tmp_path / "scen.cfg"
    path.write_text(MINIMAL)
    assert parse_scenario(path) == parse_scenario_text(MINIMAL)


def test_unreadable_path_raises():
    with pytest.raises(ConfigError, match="cannot read"):
        parse_scenario("/nonexistent/scenario.cfg")


@pytest.mark.parametrize("mutation,message", [
    ("t_end = 0.5", None),  # control: parses
    ("", "missing required key 't_end'"),
    ("t_end = -1.0", "t_end must be nonnegative"),
    ("t_end = squid", "t_end (line"),
])
def test_t_end_validation(mutation, message):
    text = MINIMAL.replace("t_end = 0.5", mutation)
    if message is None:
        parse_scenario_text(text)
    else:
        with pytest.raises(ConfigError) as info:
            parse_scenario_text(text)
        assert message in str(info.value)


def test_malformed_line_names_line_number():
    text = MINIMAL + "\nthis line has no equals sign\n"
    with pytest.raises(ConfigError, match="line 10"):
        parse_scenario_text(text)


def test_unknown_key_named_with_line():
    text = MINIMAL + "bogus.key = 1\n"
    with pytest.raises(ConfigError, match="bogus.key"):
        parse_scenario_text(text)


def test_duplicate_key_rejected():
    text = MINIMAL + "t_end = 0.7\n"
    with pytest.raises(ConfigError, match="duplicate key"):
        parse_scenario_text(text)


def test_snapshots_outside_range_rejected():
    text = MINIMAL + "snapshots = 0.0,0.9\n"
    with pytest.raises(ConfigError, match="snapshot"):
        parse_scenario_text(text)


def test_bad_scheme_rejected():
    text = MINIMAL + "propagator.scheme = euler\n"
    with pytest.raises(ConfigError, match="scheme"):
        parse_scenario_text(text)


def test_comments_and_blanks_ignored():
    text = "# heading comment\n\n" + MINIMAL + "\n# trailing\n"
    assert parse_scenario_text(text).name == "minimal"


@pytest.mark.parametrize("kind,extra", [
    ("gaussian", {"center": (0.5,), "sigma": 0.1}),
    ("smoothed_indicator", {"center": (0.4,), "radius": 0.2, "width": 0.05}),
    ("constant", {}),
])
def test_initial_conditions_normalized(kind, extra):
    grid = build_grid(Domain.interval(0.0, 1.0), 128)
    ic = InitialConditionSpec(kind=kind, **extra)
    func, field = build_initial_condition(ic, grid)
    assert abs(field.norm() - 1.0) <= 1e-12
    # callable agrees with the stored grid samples
    assert np.allclose(func(grid.centers), field.values, atol=1e-14)


def test_gaussian_wavevector_phase():
    grid = build_grid(Domain.interval(0.0, 1.0), 64)
    ic = InitialConditionSpec(kind="gaussian", center=(0.5,), sigma=0.1,
                              wavevector=(8.0,))
    _, field = build_initial_condition(ic, grid)
    assert np.max(np.abs(field.values.imag)) > 0.01


def test_bad_ic_kind_rejected():
    with pytest.raises(ConfigError):
        InitialConditionSpec(kind="square_wave")


def test_custom_polynomial_config():
    text = """
name = poly
domain.kind = interval
domain.bounds = 0.0,1.0
resolution = 16
field.kind = custom_polynomial
field.poly.0 = 1.0,1; -1.0,3
t_end = 0.1
propagator.dt = 0.01
"""
    cfg = parse_scenario_text(text)
    assert cfg.field.kind == "custom_polynomial"
    # F(x) = x - x^3
    x = np.array([[0.5]])
    assert cfg.field.eval_many(x)[0, 0] == pytest.approx(0.375)
    assert parse_scenario_text(serialize_scenario(cfg)) == cfg
