import dataclasses

import pytest

from kvnsim import (EXACT, REPORT_METRICS, Domain, RunArtifacts,
                    VerificationReport, assemble_kvn_generator,
                    assemble_pf_generator, build_grid, check_no_outflow,
                    classify_boundary, dissipativity_residual, make_field,
                    measure_order, verify_run)
from kvnsim.config import parse_scenario_text
from kvnsim.pipeline import check_scenario, run_scenario

SMALL_SCENARIO = """
name = diag_probe
domain.kind = interval
domain.bounds = 0.0,1.0
resolution = 48
field.kind = logistic1d
ic.kind = gaussian
ic.center = 0.5
ic.sigma = 0.08
t_end = 0.25
propagator.scheme = cayley
propagator.dt = 0.0125
oracle = true
probe_seed = 424242
"""


def test_measure_order_exact_pairs():
    assert measure_order([(0.1, 1e-2), (0.05, 2.5e-3)]) == pytest.approx(2.0, abs=1e-12)
    assert measure_order([(0.1, 1e-2), (0.05, 5e-3)]) == pytest.approx(1.0, abs=1e-12)


def test_measure_order_noisy_quadratic():
    # synthetic data C h^2 (1 + delta) with fixed perturbations
    hs = (0.1, 0.05, 0.025)
    es = (1e-2 * 1.03, 1e-2 * 0.25 * 0.98, 1e-2 * 0.0625 * 1.01)
    slope = measure_order(list(zip(hs, es)))
    assert abs(slope - 2.0) <= 0.1


def test_measure_order_exact_marker_and_rejections():
    assert measure_order([(0.1, 1e-16), (0.05, 0.0)]) == EXACT
    with pytest.raises(ValueError):
        measure_order([(0.1, 1e-2)])
    with pytest.raises(ValueError):
        measure_order([(0.05, 1e-2), (0.1, 1e-3)])
    with pytest.raises(ValueError):
        measure_order([(0.1, 1e-2), (0.05, -1e-3)])


def test_dissipativity_residual_zero_operator():
    g = build_grid(Domain.interval(0, 1), 16)
    op = assemble_kvn_generator(make_field("zero", Domain.interval(0, 1)), g)
    assert dissipativity_residual(op, seed=1) == 0.0


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    cfg = parse_scenario_text(SMALL_SCENARIO)
    return run_scenario(cfg, output_dir=tmp_path_factory.mktemp("diag"),
                        make_plots=False)


def test_report_metrics_schema_one_to_one(small_run):
    field_names = {f.name for f in dataclasses.fields(VerificationReport)}
    # every metric key is a report field
    assert set(REPORT_METRICS) <= field_names
    # every residual-valued report field is documented exactly once
    residual_fields = {
        "skewness_defect", "dissipativity_residual", "green_residual",
        "norm_drift", "born_l1_error", "oracle_l2_error",
        "boundary_flux_max", "semigroup_residual",
    }
    assert residual_fields == set(REPORT_METRICS)
    # and appears exactly once in the serialized report
    text = small_run.report.to_text()
    for name in REPORT_METRICS:
        assert text.count(f"{name}=") == 1


def test_verify_run_full_artifacts(small_run):
    rep = small_run.report
    assert rep.passed
    assert rep.no_outflow_verdict == "ok"
    assert rep.boundary_flux_max == 0.0
    assert rep.skewness_defect <= 1e-13
    assert rep.dissipativity_residual <= 1e-12
    assert rep.norm_drift is not None and rep.norm_drift <= 1e-9
    assert rep.oracle_l2_error is not None and rep.oracle_l2_error > 0
    assert rep.born_l1_error is not None
    assert rep.oracle_exit_count == 0
    assert rep.semigroup_residual <= 1e-10


def test_verify_run_is_idempotent(small_run):
    rep1 = verify_run(small_run.artifacts)
    rep2 = verify_run(small_run.artifacts)
    assert rep1.to_text() == rep2.to_text()


def test_check_scenario_reports_absent_oracle_fields(tmp_path):
    cfg = parse_scenario_text(SMALL_SCENARIO)
    out = check_scenario(cfg, output_dir=tmp_path, make_plots=False)
    rep = out.report
    assert rep.norm_drift is None
    assert rep.oracle_l2_error is None
    assert "norm_drift=absent" in rep.to_text()
    assert rep.passed


def test_verify_run_flags_non_skew_operator():
    dom = Domain.interval(0.0, 1.0)
    field = make_field("logistic1d", dom)
    grid = build_grid(dom, 32)
    classification = classify_boundary(field, grid)
    art = RunArtifacts(
        scenario="tampered",
        grid=grid,
        field=field,
        classification=classification,
        verdict=check_no_outflow(classification),
        kvn_op=assemble_pf_generator(field, grid),  # not skew
        probe_seed=7,
    )
    rep = verify_run(art)
    assert not rep.passed
    assert "skewness_defect" in rep.failures
    assert "dissipativity_residual" in rep.failures
    assert "passed=false" in rep.to_text()


def test_report_text_round_trip_values(small_run):
    rep = small_run.report
    lines = dict(line.split("=", 1) for line in rep.lines() if "=" in line)
    assert float(lines["skewness_defect"]) == rep.skewness_defect
    assert lines["scenario"] == "diag_probe"
    assert lines["passed"] == "true"
