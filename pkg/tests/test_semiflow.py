import math

import numpy as np
import pytest

from kvnsim import Domain, check_semigroup, flow_map, integrate, make_field

SYM = Domain.interval(-1.0, 1.0)
UNIT = Domain.interval(0.0, 1.0)
DISK = Domain.disk((0, 0), 1.0)
DECAY = make_field("linear", SYM, matrix=[[-1.0]])
ROT = make_field("rotation", DISK)


def test_zero_field_is_identity():
    f = make_field("zero", UNIT)
    traj = integrate(f, UNIT, [0.3], 1.0, 1e-2)
    assert np.all(traj.states == 0.3)
    assert np.all(traj.divergence_integral == 0.0)
    assert traj.viability_violations == 0


def test_time_zero_is_identity_exactly():
    traj = integrate(DECAY, SYM, [0.7], 0.0, 1e-3)
    assert traj.times.shape == (1,)
    assert traj.states[0, 0] == 0.7
    assert traj.divergence_integral[0] == 0.0


def test_decay_matches_exponential():
    traj = integrate(DECAY, SYM, [1.0], 1.0, 1e-3)
    assert abs(traj.final_state[0] - math.exp(-1.0)) <= 1e-8
    assert abs(traj.divergence_integral[-1] - (-1.0)) <= 1e-8
    assert traj.viability_violations == 0


def test_rotation_period():
    traj = integrate(ROT, DISK, [1.0, 0.0], 2 * math.pi, 1e-3)
    assert np.linalg.norm(traj.final_state - [1.0, 0.0]) <= 1e-6
    assert traj.viability_violations == 0


def test_trajectory_invariants():
    traj = integrate(make_field("logistic1d", UNIT), UNIT, [0.2], 2.0, 1e-2)
    assert traj.times[0] == 0.0
    assert np.all(np.diff(traj.times) > 0)
    tol = 1e-9 * UNIT.diameter
    assert np.max(UNIT.exterior_distance(traj.states)) <= tol


def test_semigroup_zero_field_exact():
    f = make_field("zero", UNIT)
    assert check_semigroup(f, UNIT, [0.4], 0.3, 0.6, 1e-2) == 0.0


def test_semigroup_decay():
    # s and t are exact step multiples: identical float paths, residual 0
    assert check_semigroup(DECAY, SYM, [1.0], 0.5, 0.5, 1e-3) <= 1e-10


def test_semigroup_rotation():
    res = check_semigroup(ROT, DISK, [1.0, 0.0], 1.0, 2.0, 1e-3)
    assert res <= 1e-8


def test_rk4_fourth_order_on_decay():
    errs = {}
    for dt in (0.05, 0.025):
        traj = integrate(DECAY, SYM, [1.0], 1.0, dt)
        errs[dt] = abs(traj.final_state[0] - math.exp(-1.0))
    ratio = errs[0.05] / errs[0.025]
    assert 14.0 <= ratio <= 18.0


@pytest.mark.parametrize("field,domain,x0", [
    (make_field("logistic1d", UNIT), UNIT, [0.9]),
    (ROT, DISK, [0.999, 0.0]),
    (make_field("double_well_gradient", SYM), SYM, [0.95]),
])
def test_viability_no_violations_for_no_outflow_fields(field, domain, x0):
    traj = integrate(field, domain, x0, 2.0, 1e-3)
    assert traj.viability_violations == 0


def test_projection_counts_violations_for_outflow_field():
    f = make_field("linear", SYM, matrix=[[1.0]])
    traj = integrate(f, SYM, [0.9], 2.0, 1e-2)
    assert traj.viability_violations > 0
    assert abs(traj.final_state[0]) <= 1.0 + 1e-12


def test_flow_map_batch_matches_single():
    x0 = np.array([[0.2], [0.5], [0.8]])
    res = flow_map(make_field("logistic1d", UNIT), UNIT, x0, 1.0, 1e-3)
    for k in range(3):
        traj = integrate(make_field("logistic1d", UNIT), UNIT, x0[k], 1.0, 1e-3)
        assert np.allclose(res.states[k], traj.final_state, atol=1e-14)
        assert res.divergence_integral[k] == pytest.approx(
            traj.divergence_integral[-1], abs=1e-14)


def test_flow_map_backward_exit_flagging():
    # backward flow of the contraction is expansion: points with |x| > 1/e
    # leave [-1, 1] within unit time
    x0 = np.array([[0.2], [0.5], [-0.9]])
    res = flow_map(DECAY, SYM, x0, 1.0, 1e-3, sign=-1.0, allow_exit=True)
    assert not res.exited[0]
    assert res.exited[1] and res.exited[2]
    assert abs(res.states[0, 0] - 0.2 * math.e) <= 1e-10


def test_integrate_validation():
    with pytest.raises(ValueError):
        integrate(DECAY, SYM, [1.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(DECAY, SYM, [1.0], 1.0, -1e-3)
    with pytest.raises(ValueError):
        integrate(DECAY, SYM, [1.5], 1.0, 1e-3)


def test_non_multiple_t_end_reaches_final_time():
    traj = integrate(DECAY, SYM, [1.0], 0.085, 0.01)
    assert traj.times[-1] == pytest.approx(0.085, abs=1e-12)
    assert abs(traj.final_state[0] - math.exp(-0.085)) <= 1e-9
