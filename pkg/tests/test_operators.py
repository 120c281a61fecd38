import numpy as np
import pytest
import scipy.sparse as sp

from kvnsim import (ComplexField, Domain, RealField, SparseOperator, apply,
                    assemble_koopman_generator, assemble_kvn_generator,
                    assemble_pf_generator, build_grid, flux_divergence,
                    make_field, measure_order, pfs_norm, skewness_defect,
                    weighted_inner, weighted_norm)

UNIT = Domain.interval(0.0, 1.0)
SYM = Domain.interval(-1.0, 1.0)
DISK = Domain.disk((0, 0), 1.0)


class ToyGrid:
    """Minimal stand-in grid for hand-sized operator tests."""

    def __init__(self, n):
        self.n_cells = n
        self.volumes = np.ones(n)


def test_pf_zero_field_is_zero_matrix():
    g = build_grid(UNIT, 16)
    op = assemble_pf_generator(make_field("zero", UNIT), g)
    assert op.matrix.nnz == 0 or np.all(op.matrix.data == 0.0)


@pytest.mark.parametrize("n", [64, 128])
def test_pf_applied_to_constant_density_gives_minus_divergence(n):
    # quadratic flux: the centered flux difference reproduces div F exactly
    g = build_grid(UNIT, n)
    op = assemble_pf_generator(make_field("logistic1d", UNIT), g)
    x = g.centers[:, 0]
    result = op.matrix @ np.ones(g.n_cells)
    assert np.max(np.abs(result - (-(1.0 - 2.0 * x)))) <= 1e-13


def test_pf_mass_conservation_contraction_field():
    g = build_grid(SYM, 64)
    op = assemble_pf_generator(make_field("linear", SYM, matrix=[[-1.0]]), g)
    col_sums = np.abs(op.matrix.T @ g.volumes)
    assert np.max(col_sums) <= 1e-12


def test_koopman_zero_field_is_zero_matrix():
    g = build_grid(UNIT, 16)
    op = assemble_koopman_generator(make_field("zero", UNIT), g)
    assert op.matrix.nnz == 0 or np.all(op.matrix.data == 0.0)


def test_koopman_exact_on_linear_observable():
    g = build_grid(UNIT, 32)
    op = assemble_koopman_generator(make_field("constant", UNIT, constant=[1.0]), g)
    x = g.centers[:, 0]
    res = op.matrix @ x
    assert np.max(np.abs(res[1:-1] - 1.0)) <= 1e-12


def test_koopman_rotation_on_linear_observable():
    g = build_grid(Domain.rectangle((-1, 1), (-1, 1)), (24, 24))
    rot = make_field("rotation", Domain.rectangle((-1, 1), (-1, 1)))
    op = assemble_koopman_generator(rot, g)
    res = op.matrix @ g.centers[:, 0]
    # F . grad x = -y; differences of a linear observable are exact
    assert np.max(np.abs(res - (-g.centers[:, 1]))) <= 1e-12


def test_kvn_zero_field_is_zero():
    g = build_grid(UNIT, 16)
    op = assemble_kvn_generator(make_field("zero", UNIT), g)
    assert op.matrix.nnz == 0 or np.all(op.matrix.data == 0.0)


def test_kvn_on_constant_wavefunction_gives_half_divergence():
    g = build_grid(UNIT, 64)
    op = assemble_kvn_generator(make_field("logistic1d", UNIT), g)
    x = g.centers[:, 0]
    res = op.matrix @ np.ones(g.n_cells)
    expected = -0.5 * (1.0 - 2.0 * x)
    assert np.max(np.abs(res[2:-2] - expected[2:-2])) <= 1e-13


def test_kvn_equals_minus_koopman_for_rotation_interior():
    # each rotation velocity component is constant along its own axis, so
    # centered flux and centered advection coincide cell by cell
    g = build_grid(DISK, (48, 48))
    rot = make_field("rotation", DISK)
    A = assemble_kvn_generator(rot, g)
    K = assemble_koopman_generator(rot, g)
    rel = g.centers - [0.2, 0.1]
    psi = np.exp(-np.einsum("ij,ij->i", rel, rel) / (2 * 0.15**2))
    diff = A.matrix @ psi + K.matrix @ psi
    interior = np.linalg.norm(g.centers, axis=1) <= 0.55
    assert np.max(np.abs(diff[interior])) <= 1e-13


def test_kvn_saddle_discrepancy_second_order():
    # genuinely varying flux average: discrepancy to -Koopman decays at O(h^2)
    saddle = make_field("linear", DISK, matrix=[[1.0, 0.0], [0.0, -1.0]])
    pairs = []
    for n in (32, 64, 128):
        g = build_grid(DISK, n)
        A = assemble_kvn_generator(saddle, g)
        K = assemble_koopman_generator(saddle, g)
        rel = g.centers - [0.2, 0.1]
        psi = np.exp(-np.einsum("ij,ij->i", rel, rel) / (2 * 0.15**2))
        diff = A.matrix @ psi + K.matrix @ psi
        interior = np.linalg.norm(g.centers, axis=1) <= 0.55
        pairs.append((2.0 / n, float(np.max(np.abs(diff[interior])))))
    assert measure_order(pairs) >= 1.5


def test_apply_toy_rotation_on_complex_field():
    grid = ToyGrid(2)
    op = SparseOperator(sp.csr_matrix(np.array([[0.0, -1.0], [1.0, 0.0]])), np.ones(2))
    out = apply(op, ComplexField(grid, np.array([1.0, 1.0j])))
    assert np.allclose(out.values, [-1.0j, 1.0])


def test_apply_zero_and_dimension_mismatch():
    grid = ToyGrid(3)
    op = SparseOperator(sp.csr_matrix((3, 3)), np.ones(3))
    out = apply(op, ComplexField(grid, np.array([1.0, 2.0, 3.0 + 1j])))
    assert np.all(out.values == 0.0)
    bad = SparseOperator(sp.csr_matrix((4, 4)), np.ones(4))
    with pytest.raises(ValueError):
        apply(bad, ComplexField(grid, np.array([1.0, 2.0, 3.0])))


def test_apply_preserves_field_type():
    grid = ToyGrid(2)
    op = SparseOperator(sp.csr_matrix(np.eye(2)), np.ones(2))
    assert isinstance(apply(op, RealField(grid, np.array([1.0, 2.0]))), RealField)
    assert isinstance(apply(op, ComplexField(grid, np.array([1.0, 2.0j]))), ComplexField)


@pytest.mark.parametrize("kind,domain,resolution", [
    ("zero", UNIT, 32),
    ("constant", DISK, (24, 24)),
    ("linear", SYM, 64),
    ("rotation", DISK, (64, 64)),
    ("logistic1d", UNIT, 64),
    ("double_well_gradient", SYM, 64),
    ("harmonic_hamiltonian", DISK, (32, 32)),
])
def test_kvn_generator_exactly_skew(kind, domain, resolution):
    params = {}
    if kind == "constant":
        params["constant"] = [1.0, 0.5]
    if kind == "linear":
        params["matrix"] = [[-1.0]]
    field = make_field(kind, domain, **params)
    g = build_grid(domain, resolution)
    op = assemble_kvn_generator(field, g)
    assert skewness_defect(op) <= 1e-13


def test_pf_generator_not_skew_for_compressible_field():
    g = build_grid(UNIT, 64)
    op = assemble_pf_generator(make_field("logistic1d", UNIT), g)
    assert skewness_defect(op) > 1e-2


def test_skewness_defect_zero_matrix():
    op = SparseOperator(sp.csr_matrix((5, 5)), np.ones(5))
    assert skewness_defect(op) == 0.0


def test_dissipativity_identity_random_probes():
    g = build_grid(UNIT, 64)
    op = assemble_kvn_generator(make_field("logistic1d", UNIT), g)
    rng = np.random.default_rng(99)
    w = g.volumes
    scale = op.inf_norm()
    for _ in range(100):
        psi = rng.standard_normal(g.n_cells) + 1j * rng.standard_normal(g.n_cells)
        val = abs(np.real(weighted_inner(op.matrix @ psi, psi, w)))
        assert val <= 1e-12 * weighted_norm(psi, w) ** 2 * scale


def test_pfs_norm_zero_field_reduces_to_weighted_norm():
    g = build_grid(UNIT, 32)
    rng = np.random.default_rng(1)
    psi = ComplexField(g, rng.standard_normal(32) + 1j * rng.standard_normal(32))
    zero = make_field("zero", UNIT)
    assert pfs_norm(psi, zero, g) == pytest.approx(psi.norm(), abs=1e-14)
    null = ComplexField(g, np.zeros(32))
    assert pfs_norm(null, zero, g) == 0.0


# Oracle: quadrature of sqrt(int psi^2 + int (psi')^2) for the Gaussian
# bump exp(-(x-0.5)^2 / (2 sigma^2)), sigma = 0.1, via scipy.integrate.quad.
PFS_BUMP_ORACLE = 3.006578560242495


def test_pfs_norm_unit_speed_bump_matches_quadrature():
    g = build_grid(UNIT, 512)
    one = make_field("constant", UNIT, constant=[1.0])
    psi = ComplexField(g, np.exp(-(g.centers[:, 0] - 0.5) ** 2 / (2 * 0.1**2)) + 0j)
    val = pfs_norm(psi, one, g)
    assert val == pytest.approx(PFS_BUMP_ORACLE, rel=2e-4)


def test_green_identity_boundary_term_is_exactly_zero():
    g = build_grid(SYM, 48)
    op = assemble_pf_generator(make_field("double_well_gradient", SYM), g)
    assert op.boundary_flux_max == 0.0
    # no boundary face contributes entries: column index set only references
    # cells adjacent through interior faces; total nnz matches 4 per face
    assert op.matrix.nnz <= 4 * g.iface_left.size


def test_green_identity_residual_decays():
    field = make_field("double_well_gradient", SYM)
    from kvnsim import green_residual
    pairs = []
    for n in (64, 128, 256):
        g = build_grid(SYM, n)
        pairs.append((2.0 / n, green_residual(field, g)))
    assert measure_order(pairs) >= 0.9


def test_koopman_pf_duality_residual_decays():
    field = make_field("logistic1d", UNIT)
    pairs = []
    for n in (64, 128, 256):
        g = build_grid(UNIT, n)
        K = assemble_koopman_generator(field, g)
        M = assemble_pf_generator(field, g)
        x = g.centers[:, 0]
        f = np.exp(-(x - 0.45) ** 2 / (2 * 0.08**2))
        rho = np.exp(-(x - 0.6) ** 2 / (2 * 0.1**2))
        w = g.volumes
        r = abs(np.real(weighted_inner(K.matrix @ f, rho, w)
                        - weighted_inner(f, M.matrix @ rho, w)))
        pairs.append((1.0 / n, r))
    assert measure_order(pairs) >= 0.9


def test_flux_divergence_consistent_with_pf():
    g = build_grid(UNIT, 64)
    field = make_field("logistic1d", UNIT)
    psi = np.exp(-(g.centers[:, 0] - 0.5) ** 2 / (2 * 0.1**2))
    d = flux_divergence(field, g, psi)
    pf = assemble_pf_generator(field, g)
    assert np.allclose(d, -(pf.matrix @ psi), atol=0)


def test_assembled_matrices_have_unique_entries():
    g = build_grid(DISK, (24, 24))
    for op in (assemble_pf_generator(make_field("rotation", DISK), g),
               assemble_koopman_generator(make_field("rotation", DISK), g)):
        coo = op.matrix.tocoo()
        keys = set(zip(coo.row.tolist(), coo.col.tolist()))
        assert len(keys) == coo.nnz


def test_weighted_adjoint_involution():
    g = build_grid(UNIT, 32)
    op = assemble_pf_generator(make_field("logistic1d", UNIT), g)
    twice = op.weighted_adjoint().weighted_adjoint()
    assert abs(op.matrix - twice.matrix).max() <= 1e-15
