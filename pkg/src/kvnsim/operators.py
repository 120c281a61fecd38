"""Sparse discrete generators for density and observable transport.

Three operators share one finite-volume skeleton on a cell-centered grid
with the volume-weighted inner product <u, v>_w = sum_i w_i conj(u_i) v_i:

* the density-transport (Perron-Frobenius) generator, a conservative flux
  form of -div(. F) with centered face averages and exactly zero flux
  through every boundary face;
* the observable-transport (Koopman) generator, centered-difference
  advection F . grad with one-sided differences next to the boundary;
* the wavefunction generator, defined algebraically as the skew part of
  the density generator under the weighted inner product.  Skew-symmetry
  therefore holds to rounding by construction, independent of stencil
  truncation error, which is what makes Cayley time stepping exactly
  norm-preserving.

The zero-flux closure encodes both the no-outflow wall and zero inflow
data in one stroke, and makes the discrete boundary term of the
integration-by-parts identity vanish identically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fields import VectorFieldSpec
from .geometry import Grid

__all__ = [
    "ComplexField",
    "RealField",
    "SparseOperator",
    "assemble_pf_generator",
    "assemble_koopman_generator",
    "assemble_kvn_generator",
    "apply",
    "skewness_defect",
    "flux_divergence",
    "pfs_norm",
    "weighted_inner",
    "weighted_norm",
]


def weighted_inner(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> complex:
    """<u, v>_w = sum_i w_i conj(u_i) v_i."""
    return complex(np.sum(w * np.conj(u) * v))


def weighted_norm(u: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * np.abs(u) ** 2)))


@dataclass
class ComplexField:
    """Complex grid function (wavefunction amplitude) on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"field has {self.values.shape} values for {self.grid.n_cells} cells")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def norm(self) -> float:
        return weighted_norm(self.values, self.grid.volumes)

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())


@dataclass
class RealField:
    """Real grid function (probability density) on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"field has {self.values.shape} values for {self.grid.n_cells} cells")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def total_mass(self) -> float:
        return float(np.sum(self.grid.volumes * self.values))


@dataclass(frozen=True)
class SparseOperator:
    """Real sparse matrix acting in the volume-weighted inner product.

    boundary_flux_max records the largest flux magnitude imposed on a
    boundary face during assembly; the zero-flux closure keeps it at
    exactly 0.0.
    """

    matrix: sp.csr_matrix
    weights: np.ndarray
    boundary_flux_max: float = 0.0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def weighted_adjoint(self) -> "SparseOperator":
        """Adjoint under <.,.>_w: (M^+)_ij = w_j M_ji / w_i."""
        w = self.weights
        adj = sp.diags(1.0 / w) @ self.matrix.T @ sp.diags(w)
        return SparseOperator(adj.tocsr(), w, self.boundary_flux_max)

    def inf_norm(self) -> float:
        """Max absolute row sum; cheap deterministic magnitude scale."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix).sum(axis=1)))


def _face_normal_flux(field: VectorFieldSpec, grid: Grid) -> np.ndarray:
    """F . n at every interior face, n the +axis unit normal, times area."""
    fvals = field.eval_many(grid.iface_centroid)
    fn = fvals[np.arange(fvals.shape[0]), grid.iface_axis]
    return fn * grid.iface_area


def assemble_pf_generator(field: VectorFieldSpec, grid: Grid) -> SparseOperator:
    """Conservative flux form of the density-transport generator -div(. F).

    Each interior face contributes a centered-average flux; boundary faces
    contribute exactly nothing, which imposes zero normal flux of the
    transported quantity.  Weighted column sums telescope to zero (mass
    conservation) and applying the operator to the constant density 1
    reproduces the discrete divergence of F with a flipped sign.
    """
    n = grid.n_cells
    q = _face_normal_flux(field, grid)  # (K,): F.n * area per interior face
    i = grid.iface_left
    j = grid.iface_right
    wi = grid.volumes[i]
    wj = grid.volumes[j]
    rows = np.concatenate([i, i, j, j])
    cols = np.concatenate([i, j, i, j])
    vals = np.concatenate([-q / (2 * wi), -q / (2 * wi), q / (2 * wj), q / (2 * wj)])
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return SparseOperator(mat, grid.volumes, boundary_flux_max=0.0)


def assemble_koopman_generator(field: VectorFieldSpec, grid: Grid) -> SparseOperator:
    """Centered-difference advection F . grad, one-sided at the boundary.

    Cells missing a neighbor on one side of an axis fall back to the
    one-sided first difference toward the existing neighbor; cells with no
    neighbor along an axis contribute nothing for that axis.
    """
    n = grid.n_cells
    fvals = field.eval_many(grid.centers)
    rows, cols, vals = [], [], []
    for k in range(grid.dim):
        fk = fvals[:, k]
        hk = grid.h[k]
        minus = grid.neighbors[:, k, 0]
        plus = grid.neighbors[:, k, 1]
        both = (minus >= 0) & (plus >= 0)
        only_plus = (minus < 0) & (plus >= 0)
        only_minus = (minus >= 0) & (plus < 0)
        idx = np.flatnonzero(both)
        rows += [idx, idx]
        cols += [plus[idx], minus[idx]]
        vals += [fk[idx] / (2 * hk), -fk[idx] / (2 * hk)]
        idx = np.flatnonzero(only_plus)
        rows += [idx, idx]
        cols += [plus[idx], idx]
        vals += [fk[idx] / hk, -fk[idx] / hk]
        idx = np.flatnonzero(only_minus)
        rows += [idx, idx]
        cols += [idx, minus[idx]]
        vals += [fk[idx] / hk, -fk[idx] / hk]
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return SparseOperator(mat, grid.volumes, boundary_flux_max=0.0)


def assemble_kvn_generator(field: VectorFieldSpec, grid: Grid) -> SparseOperator:
    """Wavefunction generator: skew part of the density-transport operator
    under the weighted inner product, A = (M - M^+)/2.

    The construction gives exact discrete skew-symmetry; consistency-wise
    the operator approximates -F . grad psi - (div F) psi / 2 to second
    order in the interior.
    """
    pf = assemble_pf_generator(field, grid)
    adj = pf.weighted_adjoint()
    mat = (0.5 * (pf.matrix - adj.matrix)).tocsr()
    mat.sum_duplicates()
    return SparseOperator(mat, grid.volumes, boundary_flux_max=0.0)


def apply(op: SparseOperator, field_in):
    """Apply the real operator; complex inputs go through componentwise."""
    if op.n != field_in.values.shape[0]:
        raise ValueError(f"operator dimension {op.n} != field size {field_in.values.shape[0]}")
    out = op.matrix @ field_in.values
    if isinstance(field_in, ComplexField):
        return ComplexField(field_in.grid, out)
    return RealField(field_in.grid, out)


def skewness_defect(op: SparseOperator) -> float:
    """max |w_i A_ij + w_j A_ji| over stored entries / max |w_i A_ij|.

    Zero for an operator that is exactly skew in <.,.>_w; order one for a
    generic transport generator with nonzero divergence.
    """
    s = (sp.diags(op.weights) @ op.matrix).tocsr()
    if s.nnz == 0:
        return 0.0
    den = float(np.max(np.abs(s.data)))
    if den == 0.0:
        return 0.0
    t = (s + s.T).tocoo()
    if t.nnz == 0:
        return 0.0
    return float(np.max(np.abs(t.data))) / den


def flux_divergence(field: VectorFieldSpec, grid: Grid, values: np.ndarray) -> np.ndarray:
    """Discrete div(psi F) in flux form with zero-flux boundary closure."""
    pf = assemble_pf_generator(field, grid)
    return -(pf.matrix @ np.asarray(values))


def pfs_norm(psi: ComplexField, field: VectorFieldSpec, grid: Grid) -> float:
    """Graph norm sqrt(||psi||_w^2 + ||div_h(psi F)||_w^2).

    For the zero field the flux divergence vanishes and this reduces to
    the plain weighted norm; for F = 1 in 1D the second term approximates
    ||psi'||.
    """
    w = grid.volumes
    d = flux_divergence(field, grid, psi.values)
    return float(np.sqrt(weighted_norm(psi.values, w) ** 2 + weighted_norm(d, w) ** 2))
