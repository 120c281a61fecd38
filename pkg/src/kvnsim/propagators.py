"""Time integrators for the wavefunction and its independent oracles.

The flagship integrator is the Cayley (Crank-Nicolson) map
(I - dt/2 A)^-1 (I + dt/2 A), which preserves the weighted norm exactly
when A is skew in the weighted inner product; norm conservation then
holds to solver tolerance rather than asymptotically.  RK4 and a dense
matrix exponential (scaling-and-squaring) serve as non-conservative
cross-checks.

Independent of any assembled operator, the characteristics oracles
transport initial data along backward trajectories of the flow with an
exponential divergence weight: the wavefunction picks up half the
divergence integral, the density the full one, so the squared modulus of
the wavefunction oracle reproduces the density oracle identically.
Backward characteristics that leave the closed domain are assigned the
value 0 (zero inflow data) and flagged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import VectorFieldSpec
from .geometry import Domain, Grid
from .operators import ComplexField, RealField, SparseOperator
from .semiflow import flow_map

__all__ = [
    "PropagatorConfig",
    "SolverError",
    "PropagationResult",
    "OracleField",
    "cayley_step",
    "rk4_step",
    "dense_expm_step",
    "propagate",
    "characteristics_oracle_kvn",
    "characteristics_oracle_liouville",
]

SCHEMES = ("cayley", "rk4", "dense_expm")


class SolverError(RuntimeError):
    """Linear solve failed to reach the requested residual."""


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float
    scheme: str = "cayley"
    linear_solver_tol: float = 1e-12
    max_dense_dim: int = 4096
    max_solver_iterations: int = 500

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.linear_solver_tol <= 1e-6:
            raise ValueError(
                f"linear_solver_tol must lie in (0, 1e-6], got {self.linear_solver_tol}")


class _CayleyStepper:
    """Caches the two Cayley matrices for a fixed (A, dt) pair."""

    def __init__(self, A: SparseOperator, dt: float, tol: float, maxiter: int = 500):
        self.minus = (sp.eye(A.n, format="csr") - (0.5 * dt) * A.matrix).astype(np.complex128)
        self.plus = (sp.eye(A.n, format="csr") + (0.5 * dt) * A.matrix).astype(np.complex128)
        self.tol = tol
        self.maxiter = maxiter

    def step(self, values: np.ndarray) -> np.ndarray:
        rhs = self.plus @ values
        sol, info = spla.gmres(self.minus, rhs, x0=rhs, rtol=self.tol, atol=0.0,
                               restart=40, maxiter=self.maxiter)
        residual = float(np.linalg.norm(self.minus @ sol - rhs))
        bound = self.tol * float(np.linalg.norm(rhs))
        if info != 0 or residual > bound:
            raise SolverError(
                f"Cayley solve did not converge: residual {residual:.3e} "
                f"> {bound:.3e} (gmres info={info})")
        return sol


def cayley_step(A: SparseOperator, psi: ComplexField, dt: float,
                tol: float = 1e-12) -> ComplexField:
    """One Cayley step (I - dt/2 A) psi+ = (I + dt/2 A) psi.

    Expects A to be skew in the weighted inner product (the caller's
    contract); then | ||psi+||_w - ||psi||_w | <= 10 tol ||psi||_w.
    """
    stepper = _CayleyStepper(A, dt, tol)
    return ComplexField(psi.grid, stepper.step(psi.values))


def rk4_step(A: SparseOperator, psi: ComplexField, dt: float) -> ComplexField:
    """Classical RK4 step for dpsi/dt = A psi (non-conservative baseline)."""
    m = A.matrix
    v = psi.values
    k1 = m @ v
    k2 = m @ (v + 0.5 * dt * k1)
    k3 = m @ (v + 0.5 * dt * k2)
    k4 = m @ (v + dt * k3)
    return ComplexField(psi.grid, v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


def dense_expm_step(A: SparseOperator, psi: ComplexField, dt: float,
                    max_dense_dim: int = 4096) -> ComplexField:
    """Dense matrix exponential step, for cross-validation at small N."""
    if A.n > max_dense_dim:
        raise ValueError(f"dense exponential guarded to N <= {max_dense_dim}, got {A.n}")
    propagator = scipy.linalg.expm(dt * A.matrix.toarray())
    return ComplexField(psi.grid, propagator @ psi.values)


@dataclass
class PropagationResult:
    """Snapshots at step-aligned times plus the per-step norm history."""

    scheme: str
    dt: float
    n_steps: int
    snapshot_steps: np.ndarray
    snapshot_times: np.ndarray
    requested_times: np.ndarray
    rounding_errors: np.ndarray
    snapshots: list[ComplexField]
    norm_history: np.ndarray  # columns: step, t, norm, drift

    @property
    def final(self) -> ComplexField:
        return self.snapshots[-1]

    @property
    def final_time(self) -> float:
        return float(self.snapshot_times[-1])

    @property
    def norm_drift(self) -> float:
        """max_k | ||psi_k|| - ||psi_0|| | / ||psi_0|| over all steps."""
        norms = self.norm_history[:, 2]
        return float(np.max(np.abs(norms - norms[0])) / norms[0])


def propagate(A: SparseOperator, psi0: ComplexField, t_end: float,
              cfg: PropagatorConfig, snapshot_times=None) -> PropagationResult:
    """Step psi0 to t_end, emitting snapshots at the requested times.

    The run takes round(t_end / dt) uniform steps; requested snapshot
    times are rounded to the nearest step and the rounding error is
    recorded so that comparisons against an oracle can be made at the
    exact stepped time.
    """
    if t_end < 0.0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    dt = cfg.dt
    n_steps = int(round(t_end / dt)) if t_end > 0.0 else 0
    requested = np.asarray(
        [0.0, t_end] if snapshot_times is None else list(snapshot_times), dtype=float)
    snap_steps = np.clip(np.rint(requested / dt).astype(int), 0, max(n_steps, 0))
    rounding = np.abs(snap_steps * dt - requested)
    wanted = {}
    for s, r in zip(snap_steps, requested):
        wanted.setdefault(int(s), r)

    stepper = None
    if cfg.scheme == "cayley":
        stepper = _CayleyStepper(A, dt, cfg.linear_solver_tol, cfg.max_solver_iterations)

    psi = psi0.copy()
    norm0 = psi.norm()
    history = np.empty((n_steps + 1, 4))
    snapshots, taken_steps = [], []
    history[0] = (0, 0.0, norm0, 0.0)
    if 0 in wanted:
        snapshots.append(psi.copy())
        taken_steps.append(0)
    for k in range(1, n_steps + 1):
        if cfg.scheme == "cayley":
            psi = ComplexField(psi.grid, stepper.step(psi.values))
        elif cfg.scheme == "rk4":
            psi = rk4_step(A, psi, dt)
        else:
            psi = dense_expm_step(A, psi, dt, cfg.max_dense_dim)
        nrm = psi.norm()
        history[k] = (k, k * dt, nrm, (nrm - norm0) / norm0)
        if k in wanted:
            snapshots.append(psi.copy())
            taken_steps.append(k)
    if not snapshots or taken_steps[-1] != n_steps:
        snapshots.append(psi.copy())
        taken_steps.append(n_steps)
    taken = np.asarray(taken_steps, dtype=int)
    return PropagationResult(
        scheme=cfg.scheme,
        dt=dt,
        n_steps=n_steps,
        snapshot_steps=taken,
        snapshot_times=taken * dt,
        requested_times=requested,
        rounding_errors=rounding,
        snapshots=snapshots,
        norm_history=history,
    )


@dataclass
class OracleField:
    """Characteristics solution plus the flags of cells whose backward
    trajectory left the closed domain (those cells hold the value 0)."""

    field: ComplexField | RealField
    exited: np.ndarray

    @property
    def exit_count(self) -> int:
        return int(np.count_nonzero(self.exited))


def _characteristics(field: VectorFieldSpec, domain: Domain, grid: Grid,
                     ic, t: float, dt_ode: float, weight_factor: float) -> tuple[np.ndarray, np.ndarray]:
    flow = flow_map(field, domain, grid.centers, t, dt_ode, sign=-1.0, allow_exit=True)
    values = np.asarray(ic(flow.states)) * np.exp(weight_factor * flow.divergence_integral)
    values = values.copy()
    values[flow.exited] = 0.0
    return values, flow.exited


def characteristics_oracle_kvn(field: VectorFieldSpec, domain: Domain, grid: Grid,
                               psi0_analytic, t: float, dt_ode: float) -> OracleField:
    """Transport solution for the wavefunction by backward characteristics.

    Each cell center is flowed backward (the flow map of -F); the result
    is psi0 at the foot point times exp(half the divergence integral
    accumulated along that backward path), so that along forward
    trajectories the amplitude decays with half the divergence of F.
    psi0_analytic maps an (n, d) array of points to n complex values.
    """
    values, exited = _characteristics(field, domain, grid, psi0_analytic, t, dt_ode, 0.5)
    return OracleField(ComplexField(grid, values), exited)


def characteristics_oracle_liouville(field: VectorFieldSpec, domain: Domain, grid: Grid,
                                     rho0_analytic, t: float, dt_ode: float) -> OracleField:
    """Transport solution for the density: same scheme with the full
    divergence weight, so mass is conserved up to quadrature."""
    values, exited = _characteristics(field, domain, grid, rho0_analytic, t, dt_ode, 1.0)
    return OracleField(RealField(grid, values.real if np.isrealobj(values) else np.real(values)), exited)


def default_oracle_dt(pde_dt: float) -> float:
    """Oracle ODE step: an order of magnitude finer than the PDE step."""
    return min(1e-3, pde_dt / 10.0)
