"""kvnsim: structure-preserving simulation of Koopman-von Neumann transport
on bounded domains, with a classical characteristics oracle and a
diagnostics suite that turns the structural invariants of the problem
(skew-symmetry, dissipativity, norm conservation, the discrete Green
identity, the Born rule) into machine-verifiable residuals."""

__version__ = "0.1.0"

from .config import (ConfigError, InitialConditionSpec, ScenarioConfig,
                     build_initial_condition, parse_scenario,
                     parse_scenario_text, serialize_scenario)
from .diagnostics import (EXACT, REPORT_METRICS, RunArtifacts,
                          VerificationReport, dissipativity_residual,
                          green_residual, measure_order, verify_run)
from .fields import (BoundaryClassification, NoOutflowVerdict,
                     VectorFieldSpec, check_no_outflow, classify_boundary,
                     divergence, evaluate, lipschitz_estimate, make_field,
                     verify_divergence)
from .geometry import BoundaryFace, Domain, Grid, build_grid, contains
from .operators import (ComplexField, RealField, SparseOperator, apply,
                        assemble_koopman_generator, assemble_kvn_generator,
                        assemble_pf_generator, flux_divergence, pfs_norm,
                        skewness_defect, weighted_inner, weighted_norm)
from .pipeline import (ConvergeOutputs, RunOutputs, check_scenario,
                       converge_scenario, run_scenario)
from .propagators import (OracleField, PropagationResult, PropagatorConfig,
                          SolverError, cayley_step,
                          characteristics_oracle_kvn,
                          characteristics_oracle_liouville, dense_expm_step,
                          propagate, rk4_step)
from .semiflow import (FlowResult, Trajectory, check_semigroup, flow_map,
                       integrate)
