//! Cost-optimal tuning of infection, recovery and cutting rates subject to
//! an exponential decay guarantee, posed as a geometric program.

mod cost;
mod gp;
mod problem;
mod report;
mod verify;

pub use cost::{
    normalize_pair, CostBreakdown, CostModel, CuttingCost, InfectionCost, Normalization, PerEntry,
    RecoveryCost,
};
pub use gp::{
    log_constraint_values, solve_barrier, BarrierResult, BarrierSettings, GeometricProgram, Monomial,
    Posynomial,
};
pub use problem::{build_gp, solve_gp, EradicationProblem, GpSolution, VariableLayout};
pub use report::{average_ranks, centrality_csv, centrality_report, spearman, CentralityRow, CENTRALITY_CSV_HEADER};
pub use verify::{verify, VerificationReport, VERIFY_TOL};
