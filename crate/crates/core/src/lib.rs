//! Optimal assignment of demands to capacitated service centers with
//! overload penalties, solved and maintained by negative-loop removal.

pub mod allotment;
pub mod bench;
pub mod dynamic;
pub mod generate;
pub mod instance;
pub mod io;
pub mod multigraph;
pub mod negloop;
pub mod oracle;
pub mod solver;

pub use allotment::{apply_loop, Allotment, Closure, Loop, LoopError, Transfer};
pub use dynamic::{CapacityDelta, Engine, EngineError, EngineStats, ShiftDirection};
pub use instance::{
    objective_cost, reduce_no_overload, validate_instance, CenterId, CenterPenalty, CostMatrix,
    DemandId, ExtCost, InstanceError, Mode, PenaltySpec, ProblemInstance, ServiceCenter,
};
pub use solver::{
    solve, solve_hard_capacity, solve_with, verify_optimal, Certificate, HardSolution, Solution,
    SolveError, SolveOptions,
};
