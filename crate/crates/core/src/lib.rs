//! Probabilities of quantum histories on finite tensor-product Hilbert spaces.
//!
//! Two rules are implemented side by side: the Copenhagen projection chain
//! (`P_C(h) = ‖K(h)‖²`) and Bell's collapse-free jump process between an
//! observer's experience subspaces, whose kernels are integrated from the
//! instantaneous rates of the universal state. The crate is `no_std` and only
//! needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bell;
pub mod error;
pub mod evolution;
pub mod history;
pub mod matrix;
pub mod operator;
pub mod projector;
pub mod scenario;
pub mod space;
pub mod sparse;
pub mod state;

pub use num_complex::Complex64 as C64;

pub use bell::{
    bell_rates, BellProcess, KernelDiagnostics, RateMatrix, TrajectoryBatch, TrajectorySampler,
    TransitionKernel,
};
pub use error::{Error, Result};
pub use evolution::{rotation_hamiltonian, EvolutionSchedule, RotationPair, Segment};
pub use history::{
    audit_consistency, copenhagen_probability, decoherence_overlap, enumerate_histories,
    everett_probability, history_vector, ConsistencyReport, Event, History, HistoryEvaluator,
    HistoryTable,
};
pub use matrix::Matrix;
pub use operator::{
    embed, projector_from_states, tensor_product_operators, Block, Operator, Representation,
};
pub use projector::{validate_family, FamilyValidation, ProjectorFamily};
pub use scenario::{Observer, Scenario};
pub use space::{HilbertSpace, Placement, Subsystem};
pub use state::{tensor_product, StateVector};

/// Tolerance on `|‖ψ‖² - 1|` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-10;

/// Tolerance on Hermiticity, idempotence, orthogonality and completeness.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Largest dimension for which operators may be materialized densely.
pub const DENSE_LIMIT: usize = 4096;

/// Born weight at or below which a label's exit rates are set to zero.
pub const OCCUPANCY_FLOOR: f64 = 1e-12;
