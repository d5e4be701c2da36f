//! Counterdiabatic control of driven transverse-field Ising chains.
//!
//! The crate builds the chain Hamiltonian, diagonalizes it exactly, forms the
//! exact counterdiabatic term and fits restricted few-body Pauli control
//! fields to it by least squares. A propagator then drives the chain through
//! its critical point and records fidelity and defect density.
//!
//! All numerics are generic over [`Real`]; the aliases at the crate root fix
//! the production scalar to `f64`.

pub mod dynamics;
pub mod eigen;
pub mod error;
mod lstsq;
pub mod pauli;
pub mod scalar;
pub mod spectral;
pub mod variational;

pub use dynamics::{
    critical_time, fidelity, initial_ground_state, propagate, uniform_grid, Driving,
    PropagationConfig, QuenchProtocol, TrajectoryRecord,
};
pub use error::{Error, Result};
pub use pauli::{real_pair_overlap, Pauli, PauliString, PauliSum, StateVector};
pub use scalar::{CMatrix, CVector, Real};
pub use spectral::{
    adiabatic_state, aux_image, build_hamiltonian, diagonalize, diagonalize_by_parity, exact_aux,
    snapshot, AuxMatrix, IsingModel, Parity, SpectralSnapshot,
};
pub use variational::{
    build_system, build_system_from_image, enumerate_basis, fit, oracle_system,
    resource_count, residual, residual_from_image, solve, AnsatzMode, AnsatzSpec,
    AuxSolution, Fit, NormalSystem, OperatorBasis,
};

pub type State = StateVector<f64>;
pub type Model = IsingModel<f64>;
pub type Snapshot = SpectralSnapshot<f64>;
pub type Aux = AuxMatrix<f64>;
pub type System = NormalSystem<f64>;
pub type Solution = AuxSolution<f64>;
pub type Protocol = QuenchProtocol<f64>;
pub type Config = PropagationConfig<f64>;
pub type Trajectory = TrajectoryRecord<f64>;
pub type Matrix = CMatrix<f64>;

pub type StateF32 = StateVector<f32>;
pub type ModelF32 = IsingModel<f32>;
