//! Spectral form factor and Krylov-complexity bounds, and the thermal-qubit
//! Mpemba analysis with its closed-form oracle.

pub mod amplitude_damping;
pub mod krylov;
pub mod mpemba;
pub mod sff;

pub use amplitude_damping::{amplitude_damping_closed_forms, ClosedForms};
pub use krylov::{krylov_bound_check, krylov_build, krylov_complexity, tradeoff_check, KrylovBoundScan, KrylovData};
pub use mpemba::{mpemba_report, Crossing, MpembaReport};
pub use sff::{coherent_gibbs_state, sff, sff_bound_check, sff_series, SffBoundScan};
