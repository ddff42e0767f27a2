//! Modeling toolkit for dispersive readout circuits in which each readout
//! resonator is paired with a dedicated filter resonator through a
//! coupled-line section that doubles as a Purcell notch filter.
//!
//! Modules, bottom up:
//!
//! * [`mtl`] distributed transfer impedances and notch location.
//! * [`equiv`] equivalent lumped circuits and exchange couplings.
//! * [`purcell`] Purcell-limited relaxation through the readout network.
//! * [`mux`] multiplexed reflection, field dynamics and normal modes.
//! * [`specfit`] reflection-phase spectrum fitting.
//! * [`metrics`] power calibration and readout error budgets.
//! * [`device`] the JSON device description used by the command line tool.
//!
//! Every public interface uses SI units and ordinary frequency in Hz.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod device;
pub mod equiv;
pub mod error;
pub mod metrics;
pub mod mtl;
pub mod mux;
pub mod purcell;
mod quad;
pub mod specfit;
pub mod units;

pub use device::DeviceFile;
pub use equiv::{CouplerBranch, JFormula, LumpedPair, LumpedResonator, TwoPortZ};
pub use error::{Error, PoleMode, Result};
pub use mtl::{CoupledPairGeometry, Coupler, LineParams, MtlCouplerParams, PoleGuard};
pub use mux::{
    DrivePulse, FieldTraces, JointState, MuxNetwork, NormalMode, QubitMeta, QubitState,
    ReadoutChannel,
};
pub use purcell::{QubitCoupling, ShuntLC, T1Limit};
pub use specfit::{FitConfig, FitResult, PhaseSpectrum, SpectrumState};
