//! Radio propagation, CSMA medium access and energy accounting.

mod energy;
mod medium;
mod radio;

pub use energy::{Charge, ChargeKind, EnergyLedger, EnergyModel, NodeEnergy};
pub use medium::{
    Dest, DropReason, Frame, FrameKind, MacEvent, MacOutput, MacParams, MacStats, Medium,
    TxCompletion, TxId,
};
pub use radio::{ideal_reception, perturbed_reception, RadioParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhyError {
    #[error("invalid radio/MAC parameter: {0}")]
    Invalid(String),
    #[error("energy charge must be non-negative, got {0}")]
    NegativeCharge(f64),
    #[error("frame size must be positive")]
    EmptyFrame,
    #[error("no active transmission with id {0}")]
    UnknownTransmission(u64),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
}
