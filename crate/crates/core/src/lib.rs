//! Numeric core for classical capacities of memoryless quantum channels and
//! two-use classical-feedback protocols.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! - [`matops`]: dense complex matrices, Kronecker products, partial traces
//!   and transposes, a Jacobi Hermitian eigensolver.
//! - [`quantum`]: density matrices, classical-quantum states, entropies and
//!   mutual informations (bits).
//! - [`channels`]: Kraus/Choi channels, instruments, the channel zoo, random
//!   channels and the PPT entanglement-breaking test.
//! - [`holevo`]: Holevo quantity, a multi-start maximizer and a qubit grid
//!   reference.
//! - [`feedback`]: feedback protocols, their information accounting and the
//!   capacity-bound checks.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod channels;
pub mod error;
pub mod feedback;
pub mod holevo;
pub mod math;
pub mod matops;
pub mod quantum;
pub mod random;

pub use channels::{
    ChannelKind, ChoiMatrix, EbReport, EbVerdict, Instrument, InstrumentOutcome, KrausChannel,
};
pub use error::{Error, Result};
pub use feedback::{
    FeedbackProtocol, InputClass, MessageInput, ProtocolReport, Tolerance, VerificationVerdict,
};
pub use holevo::{HolevoResult, OptimizerOptions};
pub use matops::{ComplexMatrix, C64};
pub use quantum::{CqBranch, CqState, DensityMatrix, Ensemble};
