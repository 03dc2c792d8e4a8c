//! Link-level simulator for multi-cell indoor visible light communication
//! with kurtosis-based handover.
//!
//! Each transmitter prefixes its OOK frames with a two-bit cell ID. Where
//! two cells overlap, the ID bits of both arrive superimposed; the shape of
//! that segment (its kurtosis) peaks where the two cells are received
//! equally strongly, which is where a handover should start. The modules
//! follow the data path:
//!
//! * [`scene`]: room, transmitters, receiver and LOS channel gains.
//! * [`phy`]: frames, waveform synthesis, ID-segment analysis, OOK detection.
//! * [`stats`]: kurtosis, histogram PDF, bit error rate.
//! * [`handover`]: relative-maximum detection and the handover state machine.
//! * [`experiment`]: trajectory runs and BER maps.
//! * [`report`]: CSV/JSON export.
//! * [`rng`]: seeded, derivable random streams.

// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod handover;
pub mod phy;
pub mod report;
pub mod rng;
pub mod scene;
pub mod stats;

pub use error::{Error, Result};
