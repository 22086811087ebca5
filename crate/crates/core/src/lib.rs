//! Finite-dimensional quantum measurement toolkit: effects, sub-observables,
//! instruments and their duals, sequential products and conditioning, and
//! effect-algebra checks over families of determined sub-observables.

pub mod effect_algebra;
pub mod demos;
pub mod effects;
pub mod error;
pub mod linalg;
pub mod instruments;
pub mod observables;
pub mod random;
pub mod report;
pub mod sequential;
pub mod suites;

pub use effects::{Effect, PartialState, State};
pub use error::{Error, Result};
pub use instruments::{Instrument, Operation, SubInstrument};
pub use linalg::{Eigh, Matrix, Tolerance};
pub use num_complex::Complex64 as C64;
pub use observables::{Observable, OutcomeSpace, SubObservable, DEFAULT_EXTENSION_LABEL};
