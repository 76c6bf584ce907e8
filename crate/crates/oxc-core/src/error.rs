//! Crate-wide error type.

use thiserror::Error;

use crate::model::{Side, Wavelength};
use crate::routing::{ConnectionId, EdgeRef};
use crate::topology::Stage;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{what} must be at least 1")]
    ZeroParameter { what: &'static str },

    #[error("port count {ports} is not the product of outer factor {outer} and inner factor {inner}")]
    FactorMismatch {
        ports: usize,
        outer: usize,
        inner: usize,
    },

    #[error("{what} {value} out of range (bound {bound})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("expected a {expected} topology, got {actual}")]
    WrongStage { expected: Stage, actual: Stage },

    #[error("topology is not in buildable shape: {detail}")]
    MalformedTopology { detail: String },

    #[error("{what} is not supported here")]
    Unsupported { what: &'static str },

    /// The caller asked for a wavelength that is already in service at one
    /// of the two external endpoints. This is a request error, not a
    /// fabric failure.
    #[error("{wavelength} already in use at external {side} port {index}")]
    WavelengthBusyAtEndpoint {
        side: Side,
        index: usize,
        wavelength: Wavelength,
    },

    /// A fiber on the resolved path already carries the wavelength even
    /// though both endpoints were free. A correct fabric never produces
    /// this; seeing it means the topology is damaged or mis-built.
    #[error("internal contention: fiber {edge} already carries {wavelength}")]
    InternalContention { edge: EdgeRef, wavelength: Wavelength },

    #[error("unknown connection id {0}")]
    UnknownConnection(ConnectionId),

    /// Self-routing prescribes a hop that the graph cannot honor.
    #[error("unroutable at {node} port {port}: {reason}")]
    Unroutable {
        node: String,
        port: usize,
        reason: &'static str,
    },
}
