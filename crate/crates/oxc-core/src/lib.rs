//! Synthesis, self-routing, and verification of WSS-based optical
//! cross-connect fabrics.
//!
//! The crate builds the classical N x N cross-connect and its modular
//! counterpart: the inner fiber mesh is factorized into small shuffle
//! sub-networks, each edge switch is decomposed into a cascade of two
//! smaller switches, and the pieces merge into r x r cross-connect
//! modules. The result keeps the classical fabric's two key properties —
//! self-routing and nonblocking operation at every wavelength — while
//! cutting the inter-stage cabling from `N^2` to `2Nn` fibers.
//!
//! Modules:
//! - [`model`]: addressing algebra and fabric sizing.
//! - [`topology`]: node/edge graphs for every construction stage, with
//!   structural validation.
//! - [`shuffle`]: shuffle networks, connectivity tables, the factorized
//!   form, and the connectivity-equivalence oracle.
//! - [`fabric`]: the three-phase modularization pipeline.
//! - [`routing`]: path resolution, wavelength occupancy, and the
//!   nonblocking verification harness.
//! - [`metrics`]: cabling, census, and insertion-loss figures.

pub mod error;
pub mod fabric;
pub mod metrics;
pub mod model;
pub mod routing;
pub mod shuffle;
pub mod topology;

pub use error::{Error, Result};
pub use model::{AddressLabel, FabricParams, GroupPortAddress, ModularAddress, Side, Wavelength};
pub use topology::{BuildOptions, FabricTopology, NodeId, Stage};
