//! Schrödinger-cat preparation by Bloch oscillation in a spin-dependent
//! optical lattice.
//!
//! The crate is organized bottom-up:
//!
//! - [`units`]: dimensionless conventions and SI conversion.
//! - [`lattice`]: the two spin-dependent potentials in Fourier form.
//! - [`bands`]: Bloch bands, widths and gaps.
//! - [`semiclassical`]: closed-form single-band trajectories.
//! - [`packet`]: the initial lowest-band wave packet.
//! - [`evolve`]: spectral and Crank–Nicolson propagation in a tilted lattice.
//! - [`observe`]: centre of mass, momentum distributions, band populations,
//!   return fidelity and the microwave coherence witness.
//! - [`runner`]: scenario configuration, execution and output files.

pub mod bands;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod lattice;
pub mod observe;
pub mod packet;
pub mod runner;
pub mod schedule;
pub mod semiclassical;
pub mod units;

pub use bands::BandStructure;
pub use error::{Error, Result};
pub use evolve::{evolve, evolve_direct_oracle, DirectConfig, EvolutionConfig, EvolutionRecord, Splitting};
pub use grid::SpatialGrid;
pub use lattice::{PotentialSpec, Spin};
pub use observe::SpinorState;
pub use packet::WavePacket;
pub use schedule::ForceSchedule;
pub use units::UnitSystem;
