//! Shared fixtures for the benchmarks in `benches/`.

use std::f64::consts::PI;

use bloch_cat::{packet, BandStructure, PotentialSpec, SpatialGrid, Spin, WavePacket};

pub const DEPTH: f64 = 5.0;
pub const FORCE: f64 = 0.005;

/// The θ = π/2 lattice seen by `spin`.
pub fn lattice(spin: Spin) -> PotentialSpec {
    PotentialSpec::new(spin, DEPTH, PI / 2.0).expect("valid lattice")
}

/// Lowest-band Gaussian packet (w = 0.1) built in the θ = 0 lattice.
pub fn initial_packet(spin: Spin, grid: SpatialGrid) -> WavePacket {
    let start = PotentialSpec::new(spin, DEPTH, 0.0).expect("valid lattice");
    let bands = BandStructure::solve_commensurate(&start, grid.n_sites, 1, 15).expect("band solve");
    let w = packet::gaussian_weights(0.1, &bands.q_grid).expect("weights");
    packet::build_packet(&bands, &w, grid).expect("packet")
}
