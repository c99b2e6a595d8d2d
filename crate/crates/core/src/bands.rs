//! Bloch bands of a single-harmonic lattice potential.
//!
//! In the plane-wave basis e^{i(q+2l)ξ}, l = −L..L, the Bloch Hamiltonian is
//! tridiagonal: (q+2l)² + mean on the diagonal, c below and c̄ above it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PotentialSpec;

pub const DEFAULT_CUTOFF: usize = 15;
pub const DEFAULT_Q_POINTS: usize = 257;
/// Energies of the three lowest bands must move less than this under L → L+5.
pub const CUTOFF_TOLERANCE: f64 = 1e-10;

/// Plane-wave Hamiltonian at quasimomentum `q` with cutoff `cutoff`.
pub fn bloch_hamiltonian(potential: &PotentialSpec, q: f64, cutoff: usize) -> DMatrix<Complex64> {
    let dim = 2 * cutoff + 1;
    let c = potential.harmonic;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            let k = q + 2.0 * (i as f64 - cutoff as f64);
            Complex64::new(k * k + potential.mean, 0.0)
        } else if i == j + 1 {
            c
        } else if j == i + 1 {
            c.conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Eigenpairs of the Bloch Hamiltonian at one quasimomentum.
#[derive(Debug, Clone)]
pub struct BlochStates {
    pub q: f64,
    pub energies: Vec<f64>,
    /// `vectors[n][l + L]`, unit norm, largest component real and positive.
    pub vectors: Vec<Vec<Complex64>>,
}

impl BlochStates {
    pub fn cutoff(&self) -> usize {
        self.vectors.first().map_or(0, |v| (v.len() - 1) / 2)
    }
}

/// Diagonalize at a single `q`, keeping the lowest `n_bands` states.
pub fn bloch_states(potential: &PotentialSpec, q: f64, n_bands: usize, cutoff: usize) -> Result<BlochStates> {
    let dim = 2 * cutoff + 1;
    if n_bands > dim {
        return Err(Error::invalid("n_bands", format!("{n_bands} bands need cutoff L ≥ {}", n_bands / 2)));
    }
    let h = bloch_hamiltonian(potential, q, cutoff);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000).ok_or(Error::Eigensolver { q })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut energies = Vec::with_capacity(n_bands);
    let mut vectors = Vec::with_capacity(n_bands);
    for &idx in order.iter().take(n_bands) {
        if !eig.eigenvalues[idx].is_finite() {
            return Err(Error::Eigensolver { q });
        }
        energies.push(eig.eigenvalues[idx]);
        let mut v: Vec<Complex64> = eig.eigenvectors.column(idx).iter().copied().collect();
        fix_gauge(&mut v, cutoff);
        vectors.push(v);
    }
    Ok(BlochStates { q, energies, vectors })
}

/// Normalize and rotate so the largest component is real positive. Ties
/// (equal moduli to 1e-9) go to the component with the smaller |l|.
fn fix_gauge(v: &mut [Complex64], cutoff: usize) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = v
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= max * (1.0 - 1e-9))
        .min_by_key(|(i, _)| (*i as isize - cutoff as isize).unsigned_abs())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let phase = v[lead].conj() / v[lead].norm();
    for c in v.iter_mut() {
        *c = *c * phase / norm;
    }
}

/// Dispersion and gauge-fixed Bloch vectors of the lowest bands on a uniform,
/// endpoint-inclusive quasimomentum grid over [−1, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandStructure {
    pub potential: PotentialSpec,
    pub cutoff: usize,
    pub q_grid: Vec<f64>,
    /// `energies[n][i]` = E_n(q_i).
    pub energies: Vec<Vec<f64>>,
    /// `coefficients[n][i][l + L]`.
    pub coefficients: Vec<Vec<Vec<Complex64>>>,
    #[serde(skip)]
    splines: Vec<PeriodicSpline>,
}

impl BandStructure {
    /// Solve on `n_q` points with the cutoff self-test.
    pub fn solve(potential: &PotentialSpec, n_q: usize, n_bands: usize, cutoff: usize) -> Result<Self> {
        if n_q < 16 {
            return Err(Error::invalid("n_q", format!("need at least 16 q points, got {n_q}")));
        }
        let q_grid = (0..n_q).map(|i| -1.0 + 2.0 * i as f64 / (n_q - 1) as f64).collect();
        Self::solve_on(potential, q_grid, n_bands, cutoff)
    }

    /// Solve with the default grid (257 points) and cutoff (L = 15).
    pub fn solve_default(potential: &PotentialSpec, n_bands: usize) -> Result<Self> {
        Self::solve(potential, DEFAULT_Q_POINTS, n_bands, DEFAULT_CUTOFF)
    }

    /// Solve on a grid commensurate with a periodic box of `n_sites` lattice
    /// periods: q = 2m/n_sites, m = −n_sites/2..=n_sites/2.
    pub fn solve_commensurate(potential: &PotentialSpec, n_sites: usize, n_bands: usize, cutoff: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::invalid("n_sites", "must be even and ≥ 2"));
        }
        let half = (n_sites / 2) as i64;
        let q_grid = (-half..=half).map(|m| 2.0 * m as f64 / n_sites as f64).collect();
        Self::solve_on(potential, q_grid, n_bands, cutoff)
    }

    fn solve_on(potential: &PotentialSpec, q_grid: Vec<f64>, n_bands: usize, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::invalid("cutoff", "L must be at least 1"));
        }
        if n_bands == 0 {
            return Err(Error::invalid("n_bands", "need at least one band"));
        }
        if let Some(q) = q_grid.iter().find(|q| q.abs() > 1.0 + 1e-12) {
            return Err(Error::invalid("q_grid", format!("q = {q} outside the first zone")));
        }
        let mut energies = vec![Vec::with_capacity(q_grid.len()); n_bands];
        let mut coefficients = vec![Vec::with_capacity(q_grid.len()); n_bands];
        for &q in &q_grid {
            let states = bloch_states(potential, q, n_bands, cutoff)?;
            for (n, (e, v)) in states.energies.into_iter().zip(states.vectors).enumerate() {
                energies[n].push(e);
                coefficients[n].push(v);
            }
        }
        let mut bands = Self { potential: *potential, cutoff, q_grid, energies, coefficients, splines: Vec::new() };
        bands.smooth_signs();
        bands.check_cutoff()?;
        bands.build_splines();
        Ok(bands)
    }

    /// Walk outward from the grid point nearest q = 0 and flip the sign of any
    /// vector whose overlap with its inner neighbour has negative real part.
    fn smooth_signs(&mut self) {
        let centre = self.index_nearest(0.0);
        for band in &mut self.coefficients {
            for i in (centre + 1)..band.len() {
                if overlap(&band[i - 1], &band[i]).re < 0.0 {
                    band[i].iter_mut().for_each(|c| *c = -*c);
                }
            }
            for i in (0..centre).rev() {
                if overlap(&band[i + 1], &band[i]).re < 0.0 {
                    band[i].iter_mut().for_each(|c| *c = -*c);
                }
            }
        }
    }

    /// L → L+5 self-test on the lowest three bands at the centre, the edge
    /// and a generic point.
    fn check_cutoff(&self) -> Result<()> {
        let n = self.n_bands().min(3);
        let mut worst: f64 = 0.0;
        for q in [0.0, 1.0, 0.37] {
            let a = bloch_states(&self.potential, q, n, self.cutoff)?;
            let b = bloch_states(&self.potential, q, n, self.cutoff + 5)?;
            for (x, y) in a.energies.iter().zip(&b.energies) {
                worst = worst.max((x - y).abs());
            }
        }
        if worst > CUTOFF_TOLERANCE {
            return Err(Error::CutoffNotConverged { cutoff: self.cutoff, change: worst });
        }
        Ok(())
    }

    fn build_splines(&mut self) {
        // One period of the dispersion: drop the duplicated endpoint q = +1.
        let uniform = self.q_grid.len() > 2 && {
            let h = self.q_grid[1] - self.q_grid[0];
            self.q_grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() < 1e-12)
        };
        self.splines = if uniform {
            self.energies
                .iter()
                .map(|e| PeriodicSpline::new(-1.0, 2.0, &e[..e.len() - 1]))
                .collect()
        } else {
            Vec::new()
        };
    }

    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }

    pub fn index_nearest(&self, q: f64) -> usize {
        self.q_grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - q).abs().total_cmp(&(b.1 - q).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    fn check_band(&self, n: usize) -> Result<()> {
        if n >= self.n_bands() {
            return Err(Error::OutOfRange { index: n, available: self.n_bands() });
        }
        Ok(())
    }

    /// E_n at arbitrary q: periodic cubic spline on the grid, extended
    /// 2-periodically.
    pub fn energy_at(&self, n: usize, q: f64) -> Result<f64> {
        self.check_band(n)?;
        if self.splines.is_empty() {
            let mut bands = self.clone();
            bands.build_splines();
            if bands.splines.is_empty() {
                return Err(Error::invalid("q_grid", "interpolation needs a uniform grid"));
            }
            return Ok(bands.splines[n].eval(q));
        }
        Ok(self.splines[n].eval(q))
    }

    /// Width of band `n`. For the lowest band this is E₀(±1) − E₀(0); for the
    /// others it is max − min over the grid.
    pub fn band_width(&self, n: usize) -> Result<f64> {
        self.check_band(n)?;
        let e = &self.energies[n];
        if n == 0 {
            let edge = e[0].max(e[e.len() - 1]);
            let centre = e[self.index_nearest(0.0)];
            if (self.q_grid[self.index_nearest(0.0)]).abs() < 1e-12 {
                return Ok(edge - centre);
            }
            return Ok(edge - self.energy_at(0, 0.0)?);
        }
        let max = e.iter().cloned().fold(f64::MIN, f64::max);
        let min = e.iter().cloned().fold(f64::MAX, f64::min);
        Ok(max - min)
    }

    /// min_q [E_{n+1}(q) − E_n(q)].
    pub fn band_gap(&self, n: usize) -> Result<f64> {
        self.check_band(n + 1)?;
        Ok(self.energies[n]
            .iter()
            .zip(&self.energies[n + 1])
            .map(|(lo, hi)| hi - lo)
            .fold(f64::MAX, f64::min))
    }

    /// Overlaps ⟨c(n, q_i), c(n, q_{i+1})⟩ between neighbouring grid points.
    pub fn neighbour_overlaps(&self, n: usize) -> Result<Vec<Complex64>> {
        self.check_band(n)?;
        Ok(self.coefficients[n].windows(2).map(|w| overlap(&w[0], &w[1])).collect())
    }

    /// Rows (q, E_0, ..., E_{n-1}) for CSV export.
    pub fn table(&self) -> Vec<Vec<f64>> {
        (0..self.q_grid.len())
            .map(|i| std::iter::once(self.q_grid[i]).chain(self.energies.iter().map(|e| e[i])).collect())
            .collect()
    }
}

/// ⟨a, b⟩ = Σ ā_l b_l.
pub fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Periodic cubic spline through uniform samples `y[i]` at `x0 + i·h`,
/// `h = period / y.len()`.
#[derive(Debug, Clone)]
struct PeriodicSpline {
    x0: f64,
    period: f64,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl PeriodicSpline {
    fn new(x0: f64, period: f64, y: &[f64]) -> Self {
        let n = y.len();
        let h = period / n as f64;
        // Cyclic system m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2y[i] + y[i-1]) / h².
        let rhs: Vec<f64> = (0..n)
            .map(|i| 6.0 * (y[(i + 1) % n] - 2.0 * y[i] + y[(i + n - 1) % n]) / (h * h))
            .collect();
        let m = solve_cyclic_tridiagonal(1.0, 4.0, 1.0, &rhs);
        Self { x0, period, y: y.to_vec(), m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let h = self.period / n as f64;
        let s = (x - self.x0).rem_euclid(self.period) / h;
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        let j = (i + 1) % n;
        let (a, b) = (1.0 - t, t);
        a * self.y[i] + b * self.y[j] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[j]) * h * h / 6.0
    }
}

/// Constant-coefficient cyclic tridiagonal solve (Sherman–Morrison).
fn solve_cyclic_tridiagonal(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    if n == 1 {
        return vec![rhs[0] / (diag + lower + upper)];
    }
    let gamma = -diag;
    let mut b = vec![diag; n];
    b[0] = diag - gamma;
    b[n - 1] = diag - upper * lower / gamma;
    let thomas = |d: &[f64]| -> Vec<f64> {
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        c_prime[0] = upper / b[0];
        d_prime[0] = d[0] / b[0];
        for i in 1..n {
            let denom = b[i] - lower * c_prime[i - 1];
            c_prime[i] = upper / denom;
            d_prime[i] = (d[i] - lower * d_prime[i - 1]) / denom;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        x
    };
    let x = thomas(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = lower;
    let z = thomas(&u);
    let factor = (x[0] + upper * x[n - 1] / gamma) / (1.0 + z[0] + upper * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect()
}
