//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the report is always printed:
//!
//! ```text
//! cargo test --release -p bloch-cat --test acceptance
//! ```

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use bloch_cat::evolve::crop_to;
use bloch_cat::runner::{self, RunOptions, RunRecord, ScenarioConfig, SpinSummary};
use bloch_cat::{
    packet, units, BandStructure, DirectConfig, EvolutionConfig, ForceSchedule, PotentialSpec, SpatialGrid, Spin,
    Splitting, WavePacket,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

const DEPTH: f64 = 5.0;
const FORCE: f64 = 0.005;
/// Quoted band widths (kHz) and the recoil frequency (kHz) they are quoted against.
const QUOTED_WIDTH_KHZ: [f64; 2] = [1.925, 0.983];
const QUOTED_RECOIL_KHZ: f64 = 3.72;
const QUOTED_PERIOD_MS: f64 = 53.0;
const QUOTED_TILT_DEG: f64 = 4.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self { pass: false, detail: format!("error: {e}") }
    }
}

type Check = Result<Outcome, Box<dyn std::error::Error>>;

fn lattice(spin: Spin) -> PotentialSpec {
    PotentialSpec::new(spin, DEPTH, PI / 2.0).unwrap()
}

/// Lowest-band width from a fourth-order finite-difference Hamiltonian on one
/// lattice period with Bloch boundary conditions ψ(ξ + π) = e^{iπq} ψ(ξ).
fn fd_band_width(pot: &PotentialSpec) -> f64 {
    let lowest = |q: f64| -> f64 {
        let n = 240;
        let h = PI / n as f64;
        let twist = Complex64::from_polar(1.0, PI * q);
        let stencil = [(1, 4.0 / 3.0), (2, -1.0 / 12.0)];
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = Complex64::new(2.5 / (h * h) + pot.value(j as f64 * h), 0.0);
            for &(d, c) in &stencil {
                let k = j + d;
                let phase = if k >= n { twist } else { Complex64::new(1.0, 0.0) };
                let v = -c / (h * h) * phase;
                m[(j, k % n)] += v;
                m[(k % n, j)] += v.conj();
            }
        }
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    };
    lowest(1.0) - lowest(0.0)
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn scenario(name: &str, out: &Path, extra: &[&str]) -> Result<(ScenarioConfig, RunRecord), bloch_cat::Error> {
    let mut overrides = vec![format!("scenario=\"{name}\""), format!("output_dir=\"{}\"", out.display())];
    overrides.extend(extra.iter().map(|s| s.to_string()));
    let cfg = runner::parse_config_with("", &overrides)?;
    let record = runner::run_scenario_with(&cfg, &RunOptions { threads: 1, gnuplot: false })?;
    Ok((cfg, record))
}

fn spin_summary(record: &RunRecord, spin: Spin) -> &SpinSummary {
    record.summary.spins.iter().find(|s| s.spin == spin).expect("spin missing from summary")
}

fn initial_packet(spin: Spin, grid: SpatialGrid, switched: bool) -> WavePacket {
    let theta = if switched { 0.0 } else { PI / 2.0 };
    let init = PotentialSpec::new(spin, DEPTH, theta).unwrap();
    let bands = BandStructure::solve_commensurate(&init, grid.n_sites, 1, 15).unwrap();
    let w = packet::gaussian_weights(0.1, &bands.q_grid).unwrap();
    packet::build_packet(&bands, &w, grid).unwrap()
}

fn band_width(spin: Spin) -> Check {
    let start = Instant::now();
    let bands = BandStructure::solve_default(&lattice(spin), 3)?;
    let elapsed = start.elapsed().as_secs_f64();
    let b = bands.band_width(0)?;
    let target = QUOTED_WIDTH_KHZ[spin.index()] / QUOTED_RECOIL_KHZ;
    let oracle = fd_band_width(&lattice(spin));
    let rel = (b / target - 1.0).abs();
    let mut pass = rel < 0.01 && (b - oracle).abs() < 1e-5 * oracle && elapsed < 1.0;
    let mut detail = format!(
        "B/E_r = {b:.5} (target {target:.5} ± 1%, off by {:.2}%), finite-difference oracle {oracle:.5}, solve {elapsed:.3} s",
        rel * 100.0
    );
    if spin == Spin::Zero {
        let ratio = b / BandStructure::solve_default(&lattice(Spin::One), 1)?.band_width(0)?;
        let quoted = QUOTED_WIDTH_KHZ[0] / QUOTED_WIDTH_KHZ[1];
        pass &= (ratio / quoted - 1.0).abs() < 0.01;
        detail += &format!(", B0/B1 = {ratio:.4} (quoted {quoted:.4})");
    }
    Ok(Outcome::new(pass, detail))
}

fn bloch_period() -> Check {
    let t = units::bloch_period(FORCE)?;
    let exact = 2.0 * PI / FORCE;
    let hbar = 6.626_070_15e-34 / (2.0 * PI);
    let mass = 86.909_180_531 * 1.660_539_066_60e-27;
    let k = 2.0 * PI / 785e-9;
    let recoil = hbar * hbar * k * k / (2.0 * mass);
    let oracle_ms = exact * hbar / recoil * 1e3;
    let system = runner::parse_config("")?.unit_system()?;
    let ms = system.bloch_period(FORCE)?.millis();
    let tilt = system.tilt_from_force(FORCE)?.to_degrees();
    let pass = (t - exact).abs() <= 1e-12 * exact
        && (ms - oracle_ms).abs() < 1e-9 * oracle_ms
        && (ms / QUOTED_PERIOD_MS - 1.0).abs() < 0.02;
    Ok(Outcome::new(
        pass,
        format!(
            "T = {t:.4} τ_r (2π/F = {exact:.4}), {ms:.3} ms (oracle {oracle_ms:.3} ms, {:+.2}% from {QUOTED_PERIOD_MS} ms); \
             tilt for this force {tilt:.3}° (quoted {QUOTED_TILT_DEG}°)",
            (ms / QUOTED_PERIOD_MS - 1.0) * 100.0
        ),
    ))
}

fn semiclassical_maxima(record: &RunRecord) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for spin in [Spin::One, Spin::Zero] {
        let s = spin_summary(record, spin);
        let oracle = fd_band_width(&lattice(spin)) / FORCE;
        let max_com = s.max_com.ok_or("no centre of mass")?;
        let semi = s.max_displacement.ok_or("no semiclassical maximum")?;
        pass &= (max_com - oracle).abs() < 2.0 && (semi - oracle).abs() < 1e-3 * oracle;
        parts.push(format!("spin {spin}: B/F = {oracle:.2} a, semiclassical {semi:.2} a, exact max {max_com:.2} a"));
    }
    let sep = record.summary.separation_half_period.ok_or("no separation")?;
    pass &= (sep - 50.0).abs() < 3.0;
    parts.push(format!("separation at T/2 {sep:.2} a (50 ± 3)"));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn semiclassical_tracking(dir: &Path, period: f64) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for spin in [Spin::One, Spin::Zero] {
        let (h, rows) = read_csv(&dir.join(format!("series_spin{spin}.csv")));
        let (t, com, semi, p0) = (column(&h, "t"), column(&h, "com"), column(&h, "semiclassical"), column(&h, "P_0"));
        let mut inside: f64 = 0.0;
        let mut outside: f64 = 0.0;
        let mut excited_min = f64::INFINITY;
        for r in &rows {
            let dev = (r[com] - r[semi]).abs();
            if (0.05 * period..=0.95 * period).contains(&r[t]) {
                inside = inside.max(dev);
            } else {
                outside = outside.max(dev);
                if dev >= 2.0 {
                    excited_min = excited_min.min(1.0 - r[p0]);
                }
            }
        }
        let correlated = excited_min.is_infinite() || excited_min > 1e-3;
        pass &= inside < 2.0 && correlated;
        parts.push(format!("spin {spin}: max |Δ| {inside:.3} a inside, {outside:.3} a outside"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn momentum_peaks(record: &RunRecord, dir: &Path, cfg: &ScenarioConfig) -> Check {
    let n = cfg.evolution.snapshots;
    let half = (n - 1) / 2;
    if 2 * half != n - 1 {
        return Ok(Outcome::new(false, "snapshot grid misses T/2"));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for spin in [Spin::One, Spin::Zero] {
        let (h, rows) = read_csv(&dir.join(format!("momentum_spin{spin}_{half:02}.csv")));
        let (p, d) = (column(&h, "p"), column(&h, "density"));
        let peak = rows.iter().max_by(|a, b| a[d].total_cmp(&b[d])).map(|r| r[p]).ok_or("empty distribution")?;
        let reported = spin_summary(record, spin).momentum_peak_half_period.ok_or("no momentum peak")?;
        let off = (peak.abs() - 1.0).abs();
        pass &= off < 0.1 && (reported - peak).abs() < 1e-12;
        parts.push(format!("spin {spin}: peak at p = {peak:+.4} π/a"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn revival(record: &RunRecord, refined: &RunRecord) -> Check {
    let sep = record.summary.separation_final.ok_or("no final separation")?;
    let mut pass = sep < 2.0;
    let mut parts = vec![format!("separation at T {sep:.3} a")];
    for spin in [Spin::One, Spin::Zero] {
        let a = spin_summary(record, spin).fidelity.as_ref().ok_or("no fidelity")?.modulus;
        let b = spin_summary(refined, spin).fidelity.as_ref().ok_or("no fidelity")?.modulus;
        pass &= (a - b).abs() < 1e-3;
        parts.push(format!("spin {spin} fidelity {a:.5} → {b:.5} under dt/2 (Δ {:.1e})", (a - b).abs()));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn coherence(record: &RunRecord) -> Check {
    let v = record.summary.visibility.ok_or("no visibility")?;
    let d = record.summary.dephased_visibility.ok_or("no dephased visibility")?;
    Ok(Outcome::new(v > 0.5 && d < 0.05, format!("visibility {v:.4} coherent (> 0.5), {d:.4} dephased (< 0.05)")))
}

fn oracle_equivalence() -> Check {
    let grid = SpatialGrid::new(512, 32)?;
    let t = units::bloch_period(FORCE)? / 8.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for spin in [Spin::One, Spin::Zero] {
        let psi = initial_packet(spin, grid, false);
        let n = (t / 0.05).round() as usize;
        let mut cfg = EvolutionConfig::new(lattice(spin), ForceSchedule::constant(FORCE), t / n as f64, t);
        cfg.sample_every = n;
        cfg.splitting = Splitting::Rkn4;
        let spectral = bloch_cat::evolve(&psi, &cfg)?;
        let m = (t / 0.005).round() as usize;
        let mut direct_cfg = EvolutionConfig::new(lattice(spin), ForceSchedule::constant(FORCE), t / m as f64, t);
        direct_cfg.sample_every = m;
        let direct = bloch_cat::evolve_direct_oracle(&psi, &direct_cfg, &DirectConfig::default())?;
        let l2 = runner::l2_distance(&spectral.final_state, &crop_to(&direct.final_state, grid)?)?;
        pass &= l2 < 1e-5;
        parts.push(format!("spin {spin}: ‖ψ_spectral − ψ_CN‖ = {l2:.2e}"));
    }
    Ok(Outcome::new(pass, format!("512 sites, T/8: {}", parts.join("; "))))
}

fn conservation(record: &RunRecord) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();

    let norm = record.summary.spins.iter().filter_map(|s| s.norm_drift).fold(0.0, f64::max);
    pass &= norm < 1e-8;
    parts.push(format!("norm drift {norm:.1e}/period"));

    let grid = SpatialGrid::new(128, 32)?;
    let period = units::bloch_period(FORCE)?;
    let mut energy: f64 = 0.0;
    for spin in [Spin::One, Spin::Zero] {
        for switched in [false, true] {
            let psi = initial_packet(spin, grid, switched);
            let steps = (period / 0.025 / 256.0).round() as usize * 256;
            let mut cfg = EvolutionConfig::new(lattice(spin), ForceSchedule::constant(0.0), period / steps as f64, period);
            cfg.sample_every = steps / 256;
            cfg.splitting = Splitting::Rkn4;
            let rec = bloch_cat::evolve(&psi, &cfg)?;
            let e0 = rec.samples[0].energy;
            energy = rec.samples.iter().map(|s| (s.energy - e0).abs()).fold(energy, f64::max);
        }
    }
    pass &= energy < 1e-8;
    parts.push(format!("F = 0 energy drift {energy:.1e} E_r"));

    let t = period / 8.0;
    let mut orders = Vec::new();
    for spin in [Spin::One, Spin::Zero] {
        let psi = initial_packet(spin, grid, true);
        let n = (t / 0.1).round() as usize;
        let finals = [1, 2, 4]
            .iter()
            .map(|&k| {
                let mut cfg = EvolutionConfig::new(lattice(spin), ForceSchedule::constant(FORCE), t / (n * k) as f64, t);
                cfg.sample_every = n * k;
                bloch_cat::evolve(&psi, &cfg).map(|r| r.final_state)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let d1 = runner::l2_distance(&finals[0], &finals[1])?;
        let d2 = runner::l2_distance(&finals[1], &finals[2])?;
        orders.push((d1 / d2).log2());
    }
    pass &= orders.iter().all(|p| (p - 2.0).abs() < 0.25);
    parts.push(format!("(dt, dt/2, dt/4) order {:.2} / {:.2}", orders[0], orders[1]));

    let mut cutoff: f64 = 0.0;
    for spin in [Spin::One, Spin::Zero] {
        let a = BandStructure::solve(&lattice(spin), 65, 3, 15)?;
        let b = BandStructure::solve(&lattice(spin), 65, 3, 20)?;
        for (ea, eb) in a.energies.iter().zip(&b.energies) {
            cutoff = ea.iter().zip(eb).map(|(x, y)| (x - y).abs()).fold(cutoff, f64::max);
        }
    }
    pass &= cutoff <= 1e-10;
    parts.push(format!("cutoff 15 → 20 shift {cutoff:.1e} E_r"));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn analytic_limits() -> Check {
    let free = BandStructure::solve_default(&PotentialSpec::free(Spin::One), 2)?;
    let dispersion = free.q_grid.iter().zip(&free.energies[0]).map(|(q, e)| (e - q * q).abs()).fold(0.0, f64::max);
    let width = free.band_width(0)?;

    let grid = SpatialGrid::new(64, 32)?;
    let sigma: f64 = 2.0;
    let gauss = |xi: f64, t: f64| -> Complex64 {
        let s2 = Complex64::new(sigma * sigma, t);
        let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
        (Complex64::new(sigma * sigma, 0.0) / s2).sqrt() * norm * (-xi * xi / (4.0 * s2)).exp()
    };
    let t = 20.0;
    let psi = WavePacket::from_fn(grid, |xi| gauss(xi, 0.0));
    let mut cfg = EvolutionConfig::new(PotentialSpec::free(Spin::One), ForceSchedule::constant(0.0), 0.1, t);
    cfg.sample_every = 200;
    cfg.check_domain = false;
    let rec = bloch_cat::evolve(&psi, &cfg)?;
    let exact = WavePacket::from_fn(grid, |xi| gauss(xi, t));
    let l2 = runner::l2_distance(&rec.final_state, &exact)?;
    let width_exact = (sigma * sigma + t * t / (sigma * sigma)).sqrt() / PI;
    let width_err = (rec.final_state.rms_width() - width_exact).abs() / width_exact;

    let pass = dispersion < 1e-10 && (width - 1.0).abs() < 1e-10 && l2 < 1e-6 && width_err < 1e-6;
    Ok(Outcome::new(
        pass,
        format!(
            "V_m = 0: max |E₀ − q²| {dispersion:.1e}, B = {width:.12}; free Gaussian ‖ψ − ψ_exact‖ {l2:.1e}, width error {width_err:.1e}"
        ),
    ))
}

fn variants(out: &Path, period: f64) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();

    let (cfg, _) = scenario("reverse_at_half", out, &[])?;
    let (h, rows) = read_csv(&cfg.run_dir().join("separation.csv"));
    let (t, s) = (column(&h, "t"), column(&h, "separation"));
    let after: Vec<&Vec<f64>> = rows.iter().filter(|r| r[t] > period / 2.0 + 1e-9).collect();
    let monotone = after.windows(2).all(|w| w[1][s] > w[0][s]);
    let last = after.last().ok_or("no samples after T/2")?[s];
    let oracle = 2.0 * (fd_band_width(&lattice(Spin::Zero)) - fd_band_width(&lattice(Spin::One))) / FORCE;
    pass &= monotone && last > 90.0;
    parts.push(format!(
        "reverse: increasing on (T/2, T] {monotone}, final {last:.2} a (> 90, semiclassical {oracle:.2} a)"
    ));

    let (cfg, _) = scenario("freeze_at_half", out, &[])?;
    let (h, rows) = read_csv(&cfg.run_dir().join("separation.csv"));
    let (t, s) = (column(&h, "t"), column(&h, "separation"));
    let held: Vec<f64> = rows.iter().filter(|r| r[t] >= period / 2.0 - 1e-9).map(|r| r[s]).collect();
    let span = held.iter().cloned().fold(f64::MIN, f64::max) - held.iter().cloned().fold(f64::MAX, f64::min);
    let duration = rows.last().ok_or("empty separation")?[t] - period / 2.0;
    pass &= span < 2.0 && duration >= period / 2.0 - 1e-6;
    parts.push(format!("freeze: separation spread {span:.4} a over {:.2} T", duration / period));
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn main() {
    let out = tempfile::tempdir().expect("temporary directory");
    let period = units::bloch_period(FORCE).unwrap();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, check: Check| {
        let outcome = check.unwrap_or_else(Outcome::error);
        println!("[{}] {n:>2} {name}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
        results.push((n, name, outcome));
    };

    record(1, "band width, spin 1", band_width(Spin::One));
    record(2, "band width, spin 0", band_width(Spin::Zero));
    record(3, "Bloch period", bloch_period());

    match scenario("cat", out.path(), &[]) {
        Ok((cfg, cat)) => {
            let dir = cfg.run_dir();
            record(4, "semiclassical maxima", semiclassical_maxima(&cat));
            record(5, "semiclassical vs exact", semiclassical_tracking(&dir, period));
            record(6, "momentum peaks", momentum_peaks(&cat, &dir, &cfg));
            let refined = scenario("fig2+fig3", out.path(), &["evolution.dt=0.05"]);
            record(7, "revival", refined.map_err(Into::into).and_then(|(_, r)| revival(&cat, &r)));
            record(8, "coherence witness", coherence(&cat));
            record(9, "oracle equivalence", oracle_equivalence());
            record(10, "conservation and convergence", conservation(&cat));
        }
        Err(e) => {
            for (n, name) in [
                (4, "semiclassical maxima"),
                (5, "semiclassical vs exact"),
                (6, "momentum peaks"),
                (7, "revival"),
                (8, "coherence witness"),
                (10, "conservation and convergence"),
            ] {
                record(n, name, Ok(Outcome::error(&e)));
            }
            record(9, "oracle equivalence", oracle_equivalence());
        }
    }
    record(11, "analytic limits", analytic_limits());
    record(12, "variant scenarios", variants(out.path(), period));

    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| format!("{} ({})", r.0, r.1)).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
