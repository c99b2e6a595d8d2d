//! Scenario engine: config → bands → packets → dual-spin evolution →
//! observables → files.
//!
//! Every run writes into `<output_dir>/<scenario>-<hash>/`, where the hash
//! covers the full effective config, and finishes with `record.json`.

mod config;
mod output;

pub use config::{
    parse_config, parse_config_with, CoherenceConfig, ConvergenceConfig, EvolutionSettings, GridConfig,
    LatticeConfig, PacketConfig, PacketShape, Scenario, ScenarioConfig, ScheduleKind, UnitsConfig,
};

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::{BandStructure, CUTOFF_TOLERANCE, DEFAULT_Q_POINTS};
use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolutionConfig, EvolutionRecord};
use crate::grid::SpatialGrid;
use crate::lattice::{PotentialSpec, Spin};
use crate::observe::{self, Fidelity, SpinorState};
use crate::packet::{self, WavePacket};
use crate::schedule::ForceSchedule;
use crate::semiclassical::piecewise_trajectory;
use crate::units::{self, BlochPeriod, UnitSystem};
use output::Csv;

/// Schema tag of `record.json`.
pub const SCHEMA: &str = "bloch-cat/run-record/v1";

/// Both return overlaps must exceed this for χ to be followed continuously.
pub const REVIVAL_OVERLAP: f64 = 1e-2;

/// Half-width of the raised-cosine weights per unit Gaussian width, chosen so
/// both shapes give the same r.m.s. quasimomentum spread.
pub const RAISED_COSINE_SCALE: f64 = 1.767_431_457_526_130_7;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Evolve the two spins on separate threads when ≥ 2.
    pub threads: usize,
    /// Also write `plot.gp`.
    pub gnuplot: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { threads: 2, gnuplot: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub config: ScenarioConfig,
    pub config_hash: String,
    /// Files written, relative to the run directory.
    pub artifacts: Vec<PathBuf>,
    pub summary: Summary,
}

impl RunRecord {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunRecord = serde_json::from_str(text)?;
        if r.schema != SCHEMA {
            return Err(Error::Config(format!("unsupported record schema `{}`", r.schema)));
        }
        r.config.validate()?;
        Ok(r)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub bloch_period: Option<BlochPeriod>,
    /// Lattice tilt φ (degrees) giving the configured force via F = mg sin φ.
    pub tilt_angle_deg: Option<f64>,
    /// Time step actually used (τ_r).
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub spins: Vec<SpinSummary>,
    /// Lowest-band separation (a) at T/2.
    pub separation_half_period: Option<f64>,
    /// Lowest-band separation (a) at the end of the run.
    pub separation_final: Option<f64>,
    /// phase₁ − phase₀ of the return fidelities at the end of the run, on the
    /// branch continuous over the final stretch where both overlaps exceed
    /// [`REVIVAL_OVERLAP`]; starts in (−π, π].
    pub chi: Option<f64>,
    pub visibility: Option<f64>,
    pub dephased_visibility: Option<f64>,
    pub convergence: Option<ConvergenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSummary {
    pub spin: Spin,
    /// Lowest band width (E_r).
    pub band_width: f64,
    pub band_width_hz: f64,
    /// Semiclassical B/F (a).
    pub max_displacement: Option<f64>,
    /// Largest lowest-band centre of mass reached (a).
    pub max_com: Option<f64>,
    /// Lowest-band centre of mass at the end of the run (a).
    pub final_com: Option<f64>,
    /// Position of the global maximum of n(p) at T/2 (π/a).
    pub momentum_peak_half_period: Option<f64>,
    pub fidelity: Option<Fidelity>,
    pub final_populations: Vec<f64>,
    pub norm_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// The (dt, dt/2, dt/4) triple (τ_r).
    pub dt: [f64; 3],
    pub t_final: f64,
    pub spins: Vec<SpinConvergence>,
    /// Largest band-energy change under L → L+5 (E_r).
    pub cutoff_change: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinConvergence {
    pub spin: Spin,
    /// Final ⟨ξ⟩ (a) for each step of the triple.
    pub com: [f64; 3],
    /// ‖ψ(dt) − ψ(dt/2)‖ and ‖ψ(dt/2) − ψ(dt/4)‖.
    pub l2_differences: [f64; 2],
    /// log₂ of the ratio of the two differences.
    pub observed_order: f64,
    /// Change of the final ⟨ξ⟩ (a) when the points per site are doubled.
    pub grid_com_change: f64,
    /// Norm drift extrapolated to one Bloch period.
    pub norm_drift_per_period: f64,
}

/// Run with default options.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunRecord> {
    run_scenario_with(cfg, &RunOptions::default())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunRecord> {
    cfg.validate()?;
    let dir = cfg.run_dir();
    fs::create_dir_all(&dir)?;
    let ctx = |e: Error| e.context(format!("scenario {}", cfg.scenario));

    let mut run = Run { cfg, opts, dir: &dir, artifacts: Vec::new(), summary: Summary::default() };
    run.execute().map_err(ctx)?;

    if opts.gnuplot {
        fs::write(dir.join("plot.gp"), output::gnuplot_script(&run.artifacts))?;
        run.artifacts.push("plot.gp".into());
    }
    let Run { artifacts, summary, .. } = run;
    let failed = summary.convergence.as_ref().is_some_and(|c| !c.passed);
    let record = RunRecord {
        schema: SCHEMA.to_string(),
        config: cfg.clone(),
        config_hash: cfg.hash(),
        artifacts,
        summary,
    };
    fs::write(dir.join("record.json"), record.to_json()?)?;
    if failed {
        return Err(Error::Convergence(format!("self-test failed; see {}", dir.join("record.json").display())));
    }
    Ok(record)
}

/// Directory a config writes to.
pub fn run_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.run_dir()
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    opts: &'a RunOptions,
    dir: &'a Path,
    artifacts: Vec<PathBuf>,
    summary: Summary,
}

/// Time grid shared by both spins.
#[derive(Debug, Clone, Copy)]
struct Timing {
    period: f64,
    dt: f64,
    steps: usize,
    sample_every: usize,
}

impl Timing {
    fn t_final(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

struct SpinRun {
    spin: Spin,
    initial: WavePacket,
    record: EvolutionRecord,
    trajectory: Vec<f64>,
}

impl Run<'_> {
    fn execute(&mut self) -> Result<()> {
        let units = self.cfg.unit_system()?;
        let bands = self.solve_bands(&units)?;
        match self.cfg.scenario {
            Scenario::Fig1 => {}
            Scenario::Semiclassical => self.semiclassical(&units, &bands)?,
            Scenario::Convergence => self.convergence()?,
            _ => self.evolution(&units, &bands)?,
        }
        Ok(())
    }

    fn save(&mut self, csv: &Csv, name: &str) -> Result<()> {
        self.artifacts.push(csv.write(self.dir, name)?);
        Ok(())
    }

    fn final_potential(&self, spin: Spin) -> Result<PotentialSpec> {
        PotentialSpec::new(spin, self.cfg.lattice.depth, self.cfg.lattice.theta_final)
    }

    /// Band tables of the post-switch lattice for both spins; fills the
    /// per-spin summary.
    fn solve_bands(&mut self, units: &UnitSystem) -> Result<[BandStructure; 2]> {
        let force = self.cfg.evolution.force;
        let mut out = Vec::with_capacity(2);
        for spin in Spin::BOTH {
            let pot = self.final_potential(spin)?;
            let bands = BandStructure::solve(&pot, DEFAULT_Q_POINTS, self.cfg.lattice.bands, self.cfg.lattice.cutoff)
                .map_err(|e| e.context(format!("bands, spin {spin}")))?;
            self.save(&output::bands_csv(&bands), &format!("bands_spin{}.csv", spin.index()))?;
            let width = bands.band_width(0)?;
            self.summary.spins.push(SpinSummary {
                spin,
                band_width: width,
                band_width_hz: width * units.recoil_energy().hertz,
                max_displacement: (force > 0.0).then(|| width / force),
                max_com: None,
                final_com: None,
                momentum_peak_half_period: None,
                fidelity: None,
                final_populations: Vec::new(),
                norm_drift: None,
            });
            out.push(bands);
        }
        if force > 0.0 {
            self.summary.bloch_period = Some(units.bloch_period(force)?);
            self.summary.tilt_angle_deg = units.tilt_from_force(force).ok().map(f64::to_degrees);
        }
        let mut it = out.into_iter();
        Ok([it.next().unwrap(), it.next().unwrap()])
    }

    fn schedule(&self, period: f64) -> ForceSchedule {
        let f = self.cfg.evolution.force;
        match self.cfg.schedule_kind() {
            ScheduleKind::Constant => ForceSchedule::constant(f),
            ScheduleKind::ReverseAtHalf => ForceSchedule::reverse_at(f, period / 2.0),
            ScheduleKind::FreezeAtHalf => ForceSchedule::freeze_at(f, period / 2.0),
        }
    }

    fn timing(&self) -> Result<Timing> {
        let e = &self.cfg.evolution;
        let period = units::bloch_period(e.force)?;
        let blocks = ((period / e.dt) / e.samples as f64).round().max(1.0) as usize;
        let per_period = blocks * e.samples;
        let dt = period / per_period as f64;
        let periods = if self.cfg.scenario == Scenario::Coherence { 0.5 } else { e.periods };
        let steps = ((periods * per_period as f64).round() as usize).max(1);
        Ok(Timing { period, dt, steps, sample_every: blocks })
    }

    fn semiclassical(&mut self, units: &UnitSystem, bands: &[BandStructure; 2]) -> Result<()> {
        let t = self.timing()?;
        let schedule = self.schedule(t.period);
        let n = self.cfg.evolution.samples as f64 * self.cfg.evolution.periods;
        let n = n.round().max(1.0) as usize;
        let times: Vec<f64> = (0..=n).map(|i| t.t_final() * i as f64 / n as f64).collect();
        for (spin, b) in Spin::BOTH.into_iter().zip(bands) {
            let traj = piecewise_trajectory(b, 0, &schedule, 0.0, &times)?;
            let csv = output::trajectory_csv(&traj, units.recoil_time());
            self.save(&csv, &format!("semiclassical_spin{}.csv", spin.index()))?;
        }
        Ok(())
    }

    fn initial_packet(&self, spin: Spin, grid: SpatialGrid) -> Result<WavePacket> {
        let l = &self.cfg.lattice;
        let pot = PotentialSpec::new(spin, l.depth, l.theta_initial)?;
        let bands = BandStructure::solve_commensurate(&pot, grid.n_sites, 1, l.cutoff)?;
        let w = self.cfg.packet.width;
        let weights = match self.cfg.packet.shape {
            PacketShape::Gaussian => packet::gaussian_weights(w, &bands.q_grid)?,
            PacketShape::RaisedCosine => packet::raised_cosine_weights(RAISED_COSINE_SCALE * w, &bands.q_grid)?,
        };
        packet::build_packet(&bands, &weights, grid)
    }

    fn evolution_config(&self, spin: Spin, t: &Timing, initial: &WavePacket) -> Result<EvolutionConfig> {
        let e = &self.cfg.evolution;
        let mut cfg = EvolutionConfig::new(self.final_potential(spin)?, self.schedule(t.period), t.dt, t.t_final());
        cfg.sample_every = t.sample_every;
        cfg.tracked_bands = e.tracked_bands;
        cfg.cutoff = self.cfg.lattice.cutoff;
        cfg.splitting = e.splitting;
        cfg.reference = Some(initial.clone());
        let n = e.snapshots;
        let mut snaps: Vec<f64> = (0..n).map(|i| t.t_final() * i as f64 / (n - 1) as f64).collect();
        if t.period / 2.0 <= t.t_final() + 1e-9 {
            snaps.push(t.period / 2.0);
        }
        cfg.snapshot_times = snaps;
        Ok(cfg)
    }

    fn run_spin(&self, spin: Spin, t: &Timing, grid: SpatialGrid, bands: &BandStructure) -> Result<SpinRun> {
        let initial = self.initial_packet(spin, grid)?;
        let cfg = self.evolution_config(spin, t, &initial)?;
        let record = evolve(&initial, &cfg)?;
        let times = record.times();
        let trajectory = piecewise_trajectory(bands, 0, &cfg.schedule, 0.0, &times)?
            .into_iter()
            .map(|p| p.displacement)
            .collect();
        Ok(SpinRun { spin, initial, record, trajectory })
    }

    fn active_spins(&self) -> Vec<Spin> {
        let (a, b) = self.cfg.amplitudes();
        let mut s = Vec::new();
        if a.norm_sqr() > 1e-14 {
            s.push(Spin::Zero);
        }
        if b.norm_sqr() > 1e-14 {
            s.push(Spin::One);
        }
        s
    }

    fn evolve_spins(&self, t: &Timing, grid: SpatialGrid, bands: &[BandStructure; 2]) -> Result<Vec<SpinRun>> {
        let spins = self.active_spins();
        let job = |spin: Spin| {
            self.run_spin(spin, t, grid, &bands[spin.index()]).map_err(|e| e.context(format!("spin {spin}")))
        };
        if self.opts.threads >= 2 && spins.len() == 2 {
            std::thread::scope(|s| {
                let handles: Vec<_> = spins.iter().map(|&spin| s.spawn(move || job(spin))).collect();
                handles.into_iter().map(|h| h.join().expect("evolution thread panicked")).collect()
            })
        } else {
            spins.into_iter().map(job).collect()
        }
    }

    fn evolution(&mut self, units: &UnitSystem, bands: &[BandStructure; 2]) -> Result<()> {
        let t = self.timing()?;
        let grid = self.cfg.spatial_grid()?;
        let runs = self.evolve_spins(&t, grid, bands)?;
        let ms = units.recoil_time() * 1e3;
        self.summary.dt = Some(t.dt);
        self.summary.steps = Some(t.steps);

        for run in &runs {
            self.write_spin(run, ms)?;
        }
        if let [r0, r1] = runs.as_slice() {
            self.write_pair(r0, r1, &t, ms)?;
            if matches!(self.cfg.scenario, Scenario::Cat | Scenario::Coherence) {
                self.coherence(r0, r1, &t)?;
            }
        }
        Ok(())
    }

    fn write_spin(&mut self, run: &SpinRun, ms: f64) -> Result<()> {
        let s = run.spin.index();
        let samples = &run.record.samples;
        let n_bands = samples.first().map_or(0, |x| x.populations.len());

        let mut header: Vec<String> = [
            "t",
            "t_ms",
            "com",
            "semiclassical",
            "com_full",
            "norm",
            "energy",
            "mean_momentum",
            "mean_gradient",
        ]
        .iter()
        .map(|x| x.to_string())
        .collect();
        header.extend((0..n_bands).map(|n| format!("P_{n}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut series = Csv::new(&header);
        let mut pop_header = vec!["t".to_string(), "t_ms".to_string()];
        pop_header.extend((0..n_bands).map(|n| format!("P_{n}")));
        pop_header.push("total".into());
        let pop_header: Vec<&str> = pop_header.iter().map(String::as_str).collect();
        let mut pops = Csv::new(&pop_header);

        for (x, sc) in samples.iter().zip(&run.trajectory) {
            let mut row = vec![
                x.t,
                x.t * ms,
                x.lowest_band_com.unwrap_or(f64::NAN),
                *sc,
                x.com,
                x.norm,
                x.energy,
                x.mean_momentum,
                x.mean_gradient,
            ];
            row.extend(&x.populations);
            series.row(&row);
            let mut prow = vec![x.t, x.t * ms];
            prow.extend(&x.populations);
            prow.push(x.populations.iter().sum());
            pops.row(&prow);
        }
        self.save(&series, &format!("series_spin{s}.csv"))?;
        self.save(&pops, &format!("populations_spin{s}.csv"))?;

        for (i, (_, psi)) in run.record.snapshots.iter().enumerate() {
            self.save(&output::snapshot_csv(psi), &format!("snapshot_spin{s}_{i:02}.csv"))?;
            self.save(&output::momentum_csv(psi), &format!("momentum_spin{s}_{i:02}.csv"))?;
        }
        let mut index = Csv::new(&["index", "t", "t_ms"]);
        for (i, (ts, _)) in run.record.snapshots.iter().enumerate() {
            index.row(&[i as f64, *ts, ts * ms]);
        }
        self.save(&index, &format!("snapshots_spin{s}.csv"))?;

        let period = self.summary.bloch_period.map(|p| p.recoil_times).unwrap_or(f64::NAN);
        let fid = observe::return_fidelity(&run.record.final_state, &run.initial)?;
        let last = samples.last();
        let summary = &mut self.summary.spins[s];
        summary.max_com = samples.iter().filter_map(|x| x.lowest_band_com).reduce(f64::max);
        summary.final_com = last.and_then(|x| x.lowest_band_com);
        summary.fidelity = Some(fid);
        summary.final_populations = last.map(|x| x.populations.clone()).unwrap_or_default();
        summary.norm_drift = Some(run.record.max_norm_drift());
        summary.momentum_peak_half_period =
            run.record.snapshot_at(period / 2.0).map(|p| observe::momentum_distribution(p).peak());
        Ok(())
    }

    fn write_pair(&mut self, r0: &SpinRun, r1: &SpinRun, t: &Timing, ms: f64) -> Result<()> {
        let mut sep = Csv::new(&["t", "t_ms", "separation", "separation_full"]);
        let mut fid = Csv::new(&["t", "t_ms", "modulus_0", "phase_0", "modulus_1", "phase_1", "chi"]);
        let mut half = None;
        let mut revived = Vec::new();
        for (a, b) in r0.record.samples.iter().zip(&r1.record.samples) {
            let s = match (a.lowest_band_com, b.lowest_band_com) {
                (Some(x), Some(y)) => (y - x).abs(),
                _ => f64::NAN,
            };
            sep.row(&[a.t, a.t * ms, s, (b.com - a.com).abs()]);
            if (a.t - t.period / 2.0).abs() < 0.5 * t.dt {
                half = Some(s);
            }
            if let (Some(o0), Some(o1)) = (a.overlap, b.overlap) {
                let c = observe::relative_phase(o1.arg(), o0.arg());
                fid.row(&[a.t, a.t * ms, o0.norm(), o0.arg(), o1.norm(), o1.arg(), c]);
                if o0.norm().min(o1.norm()) < REVIVAL_OVERLAP {
                    revived.clear();
                } else {
                    revived.push(c);
                }
            }
        }
        self.save(&sep, "separation.csv")?;
        self.save(&fid, "fidelity.csv")?;
        self.summary.separation_half_period = half;
        self.summary.separation_final = match (r0.record.samples.last(), r1.record.samples.last()) {
            (Some(a), Some(b)) => a.lowest_band_com.zip(b.lowest_band_com).map(|(x, y)| (y - x).abs()),
            _ => None,
        };
        self.summary.chi = observe::unwrap_phases(&revived).last().copied();
        Ok(())
    }

    /// Microwave-rotation scan of the cat at T/2 and its dephased control.
    fn coherence(&mut self, r0: &SpinRun, r1: &SpinRun, t: &Timing) -> Result<()> {
        let c = &self.cfg.coherence;
        let half = t.period / 2.0;
        let (Some(p0), Some(p1)) = (r0.record.snapshot_at(half), r1.record.snapshot_at(half)) else {
            return Ok(());
        };
        let (alpha, beta) = self.cfg.amplitudes();
        let state = SpinorState::new(alpha, beta, p0.clone(), p1.clone())?;
        let peak = observe::momentum_distribution(p1).peak().abs();
        let azimuths = observe::azimuth_sweep(c.azimuths);
        let coherent = observe::coherence_scan(&state, c.polar, &azimuths, peak)?;
        let dephased = observe::dephased_scan(&state, c.polar, &azimuths, peak, c.dephased_samples, c.seed)?;
        self.save(&output::visibility_csv(&coherent, &dephased), "visibility.csv")?;
        self.summary.visibility = Some(coherent.visibility());
        self.summary.dephased_visibility = Some(dephased.visibility());
        Ok(())
    }

    /// Time-step triple, cutoff and grid checks on a reduced instance.
    fn convergence(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let v = &cfg.convergence;
        let period = units::bloch_period(cfg.evolution.force)?;
        let t_final = v.fraction * period;
        let n0 = (t_final / cfg.evolution.dt).round().max(1.0) as usize;
        let dts = [t_final / n0 as f64, t_final / (2 * n0) as f64, t_final / (4 * n0) as f64];
        let grid = SpatialGrid::new(v.sites, cfg.grid.points_per_site)?;
        let fine = SpatialGrid::new(v.sites, 2 * cfg.grid.points_per_site)?;

        let job = |spin: Spin| -> Result<SpinConvergence> {
            let run = |grid: SpatialGrid, dt: f64| -> Result<EvolutionRecord> {
                let initial = self.initial_packet(spin, grid)?;
                let mut e = EvolutionConfig::new(self.final_potential(spin)?, self.schedule(period), dt, t_final);
                e.sample_every = usize::MAX / 2;
                e.cutoff = cfg.lattice.cutoff;
                e.splitting = cfg.evolution.splitting;
                evolve(&initial, &e)
            };
            let recs = dts.iter().map(|&dt| run(grid, dt)).collect::<Result<Vec<_>>>()?;
            let finals: Vec<&WavePacket> = recs.iter().map(|r| &r.final_state).collect();
            let com = [0, 1, 2].map(|i| observe::center_of_mass(finals[i]));
            let l2 = [l2_distance(finals[0], finals[1])?, l2_distance(finals[1], finals[2])?];
            let refined = run(fine, dts[0])?;
            Ok(SpinConvergence {
                spin,
                com,
                l2_differences: l2,
                observed_order: (l2[0] / l2[1]).log2(),
                grid_com_change: (observe::center_of_mass(&refined.final_state) - com[0]).abs(),
                norm_drift_per_period: recs[0].max_norm_drift() / v.fraction,
            })
        };
        let spins: Vec<SpinConvergence> = if self.opts.threads >= 2 {
            std::thread::scope(|s| {
                let h: Vec<_> = Spin::BOTH.iter().map(|&spin| s.spawn(move || job(spin))).collect();
                h.into_iter().map(|h| h.join().expect("convergence thread panicked")).collect::<Result<_>>()
            })?
        } else {
            Spin::BOTH.into_iter().map(job).collect::<Result<_>>()?
        };

        let mut cutoff_change: f64 = 0.0;
        for spin in Spin::BOTH {
            let pot = self.final_potential(spin)?;
            let n = cfg.lattice.bands;
            let a = BandStructure::solve(&pot, 65, n, cfg.lattice.cutoff)?;
            let b = BandStructure::solve(&pot, 65, n, cfg.lattice.cutoff + 5)?;
            for (ea, eb) in a.energies.iter().zip(&b.energies) {
                for (x, y) in ea.iter().zip(eb) {
                    cutoff_change = cutoff_change.max((x - y).abs());
                }
            }
        }

        let passed = cutoff_change <= CUTOFF_TOLERANCE
            && spins.iter().all(|s| {
                (s.com[1] - s.com[2]).abs() <= v.com_tolerance
                    && s.grid_com_change <= v.com_tolerance
                    && s.norm_drift_per_period < 1e-8
            });
        let mut csv = Csv::new(&["spin", "dt", "com", "l2_to_next"]);
        for s in &spins {
            for i in 0..3 {
                csv.row(&[s.spin.index() as f64, dts[i], s.com[i], if i < 2 { s.l2_differences[i] } else { f64::NAN }]);
            }
        }
        self.save(&csv, "convergence.csv")?;
        self.summary.convergence = Some(ConvergenceReport { dt: dts, t_final, spins, cutoff_change, passed });
        Ok(())
    }
}

/// ‖a − b‖ in the lab gauge.
pub fn l2_distance(a: &WavePacket, b: &WavePacket) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("L2 distance of packets on different grids".into()));
    }
    let d: f64 = if a.momentum_shift == b.momentum_shift {
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum()
    } else {
        let (la, lb) = (a.lab_values(), b.lab_values());
        la.iter().zip(&lb).map(|(x, y): (&Complex64, &Complex64)| (x - y).norm_sqr()).sum()
    };
    Ok((d * a.grid.spacing()).sqrt())
}

