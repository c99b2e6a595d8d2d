//! CSV and gnuplot writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bands::BandStructure;
use crate::error::Result;
use crate::observe::{self, VisibilityScan};
use crate::packet::WavePacket;
use crate::semiclassical::TrajectoryPoint;
use crate::units::xi_to_sites;

/// Accumulates CSV text and writes it under the run directory.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if v.is_nan() {
                self.text.push_str("nan");
            } else {
                let _ = write!(self.text, "{v:.12e}");
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        fs::write(&path, &self.text)?;
        Ok(PathBuf::from(name))
    }
}

/// q (π/a), E_0, E_1, ... (E_r).
pub(crate) fn bands_csv(bands: &BandStructure) -> Csv {
    let mut header = vec!["q".to_string()];
    header.extend((0..bands.n_bands()).map(|n| format!("E_{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for row in bands.table() {
        csv.row(&row);
    }
    csv
}

/// t (τ_r), t (ms), q (π/a), Δr (a).
pub(crate) fn trajectory_csv(points: &[TrajectoryPoint], seconds_per_tau: f64) -> Csv {
    let mut csv = Csv::new(&["t", "t_ms", "q", "dr"]);
    for p in points {
        csv.row(&[p.t, p.t * seconds_per_tau * 1e3, p.q, p.displacement]);
    }
    csv
}

/// ξ (a), Re ψ, Im ψ, |ψ|² in the lab gauge (|ψ|² per unit ξ).
pub(crate) fn snapshot_csv(psi: &WavePacket) -> Csv {
    let mut csv = Csv::new(&["x", "re", "im", "density"]);
    for (j, v) in psi.lab_values().iter().enumerate() {
        csv.row(&[xi_to_sites(psi.grid.position(j)), v.re, v.im, v.norm_sqr()]);
    }
    csv
}

/// p (π/a = ħk), n(p).
pub(crate) fn momentum_csv(psi: &WavePacket) -> Csv {
    let dist = observe::momentum_distribution(psi);
    let mut csv = Csv::new(&["p", "density"]);
    for (p, n) in dist.momenta.iter().zip(&dist.density) {
        csv.row(&[*p, *n]);
    }
    csv
}

pub(crate) fn visibility_csv(coherent: &VisibilityScan, dephased: &VisibilityScan) -> Csv {
    let mut csv = Csv::new(&["azimuth", "plus", "minus", "dephased_plus", "dephased_minus"]);
    for i in 0..coherent.azimuths.len() {
        csv.row(&[coherent.azimuths[i], coherent.plus[i], coherent.minus[i], dephased.plus[i], dephased.minus[i]]);
    }
    csv
}

/// Gnuplot script plotting whichever standard artifacts exist in the run
/// directory.
pub(crate) fn gnuplot_script(artifacts: &[PathBuf]) -> String {
    let has = |name: &str| artifacts.iter().any(|p| p.as_os_str() == name);
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    if has("bands_spin1.csv") {
        s.push_str(
            "\nset output 'bands.png'\nset xlabel 'q (pi/a)'\nset ylabel 'E (E_r)'\n\
             plot for [c=2:4] 'bands_spin1.csv' using 1:c with lines dt 1 title 'spin 1, band '.(c-2), \\\n\
             \u{20}    for [c=2:4] 'bands_spin0.csv' using 1:c with lines dt 2 title 'spin 0, band '.(c-2)\n",
        );
    }
    if has("series_spin1.csv") {
        s.push_str(
            "\nset output 'com.png'\nset xlabel 't (ms)'\nset ylabel 'centre of mass (a)'\n\
             plot 'series_spin1.csv' using 2:3 with lines title 'spin 1', \\\n\
             \u{20}    'series_spin1.csv' using 2:4 with lines dt 2 title 'spin 1 semiclassical', \\\n\
             \u{20}    'series_spin0.csv' using 2:3 with lines title 'spin 0', \\\n\
             \u{20}    'series_spin0.csv' using 2:4 with lines dt 2 title 'spin 0 semiclassical'\n",
        );
    } else if has("semiclassical_spin1.csv") {
        s.push_str(
            "\nset output 'semiclassical.png'\nset xlabel 't (ms)'\nset ylabel 'dr (a)'\n\
             plot 'semiclassical_spin1.csv' using 2:4 with lines title 'spin 1', \\\n\
             \u{20}    'semiclassical_spin0.csv' using 2:4 with lines title 'spin 0'\n",
        );
    }
    if has("separation.csv") {
        s.push_str(
            "\nset output 'separation.png'\nset xlabel 't (ms)'\nset ylabel 'separation (a)'\n\
             plot 'separation.csv' using 2:3 with lines\n",
        );
    }
    if has("visibility.csv") {
        s.push_str(
            "\nset output 'visibility.png'\nset xlabel 'azimuth (rad)'\nset ylabel 'peak density'\n\
             plot for [c=2:5] 'visibility.csv' using 1:c with linespoints\n",
        );
    }
    s
}
