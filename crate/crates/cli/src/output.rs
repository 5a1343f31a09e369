//! CSV tables, run manifest and plot scripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tunnelkit::constants;

use crate::error::CliError;

pub const TRANSMISSION_HEADER: &str = "energy_ev,transmission,phase_rad,engine,flag";
pub const DELAY_HEADER: &str = "x_value,tau_fs,classification,flag";
pub const IV_HEADER: &str = "bias_v,current_a_per_m2,flag";
pub const RESONANCE_HEADER: &str = "e_peak_ev,t_peak,fwhm_ev,censored";

/// Twelve significant digits in scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

/// Accumulates the files of one run and writes them under `dir`.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, contents)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut s = String::with_capacity(64 * (rows.len() + 1));
        s.push_str(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.write(name, &s)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub constants: BTreeMap<&'static str, f64>,
    pub settings: BTreeMap<&'static str, String>,
    pub files: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn write_manifest(
    out: &mut OutputDir,
    command: &str,
    config_text: &str,
    settings: BTreeMap<&'static str, String>,
) -> Result<(), CliError> {
    let constants = BTreeMap::from([
        ("hbar2_over_2me_ev_nm2", constants::HBAR2_OVER_2ME),
        ("hbar_ev_fs", constants::HBAR_EV_FS),
        ("boltzmann_ev_per_k", constants::BOLTZMANN_EV_PER_K),
        ("elementary_charge_c", constants::ELEMENTARY_CHARGE),
        ("electron_mass_kg", constants::ELECTRON_MASS_KG),
        ("hbar_j_s", constants::HBAR_SI),
    ]);
    let mut files = out.files().to_vec();
    files.sort();
    let m = Manifest {
        tool: "tunnelkit",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(config_text.as_bytes()),
        constants,
        settings,
        files,
    };
    let json = serde_json::to_string_pretty(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
    out.write("manifest.json", &(json + "\n"))?;
    Ok(())
}

/// gnuplot script plotting columns `x:y` of each CSV.
pub fn plot_script(title: &str, xlabel: &str, ylabel: &str, logy: bool, series: &[(String, usize, usize)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    if logy {
        let _ = writeln!(s, "set logscale y");
    }
    let parts: Vec<String> = series
        .iter()
        .map(|(file, x, y)| format!("'{file}' using {x}:{y} with lines title '{file}'"))
        .collect();
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}
