//! Scenario configuration: TOML with dotted sections, energies in GHz and
//! times in ns. Unknown keys are rejected and missing keys take defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::N_QUBITS;
use crate::continuum::{build_band, calibrate_coupling, BandShape, GravononBand};
use crate::operators::{AnnealerParams, GravononCoupling, PhononParams, SingleQubitParams};
use crate::scenarios::schedule::{Schedule, ScheduleForm};
use crate::units::ghz;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FLUXSIM_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    Missing(PathBuf),
    #[error("config schema error: {0}")]
    Schema(String),
    #[error("physically invalid config: {0}")]
    Physical(String),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn schema(msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema(msg.into())
}

fn physical(msg: impl Into<String>) -> ConfigError {
    ConfigError::Physical(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub numerics: Numerics,
    pub output: Output,
    pub single_qubit: SingleQubitSection,
    pub ramsey: RamseySection,
    pub annealer: AnnealerSection,
    pub phonon: PhononSection,
    pub gravonon: GravononSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub dt: f64,
    pub anneal_dt: f64,
    pub stride: usize,
    pub dense_threshold: usize,
    pub norm_tolerance: f64,
    pub krylov_tolerance: f64,
    pub krylov_max_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub directory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandSection {
    pub n_modes: usize,
    pub center: f64,
    pub halfwidth: f64,
    /// Golden-rule lifetime (ns) used to calibrate the coupling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<f64>,
    /// Explicit coupling (GHz); excludes `lifetime`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleQubitSection {
    pub e_qubit: [f64; 2],
    pub e_warp: [f64; 2],
    pub v_loc: [f64; 2],
    pub omega_photon: f64,
    pub v_dipole: f64,
    pub kappa_band: BandSection,
    pub lambda_band: BandSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseySection {
    pub t_final: f64,
    pub sample_interval: f64,
    /// Time by which the plateau should be reached (ns).
    pub settle_time: f64,
    /// Largest deviation from the fitted plateau tolerated after `settle_time`.
    pub settle_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub form: ScheduleForm,
    pub h0: f64,
    pub t_final: f64,
    pub qubit_scale: [f64; N_QUBITS],
    /// `[[t_ns, h_ghz], ...]` knots for `form = "table"`.
    pub table: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealerSection {
    pub j: [[f64; N_QUBITS]; N_QUBITS],
    pub bias: [f64; N_QUBITS],
    pub schedule: ScheduleSection,
    pub spectrum_points: usize,
    pub n_lowest: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhononSection {
    pub omega: f64,
    pub coupling: f64,
    pub switch_on: f64,
    pub ramp: f64,
    pub qubit: usize,
    pub n_max: usize,
    /// Phonon quanta present from t = 0.
    pub initial_occupation: usize,
    /// Ground-state weight below which the phonon counts as destructive.
    pub redistribution_threshold: f64,
    /// Excited-state weight counted as significant.
    pub excited_threshold: f64,
    /// Length of the observation windows before and after the ramp (ns).
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravononSection {
    pub band: BandSection,
    pub qubit: usize,
    pub direction: i8,
    pub lock_transverse: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 5e-3,
            anneal_dt: 0.02,
            stride: 25,
            dense_threshold: crate::propagate::DENSE_THRESHOLD,
            norm_tolerance: 1e-9,
            krylov_tolerance: 1e-13,
            krylov_max_dim: 40,
        }
    }
}

impl Default for Output {
    fn default() -> Self {
        Self { directory: std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| "out".into()) }
    }
}

impl BandSection {
    fn with_lifetime(n_modes: usize, halfwidth: f64, lifetime: f64) -> Self {
        Self { n_modes, center: 0.0, halfwidth, lifetime: Some(lifetime), coupling: None }
    }
}

impl Default for BandSection {
    fn default() -> Self {
        Self::with_lifetime(200, 0.5, 16.0)
    }
}

impl Default for SingleQubitSection {
    fn default() -> Self {
        Self {
            e_qubit: [0.0, -6.58],
            e_warp: [0.0, -6.58],
            v_loc: [0.15, 0.15],
            omega_photon: 6.6,
            v_dipole: 0.05,
            kappa_band: BandSection::default(),
            lambda_band: BandSection::default(),
        }
    }
}

impl Default for RamseySection {
    fn default() -> Self {
        Self { t_final: 150.0, sample_interval: 0.1, settle_time: 50.0, settle_tolerance: 0.1 }
    }
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self { form: ScheduleForm::Linear, h0: 0.5, t_final: 2000.0, qubit_scale: [1.0, 1.0, 0.02, 1.0], table: Vec::new() }
    }
}

impl Default for AnnealerSection {
    fn default() -> Self {
        // Unique Ising minimum |1,1,1,-1⟩ behind a 0.077 GHz avoided
        // crossing near t = 1320 ns; qubit 3 stays polarized throughout and
        // flips at ≈0.75 GHz, one phonon quantum ω/2.
        Self {
            j: [[0.0, -0.1, -0.1, -0.3], [-0.1, 0.0, 0.1, 0.4], [-0.1, 0.1, 0.0, 0.1], [-0.3, 0.4, 0.1, 0.0]],
            bias: [-0.2, -0.2, -0.3, 0.1],
            schedule: ScheduleSection::default(),
            spectrum_points: 801,
            n_lowest: 6,
        }
    }
}

impl Default for PhononSection {
    fn default() -> Self {
        Self {
            omega: 1.5,
            coupling: 0.3,
            switch_on: 400.0,
            ramp: 1.0,
            qubit: 3,
            n_max: 1,
            initial_occupation: 1,
            redistribution_threshold: 0.8,
            excited_threshold: 0.02,
            window: 200.0,
        }
    }
}

impl Default for GravononSection {
    fn default() -> Self {
        Self { band: BandSection::with_lifetime(200, 0.05, 25.0), qubit: 3, direction: 1, lock_transverse: true }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            numerics: Numerics::default(),
            output: Output::default(),
            single_qubit: SingleQubitSection::default(),
            ramsey: RamseySection::default(),
            annealer: AnnealerSection::default(),
            phonon: PhononSection::default(),
            gravonon: GravononSection::default(),
        }
    }
}

/// Reads and validates a config file, applying `key=value` overrides.
pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    parse_config_with(path, &[])
}

pub fn parse_config_with(path: &Path, overrides: &[String]) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::Missing(path.to_path_buf()),
        _ => ConfigError::Io { path: path.to_path_buf(), source: e },
    })?;
    parse_config_str(&text, overrides).map_err(|e| match e {
        ConfigError::Schema(m) => schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| schema(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: Config = Config::deserialize(toml::Value::Table(table)).map_err(|e| schema(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Sets a dotted key; the value is read as TOML, falling back to a string.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| schema(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(schema(format!("bad override key `{key}`")));
    }
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        node = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| schema(format!("override key `{key}`: `{p}` is not a section")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(schema(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(schema(format!("{name} must be finite")))
    }
}

impl BandSection {
    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if self.n_modes == 0 {
            return Err(schema(format!("{name}.n_modes must be at least 1")));
        }
        positive(&format!("{name}.halfwidth"), self.halfwidth)?;
        finite(&format!("{name}.center"), &[self.center])?;
        match (self.lifetime, self.coupling) {
            (Some(_), Some(_)) => Err(physical(format!("{name}: give either lifetime or coupling, not both"))),
            (Some(t), None) => positive(&format!("{name}.lifetime"), t),
            (None, Some(w)) if !(w >= 0.0) || !w.is_finite() => {
                Err(schema(format!("{name}.coupling must be non-negative, got {w}")))
            }
            _ => Ok(()),
        }
    }

    /// Band in rad/ns; without lifetime or coupling the band is uncoupled.
    pub fn build(&self) -> crate::Result<GravononBand> {
        let shape = BandShape { n_modes: self.n_modes, center: ghz(self.center), halfwidth: ghz(self.halfwidth) };
        let w = match (self.lifetime, self.coupling) {
            (Some(t), _) => calibrate_coupling(shape, t)?,
            (None, Some(w)) => ghz(w),
            (None, None) => 0.0,
        };
        build_band(shape.n_modes, shape.center, shape.halfwidth, w)
    }
}

impl Config {
    /// The phonon switch-on and both observation windows must fit inside
    /// the anneal. Only the phonon scenarios need this.
    pub fn check_phonon_windows(&self) -> Result<(), ConfigError> {
        let p = &self.phonon;
        let t_f = self.annealer.schedule.t_final;
        if p.switch_on <= 0.0 || p.switch_on >= t_f {
            return Err(physical("phonon.switch_on must lie inside the anneal"));
        }
        if p.switch_on + 0.5 * p.ramp + p.window > t_f || p.switch_on - 0.5 * p.ramp - p.window < 0.0 {
            return Err(physical("phonon observation windows must fit inside the anneal"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.numerics;
        positive("numerics.dt", n.dt)?;
        positive("numerics.anneal_dt", n.anneal_dt)?;
        positive("numerics.norm_tolerance", n.norm_tolerance)?;
        positive("numerics.krylov_tolerance", n.krylov_tolerance)?;
        if n.stride == 0 || n.krylov_max_dim < 2 || n.dense_threshold == 0 {
            return Err(schema("numerics.stride, dense_threshold must be ≥ 1 and krylov_max_dim ≥ 2"));
        }
        if self.output.directory.is_empty() {
            return Err(schema("output.directory must not be empty"));
        }

        let s = &self.single_qubit;
        finite("single_qubit energies", &[s.e_qubit[0], s.e_qubit[1], s.e_warp[0], s.e_warp[1]])?;
        finite("single_qubit couplings", &[s.v_loc[0], s.v_loc[1], s.omega_photon, s.v_dipole])?;
        s.kappa_band.validate("single_qubit.kappa_band")?;
        s.lambda_band.validate("single_qubit.lambda_band")?;

        let r = &self.ramsey;
        positive("ramsey.t_final", r.t_final)?;
        positive("ramsey.sample_interval", r.sample_interval)?;
        positive("ramsey.settle_tolerance", r.settle_tolerance)?;
        if !(r.settle_time >= 0.0) {
            return Err(schema("ramsey.settle_time must be non-negative"));
        }
        if r.sample_interval > r.t_final || r.settle_time >= r.t_final {
            return Err(physical("ramsey.sample_interval and settle_time must lie inside t_final"));
        }

        let a = &self.annealer;
        positive("annealer.schedule.t_final", a.schedule.t_final)?;
        if !(a.schedule.h0 >= 0.0) || !a.schedule.h0.is_finite() {
            return Err(schema("annealer.schedule.h0 must be non-negative"));
        }
        for row in &a.j {
            finite("annealer.j", row)?;
        }
        finite("annealer.bias", &a.bias)?;
        for x in 0..N_QUBITS {
            if a.j[x][x] != 0.0 {
                return Err(physical(format!("annealer.j[{x}][{x}] must be zero")));
            }
            for y in 0..N_QUBITS {
                if a.j[x][y] != a.j[y][x] {
                    return Err(physical(format!("annealer.j must be symmetric: j[{x}][{y}] ≠ j[{y}][{x}]")));
                }
            }
        }
        if a.spectrum_points < 3 || a.n_lowest < 2 || a.n_lowest > 16 {
            return Err(schema("annealer.spectrum_points ≥ 3 and 2 ≤ n_lowest ≤ 16 required"));
        }
        self.schedule().map_err(|e| physical(format!("annealer.schedule: {e}")))?;

        let p = &self.phonon;
        finite("phonon", &[p.omega, p.coupling, p.switch_on])?;
        if !(p.ramp >= 0.0) || !(1..=N_QUBITS).contains(&p.qubit) || p.n_max == 0 {
            return Err(schema("phonon.ramp ≥ 0, phonon.qubit in 1..=4 and phonon.n_max ≥ 1 required"));
        }
        if p.initial_occupation > p.n_max {
            return Err(physical("phonon.initial_occupation must not exceed phonon.n_max"));
        }
        positive("phonon.window", p.window)?;

        let g = &self.gravonon;
        g.band.validate("gravonon.band")?;
        if !(1..=N_QUBITS).contains(&g.qubit) || (g.direction != 1 && g.direction != -1) {
            return Err(schema("gravonon.qubit in 1..=4 and gravonon.direction = ±1 required"));
        }
        Ok(())
    }

    pub fn single_qubit_params(&self) -> crate::Result<SingleQubitParams> {
        let s = &self.single_qubit;
        Ok(SingleQubitParams {
            e_qubit: s.e_qubit.map(ghz),
            e_warp: s.e_warp.map(ghz),
            v_loc: s.v_loc.map(ghz),
            omega_photon: ghz(s.omega_photon),
            v_dipole: ghz(s.v_dipole),
            kappa_band: s.kappa_band.build()?,
            lambda_band: s.lambda_band.build()?,
        })
    }

    pub fn schedule(&self) -> crate::Result<Schedule> {
        let s = &self.annealer.schedule;
        let mut schedule = match s.form {
            ScheduleForm::Linear => Schedule::linear(ghz(s.h0), s.t_final),
            ScheduleForm::Cosine => Schedule::cosine(ghz(s.h0), s.t_final),
            ScheduleForm::Table => {
                let mut t = Schedule::table(s.table.iter().map(|k| (k[0], ghz(k[1]))).collect())?;
                if (t.t_final - s.t_final).abs() > 1e-9 {
                    return Err(crate::Error::InvalidArgument(format!(
                        "table ends at {} ns but t_final is {} ns",
                        t.t_final, s.t_final
                    )));
                }
                t.h0 = 1.0;
                t
            }
        };
        schedule.qubit_scale = s.qubit_scale;
        schedule.validate()?;
        Ok(schedule)
    }

    /// Annealer parameters without perturbations.
    pub fn annealer_params(&self) -> crate::Result<AnnealerParams> {
        let a = &self.annealer;
        Ok(AnnealerParams {
            j_matrix: a.j.map(|row| row.map(ghz)),
            bias: a.bias.map(ghz),
            schedule: self.schedule()?,
            phonon: None,
            gravonon: None,
        })
    }

    pub fn phonon_params(&self) -> PhononParams {
        let p = &self.phonon;
        PhononParams { omega: ghz(p.omega), coupling: ghz(p.coupling), switch_on: p.switch_on, ramp: p.ramp, qubit: p.qubit }
    }

    pub fn gravonon_coupling(&self) -> crate::Result<GravononCoupling> {
        let g = &self.gravonon;
        Ok(GravononCoupling { band: g.band.build()?, qubit: g.qubit, direction: g.direction, lock_transverse: g.lock_transverse })
    }

    /// Annotated TOML of this config.
    pub fn to_annotated_toml(&self) -> String {
        let plain = toml::to_string(self).expect("config serializes");
        let mut out = String::from(HEADER);
        let mut section = String::new();
        for line in plain.lines() {
            let trimmed = line.trim();
            if trimmed.starts_with('[') {
                section = trimmed.trim_matches(|c| c == '[' || c == ']').to_string();
                out.push('\n');
            } else if let Some((key, _)) = trimmed.split_once(" = ") {
                let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
                if let Some(doc) = doc_for(&full) {
                    out.push_str("# ");
                    out.push_str(doc);
                    out.push('\n');
                }
            }
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

const HEADER: &str = "\
# fluxsim configuration. Energies in GHz (multiplied by 2π on load), times in ns.
# Every key is optional; missing keys take the values shown here.
";

fn doc_for(key: &str) -> Option<&'static str> {
    let band = |k: &str| -> Option<&'static str> {
        Some(match k {
            "n_modes" => "number of discrete band modes",
            "center" => "band centre, measured from the energy of the state the band is attached to",
            "halfwidth" => "band halfwidth; recurrence time is 2π·n_modes/(2·halfwidth·2π) ns",
            "lifetime" => "golden-rule lifetime (ns) that fixes the coupling W = sqrt(1/(2π ρ τ))",
            "coupling" => "explicit coupling W instead of a lifetime",
            _ => return None,
        })
    };
    if let Some(rest) = key
        .strip_prefix("single_qubit.kappa_band.")
        .or_else(|| key.strip_prefix("single_qubit.lambda_band."))
        .or_else(|| key.strip_prefix("gravonon.band."))
    {
        return band(rest);
    }
    Some(match key {
        "seed" => "recorded in the summary; all scenarios are deterministic",
        "numerics.dt" => "time step of the single-qubit propagator",
        "numerics.anneal_dt" => "time step of the annealer propagators",
        "numerics.stride" => "keep every stride-th step as a snapshot",
        "numerics.dense_threshold" => "largest dimension for dense diagonalization",
        "numerics.norm_tolerance" => "norm drift above this aborts with exit code 3",
        "numerics.krylov_tolerance" => "per-step truncation bound of the Lanczos exponential",
        "numerics.krylov_max_dim" => "Krylov dimension before a step is split",
        "output.directory" => "default output directory (overridden by --out or FLUXSIM_OUT)",
        "single_qubit.e_qubit" => "loop-current energies (clockwise, anticlockwise)",
        "single_qubit.e_warp" => "warp-region energies (clockwise, anticlockwise)",
        "single_qubit.v_loc" => "loop-warp tunnelling per direction",
        "single_qubit.omega_photon" => "photon energy",
        "single_qubit.v_dipole" => "dipole coupling between the two loop currents",
        "ramsey.t_final" => "length of the Ramsey traces",
        "ramsey.sample_interval" => "spacing of trace samples",
        "ramsey.settle_time" => "time by which the current weight should sit on its plateau",
        "ramsey.settle_tolerance" => "largest deviation from the plateau after settle_time",
        "annealer.j" => "couplings J (symmetric, zero diagonal); the Ising sum runs over ordered pairs",
        "annealer.bias" => "single-qubit energies b σz (loop-current asymmetry)",
        "annealer.spectrum_points" => "time samples of the instantaneous spectrum",
        "annealer.n_lowest" => "eigenstates reported in spectra and populations",
        "annealer.schedule.form" => "linear, cosine or table",
        "annealer.schedule.h0" => "initial transverse field",
        "annealer.schedule.t_final" => "anneal time; fields reach zero here",
        "annealer.schedule.qubit_scale" => "per-qubit multiplier of the field",
        "annealer.schedule.table" => "[[t, h], ...] knots for form = \"table\"",
        "phonon.omega" => "phonon frequency (the phonon energy term is ω/2 · n)",
        "phonon.coupling" => "qubit-phonon coupling",
        "phonon.switch_on" => "centre of the switch-on ramp",
        "phonon.ramp" => "width of the raised-cosine ramp",
        "phonon.qubit" => "qubit driven by the phonon",
        "phonon.n_max" => "phonon Fock-space truncation",
        "phonon.initial_occupation" => "phonon quanta present from t = 0 (the phonon is excited, its coupling switched on later)",
        "phonon.redistribution_threshold" => "ground weight below this after switch-on counts as destroyed adiabaticity",
        "phonon.excited_threshold" => "excited-state weight counted as significant",
        "phonon.window" => "length of the observation windows before and after the ramp",
        "gravonon.qubit" => "qubit carrying the gravonon band",
        "gravonon.direction" => "current direction (spin) that reaches the warp region",
        "gravonon.lock_transverse" => "no spin flips of the coupled qubit while a gravonon is excited",
        _ => return None,
    })
}
