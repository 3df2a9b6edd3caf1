//! The four experiments: Ramsey fringes of the single qubit, the plain
//! anneal, the anneal with a phonon switched on, and the same with the
//! gravonon band on the phonon-driven qubit.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::basis::{build_annealer_basis, build_single_qubit_basis, flat, Basis, N_ISING};
use crate::error::{Error, Result};
use crate::linalg::KrylovOptions;
use crate::observe::{
    self, crossings, current_direction_weight, fit_damped_oscillation, gravonon_sector_weight, settling_time,
    spectral_split, spectral_weight_from, DampingFit, GapMinimum, GravononOccupation, PopulationTrace,
    SpectralDistribution, SpectralSplit,
};
use crate::operators::{assemble_single_qubit, AnnealerHamiltonian, AnnealerParams, HermitianOperator};
use crate::propagate::{
    evolve_static_with_threshold, evolve_timedep, evolve_timedep_streaming, EvolutionResult, PropagationOptions,
    WaveFunctional,
};
use crate::scenarios::config::Config;
use crate::scenarios::output::{write_json, Table};
use crate::units::to_ghz;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Ramsey,
    Anneal,
    AnnealPhonon,
    AnnealPhononGravonon,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ramsey => "ramsey",
            Scenario::Anneal => "anneal",
            Scenario::AnnealPhonon => "anneal-phonon",
            Scenario::AnnealPhononGravonon => "anneal-phonon-gravonon",
        }
    }
}

fn propagation_options(config: &Config) -> PropagationOptions {
    PropagationOptions {
        stride: config.numerics.stride,
        krylov: KrylovOptions { tolerance: config.numerics.krylov_tolerance, max_dim: config.numerics.krylov_max_dim },
    }
}

fn check_norm(config: &Config, drift: f64) -> Result<()> {
    if drift > config.numerics.norm_tolerance {
        Err(Error::Numerical(format!("norm drift {drift:e} exceeds {:e}", config.numerics.norm_tolerance)))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------- Ramsey

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fit: Option<DampingFit>,
    pub error: Option<String>,
}

impl From<Result<DampingFit>> for FitReport {
    fn from(r: Result<DampingFit>) -> Self {
        match r {
            Ok(fit) => Self { fit: Some(fit), error: None },
            Err(e) => Self { fit: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RamseySummary {
    pub scenario: &'static str,
    pub seed: u64,
    pub dimension: usize,
    pub kappa_coupling_ghz: f64,
    pub lambda_coupling_ghz: f64,
    pub golden_rule_lifetime_ns: f64,
    pub recurrence_time_ns: f64,
    pub fit: FitReport,
    pub uncoupled_fit: FitReport,
    /// Largest `|P(t) − plateau|` for `t ≥ settle_time`.
    pub max_deviation_after_settle: Option<f64>,
    pub settling_time_ns: Option<f64>,
    pub plateau_reached: bool,
    pub unperturbed_energy_ghz: f64,
    pub spectral_split_ghz: SpectralSplit,
    pub norm_drift: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RamseyOutcome {
    pub summary: RamseySummary,
    /// Current-direction and sector weights with the bands coupled, plus
    /// `clockwise_uncoupled` from the W = 0 branch.
    pub traces: PopulationTrace,
    /// Spectral weight of |1,0,0,0⟩ over eigenenergies in rad/ns.
    pub spectral: SpectralDistribution,
}

fn sample_times(t_final: f64, interval: f64) -> Vec<f64> {
    let n = (t_final / interval).round() as usize;
    (0..=n).map(|k| k as f64 * interval).collect()
}

fn evolve_single_qubit(config: &Config, h: &HermitianOperator, psi0: &WaveFunctional) -> Result<(EvolutionResult, Option<crate::linalg::HermitianEigen>)> {
    let r = &config.ramsey;
    if h.dim() <= config.numerics.dense_threshold {
        let times = sample_times(r.t_final, r.sample_interval);
        let e = h.eigh();
        let result = evolve_static_with_threshold(h, psi0, &times, config.numerics.dense_threshold)?;
        Ok((result, Some(e)))
    } else {
        let stride = (r.sample_interval / config.numerics.dt).round().max(1.0) as usize;
        let opts = PropagationOptions { stride, ..propagation_options(config) };
        Ok((evolve_timedep(h, psi0, 0.0, r.t_final, r.sample_interval / stride as f64, opts)?, None))
    }
}

pub fn run_ramsey(config: &Config) -> Result<RamseyOutcome> {
    let params = config.single_qubit_params()?;
    let basis = Arc::new(build_single_qubit_basis(params.kappa_band.len(), params.lambda_band.len())?);
    let psi0 = WaveFunctional::basis_state(basis.clone(), flat::CLOCKWISE)?;

    let h = assemble_single_qubit(&params, &basis)?;
    let (result, eigen) = evolve_single_qubit(config, &h, &psi0)?;
    let eigen = eigen.ok_or(Error::AboveDenseThreshold { dim: h.dim(), threshold: config.numerics.dense_threshold })?;

    let mut uncoupled = params.clone();
    uncoupled.kappa_band = params.kappa_band.with_coupling(0.0)?;
    uncoupled.lambda_band = params.lambda_band.with_coupling(0.0)?;
    let h0 = assemble_single_qubit(&uncoupled, &basis)?;
    let (result0, _) = evolve_single_qubit(config, &h0, &psi0)?;

    let mut traces = current_direction_weight(&result, 1)?;
    traces.series.extend(current_direction_weight(&result, -1)?.series);
    traces.series.extend(gravonon_sector_weight(&result)?.series);
    let cw0 = current_direction_weight(&result0, 1)?.series.remove("clockwise").unwrap();
    traces.series.insert("clockwise_uncoupled".into(), cw0.clone());

    let cw = traces.get("clockwise").unwrap();
    let fit: FitReport = fit_damped_oscillation(&traces.times, cw).into();
    let uncoupled_fit: FitReport = fit_damped_oscillation(&result0.times, &cw0).into();
    let settle = config.ramsey.settle_time;
    let (max_dev, settling) = match &fit.fit {
        Some(f) => {
            let dev = traces
                .times
                .iter()
                .zip(cw)
                .filter(|(t, _)| **t >= settle)
                .map(|(_, p)| (p - f.plateau).abs())
                .fold(0.0, f64::max);
            (Some(dev), settling_time(&traces.times, cw, f.plateau, config.ramsey.settle_tolerance))
        }
        None => (None, None),
    };
    let plateau_reached = matches!((&fit.fit, max_dev), (Some(f), Some(d)) if d <= config.ramsey.settle_tolerance && !f.undamped);

    let spectral = spectral_weight_from(&psi0, &eigen);
    let e0 = crate::operators::expectation(&h, &psi0)?;
    let split = spectral_split(&spectral, e0);
    let norm_drift = result.norm_drift.max(result0.norm_drift);
    check_norm(config, norm_drift)?;

    let mut warnings = result.warnings.clone();
    warnings.extend(result0.warnings.iter().cloned());
    let summary = RamseySummary {
        scenario: Scenario::Ramsey.name(),
        seed: config.seed,
        dimension: basis.len(),
        kappa_coupling_ghz: to_ghz(params.kappa_band.coupling()),
        lambda_coupling_ghz: to_ghz(params.lambda_band.coupling()),
        golden_rule_lifetime_ns: 1.0 / params.kappa_band.golden_rule_width(),
        recurrence_time_ns: params.kappa_band.recurrence_time().min(params.lambda_band.recurrence_time()),
        fit,
        uncoupled_fit,
        max_deviation_after_settle: max_dev,
        settling_time_ns: settling,
        plateau_reached,
        unperturbed_energy_ghz: to_ghz(e0),
        spectral_split_ghz: SpectralSplit {
            centroid_below: to_ghz(split.centroid_below),
            centroid_above: to_ghz(split.centroid_above),
            ..split
        },
        norm_drift,
        warnings,
    };
    Ok(RamseyOutcome { summary, traces, spectral })
}

impl RamseyOutcome {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let t = &self.traces;
        let mut table = Table::new().column("time_ns", t.times.clone());
        for label in ["clockwise", "anticlockwise", "flat", "kappa", "lambda", "clockwise_uncoupled"] {
            table = table.column(label, t.series[label].clone());
        }
        table.write(&dir.join("ramsey_traces.csv"))?;
        Table::new()
            .column("energy_ghz", self.spectral.energies.iter().map(|&e| to_ghz(e)).collect())
            .column("weight", self.spectral.weights.clone())
            .write(&dir.join("spectral.csv"))?;
        write_json(&dir.join("summary.json"), &self.summary)
    }
}

// ---------------------------------------------------------------- anneal

fn is_flip_symmetric(params: &AnnealerParams) -> bool {
    params.bias.iter().all(|b| *b == 0.0)
}

/// Lowest eigenvalues of the 16-configuration Hamiltonian. Without a bias
/// the spectrum is restricted to the flip-even sector that contains the
/// ground state, so the gap is not the exponentially small splitting of
/// the degenerate Ising pair.
pub fn annealer_levels(ham: &AnnealerHamiltonian, t: f64, n_lowest: usize) -> Result<Vec<f64>> {
    let h = ham.at(t)?.to_dense();
    let mut e = if is_flip_symmetric(ham.params()) {
        let half = N_ISING / 2;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Even combinations (|s⟩ + |s̄⟩)/√2 for s < 8, with s̄ = 15 − s.
        let p = nalgebra::DMatrix::from_fn(N_ISING, half, |r, c| {
            if r == c || r == N_ISING - 1 - c {
                crate::linalg::C64::new(s, 0.0)
            } else {
                crate::linalg::ZERO
            }
        });
        crate::linalg::eigvalsh(&(p.adjoint() * h * p))
    } else {
        crate::linalg::eigvalsh(&h)
    };
    e.truncate(n_lowest);
    Ok(e)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapReport {
    pub time_ns: f64,
    pub gap_ghz: f64,
    pub interior: bool,
    /// Second time derivative of the gap at the minimum (rad/ns³).
    pub curvature: f64,
    /// `exp(−2π Δ²/(4v))` with sweep rate `v = sqrt(Δ · gap'')`.
    pub landau_zener_probability: f64,
}

/// Minimum gap on a coarse grid, then refined on a fine grid around it.
fn gap_report(ham: &AnnealerHamiltonian, coarse: &[(f64, Vec<f64>)]) -> Result<GapReport> {
    let m: GapMinimum = observe::min_gap(coarse)?;
    let lo = coarse[m.index.saturating_sub(1)].0;
    let hi = coarse[(m.index + 1).min(coarse.len() - 1)].0;
    let fine: Vec<(f64, Vec<f64>)> = linspace(lo, hi, 81)
        .into_iter()
        .map(|t| annealer_levels(ham, t, 2).map(|e| (t, e)))
        .collect::<Result<_>>()?;
    let f = observe::min_gap(&fine)?;
    let (time, gap) = if f.gap < m.gap { (f.time, f.gap) } else { (m.time, m.gap) };
    let k = f.index.clamp(1, fine.len() - 2);
    let g = |i: usize| fine[i].1[1] - fine[i].1[0];
    let h = fine[1].0 - fine[0].0;
    let curvature = (g(k + 1) - 2.0 * g(k) + g(k - 1)) / (h * h);
    let rate = (gap * curvature.max(0.0)).sqrt();
    let lz = if rate > 0.0 { (-std::f64::consts::TAU * gap * gap / (4.0 * rate)).exp() } else { 0.0 };
    Ok(GapReport { time_ns: time, gap_ghz: to_ghz(gap), interior: m.interior, curvature, landau_zener_probability: lz })
}

/// Ground state of the bare spin Hamiltonian at t = 0 with `phonons`
/// quanta and no gravonon.
fn ground_state(ham: &AnnealerHamiltonian, basis: &Arc<Basis>, phonons: usize) -> Result<WaveFunctional> {
    let reference = ham.params().unperturbed();
    let small = Arc::new(build_annealer_basis(0, 0));
    let e = AnnealerHamiltonian::new(&reference, &small)?.at(0.0)?.eigh();
    let mut amps = vec![crate::linalg::ZERO; basis.len()];
    for s in 0..N_ISING {
        amps[basis.annealer_index(s, phonons, 0)] = e.vectors[(s, 0)];
    }
    WaveFunctional::normalized(basis.clone(), amps)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnealSummary {
    pub scenario: &'static str,
    pub seed: u64,
    pub dimension: usize,
    pub t_final_ns: f64,
    pub min_gap: GapReport,
    pub success_probability: f64,
    pub ground_manifold: Vec<String>,
    pub norm_drift: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub summary: AnnealSummary,
    /// `(time, lowest energies in rad/ns)`.
    pub spectrum: Vec<(f64, Vec<f64>)>,
    /// `(time, E1 − E0)` in rad/ns, within the flip-even sector when unbiased.
    pub gap: Vec<(f64, f64)>,
    pub populations: PopulationTrace,
}

fn reference_at(params: &AnnealerParams) -> Result<impl Fn(f64) -> Result<HermitianOperator>> {
    let small = Arc::new(build_annealer_basis(0, 0));
    let ham = AnnealerHamiltonian::new(&params.unperturbed(), &small)?;
    Ok(move |t: f64| ham.at(t))
}

fn manifold_labels(params: &AnnealerParams) -> Vec<String> {
    params
        .ground_manifold(1e-9 * params.j_matrix.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs())))
        .into_iter()
        .map(|s| crate::basis::IsingConfiguration::from_index(s).to_string())
        .collect()
}

pub fn run_anneal(config: &Config) -> Result<AnnealOutcome> {
    let params = config.annealer_params()?;
    let basis = Arc::new(build_annealer_basis(0, 0));
    let ham = AnnealerHamiltonian::new(&params, &basis)?;
    let t_f = params.schedule.t_final;
    let n_lowest = config.annealer.n_lowest;

    let times = linspace(0.0, t_f, config.annealer.spectrum_points);
    let spectrum: Vec<(f64, Vec<f64>)> = times
        .iter()
        .map(|&t| ham.at(t).map(|h| (t, h.eigenvalues().into_iter().take(n_lowest).collect())))
        .collect::<Result<_>>()?;
    let gap_levels: Vec<(f64, Vec<f64>)> =
        times.iter().map(|&t| annealer_levels(&ham, t, 2).map(|e| (t, e))).collect::<Result<_>>()?;
    let min_gap = gap_report(&ham, &gap_levels)?;

    let psi0 = ground_state(&ham, &basis, 0)?;
    let result = evolve_timedep(&ham, &psi0, 0.0, t_f, config.numerics.anneal_dt, propagation_options(config))?;
    check_norm(config, result.norm_drift)?;
    let populations = observe::eigenstate_population(&result, |t| ham.at(t), n_lowest)?;
    let success = observe::success_probability(result.final_state().unwrap(), &params)?;

    let summary = AnnealSummary {
        scenario: Scenario::Anneal.name(),
        seed: config.seed,
        dimension: basis.len(),
        t_final_ns: t_f,
        min_gap,
        success_probability: success,
        ground_manifold: manifold_labels(&params),
        norm_drift: result.norm_drift,
        steps: result.stats.steps,
        warnings: result.warnings.clone(),
    };
    let gap = gap_levels.iter().map(|(t, e)| (*t, e[1] - e[0])).collect();
    Ok(AnnealOutcome { summary, spectrum, gap, populations })
}

fn population_table(p: &PopulationTrace, n: usize) -> Table {
    let mut t = Table::new().column("time_ns", p.times.clone());
    for k in 0..n {
        t = t.column(format!("state_{k}"), p.series[&format!("{k}")].clone());
    }
    t
}

impl AnnealOutcome {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let n = self.spectrum.first().map_or(0, |s| s.1.len());
        let mut t = Table::new().column("time_ns", self.spectrum.iter().map(|s| s.0).collect());
        for k in 0..n {
            t = t.column(format!("e{k}_ghz"), self.spectrum.iter().map(|s| to_ghz(s.1[k])).collect());
        }
        t.write(&dir.join("spectrum.csv"))?;
        Table::new()
            .column("time_ns", self.gap.iter().map(|g| g.0).collect())
            .column("gap_ghz", self.gap.iter().map(|g| to_ghz(g.1)).collect())
            .write(&dir.join("gap.csv"))?;
        population_table(&self.populations, self.populations.series.len()).write(&dir.join("populations.csv"))?;
        write_json(&dir.join("summary.json"), &self.summary)
    }
}

// ---------------------------------------------------------------- phonon

/// Post-switch-on statistics of the eigenstate populations.
#[derive(Debug, Clone, Serialize)]
pub struct RedistributionReport {
    pub window_start_ns: f64,
    pub window_end_ns: f64,
    /// Window means of each eigenstate weight, ground first.
    pub mean_weights: Vec<f64>,
    pub min_ground_weight: f64,
    /// Excited eigenstates whose mean weight exceeds the excited threshold.
    pub excited_above_threshold: usize,
    /// Crossings of 0.5 by the phonon qubit's `+1` weight after the ramp starts.
    pub current_crossings: usize,
    pub destroyed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhononSummary {
    pub scenario: &'static str,
    pub seed: u64,
    pub dimension: usize,
    pub t_final_ns: f64,
    pub switch_on_ns: f64,
    pub redistribution: RedistributionReport,
    pub success_probability: f64,
    pub norm_drift: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PhononOutcome {
    pub summary: PhononSummary,
    pub populations: PopulationTrace,
    /// `plus`/`minus` weights of the phonon-driven qubit.
    pub currents: PopulationTrace,
}

/// Window after the ramp, `[switch_on + ramp/2, + window]`.
fn after_window(config: &Config) -> (f64, f64) {
    let p = &config.phonon;
    let start = p.switch_on + 0.5 * p.ramp;
    (start, start + p.window)
}

/// Window before the ramp, `[switch_on − ramp/2 − window, switch_on − ramp/2]`.
fn before_window(config: &Config) -> (f64, f64) {
    let p = &config.phonon;
    let end = p.switch_on - 0.5 * p.ramp;
    (end - p.window, end)
}

fn window_mean(times: &[f64], values: &[f64], (a, b): (f64, f64)) -> f64 {
    let sel: Vec<f64> = times.iter().zip(values).filter(|(t, _)| **t >= a && **t <= b).map(|(_, v)| *v).collect();
    sel.iter().sum::<f64>() / sel.len().max(1) as f64
}

fn redistribution(config: &Config, populations: &PopulationTrace, currents: &PopulationTrace) -> RedistributionReport {
    let (a, b) = after_window(config);
    let n = populations.series.len();
    let mean_weights: Vec<f64> = (0..n).map(|k| window_mean(&populations.times, &populations.series[&format!("{k}")], (a, b))).collect();
    let min_ground = populations
        .times
        .iter()
        .zip(&populations.series["0"])
        .filter(|(t, _)| **t >= a && **t <= b)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let excited = mean_weights.iter().skip(1).filter(|w| **w > config.phonon.excited_threshold).count();
    let ramp_start = config.phonon.switch_on - 0.5 * config.phonon.ramp;
    let after: Vec<f64> = currents.times.iter().zip(&currents.series["plus"]).filter(|(t, _)| **t >= ramp_start).map(|(_, v)| *v).collect();
    let current_crossings = crossings(&after, 0.5);
    let destroyed = mean_weights[0] < config.phonon.redistribution_threshold && excited >= 2 && current_crossings >= 3;
    RedistributionReport {
        window_start_ns: a,
        window_end_ns: b,
        mean_weights,
        min_ground_weight: min_ground,
        excited_above_threshold: excited,
        current_crossings,
        destroyed,
    }
}

fn phonon_params(config: &Config) -> Result<AnnealerParams> {
    config.check_phonon_windows()?;
    Ok(AnnealerParams { phonon: Some(config.phonon_params()), ..config.annealer_params()? })
}

pub fn run_anneal_phonon(config: &Config) -> Result<PhononOutcome> {
    let params = phonon_params(config)?;
    let basis = Arc::new(build_annealer_basis(config.phonon.n_max, 0));
    let ham = AnnealerHamiltonian::new(&params, &basis)?;
    let t_f = params.schedule.t_final;
    let psi0 = ground_state(&ham, &basis, config.phonon.initial_occupation)?;
    let result = evolve_timedep(&ham, &psi0, 0.0, t_f, config.numerics.anneal_dt, propagation_options(config))?;
    check_norm(config, result.norm_drift)?;
    let populations = observe::eigenstate_population(&result, reference_at(&params)?, config.annealer.n_lowest)?;
    let currents = observe::qubit_current_weight(&result, config.phonon.qubit)?;
    let success = observe::success_probability(result.final_state().unwrap(), &params)?;
    let summary = PhononSummary {
        scenario: Scenario::AnnealPhonon.name(),
        seed: config.seed,
        dimension: basis.len(),
        t_final_ns: t_f,
        switch_on_ns: config.phonon.switch_on,
        redistribution: redistribution(config, &populations, &currents),
        success_probability: success,
        norm_drift: result.norm_drift,
        steps: result.stats.steps,
        warnings: result.warnings.clone(),
    };
    Ok(PhononOutcome { summary, populations, currents })
}

fn write_currents(dir: &Path, currents: &PopulationTrace, qubit: usize) -> Result<()> {
    Table::new()
        .column("time_ns", currents.times.clone())
        .column(format!("qubit{qubit}_plus"), currents.series["plus"].clone())
        .column(format!("qubit{qubit}_minus"), currents.series["minus"].clone())
        .write(&dir.join("qubit3_currents.csv"))
}

impl PhononOutcome {
    pub fn write(&self, dir: &Path, qubit: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        population_table(&self.populations, self.populations.series.len()).write(&dir.join("populations.csv"))?;
        write_currents(dir, &self.currents, qubit)?;
        write_json(&dir.join("summary.json"), &self.summary)
    }
}

// ---------------------------------------------------------------- gravonon

#[derive(Debug, Clone, Serialize)]
pub struct SuppressionReport {
    /// Mean ground weight after the ramp, with minus without the band.
    pub ground_weight_gain: f64,
    /// Total variation between the mean gravonon occupations of the windows
    /// before and after the ramp.
    pub occupation_change: f64,
    pub band_weight_before: f64,
    pub band_weight_after: f64,
    pub suppressed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GravononSummary {
    pub scenario: &'static str,
    pub seed: u64,
    pub dimension: usize,
    pub t_final_ns: f64,
    pub switch_on_ns: f64,
    pub coupling_ghz: f64,
    pub golden_rule_lifetime_ns: f64,
    pub recurrence_time_ns: f64,
    pub redistribution: RedistributionReport,
    pub phonon_only: RedistributionReport,
    pub suppression: SuppressionReport,
    pub success_probability: f64,
    pub phonon_only_success_probability: f64,
    pub norm_drift: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GravononOutcome {
    pub summary: GravononSummary,
    pub populations: PopulationTrace,
    pub currents: PopulationTrace,
    pub occupation: Vec<GravononOccupation>,
}

pub fn run_anneal_phonon_gravonon(config: &Config) -> Result<GravononOutcome> {
    let reference = run_anneal_phonon(config)?;
    let coupling = config.gravonon_coupling()?;
    let params = AnnealerParams { gravonon: Some(coupling.clone()), ..phonon_params(config)? };
    let basis = Arc::new(build_annealer_basis(config.phonon.n_max, coupling.band.len()));
    let ham = AnnealerHamiltonian::new(&params, &basis)?;
    let t_f = params.schedule.t_final;
    let psi0 = ground_state(&ham, &basis, config.phonon.initial_occupation)?;

    let reference_h = reference_at(&params)?;
    let n_lowest = config.annealer.n_lowest;
    let qubit = config.phonon.qubit;
    let mut times = Vec::new();
    let mut weights: Vec<Vec<f64>> = vec![Vec::new(); n_lowest];
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut occupation = Vec::new();
    let result = evolve_timedep_streaming(&ham, &psi0, 0.0, t_f, config.numerics.anneal_dt, propagation_options(config), |t, psi| {
        times.push(t);
        let w = observe::eigenstate_weights(psi, &reference_h(t)?)?;
        for (k, s) in weights.iter_mut().enumerate() {
            s.push(w[k]);
        }
        let iw = observe::ising_weights(psi)?;
        let up: f64 = (0..N_ISING).filter(|&s| s >> (4 - qubit) & 1 == 0).map(|s| iw[s]).sum();
        plus.push(up);
        minus.push(iw.iter().sum::<f64>() - up);
        occupation.push(observe::gravonon_occupation(t, psi)?);
        Ok(())
    })?;
    check_norm(config, result.norm_drift)?;

    let mut populations = PopulationTrace { times: times.clone(), series: Default::default() };
    for (k, s) in weights.into_iter().enumerate() {
        populations.series.insert(format!("{k}"), s);
    }
    let mut currents = PopulationTrace { times, series: Default::default() };
    currents.series.insert("plus".into(), plus);
    currents.series.insert("minus".into(), minus);

    let redistribution_report = redistribution(config, &populations, &currents);
    let in_window = |(a, b): (f64, f64)| -> Vec<GravononOccupation> {
        occupation.iter().filter(|o| o.time >= a && o.time <= b).cloned().collect()
    };
    let before = observe::mean_occupation(&in_window(before_window(config)))?;
    let after = observe::mean_occupation(&in_window(after_window(config)))?;
    let gain = redistribution_report.mean_weights[0] - reference.summary.redistribution.mean_weights[0];
    let change = before.total_variation(&after);
    let suppression = SuppressionReport {
        ground_weight_gain: gain,
        occupation_change: change,
        band_weight_before: before.band_weight(),
        band_weight_after: after.band_weight(),
        suppressed: gain >= 0.1 && change < 0.02,
    };
    let success = observe::success_probability(result.final_state().unwrap(), &params)?;
    let mut warnings = result.warnings.clone();
    warnings.extend(reference.summary.warnings.iter().cloned());
    let summary = GravononSummary {
        scenario: Scenario::AnnealPhononGravonon.name(),
        seed: config.seed,
        dimension: basis.len(),
        t_final_ns: t_f,
        switch_on_ns: config.phonon.switch_on,
        coupling_ghz: to_ghz(coupling.band.coupling()),
        golden_rule_lifetime_ns: 1.0 / coupling.band.golden_rule_width(),
        recurrence_time_ns: coupling.band.recurrence_time(),
        redistribution: redistribution_report,
        phonon_only: reference.summary.redistribution.clone(),
        suppression,
        success_probability: success,
        phonon_only_success_probability: reference.summary.success_probability,
        norm_drift: result.norm_drift.max(reference.summary.norm_drift),
        steps: result.stats.steps,
        warnings,
    };
    Ok(GravononOutcome { summary, populations, currents, occupation })
}

impl GravononOutcome {
    pub fn write(&self, dir: &Path, qubit: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        population_table(&self.populations, self.populations.series.len()).write(&dir.join("populations.csv"))?;
        write_currents(dir, &self.currents, qubit)?;
        let n_modes = self.occupation.first().map_or(0, |o| o.modes.len());
        let mut t = Table::new()
            .column("time_ns", self.occupation.iter().map(|o| o.time).collect())
            .column("ground", self.occupation.iter().map(|o| o.ground).collect());
        for m in 0..n_modes {
            t = t.column(format!("mode_{}", m + 1), self.occupation.iter().map(|o| o.modes[m]).collect());
        }
        t.write(&dir.join("gravonon_spectrum.csv"))?;
        write_json(&dir.join("summary.json"), &self.summary)
    }
}

/// Runs `scenario` and writes its outputs into `dir`.
pub fn run_and_write(scenario: Scenario, config: &Config, dir: &Path) -> Result<()> {
    let q = config.phonon.qubit;
    match scenario {
        Scenario::Ramsey => run_ramsey(config)?.write(dir),
        Scenario::Anneal => run_anneal(config)?.write(dir),
        Scenario::AnnealPhonon => run_anneal_phonon(config)?.write(dir, q),
        Scenario::AnnealPhononGravonon => run_anneal_phonon_gravonon(config)?.write(dir, q),
    }
}
