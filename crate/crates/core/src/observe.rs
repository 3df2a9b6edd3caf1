//! Observables computed from Hamiltonians and evolution results.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::basis::{Basis, Configuration, N_ISING, N_QUBITS};
use crate::error::{Error, Result};
use crate::linalg::{HermitianEigen, C64, ZERO};
use crate::operators::{AnnealerParams, HermitianOperator};
use crate::propagate::{EvolutionResult, WaveFunctional, DENSE_THRESHOLD};

/// Weights over eigenenergies, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDistribution {
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Weight-versus-time series sharing one time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
}

impl PopulationTrace {
    fn new(times: Vec<f64>) -> Self {
        Self { times, series: BTreeMap::new() }
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.series.get(label).map(Vec::as_slice)
    }

    /// Largest `|Σ series − 1|` over time; meaningful for complete partitions.
    pub fn partition_defect(&self) -> f64 {
        (0..self.times.len())
            .map(|k| (self.series.values().map(|s| s[k]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `|⟨n|ψ₀⟩|²` over the eigenstates of `h`.
pub fn spectral_weight(psi0: &WaveFunctional, h: &HermitianOperator) -> Result<SpectralDistribution> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: psi0.len() });
    }
    if h.dim() > DENSE_THRESHOLD {
        return Err(Error::AboveDenseThreshold { dim: h.dim(), threshold: DENSE_THRESHOLD });
    }
    let e = h.eigh();
    Ok(spectral_weight_from(psi0, &e))
}

pub fn spectral_weight_from(psi0: &WaveFunctional, e: &HermitianEigen) -> SpectralDistribution {
    let weights: Vec<f64> = (0..e.values.len())
        .map(|n| {
            e.vectors
                .column(n)
                .iter()
                .zip(psi0.amplitudes())
                .fold(ZERO, |acc, (v, a)| acc + v.conj() * a)
                .norm_sqr()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    SpectralDistribution { energies: e.values.clone(), weights: weights.iter().map(|w| w / total).collect() }
}

/// Two energy windows holding the spectral weight below and above a
/// reference energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSplit {
    pub centroid_below: f64,
    pub centroid_above: f64,
    pub mass_below: f64,
    pub mass_above: f64,
}

impl SpectralSplit {
    pub fn clustered_mass(&self) -> f64 {
        self.mass_below + self.mass_above
    }
}

/// Weight-averaged energies on either side of `reference`, each with a window
/// of half-width `|centroid − reference| / 2`; the windows are disjoint and
/// exclude the reference energy.
pub fn spectral_split(dist: &SpectralDistribution, reference: f64) -> SpectralSplit {
    let centroid = |below: bool| {
        let (mut m, mut w) = (0.0, 0.0);
        for (e, p) in dist.energies.iter().zip(&dist.weights) {
            if (*e < reference) == below && *e != reference {
                m += e * p;
                w += p;
            }
        }
        if w > 0.0 {
            m / w
        } else {
            reference
        }
    };
    let mass = |c: f64| {
        let half = 0.5 * (c - reference).abs();
        if half == 0.0 {
            return 0.0;
        }
        dist.energies
            .iter()
            .zip(&dist.weights)
            .filter(|(e, _)| (*e - c).abs() <= half)
            .map(|(_, p)| p)
            .sum()
    };
    let (cb, ca) = (centroid(true), centroid(false));
    SpectralSplit { centroid_below: cb, centroid_above: ca, mass_below: mass(cb), mass_above: mass(ca) }
}

fn single_qubit_configs(result: &EvolutionResult) -> Result<Vec<crate::basis::SingleQubitConfiguration>> {
    let basis = result.basis().ok_or_else(|| Error::InvalidArgument("empty evolution result".into()))?;
    basis
        .configurations()
        .iter()
        .map(|c| match c {
            Configuration::SingleQubit(s) => Ok(*s),
            Configuration::Annealer(_) => Err(Error::BasisMismatch("expected a single-qubit basis".into())),
        })
        .collect()
}

/// Weight of all configurations whose current circulates in `direction`
/// (+1 clockwise, −1 anticlockwise), warp states included.
pub fn current_direction_weight(result: &EvolutionResult, direction: i8) -> Result<PopulationTrace> {
    if direction != 1 && direction != -1 {
        return Err(Error::InvalidArgument(format!("direction must be ±1, got {direction}")));
    }
    let configs = single_qubit_configs(result)?;
    let mut trace = PopulationTrace::new(result.times.clone());
    let series = result
        .states
        .iter()
        .map(|s| {
            s.amplitudes()
                .iter()
                .zip(&configs)
                .filter(|(_, c)| c.direction() == direction)
                .map(|(a, _)| a.norm_sqr())
                .sum()
        })
        .collect();
    trace.series.insert(if direction == 1 { "clockwise" } else { "anticlockwise" }.into(), series);
    Ok(trace)
}

/// Weights of the flat sector and of the κ and λ band sectors.
pub fn gravonon_sector_weight(result: &EvolutionResult) -> Result<PopulationTrace> {
    let configs = single_qubit_configs(result)?;
    let mut trace = PopulationTrace::new(result.times.clone());
    for label in ["flat", "kappa", "lambda"] {
        trace.series.insert(label.into(), Vec::with_capacity(result.states.len()));
    }
    for s in &result.states {
        let (mut f, mut k, mut l) = (0.0, 0.0, 0.0);
        for (a, c) in s.amplitudes().iter().zip(&configs) {
            let p = a.norm_sqr();
            if c.kappa_index() > 0 {
                k += p;
            } else if c.lambda_index() > 0 {
                l += p;
            } else {
                f += p;
            }
        }
        trace.series.get_mut("flat").unwrap().push(f);
        trace.series.get_mut("kappa").unwrap().push(k);
        trace.series.get_mut("lambda").unwrap().push(l);
    }
    Ok(trace)
}

/// Spin-block view of an annealer state: `blocks[(n, g)][s]`.
fn spin_blocks(psi: &WaveFunctional) -> Result<Vec<[C64; N_ISING]>> {
    let basis = psi.basis();
    let (n_ph, n_g) = basis
        .annealer_shape()
        .ok_or_else(|| Error::BasisMismatch("expected an annealer basis".into()))?;
    let a = psi.amplitudes();
    let mut blocks = vec![[ZERO; N_ISING]; (n_ph + 1) * (n_g + 1)];
    for s in 0..N_ISING {
        for n in 0..=n_ph {
            for g in 0..=n_g {
                blocks[n * (n_g + 1) + g][s] = a[basis.annealer_index(s, n, g)];
            }
        }
    }
    Ok(blocks)
}

/// Weights of the `n_lowest` eigenstates of the unperturbed 16-dimensional
/// Hamiltonian `reference_at(t)`, summed over phonon and gravonon labels.
/// Eigenstates are labelled by energy order (`"0"` is the ground state).
pub fn eigenstate_population<F>(result: &EvolutionResult, reference_at: F, n_lowest: usize) -> Result<PopulationTrace>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let n_lowest = n_lowest.min(N_ISING);
    let mut trace = PopulationTrace::new(result.times.clone());
    let mut series = vec![Vec::with_capacity(result.times.len()); n_lowest];
    for (&t, psi) in result.times.iter().zip(&result.states) {
        let w = eigenstate_weights(psi, &reference_at(t)?)?;
        for (n, s) in series.iter_mut().enumerate() {
            s.push(w[n]);
        }
    }
    for (n, s) in series.into_iter().enumerate() {
        trace.series.insert(format!("{n}"), s);
    }
    Ok(trace)
}

/// All sixteen eigenstate weights of `psi` against `reference`.
pub fn eigenstate_weights(psi: &WaveFunctional, reference: &HermitianOperator) -> Result<Vec<f64>> {
    if reference.dim() != N_ISING || reference.basis().annealer_shape() != Some((0, 0)) {
        return Err(Error::BasisMismatch("reference must be the 16-configuration annealer Hamiltonian".into()));
    }
    let e = reference.eigh();
    let blocks = spin_blocks(psi)?;
    Ok((0..N_ISING)
        .map(|n| {
            blocks
                .iter()
                .map(|b| e.vectors.column(n).iter().zip(b).fold(ZERO, |acc, (v, a)| acc + v.conj() * a).norm_sqr())
                .sum()
        })
        .collect())
}

/// Weight on spin `+1` and `−1` of one qubit (1-based).
pub fn qubit_current_weight(result: &EvolutionResult, qubit: usize) -> Result<PopulationTrace> {
    if !(1..=N_QUBITS).contains(&qubit) {
        return Err(Error::InvalidArgument(format!("qubit must be in 1..={N_QUBITS}")));
    }
    let mut trace = PopulationTrace::new(result.times.clone());
    let mut up = Vec::with_capacity(result.times.len());
    let mut down = Vec::with_capacity(result.times.len());
    for psi in &result.states {
        let w = ising_weights(psi)?;
        let u: f64 = (0..N_ISING).filter(|&s| s >> (N_QUBITS - qubit) & 1 == 0).map(|s| w[s]).sum();
        up.push(u);
        down.push(w.iter().sum::<f64>() - u);
    }
    trace.series.insert("plus".into(), up);
    trace.series.insert("minus".into(), down);
    Ok(trace)
}

/// Weight of each Ising configuration, summed over phonon and gravonon labels.
pub fn ising_weights(psi: &WaveFunctional) -> Result<[f64; N_ISING]> {
    let mut w = [0.0; N_ISING];
    for b in spin_blocks(psi)? {
        for s in 0..N_ISING {
            w[s] += b[s].norm_sqr();
        }
    }
    Ok(w)
}

/// Weight on the gravonon ground label and on each band mode at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GravononOccupation {
    pub time: f64,
    pub ground: f64,
    pub modes: Vec<f64>,
}

impl GravononOccupation {
    pub fn band_weight(&self) -> f64 {
        self.modes.iter().sum()
    }

    /// `½ Σ |p − q|` over the ground label and all modes.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * ((self.ground - other.ground).abs()
            + self.modes.iter().zip(&other.modes).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }
}

pub fn gravonon_occupation_spectrum(result: &EvolutionResult) -> Result<Vec<GravononOccupation>> {
    result.times.iter().zip(&result.states).map(|(&t, psi)| gravonon_occupation(t, psi)).collect()
}

pub fn gravonon_occupation(time: f64, psi: &WaveFunctional) -> Result<GravononOccupation> {
    let basis: &Basis = psi.basis();
    let (n_ph, n_g) = basis
        .annealer_shape()
        .ok_or_else(|| Error::BasisMismatch("expected an annealer basis".into()))?;
    let mut w = vec![0.0; n_g + 1];
    for s in 0..N_ISING {
        for n in 0..=n_ph {
            for (g, wg) in w.iter_mut().enumerate() {
                *wg += psi.amplitudes()[basis.annealer_index(s, n, g)].norm_sqr();
            }
        }
    }
    Ok(GravononOccupation { time, ground: w[0], modes: w[1..].to_vec() })
}

/// Element-wise mean of occupation snapshots.
pub fn mean_occupation(snapshots: &[GravononOccupation]) -> Result<GravononOccupation> {
    let first = snapshots.first().ok_or_else(|| Error::InvalidArgument("no snapshots to average".into()))?;
    let n = snapshots.len() as f64;
    let mut mean = GravononOccupation { time: first.time, ground: 0.0, modes: vec![0.0; first.modes.len()] };
    for s in snapshots {
        mean.ground += s.ground / n;
        for (m, v) in mean.modes.iter_mut().zip(&s.modes) {
            *m += v / n;
        }
    }
    Ok(mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapMinimum {
    pub time: f64,
    pub gap: f64,
    /// Grid index of the smallest sampled gap.
    pub index: usize,
    /// The minimum is not at either end of the time grid.
    pub interior: bool,
}

/// Smallest `E₁ − E₀` over the spectrum, refined by a parabola through the
/// grid minimum and its neighbours.
pub fn min_gap(spectrum: &[(f64, Vec<f64>)]) -> Result<GapMinimum> {
    if spectrum.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let gaps: Vec<f64> = spectrum
        .iter()
        .map(|(_, e)| {
            if e.len() < 2 {
                Err(Error::InvalidArgument("need at least two levels per time".into()))
            } else {
                Ok(e[1] - e[0])
            }
        })
        .collect::<Result<_>>()?;
    let times: Vec<f64> = spectrum.iter().map(|(t, _)| *t).collect();
    let k = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
    let interior = k > 0 && k + 1 < gaps.len();
    let (mut time, mut gap) = (times[k], gaps[k]);
    if interior {
        let (x0, x1, x2) = (times[k - 1], times[k], times[k + 1]);
        let (y0, y1, y2) = (gaps[k - 1], gaps[k], gaps[k + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curvature = (d12 - d01) / (x2 - x0);
        if curvature > 0.0 {
            // Vertex of the Newton-form parabola through the three points.
            let xv = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
            if xv > x0 && xv < x2 {
                let yv = y0 + d01 * (xv - x0) + curvature * (xv - x0) * (xv - x1);
                if yv <= gap && yv > 0.0 {
                    time = xv;
                    gap = yv;
                }
            }
        }
    }
    Ok(GapMinimum { time, gap, index: k, interior })
}

/// Count of sign changes of `series − level`, ignoring touches.
pub fn crossings(series: &[f64], level: f64) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for &v in series {
        let d = v - level;
        if d != 0.0 {
            if last != 0.0 && d.signum() != last.signum() {
                n += 1;
            }
            last = d;
        }
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingFit {
    pub amplitude: f64,
    pub decay_time: f64,
    pub plateau: f64,
    /// RMS residual of the envelope fit at the extrema.
    pub residual: f64,
    pub n_extrema: usize,
    /// Fitted decay time exceeds ten times the fitted window.
    pub undamped: bool,
}

/// Extremum of an oscillating trace, `kind` = +1 for maxima, −1 for minima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub time: f64,
    pub value: f64,
    pub kind: i8,
}

/// Alternating extrema with hysteresis: a candidate counts once the trace
/// retraces by `threshold`. The first sample can be an extremum.
pub fn find_extrema(times: &[f64], values: &[f64], threshold: f64) -> Vec<Extremum> {
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    let (mut hi, mut lo) = (0usize, 0usize);
    let mut dir: i8 = 0;
    for i in 1..values.len() {
        let v = values[i];
        match dir {
            0 => {
                if v > values[hi] {
                    hi = i;
                }
                if v < values[lo] {
                    lo = i;
                }
                if values[hi] - v > threshold {
                    out.push(Extremum { time: times[hi], value: values[hi], kind: 1 });
                    dir = -1;
                    lo = i;
                } else if v - values[lo] > threshold {
                    out.push(Extremum { time: times[lo], value: values[lo], kind: -1 });
                    dir = 1;
                    hi = i;
                }
            }
            1 => {
                if v > values[hi] {
                    hi = i;
                } else if values[hi] - v > threshold {
                    out.push(Extremum { time: times[hi], value: values[hi], kind: 1 });
                    dir = -1;
                    lo = i;
                }
            }
            _ => {
                if v < values[lo] {
                    lo = i;
                } else if v - values[lo] > threshold {
                    out.push(Extremum { time: times[lo], value: values[lo], kind: -1 });
                    dir = 1;
                    hi = i;
                }
            }
        }
    }
    out
}

/// Fits `plateau ± amplitude · e^{−t/τ}` through the extrema of a trace
/// (`+` at maxima, `−` at minima).
pub fn fit_damped_oscillation(times: &[f64], values: &[f64]) -> Result<DampingFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
    }
    let range = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(range > 1e-12) {
        return Err(Error::Fit("trace is constant".into()));
    }
    let ext = find_extrema(times, values, 0.05 * range);
    if ext.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 extrema, found {}", ext.len())));
    }
    let t0 = ext[0].time;
    let window = ext.last().unwrap().time - t0;
    if !(window > 0.0) {
        return Err(Error::Fit("extrema span no time".into()));
    }
    // For fixed τ the model is linear in (plateau, amplitude).
    let solve = |tau: f64| -> (f64, f64, f64) {
        let (mut sxx, mut sx, mut sxy, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let n = ext.len() as f64;
        for e in &ext {
            let x = f64::from(e.kind) * (-(e.time - t0) / tau).exp();
            sxx += x * x;
            sx += x;
            sxy += x * e.value;
            sy += e.value;
            syy += e.value * e.value;
        }
        let det = n * sxx - sx * sx;
        let (p, a) = if det.abs() > 1e-300 {
            ((sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det)
        } else {
            (sy / n, 0.0)
        };
        let sse = syy - 2.0 * p * sy - 2.0 * a * sxy + p * p * n + 2.0 * p * a * sx + a * a * sxx;
        (p, a, sse.max(0.0))
    };
    let (lo, hi) = ((0.01 * window).ln(), (1000.0 * window).ln());
    let grid = 400;
    let cost = |u: f64| solve(u.exp()).2;
    let mut best = lo;
    let mut best_cost = f64::INFINITY;
    for i in 0..=grid {
        let u = lo + (hi - lo) * i as f64 / grid as f64;
        let c = cost(u);
        if c < best_cost {
            best_cost = c;
            best = u;
        }
    }
    let step = (hi - lo) / grid as f64;
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if cost(c) <= cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let u = if cost(0.5 * (a + b)) <= best_cost { 0.5 * (a + b) } else { best };
    let tau = u.exp();
    let (plateau, amplitude, sse) = solve(tau);
    if !(0.0..=1.0).contains(&plateau) {
        return Err(Error::Fit(format!("plateau {plateau} outside [0, 1]")));
    }
    // Amplitude quoted at the first extremum, which sits at t0.
    Ok(DampingFit {
        amplitude,
        decay_time: tau,
        plateau,
        residual: (sse / ext.len() as f64).sqrt(),
        n_extrema: ext.len(),
        undamped: tau > 10.0 * window,
    })
}

/// First time after which `values` stays within `tolerance` of `level`.
pub fn settling_time(times: &[f64], values: &[f64], level: f64, tolerance: f64) -> Option<f64> {
    let last_out = values.iter().rposition(|v| (v - level).abs() > tolerance);
    match last_out {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

/// Weight of `final_state` on the Ising ground manifold of `params`, summed
/// over phonon and gravonon labels. Configurations within `1e-9 · scale` of
/// the Ising minimum count as ground.
pub fn success_probability(final_state: &WaveFunctional, params: &AnnealerParams) -> Result<f64> {
    let scale = params
        .j_matrix
        .iter()
        .flatten()
        .chain(&params.bias)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let ground = params.ground_manifold(1e-9 * scale);
    let w = ising_weights(final_state)?;
    Ok(ground.iter().map(|&s| w[s]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_annealer_basis, build_single_qubit_basis};
    use crate::operators::{assemble_single_qubit, SingleQubitParams, Term};
    use crate::scenarios::schedule::Schedule;
    use crate::continuum::build_band;
    use crate::propagate::evolve_static;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn synthetic_damped_cosine() {
        let times: Vec<f64> = (0..=4000).map(|k| 0.05 * k as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.5 + 0.5 * (-t / 20.0).exp() * (1.3 * t).cos()).collect();
        let fit = fit_damped_oscillation(&times, &values).unwrap();
        assert!((fit.decay_time - 20.0).abs() < 0.5, "{fit:?}");
        assert!((fit.plateau - 0.5).abs() < 0.01);
        assert!(!fit.undamped);
    }

    #[test]
    fn undamped_cosine_is_flagged() {
        let times: Vec<f64> = (0..=2000).map(|k| 0.05 * k as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| 0.5 + 0.3 * (0.9 * t).cos()).collect();
        let fit = fit_damped_oscillation(&times, &values).unwrap();
        assert!(fit.undamped);
        assert!(fit.decay_time > 10.0 * 100.0 * 0.9);
    }

    #[test]
    fn constant_trace_is_rejected() {
        let times: Vec<f64> = (0..100).map(f64::from).collect();
        assert!(matches!(fit_damped_oscillation(&times, &vec![0.4; 100]), Err(Error::Fit(_))));
        let ramp: Vec<f64> = times.iter().map(|t| t / 100.0).collect();
        assert!(fit_damped_oscillation(&times, &ramp).is_err());
    }

    #[test]
    fn extrema_alternate() {
        let times: Vec<f64> = (0..1000).map(|k| 0.01 * k as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| (std::f64::consts::PI * t).cos()).collect();
        let e = find_extrema(&times, &values, 0.1);
        assert_eq!(e.len(), 10);
        assert!(e.windows(2).all(|w| w[0].kind == -w[1].kind));
        assert_eq!(e[0].time, 0.0);
    }

    #[test]
    fn gap_of_symmetric_crossing() {
        let g = 0.25;
        let spectrum: Vec<(f64, Vec<f64>)> = (-50..=50)
            .map(|k| {
                let t = 0.037 * k as f64 + 0.011;
                let r = (t * t + g * g).sqrt();
                (t, vec![-r, r])
            })
            .collect();
        let m = min_gap(&spectrum).unwrap();
        assert!(m.interior);
        assert!((m.gap - 2.0 * g).abs() < 1e-3);
        assert!(m.time.abs() < 0.02);
        let flat: Vec<(f64, Vec<f64>)> = (0..10).map(|k| (k as f64, vec![1.0, 1.5, 3.0])).collect();
        let m = min_gap(&flat).unwrap();
        assert_eq!(m.gap, 0.5);
        assert!(min_gap(&[(0.0, vec![1.0])]).is_err());
    }

    #[test]
    fn crossing_count() {
        assert_eq!(crossings(&[0.2, 0.6, 0.5, 0.7, 0.4, 0.1, 0.9], 0.5), 3);
        assert_eq!(crossings(&[0.7, 0.8], 0.5), 0);
    }

    fn sq_params(w: f64) -> SingleQubitParams {
        SingleQubitParams {
            e_qubit: [0.0, -41.3],
            e_warp: [0.0, -41.3],
            v_loc: [0.9, 0.9],
            omega_photon: 41.5,
            v_dipole: 0.3,
            kappa_band: build_band(20, 0.0, 3.0, w).unwrap(),
            lambda_band: build_band(20, 0.0, 3.0, w).unwrap(),
        }
    }

    #[test]
    fn decoupled_bands_confine_spectral_weight() {
        let basis = Arc::new(build_single_qubit_basis(20, 20).unwrap());
        let h = assemble_single_qubit(&sq_params(0.0), &basis).unwrap();
        let psi = WaveFunctional::basis_state(basis.clone(), 0).unwrap();
        let d = spectral_weight(&psi, &h).unwrap();
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(d.weights.iter().filter(|w| **w > 1e-12).count() <= 4);

        let e = h.eigh();
        let col: Vec<C64> = e.vectors.column(7).iter().copied().collect();
        let eig = WaveFunctional::new(basis.clone(), col).unwrap();
        let d = spectral_weight(&eig, &h).unwrap();
        assert!((d.weights[7] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn partitions_sum_to_one() {
        let basis = Arc::new(build_single_qubit_basis(20, 20).unwrap());
        let h = assemble_single_qubit(&sq_params(0.05), &basis).unwrap();
        let psi = WaveFunctional::basis_state(basis.clone(), 0).unwrap();
        let times: Vec<f64> = (0..40).map(|k| 0.5 * k as f64).collect();
        let r = evolve_static(&h, &psi, &times).unwrap();
        let cw = current_direction_weight(&r, 1).unwrap();
        let acw = current_direction_weight(&r, -1).unwrap();
        assert!((cw.get("clockwise").unwrap()[0] - 1.0).abs() < 1e-12);
        for k in 0..times.len() {
            assert!((cw.get("clockwise").unwrap()[k] + acw.get("anticlockwise").unwrap()[k] - 1.0).abs() < 1e-9);
        }
        let sectors = gravonon_sector_weight(&r).unwrap();
        assert!(sectors.partition_defect() < 1e-9);
        assert!(sectors.get("kappa").unwrap()[0] < 1e-20);
        assert!(current_direction_weight(&r, 2).is_err());
    }

    fn ring(h0: f64) -> AnnealerParams {
        let mut j = [[0.0; 4]; 4];
        for (a, b, v) in [(0, 1, -1.0), (1, 2, -1.0), (2, 3, -1.0), (3, 0, -1.0)] {
            j[a][b] = v;
            j[b][a] = v;
        }
        AnnealerParams { j_matrix: j, bias: [0.0; 4], schedule: Schedule::linear(h0, 10.0), phonon: None, gravonon: None }
    }

    #[test]
    fn success_counts_degenerate_ground_pair() {
        let basis = Arc::new(build_annealer_basis(0, 0));
        let p = ring(0.0);
        let ground = WaveFunctional::basis_state(basis.clone(), 0).unwrap();
        assert_eq!(success_probability(&ground, &p).unwrap(), 1.0);
        let uniform = WaveFunctional::normalized(basis.clone(), vec![C64::new(1.0, 0.0); 16]).unwrap();
        assert!((success_probability(&uniform, &p).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_weights_reduce_over_environment() {
        let small = Arc::new(build_annealer_basis(0, 0));
        let big = Arc::new(build_annealer_basis(1, 3));
        let p = ring(1.0);
        let reference = crate::operators::assemble_annealer(&p, &small, 2.0).unwrap();
        let e = reference.eigh();
        // Ground eigenvector split evenly over two environment labels.
        let mut amps = vec![ZERO; big.len()];
        for s in 0..16 {
            amps[big.annealer_index(s, 0, 0)] = e.vectors[(s, 0)] * (0.5f64).sqrt();
            amps[big.annealer_index(s, 1, 2)] = e.vectors[(s, 0)] * (0.5f64).sqrt();
        }
        let psi = WaveFunctional::new(big.clone(), amps).unwrap();
        let w = eigenstate_weights(&psi, &reference).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        let occ = gravonon_occupation(0.0, &psi).unwrap();
        assert!((occ.ground - 0.5).abs() < 1e-12 && (occ.modes[1] - 0.5).abs() < 1e-12);
        assert!((occ.total_variation(&occ)).abs() < 1e-15);
        let q = qubit_current_weight(
            &EvolutionResult { times: vec![0.0], states: vec![psi], norm_drift: 0.0, warnings: vec![], stats: Default::default() },
            3,
        )
        .unwrap();
        assert!(q.partition_defect() < 1e-12);
        // Wrong reference size.
        let wrong = HermitianOperator::from_dense(big.clone(), &nalgebra::DMatrix::identity(big.len(), big.len()), Term::Ising).unwrap();
        assert!(eigenstate_weights(&WaveFunctional::basis_state(big, 0).unwrap(), &wrong).is_err());
    }

    #[test]
    fn settling() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(settling_time(&t, &[1.0, 0.2, 0.55, 0.5, 0.52], 0.5, 0.1), Some(2.0));
        assert_eq!(settling_time(&t, &[1.0, 0.2, 0.55, 0.5, 0.8], 0.5, 0.1), None);
    }

    proptest! {
        #[test]
        fn spectral_weight_ignores_global_phase(phase in 0.0..std::f64::consts::TAU, idx in 0usize..44) {
            let basis = Arc::new(build_single_qubit_basis(20, 20).unwrap());
            let h = assemble_single_qubit(&sq_params(0.05), &basis).unwrap();
            let amps: Vec<C64> = (0..44).map(|i| C64::new(((i + idx) as f64).sin(), (i as f64).cos())).collect();
            let a = WaveFunctional::normalized(basis.clone(), amps.clone()).unwrap();
            let b = WaveFunctional::normalized(basis.clone(), amps.iter().map(|x| x * C64::from_polar(1.0, phase)).collect()).unwrap();
            let (da, db) = (spectral_weight(&a, &h).unwrap(), spectral_weight(&b, &h).unwrap());
            prop_assert!((da.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (x, y) in da.weights.iter().zip(&db.weights) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn min_gap_ignores_energy_shift(shift in -50.0..50.0f64, g in 0.05..1.0f64) {
            let spectrum: Vec<(f64, Vec<f64>)> = (-20..=20)
                .map(|k| {
                    let t = 0.1 * k as f64;
                    let r = (t * t + g * g).sqrt();
                    (t, vec![-r, r, 2.0])
                })
                .collect();
            let shifted: Vec<(f64, Vec<f64>)> = spectrum.iter().map(|(t, e)| (*t, e.iter().map(|x| x + shift).collect())).collect();
            let (a, b) = (min_gap(&spectrum).unwrap(), min_gap(&shifted).unwrap());
            prop_assert!((a.gap - b.gap).abs() < 1e-9);
            prop_assert!((a.time - b.time).abs() < 1e-9);
        }
    }
}
