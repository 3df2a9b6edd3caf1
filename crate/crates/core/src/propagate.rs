//! Wave functionals and their time evolution.
//!
//! Static Hamiltonians can be propagated exactly through a dense
//! eigendecomposition. Time-dependent ones use the midpoint rule
//! `ψ(t+dt) = exp(−i H(t + dt/2) dt) ψ(t)`, each step exponential applied by
//! a Lanczos expansion with a per-step error bound.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::linalg::{self, Krylov, KrylovOptions, C64, ZERO};
use crate::operators::{AnnealerHamiltonian, HermitianOperator};

pub const DENSE_THRESHOLD: usize = 5000;

/// Largest `dt · ‖H‖` accepted without a warning.
pub const STEP_PHASE_LIMIT: f64 = 0.5;

const NORM_TOLERANCE: f64 = 1e-9;

/// Complex amplitudes over a basis, normalized to 1.
#[derive(Debug, Clone)]
pub struct WaveFunctional {
    basis: Arc<Basis>,
    amplitudes: Vec<C64>,
}

impl WaveFunctional {
    /// Rejects vectors whose norm differs from 1 by more than 1e-9.
    pub fn new(basis: Arc<Basis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: amplitudes.len() });
        }
        let n = linalg::norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("wave functional norm is {n}, expected 1")));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn normalized(basis: Arc<Basis>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: amplitudes.len() });
        }
        let n = linalg::norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(basis: Arc<Basis>, index: usize) -> Result<Self> {
        if index >= basis.len() {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range {}", basis.len())));
        }
        let mut amplitudes = vec![ZERO; basis.len()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// Wraps amplitudes produced by a propagator without renormalizing.
    pub(crate) fn raw(basis: Arc<Basis>, amplitudes: Vec<C64>) -> Self {
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn overlap(&self, other: &WaveFunctional) -> C64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }
}

/// Snapshots of an evolution. `times` is monotone in the direction of
/// propagation and `states[k]` is the state at `times[k]`.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunctional>,
    /// Largest `|‖ψ‖ − 1|` seen over all steps.
    pub norm_drift: f64,
    pub warnings: Vec<String>,
    pub stats: EvolutionStats,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct EvolutionStats {
    pub steps: usize,
    pub max_krylov_dim: usize,
}

impl EvolutionResult {
    pub fn basis(&self) -> Option<&Arc<Basis>> {
        self.states.first().map(|s| s.basis())
    }

    pub fn final_state(&self) -> Option<&WaveFunctional> {
        self.states.last()
    }

    /// Fails with [`Error::Numerical`] if the norm drift exceeds `tolerance`.
    pub fn check_norm(&self, tolerance: f64) -> Result<()> {
        if self.norm_drift > tolerance {
            Err(Error::Numerical(format!("norm drift {:e} exceeds {tolerance:e}", self.norm_drift)))
        } else {
            Ok(())
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    Ok(())
}

fn check_basis(h_dim: usize, psi0: &WaveFunctional) -> Result<()> {
    if h_dim != psi0.len() {
        return Err(Error::DimensionMismatch { expected: h_dim, got: psi0.len() });
    }
    Ok(())
}

/// Exact evolution under a static Hamiltonian via its eigendecomposition.
pub fn evolve_static(h: &HermitianOperator, psi0: &WaveFunctional, times: &[f64]) -> Result<EvolutionResult> {
    evolve_static_with_threshold(h, psi0, times, DENSE_THRESHOLD)
}

pub fn evolve_static_with_threshold(
    h: &HermitianOperator,
    psi0: &WaveFunctional,
    times: &[f64],
    threshold: usize,
) -> Result<EvolutionResult> {
    check_basis(h.dim(), psi0)?;
    if h.dim() > threshold {
        return Err(Error::AboveDenseThreshold { dim: h.dim(), threshold });
    }
    check_times(times)?;
    let e = h.eigh();
    let c = e.vectors.adjoint() * DVector::from_column_slice(psi0.amplitudes());
    let mut states = Vec::with_capacity(times.len());
    let mut norm_drift: f64 = 0.0;
    for &t in times {
        let phased = DVector::from_iterator(c.len(), c.iter().zip(&e.values).map(|(a, &en)| a * C64::from_polar(1.0, -en * t)));
        let psi = &e.vectors * phased;
        let amps: Vec<C64> = psi.iter().copied().collect();
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numerical(format!("non-finite amplitude at t = {t}")));
        }
        norm_drift = norm_drift.max((linalg::norm(&amps) - 1.0).abs());
        states.push(WaveFunctional::raw(psi0.basis().clone(), amps));
    }
    Ok(EvolutionResult { times: times.to_vec(), states, norm_drift, warnings: Vec::new(), stats: EvolutionStats::default() })
}

/// Anything that can apply `H(t)` to a vector.
pub trait TimeDependentHamiltonian {
    fn dim(&self) -> usize;

    /// `y = H(t) x`.
    fn apply(&self, t: f64, x: &[C64], y: &mut [C64]);

    /// Upper bound on `‖H(t)‖`, used for step-size warnings.
    fn norm_bound(&self, t: f64) -> f64;

    fn check_time(&self, _t: f64) -> Result<()> {
        Ok(())
    }
}

impl TimeDependentHamiltonian for HermitianOperator {
    fn dim(&self) -> usize {
        HermitianOperator::dim(self)
    }

    fn apply(&self, _t: f64, x: &[C64], y: &mut [C64]) {
        HermitianOperator::apply(self, x, y)
    }

    fn norm_bound(&self, _t: f64) -> f64 {
        self.matrix().gershgorin_bound()
    }
}

impl TimeDependentHamiltonian for AnnealerHamiltonian {
    fn dim(&self) -> usize {
        AnnealerHamiltonian::dim(self)
    }

    fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        AnnealerHamiltonian::apply(self, t, x, y)
    }

    fn norm_bound(&self, t: f64) -> f64 {
        AnnealerHamiltonian::norm_bound(self, t)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        AnnealerHamiltonian::check_time(self, t)
    }
}

/// Adapts a closure `t ↦ H(t)`; the last assembled operator is cached.
pub struct FnHamiltonian<F> {
    dim: usize,
    h_at: F,
    cache: RefCell<Option<(f64, HermitianOperator)>>,
}

impl<F: Fn(f64) -> Result<HermitianOperator>> FnHamiltonian<F> {
    pub fn new(dim: usize, h_at: F) -> Self {
        Self { dim, h_at, cache: RefCell::new(None) }
    }

    fn with_operator<R>(&self, t: f64, f: impl FnOnce(&HermitianOperator) -> R) -> R {
        let mut cache = self.cache.borrow_mut();
        if cache.as_ref().map_or(true, |(ct, _)| *ct != t) {
            let op = (self.h_at)(t).unwrap_or_else(|e| panic!("assembling H({t}) failed: {e}"));
            assert_eq!(op.dim(), self.dim, "H({t}) has the wrong dimension");
            *cache = Some((t, op));
        }
        f(&cache.as_ref().unwrap().1)
    }
}

impl<F: Fn(f64) -> Result<HermitianOperator>> TimeDependentHamiltonian for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        self.with_operator(t, |op| op.apply(x, y))
    }

    fn norm_bound(&self, t: f64) -> f64 {
        self.with_operator(t, |op| op.matrix().gershgorin_bound())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        (self.h_at)(t).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    /// Keep every `stride`-th step (the first and last state are always kept).
    pub stride: usize,
    pub krylov: KrylovOptions,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { stride: 100, krylov: KrylovOptions::default() }
    }
}

/// Midpoint-rule propagation from `t0` to `t1` with steps of at most `dt`.
///
/// The step count is `ceil(|t1 − t0| / dt)` and the actual step divides the
/// interval evenly. `t1 < t0` propagates backwards in time.
pub fn evolve_timedep<H: TimeDependentHamiltonian + ?Sized>(
    h: &H,
    psi0: &WaveFunctional,
    t0: f64,
    t1: f64,
    dt: f64,
    options: PropagationOptions,
) -> Result<EvolutionResult> {
    evolve_timedep_observed(h, psi0, t0, t1, dt, options, |_, _| Ok(()))
}

/// As [`evolve_timedep`], calling `observe(t, ψ)` on every kept snapshot
/// instead of storing it; the returned result holds only the final state.
pub fn evolve_timedep_streaming<H, O>(
    h: &H,
    psi0: &WaveFunctional,
    t0: f64,
    t1: f64,
    dt: f64,
    options: PropagationOptions,
    observe: O,
) -> Result<EvolutionResult>
where
    H: TimeDependentHamiltonian + ?Sized,
    O: FnMut(f64, &WaveFunctional) -> Result<()>,
{
    let mut r = evolve_inner(h, psi0, t0, t1, dt, options, observe, false)?;
    r.times.drain(..r.times.len().saturating_sub(1));
    Ok(r)
}

fn evolve_timedep_observed<H, O>(
    h: &H,
    psi0: &WaveFunctional,
    t0: f64,
    t1: f64,
    dt: f64,
    options: PropagationOptions,
    observe: O,
) -> Result<EvolutionResult>
where
    H: TimeDependentHamiltonian + ?Sized,
    O: FnMut(f64, &WaveFunctional) -> Result<()>,
{
    evolve_inner(h, psi0, t0, t1, dt, options, observe, true)
}

#[allow(clippy::too_many_arguments)]
fn evolve_inner<H, O>(
    h: &H,
    psi0: &WaveFunctional,
    t0: f64,
    t1: f64,
    dt: f64,
    options: PropagationOptions,
    mut observe: O,
    keep: bool,
) -> Result<EvolutionResult>
where
    H: TimeDependentHamiltonian + ?Sized,
    O: FnMut(f64, &WaveFunctional) -> Result<()>,
{
    check_basis(h.dim(), psi0)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !t0.is_finite() || !t1.is_finite() || t0 == t1 {
        return Err(Error::InvalidArgument(format!("need finite t0 ≠ t1, got {t0}, {t1}")));
    }
    h.check_time(t0)?;
    h.check_time(t1)?;
    let stride = options.stride.max(1);
    let span = t1 - t0;
    let n_steps = ((span.abs() / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let step = span / n_steps as f64;

    let basis = psi0.basis().clone();
    let mut psi = psi0.amplitudes().to_vec();
    let mut times = vec![t0];
    let mut states = Vec::new();
    let snapshot = |psi: &[C64]| WaveFunctional::raw(basis.clone(), psi.to_vec());
    let first = snapshot(&psi);
    observe(t0, &first)?;
    if keep {
        states.push(first);
    }
    let mut warnings = Vec::new();
    let mut worst_phase: f64 = 0.0;
    let mut norm_drift = (linalg::norm(&psi) - 1.0).abs();
    let mut krylov = Krylov::new(h.dim(), options.krylov);

    for k in 0..n_steps {
        let t_mid = t0 + (k as f64 + 0.5) * step;
        if k % stride == 0 {
            worst_phase = worst_phase.max(step.abs() * h.norm_bound(t_mid));
        }
        let mut apply = |x: &[C64], y: &mut [C64]| h.apply(t_mid, x, y);
        krylov.step(&mut apply, &mut psi, step)?;
        let t = if k + 1 == n_steps { t1 } else { t0 + (k + 1) as f64 * step };
        let n = linalg::norm(&psi);
        if !n.is_finite() {
            return Err(Error::Numerical(format!("non-finite amplitudes at t = {t} ns")));
        }
        norm_drift = norm_drift.max((n - 1.0).abs());
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            let s = snapshot(&psi);
            observe(t, &s)?;
            times.push(t);
            if keep || k + 1 == n_steps {
                states.push(s);
            }
        }
    }
    if worst_phase > STEP_PHASE_LIMIT {
        warnings.push(format!(
            "dt·‖H‖ reaches {worst_phase:.3} (> {STEP_PHASE_LIMIT}); the step may not resolve the spectrum"
        ));
    }
    Ok(EvolutionResult {
        times,
        states,
        norm_drift,
        warnings,
        stats: EvolutionStats { steps: n_steps, max_krylov_dim: krylov.max_used },
    })
}

/// `evolve_timedep` for a closure `t ↦ H(t)`.
pub fn evolve_timedep_fn<F>(
    h_at: F,
    psi0: &WaveFunctional,
    t0: f64,
    t1: f64,
    dt: f64,
    options: PropagationOptions,
) -> Result<EvolutionResult>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let h = FnHamiltonian::new(psi0.len(), h_at);
    evolve_timedep(&h, psi0, t0, t1, dt, options)
}

/// The `n_lowest` eigenvalues of `H(t)` at each requested time.
pub fn instantaneous_spectrum<F>(h_at: F, times: &[f64], n_lowest: usize) -> Result<Vec<(f64, Vec<f64>)>>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    times
        .iter()
        .map(|&t| {
            let h = h_at(t)?;
            if h.dim() > DENSE_THRESHOLD {
                return Err(Error::AboveDenseThreshold { dim: h.dim(), threshold: DENSE_THRESHOLD });
            }
            let mut e = h.eigenvalues();
            e.truncate(n_lowest);
            Ok((t, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_single_qubit_basis;
    use crate::operators::Term;
    use nalgebra::DMatrix;

    fn basis(n: usize) -> Arc<Basis> {
        // Any basis of the right size will do for matrix-level tests.
        Arc::new(build_single_qubit_basis(1, n - 5).unwrap())
    }

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        }
    }

    fn random_operator(b: &Arc<Basis>, seed: u64, scale: f64) -> HermitianOperator {
        let n = b.len();
        let mut r = lcg(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(scale * r(), 0.0);
            for j in 0..i {
                let v = C64::new(scale * r(), scale * r());
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        HermitianOperator::from_dense(b.clone(), &m, Term::Ising).unwrap()
    }

    fn random_state(b: &Arc<Basis>, seed: u64) -> WaveFunctional {
        let mut r = lcg(seed);
        WaveFunctional::normalized(b.clone(), (0..b.len()).map(|_| C64::new(r(), r())).collect()).unwrap()
    }

    fn max_dev(a: &WaveFunctional, b: &WaveFunctional) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn wave_functional_checks_norm() {
        let b = basis(6);
        assert!(WaveFunctional::new(b.clone(), vec![C64::new(1.0, 0.0); 6]).is_err());
        assert!(WaveFunctional::new(b.clone(), vec![C64::new(1.0, 0.0); 5]).is_err());
        assert!(WaveFunctional::normalized(b.clone(), vec![ZERO; 6]).is_err());
        assert!(WaveFunctional::basis_state(b, 6).is_err());
    }

    #[test]
    fn diagonal_hamiltonian_only_rotates_phase() {
        let b = basis(6);
        let m = DMatrix::from_diagonal(&DVector::from_iterator(6, (0..6).map(|i| C64::new(0.3 * i as f64 - 1.0, 0.0))));
        let h = HermitianOperator::from_dense(b.clone(), &m, Term::Ising).unwrap();
        let psi0 = WaveFunctional::basis_state(b, 4).unwrap();
        let times = [0.0, 0.5, 3.0, 17.0];
        let r = evolve_static(&h, &psi0, &times).unwrap();
        for (t, s) in times.iter().zip(&r.states) {
            let expected = C64::from_polar(1.0, -0.2 * t);
            assert!((s.amplitudes()[4] - expected).norm() < 1e-13);
            assert!((s.amplitudes()[4].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rabi_flip_probability() {
        let b = basis(6);
        let v = 0.37;
        let mut m = DMatrix::zeros(6, 6);
        m[(0, 1)] = C64::new(v, 0.0);
        m[(1, 0)] = C64::new(v, 0.0);
        m[(0, 0)] = C64::new(1.1, 0.0);
        m[(1, 1)] = C64::new(1.1, 0.0);
        let h = HermitianOperator::from_dense(b.clone(), &m, Term::Ising).unwrap();
        let psi0 = WaveFunctional::basis_state(b, 0).unwrap();
        let times: Vec<f64> = (0..50).map(|k| 0.3 * k as f64).collect();
        let r = evolve_static(&h, &psi0, &times).unwrap();
        assert!(r.norm_drift < 1e-10);
        for (t, s) in times.iter().zip(&r.states) {
            assert!((s.amplitudes()[1].norm_sqr() - (v * t).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn static_rejects_large_dimension_and_bad_times() {
        let b = basis(10);
        let h = random_operator(&b, 1, 1.0);
        let psi = random_state(&b, 2);
        assert!(matches!(
            evolve_static_with_threshold(&h, &psi, &[0.0], 8),
            Err(Error::AboveDenseThreshold { dim: 10, threshold: 8 })
        ));
        assert!(evolve_static(&h, &psi, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn krylov_path_matches_dense_path() {
        let b = basis(24);
        let h = random_operator(&b, 5, 2.0);
        let psi0 = random_state(&b, 6);
        let opts = PropagationOptions { stride: 1000, ..Default::default() };
        let r = evolve_timedep(&h, &psi0, 0.0, 5.0, 1e-3, opts).unwrap();
        let exact = evolve_static(&h, &psi0, &r.times).unwrap();
        for (a, e) in r.states.iter().zip(&exact.states) {
            assert!(max_dev(a, e) < 1e-6);
        }
        assert_eq!(r.times.len(), 6);
        assert!(r.norm_drift < 1e-10);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        let b = basis(20);
        let h = random_operator(&b, 8, 1.5);
        let psi0 = random_state(&b, 9);
        let opts = PropagationOptions { stride: 1 << 20, ..Default::default() };
        let fwd = evolve_timedep(&h, &psi0, 0.0, 7.0, 0.01, opts).unwrap();
        let back = evolve_timedep(&h, fwd.final_state().unwrap(), 7.0, 0.0, 0.01, opts).unwrap();
        assert!(max_dev(back.final_state().unwrap(), &psi0) < 1e-6);
    }

    #[test]
    fn energy_is_conserved_under_static_hamiltonian() {
        let b = basis(30);
        let h = random_operator(&b, 12, 3.0);
        let psi0 = random_state(&b, 13);
        let e = h.eigenvalues();
        let range = e[e.len() - 1] - e[0];
        let opts = PropagationOptions { stride: 50, ..Default::default() };
        let r = evolve_timedep(&h, &psi0, 0.0, 10.0, 0.01, opts).unwrap();
        let e0 = crate::operators::expectation(&h, &psi0).unwrap();
        for s in &r.states {
            let s = WaveFunctional::normalized(b.clone(), s.amplitudes().to_vec()).unwrap();
            assert!((crate::operators::expectation(&h, &s).unwrap() - e0).abs() < 1e-8 * range);
        }
    }

    /// Two-level system with diabatic splitting `v t` and coupling `Δ/2`.
    fn lz_operator(b: &Arc<Basis>, v: f64, gap: f64, t: f64) -> Result<HermitianOperator> {
        let mut m = DMatrix::zeros(b.len(), b.len());
        m[(0, 0)] = C64::new(0.5 * v * t, 0.0);
        m[(1, 1)] = C64::new(-0.5 * v * t, 0.0);
        m[(0, 1)] = C64::new(0.5 * gap, 0.0);
        m[(1, 0)] = C64::new(0.5 * gap, 0.0);
        HermitianOperator::from_dense(b.clone(), &m, Term::Transverse)
    }

    #[test]
    fn landau_zener_sweep() {
        let b = basis(6);
        let (v, gap) = (1.0, 0.87);
        let psi0 = WaveFunctional::basis_state(b.clone(), 0).unwrap();
        let opts = PropagationOptions { stride: 1 << 30, ..Default::default() };
        let r = evolve_timedep_fn(|t| lz_operator(&b, v, gap, t), &psi0, -150.0, 150.0, 0.01, opts).unwrap();
        let diabatic = r.final_state().unwrap().amplitudes()[0].norm_sqr();
        let oracle = (-std::f64::consts::TAU * gap * gap / (4.0 * v)).exp();
        assert!((diabatic / oracle - 1.0).abs() < 0.1, "{diabatic} vs {oracle}");
    }

    #[test]
    fn instantaneous_spectrum_of_crossing() {
        let b = basis(6);
        let g = 0.3;
        let times: Vec<f64> = (-20..=20).map(|k| 0.1 * k as f64).collect();
        let s = instantaneous_spectrum(|t| lz_operator(&b, 1.0, 2.0 * g, t), &times, 6).unwrap();
        let mid = &s[20];
        assert_eq!(mid.0, 0.0);
        // The four uncoupled levels sit at zero, between the split pair.
        let e = &mid.1;
        assert_eq!(e.len(), 6);
        assert!((e[5] - e[0] - 2.0 * g).abs() < 1e-12);
        assert!(e[1..5].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        let b = basis(6);
        let h_at = |t: f64| {
            let mut m = DMatrix::zeros(6, 6);
            for i in 0..6 {
                m[(i, i)] = C64::new((i as f64) * (0.5 + 0.3 * (0.7 * t).sin()), 0.0);
                if i + 1 < 6 {
                    let c = C64::new(0.4 * (1.0 + 0.5 * t.cos()), 0.1);
                    m[(i, i + 1)] = c;
                    m[(i + 1, i)] = c.conj();
                }
            }
            HermitianOperator::from_dense(b.clone(), &m, Term::Transverse)
        };
        let psi0 = WaveFunctional::basis_state(b.clone(), 0).unwrap();
        let opts = PropagationOptions { stride: 1 << 30, ..Default::default() };
        let run = |dt| evolve_timedep_fn(h_at, &psi0, 0.0, 4.0, dt, opts).unwrap().final_state().unwrap().clone();
        let (a, c, d) = (run(0.04), run(0.02), run(0.01));
        let ratio = max_dev(&a, &c) / max_dev(&c, &d);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn coarse_step_is_flagged() {
        let b = basis(8);
        let h = random_operator(&b, 3, 20.0);
        let psi0 = random_state(&b, 4);
        let r = evolve_timedep(&h, &psi0, 0.0, 1.0, 0.5, PropagationOptions::default()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.norm_drift < 1e-12);
    }

    #[test]
    fn streaming_keeps_only_final_state() {
        let b = basis(8);
        let h = random_operator(&b, 3, 1.0);
        let psi0 = random_state(&b, 4);
        let opts = PropagationOptions { stride: 10, ..Default::default() };
        let mut seen = Vec::new();
        let r = evolve_timedep_streaming(&h, &psi0, 0.0, 1.0, 0.01, opts, |t, _| {
            seen.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 11);
        assert_eq!(r.states.len(), 1);
        assert_eq!(r.times, vec![1.0]);
        let full = evolve_timedep(&h, &psi0, 0.0, 1.0, 0.01, opts).unwrap();
        assert_eq!(full.times, seen);
        assert_eq!(full.final_state().unwrap().amplitudes(), r.final_state().unwrap().amplitudes());
    }
}
