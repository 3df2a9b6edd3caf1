//! Discretized flat gravonon band.
//!
//! `n_modes` levels sit at the cell centres of `[center - halfwidth,
//! center + halfwidth]`, so the level spacing is exactly `1/ρ` with
//! `ρ = n_modes / (2 halfwidth)`. Every mode couples with the same real
//! matrix element `W` to the discrete state it is attached to; in the
//! weak-coupling regime that state decays at the golden-rule rate `2π W² ρ`
//! until the discretization revives it after `2π/Δε`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravononBand {
    energies: Vec<f64>,
    coupling: f64,
    center: f64,
    halfwidth: f64,
}

/// Number of modes, centre and halfwidth of a band, without a coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandShape {
    pub n_modes: usize,
    pub center: f64,
    pub halfwidth: f64,
}

impl BandShape {
    pub fn density_of_states(&self) -> f64 {
        self.n_modes as f64 / (2.0 * self.halfwidth)
    }
}

pub fn build_band(n_modes: usize, center: f64, halfwidth: f64, coupling: f64) -> Result<GravononBand> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("band needs at least one mode".into()));
    }
    if !(halfwidth > 0.0) || !halfwidth.is_finite() {
        return Err(Error::InvalidArgument(format!("band halfwidth must be positive, got {halfwidth}")));
    }
    if !(coupling >= 0.0) || !coupling.is_finite() || !center.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "band coupling must be finite and non-negative, got {coupling}"
        )));
    }
    let spacing = 2.0 * halfwidth / n_modes as f64;
    let energies = (0..n_modes)
        .map(|k| center - halfwidth + (k as f64 + 0.5) * spacing)
        .collect();
    Ok(GravononBand { energies, coupling, center, halfwidth })
}

/// Coupling that gives a discrete state the lifetime `target_lifetime` (ns)
/// through the golden rule: `W = sqrt(1 / (2π ρ τ))`.
pub fn calibrate_coupling(shape: BandShape, target_lifetime: f64) -> Result<f64> {
    if !(target_lifetime > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target lifetime must be positive, got {target_lifetime}"
        )));
    }
    if !(shape.halfwidth > 0.0) || shape.n_modes == 0 {
        return Err(Error::InvalidArgument("band shape needs modes and a positive halfwidth".into()));
    }
    Ok((1.0 / (TAU * shape.density_of_states() * target_lifetime)).sqrt())
}

impl GravononBand {
    pub fn from_shape(shape: BandShape, coupling: f64) -> Result<Self> {
        build_band(shape.n_modes, shape.center, shape.halfwidth, coupling)
    }

    pub fn shape(&self) -> BandShape {
        BandShape { n_modes: self.len(), center: self.center, halfwidth: self.halfwidth }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn density_of_states(&self) -> f64 {
        self.shape().density_of_states()
    }

    pub fn level_spacing(&self) -> f64 {
        1.0 / self.density_of_states()
    }

    /// Golden-rule decay rate `2π W² ρ` (1/ns).
    pub fn golden_rule_width(&self) -> f64 {
        TAU * self.coupling * self.coupling * self.density_of_states()
    }

    /// Revival time `2π/Δε` of the discretized band (ns).
    pub fn recurrence_time(&self) -> f64 {
        TAU / self.level_spacing()
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        Self::from_shape(self.shape(), coupling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Survival probability |<d|exp(-iHt)|d>|² of a discrete level at
    /// `e_discrete` coupled to every band mode, by dense diagonalization of
    /// the (N+1)×(N+1) Fano–Anderson matrix.
    fn survival(band: &GravononBand, e_discrete: f64, times: &[f64]) -> Vec<f64> {
        let n = band.len() + 1;
        let mut h = DMatrix::<f64>::zeros(n, n);
        h[(0, 0)] = e_discrete;
        for (k, &e) in band.energies().iter().enumerate() {
            h[(k + 1, k + 1)] = e;
            h[(0, k + 1)] = band.coupling();
            h[(k + 1, 0)] = band.coupling();
        }
        let eig = SymmetricEigen::new(h);
        times
            .iter()
            .map(|&t| {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &e) in eig.eigenvalues.iter().enumerate() {
                    let w = eig.eigenvectors[(0, j)].powi(2);
                    re += w * (e * t).cos();
                    im -= w * (e * t).sin();
                }
                re * re + im * im
            })
            .collect()
    }

    /// Decay rate from a log-linear least-squares fit of the survival
    /// probability over [t_lo, t_hi].
    fn fitted_rate(band: &GravononBand, t_lo: f64, t_hi: f64) -> f64 {
        let times: Vec<f64> = (0..=200).map(|i| t_lo + (t_hi - t_lo) * i as f64 / 200.0).collect();
        let p = survival(band, band.center(), &times);
        let n = times.len() as f64;
        let (sx, sy) = (times.iter().sum::<f64>(), p.iter().map(|v| v.ln()).sum::<f64>());
        let sxx: f64 = times.iter().map(|t| t * t).sum();
        let sxy: f64 = times.iter().zip(&p).map(|(t, v)| t * v.ln()).sum();
        -(n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn zero_coupling_band() {
        let b = build_band(201, 0.0, 0.5 * TAU, 0.0).unwrap();
        assert!((b.density_of_states() - 201.0 / TAU).abs() < 1e-12);
        assert_eq!(b.golden_rule_width(), 0.0);
    }

    #[test]
    fn energies_uniform_and_inside() {
        let b = build_band(50, 1.0, 2.0, 0.1).unwrap();
        let e = b.energies();
        assert!(e.windows(2).all(|w| (w[1] - w[0] - b.level_spacing()).abs() < 1e-12));
        assert!(e[0] > -1.0 && e[49] < 3.0);
        assert!((e.iter().sum::<f64>() / 50.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(build_band(10, 0.0, 0.0, 0.1).is_err());
        assert!(build_band(10, 0.0, -1.0, 0.1).is_err());
        assert!(build_band(10, 0.0, 1.0, -0.1).is_err());
        assert!(build_band(0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn golden_rule_width_matches_simulated_decay() {
        // 2π W² ρ with W = 0.005·2π, ρ = 200/(2π): 0.197392 rad/ns.
        let b = build_band(200, 0.0, 0.5 * TAU, 0.005 * TAU).unwrap();
        let gamma = b.golden_rule_width();
        assert!((gamma - 0.197_392_088).abs() < 1e-8, "{gamma}");
        let fitted = fitted_rate(&b, 1.0, 20.0);
        assert!((fitted / gamma - 1.0).abs() < 0.2, "fitted {fitted} vs {gamma}");
    }

    #[test]
    fn revival_at_recurrence_time() {
        let b = build_band(60, 0.0, 0.5 * TAU, 0.02 * TAU).unwrap();
        let t_rec = b.recurrence_time();
        assert!((t_rec - 60.0).abs() < 1e-9);
        let p = survival(&b, 0.0, &[0.5 * t_rec, t_rec]);
        assert!(p[0] < 1e-3, "mid-window survival {}", p[0]);
        assert!(p[1] > 50.0 * p[0].max(1e-6), "no revival: {:?}", p);
    }

    #[test]
    fn plateau_holds_until_half_recurrence_and_scales_with_mode_count() {
        let check = |n: usize| {
            let b = build_band(n, 0.0, 0.5 * TAU, 0.0).unwrap();
            let w = calibrate_coupling(b.shape(), 5.0).unwrap();
            let b = b.with_coupling(w).unwrap();
            let t_rec = b.recurrence_time();
            let times: Vec<f64> = (0..400).map(|i| t_rec * i as f64 / 400.0).collect();
            let p = survival(&b, 0.0, &times);
            // Infinite-time average of the discrete-state weight: Σ_j |<d|j>|⁴.
            let avg = {
                let n1 = b.len() + 1;
                let mut h = DMatrix::<f64>::zeros(n1, n1);
                for (k, &e) in b.energies().iter().enumerate() {
                    h[(k + 1, k + 1)] = e;
                    h[(0, k + 1)] = w;
                    h[(k + 1, 0)] = w;
                }
                let eig = SymmetricEigen::new(h);
                (0..n1).map(|j| eig.eigenvectors[(0, j)].powi(4)).sum::<f64>()
            };
            let transient = 3.0 * 5.0;
            for (t, v) in times.iter().zip(&p) {
                if *t > transient && *t < 0.5 * t_rec {
                    assert!(*v < 2.0 * avg, "n={n} t={t} p={v} avg={avg}");
                }
            }
            t_rec
        };
        let ratio = check(100) / check(50);
        assert!((ratio - 2.0).abs() <= 0.2);
    }

    #[test]
    fn calibration_round_trip_and_reference_value() {
        let shape = BandShape { n_modes: 200, center: 0.0, halfwidth: 1.0 * TAU };
        for tau in [1.0, 16.0, 50.0, 1e4] {
            let w = calibrate_coupling(shape, tau).unwrap();
            let b = GravononBand::from_shape(shape, w).unwrap();
            assert!((b.golden_rule_width() * tau - 1.0).abs() < 1e-12);
        }
        // ρ = 200/(2π) per rad/ns → W = sqrt(1/(2π ρ 16)) = sqrt(1/3200).
        let w16 = calibrate_coupling(BandShape { n_modes: 200, center: 0.0, halfwidth: 0.5 * TAU }, 16.0).unwrap();
        assert!((w16 - (1.0f64 / 3200.0).sqrt()).abs() < 1e-12);
        // ρ = 200/(4π) per rad/ns → W = sqrt(1/1600).
        let w1 = calibrate_coupling(shape, 16.0).unwrap();
        assert!((w1 - 0.025).abs() < 1e-12, "{w1}");
        assert!(calibrate_coupling(shape, 1e300).unwrap() < 1e-150);
        assert!(calibrate_coupling(shape, 0.0).is_err());
    }

    #[test]
    fn calibrated_coupling_decay_cross_check() {
        let shape = BandShape { n_modes: 200, center: 0.0, halfwidth: 0.5 * TAU };
        let w = calibrate_coupling(shape, 16.0).unwrap();
        let b = GravononBand::from_shape(shape, w).unwrap();
        let fitted = fitted_rate(&b, 2.0, 60.0);
        assert!((fitted * 16.0 - 1.0).abs() < 0.2, "fitted lifetime {}", 1.0 / fitted);
    }

    #[test]
    fn golden_rule_within_twenty_percent_for_three_pairs() {
        for (n, hw, w) in [(200, 0.5 * TAU, 0.004 * TAU), (300, 0.5 * TAU, 0.002 * TAU), (200, 0.25 * TAU, 0.003 * TAU)] {
            let b = build_band(n, 0.0, hw, w).unwrap();
            let gamma = b.golden_rule_width();
            assert!(gamma < 0.1 * hw);
            let fitted = fitted_rate(&b, 0.5 / gamma, 3.0 / gamma);
            assert!((fitted / gamma - 1.0).abs() < 0.2, "n={n} fitted {fitted} vs {gamma}");
        }
    }
}
