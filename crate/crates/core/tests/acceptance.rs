//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (uncaptured, so it shows in plain `cargo test` output) and the
//! test fails if any criterion fails.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use fluxsim::basis::{build_annealer_basis, build_single_qubit_basis, flat};
use fluxsim::continuum::{build_band, calibrate_coupling, BandShape};
use fluxsim::operators::{assemble_single_qubit, HermitianOperator, Term};
use fluxsim::propagate::{evolve_static, evolve_timedep, evolve_timedep_fn, PropagationOptions};
use fluxsim::scenarios::config::parse_config_str;
use fluxsim::scenarios::run::{
    run_and_write, run_anneal, run_anneal_phonon, run_anneal_phonon_gravonon, run_ramsey, Scenario,
};
use fluxsim::scenarios::Config;
use fluxsim::units::ghz;
use fluxsim::WaveFunctional;

struct Ledger {
    results: Vec<(u32, bool, String)>,
}

impl Ledger {
    fn record(&mut self, n: u32, pass: bool, detail: String) {
        self.results.push((n, pass, detail));
    }

    fn print(&mut self) {
        self.results.sort_by_key(|r| r.0);
        let mut err = std::io::stderr().lock();
        for (n, pass, detail) in &self.results {
            let verdict = if *pass { "PASS" } else { "FAIL" };
            let _ = writeln!(err, "criterion {n:>2}: {verdict}  {detail}");
        }
    }
}

fn defaults() -> Config {
    parse_config_str("", &[]).unwrap()
}

fn with(overrides: &[&str]) -> Config {
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    parse_config_str("", &o).unwrap()
}

/// Decay rate of `|⟨1|ψ(t)⟩|²` for a single level on a flat band, by a
/// least-squares line through `ln P` over three golden-rule lifetimes.
fn embedded_decay_rate(n_modes: usize, halfwidth_ghz: f64, lifetime: f64) -> (f64, f64) {
    let shape = BandShape { n_modes, center: 0.0, halfwidth: ghz(halfwidth_ghz) };
    let w = calibrate_coupling(shape, lifetime).unwrap();
    // Independent oracle: ρ = N / (2 halfwidth), Γ = 2π W² ρ.
    let rho = n_modes as f64 / (2.0 * ghz(halfwidth_ghz));
    let oracle = std::f64::consts::TAU * w * w * rho;

    let mut p = defaults().single_qubit_params().unwrap();
    p.v_loc = [0.0, 0.0];
    p.v_dipole = 0.0;
    p.kappa_band = build_band(n_modes, 0.0, ghz(halfwidth_ghz), w).unwrap();
    p.lambda_band = build_band(2, 0.0, ghz(halfwidth_ghz), 0.0).unwrap();
    let basis = Arc::new(build_single_qubit_basis(n_modes, 2).unwrap());
    let h = assemble_single_qubit(&p, &basis).unwrap();
    let psi0 = WaveFunctional::basis_state(basis, flat::CLOCKWISE_WARP).unwrap();
    let times: Vec<f64> = (1..=60).map(|k| 3.0 * lifetime * k as f64 / 60.0).collect();
    let r = evolve_static(&h, &psi0, &times).unwrap();
    let y: Vec<f64> = r.states.iter().map(|s| s.amplitudes()[flat::CLOCKWISE_WARP].norm_sqr().ln()).collect();
    let n = times.len() as f64;
    let (mt, my) = (times.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = times.iter().zip(&y).map(|(t, v)| (t - mt) * (v - my)).sum();
    let sxx: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    (-sxy / sxx, oracle)
}

/// Diabatic probability of `H = [[vt/2, Δ/2], [Δ/2, −vt/2]]` swept over ±T.
fn two_level_sweep(gap: f64, v: f64) -> f64 {
    let basis = Arc::new(build_annealer_basis(0, 0));
    let span = 250.0 * gap / v;
    let h_at = |t: f64| {
        let mut m = DMatrix::zeros(basis.len(), basis.len());
        m[(0, 0)] = C64::new(0.5 * v * t, 0.0);
        m[(1, 1)] = C64::new(-0.5 * v * t, 0.0);
        m[(0, 1)] = C64::new(0.5 * gap, 0.0);
        m[(1, 0)] = C64::new(0.5 * gap, 0.0);
        HermitianOperator::from_dense(basis.clone(), &m, Term::Transverse)
    };
    let psi0 = WaveFunctional::basis_state(basis.clone(), 0).unwrap();
    let dt = (0.2 / (v * span)).min(0.01);
    let opts = PropagationOptions { stride: usize::MAX, ..Default::default() };
    let r = evolve_timedep_fn(h_at, &psi0, -span, span, dt, opts).unwrap();
    r.final_state().unwrap().amplitudes()[0].norm_sqr()
}

fn same_outputs(a: &Path, b: &Path) -> bool {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    !names.is_empty() && names.iter().all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap())
}

#[test]
fn acceptance_criteria() {
    let mut ledger = Ledger { results: Vec::new() };
    let mut drifts: Vec<(&str, f64)> = Vec::new();

    // 2. Krylov propagation against exact diagonalization on the single-qubit model.
    {
        let c = defaults();
        let p = c.single_qubit_params().unwrap();
        let basis = Arc::new(build_single_qubit_basis(p.kappa_band.len(), p.lambda_band.len()).unwrap());
        let h = assemble_single_qubit(&p, &basis).unwrap();
        let psi0 = WaveFunctional::basis_state(basis.clone(), flat::CLOCKWISE).unwrap();
        let opts = PropagationOptions { stride: 10_000, ..Default::default() };
        let kr = evolve_timedep(&h, &psi0, 0.0, 100.0, 1e-3, opts).unwrap();
        let ex = evolve_static(&h, &psi0, &kr.times).unwrap();
        let dev = kr
            .states
            .iter()
            .zip(&ex.states)
            .flat_map(|(a, b)| a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max);
        drifts.push(("krylov single qubit", kr.norm_drift));
        ledger.record(
            2,
            basis.len() == 404 && kr.times.len() == 11 && dev < 1e-6,
            format!("dim {}, max |Δψ| over {} snapshots to 100 ns = {dev:.2e} (< 1e-6)", basis.len(), kr.times.len()),
        );
    }

    // 3. Golden-rule decay of an embedded level.
    {
        let cases = [(200, 0.5, 16.0), (400, 0.5, 30.0), (300, 0.25, 40.0)];
        let mut ok = true;
        let mut parts = Vec::new();
        for (n, hw, tau) in cases {
            let (rate, oracle) = embedded_decay_rate(n, hw, tau);
            let rel = (rate / oracle - 1.0).abs();
            ok &= rel < 0.2;
            parts.push(format!("N={n} hw={hw} GHz: Γ={rate:.5} vs 2πW²ρ={oracle:.5} ({:.1}%)", 100.0 * rel));
        }
        ledger.record(3, ok, format!("{} (within 20%)", parts.join("; ")));
    }

    // 4 and 5. Ramsey fringes and spectral split.
    {
        let r = run_ramsey(&defaults()).unwrap();
        let s = &r.summary;
        drifts.push(("ramsey", s.norm_drift));
        let (ok, detail) = match (&s.fit.fit, &s.uncoupled_fit.fit) {
            (Some(f), Some(f0)) => {
                let window = defaults().ramsey.t_final;
                let dev = s.max_deviation_after_settle.unwrap();
                let ok = f.n_extrema >= 3
                    && (5.0..=50.0).contains(&f.decay_time)
                    && f.plateau > 0.05
                    && f.plateau < 0.95
                    && dev <= defaults().ramsey.settle_tolerance
                    && f0.decay_time > 10.0 * window;
                (
                    ok,
                    format!(
                        "{} extrema, decay {:.1} ns, plateau {:.3}, max |P − plateau| after 50 ns {:.3}; W = 0 decay {:.3e} ns (> {})",
                        f.n_extrema,
                        f.decay_time,
                        f.plateau,
                        dev,
                        f0.decay_time,
                        10.0 * window
                    ),
                )
            }
            _ => (false, format!("fit failed: {:?} / {:?}", s.fit.error, s.uncoupled_fit.error)),
        };
        ledger.record(4, ok, detail);

        let split = &s.spectral_split_ghz;
        let mass = split.clustered_mass();
        ledger.record(
            5,
            mass >= 0.95 && split.centroid_below < 0.0 && split.centroid_above > 0.0,
            format!(
                "clusters at {:+.4} / {:+.4} GHz about E0, mass {:.4} + {:.4} = {mass:.4} (≥ 0.95)",
                split.centroid_below - s.unperturbed_energy_ghz,
                split.centroid_above - s.unperturbed_energy_ghz,
                split.mass_below,
                split.mass_above
            ),
        );
    }

    // 6 and 7. Slow and fast anneals.
    {
        let slow = run_anneal(&defaults()).unwrap().summary;
        drifts.push(("anneal", slow.norm_drift));
        ledger.record(
            6,
            slow.success_probability >= 0.99 && slow.min_gap.interior && slow.min_gap.gap_ghz < 0.1,
            format!(
                "success {:.6} (≥ 0.99), min gap {:.4} GHz (< 0.1) at t = {:.1} ns (interior: {})",
                slow.success_probability, slow.min_gap.gap_ghz, slow.min_gap.time_ns, slow.min_gap.interior
            ),
        );

        let fast = run_anneal(&with(&["annealer.schedule.t_final=10", "numerics.anneal_dt=0.001"])).unwrap().summary;
        drifts.push(("fast anneal", fast.norm_drift));
        let gap = ghz(fast.min_gap.gap_ghz);
        let v = (gap * fast.min_gap.curvature).sqrt();
        let formula = (-std::f64::consts::TAU * gap * gap / (4.0 * v)).exp();
        let simulated = two_level_sweep(gap, v);
        let rel = (simulated / formula - 1.0).abs();
        let drop = slow.success_probability - fast.success_probability;
        ledger.record(
            7,
            rel < 0.1 && drop >= 0.2,
            format!(
                "two-level sweep P = {simulated:.4} vs e^(−2πΔ²/4v) = {formula:.4} ({:.2}%, < 10%); four-qubit success {:.4} at 10 ns vs {:.4} at 2000 ns (drop {drop:.3} ≥ 0.2)",
                100.0 * rel,
                fast.success_probability,
                slow.success_probability
            ),
        );
    }

    // 8 and 9. Phonon, then phonon with the gravonon band.
    {
        let ph = run_anneal_phonon(&defaults()).unwrap().summary;
        drifts.push(("anneal-phonon", ph.norm_drift));
        let r = &ph.redistribution;
        ledger.record(
            8,
            r.mean_weights[0] < 0.8 && r.excited_above_threshold >= 2 && r.current_crossings >= 3,
            format!(
                "mean ground weight {:.3} (< 0.8), {} excited states > 0.02 (≥ 2), {} crossings of 0.5 (≥ 3) in [{}, {}] ns",
                r.mean_weights[0], r.excited_above_threshold, r.current_crossings, r.window_start_ns, r.window_end_ns
            ),
        );

        let g = run_anneal_phonon_gravonon(&defaults()).unwrap().summary;
        drifts.push(("anneal-phonon-gravonon", g.norm_drift));
        let s = &g.suppression;
        let matched = (g.phonon_only.mean_weights[0] - ph.redistribution.mean_weights[0]).abs() < 1e-12;
        ledger.record(
            9,
            matched && s.ground_weight_gain >= 0.1 && s.occupation_change < 0.02,
            format!(
                "ground weight {:.3} vs {:.3} without band (gain {:.3} ≥ 0.1); occupation TV across the phonon window {:.4} (< 0.02); dim {}",
                g.redistribution.mean_weights[0],
                g.phonon_only.mean_weights[0],
                s.ground_weight_gain,
                s.occupation_change,
                g.dimension
            ),
        );
    }

    // 10. Byte-identical outputs.
    {
        let dir = tempfile::tempdir().unwrap();
        let short_band = with(&["gravonon.band.n_modes=20", "annealer.schedule.t_final=700"]);
        let runs: [(Scenario, Config); 4] = [
            (Scenario::Ramsey, defaults()),
            (Scenario::Anneal, defaults()),
            (Scenario::AnnealPhonon, defaults()),
            (Scenario::AnnealPhononGravonon, short_band),
        ];
        let mut ok = true;
        for (scenario, config) in &runs {
            let a = dir.path().join(format!("{}-a", scenario.name()));
            let b = dir.path().join(format!("{}-b", scenario.name()));
            run_and_write(*scenario, config, &a).unwrap();
            run_and_write(*scenario, config, &b).unwrap();
            ok &= same_outputs(&a, &b);
        }
        ledger.record(10, ok, "ramsey, anneal, anneal-phonon and anneal-phonon-gravonon written twice, all files identical".into());
    }

    // 1. Norm drift of every run above.
    {
        let worst = drifts.iter().cloned().fold(("", 0.0f64), |m, d| if d.1 > m.1 { d } else { m });
        ledger.record(
            1,
            drifts.iter().all(|d| d.1 < 1e-9),
            format!("{} runs, worst norm drift {:.2e} ({}) (< 1e-9)", drifts.len(), worst.1, worst.0),
        );
    }

    ledger.print();
    let failed: Vec<u32> = ledger.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
