//! Hamiltonian assembly for the single-qubit and annealer models, and the
//! Pauli actions on Ising configurations.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{flat, Basis, IsingConfiguration, N_ISING, N_QUBITS};
use crate::continuum::GravononBand;
use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, HermitianEigen, C64, ZERO};
use crate::propagate::WaveFunctional;
use crate::scenarios::schedule::{switch_ramp, Schedule};

/// Named physical contribution to a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    QubitEnergy,
    WarpEnergy,
    LocalTunnelling,
    PhotonEnergy,
    Dipole,
    Ising,
    Bias,
    Transverse,
    PhononCoupling,
    PhononEnergy,
    BandEnergy,
    GravononScattering,
}

pub type Entries = Vec<(usize, usize, C64)>;

/// Hermitian matrix in a basis, with its entries grouped by physical term.
///
/// Off-diagonal entries belong to exactly one term. A diagonal entry can
/// collect several (qubit plus photon energy, say); the matrix holds the sum.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    basis: Arc<Basis>,
    matrix: CsrMatrix,
    term_tags: BTreeMap<Term, Entries>,
}

impl HermitianOperator {
    fn from_tags(basis: Arc<Basis>, term_tags: BTreeMap<Term, Entries>) -> Self {
        let dim = basis.len();
        let matrix = CsrMatrix::from_triplets(dim, term_tags.values().flatten().copied());
        Self { basis, matrix, term_tags }
    }

    /// Operator from an explicit matrix, tagged as a single term.
    pub fn from_dense(basis: Arc<Basis>, m: &DMatrix<C64>, term: Term) -> Result<Self> {
        if m.nrows() != basis.len() || m.ncols() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: m.nrows() });
        }
        let entries: Entries = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)] != ZERO)
            .map(|(i, j)| (i, j, m[(i, j)]))
            .collect();
        let op = Self::from_tags(basis, BTreeMap::from([(term, entries)]));
        let scale = op.matrix.max_abs().max(f64::MIN_POSITIVE);
        if op.hermiticity_residual() > 1e-12 * scale {
            return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
        }
        Ok(op)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn term_tags(&self) -> &BTreeMap<Term, Entries> {
        &self.term_tags
    }

    /// Number of stored entries per term.
    pub fn term_counts(&self) -> BTreeMap<Term, usize> {
        self.term_tags.iter().map(|(t, e)| (*t, e.len())).collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.matrix.to_dense()
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.mul_into(x, y);
    }

    /// `max |H − H†|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.matrix
            .iter()
            .map(|(i, j, v)| (v - self.matrix.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn eigh(&self) -> HermitianEigen {
        linalg::eigh(&self.to_dense())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.to_dense())
    }
}

/// `⟨ψ|H|ψ⟩`.
pub fn expectation(op: &HermitianOperator, psi: &WaveFunctional) -> Result<f64> {
    if psi.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: psi.len() });
    }
    let mut y = vec![ZERO; op.dim()];
    op.apply(psi.amplitudes(), &mut y);
    let v = linalg::dot(psi.amplitudes(), &y);
    let scale = op.matrix.max_abs().max(1.0);
    if v.im.abs() > 1e-10 * scale {
        return Err(Error::Numerical(format!("expectation value has imaginary part {}", v.im)));
    }
    Ok(v.re)
}

#[derive(Default)]
struct Tags(BTreeMap<Term, Entries>);

impl Tags {
    fn diag(&mut self, term: Term, i: usize, v: f64) {
        if v != 0.0 {
            self.0.entry(term).or_default().push((i, i, C64::new(v, 0.0)));
        }
    }

    /// Adds `v` at `(i, j)` and its conjugate at `(j, i)`.
    fn pair(&mut self, term: Term, i: usize, j: usize, v: C64) {
        debug_assert_ne!(i, j);
        if v != ZERO {
            let e = self.0.entry(term).or_default();
            e.push((i, j, v));
            e.push((j, i, v.conj()));
        }
    }
}

/// Parameters of the single flux qubit with photon and gravonon bands, all
/// energies in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitParams {
    /// Loop-current energies `(E_qubit1, E_qubit2)`.
    pub e_qubit: [f64; 2],
    /// Warp-region energies `(E_w1, E_w2)`.
    pub e_warp: [f64; 2],
    /// Loop ↔ warp tunnelling for each current direction.
    pub v_loc: [f64; 2],
    pub omega_photon: f64,
    pub v_dipole: f64,
    /// Band on the clockwise warp state; mode energies are measured from `E_w1`.
    pub kappa_band: GravononBand,
    /// Band on the anticlockwise warp state; mode energies are measured from `E_w2 + ω`.
    pub lambda_band: GravononBand,
}

impl SingleQubitParams {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .e_qubit
            .iter()
            .chain(&self.e_warp)
            .chain(&self.v_loc)
            .chain([&self.omega_photon, &self.v_dipole]);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("single-qubit parameters must be finite".into()));
        }
        Ok(())
    }
}

pub fn assemble_single_qubit(params: &SingleQubitParams, basis: &Arc<Basis>) -> Result<HermitianOperator> {
    params.validate()?;
    let (nk, nl) = basis
        .single_qubit_shape()
        .ok_or_else(|| Error::BasisMismatch("expected a single-qubit basis".into()))?;
    if nk != params.kappa_band.len() || nl != params.lambda_band.len() {
        return Err(Error::BasisMismatch(format!(
            "basis has {nk}/{nl} band modes, parameters have {}/{}",
            params.kappa_band.len(),
            params.lambda_band.len()
        )));
    }
    let p = params;
    let mut tags = Tags::default();
    let [eq1, eq2] = p.e_qubit;
    let [ew1, ew2] = p.e_warp;
    let w = p.omega_photon;

    tags.diag(Term::QubitEnergy, flat::CLOCKWISE, eq1);
    tags.diag(Term::QubitEnergy, flat::ANTICLOCKWISE, eq2);
    tags.diag(Term::WarpEnergy, flat::CLOCKWISE_WARP, ew1);
    tags.diag(Term::WarpEnergy, flat::ANTICLOCKWISE_WARP, ew2);
    tags.diag(Term::PhotonEnergy, flat::ANTICLOCKWISE, w);
    tags.diag(Term::PhotonEnergy, flat::ANTICLOCKWISE_WARP, w);
    tags.pair(Term::LocalTunnelling, flat::CLOCKWISE, flat::CLOCKWISE_WARP, C64::new(p.v_loc[0], 0.0));
    tags.pair(Term::LocalTunnelling, flat::ANTICLOCKWISE, flat::ANTICLOCKWISE_WARP, C64::new(p.v_loc[1], 0.0));
    tags.pair(Term::Dipole, flat::CLOCKWISE, flat::ANTICLOCKWISE, C64::new(p.v_dipole, 0.0));

    let kappa0 = 4;
    for (k, &e) in p.kappa_band.energies().iter().enumerate() {
        let i = kappa0 + k;
        tags.diag(Term::WarpEnergy, i, ew1);
        tags.diag(Term::BandEnergy, i, e);
        tags.pair(Term::GravononScattering, flat::CLOCKWISE_WARP, i, C64::new(p.kappa_band.coupling(), 0.0));
    }
    let lambda0 = 4 + nk;
    for (l, &e) in p.lambda_band.energies().iter().enumerate() {
        let i = lambda0 + l;
        tags.diag(Term::WarpEnergy, i, ew2);
        tags.diag(Term::PhotonEnergy, i, w);
        tags.diag(Term::BandEnergy, i, e);
        tags.pair(Term::GravononScattering, flat::ANTICLOCKWISE_WARP, i, C64::new(p.lambda_band.coupling(), 0.0));
    }
    Ok(HermitianOperator::from_tags(basis.clone(), tags.0))
}

fn check_qubit(qubit: usize) -> Result<()> {
    if (1..=N_QUBITS).contains(&qubit) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("qubit index must be in 1..={N_QUBITS}, got {qubit}")))
    }
}

/// `σ^z_q |s⟩ = s_q |s⟩`.
pub fn pauli_z(qubit: usize, config: IsingConfiguration) -> Result<(i8, IsingConfiguration)> {
    check_qubit(qubit)?;
    Ok((config.spin(qubit), config))
}

/// `σ^x_q` flips spin `q`.
pub fn pauli_x(qubit: usize, config: IsingConfiguration) -> Result<IsingConfiguration> {
    check_qubit(qubit)?;
    Ok(config.with_flipped(qubit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononParams {
    pub omega: f64,
    pub coupling: f64,
    /// Centre of the switch-on ramp (ns).
    pub switch_on: f64,
    /// Ramp width (ns).
    pub ramp: f64,
    /// Qubit whose `σ^x` the phonon drives (1-based).
    pub qubit: usize,
}

impl PhononParams {
    pub fn envelope(&self, t: f64) -> f64 {
        switch_ramp(t, self.switch_on, self.ramp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravononCoupling {
    pub band: GravononBand,
    /// Coupled qubit (1-based).
    pub qubit: usize,
    /// Spin of the coupled qubit whose current reaches the warp region.
    pub direction: i8,
    /// Suppress `σ^x` of the coupled qubit on band-excited configurations:
    /// with a gravonon emitted the current sits in the warp region and
    /// cannot be flipped by the transverse field or the phonon.
    pub lock_transverse: bool,
}

/// Annealer parameters, energies in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealerParams {
    /// Symmetric, zero diagonal. The Ising sum runs over ordered pairs, so
    /// each bond enters twice.
    pub j_matrix: [[f64; N_QUBITS]; N_QUBITS],
    /// Single-qubit energies `b_α σ^z_α` (loop-current asymmetry).
    pub bias: [f64; N_QUBITS],
    pub schedule: Schedule,
    pub phonon: Option<PhononParams>,
    pub gravonon: Option<GravononCoupling>,
}

impl AnnealerParams {
    pub fn validate(&self) -> Result<()> {
        let j = &self.j_matrix;
        for a in 0..N_QUBITS {
            if j[a][a] != 0.0 {
                return Err(Error::InvalidArgument(format!("J[{a}][{a}] must be zero")));
            }
            for b in 0..N_QUBITS {
                if !j[a][b].is_finite() || j[a][b] != j[b][a] {
                    return Err(Error::InvalidArgument("J must be finite and symmetric".into()));
                }
            }
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("bias must be finite".into()));
        }
        self.schedule.validate()?;
        if let Some(p) = &self.phonon {
            check_qubit(p.qubit)?;
            if ![p.omega, p.coupling, p.switch_on, p.ramp].iter().all(|v| v.is_finite()) || p.ramp < 0.0 {
                return Err(Error::InvalidArgument("phonon parameters must be finite, ramp ≥ 0".into()));
            }
        }
        if let Some(g) = &self.gravonon {
            check_qubit(g.qubit)?;
            if g.direction != 1 && g.direction != -1 {
                return Err(Error::InvalidArgument("gravonon direction must be ±1".into()));
            }
        }
        Ok(())
    }

    /// Diagonal Ising energy `Σ_{α≠β} J_{αβ} s_α s_β + Σ b_α s_α`.
    pub fn ising_energy(&self, config: IsingConfiguration) -> f64 {
        let s = config.spins().map(f64::from);
        let mut e = 0.0;
        for a in 0..N_QUBITS {
            for b in 0..N_QUBITS {
                if a != b {
                    e += self.j_matrix[a][b] * s[a] * s[b];
                }
            }
            e += self.bias[a] * s[a];
        }
        e
    }

    /// Indices of Ising configurations within `tol` of the minimum energy.
    pub fn ground_manifold(&self, tol: f64) -> Vec<usize> {
        let e: Vec<f64> = IsingConfiguration::all().map(|c| self.ising_energy(c)).collect();
        let min = e.iter().copied().fold(f64::INFINITY, f64::min);
        (0..N_ISING).filter(|&i| e[i] - min <= tol).collect()
    }

    /// The same parameters without phonon and gravonon terms.
    pub fn unperturbed(&self) -> Self {
        Self { phonon: None, gravonon: None, ..self.clone() }
    }
}

/// Time-dependent annealer Hamiltonian split into its fixed part, one unit
/// `σ^x` matrix per qubit and the phonon block.
#[derive(Debug, Clone)]
pub struct AnnealerHamiltonian {
    basis: Arc<Basis>,
    params: AnnealerParams,
    fixed: BTreeMap<Term, Entries>,
    fixed_matrix: CsrMatrix,
    transverse: Vec<(Entries, CsrMatrix)>,
    phonon: Option<(BTreeMap<Term, Entries>, CsrMatrix)>,
}

impl AnnealerHamiltonian {
    pub fn new(params: &AnnealerParams, basis: &Arc<Basis>) -> Result<Self> {
        params.validate()?;
        let (n_ph, n_g) = basis
            .annealer_shape()
            .ok_or_else(|| Error::BasisMismatch("expected an annealer basis".into()))?;
        let band_len = params.gravonon.as_ref().map_or(0, |g| g.band.len());
        if band_len != n_g {
            return Err(Error::BasisMismatch(format!("basis has {n_g} gravonon modes, parameters have {band_len}")));
        }
        if params.phonon.is_some() && n_ph == 0 {
            return Err(Error::BasisMismatch("phonon enabled but the basis has no phonon states".into()));
        }
        let dim = basis.len();
        let idx = |s: usize, n: usize, g: usize| basis.annealer_index(s, n, g);
        let grav = params.gravonon.as_ref();
        // σ^x of the coupled qubit is withheld on band-excited configurations.
        let flip_allowed = |qubit: usize, g: usize| match grav {
            Some(c) => !(c.lock_transverse && g > 0 && qubit == c.qubit),
            None => true,
        };

        let mut fixed = Tags::default();
        for cfg in IsingConfiguration::all() {
            let s = cfg.index();
            let mut e_ising = 0.0;
            for a in 0..N_QUBITS {
                for b in 0..N_QUBITS {
                    if a != b {
                        e_ising += params.j_matrix[a][b] * f64::from(cfg.spins()[a] * cfg.spins()[b]);
                    }
                }
            }
            let e_bias: f64 = (0..N_QUBITS).map(|a| params.bias[a] * f64::from(cfg.spins()[a])).sum();
            for n in 0..=n_ph {
                for g in 0..=n_g {
                    let i = idx(s, n, g);
                    fixed.diag(Term::Ising, i, e_ising);
                    fixed.diag(Term::Bias, i, e_bias);
                    if let (Some(c), true) = (grav, g > 0) {
                        fixed.diag(Term::BandEnergy, i, c.band.energies()[g - 1]);
                    }
                }
                if let Some(c) = grav {
                    if cfg.spin(c.qubit) == c.direction {
                        let w = C64::new(c.band.coupling(), 0.0);
                        for g in 1..=n_g {
                            fixed.pair(Term::GravononScattering, idx(s, n, 0), idx(s, n, g), w);
                        }
                    }
                }
            }
        }

        let mut transverse = Vec::with_capacity(N_QUBITS);
        for q in 1..=N_QUBITS {
            let mut e = Entries::new();
            for cfg in IsingConfiguration::all() {
                let (s, t) = (cfg.index(), cfg.with_flipped(q).index());
                for n in 0..=n_ph {
                    for g in 0..=n_g {
                        if flip_allowed(q, g) {
                            e.push((idx(t, n, g), idx(s, n, g), C64::new(1.0, 0.0)));
                        }
                    }
                }
            }
            let m = CsrMatrix::from_triplets(dim, e.iter().copied());
            transverse.push((e, m));
        }

        let phonon = params.phonon.as_ref().map(|p| {
            let mut tags = Tags::default();
            for cfg in IsingConfiguration::all() {
                let (s, t) = (cfg.index(), cfg.with_flipped(p.qubit).index());
                for n in 0..=n_ph {
                    for g in 0..=n_g {
                        tags.diag(Term::PhononEnergy, idx(s, n, g), 0.5 * p.omega * n as f64);
                        // d† branch only; `pair` adds the d branch as the conjugate.
                        if n < n_ph && flip_allowed(p.qubit, g) {
                            let amp = p.coupling * ((n + 1) as f64).sqrt();
                            tags.pair(Term::PhononCoupling, idx(t, n + 1, g), idx(s, n, g), C64::new(amp, 0.0));
                        }
                    }
                }
            }
            let m = CsrMatrix::from_triplets(dim, tags.0.values().flatten().copied());
            (tags.0, m)
        });

        let fixed_matrix = CsrMatrix::from_triplets(dim, fixed.0.values().flatten().copied());
        Ok(Self { basis: basis.clone(), params: params.clone(), fixed: fixed.0, fixed_matrix, transverse, phonon })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn params(&self) -> &AnnealerParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn coefficients(&self, t: f64) -> ([f64; N_QUBITS], f64) {
        let s = &self.params.schedule;
        let h = std::array::from_fn(|a| s.field(a + 1, t));
        let f = self.params.phonon.as_ref().map_or(0.0, |p| p.envelope(t));
        (h, f)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        self.params.schedule.check(t)
    }

    /// `y = H(t) x`.
    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        let (h, f) = self.coefficients(t);
        self.fixed_matrix.mul_into(x, y);
        for (a, (_, m)) in self.transverse.iter().enumerate() {
            if h[a] != 0.0 {
                m.mul_add(h[a], x, y);
            }
        }
        if let (Some((_, m)), true) = (&self.phonon, f != 0.0) {
            m.mul_add(f, x, y);
        }
    }

    /// Upper bound on the spectral radius of `H(t)`.
    pub fn norm_bound(&self, t: f64) -> f64 {
        let (h, f) = self.coefficients(t);
        let mut b = self.fixed_matrix.gershgorin_bound();
        for (a, (_, m)) in self.transverse.iter().enumerate() {
            b += h[a].abs() * m.gershgorin_bound();
        }
        if let Some((_, m)) = &self.phonon {
            b += f.abs() * m.gershgorin_bound();
        }
        b
    }

    /// The operator at time `t`.
    pub fn at(&self, t: f64) -> Result<HermitianOperator> {
        self.check_time(t)?;
        let (h, f) = self.coefficients(t);
        let mut tags = self.fixed.clone();
        for (a, (e, _)) in self.transverse.iter().enumerate() {
            if h[a] != 0.0 {
                tags.entry(Term::Transverse).or_default().extend(e.iter().map(|&(i, j, v)| (i, j, v * h[a])));
            }
        }
        if let (Some((ph, _)), true) = (&self.phonon, f != 0.0) {
            for (term, e) in ph {
                tags.entry(*term).or_default().extend(e.iter().map(|&(i, j, v)| (i, j, v * f)));
            }
        }
        Ok(HermitianOperator::from_tags(self.basis.clone(), tags))
    }
}

pub fn assemble_annealer(params: &AnnealerParams, basis: &Arc<Basis>, t: f64) -> Result<HermitianOperator> {
    AnnealerHamiltonian::new(params, basis)?.at(t)
}

/// Global spin flip on an annealer basis, acting on spins only.
pub fn global_flip(basis: &Basis) -> Result<CsrMatrix> {
    let (n_ph, n_g) = basis
        .annealer_shape()
        .ok_or_else(|| Error::BasisMismatch("expected an annealer basis".into()))?;
    let mut e = Vec::with_capacity(basis.len());
    for s in 0..N_ISING {
        for n in 0..=n_ph {
            for g in 0..=n_g {
                e.push((basis.annealer_index(N_ISING - 1 - s, n, g), basis.annealer_index(s, n, g), C64::new(1.0, 0.0)));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(basis.len(), e))
}
