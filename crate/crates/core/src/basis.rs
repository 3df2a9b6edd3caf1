//! Configuration spaces for the single-qubit and four-qubit models.
//!
//! A [`Basis`] is an ordered, duplicate-free list of [`Configuration`]s with
//! an inverse lookup. Bases are immutable after construction.
//!
//! Single-qubit ordering: the four flat configurations
//! `|1,0,0,0>, |2,0,0,0>, |-1,1,0,0>, |-2,1,0,0>`, then `|2,0,κ,0>` for
//! κ = 1..N_κ, then `|-2,1,0,λ>` for λ = 1..N_λ.
//!
//! Annealer ordering is ising-major, then phonon occupation, then gravonon
//! index:
//! `index = (ising · (N_ph + 1) + phonon) · (N_g + 1) + gravonon`,
//! where `ising` reads the four spins as a binary number with qubit 1 as the
//! most significant bit and −1 as a set bit (`|1111>` = 0, `|-1-1-1-1>` = 15).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_QUBITS: usize = 4;
pub const N_ISING: usize = 1 << N_QUBITS;

/// `|current, photon, κ, λ>` of the single-qubit model.
///
/// `current` is ±1 for the persistent current in the loop and ±2 for the
/// current in the warp region of the junction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SingleQubitConfiguration {
    current_label: i8,
    photon_occupation: u8,
    kappa_index: usize,
    lambda_index: usize,
}

impl SingleQubitConfiguration {
    pub fn new(current_label: i8, photon_occupation: u8, kappa_index: usize, lambda_index: usize) -> Result<Self> {
        let c = Self { current_label, photon_occupation, kappa_index, lambda_index };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidArgument(format!("{self}: {why}")));
        match self.current_label {
            1 | 2 if self.photon_occupation != 0 => return bad("clockwise current carries no photon"),
            -1 | -2 if self.photon_occupation != 1 => return bad("anticlockwise current carries one photon"),
            1 | 2 | -1 | -2 => {}
            _ => return bad("current label must be one of ±1, ±2"),
        }
        if self.kappa_index > 0 && self.lambda_index > 0 {
            return bad("at most one band mode may be excited");
        }
        if self.kappa_index > 0 && self.current_label != 2 {
            return bad("κ modes attach to the clockwise warp state");
        }
        if self.lambda_index > 0 && self.current_label != -2 {
            return bad("λ modes attach to the anticlockwise warp state");
        }
        Ok(())
    }

    pub fn current_label(&self) -> i8 {
        self.current_label
    }

    pub fn photon_occupation(&self) -> u8 {
        self.photon_occupation
    }

    pub fn kappa_index(&self) -> usize {
        self.kappa_index
    }

    pub fn lambda_index(&self) -> usize {
        self.lambda_index
    }

    /// Sign of the circulating current: +1 clockwise, −1 anticlockwise.
    pub fn direction(&self) -> i8 {
        self.current_label.signum()
    }

    pub fn is_flat(&self) -> bool {
        self.kappa_index == 0 && self.lambda_index == 0
    }
}

impl fmt::Display for SingleQubitConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|{},{},{},{}>",
            self.current_label, self.photon_occupation, self.kappa_index, self.lambda_index
        )
    }
}

/// Persistent-current directions of the four annealer qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IsingConfiguration {
    spins: [i8; N_QUBITS],
}

impl IsingConfiguration {
    pub fn new(spins: [i8; N_QUBITS]) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("spins must be ±1, got {spins:?}")));
        }
        Ok(Self { spins })
    }

    /// Inverse of [`IsingConfiguration::index`].
    pub fn from_index(index: usize) -> Self {
        assert!(index < N_ISING, "ising index {index} out of range");
        let mut spins = [1i8; N_QUBITS];
        for (q, s) in spins.iter_mut().enumerate() {
            if index >> (N_QUBITS - 1 - q) & 1 == 1 {
                *s = -1;
            }
        }
        Self { spins }
    }

    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(s == -1))
    }

    pub fn spins(&self) -> [i8; N_QUBITS] {
        self.spins
    }

    /// Spin of qubit `qubit` (1-based).
    pub fn spin(&self, qubit: usize) -> i8 {
        self.spins[qubit - 1]
    }

    pub(crate) fn with_flipped(mut self, qubit: usize) -> Self {
        self.spins[qubit - 1] = -self.spins[qubit - 1];
        self
    }

    /// All sixteen configurations in index order.
    pub fn all() -> impl Iterator<Item = IsingConfiguration> {
        (0..N_ISING).map(Self::from_index)
    }
}

impl fmt::Display for IsingConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for s in self.spins {
            write!(f, "{s}")?;
        }
        write!(f, ">")
    }
}

/// One configuration of the annealer: spins, phonon occupation and the
/// gravonon mode index on the coupled qubit (0 = band ground).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnealerConfiguration {
    pub ising: IsingConfiguration,
    pub phonon_occupation: usize,
    pub gravonon_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    SingleQubit(SingleQubitConfiguration),
    Annealer(AnnealerConfiguration),
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::SingleQubit(c) => c.fmt(f),
            Configuration::Annealer(c) => {
                write!(f, "{}⊗|ph={}>⊗|g={}>", c.ising, c.phonon_occupation, c.gravonon_index)
            }
        }
    }
}

/// Which model a basis spans, with its mode counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    SingleQubit { n_kappa: usize, n_lambda: usize },
    Annealer { n_phonon_max: usize, n_gravonon: usize },
}

#[derive(Debug, Clone)]
pub struct Basis {
    kind: BasisKind,
    configurations: Vec<Configuration>,
    index_of: HashMap<Configuration, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Basis {
    fn from_configurations(kind: BasisKind, configurations: Vec<Configuration>) -> Self {
        let index_of: HashMap<_, _> = configurations
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, i))
            .collect();
        debug_assert_eq!(index_of.len(), configurations.len(), "duplicate configurations");
        Self { kind, configurations, index_of }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configurations
    }

    pub fn get(&self, index: usize) -> Option<&Configuration> {
        self.configurations.get(index)
    }

    pub fn index_of(&self, configuration: &Configuration) -> Option<usize> {
        self.index_of.get(configuration).copied()
    }

    /// Mode counts of an annealer basis, `None` for the single-qubit model.
    pub fn annealer_shape(&self) -> Option<(usize, usize)> {
        match self.kind {
            BasisKind::Annealer { n_phonon_max, n_gravonon } => Some((n_phonon_max, n_gravonon)),
            BasisKind::SingleQubit { .. } => None,
        }
    }

    pub fn single_qubit_shape(&self) -> Option<(usize, usize)> {
        match self.kind {
            BasisKind::SingleQubit { n_kappa, n_lambda } => Some((n_kappa, n_lambda)),
            BasisKind::Annealer { .. } => None,
        }
    }

    /// Direct index arithmetic for annealer bases (no hashing).
    pub fn annealer_index(&self, ising: usize, phonon: usize, gravonon: usize) -> usize {
        let (n_ph, n_g) = self.annealer_shape().expect("annealer basis");
        (ising * (n_ph + 1) + phonon) * (n_g + 1) + gravonon
    }
}

/// Index of a named single-qubit flat configuration.
pub mod flat {
    pub const CLOCKWISE: usize = 0;
    pub const CLOCKWISE_WARP: usize = 1;
    pub const ANTICLOCKWISE: usize = 2;
    pub const ANTICLOCKWISE_WARP: usize = 3;
}

pub fn build_single_qubit_basis(n_kappa: usize, n_lambda: usize) -> Result<Basis> {
    if n_kappa == 0 || n_lambda == 0 {
        return Err(Error::InvalidArgument(format!(
            "mode counts must be positive, got n_kappa={n_kappa}, n_lambda={n_lambda}"
        )));
    }
    let sq = |c, p, k, l| SingleQubitConfiguration::new(c, p, k, l).map(Configuration::SingleQubit);
    let mut configurations = Vec::with_capacity(4 + n_kappa + n_lambda);
    configurations.push(sq(1, 0, 0, 0)?);
    configurations.push(sq(2, 0, 0, 0)?);
    configurations.push(sq(-1, 1, 0, 0)?);
    configurations.push(sq(-2, 1, 0, 0)?);
    for k in 1..=n_kappa {
        configurations.push(sq(2, 0, k, 0)?);
    }
    for l in 1..=n_lambda {
        configurations.push(sq(-2, 1, 0, l)?);
    }
    Ok(Basis::from_configurations(BasisKind::SingleQubit { n_kappa, n_lambda }, configurations))
}

pub fn build_annealer_basis(n_phonon_max: usize, n_gravonon: usize) -> Basis {
    let mut configurations = Vec::with_capacity(N_ISING * (n_phonon_max + 1) * (n_gravonon + 1));
    for ising in IsingConfiguration::all() {
        for phonon_occupation in 0..=n_phonon_max {
            for gravonon_index in 0..=n_gravonon {
                configurations.push(Configuration::Annealer(AnnealerConfiguration {
                    ising,
                    phonon_occupation,
                    gravonon_index,
                }));
            }
        }
    }
    Basis::from_configurations(BasisKind::Annealer { n_phonon_max, n_gravonon }, configurations)
}
