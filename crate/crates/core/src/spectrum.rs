//! Eigenphase computation and ℏ_η sweeps ("butterfly" datasets), plus the
//! periodicity / reflection / collapse symmetry checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{FloquetAssembler, FloquetError, ModelParams};
use crate::linalg::{
    circular_spread, multiset_circular_distance, phase_of, unitary_eigenpairs, CLUSTER_TOL,
};
use crate::su2::{BasisTag, UnitaryOperator};
use crate::{CMat, CVec, HETA_PERIOD};

/// Residual bound every eigenphase set must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-11;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("eigen-solver did not converge: residual {residual:.3e} (dim {dim})")]
    ConvergenceFailure { residual: f64, dim: usize },
    #[error("eigen-solver failed at grid point ℏ_η = {heta}: {source}")]
    GridPointFailure { heta: f64, source: Box<SpectrumError> },
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

/// Parity label attached to an eigenphase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityLabel {
    Even,
    Odd,
    Unresolved,
}

impl std::fmt::Display for ParityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParityLabel::Even => write!(f, "even"),
            ParityLabel::Odd => write!(f, "odd"),
            ParityLabel::Unresolved => write!(f, "unresolved"),
        }
    }
}

/// Sorted eigenphases of one unitary, with parity labels, optional
/// eigenvectors (columns aligned with `phases`), and the solver residual.
#[derive(Debug, Clone)]
pub struct EigenphaseSet {
    pub phases: Vec<f64>,
    pub parities: Vec<ParityLabel>,
    pub vectors: Option<CMat>,
    pub residual: f64,
}

impl EigenphaseSet {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Phases restricted to one parity sector.
    pub fn sector_phases(&self, label: ParityLabel) -> Vec<f64> {
        self.phases
            .iter()
            .zip(&self.parities)
            .filter(|(_, p)| **p == label)
            .map(|(v, _)| *v)
            .collect()
    }
}

fn eigenphase_set_from_matrix(
    matrix: &CMat,
    label: ParityLabel,
    want_vectors: bool,
) -> Result<EigenphaseSet, SpectrumError> {
    let eig = unitary_eigenpairs(matrix, CLUSTER_TOL);
    if eig.residual > RESIDUAL_TOL {
        return Err(SpectrumError::ConvergenceFailure { residual: eig.residual, dim: matrix.nrows() });
    }
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let phases_raw: Vec<f64> = eig.lambdas.iter().map(|&l| phase_of(l)).collect();
    order.sort_by(|&a, &b| phases_raw[a].total_cmp(&phases_raw[b]));
    let phases: Vec<f64> = order.iter().map(|&i| phases_raw[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut v = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            v.set_column(dst, &eig.vectors.column(src));
        }
        v
    });
    Ok(EigenphaseSet { phases, parities: vec![label; n], vectors, residual: eig.residual })
}

/// Eigen-decomposition of a unitary operator. Parity labels follow the
/// operator's basis tag (full-basis operators are labeled unresolved).
pub fn eigenphases(u: &UnitaryOperator, want_vectors: bool) -> Result<EigenphaseSet, SpectrumError> {
    let label = match u.basis_tag {
        BasisTag::Full { .. } => ParityLabel::Unresolved,
        BasisTag::EvenBlock { .. } => ParityLabel::Even,
        BasisTag::OddBlock { .. } => ParityLabel::Odd,
    };
    eigenphase_set_from_matrix(&u.matrix, label, want_vectors)
}

/// Merge per-sector sets into one sorted set. Block vectors are lifted back
/// to the full |m⟩ basis when present.
fn merge_sector_sets(
    assembler: &FloquetAssembler,
    even: EigenphaseSet,
    odd: EigenphaseSet,
) -> EigenphaseSet {
    let d = assembler.decomposition().expect("merge requires parity decomposition");
    let n = d.dim();
    let total = even.len() + odd.len();
    let mut entries: Vec<(f64, ParityLabel, Option<CVec>)> = Vec::with_capacity(total);
    let lift = |set: &EigenphaseSet, even_block: bool| -> Vec<Option<CVec>> {
        match &set.vectors {
            None => vec![None; set.len()],
            Some(v) => (0..set.len())
                .map(|k| {
                    let col = CVec::from_fn(v.nrows(), |i, _| v[(i, k)]);
                    Some(if even_block { d.embed_even(&col) } else { d.embed_odd(&col) })
                })
                .collect(),
        }
    };
    for (i, vec) in lift(&even, true).into_iter().enumerate() {
        entries.push((even.phases[i], ParityLabel::Even, vec));
    }
    for (i, vec) in lift(&odd, false).into_iter().enumerate() {
        entries.push((odd.phases[i], ParityLabel::Odd, vec));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vectors = entries.first().and_then(|e| e.2.as_ref()).map(|_| {
        let mut m = CMat::zeros(n, total);
        for (k, e) in entries.iter().enumerate() {
            m.set_column(k, e.2.as_ref().unwrap());
        }
        m
    });
    EigenphaseSet {
        phases: entries.iter().map(|e| e.0).collect(),
        parities: entries.iter().map(|e| e.1).collect(),
        vectors,
        residual: even.residual.max(odd.residual),
    }
}

/// Eigenphases of the Floquet operator at one ℏ_η, resolved into parity
/// sectors for variant XX (diagonalizing each block separately) and
/// unresolved for variant XY.
pub fn floquet_eigenphases(
    assembler: &FloquetAssembler,
    heta: f64,
    want_vectors: bool,
) -> Result<EigenphaseSet, SpectrumError> {
    match assembler.block_operators_at(heta) {
        Some((be, bo)) => {
            let even = eigenphases(&be, want_vectors)?;
            let odd = eigenphases(&bo, want_vectors)?;
            Ok(merge_sector_sets(assembler, even, odd))
        }
        None => eigenphases(&assembler.operator_at(heta), want_vectors),
    }
}

/// Dataset provenance: a stable hash of the generating parameters plus the
/// engine version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub param_hash: String,
    pub engine_version: String,
}

/// Eigenphase spectra tabulated over a grid of ℏ_η values.
#[derive(Debug, Clone)]
pub struct ButterflyDataset {
    pub params: ModelParams,
    pub grid: Vec<f64>,
    pub columns: Vec<EigenphaseSet>,
    pub provenance: Provenance,
}

/// Uniform N-point grid over [0, 4π) (endpoint excluded: ℏ_η is 4π-periodic).
pub fn default_grid(steps: usize) -> Vec<f64> {
    let h = HETA_PERIOD / steps as f64;
    (0..steps).map(|k| k as f64 * h).collect()
}

/// Fold an ℏ_η value into the canonical domain [0, 4π).
pub fn fold_heta(heta: f64) -> f64 {
    let folded = heta.rem_euclid(HETA_PERIOD);
    if folded == HETA_PERIOD {
        0.0
    } else {
        folded
    }
}

/// Sweep the grid and diagonalize at every point (in parallel; output order
/// and content are deterministic). Grid values outside [0, 4π) are folded,
/// with a warning, which the 4π periodicity justifies.
pub fn butterfly_scan(
    params: &ModelParams,
    grid: &[f64],
    want_vectors: bool,
) -> Result<ButterflyDataset, SpectrumError> {
    let assembler = FloquetAssembler::new(params)?;
    let folded: Vec<f64> = grid
        .iter()
        .map(|&h| {
            if !(0.0..HETA_PERIOD).contains(&h) {
                log::warn!("folding ℏ_η = {h} into [0, 4π)");
                fold_heta(h)
            } else {
                h
            }
        })
        .collect();
    let columns: Vec<Result<EigenphaseSet, SpectrumError>> = folded
        .par_iter()
        .map(|&heta| {
            floquet_eigenphases(&assembler, heta, want_vectors)
                .map_err(|e| SpectrumError::GridPointFailure { heta, source: Box::new(e) })
        })
        .collect();
    let mut cols = Vec::with_capacity(columns.len());
    for c in columns {
        cols.push(c?);
    }
    Ok(ButterflyDataset {
        params: params.clone(),
        grid: folded,
        columns: cols,
        provenance: Provenance {
            param_hash: crate::io::param_hash(params),
            engine_version: crate::ENGINE_VERSION.to_string(),
        },
    })
}

/// Symmetry verified by [`symmetry_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryMode {
    /// Spectrum at ℏ_η equals spectrum at ℏ_η + 4π.
    Periodicity,
    /// Spectrum at ℏ_η equals spectrum at 4π − ℏ_η.
    Reflection,
    /// Spectrum collapses to a point at ℏ_η = 2π iff J is an integer.
    Collapse,
}

#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub mode: SymmetryMode,
    pub passed: bool,
    /// Largest multiset spectral distance over the sampled pairs
    /// (for collapse: the spectral spread at 2π).
    pub max_deviation: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Multiset distance tolerance for the periodicity/reflection checks.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Collapse thresholds: integer J must be below the lower bound,
/// half-integer J above the upper one.
pub const COLLAPSE_SPREAD_MAX: f64 = 1e-10;
pub const NO_COLLAPSE_SPREAD_MIN: f64 = 0.1;

/// Check one of the spectral symmetries at the supplied ℏ_η samples
/// (ignored for collapse, which is pinned at 2π).
pub fn symmetry_check(
    params: &ModelParams,
    mode: SymmetryMode,
    hetas: &[f64],
) -> Result<SymmetryReport, SpectrumError> {
    let assembler = FloquetAssembler::new(params)?;
    let spectrum = |heta: f64| -> Result<Vec<f64>, SpectrumError> {
        Ok(floquet_eigenphases(&assembler, heta, false)?.phases)
    };
    let mut samples = Vec::new();
    let mut max_dev = 0.0f64;
    match mode {
        SymmetryMode::Periodicity => {
            for &h in hetas {
                let d = multiset_circular_distance(&spectrum(h)?, &spectrum(h + HETA_PERIOD)?);
                samples.push((h, d));
                max_dev = max_dev.max(d);
            }
            Ok(SymmetryReport { mode, passed: max_dev <= SYMMETRY_TOL, max_deviation: max_dev, samples })
        }
        SymmetryMode::Reflection => {
            for &h in hetas {
                let d = multiset_circular_distance(&spectrum(h)?, &spectrum(HETA_PERIOD - h)?);
                samples.push((h, d));
                max_dev = max_dev.max(d);
            }
            Ok(SymmetryReport { mode, passed: max_dev <= SYMMETRY_TOL, max_deviation: max_dev, samples })
        }
        SymmetryMode::Collapse => {
            let at = std::f64::consts::TAU;
            let spread = circular_spread(&spectrum(at)?);
            samples.push((at, spread));
            let passed = if params.two_j % 2 == 0 {
                spread <= COLLAPSE_SPREAD_MAX
            } else {
                spread >= NO_COLLAPSE_SPREAD_MIN
            };
            Ok(SymmetryReport { mode, passed, max_deviation: spread, samples })
        }
    }
}
