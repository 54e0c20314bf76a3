//! Composition of the driven-SU(2) Floquet operators.
//!
//! The base operator is the four-factor product (applied right to left)
//!
//! ```text
//!   F = e^{+iηJ_z²/(2J)} · e^{−iαJ_x} · e^{−iηJ_z²/(2J)} · e^{−iαJ_x}
//! ```
//!
//! with η/(2J) = ℏ_η/2. Variant XY replaces the first-applied (rightmost)
//! rotation with e^{−iαJ_y}. An optional torsion prefactor
//! diag(e^{i2πm²ν/μ}) (rational) or diag(e^{−iβm²}) (angle) extends F to
//! the F^(ν/μ) family and to the delayed-kick realization F′.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::hermitian_eigen_sorted;
use crate::su2::{
    jplus_matrix, jx_eigenbasis, parity_decompose, rotation_from_real_eigenbasis, rotation_y,
    BasisTag, ParityDecomposition, SpinBasis, TorsionSign, UnitaryOperator,
};
use crate::{CMat, CVec};

const TAU: f64 = std::f64::consts::TAU;

/// Largest tolerated off-block magnitude when splitting into parity blocks.
pub const PARITY_LEAKAGE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("prefactor ν/μ = {nu}/{mu} must be coprime with μ ≥ 1")]
    NonCoprimePrefactor { nu: i64, mu: i64 },
    #[error("rational prefactor requires integer J (got 2J = {two_j})")]
    RationalNeedsIntegerJ { two_j: u32 },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("operator does not preserve parity (off-block leakage {leakage:.3e})")]
    ParityViolation { leakage: f64 },
}

/// Which rotation closes the kick sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Both rotations about x; commutes with parity.
    Xx,
    /// First-applied rotation about y; parity is broken.
    Xy,
}

/// Torsion prefactor multiplying F from the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prefactor {
    None,
    /// diag(e^{i2πm²ν/μ}); integer J only. The phase is reduced with exact
    /// integer arithmetic (m²ν mod μ) before any trigonometry.
    Rational { nu: i64, mu: i64 },
    /// diag(e^{−iβm²}), as produced by the delayed-kick realization with
    /// β = 4g₀τ/ξ.
    Angle { beta: f64 },
}

/// Full specification of one Floquet system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// 2J (so half-integer J is exact).
    pub two_j: u32,
    /// α/ℏ_eff = αJ, the scale-invariant rotation strength.
    pub alpha_scaled: f64,
    /// Effective Planck constant ℏ_η = η/J. Canonical domain [0, 4π);
    /// builders accept any real value.
    pub heta: f64,
    pub variant: Variant,
    pub prefactor: Prefactor,
}

impl ModelParams {
    pub fn new(two_j: u32, alpha_scaled: f64, heta: f64) -> Self {
        Self { two_j, alpha_scaled, heta, variant: Variant::Xx, prefactor: Prefactor::None }
    }

    pub fn basis(&self) -> SpinBasis {
        SpinBasis::new(self.two_j)
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Rotation angle α = alpha_scaled / J.
    pub fn alpha(&self) -> f64 {
        self.alpha_scaled / self.j()
    }

    pub fn with_heta(&self, heta: f64) -> Self {
        Self { heta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), FloquetError> {
        if self.two_j == 0 {
            return Err(FloquetError::InvalidParameter("J must be positive (2J ≥ 1)".into()));
        }
        if !self.alpha_scaled.is_finite() || self.alpha_scaled < 0.0 {
            return Err(FloquetError::InvalidParameter(format!(
                "alpha_scaled must be finite and ≥ 0, got {}",
                self.alpha_scaled
            )));
        }
        if !self.heta.is_finite() {
            return Err(FloquetError::InvalidParameter("ℏ_η must be finite".into()));
        }
        match self.prefactor {
            Prefactor::None => Ok(()),
            Prefactor::Rational { nu, mu } => {
                if mu < 1 || gcd(nu.unsigned_abs(), mu as u64) != 1 {
                    return Err(FloquetError::NonCoprimePrefactor { nu, mu });
                }
                if self.two_j % 2 != 0 {
                    return Err(FloquetError::RationalNeedsIntegerJ { two_j: self.two_j });
                }
                Ok(())
            }
            Prefactor::Angle { beta } => {
                if beta.is_finite() {
                    Ok(())
                } else {
                    Err(FloquetError::InvalidParameter("prefactor angle must be finite".into()))
                }
            }
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Prefactor phase for one m value (as a unit complex number).
fn prefactor_entry(prefactor: &Prefactor, m: f64) -> Complex64 {
    match *prefactor {
        Prefactor::None => Complex64::new(1.0, 0.0),
        Prefactor::Rational { nu, mu } => {
            // integer J, so m is an exact integer
            let mi = m.round() as i128;
            let r = (mi * mi * nu as i128).rem_euclid(mu as i128);
            Complex64::from_polar(1.0, TAU * r as f64 / mu as f64)
        }
        Prefactor::Angle { beta } => Complex64::from_polar(1.0, -beta * m * m),
    }
}

/// Reusable assembly context: the rotation factors (the expensive part)
/// are built once, after which operators at any ℏ_η cost one or two
/// diagonal scalings and matrix products. Shareable across threads.
pub struct FloquetAssembler {
    params: ModelParams,
    basis: SpinBasis,
    rot_second: CMat,
    rot_first: CMat,
    pref: Vec<Complex64>,
    parity: Option<ParityAssembly>,
}

struct ParityAssembly {
    decomposition: ParityDecomposition,
    rot_even: CMat,
    rot_odd: CMat,
    /// m² per block index.
    m2_even: Vec<f64>,
    m2_odd: Vec<f64>,
    pref_even: Vec<Complex64>,
    pref_odd: Vec<Complex64>,
}

impl FloquetAssembler {
    pub fn new(params: &ModelParams) -> Result<Self, FloquetError> {
        params.validate()?;
        let basis = params.basis();
        let alpha = params.alpha();
        let jx_vecs = jx_eigenbasis(basis);
        let rot_second = rotation_from_real_eigenbasis(basis, &jx_vecs, alpha);
        let rot_first = match params.variant {
            Variant::Xx => rot_second.clone(),
            Variant::Xy => rotation_y(basis, alpha).matrix,
        };
        let pref: Vec<Complex64> =
            basis.m_values().iter().map(|&m| prefactor_entry(&params.prefactor, m)).collect();

        // Parity-reduced assembly is available only when every factor
        // commutes with parity (variant XX).
        let parity = match params.variant {
            Variant::Xy => None,
            Variant::Xx => {
                let d = parity_decompose(basis);
                let w = d.conjugate(&rot_second);
                debug_assert!(d.block_leakage(&w) < 1e-13);
                let abs_m = |block: BasisTag| -> Vec<f64> {
                    block_abs_m(basis, block)
                };
                let m_even = abs_m(BasisTag::EvenBlock { two_j: basis.two_j() });
                let m_odd = abs_m(BasisTag::OddBlock { two_j: basis.two_j() });
                Some(ParityAssembly {
                    rot_even: d.even_block_of(&w),
                    rot_odd: d.odd_block_of(&w),
                    m2_even: m_even.iter().map(|m| m * m).collect(),
                    m2_odd: m_odd.iter().map(|m| m * m).collect(),
                    pref_even: m_even.iter().map(|&m| prefactor_entry(&params.prefactor, m)).collect(),
                    pref_odd: m_odd.iter().map(|&m| prefactor_entry(&params.prefactor, m)).collect(),
                    decomposition: d,
                })
            }
        };

        Ok(Self { params: params.clone(), basis, rot_second, rot_first, pref, parity })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> SpinBasis {
        self.basis
    }

    pub fn decomposition(&self) -> Option<&ParityDecomposition> {
        self.parity.as_ref().map(|p| &p.decomposition)
    }

    /// Full-basis Floquet operator at the given ℏ_η.
    /// Factors are accumulated right to left, the rightmost applied first.
    pub fn operator_at(&self, heta: f64) -> UnitaryOperator {
        let n = self.basis.dim();
        let m2: Vec<f64> = self.basis.m_values().iter().map(|m| m * m).collect();
        let mut acc = self.rot_first.clone();
        scale_rows(&mut acc, &torsion_col(&m2, heta, TorsionSign::Minus));
        let mut acc = &self.rot_second * acc;
        let plus = torsion_col(&m2, heta, TorsionSign::Plus);
        for i in 0..n {
            let s = plus[i] * self.pref[i];
            for j in 0..n {
                acc[(i, j)] *= s;
            }
        }
        UnitaryOperator::new(BasisTag::Full { two_j: self.basis.two_j() }, acc)
    }

    /// First two factors only: the standard kicked-top operator
    /// e^{+iηJ_z²/(2J)} e^{−iαJ_x}. Prefactor and variant do not enter.
    pub fn kicked_top_at(&self, heta: f64) -> UnitaryOperator {
        let m2: Vec<f64> = self.basis.m_values().iter().map(|m| m * m).collect();
        let mut acc = self.rot_second.clone();
        scale_rows(&mut acc, &torsion_col(&m2, heta, TorsionSign::Plus));
        UnitaryOperator::new(BasisTag::Full { two_j: self.basis.two_j() }, acc)
    }

    /// Parity blocks of F assembled directly in the parity basis
    /// (variant XX only).
    pub fn block_operators_at(&self, heta: f64) -> Option<(UnitaryOperator, UnitaryOperator)> {
        let p = self.parity.as_ref()?;
        let two_j = self.basis.two_j();
        let even = assemble_block(&p.rot_even, &p.m2_even, &p.pref_even, heta);
        let odd = assemble_block(&p.rot_odd, &p.m2_odd, &p.pref_odd, heta);
        Some((
            UnitaryOperator::new(BasisTag::EvenBlock { two_j }, even),
            UnitaryOperator::new(BasisTag::OddBlock { two_j }, odd),
        ))
    }

    /// Parity blocks of the kicked-top operator (variant XX only).
    pub fn kicked_top_blocks_at(&self, heta: f64) -> Option<(UnitaryOperator, UnitaryOperator)> {
        let p = self.parity.as_ref()?;
        let two_j = self.basis.two_j();
        let mut even = p.rot_even.clone();
        scale_rows(&mut even, &torsion_col(&p.m2_even, heta, TorsionSign::Plus));
        let mut odd = p.rot_odd.clone();
        scale_rows(&mut odd, &torsion_col(&p.m2_odd, heta, TorsionSign::Plus));
        Some((
            UnitaryOperator::new(BasisTag::EvenBlock { two_j }, even),
            UnitaryOperator::new(BasisTag::OddBlock { two_j }, odd),
        ))
    }
}

/// |m| values spanned by a parity block, ascending (m = 0 first for the
/// integer-J even block).
pub fn block_abs_m(basis: SpinBasis, block: BasisTag) -> Vec<f64> {
    let start = match block {
        BasisTag::EvenBlock { .. } if basis.is_integer_j() => 0,
        _ => 1,
    };
    let lo = if basis.is_integer_j() { start as f64 } else { 0.5 };
    let mut out = Vec::with_capacity(block.dim());
    let mut m = lo;
    while out.len() < block.dim() {
        out.push(m);
        m += 1.0;
    }
    out
}

fn torsion_col(m2: &[f64], heta: f64, sign: TorsionSign) -> Vec<Complex64> {
    let s = sign.factor();
    m2.iter().map(|&mm| Complex64::from_polar(1.0, s * 0.5 * heta * mm)).collect()
}

fn scale_rows(m: &mut CMat, d: &[Complex64]) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= d[i];
        }
    }
}

fn assemble_block(rot: &CMat, m2: &[f64], pref: &[Complex64], heta: f64) -> CMat {
    let mut acc = rot.clone();
    scale_rows(&mut acc, &torsion_col(m2, heta, TorsionSign::Minus));
    let mut acc = rot * acc;
    let plus = torsion_col(m2, heta, TorsionSign::Plus);
    for i in 0..acc.nrows() {
        let s = plus[i] * pref[i];
        for j in 0..acc.ncols() {
            acc[(i, j)] *= s;
        }
    }
    acc
}

/// Build the Floquet operator for the given parameters.
pub fn build_floquet(params: &ModelParams) -> Result<UnitaryOperator, FloquetError> {
    let assembler = FloquetAssembler::new(params)?;
    let f = assembler.operator_at(params.heta);
    debug_assert!(f.unitarity_defect() < 1e-11);
    Ok(f)
}

/// Build the kicked-top control operator (first two factors of F).
pub fn build_kicked_top(params: &ModelParams) -> Result<UnitaryOperator, FloquetError> {
    let assembler = FloquetAssembler::new(params)?;
    Ok(assembler.kicked_top_at(params.heta))
}

/// Right-hand side of the phase-cancellation identity: the product of the
/// first three factors of F equals exp(−iαG) with the Hermitian generator
///
/// ```text
///   G = (J_x/2 + iJ_y/2) e^{i ℏ_η (2J_z+1)/2} + h.c.
/// ```
///
/// built as (J_+/2) times the ladder-phase diagonal applied on the right.
pub fn bch_rhs(params: &ModelParams) -> Result<UnitaryOperator, FloquetError> {
    params.validate()?;
    let basis = params.basis();
    let n = basis.dim();
    let jp = jplus_matrix(basis);
    let mut g = CMat::zeros(n, n);
    for i in 0..n - 1 {
        // (J_+/2 · D)_{i+1,i} with D_mm = e^{iℏ_η(2m+1)/2}
        let m = basis.m(i);
        let d = Complex64::from_polar(1.0, params.heta * (2.0 * m + 1.0) / 2.0);
        let v = 0.5 * jp[(i + 1, i)] * d;
        g[(i + 1, i)] = v;
        g[(i, i + 1)] = v.conj();
    }
    let (vals, vecs) = hermitian_eigen_sorted(&g);
    let alpha = params.alpha();
    let mut scaled = vecs.clone();
    for (k, w) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -alpha * w);
        for i in 0..n {
            scaled[(i, k)] *= phase;
        }
    }
    let m = scaled * vecs.adjoint();
    Ok(UnitaryOperator::new(BasisTag::Full { two_j: basis.two_j() }, m))
}

/// Product of the first three factors of F (the left-hand side of the
/// phase-cancellation identity).
pub fn floquet_first_three(params: &ModelParams) -> Result<UnitaryOperator, FloquetError> {
    params.validate()?;
    let basis = params.basis();
    let m2: Vec<f64> = basis.m_values().iter().map(|m| m * m).collect();
    let jx_vecs = jx_eigenbasis(basis);
    let rot = rotation_from_real_eigenbasis(basis, &jx_vecs, params.alpha());
    let minus = torsion_col(&m2, params.heta, TorsionSign::Minus);
    let plus = torsion_col(&m2, params.heta, TorsionSign::Plus);
    let n = basis.dim();
    let mut acc = CMat::from_diagonal(&CVec::from_vec(minus));
    acc = rot * acc;
    for i in 0..n {
        for j in 0..n {
            acc[(i, j)] *= plus[i];
        }
    }
    Ok(UnitaryOperator::new(BasisTag::Full { two_j: basis.two_j() }, acc))
}

/// Split a full-basis operator into its parity blocks. Fails with
/// [`FloquetError::ParityViolation`] when the operator leaks between the
/// blocks (variant XY, or a construction bug).
pub fn parity_blocks(
    u: &UnitaryOperator,
    d: &ParityDecomposition,
) -> Result<(UnitaryOperator, UnitaryOperator), FloquetError> {
    let two_j = match u.basis_tag {
        BasisTag::Full { two_j } => two_j,
        _ => {
            return Err(FloquetError::InvalidParameter(
                "parity_blocks needs a full-basis operator".into(),
            ))
        }
    };
    assert_eq!(two_j, d.two_j());
    let w = d.conjugate(&u.matrix);
    let leakage = d.block_leakage(&w);
    if leakage > PARITY_LEAKAGE_TOL {
        return Err(FloquetError::ParityViolation { leakage });
    }
    Ok((
        UnitaryOperator::new(BasisTag::EvenBlock { two_j }, d.even_block_of(&w)),
        UnitaryOperator::new(BasisTag::OddBlock { two_j }, d.odd_block_of(&w)),
    ))
}

/// Result of converting a physical kick realization to model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConversion {
    pub params: ModelParams,
    /// True when β = 4g₀τ/ξ is an integer multiple of 2π (integer J) or
    /// 8π (half-integer J), so the prefactor is unity and F′ reduces to F.
    pub reduces_to_f: bool,
}

/// Map the delayed-kick realization (kick strength g₀, period τ, delay ξ)
/// to model parameters: ℏ_η = 8g₀ with prefactor angle β = 4g₀τ/ξ.
pub fn physical_to_model(g0: f64, tau: f64, xi: f64, two_j: u32, alpha: f64) -> PhysicalConversion {
    assert!(tau > 0.0 && xi > 0.0, "τ and ξ must be positive");
    let beta = 4.0 * g0 * tau / xi;
    let j = two_j as f64 / 2.0;
    let params = ModelParams {
        two_j,
        alpha_scaled: alpha * j,
        heta: 8.0 * g0,
        variant: Variant::Xx,
        prefactor: Prefactor::Angle { beta },
    };
    let period = if two_j % 2 == 0 { TAU } else { 4.0 * TAU };
    let ratio = beta / period;
    let reduces_to_f = (ratio - ratio.round()).abs() <= 1e-9;
    PhysicalConversion { params, reduces_to_f }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::max_entry_distance;
    use std::f64::consts::PI;

    /// Taylor-series matrix exponential with scaling and squaring;
    /// independent of the spectral route used by the builders.
    fn expm_series(a: &CMat) -> CMat {
        let n = a.nrows();
        let norm = a.iter().map(|x| x.norm()).fold(0.0, f64::max) * n as f64;
        let s = norm.log2().ceil().max(0.0) as u32 + 1;
        let scaled = a / Complex64::new(2f64.powi(s as i32), 0.0);
        let mut term = CMat::identity(n, n);
        let mut sum = CMat::identity(n, n);
        for k in 1..30 {
            term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        let mut out = sum;
        for _ in 0..s {
            out = &out * &out;
        }
        out
    }

    fn params(two_j: u32, alpha_scaled: f64, heta: f64) -> ModelParams {
        ModelParams::new(two_j, alpha_scaled, heta)
    }

    #[test]
    fn alpha_zero_gives_identity() {
        let f = build_floquet(&params(8, 0.0, 1.3)).unwrap();
        assert!(max_entry_distance(&f.matrix, &CMat::identity(9, 9)) < 1e-13);
    }

    #[test]
    fn collapse_at_two_pi_integer_j() {
        let f = build_floquet(&params(20, 1.0, 2.0 * PI)).unwrap();
        assert!(max_entry_distance(&f.matrix, &CMat::identity(21, 21)) < 1e-12);
    }

    #[test]
    fn rational_one_over_one_matches_none() {
        let base = params(10, 1.0, 2.3);
        let with_pref = ModelParams { prefactor: Prefactor::Rational { nu: 1, mu: 1 }, ..base.clone() };
        let a = build_floquet(&base).unwrap();
        let b = build_floquet(&with_pref).unwrap();
        assert!(max_entry_distance(&a.matrix, &b.matrix) < 1e-15);
    }

    #[test]
    fn non_coprime_prefactor_rejected() {
        let p = ModelParams { prefactor: Prefactor::Rational { nu: 2, mu: 4 }, ..params(4, 1.0, 0.5) };
        assert!(matches!(p.validate(), Err(FloquetError::NonCoprimePrefactor { .. })));
    }

    #[test]
    fn rational_prefactor_rejected_for_half_integer_j() {
        let p = ModelParams { prefactor: Prefactor::Rational { nu: 1, mu: 2 }, ..params(5, 1.0, 0.5) };
        assert!(matches!(p.validate(), Err(FloquetError::RationalNeedsIntegerJ { .. })));
    }

    #[test]
    fn kicked_top_limits() {
        // α = 0: pure torsion diagonal.
        let kt = build_kicked_top(&params(6, 0.0, 1.1)).unwrap();
        let basis = SpinBasis::new(6);
        for (i, &m) in basis.m_values().iter().enumerate() {
            let want = Complex64::from_polar(1.0, 0.5 * 1.1 * m * m);
            assert!((kt.matrix[(i, i)] - want).norm() < 1e-13);
        }
        // ℏ_η = 0: pure rotation.
        let kt = build_kicked_top(&params(6, 1.2, 0.0)).unwrap();
        let rot = crate::su2::rotation_x(basis, 1.2 / 3.0);
        assert!(max_entry_distance(&kt.matrix, &rot.matrix) < 1e-13);
    }

    #[test]
    fn kicked_top_matches_series_exponential_oracle() {
        // J=5, αJ=1, ℏ_η=1: compare against scaling-and-squaring Taylor
        // exponentials of the two generators.
        let p = params(10, 1.0, 1.0);
        let basis = p.basis();
        let kt = build_kicked_top(&p).unwrap();
        let n = basis.dim();
        let mut tors_gen = CMat::zeros(n, n);
        for (i, &m) in basis.m_values().iter().enumerate() {
            tors_gen[(i, i)] = Complex64::new(0.0, 0.5 * p.heta * m * m);
        }
        let jx = crate::su2::jx_matrix(basis);
        let rot_gen = CMat::from_fn(n, n, |i, j| Complex64::new(0.0, -p.alpha() * jx[(i, j)]));
        let oracle = expm_series(&tors_gen) * expm_series(&rot_gen);
        assert!(max_entry_distance(&kt.matrix, &oracle) < 1e-12);
    }

    #[test]
    fn bch_identity_small_j_random_draws() {
        let mut state = 0x1234_5678_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state as f64 / u64::MAX as f64
        };
        for two_j in [2, 4, 6, 9, 12] {
            for _ in 0..4 {
                let alpha_scaled = 4.0 * next();
                let heta = 4.0 * TAU * next();
                let p = params(two_j, alpha_scaled, heta);
                let lhs = floquet_first_three(&p).unwrap();
                let rhs = bch_rhs(&p).unwrap();
                let dist = max_entry_distance(&lhs.matrix, &rhs.matrix);
                assert!(dist < 1e-11, "2J={two_j}: {dist}");
            }
        }
    }

    #[test]
    fn bch_rhs_limits() {
        let p = params(7, 0.0, 1.5);
        let rhs = bch_rhs(&p).unwrap();
        assert!(max_entry_distance(&rhs.matrix, &CMat::identity(8, 8)) < 1e-13);
        let p = params(7, 1.0, 0.0);
        let rhs = bch_rhs(&p).unwrap();
        let rot = crate::su2::rotation_x(p.basis(), p.alpha());
        assert!(max_entry_distance(&rhs.matrix, &rot.matrix) < 1e-12);
    }

    #[test]
    fn parity_blocks_xx_and_identity() {
        let p = params(10, 1.0, 1.7);
        let f = build_floquet(&p).unwrap();
        let d = parity_decompose(p.basis());
        let (even, odd) = parity_blocks(&f, &d).unwrap();
        assert_eq!(even.dim(), 6);
        assert_eq!(odd.dim(), 5);
        assert!(even.unitarity_defect() < 1e-12);
        assert!(odd.unitarity_defect() < 1e-12);

        let id = UnitaryOperator::identity(BasisTag::Full { two_j: 10 });
        let (e, o) = parity_blocks(&id, &d).unwrap();
        assert!(max_entry_distance(&e.matrix, &CMat::identity(6, 6)) < 1e-15);
        assert!(max_entry_distance(&o.matrix, &CMat::identity(5, 5)) < 1e-15);
    }

    #[test]
    fn parity_blocks_rejects_xy() {
        let p = ModelParams { variant: Variant::Xy, ..params(10, 1.0, 1.7) };
        let f = build_floquet(&p).unwrap();
        let d = parity_decompose(p.basis());
        match parity_blocks(&f, &d) {
            Err(FloquetError::ParityViolation { leakage }) => {
                assert!(leakage > 1e-3, "XY leakage should be macroscopic, got {leakage}");
            }
            other => panic!("expected ParityViolation, got {other:?}"),
        }
    }

    #[test]
    fn block_assembly_matches_full_conjugation() {
        let p = params(9, 1.3, 2.9);
        let assembler = FloquetAssembler::new(&p).unwrap();
        let f = assembler.operator_at(p.heta);
        let d = parity_decompose(p.basis());
        let (even, odd) = parity_blocks(&f, &d).unwrap();
        let (be, bo) = assembler.block_operators_at(p.heta).unwrap();
        assert!(max_entry_distance(&even.matrix, &be.matrix) < 1e-13);
        assert!(max_entry_distance(&odd.matrix, &bo.matrix) < 1e-13);
    }

    #[test]
    fn four_pi_periodicity_of_operator() {
        for two_j in [8, 9] {
            let p = params(two_j, 1.0, 0.7);
            let a = build_floquet(&p).unwrap();
            let b = build_floquet(&p.with_heta(0.7 + 4.0 * PI)).unwrap();
            let dist = max_entry_distance(&a.matrix, &b.matrix);
            assert!(dist < 1e-11, "2J={two_j}: {dist}");
        }
    }

    #[test]
    fn xx_commutes_with_parity_xy_does_not() {
        let n = 11usize;
        let p = params(10, 1.0, 2.2);
        let f = build_floquet(&p).unwrap();
        let commutator_norm = |m: &CMat| -> f64 {
            let mut worst = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    // (PFP − F)_{ij} with P the index reversal
                    let v = m[(n - 1 - i, n - 1 - j)] - m[(i, j)];
                    worst = worst.max(v.norm());
                }
            }
            worst
        };
        assert!(commutator_norm(&f.matrix) < 1e-12);
        let pxy = ModelParams { variant: Variant::Xy, ..p };
        let fxy = build_floquet(&pxy).unwrap();
        assert!(commutator_norm(&fxy.matrix) > 1e-3);
    }

    #[test]
    fn physical_conversion_examples() {
        // g₀ = π/4 → ℏ_η = 2π.
        let conv = physical_to_model(PI / 4.0, 1.0, 1.0, 8, 0.25);
        assert!((conv.params.heta - 2.0 * PI).abs() < 1e-12);

        // 4g₀τ/ξ = 2π at integer J: reduction holds and F′ = F numerically.
        let g0 = 0.4f64;
        let xi = 1.0;
        let tau = 2.0 * PI * xi / (4.0 * g0);
        let conv = physical_to_model(g0, tau, xi, 8, 0.25);
        assert!(conv.reduces_to_f);
        let fprime = build_floquet(&conv.params).unwrap();
        let plain = ModelParams { prefactor: Prefactor::None, ..conv.params.clone() };
        let f = build_floquet(&plain).unwrap();
        assert!(max_entry_distance(&fprime.matrix, &f.matrix) < 1e-11);

        // Same β at half-integer J: 2π is not enough (needs 8π).
        let conv_half = physical_to_model(g0, tau, xi, 9, 0.25);
        assert!(!conv_half.reduces_to_f);

        // g₀ = 0 → ℏ_η = 0, β = 0.
        let conv = physical_to_model(0.0, 1.0, 1.0, 8, 0.25);
        assert!(conv.params.heta == 0.0);
        assert!(matches!(conv.params.prefactor, Prefactor::Angle { beta } if beta == 0.0));
        assert!(conv.reduces_to_f);
    }
}
