//! Angular-momentum operators, rotation and torsion factors, parity
//! decomposition, and spin coherent states in the |m⟩ basis.
//!
//! Convention used everywhere in this crate: basis states are the J_z
//! eigenvectors |m⟩ ordered by ascending m = −J, −J+1, …, +J. J may be
//! integer or half-integer.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::{CMat, CVec, RMat};

/// Spin-J basis descriptor. Stored as 2J so half-integer J is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinBasis {
    two_j: u32,
}

impl SpinBasis {
    /// Basis for the given 2J. Requires 2J ≥ 1 (dimension ≥ 2).
    pub fn new(two_j: u32) -> Self {
        assert!(two_j >= 1, "spin basis needs dimension ≥ 2 (2J ≥ 1)");
        Self { two_j }
    }

    /// Parse J given as a float; must be a positive multiple of 1/2.
    pub fn from_j(j: f64) -> Option<Self> {
        let two_j = (2.0 * j).round();
        if !(two_j >= 1.0 && two_j <= u32::MAX as f64) || (2.0 * j - two_j).abs() > 1e-9 {
            return None;
        }
        Some(Self { two_j: two_j as u32 })
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Basis dimension 2J+1.
    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn is_integer_j(&self) -> bool {
        self.two_j % 2 == 0
    }

    /// m value of basis index `idx` (ascending order).
    pub fn m(&self, idx: usize) -> f64 {
        idx as f64 - self.j()
    }

    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m(i)).collect()
    }
}

/// Which space a matrix lives in: the full |m⟩ basis or one parity block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Full { two_j: u32 },
    EvenBlock { two_j: u32 },
    OddBlock { two_j: u32 },
}

impl BasisTag {
    pub fn two_j(&self) -> u32 {
        match *self {
            BasisTag::Full { two_j } | BasisTag::EvenBlock { two_j } | BasisTag::OddBlock { two_j } => two_j,
        }
    }

    pub fn dim(&self) -> usize {
        let two_j = self.two_j() as usize;
        match self {
            BasisTag::Full { .. } => two_j + 1,
            // Integer J: J+1 even states (m=0 plus symmetric pairs), J odd.
            // Half-integer J: (2J+1)/2 states of each parity.
            BasisTag::EvenBlock { .. } => {
                if two_j % 2 == 0 {
                    two_j / 2 + 1
                } else {
                    (two_j + 1) / 2
                }
            }
            BasisTag::OddBlock { .. } => {
                if two_j % 2 == 0 {
                    two_j / 2
                } else {
                    (two_j + 1) / 2
                }
            }
        }
    }
}

/// Dense unitary matrix together with the basis it acts on.
#[derive(Debug, Clone)]
pub struct UnitaryOperator {
    pub basis_tag: BasisTag,
    pub matrix: CMat,
}

impl UnitaryOperator {
    pub fn new(basis_tag: BasisTag, matrix: CMat) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        debug_assert_eq!(matrix.nrows(), basis_tag.dim());
        Self { basis_tag, matrix }
    }

    pub fn identity(basis_tag: BasisTag) -> Self {
        Self::new(basis_tag, CMat::identity(basis_tag.dim(), basis_tag.dim()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// ‖U†U − I‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((g[(i, j)] - expected).norm());
            }
        }
        worst
    }
}

/// Entrywise max-norm distance between two complex matrices.
pub fn max_entry_distance(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// J_x in the |m⟩ basis: real symmetric tridiagonal with
/// ⟨m±1|J_x|m⟩ = √(J(J+1) − m(m±1))/2.
pub fn jx_matrix(basis: SpinBasis) -> RMat {
    let n = basis.dim();
    let jj = basis.j() * (basis.j() + 1.0);
    let mut jx = RMat::zeros(n, n);
    for i in 0..n - 1 {
        let m = basis.m(i);
        let c = (jj - m * (m + 1.0)).sqrt() / 2.0;
        jx[(i + 1, i)] = c;
        jx[(i, i + 1)] = c;
    }
    jx
}

/// J_y in the |m⟩ basis: Hermitian tridiagonal, ⟨m+1|J_y|m⟩ = −i√(J(J+1) − m(m+1))/2.
pub fn jy_matrix(basis: SpinBasis) -> CMat {
    let n = basis.dim();
    let jj = basis.j() * (basis.j() + 1.0);
    let mut jy = CMat::zeros(n, n);
    for i in 0..n - 1 {
        let m = basis.m(i);
        let c = (jj - m * (m + 1.0)).sqrt() / 2.0;
        jy[(i + 1, i)] = Complex64::new(0.0, -c);
        jy[(i, i + 1)] = Complex64::new(0.0, c);
    }
    jy
}

/// Raising operator J_+ = J_x + iJ_y: ⟨m+1|J_+|m⟩ = √(J(J+1) − m(m+1)).
pub fn jplus_matrix(basis: SpinBasis) -> RMat {
    let n = basis.dim();
    let jj = basis.j() * (basis.j() + 1.0);
    let mut jp = RMat::zeros(n, n);
    for i in 0..n - 1 {
        let m = basis.m(i);
        jp[(i + 1, i)] = (jj - m * (m + 1.0)).sqrt();
    }
    jp
}

/// Eigenvector matrix of J_x, columns ordered so that column i belongs to
/// the exact eigenvalue m_i = −J + i. The spectrum of J_x is known to be
/// the m grid, so the computed eigenvalues are snapped to it.
pub(crate) fn jx_eigenbasis(basis: SpinBasis) -> RMat {
    let jx = jx_matrix(basis);
    let eig = SymmetricEigen::new(jx);
    sorted_eigvecs_real(basis, eig)
}

fn sorted_eigvecs_real(basis: SpinBasis, eig: SymmetricEigen<f64, nalgebra::Dyn>) -> RMat {
    let n = basis.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = RMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        debug_assert!(
            (eig.eigenvalues[src] - basis.m(dst)).abs() < 1e-8,
            "J_x eigenvalue {} does not match m = {}",
            eig.eigenvalues[src],
            basis.m(dst)
        );
    }
    vecs
}

/// exp(−iα·diag-spectrum) assembled from a real eigenbasis with exact
/// eigenvalues m: V · diag(e^{−iαm}) · Vᵀ.
pub(crate) fn rotation_from_real_eigenbasis(basis: SpinBasis, vecs: &RMat, alpha: f64) -> CMat {
    let n = basis.dim();
    let mut scaled = CMat::zeros(n, n);
    for k in 0..n {
        let phase = Complex64::from_polar(1.0, -alpha * basis.m(k));
        for i in 0..n {
            scaled[(i, k)] = phase * vecs[(i, k)];
        }
    }
    let vt = CMat::from_fn(n, n, |i, j| Complex64::new(vecs[(j, i)], 0.0));
    scaled * vt
}

/// Rotation about x: exp(−iα J_x), via spectral decomposition of the
/// tridiagonal J_x (eigenvalues are exactly the m grid).
pub fn rotation_x(basis: SpinBasis, alpha: f64) -> UnitaryOperator {
    let vecs = jx_eigenbasis(basis);
    UnitaryOperator::new(
        BasisTag::Full { two_j: basis.two_j() },
        rotation_from_real_eigenbasis(basis, &vecs, alpha),
    )
}

/// Rotation about y: exp(−iα J_y). Real orthogonal (a Wigner d-matrix).
pub fn rotation_y(basis: SpinBasis, alpha: f64) -> UnitaryOperator {
    let n = basis.dim();
    let eig = SymmetricEigen::new(jy_matrix(basis));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut scaled = CMat::zeros(n, n);
    let mut vdag = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        debug_assert!((eig.eigenvalues[src] - basis.m(dst)).abs() < 1e-8);
        let phase = Complex64::from_polar(1.0, -alpha * basis.m(dst));
        for i in 0..n {
            let v = eig.eigenvectors[(i, src)];
            scaled[(i, dst)] = phase * v;
            vdag[(dst, i)] = v.conj();
        }
    }
    UnitaryOperator::new(BasisTag::Full { two_j: basis.two_j() }, scaled * vdag)
}

/// Sign of the torsion exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorsionSign {
    Plus,
    Minus,
}

impl TorsionSign {
    pub fn factor(&self) -> f64 {
        match self {
            TorsionSign::Plus => 1.0,
            TorsionSign::Minus => -1.0,
        }
    }
}

/// Diagonal entries of the torsion kick exp(sign · i · (ℏ_η/2) · m²),
/// using η/(2J) = ℏ_η/2.
pub fn torsion_entries(basis: SpinBasis, heta: f64, sign: TorsionSign) -> Vec<Complex64> {
    let s = sign.factor();
    basis
        .m_values()
        .iter()
        .map(|&m| Complex64::from_polar(1.0, s * 0.5 * heta * m * m))
        .collect()
}

/// Torsion kick as a diagonal unitary.
pub fn torsion_phase(basis: SpinBasis, heta: f64, sign: TorsionSign) -> UnitaryOperator {
    let entries = torsion_entries(basis, heta, sign);
    UnitaryOperator::new(
        BasisTag::Full { two_j: basis.two_j() },
        CMat::from_diagonal(&CVec::from_vec(entries)),
    )
}

/// Parity-adapted basis: even combinations (|m⟩+|−m⟩)/√2 (plus |0⟩ alone
/// for integer J) followed by odd combinations (|m⟩−|−m⟩)/√2, each block
/// ordered by ascending m > 0.
#[derive(Debug, Clone)]
pub struct ParityDecomposition {
    two_j: u32,
    pub even_dim: usize,
    pub odd_dim: usize,
    /// Real orthogonal matrix; column k is the k-th parity-basis vector in
    /// the |m⟩ basis (even block first).
    pub transform: RMat,
}

/// Build the parity decomposition of the |m⟩ basis (P|m⟩ = |−m⟩).
pub fn parity_decompose(basis: SpinBasis) -> ParityDecomposition {
    let n = basis.dim();
    let even_dim = BasisTag::EvenBlock { two_j: basis.two_j() }.dim();
    let odd_dim = BasisTag::OddBlock { two_j: basis.two_j() }.dim();
    let mut t = RMat::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut col = 0;
    // even block
    if basis.is_integer_j() {
        t[(basis.two_j() as usize / 2, col)] = 1.0; // |m=0⟩
        col += 1;
    }
    let mut idx_hi = if basis.is_integer_j() { n / 2 + 1 } else { (n + 1) / 2 };
    while idx_hi < n {
        let idx_lo = n - 1 - idx_hi;
        t[(idx_hi, col)] = inv_sqrt2;
        t[(idx_lo, col)] = inv_sqrt2;
        col += 1;
        idx_hi += 1;
    }
    // odd block
    idx_hi = if basis.is_integer_j() { n / 2 + 1 } else { (n + 1) / 2 };
    while idx_hi < n {
        let idx_lo = n - 1 - idx_hi;
        t[(idx_hi, col)] = inv_sqrt2;
        t[(idx_lo, col)] = -inv_sqrt2;
        col += 1;
        idx_hi += 1;
    }
    debug_assert_eq!(col, n);
    ParityDecomposition { two_j: basis.two_j(), even_dim, odd_dim, transform: t }
}

impl ParityDecomposition {
    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn dim(&self) -> usize {
        self.even_dim + self.odd_dim
    }

    /// Tᵀ M T: express a full-basis matrix in the parity basis.
    pub fn conjugate(&self, m: &CMat) -> CMat {
        let n = self.dim();
        assert_eq!(m.nrows(), n);
        let tc = CMat::from_fn(n, n, |i, j| Complex64::new(self.transform[(i, j)], 0.0));
        tc.transpose() * m * tc
    }

    /// Largest off-block entry magnitude of a matrix in the parity basis.
    pub fn block_leakage(&self, w: &CMat) -> f64 {
        let e = self.even_dim;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if (i < e) != (j < e) {
                    worst = worst.max(w[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn even_block_of(&self, w: &CMat) -> CMat {
        w.view((0, 0), (self.even_dim, self.even_dim)).into()
    }

    pub fn odd_block_of(&self, w: &CMat) -> CMat {
        w.view((self.even_dim, self.even_dim), (self.odd_dim, self.odd_dim)).into()
    }

    /// Lift an even-block vector back to the full |m⟩ basis.
    pub fn embed_even(&self, v: &CVec) -> CVec {
        assert_eq!(v.len(), self.even_dim);
        let n = self.dim();
        CVec::from_fn(n, |i, _| {
            (0..self.even_dim).map(|k| self.transform[(i, k)] * v[k]).sum()
        })
    }

    /// Lift an odd-block vector back to the full |m⟩ basis.
    pub fn embed_odd(&self, v: &CVec) -> CVec {
        assert_eq!(v.len(), self.odd_dim);
        let n = self.dim();
        CVec::from_fn(n, |i, _| {
            (0..self.odd_dim).map(|k| self.transform[(i, self.even_dim + k)] * v[k]).sum()
        })
    }
}

/// Apply the parity operator P|m⟩ = |−m⟩ to a full-basis state (index reversal).
pub fn parity_apply(v: &CVec) -> CVec {
    let n = v.len();
    CVec::from_fn(n, |i, _| v[n - 1 - i])
}

/// Spin coherent state e^{−iφJ_z} e^{−iθJ_y} |m=J⟩ pointing along (θ, φ).
pub fn coherent_state(basis: SpinBasis, theta: f64, phi: f64) -> CVec {
    assert!((0.0..=std::f64::consts::PI).contains(&theta), "θ must be in [0, π]");
    let ry = rotation_y(basis, theta);
    let n = basis.dim();
    let mut v = CVec::from_fn(n, |i, _| ry.matrix[(i, n - 1)]);
    for i in 0..n {
        v[i] *= Complex64::from_polar(1.0, -phi * basis.m(i));
    }
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Expectation values (⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩) of a normalized full-basis state.
pub fn spin_expectation(basis: SpinBasis, v: &CVec) -> (f64, f64, f64) {
    let n = basis.dim();
    assert_eq!(v.len(), n);
    let jj = basis.j() * (basis.j() + 1.0);
    let mut ex = Complex64::new(0.0, 0.0);
    let mut ey = Complex64::new(0.0, 0.0);
    let mut ez = 0.0;
    for i in 0..n {
        let m = basis.m(i);
        ez += v[i].norm_sqr() * m;
        if i + 1 < n {
            let c = (jj - m * (m + 1.0)).sqrt() / 2.0;
            // ⟨v|J_x|v⟩ and ⟨v|J_y|v⟩ from the tridiagonal couplings
            let cross = v[i + 1].conj() * v[i];
            ex += 2.0 * c * cross.re;
            ey += 2.0 * (Complex64::new(0.0, -c) * cross).re;
        }
    }
    (ex.re, ey.re, ez)
}
