//! Mean-field limit of the driven-SU(2) system: a discrete map on the unit
//! sphere, Poincaré sections, Lyapunov estimates, and the quantum–classical
//! correspondence check.
//!
//! One map application mirrors the four factors of the quantum operator,
//! applied right to left: a rotation about x by α (about y first for
//! variant XY), a torsion twist about z by an angle proportional to z,
//! the second rotation about x, and the opposite torsion twist. The
//! torsion twist angle is torsion_sign·(∓η·z); the overall sign convention
//! is fixed empirically by [`correspondence_check`] (see
//! [`ClassicalParams::DEFAULT_TORSION_SIGN`]).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::floquet::{FloquetAssembler, FloquetError, ModelParams, Variant};
use crate::su2::{coherent_state, spin_expectation, SpinBasis};

/// Point on the unit sphere (the scaled spin vector (J_x, J_y, J_z)/J).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SphereState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }.normalized()
    }

    /// Unit vector along spherical angles (θ, φ).
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { x: self.x / n, y: self.y / n, z: self.z / n }
    }

    /// Mirror image under the parity map (x, y, z) → (x, −y, −z).
    pub fn parity_mirror(&self) -> Self {
        Self { x: self.x, y: -self.y, z: -self.z }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Parameters of the classical map. Note η is the classical torsion
/// strength: η = ℏ_η·J, held fixed (with α) in the mean-field limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub alpha: f64,
    pub eta: f64,
    /// ±1; the sign pairing the quantum torsion factors with the two
    /// z-twists of the map.
    pub torsion_sign: f64,
}

impl ClassicalParams {
    /// Empirically fixed by [`correspondence_check`]: with −1 the map
    /// tracks the coherent-state expectation trajectory; +1 diverges from
    /// it within a couple of periods.
    pub const DEFAULT_TORSION_SIGN: f64 = -1.0;

    pub fn new(alpha: f64, eta: f64) -> Self {
        Self { alpha, eta, torsion_sign: Self::DEFAULT_TORSION_SIGN }
    }
}

fn rotate_x(s: SphereState, angle: f64) -> SphereState {
    let (sin, cos) = angle.sin_cos();
    SphereState {
        x: s.x,
        y: s.y * cos - s.z * sin,
        z: s.z * cos + s.y * sin,
    }
}

fn rotate_y(s: SphereState, angle: f64) -> SphereState {
    let (sin, cos) = angle.sin_cos();
    SphereState {
        x: s.x * cos + s.z * sin,
        y: s.y,
        z: s.z * cos - s.x * sin,
    }
}

fn rotate_z(s: SphereState, angle: f64) -> SphereState {
    let (sin, cos) = angle.sin_cos();
    SphereState {
        x: s.x * cos - s.y * sin,
        y: s.y * cos + s.x * sin,
        z: s.z,
    }
}

/// One application of the classical map (four factors right to left).
pub fn classical_map_step(s: SphereState, p: &ClassicalParams, variant: Variant) -> SphereState {
    let first = match variant {
        Variant::Xx => rotate_x(s, p.alpha),
        Variant::Xy => rotate_y(s, p.alpha),
    };
    let twisted = rotate_z(first, p.torsion_sign * (-p.eta) * first.z);
    let second = rotate_x(twisted, p.alpha);
    let back = rotate_z(second, p.torsion_sign * p.eta * second.z);
    back.normalized()
}

/// Map step together with the tangent-map action on a tangent vector
/// (used by the Lyapunov estimator).
fn map_step_tangent(
    s: SphereState,
    w: [f64; 3],
    p: &ClassicalParams,
    variant: Variant,
) -> (SphereState, [f64; 3]) {
    #[inline]
    fn rot_x_vec(w: [f64; 3], angle: f64) -> [f64; 3] {
        let (sin, cos) = angle.sin_cos();
        [w[0], w[1] * cos - w[2] * sin, w[2] * cos + w[1] * sin]
    }
    #[inline]
    fn rot_y_vec(w: [f64; 3], angle: f64) -> [f64; 3] {
        let (sin, cos) = angle.sin_cos();
        [w[0] * cos + w[2] * sin, w[1], w[2] * cos - w[0] * sin]
    }
    /// Tangent action of s ↦ R_z(c·s.z)·s: the rotation itself plus the
    /// z-derivative of the rotation angle.
    #[inline]
    fn twist_tangent(s: SphereState, w: [f64; 3], c: f64) -> [f64; 3] {
        let theta = c * s.z;
        let (sin, cos) = theta.sin_cos();
        [
            w[0] * cos - w[1] * sin + w[2] * c * (-s.x * sin - s.y * cos),
            w[0] * sin + w[1] * cos + w[2] * c * (s.x * cos - s.y * sin),
            w[2],
        ]
    }

    let (s1, w1) = match variant {
        Variant::Xx => (rotate_x(s, p.alpha), rot_x_vec(w, p.alpha)),
        Variant::Xy => (rotate_y(s, p.alpha), rot_y_vec(w, p.alpha)),
    };
    let c1 = p.torsion_sign * (-p.eta);
    let w2 = twist_tangent(s1, w1, c1);
    let s2 = rotate_z(s1, c1 * s1.z);
    let s3 = rotate_x(s2, p.alpha);
    let w3 = rot_x_vec(w2, p.alpha);
    let c2 = p.torsion_sign * p.eta;
    let w4 = twist_tangent(s3, w3, c2);
    let s4 = rotate_z(s3, c2 * s3.z).normalized();
    (s4, w4)
}

/// Iterate the map and record (step, y, z) whenever the filter x > 0
/// holds. Returns one point list per seed.
pub fn poincare_section(
    seeds: &[SphereState],
    p: &ClassicalParams,
    variant: Variant,
    n_steps: usize,
) -> Vec<Vec<(u64, f64, f64)>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut s = seed.normalized();
            let mut points = Vec::new();
            for step in 0..n_steps {
                s = classical_map_step(s, p, variant);
                if s.x > 0.0 {
                    points.push((step as u64 + 1, s.y, s.z));
                }
            }
            points
        })
        .collect()
}

/// Drop the step indices of a section (for occupancy statistics).
pub fn section_points(cloud: &[(u64, f64, f64)]) -> Vec<(f64, f64)> {
    cloud.iter().map(|&(_, y, z)| (y, z)).collect()
}

/// Fraction of cells of an n×n grid over [−1,1]² that contain at least one
/// section point, counting only cells whose center lies in the unit disk.
pub fn occupied_cell_fraction(points: &[(f64, f64)], grid_n: usize) -> f64 {
    let mut hit = vec![false; grid_n * grid_n];
    let cell = 2.0 / grid_n as f64;
    for &(y, z) in points {
        let iy = (((y + 1.0) / cell) as usize).min(grid_n - 1);
        let iz = (((z + 1.0) / cell) as usize).min(grid_n - 1);
        hit[iy * grid_n + iz] = true;
    }
    let mut inside = 0usize;
    let mut occupied = 0usize;
    for iy in 0..grid_n {
        for iz in 0..grid_n {
            let cy = -1.0 + (iy as f64 + 0.5) * cell;
            let cz = -1.0 + (iz as f64 + 0.5) * cell;
            if cy * cy + cz * cz <= 1.0 {
                inside += 1;
                if hit[iy * grid_n + iz] {
                    occupied += 1;
                }
            }
        }
    }
    occupied as f64 / inside as f64
}

/// Maximal Lyapunov exponent per map application (tangent-map method with
/// per-step renormalization). Requires n_steps ≥ 10⁴ for a usable average.
pub fn lyapunov_estimate(
    seed: SphereState,
    p: &ClassicalParams,
    variant: Variant,
    n_steps: usize,
) -> f64 {
    assert!(n_steps >= 10_000, "lyapunov_estimate needs n_steps ≥ 10⁴");
    let mut s = seed.normalized();
    // Start tangent to the sphere (the radial direction is neutral).
    let mut w = {
        let raw = [0.6, -0.3, 0.74];
        let dot = raw[0] * s.x + raw[1] * s.y + raw[2] * s.z;
        let mut t = [raw[0] - dot * s.x, raw[1] - dot * s.y, raw[2] - dot * s.z];
        let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        if n < 1e-12 {
            t = [1.0, 0.0, 0.0];
        } else {
            t = [t[0] / n, t[1] / n, t[2] / n];
        }
        t
    };
    let mut log_sum = 0.0;
    let transient = 100usize;
    let mut counted = 0usize;
    for step in 0..(n_steps + transient) {
        let (s_next, w_next) = map_step_tangent(s, w, p, variant);
        let norm = (w_next[0] * w_next[0] + w_next[1] * w_next[1] + w_next[2] * w_next[2]).sqrt();
        s = s_next;
        w = [w_next[0] / norm, w_next[1] / norm, w_next[2] / norm];
        if step >= transient {
            log_sum += norm.ln();
            counted += 1;
        }
    }
    log_sum / counted as f64
}

/// Deterministic batch of seeds drawn uniformly on the sphere.
pub fn random_seeds(count: usize, rng_seed: u64) -> Vec<SphereState> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            SphereState { x: r * phi.cos(), y: r * phi.sin(), z }
        })
        .collect()
}

/// Evolve a spin coherent state under F and its classical seed under the
/// map; return the maximum distance between the scaled quantum expectation
/// vector and the classical trajectory over `n_periods` periods.
///
/// The quantum side receives ℏ_η = η/J and αJ consistently with the
/// classical parameters.
pub fn correspondence_check(
    two_j: u32,
    theta: f64,
    phi: f64,
    p: &ClassicalParams,
    variant: Variant,
    n_periods: usize,
) -> Result<f64, FloquetError> {
    let basis = SpinBasis::new(two_j);
    let j = basis.j();
    let model = ModelParams {
        two_j,
        alpha_scaled: p.alpha * j,
        heta: p.eta / j,
        variant,
        prefactor: crate::floquet::Prefactor::None,
    };
    let assembler = FloquetAssembler::new(&model)?;
    let f = assembler.operator_at(model.heta);
    let mut psi = coherent_state(basis, theta, phi);
    let mut s = SphereState::from_angles(theta, phi);
    let mut worst = {
        let (ex, ey, ez) = spin_expectation(basis, &psi);
        s.distance(&SphereState { x: ex / j, y: ey / j, z: ez / j })
    };
    for _ in 0..n_periods {
        psi = &f.matrix * psi;
        s = classical_map_step(s, p, variant);
        let (ex, ey, ez) = spin_expectation(basis, &psi);
        let q = SphereState { x: ex / j, y: ey / j, z: ez / j };
        worst = worst.max(s.distance(&q));
    }
    Ok(worst)
}
