//! Deterministic generators for test and demonstration systems.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::TolerancePolicy;
use crate::subspace::{Subspace, SubspaceSystem};

/// Angle rule for the tilted-pairs family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleRule {
    /// θ_k = 1/k
    InverseK,
    Constant(f64),
    Explicit(Vec<f64>),
}

impl AngleRule {
    pub fn angles(&self, k: usize) -> Result<Vec<f64>> {
        let angles = match self {
            AngleRule::InverseK => (1..=k).map(|i| 1.0 / i as f64).collect(),
            AngleRule::Constant(t) => vec![*t; k],
            AngleRule::Explicit(v) => {
                if v.len() != k {
                    return Err(Error::InvalidParameter(format!(
                        "explicit angle list has {} entries, expected {k}",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        Ok(angles)
    }
}

/// A named family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Example3 { dim: usize },
    TwoLines { theta: f64 },
    TiltedPairs { k: usize, rule: AngleRule },
    Random { dim: usize, dims: Vec<usize>, seed: u64 },
    CommonCore { dim: usize, dims: Vec<usize>, core_dim: usize, seed: u64 },
}

impl FamilySpec {
    pub fn build(&self) -> Result<SubspaceSystem> {
        match self {
            FamilySpec::Example3 { dim } => example3(*dim),
            FamilySpec::TwoLines { theta } => two_lines(*theta),
            FamilySpec::TiltedPairs { k, rule } => tilted_pairs(*k, rule),
            FamilySpec::Random { dim, dims, seed } => random_system(*dim, dims, *seed),
            FamilySpec::CommonCore {
                dim,
                dims,
                core_dim,
                seed,
            } => common_core(*dim, dims, *core_dim, *seed),
        }
    }
}

pub const EXAMPLE3_DEFAULT_DIM: usize = 12;

/// Index sets of the three-subspace example truncated to ℝ^d (0-based).
///
/// M₁ = span{e_{3n}}, M₂ = span{e₀, e_{3n+1}}, M₃ = span{e₁, e₃, e_{3n+2}}.
pub fn example3_indices(d: usize) -> Result<[Vec<usize>; 3]> {
    if d < 4 {
        return Err(Error::InvalidParameter(format!(
            "example3 needs dimension at least 4, got {d}"
        )));
    }
    let progression = |r: usize| (r..d).step_by(3);
    let m1: Vec<usize> = progression(0).collect();
    let mut m2 = vec![0];
    m2.extend(progression(1));
    let mut m3 = vec![1, 3];
    m3.extend(progression(2));
    Ok([m1, m2, m3])
}

pub fn example3(d: usize) -> Result<SubspaceSystem> {
    let [a, b, c] = example3_indices(d)?;
    SubspaceSystem::new(vec![
        Subspace::coordinate("M1", d, &a)?,
        Subspace::coordinate("M2", d, &b)?,
        Subspace::coordinate("M3", d, &c)?,
    ])
}

/// span{e₁} and span{cos θ e₁ + sin θ e₂} in ℝ².
///
/// θ may be anywhere in (0, π); the Friedrichs number is |cos θ|.
pub fn two_lines(theta: f64) -> Result<SubspaceSystem> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, pi), got {theta}"
        )));
    }
    let tol = TolerancePolicy::default();
    SubspaceSystem::new(vec![
        Subspace::from_vectors("M1", 2, vec![vec![1.0, 0.0]], &tol)?,
        Subspace::from_vectors("M2", 2, vec![vec![theta.cos(), theta.sin()]], &tol)?,
    ])
}

/// K planar blocks in ℝ^{2K}: M₁ holds the first axis of every block and M₂
/// the line at angle θ_k inside block k.
pub fn tilted_pairs(k: usize, rule: &AngleRule) -> Result<SubspaceSystem> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    tilted_pairs_from_angles(&rule.angles(k)?)
}

pub fn tilted_pairs_from_angles(angles: &[f64]) -> Result<SubspaceSystem> {
    let k = angles.len();
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    for &t in angles {
        if !(t > 0.0 && t <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "tilt angles must lie in (0, pi/2], got {t}"
            )));
        }
    }
    let d = 2 * k;
    let tol = TolerancePolicy::default();
    let mut first = Vec::with_capacity(k);
    let mut second = Vec::with_capacity(k);
    for (b, &t) in angles.iter().enumerate() {
        let mut e = vec![0.0; d];
        e[2 * b] = 1.0;
        first.push(e);
        let mut u = vec![0.0; d];
        u[2 * b] = t.cos();
        u[2 * b + 1] = t.sin();
        second.push(u);
    }
    SubspaceSystem::new(vec![
        Subspace::from_vectors("M1", d, first, &tol)?,
        Subspace::from_vectors("M2", d, second, &tol)?,
    ])
}

fn gaussian_vectors(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

fn check_dims(d: usize, dims: &[usize]) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if dims.len() < 2 {
        return Err(Error::InvalidParameter(
            "at least two subspace dimensions are required".into(),
        ));
    }
    if let Some(&k) = dims.iter().find(|&&k| k > d) {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension {k} exceeds ambient dimension {d}"
        )));
    }
    Ok(())
}

/// Subspaces spanned by seeded Gaussian vectors.
pub fn random_system(d: usize, dims: &[usize], seed: u64) -> Result<SubspaceSystem> {
    check_dims(d, dims)?;
    let tol = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subspaces = dims
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let vectors = gaussian_vectors(&mut rng, d, k);
            Subspace::from_vectors(format!("M{}", j + 1), d, vectors, &tol)
        })
        .collect::<Result<Vec<_>>>()?;
    SubspaceSystem::new(subspaces)
}

/// Like [`random_system`], but every subspace contains a shared seeded core
/// of dimension `core_dim`.
pub fn common_core(d: usize, dims: &[usize], core_dim: usize, seed: u64) -> Result<SubspaceSystem> {
    check_dims(d, dims)?;
    if dims.iter().any(|&k| k < core_dim) {
        return Err(Error::InvalidParameter(format!(
            "core dimension {core_dim} exceeds a subspace dimension"
        )));
    }
    let tol = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let core = gaussian_vectors(&mut rng, d, core_dim);
    let subspaces = dims
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mut vectors = core.clone();
            vectors.extend(gaussian_vectors(&mut rng, d, k - core_dim));
            Subspace::from_vectors(format!("M{}", j + 1), d, vectors, &tol)
        })
        .collect::<Result<Vec<_>>>()?;
    SubspaceSystem::new(subspaces)
}
