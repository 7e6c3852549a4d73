//! Angle parameters of a system of N subspaces.
//!
//! The Friedrichs number `c` and the configuration constant `κ` are tied by
//! `c = (Nκ − 1)/(N − 1)`, and `κ = ‖(P₁ + … + P_N)/N − P_M‖`. The Dixmier
//! pair `(c₀, κ₀)` is the same construction without removing the
//! intersection, and is computed in the product space H^N as `‖P_D P_C‖²`
//! where `C = M₁ × … × M_N` and `D` is the diagonal.
//!
//! When every M_j equals M the defining suprema range over an empty set.
//! That case is reported as degenerate with `c = 0` and `κ = 1/N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{operator_norm, top_eigenvectors, Matrix, TolerancePolicy, Vector};
use crate::subspace::{intersect, Subspace, SubspaceSystem};

/// `(Nκ − 1)/(N − 1)`.
pub fn friedrichs_from_kappa(n: usize, kappa: f64) -> f64 {
    let n = n as f64;
    (n * kappa - 1.0) / (n - 1.0)
}

fn clamp_unit(value: f64, what: &str, tol: &TolerancePolicy) -> Result<f64> {
    if value < -tol.check_tol || value > 1.0 + tol.check_tol || !value.is_finite() {
        return Err(Error::Numerical(format!("{what} = {value} lies outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// κ(M₁, …, M_N) = ‖(P₁ + … + P_N)/N − P_M‖.
pub fn configuration_constant(system: &SubspaceSystem) -> f64 {
    if system.is_degenerate() {
        return 1.0 / system.len() as f64;
    }
    operator_norm(&(system.average_projector() - system.intersection_projector().matrix()))
}

/// c(M₁, …, M_N).
pub fn friedrichs_number(system: &SubspaceSystem) -> Result<f64> {
    if system.is_degenerate() {
        return Ok(0.0);
    }
    let kappa = configuration_constant(system);
    clamp_unit(
        friedrichs_from_kappa(system.len(), kappa),
        "Friedrichs number",
        system.tolerance(),
    )
}

/// Projectors onto C, D and C ∩ D in ℝ^{Nd}, assembled block-wise:
/// `P_C = diag(P_j)`, `P_D` has every block `I/N`, `P_{C∩D}` every block
/// `P_M/N`.
pub fn product_projectors(system: &SubspaceSystem) -> (Matrix, Matrix, Matrix) {
    let n = system.len();
    let d = system.ambient_dim();
    let mut pc = Matrix::zeros(n * d, n * d);
    let mut pd = Matrix::zeros(n * d, n * d);
    let mut pcd = Matrix::zeros(n * d, n * d);
    let eye = Matrix::identity(d, d) / n as f64;
    let pm = system.intersection_projector().matrix() / n as f64;
    for i in 0..n {
        pc.view_mut((i * d, i * d), (d, d))
            .copy_from(system.projector(i).matrix());
        for j in 0..n {
            pd.view_mut((i * d, j * d), (d, d)).copy_from(&eye);
            pcd.view_mut((i * d, j * d), (d, d)).copy_from(&pm);
        }
    }
    (pc, pd, pcd)
}

/// The Cartesian product C = M₁ × … × M_N, the diagonal D = diag(ℝ^d) and
/// their intersection diag(M), as subspaces of ℝ^{Nd}.
#[derive(Debug, Clone)]
pub struct ProductSpacePair {
    pub c: Subspace,
    pub d: Subspace,
    pub cd: Subspace,
}

pub fn product_space(system: &SubspaceSystem) -> Result<ProductSpacePair> {
    let n = system.len();
    let d = system.ambient_dim();
    let tol = system.tolerance();
    let total: usize = system.subspaces().iter().map(Subspace::dim).sum();
    let mut cb = Matrix::zeros(n * d, total);
    let mut col = 0;
    for (i, s) in system.subspaces().iter().enumerate() {
        cb.view_mut((i * d, col), (d, s.dim())).copy_from(s.basis());
        col += s.dim();
    }
    let scale = 1.0 / (n as f64).sqrt();
    let diagonal = |b: &Matrix| {
        let mut out = Matrix::zeros(n * d, b.ncols());
        for i in 0..n {
            out.view_mut((i * d, 0), (d, b.ncols())).copy_from(&(b * scale));
        }
        out
    };
    Ok(ProductSpacePair {
        c: Subspace::from_basis("C", cb, tol)?,
        d: Subspace::from_basis("D", diagonal(&Matrix::identity(d, d)), tol)?,
        cd: Subspace::from_basis("CD", diagonal(system.intersection().basis()), tol)?,
    })
}

/// (c₀, κ₀), with κ₀ = ‖P_D P_C‖² in the product space.
pub fn dixmier_number(system: &SubspaceSystem) -> Result<(f64, f64)> {
    let n = system.len();
    if system.subspaces().iter().all(Subspace::is_zero) {
        return Ok((0.0, 1.0 / n as f64));
    }
    let (pc, pd, _) = product_projectors(system);
    let kappa0 = operator_norm(&(pd * pc)).powi(2);
    let c0 = clamp_unit(
        friedrichs_from_kappa(n, kappa0),
        "Dixmier number",
        system.tolerance(),
    )?;
    Ok((c0, kappa0))
}

/// c(S₁, S₂) = ‖P₂P₁ − P_{S₁∩S₂}‖, checked against `2κ(S₁, S₂) − 1`.
pub fn pairwise_friedrichs(s1: &Subspace, s2: &Subspace, tol: &TolerancePolicy) -> Result<f64> {
    let pair = SubspaceSystem::with_tolerance(vec![s1.clone(), s2.clone()], *tol)?;
    let direct = operator_norm(
        &(pair.projector(1).matrix() * pair.projector(0).matrix()
            - pair.intersection_projector().matrix()),
    );
    let affine = friedrichs_number(&pair)?;
    if (direct - affine).abs() > tol.check_tol {
        return Err(Error::Numerical(format!(
            "pairwise Friedrichs routes disagree: {direct} vs {affine}"
        )));
    }
    Ok(direct)
}

/// Table of c₀(M_i ∩ M^⊥, M_j ∩ M^⊥) = ‖Q_i Q_j‖ for the reduced projectors.
/// The diagonal is 1 for nonzero reduced subspaces and 0 otherwise.
pub fn pairwise_dixmier_reduced(system: &SubspaceSystem) -> Vec<Vec<f64>> {
    let reduced = system.reduced();
    let n = reduced.len();
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        table[i][i] = if reduced[i].is_zero() { 0.0 } else { 1.0 };
        for j in (i + 1)..n {
            let v = if reduced[i].is_zero() || reduced[j].is_zero() {
                0.0
            } else {
                operator_norm(&(reduced[i].basis().transpose() * reduced[j].basis()))
            };
            table[i][j] = v;
            table[j][i] = v;
        }
    }
    table
}

/// c_j = c(M₁ ∩ … ∩ M_{j−1}, M_j) for j = 2..N.
pub fn prefix_friedrichs(system: &SubspaceSystem) -> Result<Vec<f64>> {
    let tol = system.tolerance();
    let subspaces = system.subspaces();
    (1..subspaces.len())
        .map(|j| {
            let prefix = intersect(&subspaces[..j], tol)?;
            pairwise_friedrichs(&prefix, &subspaces[j], tol)
        })
        .collect()
}

/// (1/N)‖G(v₁, …, v_N)‖ for unit vectors v_j ∈ M_j ∩ M^⊥.
pub fn gramian_sample(system: &SubspaceSystem, vectors: &[Vector]) -> Result<f64> {
    let n = system.len();
    if vectors.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: vectors.len(),
        });
    }
    let tol = system.tolerance();
    for (j, (v, r)) in vectors.iter().zip(system.reduced()).enumerate() {
        if r.is_zero() {
            return Err(Error::Degenerate(format!(
                "reduced subspace {} is {{0}}; no unit vector is admissible",
                j + 1
            )));
        }
        if v.len() != system.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: system.ambient_dim(),
                found: v.len(),
            });
        }
        if (v.norm() - 1.0).abs() > tol.check_tol {
            return Err(Error::InvalidParameter(format!(
                "vector {} is not a unit vector",
                j + 1
            )));
        }
        if r.distance(v) > tol.check_tol {
            return Err(Error::InvalidParameter(format!(
                "vector {} does not lie in the reduced subspace",
                j + 1
            )));
        }
    }
    let gram = Matrix::from_fn(n, n, |i, j| vectors[i].dot(&vectors[j]));
    Ok(operator_norm(&gram) / n as f64)
}

/// Multistart parameters for the inclination optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclinationBudget {
    pub starts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for InclinationBudget {
    fn default() -> Self {
        Self {
            starts: 32,
            iterations: 200,
            seed: 0,
        }
    }
}

/// Numerical inclination with the interval implied by κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclinationEstimate {
    /// 1 − √κ
    pub lower: f64,
    /// min(1, √(2N(1 − √κ)))
    pub upper: f64,
    pub estimate: f64,
    pub certified: bool,
}

/// Interval for the inclination ℓ implied by `1 − ℓ ≤ √κ ≤ 1 − ℓ²/(2N)`.
pub fn inclination_bounds(n: usize, kappa: f64) -> (f64, f64) {
    let root = kappa.max(0.0).sqrt();
    let lower = (1.0 - root).max(0.0);
    let upper = (2.0 * n as f64 * (1.0 - root).max(0.0)).sqrt().min(1.0);
    (lower, upper)
}

/// max_j ‖(I − P_j) y‖ over unit y in M^⊥, written in coordinates of an
/// orthonormal basis of M^⊥: f(z)² = max_j zᵀ G_j z.
struct DistanceObjective {
    grams: Vec<Matrix>,
}

impl DistanceObjective {
    fn new(system: &SubspaceSystem, complement: &Matrix) -> Self {
        let d = system.ambient_dim();
        let grams = system
            .projectors()
            .iter()
            .map(|p| {
                let g = complement.transpose() * (Matrix::identity(d, d) - p.matrix()) * complement;
                (&g + g.transpose()) * 0.5
            })
            .collect();
        Self { grams }
    }

    fn distances(&self, z: &Vector) -> Vec<f64> {
        self.grams
            .iter()
            .map(|g| z.dot(&(g * z)).max(0.0).sqrt())
            .collect()
    }

    fn value(&self, z: &Vector) -> f64 {
        self.distances(z).into_iter().fold(0.0, f64::max)
    }

    /// L^p surrogate of the max and its Euclidean gradient.
    fn surrogate(&self, z: &Vector, p: f64) -> (f64, Vector) {
        let dist = self.distances(z);
        let top = dist.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return (0.0, Vector::zeros(z.len()));
        }
        let mut sum = 0.0;
        let mut grad = Vector::zeros(z.len());
        for (g, &dj) in self.grams.iter().zip(&dist) {
            let ratio = dj / top;
            sum += ratio.powf(p);
            if ratio > 0.0 {
                // ∂(d_j^p)/∂z ∝ d_j^{p-2} G_j z
                grad += (g * z) * ratio.powf(p - 2.0);
            }
        }
        let value = top * sum.powf(1.0 / p);
        (value, grad)
    }

    /// Projected descent on the sphere with adaptive step length, for a
    /// sequence of increasingly sharp surrogates. Returns the best point
    /// found by the true objective.
    fn descend(&self, start: Vector, iterations: usize) -> (f64, Vector) {
        let mut best_z = start.normalize();
        let mut best = self.value(&best_z);
        for &p in &[16.0, 64.0, 256.0] {
            let mut z = best_z.clone();
            let (mut current, mut grad) = self.surrogate(&z, p);
            let mut step = 0.25;
            for _ in 0..iterations {
                let tangent = &grad - &z * z.dot(&grad);
                let norm = tangent.norm();
                if norm < 1e-14 || step < 1e-10 {
                    break;
                }
                let candidate = (&z - &tangent * (step / norm)).normalize();
                let (value, g) = self.surrogate(&candidate, p);
                if value < current {
                    z = candidate;
                    current = value;
                    grad = g;
                    step *= 1.5;
                    let v = self.value(&z);
                    if v < best {
                        best = v;
                        best_z = z.clone();
                    }
                } else {
                    step *= 0.5;
                }
            }
        }
        (best, best_z)
    }
}

/// Estimate of the inclination ℓ = inf_{x ∉ M} max_j dist(x, M_j)/dist(x, M).
pub fn inclination(system: &SubspaceSystem, budget: &InclinationBudget) -> Result<InclinationEstimate> {
    let complement = system.intersection_complement()?;
    if complement.is_zero() {
        return Err(Error::Undefined(
            "inclination: the intersection is the whole space".into(),
        ));
    }
    let tol = system.tolerance();
    let kappa = configuration_constant(system);
    let (lower, upper) = inclination_bounds(system.len(), kappa);
    let basis = complement.basis();
    let r = basis.ncols();
    let objective = DistanceObjective::new(system, basis);

    let estimate = if r == 1 {
        objective.value(&Vector::from_element(1, 1.0))
    } else {
        let mut starts = Vec::with_capacity(budget.starts.max(1));
        // the dominant direction of the reduced average projector minimizes
        // the mean squared distance, usually a good seed for the max
        let avg = basis.transpose() * system.average_projector() * basis;
        let avg = (&avg + avg.transpose()) * 0.5;
        let top = top_eigenvectors(&avg, 1, tol)?;
        starts.push(top.column(0).into_owned());
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        while starts.len() < budget.starts.max(1) {
            let z = Vector::from_fn(r, |_, _| StandardNormal.sample(&mut rng));
            if z.norm() > 0.0 {
                starts.push(z);
            }
        }
        starts
            .into_iter()
            .map(|z| objective.descend(z, budget.iterations).0)
            .fold(f64::INFINITY, f64::min)
    };
    let certified = estimate >= lower - tol.check_tol && estimate <= upper + tol.check_tol;
    Ok(InclinationEstimate {
        lower,
        upper,
        estimate,
        certified,
    })
}

/// Every angle parameter of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub c0: f64,
    pub c: f64,
    pub kappa0: f64,
    pub kappa: f64,
    #[serde(rename = "pairwise")]
    pub pairwise_dixmier_reduced: Vec<Vec<f64>>,
    #[serde(rename = "prefix")]
    pub prefix_friedrichs: Vec<f64>,
    /// Absent when the intersection is the whole space.
    pub inclination: Option<InclinationEstimate>,
    pub degenerate: bool,
}

impl AngleReport {
    pub fn compute(system: &SubspaceSystem, budget: &InclinationBudget) -> Result<Self> {
        let kappa = configuration_constant(system);
        let c = friedrichs_number(system)?;
        let (c0, kappa0) = dixmier_number(system)?;
        let tol = system.tolerance();
        if !system.is_degenerate()
            && (c - friedrichs_from_kappa(system.len(), kappa)).abs() > tol.check_tol
        {
            return Err(Error::Numerical("c and κ are inconsistent".into()));
        }
        let inclination = if system.intersection().dim() == system.ambient_dim() {
            None
        } else {
            Some(inclination(system, budget)?)
        };
        Ok(Self {
            c0,
            c,
            kappa0,
            kappa,
            pairwise_dixmier_reduced: pairwise_dixmier_reduced(system),
            prefix_friedrichs: prefix_friedrichs(system)?,
            inclination,
            degenerate: system.is_degenerate(),
        })
    }
}
