//! Alternating projections: products of projectors, vector iterations,
//! operator-power error norms and the reduced minimum modulus.
//!
//! Projector indices are 0-based throughout the library API.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::tilted_pairs_from_angles;
use crate::error::{Error, Result};
use crate::numerics::{operator_norm, restricted_min_singular, Matrix, Vector};
use crate::subspace::SubspaceSystem;

/// How projector indices are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// 0, 1, …, N−1, 0, 1, …
    Cyclic,
    /// Uniform draws, or shuffled blocks when a coverage window is set.
    Random { seed: u64 },
    /// A fixed list, repeated periodically.
    Explicit(Vec<usize>),
}

/// A sequence of projector indices in `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSchedule {
    kind: ScheduleKind,
    count: usize,
    coverage_window: Option<usize>,
}

impl IndexSchedule {
    pub fn cyclic(count: usize) -> Result<Self> {
        Self::build(ScheduleKind::Cyclic, count, None)
    }

    pub fn random(count: usize, seed: u64) -> Result<Self> {
        Self::build(ScheduleKind::Random { seed }, count, None)
    }

    /// Random schedule split into consecutive blocks of length `window`,
    /// each of which contains every index.
    pub fn random_covering(count: usize, seed: u64, window: usize) -> Result<Self> {
        if window < count {
            return Err(Error::InvalidParameter(format!(
                "coverage window {window} is shorter than the number of subspaces {count}"
            )));
        }
        Self::build(ScheduleKind::Random { seed }, count, Some(window))
    }

    pub fn explicit(count: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("explicit schedule is empty".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= count) {
            return Err(Error::InvalidParameter(format!(
                "index {bad} out of range for {count} subspaces"
            )));
        }
        Self::build(ScheduleKind::Explicit(indices), count, None)
    }

    fn build(kind: ScheduleKind, count: usize, coverage_window: Option<usize>) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("schedule needs at least one index".into()));
        }
        Ok(Self {
            kind,
            count,
            coverage_window,
        })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn coverage_window(&self) -> Option<usize> {
        self.coverage_window
    }

    /// Infinite iterator over the indices.
    pub fn iter(&self) -> ScheduleIter<'_> {
        let rng = match self.kind {
            ScheduleKind::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        ScheduleIter {
            schedule: self,
            position: 0,
            rng,
            block: Vec::new(),
        }
    }

    pub fn take(&self, len: usize) -> Vec<usize> {
        self.iter().take(len).collect()
    }
}

pub struct ScheduleIter<'a> {
    schedule: &'a IndexSchedule,
    position: usize,
    rng: Option<ChaCha8Rng>,
    block: Vec<usize>,
}

impl Iterator for ScheduleIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let n = self.schedule.count;
        let i = self.position;
        self.position += 1;
        let value = match &self.schedule.kind {
            ScheduleKind::Cyclic => i % n,
            ScheduleKind::Explicit(list) => list[i % list.len()],
            ScheduleKind::Random { .. } => {
                let rng = self.rng.as_mut().expect("random schedule has an rng");
                match self.schedule.coverage_window {
                    None => rng.random_range(0..n),
                    Some(w) => {
                        if self.block.is_empty() {
                            let mut block: Vec<usize> = (0..n).collect();
                            block.extend((n..w).map(|_| rng.random_range(0..n)));
                            block.shuffle(rng);
                            block.reverse();
                            self.block = block;
                        }
                        self.block.pop().expect("block refilled above")
                    }
                }
            }
        };
        Some(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// ‖x_n − P_M x₀‖
    Vector,
    /// ‖T^n − P_M‖
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub values: Vec<f64>,
}

/// Per-step errors, plus named bound curves evaluated at the same steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub kind: TraceKind,
    pub records: Vec<TraceRecord>,
    pub bounds: Vec<BoundCurve>,
}

impl ConvergenceTrace {
    fn new(kind: TraceKind) -> Self {
        Self {
            kind,
            records: Vec::new(),
            bounds: Vec::new(),
        }
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.error)
    }

    /// Attaches a bound curve evaluated at every recorded step.
    pub fn add_bound(&mut self, name: impl Into<String>, f: impl Fn(usize) -> f64) {
        let values = self.records.iter().map(|r| f(r.n)).collect();
        self.bounds.push(BoundCurve {
            name: name.into(),
            values,
        });
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.records.windows(2).all(|w| w[1].error <= w[0].error + tol)
    }
}

/// T = P_N ⋯ P₁ (P₁ applied first).
pub fn cyclic_operator(system: &SubspaceSystem) -> Matrix {
    product_of(system, &(0..system.len()).collect::<Vec<_>>())
}

/// P_{i_k} ⋯ P_{i_1} for the given index order (first index applied first).
pub fn product_of(system: &SubspaceSystem, indices: &[usize]) -> Matrix {
    let d = system.ambient_dim();
    indices.iter().fold(Matrix::identity(d, d), |acc, &i| {
        system.projector(i).matrix() * acc
    })
}

/// Runs x_n = P_{i_n} x_{n−1}. Cyclic schedules record once per full pass,
/// other schedules once per projection.
pub fn iterate_vector(
    system: &SubspaceSystem,
    x0: &Vector,
    schedule: &IndexSchedule,
    n_max: usize,
) -> Result<ConvergenceTrace> {
    if x0.len() != system.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: system.ambient_dim(),
            found: x0.len(),
        });
    }
    if schedule.count() != system.len() {
        return Err(Error::InvalidParameter(format!(
            "schedule is for {} subspaces, system has {}",
            schedule.count(),
            system.len()
        )));
    }
    let target = system.intersection_projector().matrix() * x0;
    let mut x = x0.clone();
    let mut trace = ConvergenceTrace::new(TraceKind::Vector);
    match schedule.kind() {
        ScheduleKind::Cyclic => {
            let t = cyclic_operator(system);
            for n in 1..=n_max {
                x = &t * x;
                trace.records.push(TraceRecord {
                    n,
                    error: (&x - &target).norm(),
                });
            }
        }
        _ => {
            for (step, i) in schedule.iter().take(n_max).enumerate() {
                x = system.projector(i).matrix() * x;
                trace.records.push(TraceRecord {
                    n: step + 1,
                    error: (&x - &target).norm(),
                });
            }
        }
    }
    Ok(trace)
}

/// e_n = ‖T^n − P_M‖ for n = 1..n_max, by repeated multiplication.
///
/// For n ∈ {1, 2} the values are compared with (Q_N ⋯ Q₁)^n built from the
/// reduced subspaces; a mismatch beyond `check_tol` is a numerical failure.
pub fn operator_error_norms(system: &SubspaceSystem, n_max: usize) -> Result<ConvergenceTrace> {
    let t = cyclic_operator(system);
    let pm = system.intersection_projector().matrix();
    let mut power = t.clone();
    let mut trace = ConvergenceTrace::new(TraceKind::Operator);
    for n in 1..=n_max {
        if n > 1 {
            power = &t * power;
        }
        trace.records.push(TraceRecord {
            n,
            error: operator_norm(&(&power - pm)),
        });
    }

    let d = system.ambient_dim();
    let q = system
        .reduced()
        .iter()
        .fold(Matrix::identity(d, d), |acc, r| r.projector().into_matrix() * acc);
    let mut q_power = q.clone();
    let tol = system.tolerance().check_tol;
    for n in 1..=n_max.min(2) {
        if n > 1 {
            q_power = &q * q_power;
        }
        let reduced = operator_norm(&q_power);
        let direct = trace.records[n - 1].error;
        if (reduced - direct).abs() > tol {
            return Err(Error::Numerical(format!(
                "‖T^{n} − P_M‖ = {direct} but the reduced product gives {reduced}"
            )));
        }
    }
    Ok(trace)
}

/// γ(I − T) = min ‖(I − T)y‖ over unit y ∈ M^⊥ (the kernel of I − T is M).
pub fn reduced_min_modulus(system: &SubspaceSystem) -> Result<f64> {
    let complement = system.intersection_complement()?;
    if complement.is_zero() {
        return Err(Error::Undefined(
            "reduced minimum modulus: M^⊥ = {0}".into(),
        ));
    }
    let d = system.ambient_dim();
    restricted_min_singular(&(Matrix::identity(d, d) - cyclic_operator(system)), complement.basis())
}

/// ‖P_{i_k} ⋯ P_{i_1} − P_M‖.
pub fn random_product_norm(system: &SubspaceSystem, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("index list is empty".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= system.len()) {
        return Err(Error::InvalidParameter(format!(
            "index {bad} out of range for {} subspaces",
            system.len()
        )));
    }
    let value = operator_norm(&(product_of(system, indices) - system.intersection_projector().matrix()));
    if value > 1.0 + system.tolerance().check_tol {
        return Err(Error::Numerical(format!(
            "product of projections has norm {value} > 1"
        )));
    }
    Ok(value)
}

/// Smallest slack in the chain
/// ‖u_{j−1} − u_j‖² ≤ ‖u_{j−1}‖² − ‖Tx − P_Mx‖² ≤ ‖x − P_Mx‖² − ‖Tx − P_Mx‖²
/// over j = 1..N, where u_j = P_j ⋯ P₁x − P_Mx and u₀ = x − P_Mx.
pub fn lemma4_slack(system: &SubspaceSystem, x: &Vector) -> f64 {
    let pmx = system.intersection_projector().matrix() * x;
    let tx = cyclic_operator(system) * x;
    let tail = (&tx - &pmx).norm_squared();
    let u0 = x - &pmx;
    let mut prev = u0.clone();
    let mut partial = x.clone();
    let mut slack = f64::INFINITY;
    for p in system.projectors() {
        partial = p.matrix() * partial;
        let u = &partial - &pmx;
        let middle = prev.norm_squared() - tail;
        slack = slack
            .min(middle - (&prev - &u).norm_squared())
            .min(u0.norm_squared() - tail - middle);
        prev = u;
    }
    slack
}

/// A positive sequence a_n decreasing to 0, indexed from n = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlowSequence {
    /// a_n = (n + 2)^(−p)
    Power(f64),
    /// a_n = 1 / log(n + 2)
    Log,
    Explicit(Vec<f64>),
}

impl SlowSequence {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            SlowSequence::Power(p) => ((n + 2) as f64).powf(-p),
            SlowSequence::Log => 1.0 / ((n + 2) as f64).ln(),
            SlowSequence::Explicit(v) => v[n - 1],
        }
    }

    /// Values a_1..a_horizon after validation: finite, nonnegative and
    /// nonincreasing over the second half of the horizon.
    pub fn values(&self, horizon: usize) -> Result<Vec<f64>> {
        if let SlowSequence::Power(p) = self {
            if !(*p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "power decay exponent must be positive, got {p}"
                )));
            }
        }
        if let SlowSequence::Explicit(v) = self {
            if v.len() < horizon {
                return Err(Error::InvalidParameter(format!(
                    "sequence has {} terms, horizon is {horizon}",
                    v.len()
                )));
            }
        }
        let values: Vec<f64> = (1..=horizon).map(|n| self.value(n)).collect();
        if values.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidParameter(
                "sequence terms must be finite and nonnegative".into(),
            ));
        }
        if values[horizon / 2..].windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "sequence tail is not nonincreasing".into(),
            ));
        }
        Ok(values)
    }
}

/// Result of the finite-horizon slow-convergence construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowProbe {
    pub x: Vec<f64>,
    pub norm: f64,
    pub norm_budget: f64,
    pub success: bool,
    pub achieved_horizon: usize,
    pub trace: ConvergenceTrace,
}

/// Builds x in the tilted-pairs system with angles `angles` such that
/// ‖T^n x − P_M x‖ ≥ a_n for n ≤ horizon, subject to
/// ‖x‖ ≤ sup_n a_n + `norm_slack`.
///
/// Block k contributes α_k u_k with u_k = (cos θ_k, sin θ_k) ∈ M₂, so that
/// ‖T^n u_k‖ = cos^{2n} θ_k and ‖T^n x‖² = Σ α_k² cos^{4n} θ_k. Coefficients
/// are assigned greedily in n: a deficit at step n is charged to the block
/// that decays slowest, which is the cheapest choice for that step and all
/// later ones. The construction stops at the first step the norm budget
/// cannot pay for.
pub fn slow_vector_probe(
    angles: &[f64],
    seq: &SlowSequence,
    horizon: usize,
    norm_slack: f64,
) -> Result<SlowProbe> {
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(norm_slack > 0.0) {
        return Err(Error::InvalidParameter("norm slack must be positive".into()));
    }
    let system = tilted_pairs_from_angles(angles)?;
    let a = seq.values(horizon)?;
    let sup = a.iter().copied().fold(0.0, f64::max);
    let budget = sup + norm_slack;

    let rates: Vec<f64> = angles.iter().map(|t| t.cos().powi(2)).collect();
    let slowest = (0..rates.len())
        .max_by(|&i, &j| rates[i].total_cmp(&rates[j]))
        .expect("at least one block");

    // squared coefficients
    let mut beta = vec![0.0; angles.len()];
    let mut achieved = horizon;
    for n in 1..=horizon {
        let power = |r: f64| r.powi(2 * n as i32);
        let have: f64 = beta.iter().zip(&rates).map(|(b, &r)| b * power(r)).sum();
        let need = a[n - 1] * a[n - 1] * (1.0 + 1e-9);
        if have >= need {
            continue;
        }
        let mut next = beta.clone();
        next[slowest] += (need - have) / power(rates[slowest]);
        if next.iter().sum::<f64>().sqrt() > budget {
            achieved = n - 1;
            break;
        }
        beta = next;
    }
    if beta.iter().all(|&b| b == 0.0) {
        // nothing to dominate yet: any vector works, take a unit one
        beta[slowest] = if achieved > 0 { 1.0f64.min(budget * budget) } else { budget * budget };
    }

    let d = system.ambient_dim();
    let mut x = Vector::zeros(d);
    for (k, (&b, &t)) in beta.iter().zip(angles).enumerate() {
        let alpha = b.sqrt();
        x[2 * k] = alpha * t.cos();
        x[2 * k + 1] = alpha * t.sin();
    }
    let mut trace = iterate_vector(&system, &x, &IndexSchedule::cyclic(2)?, horizon)?;
    for r in trace.records.iter().take(achieved) {
        if r.error < a[r.n - 1] {
            return Err(Error::Numerical(format!(
                "probe vector misses a_{} ({} < {})",
                r.n,
                r.error,
                a[r.n - 1]
            )));
        }
    }
    trace.add_bound("a_n", |n| a[n - 1]);
    Ok(SlowProbe {
        norm: x.norm(),
        x: x.iter().copied().collect(),
        norm_budget: budget,
        success: achieved == horizon,
        achieved_horizon: achieved,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angles::friedrichs_number;
    use crate::corpus::{example3, random_system, two_lines, AngleRule};
    use crate::subspace::Subspace;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_3;

    fn axes() -> SubspaceSystem {
        SubspaceSystem::new(
            (0..3)
                .map(|i| Subspace::coordinate(format!("e{i}"), 3, &[i]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cyclic_schedule_order() {
        let s = IndexSchedule::cyclic(3).unwrap();
        assert_eq!(s.take(7), vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn explicit_schedule_validation() {
        assert!(IndexSchedule::explicit(3, vec![]).is_err());
        assert!(IndexSchedule::explicit(3, vec![0, 3]).is_err());
        let s = IndexSchedule::explicit(3, vec![2, 0]).unwrap();
        assert_eq!(s.take(5), vec![2, 0, 2, 0, 2]);
    }

    #[test]
    fn random_schedule_is_seeded_and_in_range() {
        let a = IndexSchedule::random(4, 11).unwrap().take(200);
        let b = IndexSchedule::random(4, 11).unwrap().take(200);
        assert_eq!(a, b);
        assert!(a.iter().all(|&i| i < 4));
        assert_ne!(a, IndexSchedule::random(4, 12).unwrap().take(200));
    }

    #[test]
    fn covering_blocks_contain_every_index() {
        for window in [3, 5] {
            let s = IndexSchedule::random_covering(3, 5, window).unwrap();
            let seq = s.take(window * 40);
            for block in seq.chunks(window) {
                for i in 0..3 {
                    assert!(block.contains(&i), "{block:?}");
                }
            }
        }
        assert!(IndexSchedule::random_covering(3, 0, 2).is_err());
    }

    #[test]
    fn cyclic_operator_examples() {
        let e1 = Subspace::coordinate("e1", 2, &[0]).unwrap();
        let e2 = Subspace::coordinate("e2", 2, &[1]).unwrap();
        let sys = SubspaceSystem::new(vec![e1.clone(), e2]).unwrap();
        assert_eq!(cyclic_operator(&sys), Matrix::zeros(2, 2));

        let same = SubspaceSystem::new(vec![e1.clone(), e1]).unwrap();
        assert_abs_diff_eq!(cyclic_operator(&same), same.projector(0).matrix().clone(), epsilon = 1e-15);

        let ex = example3(12).unwrap();
        let t = cyclic_operator(&ex);
        assert!(operator_norm(&t) < 1.0);
    }

    #[test]
    fn cyclic_order_applies_first_projector_first() {
        let sys = two_lines(FRAC_PI_3).unwrap();
        let expected = sys.projector(1).matrix() * sys.projector(0).matrix();
        assert_abs_diff_eq!(cyclic_operator(&sys), expected, epsilon = 1e-15);
    }

    #[test]
    fn vector_in_intersection_stays_fixed() {
        let sys = crate::corpus::common_core(5, &[3, 3], 1, 2).unwrap();
        let x = sys.intersection().basis().column(0).into_owned() * 2.5;
        let trace = iterate_vector(&sys, &x, &IndexSchedule::cyclic(2).unwrap(), 10).unwrap();
        assert!(trace.errors().iter().all(|&e| e < 1e-12));
    }

    #[test]
    fn two_lines_vector_rate() {
        // x0 = e2: P1 e2 = 0, so pick x0 = u = (cos θ, sin θ) ∈ M2 whose error
        // after n passes is cos^{2n} θ, below the operator envelope cos^{2n−1} θ
        let t = FRAC_PI_3;
        let sys = two_lines(t).unwrap();
        let x = Vector::from_column_slice(&[t.cos(), t.sin()]);
        let trace = iterate_vector(&sys, &x, &IndexSchedule::cyclic(2).unwrap(), 10).unwrap();
        for r in &trace.records {
            assert_abs_diff_eq!(r.error, t.cos().powi(2 * r.n as i32), epsilon = 1e-14);
            assert!(r.error <= t.cos().powi(2 * r.n as i32 - 1) + 1e-14);
        }
        let e2 = Vector::from_column_slice(&[0.0, 1.0]);
        let trace = iterate_vector(&sys, &e2, &IndexSchedule::cyclic(2).unwrap(), 3).unwrap();
        assert!(trace.errors().iter().all(|&e| e < 1e-15));
    }

    #[test]
    fn random_covering_schedule_converges_on_example() {
        let sys = example3(12).unwrap();
        let x = Vector::from_fn(12, |i, _| 1.0 + i as f64);
        let s = IndexSchedule::random_covering(3, 17, 3).unwrap();
        let trace = iterate_vector(&sys, &x, &s, 500).unwrap();
        assert!(trace.final_error().unwrap() <= 1e-6);
        assert!(trace.is_nonincreasing(1e-12));
    }

    #[test]
    fn iterate_rejects_mismatched_inputs() {
        let sys = axes();
        assert!(iterate_vector(&sys, &Vector::zeros(2), &IndexSchedule::cyclic(3).unwrap(), 1).is_err());
        assert!(iterate_vector(&sys, &Vector::zeros(3), &IndexSchedule::cyclic(2).unwrap(), 1).is_err());
    }

    #[test]
    fn operator_norms_two_lines_match_cosine_powers() {
        let t = 0.4;
        let sys = two_lines(t).unwrap();
        let trace = operator_error_norms(&sys, 12).unwrap();
        for r in &trace.records {
            assert_abs_diff_eq!(r.error, t.cos().powi(2 * r.n as i32 - 1), epsilon = 1e-8);
        }
    }

    #[test]
    fn operator_norms_orthogonal_system_vanish() {
        let trace = operator_error_norms(&axes(), 3).unwrap();
        assert!(trace.errors().iter().all(|&e| e < 1e-15));
    }

    #[test]
    fn operator_norms_example_below_main_bound() {
        let sys = example3(12).unwrap();
        let c = friedrichs_number(&sys).unwrap();
        let trace = operator_error_norms(&sys, 300).unwrap();
        assert!(trace.is_nonincreasing(1e-10));
        for r in &trace.records {
            let bound = (1.0 - ((1.0 - c) / 12.0).powi(2)).powf(r.n as f64 / 2.0);
            assert!(r.error <= bound + 1e-9);
        }
    }

    #[test]
    fn reduced_min_modulus_examples() {
        assert_abs_diff_eq!(reduced_min_modulus(&axes()).unwrap(), 1.0, epsilon = 1e-12);
        let plane = Subspace::full("R2", 2);
        let sys = SubspaceSystem::new(vec![plane.clone(), plane]).unwrap();
        assert!(matches!(reduced_min_modulus(&sys), Err(Error::Undefined(_))));
        let line = Subspace::coordinate("e1", 2, &[0]).unwrap();
        let sys = SubspaceSystem::new(vec![line.clone(), line]).unwrap();
        assert_abs_diff_eq!(reduced_min_modulus(&sys).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn reduced_min_modulus_two_lines_against_circle_grid() {
        let sys = two_lines(FRAC_PI_3).unwrap();
        let a = Matrix::identity(2, 2) - cyclic_operator(&sys);
        let steps = (std::f64::consts::PI / 1e-4) as usize;
        let grid = (0..steps)
            .map(|i| {
                let phi = i as f64 * 1e-4;
                (&a * Vector::from_column_slice(&[phi.cos(), phi.sin()])).norm()
            })
            .fold(f64::INFINITY, f64::min);
        let gamma = reduced_min_modulus(&sys).unwrap();
        assert!(gamma <= grid + 1e-12);
        assert!(grid - gamma < 1e-7);
    }

    #[test]
    fn random_product_norm_examples() {
        let sys = example3(12).unwrap();
        let t = operator_norm(&(cyclic_operator(&sys) - sys.intersection_projector().matrix()));
        assert_abs_diff_eq!(random_product_norm(&sys, &[0, 1, 2]).unwrap(), t, epsilon = 1e-14);
        let twice = random_product_norm(&sys, &[0, 1, 2, 0, 1, 2]).unwrap();
        assert!(twice <= t + 1e-12);

        let line = Subspace::coordinate("e1", 2, &[0]).unwrap();
        let sys = SubspaceSystem::new(vec![line.clone(), line]).unwrap();
        assert!(random_product_norm(&sys, &[1]).unwrap() < 1e-15);
        assert!(random_product_norm(&sys, &[]).is_err());
        assert!(random_product_norm(&sys, &[2]).is_err());
    }

    #[test]
    fn lemma4_holds_on_random_draws() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..20 {
            let sys = random_system(6, &[3, 4, 2], seed).unwrap();
            let x = Vector::from_fn(6, |_, _| StandardNormal.sample(&mut rng));
            assert!(lemma4_slack(&sys, &x) >= -1e-8);
        }
    }

    #[test]
    fn slow_sequence_values() {
        assert_abs_diff_eq!(SlowSequence::Power(0.5).value(2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(SlowSequence::Log.value(1), 1.0 / 3f64.ln(), epsilon = 1e-15);
        assert!(SlowSequence::Power(-1.0).values(5).is_err());
        assert!(SlowSequence::Explicit(vec![1.0; 3]).values(5).is_err());
        assert!(SlowSequence::Explicit(vec![-1.0; 5]).values(5).is_err());
        assert!(SlowSequence::Explicit(vec![1.0, 1.0, 0.1, 0.2, 0.3]).values(5).is_err());
    }

    #[test]
    fn probe_zero_sequence_succeeds_trivially() {
        let probe = slow_vector_probe(&[0.5, 0.25], &SlowSequence::Explicit(vec![0.0; 20]), 20, 1.0).unwrap();
        assert!(probe.success);
        assert_eq!(probe.achieved_horizon, 20);
        assert_abs_diff_eq!(probe.norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn probe_inverse_k_family_power_decay() {
        let angles = AngleRule::InverseK.angles(60).unwrap();
        let seq = SlowSequence::Power(0.5);
        let probe = slow_vector_probe(&angles, &seq, 100, 1.0).unwrap();
        assert!(probe.success);
        assert!(probe.norm <= probe.norm_budget);
        // independent check: iterate the returned vector directly
        let sys = tilted_pairs_from_angles(&angles).unwrap();
        let x = Vector::from_vec(probe.x.clone());
        let trace = iterate_vector(&sys, &x, &IndexSchedule::cyclic(2).unwrap(), 100).unwrap();
        for r in &trace.records {
            assert!(r.error >= seq.value(r.n));
        }
    }

    #[test]
    fn probe_single_block_log_decay_fails() {
        let seq = SlowSequence::Log;
        let probe = slow_vector_probe(&[1.0], &seq, 100, 1.0).unwrap();
        assert!(!probe.success);
        assert!(probe.achieved_horizon < 100);
        assert!(slow_vector_probe(&[1.0], &seq, 0, 1.0).is_err());
    }
}
