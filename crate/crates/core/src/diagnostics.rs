//! Measured quantities checked against the convergence bounds, and the
//! finite-dimensional dichotomy verdict.
//!
//! Every check reports a margin so near-violations stay visible. For an
//! upper bound the margin is `min (bound − measured)`, for a lower bound
//! `min (measured − bound)`, and for an equality `−max |measured − bound|`.
//! Inequalities involving the inclination ℓ use the endpoint of its certified
//! interval that keeps the inequality valid.

use serde::{Deserialize, Serialize};

use crate::angles::{
    configuration_constant, friedrichs_number, inclination, inclination_bounds,
    pairwise_dixmier_reduced, prefix_friedrichs, InclinationBudget,
};
use crate::dynamics::{
    cyclic_operator, operator_error_norms, random_product_norm, reduced_min_modulus,
    ConvergenceTrace,
};
use crate::error::{Error, Result};
use crate::numerics::operator_norm;
use crate::subspace::SubspaceSystem;

/// Margin below which a system is flagged as close to the slow regime.
pub const NEAR_ASC_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Upper,
    Lower,
    Equality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub kind: BoundKind,
    /// Measured values, one per n for series checks.
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    pub margin: f64,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundEntry {
    fn new(
        name: &str,
        kind: BoundKind,
        measured: Vec<f64>,
        bound: Vec<f64>,
        system: &SubspaceSystem,
    ) -> Self {
        let pairs = measured.iter().zip(&bound);
        let margin = match kind {
            BoundKind::Upper => pairs.map(|(m, b)| b - m).fold(f64::INFINITY, f64::min),
            BoundKind::Lower => pairs.map(|(m, b)| m - b).fold(f64::INFINITY, f64::min),
            BoundKind::Equality => -pairs.map(|(m, b)| (m - b).abs()).fold(0.0, f64::max),
        };
        Self {
            name: name.to_string(),
            kind,
            measured,
            bound,
            margin,
            satisfied: margin >= -system.tolerance().check_tol,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub degenerate: bool,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn entry(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }
}

/// (1 − ((1 − c)/(4N))²)^{n/2}
pub fn cor_main_bound(c: f64, n_subspaces: usize, n: usize) -> f64 {
    let q = (1.0 - c) / (4.0 * n_subspaces as f64);
    (1.0 - q * q).powf(n as f64 / 2.0)
}

/// c_{1N}^{n−1} ∏_{i<N} c_{i,i+1}^n from a table of reduced Dixmier numbers.
pub fn dehu_bound(table: &[Vec<f64>], n: usize) -> f64 {
    let m = table.len();
    let chain: f64 = (0..m - 1).map(|i| table[i][i + 1].powi(n as i32)).product();
    table[0][m - 1].powi(n as i32 - 1) * chain
}

/// The two chained upper bounds for c in terms of c_j = c(M₁ ∩ … ∩ M_{j−1}, M_j):
/// `1 − (1/(N−1)) ∏ (1 − √((c_j + 1)/2))²` and the coarser
/// `1 − (1/((N−1) 16^{N−1})) ∏ (1 − c_j)²`, which follows factor by factor
/// from `1 − √((1 + c)/2) ≥ (1 − c)/4`.
pub fn estimc_bounds(prefix: &[f64]) -> (f64, f64) {
    let n1 = prefix.len() as f64;
    let fine: f64 = prefix
        .iter()
        .map(|c| (1.0 - ((c + 1.0) / 2.0).sqrt()).powi(2))
        .product();
    let coarse: f64 = prefix.iter().map(|c| (1.0 - c).powi(2)).product();
    (
        1.0 - fine / n1,
        1.0 - coarse / (n1 * 16f64.powi(prefix.len() as i32)),
    )
}

/// ‖(P₂P₁)ⁿ − P_M‖ against c^{2n−1}; an equality for pairs.
pub fn kw_check(system: &SubspaceSystem, n_max: usize) -> Result<BoundEntry> {
    if system.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "the pair identity needs exactly 2 subspaces, got {}",
            system.len()
        )));
    }
    let c = friedrichs_number(system)?;
    let trace = operator_error_norms(system, n_max)?;
    let bound = (1..=n_max).map(|n| c.powi(2 * n as i32 - 1)).collect();
    Ok(BoundEntry::new("KW", BoundKind::Equality, trace.errors(), bound, system))
}

pub fn cor_main_check(system: &SubspaceSystem, n_max: usize) -> Result<BoundEntry> {
    if system.is_degenerate() {
        return Err(Error::Degenerate(
            "every subspace equals the intersection".into(),
        ));
    }
    let c = friedrichs_number(system)?;
    let trace = operator_error_norms(system, n_max)?;
    let bound = (1..=n_max).map(|n| cor_main_bound(c, system.len(), n)).collect();
    Ok(BoundEntry::new("corMain", BoundKind::Upper, trace.errors(), bound, system))
}

pub fn dehu_check(system: &SubspaceSystem, n_max: usize) -> Result<BoundEntry> {
    let table = pairwise_dixmier_reduced(system);
    let trace = operator_error_norms(system, n_max)?;
    let bound: Vec<f64> = (1..=n_max).map(|n| dehu_bound(&table, n)).collect();
    let tol = system.tolerance().check_tol;
    let entry = BoundEntry::new("DeHu", BoundKind::Upper, trace.errors(), bound, system);
    if entry.bound.iter().all(|&b| b >= 1.0 - tol) {
        Ok(entry.with_note("uninformative: the bound equals 1 for every n"))
    } else {
        Ok(entry)
    }
}

/// Both chained estimates of c; returns the fine entry then the coarse one.
pub fn estimc_check(system: &SubspaceSystem) -> Result<[BoundEntry; 2]> {
    let c = friedrichs_number(system)?;
    let (fine, coarse) = estimc_bounds(&prefix_friedrichs(system)?);
    Ok([
        BoundEntry::new("estimC", BoundKind::Upper, vec![c], vec![fine], system),
        BoundEntry::new("estimC_coarse", BoundKind::Upper, vec![c], vec![coarse], system),
    ])
}

/// ‖T − P_M‖ ≤ √(1 − ℓ²/N²) with ℓ replaced by its certified lower bound.
pub fn eq_norm_check(system: &SubspaceSystem) -> Result<BoundEntry> {
    let n = system.len() as f64;
    let (lower, _) = inclination_bounds(system.len(), configuration_constant(system));
    let measured = operator_norm(&(cyclic_operator(system) - system.intersection_projector().matrix()));
    let bound = (1.0 - lower * lower / (n * n)).sqrt();
    Ok(BoundEntry::new("eqNorm", BoundKind::Upper, vec![measured], vec![bound], system))
}

/// ℓ²/(2N²) ≤ γ(I − T) ≤ (2^N − 1)ℓ, using the certified lower end of ℓ on
/// the left and the best certified upper end on the right. The optimizer
/// value is an attained objective value, hence an upper bound for ℓ too.
pub fn eq_qua_check(system: &SubspaceSystem, budget: &InclinationBudget) -> Result<[BoundEntry; 2]> {
    let n = system.len();
    let gamma = reduced_min_modulus(system)?;
    let est = inclination(system, budget)?;
    let ell_up = est.upper.min(est.estimate);
    let low = est.lower * est.lower / (2.0 * (n * n) as f64);
    let high = ((1u64 << n) - 1) as f64 * ell_up;
    Ok([
        BoundEntry::new("eqQua_lower", BoundKind::Lower, vec![gamma], vec![low], system),
        BoundEntry::new("eqQua_upper", BoundKind::Upper, vec![gamma], vec![high], system),
    ])
}

/// ‖P_{i_k} ⋯ P_{i_1} − P_M‖ ≤ √(1 − ℓ²/k²) for an index list covering every
/// subspace (0-based indices).
pub fn remark_k_check(system: &SubspaceSystem, indices: &[usize]) -> Result<BoundEntry> {
    for j in 0..system.len() {
        if !indices.contains(&j) {
            return Err(Error::InvalidParameter(format!(
                "index list does not cover subspace {}",
                j + 1
            )));
        }
    }
    let measured = random_product_norm(system, indices)?;
    let (lower, _) = inclination_bounds(system.len(), configuration_constant(system));
    let k = indices.len() as f64;
    let bound = (1.0 - lower * lower / (k * k)).sqrt();
    Ok(BoundEntry::new("remarkK", BoundKind::Upper, vec![measured], vec![bound], system))
}

/// Every applicable check. Degenerate systems get the checks that stay
/// meaningful (KW, DeHu, estimC) and the degenerate flag.
pub fn bound_report(system: &SubspaceSystem, n_max: usize, budget: &InclinationBudget) -> Result<BoundReport> {
    let mut entries = Vec::new();
    if system.len() == 2 {
        entries.push(kw_check(system, n_max)?);
    }
    let degenerate = system.is_degenerate();
    if !degenerate {
        entries.push(cor_main_check(system, n_max)?);
    }
    entries.push(dehu_check(system, n_max)?);
    entries.extend(estimc_check(system)?);
    if !degenerate {
        entries.push(eq_norm_check(system)?);
        entries.extend(eq_qua_check(system, budget)?);
        let forward = 0..system.len();
        let indices: Vec<usize> = forward.clone().chain(forward.rev()).collect();
        entries.push(remark_k_check(system, &indices)?);
    }
    Ok(BoundReport { degenerate, entries })
}

/// Operator errors ‖Tⁿ − P_M‖ with the corMain, DeHu and (for pairs) KW
/// curves attached.
pub fn bound_trace(system: &SubspaceSystem, n_max: usize) -> Result<ConvergenceTrace> {
    let mut trace = operator_error_norms(system, n_max)?;
    let c = friedrichs_number(system)?;
    let n_sub = system.len();
    if !system.is_degenerate() {
        trace.add_bound("corMain", |n| cor_main_bound(c, n_sub, n));
    }
    let table = pairwise_dixmier_reduced(system);
    trace.add_bound("DeHu", |n| dehu_bound(&table, n));
    if n_sub == 2 {
        trace.add_bound("KW", |n| c.powi(2 * n as i32 - 1));
    }
    Ok(trace)
}

/// Finite-dimensional summary: uniform convergence always holds, with the
/// quantitative margin 1 − c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyVerdict {
    pub c: f64,
    pub kappa: f64,
    pub t_norm: f64,
    pub gamma: f64,
    pub inclination_lower: f64,
    pub inclination_upper: f64,
    pub verdict: String,
    pub margin: f64,
    pub near_asc: bool,
    pub note: String,
}

pub fn dichotomy_report(system: &SubspaceSystem) -> Result<DichotomyVerdict> {
    if system.is_degenerate() {
        return Err(Error::Degenerate(
            "every subspace equals the intersection".into(),
        ));
    }
    let n = system.len() as f64;
    let tol = system.tolerance().check_tol;
    let c = friedrichs_number(system)?;
    let kappa = configuration_constant(system);
    let t_norm = operator_norm(&(cyclic_operator(system) - system.intersection_projector().matrix()));
    let gamma = reduced_min_modulus(system)?;
    let (lower, upper) = inclination_bounds(system.len(), kappa);

    let norm_bound = (1.0 - lower * lower / (n * n)).sqrt();
    let gamma_bound = lower * lower / (2.0 * n * n);
    let web = [
        (c < 1.0, "c < 1"),
        (t_norm <= norm_bound + tol, "‖T − P_M‖ within its inclination bound"),
        (norm_bound < 1.0, "inclination bound on ‖T − P_M‖ below 1"),
        (gamma >= gamma_bound - tol, "γ(I − T) above its inclination bound"),
        (gamma > 0.0, "γ(I − T) > 0"),
    ];
    if let Some((_, what)) = web.iter().find(|(ok, _)| !ok) {
        return Err(Error::Numerical(format!("consistency check failed: {what}")));
    }
    let margin = 1.0 - c;
    let near_asc = margin < NEAR_ASC_MARGIN;
    let mut note = String::from(
        "finite dimension: c < 1, so the cyclic iterates converge uniformly; \
         arbitrarily slow convergence needs c → 1 along a family",
    );
    if near_asc {
        note.push_str("; near-ASC: 1 − c is below 1e-3");
    }
    Ok(DichotomyVerdict {
        c,
        kappa,
        t_norm,
        gamma,
        inclination_lower: lower,
        inclination_upper: upper,
        verdict: "QUC".to_string(),
        margin,
        near_asc,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{example3, random_system, two_lines};
    use crate::subspace::Subspace;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn axes() -> SubspaceSystem {
        SubspaceSystem::new(
            (0..3)
                .map(|i| Subspace::coordinate(format!("e{i}"), 3, &[i]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn kw_two_lines() {
        let e = kw_check(&two_lines(FRAC_PI_3).unwrap(), 10).unwrap();
        assert!(e.margin >= -1e-8);
        assert!(e.satisfied);
        let e = kw_check(&two_lines(FRAC_PI_2).unwrap(), 10).unwrap();
        assert!(e.measured.iter().chain(&e.bound).all(|v| v.abs() < 1e-15));
        assert!(kw_check(&axes(), 3).is_err());
    }

    #[test]
    fn kw_random_pairs_in_r10() {
        for seed in 0..20 {
            let sys = random_system(10, &[4, 6], seed).unwrap();
            assert!(kw_check(&sys, 10).unwrap().margin >= -1e-8, "seed {seed}");
        }
    }

    #[test]
    fn cor_main_example() {
        let e = cor_main_check(&example3(12).unwrap(), 300).unwrap();
        assert!(e.satisfied && e.margin > 0.0);
        assert_abs_diff_eq!(e.bound[0], (1.0 - (0.5f64 / 12.0).powi(2)).sqrt(), epsilon = 1e-9);
        let e = cor_main_check(&axes(), 5).unwrap();
        assert!(e.measured[0] < 1e-15);
        let line = Subspace::coordinate("e1", 2, &[0]).unwrap();
        let same = SubspaceSystem::new(vec![line.clone(), line]).unwrap();
        assert!(matches!(cor_main_check(&same, 3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn dehu_example_is_uninformative() {
        let e = dehu_check(&example3(12).unwrap(), 50).unwrap();
        assert!(e.bound.iter().all(|&b| (b - 1.0).abs() < 1e-9));
        assert!(e.measured.iter().all(|&m| m < 1.0));
        assert!(e.note.is_some());
        let e = dehu_check(&axes(), 5).unwrap();
        assert!(e.bound.iter().all(|&b| b < 1e-15));
        assert!(e.satisfied && e.note.is_none());
    }

    #[test]
    fn dehu_bound_exponents() {
        let table = vec![vec![1.0, 0.5, 0.25], vec![0.5, 1.0, 0.8], vec![0.25, 0.8, 1.0]];
        assert_abs_diff_eq!(dehu_bound(&table, 1), 0.5 * 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(dehu_bound(&table, 3), 0.25f64.powi(2) * 0.4f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn estimc_formulas() {
        // orthogonal axes: c_j = 0 for both prefixes
        let [fine, coarse] = estimc_check(&axes()).unwrap();
        let expected = 1.0 - 0.5 * (1.0 - 0.5f64.sqrt()).powi(4);
        assert_abs_diff_eq!(fine.bound[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(coarse.bound[0], 1.0 - 1.0 / 512.0, epsilon = 1e-12);
        assert!(fine.satisfied && coarse.satisfied);
        let (f, c) = estimc_bounds(&[0.3, 1.0]);
        assert_eq!((f, c), (1.0, 1.0));
    }

    #[test]
    fn estimc_fine_bound_is_sharper() {
        for a in [0.0, 0.2, 0.5, 0.9, 1.0] {
            for b in [0.0, 0.4, 0.99] {
                let (f, c) = estimc_bounds(&[a, b]);
                assert!(f <= c + 1e-15, "{a} {b}");
            }
        }
    }

    #[test]
    fn estimc_random_triples() {
        for seed in 0..20 {
            let sys = random_system(9, &[4, 4, 4], seed).unwrap();
            let [fine, coarse] = estimc_check(&sys).unwrap();
            assert!(fine.satisfied && coarse.satisfied, "seed {seed}");
        }
    }

    #[test]
    fn norm_and_modulus_checks_on_example() {
        let sys = example3(12).unwrap();
        assert!(eq_norm_check(&sys).unwrap().satisfied);
        let [lo, hi] = eq_qua_check(&sys, &InclinationBudget::default()).unwrap();
        assert!(lo.satisfied && hi.satisfied);
        let e = remark_k_check(&sys, &[0, 1, 2, 2, 0]).unwrap();
        assert!(e.satisfied);
        assert!(remark_k_check(&sys, &[0, 1]).is_err());
    }

    #[test]
    fn report_contents() {
        let budget = InclinationBudget::default();
        let r = bound_report(&two_lines(FRAC_PI_3).unwrap(), 10, &budget).unwrap();
        assert!(r.entry("KW").is_some() && r.all_satisfied());
        let r = bound_report(&example3(12).unwrap(), 20, &budget).unwrap();
        assert!(r.entry("KW").is_none());
        assert!(r.all_satisfied());
        let line = Subspace::coordinate("e1", 2, &[0]).unwrap();
        let same = SubspaceSystem::new(vec![line.clone(), line]).unwrap();
        let r = bound_report(&same, 5, &budget).unwrap();
        assert!(r.degenerate);
        assert!(r.entry("corMain").is_none() && r.entry("DeHu").is_some());
    }

    #[test]
    fn trace_carries_curves() {
        let t = bound_trace(&two_lines(0.7).unwrap(), 5).unwrap();
        let names: Vec<&str> = t.bounds.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, ["corMain", "DeHu", "KW"]);
        assert!(t.bounds.iter().all(|b| b.values.len() == 5));
    }

    #[test]
    fn verdicts() {
        let v = dichotomy_report(&example3(12).unwrap()).unwrap();
        assert_eq!(v.verdict, "QUC");
        assert_abs_diff_eq!(v.margin, 0.5, epsilon = 1e-9);
        assert!(!v.near_asc);

        let v = dichotomy_report(&two_lines(0.01).unwrap()).unwrap();
        assert_abs_diff_eq!(v.margin, 1.0 - 0.01f64.cos(), epsilon = 1e-9);
        assert!(v.near_asc && v.note.contains("near-ASC"));

        let v = dichotomy_report(&axes()).unwrap();
        assert_abs_diff_eq!(v.margin, 1.0, epsilon = 1e-12);
        assert!(v.t_norm < 1e-15);
    }
}
