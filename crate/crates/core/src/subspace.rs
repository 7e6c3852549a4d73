//! Subspaces, orthogonal projectors and systems of N subspaces.

use crate::error::{Error, Result};
use crate::numerics::{
    column_space, dominant_left_singular_vectors, operator_norm, orthonormality_defect,
    orthonormalize, principal_eigenspace, top_eigenvectors, Matrix, TolerancePolicy,
};

/// A linear subspace of ℝ^d, stored as an orthonormal basis (d × k).
///
/// The spanning vectors the subspace was built from are kept so that a
/// system can be written back out and re-read to the same bits.
#[derive(Debug, Clone)]
pub struct Subspace {
    name: String,
    basis: Matrix,
    generators: Vec<Vec<f64>>,
}

impl Subspace {
    /// Subspace spanned by `vectors` (not necessarily independent).
    ///
    /// Generators that are already orthonormal to rounding level are kept
    /// as the basis verbatim, so exact inputs such as coordinate axes stay
    /// exact.
    pub fn from_vectors(
        name: impl Into<String>,
        dim: usize,
        vectors: Vec<Vec<f64>>,
        tol: &TolerancePolicy,
    ) -> Result<Self> {
        let basis = match exact_orthonormal(dim, &vectors) {
            Some(b) => b,
            None => orthonormalize(dim, &vectors, tol)?,
        };
        Ok(Self {
            name: name.into(),
            basis,
            generators: vectors,
        })
    }

    /// Wraps a matrix with orthonormal columns.
    pub fn from_basis(name: impl Into<String>, basis: Matrix, tol: &TolerancePolicy) -> Result<Self> {
        if basis.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "ambient dimension must be at least 1".into(),
            ));
        }
        crate::numerics::ensure_finite(&basis)?;
        let defect = orthonormality_defect(&basis);
        if defect > tol.check_tol {
            return Err(Error::NotOrthonormal(defect));
        }
        let generators = basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        Ok(Self {
            name: name.into(),
            basis,
            generators,
        })
    }

    pub fn zero(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            basis: Matrix::zeros(dim, 0),
            generators: Vec::new(),
        }
    }

    pub fn full(name: impl Into<String>, dim: usize) -> Self {
        let basis = Matrix::identity(dim, dim);
        let generators = basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        Self {
            name: name.into(),
            basis,
            generators,
        }
    }

    /// Span of the standard basis vectors with the given (0-based) indices.
    pub fn coordinate(name: impl Into<String>, dim: usize, indices: &[usize]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= dim {
                return Err(Error::InvalidParameter(format!(
                    "coordinate index {i} out of range for dimension {dim}"
                )));
            }
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            vectors.push(v);
        }
        Self::from_vectors(name, dim, vectors, &TolerancePolicy::default())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    /// P = B·Bᵀ.
    pub fn projector(&self) -> Projector {
        Projector(&self.basis * self.basis.transpose())
    }

    /// Basis of ker(Bᵀ), of dimension d − k.
    pub fn orthogonal_complement(&self, tol: &TolerancePolicy) -> Result<Subspace> {
        let d = self.ambient_dim();
        let k = self.dim();
        let name = format!("{}^perp", self.name);
        if k == 0 {
            return Ok(Subspace::full(name, d));
        }
        if k == d {
            return Ok(Subspace::zero(name, d));
        }
        let complement = Matrix::identity(d, d) - self.projector().into_matrix();
        let basis = top_eigenvectors(&complement, d - k, tol)?;
        Subspace::from_basis(name, basis, tol)
    }

    /// ‖(I − P)v‖ for the projector P onto this subspace.
    pub fn distance(&self, v: &crate::numerics::Vector) -> f64 {
        let coeffs = self.basis.transpose() * v;
        (v - &self.basis * coeffs).norm()
    }
}

/// An orthogonal projector (symmetric, idempotent).
#[derive(Debug, Clone, PartialEq)]
pub struct Projector(Matrix);

impl Projector {
    /// Validates symmetry and idempotence within `check_tol`.
    pub fn from_matrix(m: Matrix, tol: &TolerancePolicy) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let skew = operator_norm(&(&m - m.transpose()));
        if skew > tol.check_tol {
            return Err(Error::NotSymmetric(skew));
        }
        let idem = operator_norm(&(&m * &m - &m));
        if idem > tol.check_tol {
            return Err(Error::Numerical(format!(
                "matrix is not idempotent (defect {idem:.3e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

fn exact_orthonormal(dim: usize, vectors: &[Vec<f64>]) -> Option<Matrix> {
    if dim == 0 || vectors.is_empty() || vectors.iter().any(|v| v.len() != dim) {
        return None;
    }
    let b = Matrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
    if !b.iter().all(|x| x.is_finite()) {
        return None;
    }
    let gram = b.transpose() * &b - Matrix::identity(b.ncols(), b.ncols());
    (gram.amax() <= 4.0 * f64::EPSILON).then_some(b)
}

/// Intersection of a list of subspaces of a common ambient space.
///
/// Computed as the eigenvalue-1 eigenspace of the average projector.
pub fn intersect(subspaces: &[Subspace], tol: &TolerancePolicy) -> Result<Subspace> {
    let first = subspaces
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot intersect an empty list".into()))?;
    let d = first.ambient_dim();
    if subspaces.len() == 1 {
        return Ok(first.clone().with_name("M"));
    }
    if subspaces.iter().any(Subspace::is_zero) {
        return Ok(Subspace::zero("M", d));
    }
    let mut avg = Matrix::zeros(d, d);
    for s in subspaces {
        avg += s.projector().into_matrix();
    }
    avg /= subspaces.len() as f64;
    let basis = principal_eigenspace(&avg, 1.0, tol)?;
    let m = Subspace::from_basis("M", basis, tol)?;
    for s in subspaces {
        let leak = operator_norm(&(m.basis() - s.projector().matrix() * m.basis()));
        if leak > tol.check_tol {
            return Err(Error::Numerical(format!(
                "intersection basis leaves {} by {leak:.3e}",
                s.name()
            )));
        }
    }
    Ok(m)
}

/// N ≥ 2 subspaces of a common ℝ^d, together with their intersection M and
/// the reduced subspaces M_j ∩ M^⊥. Everything is computed on construction.
#[derive(Debug, Clone)]
pub struct SubspaceSystem {
    ambient_dim: usize,
    subspaces: Vec<Subspace>,
    projectors: Vec<Projector>,
    intersection: Subspace,
    intersection_projector: Projector,
    reduced: Vec<Subspace>,
    tol: TolerancePolicy,
}

impl SubspaceSystem {
    pub fn new(subspaces: Vec<Subspace>) -> Result<Self> {
        Self::with_tolerance(subspaces, TolerancePolicy::default())
    }

    pub fn with_tolerance(subspaces: Vec<Subspace>, tol: TolerancePolicy) -> Result<Self> {
        if subspaces.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a system needs at least 2 subspaces, got {}",
                subspaces.len()
            )));
        }
        let d = subspaces[0].ambient_dim();
        for s in &subspaces {
            if s.ambient_dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.ambient_dim(),
                });
            }
        }
        let projectors: Vec<Projector> = subspaces.iter().map(Subspace::projector).collect();
        let intersection = intersect(&subspaces, &tol)?;
        let intersection_projector = intersection.projector();
        let reduced = reduce_subspaces(&subspaces, &intersection, &intersection_projector, &tol)?;
        Ok(Self {
            ambient_dim: d,
            subspaces,
            projectors,
            intersection,
            intersection_projector,
            reduced,
            tol,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Number of subspaces N.
    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn projector(&self, j: usize) -> &Projector {
        &self.projectors[j]
    }

    pub fn intersection(&self) -> &Subspace {
        &self.intersection
    }

    pub fn intersection_projector(&self) -> &Projector {
        &self.intersection_projector
    }

    /// The subspaces M_j ∩ M^⊥.
    pub fn reduced(&self) -> &[Subspace] {
        &self.reduced
    }

    pub fn tolerance(&self) -> &TolerancePolicy {
        &self.tol
    }

    /// True when every M_j equals M, so every reduced subspace is {0}.
    pub fn is_degenerate(&self) -> bool {
        self.reduced.iter().all(Subspace::is_zero)
    }

    /// (P₁ + … + P_N)/N.
    pub fn average_projector(&self) -> Matrix {
        let d = self.ambient_dim;
        let mut avg = Matrix::zeros(d, d);
        for p in &self.projectors {
            avg += p.matrix();
        }
        avg / self.len() as f64
    }

    /// The system (M₁ ∩ M^⊥, …, M_N ∩ M^⊥); its intersection is {0}.
    pub fn reduce_mod_intersection(&self) -> Result<SubspaceSystem> {
        let reduced = SubspaceSystem::with_tolerance(self.reduced.clone(), self.tol)?;
        if !reduced.intersection().is_zero() {
            return Err(Error::Numerical(format!(
                "reduced system has a {}-dimensional intersection",
                reduced.intersection().dim()
            )));
        }
        Ok(reduced)
    }

    /// Orthogonal complement of M.
    pub fn intersection_complement(&self) -> Result<Subspace> {
        self.intersection.orthogonal_complement(&self.tol)
    }
}

fn reduce_subspaces(
    subspaces: &[Subspace],
    m: &Subspace,
    pm: &Projector,
    tol: &TolerancePolicy,
) -> Result<Vec<Subspace>> {
    let d = m.ambient_dim();
    let away = Matrix::identity(d, d) - pm.matrix();
    subspaces
        .iter()
        .map(|s| {
            let name = format!("{}~", s.name());
            // M ⊆ M_j, so the reduced dimension is known exactly
            let k = s.dim().checked_sub(m.dim()).ok_or_else(|| {
                Error::Numerical(format!("intersection is larger than {}", s.name()))
            })?;
            if k == 0 {
                return Ok(Subspace::zero(name, d));
            }
            let basis = dominant_left_singular_vectors(&(&away * s.basis()), k);
            let reduced = Subspace::from_basis(name, basis, tol)?;
            let leak = operator_norm(&(pm.matrix() * reduced.basis()));
            if leak > tol.check_tol {
                return Err(Error::Numerical(format!(
                    "reduced {} is not orthogonal to M ({leak:.3e})",
                    s.name()
                )));
            }
            Ok(reduced)
        })
        .collect()
}

/// Orthonormal basis of the span of the columns of `a`, as a subspace.
pub fn span_of_columns(name: impl Into<String>, a: &Matrix, tol: &TolerancePolicy) -> Result<Subspace> {
    Subspace::from_basis(name, column_space(a, tol), tol)
}
