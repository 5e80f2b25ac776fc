//! Peripheral point spectrum of a channel and the eigen-machinery around it.
//!
//! All spectral work happens on the Heisenberg superoperator. Eigenvalues
//! with `||λ| − 1| ≤ tol_peripheral` are peripheral; eigenvalues closer than
//! [`CLUSTER_RADIUS`] are one cluster. Spectral projectors are built from
//! right and left null spaces of `S − λI`, which requires the cluster to be
//! semisimple; a singular cluster Gram matrix is reported as an error.

use serde::Serialize;

use crate::channel::{KrausChannel, Picture, Superoperator};
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64};

pub const DEFAULT_TOL_PERIPHERAL: f64 = 1e-7;
/// Eigenvalue equality radius, used everywhere two eigenvalues are compared.
pub const CLUSTER_RADIUS: f64 = 1e-7;
/// Relative singular-value cut for null spaces of `S − λI`.
pub const DEFAULT_TOL_NULL: f64 = 1e-8;
/// Cluster Gram matrices with a smaller (relative) singular value are singular.
pub const GRAM_SINGULAR_TOL: f64 = 1e-8;
pub const DEFAULT_ALMOST_PERIOD_NMAX: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeripheralEigenvalue {
    #[serde(serialize_with = "crate::report::serialize_complex")]
    pub lambda: C64,
    pub geometric_multiplicity: usize,
    pub algebraic_multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeripheralSpectrum {
    pub eigenvalues: Vec<PeripheralEigenvalue>,
    pub tol_peripheral: f64,
}

/// `E_λ(τ)`: an HS-orthonormal basis of `{x : τ(x) = λx}`.
#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub lambda: C64,
    pub basis: Vec<CMatrix>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub lambda: C64,
    pub matrix: CMatrix,
    pub idempotency_residual: f64,
    /// False when `λ` is not a peripheral eigenvalue; `matrix` is then zero.
    pub peripheral: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimplicityEntry {
    #[serde(serialize_with = "crate::report::serialize_complex")]
    pub lambda: C64,
    pub geometric_multiplicity: usize,
    pub algebraic_multiplicity: usize,
    pub semisimple: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemisimplicityReport {
    pub entries: Vec<SemisimplicityEntry>,
    pub all_semisimple: bool,
}

impl PeripheralSpectrum {
    pub fn lambdas(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|e| e.lambda).collect()
    }

    /// Index of the cluster within [`CLUSTER_RADIUS`] of `value`, if any.
    /// Two matching clusters is a tolerance conflict.
    pub fn find(&self, value: C64) -> Result<Option<usize>> {
        find_cluster(&self.lambdas(), value)
    }

    pub fn total_dimension(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.geometric_multiplicity).sum()
    }
}

pub(crate) fn find_cluster(centers: &[C64], value: C64) -> Result<Option<usize>> {
    let mut hits = centers
        .iter()
        .enumerate()
        .filter(|(_, c)| (**c - value).norm() <= CLUSTER_RADIUS);
    let first = hits.next();
    if let (Some((_, a)), Some((_, b))) = (first, hits.next()) {
        return Err(Error::ToleranceConflict {
            value,
            first: *a,
            second: *b,
        });
    }
    Ok(first.map(|(i, _)| i))
}

/// Argument in `[0, 2π)`, with values within rounding of `2π` folded to 0.
pub fn argument(z: C64) -> f64 {
    let mut a = z.im.atan2(z.re);
    if a < 0.0 {
        a += 2.0 * std::f64::consts::PI;
    }
    if 2.0 * std::f64::consts::PI - a < 1e-12 {
        a = 0.0;
    }
    a
}

pub fn peripheral_spectrum(c: &KrausChannel, tol_peripheral: f64) -> Result<PeripheralSpectrum> {
    peripheral_spectrum_of(&c.superoperator(Picture::Heisenberg), tol_peripheral, DEFAULT_TOL_NULL)
}

pub fn peripheral_spectrum_of(
    s: &Superoperator,
    tol_peripheral: f64,
    tol_null: f64,
) -> Result<PeripheralSpectrum> {
    if !(tol_peripheral > 0.0 && tol_peripheral < 0.5) {
        return Err(Error::Precondition(format!(
            "tol_peripheral must lie in (0, 0.5), got {tol_peripheral}"
        )));
    }
    let all = matrix::eigenvalues(&s.matrix)?;
    let peripheral: Vec<C64> = all
        .into_iter()
        .filter(|v| (v.norm() - 1.0).abs() <= tol_peripheral)
        .collect();
    let n = s.matrix.rows();
    let mut eigenvalues = Vec::new();
    for cluster in matrix::cluster_indices(&peripheral, CLUSTER_RADIUS) {
        let center: C64 =
            cluster.iter().map(|&i| peripheral[i]).sum::<C64>() / cluster.len() as f64;
        let shifted = &s.matrix - &CMatrix::identity(n).scale(center);
        let geometric = matrix::null_space(&shifted, tol_null)?.len();
        eigenvalues.push(PeripheralEigenvalue {
            lambda: center,
            geometric_multiplicity: geometric,
            algebraic_multiplicity: cluster.len(),
        });
    }
    eigenvalues.sort_by(|a, b| argument(a.lambda).total_cmp(&argument(b.lambda)));
    Ok(PeripheralSpectrum {
        eigenvalues,
        tol_peripheral,
    })
}

pub fn eigenspace(c: &KrausChannel, lambda: C64, tol: f64) -> Result<Eigenspace> {
    eigenspace_of(&c.superoperator(Picture::Heisenberg), lambda, tol)
}

pub fn eigenspace_of(s: &Superoperator, lambda: C64, tol: f64) -> Result<Eigenspace> {
    let n = s.matrix.rows();
    let shifted = &s.matrix - &CMatrix::identity(n).scale(lambda);
    let basis: Vec<CMatrix> = matrix::null_space(&shifted, tol)?
        .iter()
        .map(|v| matrix::unvec(v))
        .collect::<Result<_>>()?;
    let residual = eigen_residual(s, lambda, &basis)?;
    Ok(Eigenspace {
        lambda,
        basis,
        residual,
    })
}

/// `max_b ‖τ(b) − λ b‖_HS` over the given matrices.
pub(crate) fn eigen_residual(s: &Superoperator, lambda: C64, basis: &[CMatrix]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for b in basis {
        let tb = s.apply(b)?;
        worst = worst.max((&tb - &b.scale(lambda)).hs_norm());
    }
    Ok(worst)
}

/// `R (L^† R)^{-1} L^†` with `R`, `L` orthonormal bases of the right and left
/// null spaces of `s − λI`. Zero when `λ` is not an eigenvalue.
pub fn biorthogonal_projector(s: &CMatrix, lambda: C64, tol_null: f64) -> Result<CMatrix> {
    let n = s.rows();
    let shift = CMatrix::identity(n).scale(lambda);
    let right = matrix::null_space(&(s - &shift), tol_null)?;
    if right.is_empty() {
        return Ok(CMatrix::zeros(n, n));
    }
    let left = matrix::null_space(&(&s.adjoint() - &shift.adjoint()), tol_null)?;
    if left.len() != right.len() {
        return Err(Error::DefectiveEigenvalue {
            lambda,
            sigma_min: 0.0,
        });
    }
    let r = CMatrix::from_columns(n, &right);
    let l = CMatrix::from_columns(n, &left);
    let gram = &l.adjoint() * &r;
    let sv = gram.singular_values()?;
    let sigma_min = *sv.last().expect("nonempty cluster");
    if sigma_min <= GRAM_SINGULAR_TOL {
        return Err(Error::DefectiveEigenvalue { lambda, sigma_min });
    }
    let inner = gram.solve(&l.adjoint())?;
    Ok(&r * &inner)
}

pub fn spectral_projection(c: &KrausChannel, lambda: C64) -> Result<SpectralProjector> {
    spectral_projection_of(&c.superoperator(Picture::Heisenberg), lambda, DEFAULT_TOL_NULL)
}

pub fn spectral_projection_of(
    s: &Superoperator,
    lambda: C64,
    tol_null: f64,
) -> Result<SpectralProjector> {
    let n = s.matrix.rows();
    let zero = || SpectralProjector {
        lambda,
        matrix: CMatrix::zeros(n, n),
        idempotency_residual: 0.0,
        peripheral: false,
    };
    if (lambda.norm() - 1.0).abs() > DEFAULT_TOL_PERIPHERAL {
        return Ok(zero());
    }
    let p = biorthogonal_projector(&s.matrix, lambda, tol_null)?;
    if p.max_abs() == 0.0 {
        return Ok(zero());
    }
    let idempotency_residual = (&(&p * &p) - &p).op_norm();
    Ok(SpectralProjector {
        lambda,
        matrix: p,
        idempotency_residual,
        peripheral: true,
    })
}

impl SpectralProjector {
    /// Applies the projector to a `d x d` matrix.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        matrix::unvec(&self.matrix.mat_vec(&matrix::vec(x)?))
    }
}

pub fn semisimplicity_report(c: &KrausChannel, tol: f64) -> Result<SemisimplicityReport> {
    let spectrum = peripheral_spectrum_of(
        &c.superoperator(Picture::Heisenberg),
        DEFAULT_TOL_PERIPHERAL,
        tol,
    )?;
    let entries: Vec<SemisimplicityEntry> = spectrum
        .eigenvalues
        .iter()
        .map(|e| SemisimplicityEntry {
            lambda: e.lambda,
            geometric_multiplicity: e.geometric_multiplicity,
            algebraic_multiplicity: e.algebraic_multiplicity,
            semisimple: e.geometric_multiplicity == e.algebraic_multiplicity,
        })
        .collect();
    let all_semisimple = entries.iter().all(|e| e.semisimple);
    Ok(SemisimplicityReport {
        entries,
        all_semisimple,
    })
}

/// Smallest `n` in `1..=n_max` with `max_j |λ_j^n − 1| < epsilon`.
pub fn almost_period(lambdas: &[C64], epsilon: f64, n_max: u64) -> Result<u64> {
    if epsilon <= 0.0 {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    if let Some(bad) = lambdas.iter().find(|l| (l.norm() - 1.0).abs() > 1e-8) {
        return Err(Error::Precondition(format!("{bad} is not unimodular")));
    }
    let mut powers: Vec<C64> = lambdas.to_vec();
    let mut best = (0, f64::INFINITY);
    for n in 1..=n_max {
        let defect = powers
            .iter()
            .map(|p| (p - 1.0).norm())
            .fold(0.0, f64::max);
        if defect < epsilon {
            return Ok(n);
        }
        if defect < best.1 {
            best = (n, defect);
        }
        for (p, l) in powers.iter_mut().zip(lambdas) {
            let next = *p * l;
            *p = next / next.norm();
        }
    }
    Err(Error::AlmostPeriodExhausted {
        n_max,
        best_n: best.0,
        best_defect: best.1,
    })
}
