use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64};
use crate::spectral::CLUSTER_RADIUS;

pub const UNITARY_TOL: f64 = 1e-10;

/// Peripheral structure of `X ↦ U^† X U` predicted from the eigenspaces
/// `H_μ` of `U`: matrix units `|h_ν⟩⟨h_μ|` have eigenvalue `conj(ν)·μ`.
#[derive(Clone, Debug)]
pub struct UnitaryFixture {
    /// Eigenvalues `μ` of `U` with multiplicities `n_μ`.
    pub eigenvalues: Vec<(C64, usize)>,
    /// `dim F(τ) = Σ_μ n_μ²`.
    pub fixed_dim: usize,
    /// `(λ, dim E_λ)` with `dim E_λ = Σ_μ n_μ n_{conj(λ)μ}`.
    pub predicted: Vec<(C64, usize)>,
    /// Always `d²`.
    pub total_dim: usize,
}

impl UnitaryFixture {
    pub fn predicted_dim(&self, lambda: C64) -> usize {
        self.predicted
            .iter()
            .find(|(l, _)| (l - lambda).norm() <= CLUSTER_RADIUS)
            .map_or(0, |(_, n)| *n)
    }
}

pub fn unitary_channel(u: &CMatrix) -> Result<(KrausChannel, UnitaryFixture)> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let d = u.rows();
    let defect = (&(&u.adjoint() * u) - &CMatrix::identity(d)).op_norm();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let values = matrix::eigenvalues(u)?;
    let eigenvalues: Vec<(C64, usize)> = matrix::cluster_indices(&values, CLUSTER_RADIUS)
        .into_iter()
        .map(|c| {
            let mean = c.iter().map(|&i| values[i]).sum::<C64>() / c.len() as f64;
            (mean / mean.norm(), c.len())
        })
        .collect();

    let mut predicted: Vec<(C64, usize)> = Vec::new();
    for (nu, n_nu) in &eigenvalues {
        for (mu, n_mu) in &eigenvalues {
            let lambda = nu.conj() * mu;
            match predicted.iter_mut().find(|(l, _)| (*l - lambda).norm() <= CLUSTER_RADIUS) {
                Some(entry) => entry.1 += n_nu * n_mu,
                None => predicted.push((lambda, n_nu * n_mu)),
            }
        }
    }
    predicted.sort_by(|a, b| crate::spectral::argument(a.0).total_cmp(&crate::spectral::argument(b.0)));
    let fixed_dim = eigenvalues.iter().map(|(_, n)| n * n).sum();
    let channel = KrausChannel::new(vec![u.clone()], format!("unitary(d={d})"))?;
    Ok((
        channel,
        UnitaryFixture {
            eigenvalues,
            fixed_dim,
            predicted,
            total_dim: d * d,
        },
    ))
}
