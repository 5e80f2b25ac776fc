use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix::{cis, CMatrix, C64};

#[derive(Clone, Debug)]
pub struct WeylFixture {
    /// `ω = e^{2πi/d}`.
    pub omega: C64,
    pub v: CMatrix,
    pub u: CMatrix,
    /// `‖VU − ωUV‖`.
    pub relation_defect: f64,
    /// `V^{⊗n}`, predicted to lie in `E_ω`.
    pub eigenvector: CMatrix,
}

/// Clock and shift `(V, U)` on `C^d` with `VU = e^{2πi/d} UV`.
pub fn weyl_pair(d: usize) -> Result<(CMatrix, CMatrix, f64)> {
    if d < 2 {
        return Err(Error::Precondition(format!("Weyl pair needs d ≥ 2, got {d}")));
    }
    let omega = cis(2.0 * std::f64::consts::PI / d as f64);
    let clock = CMatrix::diag(&(0..d).map(|j| omega.powu(j as u32)).collect::<Vec<_>>());
    let shift = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let defect = |v: &CMatrix, u: &CMatrix| (&(v * u) - &(u * v).scale(omega)).op_norm();
    let candidates = [
        (clock.clone(), shift.clone()),
        (shift.clone(), clock.clone()),
        (clock.conj(), shift.clone()),
        (clock, shift.adjoint()),
    ];
    candidates
        .into_iter()
        .map(|(v, u)| {
            let e = defect(&v, &u);
            (v, u, e)
        })
        .find(|(_, _, e)| *e <= 1e-12)
        .ok_or_else(|| Error::Precondition("no orientation of clock and shift satisfies VU = ωUV".into()))
}

fn embed(d: usize, n: usize, j: usize, u: &CMatrix) -> CMatrix {
    let mut out = CMatrix::identity(1);
    for k in 0..n {
        out = if k == j { out.kron(u) } else { out.kron(&CMatrix::identity(d)) };
    }
    out
}

/// `X ↦ Σ_j p_j U_j^† X U_j` on `(C^d)^{⊗n}` with `U_j` the shift on factor `j`.
pub fn weyl_channel(d: usize, n: usize, probs: &[f64]) -> Result<(KrausChannel, WeylFixture)> {
    if n == 0 || probs.len() != n {
        return Err(Error::InvalidProbabilities(format!(
            "expected {n} probabilities, got {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities(format!("probability {p} is not positive")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!("probabilities sum to {total}")));
    }
    let (v, u, relation_defect) = weyl_pair(d)?;
    let kraus = (0..n)
        .map(|j| embed(d, n, j, &u).scale_real(probs[j].sqrt()))
        .collect();
    let channel = KrausChannel::new(kraus, format!("weyl(d={d},n={n})"))?;
    let mut eigenvector = CMatrix::identity(1);
    for _ in 0..n {
        eigenvector = eigenvector.kron(&v);
    }
    Ok((
        channel,
        WeylFixture {
            omega: cis(2.0 * std::f64::consts::PI / d as f64),
            v,
            u,
            relation_defect,
            eigenvector,
        },
    ))
}
