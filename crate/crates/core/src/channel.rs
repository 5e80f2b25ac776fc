//! Unital completely positive maps in Kraus form.
//!
//! The Heisenberg-picture convention is fixed once here:
//! `τ(X) = Σ_i K_i^† X K_i`, unital when `Σ_i K_i^† K_i = I`. With a single
//! Kraus element `U` this is `τ(X) = U^† X U`. The predual (Schrödinger)
//! action is `τ_*(ρ) = Σ_i K_i ρ K_i^†`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64, ONE};
use crate::spectral;

/// Tolerance on `‖Σ K_i^† K_i − I‖` for a channel to count as unital.
pub const UNITALITY_TOL: f64 = 1e-10;

/// Default threshold on the smallest eigenvalue of an invariant state for it
/// to count as faithful.
pub const DEFAULT_FAITHFUL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
    label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Heisenberg,
    Predual,
}

/// Matrix of τ (or τ_*) acting on column-stacked matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
    pub picture: Picture,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub unitality_defect: f64,
    pub pass: bool,
}

/// How the reported invariant state was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    Projection,
    Repaired,
    Search,
}

#[derive(Clone, Debug)]
pub struct InvariantStateReport {
    pub state: Option<CMatrix>,
    pub min_eigenvalue: f64,
    pub faithful: bool,
    pub residual: f64,
    pub source: Option<StateSource>,
    pub faithful_tol: f64,
}

impl KrausChannel {
    /// Builds a channel from Kraus matrices. Only shapes are checked here;
    /// unitality is reported by [`KrausChannel::validate`].
    pub fn new(kraus: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus family"))?;
        if !first.is_square() {
            return Err(Error::NotSquare {
                rows: first.rows(),
                cols: first.cols(),
            });
        }
        let dim = first.rows();
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::ShapeMismatch {
                    expected: format!("{dim}x{dim}"),
                    got: k.shape_str(),
                });
            }
            if !k.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            dim,
            kraus,
            label: label.into(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![CMatrix::identity(dim)],
            label: format!("identity(d={dim})"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> ValidationReport {
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            sum += &(&k.adjoint() * k);
        }
        let defect = (&sum - &CMatrix::identity(self.dim)).op_norm();
        ValidationReport {
            unitality_defect: defect,
            pass: defect <= UNITALITY_TOL,
        }
    }

    fn check_shape(&self, x: &CMatrix) -> Result<()> {
        if x.rows() != self.dim || x.cols() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.dim),
                got: x.shape_str(),
            });
        }
        Ok(())
    }

    /// Heisenberg action `Σ K_i^† x K_i`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_shape(x)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &(&(&k.adjoint() * x) * k);
        }
        Ok(out)
    }

    /// Predual action `Σ K_i ρ K_i^†`.
    pub fn apply_predual(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.check_shape(rho)?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &(&(k * rho) * &k.adjoint());
        }
        Ok(out)
    }

    pub fn superoperator(&self, picture: Picture) -> Superoperator {
        let n = self.dim * self.dim;
        let mut matrix = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let term = match picture {
                Picture::Heisenberg => k.transpose().kron(&k.adjoint()),
                Picture::Predual => k.conj().kron(k),
            };
            matrix += &term;
        }
        Superoperator {
            dim: self.dim,
            matrix,
            picture,
        }
    }

    /// `τ^n(x)` by repeated application of the Heisenberg superoperator.
    pub fn power_apply(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        self.check_shape(x)?;
        if n == 0 {
            return Ok(x.clone());
        }
        self.superoperator(Picture::Heisenberg).power_apply(x, n)
    }

    /// The composite `X ↦ outer(inner(X))`, with Kraus family `{B_j A_i}`
    /// for `inner = {A_i}`, `outer = {B_j}`.
    pub fn compose(outer: &KrausChannel, inner: &KrausChannel) -> Result<KrausChannel> {
        if outer.dim != inner.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("dimension {}", outer.dim),
                got: format!("dimension {}", inner.dim),
            });
        }
        let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
        for b in &outer.kraus {
            for a in &inner.kraus {
                kraus.push(b * a);
            }
        }
        KrausChannel::new(kraus, format!("({})∘({})", outer.label, inner.label))
    }

    /// `τ^k` as a Kraus channel; `k = 0` gives the identity channel.
    pub fn power(&self, k: usize) -> KrausChannel {
        let mut out = KrausChannel::identity(self.dim);
        for _ in 0..k {
            out = KrausChannel::compose(self, &out).expect("same dimension");
        }
        out.with_label(format!("({})^{k}", self.label))
    }

    /// Tensor product channel with Kraus family `{K_i ⊗ L_j}`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|k| other.kraus.iter().map(move |l| k.kron(l)))
            .collect();
        KrausChannel {
            dim: self.dim * other.dim,
            kraus,
            label: format!("{}⊗{}", self.label, other.label),
        }
    }

    /// Invariant state of the predual with a faithfulness verdict.
    ///
    /// The candidate is the spectral projection of `τ_*` at 1 applied to
    /// `I/d` (the Cesàro limit of `τ_*^n(I/d)`), Hermitized and normalized.
    /// Small negative eigenvalues are clipped; if that still fails, the
    /// Hermitian slice of the fixed space is searched for a state that
    /// maximizes the smallest eigenvalue.
    pub fn invariant_state(&self, faithful_tol: f64) -> Result<InvariantStateReport> {
        let d = self.dim;
        let predual = self.superoperator(Picture::Predual);
        let projector = spectral::biorthogonal_projector(
            &predual.matrix,
            ONE,
            spectral::DEFAULT_TOL_NULL,
        )?;
        let seed = matrix::vec(&CMatrix::identity(d).scale_real(1.0 / d as f64))?;
        let candidate = matrix::unvec(&projector.mat_vec(&seed))?.hermitian_part();

        let absent = InvariantStateReport {
            state: None,
            min_eigenvalue: f64::NEG_INFINITY,
            faithful: false,
            residual: f64::INFINITY,
            source: None,
            faithful_tol,
        };

        let finish = |rho: CMatrix, source: StateSource| -> Result<InvariantStateReport> {
            let min_eig = rho.hermitian_eigenvalues()?[0];
            let residual = (&self.apply_predual(&rho)? - &rho).hs_norm();
            Ok(InvariantStateReport {
                state: Some(rho),
                min_eigenvalue: min_eig,
                faithful: min_eig > faithful_tol,
                residual,
                source: Some(source),
                faithful_tol,
            })
        };

        let trace = candidate.trace().re;
        if trace > 1e-10 {
            let rho = candidate.scale_real(1.0 / trace);
            let (vals, vecs) = rho.hermitian_eigen()?;
            if vals[0] >= -1e-10 {
                return finish(rho, StateSource::Projection);
            }
            if vals[0] >= -1e-8 {
                let repaired = clip_negative(&vals, &vecs);
                let t = repaired.trace().re;
                let repaired = repaired.scale_real(1.0 / t);
                if (&self.apply_predual(&repaired)? - &repaired).hs_norm() <= 1e-8 {
                    return finish(repaired, StateSource::Repaired);
                }
            }
        }

        let fixed = matrix::null_space(
            &(&predual.matrix - &CMatrix::identity(d * d)),
            spectral::DEFAULT_TOL_NULL,
        )?;
        let fixed: Vec<CMatrix> = fixed
            .iter()
            .map(|v| matrix::unvec(v))
            .collect::<Result<_>>()?;
        match search_fixed_state(&fixed)? {
            Some(rho) => finish(rho, StateSource::Search),
            None => Ok(absent),
        }
    }
}

fn clip_negative(vals: &[f64], vecs: &CMatrix) -> CMatrix {
    let clipped: Vec<C64> = vals.iter().map(|v| C64::new(v.max(0.0), 0.0)).collect();
    &(vecs * &CMatrix::diag(&clipped)) * &vecs.adjoint()
}

/// Maximizes the smallest eigenvalue over trace-one Hermitian combinations of
/// the given matrices by projected supergradient ascent. Returns a state (PSD
/// up to `1e-10`, trace one) or `None` when the slice admits none.
pub(crate) fn search_fixed_state(span: &[CMatrix]) -> Result<Option<CMatrix>> {
    let Some(first) = span.first() else {
        return Ok(None);
    };
    let d = first.rows();
    // Real-orthonormal Hermitian generators of the slice.
    let mut raw: Vec<CMatrix> = Vec::new();
    for b in span {
        raw.push(b.hermitian_part());
        raw.push(b.scale(C64::new(0.0, -1.0)).hermitian_part());
    }
    let mut herm: Vec<CMatrix> = Vec::new();
    for h in raw {
        let mut rest = h;
        for q in &herm {
            let c = q.hs_inner(&rest).re;
            rest = &rest - &q.scale_real(c);
        }
        let n = rest.hs_norm();
        if n > 1e-10 {
            herm.push(rest.scale_real(1.0 / n));
        }
    }
    let traces: Vec<f64> = herm.iter().map(|h| h.trace().re).collect();
    let t2: f64 = traces.iter().map(|t| t * t).sum();
    if t2 < 1e-20 {
        return Ok(None);
    }

    let combine = |c: &[f64]| -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        for (ci, h) in c.iter().zip(&herm) {
            m += &h.scale_real(*ci);
        }
        m
    };

    let mut coeffs: Vec<f64> = traces.iter().map(|t| t / t2).collect();
    let mut best = (f64::NEG_INFINITY, coeffs.clone());
    for iter in 0..2000 {
        let rho = combine(&coeffs);
        let (vals, vecs) = rho.hermitian_eigen()?;
        if vals[0] > best.0 {
            best = (vals[0], coeffs.clone());
        }
        let v = vecs.column(0);
        let mut grad: Vec<f64> = herm
            .iter()
            .map(|h| matrix::vec_inner(&v, &h.mat_vec(&v)).re)
            .collect();
        let along: f64 = grad.iter().zip(&traces).map(|(g, t)| g * t).sum::<f64>() / t2;
        for (g, t) in grad.iter_mut().zip(&traces) {
            *g -= along * t;
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let step = 0.5 / (1.0 + iter as f64).sqrt() / gnorm;
        for (c, g) in coeffs.iter_mut().zip(&grad) {
            *c += step * g;
        }
    }
    if best.0 < -1e-10 {
        return Ok(None);
    }
    let rho = combine(&best.1);
    let (vals, vecs) = rho.hermitian_eigen()?;
    let rho = clip_negative(&vals, &vecs);
    let t = rho.trace().re;
    Ok(Some(rho.scale_real(1.0 / t)))
}

impl Superoperator {
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        matrix::unvec(&self.matrix.mat_vec(&matrix::vec(x)?))
    }

    pub fn power_apply(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        let mut v = matrix::vec(x)?;
        for _ in 0..n {
            v = self.matrix.mat_vec(&v);
        }
        matrix::unvec(&v)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(matrix::eigenvalues(&self.matrix)?
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::matrix::I;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn pauli_x() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub(crate) fn pauli_z() -> CMatrix {
        CMatrix::diag(&[ONE, -ONE])
    }

    pub(crate) fn dephasing() -> KrausChannel {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        KrausChannel::new(
            vec![CMatrix::identity(2).scale_real(s), pauli_z().scale_real(s)],
            "dephasing",
        )
        .unwrap()
    }

    pub(crate) fn unitary(u: CMatrix) -> KrausChannel {
        KrausChannel::new(vec![u], "unitary").unwrap()
    }

    /// Non-faithful channel on M_3: a Z-conjugation on the block {0, 1}, with
    /// level 2 leaking into level 0 at rate γ.
    pub(crate) fn leaky(gamma: f64) -> KrausChannel {
        let mut k1 = CMatrix::zeros(3, 3);
        k1.set(0, 0, ONE);
        k1.set(1, 1, -ONE);
        let k2 = CMatrix::unit(3, 0, 2).scale_real(gamma.sqrt());
        let k3 = CMatrix::unit(3, 2, 2).scale_real((1.0 - gamma).sqrt());
        KrausChannel::new(vec![k1, k2, k3], "leaky").unwrap()
    }

    /// Random unital channel `X ↦ Σ p_i U_i^† X U_i` with Haar-ish unitaries
    /// from QR of Gaussian matrices (here via the polar factor).
    pub(crate) fn random_unital(d: usize, m: usize, seed: u64) -> KrausChannel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kraus = Vec::new();
        let weights: Vec<f64> = (1..=m).map(|i| i as f64).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            let g = CMatrix::random_gaussian(d, d, &mut rng);
            let (vals, vecs) = (&g.adjoint() * &g).hermitian_eigen().unwrap();
            let inv_sqrt: Vec<C64> = vals.iter().map(|v| C64::new(v.powf(-0.5), 0.0)).collect();
            let u = &g * &(&(&vecs * &CMatrix::diag(&inv_sqrt)) * &vecs.adjoint());
            kraus.push(u.scale_real((w / total).sqrt()));
        }
        KrausChannel::new(kraus, format!("random-unital(d={d},m={m},seed={seed})")).unwrap()
    }

    #[test]
    fn validate_examples() {
        let r = KrausChannel::identity(2).validate();
        assert!(r.pass && r.unitality_defect == 0.0);
        let r = dephasing().validate();
        assert!(r.pass && r.unitality_defect < 1e-15);
        let half = KrausChannel::new(vec![CMatrix::identity(2).scale_real(0.5)], "half").unwrap();
        let r = half.validate();
        assert!(!r.pass);
        assert!((r.unitality_defect - 0.75).abs() < 1e-15);
    }

    #[test]
    fn new_rejects_mixed_shapes() {
        assert!(KrausChannel::new(vec![], "empty").is_err());
        assert!(KrausChannel::new(vec![CMatrix::identity(2), CMatrix::identity(3)], "bad").is_err());
        assert!(KrausChannel::new(vec![CMatrix::zeros(2, 3)], "bad").is_err());
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CMatrix::random_gaussian(3, 3, &mut rng);
        assert_eq!(KrausChannel::identity(3).apply(&x).unwrap(), x);
        assert!(dephasing().apply(&pauli_x()).unwrap().max_abs() < 1e-15);
        let z = unitary(pauli_z());
        assert_eq!(z.apply(&pauli_z()).unwrap(), pauli_z());
        assert!(z.apply(&CMatrix::identity(3)).is_err());
    }

    #[test]
    fn superoperator_examples() {
        let id = KrausChannel::identity(2);
        for pic in [Picture::Heisenberg, Picture::Predual] {
            assert_eq!(id.superoperator(pic).matrix, CMatrix::identity(4));
        }
        // U = diag(1, i): E_ab ↦ conj(μ_a) μ_b E_ab gives {1, 1, i, −i}
        let ch = unitary(CMatrix::diag(&[ONE, I]));
        let mut ev = matrix::eigenvalues(&ch.superoperator(Picture::Heisenberg).matrix).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap().then(a.re.partial_cmp(&b.re).unwrap()));
        let expect = [-I, ONE, ONE, I];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn heisenberg_and_predual_are_hs_adjoint() {
        let ch = random_unital(3, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = CMatrix::random_gaussian(3, 3, &mut rng);
        let rho = CMatrix::random_gaussian(3, 3, &mut rng);
        let lhs = (&ch.apply(&a).unwrap().adjoint() * &rho).trace();
        let rhs = (&a.adjoint() * &ch.apply_predual(&rho).unwrap()).trace();
        assert!((lhs - rhs).norm() < 1e-10);
        let s = ch.superoperator(Picture::Heisenberg).matrix;
        let sp = ch.superoperator(Picture::Predual).matrix;
        assert!((&s.adjoint() - &sp).max_abs() < 1e-12);
    }

    #[test]
    fn power_apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = CMatrix::random_gaussian(2, 2, &mut rng);
        let ch = random_unital(2, 2, 3);
        assert_eq!(ch.power_apply(&x, 0).unwrap(), x);
        for n in 1..4 {
            assert!(dephasing().power_apply(&pauli_x(), n).unwrap().max_abs() < 1e-15);
        }
        let z = unitary(pauli_z());
        assert!((&z.power_apply(&pauli_x(), 1).unwrap() + &pauli_x()).max_abs() < 1e-15);
        assert!((&z.power_apply(&pauli_x(), 2).unwrap() - &pauli_x()).max_abs() < 1e-15);
    }

    #[test]
    fn power_channel_matches_repeated_application() {
        let ch = random_unital(3, 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = CMatrix::random_gaussian(3, 3, &mut rng);
        let p3 = ch.power(3);
        assert_eq!(p3.num_kraus(), 8);
        let direct = ch.power_apply(&x, 3).unwrap();
        assert!((&p3.apply(&x).unwrap() - &direct).max_abs() < 1e-12);
        assert!(ch.power(0).apply(&x).unwrap() == x);
    }

    #[test]
    fn invariant_state_examples() {
        let u = unitary(CMatrix::diag(&[ONE, I, -ONE]));
        let r = u.invariant_state(DEFAULT_FAITHFUL_TOL).unwrap();
        let rho = r.state.unwrap();
        assert!((&rho - &CMatrix::identity(3).scale_real(1.0 / 3.0)).max_abs() < 1e-10);
        assert!(r.faithful);

        // K = {|0⟩⟨0|, |0⟩⟨1|}: everything flows to |0⟩⟨0|.
        let k1 = CMatrix::unit(2, 0, 0);
        let k2 = CMatrix::unit(2, 0, 1);
        let ch = KrausChannel::new(vec![k1, k2], "reset").unwrap();
        assert!(ch.validate().pass);
        let r = ch.invariant_state(DEFAULT_FAITHFUL_TOL).unwrap();
        let rho = r.state.unwrap();
        assert!((&rho - &CMatrix::unit(2, 0, 0)).max_abs() < 1e-10);
        assert!(!r.faithful);
        assert!(r.residual <= 1e-8);

        let r = dephasing().invariant_state(DEFAULT_FAITHFUL_TOL).unwrap();
        assert!((&r.state.unwrap() - &CMatrix::identity(2).scale_real(0.5)).max_abs() < 1e-10);
        assert!(r.faithful);
        assert_eq!(r.source, Some(StateSource::Projection));
    }

    #[test]
    fn fixed_state_search_finds_a_state() {
        // Off-diagonal generators only: the slice contains no state.
        let off = vec![CMatrix::unit(2, 0, 1)];
        assert!(search_fixed_state(&off).unwrap().is_none());

        let span = vec![CMatrix::unit(2, 0, 0), CMatrix::unit(2, 1, 1), CMatrix::unit(2, 0, 1)];
        let rho = search_fixed_state(&span).unwrap().unwrap();
        assert!((rho.trace() - ONE).norm() < 1e-10);
        let min = rho.hermitian_eigenvalues().unwrap()[0];
        assert!(min > 0.4, "search should approach the maximally mixed state, got {min}");
    }

    #[test]
    fn tensor_examples() {
        let idid = KrausChannel::identity(2).tensor(&KrausChannel::identity(3));
        assert_eq!(idid.dim(), 6);
        assert_eq!(idid.kraus()[0], CMatrix::identity(6));
        let uz = unitary(pauli_z()).tensor(&unitary(pauli_x()));
        assert_eq!(uz.kraus(), &[pauli_z().kron(&pauli_x())]);
        let r = random_unital(2, 2, 1).tensor(&random_unital(3, 2, 2)).validate();
        assert!(r.pass, "defect {}", r.unitality_defect);
    }
}
