//! The peripheral Poisson boundary: the product `∘` on the span of peripheral
//! eigenvectors, decompositions into eigencomponents, and verifiers for the
//! structural identities of `(span E(τ), ∘)`.
//!
//! For `x ∈ E_λ`, `y ∈ E_μ` the product is `x∘y = P_{λμ}(xy)` where `P_{λμ}`
//! is the spectral projector of `τ` at `λμ` (zero when `λμ` is not a
//! peripheral eigenvalue). Cesàro averages and the un-averaged sequence
//! `(λμ)^{-n} τ^n(xy)` are provided as independent checks.

use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{KrausChannel, Picture, Superoperator};
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64, ONE, ZERO};
use crate::report::{Check, VerificationReport};
use crate::spectral::{self, Eigenspace, PeripheralSpectrum, SpectralProjector};

/// Relative eigenspace residual accepted for product inputs.
pub const PRECONDITION_TOL: f64 = 1e-6;
/// Relative reconstruction defect above which a matrix is not in span E(τ).
pub const SPAN_TOL: f64 = 1e-6;
/// Smallest admissible eigenvalue of the combined-basis Gram matrix.
pub const GRAM_MIN_EIGENVALUE: f64 = 1e-10;

#[derive(Debug)]
pub struct PeripheralBoundary {
    channel: KrausChannel,
    superop: Superoperator,
    pub spectrum: PeripheralSpectrum,
    /// One entry per peripheral eigenvalue, in spectrum order. Each basis is
    /// HS-orthonormal; the basis of `E_1` starts with `I/√d`.
    pub spaces: Vec<Eigenspace>,
    pub projectors: Vec<SpectralProjector>,
    /// Concatenated eigenspace bases; `(cluster index, matrix)`.
    pub combined_basis: Vec<(usize, CMatrix)>,
    pub gram_min_eigenvalue: f64,
    unit_cluster: usize,
    cesaro_cache: Mutex<Vec<(C64, usize, CMatrix)>>,
}

/// A matrix in span E(τ) together with its eigencomponents.
#[derive(Clone, Debug)]
pub struct BoundaryElement {
    pub matrix: CMatrix,
    /// `(λ, x_λ)` for every peripheral eigenvalue, in spectrum order.
    pub components: Vec<(C64, CMatrix)>,
}

/// Structure constants of `∘` on the combined basis:
/// `x_a ∘ x_b = Σ_e constants[a][b][e] x_e`.
#[derive(Clone, Debug, Serialize)]
pub struct ProductTable {
    pub labels: Vec<String>,
    #[serde(skip)]
    pub eigenvalues: Vec<C64>,
    #[serde(skip)]
    pub constants: Vec<Vec<Vec<C64>>>,
    pub unit_index: usize,
    /// The identity is `unit_scale · x_{unit_index}`.
    pub unit_scale: f64,
    /// Largest HS defect of expanding a product in its graded target space.
    pub grading_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitTrace {
    /// `‖(λμ)^{-n} τ^n(xy) − x∘y‖_op` for `n = 0..=n_max`.
    pub distances: Vec<f64>,
    /// Geometric decay rate fitted to the tail of `distances`, if it has at
    /// least two entries above the noise floor.
    pub decay_rate: Option<f64>,
    /// Largest modulus among non-peripheral eigenvalues.
    pub subperipheral_radius: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn sum_matrices(d: usize, parts: impl IntoIterator<Item = CMatrix>) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    for p in parts {
        out += &p;
    }
    out
}

impl PeripheralBoundary {
    pub fn new(c: &KrausChannel) -> Result<Self> {
        let superop = c.superoperator(Picture::Heisenberg);
        let spectrum = spectral::peripheral_spectrum_of(
            &superop,
            spectral::DEFAULT_TOL_PERIPHERAL,
            spectral::DEFAULT_TOL_NULL,
        )?;
        let d = c.dim();
        let mut spaces = Vec::new();
        let mut projectors = Vec::new();
        for e in &spectrum.eigenvalues {
            let mut space = spectral::eigenspace_of(&superop, e.lambda, spectral::DEFAULT_TOL_NULL)?;
            projectors.push(spectral::spectral_projection_of(
                &superop,
                e.lambda,
                spectral::DEFAULT_TOL_NULL,
            )?);
            if (e.lambda - ONE).norm() <= spectral::CLUSTER_RADIUS {
                space.basis = lead_with_identity(d, &space.basis)?;
                space.residual = spectral::eigen_residual(&superop, e.lambda, &space.basis)?;
            }
            spaces.push(space);
        }
        let unit_cluster = spectrum
            .find(ONE)?
            .ok_or_else(|| Error::Precondition("1 is not a peripheral eigenvalue".into()))?;

        let combined_basis: Vec<(usize, CMatrix)> = spaces
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.basis.iter().map(move |b| (i, b.clone())))
            .collect();
        let n = combined_basis.len();
        let gram = CMatrix::from_fn(n, n, |a, b| combined_basis[a].1.hs_inner(&combined_basis[b].1));
        let gram_min_eigenvalue = gram.hermitian_eigenvalues()?.first().copied().unwrap_or(1.0);
        if gram_min_eigenvalue <= GRAM_MIN_EIGENVALUE {
            return Err(Error::Precondition(format!(
                "peripheral eigenvectors are numerically dependent (Gram min eigenvalue {gram_min_eigenvalue:e})"
            )));
        }
        Ok(Self {
            channel: c.clone(),
            superop,
            spectrum,
            spaces,
            projectors,
            combined_basis,
            gram_min_eigenvalue,
            unit_cluster,
            cesaro_cache: Mutex::new(Vec::new()),
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.superop
    }

    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    pub fn dimension(&self) -> usize {
        self.combined_basis.len()
    }

    pub fn lambdas(&self) -> Vec<C64> {
        self.spectrum.lambdas()
    }

    /// Cluster index of a peripheral eigenvalue.
    pub fn cluster_of(&self, lambda: C64) -> Result<Option<usize>> {
        self.spectrum.find(lambda)
    }

    /// Basis of `E_λ`; empty when `λ` is not a peripheral eigenvalue.
    pub fn space(&self, lambda: C64) -> Result<&[CMatrix]> {
        Ok(match self.cluster_of(lambda)? {
            Some(i) => &self.spaces[i].basis,
            None => &[],
        })
    }

    /// `E_1 = F(τ)`.
    pub fn fixed_space(&self) -> &[CMatrix] {
        &self.spaces[self.unit_cluster].basis
    }

    /// `‖τ(x) − λx‖_op`.
    pub fn residual(&self, x: &CMatrix, lambda: C64) -> Result<f64> {
        Ok((&self.channel.apply(x)? - &x.scale(lambda)).op_norm())
    }

    fn check_member(&self, name: &str, x: &CMatrix, lambda: C64) -> Result<()> {
        let r = self.residual(x, lambda)?;
        let allowed = PRECONDITION_TOL * x.op_norm().max(1e-300);
        if r > allowed {
            return Err(Error::Precondition(format!(
                "{name} is not in E_{lambda}: residual ‖τ({name}) − λ{name}‖ = {r:e} exceeds {allowed:e}"
            )));
        }
        Ok(())
    }

    /// `x∘y = P_{λμ}(xy)` without membership checks.
    fn project_product(&self, x: &CMatrix, lambda: C64, y: &CMatrix, mu: C64) -> Result<CMatrix> {
        match self.spectrum.find(lambda * mu)? {
            Some(i) => self.projectors[i].apply(&(x * y)),
            None => Ok(CMatrix::zeros(self.dim(), self.dim())),
        }
    }

    /// `x∘y` for `x ∈ E_λ`, `y ∈ E_μ` by the spectral projector at `λμ`.
    pub fn peripheral_product(&self, x: &CMatrix, lambda: C64, y: &CMatrix, mu: C64) -> Result<CMatrix> {
        self.check_member("x", x, lambda)?;
        self.check_member("y", y, mu)?;
        self.project_product(x, lambda, y, mu)
    }

    /// `Σ_{n<N} A^n` with `A = κ^{-1} S`, by binary doubling; cached per `(κ, N)`.
    fn cesaro_sum(&self, kappa: C64, n_terms: usize) -> CMatrix {
        let mut cache = self.cesaro_cache.lock().expect("cache lock");
        if let Some((_, _, m)) = cache.iter().find(|(k, n, _)| *k == kappa && *n == n_terms) {
            return m.clone();
        }
        let a = self.superop.matrix.scale(ONE / kappa);
        let dim = a.rows();
        let mut power = CMatrix::identity(dim);
        let mut sum = CMatrix::zeros(dim, dim);
        for bit in (0..usize::BITS - n_terms.leading_zeros()).rev() {
            sum = &sum + &(&power * &sum);
            power = &power * &power;
            if (n_terms >> bit) & 1 == 1 {
                sum += &power;
                power = &power * &a;
            }
        }
        cache.push((kappa, n_terms, sum.clone()));
        sum
    }

    /// `(1/N) Σ_{n=0}^{N-1} (λμ)^{-n} τ^n(xy)`.
    pub fn cesaro_product(
        &self,
        x: &CMatrix,
        lambda: C64,
        y: &CMatrix,
        mu: C64,
        n_terms: usize,
    ) -> Result<CMatrix> {
        if n_terms == 0 {
            return Err(Error::Precondition("n_terms must be at least 1".into()));
        }
        let sum = self.cesaro_sum(lambda * mu, n_terms);
        let v = sum.mat_vec(&matrix::vec(&(x * y))?);
        Ok(matrix::unvec(&v)?.scale_real(1.0 / n_terms as f64))
    }

    /// Distances of `(λμ)^{-n} τ^n(xy)` to `x∘y` for `n = 0..=n_max`.
    pub fn limit_diagnostic(
        &self,
        x: &CMatrix,
        lambda: C64,
        y: &CMatrix,
        mu: C64,
        n_max: usize,
    ) -> Result<LimitTrace> {
        let target = self.project_product(x, lambda, y, mu)?;
        let inv = ONE / (lambda * mu);
        let mut term = x * y;
        let mut distances = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            if n > 0 {
                term = self.channel.apply(&term)?.scale(inv);
            }
            distances.push((&term - &target).op_norm());
        }
        let scale = (x.op_norm() * y.op_norm()).max(1e-300);
        let floor = 1e-13 * scale;
        let above: Vec<usize> = (0..distances.len()).filter(|&n| distances[n] > floor).collect();
        let decay_rate = match (above.first(), above.last()) {
            (Some(&a), Some(&b)) if b > a => {
                // fit over the later half of the visible tail
                let start = above[above.len() / 2].min(b - 1);
                Some((distances[b] / distances[start]).powf(1.0 / (b - start) as f64))
            }
            _ => None,
        };
        let subperipheral_radius = matrix::eigenvalues(&self.superop.matrix)?
            .iter()
            .map(|v| v.norm())
            .filter(|r| (r - 1.0).abs() > spectral::DEFAULT_TOL_PERIPHERAL)
            .fold(0.0, f64::max);
        Ok(LimitTrace {
            distances,
            decay_rate,
            subperipheral_radius,
        })
    }

    /// Components `x_λ = P_λ(x)`; fails when `x` is not in span E(τ).
    pub fn decompose_peripheral(&self, x: &CMatrix) -> Result<BoundaryElement> {
        let d = self.dim();
        if x.rows() != d || x.cols() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d}"),
                got: x.shape_str(),
            });
        }
        let components: Vec<(C64, CMatrix)> = self
            .projectors
            .iter()
            .map(|p| Ok((p.lambda, p.apply(x)?)))
            .collect::<Result<_>>()?;
        let total = sum_matrices(d, components.iter().map(|(_, m)| m.clone()));
        let defect = (&total - x).op_norm();
        let allowed = SPAN_TOL * x.op_norm();
        if defect > allowed {
            return Err(Error::NotInPeripheralSpan { defect, allowed });
        }
        Ok(BoundaryElement {
            matrix: x.clone(),
            components,
        })
    }

    fn element_from_components(&self, components: Vec<(C64, CMatrix)>) -> BoundaryElement {
        let matrix = sum_matrices(self.dim(), components.iter().map(|(_, m)| m.clone()));
        BoundaryElement { matrix, components }
    }

    /// `x∘y = Σ_{λ,μ} x_λ ∘ y_μ`, with result components grouped by `λμ`.
    pub fn product_general(&self, x: &BoundaryElement, y: &BoundaryElement) -> Result<BoundaryElement> {
        let d = self.dim();
        let mut out: Vec<(C64, CMatrix)> = self
            .lambdas()
            .into_iter()
            .map(|l| (l, CMatrix::zeros(d, d)))
            .collect();
        for (lx, xc) in &x.components {
            if xc.max_abs() == 0.0 {
                continue;
            }
            for (ly, yc) in &y.components {
                if yc.max_abs() == 0.0 {
                    continue;
                }
                if let Some(i) = self.spectrum.find(lx * ly)? {
                    let p = self.projectors[i].apply(&(xc * yc))?;
                    out[i].1 += &p;
                }
            }
        }
        Ok(self.element_from_components(out))
    }

    /// `x†`, with `(x_λ)†` placed in `E_{conj λ}`.
    pub fn adjoint(&self, x: &BoundaryElement) -> Result<BoundaryElement> {
        let d = self.dim();
        let mut out: Vec<(C64, CMatrix)> = self
            .lambdas()
            .into_iter()
            .map(|l| (l, CMatrix::zeros(d, d)))
            .collect();
        for (l, c) in &x.components {
            let i = self.spectrum.find(l.conj())?.ok_or_else(|| {
                Error::Precondition(format!("conj({l}) is not a peripheral eigenvalue"))
            })?;
            out[i].1 += &c.adjoint();
        }
        Ok(self.element_from_components(out))
    }

    pub fn unit(&self) -> BoundaryElement {
        let d = self.dim();
        let components = self
            .lambdas()
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                let m = if i == self.unit_cluster {
                    CMatrix::identity(d)
                } else {
                    CMatrix::zeros(d, d)
                };
                (l, m)
            })
            .collect();
        self.element_from_components(components)
    }

    /// Random element with standard complex Gaussian coefficients over the
    /// basis of the given clusters.
    fn random_in<R: rand::Rng + ?Sized>(&self, clusters: &[usize], rng: &mut R) -> BoundaryElement {
        let d = self.dim();
        let components = self
            .spaces
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut m = CMatrix::zeros(d, d);
                if clusters.contains(&i) {
                    for b in &s.basis {
                        m += &b.scale(matrix::random_complex(rng));
                    }
                }
                (s.lambda, m)
            })
            .collect();
        self.element_from_components(components)
    }

    pub fn random_element<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> BoundaryElement {
        let all: Vec<usize> = (0..self.spaces.len()).collect();
        self.random_in(&all, rng)
    }

    pub fn random_fixed_element<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> BoundaryElement {
        self.random_in(&[self.unit_cluster], rng)
    }

    /// `x_j = (1/k) Σ_{l<k} ω^{-lj} τ^l(x)`, `ω = e^{2πi/k}`, for `τ^k(x) = x`.
    pub fn fourier_components(&self, x: &CMatrix, k: usize) -> Result<Vec<CMatrix>> {
        fourier_components(&self.channel, x, k)
    }

    pub fn poly_kernel_decompose(&self, y: &CMatrix, roots: &[C64]) -> Result<Vec<(C64, CMatrix)>> {
        poly_kernel_decompose(&self.channel, y, roots)
    }

    pub fn boundary_table(&self) -> Result<ProductTable> {
        let n = self.combined_basis.len();
        let lambdas = self.lambdas();
        let eigenvalues: Vec<C64> = self.combined_basis.iter().map(|(i, _)| lambdas[*i]).collect();
        let mut constants = vec![vec![vec![ZERO; n]; n]; n];
        let mut grading_residual = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                let (ia, xa) = &self.combined_basis[a];
                let (ib, xb) = &self.combined_basis[b];
                let kappa = lambdas[*ia] * lambdas[*ib];
                let Some(target) = self.spectrum.find(kappa)? else {
                    continue;
                };
                let prod = self.projectors[target].apply(&(xa * xb))?;
                let mut rebuilt = CMatrix::zeros(self.dim(), self.dim());
                for (e, (ie, xe)) in self.combined_basis.iter().enumerate() {
                    if *ie == target {
                        let coef = xe.hs_inner(&prod);
                        constants[a][b][e] = coef;
                        rebuilt += &xe.scale(coef);
                    }
                }
                grading_residual = grading_residual.max((&rebuilt - &prod).hs_norm());
            }
        }
        let unit_index = self
            .combined_basis
            .iter()
            .position(|(i, _)| *i == self.unit_cluster)
            .expect("E_1 contains the identity");
        let labels = self
            .combined_basis
            .iter()
            .enumerate()
            .map(|(e, (i, _))| {
                let l = lambdas[*i];
                format!("x{e}[λ={:.6}{:+.6}i]", l.re, l.im)
            })
            .collect();
        Ok(ProductTable {
            labels,
            eigenvalues,
            constants,
            unit_index,
            unit_scale: (self.dim() as f64).sqrt(),
            grading_residual,
        })
    }

    /// Associativity, involution, unit law and the C*-identity on seeded
    /// random elements. Values are relative to the norms involved.
    pub fn cstar_verify(&self, trials: usize, seed: u64) -> Result<VerificationReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = VerificationReport::new("cstar", Some(seed));
        let one = self.unit();
        for _ in 0..trials {
            let x = self.random_element(&mut rng);
            let y = self.random_element(&mut rng);
            let z = self.random_element(&mut rng);
            let (nx, ny, nz) = (x.matrix.op_norm(), y.matrix.op_norm(), z.matrix.op_norm());

            let left = self.product_general(&self.product_general(&x, &y)?, &z)?;
            let right = self.product_general(&x, &self.product_general(&y, &z)?)?;
            report.push_max(
                "associativity",
                "(x∘y)∘z = x∘(y∘z)",
                ratio((&left.matrix - &right.matrix).op_norm(), nx * ny * nz),
                1e-7,
            );

            let xy = self.product_general(&x, &y)?;
            let yx_adj = self.product_general(&self.adjoint(&y)?, &self.adjoint(&x)?)?;
            report.push_max(
                "involution",
                "(x∘y)† = y†∘x†",
                ratio((&xy.matrix.adjoint() - &yx_adj.matrix).op_norm(), nx * ny),
                1e-8,
            );

            let lu = self.product_general(&one, &x)?;
            let ru = self.product_general(&x, &one)?;
            let unit_defect = (&lu.matrix - &x.matrix)
                .op_norm()
                .max((&ru.matrix - &x.matrix).op_norm());
            report.push_max("unit", "1∘x = x∘1 = x", ratio(unit_defect, nx), 1e-8);

            let xsx = self.product_general(&self.adjoint(&x)?, &x)?;
            report.push_max(
                "cstar_identity",
                "‖x†∘x‖ = ‖x‖²",
                ratio((xsx.matrix.op_norm() - nx * nx).abs(), nx * nx),
                1e-6,
            );
        }
        Ok(report)
    }

    /// `τ(x)∘τ(y) = τ(x∘y)`, `τ = λ·` on each `E_λ`, and `‖τ(x)‖ = ‖x‖`.
    pub fn automorphism_check(&self, trials: usize, seed: u64) -> Result<VerificationReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = VerificationReport::new("automorphism", Some(seed));
        for _ in 0..trials {
            let x = self.random_element(&mut rng);
            let y = self.random_element(&mut rng);
            let (nx, ny) = (x.matrix.op_norm(), y.matrix.op_norm());
            let tx = self.decompose_peripheral(&self.channel.apply(&x.matrix)?)?;
            let ty = self.decompose_peripheral(&self.channel.apply(&y.matrix)?)?;

            let componentwise = tx
                .components
                .iter()
                .zip(&x.components)
                .map(|((l, t), (_, c))| (t - &c.scale(*l)).op_norm())
                .fold(0.0, f64::max);
            report.push_max(
                "eigenspace_action",
                "τ(x_λ) = λ x_λ",
                ratio(componentwise, nx),
                1e-8,
            );

            let lhs = self.product_general(&tx, &ty)?;
            let rhs = self.channel.apply(&self.product_general(&x, &y)?.matrix)?;
            report.push_max(
                "homomorphism",
                "τ(x)∘τ(y) = τ(x∘y)",
                ratio((&lhs.matrix - &rhs).op_norm(), nx * ny),
                1e-8,
            );

            report.push_max(
                "isometry",
                "‖τ(x)‖ = ‖x‖",
                ratio((tx.matrix.op_norm() - nx).abs(), nx),
                1e-8,
            );
        }
        Ok(report)
    }

    /// Compares span E(τ^k) with span E(τ), and F(τ^k) with the span of
    /// `E_{ω^j}(τ)`, `j < k`; reconstructs random elements of F(τ^k) from
    /// their Fourier components.
    pub fn stability_check(&self, k: usize, seed: u64) -> Result<VerificationReport> {
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        let mut report = VerificationReport::new(format!("stability(k={k})"), Some(seed));
        let n = self.dim() * self.dim();
        let power = PeripheralBoundary::new(&self.channel.power(k))?;

        let vecs = |ms: &mut dyn Iterator<Item = &CMatrix>| -> Result<Vec<Vec<C64>>> {
            ms.map(matrix::vec).collect()
        };
        let span_tau = vecs(&mut self.combined_basis.iter().map(|(_, m)| m))?;
        let span_power = vecs(&mut power.combined_basis.iter().map(|(_, m)| m))?;
        let gap = matrix::subspace_gap(n, &span_tau, &span_power, 1e-10)?;
        report.push(Check::at_most("span_gap", "span E(τ^k) = span E(τ)", gap, 1e-7));

        let omega = matrix::cis(2.0 * std::f64::consts::PI / k as f64);
        let mut roots_space = Vec::new();
        for j in 0..k {
            roots_space.extend(vecs(&mut self.space(omega.powu(j as u32))?.iter())?);
        }
        let fixed_power = vecs(&mut power.fixed_space().iter())?;
        let gap = matrix::subspace_gap(n, &roots_space, &fixed_power, 1e-10)?;
        report.push(Check::at_most(
            "fixed_space_gap",
            "F(τ^k) = ⋁_{j<k} E_{ω^j}(τ)",
            gap,
            1e-7,
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = power.random_fixed_element(&mut rng).matrix;
            let nx = x.op_norm();
            let parts = self.fourier_components(&x, k)?;
            let total = sum_matrices(self.dim(), parts.iter().cloned());
            report.push_max(
                "fourier_reconstruction",
                "Σ_j x_j = x",
                ratio((&total - &x).op_norm(), nx),
                1e-10,
            );
            let worst = parts
                .iter()
                .enumerate()
                .map(|(j, p)| self.residual(p, omega.powu(j as u32)))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            report.push_max(
                "fourier_component_residual",
                "τ(x_j) = ω^j x_j",
                ratio(worst, nx),
                1e-8,
            );
        }
        Ok(report)
    }

    /// Ideal, Hilbert-module and conjugation properties around `E_λ`.
    pub fn module_structure_check(&self, lambda: C64, trials: usize, seed: u64) -> Result<VerificationReport> {
        let li = self
            .cluster_of(lambda)?
            .ok_or_else(|| Error::Precondition(format!("E_{lambda} is empty")))?;
        let lambda = self.spaces[li].lambda;
        let d = self.dim();
        let n = d * d;
        let mut report = VerificationReport::new(format!("module(λ={lambda})"), Some(seed));
        let basis = &self.spaces[li].basis;

        let mut ideal_gen = Vec::new();
        for a in basis {
            for b in basis {
                let p = self.project_product(&a.adjoint(), lambda.conj(), b, lambda)?;
                ideal_gen.push(matrix::vec(&p)?);
            }
        }
        let ideal = matrix::orthonormal_basis(n, &ideal_gen, 1e-10)?;
        let ideal_mats: Vec<CMatrix> = ideal.iter().map(|v| matrix::unvec(v)).collect::<Result<_>>()?;
        let dist = |m: &CMatrix| -> Result<f64> {
            Ok(ratio(matrix::distance_to_span(&matrix::vec(m)?, &ideal), m.hs_norm()))
        };

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_in_e = |rng: &mut ChaCha8Rng| self.random_in(&[li], rng).matrix;
        let random_in_ideal = |rng: &mut ChaCha8Rng| {
            sum_matrices(d, ideal_mats.iter().map(|m| m.scale(matrix::random_complex(rng))))
        };
        for _ in 0..trials {
            let x = random_in_e(&mut rng);
            let y = random_in_e(&mut rng);
            let f = self.random_fixed_element(&mut rng).matrix;
            let g = random_in_ideal(&mut rng);

            let inner = self.project_product(&x.adjoint(), lambda.conj(), &y, lambda)?;
            report.push_max("inner_product_in_ideal", "x†∘y ∈ I_λ", dist(&inner)?, 1e-8);

            let fg = self.project_product(&f, ONE, &g, ONE)?;
            let gf = self.project_product(&g, ONE, &f, ONE)?;
            report.push_max(
                "two_sided_ideal",
                "F∘I_λ ⊆ I_λ, I_λ∘F ⊆ I_λ",
                dist(&fg)?.max(dist(&gf)?),
                1e-8,
            );

            let fx = self.project_product(&f, ONE, &x, lambda)?;
            let xf = self.project_product(&x, lambda, &f, ONE)?;
            let module_res = self
                .residual(&fx, lambda)?
                .max(self.residual(&xf, lambda)?);
            report.push_max(
                "bimodule_action",
                "F∘E_λ ⊆ E_λ, E_λ∘F ⊆ E_λ",
                ratio(module_res, f.op_norm() * x.op_norm()),
                1e-8,
            );

            let xsx = self.project_product(&x.adjoint(), lambda.conj(), &x, lambda)?;
            let min_eig = xsx.hermitian_eigenvalues()?[0];
            report.push_max(
                "inner_product_positivity",
                "spec(x†∘x) ⊆ [0, ∞)",
                ratio((-min_eig).max(0.0), x.op_norm().powi(2)),
                1e-9,
            );
        }

        let adjoints: Vec<Vec<C64>> = basis.iter().map(|b| matrix::vec(&b.adjoint())).collect::<Result<_>>()?;
        let conj_space: Vec<Vec<C64>> =
            self.space(lambda.conj())?.iter().map(matrix::vec).collect::<Result<_>>()?;
        let gap = matrix::subspace_gap(n, &adjoints, &conj_space, 1e-10)?;
        report.push(Check::at_most("conjugate_space", "E_λ† = E_{conj λ}", gap, 1e-8));
        Ok(report)
    }

    /// If `v1†∘v2 = 1` (or `v1∘v2† = 1`), checks `dim E_λ = dim F(τ)` and
    /// `E_λ = F∘v2` (or `v2∘F`). With `dim F(τ) = 1`, checks `dim E_λ = 1`.
    pub fn isometry_dim_check(&self, lambda: C64, v1: &CMatrix, v2: &CMatrix) -> Result<VerificationReport> {
        self.check_member("v1", v1, lambda)?;
        self.check_member("v2", v2, lambda)?;
        let d = self.dim();
        let n = d * d;
        let mut report = VerificationReport::new(format!("isometry(λ={lambda})"), None);
        let e_lambda = self.space(lambda)?;
        let fixed = self.fixed_space();
        let identity = CMatrix::identity(d);

        let left = self.project_product(&v1.adjoint(), lambda.conj(), v2, lambda)?;
        let right = self.project_product(v1, lambda, &v2.adjoint(), lambda.conj())?;
        let left_defect = (&left - &identity).op_norm();
        let right_defect = (&right - &identity).op_norm();
        let e_vecs: Vec<Vec<C64>> = e_lambda.iter().map(matrix::vec).collect::<Result<_>>()?;

        let generated = if left_defect <= 1e-7 {
            report.push(Check::at_most("v1_adjoint_v2_is_unit", "v1†∘v2 = 1", left_defect, 1e-7));
            Some(
                fixed
                    .iter()
                    .map(|f| matrix::vec(&self.project_product(f, ONE, v2, lambda)?))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else if right_defect <= 1e-7 {
            report.push(Check::at_most("v1_v2_adjoint_is_unit", "v1∘v2† = 1", right_defect, 1e-7));
            Some(
                fixed
                    .iter()
                    .map(|f| matrix::vec(&self.project_product(v2, lambda, f, ONE)?))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            report.push(Check::skipped(
                "isometry_hypothesis",
                "v1†∘v2 = 1 or v1∘v2† = 1",
                format!("neither holds (defects {left_defect:e}, {right_defect:e})"),
            ));
            None
        };
        if let Some(generated) = generated {
            report.push(Check::flag(
                "dimension_equality",
                "dim E_λ = dim F(τ)",
                e_lambda.len() == fixed.len(),
                Some(format!("dim E_λ = {}, dim F = {}", e_lambda.len(), fixed.len())),
            ));
            let gap = matrix::subspace_gap(n, &e_vecs, &generated, 1e-10)?;
            report.push(Check::at_most("generated_by_fixed_space", "E_λ = F∘v", gap, 1e-7));
        }
        if fixed.len() == 1 && !e_lambda.is_empty() {
            report.push(Check::flag(
                "one_dimensional",
                "dim F = 1 ⟹ dim E_λ = 1",
                e_lambda.len() == 1,
                Some(format!("dim E_λ = {}", e_lambda.len())),
            ));
        }
        Ok(report)
    }
}

/// Orthonormal basis of the span of `basis` (which must contain `I`) whose
/// first element is `I/√d`.
fn lead_with_identity(d: usize, basis: &[CMatrix]) -> Result<Vec<CMatrix>> {
    let mut out = vec![CMatrix::identity(d).scale_real(1.0 / (d as f64).sqrt())];
    for b in basis {
        let mut rest = b.clone();
        for q in &out {
            let c = q.hs_inner(&rest);
            rest = &rest - &q.scale(c);
        }
        let norm = rest.hs_norm();
        if norm > 1e-6 {
            out.push(rest.scale_real(1.0 / norm));
        }
    }
    if out.len() != basis.len() {
        return Err(Error::Precondition(format!(
            "identity is not in the fixed space (rank {} vs {})",
            out.len(),
            basis.len()
        )));
    }
    Ok(out)
}

/// `x_j = (1/k) Σ_{l<k} ω^{-lj} τ^l(x)`, `ω = e^{2πi/k}`; requires `τ^k(x) = x`.
pub fn fourier_components(c: &KrausChannel, x: &CMatrix, k: usize) -> Result<Vec<CMatrix>> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let mut orbit = vec![x.clone()];
    for l in 1..=k {
        orbit.push(c.apply(&orbit[l - 1])?);
    }
    let defect = (&orbit[k] - x).op_norm();
    let allowed = 1e-8 * x.op_norm();
    if defect > allowed {
        return Err(Error::Precondition(format!(
            "x is not fixed by τ^{k}: ‖τ^k(x) − x‖ = {defect:e} exceeds {allowed:e}"
        )));
    }
    let omega = matrix::cis(2.0 * std::f64::consts::PI / k as f64);
    Ok((0..k)
        .map(|j| {
            let mut xj = CMatrix::zeros(c.dim(), c.dim());
            for (l, t) in orbit.iter().take(k).enumerate() {
                xj += &t.scale(omega.powu(((l * j) % k) as u32).conj());
            }
            xj.scale_real(1.0 / k as f64)
        })
        .collect())
}

/// Splits `y ∈ ker p(τ)`, `p(t) = Π_j (t − λ_j)`, into `y_i ∈ E_{λ_i}` by
/// `y_i = Π_{j≠i}(τ − λ_j)(y) / Π_{j≠i}(λ_i − λ_j)`.
pub fn poly_kernel_decompose(c: &KrausChannel, y: &CMatrix, roots: &[C64]) -> Result<Vec<(C64, CMatrix)>> {
    if roots.is_empty() {
        return Err(Error::Empty("roots"));
    }
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            let gap = (a - b).norm();
            if gap <= 1e-8 {
                return Err(Error::Precondition(format!(
                    "roots {a} and {b} are not distinct (gap {gap:e})"
                )));
            }
        }
    }
    let shifted = |m: &CMatrix, root: C64| -> Result<CMatrix> { Ok(&c.apply(m)? - &m.scale(root)) };
    let mut kernel = y.clone();
    for r in roots {
        kernel = shifted(&kernel, *r)?;
    }
    let defect = kernel.op_norm();
    let allowed = 1e-8 * y.op_norm();
    if defect > allowed {
        return Err(Error::Precondition(format!(
            "y is not in ker p(τ): ‖p(τ)(y)‖ = {defect:e} exceeds {allowed:e}"
        )));
    }
    roots
        .iter()
        .enumerate()
        .map(|(i, li)| {
            let mut m = y.clone();
            let mut denom = ONE;
            for (j, lj) in roots.iter().enumerate() {
                if j != i {
                    m = shifted(&m, *lj)?;
                    denom *= li - lj;
                }
            }
            Ok((*li, m.scale(ONE / denom)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::tests::{dephasing, leaky, pauli_x, pauli_z, random_unital, unitary};
    use crate::matrix::{cis, I};
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).op_norm() <= tol
    }

    fn y_pauli() -> CMatrix {
        &pauli_z() * &pauli_x()
    }

    #[test]
    fn basis_leads_with_normalized_identity() {
        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let first = &b.fixed_space()[0];
        assert!(close(first, &CMatrix::identity(2).scale_real(0.5_f64.sqrt()), 1e-12));
        assert_eq!(b.dimension(), 2);
        assert!(b.gram_min_eigenvalue > 0.99);
    }

    #[test]
    fn peripheral_product_examples() {
        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let x = CMatrix::diag(&[C64::new(2.0, 0.0), C64::new(0.0, 3.0)]);
        let y = CMatrix::diag(&[C64::new(-1.0, 1.0), C64::new(5.0, 0.0)]);
        let p = b.peripheral_product(&x, ONE, &y, ONE).unwrap();
        assert!(close(&p, &(&x * &y), 1e-12));

        let alpha = 0.7;
        let b = PeripheralBoundary::new(&unitary(CMatrix::diag(&[ONE, cis(alpha)]))).unwrap();
        let e12 = CMatrix::unit(2, 0, 1);
        let lam = cis(alpha);
        assert!(b.residual(&e12, lam).unwrap() < 1e-12);
        let p = b.peripheral_product(&e12, lam, &e12, lam).unwrap();
        assert_eq!(p.max_abs(), 0.0);

        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let p = b.peripheral_product(&pauli_x(), -ONE, &pauli_x(), -ONE).unwrap();
        assert!(close(&p, &CMatrix::identity(2), 1e-12));

        let err = b.peripheral_product(&pauli_x(), ONE, &pauli_x(), -ONE).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("residual")));
    }

    #[test]
    fn product_differs_from_matrix_product_without_faithful_state() {
        let c = leaky(0.3);
        assert!(!c.invariant_state(1e-8).unwrap().faithful);
        let b = PeripheralBoundary::new(&c).unwrap();
        // X ⊕ 0 has eigenvalue −1; its square is the projection onto the block.
        let mut x = CMatrix::zeros(3, 3);
        x.set(0, 1, ONE);
        x.set(1, 0, ONE);
        assert!(b.residual(&x, -ONE).unwrap() < 1e-12);
        let p = b.peripheral_product(&x, -ONE, &x, -ONE).unwrap();
        assert!(close(&p, &CMatrix::identity(3), 1e-10));
        assert!((&p - &(&x * &x)).op_norm() > 0.5);
    }

    fn naive_cesaro(c: &KrausChannel, x: &CMatrix, y: &CMatrix, kappa: C64, n: usize) -> CMatrix {
        let mut term = x * y;
        let mut sum = CMatrix::zeros(c.dim(), c.dim());
        for i in 0..n {
            if i > 0 {
                term = c.apply(&term).unwrap().scale(ONE / kappa);
            }
            sum += &term;
        }
        sum.scale_real(1.0 / n as f64)
    }

    #[test]
    fn cesaro_doubling_matches_direct_sum() {
        let c = leaky(0.4);
        let b = PeripheralBoundary::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = CMatrix::random_gaussian(3, 3, &mut rng);
        let y = CMatrix::random_gaussian(3, 3, &mut rng);
        for n in [1, 2, 3, 7, 8, 13, 64] {
            for kappa in [ONE, -ONE, I] {
                let fast = b.cesaro_product(&x, kappa, &y, ONE, n).unwrap();
                let slow = naive_cesaro(&c, &x, &y, kappa, n);
                assert!(close(&fast, &slow, 1e-11), "n={n} κ={kappa}");
            }
        }
        assert!(b.cesaro_product(&x, ONE, &y, ONE, 0).is_err());
    }

    #[test]
    fn cesaro_examples() {
        let b = PeripheralBoundary::new(&KrausChannel::identity(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CMatrix::random_gaussian(2, 2, &mut rng);
        let y = CMatrix::random_gaussian(2, 2, &mut rng);
        for n in [1, 5, 100] {
            assert!(close(&b.cesaro_product(&x, ONE, &y, ONE, n).unwrap(), &(&x * &y), 1e-12));
        }

        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let x = CMatrix::diag(&[C64::new(1.5, 0.0), C64::new(-2.0, 0.5)]);
        for n in [1, 4, 10] {
            assert!(close(&b.cesaro_product(&x, ONE, &x, ONE, n).unwrap(), &(&x * &x), 1e-12));
        }

        let c = unitary(CMatrix::diag(&[ONE, cis(2.0 * PI * 0.3)]));
        let b = PeripheralBoundary::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let x = b.random_element(&mut rng);
            let y = b.random_element(&mut rng);
            for (l, xc) in &x.components {
                for (m, yc) in &y.components {
                    let s = b.peripheral_product(xc, *l, yc, *m).unwrap();
                    let ce = b.cesaro_product(xc, *l, yc, *m, 10_000).unwrap();
                    let scale = xc.op_norm() * yc.op_norm();
                    assert!((&s - &ce).op_norm() <= 1e-3 * scale.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn limit_diagnostic_examples() {
        let b = PeripheralBoundary::new(&KrausChannel::identity(2)).unwrap();
        let x = pauli_x();
        let t = b.limit_diagnostic(&x, ONE, &y_pauli(), ONE, 5).unwrap();
        assert!(t.distances.iter().all(|&d| d == 0.0));
        assert!(t.decay_rate.is_none());

        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let t = b.limit_diagnostic(&pauli_x(), -ONE, &y_pauli(), -ONE, 6).unwrap();
        assert!(t.distances.iter().all(|&d| d < 1e-12));

        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let x = CMatrix::diag(&[ONE, C64::new(2.0, 0.0)]);
        let t = b.limit_diagnostic(&x, ONE, &x, ONE, 4).unwrap();
        assert!(t.distances.iter().skip(1).all(|&d| d < 1e-12));

        // Off-peripheral part decays like (1 − γ)^n.
        let gamma = 0.3;
        let b = PeripheralBoundary::new(&leaky(gamma)).unwrap();
        let e22 = CMatrix::unit(3, 2, 2);
        assert!(b.residual(&e22, ONE).unwrap() > 0.1);
        let t = b.limit_diagnostic(&e22, ONE, &e22, ONE, 30).unwrap();
        let rate = t.decay_rate.unwrap();
        assert!((rate - (1.0 - gamma)).abs() < 1e-6, "rate {rate}");
        assert!((t.subperipheral_radius - (1.0 - gamma)).abs() < 1e-8);
    }

    #[test]
    fn decomposition_examples() {
        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let x = &CMatrix::identity(2) + &pauli_x();
        let e = b.decompose_peripheral(&x).unwrap();
        for (l, m) in &e.components {
            if (l - ONE).norm() < 1e-9 {
                assert!(close(m, &CMatrix::identity(2), 1e-12));
            } else if (l + ONE).norm() < 1e-9 {
                assert!(close(m, &pauli_x(), 1e-12));
            } else {
                assert!(m.max_abs() < 1e-12);
            }
        }

        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let err = b.decompose_peripheral(&pauli_x()).unwrap_err();
        assert!(matches!(err, Error::NotInPeripheralSpan { .. }));
        let f = CMatrix::diag(&[C64::new(0.3, 1.0), C64::new(-4.0, 0.0)]);
        let e = b.decompose_peripheral(&f).unwrap();
        assert_eq!(e.components.len(), 1);
        assert!(close(&e.components[0].1, &f, 1e-12));
    }

    #[test]
    fn product_general_examples() {
        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let plus = b.decompose_peripheral(&(&CMatrix::identity(2) + &pauli_x())).unwrap();
        let minus = b.decompose_peripheral(&(&CMatrix::identity(2) - &pauli_x())).unwrap();
        let p = b.product_general(&plus, &minus).unwrap();
        assert!(p.matrix.op_norm() < 1e-12);
        let u = b.product_general(&b.unit(), &plus).unwrap();
        assert!(close(&u.matrix, &plus.matrix, 1e-12));

        let b = PeripheralBoundary::new(&dephasing()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = b.random_element(&mut rng);
        let y = b.random_element(&mut rng);
        let p = b.product_general(&x, &y).unwrap();
        assert!(close(&p.matrix, &(&x.matrix * &y.matrix), 1e-12));
    }

    #[test]
    fn fourier_examples() {
        let c = unitary(pauli_z());
        let parts = fourier_components(&c, &pauli_x(), 2).unwrap();
        assert!(parts[0].max_abs() < 1e-15);
        assert!(close(&parts[1], &pauli_x(), 1e-15));
        let parts = fourier_components(&c, &CMatrix::identity(2), 2).unwrap();
        assert!(close(&parts[0], &CMatrix::identity(2), 1e-15));
        assert!(parts[1].max_abs() < 1e-15);

        let w = cis(2.0 * PI / 3.0);
        let c = unitary(CMatrix::diag(&[ONE, w]));
        let e12 = CMatrix::unit(2, 0, 1);
        let e21 = CMatrix::unit(2, 1, 0);
        let x = &(&e12 + &e21) + &CMatrix::identity(2);
        let parts = fourier_components(&c, &x, 3).unwrap();
        // τ(E_12) = U† E_12 U = ω E_12, τ(E_21) = ω̄ E_21
        assert!(close(&parts[0], &CMatrix::identity(2), 1e-14));
        assert!(close(&parts[1], &e12, 1e-14));
        assert!(close(&parts[2], &e21, 1e-14));
        for (j, p) in parts.iter().enumerate() {
            let r = (&c.apply(p).unwrap() - &p.scale(w.powu(j as u32))).op_norm();
            assert!(r < 1e-14);
        }

        assert!(fourier_components(&dephasing(), &pauli_x(), 2).is_err());
    }

    #[test]
    fn poly_kernel_examples() {
        let c = unitary(pauli_z());
        let y = &CMatrix::identity(2) + &pauli_x();
        let parts = poly_kernel_decompose(&c, &y, &[ONE, -ONE]).unwrap();
        assert!(close(&parts[0].1, &CMatrix::identity(2), 1e-12));
        assert!(close(&parts[1].1, &pauli_x(), 1e-12));

        let parts = poly_kernel_decompose(&dephasing(), &pauli_z(), &[ONE]).unwrap();
        assert!(close(&parts[0].1, &pauli_z(), 1e-15));

        assert!(poly_kernel_decompose(&c, &y, &[ONE, ONE]).is_err());
        assert!(poly_kernel_decompose(&c, &y, &[ONE]).is_err());

        // Against the Fourier formula at cube roots of unity.
        let w = cis(2.0 * PI / 3.0);
        let c = unitary(CMatrix::diag(&[ONE, w, w * w]));
        let b = PeripheralBoundary::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let roots = [ONE, w, w * w];
        for _ in 0..5 {
            let y = b.random_element(&mut rng).matrix;
            let fourier = fourier_components(&c, &y, 3).unwrap();
            let poly = poly_kernel_decompose(&c, &y, &roots).unwrap();
            for j in 0..3 {
                assert!(close(&fourier[j], &poly[j].1, 1e-10 * y.op_norm()));
            }
        }
    }

    #[test]
    fn table_examples() {
        let b = PeripheralBoundary::new(&KrausChannel::identity(2)).unwrap();
        let t = b.boundary_table().unwrap();
        assert_eq!(t.constants.len(), 4);
        let basis: Vec<&CMatrix> = b.combined_basis.iter().map(|(_, m)| m).collect();
        for a in 0..4 {
            for bb in 0..4 {
                let mut rebuilt = CMatrix::zeros(2, 2);
                for e in 0..4 {
                    rebuilt += &basis[e].scale(t.constants[a][bb][e]);
                }
                assert!(close(&rebuilt, &(basis[a] * basis[bb]), 1e-12));
            }
        }
        let u = t.unit_index;
        for bb in 0..4 {
            for e in 0..4 {
                let expect = if e == bb { ONE } else { ZERO };
                assert!((t.constants[u][bb][e].scale(t.unit_scale) - expect).norm() < 1e-12);
            }
        }

        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let t = b.boundary_table().unwrap();
        assert!(t.grading_residual < 1e-12);
        for a in 0..4 {
            for bb in 0..4 {
                for e in 0..4 {
                    let graded = (t.eigenvalues[a] * t.eigenvalues[bb] - t.eigenvalues[e]).norm() < 1e-7;
                    assert!(graded || t.constants[a][bb][e].norm() == 0.0);
                }
            }
        }

        let t = PeripheralBoundary::new(&dephasing()).unwrap().boundary_table().unwrap();
        assert_eq!(t.labels.len(), 2);
        // commutative
        for a in 0..2 {
            for bb in 0..2 {
                for e in 0..2 {
                    assert!((t.constants[a][bb][e] - t.constants[bb][a][e]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn verifiers_pass_on_reference_channels() {
        for c in [
            KrausChannel::identity(2),
            unitary(CMatrix::diag(&[ONE, I])),
            dephasing(),
            leaky(0.25),
            random_unital(3, 2, 11),
        ] {
            let b = PeripheralBoundary::new(&c).unwrap();
            for r in [
                b.cstar_verify(5, 1).unwrap(),
                b.automorphism_check(5, 2).unwrap(),
                b.stability_check(2, 3).unwrap(),
                b.stability_check(3, 3).unwrap(),
            ] {
                assert!(r.passed(), "{} on {}: {:?}", r.suite, c.label(), r.checks);
            }
            for l in b.lambdas() {
                let r = b.module_structure_check(l, 3, 4).unwrap();
                assert!(r.passed(), "{:?}", r.checks);
            }
        }
    }

    #[test]
    fn stability_on_fifth_roots() {
        let c = unitary(CMatrix::diag(&[ONE, cis(2.0 * PI / 5.0)]));
        let b = PeripheralBoundary::new(&c).unwrap();
        let r = b.stability_check(5, 8).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert!(r.checks[1].value.unwrap() < 1e-10);
    }

    #[test]
    fn isometry_examples() {
        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let r = b.isometry_dim_check(-ONE, &pauli_x(), &pauli_x()).unwrap();
        assert!(r.passed());
        assert!(r.checks.iter().any(|c| c.name == "dimension_equality" && c.pass == Some(true)));

        let b = PeripheralBoundary::new(&KrausChannel::identity(2)).unwrap();
        let id = CMatrix::identity(2);
        let r = b.isometry_dim_check(ONE, &id, &id).unwrap();
        assert!(r.passed());

        let b = PeripheralBoundary::new(&leaky(0.5)).unwrap();
        assert!(b.isometry_dim_check(ONE, &pauli_x(), &pauli_x()).is_err());
    }

    #[test]
    fn module_example_pauli() {
        let b = PeripheralBoundary::new(&unitary(pauli_z())).unwrap();
        let r = b.module_structure_check(-ONE, 4, 0).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert!(b.module_structure_check(I, 1, 0).is_err());
    }
}
