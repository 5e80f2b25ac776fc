//! Finite truncation of the minimal dilation.
//!
//! Level `n` lives on `H ⊗ E^{⊗n}` with `H = C^d`, `E = C^m` (`m` Kraus
//! elements); the newest factor sits next to `H`. The Stinespring isometry is
//! `V h = Σ_i (K_i h) ⊗ e_i`, the level embeddings are `ι_{n→n+1} = V ⊗ I`,
//! and the flow is `j_n(x) = ι_{n→N} (x ⊗ I) ι_{n→N}^†` on the top level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary::PeripheralBoundary;
use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, C64, ONE};
use crate::report::{Check, VerificationReport};
use crate::spectral;

pub const DEFAULT_AMBIENT_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct MarkovTower {
    channel: KrausChannel,
    depth: usize,
    ambient_dim: usize,
    stinespring: CMatrix,
    /// `ι_{n→N}` for `n = 0..=N`.
    embeddings: Vec<CMatrix>,
    /// `ι_{0→n}` for `n = 0..=N`.
    from_ground: Vec<CMatrix>,
    pub build_report: VerificationReport,
}

#[derive(Clone, Debug)]
pub struct FlowOperator {
    pub level: usize,
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftNormProbe {
    /// `|‖y_n‖ − ‖Σ_j λ_j^{-n} x_j‖|` for `n = 0..=N`.
    pub identity_defects: Vec<f64>,
    pub almost_period: Option<u64>,
    /// `|‖y_{n*}‖ − ‖Σ_j x_j‖|` when an almost period within the depth exists.
    pub bound_defect: Option<f64>,
    pub bound: f64,
    pub report: VerificationReport,
}

/// `V` with `V[(a·m + i), b] = K_i[a, b]`.
pub fn stinespring_isometry(c: &KrausChannel) -> CMatrix {
    let d = c.dim();
    let m = c.num_kraus();
    let kraus = c.kraus();
    CMatrix::from_fn(d * m, d, |row, b| kraus[row % m].get(row / m, b))
}

/// `(x ⊗ I_k) · t` without forming the Kronecker product.
fn kron_identity_mul(x: &CMatrix, k: usize, t: &CMatrix) -> CMatrix {
    let d = x.rows();
    CMatrix::from_fn(d * k, t.cols(), |row, col| {
        let (a, r) = (row / k, row % k);
        (0..d).map(|b| x.get(a, b) * t.get(b * k + r, col)).sum()
    })
}

fn pow_usize(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

impl MarkovTower {
    pub fn build(c: &KrausChannel, depth: usize, cap: usize) -> Result<Self> {
        let d = c.dim();
        let m = c.num_kraus();
        let ambient_dim = pow_usize(m, depth)
            .and_then(|p| p.checked_mul(d))
            .unwrap_or(usize::MAX);
        if ambient_dim > cap {
            return Err(Error::CapExceeded {
                required: ambient_dim,
                allowed: cap,
            });
        }
        let validation = c.validate();
        if !validation.pass {
            return Err(Error::Precondition(format!(
                "channel is not unital: defect {:e}",
                validation.unitality_defect
            )));
        }
        let v = stinespring_isometry(c);
        let step = |n: usize| v.kron(&CMatrix::identity(m.pow(n as u32)));

        let mut from_ground = vec![CMatrix::identity(d)];
        for n in 0..depth {
            let next = &step(n) * &from_ground[n];
            from_ground.push(next);
        }
        let mut embeddings = vec![CMatrix::identity(ambient_dim)];
        for n in (0..depth).rev() {
            let next = &embeddings[embeddings.len() - 1] * &step(n);
            embeddings.push(next);
        }
        embeddings.reverse();

        let mut tower = Self {
            channel: c.clone(),
            depth,
            ambient_dim,
            stinespring: v,
            embeddings,
            from_ground,
            build_report: VerificationReport::new("tower_build", None),
        };
        tower.build_report = tower.build_checks()?;
        if let Some(bad) = tower.build_report.checks.iter().find(|c| c.failed()) {
            return Err(Error::Precondition(format!(
                "tower invariant {} failed: {:?} > {:?}",
                bad.name, bad.value, bad.threshold
            )));
        }
        Ok(tower)
    }

    fn build_checks(&self) -> Result<VerificationReport> {
        let d = self.dim();
        let m = self.channel.num_kraus();
        let mut report = VerificationReport::new("tower_build", Some(0));
        let v = &self.stinespring;
        report.push(Check::at_most(
            "stinespring_isometry",
            "V†V = I",
            (&(&v.adjoint() * v) - &CMatrix::identity(d)).op_norm(),
            1e-12,
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<CMatrix> = (0..3)
            .map(|_| {
                let x = CMatrix::random_gaussian(d, d, &mut rng);
                let n = x.op_norm();
                x.scale_real(1.0 / n)
            })
            .collect();
        for x in &samples {
            let compressed = &v.adjoint() * &kron_identity_mul(x, m, v);
            report.push_max(
                "stinespring_dilates",
                "V†(x⊗I)V = τ(x)",
                (&compressed - &self.channel.apply(x)?).op_norm(),
                1e-12,
            );
        }
        let mut powers: Vec<CMatrix> = samples.clone();
        for n in 0..=self.depth {
            let e = &self.embeddings[n];
            let size = e.cols();
            report.push_max(
                "embedding_isometry",
                "ι_{n→N}†ι_{n→N} = I",
                (&(&e.adjoint() * e) - &CMatrix::identity(size)).op_norm(),
                1e-12,
            );
            report.push_max(
                "embedding_chain",
                "ι_{0→N} = ι_{n→N} ι_{0→n}",
                (&(e * &self.from_ground[n]) - &self.embeddings[0]).op_norm(),
                1e-12,
            );
            for (x, tx) in samples.iter().zip(powers.iter_mut()) {
                let g = &self.from_ground[n];
                let k = g.rows() / d;
                let compressed = &g.adjoint() * &kron_identity_mul(x, k, g);
                report.push_max(
                    "compression",
                    "ι_{0→n}†(x⊗I)ι_{0→n} = τ^n(x)",
                    (&compressed - tx).op_norm(),
                    1e-11,
                );
                *tx = self.channel.apply(tx)?;
            }
        }
        Ok(report)
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn stinespring(&self) -> &CMatrix {
        &self.stinespring
    }

    /// `ι_{n→N}`.
    pub fn embedding(&self, n: usize) -> Result<&CMatrix> {
        self.check_level(n)?;
        Ok(&self.embeddings[n])
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth {
            return Err(Error::LevelOutOfRange {
                level: n,
                depth: self.depth,
            });
        }
        Ok(())
    }

    fn check_shape(&self, x: &CMatrix) -> Result<()> {
        let d = self.dim();
        if x.rows() != d || x.cols() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d}"),
                got: x.shape_str(),
            });
        }
        Ok(())
    }

    /// `j_n(x) · t` for a tall `t` with `ambient_dim` rows.
    fn flow_mul(&self, x: &CMatrix, n: usize, t: &CMatrix) -> CMatrix {
        let e = &self.embeddings[n];
        let k = e.cols() / self.dim();
        e * &kron_identity_mul(x, k, &(&e.adjoint() * t))
    }

    /// `j_n(x) = ι_{n→N}(x ⊗ I)ι_{n→N}^†`.
    pub fn flow(&self, x: &CMatrix, n: usize) -> Result<FlowOperator> {
        self.check_level(n)?;
        self.check_shape(x)?;
        let e = &self.embeddings[n];
        let k = e.cols() / self.dim();
        let matrix = e * &kron_identity_mul(x, k, &e.adjoint());
        Ok(FlowOperator { level: n, matrix })
    }

    /// `q_n = j_n(I)`.
    pub fn filtration(&self, n: usize) -> Result<FlowOperator> {
        self.flow(&CMatrix::identity(self.dim()), n)
    }

    /// `‖q_m j_n(x) q_m − j_m(τ^{n−m}(x))‖`.
    pub fn markov_verify(&self, x: &CMatrix, m: usize, n: usize) -> Result<f64> {
        self.check_level(n)?;
        if m > n {
            return Err(Error::Precondition(format!("need m ≤ n, got m={m}, n={n}")));
        }
        let q = self.filtration(m)?.matrix;
        let jn = self.flow(x, n)?.matrix;
        let lhs = &(&q * &jn) * &q;
        let rhs = self.flow(&self.channel.power_apply(x, n - m)?, m)?.matrix;
        Ok((&lhs - &rhs).op_norm())
    }

    fn check_peripheral(&self, x: &CMatrix, lambda: C64) -> Result<()> {
        self.check_shape(x)?;
        if (lambda.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("|λ| = {} is not 1", lambda.norm())));
        }
        let r = (&self.channel.apply(x)? - &x.scale(lambda)).op_norm();
        let allowed = 1e-6 * x.op_norm().max(1e-300);
        if r > allowed {
            return Err(Error::Precondition(format!(
                "x is not in E_{lambda}: residual {r:e} exceeds {allowed:e}"
            )));
        }
        Ok(())
    }

    /// `x_n = λ^{-n} j_n(x)` for `x ∈ E_λ`.
    pub fn lift(&self, x: &CMatrix, lambda: C64, n: usize) -> Result<FlowOperator> {
        self.check_level(n)?;
        self.check_peripheral(x, lambda)?;
        let mut f = self.flow(x, n)?;
        f.matrix = f.matrix.scale(ONE / lambda.powu(n as u32));
        Ok(f)
    }

    /// `‖q_m x_n q_m − x_m‖` for the lift of `x ∈ E_λ`.
    pub fn martingale_residual(&self, x: &CMatrix, lambda: C64, m: usize, n: usize) -> Result<f64> {
        if m > n {
            return Err(Error::Precondition(format!("need m ≤ n, got m={m}, n={n}")));
        }
        let q = self.filtration(m)?.matrix;
        let xn = self.lift(x, lambda, n)?.matrix;
        let xm = self.lift(x, lambda, m)?.matrix;
        Ok((&(&(&q * &xn) * &q) - &xm).op_norm())
    }

    /// `ι_{0→N}^† (λ^{-n} j_n(x))(μ^{-n} j_n(y)) ι_{0→N}`, evaluated on the
    /// ambient space.
    pub fn compressed_product(&self, x: &CMatrix, lambda: C64, y: &CMatrix, mu: C64, n: usize) -> Result<CMatrix> {
        self.check_level(n)?;
        self.check_peripheral(x, lambda)?;
        self.check_peripheral(y, mu)?;
        let ground = &self.embeddings[0];
        let right = self.flow_mul(y, n, ground);
        let both = self.flow_mul(x, n, &right);
        let phase = ONE / (lambda * mu).powu(n as u32);
        Ok((&ground.adjoint() * &both).scale(phase))
    }

    /// Compares `‖Σ_j λ_j^{-n} j_n(x_j)‖` with `‖Σ_j λ_j^{-n} x_j‖` for all
    /// `n ≤ N` and, at an almost period `n*` of the `λ_j` within the depth,
    /// with `‖Σ_j x_j‖`. `epsilon = 0` is treated as machine epsilon.
    pub fn lift_norm_probe(&self, components: &[(CMatrix, C64)], epsilon: f64) -> Result<LiftNormProbe> {
        if components.is_empty() {
            return Err(Error::Empty("components"));
        }
        for (x, l) in components {
            self.check_peripheral(x, *l)?;
        }
        let d = self.dim();
        let mut report = VerificationReport::new("lift_norm_probe", None);
        let total_norm = matrix_sum(d, components.iter().map(|(x, _)| x.clone())).op_norm();
        let mut lifted_norms = Vec::with_capacity(self.depth + 1);
        let mut identity_defects = Vec::with_capacity(self.depth + 1);
        for n in 0..=self.depth {
            let mut yn = CMatrix::zeros(self.ambient_dim, self.ambient_dim);
            let mut twisted = CMatrix::zeros(d, d);
            for (x, l) in components {
                let phase = ONE / l.powu(n as u32);
                yn += &self.flow(x, n)?.matrix.scale(phase);
                twisted += &x.scale(phase);
            }
            let ny = yn.op_norm();
            lifted_norms.push(ny);
            identity_defects.push((ny - twisted.op_norm()).abs());
        }
        let worst = identity_defects.iter().copied().fold(0.0, f64::max);
        report.push(Check::at_most(
            "lift_norm_identity",
            "‖Σ λ_j^{-n} j_n(x_j)‖ = ‖Σ λ_j^{-n} x_j‖",
            worst,
            1e-10,
        ));

        let eps = epsilon.max(f64::EPSILON);
        let scale: f64 = components.iter().map(|(x, _)| x.op_norm()).sum();
        let bound = eps * scale;
        let lambdas: Vec<C64> = components.iter().map(|(_, l)| *l).collect();
        let (almost_period, bound_defect) =
            match spectral::almost_period(&lambdas, eps, self.depth as u64) {
                Ok(n_star) => {
                    let defect = (lifted_norms[n_star as usize] - total_norm).abs();
                    // the lifted norm itself is only exact to the identity tolerance
                    report.push(Check::at_most(
                        "almost_period_bound",
                        "|‖y_{n*}‖ − ‖Σ x_j‖| ≤ ε Σ ‖x_j‖",
                        defect,
                        bound + 1e-10,
                    ));
                    (Some(n_star), Some(defect))
                }
                Err(Error::AlmostPeriodExhausted { best_n, best_defect, .. }) => {
                    let closest = lifted_norms
                        .iter()
                        .skip(1)
                        .map(|v| (v - total_norm).abs())
                        .fold(f64::INFINITY, f64::min);
                    report.push(Check::skipped(
                        "almost_period_bound",
                        "|‖y_{n*}‖ − ‖Σ x_j‖| ≤ ε Σ ‖x_j‖",
                        format!(
                            "no almost period up to depth {} (best n = {best_n}, defect {best_defect:e}); closest lifted norm differs by {closest:e}",
                            self.depth
                        ),
                    ));
                    (None, None)
                }
                Err(e) => return Err(e),
            };
        Ok(LiftNormProbe {
            identity_defects,
            almost_period,
            bound_defect,
            bound,
            report,
        })
    }

    /// Rank of the span of `{j_n(x) ι_{0→N} h}` over `n ≤ N`, matrix units
    /// `x` and basis vectors `h`, against the ambient dimension.
    pub fn minimality_rank(&self) -> Result<(usize, usize)> {
        let d = self.dim();
        let ground = &self.embeddings[0];
        let mut columns = Vec::new();
        for n in 0..=self.depth {
            for a in 0..d {
                for b in 0..d {
                    let t = self.flow_mul(&CMatrix::unit(d, a, b), n, ground);
                    columns.extend(t.columns());
                }
            }
        }
        let basis = matrix::orthonormal_basis(self.ambient_dim, &columns, 1e-10)?;
        Ok((basis.len(), self.ambient_dim))
    }

    /// Markov property, filtration, flow homomorphism and lift martingales
    /// on seeded random inputs and the peripheral eigenvectors of `b`.
    pub fn verify(&self, b: &PeripheralBoundary, trials: usize, seed: u64) -> Result<VerificationReport> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = VerificationReport::new("dilation", Some(seed));
        report.extend(self.build_report.clone());

        for n in 0..self.depth {
            let q0 = self.filtration(n)?.matrix;
            let q1 = self.filtration(n + 1)?.matrix;
            let min = (&q1 - &q0).hermitian_eigenvalues()?[0];
            report.push_max("filtration_monotone", "q_n ≤ q_{n+1}", (-min).max(0.0), 1e-12);
            report.push_max(
                "filtration_projection",
                "q_n² = q_n",
                (&(&q0 * &q0) - &q0).op_norm(),
                1e-12,
            );
        }

        for _ in 0..trials {
            let x = normalized(CMatrix::random_gaussian(d, d, &mut rng));
            let y = normalized(CMatrix::random_gaussian(d, d, &mut rng));
            for n in 0..=self.depth {
                for m in 0..=n {
                    report.push_max(
                        "markov",
                        "q_m j_n(x) q_m = j_m(τ^{n−m}(x))",
                        self.markov_verify(&x, m, n)?,
                        1e-10,
                    );
                }
                let jx = self.flow(&x, n)?.matrix;
                let jy = self.flow(&y, n)?.matrix;
                let jxy = self.flow(&(&x * &y), n)?.matrix;
                let jxs = self.flow(&x.adjoint(), n)?.matrix;
                report.push_max(
                    "flow_multiplicative",
                    "j_n(x)j_n(y) = j_n(xy)",
                    (&(&jx * &jy) - &jxy).op_norm(),
                    1e-12,
                );
                report.push_max(
                    "flow_adjoint",
                    "j_n(x†) = j_n(x)†",
                    (&jxs - &jx.adjoint()).op_norm(),
                    1e-12,
                );
                report.push_max(
                    "flow_isometric",
                    "‖j_n(x)‖ = ‖x‖",
                    (jx.op_norm() - x.op_norm()).abs(),
                    1e-10,
                );
            }
        }

        for space in &b.spaces {
            for x in &space.basis {
                let nx = x.op_norm();
                for n in 0..=self.depth {
                    let lifted = self.lift(x, space.lambda, n)?.matrix;
                    report.push_max(
                        "lift_norm",
                        "‖x_n‖ = ‖x‖",
                        (lifted.op_norm() - nx).abs(),
                        1e-10,
                    );
                    for m in 0..=n {
                        report.push_max(
                            "martingale",
                            "q_m x_n q_m = x_m",
                            self.martingale_residual(x, space.lambda, m, n)?,
                            1e-10,
                        );
                    }
                }
            }
        }

        let (rank, ambient) = self.minimality_rank()?;
        report.push(Check::skipped(
            "minimality_span",
            "span{j_n(x) ι_{0→N} h} = ambient space",
            format!("diagnostic only: rank {rank} of {ambient}"),
        ));
        Ok(report)
    }
}

fn normalized(x: CMatrix) -> CMatrix {
    let n = x.op_norm();
    x.scale_real(1.0 / n)
}

fn matrix_sum(d: usize, parts: impl IntoIterator<Item = CMatrix>) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    for p in parts {
        out += &p;
    }
    out
}
