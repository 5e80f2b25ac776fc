use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::matrix::{self, cis, CMatrix, C64, ONE, ZERO};
use crate::spectral::{self, CLUSTER_RADIUS};

/// A finite group given by its multiplication table: `table[a][b] = a·b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupSpec {
    table: Vec<Vec<usize>>,
    labels: Vec<String>,
    identity: usize,
    inverses: Vec<usize>,
}

impl GroupSpec {
    /// Validates closure, associativity, identity and inverses on the table.
    pub fn from_table(table: Vec<Vec<usize>>, labels: Vec<String>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidGroup(format!("{} labels for order {n}", labels.len())));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::InvalidGroup("table is not an n x n array of elements".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup(format!("not associative at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| table[e][a] == a && table[a][e] == a))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let inverses = (0..n)
            .map(|a| {
                (0..n)
                    .find(|&b| table[a][b] == identity && table[b][a] == identity)
                    .ok_or_else(|| Error::InvalidGroup(format!("element {a} has no inverse")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            table,
            labels,
            identity,
            inverses,
        })
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(table, (0..n).map(|k| k.to_string()).collect())
    }

    /// Direct product; element `(a, b)` has index `a·|H| + b`.
    pub fn product(g: &GroupSpec, h: &GroupSpec) -> Result<Self> {
        let (n, m) = (g.order(), h.order());
        let table = (0..n * m)
            .map(|x| {
                (0..n * m)
                    .map(|y| g.mul(x / m, y / m) * m + h.mul(x % m, y % m))
                    .collect()
            })
            .collect();
        let labels = (0..n * m)
            .map(|x| format!("({},{})", g.labels[x / m], h.labels[x % m]))
            .collect();
        Self::from_table(table, labels)
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    /// `R(g) δ_h = δ_{h g^{-1}}`.
    pub fn right_regular(&self, g: usize) -> CMatrix {
        let n = self.order();
        let gi = self.inverse(g);
        CMatrix::from_fn(n, n, |row, h| if row == self.mul(h, gi) { ONE } else { ZERO })
    }

    /// `L(g) δ_h = δ_{g h}`.
    pub fn left_regular(&self, g: usize) -> CMatrix {
        let n = self.order();
        CMatrix::from_fn(n, n, |row, h| if row == self.mul(g, h) { ONE } else { ZERO })
    }

    /// One-dimensional characters, as value vectors indexed by element.
    /// Joint eigenvectors of the left regular representation are read off
    /// from a generic combination `Σ c_g L(g)`; values are rounded to
    /// `|G|`-th roots of unity and checked to be homomorphisms.
    pub fn characters(&self) -> Result<Vec<Vec<C64>>> {
        let n = self.order();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut generic = CMatrix::zeros(n, n);
        let lefts: Vec<CMatrix> = (0..n).map(|g| self.left_regular(g)).collect();
        for l in &lefts {
            generic += &l.scale(matrix::random_complex(&mut rng));
        }
        let eig = matrix::eig(&generic)?;
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut found: Vec<Vec<C64>> = Vec::new();
        for v in eig.right_vectors.columns() {
            let norm = matrix::vec_norm(&v);
            let v: Vec<C64> = v.iter().map(|x| x / norm).collect();
            let mut chi = Vec::with_capacity(n);
            let mut joint = true;
            for l in &lefts {
                let lv = l.mat_vec(&v);
                let value = matrix::vec_inner(&v, &lv);
                let rest = matrix::axpy(-value, &v, &lv);
                if matrix::vec_norm(&rest) > 1e-8 || (value.norm() - 1.0).abs() > 1e-8 {
                    joint = false;
                    break;
                }
                chi.push(cis((spectral::argument(value) / step).round() * step));
            }
            if !joint {
                continue;
            }
            let homomorphic = (0..n).all(|a| {
                (0..n).all(|b| (chi[self.mul(a, b)] - chi[a] * chi[b]).norm() < 1e-9)
            });
            let duplicate = found
                .iter()
                .any(|f| f.iter().zip(&chi).all(|(x, y)| (x - y).norm() < 1e-9));
            if homomorphic && !duplicate {
                found.push(chi);
            }
        }
        found.sort_by(|a, b| {
            a.iter()
                .map(|z| spectral::argument(*z))
                .collect::<Vec<_>>()
                .partial_cmp(&b.iter().map(|z| spectral::argument(*z)).collect::<Vec<_>>())
                .expect("finite arguments")
        });
        Ok(found)
    }
}

/// Characters constant on `S = supp(μ)` with their common value `λ`; each
/// predicts `V_χ = diag(χ(h)) ∈ E_λ`.
#[derive(Clone, Debug)]
pub struct GroupWalkFixture {
    pub support: Vec<usize>,
    pub predictions: Vec<(C64, CMatrix)>,
}

fn check_measure(g: &GroupSpec, mu: &[f64]) -> Result<Vec<usize>> {
    if mu.len() != g.order() {
        return Err(Error::InvalidProbabilities(format!(
            "expected {} weights, got {}",
            g.order(),
            mu.len()
        )));
    }
    if let Some(p) = mu.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities(format!("weight {p} is negative")));
    }
    let total: f64 = mu.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!("weights sum to {total}")));
    }
    Ok((0..mu.len()).filter(|&i| mu[i] > 0.0).collect())
}

fn constant_on(chi: &[C64], support: &[usize]) -> Option<C64> {
    let first = chi[support[0]];
    support
        .iter()
        .all(|&s| (chi[s] - first).norm() < 1e-9)
        .then_some(first)
}

/// `X ↦ Σ_g μ(g) R(g) X R(g)^†` with Kraus family `{√μ(g) R(g)^†}`.
pub fn group_walk_channel(g: &GroupSpec, mu: &[f64]) -> Result<(KrausChannel, GroupWalkFixture)> {
    let support = check_measure(g, mu)?;
    let kraus = support
        .iter()
        .map(|&s| g.right_regular(s).adjoint().scale_real(mu[s].sqrt()))
        .collect();
    let channel = KrausChannel::new(kraus, format!("group-walk(|G|={})", g.order()))?;
    let mut predictions = Vec::new();
    for chi in g.characters()? {
        if let Some(lambda) = constant_on(&chi, &support) {
            predictions.push((lambda, CMatrix::diag(&chi)));
        }
    }
    Ok((
        channel,
        GroupWalkFixture {
            support,
            predictions,
        },
    ))
}

/// Character predictions compared with the numerical peripheral spectrum.
/// Agreement is reported, not asserted.
#[derive(Clone, Debug, Serialize)]
pub struct CharacterScan {
    pub abelian: bool,
    pub characters: usize,
    #[serde(serialize_with = "serialize_list")]
    pub predicted: Vec<C64>,
    #[serde(serialize_with = "serialize_list")]
    pub numerical: Vec<C64>,
    /// Predicted values absent from the numerics.
    #[serde(serialize_with = "serialize_list")]
    pub missing: Vec<C64>,
    /// Numerical peripheral eigenvalues with no character behind them.
    #[serde(serialize_with = "serialize_list")]
    pub unexplained: Vec<C64>,
    pub agree: bool,
}

fn serialize_list<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub fn character_scan(g: &GroupSpec, mu: &[f64]) -> Result<CharacterScan> {
    let (channel, fixture) = group_walk_channel(g, mu)?;
    let mut predicted: Vec<C64> = Vec::new();
    for (l, _) in &fixture.predictions {
        if !predicted.iter().any(|p| (p - l).norm() <= CLUSTER_RADIUS) {
            predicted.push(*l);
        }
    }
    predicted.sort_by(|a, b| spectral::argument(*a).total_cmp(&spectral::argument(*b)));
    let numerical = spectral::peripheral_spectrum(&channel, spectral::DEFAULT_TOL_PERIPHERAL)?.lambdas();
    let near = |a: &C64, set: &[C64]| set.iter().any(|b| (a - b).norm() <= 1e-6);
    let missing: Vec<C64> = predicted.iter().filter(|p| !near(p, &numerical)).copied().collect();
    let unexplained: Vec<C64> = numerical.iter().filter(|v| !near(v, &predicted)).copied().collect();
    Ok(CharacterScan {
        abelian: g.is_abelian(),
        characters: g.characters()?.len(),
        agree: missing.is_empty() && unexplained.is_empty(),
        predicted,
        numerical,
        missing,
        unexplained,
    })
}
