use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{cis, CMatrix, C64, ONE, ZERO};

/// Grid size for evaluating `‖f‖_∞`.
pub const SUP_NORM_GRID: usize = 4096;

/// Trigonometric polynomial `f(z) = Σ_k f̂(k) z^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolSpec {
    coefficients: BTreeMap<i64, C64>,
}

impl SymbolSpec {
    pub fn new(coefficients: impl IntoIterator<Item = (i64, C64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, c) in coefficients {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite);
            }
            *map.entry(k).or_insert(ZERO) += c;
        }
        map.retain(|_, c| *c != ZERO);
        Ok(Self { coefficients: map })
    }

    pub fn constant(c: C64) -> Self {
        Self::new([(0, c)]).expect("finite")
    }

    /// Parses `"k:re"` or `"k:re:im"` items separated by commas,
    /// e.g. `"1:1,-1:1"` for `z + z^{-1}`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let bad = || Error::Precondition(format!("cannot parse symbol term {item:?}"));
            let k: i64 = parts.first().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let re: f64 = parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = match parts.get(2) {
                Some(s) => s.parse().map_err(|_| bad())?,
                None => 0.0,
            };
            if parts.len() > 3 {
                return Err(bad());
            }
            items.push((k, C64::new(re, im)));
        }
        Self::new(items)
    }

    pub fn coefficient(&self, k: i64) -> C64 {
        self.coefficients.get(&k).copied().unwrap_or(ZERO)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coefficients.iter().map(|(k, c)| (*k, *c))
    }

    /// `max |k|` over nonzero coefficients.
    pub fn support(&self) -> usize {
        self.coefficients.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coefficients.iter().map(|(k, c)| c * z.powi(*k as i32)).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..SUP_NORM_GRID)
            .map(|j| self.eval(cis(2.0 * std::f64::consts::PI * j as f64 / SUP_NORM_GRID as f64)).norm())
            .fold(0.0, f64::max)
    }

    /// `z ↦ f(λz)`.
    pub fn dilate(&self, lambda: C64) -> Self {
        Self::new(self.coefficients().map(|(k, c)| (k, c * lambda.powi(k as i32)))).expect("finite")
    }

    pub fn multiply(&self, other: &SymbolSpec) -> Self {
        let mut terms = Vec::new();
        for (j, a) in self.coefficients() {
            for (k, b) in other.coefficients() {
                terms.push((j + k, a * b));
            }
        }
        Self::new(terms).expect("finite")
    }
}

/// `c · M_f V_λ`.
#[derive(Clone, Debug)]
pub struct ToeplitzTerm {
    pub coeff: C64,
    pub symbol: SymbolSpec,
    pub lambda: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToeplitzReport {
    pub truncation: usize,
    /// `‖P X P‖` on modes `0..=M`.
    pub compressed_norm: f64,
    /// `‖X‖` on modes `−M..=M`.
    pub full_norm: f64,
    /// `r(M) = ‖P X P‖ / ‖X‖`.
    pub ratio: f64,
    /// Interior defect of the product law for the first two terms, if any.
    pub product_defect: Option<f64>,
}

/// `(M_f)_{k,l} = f̂(k − l)` on modes `−M..=M`.
fn multiplication(symbol: &SymbolSpec, m: usize) -> CMatrix {
    let n = 2 * m + 1;
    CMatrix::from_fn(n, n, |k, l| symbol.coefficient(k as i64 - l as i64))
}

/// `diag(λ^k)` on modes `−M..=M`.
fn rotation(lambda: C64, m: usize) -> CMatrix {
    let entries: Vec<C64> = (0..2 * m + 1).map(|i| lambda.powi(i as i32 - m as i32)).collect();
    CMatrix::diag(&entries)
}

/// Rows and columns for modes `0..=top`.
fn corner(x: &CMatrix, m: usize, top: usize) -> CMatrix {
    x.block(m, m, top + 1, top + 1)
}

fn check(m: usize, symbols: &[&SymbolSpec], lambdas: &[C64]) -> Result<()> {
    let support = symbols.iter().map(|s| s.support()).max().unwrap_or(0);
    if m < support.max(1) {
        return Err(Error::TruncationTooSmall {
            truncation: m,
            support,
        });
    }
    if let Some(l) = lambdas.iter().find(|l| (l.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::Precondition(format!("|λ| must be 1, got {}", l.norm())));
    }
    Ok(())
}

/// `‖P M_f V_λ M_g V_μ P − P M_{f·g(λ·)} V_{λμ} P‖` on modes
/// `0..=M − s`, `s` the larger symbol support.
pub fn toeplitz_product_defect(
    m: usize,
    f: &SymbolSpec,
    lambda: C64,
    g: &SymbolSpec,
    mu: C64,
) -> Result<f64> {
    check(m, &[f, g], &[lambda, mu])?;
    let band = f.support().max(g.support());
    let lhs = &(&(&multiplication(f, m) * &rotation(lambda, m)) * &multiplication(g, m)) * &rotation(mu, m);
    let law = f.multiply(&g.dilate(lambda));
    let rhs = &multiplication(&law, m) * &rotation(lambda * mu, m);
    let top = m - band;
    Ok((&corner(&lhs, m, top) - &corner(&rhs, m, top)).op_norm())
}

pub fn toeplitz_demo(m: usize, terms: &[ToeplitzTerm]) -> Result<ToeplitzReport> {
    if terms.is_empty() {
        return Err(Error::Empty("Toeplitz terms"));
    }
    let symbols: Vec<&SymbolSpec> = terms.iter().map(|t| &t.symbol).collect();
    let lambdas: Vec<C64> = terms.iter().map(|t| t.lambda).collect();
    check(m, &symbols, &lambdas)?;
    let n = 2 * m + 1;
    let mut x = CMatrix::zeros(n, n);
    for t in terms {
        x += &(&multiplication(&t.symbol, m) * &rotation(t.lambda, m)).scale(t.coeff);
    }
    let full_norm = x.op_norm();
    let compressed_norm = corner(&x, m, m).op_norm();
    let ratio = if full_norm == 0.0 { 1.0 } else { compressed_norm / full_norm };
    let product_defect = match terms {
        [a, b, ..] => Some(toeplitz_product_defect(m, &a.symbol, a.lambda, &b.symbol, b.lambda)?),
        _ => None,
    };
    Ok(ToeplitzReport {
        truncation: m,
        compressed_norm,
        full_norm,
        ratio,
        product_defect,
    })
}

pub fn toeplitz_ladder(ms: &[usize], terms: &[ToeplitzTerm]) -> Result<Vec<ToeplitzReport>> {
    ms.iter().map(|&m| toeplitz_demo(m, terms)).collect()
}

impl ToeplitzTerm {
    pub fn new(coeff: C64, symbol: SymbolSpec, lambda: C64) -> Self {
        Self { coeff, symbol, lambda }
    }

    pub fn single(symbol: SymbolSpec) -> Self {
        Self::new(ONE, symbol, ONE)
    }
}
