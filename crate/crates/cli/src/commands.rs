use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use periph_core::boundary::{self, PeripheralBoundary};
use periph_core::channel::{KrausChannel, UNITALITY_TOL};
use periph_core::dilation::{MarkovTower, DEFAULT_AMBIENT_CAP};
use periph_core::examples::{self, GroupSpec, SymbolSpec, ToeplitzTerm};
use periph_core::matrix::{CMatrix, ONE};
use periph_core::report::{Check, VerificationReport};
use periph_core::spectral;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::io::{self, ChannelFile, MatrixOutput};
use crate::{CliError, Command, Example, Method, Suite};

pub const CAP_ENV: &str = "PERIPH_AMBIENT_CAP";

#[derive(Debug, Serialize)]
struct Report {
    command: String,
    channel_label: String,
    seed: Option<u64>,
    tolerances: BTreeMap<String, f64>,
    checks: Vec<Check>,
    timings: BTreeMap<String, f64>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<Value>,
}

impl Report {
    fn new(command: &str, c: &KrausChannel, seed: Option<u64>) -> Self {
        let tolerances = [
            ("unitality", UNITALITY_TOL),
            ("tol_peripheral", spectral::DEFAULT_TOL_PERIPHERAL),
            ("cluster_radius", spectral::CLUSTER_RADIUS),
            ("tol_null", spectral::DEFAULT_TOL_NULL),
            ("gram_singular", spectral::GRAM_SINGULAR_TOL),
            ("span", boundary::SPAN_TOL),
            ("precondition", boundary::PRECONDITION_TOL),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            command: command.to_string(),
            channel_label: c.label().to_string(),
            seed,
            tolerances,
            checks: Vec::new(),
            timings: BTreeMap::new(),
            pass: true,
            data: None,
        }
    }

    fn absorb(&mut self, r: VerificationReport) {
        self.checks.extend(r.checks);
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }

    fn finish(mut self) -> Self {
        self.pass = !self.checks.iter().any(Check::failed);
        self
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    emit(&serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?);
    Ok(())
}

/// Ambient cap, overridable through the environment.
pub fn ambient_cap() -> Result<usize, CliError> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{CAP_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(DEFAULT_AMBIENT_CAP),
    }
}

/// Returns whether every check passed.
pub fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Spectrum {
            channel,
            tol_peripheral,
        } => spectrum(&channel, tol_peripheral),
        Command::Verify {
            channel,
            suite,
            seed,
            trials,
            depth,
            k,
        } => verify(&channel, suite, seed, trials, depth, &k),
        Command::Product {
            channel,
            x,
            y,
            method,
            cesaro_n,
            limit_n,
            depth,
        } => product(&channel, &x, &y, method, cesaro_n, limit_n, depth),
        Command::Example { example } => example_cmd(example).map(|_| true),
    }
}

fn spectrum(path: &Path, tol: f64) -> Result<bool, CliError> {
    let c = io::read_channel(path)?;
    let mut report = Report::new("spectrum", &c, None);
    report.tolerances.insert("tol_peripheral".into(), tol);
    report.checks.push(Check::at_most(
        "unitality",
        "Σ K†K = I",
        c.validate().unitality_defect,
        UNITALITY_TOL,
    ));
    let spec = report.time("spectrum", || spectral::peripheral_spectrum(&c, tol))?;
    let mut rows = Vec::new();
    for e in &spec.eigenvalues {
        let semisimple = e.geometric_multiplicity == e.algebraic_multiplicity;
        report.checks.push(Check::flag(
            format!("semisimple[{:.6}{:+.6}i]", e.lambda.re, e.lambda.im),
            "peripheral eigenvalues of a UCP map are semisimple",
            semisimple,
            (!semisimple).then(|| {
                format!(
                    "geometric {} < algebraic {}",
                    e.geometric_multiplicity, e.algebraic_multiplicity
                )
            }),
        ));
        rows.push(json!({
            "lambda": [e.lambda.re, e.lambda.im],
            "argument": spectral::argument(e.lambda),
            "geometric_multiplicity": e.geometric_multiplicity,
            "algebraic_multiplicity": e.algebraic_multiplicity,
            "semisimple": semisimple,
        }));
    }
    report.data = Some(json!({
        "dim": c.dim(),
        "eigenvalues": rows,
        "peripheral_dimension": spec.total_dimension(),
    }));
    let report = report.finish();
    print_json(&report)?;
    Ok(report.pass)
}

fn verify(path: &Path, suite: Suite, seed: u64, trials: usize, depth: usize, ks: &[usize]) -> Result<bool, CliError> {
    let c = io::read_channel(path)?;
    let mut report = Report::new("verify", &c, Some(seed));
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let cap = ambient_cap()?;
    report.tolerances.insert("ambient_cap".into(), cap as f64);

    // build the tower first so a cap violation fails before any heavy work
    let tower = if wants(Suite::Dilation) {
        Some(report.time("tower", || MarkovTower::build(&c, depth, cap))?)
    } else {
        None
    };
    let b = report.time("boundary", || PeripheralBoundary::new(&c))?;
    if wants(Suite::Cstar) {
        let r = report.time("cstar", || b.cstar_verify(trials, seed))?;
        report.absorb(r);
    }
    if wants(Suite::Automorphism) {
        let r = report.time("automorphism", || b.automorphism_check(trials, seed))?;
        report.absorb(r);
    }
    if wants(Suite::Stability) {
        for &k in ks {
            let r = report.time(&format!("stability_k{k}"), || b.stability_check(k, seed))?;
            for mut check in r.checks {
                check.name = format!("{}[k={k}]", check.name);
                report.checks.push(check);
            }
        }
    }
    if wants(Suite::Module) {
        let start = Instant::now();
        for lambda in b.lambdas() {
            let r = b.module_structure_check(lambda, trials, seed)?;
            for mut check in r.checks {
                check.name = format!("{}[{:.6}{:+.6}i]", check.name, lambda.re, lambda.im);
                report.checks.push(check);
            }
        }
        report.timings.insert("module".into(), start.elapsed().as_secs_f64());
    }
    if let Some(t) = tower {
        report.absorb(t.build_report.clone());
        let r = report.time("dilation", || t.verify(&b, trials, seed))?;
        report.absorb(r);
    }
    let report = report.finish();
    print_json(&report)?;
    Ok(report.pass)
}

fn product(
    path: &Path,
    x_path: &Path,
    y_path: &Path,
    method: Method,
    cesaro_n: usize,
    limit_n: usize,
    depth: usize,
) -> Result<bool, CliError> {
    let c = io::read_channel(path)?;
    let x = io::read_matrix(x_path)?;
    let y = io::read_matrix(y_path)?;
    for (name, m) in [("x", &x), ("y", &y)] {
        if m.rows() != c.dim() || m.cols() != c.dim() {
            return Err(CliError::Input(format!(
                "{name} is {}, channel acts on {}x{}",
                m.shape_str(),
                c.dim(),
                c.dim()
            )));
        }
    }
    let cap = ambient_cap()?;
    let mut report = Report::new("product", &c, None);
    report.tolerances.insert("ambient_cap".into(), cap as f64);
    let b = report.time("boundary", || PeripheralBoundary::new(&c))?;
    let ex = b.decompose_peripheral(&x)?;
    let ey = b.decompose_peripheral(&y)?;
    let pairs: Vec<_> = ex
        .components
        .iter()
        .flat_map(|(l, xl)| ey.components.iter().map(move |(m, ym)| (*l, xl, *m, ym)))
        .collect();
    let d = c.dim();
    let sum_over = |f: &dyn Fn(Complex64, &CMatrix, Complex64, &CMatrix) -> periph_core::Result<CMatrix>| {
        pairs.iter().try_fold(CMatrix::zeros(d, d), |mut acc, (l, xl, m, ym)| {
            acc += &f(*l, xl, *m, ym)?;
            Ok::<_, periph_core::Error>(acc)
        })
    };

    let spectral_product = report.time("spectral", || b.product_general(&ex, &ey).map(|p| p.matrix))?;
    let mut results: Vec<(Method, CMatrix)> = vec![(Method::Spectral, spectral_product.clone())];
    let cesaro = report.time("cesaro", || sum_over(&|l, xl, m, ym| b.cesaro_product(xl, l, ym, m, cesaro_n)))?;
    results.push((Method::Cesaro, cesaro));
    let limit = report.time("limit", || {
        sum_over(&|l, xl, m, ym| {
            let z = c.power_apply(&(xl * ym), limit_n)?;
            Ok(z.scale(ONE / (l * m).powu(limit_n as u32)))
        })
    })?;
    results.push((Method::Limit, limit));
    let scale = x.op_norm() * y.op_norm();
    match report.time("tower", || MarkovTower::build(&c, depth, cap)) {
        Ok(t) => {
            let p = report.time("dilation", || {
                sum_over(&|l, xl, m, ym| t.compressed_product(xl, l, ym, m, depth))
            })?;
            results.push((Method::Dilation, p));
        }
        Err(e @ periph_core::Error::CapExceeded { .. }) if method != Method::Dilation => {
            report.checks.push(Check::skipped(
                "agreement_dilation",
                "x∘y = lim (λμ)^{-n} p θⁿ(x̃ỹ) p",
                format!("tower not built: {e}"),
            ));
        }
        Err(e) => return Err(e.into()),
    }
    for (m, p) in &results[1..] {
        let (name, anchor, threshold) = match m {
            Method::Cesaro => (
                "agreement_cesaro",
                "x∘y = lim (1/N) Σ (λμ)^{-n} τⁿ(xy)",
                1e-2 * scale,
            ),
            Method::Limit => ("agreement_limit", "x∘y = lim (λμ)^{-n} τⁿ(xy)", 1e-8 * scale),
            _ => (
                "agreement_dilation",
                "x∘y = lim (λμ)^{-n} p θⁿ(x̃ỹ) p",
                1e-8 * scale,
            ),
        };
        report
            .checks
            .push(Check::at_most(name, anchor, (&spectral_product - p).op_norm(), threshold));
    }
    let chosen = results
        .iter()
        .find(|(m, _)| *m == method)
        .map(|(_, p)| p.clone())
        .expect("chosen method was computed");
    report.data = Some(json!({
        "cesaro_n": cesaro_n,
        "limit_n": limit_n,
        "depth": depth,
        "components": ex.components.len() * ey.components.len(),
    }));
    let report = report.finish();
    let method_name = format!("{method:?}").to_lowercase();
    print_json(&json!({
        "method": method_name,
        "product": MatrixOutput { dim: d, rows: io::to_rows(&chosen) },
        "report": report,
    }))?;
    Ok(report.pass)
}

fn parse_group(text: &str) -> Result<GroupSpec, CliError> {
    let mut group: Option<GroupSpec> = None;
    for factor in text.split(['x', '×']) {
        let n: usize = factor
            .trim()
            .strip_prefix(['Z', 'z'])
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| CliError::Input(format!("unknown group factor {factor:?}; use Zn, e.g. Z2xZ3")))?;
        let z = GroupSpec::cyclic(n)?;
        group = Some(match group {
            None => z,
            Some(g) => GroupSpec::product(&g, &z)?,
        });
    }
    group.ok_or_else(|| CliError::Input("empty group".into()))
}

fn example_cmd(example: Example) -> Result<(), CliError> {
    let complex = |s: &str| io::parse_complex(s).map_err(CliError::Input);
    let (channel, metadata) = match example {
        Example::Unitary { diag } => {
            let entries = io::parse_complex_list(&diag).map_err(CliError::Input)?;
            let (c, fx) = examples::unitary_channel(&CMatrix::diag(&entries))?;
            let mut meta = Map::new();
            meta.insert("generator".into(), json!("unitary"));
            meta.insert("diag".into(), json!(entries.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()));
            meta.insert("fixed_dim".into(), json!(fx.fixed_dim));
            meta.insert("peripheral_dim".into(), json!(fx.total_dim));
            (c, meta)
        }
        Example::Weyl { d, n, probs } => {
            let probs = io::parse_f64_list(&probs).map_err(CliError::Input)?;
            let (c, fx) = examples::weyl_channel(d, n, &probs)?;
            let mut meta = Map::new();
            meta.insert("generator".into(), json!("weyl"));
            meta.insert("d".into(), json!(d));
            meta.insert("n".into(), json!(n));
            meta.insert("probs".into(), json!(probs));
            meta.insert("omega".into(), json!([fx.omega.re, fx.omega.im]));
            meta.insert("relation_defect".into(), json!(fx.relation_defect));
            (c, meta)
        }
        Example::GroupWalk { group, mu } => {
            let g = parse_group(&group)?;
            let mu = io::parse_f64_list(&mu).map_err(CliError::Input)?;
            let (c, fx) = examples::group_walk_channel(&g, &mu)?;
            let predicted: Vec<[f64; 2]> = fx.predictions.iter().map(|(l, _)| [l.re, l.im]).collect();
            let mut meta = Map::new();
            meta.insert("generator".into(), json!("group-walk"));
            meta.insert("group".into(), json!(group));
            meta.insert("labels".into(), json!(g.labels()));
            meta.insert("mu".into(), json!(mu));
            meta.insert("predicted_eigenvalues".into(), json!(predicted));
            (c, meta)
        }
        Example::ToeplitzDemo {
            m,
            symbol,
            lambda,
            symbol2,
            lambda2,
        } => {
            let f = SymbolSpec::parse(&symbol)?;
            let lambda = complex(&lambda)?;
            let mut terms = vec![ToeplitzTerm::new(ONE, f.clone(), lambda)];
            if let Some(s) = symbol2 {
                terms.push(ToeplitzTerm::new(ONE, SymbolSpec::parse(&s)?, complex(&lambda2)?));
            }
            emit("M,r,compressed_norm,full_norm,defect");
            for r in examples::toeplitz_ladder(&m, &terms)? {
                // a single term is paired with itself for the product law
                let defect = match r.product_defect {
                    Some(v) => v,
                    None => examples::toeplitz_product_defect(r.truncation, &f, lambda, &f, lambda)?,
                };
                emit(&format!(
                    "{},{},{},{},{}",
                    r.truncation, r.ratio, r.compressed_norm, r.full_norm, defect
                ));
            }
            return Ok(());
        }
    };
    // compact: pretty-printed [re, im] pairs are unreadable anyway
    let file = ChannelFile::from_channel(&channel, metadata);
    emit(&serde_json::to_string(&file).map_err(|e| CliError::Input(e.to_string()))?);
    Ok(())
}
