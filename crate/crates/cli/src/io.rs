//! File formats: channels, matrices and complex-number literals.

use std::path::Path;

use num_complex::Complex64;
use periph_core::channel::{KrausChannel, UNITALITY_TOL};
use periph_core::matrix::CMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const CHANNEL_SCHEMA: &str = "periph-channel/1";

pub type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub schema: String,
    pub dim: usize,
    pub kraus: Vec<Rows>,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub metadata: Map<String, Value>,
}

/// A bare array of rows, or `{"rows": [...]}` as written by `product`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Rows(Rows),
    Wrapped { rows: Rows },
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixOutput {
    pub dim: usize,
    pub rows: Rows,
}

pub fn to_rows(m: &CMatrix) -> Rows {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn from_rows(rows: &Rows) -> Result<CMatrix, CliError> {
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])).collect())
        .collect();
    CMatrix::from_rows(&rows).map_err(|e| CliError::Input(e.to_string()))
}

impl ChannelFile {
    pub fn from_channel(c: &KrausChannel, metadata: Map<String, Value>) -> Self {
        Self {
            schema: CHANNEL_SCHEMA.to_string(),
            dim: c.dim(),
            kraus: c.kraus().iter().map(to_rows).collect(),
            label: c.label().to_string(),
            metadata,
        }
    }

    /// Shape checks plus unitality at the channel module's tolerance.
    pub fn to_channel(&self) -> Result<KrausChannel, CliError> {
        if self.schema != CHANNEL_SCHEMA {
            return Err(CliError::Input(format!(
                "unsupported schema {:?}, expected {CHANNEL_SCHEMA:?}",
                self.schema
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len());
        for (i, rows) in self.kraus.iter().enumerate() {
            let k = from_rows(rows)?;
            if k.rows() != self.dim || k.cols() != self.dim {
                return Err(CliError::Input(format!(
                    "Kraus operator {i} is {}, expected {}x{}",
                    k.shape_str(),
                    self.dim,
                    self.dim
                )));
            }
            kraus.push(k);
        }
        let c = KrausChannel::new(kraus, self.label.clone()).map_err(|e| CliError::Input(e.to_string()))?;
        let v = c.validate();
        if !v.pass {
            return Err(CliError::Input(format!(
                "channel is not unital: ‖Σ K†K − I‖ = {:e} > {UNITALITY_TOL:e}",
                v.unitality_defect
            )));
        }
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_channel(path: &Path) -> Result<KrausChannel, CliError> {
    let file: ChannelFile =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    file.to_channel()
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let input: MatrixInput =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let rows = match input {
        MatrixInput::Rows(r) | MatrixInput::Wrapped { rows: r } => r,
    };
    from_rows(&rows)
}

/// Parses `3`, `-i`, `2.5i`, `1+2i`, `1e-3-4i`, or polar `cis(θ)`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(arg) = s.strip_prefix("cis(").and_then(|r| r.strip_suffix(')')) {
        let theta: f64 = arg.parse().map_err(|_| format!("bad angle in {text:?}"))?;
        return Ok(Complex64::from_polar(1.0, theta));
    }
    let imag = |part: &str| -> Result<f64, String> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            p => p.parse().map_err(|_| format!("bad complex literal {text:?}")),
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().map(|re| Complex64::new(re, 0.0)).map_err(|_| format!("bad complex literal {text:?}"));
    };
    // split at the last sign that is neither leading nor an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().map_err(|_| format!("bad complex literal {text:?}"))?;
            Ok(Complex64::new(re, imag(&body[k..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, String> {
    text.split(',').map(parse_complex).collect()
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad number {s:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(parse_complex("1+2i").unwrap(), c(1.0, 2.0));
        assert_eq!(parse_complex("1e-3-4i").unwrap(), c(1e-3, -4.0));
        assert_eq!(parse_complex("-1-i").unwrap(), c(-1.0, -1.0));
        assert_eq!(parse_complex("2e+1i").unwrap(), c(0.0, 20.0));
        let z = parse_complex("cis(3.141592653589793)").unwrap();
        assert!((z - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn channel_file_round_trip_is_bit_exact() {
        let k = CMatrix::from_rows(&[
            vec![Complex64::new(0.1, 1.0 / 3.0), Complex64::new(f64::EPSILON, -0.0)],
            vec![Complex64::new(1e-300, 0.0), Complex64::new(std::f64::consts::PI, 2.0f64.sqrt())],
        ])
        .unwrap();
        let file = ChannelFile {
            schema: CHANNEL_SCHEMA.into(),
            dim: 2,
            kraus: vec![to_rows(&k)],
            label: "t".into(),
            metadata: Map::new(),
        };
        let text = serde_json::to_string(&file).unwrap();
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(from_rows(&back.kraus[0]).unwrap(), k);
    }
}
