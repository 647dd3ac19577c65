//! Problem and report documents.
//!
//! Numbers are written as decimal strings with 17 significant digits, which
//! round-trips every f64 exactly. Plain JSON numbers are accepted on input.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use spdmeans::{MeanProblem, SpdMatrix, SymMatrix, WeightVector};

use crate::CliError;

pub const PROBLEM_SCHEMA: &str = "spdmeans.problem/1";
pub const REPORT_SCHEMA: &str = "spdmeans.report/1";

/// Largest |Σw − 1| that is silently renormalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-8;

/// Relative asymmetry |aᵢⱼ − aⱼᵢ| / max|a| accepted before rejecting a matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Text(String),
    Plain(f64),
}

impl Number {
    fn value(&self, field: &str) -> Result<f64, CliError> {
        let x = match self {
            Number::Plain(x) => *x,
            Number::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("{field}: '{s}' is not a number")))?,
        };
        if !x.is_finite() {
            return Err(CliError::Input(format!("{field}: value is not finite")));
        }
        Ok(x)
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub n: usize,
    pub m: usize,
    pub weights: Vec<Number>,
    /// One row-major list of n² entries per matrix.
    pub matrices: Vec<Vec<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// A single matrix: dimension plus row-major entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub n: usize,
    pub data: Vec<Number>,
}

pub fn matrix_json(a: &SymMatrix) -> Value {
    let n = a.n();
    let data: Vec<String> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| fmt_f64(a.get(i, j))).collect();
    json!({ "n": n, "data": data })
}

pub fn spd_json(a: &SpdMatrix) -> Value {
    matrix_json(a.as_sym())
}

fn parse_matrix(n: usize, data: &[Number], field: &str, index: usize) -> Result<SpdMatrix, CliError> {
    if data.len() != n * n {
        return Err(CliError::Input(format!("{field}: expected {} entries, found {}", n * n, data.len())));
    }
    let vals = data
        .iter()
        .enumerate()
        .map(|(k, x)| x.value(&format!("{field}[{k}]")))
        .collect::<Result<Vec<f64>, _>>()?;
    let scale = vals.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i * n + j] - vals[j * n + i]).abs() > SYMMETRY_TOL * scale {
                return Err(CliError::Input(format!("{field}: symmetry violation at ({i},{j})")));
            }
        }
    }
    let sym = SymMatrix::from_row_major(n, vals).map_err(|e| CliError::Input(format!("{field}: {e}")))?;
    SpdMatrix::new(sym.clone()).map_err(|_| {
        CliError::Input(format!("matrix {index} not positive definite (min eig = {:e})", sym.min_eig()))
    })
}

pub fn parse_matrix_doc(text: &str, origin: &str) -> Result<SpdMatrix, CliError> {
    let doc: MatrixDoc =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    parse_matrix(doc.n, &doc.data, "data", 0)
}

/// Validated problem plus any warnings raised while reading it.
pub fn parse_problem_str(text: &str, origin: &str) -> Result<(MeanProblem, Vec<String>), CliError> {
    let f: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {e}")))?;
    if f.schema != PROBLEM_SCHEMA {
        return Err(CliError::Input(format!("schema: expected '{PROBLEM_SCHEMA}', found '{}'", f.schema)));
    }
    if f.n == 0 || f.m == 0 {
        return Err(CliError::Input("n and m must be positive".into()));
    }
    if f.weights.len() != f.m {
        return Err(CliError::Input(format!("weights: expected {} entries, found {}", f.m, f.weights.len())));
    }
    if f.matrices.len() != f.m {
        return Err(CliError::Input(format!("matrices: expected {} matrices, found {}", f.m, f.matrices.len())));
    }
    if let Some(l) = &f.labels {
        if l.len() != f.m {
            return Err(CliError::Input(format!("labels: expected {} entries, found {}", f.m, l.len())));
        }
    }
    let w = f
        .weights
        .iter()
        .enumerate()
        .map(|(i, x)| x.value(&format!("weights[{i}]")))
        .collect::<Result<Vec<f64>, _>>()?;
    if let Some(i) = w.iter().position(|x| *x <= 0.0) {
        return Err(CliError::Input(format!("weights[{i}]: weight must be positive")));
    }
    let sum: f64 = w.iter().sum();
    let mut warnings = Vec::new();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(CliError::Input(format!("weights: sum is {sum}, expected 1 within {WEIGHT_SUM_TOL:e}")));
    } else if sum != 1.0 {
        warnings.push(format!("weights: sum {sum} renormalized to 1"));
    }
    let matrices = f
        .matrices
        .iter()
        .enumerate()
        .map(|(k, d)| parse_matrix(f.n, d, &format!("matrices[{k}]"), k))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = WeightVector::new(w).map_err(|e| CliError::Input(e.to_string()))?;
    let p = MeanProblem::new(weights, matrices).map_err(|e| CliError::Input(e.to_string()))?;
    Ok((p, warnings))
}

pub fn problem_file(p: &MeanProblem, labels: Option<Vec<String>>) -> ProblemFile {
    let n = p.n();
    ProblemFile {
        schema: PROBLEM_SCHEMA.to_string(),
        n,
        m: p.m(),
        weights: p.weights().iter().map(|w| Number::Text(fmt_f64(*w))).collect(),
        matrices: p
            .matrices()
            .iter()
            .map(|a| {
                (0..n * n).map(|k| Number::Text(fmt_f64(a.get(k / n, k % n)))).collect()
            })
            .collect(),
        labels,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Report document. Every field except `timings` is a pure function of the
/// command line and the input files.
pub struct Report {
    pub command: Vec<String>,
    pub inputs: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub citations: Vec<String>,
    pub results: Map<String, Value>,
    pub wall_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "inputs": self.inputs,
            "tolerances": self.tolerances,
            "citations": self.citations,
            "results": self.results,
            "timings": { "wall_seconds": self.wall_seconds },
        })
    }
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<(String, String), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let digest = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    Ok((text, digest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::E.powi(9), 5e-324, 1.7976931348623157e308, -2.5e-17] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn problem_round_trip() {
        let p = spdmeans::harness::random_problem(3, 3, 100.0, 4);
        let text = serde_json::to_string(&problem_file(&p, None)).unwrap();
        let (q, warnings) = parse_problem_str(&text, "mem").unwrap();
        assert!(warnings.is_empty() || p.weights().iter().sum::<f64>() != 1.0);
        for (a, b) in p.matrices().iter().zip(q.matrices()) {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(a.get(i, j).to_bits(), b.get(i, j).to_bits());
                }
            }
        }
    }

    #[test]
    fn field_errors() {
        let base = |w: &str, a: &str| {
            format!(r#"{{"schema":"{PROBLEM_SCHEMA}","n":2,"m":2,"weights":[{w}],"matrices":[[1,0,0,1],[{a}]]}}"#)
        };
        let e = parse_problem_str(&base("0.3,0.3", "1,0,0,1"), "t").unwrap_err();
        assert!(e.to_string().contains("sum"), "{e}");
        let e = parse_problem_str(&base("0.5,0.5", "1,2,2,1"), "t").unwrap_err();
        assert!(e.to_string().contains("matrix 1 not positive definite"), "{e}");
        let e = parse_problem_str(&base("0.5,0.5", "1,0.5,0.4,1"), "t").unwrap_err();
        assert!(e.to_string().contains("symmetry violation at (0,1)"), "{e}");
        let (_, w) = parse_problem_str(&base("0.5,0.500000001", "2,0,0,1"), "t").unwrap();
        assert_eq!(w.len(), 1);
        let e = parse_problem_str("{\n  \"schema\": 3\n}", "t").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }
}
