//! Run configuration: a JSON object with keys `marginal`, `corr`, `n`,
//! `seed`, and optionally `output` and `format`.
//!
//! ```json
//! {"marginal": {"family": "exponential", "lambda": 1},
//!  "corr": -0.5, "n": 1000, "seed": 7}
//! ```
//!
//! `corr` is a number (bivariate), `{"dim": d, "rho": r}` (d coordinates,
//! pairwise correlation `r^2`) or `{"matrix": [[...], ...]}`.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::marginals::{Family, Marginal};
use crate::multigen::CorrMatrix;

pub const FAMILIES: [&str; 9] = [
    "uniform",
    "uniform01",
    "arcsine",
    "exponential",
    "weibull",
    "erlang",
    "beta_pow",
    "beta_int",
    "gaussian",
];

const KEYS: [&str; 6] = ["marginal", "corr", "n", "seed", "output", "format"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrSpec {
    Pair(f64),
    Equicorrelated { dim: usize, rho: f64 },
    Matrix(CorrMatrix),
}

impl CorrSpec {
    pub fn dim(&self) -> usize {
        match self {
            CorrSpec::Pair(_) => 2,
            CorrSpec::Equicorrelated { dim, .. } => *dim,
            CorrSpec::Matrix(m) => m.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub marginal: Marginal,
    pub corr: CorrSpec,
    pub n: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// The parsed document, echoed into manifests.
    pub source: Value,
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "invalid configuration ({} problem(s)):",
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &[u8]) -> Result<RunConfig, ConfigError> {
    let fail = |v: String| ConfigError {
        violations: vec![v],
    };
    let text = std::str::from_utf8(text).map_err(|e| fail(format!("config is not UTF-8: {e}")))?;
    let doc: Value =
        serde_json::from_str(text).map_err(|e| fail(format!("config is not valid JSON: {e}")))?;
    parse_value(doc)
}

pub fn parse_value(doc: Value) -> Result<RunConfig, ConfigError> {
    let mut errs = Vec::new();
    let Some(obj) = doc.as_object() else {
        return Err(ConfigError {
            violations: vec!["config must be a JSON object".into()],
        });
    };
    for k in obj.keys() {
        if !KEYS.contains(&k.as_str()) {
            errs.push(format!("unknown key `{k}`"));
        }
    }

    let marginal = match obj.get("marginal") {
        None => {
            errs.push("missing key `marginal`".into());
            None
        }
        Some(v) => parse_marginal(v).map_err(|e| errs.push(e)).ok(),
    };

    let corr = match obj.get("corr") {
        None => {
            errs.push("missing key `corr`".into());
            None
        }
        Some(v) => parse_corr(v, &mut errs),
    };

    let n = match obj.get("n") {
        None => {
            errs.push("missing key `n`".into());
            None
        }
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Some(n as usize),
            _ => {
                errs.push(format!("`n` must be an integer >= 1, got {v}"));
                None
            }
        },
    };

    let seed = match obj.get("seed") {
        None => {
            errs.push("missing key `seed` (runs must be seeded explicitly)".into());
            None
        }
        Some(v) => v.as_u64().or_else(|| {
            errs.push(format!(
                "`seed` must be an unsigned 64-bit integer, got {v}"
            ));
            None
        }),
    };

    let output = match obj.get("output") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            errs.push(format!("`output` must be a path string, got {v}"));
            None
        }
    };

    let format = match obj.get("format") {
        None | Some(Value::Null) => Some(Format::Csv),
        Some(v) => serde_json::from_value::<Format>(v.clone())
            .map_err(|_| errs.push(format!("`format` must be \"csv\" or \"jsonl\", got {v}")))
            .ok(),
    };

    match (marginal, corr, n, seed, format) {
        (Some(marginal), Some(corr), Some(n), Some(seed), Some(format)) if errs.is_empty() => {
            Ok(RunConfig {
                marginal,
                corr,
                n,
                seed,
                output,
                format,
                source: doc,
            })
        }
        _ => Err(ConfigError { violations: errs }),
    }
}

pub(crate) fn parse_marginal(v: &Value) -> Result<Marginal, String> {
    let Some(obj) = v.as_object() else {
        return Err(format!("`marginal` must be an object, got {v}"));
    };
    match obj.get("family") {
        None => return Err("`marginal.family` is missing".into()),
        Some(Value::String(f)) if !FAMILIES.contains(&f.as_str()) => {
            return Err(format!(
                "unknown family `{f}`; expected one of {}",
                FAMILIES.join(", ")
            ))
        }
        Some(Value::String(_)) => {}
        Some(f) => return Err(format!("`marginal.family` must be a string, got {f}")),
    }
    let family: Family = serde_json::from_value(v.clone())
        .map_err(|e| format!("invalid parameters for marginal: {e}"))?;
    // serde lets extra keys through on parameterless families.
    let known = serde_json::to_value(family).expect("family serializes");
    if let Some(k) = obj.keys().find(|k| known.get(k.as_str()).is_none()) {
        return Err(format!(
            "invalid parameters for marginal: unknown field `{k}`"
        ));
    }
    Marginal::new(family).map_err(|e| format!("marginal: {e}"))
}

fn parse_corr(v: &Value, errs: &mut Vec<String>) -> Option<CorrSpec> {
    match v {
        Value::Number(x) => {
            let r = x.as_f64().unwrap_or(f64::NAN);
            if r.abs() <= 1.0 {
                Some(CorrSpec::Pair(r))
            } else {
                errs.push(format!("`corr` must lie in [-1, 1], got {r}"));
                None
            }
        }
        Value::Object(o) => parse_corr_object(o, errs),
        _ => {
            errs.push(format!(
                "`corr` must be a number, {{\"dim\": d, \"rho\": r}} or {{\"matrix\": [[...]]}}, got {v}"
            ));
            None
        }
    }
}

fn parse_corr_object(o: &Map<String, Value>, errs: &mut Vec<String>) -> Option<CorrSpec> {
    if let Some(rows) = o.get("matrix") {
        if o.len() != 1 {
            errs.push("`corr.matrix` cannot be combined with other keys".into());
        }
        let rows: Vec<Vec<f64>> = match serde_json::from_value(rows.clone()) {
            Ok(r) => r,
            Err(_) => {
                errs.push("`corr.matrix` must be an array of numeric rows".into());
                return None;
            }
        };
        let problems = CorrMatrix::violations(&rows);
        if problems.is_empty() {
            return CorrMatrix::new(rows).ok().map(CorrSpec::Matrix);
        }
        errs.extend(problems.into_iter().map(|p| format!("corr.matrix: {p}")));
        return None;
    }
    let mut ok = true;
    for k in o.keys() {
        if k != "dim" && k != "rho" {
            errs.push(format!("unknown key `corr.{k}`"));
            ok = false;
        }
    }
    let dim = match o.get("dim").and_then(Value::as_u64) {
        Some(d) if d >= 2 => Some(d as usize),
        _ => {
            errs.push("`corr.dim` must be an integer >= 2".into());
            None
        }
    };
    let rho = match o.get("rho").and_then(Value::as_f64) {
        Some(r) if r.abs() <= 1.0 => Some(r),
        _ => {
            errs.push("`corr.rho` must be a number in [-1, 1]".into());
            None
        }
    };
    match (dim, rho) {
        (Some(dim), Some(rho)) if ok => Some(CorrSpec::Equicorrelated { dim, rho }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_example() {
        let c = parse_config(
            br#"{"marginal":{"family":"exponential","lambda":1},"corr":-0.5,"n":1000,"seed":7}"#,
        )
        .unwrap();
        assert_eq!(c.marginal, Marginal::exponential(1.0).unwrap());
        assert_eq!(c.corr, CorrSpec::Pair(-0.5));
        assert_eq!((c.n, c.seed, c.format), (1000, 7, Format::Csv));
    }

    #[test]
    fn equicorrelated_and_matrix() {
        let c = parse_config(
            br#"{"marginal":{"family":"uniform01"},"corr":{"dim":3,"rho":0.5},"n":10,"seed":1,"format":"jsonl"}"#,
        )
        .unwrap();
        assert_eq!(c.corr, CorrSpec::Equicorrelated { dim: 3, rho: 0.5 });
        assert_eq!(c.format, Format::Jsonl);
        let c = parse_config(
            br#"{"marginal":{"family":"beta_int","nu1":4,"nu2":7},"corr":{"matrix":[[1,0.4,0.3],[0.4,1,0.2],[0.3,0.2,1]]},"n":10,"seed":1}"#,
        )
        .unwrap();
        assert_eq!(c.corr.dim(), 3);
    }

    #[test]
    fn non_unit_diagonal() {
        let e = parse_config(
            br#"{"marginal":{"family":"uniform"},"corr":{"matrix":[[0.9,0.2],[0.2,1]]},"n":10,"seed":1}"#,
        )
        .unwrap_err();
        assert!(
            e.violations
                .iter()
                .any(|v| v.contains("unit diagonal required")),
            "{e}"
        );
    }

    #[test]
    fn parameter_domain() {
        let e =
            parse_config(br#"{"marginal":{"family":"weibull","k":-1},"corr":0.1,"n":10,"seed":1}"#)
                .unwrap_err();
        assert!(e.violations[0].contains("k must be finite and > 0"), "{e}");
    }

    #[test]
    fn collects_every_violation() {
        let e = parse_config(
            br#"{"marginal":{"family":"lognormal"},"corr":{"matrix":[[1,0.2],[0.3,1]]},"n":0,"colour":1}"#,
        )
        .unwrap_err();
        let all = e.violations.join("\n");
        for needle in [
            "unknown family `lognormal`",
            "asymmetric",
            "`n` must be",
            "missing key `seed`",
            "unknown key `colour`",
        ] {
            assert!(all.contains(needle), "missing {needle:?} in\n{all}");
        }
    }

    #[test]
    fn shape_and_type_errors() {
        let e = parse_config(br#"{"marginal":{"family":"uniform"},"corr":{"matrix":[[1,0.2,0.1],[0.2,1]]},"n":1,"seed":1}"#)
            .unwrap_err();
        assert!(e.violations[0].contains("row 0 has 3 entries"), "{e}");
        assert!(parse_config(b"[1,2]").is_err());
        assert!(parse_config(b"{not json").is_err());
        let e = parse_config(br#"{"marginal":{"family":"uniform"},"corr":1.5,"n":1,"seed":-3}"#)
            .unwrap_err();
        assert_eq!(e.violations.len(), 2, "{e}");
    }
}
