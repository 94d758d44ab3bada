//! Scenario files.
//!
//! ```json
//! {
//!   "name": "symmetric_pair",
//!   "atoms": [{"m": 0.5, "x": 0.25, "v": 1}, {"m": "1/2", "x": "3/4", "v": -1}],
//!   "domain": {"kind": "interval", "a": 0, "b": 1},
//!   "arithmetic": "float64",
//!   "times": "auto",
//!   "checks": ["dual_oracle", "identities"],
//!   "tolerance": 1e-10,
//!   "horizon": 10
//! }
//! ```
//!
//! Values are JSON numbers or strings `"p/q"`. In rational mode only
//! integers and `"p/q"` strings are accepted, so that no value silently
//! depends on binary64 rounding.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stickyflow::scalar::parse_rational;
use stickyflow::{Component, Domain, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Float64,
    Rational,
}

impl fmt::Display for Arithmetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arithmetic::Float64 => "float64",
            Arithmetic::Rational => "rational",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    DualOracle,
    Identities,
    Shapes,
    Oleinik,
    ConfinementEquivalence,
    FlowIdentity,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::DualOracle,
        Check::Identities,
        Check::Shapes,
        Check::Oleinik,
        Check::ConfinementEquivalence,
        Check::FlowIdentity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::DualOracle => "dual_oracle",
            Check::Identities => "identities",
            Check::Shapes => "shapes",
            Check::Oleinik => "oleinik",
            Check::ConfinementEquivalence => "confinement_equivalence",
            Check::FlowIdentity => "flow_identity",
        }
    }

    fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactAtom {
    pub m: Rational,
    pub x: Rational,
    pub v: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Times {
    Auto,
    List(Vec<Rational>),
}

/// Validated scenario; all values are kept exact until a backend is chosen.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub atoms: Vec<ExactAtom>,
    pub domain: Domain<Rational>,
    pub arithmetic: Arithmetic,
    pub times: Times,
    pub checks: Vec<Check>,
    pub horizon: Option<Rational>,
    /// Replaces the default tolerance of every check.
    pub tolerance: Option<f64>,
    /// The document as read, echoed into result bundles.
    pub source: Value,
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: invalid scenario:\n  {}", .problems.join("\n  "))]
    Invalid { path: String, problems: Vec<String> },
}

pub fn load_scenario(path: &Path) -> Result<Scenario, InputError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: label.clone(),
        source,
    })?;
    parse_scenario(&text, &label)
}

pub fn parse_scenario(text: &str, label: &str) -> Result<Scenario, InputError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: label.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    parse_value(doc, label)
}

pub fn parse_value(doc: Value, label: &str) -> Result<Scenario, InputError> {
    from_value(doc).map_err(|problems| InputError::Invalid {
        path: label.to_string(),
        problems,
    })
}

struct Reader {
    exact_only: bool,
    problems: Vec<String>,
}

impl Reader {
    fn number(&mut self, v: Option<&Value>, field: &str) -> Option<Rational> {
        let parsed = match v {
            None => {
                self.problems.push(format!("{field}: missing"));
                return None;
            }
            Some(Value::Number(n)) => {
                if let Some(i) = n.as_i64() {
                    Some(Rational::from_int(i))
                } else if self.exact_only {
                    self.problems.push(format!(
                        "{field}: rational mode needs an integer or a \"p/q\" string, got {n}"
                    ));
                    return None;
                } else {
                    n.as_f64().filter(|x| x.is_finite()).map(Rational::from_f64)
                }
            }
            Some(Value::String(s)) => {
                if self.exact_only && s.contains('.') {
                    self.problems.push(format!(
                        "{field}: rational mode needs an integer or a \"p/q\" string, got \"{s}\""
                    ));
                    return None;
                }
                parse_rational(s)
            }
            Some(other) => {
                self.problems.push(format!("{field}: expected a number, got {other}"));
                return None;
            }
        };
        if parsed.is_none() {
            self.problems.push(format!("{field}: not a valid number"));
        }
        parsed
    }
}

fn from_value(doc: Value) -> Result<Scenario, Vec<String>> {
    let Some(obj) = doc.as_object() else {
        return Err(vec!["top level must be an object".into()]);
    };
    let mut problems = Vec::new();
    const KNOWN: [&str; 9] = [
        "name", "atoms", "domain", "arithmetic", "times", "checks", "horizon", "tolerance", "seed",
    ];
    for key in obj.keys() {
        if !KNOWN.contains(&key.as_str()) {
            problems.push(format!("{key}: unknown field"));
        }
    }
    let name = match obj.get("name").and_then(Value::as_str) {
        Some(n) if !n.is_empty() => n.to_string(),
        _ => {
            problems.push("name: missing or not a non-empty string".into());
            String::new()
        }
    };
    let arithmetic = match obj.get("arithmetic") {
        None => Arithmetic::Float64,
        Some(v) => match serde_json::from_value::<Arithmetic>(v.clone()) {
            Ok(a) => a,
            Err(_) => {
                problems.push(format!("arithmetic: expected \"float64\" or \"rational\", got {v}"));
                Arithmetic::Float64
            }
        },
    };
    let mut reader = Reader {
        exact_only: arithmetic == Arithmetic::Rational,
        problems,
    };

    let domain = read_domain(&mut reader, obj.get("domain"));

    let mut atoms = Vec::new();
    match obj.get("atoms").and_then(Value::as_array) {
        Some(list) if !list.is_empty() => {
            for (i, a) in list.iter().enumerate() {
                let m = reader.number(a.get("m"), &format!("atoms[{i}].m"));
                let x = reader.number(a.get("x"), &format!("atoms[{i}].x"));
                let v = reader.number(a.get("v"), &format!("atoms[{i}].v"));
                if let Some(m) = &m {
                    if *m <= Rational::zero() {
                        reader.problems.push(format!("atoms[{i}].m: mass must be positive, got {m}"));
                    }
                }
                if let (Some(x), Some(d)) = (&x, &domain) {
                    if !d.contains(x) {
                        reader.problems.push(format!("atoms[{i}].x: position {x} lies outside the domain"));
                    }
                }
                if let (Some(m), Some(x), Some(v)) = (m, x, v) {
                    atoms.push(ExactAtom { m, x, v });
                }
            }
            let total = atoms.iter().fold(Rational::zero(), |acc, a| acc + a.m.clone());
            let off = (total.clone() - Rational::one()).abs();
            let tol = if arithmetic == Arithmetic::Rational { Rational::zero() } else { Rational::from_f64(1e-12) };
            if atoms.len() == list.len() && off > tol {
                reader.problems.push(format!("atoms: masses sum to {} instead of 1", total.to_f64()));
            }
        }
        _ => reader.problems.push("atoms: missing or empty list".into()),
    }

    let times = match obj.get("times") {
        None => Times::Auto,
        Some(Value::String(s)) if s == "auto" => Times::Auto,
        Some(Value::Array(list)) => {
            let mut ts = Vec::new();
            for (i, t) in list.iter().enumerate() {
                if let Some(t) = reader.number(Some(t), &format!("times[{i}]")) {
                    if t < Rational::zero() {
                        reader.problems.push(format!("times[{i}]: negative time {t}"));
                    }
                    ts.push(t);
                }
            }
            Times::List(ts)
        }
        Some(other) => {
            reader.problems.push(format!("times: expected \"auto\" or a list, got {other}"));
            Times::Auto
        }
    };

    let horizon = match obj.get("horizon") {
        None | Some(Value::Null) => None,
        v => {
            let h = reader.number(v, "horizon");
            if let Some(h) = &h {
                if *h <= Rational::zero() {
                    reader.problems.push(format!("horizon: must be positive, got {h}"));
                }
            }
            h
        }
    };

    let mut checks = Vec::new();
    match obj.get("checks") {
        None => {}
        Some(Value::Array(list)) => {
            for (i, c) in list.iter().enumerate() {
                match c.as_str().and_then(Check::parse) {
                    Some(c) if !checks.contains(&c) => checks.push(c),
                    Some(_) => {}
                    None => reader.problems.push(format!(
                        "checks[{i}]: unknown check {c}; expected one of {}",
                        Check::ALL.map(Check::name).join(", ")
                    )),
                }
            }
        }
        Some(other) => reader.problems.push(format!("checks: expected a list, got {other}")),
    }
    checks.sort();

    let tolerance = match obj.get("tolerance") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_f64() {
            Some(t) if t >= 0.0 && t.is_finite() => Some(t),
            _ => {
                reader.problems.push(format!("tolerance: expected a nonnegative number, got {v}"));
                None
            }
        },
    };

    let seed = match obj.get("seed") {
        None => None,
        Some(v) => match v.as_u64() {
            Some(s) => Some(s),
            None => {
                reader.problems.push(format!("seed: expected a nonnegative integer, got {v}"));
                None
            }
        },
    };

    if !reader.problems.is_empty() {
        return Err(reader.problems);
    }
    Ok(Scenario {
        name,
        atoms,
        domain: domain.expect("no problems reported"),
        arithmetic,
        times,
        checks,
        horizon,
        tolerance,
        seed,
        source: doc,
    })
}

fn read_domain(reader: &mut Reader, v: Option<&Value>) -> Option<Domain<Rational>> {
    let Some(v) = v else {
        return Some(Domain::line());
    };
    let kind = v.get("kind").and_then(Value::as_str).unwrap_or("");
    let result = match kind {
        "line" => Ok(Domain::line()),
        "interval" => {
            let a = reader.number(v.get("a"), "domain.a");
            let b = reader.number(v.get("b"), "domain.b");
            match (a, b) {
                (Some(a), Some(b)) => Domain::interval(a, b),
                _ => return None,
            }
        }
        "left_ray" => Ok(Domain::left_ray(reader.number(v.get("b"), "domain.b")?)),
        "right_ray" => Ok(Domain::right_ray(reader.number(v.get("a"), "domain.a")?)),
        "union" => {
            let Some(parts) = v.get("components").and_then(Value::as_array) else {
                reader.problems.push("domain.components: expected a list of {\"a\", \"b\"}".into());
                return None;
            };
            let mut comps = Vec::new();
            for (i, p) in parts.iter().enumerate() {
                let lo = match p.get("a") {
                    None | Some(Value::Null) => None,
                    a => Some(reader.number(a, &format!("domain.components[{i}].a"))?),
                };
                let hi = match p.get("b") {
                    None | Some(Value::Null) => None,
                    b => Some(reader.number(b, &format!("domain.components[{i}].b"))?),
                };
                comps.push(Component { lo, hi });
            }
            Domain::union(comps)
        }
        other => {
            reader.problems.push(format!(
                "domain.kind: expected line, interval, left_ray, right_ray or union, got \"{other}\""
            ));
            return None;
        }
    };
    match result {
        Ok(d) => Some(d),
        Err(e) => {
            reader.problems.push(format!("domain: {e}"));
            None
        }
    }
}
