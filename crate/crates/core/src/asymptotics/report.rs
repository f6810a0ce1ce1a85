//! Sweep results: per-parameter values, targets, errors, a fitted rate and
//! verdicts, serializable to CSV and JSON.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::scalar::{Quad, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

/// A sweep value: exact in `Q(√ω)` for the word metric, floating otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Quad),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64(),
            Value::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Quad> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// `|self - other|`, exact when both sides are.
    pub fn abs_diff(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact((a.clone() - b.clone()).abs()),
            _ => Value::Float((self.to_f64() - other.to_f64()).abs()),
        }
    }

    /// `p+q*sqrt(w)` for exact values, empty otherwise.
    pub fn render_exact(&self, omega: u64) -> String {
        match self {
            Value::Exact(q) => q.render_with(omega),
            Value::Float(_) => String::new(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub value: Value,
    pub target: Option<Value>,
    pub abs_error: Option<Value>,
    pub rel_error: Option<f64>,
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// What `x` and `y` are, e.g. `ln(abs_error) ~ R`.
    pub model: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub experiment: String,
    pub param_name: String,
    pub rows: Vec<SweepRow>,
    pub fit: Option<Fit>,
    pub constants: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    /// Set when the grid was cut short by the element budget.
    pub partial: bool,
}

impl SweepReport {
    pub fn new(experiment: &str, param_name: &str) -> SweepReport {
        SweepReport {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            param_name: param_name.to_string(),
            rows: Vec::new(),
            fit: None,
            constants: BTreeMap::new(),
            verdicts: Vec::new(),
            partial: false,
        }
    }

    /// Appends a row; `param` must exceed the previous one.
    pub fn push(&mut self, param: f64, value: Value, target: Option<Value>) {
        assert!(self.rows.last().is_none_or(|r| r.param < param), "sweep grid must be strictly increasing");
        let abs_error = target.as_ref().map(|t| value.abs_diff(t));
        let rel_error = match (&abs_error, &target) {
            (Some(e), Some(t)) if t.to_f64() != 0.0 => Some(e.to_f64() / t.to_f64().abs()),
            _ => None,
        };
        self.rows.push(SweepRow { param, value, target, abs_error, rel_error });
    }

    pub fn verdict(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.to_string(), pass, detail: detail.into() });
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.constants.insert(name.to_string(), value);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn row(&self, param: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.param == param)
    }

    /// CSV with columns `R,value,target,abs_error,rel_error,exact`.
    pub fn to_csv(&self, omega: u64) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([self.param_name.as_str(), "value", "target", "abs_error", "rel_error", "exact"]).unwrap();
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.param),
                fmt_f64(r.value.to_f64()),
                opt(r.target.as_ref().map(Value::to_f64)),
                opt(r.abs_error.as_ref().map(Value::to_f64)),
                opt(r.rel_error),
                r.value.render_exact(omega),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

/// Ordinary least squares of `ys` on `xs`.
pub fn fit_line(xs: &[f64], ys: &[f64], model: &str) -> Option<Fit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(Fit { slope, intercept: my - slope * mx, r_squared, points: n, model: model.to_string() })
}

/// The upper half of a grid (at least two points when available).
pub fn top_half<T: Clone>(items: &[T]) -> Vec<T> {
    let n = items.len();
    let keep = n.div_ceil(2).max(2.min(n));
    items[n - keep..].to_vec()
}

/// Fits `ln(abs_error)` against the parameter over the top half of the
/// grid, skipping exact zeros.
pub fn fit_error_decay(report: &SweepReport) -> Option<Fit> {
    let pts: Vec<(f64, f64)> = top_half(&report.rows)
        .iter()
        .filter_map(|r| {
            let e = r.abs_error.as_ref()?.to_f64();
            (e > 0.0).then(|| (r.param, e.ln()))
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_line(&xs, &ys, &format!("ln(abs_error) ~ {}", report.param_name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn exact_line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = fit_line(&xs, &ys, "y ~ x").unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[1.0], "").is_none());
    }

    #[test]
    fn top_half_of_grids() {
        assert_eq!(top_half(&[1, 2, 3, 4, 5]), vec![3, 4, 5]);
        assert_eq!(top_half(&[1, 2, 3, 4]), vec![3, 4]);
        assert_eq!(top_half(&[1, 2]), vec![1, 2]);
    }

    #[test]
    fn csv_has_exact_column() {
        let mut r = SweepReport::new("t", "R");
        r.push(1.0, Value::Exact(Quad::sqrt(3)), Some(Value::Exact(Quad::rational(rat(1, 4)))));
        r.push(2.0, Value::Float(0.5), None);
        let csv = r.to_csv(3);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "R,value,target,abs_error,rel_error,exact");
        assert!(lines[1].ends_with(",0+1*sqrt(3)"));
        assert!(lines[2].ends_with(",,,,"));
        assert!(r.to_json().contains("\"schema_version\": 1"));
    }

    #[test]
    #[should_panic]
    fn grid_must_increase() {
        let mut r = SweepReport::new("t", "R");
        r.push(2.0, Value::Float(0.0), None);
        r.push(2.0, Value::Float(0.0), None);
    }
}
