//! Experiment configuration: one JSON document, rationals written as
//! strings `"p/q"`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use freerep::asymptotics::{PhiInputs, TestFunction, WeightScheme};
use freerep::group::metric::{Length, MetricSpec};
use freerep::group::{GroupContext, ReducedWord};
use freerep::measures::{green_metric_of_walk, WalkSpec};
use freerep::representation::StepFunction;
use freerep::scalar::Quad;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}:{column}: at `{path}`: {message}")]
    Schema { file: String, line: usize, column: usize, path: String, message: String },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
    #[error("{file}: {source}")]
    Io { file: String, source: std::io::Error },
}

/// An exact rational, deserialized from `"p/q"`, `"p"` or an integer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn to_f64(&self) -> f64 {
        let r = &self.0;
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_rational64(&self) -> Option<Rational64> {
        Some(Rational64::new(self.0.numer().to_i64()?, self.0.denom().to_i64()?))
    }

    pub fn integer(n: i64) -> Rational {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }
}

impl FromStr for Rational {
    type Err = String;
    fn from_str(s: &str) -> Result<Rational, String> {
        let t = s.trim();
        let bad = || format!("malformed rational {s:?}, expected \"p\" or \"p/q\"");
        if t.is_empty() || t.contains(char::is_whitespace) {
            return Err(bad());
        }
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n, d),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(format!("rational {s:?} has a zero denominator"));
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d).map_err(|_| de::Error::custom("expected a rational string \"p/q\" or an integer"))? {
            Raw::Int(n) => Ok(Rational::integer(n)),
            Raw::Str(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Word,
    Weighted,
    Green,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub kind: MetricKind,
    /// One length per generator, for `weighted`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lengths: Vec<Rational>,
    /// Step probabilities per generator of a symmetric walk, for `green`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub walk: Vec<Rational>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchemeConfig {
    #[default]
    Sphere,
    Shadow,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Exact for the word metric, floating otherwise.
    #[default]
    Auto,
    /// Refuse metrics without an exact backend.
    Exact,
}

/// A boundary step function: `"1"`, `"0"`, `"1_ab"` (indicator of
/// `C_ab`), or `{"constant": "1/2", "terms": {"ab": "1"}}`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum VectorSpec {
    Short(String),
    Terms {
        #[serde(default = "zero")]
        constant: Rational,
        #[serde(default)]
        terms: BTreeMap<String, Rational>,
    },
}

fn zero() -> Rational {
    Rational::integer(0)
}

impl Default for VectorSpec {
    fn default() -> VectorSpec {
        VectorSpec::Short("1".into())
    }
}

fn word(s: &str) -> Result<ReducedWord, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn quad(r: &Rational) -> Quad {
    Quad::rational(r.0.clone())
}

impl VectorSpec {
    pub fn build(&self, rank: usize) -> Result<StepFunction<Quad>, String> {
        match self {
            VectorSpec::Short(s) => {
                if let Some(stem) = s.strip_prefix("1_") {
                    let stem = word(stem)?;
                    if stem.min_rank() > rank {
                        return Err(format!("stem {stem} uses a generator beyond rank {rank}"));
                    }
                    return Ok(StepFunction::indicator(rank, stem));
                }
                let c: Rational = s.parse()?;
                Ok(StepFunction::constant(rank, quad(&c)))
            }
            VectorSpec::Terms { constant, terms } => {
                let terms = terms.iter().map(|(k, v)| Ok((word(k)?, quad(v)))).collect::<Result<Vec<_>, String>>()?;
                StepFunction::from_terms(rank, quad(constant), terms).map_err(|e| e.to_string())
            }
        }
    }
}

/// A test function on `Γ ∪ ∂Γ`: a boundary step function plus finitely
/// many interior values.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    #[serde(default)]
    pub boundary: VectorSpec,
    #[serde(default)]
    pub interior: BTreeMap<String, Rational>,
}

impl TestSpec {
    pub fn build(&self, rank: usize) -> Result<TestFunction, String> {
        let mut f = TestFunction::from_boundary(self.boundary.build(rank)?);
        for (g, x) in &self.interior {
            f = f.with_interior(word(g)?, quad(x));
        }
        Ok(f)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Vectors {
    #[serde(default)]
    pub v1: VectorSpec,
    #[serde(default)]
    pub v2: VectorSpec,
    #[serde(default)]
    pub w1: VectorSpec,
    #[serde(default)]
    pub w2: VectorSpec,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct Tests {
    #[serde(default)]
    pub f1: TestSpec,
    #[serde(default)]
    pub f2: TestSpec,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Targets {
    pub tolerance: f64,
    pub min_r_squared: f64,
    pub rel_tol: f64,
    pub floor: f64,
    pub rd_lower: f64,
    pub gvb_band: (f64, f64),
    pub confidence: f64,
}

impl Default for Targets {
    fn default() -> Targets {
        Targets {
            tolerance: 0.02,
            min_r_squared: 0.9,
            rel_tol: 0.05,
            floor: 1.0 / 16.0,
            rd_lower: 0.3,
            gvb_band: (1.8, 2.2),
            confidence: 0.95,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ConvConfig {
    /// Exhaustive fiber census for all `R, R′ <= max_fiber`.
    pub max_fiber: usize,
    pub r1: usize,
    pub r2: usize,
    pub trials: usize,
}

impl Default for ConvConfig {
    fn default() -> ConvConfig {
        ConvConfig { max_fiber: 6, r1: 3, r2: 3, trials: 20 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GreenConfig {
    /// Per-generator step probabilities; the simple walk when empty.
    pub walk: Vec<Rational>,
    pub depth: usize,
    pub words: usize,
    pub max_len: usize,
    pub samples: u64,
}

impl Default for GreenConfig {
    fn default() -> GreenConfig {
        GreenConfig { walk: Vec::new(), depth: 2, words: 20, max_len: 6, samples: 100_000 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CoverScan {
    pub step: Rational,
    pub max: Rational,
}

impl Default for CoverScan {
    fn default() -> CoverScan {
        CoverScan { step: Rational::integer(1), max: Rational::integer(4) }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default = "one")]
    pub epsilon: Rational,
    #[serde(default)]
    pub rho: Option<Rational>,
    #[serde(default)]
    pub h: Option<Rational>,
    #[serde(default = "default_grid")]
    pub grid: Vec<usize>,
    /// Rectangle depth for equidistribution.
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub vectors: Vectors,
    #[serde(default)]
    pub tests: Tests,
    #[serde(default)]
    pub scalar: Backend,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub targets: Targets,
    #[serde(default)]
    pub conv: ConvConfig,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub cover: CoverScan,
}

fn default_rank() -> usize {
    2
}
fn one() -> Rational {
    Rational::integer(1)
}
fn default_grid() -> Vec<usize> {
    vec![2, 4, 6, 8]
}
fn default_depth() -> usize {
    2
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    /// Parses and validates a config document; errors carry the line,
    /// column and field path.
    pub fn parse(text: &str, file: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Schema {
                file: file.to_string(),
                line: inner.line(),
                column: inner.column(),
                path,
                message: strip_position(&inner.to_string()),
            }
        })?;
        cfg.validate().map_err(|message| ConfigError::Invalid { file: file.to_string(), message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { file: file.clone(), source })?;
        ExperimentConfig::parse(&text, &file)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid.is_empty() {
            return Err("`grid` is empty".into());
        }
        if let Some(w) = self.grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("`grid` is not strictly increasing at {} -> {}", w[0], w[1]));
        }
        if self.epsilon.0 <= BigRational::zero() {
            return Err(format!("`epsilon` = {} is not positive", self.epsilon));
        }
        let (lo, hi) = self.targets.gvb_band;
        if lo > hi {
            return Err(format!("`targets.gvb_band` = [{lo}, {hi}] is empty"));
        }
        if !(0.0..1.0).contains(&self.targets.confidence) {
            return Err(format!("`targets.confidence` = {} is not in [0, 1)", self.targets.confidence));
        }
        self.context().map_err(|e| e.to_string())?;
        self.phi_inputs().map_err(|e| format!("`vectors`/`tests`: {e}"))?;
        self.walk().map_err(|e| format!("`green.walk`: {e}"))?;
        if self.scalar == Backend::Exact && self.metric.kind != MetricKind::Word {
            return Err("`scalar` = \"exact\" needs the word metric".into());
        }
        Ok(())
    }

    pub fn metric_spec(&self) -> freerep::Result<MetricSpec> {
        let check_len = |n: usize, what: &str| {
            if n != self.rank {
                Err(freerep::Error::InvalidMetric(format!("{n} {what} for rank {}", self.rank)))
            } else {
                Ok(())
            }
        };
        let m = &self.metric;
        let unused = |field: &str, v: &[Rational]| {
            if v.is_empty() {
                Ok(())
            } else {
                Err(freerep::Error::InvalidMetric(format!("`metric.{field}` is not used by kind {:?}", m.kind)))
            }
        };
        match m.kind {
            MetricKind::Word => {
                unused("lengths", &m.lengths)?;
                unused("walk", &m.walk)?;
                MetricSpec::word(self.rank)
            }
            MetricKind::Weighted => {
                unused("walk", &m.walk)?;
                let lengths = &m.lengths;
                check_len(lengths.len(), "lengths")?;
                let ls = lengths
                    .iter()
                    .map(|l| l.to_rational64().ok_or_else(|| freerep::Error::InvalidMetric(format!("length {l} overflows i64"))))
                    .collect::<freerep::Result<Vec<_>>>()?;
                MetricSpec::weighted(ls)
            }
            MetricKind::Green => {
                unused("lengths", &m.lengths)?;
                check_len(m.walk.len(), "walk probabilities")?;
                green_metric_of_walk(&WalkSpec::new(m.walk.iter().map(|p| p.0.clone()).collect())?)
            }
        }
    }

    fn length(&self, r: &Rational) -> Length {
        match r.to_rational64() {
            Some(x) => Length::Exact(x),
            None => Length::Real(r.to_f64()),
        }
    }

    pub fn context(&self) -> freerep::Result<GroupContext> {
        GroupContext::new(
            self.metric_spec()?,
            self.epsilon.to_f64(),
            self.rho.as_ref().map(|r| self.length(r)),
            self.h.as_ref().map(|r| self.length(r)),
        )
    }

    pub fn scheme(&self) -> WeightScheme {
        match self.scheme {
            SchemeConfig::Sphere => WeightScheme::Sphere,
            SchemeConfig::Shadow => WeightScheme::ShadowPartition,
        }
    }

    pub fn phi_inputs(&self) -> Result<PhiInputs, String> {
        let k = self.rank;
        let v = &self.vectors;
        let mut p = PhiInputs::vectors(v.v1.build(k)?, v.v2.build(k)?, v.w1.build(k)?, v.w2.build(k)?);
        p.f1 = self.tests.f1.build(k)?;
        p.f2 = self.tests.f2.build(k)?;
        Ok(p)
    }

    /// The walk of a Green metric, else `green.walk`, else the simple walk.
    pub fn walk(&self) -> freerep::Result<WalkSpec> {
        let probs = match self.metric.kind {
            MetricKind::Green => &self.metric.walk,
            _ => &self.green.walk,
        };
        if probs.is_empty() {
            WalkSpec::simple(self.rank)
        } else {
            let w = WalkSpec::new(probs.iter().map(|p| p.0.clone()).collect())?;
            if w.rank() != self.rank {
                return Err(freerep::Error::InvalidWalk(format!("{} probabilities for rank {}", probs.len(), self.rank)));
            }
            Ok(w)
        }
    }

    pub fn budget(&self) -> u128 {
        self.budget.map_or(DEFAULT_BUDGET, u128::from)
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly() {
        let r: Rational = "3/6".parse().unwrap();
        assert_eq!(r.0, BigRational::new(1.into(), 2.into()));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("0.5".parse::<Rational>().is_err());
        assert!("1 /2".parse::<Rational>().is_err());
        assert_eq!("-4".parse::<Rational>().unwrap(), Rational::integer(-4));
    }

    #[test]
    fn defaults_are_word_metric_on_f2() {
        let c = ExperimentConfig::default();
        assert_eq!(c.rank, 2);
        assert_eq!(c.metric.kind, MetricKind::Word);
        assert_eq!(c.budget(), DEFAULT_BUDGET);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn malformed_rational_names_its_field() {
        let text = "{\n  \"metric\": {\"kind\": \"weighted\",\n    \"lengths\": [\"1\", \"2/x\"]}\n}";
        let e = ExperimentConfig::parse(text, "c.json").unwrap_err().to_string();
        assert!(e.starts_with("c.json:3:"), "{e}");
        assert!(e.contains("metric.lengths[1]"), "{e}");
        assert!(e.contains("malformed rational"), "{e}");
    }

    #[test]
    fn semantic_errors() {
        let bad = |t: &str| ExperimentConfig::parse(t, "c").unwrap_err().to_string();
        assert!(bad(r#"{"grid": [4, 4]}"#).contains("strictly increasing"));
        assert!(bad(r#"{"grid": []}"#).contains("empty"));
        assert!(bad(r#"{"rank": 1}"#).contains("rank"));
        assert!(bad(r#"{"metric": {"kind": "weighted", "lengths": ["1"]}}"#).contains("1 lengths"));
        assert!(bad(r#"{"vectors": {"v1": "1_c"}}"#).contains("vectors"));
        assert!(bad(r#"{"unknown": 1}"#).contains("unknown field"));
        assert!(bad(r#"{"metric": {"kind": "word", "lengths": ["1", "2"]}}"#).contains("not used"));
        assert!(bad(r#"{"metric": {"kind": "weighted", "lengths": ["1", "2"]}, "scalar": "exact"}"#).contains("exact"));
    }

    #[test]
    fn vector_specs() {
        let one = VectorSpec::Short("1".into()).build(2).unwrap();
        assert_eq!(one, StepFunction::one(2));
        let ind = VectorSpec::Short("1_ab".into()).build(2).unwrap();
        assert_eq!(ind, StepFunction::indicator(2, "ab".parse().unwrap()));
        let t: VectorSpec = serde_json::from_str(r#"{"constant": "1/2", "terms": {"a": "1"}}"#).unwrap();
        let f = t.build(2).unwrap();
        assert_eq!(f.value_on(&"a".parse::<ReducedWord>().unwrap()), Some(&Quad::rational(BigRational::new(3.into(), 2.into()))));
    }
}
