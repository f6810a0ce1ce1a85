//! Left-invariant tree metrics on the free group: word length, rational
//! generator weights, and Green metrics of random walks.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::boundary::BoundaryPoint;
use crate::error::{Error, Result};
use crate::group::word::{common_prefix_len, Letter, ReducedWord};
use crate::measures::walk::WalkSpec;

/// Absolute tolerance for comparisons involving real-valued (Green) lengths.
pub const REAL_TOL: f64 = 1e-12;

/// A metric length: exact rational for word and weighted metrics, `f64` for
/// Green metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Exact(Rational64),
    Real(f64),
}

impl Length {
    pub fn zero() -> Length {
        Length::Exact(Rational64::zero())
    }

    pub fn integer(n: i64) -> Length {
        Length::Exact(Rational64::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Length::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Length::Real(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Length::Exact(_))
    }

    pub fn half(self) -> Length {
        match self {
            Length::Exact(r) => Length::Exact(r / 2),
            Length::Real(x) => Length::Real(x / 2.0),
        }
    }

    pub fn scale(self, k: i64) -> Length {
        match self {
            Length::Exact(r) => Length::Exact(r * k),
            Length::Real(x) => Length::Real(x * k as f64),
        }
    }

    /// Exact comparison when both sides are exact; otherwise compares as
    /// reals and treats values within [`REAL_TOL`] as equal.
    pub fn tol_cmp(self, other: Length) -> Ordering {
        match (self, other) {
            (Length::Exact(a), Length::Exact(b)) => a.cmp(&b),
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                if (a - b).abs() <= REAL_TOL * (1.0 + a.abs().max(b.abs())) {
                    Ordering::Equal
                } else {
                    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
                }
            }
        }
    }

    pub fn le(self, other: Length) -> bool {
        self.tol_cmp(other) != Ordering::Greater
    }

    pub fn lt(self, other: Length) -> bool {
        self.tol_cmp(other) == Ordering::Less
    }

    pub fn max(self, other: Length) -> Length {
        if self.lt(other) {
            other
        } else {
            self
        }
    }
}

impl Add for Length {
    type Output = Length;
    fn add(self, rhs: Length) -> Length {
        match (self, rhs) {
            (Length::Exact(a), Length::Exact(b)) => Length::Exact(a + b),
            _ => Length::Real(self.to_f64() + rhs.to_f64()),
        }
    }
}

impl Sub for Length {
    type Output = Length;
    fn sub(self, rhs: Length) -> Length {
        match (self, rhs) {
            (Length::Exact(a), Length::Exact(b)) => Length::Exact(a - b),
            _ => Length::Real(self.to_f64() - rhs.to_f64()),
        }
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Length::Exact(r) => write!(f, "{r}"),
            Length::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Word,
    Weighted,
    Green,
}

/// A metric from the class of metrics quasi-isometric to the word metric,
/// restricted to those induced by positive, inverse-symmetric letter lengths.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    Word {
        rank: usize,
    },
    /// One positive rational length per generator; inverses share it.
    Weighted {
        rank: usize,
        lengths: Vec<Rational64>,
    },
    /// `-log f_s` for the first-passage probabilities `f_s` of `walk`,
    /// indexed by letter code.
    Green {
        walk: WalkSpec,
        lengths: Vec<f64>,
    },
}

impl MetricSpec {
    pub fn word(rank: usize) -> Result<MetricSpec> {
        check_rank(rank)?;
        Ok(MetricSpec::Word { rank })
    }

    pub fn weighted(lengths: Vec<Rational64>) -> Result<MetricSpec> {
        check_rank(lengths.len())?;
        if let Some(bad) = lengths.iter().find(|l| **l <= Rational64::zero()) {
            return Err(Error::InvalidMetric(format!("generator length {bad} is not positive")));
        }
        Ok(MetricSpec::Weighted { rank: lengths.len(), lengths })
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            MetricSpec::Word { .. } => MetricKind::Word,
            MetricSpec::Weighted { .. } => MetricKind::Weighted,
            MetricSpec::Green { .. } => MetricKind::Green,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            MetricSpec::Word { rank } | MetricSpec::Weighted { rank, .. } => *rank,
            MetricSpec::Green { walk, .. } => walk.rank(),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, MetricSpec::Green { .. })
    }

    #[inline]
    pub fn letter_length(&self, s: Letter) -> Length {
        match self {
            MetricSpec::Word { .. } => Length::integer(1),
            MetricSpec::Weighted { lengths, .. } => Length::Exact(lengths[s.generator()]),
            MetricSpec::Green { lengths, .. } => Length::Real(lengths[s.code()]),
        }
    }

    /// Letter lengths as reals, indexed by letter code.
    pub fn letter_lengths_f64(&self) -> Vec<f64> {
        Letter::alphabet(self.rank()).map(|s| self.letter_length(s).to_f64()).collect()
    }

    pub fn max_letter_length(&self) -> Length {
        Letter::alphabet(self.rank())
            .map(|s| self.letter_length(s))
            .fold(Length::zero(), Length::max)
    }

    pub fn min_letter_length(&self) -> f64 {
        self.letter_lengths_f64().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `d(1, u)`: the sum of letter lengths.
    pub fn length_of(&self, letters: &[Letter]) -> Length {
        match self {
            MetricSpec::Word { .. } => Length::integer(letters.len() as i64),
            MetricSpec::Weighted { lengths, .. } => {
                Length::Exact(letters.iter().map(|s| lengths[s.generator()]).sum())
            }
            MetricSpec::Green { lengths, .. } => Length::Real(letters.iter().map(|s| lengths[s.code()]).sum()),
        }
    }

    /// `d(g, h) = |g⁻¹h|`.
    pub fn distance(&self, g: &ReducedWord, h: &ReducedWord) -> Length {
        self.length_of(&g.invert().multiply(h))
    }
}

fn check_rank(rank: usize) -> Result<()> {
    if (2..=crate::group::word::MAX_RANK).contains(&rank) {
        Ok(())
    } else {
        Err(Error::InvalidMetric(format!("rank {rank} is not in 2..={}", crate::group::word::MAX_RANK)))
    }
}

pub fn metric_length(u: &ReducedWord, m: &MetricSpec) -> Length {
    m.length_of(u)
}

/// Gromov product `(x, y)_1`; on a tree, the length of the common prefix.
pub fn gromov_product(x: &ReducedWord, y: &ReducedWord, m: &MetricSpec) -> Length {
    let p = common_prefix_len(x, y);
    m.length_of(&x[..p])
}

/// Longest prefix of `g` whose length is at most `t`.
pub fn geodesic_point(g: &ReducedWord, t: Length, m: &MetricSpec) -> Result<ReducedWord> {
    let total = m.length_of(g);
    if t.lt(Length::zero()) || total.lt(t) {
        return Err(Error::OutOfRange(format!("geodesic parameter {t} (|g| = {total})")));
    }
    let mut acc = Length::zero();
    let mut n = 0;
    for &s in g.iter() {
        let next = acc + m.letter_length(s);
        if !next.le(t) {
            break;
        }
        acc = next;
        n += 1;
    }
    Ok(g.prefix(n))
}

/// Translation length of `g` acting on the tree: the length of its cyclic
/// reduction.
pub fn translation_length(g: &ReducedWord, m: &MetricSpec) -> Length {
    m.length_of(&g.cyclic_reduction())
}

/// The canonical boundary point `ĝ`: `g` followed by its last letter
/// repeated forever (`a^∞` for the identity), so that `(g, ĝ) = |g|`.
pub fn hat_projection(g: &ReducedWord) -> BoundaryPoint {
    match g.last() {
        None => BoundaryPoint::ray(Letter::new(0, false)),
        Some(s) => BoundaryPoint::new(g.prefix(g.len() - 1), ReducedWord::from_reduced_unchecked(vec![s]))
            .expect("repeating the last letter is reduced"),
    }
}

/// `ǧ`, the projection of `g⁻¹`.
pub fn check_projection(g: &ReducedWord) -> BoundaryPoint {
    hat_projection(&g.invert())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn weighted12() -> MetricSpec {
        MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap()
    }

    #[test]
    fn metric_length_examples() {
        let word = MetricSpec::word(2).unwrap();
        assert_eq!(metric_length(&w("ab"), &word), Length::integer(2));
        assert_eq!(metric_length(&w("ab"), &weighted12()), Length::integer(3));
    }

    #[test]
    fn gromov_product_matches_defining_formula() {
        let word = MetricSpec::word(2).unwrap();
        let (x, y) = (w("ab"), w("aB"));
        let formula = (word.length_of(&x) + word.length_of(&y) - word.distance(&x, &y)).half();
        assert_eq!(formula, Length::integer(1));
        assert_eq!(gromov_product(&x, &y, &word), formula);
        let g = w("abAb");
        assert_eq!(gromov_product(&g, &g, &word), word.length_of(&g));
        assert_eq!(gromov_product(&w("ab"), &w("ab"), &weighted12()), Length::integer(3));
    }

    #[test]
    fn geodesic_point_examples() {
        let word = MetricSpec::word(2).unwrap();
        assert_eq!(geodesic_point(&w("abab"), Length::integer(2), &word).unwrap(), w("ab"));
        assert_eq!(geodesic_point(&w("abab"), Length::zero(), &word).unwrap(), ReducedWord::identity());
        let t = Length::Exact(Rational64::new(5, 2));
        assert_eq!(geodesic_point(&w("abab"), t, &weighted12()).unwrap(), w("a"));
        assert!(geodesic_point(&w("ab"), Length::integer(3), &word).is_err());
        assert!(geodesic_point(&w("ab"), Length::integer(-1), &word).is_err());
    }

    #[test]
    fn translation_length_examples() {
        let word = MetricSpec::word(2).unwrap();
        assert_eq!(translation_length(&w("ab"), &word), Length::integer(2));
        assert_eq!(translation_length(&w("abA"), &word), Length::integer(1));
        assert_eq!(translation_length(&ReducedWord::identity(), &word), Length::zero());
    }

    #[test]
    fn translation_length_is_min_displacement_on_ball() {
        // min over x in the ball of radius 4 of d(x, gx)
        let word = MetricSpec::word(2).unwrap();
        let ball: Vec<ReducedWord> = (0..=4).flat_map(|n| ReducedWord::all_of_length(2, n)).collect();
        for g in [w("abA"), w("ab"), w("aabAA"), w("bab")] {
            let brute = ball
                .iter()
                .map(|x| word.distance(x, &g.multiply(x)))
                .min_by(|a, b| a.tol_cmp(*b))
                .unwrap();
            assert_eq!(translation_length(&g, &word), brute, "g = {g}");
        }
    }

    #[test]
    fn hat_projection_examples() {
        assert_eq!(hat_projection(&w("ab")).to_string(), "a|b");
        assert_eq!(hat_projection(&ReducedWord::identity()).to_string(), "|a");
        assert_eq!(hat_projection(&w("A")).to_string(), "|A");
    }

    #[test]
    fn real_lengths_compare_with_tolerance() {
        let a = Length::Real(1.0);
        let b = Length::Real(1.0 + 1e-14);
        assert_eq!(a.tol_cmp(b), Ordering::Equal);
        assert!(Length::Real(0.5).lt(Length::integer(1)));
    }
}
