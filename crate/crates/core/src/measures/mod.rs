//! Boundary measures: Patterson–Sullivan measures (uniform for the word
//! metric, Markov for weighted and Green metrics) and their Radon–Nikodym
//! cocycles.

pub mod perron;
pub mod walk;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::boundary::{BoundaryPoint, Cylinder, CylinderSet};
use crate::error::{Error, Result};
use crate::group::context::GroupContext;
use crate::group::metric::MetricSpec;
use crate::group::word::{common_prefix_len, Letter, ReducedWord};
use crate::scalar::{Quad, Scalar};

pub use perron::{critical_exponent, poincare_radius, PerronData};
pub use walk::{green_metric_of_walk, harmonic_mass_mc, solve_first_passage, WalkSpec};

/// What the matrix-coefficient machinery needs from a measure, in a given
/// scalar backend.
pub trait CellMeasure<S: Scalar>: Sync {
    fn rank(&self) -> usize;
    /// `μ(C_w)`
    fn mass(&self, stem: &[Letter]) -> S;
    /// `dg_*μ/dμ` at points `ξ` with `(g, ξ)` the length of `g[..j]`.
    fn rn(&self, g: &[Letter], j: usize) -> S;
    /// Square root of [`rn`](Self::rn).
    fn sqrt_rn(&self, g: &[Letter], j: usize) -> S;
}

/// The Patterson–Sullivan measure of the word metric:
/// `μ(C_w) = (1/2k) ω^{-(|w|-1)}`, `ω = 2k-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordMeasure {
    pub rank: usize,
    pub omega: u64,
}

impl WordMeasure {
    pub fn new(rank: usize) -> WordMeasure {
        WordMeasure { rank, omega: 2 * rank as u64 - 1 }
    }

    pub fn mass_exact(&self, word_len: usize) -> BigRational {
        if word_len == 0 {
            return BigRational::one();
        }
        let denom = BigInt::from(2 * self.rank as u64) * num_traits::pow(BigInt::from(self.omega), word_len - 1);
        BigRational::new(BigInt::one(), denom)
    }

    /// `ω^{2j-n}`
    pub fn rn_exact(&self, n: usize, j: usize) -> BigRational {
        let e = 2 * j as i64 - n as i64;
        let p = BigRational::from_integer(num_traits::pow(BigInt::from(self.omega), e.unsigned_abs() as usize));
        if e < 0 {
            p.recip()
        } else {
            p
        }
    }
}

impl CellMeasure<Quad> for WordMeasure {
    fn rank(&self) -> usize {
        self.rank
    }
    fn mass(&self, stem: &[Letter]) -> Quad {
        Quad::rational(self.mass_exact(stem.len()))
    }
    fn rn(&self, g: &[Letter], j: usize) -> Quad {
        Quad::rational(self.rn_exact(g.len(), j))
    }
    fn sqrt_rn(&self, g: &[Letter], j: usize) -> Quad {
        Quad::half_power(self.omega, 2 * j as i64 - g.len() as i64)
    }
}

impl CellMeasure<f64> for WordMeasure {
    fn rank(&self) -> usize {
        self.rank
    }
    fn mass(&self, stem: &[Letter]) -> f64 {
        if stem.is_empty() {
            return 1.0;
        }
        1.0 / (2.0 * self.rank as f64) * (self.omega as f64).powi(1 - stem.len() as i32)
    }
    fn rn(&self, g: &[Letter], j: usize) -> f64 {
        (self.omega as f64).powi(2 * j as i32 - g.len() as i32)
    }
    fn sqrt_rn(&self, g: &[Letter], j: usize) -> f64 {
        (self.omega as f64).powf(j as f64 - g.len() as f64 / 2.0)
    }
}

/// The Markov Patterson–Sullivan measure of a weighted or Green metric:
/// `μ(C_w) = e^{-αℓ(w)} u_{last(w)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    pub rank: usize,
    pub alpha: f64,
    /// Letter lengths by code.
    pub lengths: Vec<f64>,
    /// Normalised Perron vector by code.
    pub u: Vec<f64>,
}

impl MarkovMeasure {
    pub fn from_perron(metric: &MetricSpec, p: &PerronData) -> MarkovMeasure {
        MarkovMeasure { rank: metric.rank(), alpha: p.alpha, lengths: metric.letter_lengths_f64(), u: p.eigenvector.clone() }
    }

    fn len(&self, w: &[Letter]) -> f64 {
        w.iter().map(|s| self.lengths[s.code()]).sum()
    }

    /// `P(s, t)`
    pub fn transition(&self, s: Letter, t: Letter) -> f64 {
        if t == s.inverse() {
            return 0.0;
        }
        (-self.alpha * self.lengths[t.code()]).exp() * self.u[t.code()] / self.u[s.code()]
    }
}

impl CellMeasure<f64> for MarkovMeasure {
    fn rank(&self) -> usize {
        self.rank
    }
    fn mass(&self, stem: &[Letter]) -> f64 {
        match stem.last() {
            None => 1.0,
            Some(s) => (-self.alpha * self.len(stem)).exp() * self.u[s.code()],
        }
    }
    fn rn(&self, g: &[Letter], j: usize) -> f64 {
        (self.alpha * (2.0 * self.len(&g[..j]) - self.len(g))).exp()
    }
    fn sqrt_rn(&self, g: &[Letter], j: usize) -> f64 {
        (self.alpha * (self.len(&g[..j]) - 0.5 * self.len(g))).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryMeasure {
    Word(WordMeasure),
    Markov(MarkovMeasure),
}

impl BoundaryMeasure {
    pub fn rank(&self) -> usize {
        match self {
            BoundaryMeasure::Word(m) => m.rank,
            BoundaryMeasure::Markov(m) => m.rank,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            BoundaryMeasure::Word(m) => (m.omega as f64).ln(),
            BoundaryMeasure::Markov(m) => m.alpha,
        }
    }

    pub fn as_word(&self) -> Option<&WordMeasure> {
        match self {
            BoundaryMeasure::Word(m) => Some(m),
            BoundaryMeasure::Markov(_) => None,
        }
    }

    pub fn mass(&self, c: &Cylinder) -> f64 {
        self.mass_f64(&c.stem)
    }

    pub fn mass_f64(&self, stem: &[Letter]) -> f64 {
        match self {
            BoundaryMeasure::Word(m) => CellMeasure::<f64>::mass(m, stem),
            BoundaryMeasure::Markov(m) => m.mass(stem),
        }
    }

    /// Exact mass for the word measure.
    pub fn mass_exact(&self, stem: &[Letter]) -> Option<BigRational> {
        self.as_word().map(|m| m.mass_exact(stem.len()))
    }

    pub fn set_mass(&self, s: &CylinderSet) -> f64 {
        match s {
            CylinderSet::Union(cs) => cs.iter().map(|c| self.mass(c)).sum(),
            CylinderSet::Complement(c) => 1.0 - self.mass(c),
        }
    }

    pub fn set_mass_exact(&self, s: &CylinderSet) -> Option<BigRational> {
        let m = self.as_word()?;
        Some(match s {
            CylinderSet::Union(cs) => cs.iter().map(|c| m.mass_exact(c.stem.len())).sum(),
            CylinderSet::Complement(c) => BigRational::one() - m.mass_exact(c.stem.len()),
        })
    }

    fn rn_f64(&self, g: &[Letter], j: usize) -> f64 {
        match self {
            BoundaryMeasure::Word(m) => CellMeasure::<f64>::rn(m, g, j),
            BoundaryMeasure::Markov(m) => m.rn(g, j),
        }
    }
}

/// The Patterson–Sullivan measure of the context's metric.
pub fn ps_measure(ctx: &GroupContext) -> BoundaryMeasure {
    match ctx.metric {
        MetricSpec::Word { rank } => BoundaryMeasure::Word(WordMeasure::new(rank)),
        _ => BoundaryMeasure::Markov(MarkovMeasure::from_perron(&ctx.metric, &ctx.perron)),
    }
}

/// Where the Radon–Nikodym derivative is evaluated.
#[derive(Clone, Debug)]
pub enum RnPoint<'a> {
    Point(&'a BoundaryPoint),
    Cylinder(&'a Cylinder),
}

/// Value of the derivative and, for the word measure, its exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct RnValue {
    pub value: f64,
    pub exact: Option<BigRational>,
}

/// `dg_*μ/dμ(ξ) = e^{α(2(g,ξ) - |g|)}`; on a cylinder, its constant value,
/// which requires a stem at least as long as `g`.
pub fn rn_derivative(g: &ReducedWord, at: RnPoint<'_>, mu: &BoundaryMeasure) -> Result<RnValue> {
    let j = match at {
        RnPoint::Point(xi) => xi.common_prefix_with(g),
        RnPoint::Cylinder(c) => {
            if c.stem.len() < g.len() {
                return Err(Error::CylinderTooShallow { stem_len: c.stem.len(), element_len: g.len() });
            }
            common_prefix_len(g, &c.stem)
        }
    };
    Ok(RnValue { value: mu.rn_f64(g, j), exact: mu.as_word().map(|m| m.rn_exact(g.len(), j)) })
}

/// `∫ rn(g, ·) dμ`, summed over the depth-`|g|` cylinders on which it is
/// constant. Exact for the word measure.
pub fn rn_integral(g: &ReducedWord, mu: &BoundaryMeasure) -> RnValue {
    let n = g.len();
    let rank = mu.rank();
    // group depth-n cylinders by their common prefix with g
    let mut value = 0.0;
    let mut exact = BigRational::zero();
    for j in 0..=n {
        // stems sharing exactly j letters with g: the prefix g[..j], then
        // (for j < n) a letter other than g[j], then anything
        let branch_mass_f64;
        let branch_mass_exact;
        if j == n {
            branch_mass_f64 = mu.mass_f64(g);
            branch_mass_exact = mu.mass_exact(g);
        } else {
            let base = &g[..j];
            let mut mf = 0.0;
            let mut me = BigRational::zero();
            for s in Letter::successors(rank, base.last().copied()) {
                if s == g[j] {
                    continue;
                }
                let mut stem = base.to_vec();
                stem.push(s);
                mf += mu.mass_f64(&stem);
                if let Some(x) = mu.mass_exact(&stem) {
                    me += x;
                }
            }
            branch_mass_f64 = mf;
            branch_mass_exact = mu.as_word().map(|_| me);
        }
        value += mu.rn_f64(g, j) * branch_mass_f64;
        if let (Some(m), Some(b)) = (mu.as_word(), branch_mass_exact) {
            exact += m.rn_exact(n, j) * b;
        }
    }
    RnValue { value, exact: mu.as_word().map(|_| exact) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsRow {
    pub depth: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhlforsProfile {
    pub rows: Vec<AhlforsRow>,
    /// `max / min` over all cylinders of positive depth.
    pub constant: f64,
    /// The per-depth spread never exceeds the one at depth 1.
    pub pass: bool,
}

/// `μ(C_w) / r^D` with `r = e^{-εℓ(w)}` (the radius of `C_w` as a visual
/// ball) over all cylinders of each depth.
pub fn ahlfors_profile(mu: &BoundaryMeasure, ctx: &GroupContext, depths: std::ops::RangeInclusive<usize>) -> AhlforsProfile {
    let dim = ctx.dimension();
    let mut rows = Vec::new();
    for depth in depths {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for w in ReducedWord::all_of_length(ctx.rank(), depth) {
            let r = (-ctx.epsilon * ctx.metric.length_of(&w).to_f64()).exp();
            let ratio = mu.mass_f64(&w) / r.powf(dim);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        rows.push(AhlforsRow { depth, min_ratio: lo, max_ratio: hi });
    }
    let positive: Vec<&AhlforsRow> = rows.iter().filter(|r| r.depth > 0).collect();
    let lo = positive.iter().map(|r| r.min_ratio).fold(f64::INFINITY, f64::min);
    let hi = positive.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let constant = if positive.is_empty() { 1.0 } else { hi / lo };
    let base = positive.first().map(|r| r.max_ratio / r.min_ratio).unwrap_or(1.0);
    let pass = positive.iter().all(|r| r.max_ratio / r.min_ratio <= base * (1.0 + 1e-9)) && constant.is_finite();
    AhlforsProfile { rows, constant, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::translate_cylinder_set_in;
    use crate::scalar::rat;
    use num_rational::Rational64;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn word_ctx() -> GroupContext {
        GroupContext::new(MetricSpec::word(2).unwrap(), 1.0, None, None).unwrap()
    }

    fn weighted_ctx() -> GroupContext {
        let m = MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap();
        GroupContext::new(m, 1.0, None, None).unwrap()
    }

    #[test]
    fn word_masses() {
        let mu = ps_measure(&word_ctx());
        assert_eq!(mu.mass_exact(&w("a")).unwrap(), rat(1, 4));
        assert_eq!(mu.mass_exact(&w("ab")).unwrap(), rat(1, 12));
        assert_eq!(mu.mass_exact(&[]).unwrap(), rat(1, 1));
    }

    #[test]
    fn depth_two_frequencies_over_spheres() {
        // fraction of S_n starting with ab is exactly 1/12 for n >= 2
        for n in 2..=8 {
            let s = ReducedWord::all_of_length(2, n);
            let hits = s.iter().filter(|g| g.starts_with(&w("ab"))).count();
            assert_eq!(rat(hits as i64, s.len() as i64), rat(1, 12));
        }
    }

    #[test]
    fn additivity() {
        for ctx in [word_ctx(), weighted_ctx()] {
            let mu = ps_measure(&ctx);
            for n in 0..=6 {
                for stem in ReducedWord::all_of_length(2, n) {
                    let kids: Vec<ReducedWord> = Letter::successors(2, stem.last()).map(|s| stem.extended(s).unwrap()).collect();
                    let sum: f64 = kids.iter().map(|k| mu.mass_f64(k)).sum();
                    assert!((sum - mu.mass_f64(&stem)).abs() < 1e-12);
                    if let Some(m) = mu.mass_exact(&stem) {
                        let s: BigRational = kids.iter().map(|k| mu.mass_exact(k).unwrap()).sum();
                        assert_eq!(s, m);
                    }
                }
            }
        }
    }

    #[test]
    fn rn_examples() {
        let mu = ps_measure(&word_ctx());
        let xa: BoundaryPoint = "|a".parse().unwrap();
        let xb: BoundaryPoint = "|b".parse().unwrap();
        assert_eq!(rn_derivative(&w("a"), RnPoint::Point(&xa), &mu).unwrap().exact.unwrap(), rat(3, 1));
        assert_eq!(rn_derivative(&w("a"), RnPoint::Point(&xb), &mu).unwrap().exact.unwrap(), rat(1, 3));
        assert_eq!(rn_derivative(&ReducedWord::identity(), RnPoint::Point(&xb), &mu).unwrap().value, 1.0);
        let shallow = Cylinder::new(w("a"));
        assert!(matches!(
            rn_derivative(&w("ab"), RnPoint::Cylinder(&shallow), &mu),
            Err(Error::CylinderTooShallow { .. })
        ));
    }

    #[test]
    fn rn_matches_pushforward() {
        // μ(g⁻¹C)/μ(C) for every cylinder at depth |g|+1
        for ctx in [word_ctx(), weighted_ctx()] {
            let mu = ps_measure(&ctx);
            for g in [w("a"), w("ab"), w("Bab"), w("aab")] {
                for stem in ReducedWord::all_of_length(2, g.len() + 1) {
                    let c = Cylinder::new(stem.clone());
                    let pre = translate_cylinder_set_in(&g.invert(), &CylinderSet::cylinder(c.clone()), 2);
                    let rn = rn_derivative(&g, RnPoint::Cylinder(&c), &mu).unwrap();
                    let ratio = mu.set_mass(&pre) / mu.mass(&c);
                    assert!((ratio - rn.value).abs() < 1e-10 * rn.value, "g={g} stem={stem}");
                    if let (Some(e), Some(num)) = (rn.exact, mu.set_mass_exact(&pre)) {
                        assert_eq!(num / mu.mass_exact(&stem).unwrap(), e);
                    }
                }
            }
        }
    }

    #[test]
    fn rn_integrates_to_one() {
        let mu = ps_measure(&word_ctx());
        let muw = ps_measure(&weighted_ctx());
        for n in 0..=6 {
            for g in ReducedWord::all_of_length(2, n) {
                assert_eq!(rn_integral(&g, &mu).exact.unwrap(), rat(1, 1));
                assert!((rn_integral(&g, &muw).value - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cocycle_identity() {
        let mu = ps_measure(&weighted_ctx());
        let xi: BoundaryPoint = "abA|b".parse().unwrap();
        for g in [w("a"), w("bA"), w("BBa")] {
            for h in [w("b"), w("ab"), w("AAB")] {
                let gh = g.multiply(&h);
                let lhs = rn_derivative(&gh, RnPoint::Point(&xi), &mu).unwrap().value;
                let ginv_xi = xi.translate(&g.invert());
                let rhs = rn_derivative(&g, RnPoint::Point(&xi), &mu).unwrap().value
                    * rn_derivative(&h, RnPoint::Point(&ginv_xi), &mu).unwrap().value;
                assert!((lhs - rhs).abs() < 1e-10 * lhs, "g={g} h={h}");
            }
        }
    }

    #[test]
    fn ahlfors() {
        let ctx = word_ctx();
        let p = ahlfors_profile(&ps_measure(&ctx), &ctx, 0..=8);
        assert_eq!(p.rows[0].min_ratio, 1.0);
        for r in &p.rows[1..] {
            assert!((r.min_ratio - 0.75).abs() < 1e-12 && (r.max_ratio - 0.75).abs() < 1e-12);
        }
        assert!(p.pass);
        let ctx = weighted_ctx();
        let p = ahlfors_profile(&ps_measure(&ctx), &ctx, 1..=8);
        assert!(p.pass && p.constant < 10.0);
    }
}
