//! The Gromov boundary of the free group as infinite reduced words.
//!
//! Boundary points are restricted to eventually periodic words, a dense
//! subset closed under the group action. Cylinders `C_w` (all rays starting
//! with `w`) are exactly the balls of the visual metric.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::group::context::GroupContext;
use crate::group::metric::{check_projection, hat_projection, Length, MetricSpec};
use crate::group::word::{common_prefix_len, Letter, ReducedWord};

/// The ray `preperiod · period · period · …`, stored in canonical form
/// (shortest period, shortest preperiod).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoundaryPoint {
    preperiod: ReducedWord,
    period: ReducedWord,
}

impl BoundaryPoint {
    pub fn new(preperiod: ReducedWord, period: ReducedWord) -> Result<BoundaryPoint> {
        let (Some(first), Some(last)) = (period.first(), period.last()) else {
            return Err(Error::Parse("boundary point needs a nonempty period".into()));
        };
        if last == first.inverse() {
            return Err(Error::NotReduced(format!("{period} (period is not cyclically reduced)")));
        }
        if preperiod.last() == Some(first.inverse()) {
            return Err(Error::NotReduced(format!("{preperiod}|{period}")));
        }
        Ok(BoundaryPoint::canonical(preperiod.into_letters(), period.into_letters()))
    }

    /// `s^∞`
    pub fn ray(s: Letter) -> BoundaryPoint {
        BoundaryPoint {
            preperiod: ReducedWord::identity(),
            period: ReducedWord::from_reduced_unchecked(vec![s]),
        }
    }

    fn canonical(mut pre: Vec<Letter>, period: Vec<Letter>) -> BoundaryPoint {
        let n = period.len();
        let d = (1..=n)
            .find(|&d| n % d == 0 && (d..n).all(|i| period[i] == period[i - d]))
            .unwrap();
        let mut period = period[..d].to_vec();
        while let Some(&l) = pre.last() {
            if l != *period.last().unwrap() {
                break;
            }
            pre.pop();
            period.rotate_right(1);
        }
        BoundaryPoint {
            preperiod: ReducedWord::from_reduced_unchecked(pre),
            period: ReducedWord::from_reduced_unchecked(period),
        }
    }

    pub fn preperiod(&self) -> &ReducedWord {
        &self.preperiod
    }

    pub fn period(&self) -> &ReducedWord {
        &self.period
    }

    #[inline]
    pub fn letter(&self, i: usize) -> Letter {
        let p = self.preperiod.len();
        if i < p {
            self.preperiod[i]
        } else {
            self.period[(i - p) % self.period.len()]
        }
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord::from_reduced_unchecked((0..n).map(|i| self.letter(i)).collect())
    }

    pub fn starts_with(&self, stem: &[Letter]) -> bool {
        stem.iter().enumerate().all(|(i, &s)| self.letter(i) == s)
    }

    /// Common prefix length with a finite word (at most `|word|`).
    pub fn common_prefix_with(&self, word: &[Letter]) -> usize {
        word.iter().enumerate().take_while(|(i, &s)| self.letter(*i) == s).count()
    }

    /// Common prefix length with another boundary point; `None` if equal.
    pub fn common_prefix(&self, other: &BoundaryPoint) -> Option<usize> {
        if self == other {
            return None;
        }
        // two distinct eventually periodic rays differ before this index
        let bound = self.preperiod.len().max(other.preperiod.len()) + self.period.len() * other.period.len() + 1;
        (0..bound).find(|&i| self.letter(i) != other.letter(i))
    }

    /// `gξ`
    pub fn translate(&self, g: &ReducedWord) -> BoundaryPoint {
        let reps = g.len() / self.period.len() + 2;
        let mut w = self.preperiod.letters().to_vec();
        for _ in 0..reps {
            w.extend_from_slice(&self.period);
        }
        let moved = g.multiply(&ReducedWord::from_reduced_unchecked(w));
        BoundaryPoint::canonical(moved.into_letters(), self.period.letters().to_vec())
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre = if self.preperiod.is_identity() { String::new() } else { self.preperiod.to_string() };
        write!(f, "{pre}|{}", self.period)
    }
}

impl fmt::Debug for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `"stem|period"`, e.g. `"a|b"` for `a b b b …`.
impl FromStr for BoundaryPoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<BoundaryPoint> {
        let (pre, per) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("boundary point {s:?} is not of the form stem|period")))?;
        let pre: ReducedWord = pre.parse()?;
        let per: ReducedWord = per.parse()?;
        BoundaryPoint::new(pre, per)
    }
}

/// A point of the compactification: a group element or a boundary point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Point {
    Element(ReducedWord),
    Boundary(BoundaryPoint),
}

/// A length that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtLength {
    Finite(Length),
    Infinite,
}

impl ExtLength {
    pub fn to_f64(self) -> f64 {
        match self {
            ExtLength::Finite(l) => l.to_f64(),
            ExtLength::Infinite => f64::INFINITY,
        }
    }
}

/// Gromov product on `Γ ∪ ∂Γ`: the length of the common prefix.
pub fn boundary_gromov(x: &Point, y: &Point, m: &MetricSpec) -> ExtLength {
    let common = match (x, y) {
        (Point::Element(u), Point::Element(v)) => common_prefix_len(u, v),
        (Point::Element(u), Point::Boundary(b)) | (Point::Boundary(b), Point::Element(u)) => b.common_prefix_with(u),
        (Point::Boundary(a), Point::Boundary(b)) => match a.common_prefix(b) {
            None => return ExtLength::Infinite,
            Some(n) => n,
        },
    };
    let prefix = match (x, y) {
        (Point::Element(u), _) => u.prefix(common),
        (_, Point::Element(v)) => v.prefix(common),
        (Point::Boundary(a), _) => a.prefix(common),
    };
    ExtLength::Finite(m.length_of(&prefix))
}

/// Visual distance `e^{-ε(ξ,η)}`.
pub fn visual_distance(xi: &BoundaryPoint, eta: &BoundaryPoint, ctx: &GroupContext) -> f64 {
    match boundary_gromov(&Point::Boundary(xi.clone()), &Point::Boundary(eta.clone()), &ctx.metric) {
        ExtLength::Infinite => 0.0,
        ExtLength::Finite(l) => (-ctx.epsilon * l.to_f64()).exp(),
    }
}

/// The retraction `p` of `Γ ∪ ∂Γ` onto `∂Γ`.
pub fn retract(x: &Point) -> BoundaryPoint {
    match x {
        Point::Element(g) => hat_projection(g),
        Point::Boundary(b) => b.clone(),
    }
}

/// The cylinder `C_w` of rays starting with `w`; `C_1 = ∂Γ`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder {
    pub stem: ReducedWord,
}

impl Cylinder {
    pub fn new(stem: ReducedWord) -> Cylinder {
        Cylinder { stem }
    }

    pub fn whole() -> Cylinder {
        Cylinder { stem: ReducedWord::identity() }
    }

    pub fn contains(&self, xi: &BoundaryPoint) -> bool {
        xi.starts_with(&self.stem)
    }

    pub fn contains_cylinder(&self, other: &Cylinder) -> bool {
        other.stem.starts_with(&self.stem)
    }

    pub fn is_disjoint(&self, other: &Cylinder) -> bool {
        !self.contains_cylinder(other) && !other.contains_cylinder(self)
    }

    /// The `2k-1` (or `2k` at the root) children.
    pub fn children(&self, rank: usize) -> impl Iterator<Item = Cylinder> + '_ {
        Letter::successors(rank, self.stem.last()).map(move |s| Cylinder { stem: self.stem.extended(s).unwrap() })
    }
}

impl fmt::Debug for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C[{}]", self.stem)
    }
}

/// The shortest prefix of `xi` of metric length at least `t`: the visual
/// ball `B(ξ, e^{-εt})` on the tree.
pub fn ball_cylinder(xi: &BoundaryPoint, t: Length, m: &MetricSpec) -> Cylinder {
    let mut len = Length::zero();
    let mut n = 0;
    while len.lt(t) {
        len = len + m.letter_length(xi.letter(n));
        n += 1;
    }
    Cylinder::new(xi.prefix(n))
}

/// Clopen sets generated by cylinders.
#[derive(Clone, Debug)]
pub enum CylinderSet {
    /// Disjoint union; `Union(vec![])` is empty, `Union(vec![C_1])` everything.
    Union(Vec<Cylinder>),
    /// `∂Γ ∖ C_w` for `w ≠ 1`.
    Complement(Cylinder),
}

impl CylinderSet {
    pub fn whole() -> CylinderSet {
        CylinderSet::Union(vec![Cylinder::whole()])
    }

    pub fn cylinder(c: Cylinder) -> CylinderSet {
        CylinderSet::Union(vec![c])
    }

    pub fn contains(&self, xi: &BoundaryPoint) -> bool {
        match self {
            CylinderSet::Union(cs) => cs.iter().any(|c| c.contains(xi)),
            CylinderSet::Complement(c) => !c.contains(xi),
        }
    }

    /// The set as a disjoint union of maximal cylinders, sorted.
    pub fn to_cylinders(&self, rank: usize) -> Vec<Cylinder> {
        let mut cs = match self {
            CylinderSet::Union(cs) => cs.clone(),
            CylinderSet::Complement(c) => {
                let u = &c.stem;
                let mut out = Vec::new();
                for i in 0..u.len() {
                    let base = u.prefix(i);
                    for s in Letter::successors(rank, base.last()) {
                        if s != u[i] {
                            out.push(Cylinder::new(base.extended(s).unwrap()));
                        }
                    }
                }
                out
            }
        };
        normalize_union(&mut cs, rank);
        cs
    }

    pub fn complement(&self, rank: usize) -> CylinderSet {
        match self {
            CylinderSet::Complement(c) => CylinderSet::cylinder(c.clone()),
            CylinderSet::Union(cs) if cs.len() == 1 && !cs[0].stem.is_identity() => {
                CylinderSet::Complement(cs[0].clone())
            }
            CylinderSet::Union(_) => {
                let own = self.to_cylinders(rank);
                let mut out = Vec::new();
                complement_rec(&Cylinder::whole(), &own, rank, &mut out);
                CylinderSet::Union(out)
            }
        }
    }

    pub fn same_set(&self, other: &CylinderSet, rank: usize) -> bool {
        self.to_cylinders(rank) == other.to_cylinders(rank)
    }
}

fn complement_rec(node: &Cylinder, own: &[Cylinder], rank: usize, out: &mut Vec<Cylinder>) {
    if own.iter().any(|c| c.contains_cylinder(node)) {
        return;
    }
    if !own.iter().any(|c| node.contains_cylinder(c)) {
        out.push(node.clone());
        return;
    }
    for child in node.children(rank) {
        complement_rec(&child, own, rank, out);
    }
}

/// Sorts, drops nested cylinders and merges complete sibling families.
fn normalize_union(cs: &mut Vec<Cylinder>, rank: usize) {
    loop {
        cs.sort();
        cs.dedup();
        let snapshot = cs.clone();
        cs.retain(|c| !snapshot.iter().any(|d| d != c && d.contains_cylinder(c)));
        let mut merged = false;
        let parents: Vec<ReducedWord> = cs.iter().filter(|c| !c.stem.is_identity()).map(|c| c.stem.prefix(c.stem.len() - 1)).collect();
        for parent in parents {
            let p = Cylinder::new(parent);
            let kids: Vec<Cylinder> = p.children(rank).collect();
            if kids.iter().all(|k| cs.contains(k)) {
                cs.retain(|c| !kids.contains(c));
                cs.push(p);
                merged = true;
                break;
            }
        }
        if !merged {
            return;
        }
    }
}

/// `g C_w`.
pub fn translate_cylinder(g: &ReducedWord, c: &Cylinder) -> CylinderSet {
    if c.stem.is_identity() {
        return CylinderSet::whole();
    }
    let v = g.multiply(&c.stem);
    if v.len() < g.len() && g.starts_with(&v) {
        CylinderSet::Complement(Cylinder::new(g.prefix(v.len() + 1)))
    } else {
        CylinderSet::cylinder(Cylinder::new(v))
    }
}

/// `gS = {gξ : ξ ∈ S}`.
pub fn translate_cylinder_set(g: &ReducedWord, s: &CylinderSet) -> CylinderSet {
    let rank = g.min_rank().max(2).max(match s {
        CylinderSet::Union(cs) => cs.iter().map(|c| c.stem.min_rank()).max().unwrap_or(0),
        CylinderSet::Complement(c) => c.stem.min_rank(),
    });
    translate_cylinder_set_in(g, s, rank)
}

/// As [`translate_cylinder_set`] with an explicit rank (needed to expand
/// complements when the words involve fewer generators than the group).
pub fn translate_cylinder_set_in(g: &ReducedWord, s: &CylinderSet, rank: usize) -> CylinderSet {
    match s {
        CylinderSet::Complement(c) => translate_cylinder(g, c).complement(rank),
        CylinderSet::Union(cs) if cs.len() == 1 => translate_cylinder(g, &cs[0]),
        CylinderSet::Union(cs) => {
            let mut out = Vec::new();
            for c in cs {
                out.extend(translate_cylinder(g, c).to_cylinders(rank));
            }
            normalize_union(&mut out, rank);
            CylinderSet::Union(out)
        }
    }
}

/// `C_u × C_v ⊆ ∂Γ × ∂Γ`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CylinderRectangle {
    pub first: Cylinder,
    pub second: Cylinder,
}

impl CylinderRectangle {
    pub fn contains(&self, xi: &BoundaryPoint, eta: &BoundaryPoint) -> bool {
        self.first.contains(xi) && self.second.contains(eta)
    }
}

/// The double shadow `Σ²(g, ρ)`: the product of the visual balls of radius
/// `e^{-ε(|g|/2-ρ)}` around `ĝ` and `ǧ`. When `|g| < 2ρ` the radius exceeds
/// the diameter and both factors are `∂Γ`.
pub fn shadow_pair(g: &ReducedWord, ctx: &GroupContext) -> CylinderRectangle {
    let t = ctx.metric.length_of(g).half() - ctx.rho;
    CylinderRectangle {
        first: ball_cylinder(&hat_projection(g), t, &ctx.metric),
        second: ball_cylinder(&check_projection(g), t, &ctx.metric),
    }
}

/// Stem word-lengths of `Σ²(g, ρ)` without building the words.
pub(crate) fn shadow_stem_lengths(g: &[Letter], ctx: &GroupContext) -> (usize, usize) {
    let m = &ctx.metric;
    let t = m.length_of(g).half() - ctx.rho;
    let stem_len = |letter_at: &dyn Fn(usize) -> Letter| {
        let mut len = Length::zero();
        let mut n = 0;
        while len.lt(t) {
            len = len + m.letter_length(letter_at(n));
            n += 1;
        }
        n
    };
    let last = g.last().copied().unwrap_or(Letter::new(0, false));
    let first_inv = g.first().map(|s| s.inverse()).unwrap_or(Letter::new(0, false));
    let n = g.len();
    let a = stem_len(&|i| if i < n { g[i] } else { last });
    let b = stem_len(&|i| if i < n { g[n - 1 - i].inverse() } else { first_inv });
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }
    fn bp(s: &str) -> BoundaryPoint {
        s.parse().unwrap()
    }
    fn word_ctx() -> GroupContext {
        GroupContext::new(MetricSpec::word(2).unwrap(), 1.0, Some(Length::zero()), None).unwrap()
    }

    #[test]
    fn canonical_form_is_minimal() {
        assert_eq!(bp("ab|abab"), bp("|ab"));
        assert_eq!(bp("abb|b").to_string(), "a|b");
        assert_eq!(bp("|aa").to_string(), "|a");
        assert!("aA|b".parse::<BoundaryPoint>().is_err());
        assert!("a|A".parse::<BoundaryPoint>().is_err());
        assert!("|aBA".parse::<BoundaryPoint>().is_err());
    }

    #[test]
    fn gromov_products_on_boundary() {
        let m = MetricSpec::word(2).unwrap();
        let a_inf = Point::Boundary(bp("|a"));
        let abb = Point::Boundary(bp("a|b"));
        assert_eq!(boundary_gromov(&a_inf, &abb, &m), ExtLength::Finite(Length::integer(1)));
        assert_eq!(boundary_gromov(&abb, &abb, &m), ExtLength::Infinite);
        assert_eq!(boundary_gromov(&Point::Element(w("ab")), &a_inf, &m), ExtLength::Finite(Length::integer(1)));
    }

    #[test]
    fn word_to_boundary_product_is_limit_of_defining_formula() {
        // ½(|x| + |y_n| - d(x, y_n)) along y_n = a^n
        let m = MetricSpec::word(2).unwrap();
        let x = w("ab");
        for n in 2..8 {
            let y = ReducedWord::from_reduced(vec![Letter::new(0, false); n]).unwrap();
            let f = (m.length_of(&x) + m.length_of(&y) - m.distance(&x, &y)).half();
            assert_eq!(f, Length::integer(1));
        }
    }

    #[test]
    fn visual_distance_examples() {
        let ctx = word_ctx();
        assert_eq!(visual_distance(&bp("|a"), &bp("|a"), &ctx), 0.0);
        assert_eq!(visual_distance(&bp("|a"), &bp("|b"), &ctx), 1.0);
        let d = visual_distance(&bp("a|b"), &bp("aB|a"), &ctx);
        assert!((d - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn retraction() {
        assert_eq!(retract(&Point::Element(w("ab"))), bp("a|b"));
        assert_eq!(retract(&Point::Boundary(bp("aB|ab"))), bp("aB|ab"));
        let m = MetricSpec::word(2).unwrap();
        let target = Point::Boundary(bp("a|b"));
        for n in 1..10 {
            let x = bp("a|b").prefix(n);
            let img = Point::Boundary(retract(&Point::Element(x)));
            assert!(boundary_gromov(&img, &target, &m).to_f64() >= n as f64);
        }
        // a sequence whose images are never equal to the limit
        let target = Point::Boundary(bp("|ab"));
        for n in 1..12 {
            let x = bp("|ab").prefix(n);
            let img = Point::Boundary(retract(&Point::Element(x)));
            assert_eq!(boundary_gromov(&img, &target, &m), ExtLength::Finite(Length::integer(n as i64)));
        }
    }

    #[test]
    fn translate_examples() {
        let r = translate_cylinder_set(&w("a"), &CylinderSet::cylinder(Cylinder::new(w("b"))));
        assert!(r.same_set(&CylinderSet::cylinder(Cylinder::new(w("ab"))), 2));
        let r = translate_cylinder_set(&w("a"), &CylinderSet::cylinder(Cylinder::new(w("A"))));
        assert!(matches!(&r, CylinderSet::Complement(c) if c.stem == w("a")));
        let r = translate_cylinder_set(&w("abA"), &CylinderSet::whole());
        assert!(r.same_set(&CylinderSet::whole(), 2));
    }

    #[test]
    fn translate_matches_pointwise_action() {
        // membership oracle: rays with depth-3 preperiods
        let rays: Vec<BoundaryPoint> = ReducedWord::all_of_length(2, 3)
            .into_iter()
            .flat_map(|p| {
                let last = p.last().unwrap();
                Letter::successors(2, Some(last)).map(move |s| BoundaryPoint::new(p.clone(), ReducedWord::from_reduced(vec![s]).unwrap()).unwrap())
            })
            .collect();
        let sets = [
            CylinderSet::cylinder(Cylinder::new(w("b"))),
            CylinderSet::cylinder(Cylinder::new(w("A"))),
            CylinderSet::Complement(Cylinder::new(w("ab"))),
            CylinderSet::Union(vec![Cylinder::new(w("ab")), Cylinder::new(w("B"))]),
        ];
        for g in [w("a"), w("ab"), w("BA"), w("abA")] {
            for s in &sets {
                let img = translate_cylinder_set_in(&g, s, 2);
                for xi in &rays {
                    let pre = xi.translate(&g.invert());
                    assert_eq!(img.contains(xi), s.contains(&pre), "g={g} xi={xi}");
                }
            }
        }
    }

    #[test]
    fn shadow_examples() {
        let ctx = word_ctx();
        let s = shadow_pair(&w("abab"), &ctx);
        assert_eq!(s.first.stem, w("ab"));
        assert_eq!(s.second.stem, w("BA"));
        let s = shadow_pair(&ReducedWord::identity(), &ctx);
        assert!(s.first.stem.is_identity() && s.second.stem.is_identity());
        let s = shadow_pair(&w("aa"), &ctx);
        assert_eq!((s.first.stem.clone(), s.second.stem.clone()), (w("a"), w("A")));
        let ctx1 = GroupContext::new(MetricSpec::word(2).unwrap(), 1.0, Some(Length::integer(1)), None).unwrap();
        let s = shadow_pair(&w("a"), &ctx1);
        assert!(s.first.stem.is_identity());
    }

    #[test]
    fn shadow_stem_lengths_agree() {
        let w12 = MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap();
        let ctx = GroupContext::new(w12, 1.0, Some(Length::integer(1)), None).unwrap();
        for g in ReducedWord::all_of_length(2, 5) {
            let s = shadow_pair(&g, &ctx);
            assert_eq!(shadow_stem_lengths(&g, &ctx), (s.first.stem.len(), s.second.stem.len()));
            assert!(s.contains(&hat_projection(&g), &check_projection(&g)));
        }
    }
}
