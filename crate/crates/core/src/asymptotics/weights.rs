//! Probability weightings `μ_R` of annuli: the greedy shadow partition and
//! uniform spheres.

use std::ops::Range;

use bitvec::prelude::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::boundary::{Cylinder, CylinderRectangle};
use crate::error::{Error, Result};
use crate::group::annulus::{sphere_size, Annulus, Branch};
use crate::group::context::GroupContext;
use crate::group::metric::{Length, MetricSpec};
use crate::group::word::{Letter, ReducedWord};
use crate::measures::{ps_measure, BoundaryMeasure, CellMeasure};

/// Largest occupancy grid, in cells.
pub const MAX_GRID_CELLS: u128 = 1 << 31;

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    ShadowPartition { rho: Length, h: Length },
    UniformSphere(usize),
}

#[derive(Clone, Debug)]
enum Support {
    Sphere(MetricSpec, usize),
    Explicit(Vec<ReducedWord>),
}

#[derive(Clone, Debug)]
enum Masses {
    /// Mass `1/denom` each.
    Uniform { denom: u128 },
    Counts { counts: Vec<u64>, denom: u128 },
    Real(Vec<f64>),
}

/// The weight of one support element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    /// Numerator over the family's common denominator.
    Count(u64),
    Real(f64),
}

impl Weight {
    pub fn count(self) -> u64 {
        match self {
            Weight::Count(c) => c,
            Weight::Real(_) => panic!("real weight has no count"),
        }
    }

    pub fn real(self) -> f64 {
        match self {
            Weight::Real(x) => x,
            Weight::Count(_) => panic!("exact weight read as real"),
        }
    }
}

/// A finitely supported probability measure on `Γ`.
#[derive(Clone, Debug)]
pub struct WeightFamily {
    pub radius: Length,
    pub provenance: Provenance,
    rank: usize,
    support: Support,
    masses: Masses,
    annulus_size: u128,
}

/// Uniform weights on the word sphere `S_n`.
pub fn sphere_weights(rank: usize, n: usize) -> Result<WeightFamily> {
    let metric = MetricSpec::word(rank)?;
    let size = sphere_size(rank, n);
    Ok(WeightFamily {
        radius: Length::integer(n as i64),
        provenance: Provenance::UniformSphere(n),
        rank,
        support: Support::Sphere(metric, n),
        masses: Masses::Uniform { denom: size },
        annulus_size: size,
    })
}

impl WeightFamily {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        match &self.support {
            Support::Sphere(_, _) => self.annulus_size as usize,
            Support::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|A_{R,h}|`, which may exceed the support size.
    pub fn annulus_size(&self) -> u128 {
        self.annulus_size
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.masses, Masses::Real(_))
    }

    /// Common denominator of exact masses.
    pub fn denominator(&self) -> Option<u128> {
        match &self.masses {
            Masses::Uniform { denom } | Masses::Counts { denom, .. } => Some(*denom),
            Masses::Real(_) => None,
        }
    }

    fn weight_at(&self, i: usize) -> Weight {
        match &self.masses {
            Masses::Uniform { .. } => Weight::Count(1),
            Masses::Counts { counts, .. } => Weight::Count(counts[i]),
            Masses::Real(m) => Weight::Real(m[i]),
        }
    }

    /// `(element, mass)` pairs; materializes sphere supports.
    pub fn entries(&self) -> Vec<(ReducedWord, f64)> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|g, w| out.push((ReducedWord::from_reduced_unchecked(g.to_vec()), self.weight_f64(w))));
        out
    }

    pub fn weight_f64(&self, w: Weight) -> f64 {
        match w {
            Weight::Count(c) => c as f64 / self.denominator().unwrap() as f64,
            Weight::Real(x) => x,
        }
    }

    pub fn weight_exact(&self, w: Weight) -> Option<BigRational> {
        Some(BigRational::new(BigInt::from(w.count()), BigInt::from(self.denominator()?)))
    }

    /// Sequential traversal in canonical order.
    pub fn for_each(&self, mut f: impl FnMut(&[Letter], Weight)) {
        match &self.support {
            Support::Sphere(m, n) => Annulus::sphere(m, *n).for_each(|g, _| f(g, Weight::Count(1))),
            Support::Explicit(v) => {
                for (i, g) in v.iter().enumerate() {
                    f(g, self.weight_at(i));
                }
            }
        }
    }

    /// Parallel fold over independent pieces of the support; the partial
    /// results come back in a fixed order.
    pub fn par_fold<T: Send>(
        &self,
        identity: impl Fn() -> T + Sync + Send,
        fold: impl Fn(&mut T, &[Letter], Weight) + Sync + Send,
    ) -> Vec<T> {
        match &self.support {
            Support::Sphere(m, n) => {
                let annulus = Annulus::sphere(m, *n);
                let branches: Vec<Branch> = annulus.branches((*n).min(3));
                branches
                    .par_iter()
                    .map(|b| {
                        let mut acc = identity();
                        annulus.for_each_in(b, |g, _| fold(&mut acc, g, Weight::Count(1)));
                        acc
                    })
                    .collect()
            }
            Support::Explicit(v) => {
                let idx: Vec<usize> = (0..v.len()).collect();
                idx.par_chunks(4096)
                    .map(|chunk| {
                        let mut acc = identity();
                        for &i in chunk {
                            fold(&mut acc, &v[i], self.weight_at(i));
                        }
                        acc
                    })
                    .collect()
            }
        }
    }

    /// `Σ μ_R(g)`, exactly when possible.
    pub fn total_exact(&self) -> Option<BigRational> {
        let d = self.denominator()?;
        let num: u128 = match &self.masses {
            Masses::Uniform { .. } => self.len() as u128,
            Masses::Counts { counts, .. } => counts.iter().map(|&c| c as u128).sum(),
            Masses::Real(_) => unreachable!(),
        };
        Some(BigRational::new(BigInt::from(num), BigInt::from(d)))
    }

    pub fn total_f64(&self) -> f64 {
        match &self.masses {
            Masses::Real(m) => m.iter().sum(),
            _ => 1.0,
        }
    }

    pub fn max_mass(&self) -> f64 {
        match &self.masses {
            Masses::Uniform { denom } => 1.0 / *denom as f64,
            Masses::Counts { counts, denom } => counts.iter().copied().max().unwrap_or(0) as f64 / *denom as f64,
            Masses::Real(m) => m.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `max μ_R(g) · |A_{R,h}|`
    pub fn concentration(&self) -> f64 {
        self.max_mass() * self.annulus_size as f64
    }
}

/// Pairs of depth-`m` cylinders indexed in mixed radix, so that every
/// cylinder of depth `<= m` is a contiguous range of indices.
#[derive(Clone, Debug)]
pub struct CellIndex {
    rank: usize,
    depth: usize,
    side: usize,
}

impl CellIndex {
    pub fn new(rank: usize, depth: usize) -> CellIndex {
        assert!(depth >= 1);
        let side = (2 * rank) * (2 * rank - 1).pow(depth as u32 - 1);
        CellIndex { rank, depth, side }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn radix(&self) -> usize {
        2 * self.rank - 1
    }

    fn successor_index(prev: Letter, s: Letter) -> usize {
        let banned = prev.inverse().code();
        s.code() - usize::from(s.code() > banned)
    }

    /// Cells inside `C_stem`.
    pub fn range(&self, stem: &[Letter]) -> Range<usize> {
        assert!(stem.len() <= self.depth, "stem deeper than the grid");
        if stem.is_empty() {
            return 0..self.side;
        }
        let r = self.radix();
        let mut start = stem[0].code();
        for i in 1..stem.len() {
            start = start * r + CellIndex::successor_index(stem[i - 1], stem[i]);
        }
        let width = r.pow((self.depth - stem.len()) as u32);
        start * width..(start + 1) * width
    }

    pub fn decode(&self, mut idx: usize) -> ReducedWord {
        let r = self.radix();
        let mut digits = vec![0; self.depth];
        for d in digits.iter_mut().skip(1).rev() {
            *d = idx % r;
            idx /= r;
        }
        let mut out: Vec<Letter> = vec![Letter::from_code(idx)];
        for &d in &digits[1..] {
            let prev = *out.last().unwrap();
            out.push(Letter::successors(self.rank, Some(prev)).nth(d).unwrap());
        }
        ReducedWord::from_reduced_unchecked(out)
    }
}

/// Occupancy bitset over pairs of depth-`m` cylinders.
struct ShadowGrid {
    index: CellIndex,
    bits: BitVec<u64, Lsb0>,
    cell_mass: Option<Vec<f64>>,
}

impl ShadowGrid {
    fn new(rank: usize, depth: usize, mu: &BoundaryMeasure) -> Result<ShadowGrid> {
        let index = CellIndex::new(rank, depth);
        let cells = (index.side as u128).pow(2);
        if cells > MAX_GRID_CELLS {
            return Err(Error::BudgetExceeded { requested: cells, budget: MAX_GRID_CELLS });
        }
        let cell_mass = match mu {
            BoundaryMeasure::Word(_) => None,
            BoundaryMeasure::Markov(m) => {
                Some((0..index.side).map(|i| CellMeasure::<f64>::mass(m, &index.decode(i))).collect())
            }
        };
        Ok(ShadowGrid { bits: bitvec![u64, Lsb0; 0; cells as usize], index, cell_mass })
    }

    /// Marks `rows × cols` occupied, returning the number of newly claimed
    /// cells and their mass (for non-uniform cell masses).
    fn claim(&mut self, rows: Range<usize>, cols: Range<usize>) -> (u64, f64) {
        let side = self.index.side;
        let mut count = 0u64;
        let mut mass = 0.0;
        for row in rows {
            let slice = &mut self.bits[row * side + cols.start..row * side + cols.end];
            let zeros = slice.count_zeros();
            if zeros == 0 {
                continue;
            }
            count += zeros as u64;
            if let Some(cm) = &self.cell_mass {
                let col_mass: f64 = slice.iter_zeros().map(|c| cm[cols.start + c]).sum();
                mass += cm[row] * col_mass;
            }
            slice.fill(true);
        }
        (count, mass)
    }

    fn first_gap(&self) -> Option<CylinderRectangle> {
        let i = self.bits.first_zero()?;
        let side = self.index.side;
        Some(CylinderRectangle {
            first: Cylinder::new(self.index.decode(i / side)),
            second: Cylinder::new(self.index.decode(i % side)),
        })
    }
}

/// Word-lengths `(a, b)` of the stems of `Σ²(g, ρ)`, and the stems.
fn shadow_stems(g: &[Letter], ctx: &GroupContext) -> (Vec<Letter>, Vec<Letter>) {
    let (a, b) = crate::boundary::shadow_stem_lengths(g, ctx);
    let n = g.len();
    let last = g.last().copied().unwrap_or(Letter::new(0, false));
    let first_inv = g.first().map(|s| s.inverse()).unwrap_or(Letter::new(0, false));
    let hat = (0..a).map(|i| if i < n { g[i] } else { last }).collect();
    let check = (0..b).map(|i| if i < n { g[n - 1 - i].inverse() } else { first_inv }).collect();
    (hat, check)
}

/// Result of the finite cover check.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverCheck {
    pub covered: bool,
    pub witness: Option<CylinderRectangle>,
    /// Resolution of the occupancy grid.
    pub depth: usize,
}

struct Sweep {
    grid: ShadowGrid,
    support: Vec<ReducedWord>,
    counts: Vec<u64>,
    reals: Vec<f64>,
    annulus_size: u128,
}

fn grid_depth(radius: Length, ctx: &GroupContext) -> usize {
    let annulus = Annulus::new(&ctx.metric, radius, ctx.h);
    let mut max_stem = 0;
    annulus.for_each(|g, _| {
        let (a, b) = crate::boundary::shadow_stem_lengths(g, ctx);
        max_stem = max_stem.max(a).max(b);
    });
    let base = ((radius + ctx.h).to_f64() / 2.0 - 1e-9).ceil().max(0.0) as usize + 1;
    base.max(max_stem)
}

fn sweep(radius: Length, ctx: &GroupContext, keep: bool) -> Result<Sweep> {
    let depth = grid_depth(radius, ctx);
    let mu = ps_measure(ctx);
    let mut grid = ShadowGrid::new(ctx.rank(), depth, &mu)?;
    let annulus = Annulus::new(&ctx.metric, radius, ctx.h);
    let (mut support, mut counts, mut reals) = (Vec::new(), Vec::new(), Vec::new());
    let mut annulus_size = 0u128;
    annulus.for_each(|g, _| {
        annulus_size += 1;
        let (hat, check) = shadow_stems(g, ctx);
        let rows = grid.index.range(&hat);
        let cols = grid.index.range(&check);
        let (count, mass) = grid.claim(rows, cols);
        if keep && count > 0 {
            support.push(ReducedWord::from_reduced_unchecked(g.to_vec()));
            counts.push(count);
            reals.push(mass);
        }
    });
    Ok(Sweep { grid, support, counts, reals, annulus_size })
}

/// Whether the double shadows `Σ²(g, ρ)`, `g ∈ A_{R,h}`, cover `∂Γ × ∂Γ`,
/// checked exactly on the grid of depth-`m` cylinder pairs.
pub fn check_shadow_cover(radius: Length, ctx: &GroupContext) -> Result<CoverCheck> {
    let s = sweep(radius, ctx, false)?;
    let witness = s.grid.first_gap();
    Ok(CoverCheck { covered: witness.is_none(), witness, depth: s.grid.index.depth })
}

/// `μ_R({g}) = μ²(E_g)` with `E_g = Σ²(g) ∖ ∪_{h<g} E_h` in the canonical
/// order. Elements whose shadow is already claimed are dropped.
pub fn build_partition_weights(radius: Length, ctx: &GroupContext) -> Result<WeightFamily> {
    let s = sweep(radius, ctx, true)?;
    if let Some(w) = s.grid.first_gap() {
        return Err(Error::CoverFailed {
            radius: radius.to_string(),
            witness: format!("C_{} x C_{}", w.first.stem, w.second.stem),
        });
    }
    let masses = match s.grid.cell_mass {
        None => Masses::Counts { counts: s.counts, denom: (s.grid.index.side as u128).pow(2) },
        Some(_) => Masses::Real(s.reals),
    };
    Ok(WeightFamily {
        radius,
        provenance: Provenance::ShadowPartition { rho: ctx.rho, h: ctx.h },
        rank: ctx.rank(),
        support: Support::Explicit(s.support),
        masses,
        annulus_size: s.annulus_size,
    })
}

/// Smallest `ρ` on the grid `0, step, 2·step, …, max` whose shadows cover
/// at radius `R`.
pub fn minimal_covering_rho(radius: Length, ctx: &GroupContext, step: Length, max: Length) -> Result<Option<Length>> {
    let mut rho = Length::zero();
    while rho.le(max) {
        let c = GroupContext::new(ctx.metric.clone(), ctx.epsilon, Some(rho), Some(ctx.h))?;
        if check_shadow_cover(radius, &c)?.covered {
            return Ok(Some(rho));
        }
        rho = rho + step;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::shadow_pair;
    use num_rational::Rational64;
    use num_traits::One;

    fn ctx(rho: i64, h: i64) -> GroupContext {
        GroupContext::new(MetricSpec::word(2).unwrap(), 1.0, Some(Length::integer(rho)), Some(Length::integer(h))).unwrap()
    }

    #[test]
    fn cell_index_ranges() {
        let ix = CellIndex::new(2, 3);
        assert_eq!(ix.side(), 36);
        assert_eq!(ix.range(&[]), 0..36);
        let a: ReducedWord = "a".parse().unwrap();
        assert_eq!(ix.range(&a), 0..9);
        let ba: ReducedWord = "BA".parse().unwrap();
        assert_eq!(ix.range(&ba), 30..33);
        for i in 0..36 {
            let w = ix.decode(i);
            assert_eq!(w.len(), 3);
            assert_eq!(ix.range(&w), i..i + 1);
        }
        let words: Vec<ReducedWord> = (0..36).map(|i| ix.decode(i)).collect();
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
    }

    #[test]
    fn sphere_weight_examples() {
        let w = sphere_weights(2, 1).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.entries().iter().all(|(_, m)| *m == 0.25));
        assert_eq!(sphere_weights(2, 2).unwrap().entries().len(), 12);
        let w0 = sphere_weights(2, 0).unwrap();
        assert_eq!(w0.entries(), vec![(ReducedWord::identity(), 1.0)]);
        assert!(w0.total_exact().unwrap().is_one());
    }

    #[test]
    fn cover_examples() {
        for r in [6, 7] {
            let c = check_shadow_cover(Length::integer(r), &ctx(1, 0)).unwrap();
            assert!(c.covered, "R = {r}");
        }
        assert!(check_shadow_cover(Length::zero(), &ctx(0, 0)).unwrap().covered);
        for r in [3, 5, 7] {
            let c = check_shadow_cover(Length::integer(r), &ctx(0, 0)).unwrap();
            assert!(!c.covered);
            let w = c.witness.unwrap();
            assert!(w.first.stem.len() == c.depth && w.second.stem.len() == c.depth);
        }
        assert_eq!(
            minimal_covering_rho(Length::integer(5), &ctx(0, 0), Length::Exact(Rational64::new(1, 2)), Length::integer(3))
                .unwrap(),
            Some(Length::Exact(Rational64::new(1, 2)))
        );
    }

    #[test]
    fn partition_weights_sum_to_one() {
        for r in 4..=10 {
            let c = ctx(1, 0);
            let w = build_partition_weights(Length::integer(r), &c).unwrap();
            assert!(w.total_exact().unwrap().is_one(), "R = {r}");
            assert!(w.len() as u128 <= w.annulus_size());
            let bound = w.max_mass() * 3f64.powi(r as i32);
            assert!(bound <= 16.0, "R = {r}: {bound}");
        }
    }

    #[test]
    fn partition_masses_bounded_by_shadow_mass() {
        let c = ctx(1, 1);
        let w = build_partition_weights(Length::integer(5), &c).unwrap();
        assert!(w.total_exact().unwrap().is_one());
        let mu = ps_measure(&c);
        for (g, m) in w.entries() {
            let s = shadow_pair(&g, &c);
            assert!(m <= mu.mass(&s.first) * mu.mass(&s.second) + 1e-15);
            let l = g.len() as i64;
            assert!((4..=6).contains(&l));
        }
        assert_eq!(w.annulus_size(), 108 + 324 + 972);
    }

    #[test]
    fn uncovered_radius_is_an_error() {
        assert!(matches!(build_partition_weights(Length::integer(5), &ctx(0, 0)), Err(Error::CoverFailed { .. })));
    }

    #[test]
    fn weighted_partition_sums_to_one() {
        let m = MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap();
        let c = GroupContext::new(m, 1.0, None, None).unwrap();
        let w = build_partition_weights(Length::integer(6), &c).unwrap();
        assert!(!w.is_exact());
        assert!((w.total_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_fold_sees_every_element() {
        let w = sphere_weights(2, 5).unwrap();
        let parts = w.par_fold(|| 0u64, |acc, _, wt| *acc += wt.count());
        assert_eq!(parts.iter().sum::<u64>(), 4 * 81);
        let c = ctx(1, 0);
        let p = build_partition_weights(Length::integer(6), &c).unwrap();
        let parts = p.par_fold(|| 0u128, |acc, _, wt| *acc += wt.count() as u128);
        assert_eq!(parts.iter().sum::<u128>(), p.denominator().unwrap());
    }
}
