//! Equidistribution of `(ĝ, ǧ)` under `μ_R` towards `μ ⊗ μ`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::asymptotics::report::{fit_error_decay, SweepReport, Value};
use crate::asymptotics::weights::{build_partition_weights, sphere_weights, CellIndex, Weight, WeightFamily};
use crate::boundary::{Cylinder, CylinderRectangle};
use crate::error::{Error, Result};
use crate::group::annulus::Annulus;
use crate::group::context::GroupContext;
use crate::group::metric::{Length, MetricKind};
use crate::group::word::{Letter, ReducedWord};
use crate::measures::{ps_measure, BoundaryMeasure};
use crate::scalar::Quad;

/// How `μ_R` is built in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    ShadowPartition,
    Sphere,
}

impl WeightScheme {
    pub fn weights(self, radius: usize, ctx: &GroupContext) -> Result<WeightFamily> {
        match self {
            WeightScheme::ShadowPartition => build_partition_weights(Length::integer(radius as i64), ctx),
            WeightScheme::Sphere => {
                if ctx.metric.kind() != MetricKind::Word {
                    return Err(Error::Unsupported("sphere weights need the word metric".into()));
                }
                sphere_weights(ctx.rank(), radius)
            }
        }
    }

    /// Size of the annulus behind `weights(radius)`; past `cap` the count
    /// may stop early.
    pub fn annulus_size(self, radius: usize, ctx: &GroupContext, cap: u128) -> Result<u128> {
        let h = match self {
            WeightScheme::ShadowPartition => ctx.h,
            WeightScheme::Sphere => Length::zero(),
        };
        match Annulus::new(&ctx.metric, Length::integer(radius as i64), h).size(cap) {
            Err(Error::BudgetExceeded { requested, .. }) => Ok(requested),
            other => other,
        }
    }
}

/// The first `depth` letters of `ĝ`.
pub fn hat_prefix(g: &[Letter], depth: usize) -> Vec<Letter> {
    let last = g.last().copied().unwrap_or(Letter::new(0, false));
    (0..depth).map(|i| g.get(i).copied().unwrap_or(last)).collect()
}

/// The first `depth` letters of `ǧ`.
pub fn check_prefix(g: &[Letter], depth: usize) -> Vec<Letter> {
    let n = g.len();
    let first_inv = g.first().map(|s| s.inverse()).unwrap_or(Letter::new(0, false));
    (0..depth).map(|i| if i < n { g[n - 1 - i].inverse() } else { first_inv }).collect()
}

/// `F = Σ c_i 1_{C_{u_i} × C_{v_i}}` with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct RectangleFunction {
    pub terms: Vec<(CylinderRectangle, BigRational)>,
}

impl RectangleFunction {
    pub fn indicator(first: ReducedWord, second: ReducedWord) -> RectangleFunction {
        RectangleFunction {
            terms: vec![(
                CylinderRectangle { first: Cylinder::new(first), second: Cylinder::new(second) },
                BigRational::from_integer(1.into()),
            )],
        }
    }

    pub fn one() -> RectangleFunction {
        RectangleFunction::indicator(ReducedWord::identity(), ReducedWord::identity())
    }

    pub fn depth(&self) -> usize {
        self.terms.iter().map(|(r, _)| r.first.stem.len().max(r.second.stem.len())).max().unwrap_or(0)
    }

    /// `∫ F d(μ ⊗ μ)`
    pub fn integral(&self, mu: &BoundaryMeasure) -> Value {
        match mu {
            BoundaryMeasure::Word(_) => Value::Exact(Quad::rational(
                self.terms
                    .iter()
                    .map(|(r, c)| c * mu.mass_exact(&r.first.stem).unwrap() * mu.mass_exact(&r.second.stem).unwrap())
                    .sum(),
            )),
            BoundaryMeasure::Markov(_) => Value::Float(
                self.terms
                    .iter()
                    .map(|(r, c)| crate::scalar::ratio_to_f64(c) * mu.mass(&r.first) * mu.mass(&r.second))
                    .sum(),
            ),
        }
    }
}

/// The law of `(ĝ, ǧ)` under `μ_R`, resolved to depth-`d` cylinder pairs.
#[derive(Clone, Debug)]
pub struct PairTable {
    index: CellIndex,
    exact: Option<(Vec<u128>, u128)>,
    real: Vec<f64>,
}

pub fn pair_table(w: &WeightFamily, depth: usize) -> PairTable {
    let index = CellIndex::new(w.rank(), depth.max(1));
    let side = index.side();
    let cell = |g: &[Letter]| {
        let r = index.range(&hat_prefix(g, index.depth())).start;
        let c = index.range(&check_prefix(g, index.depth())).start;
        r * side + c
    };
    if let Some(denom) = w.denominator() {
        let parts = w.par_fold(|| vec![0u128; side * side], |acc, g, wt| acc[cell(g)] += wt.count() as u128);
        let mut table = vec![0u128; side * side];
        for p in parts {
            for (t, x) in table.iter_mut().zip(p) {
                *t += x;
            }
        }
        PairTable { index, exact: Some((table, denom)), real: vec![] }
    } else {
        let parts = w.par_fold(|| vec![0f64; side * side], |acc, g, wt| acc[cell(g)] += Weight::real(wt));
        let mut table = vec![0f64; side * side];
        for p in parts {
            for (t, x) in table.iter_mut().zip(p) {
                *t += x;
            }
        }
        PairTable { index, exact: None, real: table }
    }
}

impl PairTable {
    pub fn depth(&self) -> usize {
        self.index.depth()
    }

    /// `Σ_g μ_R(g) F(ĝ, ǧ)`
    pub fn integral(&self, f: &RectangleFunction) -> Value {
        assert!(f.depth() <= self.depth(), "test function deeper than the table");
        let side = self.index.side();
        match &self.exact {
            Some((table, denom)) => {
                let mut acc = BigRational::zero();
                for (r, c) in &f.terms {
                    let mut n: u128 = 0;
                    for row in self.index.range(&r.first.stem) {
                        n += table[row * side..(row + 1) * side][self.index.range(&r.second.stem)].iter().sum::<u128>();
                    }
                    acc += c * BigRational::new(BigInt::from(n), BigInt::from(*denom));
                }
                Value::Exact(Quad::rational(acc))
            }
            None => {
                let mut acc = 0.0;
                for (r, c) in &f.terms {
                    let mut s = 0.0;
                    for row in self.index.range(&r.first.stem) {
                        s += self.real[row * side..(row + 1) * side][self.index.range(&r.second.stem)].iter().sum::<f64>();
                    }
                    acc += crate::scalar::ratio_to_f64(c) * s;
                }
                Value::Float(acc)
            }
        }
    }
}

/// `|Σ_g μ_R(g) F(ĝ, ǧ) − ∫ F d(μ ⊗ μ)|`
pub fn equidistribution_error(f: &RectangleFunction, w: &WeightFamily, mu: &BoundaryMeasure) -> Value {
    pair_table(w, f.depth()).integral(f).abs_diff(&f.integral(mu))
}

/// All stems of word length `<= depth`.
pub fn stems_up_to(rank: usize, depth: usize) -> Vec<ReducedWord> {
    (0..=depth).flat_map(|n| ReducedWord::all_of_length(rank, n)).collect()
}

/// Thresholds for the verdicts of [`equidistribution_sweep`].
#[derive(Clone, Copy, Debug)]
pub struct EquidistTargets {
    pub tolerance: f64,
    pub min_r_squared: f64,
}

/// The largest error over all rectangles `C_u × C_v` with `|u|, |v| <= depth`,
/// for each radius of the grid.
pub fn equidistribution_sweep(
    grid: &[usize],
    depth: usize,
    scheme: WeightScheme,
    ctx: &GroupContext,
    budget: u128,
    targets: EquidistTargets,
) -> Result<SweepReport> {
    let mu = ps_measure(ctx);
    let stems = stems_up_to(ctx.rank(), depth);
    let rects: Vec<RectangleFunction> = stems
        .iter()
        .flat_map(|u| stems.iter().map(move |v| RectangleFunction::indicator(u.clone(), v.clone())))
        .collect();
    let mut report = SweepReport::new("equidistribution", "R");
    let mut used = 0u128;
    for &r in grid {
        used += scheme.annulus_size(r, ctx, budget.saturating_sub(used))?;
        if used > budget {
            report.partial = true;
            break;
        }
        let w = scheme.weights(r, ctx)?;
        let table = pair_table(&w, depth);
        let worst = rects
            .iter()
            .map(|f| table.integral(f).abs_diff(&f.integral(&mu)))
            .max_by(|a, b| a.to_f64().total_cmp(&b.to_f64()))
            .unwrap();
        let zero = if worst.is_exact() { Value::Exact(Quad::rational(BigRational::zero())) } else { Value::Float(0.0) };
        report.push(r as f64, worst, Some(zero));
        report.constant(&format!("concentration_R{r}"), w.concentration());
    }
    report.fit = fit_error_decay(&report);
    if let (Some(first), Some(last)) = (report.rows.first().cloned(), report.rows.last().cloned()) {
        let (e0, e1) = (first.value.to_f64(), last.value.to_f64());
        report.verdict(
            "error decreases",
            report.rows.len() >= 2 && e1 < e0,
            format!("error {e0:.3e} at R={} vs {e1:.3e} at R={}", first.param, last.param),
        );
        report.verdict(
            "tolerance",
            e1 <= targets.tolerance,
            format!("error {e1:.3e} at R={} (tolerance {})", last.param, targets.tolerance),
        );
        let r2 = report.fit.as_ref().map(|f| f.r_squared);
        report.verdict(
            "fit quality",
            r2.is_some_and(|q| q >= targets.min_r_squared),
            match &report.fit {
                Some(f) => format!("slope {:.4} against -eps/2 = {:.4}, R^2 = {:.4}", f.slope, -ctx.epsilon / 2.0, f.r_squared),
                None => "no fit: fewer than two nonzero errors in the top half of the grid".to_string(),
            },
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num_traits::One;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn ctx() -> GroupContext {
        GroupContext::word(2).unwrap()
    }

    fn exact(v: Value) -> BigRational {
        let q = v.as_exact().unwrap().clone();
        assert!(q.is_rational());
        q.rational_part().clone()
    }

    #[test]
    fn projections_of_short_words() {
        assert_eq!(hat_prefix(&w("ab"), 4), w("abbb").into_letters());
        assert_eq!(check_prefix(&w("ab"), 4), w("BAAA").into_letters());
        assert_eq!(hat_prefix(&[], 2), w("aa").into_letters());
    }

    #[test]
    fn constant_function_has_no_error() {
        let mu = ps_measure(&ctx());
        for r in [0, 3, 6] {
            let s = sphere_weights(2, r).unwrap();
            assert!(exact(equidistribution_error(&RectangleFunction::one(), &s, &mu)).is_zero());
        }
        let p = build_partition_weights(Length::integer(6), &ctx()).unwrap();
        assert!(exact(equidistribution_error(&RectangleFunction::one(), &p, &mu)).is_zero());
    }

    #[test]
    fn sphere_pairs_converge() {
        let mu = ps_measure(&ctx());
        let f = RectangleFunction::indicator(w("a"), w("a"));
        // on S_n the pair (ĝ, ǧ) lies in C_a × C_a iff g starts with a and ends with A
        for n in 2..=7usize {
            let s = sphere_weights(2, n).unwrap();
            let value = exact(pair_table(&s, 1).integral(&f));
            let count = ReducedWord::all_of_length(2, n)
                .iter()
                .filter(|g| g.first() == Some(Letter::new(0, false)) && g.last() == Some(Letter::new(0, true)))
                .count();
            assert_eq!(value, rat(count as i64, (4 * 3i64.pow(n as u32 - 1)) as i64));
            let err = exact(equidistribution_error(&f, &s, &mu));
            assert!(crate::scalar::ratio_to_f64(&err) < 0.25 / (n as f64 - 0.5));
        }
    }

    #[test]
    fn shadow_weights_resolve_shallow_rectangles() {
        let mu = ps_measure(&ctx());
        let p = build_partition_weights(Length::integer(6), &ctx()).unwrap();
        let f = RectangleFunction::indicator(w("a"), w("b"));
        assert_eq!(exact(f.integral(&mu)), rat(1, 16));
        let err = exact(equidistribution_error(&f, &p, &mu));
        assert!(err <= rat(1, 50));
        assert!(p.total_exact().unwrap().is_one());
    }

    #[test]
    fn sweep_reports_verdicts() {
        let t = EquidistTargets { tolerance: 0.02, min_r_squared: 0.9 };
        let rep = equidistribution_sweep(&[2, 3, 4], 1, WeightScheme::Sphere, &ctx(), 1_000, t).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert_eq!(rep.verdicts.len(), 3);
        let rep = equidistribution_sweep(&[2, 3, 9], 1, WeightScheme::Sphere, &ctx(), 1_000, t).unwrap();
        assert!(rep.partial);
        assert_eq!(rep.rows.len(), 2);
    }
}
