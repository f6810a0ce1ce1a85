//! Annular rapid decay: sphere sums of squared matrix coefficients,
//! convolutions of annulus-supported functions and their fibers, and the
//! growth experiment showing the good vector bound fails.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::report::{fit_line, top_half, SweepReport, Value};
use crate::asymptotics::weights::sphere_weights;
use crate::error::{Error, Result};
use crate::group::annulus::sphere_size;
use crate::group::word::{multiply_slices, Letter, ReducedWord};
use crate::measures::BoundaryMeasure;
use crate::representation::coefficient::{matrix_coefficient, norm_squared};
use crate::representation::fast::{omega_powers, scale_exponent, scaled_coefficient, IntStep};
use crate::representation::step::StepFunction;
use crate::scalar::{ratio_to_f64, Quad, Scalar};

/// `q_n = Σ_{g ∈ S_n} |⟨π(g)v, w⟩|²`
pub fn coefficient_square_sum(v: &StepFunction<Quad>, w: &StepFunction<Quad>, n: usize, mu: &BoundaryMeasure) -> Result<Value> {
    let sphere = sphere_weights(mu.rank(), n)?;
    if let BoundaryMeasure::Word(m) = mu {
        if let (Some(iv), Some(iw)) = (IntStep::new(v), IntStep::new(w)) {
            let k = scale_exponent(n, iv.depth().max(iw.depth()));
            let pow = omega_powers(m.omega, 2 * k as usize + 2);
            let parts = sphere.par_fold(
                || Some((BigInt::zero(), BigInt::zero())),
                |acc, g, _| match (acc.as_mut(), scaled_coefficient(g, &iv, &iw, k, &pow)) {
                    (Some((p, q)), Some((a, b))) => {
                        let (a, b) = (BigInt::from(a), BigInt::from(b));
                        *p += &a * &a + &b * &b * BigInt::from(m.omega);
                        *q += BigInt::from(2) * a * b;
                    }
                    _ => *acc = None,
                },
            );
            if let Some(parts) = parts.into_iter().collect::<Option<Vec<_>>>() {
                let (p, q) = parts.into_iter().fold((BigInt::zero(), BigInt::zero()), |(p, q), (x, y)| (p + x, q + y));
                let d = BigInt::from(m.omega + 1) * BigInt::from(iv.denom()) * BigInt::from(iw.denom())
                    * num_traits::pow(BigInt::from(m.omega), k as usize);
                let d2 = &d * &d;
                let val = Quad::rational(BigRational::new(p, d2.clone()))
                    + Quad::rational(BigRational::new(q, d2)) * Quad::half_power(m.omega, 1);
                return Ok(Value::Exact(val));
            }
        }
        let parts = sphere.par_fold(Quad::zero, |acc, g, _| {
            let g = word(g);
            let c = matrix_coefficient(&g, v, w, m);
            *acc = acc.clone() + c.clone() * c;
        });
        return Ok(Value::Exact(parts.into_iter().fold(Quad::zero(), |a, b| a + b)));
    }
    let BoundaryMeasure::Markov(m) = mu else { unreachable!() };
    let (vf, wf) = (v.to_f64(), w.to_f64());
    let parts = sphere.par_fold(
        || 0.0,
        |acc, g, _| {
            let g = word(g);
            *acc += matrix_coefficient(&g, &vf, &wf, m).powi(2);
        },
    );
    Ok(Value::Float(parts.into_iter().sum()))
}

fn word(g: &[Letter]) -> ReducedWord {
    ReducedWord::from_reduced(g.to_vec()).expect("annulus words are reduced")
}

fn norms_squared(v: &StepFunction<Quad>, w: &StepFunction<Quad>, mu: &BoundaryMeasure) -> f64 {
    let n = |x: &StepFunction<Quad>| match mu {
        BoundaryMeasure::Word(m) => norm_squared(x, m).to_f64(),
        BoundaryMeasure::Markov(m) => norm_squared(&x.to_f64(), m),
    };
    n(v) * n(w)
}

/// `r_n = q_n^{1/2} / ((1+n)‖v‖‖w‖)`, with `q_n` alongside.
pub fn annular_rd_ratio(v: &StepFunction<Quad>, w: &StepFunction<Quad>, n: usize, mu: &BoundaryMeasure) -> Result<(f64, Value)> {
    let q = coefficient_square_sum(v, w, n, mu)?;
    let r = q.to_f64().sqrt() / ((1 + n) as f64 * norms_squared(v, w, mu).sqrt());
    Ok((r, q))
}

fn check_budget(grid: &[usize], rank: usize, budget: u128, report: &mut SweepReport) -> usize {
    let mut used = 0u128;
    for (i, &n) in grid.iter().enumerate() {
        used += sphere_size(rank, n);
        if used > budget {
            report.partial = true;
            return i;
        }
    }
    grid.len()
}

/// `r_n` over a grid of sphere radii.
pub fn rd_sweep(
    v: &StepFunction<Quad>,
    w: &StepFunction<Quad>,
    grid: &[usize],
    mu: &BoundaryMeasure,
    budget: u128,
    lower: Option<f64>,
) -> Result<SweepReport> {
    let mut report = SweepReport::new("annular_rd", "n");
    let keep = check_budget(grid, mu.rank(), budget, &mut report);
    let (mut sup, mut inf) = (0f64, f64::INFINITY);
    for &n in &grid[..keep] {
        let (r, _) = annular_rd_ratio(v, w, n, mu)?;
        sup = sup.max(r);
        if n >= 2 {
            inf = inf.min(r);
        }
        report.push(n as f64, Value::Float(r), None);
    }
    report.constant("sup_r", sup);
    report.constant("inf_r_from_2", inf);
    report.verdict("bounded above", sup.is_finite(), format!("sup r_n = {sup:.6}"));
    if let Some(c) = lower {
        report.verdict("bounded below", inf >= c, format!("inf_(n>=2) r_n = {inf:.6} (threshold {c})"));
    }
    Ok(report)
}

/// Growth of `q_n` in `(1+n)`; the good vector bound fails when the fitted
/// exponent is about 2 while `q_n / ((1+n)²‖v‖²‖w‖²)` stays in a positive
/// bracket.
pub fn gvb_growth(
    v: &StepFunction<Quad>,
    w: &StepFunction<Quad>,
    grid: &[usize],
    mu: &BoundaryMeasure,
    budget: u128,
    band: (f64, f64),
) -> Result<SweepReport> {
    let mut report = SweepReport::new("gvb_growth", "n");
    let keep = check_budget(grid, mu.rank(), budget, &mut report);
    let norms = norms_squared(v, w, mu);
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    for &n in &grid[..keep] {
        let q = coefficient_square_sum(v, w, n, mu)?;
        let ratio = q.to_f64() / ((1 + n) as f64).powi(2) / norms;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        report.push(n as f64, q, None);
    }
    report.constant("ratio_min", lo);
    report.constant("ratio_max", hi);
    let top = top_half(&report.rows);
    let xs: Vec<f64> = top.iter().map(|r| (1.0 + r.param).ln()).collect();
    let ys: Vec<f64> = top.iter().map(|r| r.value.to_f64().ln()).collect();
    report.fit = fit_line(&xs, &ys, "ln(q_n) ~ ln(1+n)");
    let growing = top.windows(2).all(|p| p[1].value.to_f64() > p[0].value.to_f64());
    let exponent = report.fit.as_ref().map(|f| f.slope);
    if let Some(e) = exponent {
        report.constant("growth_exponent", e);
    }
    let pass = growing && exponent.is_some_and(|e| band.0 <= e && e <= band.1) && lo > 0.0;
    report.verdict(
        "GVB fails",
        pass,
        format!(
            "exponent {} in [{}, {}], q_n increasing: {growing}, ratio in [{lo:.4}, {hi:.4}]",
            exponent.map_or("n/a".to_string(), |e| format!("{e:.4}")),
            band.0,
            band.1
        ),
    );
    Ok(report)
}

/// A finitely supported function `Γ → Q`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupFunction {
    terms: BTreeMap<ReducedWord, BigRational>,
}

impl GroupFunction {
    pub fn new() -> GroupFunction {
        GroupFunction::default()
    }

    pub fn delta(g: ReducedWord) -> GroupFunction {
        let mut f = GroupFunction::new();
        f.add(g, BigRational::from_integer(1.into()));
        f
    }

    /// `1_{S}` for a finite set `S`.
    pub fn indicator(elements: impl IntoIterator<Item = ReducedWord>) -> GroupFunction {
        let mut f = GroupFunction::new();
        for g in elements {
            f.add(g, BigRational::from_integer(1.into()));
        }
        f
    }

    pub fn add(&mut self, g: ReducedWord, x: BigRational) {
        let e = self.terms.entry(g).or_insert_with(BigRational::zero);
        *e += x;
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn get(&self, g: &ReducedWord) -> BigRational {
        self.terms.get(g).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> &BTreeMap<ReducedWord, BigRational> {
        &self.terms
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn norm_squared(&self) -> BigRational {
        self.terms.values().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        ratio_to_f64(&self.norm_squared()).sqrt()
    }

    pub fn restrict(&self, keep: impl Fn(&ReducedWord) -> bool) -> GroupFunction {
        GroupFunction { terms: self.terms.iter().filter(|(g, _)| keep(g)).map(|(g, x)| (g.clone(), x.clone())).collect() }
    }
}

/// `(φ * ψ)(g) = Σ_x φ(x) ψ(x⁻¹g)`, refusing more than `budget` products.
pub fn convolve(phi: &GroupFunction, psi: &GroupFunction, budget: u128) -> Result<GroupFunction> {
    let requested = phi.support_len() as u128 * psi.support_len() as u128;
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let mut acc: HashMap<ReducedWord, BigRational> = HashMap::new();
    for (x, a) in &phi.terms {
        for (y, b) in &psi.terms {
            *acc.entry(multiply_slices(x, y)).or_insert_with(BigRational::zero) += a * b;
        }
    }
    Ok(GroupFunction { terms: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect() })
}

/// Fiber sizes `#{(x, y) ∈ S_R × S_R′ : xy = g}`, grouped by the
/// cancellation `p = (R + R′ − |g|)/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberRow {
    pub r1: usize,
    pub r2: usize,
    pub p: usize,
    pub identity: bool,
    pub elements: usize,
    pub min: u64,
    pub max: u64,
    pub expected: u128,
    pub bound: u128,
}

/// Size of every fiber over `g` with cancellation `p`.
pub fn expected_fiber_size(rank: usize, r1: usize, r2: usize, p: usize, identity: bool) -> u128 {
    let q = 2 * rank as u128 - 1;
    if p == 0 {
        1
    } else if identity {
        sphere_size(rank, p)
    } else if p == r1.min(r2) {
        q.pow(p as u32)
    } else {
        (q - 1) * q.pow(p as u32 - 1)
    }
}

/// The fiber-cardinality bound `#{…} <= |S_p|`.
pub fn fiber_bound(rank: usize, p: usize) -> u128 {
    sphere_size(rank, p)
}

/// Exhaustive fiber census over `S_R × S_R′`.
pub fn fiber_sizes(rank: usize, r1: usize, r2: usize) -> Vec<FiberRow> {
    let xs = ReducedWord::all_of_length(rank, r1);
    let ys = ReducedWord::all_of_length(rank, r2);
    let mut counts: HashMap<ReducedWord, u64> = HashMap::new();
    for x in &xs {
        for y in &ys {
            *counts.entry(multiply_slices(x, y)).or_default() += 1;
        }
    }
    let mut rows: BTreeMap<(usize, bool), FiberRow> = BTreeMap::new();
    for (g, c) in counts {
        let p = (r1 + r2 - g.len()) / 2;
        let identity = g.is_identity();
        let row = rows.entry((p, identity)).or_insert_with(|| FiberRow {
            r1,
            r2,
            p,
            identity,
            elements: 0,
            min: u64::MAX,
            max: 0,
            expected: expected_fiber_size(rank, r1, r2, p, identity),
            bound: fiber_bound(rank, p),
        });
        row.elements += 1;
        row.min = row.min.min(c);
        row.max = row.max.max(c);
    }
    rows.into_values().collect()
}

/// Random `φ` on `S_R` and `ψ` on `S_R′` with integer coefficients in
/// `[-3, 3]`; for each `R″` of the grid, the largest observed
/// `‖(φ*ψ)|_{S_R″}‖ / (‖φ‖‖ψ‖)`.
#[allow(clippy::too_many_arguments)]
pub fn rd_convolution_check(
    rank: usize,
    r1: usize,
    r2: usize,
    r3_grid: &[usize],
    trials: usize,
    seed: u64,
    budget: u128,
) -> Result<SweepReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = ReducedWord::all_of_length(rank, r1);
    let ys = ReducedWord::all_of_length(rank, r2);
    let random_on = |support: &[ReducedWord], rng: &mut ChaCha8Rng| {
        let mut f = GroupFunction::new();
        for g in support {
            f.add(g.clone(), BigRational::from_integer(rng.random_range(-3i64..=3).into()));
        }
        if f.support_len() == 0 {
            f.add(support[0].clone(), BigRational::from_integer(1.into()));
        }
        f
    };
    let mut report = SweepReport::new("rd_convolution", "R''");
    let mut restricted = vec![0f64; r3_grid.len()];
    let mut full = 0f64;
    for _ in 0..trials {
        let phi = random_on(&xs, &mut rng);
        let psi = random_on(&ys, &mut rng);
        let conv = convolve(&phi, &psi, budget)?;
        let denom = phi.norm() * psi.norm();
        full = full.max(conv.norm() / denom);
        for (i, &r3) in r3_grid.iter().enumerate() {
            let part = conv.restrict(|g| g.len() == r3);
            restricted[i] = restricted[i].max(part.norm() / denom);
        }
    }
    for (i, &r3) in r3_grid.iter().enumerate() {
        report.push(r3 as f64, Value::Float(restricted[i]), None);
    }
    let scale = (1 + r1.min(r2)) as f64;
    report.constant("max_full_ratio", full);
    report.constant("max_full_ratio_over_1_plus_R", full / scale);
    let max_restricted = restricted.iter().copied().fold(0.0, f64::max);
    report.constant("max_restricted_ratio", max_restricted);
    report.verdict(
        "bounded",
        full <= scale * (1.0 + 1e-12) && max_restricted <= 1.0 + 1e-12,
        format!("full ratio {full:.4} <= 1+min(R,R') = {scale}; sphere-restricted ratio {max_restricted:.4} <= 1"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::context::GroupContext;
    use crate::measures::ps_measure;
    use crate::scalar::rat;
    use num_traits::One;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }
    fn mu() -> BoundaryMeasure {
        ps_measure(&GroupContext::word(2).unwrap())
    }
    fn one() -> StepFunction<Quad> {
        StepFunction::one(2)
    }

    #[test]
    fn exact_sphere_sums() {
        let m = mu();
        assert_eq!(coefficient_square_sum(&one(), &one(), 1, &m).unwrap(), Value::Exact(Quad::from_i64(3)));
        assert_eq!(coefficient_square_sum(&one(), &one(), 2, &m).unwrap(), Value::Exact(Quad::rational(rat(16, 3))));
        let (r1, _) = annular_rd_ratio(&one(), &one(), 1, &m).unwrap();
        assert!((r1 - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let (r2, _) = annular_rd_ratio(&one(), &one(), 2, &m).unwrap();
        assert!((r2 - (16.0f64 / 3.0).sqrt() / 3.0).abs() < 1e-15);
        // closed form q_n = (n+2)²/3
        for n in 1..=8 {
            let q = coefficient_square_sum(&one(), &one(), n, &m).unwrap();
            assert_eq!(q, Value::Exact(Quad::rational(rat(((n + 2) * (n + 2)) as i64, 3))));
        }
    }

    #[test]
    fn fast_sum_matches_generic() {
        let m = mu();
        let v = StepFunction::from_terms(2, Quad::rational(rat(1, 2)), vec![(w("ab"), Quad::one())]).unwrap();
        let u = StepFunction::indicator(2, w("B"));
        let wm = m.as_word().unwrap();
        for n in 0..=4 {
            let slow = ReducedWord::all_of_length(2, n).iter().fold(Quad::zero(), |a, g| {
                let c = matrix_coefficient(g, &v, &u, wm);
                a + c.clone() * c
            });
            assert_eq!(coefficient_square_sum(&v, &u, n, &m).unwrap(), Value::Exact(slow));
        }
    }

    #[test]
    fn gvb_examples() {
        let rep = gvb_growth(&one(), &one(), &[1, 2], &mu(), 1000, (1.8, 2.2)).unwrap();
        assert_eq!(rep.rows[0].value, Value::Exact(Quad::from_i64(3)));
        assert!((rep.constants["ratio_max"] - 0.75).abs() < 1e-15);
        assert!((rep.constants["ratio_min"] - 16.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn convolution_examples() {
        let d = convolve(&GroupFunction::delta(w("a")), &GroupFunction::delta(w("b")), 10).unwrap();
        assert_eq!(d, GroupFunction::delta(w("ab")));
        let s1 = GroupFunction::indicator(ReducedWord::all_of_length(2, 1));
        let sq = convolve(&s1, &s1, 100).unwrap();
        let mut expect = GroupFunction::indicator(ReducedWord::all_of_length(2, 2));
        expect.add(ReducedWord::identity(), rat(4, 1));
        assert_eq!(sq, expect);
        assert_eq!(sq.norm_squared() / (s1.norm_squared() * s1.norm_squared()), rat(28, 16));
        assert!(convolve(&s1, &s1, 15).is_err());
        let e = GroupFunction::delta(ReducedWord::identity());
        assert_eq!(convolve(&e, &sq, 100).unwrap(), sq);
    }

    #[test]
    fn fiber_census() {
        for r1 in 0..=4 {
            for r2 in 0..=4 {
                for row in fiber_sizes(2, r1, r2) {
                    assert_eq!((row.min as u128, row.max as u128), (row.expected, row.expected), "{row:?}");
                    assert!(row.expected <= row.bound);
                    if row.p == 0 {
                        assert_eq!(row.max, 1);
                    }
                }
            }
        }
        let rows = fiber_sizes(3, 2, 3);
        assert!(rows.iter().all(|r| r.min as u128 == r.expected));
    }

    #[test]
    fn convolution_check_is_bounded() {
        let rep = rd_convolution_check(2, 2, 2, &[0, 2, 4], 4, 7, 10_000).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.verdicts);
        let again = rd_convolution_check(2, 2, 2, &[0, 2, 4], 4, 7, 10_000).unwrap();
        assert_eq!(rep.to_csv(3), again.to_csv(3));
        let single = convolve(&GroupFunction::delta(w("ab")), &GroupFunction::delta(w("ba")), 1).unwrap();
        assert!(single.norm_squared().is_one());
    }
}
