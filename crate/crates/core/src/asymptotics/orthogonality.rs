//! The orthogonality functional
//! `Φ_R = ∫ f₁(g) f₂(g⁻¹) ⟨π̃(g)v₁,w₁⟩ conj⟨π̃(g)v₂,w₂⟩ dμ_R(g)`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::asymptotics::equidist::{hat_prefix, WeightScheme};
use crate::asymptotics::report::{fit_error_decay, SweepReport, Value};
use crate::asymptotics::weights::{Weight, WeightFamily};
use crate::error::Result;
use crate::group::context::GroupContext;
use crate::group::word::{Letter, ReducedWord};
use crate::measures::{ps_measure, BoundaryMeasure, CellMeasure, WordMeasure};
use crate::representation::coefficient::{harish_chandra, inner_product, matrix_coefficient, norm_squared, XiTable};
use crate::representation::fast::{omega_powers, scale_exponent, scaled_coefficient, IntStep};
use crate::representation::step::StepFunction;
use crate::scalar::{Quad, Scalar};

/// `f = f_∂ ∘ p + f_int` on `Γ ∪ ∂Γ`, with `f_int` finitely supported.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub boundary: StepFunction<Quad>,
    pub interior: BTreeMap<ReducedWord, Quad>,
}

impl TestFunction {
    pub fn one(rank: usize) -> TestFunction {
        TestFunction::from_boundary(StepFunction::one(rank))
    }

    pub fn from_boundary(boundary: StepFunction<Quad>) -> TestFunction {
        TestFunction { boundary, interior: BTreeMap::new() }
    }

    pub fn with_interior(mut self, g: ReducedWord, value: Quad) -> TestFunction {
        self.interior.insert(g, value);
        self
    }

    /// `f(g) = f_∂(ĝ) + f_int(g)`
    pub fn eval(&self, g: &[Letter]) -> Quad {
        let b = self.boundary.value_on(&hat_prefix(g, self.boundary.depth())).unwrap().clone();
        match self.interior.get(g) {
            Some(x) => b + x.clone(),
            None => b,
        }
    }

    fn is_rational(&self) -> bool {
        self.boundary.is_rational() && self.interior.values().all(Quad::is_rational)
    }
}

/// Integer form of a rational test function: `f = F / denom`.
struct IntTest {
    boundary: IntStep,
    interior: HashMap<Vec<Letter>, i128>,
    denom: BigInt,
}

impl IntTest {
    fn new(f: &TestFunction) -> Option<IntTest> {
        if !f.is_rational() {
            return None;
        }
        let denom = f
            .boundary
            .cells()
            .iter()
            .map(|(_, v)| v)
            .chain(f.interior.values())
            .fold(BigInt::one(), |d, v| d.lcm(v.rational_part().denom()));
        let scale = Quad::rational(BigRational::from_integer(denom.clone()));
        let boundary = IntStep::new(&f.boundary.map(|v| v.clone() * scale.clone()))?;
        let mut interior = HashMap::new();
        for (g, v) in &f.interior {
            let x = (v.rational_part() * BigRational::from_integer(denom.clone())).to_integer().to_i128()?;
            interior.insert(g.letters().to_vec(), x);
        }
        Some(IntTest { boundary, interior, denom })
    }

    fn at(&self, g: &[Letter]) -> i128 {
        let last = g.last().copied().unwrap_or(Letter::new(0, false));
        let b = self.boundary.lookup(g.iter().copied().chain(std::iter::repeat(last))).unwrap();
        b + self.interior.get(g).copied().unwrap_or(0)
    }
}

/// Arguments of `Φ_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiInputs {
    pub f1: TestFunction,
    pub f2: TestFunction,
    pub v1: StepFunction<Quad>,
    pub v2: StepFunction<Quad>,
    pub w1: StepFunction<Quad>,
    pub w2: StepFunction<Quad>,
}

impl PhiInputs {
    /// `f₁ = f₂ = 1`.
    pub fn vectors(v1: StepFunction<Quad>, v2: StepFunction<Quad>, w1: StepFunction<Quad>, w2: StepFunction<Quad>) -> PhiInputs {
        let rank = v1.rank();
        PhiInputs { f1: TestFunction::one(rank), f2: TestFunction::one(rank), v1, v2, w1, w2 }
    }

    /// The limit `⟨f₂v₁, v₂⟩ · conj⟨w₁, f₁w₂⟩`.
    pub fn target(&self, mu: &BoundaryMeasure) -> Value {
        let f1 = &self.f1.boundary;
        let f2 = &self.f2.boundary;
        match mu {
            BoundaryMeasure::Word(m) => Value::Exact(
                inner_product(&f2.mul(&self.v1), &self.v2, m) * inner_product(&self.w1, &f1.mul(&self.w2), m).conj(),
            ),
            BoundaryMeasure::Markov(m) => {
                let f = |s: &StepFunction<Quad>| s.to_f64();
                Value::Float(
                    inner_product(&f(f2).mul(&f(&self.v1)), &f(&self.v2), m)
                        * inner_product(&f(&self.w1), &f(f1).mul(&f(&self.w2)), m),
                )
            }
        }
    }

    /// `‖v₁‖‖v₂‖‖w₁‖‖w₂‖`
    pub fn norm_product(&self, mu: &BoundaryMeasure) -> f64 {
        let n = |v: &StepFunction<Quad>| match mu {
            BoundaryMeasure::Word(m) => norm_squared(v, m).to_f64().sqrt(),
            BoundaryMeasure::Markov(m) => norm_squared(&v.to_f64(), m).sqrt(),
        };
        n(&self.v1) * n(&self.v2) * n(&self.w1) * n(&self.w2)
    }
}

/// `Φ_R` for one set of inputs.
pub fn phi_r(inputs: &PhiInputs, w: &WeightFamily, mu: &BoundaryMeasure) -> Value {
    phi_r_batch(std::slice::from_ref(inputs), w, mu).pop().unwrap()
}

/// `Φ_R` for several input sets, sharing the matrix coefficients.
pub fn phi_r_batch(inputs: &[PhiInputs], w: &WeightFamily, mu: &BoundaryMeasure) -> Vec<Value> {
    match mu {
        BoundaryMeasure::Word(m) if w.is_exact() => match phi_exact_fast(inputs, w, m) {
            Some(v) => v.into_iter().map(Value::Exact).collect(),
            None => phi_generic(inputs, w, m, |q| q.clone(), |wt| Quad::rational(w.weight_exact(wt).unwrap()))
                .into_iter()
                .map(Value::Exact)
                .collect(),
        },
        BoundaryMeasure::Word(m) => phi_generic(inputs, w, m, |q| q.to_f64(), |wt| w.weight_f64(wt))
            .into_iter()
            .map(Value::Float)
            .collect(),
        BoundaryMeasure::Markov(m) => phi_generic(inputs, w, m, |q| q.to_f64(), |wt| w.weight_f64(wt))
            .into_iter()
            .map(Value::Float)
            .collect(),
    }
}

fn phi_generic<S: Scalar, M: CellMeasure<S>>(
    inputs: &[PhiInputs],
    w: &WeightFamily,
    mu: &M,
    conv: impl Fn(&Quad) -> S + Sync + Send,
    weight: impl Fn(Weight) -> S + Sync + Send,
) -> Vec<S> {
    let vecs: Vec<[StepFunction<S>; 4]> =
        inputs.iter().map(|p| [&p.v1, &p.w1, &p.v2, &p.w2].map(|v| v.map(|x| conv(x)))).collect();
    let parts = w.par_fold(
        || vec![S::zero(); inputs.len()],
        |acc, g, wt| {
            let gw = ReducedWord::from_reduced_unchecked(g.to_vec());
            let ginv = gw.invert();
            let xi = harish_chandra(&gw, mu);
            let wt = weight(wt);
            for (i, p) in inputs.iter().enumerate() {
                let [v1, w1, v2, w2] = &vecs[i];
                let c1 = matrix_coefficient(&gw, v1, w1, mu) / xi.clone();
                let c2 = matrix_coefficient(&gw, v2, w2, mu) / xi.clone();
                let f = conv(&p.f1.eval(g)) * conv(&p.f2.eval(&ginv));
                acc[i] = acc[i].clone() + wt.clone() * f * c1 * c2.conj();
            }
        },
    );
    let mut out = vec![S::zero(); inputs.len()];
    for p in parts {
        for (o, x) in out.iter_mut().zip(p) {
            *o = o.clone() + x;
        }
    }
    out
}

/// Exact integer accumulator that spills into a big integer.
#[derive(Clone, Debug, Default)]
struct Acc {
    small: i128,
    big: BigInt,
}

impl Acc {
    fn add_product(&mut self, factors: &[i128]) {
        let p = factors.iter().try_fold(1i128, |a, &b| a.checked_mul(b));
        match p {
            Some(p) => match self.small.checked_add(p) {
                Some(s) => self.small = s,
                None => {
                    self.big += BigInt::from(self.small);
                    self.small = p;
                }
            },
            None => self.big += factors.iter().map(|&x| BigInt::from(x)).product::<BigInt>(),
        }
    }

    fn total(&self) -> BigInt {
        &self.big + BigInt::from(self.small)
    }

    fn merge(&mut self, other: &Acc) {
        self.big += other.total();
    }
}

type LengthAcc = BTreeMap<usize, Vec<[Acc; 2]>>;

fn position_or_push<T: PartialEq>(v: &mut Vec<T>, x: T) -> usize {
    match v.iter().position(|y| *y == x) {
        Some(i) => i,
        None => {
            v.push(x);
            v.len() - 1
        }
    }
}

fn phi_exact_fast(inputs: &[PhiInputs], w: &WeightFamily, mu: &WordMeasure) -> Option<Vec<Quad>> {
    let omega = mu.omega as i128;
    let mut pairs: Vec<(&StepFunction<Quad>, &StepFunction<Quad>)> = Vec::new();
    let mut tests: Vec<&TestFunction> = Vec::new();
    let mut slots = Vec::new();
    for p in inputs {
        let a = position_or_push(&mut pairs, (&p.v1, &p.w1));
        let b = position_or_push(&mut pairs, (&p.v2, &p.w2));
        let f1 = position_or_push(&mut tests, &p.f1);
        let f2 = position_or_push(&mut tests, &p.f2);
        slots.push((a, b, f1, f2));
    }
    let int_pairs: Vec<(IntStep, IntStep)> =
        pairs.iter().map(|(v, u)| Some((IntStep::new(v)?, IntStep::new(u)?))).collect::<Option<_>>()?;
    let int_tests: Vec<IntTest> = tests.iter().map(|f| IntTest::new(f)).collect::<Option<_>>()?;
    let depth = int_pairs.iter().map(|(v, u)| v.depth().max(u.depth())).max().unwrap_or(0);
    let pow = omega_powers(mu.omega, 160);
    let overflow = std::sync::atomic::AtomicBool::new(false);

    let parts = w.par_fold(LengthAcc::new, |acc, g, wt| {
        let n = g.len();
        let k = scale_exponent(n, depth);
        let mut coeffs = Vec::with_capacity(int_pairs.len());
        for (v, u) in &int_pairs {
            match scaled_coefficient(g, v, u, k, &pow) {
                Some(c) => coeffs.push(c),
                None => {
                    overflow.store(true, std::sync::atomic::Ordering::Relaxed);
                    return;
                }
            }
        }
        let ginv: Vec<Letter> = g.iter().rev().map(|s| s.inverse()).collect();
        let fg: Vec<i128> = int_tests.iter().map(|t| t.at(g)).collect();
        let fi: Vec<i128> = int_tests.iter().map(|t| t.at(&ginv)).collect();
        let wt = wt.count() as i128;
        let row = acc.entry(n).or_insert_with(|| vec![Default::default(); slots.len()]);
        for (i, &(a, b, f1, f2)) in slots.iter().enumerate() {
            let (a1, b1) = coeffs[a];
            let (a2, b2) = coeffs[b];
            let base = [wt, fg[f1], fi[f2]];
            let [p, q] = &mut row[i];
            p.add_product(&[base[0], base[1], base[2], a1, a2]);
            p.add_product(&[base[0], base[1], base[2], b1, b2, omega]);
            q.add_product(&[base[0], base[1], base[2], a1, b2]);
            q.add_product(&[base[0], base[1], base[2], b1, a2]);
        }
    });
    if overflow.into_inner() {
        return None;
    }
    let mut totals = LengthAcc::new();
    for part in parts {
        for (n, row) in part {
            let t = totals.entry(n).or_insert_with(|| vec![Default::default(); slots.len()]);
            for (x, y) in t.iter_mut().zip(&row) {
                x[0].merge(&y[0]);
                x[1].merge(&y[1]);
            }
        }
    }

    let xi = XiTable::new(mu.rank);
    let sqrt_omega = Quad::half_power(mu.omega, 1);
    let wden = BigInt::from(w.denominator().unwrap());
    let mut out = vec![Quad::zero(); slots.len()];
    for (n, row) in totals {
        let k = scale_exponent(n, depth) as usize;
        let omega_k = num_traits::pow(BigInt::from(mu.omega), k);
        let pair_den = |(v, u): &(IntStep, IntStep)| {
            BigInt::from(mu.omega + 1) * BigInt::from(v.denom()) * BigInt::from(u.denom()) * &omega_k
        };
        let x = xi.get(n);
        let xi2 = x.clone() * x;
        for (i, &(a, b, f1, f2)) in slots.iter().enumerate() {
            let den = &wden
                * &int_tests[f1].denom
                * &int_tests[f2].denom
                * pair_den(&int_pairs[a])
                * pair_den(&int_pairs[b]);
            let p = BigRational::new(row[i][0].total(), den.clone());
            let q = BigRational::new(row[i][1].total(), den);
            let num = Quad::rational(p) + Quad::rational(q) * sqrt_omega.clone();
            out[i] = out[i].clone() + num / xi2.clone();
        }
    }
    Some(out)
}

/// Thresholds for the verdicts of [`orthogonality_sweep`].
#[derive(Clone, Copy, Debug)]
pub struct OrthTargets {
    /// Bound on `|Φ_R − target| / max(|target|, floor)` at the last radius.
    pub rel_tol: f64,
    pub floor: f64,
}

/// `Φ_R` over a grid of radii, with the error sequence, a fitted decay
/// rate and the measured quadrilinear constant.
pub fn orthogonality_sweep(
    inputs: &PhiInputs,
    grid: &[usize],
    scheme: WeightScheme,
    ctx: &GroupContext,
    budget: u128,
    targets: Option<OrthTargets>,
) -> Result<SweepReport> {
    let mu = ps_measure(ctx);
    let target = inputs.target(&mu);
    let norms = inputs.norm_product(&mu);
    let mut report = SweepReport::new("orthogonality", "R");
    let mut used = 0u128;
    let mut quad_const: f64 = 0.0;
    for &r in grid {
        used += scheme.annulus_size(r, ctx, budget.saturating_sub(used))?;
        if used > budget {
            report.partial = true;
            break;
        }
        let w = scheme.weights(r, ctx)?;
        let value = phi_r(inputs, &w, &mu);
        if norms > 0.0 {
            quad_const = quad_const.max(value.to_f64().abs() / norms);
        }
        report.push(r as f64, value, Some(target.clone()));
    }
    report.constant("quadrilinear_constant", quad_const);
    report.constant("target", target.to_f64());
    report.fit = fit_error_decay(&report);
    if let Some(f) = &report.fit {
        report.constant("decay_rate_over_half_eps", -f.slope / (ctx.epsilon / 2.0));
    }
    if let (Some(t), Some(last)) = (targets, report.rows.last()) {
        let err = last.abs_error.as_ref().unwrap().to_f64();
        let scaled = err / target.to_f64().abs().max(t.floor);
        let detail = format!("|Phi - target| / max(|target|, {}) = {scaled:.4e} at R={}", t.floor, last.param);
        report.verdict("tolerance", scaled <= t.rel_tol, detail);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::equidist::{pair_table, RectangleFunction};
    use crate::asymptotics::weights::{build_partition_weights, sphere_weights};
    use crate::group::metric::{Length, MetricSpec};
    use crate::scalar::rat;
    use num_rational::Rational64;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }
    fn ind(s: &str) -> StepFunction<Quad> {
        StepFunction::indicator(2, w(s))
    }
    fn one() -> StepFunction<Quad> {
        StepFunction::one(2)
    }
    fn q(n: i64, d: i64) -> Quad {
        Quad::rational(rat(n, d))
    }
    fn word_mu() -> BoundaryMeasure {
        ps_measure(&GroupContext::word(2).unwrap())
    }
    fn exact(v: &Value) -> Quad {
        v.as_exact().unwrap().clone()
    }

    #[test]
    fn all_ones_is_one() {
        let p = PhiInputs::vectors(one(), one(), one(), one());
        for n in 0..=6 {
            let s = sphere_weights(2, n).unwrap();
            assert_eq!(exact(&phi_r(&p, &s, &word_mu())), Quad::one());
        }
        let part = build_partition_weights(Length::integer(5), &GroupContext::word(2).unwrap()).unwrap();
        assert_eq!(exact(&phi_r(&p, &part, &word_mu())), Quad::one());
    }

    #[test]
    fn fast_path_matches_generic() {
        let vs = [one(), ind("a"), StepFunction::from_terms(2, q(1, 3), vec![(w("Ba"), q(2, 1))]).unwrap()];
        let f = TestFunction::from_boundary(StepFunction::from_terms(2, q(1, 2), vec![(w("b"), q(1, 1))]).unwrap())
            .with_interior(w("ab"), q(-3, 1));
        let mut inputs = Vec::new();
        for (i, v) in vs.iter().enumerate() {
            let u = &vs[(i + 1) % 3];
            let mut p = PhiInputs::vectors(v.clone(), u.clone(), u.clone(), v.clone());
            p.f1 = f.clone();
            inputs.push(p);
        }
        let mu = word_mu();
        let m = mu.as_word().unwrap();
        for n in [1, 2, 4] {
            let s = sphere_weights(2, n).unwrap();
            let fast = phi_exact_fast(&inputs, &s, m).unwrap();
            let slow = phi_generic(&inputs, &s, m, |x| x.clone(), |wt| Quad::rational(s.weight_exact(wt).unwrap()));
            assert_eq!(fast, slow, "n = {n}");
        }
    }

    #[test]
    fn sphere_example_exact_values() {
        let mu = word_mu();
        let p = PhiInputs::vectors(ind("a"), ind("a"), one(), one());
        assert_eq!(p.target(&mu), Value::Exact(q(1, 4)));
        let s1 = sphere_weights(2, 1).unwrap();
        // Φ_1 = (1/4) Σ_{|g|=1} ⟨π(g)1_a, 1⟩² / Ξ(1)²
        let mut expect = Quad::zero();
        let m = mu.as_word().unwrap();
        for g in ReducedWord::all_of_length(2, 1) {
            let c = matrix_coefficient(&g, &ind("a"), &one(), m) / harish_chandra::<Quad, _>(&g, m);
            expect = expect + c.clone() * c * q(1, 4);
        }
        assert_eq!(exact(&phi_r(&p, &s1, &mu)), expect);
    }

    #[test]
    fn conjugate_symmetry() {
        let mu = word_mu();
        let s = sphere_weights(2, 4).unwrap();
        let a = PhiInputs::vectors(ind("a"), ind("Ab"), one(), ind("b"));
        let b = PhiInputs::vectors(ind("Ab"), ind("a"), ind("b"), one());
        assert_eq!(phi_r(&a, &s, &mu), phi_r(&b, &s, &mu));
    }

    #[test]
    fn equidistribution_consistency() {
        // v = w = 1 and f's pulled back through p reproduce the equidistribution sum
        let mu = word_mu();
        let ctx = GroupContext::word(2).unwrap();
        for weights in [sphere_weights(2, 5).unwrap(), build_partition_weights(Length::integer(6), &ctx).unwrap()] {
            for (u, v) in [("a", "b"), ("ab", "A"), ("B", "Ba")] {
                let mut p = PhiInputs::vectors(one(), one(), one(), one());
                p.f1 = TestFunction::from_boundary(ind(u));
                p.f2 = TestFunction::from_boundary(ind(v));
                let rect = RectangleFunction::indicator(w(u), w(v));
                assert_eq!(phi_r(&p, &weights, &mu), pair_table(&weights, 2).integral(&rect));
            }
        }
    }

    #[test]
    fn orthogonal_vectors_decay() {
        let mu = word_mu();
        let p = PhiInputs::vectors(ind("a"), ind("b"), one(), one());
        assert_eq!(p.target(&mu), Value::Exact(Quad::zero()));
        let mut last = f64::INFINITY;
        for n in 2..=7 {
            let v = phi_r(&p, &sphere_weights(2, n).unwrap(), &mu).to_f64().abs();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn quadrilinear_bound_and_sweep() {
        let ctx = GroupContext::word(2).unwrap();
        let p = PhiInputs::vectors(ind("a"), ind("a"), one(), one());
        let t = OrthTargets { rel_tol: 0.05, floor: 1.0 / 16.0 };
        let rep = orthogonality_sweep(&p, &[2, 3, 4, 5, 6], WeightScheme::Sphere, &ctx, 10_000, Some(t)).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert!(rep.constants["quadrilinear_constant"] < 10.0);
        assert!(rep.fit.is_some());
        let errs: Vec<f64> = rep.rows.iter().map(|r| r.abs_error.as_ref().unwrap().to_f64()).collect();
        assert!(errs.windows(2).all(|e| e[1] < e[0]));
    }

    #[test]
    fn boundary_test_function_target() {
        let mu = word_mu();
        let mut p = PhiInputs::vectors(one(), one(), one(), one());
        p.f1 = TestFunction::from_boundary(ind("b"));
        assert_eq!(p.target(&mu), Value::Exact(q(1, 4)));
        let s = sphere_weights(2, 6).unwrap();
        let v = phi_r(&p, &s, &mu).to_f64();
        assert!((v - 0.25).abs() < 0.2);
    }

    #[test]
    fn ergodic_specialization() {
        let mu = word_mu();
        let f = TestFunction::from_boundary(ind("a"));
        let v = ind("aB");
        let u = StepFunction::from_terms(2, q(1, 2), vec![(w("b"), q(1, 1))]).unwrap();
        let mut p = PhiInputs::vectors(v.clone(), one(), u.clone(), one());
        p.f2 = f.clone();
        let m = mu.as_word().unwrap();
        let expect = inner_product(&f.boundary.mul(&v), &one(), m) * inner_product(&u, &one(), m);
        assert_eq!(p.target(&mu), Value::Exact(expect));
    }

    #[test]
    fn markov_path_runs() {
        let metric = MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap();
        let ctx = GroupContext::new(metric, 1.0, None, None).unwrap();
        let mu = ps_measure(&ctx);
        let w = build_partition_weights(Length::integer(4), &ctx).unwrap();
        let p = PhiInputs::vectors(one(), one(), one(), one());
        let v = phi_r(&p, &w, &mu);
        assert!(!v.is_exact());
        assert!((v.to_f64() - 1.0).abs() < 1e-9);
    }
}
