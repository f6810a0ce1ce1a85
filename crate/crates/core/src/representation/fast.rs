//! Integer evaluation of word-metric matrix coefficients.
//!
//! With rational vectors `v = V/d_v`, `w = W/d_w`, a cell `C_u` at common
//! prefix `j` contributes `V W ω^{E/2} / ((ω+1) d_v d_w)` where
//! `E = 2j - |g| + 2 - 2|u|`. Multiplying by `ω^K` makes every exponent
//! nonnegative, so `⟨π(g)v, w⟩ = (a + b√ω) / ((ω+1) d_v d_w ω^K)` with
//! integers `a, b`. All cells of one `g` share the parity of `E`, so one of
//! `a, b` vanishes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::group::word::{Letter, ReducedWord};
use crate::measures::WordMeasure;
use crate::representation::coefficient::matrix_coefficient;
use crate::representation::step::StepFunction;
use crate::scalar::Quad;

const NONE: u32 = u32::MAX;

/// A rational step function as a trie with integer leaf values over a
/// common denominator.
#[derive(Clone, Debug)]
pub struct IntStep {
    rank: usize,
    /// `2k` child slots per node.
    children: Vec<u32>,
    values: Vec<Option<i128>>,
    denom: i128,
    depth: usize,
    source: StepFunction<Quad>,
}

impl IntStep {
    pub fn one(rank: usize) -> IntStep {
        IntStep::new(&StepFunction::one(rank)).unwrap()
    }

    /// `None` if a value is irrational or the scaled values overflow.
    pub fn new(f: &StepFunction<Quad>) -> Option<IntStep> {
        if !f.is_rational() {
            return None;
        }
        let rank = f.rank();
        let mut denom = BigInt::one();
        for (_, v) in f.cells() {
            denom = denom.lcm(v.rational_part().denom());
        }
        let mut out = IntStep {
            rank,
            children: vec![NONE; 2 * rank],
            values: vec![None],
            denom: denom.to_i128()?,
            depth: f.depth(),
            source: f.clone(),
        };
        for (stem, v) in f.cells() {
            let scaled = v.rational_part() * BigRational::from_integer(denom.clone());
            let value = scaled.to_integer().to_i128()?;
            let mut node = 0usize;
            for s in stem.iter() {
                let slot = node * 2 * rank + s.code();
                if out.children[slot] == NONE {
                    out.children[slot] = out.values.len() as u32;
                    out.values.push(None);
                    out.children.extend(std::iter::repeat_n(NONE, 2 * rank));
                }
                node = out.children[slot] as usize;
            }
            out.values[node] = Some(value);
        }
        Some(out)
    }

    pub fn denom(&self) -> i128 {
        self.denom
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn source(&self) -> &StepFunction<Quad> {
        &self.source
    }

    /// Scaled value on the cylinder spelled by `letters`, if constant there.
    #[inline]
    pub fn lookup(&self, letters: impl Iterator<Item = Letter>) -> Option<i128> {
        let mut node = 0usize;
        if let Some(v) = self.values[0] {
            return Some(v);
        }
        for s in letters {
            let next = self.children[node * 2 * self.rank + s.code()];
            if next == NONE {
                return None;
            }
            node = next as usize;
            if let Some(v) = self.values[node] {
                return Some(v);
            }
        }
        None
    }
}

/// Scaling exponent `K` for a sphere of radius `n` and vectors up to `depth`.
pub fn scale_exponent(n: usize, depth: usize) -> u32 {
    (n + 2 * depth + 2) as u32
}

/// Powers `ω^0, …, ω^max`, while they fit.
pub fn omega_powers(omega: u64, max: usize) -> Vec<i128> {
    let mut out = vec![1i128];
    for _ in 0..max {
        match out.last().unwrap().checked_mul(omega as i128) {
            Some(x) => out.push(x),
            None => break,
        }
    }
    out
}

/// `(a, b)` with `⟨π(g)v, w⟩ = (a + b√ω) / ((ω+1) d_v d_w ω^k)`, or `None`
/// on overflow. Requires `k >= scale_exponent(|g|, max depth)`.
pub fn scaled_coefficient(g: &[Letter], v: &IntStep, w: &IntStep, k: u32, pow: &[i128]) -> Option<(i128, i128)> {
    #[allow(clippy::too_many_arguments)]
    fn visit(
        g: &[Letter],
        v: &IntStep,
        w: &IntStep,
        rank: usize,
        n: i64,
        k: i64,
        pow: &[i128],
        u: &mut Vec<Letter>,
        j: usize,
        acc: &mut (i128, i128),
        overflow: &mut bool,
    ) {
        if *overflow {
            return;
        }
        let on_path = j == u.len();
        if !on_path {
            let y = g[j..].iter().rev().map(|s| s.inverse()).chain(u[j..].iter().copied());
            if let Some(vv) = v.lookup(y) {
                if let Some(wv) = w.lookup(u.iter().copied()) {
                    if vv != 0 && wv != 0 {
                        let e = 2 * j as i64 - n + 2 - 2 * u.len() as i64 + 2 * k;
                        debug_assert!(e >= 0);
                        let (slot, half) = if e % 2 == 0 { (&mut acc.0, e / 2) } else { (&mut acc.1, (e - 1) / 2) };
                        let term = pow
                            .get(half as usize)
                            .and_then(|p| vv.checked_mul(wv)?.checked_mul(*p))
                            .and_then(|t| slot.checked_add(t));
                        match term {
                            Some(x) => *slot = x,
                            None => *overflow = true,
                        }
                    }
                    return;
                }
            }
        }
        let last = u.last().copied();
        for s in Letter::successors(rank, last) {
            let cj = if on_path && u.len() < g.len() && g[u.len()] == s { j + 1 } else { j };
            u.push(s);
            visit(g, v, w, rank, n, k, pow, u, cj, acc, overflow);
            u.pop();
        }
    }
    let mut u = Vec::with_capacity(g.len() + v.depth + w.depth + 2);
    let mut acc = (0i128, 0i128);
    let mut overflow = false;
    visit(g, v, w, v.rank, g.len() as i64, k as i64, pow, &mut u, 0, &mut acc, &mut overflow);
    (!overflow).then_some(acc)
}

/// `⟨π(g)v, w⟩` for the word measure, exactly.
pub fn word_coefficient(mu: &WordMeasure, g: &ReducedWord, v: &IntStep, w: &IntStep) -> Quad {
    let k = scale_exponent(g.len(), v.depth.max(w.depth));
    let pow = omega_powers(mu.omega, 2 * k as usize + 2);
    match scaled_coefficient(g, v, w, k, &pow) {
        Some((a, b)) => unscale(mu.omega, a, b, v.denom * w.denom, k),
        None => matrix_coefficient(g, &v.source, &w.source, mu),
    }
}

/// `(a + b√ω) / ((ω+1) d ω^k)` as an exact value.
pub fn unscale(omega: u64, a: i128, b: i128, d: i128, k: u32) -> Quad {
    let den = BigInt::from(omega + 1) * BigInt::from(d) * num_traits::pow(BigInt::from(omega), k as usize);
    let p = BigRational::new(BigInt::from(a), den.clone());
    let q = BigRational::new(BigInt::from(b), den);
    if q.is_zero() {
        Quad::rational(p)
    } else if crate::scalar::is_square(omega) {
        let s = (omega as f64).sqrt().round() as i64;
        Quad::rational(p + q * BigRational::from_integer(BigInt::from(s)))
    } else {
        Quad::new(p, q, omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Scalar};
    use proptest::prelude::*;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn arb_word(max: usize) -> impl Strategy<Value = ReducedWord> {
        proptest::collection::vec(0usize..4, 0..=max)
            .prop_map(|codes| ReducedWord::reduce(codes.into_iter().map(Letter::from_code)))
    }

    fn arb_step() -> impl Strategy<Value = StepFunction<Quad>> {
        (proptest::collection::vec((arb_word(3), -5i64..6, 1i64..4), 0..4), -3i64..4).prop_map(|(terms, c)| {
            let terms = terms.into_iter().map(|(s, n, d)| (s, Quad::rational(rat(n, d)))).collect();
            StepFunction::from_terms(2, Quad::rational(rat(c, 2)), terms).unwrap()
        })
    }

    #[test]
    fn trie_lookup() {
        let f = StepFunction::from_terms(2, Quad::rational(rat(1, 2)), vec![(w("ab"), Quad::rational(rat(1, 3)))]).unwrap();
        let t = IntStep::new(&f).unwrap();
        assert_eq!(t.denom(), 6);
        assert_eq!(t.lookup(w("abA").iter().copied()), Some(5));
        assert_eq!(t.lookup(w("B").iter().copied()), Some(3));
        assert_eq!(t.lookup(w("a").iter().copied()), None);
        assert!(IntStep::new(&StepFunction::constant(2, Quad::sqrt(3))).is_none());
    }

    #[test]
    fn spec_values() {
        let mu = WordMeasure::new(2);
        let b = IntStep::new(&StepFunction::indicator(2, w("b"))).unwrap();
        let one = IntStep::one(2);
        assert_eq!(word_coefficient(&mu, &w("a"), &b, &b), Quad::zero());
        assert_eq!(word_coefficient(&mu, &w("a"), &b, &one), Quad::sqrt(3) * Quad::rational(rat(1, 12)));
        assert_eq!(word_coefficient(&mu, &w("ab"), &one, &one), Quad::rational(rat(2, 3)));
    }

    #[test]
    fn rank_five_has_square_omega() {
        let mu = WordMeasure::new(5);
        let one = IntStep::one(5);
        let g = w("a");
        assert_eq!(word_coefficient(&mu, &g, &one, &one), matrix_coefficient(&g, &StepFunction::one(5), &StepFunction::one(5), &mu));
    }

    proptest! {
        #[test]
        fn fast_path_matches_generic(g in arb_word(7), v in arb_step(), u in arb_step()) {
            let mu = WordMeasure::new(2);
            let fast = word_coefficient(&mu, &g, &IntStep::new(&v).unwrap(), &IntStep::new(&u).unwrap());
            prop_assert_eq!(fast, matrix_coefficient(&g, &v, &u, &mu));
        }
    }
}
