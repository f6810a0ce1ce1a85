//! Streaming enumeration of annuli `A_{R,h} = {g : |g| ∈ [R-h, R+h]}`.
//!
//! The walk is depth-first over the Cayley tree with children in canonical
//! letter order; a branch is cut as soon as its prefix is longer than `R+h`.
//! The yielded order is lexicographic, which fixes every order-dependent
//! construction downstream.

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::group::metric::{Length, MetricSpec};
use crate::group::word::{Letter, ReducedWord};

#[derive(Clone, Debug)]
pub struct Annulus<'m> {
    metric: &'m MetricSpec,
    lo: Length,
    hi: Length,
}

impl<'m> Annulus<'m> {
    pub fn new(metric: &'m MetricSpec, radius: Length, half_width: Length) -> Annulus<'m> {
        Annulus { metric, lo: radius - half_width, hi: radius + half_width }
    }

    /// The word-metric sphere `S_n`.
    pub fn sphere(metric: &'m MetricSpec, n: usize) -> Annulus<'m> {
        Annulus::new(metric, Length::integer(n as i64), Length::zero())
    }

    pub fn metric(&self) -> &MetricSpec {
        self.metric
    }

    pub fn contains_length(&self, l: Length) -> bool {
        self.lo.le(l) && l.le(self.hi)
    }

    /// Calls `f(word, length)` for every element in canonical order.
    pub fn for_each(&self, mut f: impl FnMut(&[Letter], Length)) {
        let mut stack = Vec::new();
        self.visit(&mut stack, Length::zero(), &mut f);
    }

    /// Like [`for_each`](Self::for_each) restricted to the elements having
    /// `prefix` as a prefix (the prefix itself included).
    pub fn for_each_in_branch(&self, prefix: &ReducedWord, mut f: impl FnMut(&[Letter], Length)) {
        let len = self.metric.length_of(prefix);
        if !len.le(self.hi) {
            return;
        }
        let mut stack = prefix.letters().to_vec();
        self.visit(&mut stack, len, &mut f);
    }

    fn visit(&self, stack: &mut Vec<Letter>, len: Length, f: &mut impl FnMut(&[Letter], Length)) {
        if self.lo.le(len) {
            f(stack, len);
        }
        let rank = self.metric.rank();
        for s in Letter::successors(rank, stack.last().copied()) {
            let next = len + self.metric.letter_length(s);
            if next.le(self.hi) {
                stack.push(s);
                self.visit(stack, next, f);
                stack.pop();
            }
        }
    }

    /// Disjoint sub-streams covering the annulus: every element of word
    /// length below `depth` as a singleton branch, then one branch per prefix
    /// of word length `depth`. Consuming them in order reproduces the
    /// canonical stream when `depth <= 1`.
    pub fn branches(&self, depth: usize) -> Vec<Branch> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.collect_branches(&mut stack, Length::zero(), depth, &mut out);
        out
    }

    fn collect_branches(&self, stack: &mut Vec<Letter>, len: Length, depth: usize, out: &mut Vec<Branch>) {
        if stack.len() == depth {
            out.push(Branch::Subtree(ReducedWord::from_reduced_unchecked(stack.clone())));
            return;
        }
        if self.lo.le(len) {
            out.push(Branch::Single(ReducedWord::from_reduced_unchecked(stack.clone())));
        }
        for s in Letter::successors(self.metric.rank(), stack.last().copied()) {
            let next = len + self.metric.letter_length(s);
            if next.le(self.hi) {
                stack.push(s);
                self.collect_branches(stack, next, depth, out);
                stack.pop();
            }
        }
    }

    pub fn for_each_in(&self, branch: &Branch, mut f: impl FnMut(&[Letter], Length)) {
        match branch {
            Branch::Single(g) => f(g, self.metric.length_of(g)),
            Branch::Subtree(p) => self.for_each_in_branch(p, f),
        }
    }

    pub fn iter(&self) -> AnnulusIter<'m> {
        AnnulusIter { annulus: self.clone(), stack: Vec::new(), lens: vec![Length::zero()], started: false }
    }

    /// Exact number of elements. Exact metrics use a dynamic program over
    /// integer-scaled lengths; Green metrics enumerate, giving up once the
    /// count passes `cap`.
    pub fn size(&self, cap: u128) -> Result<u128> {
        match self.metric {
            MetricSpec::Green { .. } => {
                let mut n: u128 = 0;
                let mut over = false;
                // Enumeration cannot stop early through for_each; use the iterator.
                for _ in self.iter() {
                    n += 1;
                    if n > cap {
                        over = true;
                        break;
                    }
                }
                if over {
                    Err(Error::BudgetExceeded { requested: n, budget: cap })
                } else {
                    Ok(n)
                }
            }
            _ => Ok(self.exact_size()),
        }
    }

    fn exact_size(&self) -> u128 {
        let rank = self.metric.rank();
        let exact = |l: Length| match l {
            Length::Exact(r) => r,
            Length::Real(_) => unreachable!("exact metric with a real bound"),
        };
        let lengths: Vec<_> = Letter::alphabet(rank).map(|s| exact(self.metric.letter_length(s))).collect();
        let (lo, hi) = (exact(self.lo), exact(self.hi));
        let den = lengths.iter().chain([&lo, &hi]).fold(1i64, |d, r| d.lcm(r.denom()));
        let units: Vec<usize> = lengths.iter().map(|r| (r * den).to_integer() as usize).collect();
        let hi_u = (hi * den).floor().to_integer();
        if hi_u < 0 {
            return 0;
        }
        let hi_u = hi_u as usize;
        let lo_u = (lo * den).ceil().to_integer().max(0) as usize;
        let mut total: u128 = if lo_u == 0 { 1 } else { 0 };
        // ending[l][s]: reduced words of scaled length l ending in letter s
        let mut ending = vec![vec![0u128; 2 * rank]; hi_u + 1];
        for s in 0..2 * rank {
            if units[s] <= hi_u {
                ending[units[s]][s] += 1;
            }
        }
        for l in 1..=hi_u {
            for s in 0..2 * rank {
                let c = ending[l][s];
                if c == 0 {
                    continue;
                }
                if l >= lo_u {
                    total += c;
                }
                for t in 0..2 * rank {
                    if t == (s ^ 1) {
                        continue;
                    }
                    let nl = l + units[t];
                    if nl <= hi_u {
                        ending[nl][t] += c;
                    }
                }
            }
        }
        total
    }
}

/// One independent piece of an annulus stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Branch {
    Single(ReducedWord),
    Subtree(ReducedWord),
}

/// Iterator form of the canonical depth-first stream.
pub struct AnnulusIter<'m> {
    annulus: Annulus<'m>,
    stack: Vec<Letter>,
    lens: Vec<Length>,
    started: bool,
}

impl AnnulusIter<'_> {
    /// Advances to the next node of the pruned tree in preorder.
    fn advance(&mut self) -> bool {
        let metric = self.annulus.metric;
        let rank = metric.rank();
        // descend to the first child
        let len = *self.lens.last().unwrap();
        if let Some(s) = Letter::successors(rank, self.stack.last().copied())
            .find(|&s| (len + metric.letter_length(s)).le(self.annulus.hi))
        {
            self.stack.push(s);
            self.lens.push(len + metric.letter_length(s));
            return true;
        }
        // otherwise move to the next sibling, backtracking as needed
        while let Some(cur) = self.stack.pop() {
            self.lens.pop();
            let parent_len = *self.lens.last().unwrap();
            let prev = self.stack.last().copied();
            let next = Letter::successors(rank, prev)
                .filter(|&s| s > cur)
                .find(|&s| (parent_len + metric.letter_length(s)).le(self.annulus.hi));
            if let Some(s) = next {
                self.stack.push(s);
                self.lens.push(parent_len + metric.letter_length(s));
                return true;
            }
        }
        false
    }
}

impl Iterator for AnnulusIter<'_> {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if !self.started {
            self.started = true;
            if !self.annulus.hi.lt(Length::zero()) && self.annulus.lo.le(Length::zero()) {
                return Some(ReducedWord::identity());
            }
            if self.annulus.hi.lt(Length::zero()) {
                return None;
            }
        }
        while self.advance() {
            if self.annulus.lo.le(*self.lens.last().unwrap()) {
                return Some(ReducedWord::from_reduced_unchecked(self.stack.clone()));
            }
        }
        None
    }
}

/// The stream of elements with length in `[R-h, R+h]`.
pub fn enumerate_annulus(radius: Length, half_width: Length, metric: &MetricSpec) -> AnnulusIter<'_> {
    Annulus::new(metric, radius, half_width).iter()
}

/// `|S_n| = 2k (2k-1)^{n-1}` for the word metric.
pub fn sphere_size(rank: usize, n: usize) -> u128 {
    if n == 0 {
        1
    } else {
        2 * rank as u128 * (2 * rank as u128 - 1).pow(n as u32 - 1)
    }
}

/// `log |A_{R,h}| / R`, which tends to the growth exponent.
pub fn growth_estimate(metric: &MetricSpec, radius: Length, half_width: Length, cap: u128) -> Result<f64> {
    let n = Annulus::new(metric, radius, half_width).size(cap)?;
    Ok((n.to_f64().unwrap_or(f64::INFINITY)).ln() / radius.to_f64())
}
