//! Finitely-valued boundary functions, constant on the cells of a cylinder
//! partition.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::One;

use crate::boundary::BoundaryPoint;
use crate::error::{Error, Result};
use crate::group::word::{Letter, ReducedWord};
use crate::measures::WordMeasure;
use crate::scalar::{Quad, Scalar};

/// A function on `∂Γ` given by one value per cell of a finite partition into
/// cylinders. Kept in coarsest form: no complete family of sibling cells
/// shares a value.
#[derive(Clone, Debug)]
pub struct StepFunction<S> {
    rank: usize,
    cells: Vec<(ReducedWord, S)>,
    index: HashMap<ReducedWord, usize>,
    depth: usize,
}

impl<S: Scalar> PartialEq for StepFunction<S> {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.cells == other.cells
    }
}

impl<S: Scalar> StepFunction<S> {
    pub fn constant(rank: usize, c: S) -> StepFunction<S> {
        StepFunction::build(rank, vec![(ReducedWord::identity(), c)])
    }

    pub fn one(rank: usize) -> StepFunction<S> {
        StepFunction::constant(rank, S::one())
    }

    /// `1_{C_stem}`
    pub fn indicator(rank: usize, stem: ReducedWord) -> StepFunction<S> {
        StepFunction::from_terms(rank, S::zero(), vec![(stem, S::one())]).expect("a single term is valid")
    }

    /// `constant + Σ value · 1_{C_stem}`.
    pub fn from_terms(rank: usize, constant: S, terms: Vec<(ReducedWord, S)>) -> Result<StepFunction<S>> {
        for (stem, _) in &terms {
            if stem.min_rank() > rank {
                return Err(Error::Parse(format!("stem {stem} uses a generator beyond rank {rank}")));
            }
        }
        let mut cells = Vec::new();
        let mut stack = vec![ReducedWord::identity()];
        while let Some(u) = stack.pop() {
            let split = terms.iter().any(|(s, _)| s.len() > u.len() && s.starts_with(&u));
            if split {
                for c in Letter::successors(rank, u.last()).collect::<Vec<_>>().into_iter().rev() {
                    stack.push(u.extended(c).unwrap());
                }
            } else {
                let mut value = constant.clone();
                for (s, x) in &terms {
                    if u.starts_with(s) {
                        value = value + x.clone();
                    }
                }
                cells.push((u, value));
            }
        }
        Ok(StepFunction::build(rank, cells))
    }

    /// From an explicit partition, which must cover `∂Γ` exactly once.
    pub fn from_cells(rank: usize, cells: Vec<(ReducedWord, S)>) -> Result<StepFunction<S>> {
        let uniform = WordMeasure::new(rank);
        let mut total = BigRational::from_integer(0.into());
        let mut stems: Vec<&ReducedWord> = cells.iter().map(|(s, _)| s).collect();
        stems.sort();
        for pair in stems.windows(2) {
            if pair[1].starts_with(pair[0]) {
                return Err(Error::Parse(format!("cells {} and {} overlap", pair[0], pair[1])));
            }
        }
        for s in &stems {
            total += uniform.mass_exact(s.len());
        }
        if !total.is_one() {
            return Err(Error::Parse("cells do not cover the boundary".into()));
        }
        Ok(StepFunction::build(rank, cells))
    }

    fn build(rank: usize, cells: Vec<(ReducedWord, S)>) -> StepFunction<S> {
        let mut map: BTreeMap<ReducedWord, S> = cells.into_iter().collect();
        // merge sibling families with a common value, deepest first
        loop {
            let mut merged = None;
            for (stem, value) in map.iter().rev() {
                let Some(_) = stem.last() else { continue };
                let parent = stem.prefix(stem.len() - 1);
                let all_equal = Letter::successors(rank, parent.last())
                    .all(|c| map.get(&parent.extended(c).unwrap()).is_some_and(|v| v == value));
                if all_equal {
                    merged = Some((parent, value.clone()));
                    break;
                }
            }
            match merged {
                None => break,
                Some((parent, value)) => {
                    for c in Letter::successors(rank, parent.last()) {
                        map.remove(&parent.extended(c).unwrap());
                    }
                    map.insert(parent, value);
                }
            }
        }
        let cells: Vec<(ReducedWord, S)> = map.into_iter().collect();
        let index = cells.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
        let depth = cells.iter().map(|(s, _)| s.len()).max().unwrap_or(0);
        StepFunction { rank, cells, index, depth }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cells(&self) -> &[(ReducedWord, S)] {
        &self.cells
    }

    /// Longest stem.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The value on `C_stem` if the function is constant there.
    #[inline]
    pub fn value_on(&self, stem: &[Letter]) -> Option<&S> {
        (0..=stem.len().min(self.depth)).find_map(|i| self.index.get(&stem[..i]).map(|&k| &self.cells[k].1))
    }

    pub fn value_at(&self, xi: &BoundaryPoint) -> &S {
        self.value_on(&xi.prefix(self.depth)).expect("cells cover the boundary")
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> StepFunction<T> {
        StepFunction::build(self.rank, self.cells.iter().map(|(s, v)| (s.clone(), f(v))).collect())
    }

    /// Pointwise product.
    pub fn mul(&self, other: &StepFunction<S>) -> StepFunction<S> {
        let mut cells = Vec::new();
        let mut stack = vec![ReducedWord::identity()];
        while let Some(u) = stack.pop() {
            match (self.value_on(&u), other.value_on(&u)) {
                (Some(a), Some(b)) => cells.push((u, a.clone() * b.clone())),
                _ => {
                    for c in Letter::successors(self.rank, u.last()) {
                        stack.push(u.extended(c).unwrap());
                    }
                }
            }
        }
        StepFunction::build(self.rank, cells)
    }

}

impl StepFunction<Quad> {
    pub fn to_f64(&self) -> StepFunction<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn is_rational(&self) -> bool {
        self.cells.iter().all(|(_, v)| v.is_rational())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    #[test]
    fn indicator_partition() {
        let f = StepFunction::<Quad>::indicator(2, w("ab"));
        let stems: Vec<String> = f.cells().iter().map(|(s, _)| s.to_string()).collect();
        assert_eq!(stems, ["aa", "ab", "aB", "A", "b", "B"]);
        assert_eq!(f.depth(), 2);
        assert_eq!(f.value_on(&w("abA")).unwrap(), &Quad::one());
        assert_eq!(f.value_on(&w("b")).unwrap(), &Quad::zero());
        assert!(f.value_on(&w("a")).is_none());
    }

    #[test]
    fn merging_to_coarsest_form() {
        let q = |n, d| Quad::rational(rat(n, d));
        let terms = ["a", "A", "b", "B"].iter().map(|s| (w(s), q(1, 1))).collect();
        let f = StepFunction::from_terms(2, q(0, 1), terms).unwrap();
        assert_eq!(f, StepFunction::constant(2, q(1, 1)));
        let f = StepFunction::from_terms(2, q(1, 2), vec![(w("a"), q(1, 1)), (w("ab"), q(-1, 1))]).unwrap();
        assert_eq!(f.value_on(&w("ab")).unwrap(), &q(1, 2));
        assert_eq!(f.value_on(&w("aa")).unwrap(), &q(3, 2));
    }

    #[test]
    fn explicit_cells_are_validated() {
        let one = Quad::one();
        assert!(StepFunction::from_cells(2, vec![(w("a"), one.clone()), (w("A"), one.clone())]).is_err());
        assert!(StepFunction::from_cells(2, vec![(w("a"), one.clone()), (w("ab"), one.clone())]).is_err());
        let cells = ["a", "A", "b", "B"].iter().map(|s| (w(s), one.clone())).collect();
        assert!(StepFunction::from_cells(2, cells).is_ok());
    }

    #[test]
    fn product() {
        let a = StepFunction::<Quad>::indicator(2, w("a"));
        let ab = StepFunction::<Quad>::indicator(2, w("ab"));
        assert_eq!(a.mul(&ab), ab);
        let b = StepFunction::<Quad>::indicator(2, w("b"));
        assert_eq!(a.mul(&b), StepFunction::constant(2, Quad::zero()));
    }
}
