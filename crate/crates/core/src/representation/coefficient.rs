//! The boundary representation `[π(g)v](ξ) = (dg_*μ/dμ(ξ))^{1/2} v(g⁻¹ξ)` on
//! step functions, and its matrix coefficients.
//!
//! Everything is computed by walking cylinders `C_u` from the root. `C_u` is
//! split while `u` is a prefix of `g`; otherwise `(g, ξ)` is constant on it
//! and `g⁻¹C_u = C_y` with `y = g⁻¹u`, so it is a cell as soon as `v` is
//! constant on `C_y` (and `w` on `C_u` for inner products).

use std::sync::RwLock;

use crate::group::metric::{check_projection, hat_projection};
use crate::group::word::{left_divide_into, Letter, ReducedWord};
use crate::measures::{CellMeasure, WordMeasure};
use crate::representation::fast::IntStep;
use crate::representation::step::StepFunction;
use crate::scalar::{Quad, Scalar};

/// Visits the cells of `π(g)v` (refined so that `w` is constant on each, if
/// given): `f(u, j, v(g⁻¹u), w(u))` with `j = |common prefix of u and g|`.
pub(crate) fn walk_cells<S: Scalar>(
    g: &[Letter],
    v: &StepFunction<S>,
    w: Option<&StepFunction<S>>,
    mut f: impl FnMut(&[Letter], usize, &S, Option<&S>),
) {
    let rank = v.rank();
    let n = g.len();
    let mut y = Vec::new();
    let mut stack: Vec<(Vec<Letter>, usize)> = vec![(Vec::new(), 0)];
    while let Some((u, j)) = stack.pop() {
        let on_path = j == u.len();
        if !on_path {
            left_divide_into(g, &u, &mut y);
            let vv = v.value_on(&y);
            let wv = match w {
                Some(w) => w.value_on(&u).map(Some),
                None => Some(None),
            };
            if let (Some(vv), Some(wv)) = (vv, wv) {
                f(&u, j, vv, wv);
                continue;
            }
        }
        for s in Letter::successors(rank, u.last().copied()) {
            let mut child = u.clone();
            child.push(s);
            let cj = if on_path && u.len() < n && g[u.len()] == s { j + 1 } else { j };
            stack.push((child, cj));
        }
    }
}

/// `⟨v, w⟩ = Σ v·w·μ` over the common refinement.
pub fn inner_product<S: Scalar, M: CellMeasure<S> + ?Sized>(v: &StepFunction<S>, w: &StepFunction<S>, mu: &M) -> S {
    let mut total = S::zero();
    let mut stack = vec![Vec::<Letter>::new()];
    while let Some(u) = stack.pop() {
        match (v.value_on(&u), w.value_on(&u)) {
            (Some(a), Some(b)) => {
                if !a.is_zero() && !b.is_zero() {
                    total = total + a.clone() * b.conj() * mu.mass(&u);
                }
            }
            _ => {
                for s in Letter::successors(v.rank(), u.last().copied()) {
                    let mut c = u.clone();
                    c.push(s);
                    stack.push(c);
                }
            }
        }
    }
    total
}

pub fn norm_squared<S: Scalar, M: CellMeasure<S> + ?Sized>(v: &StepFunction<S>, mu: &M) -> S {
    inner_product(v, v, mu)
}

/// `π(g)v` as a step function.
pub fn apply_pi<S: Scalar, M: CellMeasure<S> + ?Sized>(g: &ReducedWord, v: &StepFunction<S>, mu: &M) -> StepFunction<S> {
    let mut cells = Vec::new();
    walk_cells(g, v, None, |u, j, vv, _| {
        cells.push((ReducedWord::from_reduced_unchecked(u.to_vec()), mu.sqrt_rn(g, j) * vv.clone()));
    });
    StepFunction::from_cells(v.rank(), cells).expect("cells of π(g)v partition the boundary")
}

/// `⟨π(g)v, w⟩`
pub fn matrix_coefficient<S: Scalar, M: CellMeasure<S> + ?Sized>(
    g: &ReducedWord,
    v: &StepFunction<S>,
    w: &StepFunction<S>,
    mu: &M,
) -> S {
    let mut total = S::zero();
    walk_cells(g, v, Some(w), |u, j, vv, wv| {
        let wv = wv.unwrap();
        if !vv.is_zero() && !wv.is_zero() {
            total = total.clone() + mu.sqrt_rn(g, j) * vv.clone() * wv.conj() * mu.mass(u);
        }
    });
    total
}

/// `Ξ(g) = ⟨π(g)1, 1⟩`
pub fn harish_chandra<S: Scalar, M: CellMeasure<S> + ?Sized>(g: &ReducedWord, mu: &M) -> S {
    let one = StepFunction::one(mu.rank());
    matrix_coefficient(g, &one, &one, mu)
}

/// `⟨π̃(g)v, w⟩ = ⟨π(g)v, w⟩ / Ξ(g)`
pub fn normalized_coefficient<S: Scalar, M: CellMeasure<S> + ?Sized>(
    g: &ReducedWord,
    v: &StepFunction<S>,
    w: &StepFunction<S>,
    mu: &M,
) -> S {
    matrix_coefficient(g, v, w, mu) / harish_chandra(g, mu)
}

/// `|⟨π̃(g)v, w⟩ - v(ǧ) w(ĝ)|`
pub fn lipschitz_gap<S: Scalar, M: CellMeasure<S> + ?Sized>(
    g: &ReducedWord,
    v: &StepFunction<S>,
    w: &StepFunction<S>,
    mu: &M,
) -> f64 {
    let limit = v.value_at(&check_projection(g)).clone() * w.value_at(&hat_projection(g)).conj();
    (normalized_coefficient(g, v, w, mu) - limit).abs_f64()
}

/// `Ξ` of the word measure by word length, filled on demand.
#[derive(Debug)]
pub struct XiTable {
    measure: WordMeasure,
    table: RwLock<Vec<Option<Quad>>>,
}

impl XiTable {
    pub fn new(rank: usize) -> XiTable {
        XiTable { measure: WordMeasure::new(rank), table: RwLock::new(Vec::new()) }
    }

    pub fn from_values(rank: usize, values: Vec<Quad>) -> XiTable {
        XiTable { measure: WordMeasure::new(rank), table: RwLock::new(values.into_iter().map(Some).collect()) }
    }

    pub fn get(&self, n: usize) -> Quad {
        if let Some(Some(x)) = self.table.read().unwrap().get(n) {
            return x.clone();
        }
        let g = ReducedWord::from_reduced_unchecked(vec![Letter::new(0, false); n]);
        let one = IntStep::one(self.measure.rank);
        let x = crate::representation::fast::word_coefficient(&self.measure, &g, &one, &one);
        let mut t = self.table.write().unwrap();
        if t.len() <= n {
            t.resize(n + 1, None);
        }
        t[n] = Some(x.clone());
        x
    }

    /// Filled entries, in order of length.
    pub fn values(&self) -> Vec<Option<Quad>> {
        self.table.read().unwrap().clone()
    }
}
