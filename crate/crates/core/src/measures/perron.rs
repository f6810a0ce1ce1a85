//! Critical exponents from the transfer matrix of the reduced-word subshift.
//!
//! `M(s)[a][b] = e^{-s ℓ_b}` when `b ≠ a⁻¹`. Its Perron eigenvalue is
//! strictly decreasing in `s`; the critical exponent `α` is where it equals 1.

use num_integer::Integer;
use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::group::metric::MetricSpec;

/// Tolerance on `α` for the bisection.
pub const ALPHA_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct PerronData {
    pub alpha: f64,
    /// `M(α)`, indexed by letter code.
    pub matrix: Vec<Vec<f64>>,
    /// Perron eigenvalue of `M(α)`.
    pub eigenvalue: f64,
    /// Right eigenvector normalised by `Σ_t e^{-αℓ_t} u_t = 1`.
    pub eigenvector: Vec<f64>,
    /// `P(s,t) = e^{-αℓ_t} u_t / u_s` on allowed transitions.
    pub transitions: Vec<Vec<f64>>,
    /// First-letter masses `e^{-αℓ_t} u_t`.
    pub initial: Vec<f64>,
    pub bisection_steps: usize,
}

impl PerronData {
    pub fn omega(&self) -> f64 {
        self.alpha.exp()
    }
}

pub fn transfer_matrix(lengths: &[f64], s: f64) -> Vec<Vec<f64>> {
    let n = lengths.len();
    (0..n)
        .map(|a| (0..n).map(|b| if b == a ^ 1 { 0.0 } else { (-s * lengths[b]).exp() }).collect())
        .collect()
}

/// Collatz–Wielandt bounds `(min, max)` of `(Mu)_i / u_i` and the refined
/// vector after power iteration.
pub fn perron_eigen(m: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
    let n = m.len();
    let mut u = vec![1.0; n];
    let mut bounds = (0.0, f64::INFINITY);
    for _ in 0..10_000 {
        let mu: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * u[j]).sum()).collect();
        let ratios = mu.iter().zip(&u).map(|(a, b)| a / b);
        let lo = ratios.clone().fold(f64::INFINITY, f64::min);
        let hi = ratios.fold(0.0, f64::max);
        bounds = (lo, hi);
        let norm = mu.iter().cloned().fold(0.0, f64::max);
        u = mu.into_iter().map(|x| x / norm).collect();
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    (bounds.0, bounds.1, u)
}

/// The critical exponent and Perron data of a metric. The word metric uses
/// the closed form `α = log(2k-1)`.
pub fn critical_exponent(m: &MetricSpec) -> Result<PerronData> {
    let k = m.rank();
    let lengths = m.letter_lengths_f64();
    let n = lengths.len();
    let omega = (2 * k - 1) as f64;
    let (alpha, steps) = if let MetricSpec::Word { .. } = m {
        (omega.ln(), 0)
    } else {
        let min_len = m.min_letter_length();
        let (mut lo, mut hi) = (0.0f64, omega.ln() / min_len);
        let mut steps = 0;
        while hi - lo > ALPHA_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let (cw_lo, cw_hi, _) = perron_eigen(&transfer_matrix(&lengths, mid));
            if cw_lo > 1.0 {
                lo = mid;
            } else if cw_hi < 1.0 {
                hi = mid;
            } else if 0.5 * (cw_lo + cw_hi) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
            if steps > 200 {
                return Err(Error::NotConverged(format!("critical exponent bisection on [{lo}, {hi}]")));
            }
        }
        (0.5 * (lo + hi), steps)
    };
    let matrix = transfer_matrix(&lengths, alpha);
    let (cw_lo, cw_hi, mut u) = if steps == 0 { (1.0, 1.0, vec![1.0; n]) } else { perron_eigen(&matrix) };
    let weight: Vec<f64> = lengths.iter().map(|l| (-alpha * l).exp()).collect();
    let z: f64 = weight.iter().zip(&u).map(|(w, u)| w * u).sum();
    u.iter_mut().for_each(|x| *x /= z);
    let initial: Vec<f64> = weight.iter().zip(&u).map(|(w, u)| w * u).collect();
    let transitions = (0..n)
        .map(|s| (0..n).map(|t| if t == s ^ 1 { 0.0 } else { initial[t] / u[s] }).collect())
        .collect();
    Ok(PerronData {
        alpha,
        matrix,
        eigenvalue: 0.5 * (cw_lo + cw_hi),
        eigenvector: u,
        transitions,
        initial,
        bisection_steps: steps,
    })
}

/// `e^{-α}` as the radius of convergence of the Poincaré series
/// `Σ_g x^{ℓ(g)}`, read off the coefficient ratios of its truncations.
/// Needs rational letter lengths.
pub fn poincare_radius(m: &MetricSpec, max_terms: usize) -> Result<f64> {
    let lengths: Vec<Rational64> = match m {
        MetricSpec::Word { rank } => vec![Rational64::from_integer(1); *rank],
        MetricSpec::Weighted { lengths, .. } => lengths.clone(),
        MetricSpec::Green { .. } => return Err(Error::Unsupported("Poincaré scan for a Green metric".into())),
    };
    let d = lengths.iter().fold(1i64, |acc, l| acc.lcm(l.denom()));
    let steps: Vec<usize> = lengths.iter().map(|l| (l * d).to_integer() as usize).collect();
    let g = steps.iter().fold(0usize, |acc, &s| acc.gcd(&s));
    let steps: Vec<usize> = steps.iter().map(|s| s / g).collect();
    let letters = 2 * steps.len();
    let top = *steps.iter().max().unwrap();
    // history[L][s]: words of length L ending in letter s, rescaled
    let mut history: Vec<Vec<f64>> = vec![vec![0.0; letters]; top + 1];
    let mut totals: Vec<f64> = Vec::new();
    let mut prev_est = f64::NAN;
    for len in 1..=max_terms {
        let mut row = vec![0.0; letters];
        for (s, slot) in row.iter_mut().enumerate() {
            let step = steps[s / 2];
            if step == len {
                *slot += 1.0;
            } else if step < len {
                let src = &history[top + 1 - step];
                *slot += (0..letters).filter(|&t| t != s ^ 1).map(|t| src[t]).sum::<f64>();
            }
        }
        history.remove(0);
        history.push(row);
        let total: f64 = history[top].iter().sum();
        totals.push(total);
        if total > 1e100 {
            history.iter_mut().flatten().for_each(|x| *x /= total);
            totals.iter_mut().for_each(|x| *x /= total);
        }
        let n = totals.len();
        if n > 2 * top && totals[n - 1] > 0.0 {
            let est = (totals[n - 2] / totals[n - 1]).powf(d as f64 / g as f64);
            if (est - prev_est).abs() < 1e-15 {
                return Ok(est);
            }
            prev_est = est;
        }
    }
    Err(Error::NotConverged(format!("Poincaré coefficient ratios after {max_terms} terms")))
}
