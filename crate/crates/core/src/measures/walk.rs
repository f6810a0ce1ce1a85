//! Symmetric nearest-neighbour random walks: first-passage probabilities,
//! Green metrics, and seeded Monte Carlo estimates of harmonic measure.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::group::metric::MetricSpec;
use crate::group::word::{common_prefix_len, Letter, ReducedWord, MAX_RANK};
use crate::scalar::ratio_to_f64;

/// Number of independent RNG streams per Monte Carlo run.
pub const MC_SHARDS: u64 = 16;
/// Net escape (in steps) after which a trajectory is considered decided.
pub const MC_MARGIN: usize = 20;
/// Maximum number of steps per trajectory.
pub const MC_HORIZON: usize = 10_000;

/// Step distribution `p_s`, indexed by letter code, with `p_s = p_{s⁻¹} > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSpec {
    probs: Vec<BigRational>,
}

impl WalkSpec {
    /// One probability per generator; the inverse gets the same value.
    pub fn new(per_generator: Vec<BigRational>) -> Result<WalkSpec> {
        let probs = per_generator.iter().flat_map(|p| [p.clone(), p.clone()]).collect();
        WalkSpec::from_letter_probs(probs)
    }

    pub fn from_letter_probs(probs: Vec<BigRational>) -> Result<WalkSpec> {
        let rank = probs.len() / 2;
        if probs.len() % 2 != 0 || !(2..=MAX_RANK).contains(&rank) {
            return Err(Error::InvalidWalk(format!("{} letter probabilities do not describe a rank in 2..={MAX_RANK}", probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_positive()) {
            return Err(Error::InvalidWalk(format!("probability {p} is not positive")));
        }
        for g in 0..rank {
            if probs[2 * g] != probs[2 * g + 1] {
                return Err(Error::InvalidWalk(format!(
                    "walk is not symmetric: p({}) = {} but p({}) = {}",
                    Letter::new(g, false),
                    probs[2 * g],
                    Letter::new(g, true),
                    probs[2 * g + 1]
                )));
            }
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidWalk(format!("probabilities sum to {total}, not 1")));
        }
        Ok(WalkSpec { probs })
    }

    /// The simple random walk, `p_s = 1/2k`.
    pub fn simple(rank: usize) -> Result<WalkSpec> {
        WalkSpec::new(vec![BigRational::new(BigInt::one(), BigInt::from(2 * rank)); rank])
    }

    pub fn rank(&self) -> usize {
        self.probs.len() / 2
    }

    pub fn prob(&self, s: Letter) -> &BigRational {
        &self.probs[s.code()]
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        self.probs.iter().map(ratio_to_f64).collect()
    }
}

/// Solution of the first-passage system.
#[derive(Clone, Debug)]
pub struct FirstPassage {
    /// `f_s`, indexed by letter code.
    pub f: Vec<f64>,
    /// The exact solution, when it is rational and verified exactly.
    pub exact: Option<Vec<BigRational>>,
    pub iterations: usize,
    /// Measured transience gap `1 - max_s f_s`.
    pub delta: f64,
}

/// Minimal positive solution of `f_s = p_s + f_s Σ_{u≠s} p_u f_{u⁻¹}` by
/// monotone iteration from zero.
pub fn solve_first_passage(w: &WalkSpec) -> Result<FirstPassage> {
    let p = w.probs_f64();
    let n = p.len();
    let mut f = vec![0.0; n];
    let mut iterations = 0;
    let max_iter = 1_000_000;
    loop {
        let mut next = vec![0.0; n];
        for s in 0..n {
            let back: f64 = (0..n).filter(|&u| u != s).map(|u| p[u] * f[u ^ 1]).sum();
            next[s] = p[s] + f[s] * back;
        }
        iterations += 1;
        let change = next.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = next;
        if change <= 1e-16 {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged(format!("first-passage iteration after {iterations} steps")));
        }
    }
    if let Some(bad) = f.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::NotConverged(format!("first-passage probability {bad} outside (0, 1)")));
    }
    let exact = recognise_exact(w, &f);
    if let Some(ex) = &exact {
        f = ex.iter().map(ratio_to_f64).collect();
    }
    let delta = 1.0 - f.iter().cloned().fold(0.0, f64::max);
    Ok(FirstPassage { f, exact, iterations, delta })
}

fn recognise_exact(w: &WalkSpec, f: &[f64]) -> Option<Vec<BigRational>> {
    let guess: Vec<BigRational> = f
        .iter()
        .map(|&x| {
            let r = Ratio::<i32>::approximate_float(x)?;
            if (r.to_f64()? - x).abs() > 1e-12 {
                return None;
            }
            Some(BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
        })
        .collect::<Option<_>>()?;
    let n = guess.len();
    let ok = (0..n).all(|s| {
        let back: BigRational = (0..n).filter(|&u| u != s).map(|u| &w.probs[u] * &guess[u ^ 1]).sum();
        guess[s] == &w.probs[s] + &guess[s] * back
    });
    ok.then_some(guess)
}

/// The Green metric `ℓ_s = -log f_s`. On a tree `F(e, g)` is the product of
/// the `f` of its letters, so `d(1, g) = -log F(e, g)` exactly.
pub fn green_metric_of_walk(w: &WalkSpec) -> Result<MetricSpec> {
    let fp = solve_first_passage(w)?;
    let lengths = fp.f.iter().map(|f| -f.ln()).collect();
    Ok(MetricSpec::Green { walk: w.clone(), lengths })
}

/// A binomial Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub successes: u64,
    /// Decided trajectories.
    pub trials: u64,
    /// Trajectories still undecided at the horizon (excluded from `trials`).
    pub undecided: u64,
}

impl McEstimate {
    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.successes as f64 / self.trials as f64
    }

    /// Normal-approximation half-width at the given two-sided confidence.
    pub fn half_width(&self, confidence: f64) -> f64 {
        let p = self.estimate();
        two_sided_z(confidence) * (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Standardised deviation from a model probability, using the model
    /// variance `p(1-p)/n`.
    pub fn z_score(&self, model: f64) -> f64 {
        let sd = (model * (1.0 - model) / self.trials as f64).sqrt();
        if sd == 0.0 {
            return if self.estimate() == model { 0.0 } else { f64::INFINITY };
        }
        (self.estimate() - model) / sd
    }

    /// `true` if `model` lies inside the interval at the given confidence.
    pub fn agrees_with(&self, model: f64, confidence: f64) -> bool {
        self.z_score(model).abs() <= two_sided_z(confidence)
    }
}

/// The `z` with `P(|N(0,1)| <= z) = confidence`.
pub fn two_sided_z(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

struct Stepper {
    cdf: Vec<f64>,
}

impl Stepper {
    fn new(w: &WalkSpec) -> Stepper {
        let mut acc = 0.0;
        let cdf = w
            .probs_f64()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Stepper { cdf }
    }

    #[inline]
    fn step(&self, rng: &mut ChaCha8Rng, pos: &mut Vec<Letter>) {
        let x: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let code = self.cdf.iter().position(|&c| x < c).unwrap_or(self.cdf.len() - 1);
        let s = Letter::from_code(code);
        if pos.last() == Some(&s.inverse()) {
            pos.pop();
        } else {
            pos.push(s);
        }
    }
}

fn shard_sizes(samples: u64) -> Vec<(u64, u64)> {
    (0..MC_SHARDS)
        .map(|i| (i, samples / MC_SHARDS + u64::from(i < samples % MC_SHARDS)))
        .collect()
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Limiting prefixes of seeded walk trajectories.
#[derive(Clone, Debug, Default)]
pub struct HarmonicSample {
    pub depth: usize,
    /// Count per depth-`depth` prefix of the limit point.
    pub counts: BTreeMap<ReducedWord, u64>,
    pub decided: u64,
    pub undecided: u64,
}

impl HarmonicSample {
    /// Estimate of the harmonic mass of `C_stem` for `|stem| <= depth`.
    pub fn estimate(&self, stem: &[Letter]) -> McEstimate {
        assert!(stem.len() <= self.depth);
        let successes = self.counts.iter().filter(|(w, _)| w.starts_with(stem)).map(|(_, c)| c).sum();
        McEstimate { successes, trials: self.decided, undecided: self.undecided }
    }
}

/// Runs `samples` trajectories from `e` and records the first `depth` letters
/// of each limit point, decided once the walk is `MC_MARGIN` letters deeper.
pub fn harmonic_sample(w: &WalkSpec, depth: usize, samples: u64, seed: u64) -> HarmonicSample {
    let stepper = Stepper::new(w);
    let parts: Vec<HarmonicSample> = shard_sizes(samples)
        .into_par_iter()
        .map(|(shard, n)| {
            let mut rng = shard_rng(seed, shard);
            let mut out = HarmonicSample { depth, ..Default::default() };
            let mut pos = Vec::with_capacity(depth + MC_MARGIN + 1);
            for _ in 0..n {
                pos.clear();
                let mut steps = 0;
                while pos.len() < depth + MC_MARGIN && steps < MC_HORIZON {
                    stepper.step(&mut rng, &mut pos);
                    steps += 1;
                }
                if pos.len() >= depth + MC_MARGIN {
                    *out.counts.entry(ReducedWord::from_reduced_unchecked(pos[..depth].to_vec())).or_default() += 1;
                    out.decided += 1;
                } else {
                    out.undecided += 1;
                }
            }
            out
        })
        .collect();
    let mut total = HarmonicSample { depth, ..Default::default() };
    for p in parts {
        total.decided += p.decided;
        total.undecided += p.undecided;
        for (k, v) in p.counts {
            *total.counts.entry(k).or_default() += v;
        }
    }
    total
}

/// Monte Carlo estimate of the harmonic mass of a cylinder.
pub fn harmonic_mass_mc(w: &WalkSpec, stem: &ReducedWord, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::OutOfRange("sample count 0".into()));
    }
    if stem.is_identity() {
        return Ok(McEstimate { successes: samples, trials: samples, undecided: 0 });
    }
    Ok(harmonic_sample(w, stem.len(), samples, seed).estimate(stem))
}

/// Monte Carlo estimate of `F(e, g)`, the probability of ever visiting `g`.
/// A trajectory misses once it is `MC_MARGIN` steps off the geodesic to `g`.
pub fn first_passage_mc(w: &WalkSpec, g: &ReducedWord, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::OutOfRange("sample count 0".into()));
    }
    if g.is_identity() {
        return Ok(McEstimate { successes: samples, trials: samples, undecided: 0 });
    }
    let stepper = Stepper::new(w);
    let parts: Vec<McEstimate> = shard_sizes(samples)
        .into_par_iter()
        .map(|(shard, n)| {
            let mut rng = shard_rng(seed, shard);
            let mut est = McEstimate { successes: 0, trials: 0, undecided: 0 };
            let mut pos = Vec::new();
            for _ in 0..n {
                pos.clear();
                let mut outcome = None;
                for _ in 0..MC_HORIZON {
                    stepper.step(&mut rng, &mut pos);
                    if pos.as_slice() == g.letters() {
                        outcome = Some(true);
                        break;
                    }
                    if pos.len() - common_prefix_len(&pos, g) >= MC_MARGIN {
                        outcome = Some(false);
                        break;
                    }
                }
                match outcome {
                    Some(hit) => {
                        est.trials += 1;
                        est.successes += u64::from(hit);
                    }
                    None => est.undecided += 1,
                }
            }
            est
        })
        .collect();
    Ok(parts.into_iter().fold(McEstimate { successes: 0, trials: 0, undecided: 0 }, |a, b| McEstimate {
        successes: a.successes + b.successes,
        trials: a.trials + b.trials,
        undecided: a.undecided + b.undecided,
    }))
}

/// `Π f_s` over the letters of `g`.
pub fn first_passage_product(fp: &FirstPassage, g: &[Letter]) -> f64 {
    g.iter().map(|s| fp.f[s.code()]).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn asym() -> WalkSpec {
        WalkSpec::new(vec![rat(3, 8), rat(1, 8)]).unwrap()
    }

    #[test]
    fn simple_walk_first_passage_is_one_third() {
        let fp = solve_first_passage(&WalkSpec::simple(2).unwrap()).unwrap();
        assert_eq!(fp.exact.as_ref().unwrap(), &vec![rat(1, 3); 4]);
        assert_eq!(fp.f, vec![1.0 / 3.0; 4]);
        // minimal root of 3f² - 4f + 1 = 0
        assert!((3.0 * fp.f[0] * fp.f[0] - 4.0 * fp.f[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_three_simple_walk() {
        // 5f² - 6f + 1 = 0, minimal root 1/5
        let fp = solve_first_passage(&WalkSpec::simple(3).unwrap()).unwrap();
        assert_eq!(fp.exact.unwrap(), vec![rat(1, 5); 6]);
    }

    #[test]
    fn asymmetric_walk() {
        let fp = solve_first_passage(&asym()).unwrap();
        let (fa, fb) = (fp.f[0], fp.f[2]);
        assert!(fa > fb && fb > 0.0 && fa < 1.0, "{fa} {fb}");
        assert!(fp.delta > 0.0);
        let m = green_metric_of_walk(&asym()).unwrap();
        let l = m.letter_lengths_f64();
        assert!(l[0] < l[2]);
        assert_eq!(l[0], l[1]);
    }

    #[test]
    fn invalid_walks() {
        assert!(WalkSpec::new(vec![rat(1, 4), rat(1, 8)]).is_err());
        assert!(WalkSpec::from_letter_probs(vec![rat(1, 8), rat(3, 8), rat(1, 4), rat(1, 4)]).is_err());
        assert!(WalkSpec::new(vec![rat(1, 2), rat(0, 1)]).is_err());
    }

    #[test]
    fn harmonic_mc_simple_walk() {
        let w = WalkSpec::simple(2).unwrap();
        let est = harmonic_mass_mc(&w, &"a".parse().unwrap(), 20_000, 7).unwrap();
        assert!(est.agrees_with(0.25, 0.999), "{est:?}");
        assert_eq!(harmonic_mass_mc(&w, &ReducedWord::identity(), 10, 1).unwrap().estimate(), 1.0);
    }

    #[test]
    fn mc_is_deterministic() {
        let w = asym();
        let a = harmonic_sample(&w, 2, 5_000, 11);
        let b = harmonic_sample(&w, 2, 5_000, 11);
        assert_eq!(a.counts, b.counts);
        let g: ReducedWord = "ab".parse().unwrap();
        assert_eq!(first_passage_mc(&w, &g, 3_000, 5).unwrap(), first_passage_mc(&w, &g, 3_000, 5).unwrap());
    }

    #[test]
    fn first_passage_mc_matches_product() {
        let w = asym();
        let fp = solve_first_passage(&w).unwrap();
        let g: ReducedWord = "aB".parse().unwrap();
        let est = first_passage_mc(&w, &g, 20_000, 3).unwrap();
        assert!(est.agrees_with(first_passage_product(&fp, &g), 0.999), "{est:?}");
    }

    #[test]
    fn z_values() {
        assert!((two_sided_z(0.95) - 1.959964).abs() < 1e-5);
    }
}
