//! Harmonic measure of a random walk against the Patterson–Sullivan measure
//! of its Green metric, and multiplicativity of first-passage probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::asymptotics::equidist::stems_up_to;
use crate::asymptotics::report::{SweepReport, Value};
use crate::error::Result;
use crate::group::context::GroupContext;
use crate::group::word::{Letter, ReducedWord};
use crate::measures::walk::{first_passage_mc, first_passage_product, harmonic_sample, solve_first_passage, FirstPassage};
use crate::measures::{green_metric_of_walk, ps_measure, WalkSpec};

/// `z` with `P(|N(0,1)| > z) = (1 - confidence) / tests`.
pub fn bonferroni_z(confidence: f64, tests: usize) -> f64 {
    let alpha = (1.0 - confidence) / tests.max(1) as f64;
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

#[derive(Clone, Debug)]
pub struct GreenReport {
    pub first_passage: FirstPassage,
    /// One row per nontrivial cylinder of depth `<= depth`, in canonical
    /// order: Monte Carlo harmonic mass against the PS mass.
    pub harmonic: SweepReport,
    /// One row per sampled `g`: Monte Carlo `F(e, g)` against `Π f_s`.
    pub ancona: SweepReport,
    pub cylinders: Vec<ReducedWord>,
    pub words: Vec<ReducedWord>,
}

/// `count` reduced words with lengths uniform in `1..=max_len`, seeded.
pub fn sample_words(rank: usize, count: usize, max_len: usize, seed: u64) -> Vec<ReducedWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_len);
            let mut letters: Vec<Letter> = Vec::with_capacity(n);
            for _ in 0..n {
                let choices: Vec<Letter> = Letter::successors(rank, letters.last().copied()).collect();
                letters.push(choices[rng.random_range(0..choices.len())]);
            }
            ReducedWord::from_reduced(letters).unwrap()
        })
        .collect()
}

fn z_rows(report: &mut SweepReport, rows: Vec<(f64, f64, f64, u64)>, confidence: f64) -> f64 {
    let z_crit = bonferroni_z(confidence, rows.len());
    let mut worst = 0f64;
    for (i, (est, model, z, _)) in rows.iter().enumerate() {
        worst = worst.max(z.abs());
        report.push(i as f64, Value::Float(*est), Some(Value::Float(*model)));
    }
    report.constant("max_abs_z", worst);
    report.constant("bonferroni_z", z_crit);
    report.constant("confidence", confidence);
    if let Some(t) = rows.first().map(|r| r.3) {
        report.constant("trials", t as f64);
    }
    z_crit
}

/// Runs both comparisons with `samples` trajectories each.
pub fn green_experiment(
    walk: &WalkSpec,
    depth: usize,
    words: usize,
    max_len: usize,
    samples: u64,
    seed: u64,
    confidence: f64,
) -> Result<GreenReport> {
    let fp = solve_first_passage(walk)?;
    let ctx = GroupContext::new(green_metric_of_walk(walk)?, 1.0, None, None)?;
    let mu = ps_measure(&ctx);
    let rank = walk.rank();

    let cylinders: Vec<ReducedWord> = stems_up_to(rank, depth).into_iter().filter(|s| !s.is_identity()).collect();
    let sample = harmonic_sample(walk, depth, samples, seed);
    let rows: Vec<(f64, f64, f64, u64)> = cylinders
        .iter()
        .map(|c| {
            let est = sample.estimate(c);
            let model = mu.mass_f64(c);
            (est.estimate(), model, est.z_score(model), est.trials)
        })
        .collect();
    let mut harmonic = SweepReport::new("harmonic_vs_ps", "cylinder");
    let z_crit = z_rows(&mut harmonic, rows.clone(), confidence);
    let worst = harmonic.constants["max_abs_z"];
    harmonic.constant("alpha", ctx.alpha());
    harmonic.constant("undecided", sample.undecided as f64);
    harmonic.verdict(
        "harmonic matches PS",
        worst <= z_crit,
        format!("max |z| = {worst:.3} over {} cylinders, Bonferroni threshold {z_crit:.3}", rows.len()),
    );

    let words_list = sample_words(rank, words, max_len, seed.wrapping_add(1));
    let mut arows = Vec::with_capacity(words_list.len());
    for (i, g) in words_list.iter().enumerate() {
        let est = first_passage_mc(walk, g, samples, seed.wrapping_add(2 + i as u64))?;
        let model = first_passage_product(&fp, g);
        arows.push((est.estimate(), model, est.z_score(model), est.trials));
    }
    let mut ancona = SweepReport::new("ancona_multiplicativity", "word");
    let z_crit = z_rows(&mut ancona, arows, confidence);
    let worst = ancona.constants["max_abs_z"];
    ancona.verdict(
        "F(e,g) multiplicative",
        worst <= z_crit,
        format!("max |z| = {worst:.3} over {} words, Bonferroni threshold {z_crit:.3}", words_list.len()),
    );
    if let Some(ex) = &fp.exact {
        for (code, f) in ex.iter().enumerate() {
            ancona.constant(&format!("f_{}", Letter::from_code(code)), crate::scalar::ratio_to_f64(f));
        }
    }
    ancona.verdict(
        "first passage solved",
        fp.delta > 0.0,
        match &fp.exact {
            Some(ex) => format!("exact rational fixed point {}", ex.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
            None => format!("floating fixed point {:?}", fp.f),
        },
    );
    Ok(GreenReport { first_passage: fp, harmonic, ancona, cylinders, words: words_list })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn bonferroni_thresholds() {
        assert!((bonferroni_z(0.95, 1) - 1.959964).abs() < 1e-5);
        assert!(bonferroni_z(0.95, 20) > 3.0);
    }

    #[test]
    fn sampled_words_are_reduced_and_seeded() {
        let a = sample_words(2, 20, 6, 3);
        assert_eq!(a, sample_words(2, 20, 6, 3));
        assert!(a.iter().all(|g| (1..=6).contains(&g.len())));
    }

    #[test]
    fn simple_walk_agrees() {
        let w = WalkSpec::simple(2).unwrap();
        let rep = green_experiment(&w, 2, 4, 3, 20_000, 5, 0.95).unwrap();
        assert_eq!(rep.first_passage.exact.as_ref().unwrap(), &vec![rat(1, 3); 4]);
        assert_eq!(rep.harmonic.rows.len(), 16);
        assert!(rep.harmonic.all_pass(), "{:?}", rep.harmonic.verdicts);
        assert!(rep.ancona.all_pass(), "{:?}", rep.ancona.verdicts);
    }
}
