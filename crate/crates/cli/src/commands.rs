//! The experiments behind each subcommand.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

use freerep::asymptotics::equidist::EquidistTargets;
use freerep::asymptotics::report::Value;
use freerep::asymptotics::weights::minimal_covering_rho;
use freerep::asymptotics::{
    check_shadow_cover, equidistribution_sweep, fiber_sizes, green_experiment, gvb_growth, orthogonality_sweep,
    rd_convolution_check, rd_sweep, OrthTargets, SweepReport,
};
use freerep::group::annulus::Annulus;
use freerep::group::metric::{Length, MetricSpec};
use freerep::group::{sphere_size, GroupContext, Letter, ReducedWord};
use freerep::measures::{poincare_radius, ps_measure, solve_first_passage, BoundaryMeasure};
use freerep::representation::{harish_chandra, XiTable};
use freerep::scalar::{Quad, Scalar};
use freerep::{Error, Result};

use crate::cache::Cache;
use crate::config::ExperimentConfig;

/// What a subcommand produced, before it is written out.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(suffix, report)`; the empty suffix names the main report.
    pub reports: Vec<(String, SweepReport)>,
    /// Extra CSV tables, `(file stem suffix, contents)`.
    pub tables: Vec<(String, String)>,
    pub info: serde_json::Value,
    /// Lines for standard output.
    pub lines: Vec<String>,
}

impl Outcome {
    fn single(report: SweepReport) -> Outcome {
        Outcome { reports: vec![(String::new(), report)], info: json!({}), ..Default::default() }
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn metric_info(m: &MetricSpec) -> serde_json::Value {
    let lengths: Vec<String> = match m {
        MetricSpec::Word { rank } => vec!["1".into(); *rank],
        MetricSpec::Weighted { lengths, .. } => lengths.iter().map(|l| l.to_string()).collect(),
        MetricSpec::Green { lengths, .. } => lengths.iter().step_by(2).map(|l| format!("{l:?}")).collect(),
    };
    json!({ "kind": format!("{:?}", m.kind()).to_lowercase(), "generator_lengths": lengths })
}

/// Derived constants of the group context: `ω`, `D`, `α` and Perron data.
pub fn spec(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let p = &ctx.perron;
    let x = (-p.alpha).exp();
    let mut report = SweepReport::new("spec", "letter");
    report.constant("alpha", p.alpha);
    report.constant("omega", ctx.omega());
    report.constant("exp_minus_alpha", x);
    report.constant("dimension", ctx.dimension());
    report.constant("epsilon", ctx.epsilon);
    report.constant("perron_eigenvalue", p.eigenvalue);
    let mut lines = vec![
        format!("rank = {}", ctx.rank()),
        match ctx.exact_omega() {
            Some(w) => format!("omega = {w}"),
            None => format!("omega = {:.15}", ctx.omega()),
        },
        format!("alpha = {:.15}", p.alpha),
        format!("e^-alpha = {x:.15}"),
        format!("D = {:.15}", ctx.dimension()),
        format!("perron eigenvalue = {:.15}", p.eigenvalue),
    ];
    match poincare_radius(&ctx.metric, 200_000) {
        Ok(y) => {
            report.constant("poincare_radius", y);
            report.verdict(
                "Poincare cross-check",
                (y - x).abs() <= 1e-10,
                format!("series radius {y:.15} vs e^-alpha {x:.15}"),
            );
            lines.push(format!("poincare radius = {y:.15}"));
        }
        Err(Error::Unsupported(_)) => {
            let fp = solve_first_passage(&cfg.walk()?)?;
            let d = fp.f.iter().map(|f| -f.ln()).collect::<Vec<_>>();
            lines.push(format!("first passage f = {:?}", fp.f));
            report.verdict(
                "Green lengths",
                d.iter().zip(ctx.metric.letter_lengths_f64()).all(|(a, b)| (a - b).abs() < 1e-15),
                "letter lengths equal -log f".to_string(),
            );
        }
        Err(e) => return Err(e),
    }
    let lengths = ctx.metric.letter_lengths_f64();
    let letters: Vec<Letter> = Letter::alphabet(ctx.rank()).collect();
    let letter_table = csv_table(
        &["letter", "length", "initial", "eigenvector"],
        letters.iter().map(|s| {
            let i = s.code();
            vec![s.to_string(), format!("{:.17e}", lengths[i]), format!("{:.17e}", p.initial[i]), format!("{:.17e}", p.eigenvector[i])]
        }),
    );
    let transitions = csv_table(
        &["from", "to", "probability"],
        letters.iter().flat_map(|s| {
            letters.iter().map(move |t| vec![s.to_string(), t.to_string(), format!("{:.17e}", p.transitions[s.code()][t.code()])])
        }),
    );
    let info = json!({
        "rank": ctx.rank(),
        "metric": metric_info(&ctx.metric),
        "omega_exact": ctx.exact_omega(),
        "alpha": p.alpha,
        "exp_minus_alpha": x,
        "dimension": ctx.dimension(),
        "perron": { "eigenvalue": p.eigenvalue, "eigenvector": p.eigenvector, "initial": p.initial, "bisection_steps": p.bisection_steps },
    });
    Ok(Outcome {
        reports: vec![(String::new(), report)],
        tables: vec![("letters".into(), letter_table), ("markov".into(), transitions)],
        info,
        lines,
    })
}

fn encode_quad(q: &Quad) -> String {
    format!("{}\t{}\t{}", q.rational_part(), q.irrational_part(), q.radicand())
}

fn decode_quad(s: &str) -> Option<Quad> {
    let mut it = s.split('\t');
    let p: BigRational = it.next()?.parse().ok()?;
    let q: BigRational = it.next()?.parse().ok()?;
    let r: u64 = it.next()?.parse().ok()?;
    Some(Quad::new(p, q, r))
}

/// `ω^{-n/2} (1 + n(k-1)/k)`, the closed form of `Ξ` on `S_n`.
pub fn xi_closed_form(rank: usize, n: usize) -> Quad {
    let k = rank as i64;
    let omega = (2 * k - 1) as u64;
    let poly = BigRational::new(BigInt::from(k + n as i64 * (k - 1)), BigInt::from(k));
    Quad::half_power(omega, -(n as i64)) * Quad::rational(poly)
}

fn budget_check(sizes: impl IntoIterator<Item = u128>, budget: u128) -> usize {
    let mut used = 0u128;
    let mut keep = 0;
    for s in sizes {
        used = used.saturating_add(s);
        if used > budget {
            break;
        }
        keep += 1;
    }
    keep
}

/// Harish-Chandra function by sphere radius.
pub fn xi(cfg: &ExperimentConfig, cache: &mut Cache) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let mut report = SweepReport::new("harish_chandra", "n");
    let key = Cache::key("xi", &(cfg.rank, &cfg.metric, &cfg.epsilon, &cfg.grid));
    match ctx.exact_omega() {
        Some(_) => {
            let body = cache.get_or_compute(&key, || -> Result<String> {
                let table = XiTable::new(cfg.rank);
                Ok(cfg.grid.iter().map(|&n| format!("{n}\t{}\n", encode_quad(&table.get(n)))).collect())
            })?;
            for line in body.lines() {
                let (n, q) = line.split_once('\t').ok_or_else(|| Error::Parse("xi cache line".into()))?;
                let n: usize = n.parse().map_err(|_| Error::Parse("xi cache radius".into()))?;
                let q = decode_quad(q).ok_or_else(|| Error::Parse("xi cache value".into()))?;
                report.push(n as f64, Value::Exact(q), Some(Value::Exact(xi_closed_form(cfg.rank, n))));
            }
            let exact = report.rows.iter().all(|r| r.abs_error.as_ref().and_then(|e| e.as_exact().cloned()) == Some(Quad::zero()));
            report.verdict("closed form", exact, "Xi(n) = omega^(-n/2) (1 + n(k-1)/k) exactly");
        }
        None => {
            let BoundaryMeasure::Markov(mu) = ps_measure(&ctx) else { unreachable!("inexact metrics have Markov measures") };
            let keep = budget_check(cfg.grid.iter().map(|&n| sphere_size(cfg.rank, n)), cfg.budget());
            report.partial = keep < cfg.grid.len();
            let grid = &cfg.grid[..keep];
            let body = cache.get_or_compute(&key, || -> Result<String> {
                Ok(grid
                    .iter()
                    .map(|&n| {
                        let vals: Vec<f64> =
                            ReducedWord::all_of_length(cfg.rank, n).iter().map(|g| harish_chandra::<f64, _>(g, &mu)).collect();
                        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0f64), |(a, b), v| (a.min(*v), b.max(*v)));
                        format!("{n}\t{mean:?}\t{lo:?}\t{hi:?}\n")
                    })
                    .collect())
            })?;
            for line in body.lines() {
                let f: Vec<&str> = line.split('\t').collect();
                let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse("xi cache value".into()));
                let n = parse(f[0])?;
                report.push(n, Value::Float(parse(f[1])?), None);
                report.constant(&format!("min_n{}", f[0]), parse(f[2])?);
                report.constant(&format!("max_n{}", f[0]), parse(f[3])?);
            }
        }
    }
    Ok(Outcome::single(report))
}

fn length_of(n: usize) -> Length {
    Length::integer(n as i64)
}

/// Cover check at the configured `ρ` and the minimal covering `ρ`.
pub fn cover(cfg: &ExperimentConfig, cache: &mut Cache) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let step = Length::Exact(cfg.cover.step.to_rational64().ok_or_else(|| Error::OutOfRange("cover.step".into()))?);
    let max = Length::Exact(cfg.cover.max.to_rational64().ok_or_else(|| Error::OutOfRange("cover.max".into()))?);
    let mut report = SweepReport::new("shadow_cover", "R");
    let mut used = 0u128;
    let mut all_covered = true;
    let mut detail = Vec::new();
    for &r in &cfg.grid {
        used += Annulus::new(&ctx.metric, length_of(r), ctx.h).size(cfg.budget().saturating_sub(used).saturating_add(1))?;
        if used > cfg.budget() {
            report.partial = true;
            break;
        }
        let key = Cache::key("cover", &(cfg.rank, &cfg.metric, &cfg.epsilon, ctx.rho.to_string(), ctx.h.to_string(), r, &cfg.cover));
        let body = cache.get_or_compute(&key, || -> Result<String> {
            let check = check_shadow_cover(length_of(r), &ctx)?;
            let minimal = minimal_covering_rho(length_of(r), &ctx, step, max)?;
            let witness = check.witness.map(|w| format!("C_{} x C_{}", w.first.stem, w.second.stem)).unwrap_or_default();
            Ok(format!("{}\t{}\t{}\t{}", check.covered, check.depth, minimal.map(|m| format!("{:?}", m.to_f64())).unwrap_or_default(), witness))
        })?;
        let f: Vec<&str> = body.split('\t').collect();
        let covered = f[0] == "true";
        all_covered &= covered;
        let minimal = f[2].parse::<f64>().unwrap_or(f64::NAN);
        report.push(r as f64, Value::Float(minimal), Some(Value::Float(ctx.rho.to_f64())));
        report.constant(&format!("grid_depth_R{r}"), f[1].parse().unwrap_or(f64::NAN));
        if !covered {
            detail.push(format!("R={r}: uncovered {}", f[3]));
        }
    }
    report.verdict(
        "covered at rho",
        all_covered,
        if detail.is_empty() { format!("rho = {} covers every radius", ctx.rho) } else { detail.join("; ") },
    );
    Ok(Outcome::single(report))
}

pub fn equidist(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let t = EquidistTargets { tolerance: cfg.targets.tolerance, min_r_squared: cfg.targets.min_r_squared };
    Ok(Outcome::single(equidistribution_sweep(&cfg.grid, cfg.depth, cfg.scheme(), &ctx, cfg.budget(), t)?))
}

pub fn orth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ctx = cfg.context()?;
    let inputs = cfg.phi_inputs().map_err(Error::Parse)?;
    let t = OrthTargets { rel_tol: cfg.targets.rel_tol, floor: cfg.targets.floor };
    Ok(Outcome::single(orthogonality_sweep(&inputs, &cfg.grid, cfg.scheme(), &ctx, cfg.budget(), Some(t))?))
}

fn measure(cfg: &ExperimentConfig) -> Result<(GroupContext, BoundaryMeasure)> {
    let ctx = cfg.context()?;
    let mu = ps_measure(&ctx);
    Ok((ctx, mu))
}

pub fn rd(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (_, mu) = measure(cfg)?;
    let p = cfg.phi_inputs().map_err(Error::Parse)?;
    Ok(Outcome::single(rd_sweep(&p.v1, &p.w1, &cfg.grid, &mu, cfg.budget(), Some(cfg.targets.rd_lower))?))
}

pub fn gvb(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (_, mu) = measure(cfg)?;
    let p = cfg.phi_inputs().map_err(Error::Parse)?;
    Ok(Outcome::single(gvb_growth(&p.v1, &p.w1, &cfg.grid, &mu, cfg.budget(), cfg.targets.gvb_band)?))
}

/// Fiber census over `S_R × S_R′` and random convolution norm ratios.
pub fn conv(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = &cfg.conv;
    let mut report = rd_convolution_check(cfg.rank, c.r1, c.r2, &cfg.grid, c.trials, cfg.seed, cfg.budget())?;
    let pairs: Vec<(usize, usize)> = (0..=c.max_fiber).flat_map(|a| (0..=c.max_fiber).map(move |b| (a, b))).collect();
    let keep = budget_check(pairs.iter().map(|&(a, b)| sphere_size(cfg.rank, a) * sphere_size(cfg.rank, b)), cfg.budget());
    report.partial |= keep < pairs.len();
    let mut rows = Vec::new();
    let mut ok = true;
    for &(a, b) in &pairs[..keep] {
        for f in fiber_sizes(cfg.rank, a, b) {
            ok &= f.min as u128 == f.expected && f.max as u128 == f.expected && f.expected <= f.bound;
            ok &= f.p != 0 || f.max == 1;
            rows.push(vec![
                f.r1.to_string(),
                f.r2.to_string(),
                f.p.to_string(),
                f.identity.to_string(),
                f.elements.to_string(),
                f.min.to_string(),
                f.max.to_string(),
                f.expected.to_string(),
                f.bound.to_string(),
            ]);
        }
    }
    report.verdict(
        "fiber sizes",
        ok,
        format!("exhaustive over R, R' <= {} ({} of {} pairs): sizes equal the predicted count, are <= |S_p|, and are 1 at p = 0", c.max_fiber, keep, pairs.len()),
    );
    let table = csv_table(&["r1", "r2", "p", "identity", "elements", "min", "max", "expected", "bound"], rows);
    Ok(Outcome { reports: vec![(String::new(), report)], tables: vec![("fibers".into(), table)], info: json!({}), lines: Vec::new() })
}

/// First passage, harmonic measure against PS of the Green metric, and
/// multiplicativity of `F(e, g)`.
pub fn green(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = &cfg.green;
    let walk = cfg.walk()?;
    let rep = green_experiment(&walk, g.depth, g.words, g.max_len, g.samples, cfg.seed, cfg.targets.confidence)?;
    let info = json!({
        "first_passage": rep.first_passage.f,
        "first_passage_exact": rep.first_passage.exact.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        "transience_gap": rep.first_passage.delta,
        "cylinders": rep.cylinders.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "words": rep.words.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    });
    let mut lines = vec![format!("first passage f = {:?}", rep.first_passage.f)];
    if let Some(ex) = &rep.first_passage.exact {
        lines.push(format!("exact f = {}", ex.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")));
    }
    Ok(Outcome { reports: vec![("harmonic".into(), rep.harmonic), ("ancona".into(), rep.ancona)], tables: Vec::new(), info, lines })
}

pub fn budget_error(e: &Error) -> bool {
    matches!(e, Error::BudgetExceeded { .. })
}

#[cfg(test)]
mod tests {
    use super::*;
    use freerep::scalar::rat;

    #[test]
    fn closed_form_matches_small_values() {
        assert_eq!(xi_closed_form(2, 0), Quad::from_i64(1));
        assert_eq!(xi_closed_form(2, 1), Quad::half_power(3, 1) * Quad::rational(rat(1, 2)));
        assert_eq!(xi_closed_form(2, 2), Quad::rational(rat(2, 3)));
    }

    #[test]
    fn quad_encoding_round_trips() {
        for q in [Quad::rational(rat(-3, 7)), xi_closed_form(2, 5), Quad::sqrt(5)] {
            assert_eq!(decode_quad(&encode_quad(&q)).unwrap(), q);
        }
    }
}
