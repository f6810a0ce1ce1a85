use freerep::asymptotics::coefficient_square_sum;
use freerep::asymptotics::report::Value;
use freerep::group::{GroupContext, ReducedWord};
use freerep::measures::{ps_measure, solve_first_passage, WalkSpec};
use freerep::representation::{harish_chandra, matrix_coefficient, StepFunction};
use freerep::scalar::{rat, Quad, Scalar};

fn xi_closed_form(rank: usize, n: usize) -> Quad {
    let omega = 2 * rank as u64 - 1;
    let k = rank as i64;
    Quad::half_power(omega, -(n as i64)) * Quad::rational(rat(k + n as i64 * (k - 1), k))
}

#[test]
fn harish_chandra_matches_closed_form() {
    for rank in 2..=4 {
        let mu = ps_measure(&GroupContext::word(rank).unwrap());
        let m = mu.as_word().unwrap();
        for n in 0..=6 {
            for g in ReducedWord::all_of_length(rank, n).into_iter().step_by(7) {
                assert_eq!(harish_chandra::<Quad, _>(&g, m), xi_closed_form(rank, n), "rank {rank}, {g}");
            }
        }
    }
}

#[test]
fn sphere_sums_by_brute_force() {
    let mu = ps_measure(&GroupContext::word(2).unwrap());
    let m = mu.as_word().unwrap();
    let one = StepFunction::<Quad>::one(2);
    let a = StepFunction::<Quad>::indicator(2, "a".parse().unwrap());
    for n in 0..=6 {
        for (v, w) in [(&one, &one), (&a, &one), (&a, &a)] {
            let brute = ReducedWord::all_of_length(2, n).iter().fold(Quad::zero(), |acc, g| {
                let c = matrix_coefficient(g, v, w, m);
                acc + c.clone() * c
            });
            assert_eq!(coefficient_square_sum(v, w, n, &mu).unwrap(), Value::Exact(brute));
        }
        let closed = Quad::rational(if n == 0 { rat(1, 1) } else { rat((n as i64 + 2).pow(2), 3) });
        assert_eq!(coefficient_square_sum(&one, &one, n, &mu).unwrap(), Value::Exact(closed));
    }
}

#[test]
fn simple_walk_first_passage() {
    for rank in 2..=4 {
        let fp = solve_first_passage(&WalkSpec::simple(rank).unwrap()).unwrap();
        let f = rat(1, 2 * rank as i64 - 1);
        assert!(fp.exact.unwrap().iter().all(|x| *x == f));
    }
}
