use ariel_core::gossip::{self, identity_lambda, identity_u4, permutation, Cell, ClosedForm, PermKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Average steps between processor-level completions, ignoring the first and last session.
fn steps_per_completion(run: &gossip::GossipRun) -> f64 {
    let per = run.n + 1;
    let times: Vec<usize> = run.completions.iter().enumerate().flat_map(|(t, &c)| std::iter::repeat_n(t, c)).collect();
    assert!(times.len() >= 4 * per, "too few complete sessions");
    let inner = &times[per..times.len() - per];
    (inner[inner.len() - 1] - inner[0]) as f64 / (inner.len() - 1) as f64
}

#[test]
fn identity_four() {
    let run = gossip::simulate(4, PermKind::Identity, 1, 0).unwrap();
    assert_eq!(run.lambda(), 18);
    assert_eq!(run.count_with(4), 2);
    assert_eq!(run.count_with(2), 16);
    assert!((run.mu() - 2.22).abs() < 0.01);
    assert!((run.epsilon() - 0.4444).abs() < 0.0005);
}

#[test]
fn identity_seven() {
    let run = gossip::simulate(7, PermKind::Identity, 1, 0).unwrap();
    assert_eq!(run.lambda(), 47);
    assert!((run.mu() - 2.38).abs() < 0.01);
    assert!((run.epsilon() - 0.2979).abs() < 0.0005);
}

#[test]
fn pipelined_tables() {
    let nine = gossip::simulate(9, PermKind::Pipelined, 1, 0).unwrap();
    assert_eq!(nine.lambda(), 27);
    assert!((nine.mu() - 6.67).abs() < 0.01);
    assert!(nine.is_palindrome());
    let eight = gossip::simulate(8, PermKind::Pipelined, 1, 0).unwrap();
    assert_eq!(eight.lambda(), 24);
    assert!((eight.mu() - 6.0).abs() < 1e-12);
}

#[test]
fn identity_sweep_matches_closed_form() {
    for n in 1..=160u64 {
        let run = gossip::simulate(n as usize, PermKind::Identity, 1, 0).unwrap();
        let cf = ClosedForm::predict(n, PermKind::Identity).unwrap();
        assert_eq!(run.lambda() as u64, cf.lambda, "lambda at N={n}");
        assert_eq!(run.lambda() as u64, identity_lambda(n));
        assert_eq!(run.utilization() as u64, cf.utilization, "U at N={n}");
        assert_eq!(run.count_with(4) as u64, identity_u4(n), "u4 at N={n}");
    }
    let cf = ClosedForm::predict(160, PermKind::Identity).unwrap();
    assert!((cf.mu - 8.0 / 3.0).abs() < 0.05);
    assert!(cf.epsilon < 0.05);
}

#[test]
fn pipelined_sweep_matches_closed_form() {
    let mut bad = Vec::new();
    for n in 1..=500u64 {
        let run = gossip::simulate(n as usize, PermKind::Pipelined, 1, 0).unwrap();
        let cf = ClosedForm::predict(n, PermKind::Pipelined).unwrap();
        assert_eq!(run.utilization() as u64, cf.utilization);
        if run.lambda() as u64 != cf.lambda {
            bad.push((n, run.lambda()));
        }
    }
    // N=1 is a two-processor swap that needs two steps, not three.
    assert_eq!(bad, vec![(1, 2)]);
    for n in 2..=500u64 {
        let cf = ClosedForm::predict(n, PermKind::Pipelined).unwrap();
        assert_eq!(cf.utilization * 3, 2 * (n + 1) * cf.lambda);
    }
}

#[test]
fn sustained_pipelined_throughput() {
    let run = gossip::simulate(4, PermKind::Pipelined, 12, 0).unwrap();
    let spc = steps_per_completion(&run);
    assert!((spc - 2.0).abs() <= 0.1, "steps per completion {spc}");
    let busy = run.nu.iter().skip(run.n * 3).take(run.lambda() - run.n * 6);
    for &v in busy {
        assert_eq!(v, run.n, "sustained region uses N of N+1 processors");
    }
}

#[test]
fn table_and_csv_render() {
    let run = gossip::simulate(4, PermKind::Identity, 1, 0).unwrap();
    let table = gossip::render_table(&run);
    assert!(table.lines().count() >= 5);
    let csv = gossip::to_csv(&run).unwrap();
    assert_eq!(csv.lines().count(), run.lambda() + 1);
    assert!(csv.starts_with("step,nu,completions"));
}

#[test]
fn permutations_follow_their_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(permutation(2, 4, PermKind::Identity, &mut rng), vec![0, 1, 3, 4]);
    assert_eq!(permutation(2, 4, PermKind::Pipelined, &mut rng), vec![3, 4, 0, 1]);
    let mut r = permutation(2, 4, PermKind::PseudoRandom, &mut rng);
    r.sort_unstable();
    assert_eq!(r, vec![0, 1, 3, 4]);
}

#[test]
fn rejects_degenerate_input() {
    assert!(gossip::simulate(0, PermKind::Identity, 1, 0).is_err());
    assert!(gossip::simulate(3, PermKind::Identity, 0, 0).is_err());
}

fn check_exchange(run: &gossip::GossipRun) {
    let n = run.n;
    for (i, row) in run.rows.iter().enumerate() {
        let mut sent: Vec<usize> = row.iter().filter_map(|c| if let Cell::Sent(j) = c { Some(*j) } else { None }).collect();
        let mut got: Vec<usize> = row.iter().filter_map(|c| if let Cell::Received(j) = c { Some(*j) } else { None }).collect();
        sent.sort_unstable();
        got.sort_unstable();
        let others: Vec<usize> = (0..=n).filter(|&j| j != i).collect();
        let want: Vec<usize> = others.iter().flat_map(|&j| std::iter::repeat_n(j, run.sessions)).collect();
        assert_eq!(sent, want, "sends of {i}");
        assert_eq!(got, want, "receives of {i}");
    }
    for &v in &run.nu {
        assert_eq!(v % 2, 0);
    }
}

proptest! {
    #[test]
    fn every_value_delivered_once(n in 1usize..24, kind in prop_oneof![Just(PermKind::Identity), Just(PermKind::Pipelined), Just(PermKind::PseudoRandom)], seed in any::<u64>(), sessions in 1usize..4) {
        let run = gossip::simulate(n, kind, sessions, seed).unwrap();
        check_exchange(&run);
        prop_assert!((run.mu() - run.utilization() as f64 / run.lambda() as f64).abs() < 1e-12);
        prop_assert!((run.epsilon() - run.mu() / (n + 1) as f64).abs() < 1e-12);
    }

    #[test]
    fn seeded_runs_repeat(n in 1usize..16, seed in any::<u64>()) {
        let a = gossip::simulate(n, PermKind::PseudoRandom, 1, seed).unwrap();
        let b = gossip::simulate(n, PermKind::PseudoRandom, 1, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
