use ariel_core::voting::{vote, Algorithm, MetricRegistry, NVersionConfig, Organ, Reply, SpareState, VersionSpec, VoteParams, VotingError};
use proptest::prelude::*;

fn config(active: usize, spares: usize) -> NVersionConfig {
    let versions = (0..active + spares)
        .map(|k| VersionSpec { rank: k as u32 + 1, task: k as u32 + 1, spare: k >= active, timeout: 1000 })
        .collect();
    NVersionConfig {
        nv_id: 50,
        versions,
        algorithm: Algorithm::Majority,
        metric: "abs_num".into(),
        params: VoteParams::default(),
        on_success: Some(20),
        on_error: Some(30),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn majority_finds_the_odd_one_out() {
    let m = MetricRegistry::default().get("abs_num").unwrap();
    let out = vote(Algorithm::Majority, &[Some(1.0), Some(1.0), Some(7.0)], &m, VoteParams::default());
    assert_eq!(out.value, Some(1.0));
    assert_eq!(out.winners, vec![0, 1]);
    assert_eq!(out.minority, vec![2]);
    let split = vote(Algorithm::Majority, &[Some(1.0), Some(2.0), Some(3.0)], &m, VoteParams::default());
    assert!(!split.agreed());
    assert!(split.minority.is_empty());
}

#[test]
fn epsilon_widens_agreement() {
    let m = MetricRegistry::default().get("abs_num").unwrap();
    let p = VoteParams { epsilon: 0.5, scaling: 1.0 };
    assert!(vote(Algorithm::Majority, &[Some(1.0), Some(1.3), Some(9.0)], &m, p).agreed());
    assert!(vote(Algorithm::Consensus, &[Some(1.0), Some(1.3), Some(1.2)], &m, p).agreed());
    assert!(!vote(Algorithm::Consensus, &[Some(1.0), Some(1.3), None], &m, p).agreed());
}

#[test]
fn plurality_and_median() {
    let m = MetricRegistry::default().get("abs_num").unwrap();
    let p = VoteParams::default();
    let vals = [Some(4.0), Some(4.0), Some(1.0), Some(2.0), Some(3.0)];
    assert_eq!(vote(Algorithm::Plurality, &vals, &m, p).value, Some(4.0));
    assert!(!vote(Algorithm::Plurality, &[Some(1.0), Some(1.0), Some(2.0), Some(2.0)], &m, p).agreed());
    assert_eq!(vote(Algorithm::Median, &[Some(1.0), Some(5.0), Some(3.0)], &m, p).value, Some(3.0));
    let avg = vote(Algorithm::WeightedAverage, &[Some(1.0), Some(5.0), None], &m, VoteParams { epsilon: 0.0, scaling: 2.0 });
    assert_eq!(avg.value, Some(6.0));
    assert_eq!(avg.missing, vec![2]);
}

#[test]
fn missing_values_count_against_majority() {
    let m = MetricRegistry::default().get("abs_num").unwrap();
    let out = vote(Algorithm::Majority, &[Some(1.0), None, None], &m, VoteParams::default());
    assert!(!out.agreed());
    assert_eq!(out.missing, vec![1, 2]);
    assert!(!vote(Algorithm::Majority, &[None, None], &m, VoteParams::default()).agreed());
}

#[test]
fn metric_registry() {
    let mut r = MetricRegistry::default();
    assert!(r.contains("bitwise"));
    assert_eq!(r.get("bitwise").unwrap()(1.0, 1.0), 0.0);
    assert!(matches!(r.get("nope"), Err(VotingError::UnknownMetric(_))));
    r.register("mod10", |a, b| ((a - b) % 10.0).abs());
    assert!(r.get("mod10").is_ok());
}

#[test]
fn config_validation() {
    let r = MetricRegistry::default();
    assert!(config(3, 1).validate(&r).is_ok());
    assert_eq!(config(1, 2).validate(&r), Err(VotingError::TooFewVersions(1)));
    let mut c = config(3, 0);
    c.versions[1].rank = 1;
    assert_eq!(c.validate(&r), Err(VotingError::DuplicateRank(1)));
    let mut c = config(3, 0);
    c.versions[2].task = 1;
    assert_eq!(c.validate(&r), Err(VotingError::DuplicateTask(1)));
    let mut c = config(3, 0);
    c.metric = "tmr_cmp".into();
    assert!(matches!(c.validate(&r), Err(VotingError::UnknownMetric(_))));
}

#[test]
fn spare_switch_in_and_exhaustion() {
    let mut o = Organ::new(config(3, 1));
    assert_eq!(o.active_members(), vec![1, 2, 3]);
    assert!(o.is_spare(4));
    assert_eq!(o.take_slot(4, 2), Err(VotingError::NotWoken(4)));
    o.stop(2);
    assert_eq!(o.active_members(), vec![1, 3]);
    o.wake(4).unwrap();
    assert_eq!(o.take_slot(4, 2), Ok(1));
    assert_eq!(o.active_members(), vec![1, 4, 3]);
    assert_eq!(o.spare_state(4), Some(SpareState::InService));
    assert_eq!(o.wake(4), Err(VotingError::SpareExhausted(50)));
    assert_eq!(o.wake(1), Err(VotingError::SpareExhausted(50)));
    assert_eq!(o.wake(9), Err(VotingError::NotASpare(9)));
    assert_eq!(o.reconfigure(1), Err(VotingError::SpareExhausted(50)));
}

#[test]
fn serve_checks_arity() {
    let o = Organ::new(config(3, 0));
    let r = MetricRegistry::default();
    assert_eq!(o.serve(&[Some(1.0)], &r).unwrap_err(), VotingError::Arity { expected: 3, got: 1 });
    let (reply, _) = o.serve(&[Some(1.0), Some(2.0), Some(1.0)], &r).unwrap();
    assert_eq!(reply, Reply::Success { to: Some(20), from: 1, value: 1.0 });
    let (reply, _) = o.serve(&[Some(1.0), Some(2.0), Some(3.0)], &r).unwrap();
    assert_eq!(reply, Reply::Failure { to: Some(30), from: 1 });
}

fn small_value() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![4 => (0i32..4).prop_map(|v| Some(f64::from(v))), 1 => Just(None)]
}

proptest! {
    #[test]
    fn result_ignores_arrival_order(values in prop::collection::vec(small_value(), 2..=5)) {
        let m = MetricRegistry::default().get("abs_num").unwrap();
        let p = VoteParams::default();
        for alg in [Algorithm::Majority, Algorithm::Plurality, Algorithm::Median, Algorithm::Consensus, Algorithm::WeightedAverage] {
            let base = vote(alg, &values, &m, p);
            for perm in permutations(values.len()) {
                let shuffled: Vec<Option<f64>> = perm.iter().map(|&i| values[i]).collect();
                let out = vote(alg, &shuffled, &m, p);
                match (base.value, out.value) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9, "{:?}: {} vs {}", alg, a, b),
                    (a, b) => prop_assert_eq!(a, b),
                }
                let mut minority: Vec<usize> = out.minority.iter().map(|&k| perm[k]).collect();
                minority.sort_unstable();
                prop_assert_eq!(&minority, &base.minority);
            }
        }
    }

    #[test]
    fn strict_majority_wins(n in 2usize..8, agree in 0usize..8, v in 0i32..5, seed in any::<u64>()) {
        let agree = agree.clamp(n / 2 + 1, n);
        let mut values = vec![Some(f64::from(v)); agree];
        let mut s = seed;
        while values.len() < n {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.push(if s >> 62 == 0 { None } else { Some(100.0 + (s >> 40) as f64) });
        }
        let r = MetricRegistry::default();
        for name in ["abs_num", "bitwise"] {
            let out = vote(Algorithm::Majority, &values, &r.get(name).unwrap(), VoteParams::default());
            prop_assert_eq!(out.value, Some(f64::from(v)));
        }
    }

    #[test]
    fn corrupted_member_is_in_minority(good in -1e6f64..1e6, delta in prop_oneof![-1e6f64..-1e-3, 1e-3f64..1e6], who in 0usize..3) {
        let mut values = [Some(good); 3];
        values[who] = Some(good + delta);
        let out = vote(Algorithm::Majority, &values, &MetricRegistry::default().get("abs_num").unwrap(), VoteParams::default());
        prop_assert_eq!(out.minority, vec![who]);
        prop_assert_eq!(out.value, Some(good));
    }

    #[test]
    fn one_reply_per_request(active in 2usize..7, values in prop::collection::vec(small_value(), 7)) {
        let o = Organ::new(config(active, 0));
        let (reply, _) = o.serve(&values[..active], &MetricRegistry::default()).unwrap();
        match reply {
            Reply::Success { to, .. } => prop_assert_eq!(to, Some(20)),
            Reply::Failure { to, .. } => prop_assert_eq!(to, Some(30)),
        }
    }
}
