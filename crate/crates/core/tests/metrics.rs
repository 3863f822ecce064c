mod common;

use proptest::prelude::*;
use tabletop_core::episode::EpisodeLog;
use tabletop_core::metrics::{avg_len, delta_sr, dgr, intention_accuracy, success_rate, Rate};
use tabletop_core::sim::{Event, Fidelity};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |a, x| a + x) / xs.len() as f64
}

#[test]
fn delta_sr_rows() {
    let rows = [([60.0, 45.0], 5.0, -47.5), ([75.0, 40.0], 15.0, -42.5), ([65.0, 40.0], 0.0, -52.5)];
    for (seen, novel, want) in rows {
        let got = delta_sr(&seen, novel).unwrap();
        assert!((got - (novel - mean(&seen))).abs() < 1e-12);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!(delta_sr(&[], 1.0).is_err());
}

#[test]
fn avg_len_rows() {
    let rows: [([f64; 5], f64); 6] = [
        ([0.963, 0.914, 0.853, 0.797, 0.717], 4.244),
        ([0.935, 0.868, 0.814, 0.775, 0.734], 4.126),
        ([0.934, 0.870, 0.820, 0.777, 0.737], 4.138),
        ([0.899, 0.801, 0.718, 0.664, 0.587], 3.669),
        ([0.931, 0.846, 0.762, 0.694, 0.627], 3.860),
        ([0.935, 0.859, 0.810, 0.771, 0.711], 4.086),
    ];
    for (rates, want) in rows {
        let got = avg_len(&rates).unwrap();
        let by_hand = rates[0] + rates[1] + rates[2] + rates[3] + rates[4];
        assert!((got - by_hand).abs() < 1e-12);
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
    assert!(avg_len(&[0.5, 1.2]).is_err());
}

#[test]
fn rates_carry_their_denominator() {
    let r = Rate::new(12, 20);
    assert_eq!(r.value, Some(0.6));
    assert_eq!(r.percent(), Some(60.0));
    assert_eq!(Rate::new(0, 0).value, None);
    assert!(success_rate(&[]).is_err());
}

#[test]
fn coffee_first_grasp_rates() {
    let v = common::base("coffee", 7);
    let logs: Vec<_> = (0..4).map(|s| common::run("oracle", &v, &[&v], Fidelity::Full, s)).collect();
    let refs: Vec<_> = logs.iter().collect();
    assert_eq!(success_rate(&refs).unwrap().value, Some(1.0));
    assert_eq!(intention_accuracy(&refs, "red_mug").unwrap().value, Some(1.0));
    assert_eq!(intention_accuracy(&refs, "blue_mug").unwrap().value, Some(0.0));
    assert_eq!(dgr(&refs).value, Some(0.0));
}

fn template_log() -> EpisodeLog {
    let v = common::base("tidy", 7);
    let mut log = common::run("oracle", &v, &[&v], Fidelity::Full, 0);
    for s in &mut log.steps {
        s.events.retain(|e| !matches!(e, Event::GraspAttempt { .. }));
    }
    log
}

fn attempt(valid: bool, aborted: bool) -> Event {
    Event::GraspAttempt { target: (!aborted).then(|| "napkin".to_string()), valid, aborted }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dgr_counts_closed_invalid_grasps(
        grasps in prop::collection::vec((any::<bool>(), any::<bool>()), 0..40),
        aborted_extra in 0usize..10,
    ) {
        let mut log = template_log();
        let n = log.steps.len();
        for (i, (valid, aborted)) in grasps.iter().enumerate() {
            log.steps[i % n].events.push(attempt(*valid, *aborted));
        }
        let closed: Vec<_> = grasps.iter().filter(|g| !g.1).collect();
        let bad = closed.iter().filter(|g| !g.0).count();
        let r = dgr(&[&log]);
        prop_assert_eq!(r.denominator as usize, closed.len());
        prop_assert_eq!(r.numerator as usize, bad);
        if let Some(v) = r.value {
            prop_assert!((0.0..=1.0).contains(&v));
        }

        for i in 0..aborted_extra {
            log.steps[i % n].events.push(attempt(i % 2 == 0, true));
        }
        prop_assert_eq!(dgr(&[&log]), r);
    }
}
