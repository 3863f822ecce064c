mod common;

use proptest::prelude::*;
use tabletop_core::episode::EpisodeLog;
use tabletop_core::sim::{Fidelity, PrivilegedFrame};
use tabletop_core::vqa::{format_bbox, generate_items, verify_item, VqaCategory, VqaItem};

fn frame_at(log: &EpisodeLog, t: u32) -> &PrivilegedFrame {
    log.frames().find(|f| f.t == t).unwrap()
}

fn corpus() -> Vec<(EpisodeLog, Vec<VqaItem>)> {
    ["coffee", "fastfood", "tidy"]
        .iter()
        .map(|k| {
            let v = common::base(k, 7);
            let log = common::run("oracle", &v, &[&v], Fidelity::Full, 0);
            let items = generate_items(k, &log);
            (log, items)
        })
        .collect()
}

fn parse_bbox(s: &str) -> [f64; 4] {
    let v: Vec<f64> = s.trim_matches(['[', ']']).split(", ").map(|x| x.parse().unwrap()).collect();
    [v[0], v[1], v[2], v[3]]
}

#[test]
fn every_generated_item_verifies() {
    for (log, items) in corpus() {
        let ep = &log.header.base_task_id;
        assert!(items.iter().any(|i| i.category == VqaCategory::Grounding));
        assert!(items.iter().any(|i| i.category == VqaCategory::Counting));
        assert!(items.iter().any(|i| i.category == VqaCategory::Tracking));
        for item in &items {
            assert!(verify_item(item, ep, frame_at(&log, item.frame_ref.t)), "{item:?}");
        }
    }
}

#[test]
fn items_do_not_verify_against_another_frame_or_episode() {
    let (log, items) = corpus().remove(0);
    let item = items.iter().find(|i| i.category == VqaCategory::Grounding).unwrap();
    assert!(!verify_item(item, "elsewhere", frame_at(&log, item.frame_ref.t)));
    let other = log.frames().find(|f| f.t != item.frame_ref.t).unwrap();
    assert!(!verify_item(item, &log.header.base_task_id, other));
}

#[test]
fn tracking_reports_the_end() {
    let (log, items) = corpus().remove(1);
    let last = log.frames().last().unwrap().t;
    let tail = items.iter().find(|i| i.category == VqaCategory::Tracking && i.frame_ref.t == last).unwrap();
    assert_eq!(tail.answer, "The robot has finished the task.");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn off_by_one_answers_are_rejected(pick in any::<prop::sample::Index>(), coord in 0usize..4, up in any::<bool>()) {
        let corpus = corpus();
        let all: Vec<_> = corpus.iter().flat_map(|(l, is)| is.iter().map(move |i| (l, i))).collect();
        let (log, item) = all[pick.index(all.len())];
        let ep = &log.header.base_task_id;
        let frame = frame_at(log, item.frame_ref.t);
        let d = if up { 1.0 } else { -1.0 };
        let mut bad = item.clone();
        match item.category {
            VqaCategory::Grounding => {
                let mut b = parse_bbox(&item.answer);
                b[coord] += d;
                bad.answer = format_bbox(b);
            }
            VqaCategory::Counting => {
                let n: i64 = item.answer.parse().unwrap();
                bad.answer = (n + d as i64).to_string();
            }
            VqaCategory::Tracking => return Ok(()),
        }
        prop_assert!(verify_item(item, ep, frame));
        prop_assert!(!verify_item(&bad, ep, frame));
    }
}
