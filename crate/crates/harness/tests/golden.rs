mod common;

use tabletop::transcript::record_transcript;
use tabletop_core::policy::builtin;
use tabletop_core::policy::protocol::{decode_message, encode_message, Client, MessageType};
use tabletop_core::sim::{Action, Fidelity};
use tabletop_core::SimConfig;

struct Case {
    name: &'static str,
    policy: &'static str,
    variation: &'static str,
    fidelity: Fidelity,
    max_steps: u32,
}

const CASES: &[Case] = &[
    Case { name: "coffee_oracle", policy: "oracle", variation: "coffee", fidelity: Fidelity::Full, max_steps: 500 },
    Case {
        name: "tidy_semantic_match_degraded",
        policy: "semantic_match",
        variation: "tidy",
        fidelity: Fidelity::Degraded,
        max_steps: 30,
    },
    Case {
        name: "fruit_pre_satisfied",
        policy: "oracle",
        variation: "fruit/short_in_container__on_table",
        fidelity: Fidelity::Full,
        max_steps: 500,
    },
];

fn transcript(c: &Case) -> tabletop::transcript::Transcript {
    let m = common::manifest();
    let e = m.get(c.variation).unwrap();
    let train = e.variation.train_set.iter().filter_map(|id| m.get(id).map(|x| &x.variation)).collect();
    let cfg = SimConfig { max_steps: c.max_steps, ..SimConfig::default() };
    record_transcript(builtin(c.policy).unwrap(), &e.variation, train, &cfg, c.fidelity, 7).unwrap().0
}

#[test]
fn transcripts_match_golden_files() {
    let dir = common::crate_dir().join("data/golden");
    for c in CASES {
        let t = transcript(c);
        common::check_golden(&dir.join(format!("{}.server.jsonl", c.name)), &t.server);
        common::check_golden(&dir.join(format!("{}.client.jsonl", c.name)), &t.client);
    }
}

#[test]
fn replaying_server_lines_reproduces_client_lines() {
    let dir = common::crate_dir().join("data/golden");
    for c in CASES {
        let server = std::fs::read_to_string(dir.join(format!("{}.server.jsonl", c.name))).unwrap();
        let client = std::fs::read_to_string(dir.join(format!("{}.client.jsonl", c.name))).unwrap();
        let mut acts = client.lines().filter_map(|l| {
            let m = decode_message(l).unwrap();
            (m.kind == MessageType::Act).then(|| serde_json::from_value::<Action>(m.payload).unwrap())
        });
        let mut session = Client::default();
        let mut out = String::new();
        for line in server.split_inclusive('\n') {
            let reply = session.handle(line, &mut |_| acts.next().expect("an act per observe")).unwrap();
            if let Some(r) = reply {
                out.push_str(&encode_message(&r));
            }
        }
        assert_eq!(out, client, "{}", c.name);
        assert!(session.finished.is_some());
    }
}

#[test]
fn transcripts_are_framed_one_message_per_line() {
    for c in CASES {
        let t = transcript(c);
        for side in [&t.server, &t.client] {
            assert!(side.ends_with('\n'));
            for l in side.lines() {
                decode_message(l).unwrap();
            }
        }
        let first = decode_message(t.server.lines().next().unwrap()).unwrap();
        assert_eq!(first.kind, MessageType::Hello);
        assert_eq!(first.seq, 0);
        let last = decode_message(t.server.lines().last().unwrap()).unwrap();
        assert_eq!(last.kind, MessageType::EpisodeEnd);
    }
}

#[test]
fn degraded_observations_carry_no_category() {
    let t = transcript(&CASES[1]);
    let observe = t.server.lines().nth(1).unwrap();
    let m = decode_message(observe).unwrap();
    for o in m.payload["objects"].as_array().unwrap() {
        assert!(o.get("category").is_none_or(|c| c.is_null()), "{o}");
    }
}
