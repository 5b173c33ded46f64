use std::path::PathBuf;
use std::sync::Arc;

use rgl_core::bot::{play_script, transcript_json_lines, CoalitionPolicy, Decision, SessionConfig};
use rgl_core::RuleVariant;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn seed_42_transcript_is_byte_identical() {
    let policy: CoalitionPolicy =
        serde_json::from_slice(&std::fs::read(fixture("policy_2_101_standard.json")).unwrap()).unwrap();
    let config = SessionConfig { opponents: 2, mesh: 101, rule: RuleVariant::Standard, seed: 42 };
    let events = play_script(Arc::new(policy), config, &[Decision::Hold, Decision::Hold, Decision::Drop]).unwrap();
    let text = transcript_json_lines(&events).unwrap();
    let golden = std::fs::read_to_string(fixture("golden_seed42_n2_m101.jsonl")).unwrap();
    assert_eq!(text, golden);
}

#[test]
fn fixture_policy_round_trips() {
    let raw = std::fs::read(fixture("policy_2_101_standard.json")).unwrap();
    let policy: CoalitionPolicy = serde_json::from_slice(&raw).unwrap();
    policy.validate().unwrap();
    let again: CoalitionPolicy = serde_json::from_str(&serde_json::to_string(&policy).unwrap()).unwrap();
    assert_eq!(policy, again);
}
