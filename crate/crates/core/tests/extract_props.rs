use std::path::Path;

use ethical_reasoning::extract::{classify, ExtractError, LabelRule, Pattern, ReasoningLevel, UnclassifiedReason};
use ethical_reasoning::harness::load_scenario;
use ethical_reasoning::reasoning::ParseMode;
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "the", "robot", "dog", "owner", "feed", "let", "eat", "patty", "human", "diet", "give", "food", "to", "stick",
    "hungry", "share", "keep",
];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..14).prop_map(|w| w.join(" "))
}

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" "))
}

fn rules() -> impl Strategy<Value = Vec<LabelRule>> {
    prop::collection::vec(prop::collection::vec(phrase(), 1..4), 2..5).prop_map(|sets| {
        sets.into_iter()
            .enumerate()
            .map(|(i, ps)| LabelRule {
                label: format!("L{i}"),
                patterns: ps.into_iter().map(Pattern::Substring).collect(),
                emotional_aligned: i == 0,
            })
            .collect()
    })
}

fn label_of(text: &str, rules: &[LabelRule]) -> Option<String> {
    classify(text, rules, ReasoningLevel::Final, ParseMode::Lenient).unwrap().label
}

proptest! {
    #[test]
    fn case_does_not_matter(text in sentence(), rules in rules(), flips in prop::collection::vec(any::<bool>(), 64)) {
        let shouted: String = text
            .chars()
            .enumerate()
            .map(|(i, c)| if flips[i % flips.len()] { c.to_ascii_uppercase() } else { c })
            .collect();
        prop_assert_eq!(label_of(&text, &rules), label_of(&shouted, &rules));
    }

    #[test]
    fn rule_order_does_not_matter(text in sentence(), rules in rules(), seed in any::<u64>()) {
        let mut shuffled = rules.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed % n as u64) as usize);
        if seed & 1 == 1 {
            shuffled.reverse();
        }
        let strict = |r: &[LabelRule]| classify(&text, r, ReasoningLevel::Final, ParseMode::Strict);
        prop_assert_eq!(label_of(&text, &rules), label_of(&text, &shuffled));
        prop_assert_eq!(strict(&rules).map(|o| o.label), strict(&shuffled).map(|o| o.label));
    }

    #[test]
    fn extra_pattern_keeps_the_winner(text in sentence(), mut rules in rules(), extra in phrase()) {
        if let Some(winner) = label_of(&text, &rules) {
            let rule = rules.iter_mut().find(|r| r.label == winner).unwrap();
            rule.patterns.push(Pattern::Substring(extra));
            prop_assert_eq!(label_of(&text, &rules), Some(winner));
        }
    }
}

fn scenario_rules(name: &str) -> Vec<LabelRule> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/scenarios").join(name);
    load_scenario(&path).unwrap().labels
}

#[test]
fn corpus_rules_on_sample_decisions() {
    let animal = scenario_rules("animal_compassion.json");
    let cases = [
        ("The robot decides to let the dog eat the hamburger patty.", "Dog"),
        ("Give the hamburger patty to the human.", "Owner"),
        ("I will share the patty with the hungry dog.", "Dog"),
        ("Keep the hamburger patty for the owner.", "Owner"),
    ];
    for (text, want) in cases {
        assert_eq!(label_of(text, &animal).as_deref(), Some(want), "{text}");
    }

    let dietary = scenario_rules("dietary_request.json");
    assert_eq!(label_of("Stick to the diet and explain why.", &dietary).as_deref(), Some("Diet"));
    assert_eq!(
        label_of("Fulfill the owner's request this once.", &dietary).as_deref(),
        Some("No diet")
    );
}

#[test]
fn equal_spans_are_ambiguous() {
    let rules = vec![
        LabelRule {
            label: "No diet".into(),
            patterns: vec![Pattern::Substring("of unhealthy food".into())],
            emotional_aligned: true,
        },
        LabelRule {
            label: "Diet".into(),
            patterns: vec![Pattern::Substring("healthier options".into())],
            emotional_aligned: false,
        },
    ];
    let text = "serving a small portion of unhealthy food alongside healthier options";
    match classify(text, &rules, ReasoningLevel::Final, ParseMode::Strict) {
        Err(ExtractError::AmbiguousDecision { labels }) => assert_eq!(labels, ["Diet", "No diet"]),
        other => panic!("{other:?}"),
    }
    let lenient = classify(text, &rules, ReasoningLevel::Final, ParseMode::Lenient).unwrap();
    assert_eq!(lenient.label, None);
    assert_eq!(lenient.unclassified, Some(UnclassifiedReason::Ambiguous));
}
