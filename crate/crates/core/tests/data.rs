use proptest::prelude::*;

use seam_core::fixtures;
use seam_core::language::VocabularyDocument;
use seam_core::metrics::{self, parse_profile, vlm_comprehensibility, TaskOutcome};
use seam_core::retrieval::{levenshtein, normalize, PartDatabase};

#[test]
fn profiles_round_trip_through_json() {
    for doc in fixtures::profile_documents() {
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: VocabularyDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let profile = parse_profile(&text, &doc.name).unwrap();
        assert_eq!(profile.name, doc.name);
        assert_eq!(profile.has_host_escape, doc.host_escape);
    }
}

#[test]
fn judgment_counts_match_the_hand_tallies() {
    let corpus = fixtures::judgment_corpus();
    assert_eq!(corpus.task_count, 33);
    assert_eq!(fixtures::tasks().tasks.len(), 33);
    for method in &corpus.methods {
        assert_eq!(method.judgments.len(), 33, "{}", method.method);
        let n = method.judgments.iter().filter(|j| j.success).count();
        assert_eq!(n, method.hand_count, "{}", method.method);
    }
    assert_eq!(corpus.method("seam").unwrap().hand_count, 23);
}

#[test]
fn shipped_part_database_is_valid() {
    let db = fixtures::part_database();
    db.validate().unwrap();
    let hit = db.retrieve("Cup Edge").unwrap();
    assert_eq!(hit.entry.canonical_phrase(), "cup opening");
    assert_eq!(hit.distance, 0);
}

fn outcomes(bits: &[bool]) -> Vec<TaskOutcome> {
    bits.iter().enumerate().map(|(task, &success)| TaskOutcome { task: task + 1, success }).collect()
}

proptest! {
    #[test]
    fn comprehensibility_is_a_fraction(bits in prop::collection::vec(any::<bool>(), 1..80)) {
        let vc = vlm_comprehensibility(&outcomes(&bits)).unwrap();
        prop_assert!((0.0..=1.0).contains(&vc));
        let n = bits.iter().filter(|b| **b).count();
        prop_assert_eq!(vc, n as f64 / bits.len() as f64);
    }

    #[test]
    fn retrieval_is_deterministic_and_minimal(desc in "[a-z ]{0,16}") {
        let db = fixtures::part_database();
        let a = db.retrieve(&desc).unwrap();
        let b = db.retrieve(&desc).unwrap();
        prop_assert_eq!(a.index, b.index);
        prop_assert_eq!(a.matched_phrase, b.matched_phrase);
        let best = db
            .entries
            .iter()
            .flat_map(|e| e.key_phrases.iter())
            .map(|p| levenshtein(&normalize(&desc), &normalize(p)))
            .min()
            .unwrap();
        prop_assert_eq!(a.distance, best);
    }

    #[test]
    fn retrieval_ignores_entry_copies(desc in "[a-z ]{0,16}") {
        let db = fixtures::part_database();
        let mut doubled = db.entries.clone();
        doubled.extend(db.entries.clone());
        let doubled = PartDatabase::new(doubled).unwrap();
        prop_assert_eq!(db.retrieve(&desc).unwrap().index, doubled.retrieve(&desc).unwrap().index);
    }
}

#[test]
fn metrics_rows_are_sorted_and_bounded() {
    let mut profiles: Vec<_> = fixtures::profile_documents()
        .iter()
        .map(|d| metrics::RepresentationProfile::from_document(d).unwrap())
        .collect();
    let corpus = fixtures::judgment_corpus();
    corpus.attach(&mut profiles);
    let rows = metrics::rows(&profiles, corpus.task_count).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.ag <= 1.0 && (0.0..=1.0).contains(&r.vc));
    }
    assert_eq!(metrics::to_csv(&rows), metrics::to_csv(&rows.clone()));
}
