use irf_demo::ops::{decay_curve, next_question, rerank, DecayInput, QuestionInput, RerankInput};
use serde_json::json;

fn catalog() -> serde_json::Value {
    json!([
        {"item_id": "a", "title": "Alpha", "features": [{"category": "genre", "value": "comedy"}]},
        {"item_id": "b", "title": "Beta", "features": [{"category": "genre", "value": "drama"}]},
        {"item_id": "c", "title": "Gamma", "features": [{"category": "genre", "value": "comedy"}, {"category": "genre", "value": "drama"}]},
        {"item_id": "d", "title": "Delta", "features": [{"category": "genre", "value": "horror"}]}
    ])
}

fn rerank_input(alpha: f64, prefs: serde_json::Value) -> RerankInput {
    serde_json::from_value(json!({
        "catalog": catalog(),
        "scores": [{"item_id": "b", "score": 4.0}, {"item_id": "d", "score": 3.0}, {"item_id": "c", "score": 2.0}, {"item_id": "a", "score": 1.0}],
        "preferences": prefs,
        "alpha": alpha,
    }))
    .unwrap()
}

#[test]
fn alpha_one_keeps_upstream_order() {
    let rows = rerank(rerank_input(1.0, json!({"genre=comedy": 1.0}))).unwrap();
    let ids: Vec<_> = rows.iter().map(|r| r.item_id.as_str()).collect();
    assert_eq!(ids, ["b", "d", "c", "a"]);
    assert!(rows.iter().all(|r| r.rank == r.upstream_rank));
    assert_eq!(rows[0].title, "Beta");
}

#[test]
fn content_only_follows_preferences() {
    let rows = rerank(rerank_input(0.0, json!({"genre=comedy": 1.0}))).unwrap();
    assert_eq!(rows[0].item_id, "a");
    assert_eq!(rows[0].final_score, 1.0);
    assert_eq!(rows[0].upstream_rank, 4);
}

#[test]
fn rerank_rejects_bad_input() {
    assert!(rerank(rerank_input(1.5, json!({}))).is_err());
    assert!(rerank(rerank_input(0.5, json!({"comedy": 1.0}))).is_err());
    assert!(rerank(rerank_input(0.5, json!({"genre=comedy": 2.0}))).is_err());
}

#[test]
fn question_splits_candidates_evenly() {
    let input: QuestionInput = serde_json::from_value(json!({"candidates": catalog()})).unwrap();
    let out = next_question(input).unwrap();
    let q = out.question.unwrap();
    // comedy and drama both split 2/2; comedy wins the tie.
    assert_eq!(q.feature.as_str(), "genre=comedy");
    assert!((q.gain - 1.0).abs() < 1e-12);
    assert_eq!(out.gains.len(), 3);
    assert_eq!(out.gains[2].feature.as_str(), "genre=horror");
    assert!((out.gains[2].gain - 0.811_278_124_459_132_9).abs() < 1e-12);
}

#[test]
fn asked_features_are_skipped() {
    let input: QuestionInput =
        serde_json::from_value(json!({"candidates": catalog(), "asked": ["genre=comedy"]})).unwrap();
    let out = next_question(input).unwrap();
    assert_eq!(out.question.unwrap().feature.as_str(), "genre=drama");
    assert!(out.gains.iter().all(|g| g.feature.as_str() != "genre=comedy"));
}

#[test]
fn decay_curve_matches_exponential_until_pruned() {
    let pts = decay_curve(DecayInput {
        weight: 0.8,
        lambda: 0.1,
        days: 100,
        step: 10,
    })
    .unwrap();
    assert_eq!(pts.len(), 11);
    assert_eq!(pts[0].weight, 0.8);
    assert!((pts[1].weight - 0.8 * (-1.0f64).exp()).abs() < 1e-12);
    // 0.8 e^{-t/10} crosses the 1e-3 prune threshold near day 66.9
    assert!(pts[6].weight > 0.0);
    assert_eq!(pts[7].weight, 0.0);
    assert!(pts.windows(2).all(|w| w[1].weight.abs() <= w[0].weight.abs()));
}

#[test]
fn decay_curve_keeps_sign() {
    let pts = decay_curve(DecayInput {
        weight: -0.5,
        lambda: 0.01,
        days: 30,
        step: 1,
    })
    .unwrap();
    assert!(pts.iter().all(|p| p.weight < 0.0));
    assert!(decay_curve(DecayInput {
        weight: 0.5,
        lambda: 0.01,
        days: 3,
        step: 0
    })
    .is_err());
}
