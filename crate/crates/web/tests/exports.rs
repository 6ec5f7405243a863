use privsearch_web::{converse, figure1, prop5};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn figure1_rows() {
    let rows = parse(figure1(10, "2, 5"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 18);
    let last = &rows[17];
    assert_eq!((last["K"].as_u64(), last["N"].as_u64()), (Some(10), Some(5)));
    assert!((last["normalized_bound"].as_f64().unwrap() - 1.2389324517).abs() < 1e-9);
}

#[test]
fn figure1_rejects_bad_input() {
    assert!(figure1(10, "2,x").is_err());
    assert!(figure1(1, "2").is_err());
    assert!(figure1(100_000, "2").is_err());
}

#[test]
fn converse_for_builtins() {
    let v = parse(converse("exact", 3, 0, 2));
    assert!((v["report"]["normalized_bound"].as_f64().unwrap() - 1.3629912289).abs() < 1e-9);
    assert!(v["achievable_rate"].as_f64().unwrap() <= v["rate_upper_bound"].as_f64().unwrap());

    let v = parse(converse("nested", 1000, 300, 3));
    assert_eq!(v["label"], "nested");
    assert!(converse("circular", 9, 0, 2).is_err());
    assert!(converse("square", 9, 0, 2).is_err());
}

#[test]
fn prop5_arcs() {
    let v = parse(prop5(8));
    assert_eq!(v["scan"]["argmax"], serde_json::json!([1, 2, 3]));
    let arcs = v["best_arcs"].as_array().unwrap();
    assert_eq!(arcs.len(), 3);
    assert_eq!(arcs[0]["members"], serde_json::json!([2, 3, 4, 5]));
    assert_eq!(v["quarter_arcs"][1]["index"], 3);
}
