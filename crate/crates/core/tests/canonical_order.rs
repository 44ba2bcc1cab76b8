//! Canonical output order of problem documents.

#[test]
fn problem_fields_in_declaration_order() {
    let p = pathgain::fixtures::butterfly();
    let text = serde_json::to_string(&p.to_json()).unwrap();
    let nodes = text.find("\"nodes\"").unwrap();
    let edges = text.find("\"edges\"").unwrap();
    let sources = text.find("\"sources\"").unwrap();
    let sinks = text.find("\"sinks\"").unwrap();
    assert!(nodes < edges && edges < sources && sources < sinks, "{}", text);
}
