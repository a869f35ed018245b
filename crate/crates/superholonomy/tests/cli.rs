use std::path::PathBuf;
use std::process::Command;

fn models() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../models"))
}

fn run(args: &[&str], model: &str, out: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_superholonomy"))
        .args(args)
        .arg("--model")
        .arg(models().join(model))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superholonomy-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn every_command_is_deterministic_and_passes() {
    let cases: &[(&[&str], &str)] = &[
        (&["curvature"], "example.model"),
        (&["transport"], "mixed.model"),
        (&["transport"], "bodied.model"),
        (&["holonomy"], "rank11.model"),
        (&["compare", "--kmax", "3"], "product.model"),
        (&["twofold"], "product.model"),
        (&["derham-wu"], "product_metric.model"),
        (&["fppf", "audit"], "cover.model"),
        (&["fppf", "glue"], "cover.model"),
    ];
    for (i, (args, model)) in cases.iter().enumerate() {
        let (a, b) = (tmp(&format!("a{i}.json")), tmp(&format!("b{i}.json")));
        let ra = run(args, model, &a);
        let rb = run(args, model, &b);
        assert_eq!(ra.status.code(), Some(0), "{args:?} {model}: {}", String::from_utf8_lossy(&ra.stderr));
        assert_eq!(rb.status.code(), Some(0));
        let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
        assert_eq!(ta, tb, "{args:?} {model}");
        let v: serde_json::Value = serde_json::from_str(&ta).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["command"], args[..args.len().min(2)].iter().filter(|s| !s.starts_with("--")).copied().collect::<Vec<_>>().join(" "));
    }
}

#[test]
fn rationals_and_terms_are_strings_and_sorted_lists() {
    let out = tmp("curv.json");
    assert!(run(&["curvature"], "example.model", &out).status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let entry = &v["results"]["components"][0]["matrix"][0][0];
    assert_eq!(entry, &serde_json::json!([{"coeff": "2/1", "indices": [1, 2]}]));
    assert_eq!(v["generators"][0], "etaS1");
}

#[test]
fn overrides_reach_the_report() {
    let out = tmp("ov.json");
    assert!(run(&["compare", "--lprime", "5", "--kmax", "2", "--seed", "11"], "example.model", &out).status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["parameters"], serde_json::json!({"kmax": 2, "lprime": 5, "seed": 11}));
}

#[test]
fn errors_exit_two_with_a_code() {
    let out = tmp("err.json");
    let r = run(&["derham-wu"], "example.model", &out);
    assert_eq!(r.status.code(), Some(2));
    let e: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&r.stderr).trim()).unwrap();
    assert_eq!(e["error"], "invalid");
    let r = run(&["curvature"], "missing.model", &out);
    assert_eq!(r.status.code(), Some(2));
}
