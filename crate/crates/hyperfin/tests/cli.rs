//! End-to-end tests of the command-line interface, run against the
//! compiled binary.

mod common;

use common::{build_full_fixture, build_overlap_only_fixture, run_bin, stderr_of, stdout_of};

fn config_arg(fixture: &common::Fixture) -> String {
    fixture.config().to_str().unwrap().to_string()
}

#[test]
fn extract_writes_the_signal_matrix() {
    let fixture = build_full_fixture();
    let out = run_bin(["extract", "--config", &config_arg(&fixture)]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let csv = std::fs::read_to_string(fixture.file("signals.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 91); // header + 90 records
    assert_eq!(lines[0].split(',').count(), 51);
    assert!(lines[0].starts_with("term,g0_0,"));
    assert!(lines[0].ends_with("g4_9"));

    // the first record is Alpha Bonds: overlap, both 2-hop graphs, the
    // 1-hop graph, and the embedding group all flag class 2
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "Alpha Bonds");
    for group in 0..5 {
        assert_eq!(first[1 + group * 10 + 2], "1", "group {group}");
    }

    let diag = stdout_of(&out);
    assert!(diag.contains("linked[wikidata]: 90/90"), "{diag}");
    assert!(diag.contains("embedding coverage"), "{diag}");
}

#[test]
fn extract_is_byte_identical_across_runs() {
    let fixture = build_full_fixture();
    assert_eq!(run_bin(["extract", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let first = std::fs::read(fixture.file("signals.csv")).unwrap();
    assert_eq!(run_bin(["extract", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let second = std::fs::read(fixture.file("signals.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn extract_of_an_empty_dataset_writes_a_header_only_csv() {
    let fixture = build_overlap_only_fixture();
    std::fs::write(fixture.file("dataset.json"), "[]").unwrap();
    let out = run_bin(["extract", "--config", &config_arg(&fixture)]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(fixture.file("signals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn missing_resource_exits_2_and_names_the_path() {
    let fixture = build_full_fixture();
    std::fs::remove_file(fixture.file("embeddings.txt")).unwrap();
    let out = run_bin(["extract", "--config", &config_arg(&fixture)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("embeddings.txt"), "{}", stderr_of(&out));
}

#[test]
fn usage_errors_exit_1() {
    let fixture = build_full_fixture();
    let out = run_bin(["extract", "--config", &config_arg(&fixture), "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_bin(["not-a-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_reports_loss_and_five_weight_sums() {
    let fixture = build_full_fixture();
    assert_eq!(run_bin(["extract", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let out = run_bin(["train", "--config", &config_arg(&fixture)]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(fixture.file("model.json").is_file());

    let stdout = stdout_of(&out);
    let loss_line = stdout
        .lines()
        .find(|l| l.starts_with("final training loss:"))
        .expect("loss line present");
    let loss: f64 = loss_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(loss.is_finite());

    let sums_line = stdout
        .lines()
        .find(|l| l.starts_with("group weight sums:"))
        .expect("weight sums line present");
    let sums: Vec<f64> = sums_line
        .trim_start_matches("group weight sums:")
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(sums.len(), 5);
    assert!(sums.iter().all(|s| *s >= 0.0));
}

#[test]
fn train_is_byte_identical_across_runs() {
    let fixture = build_full_fixture();
    assert_eq!(run_bin(["extract", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    assert_eq!(run_bin(["train", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let first = std::fs::read(fixture.file("model.json")).unwrap();
    assert_eq!(run_bin(["train", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let second = std::fs::read(fixture.file("model.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn predict_ranks_bonds_first_for_an_overlap_term() {
    // model trained on the overlap-only toy, per the end-to-end example
    let fixture = build_overlap_only_fixture();
    assert_eq!(run_bin(["train", "--config", &config_arg(&fixture)]).status.code(), Some(0));

    let out_path = fixture.file("predictions.json");
    let out = run_bin([
        "predict",
        "--config",
        &config_arg(&fixture),
        "--out",
        out_path.to_str().unwrap(),
        "Supranational Bond",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["term"], "Supranational Bond");
    assert_eq!(rows[0]["ranked_labels"][0], "Bonds");
    assert_eq!(rows[0]["ranked_labels"].as_array().unwrap().len(), 10);
    assert_eq!(rows[0]["scores"].as_array().unwrap().len(), 10);
    let scores: Vec<f64> = rows[0]["scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn predict_with_no_terms_outputs_an_empty_array() {
    let fixture = build_overlap_only_fixture();
    assert_eq!(run_bin(["train", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let out = run_bin(["predict", "--config", &config_arg(&fixture)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out).trim(), "[]");
}

#[test]
fn predict_reads_terms_from_a_json_file() {
    let fixture = build_overlap_only_fixture();
    assert_eq!(run_bin(["train", "--config", &config_arg(&fixture)]).status.code(), Some(0));
    let terms_path = fixture.file("terms.json");
    std::fs::write(&terms_path, r#"["green bonds", "plain vanilla swap"]"#).unwrap();
    let out = run_bin([
        "predict",
        "--config",
        &config_arg(&fixture),
        "--terms-file",
        terms_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["ranked_labels"][0], "Bonds");
    assert_eq!(json[1]["ranked_labels"][0], "Swap");
}

#[test]
fn predict_without_a_model_exits_2() {
    let fixture = build_overlap_only_fixture();
    let out = run_bin(["predict", "--config", &config_arg(&fixture), "term"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_writes_report_and_weight_matrix() {
    let fixture = build_full_fixture();
    let out_dir = fixture.file("reports");
    let out = run_bin([
        "evaluate",
        "--config",
        &config_arg(&fixture),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--repeats",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let report = std::fs::read_to_string(out_dir.join("eval_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "left_out_group,mean_accuracy,mean_rank");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "Submission");
    // the ceiling toy: accuracy 1, mean rank 1
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 1.0);

    let weights = std::fs::read_to_string(out_dir.join("weight_matrix.csv")).unwrap();
    let lines: Vec<&str> = weights.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|l| l.split(',').count() == 11));
}

#[test]
fn ablate_writes_seven_rows() {
    let fixture = build_full_fixture();
    let out_dir = fixture.file("reports");
    let out = run_bin([
        "ablate",
        "--config",
        &config_arg(&fixture),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--repeats",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let table = std::fs::read_to_string(out_dir.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[1].starts_with("Submission,"));
    assert!(lines[2].starts_with("No SMOTE,"));
    assert!(lines[3].starts_with("Word Overlap,"));
    assert!(lines[7].starts_with("ALOD RDF2vec,"));
    assert!(out_dir.join("weight_matrix.csv").is_file());
}

#[test]
fn fetch_cache_serves_a_warm_cache_without_network() {
    let fixture = build_full_fixture();
    // pre-populate the cache entry for this key by computing its digest
    // through the library
    let cache = hyperfin::sparql::SparqlCache::new(fixture.file("cache")).unwrap();
    std::fs::write(
        cache.path_for("hypernyms:Q25323628"),
        "?s\t?p\t?o\n<http://x/a>\t<http://x/p>\t<http://x/b>\n",
    )
    .unwrap();
    let out = run_bin([
        "fetch-cache",
        "--config",
        &config_arg(&fixture),
        "--key",
        "hypernyms:Q25323628",
        "--query",
        "SELECT ?s ?p ?o WHERE { ?s ?p ?o }",
        "--endpoint",
        "http://unreachable.invalid/sparql",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("1 triple(s)"));
}

#[test]
fn fetch_cache_cold_without_network_exits_2() {
    let fixture = build_full_fixture();
    let out = run_bin([
        "fetch-cache",
        "--config",
        &config_arg(&fixture),
        "--key",
        "nope",
        "--query",
        "SELECT ?s ?p ?o WHERE { ?s ?p ?o }",
        "--endpoint",
        "http://unreachable.invalid/sparql",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("network access is disabled"));
}
