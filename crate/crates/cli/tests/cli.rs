use std::path::Path;
use std::process::{Command, Output};

use nmvec::{expected_counts, KernelConfig, Shape, SparsityPattern};
use serde_json::Value;

fn nmvec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmvec")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_matches_golden() {
    let o = nmvec(&["run", "--workload", "fixture-128", "--algorithm", "alg3s", "--unroll", "1,1", "--json"]);
    assert_eq!(code(&o), 0);
    let golden: Value = serde_json::from_str(include_str!("golden/run_alg3s_fixture.json")).unwrap();
    assert_eq!(json(&o), golden);
}

#[test]
fn run_counts_agree_with_closed_form() {
    let o = nmvec(&["run", "--rows", "24", "--k", "64", "--cols", "40", "--pattern", "2:4", "--vl", "8",
        "--algorithm", "alg6-unrolled", "--unroll", "4,2", "--json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["oracle_ok"], true);
    let config = KernelConfig::proposed(4, 2);
    let want = expected_counts(Shape::new(24, 64, 40), SparsityPattern::new(2, 4).unwrap(), &config, 8).unwrap();
    let want = serde_json::to_value(want).unwrap();
    for (k, w) in want.as_object().unwrap() {
        if k != "mem_lines_touched" {
            assert_eq!(&v["stats"][k], w, "{k}");
        }
    }
    assert_eq!(v["mem_elements"], v["stats"]["mem_elements_loaded"].as_u64().unwrap() + v["stats"]["mem_elements_stored"].as_u64().unwrap());
}

#[test]
fn every_algorithm_and_dtype_verifies() {
    for alg in ["dense1", "dense2", "dense3", "alg1s", "alg2s", "alg3s", "alg3s-unrolled", "alg3s-fc", "alg5", "alg6", "alg6-unrolled"] {
        for dtype in ["i32", "i64", "f32", "f64"] {
            let o = nmvec(&["run", "--rows", "9", "--k", "32", "--cols", "21", "--vl", "8", "--algorithm", alg,
                "--dtype", dtype, "--unroll", "2,2", "--json"]);
            assert_eq!(code(&o), 0, "{alg} {dtype}: {}", String::from_utf8_lossy(&o.stderr));
            assert_eq!(json(&o)["oracle_ok"], true, "{alg} {dtype}");
        }
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&nmvec(&["run", "--vl", "12"])), 3);
    assert_eq!(code(&nmvec(&["run", "--algorithm", "alg3s-unrolled", "--unroll", "16,16"])), 3);
    assert_eq!(code(&nmvec(&["run", "--algorithm", "alg6", "--tile-rows", "6"])), 3);
    assert_eq!(code(&nmvec(&["run", "--workload", "no-such-layer"])), 3);
    assert_eq!(code(&nmvec(&["run", "--unroll", "x"])), 3);
    assert_eq!(code(&nmvec(&["run", "--pattern", "5:4"])), 2);
    assert_eq!(code(&nmvec(&["info", "/nonexistent/file"])), 2);
    assert_eq!(code(&nmvec(&["run", "--weights", "/nonexistent/weights"])), 2);
    let o = nmvec(&["run", "--rows", "4", "--k", "8", "--cols", "4", "--verify", "off", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["oracle_ok"], Value::Null);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# small run\nrows = 8\nk = 16\ncols = 8\nvl = 4\njson\n").unwrap();
    let v = json(&nmvec(&["run", "--config", path(&cfg), "--vl", "8"]));
    assert_eq!(v["spec"]["rows"], 8);
    assert_eq!(v["spec"]["vl"], 8);
    let v = json(&nmvec(&["run", "--vl", "8", "--config", path(&cfg)]));
    assert_eq!(v["spec"]["vl"], 8);
    std::fs::write(&cfg, "bad key = 1\n").unwrap();
    assert_eq!(code(&nmvec(&["run", "--config", path(&cfg)])), 2);
}

#[test]
fn weights_profiles_and_files() {
    let base = ["run", "--rows", "8", "--k", "16", "--cols", "8", "--json"];
    let unit = json(&nmvec(&base));
    assert_eq!(unit["cost"].as_f64().unwrap(), unit["stats"]["total_instructions"].as_f64().unwrap());
    let traffic = json(&nmvec(&[&base[..], &["--weights", "traffic"]].concat()));
    assert!(traffic["cost"].as_f64().unwrap() > unit["cost"].as_f64().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.weights");
    std::fs::write(&w, "element_load = 1\n").unwrap();
    let loads = json(&nmvec(&[&base[..], &["--weights", path(&w)]].concat()));
    assert_eq!(loads["cost"].as_f64().unwrap(), loads["stats"]["mem_elements_loaded"].as_f64().unwrap());
}

#[test]
fn trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("trace.tsv");
    let o = nmvec(&["run", "--rows", "3", "--k", "8", "--cols", "5", "--vl", "4", "--algorithm", "alg5", "--tile-rows", "8",
        "--trace", path(&t), "--json"]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&t).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, json(&o)["stats"]["total_instructions"].as_u64().unwrap());
    for l in &lines {
        let f: Vec<&str> = l.split('\t').collect();
        assert_eq!(f.len(), 3, "{l}");
        assert!(f[2].parse::<usize>().unwrap() <= 4);
    }
    assert!(lines.iter().any(|l| l.starts_with("vindexmac\t")));
}

#[test]
fn csv_and_text_output() {
    let o = nmvec(&["run", "--rows", "8", "--k", "16", "--cols", "8", "--csv"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("name,line,workload"));
    assert!(lines[1].contains(",ok,"));
    let text = stdout(&nmvec(&["run", "--rows", "8", "--k", "16", "--cols", "8"]));
    assert!(text.contains("oracle: ok"));
    assert_eq!(code(&nmvec(&["run", "--csv", "--json"])), 2);
}

#[test]
fn bench_suite() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.suite");
    let out = dir.path().join("out.csv");
    std::fs::write(&suite, "").unwrap();
    let o = nmvec(&["bench", "--suite", path(&suite)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);

    std::fs::write(
        &suite,
        "name=base algorithm=alg3s-unrolled unroll=4,4 rows=16 k=32 cols=16|24 pattern=1:4|2:4\n\
         name=cand baseline=base algorithm=alg6-unrolled unroll=4,2 rows=16 k=32 cols=16|24 pattern=1:4|2:4\n",
    )
    .unwrap();
    let o = nmvec(&["bench", "--suite", path(&suite), "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[..8].iter().all(|x| &x[13] == "ok"));
    assert!(rows[4..8].iter().all(|x| x[19].parse::<f64>().unwrap() > 0.0));
    assert_eq!(&rows[8][13], "geomean");
    assert_eq!(&rows[8][0], "cand");

    std::fs::write(&suite, "rows=8 k=16 cols=8\nvl=12\n").unwrap();
    let o = nmvec(&["bench", "--suite", path(&suite)]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout(&o).lines().count(), 3);

    std::fs::write(&suite, "rows\n").unwrap();
    assert_eq!(code(&nmvec(&["bench", "--suite", path(&suite)])), 2);
}

#[test]
fn shipped_suite_parses() {
    let text = include_str!("../../../config/compare.suite");
    assert!(text.lines().any(|l| l.contains("baseline=")));
}

#[test]
fn multicore_digests_agree() {
    let o = nmvec(&["multicore", "--rows", "12", "--k", "32", "--cols", "70", "--vl", "8", "--cores", "1,2,3",
        "--algorithm", "alg6-unrolled"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["digests_match"], true);
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 3);
    for run in runs {
        assert_eq!(run["oracle_ok"], true);
        let per_core = run["per_core"].as_array().unwrap();
        assert_eq!(per_core.len() as u64, run["cores"].as_u64().unwrap());
        let sum: u64 = per_core.iter().map(|c| c["stats"]["total_instructions"].as_u64().unwrap()).sum();
        assert_eq!(sum, run["merged"]["total_instructions"].as_u64().unwrap());
    }
    assert_eq!(code(&nmvec(&["multicore", "--cores", "0"])), 3);
}

#[test]
fn gen_prune_info() {
    let dir = tempfile::tempdir().unwrap();
    let dense = dir.path().join("a.ssdm");
    let sparse = dir.path().join("a.ssnm");
    assert_eq!(code(&nmvec(&["gen", "--rows", "6", "--cols", "10", "--dtype", "f64", "--out", path(&dense)])), 0);
    let info = json(&nmvec(&["info", path(&dense), "--json"]));
    assert_eq!((info["kind"].as_str(), info["rows"].as_u64(), info["cols"].as_u64()), (Some("dense"), Some(6), Some(10)));

    let o = nmvec(&["prune", "--input", path(&dense), "--pattern", "2:4", "--out", path(&sparse)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("18 blocks of 2:4"));
    let info = json(&nmvec(&["info", path(&sparse), "--json"]));
    assert_eq!(info["pattern"], "2:4");
    assert_eq!(info["cols"], 12);
    assert_eq!(info["stored_slots"], 36);
    assert_eq!(info["dtype"], "f64");

    let csv = dir.path().join("b.csv");
    std::fs::write(&csv, "1,0,0,2\n0,3,4,0\n").unwrap();
    let o = nmvec(&["prune", "--input", path(&csv), "--pattern", "1:4", "--out", path(&sparse)]);
    assert!(stdout(&o).contains("2 over-full, 2 of 4 non-zeros dropped"), "{}", stdout(&o));
    assert_eq!(json(&nmvec(&["info", path(&sparse), "--json"]))["nonzeros"], 2);

    let pre = dir.path().join("p.ssnm");
    assert_eq!(code(&nmvec(&["gen", "--rows", "4", "--cols", "8", "--pattern", "1:4", "--out", path(&pre)])), 0);
    assert_eq!(json(&nmvec(&["info", path(&pre), "--json"]))["density"], 0.25);
    assert_eq!(code(&nmvec(&["prune", "--input", path(&pre), "--pattern", "1:4", "--out", path(&sparse)])), 2);
    assert_eq!(code(&nmvec(&["info", path(&csv)])), 2);
}
