use std::path::PathBuf;
use std::process::{Command, Output};

fn treechain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treechain"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("treechain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn star4_files_give_the_exact_measure() {
    let o = treechain(&[
        "--no-timestamp", "invariant", "--tree", "fixtures/star4.json",
        "--kernel", "fixtures/star4.kernel.json", "--exact", "--depth", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# treechain "));
    assert!(text.contains("# config_sha256: "));
    assert!(!text.contains("# timestamp"));
    assert_eq!(
        data_rows(&text),
        ["node,depth,value_num,value_den", "∅,0,20,77", "0,1,15,77", "1,1,12,77", "2,1,30,77"]
    );
}

#[test]
fn shorthand_star4_matches_the_files() {
    let a = treechain(&["--no-timestamp", "invariant", "--tree", "star4", "--kernel", "star4", "--exact", "--depth", "1"]);
    let b = treechain(&[
        "--no-timestamp", "invariant", "--method", "leaf", "--tree", "fixtures/star4.json",
        "--kernel", "fixtures/star4.kernel.json", "--exact", "--depth", "1",
    ]);
    assert_eq!(data_rows(&stdout(&a)), data_rows(&stdout(&b)));
}

#[test]
fn birth_death_verdicts() {
    let pr = stdout(&treechain(&["classify", "--tree", "line", "--kernel", "bd:down=2/3"]));
    assert!(pr.contains("PositiveRecurrent"), "{pr}");
    let tr = stdout(&treechain(&["classify", "--tree", "line", "--kernel", "bd:down=1/3"]));
    assert!(tr.contains("Transient"), "{tr}");
    let null: serde_json::Value =
        serde_json::from_str(&stdout(&treechain(&["classify", "--tree", "line", "--kernel", "bd:down=1/2"]))).unwrap();
    assert_eq!(null["result"]["positive_recurrence"]["outcome"], "NotPositiveRecurrent");
    assert_ne!(null["result"]["recurrence"]["outcome"], "Transient");
}

#[test]
fn missing_file_is_a_usage_error_and_writes_nothing() {
    let out = scratch("missing.csv");
    let o = treechain(&[
        "--out", out.to_str().unwrap(), "invariant", "--tree", "star4", "--kernel", "no/such/file.json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_shorthand_is_a_usage_error() {
    let o = treechain(&["invariant", "--tree", "line", "--kernel", "nonsense:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_error_is_reported_as_json() {
    let o = treechain(&["invariant", "--tree", "line", "--kernel", "uniform"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"]["kind"].is_string());
    assert!(err["error"]["message"].is_string());
    assert!(o.stdout.is_empty());
}

#[test]
fn seeded_runs_do_not_depend_on_threads() {
    let runs = |jobs: &str| {
        stdout(&treechain(&[
            "--no-timestamp", "--jobs", jobs, "sb", "--family", "r=1/4,l=1/4,p=1/2",
            "--start", "7/5", "--runs", "40", "--steps", "5000", "--seed", "9",
        ]))
    };
    assert_eq!(runs("1"), runs("4"));
    let gw = |jobs: &str| {
        stdout(&treechain(&[
            "--no-timestamp", "--jobs", jobs, "gw", "--law", "0:1/2,2:1/2", "--F", "1/2",
            "--G", "1/4", "--simulate", "8", "--spine", "30", "--seed", "2",
        ]))
    };
    assert_eq!(gw("1"), gw("3"));
}

#[test]
fn out_file_matches_stdout() {
    let out = scratch("green.csv");
    let args = ["green", "--tree", "star4", "--kernel", "star4", "--exact", "--x", "1/2"];
    let direct = treechain(&[&["--no-timestamp"][..], &args[..]].concat());
    let o = treechain(&[&["--no-timestamp", "--out", out.to_str().unwrap()][..], &args[..]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&direct.stdout).unwrap();
    assert_eq!(doc["result"]["value"], "160/137");
}

#[test]
fn selftest_runs_one_criterion() {
    let o = treechain(&["selftest", "--only", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS criterion 1"));
}
