use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use chatfuzz::cli::Cli;
use chatfuzz::coverage::EdgeId;
use chatfuzz::harness::{default_seeds, lookup};
use clap::CommandFactory;

fn chatfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chatfuzz"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn seed_dir(target: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (i, s) in default_seeds(target).unwrap().iter().enumerate() {
        std::fs::write(dir.path().join(format!("seed{i}")), s).unwrap();
    }
    dir
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases: [(&[&str], &str); 6] = [
        (&["--help"], "help.txt"),
        (&["fuzz", "--help"], "fuzz-help.txt"),
        (&["cmin", "--help"], "cmin-help.txt"),
        (&["sweep", "--help"], "sweep-help.txt"),
        (&["ablate", "--help"], "ablate-help.txt"),
        (&["report", "--help"], "report-help.txt"),
    ];
    for (args, file) in cases {
        let out = chatfuzz(args);
        assert_eq!(code(&out), 0);
        let want = std::fs::read_to_string(golden.join(file)).unwrap();
        assert_eq!(String::from_utf8_lossy(&out.stdout), want, "{file}");
    }
}

#[test]
fn help_lists_every_flag() {
    for sub in Cli::command().get_subcommands() {
        let name = sub.get_name();
        if name == "help" {
            continue;
        }
        let text = String::from_utf8(chatfuzz(&[name, "--help"]).stdout).unwrap();
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(text.contains(&format!("--{long}")), "{name} help misses --{long}");
            }
        }
    }
}

#[test]
fn fuzz_happy_path_then_report() {
    let seeds = seed_dir("toy-xml");
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("run");
    let o = chatfuzz(&[
        "fuzz", "--target", "toy-xml", "--in", p(seeds.path()), "--out", p(&out), "--baseline", "chatfuzz",
        "--provider", "mock", "--duration", "5", "--clock", "virtual", "--seed", "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("stats.json").is_file());
    assert!(std::fs::read_dir(out.join("queue")).unwrap().count() >= default_seeds("toy-xml").unwrap().len());

    let r = chatfuzz(&["report", "--out", p(root.path())]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let csv = std::fs::read_to_string(root.path().join("campaign.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "target,config,duration_s,edges,queue_len,imported_ai,import_ratio,valid_ratio_queue");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("toy-xml,ChatFuzz,5"));
}

#[test]
fn missing_in_is_usage_error() {
    let out = tempfile::tempdir().unwrap();
    let o = chatfuzz(&["fuzz", "--target", "toy-xml", "--out", p(out.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--in"));
}

#[test]
fn temperature_out_of_range_is_usage_error() {
    let seeds = seed_dir("toy-xml");
    let out = tempfile::tempdir().unwrap();
    let o = chatfuzz(&[
        "fuzz", "--target", "toy-xml", "--in", p(seeds.path()), "--out", p(&out.path().join("o")),
        "--temperature", "3.0", "--duration", "1", "--clock", "virtual",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("temperature"));
}

#[test]
fn unknown_target_and_flag_are_usage_errors() {
    let seeds = seed_dir("toy-xml");
    let out = tempfile::tempdir().unwrap();
    let o = chatfuzz(&["fuzz", "--target", "toy-yaml", "--in", p(seeds.path()), "--out", p(&out.path().join("o")), "--clock", "virtual"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("toy-yaml"));
    assert_eq!(code(&chatfuzz(&["fuzz", "--warp-speed"])), 2);
}

#[test]
fn report_on_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = chatfuzz(&["report", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stats.json"));
}

#[test]
fn cmin_on_redundant_corpus() {
    let input = tempfile::tempdir().unwrap();
    let files: [&[u8]; 3] = [b"{\"a\": 1}", b"{\"a\": 1}", b"{\"b\": [true, null]}"];
    for (i, f) in files.iter().enumerate() {
        std::fs::write(input.path().join(format!("s{i}")), f).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let dst = out.path().join("min");
    let o = chatfuzz(&["cmin", "-i", p(input.path()), "-o", p(&dst), "--target", "toy-json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let h = lookup("toy-json").unwrap();
    let edges = |bytes: &[Vec<u8>]| -> BTreeSet<EdgeId> { bytes.iter().flat_map(|b| h.run(b).unwrap().trace.edge_set()).collect() };
    let kept: Vec<Vec<u8>> = std::fs::read_dir(&dst).unwrap().map(|e| std::fs::read(e.unwrap().path()).unwrap()).collect();
    let all: Vec<Vec<u8>> = files.iter().map(|f| f.to_vec()).collect();
    assert!(kept.len() <= 3 && !kept.is_empty());
    assert!(kept.len() < 3, "identical seeds should collapse");
    assert_eq!(edges(&kept), edges(&all));
}

#[test]
fn sweep_writes_nine_rows_per_target() {
    let out = tempfile::tempdir().unwrap();
    let o = chatfuzz(&[
        "sweep", "--target", "toy-xml,toy-json", "--provider", "mock", "--step", "0.25", "--per-point", "3",
        "--max-generations", "40", "--out", p(out.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sweep = std::fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().filter(|l| l.starts_with("toy-xml,")).count(), 9);
    assert_eq!(sweep.lines().filter(|l| l.starts_with("toy-json,")).count(), 9);
    let ranks = std::fs::read_to_string(out.path().join("ranks.csv")).unwrap();
    assert_eq!(ranks.lines().count(), 2);
    assert!(ranks.starts_with("config,0.00,0.25,"));
}

#[test]
fn bad_step_is_usage_error() {
    assert_eq!(code(&chatfuzz(&["sweep", "--target", "toy-xml", "--step", "0"])), 2);
}

#[test]
fn ablate_writes_table() {
    let out = tempfile::tempdir().unwrap();
    let dst = out.path().join("abl");
    let o = chatfuzz(&["ablate", "--target", "toy-json", "--endpoint", "chat", "--out", p(&dst), "--duration", "3", "--clock", "virtual"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dst.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "variant,edges,vs_ai");
    assert!(lines[1].starts_with("AI,") && lines[1].ends_with(",0.0"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn config_file_supplies_flags() {
    let seeds = seed_dir("toy-json");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    std::fs::write(
        &cfg,
        format!(
            "# campaign\ntarget = toy-json\nin = {}\nout = {}\nbaseline = afl\nduration = 2\nclock = virtual\ntemperature = 5\n",
            p(seeds.path()),
            p(&out)
        ),
    )
    .unwrap();
    let bad = chatfuzz(&["fuzz", "--config", p(&cfg)]);
    assert_eq!(code(&bad), 2, "file temperature 5 is out of range");
    let o = chatfuzz(&["fuzz", "--config", p(&cfg), "--temperature", "1.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("toy-json AFL++"));
    assert!(out.join("stats.json").is_file());
}
