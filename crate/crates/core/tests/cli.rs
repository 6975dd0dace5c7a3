use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn coalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalg"))
        .args(args)
        .env_remove("COALG_MAX_STATES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(name: &str) -> String {
    data(name).to_string_lossy().into_owned()
}

#[test]
fn check_exit_codes() {
    for (file, code) in [
        ("streams.coalg", 0),
        ("mealy.coalg", 0),
        ("ccs.coalg", 0),
        ("mealy_distinct.coalg", 1),
        ("bad_join.coalg", 2),
    ] {
        let o = coalg(&["check", &path(file)]);
        assert_eq!(
            o.status.code(),
            Some(code),
            "{file}: {}{}",
            stdout(&o),
            stderr(&o)
        );
    }
}

#[test]
fn check_reports_match_golden_files() {
    for (args, file) in [
        (
            vec!["check", "--witness", "streams.coalg"],
            "streams_check.txt",
        ),
        (vec!["check", "--witness", "mealy.coalg"], "mealy_check.txt"),
        (vec!["check", "--witness", "ccs.coalg"], "ccs_check.txt"),
        (
            vec!["check", "mealy_distinct.coalg"],
            "mealy_distinct_check.txt",
        ),
        (
            vec!["check", "--json", "mealy_distinct.coalg"],
            "mealy_distinct_check.json",
        ),
    ] {
        let args: Vec<String> = args
            .iter()
            .map(|a| {
                if a.ends_with(".coalg") {
                    path(a)
                } else {
                    a.to_string()
                }
            })
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(stdout(&coalg(&args)), golden(file), "{file}");
    }
}

#[test]
fn the_stream_witness_has_two_pairs() {
    let out = stdout(&coalg(&["check", "--witness", &path("streams.coalg")]));
    let block: Vec<&str> = out
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .collect();
    assert_eq!(
        block,
        [
            "  mu x1 . l<0> (+) r<x1> ~ l<0> (+) r<mu x1 . l<0> (+) r<x1>>",
            "  mu x1 . l<0> (+) r<x1> ~ mu x1 . l<0> (+) r<x1>",
        ]
    );
}

#[test]
fn failing_goals_always_print_an_experiment() {
    let out = stdout(&coalg(&["check", &path("mealy_distinct.coalg")]));
    assert!(
        out.contains("  experiment: a / snd / a / snd / a / snd / a / fst / lattice 1 != 0\n"),
        "{out}"
    );
}

#[test]
fn validation_errors_name_file_line_and_rule() {
    let o = coalg(&["check", &path("bad_join.coalg")]);
    let err = stderr(&o);
    assert!(err.contains("bad_join.coalg:1:1: [semilattice]"), "{err}");
    assert!(o.stdout.is_empty());

    let o = coalg(&["synth", &path("streams.coalg"), "--expr", "NOPE"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[unresolved-name]"));

    let o = coalg(&["check", &path("missing.coalg")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_runs_and_jobs() {
    for file in [
        "streams.coalg",
        "mealy.coalg",
        "ccs.coalg",
        "mealy_distinct.coalg",
    ] {
        let p = path(file);
        let first = coalg(&["check", "--witness", &p]);
        let again = coalg(&["check", "--witness", &p]);
        let parallel = coalg(&["check", "--witness", "--jobs", "4", &p]);
        assert_eq!(first.stdout, again.stdout, "{file}");
        assert_eq!(first.stdout, parallel.stdout, "{file}");
        assert_eq!(first.status.code(), parallel.status.code());
    }
}

#[test]
fn disabling_the_unit_law_keeps_every_verdict() {
    let verdicts = |extra: &[&str], file: &str| -> Vec<String> {
        let p = path(file);
        let mut args = vec!["check", "--json"];
        args.extend_from_slice(extra);
        args.push(&p);
        let report: serde_json::Value = serde_json::from_slice(&coalg(&args).stdout).unwrap();
        report["goals"]
            .as_array()
            .unwrap()
            .iter()
            .map(|g| g["verdict"].as_str().unwrap().to_string())
            .collect()
    };
    for file in [
        "streams.coalg",
        "mealy.coalg",
        "ccs.coalg",
        "mealy_distinct.coalg",
    ] {
        assert_eq!(
            verdicts(&[], file),
            verdicts(&["--no-unit"], file),
            "{file}"
        );
    }
}

#[test]
fn synth_outputs() {
    let p = path("streams.coalg");
    assert_eq!(
        stdout(&coalg(&["synth", &p, "--expr", "E1"])),
        golden("streams_synth_e1.txt")
    );
    assert_eq!(
        stdout(&coalg(&["synth", &p, "--expr", "E1", "--dot"])),
        golden("streams_synth_e1.dot")
    );
    assert_eq!(
        stdout(&coalg(&["synth", &p, "--expr", "E1", "--json"])),
        golden("streams_synth_e1.json")
    );
    assert!(stdout(&coalg(&["synth", &p, "--expr", "E2"])).starts_with("1 states\n"));
    assert!(stdout(&coalg(&["synth", &p, "--expr", "PHI"])).starts_with("1 states\n"));
}

#[test]
fn the_state_cap_comes_from_flag_or_environment() {
    let p = path("streams.coalg");
    let o = coalg(&[
        "synth",
        &p,
        "--expr",
        "E2",
        "--no-idempotence",
        "--max-states",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("[synthesis] state limit of 7 exceeded"),
        "{}",
        stderr(&o)
    );

    let o = Command::new(env!("CARGO_BIN_EXE_coalg"))
        .args(["synth", &p, "--expr", "E2", "--no-idempotence"])
        .env("COALG_MAX_STATES", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("state limit of 5 exceeded"));
}

#[test]
fn expr_reads_states_back() {
    assert_eq!(
        stdout(&coalg(&[
            "expr",
            &path("streams.coalg"),
            "--coalgebra",
            "C",
            "--state",
            "s3",
            "--verify"
        ])),
        golden("streams_expr_s3.txt")
    );
    let zero = stdout(&coalg(&[
        "expr",
        &path("streams.coalg"),
        "--coalgebra",
        "Z",
        "--state",
        "z",
    ]));
    assert_eq!(zero, "mu x1 . l<0> (+) r<x1>\n");
    let stuck = stdout(&coalg(&[
        "expr",
        &path("ccs.coalg"),
        "--coalgebra",
        "Stuck",
        "--state",
        "s",
    ]));
    assert_eq!(stuck, "mu x1 . phi\n");
    let o = coalg(&[
        "expr",
        &path("streams.coalg"),
        "--coalgebra",
        "C",
        "--state",
        "s9",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn translate_prints_certified_translations() {
    let p = path("ccs.coalg");
    assert_eq!(
        stdout(&coalg(&["translate", &p, "--process", "P"])),
        golden("ccs_translate_p.txt")
    );
    let o = coalg(&["translate", &p, "--process", "Q"]);
    assert_eq!(
        stdout(&o),
        "mu z . r[a({z})] (+) r[b({r[phi] (+) r[b({l[1]})]})] (+) r[b({r[phi]})]\n"
    );
}

#[test]
fn unguarded_processes_are_rejected() {
    let dir = std::env::temp_dir().join(format!("coalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("unguarded.coalg");
    std::fs::write(
        &file,
        "semilattice One { elements 1 ; bottom 1 ; join 1 1 = 1 }\nalphabet A { a }\n\
         functor L = One + (P Id)^A\nprocess X = mu x . x + a . tick\n",
    )
    .unwrap();
    let o = coalg(&["translate", file.to_str().unwrap(), "--process", "X"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":4:9: [process]"), "{}", stderr(&o));
    std::fs::remove_dir_all(&dir).unwrap();
}
