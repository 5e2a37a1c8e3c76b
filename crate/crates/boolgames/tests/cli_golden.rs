//! Golden-file coverage of every subcommand's happy path, plus
//! determinism and round-trip checks on the emitted artifacts.

use boolgames::cli::run_command;
use boolgames::equilibria::parse_profile;
use boolgames::game::parse_game;
use boolgames::reduction::parse_targets;
use std::path::PathBuf;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn run(args: &[&str]) -> (u8, String) {
    let outcome = run_command(args.iter().copied());
    (outcome.code, outcome.report)
}

fn micro_args(rest: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = rest[..1].iter().map(|s| s.to_string()).collect();
    args.extend(
        ["--tm", &fixture("micro.tm"), "--steps", "3", "--input", "1"]
            .iter()
            .map(|s| s.to_string()),
    );
    args.extend(rest[1..].iter().map(|s| s.to_string()));
    args
}

#[test]
fn tm_run_golden() {
    let outcome = run_command(micro_args(&["tm-run"]));
    assert_eq!(outcome.code, 0);
    assert_eq!(outcome.report, golden("tm_run.txt"));
}

#[test]
fn reduce_golden_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.bg");
    let targets = dir.path().join("g.v");
    let mut emissions = Vec::new();
    for _ in 0..2 {
        let outcome = run_command(micro_args(&[
            "reduce",
            "--out",
            out.to_str().unwrap(),
            "--targets",
            targets.to_str().unwrap(),
        ]));
        assert_eq!(outcome.code, 0);
        assert_eq!(outcome.report, golden("reduce.txt"));
        emissions.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(emissions[0], emissions[1]);
    assert_eq!(emissions[0], golden("micro_game.bg"));
    assert_eq!(
        std::fs::read_to_string(&targets).unwrap(),
        golden("micro_targets.v")
    );
    // The emitted files parse back.
    parse_game(&emissions[0]).unwrap();
    parse_targets(&golden("micro_targets.v")).unwrap();
}

#[test]
fn witness_golden_and_profile_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let profile_path = dir.path().join("w.profile");
    let outcome = run_command(micro_args(&[
        "witness",
        "--out",
        profile_path.to_str().unwrap(),
    ]));
    assert_eq!(outcome.code, 0);
    assert_eq!(outcome.report, golden("witness.txt"));

    let game = parse_game(&golden("micro_game.bg")).unwrap();
    let text = std::fs::read_to_string(&profile_path).unwrap();
    let profile = parse_profile(&text, &game).unwrap();
    let sizes: Vec<usize> = profile
        .strategies()
        .iter()
        .map(|s| s.support().len())
        .collect();
    assert_eq!(sizes, vec![16, 12, 6, 16, 12, 6]);

    // The emitted profile evaluates to the reported utilities.
    let eval = run(&[
        "eval",
        "--game",
        &format!("{}/tests/golden/micro_game.bg", env!("CARGO_MANIFEST_DIR")),
        "--profile",
        profile_path.to_str().unwrap(),
    ]);
    assert_eq!(eval.0, 0);
    assert_eq!(
        eval.1,
        "u 1 15/16\nu 2 11/12\nu 3 5/6\nu 4 1/16\nu 5 1/12\nu 6 1/6\n"
    );
}

#[test]
fn pennies_subcommand_goldens() {
    let pennies = fixture("pennies.bg");
    let profile = fixture("pennies_uniform.profile");

    let (code, report) = run(&["pure-nash", "--game", &pennies]);
    assert_eq!(code, 1);
    assert_eq!(report, golden("pure_nash.txt"));

    let (code, report) = run(&["solve2", "--game", &pennies]);
    assert_eq!(code, 0);
    assert_eq!(report, golden("solve2.txt"));

    let (code, report) = run(&["eval", "--game", &pennies, "--profile", &profile]);
    assert_eq!(code, 0);
    assert_eq!(report, golden("eval.txt"));

    let (code, report) = run(&["verify", "--game", &pennies, "--profile", &profile]);
    assert_eq!(code, 0);
    assert_eq!(report, golden("verify.txt"));
}

#[test]
fn forall_extend_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out: PathBuf = dir.path().join("f.bg");
    let targets = dir.path().join("f.v");
    let outcome = run_command(micro_args(&[
        "forall-extend",
        "--pennies",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--targets",
        targets.to_str().unwrap(),
    ]));
    assert_eq!(outcome.code, 0);
    assert_eq!(outcome.report, golden("forall_extend.txt"));
    parse_game(&std::fs::read_to_string(&out).unwrap()).unwrap();
}

#[test]
fn penalty_check_golden() {
    let outcome = run_command(micro_args(&[
        "penalty-check",
        "--step",
        "1",
        "--cell",
        "1",
        "--pattern",
        "1",
    ]));
    assert_eq!(outcome.code, 0);
    assert_eq!(outcome.report, golden("penalty.txt"));
}

#[test]
fn verify_rejects_a_biased_profile() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("biased.profile");
    std::fs::write(&profile, "strategy 1 1/1: p=1\nstrategy 2 1/1: q=0\n").unwrap();
    let (code, report) = run(&[
        "verify",
        "--game",
        &fixture("pennies.bg"),
        "--profile",
        profile.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert_eq!(report, "equilibrium no\n");
}

#[test]
fn tm_run_rejects_on_zero_input() {
    let outcome = run_command([
        "tm-run",
        "--tm",
        &fixture("micro.tm"),
        "--steps",
        "3",
        "--input",
        "0",
    ]);
    assert_eq!(outcome.code, 1);
    assert_eq!(outcome.report, "reject\n");
}
