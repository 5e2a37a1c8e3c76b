//! Command-line front end: one subcommand per library capability, exact
//! rational reports, reproducible via explicit seeds.

use crate::equilibria::{
    enumerate_pure_nash, is_nash, joint_expected_utilities, parse_profile, rational_text,
    render_profile, solve_two_player_mixed, EqError,
};
use crate::game::{parse_game, render_game, validate_game, BooleanGame, PureStrategy};
use crate::reduction::{
    build_reduction, extend_for_forall, pennies_epsilon, render_targets, ReductionError,
    ReductionOutput,
};
use crate::tm::{accepts_within, parse_machine, run_table, BoundedInstance, RunTable, TmError};
use crate::witness::{
    canonical_profile, exact_payoffs, verify_equilibrium,
    violation_penalty_check, WitnessError,
};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit code plus the full report text.
///
/// Codes: 0 = yes/pass, 1 = no/fail, 2 = usage or input error, 3 = budget
/// exceeded.
#[derive(Clone, Debug)]
pub struct CommandOutcome {
    pub code: u8,
    pub report: String,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Tm(#[from] TmError),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Tm(TmError::BudgetExceeded { .. }) => 3,
            CliError::Eq(EqError::BudgetExceeded { .. }) => 3,
            CliError::Witness(WitnessError::Eq(EqError::BudgetExceeded { .. })) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "boolgames", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared machine-instance arguments.
#[derive(Args, Debug)]
struct InstanceArgs {
    /// Machine description file.
    #[arg(long)]
    tm: PathBuf,
    /// Step bound K.
    #[arg(long)]
    steps: u64,
    /// Binary input word (may be empty).
    #[arg(long, default_value = "")]
    input: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a bounded machine instance into a Boolean game.
    Reduce {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Output game file.
        #[arg(long)]
        out: PathBuf,
        /// Output payoff-targets file.
        #[arg(long)]
        targets: PathBuf,
        /// Rewrite oneof nodes into plain propositional logic.
        #[arg(long)]
        expand_oneof: bool,
    },
    /// Decide bounded acceptance and print an accepting run.
    TmRun {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Build the canonical profile from an accepting run; optionally
    /// verify it is an exact equilibrium.
    Witness {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Also verify best responses for every player.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Random pure deviations sampled for Player Three.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optionally write the profile to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a profile file is an exact equilibrium of a game.
    Verify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Enumerate all pure-strategy equilibria of a game file.
    PureNash {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Enumerate exact mixed equilibria of a two-player game file.
    Solve2 {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Exact expected utilities of a profile file.
    Eval {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Compile an instance and extend it with Players Seven and Eight
    /// (and optionally the pennies gadget).
    ForallExtend {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Add the epsilon gadget with this many penny variables.
        #[arg(long)]
        pennies: Option<usize>,
        #[arg(long)]
        expand_oneof: bool,
    },
    /// Inject illegal head pairs into the accepting table and check
    /// Player Two's penalty bounds.
    PenaltyCheck {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Step of the injected violation.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Left cell of the injected adjacent pair.
        #[arg(long, default_value_t = 0)]
        cell: usize,
        /// Pattern 1..=5; all five when omitted.
        #[arg(long)]
        pattern: Option<u8>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
}

const DEFAULT_BUDGET: u64 = 1 << 32;

pub fn run_command<I, S>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut args = vec!["boolgames".to_string()];
    args.extend(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            return CommandOutcome {
                code,
                report: err.to_string(),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => outcome,
        Err(err) => CommandOutcome {
            code: err.code(),
            report: format!("error: {err}\n"),
        },
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load_instance(args: &InstanceArgs) -> Result<BoundedInstance, CliError> {
    let machine = parse_machine(&read(&args.tm)?)?;
    Ok(BoundedInstance::new(machine, args.steps, &args.input)?)
}

fn load_game(path: &Path) -> Result<BooleanGame, CliError> {
    Ok(parse_game(&read(path)?)?)
}

/// Accepting run table of an instance, or None when it rejects.
fn accepting_table(
    inst: &BoundedInstance,
    budget: u64,
) -> Result<Option<RunTable>, CliError> {
    match accepts_within(inst, budget as u128)? {
        Some(run) => Ok(Some(run_table(&run, inst.k)?)),
        None => Ok(None),
    }
}

fn outcome(code: u8, report: String) -> Result<CommandOutcome, CliError> {
    Ok(CommandOutcome { code, report })
}

fn reduction_summary(out: &ReductionOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "players {}", out.game.num_players());
    let _ = writeln!(s, "k {}", out.k);
    let _ = writeln!(s, "q {}", out.q);
    for player in 0..out.game.num_players() {
        let _ = writeln!(
            s,
            "control {} {}",
            player + 1,
            out.game.control(player).len()
        );
    }
    for (i, target) in out.targets.iter().enumerate() {
        let _ = writeln!(s, "target {} {}", i + 1, rational_text(target));
    }
    s
}

fn dispatch(command: Command) -> Result<CommandOutcome, CliError> {
    match command {
        Command::Reduce {
            instance,
            out,
            targets,
            expand_oneof,
        } => {
            let inst = load_instance(&instance)?;
            let mut red = build_reduction(&inst)?;
            if expand_oneof {
                red = red.with_expanded_oneof()?;
            }
            let validation = validate_game(&red.game);
            if !validation.is_valid() {
                let mut report = String::new();
                for issue in &validation.issues {
                    let _ = writeln!(report, "invalid: {issue}");
                }
                return outcome(1, report);
            }
            write(&out, &render_game(&red.game))?;
            write(&targets, &render_targets(&red.targets))?;
            outcome(0, reduction_summary(&red))
        }
        Command::TmRun { instance, budget } => {
            let inst = load_instance(&instance)?;
            match accepts_within(&inst, budget as u128)? {
                Some(run) => {
                    let mut report = String::new();
                    let _ = writeln!(report, "accept");
                    let _ = writeln!(report, "steps {}", run.len() - 1);
                    for (i, config) in run.iter().enumerate() {
                        let tape: String =
                            config.tape.iter().map(|s| s.as_char()).collect();
                        let _ = writeln!(
                            report,
                            "step {} state {} head {} tape {}",
                            i, config.state, config.head, tape
                        );
                    }
                    outcome(0, report)
                }
                None => outcome(1, "reject\n".to_string()),
            }
        }
        Command::Witness {
            instance,
            verify,
            budget,
            samples,
            seed,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let red = build_reduction(&inst)?;
            let Some(table) = accepting_table(&inst, budget)? else {
                return outcome(1, "reject\n".to_string());
            };
            let wp = canonical_profile(&red, &table)?;
            let mut report = String::new();
            let _ = writeln!(report, "accept");
            for (i, strategy) in wp.profile.strategies().iter().enumerate() {
                let _ = writeln!(report, "support {} {}", i + 1, strategy.support().len());
            }
            let payoffs = exact_payoffs(&red, &wp, budget as u128)?;
            for (i, payoff) in payoffs.iter().enumerate() {
                let _ = writeln!(report, "payoff {} {}", i + 1, rational_text(payoff));
            }
            if let Some(path) = out {
                write(&path, &render_profile(&wp.profile, &red.game))?;
            }
            if !verify {
                return outcome(0, report);
            }
            let verification =
                verify_equilibrium(&red, &wp, budget as u128, samples, seed)?;
            for check in &verification.checks {
                let _ = writeln!(
                    report,
                    "check {} {} expected {} best {} margin {}",
                    check.player + 1,
                    check.method.as_str(),
                    rational_text(&check.expected),
                    rational_text(&check.best_response),
                    rational_text(&check.margin()),
                );
            }
            let _ = writeln!(
                report,
                "verification {}",
                if verification.pass { "pass" } else { "fail" }
            );
            outcome(if verification.pass { 0 } else { 1 }, report)
        }
        Command::Verify {
            game,
            profile,
            budget,
        } => {
            let game = load_game(&game)?;
            let profile = parse_profile(&read(&profile)?, &game)?;
            let nash = is_nash(&game, &profile, budget as u128)?;
            let report = format!("equilibrium {}\n", if nash { "yes" } else { "no" });
            outcome(if nash { 0 } else { 1 }, report)
        }
        Command::PureNash { game, budget } => {
            let game = load_game(&game)?;
            let equilibria = enumerate_pure_nash(&game, budget as u128)?;
            let mut report = String::new();
            let _ = writeln!(report, "found {}", equilibria.len());
            for (i, profile) in equilibria.iter().enumerate() {
                let _ = writeln!(report, "equilibrium {}", i + 1);
                for strategy in profile {
                    let _ = writeln!(report, "  {}", pure_strategy_text(&game, strategy));
                }
            }
            outcome(if equilibria.is_empty() { 1 } else { 0 }, report)
        }
        Command::Solve2 { game, budget } => {
            let game = load_game(&game)?;
            let equilibria = solve_two_player_mixed(&game, budget as u128)?;
            let mut report = String::new();
            let _ = writeln!(report, "found {}", equilibria.len());
            for (i, eq) in equilibria.iter().enumerate() {
                let _ = writeln!(
                    report,
                    "equilibrium {}{}",
                    i + 1,
                    if eq.degenerate { " degenerate" } else { "" }
                );
                for line in render_profile(&eq.profile, &game).lines() {
                    let _ = writeln!(report, "  {line}");
                }
            }
            outcome(if equilibria.is_empty() { 1 } else { 0 }, report)
        }
        Command::Eval {
            game,
            profile,
            budget,
        } => {
            let game = load_game(&game)?;
            let profile = parse_profile(&read(&profile)?, &game)?;
            let utilities = joint_expected_utilities(&game, &profile, budget as u128)?;
            let mut report = String::new();
            for (i, u) in utilities.iter().enumerate() {
                let _ = writeln!(report, "u {} {}", i + 1, rational_text(u));
            }
            outcome(0, report)
        }
        Command::ForallExtend {
            instance,
            out,
            targets,
            pennies,
            expand_oneof,
        } => {
            let inst = load_instance(&instance)?;
            let mut red = extend_for_forall(&build_reduction(&inst)?)?;
            if let Some(m) = pennies {
                red = pennies_epsilon(&red, m)?;
            }
            if expand_oneof {
                red = red.with_expanded_oneof()?;
            }
            write(&out, &render_game(&red.game))?;
            write(&targets, &render_targets(&red.targets))?;
            let mut report = reduction_summary(&red);
            if let Some(increment) = &red.pennies_increment {
                let _ = writeln!(report, "pennies-increment {}", rational_text(increment));
            }
            outcome(0, report)
        }
        Command::PenaltyCheck {
            instance,
            step,
            cell,
            pattern,
            budget,
        } => {
            let inst = load_instance(&instance)?;
            let red = build_reduction(&inst)?;
            let Some(table) = accepting_table(&inst, budget)? else {
                return outcome(1, "reject\n".to_string());
            };
            let patterns: Vec<u8> = match pattern {
                Some(p) => vec![p],
                None => (1..=5).collect(),
            };
            let mut report = String::new();
            let mut all_pass = true;
            for p in patterns {
                let bad = table.inject_head_violation(step, cell, p)?;
                let penalty = violation_penalty_check(&red, &bad)?;
                let _ = writeln!(report, "pattern {p}");
                let _ = writeln!(report, "  violations {}", penalty.violations.len());
                let _ = writeln!(report, "  bound1 {}", rational_text(&penalty.bound1));
                let _ = writeln!(report, "  bound2 {}", rational_text(&penalty.bound2));
                let _ = writeln!(report, "  v2 {}", rational_text(&penalty.v2));
                let _ = writeln!(
                    report,
                    "  engaged {}",
                    rational_text(&penalty.engaged_best_response)
                );
                let _ = writeln!(
                    report,
                    "  unrestricted {}",
                    rational_text(&penalty.unrestricted_best_response)
                );
                let _ = writeln!(
                    report,
                    "  result {}",
                    if penalty.pass { "pass" } else { "fail" }
                );
                all_pass &= penalty.pass;
            }
            let _ = writeln!(report, "overall {}", if all_pass { "pass" } else { "fail" });
            outcome(if all_pass { 0 } else { 1 }, report)
        }
    }
}

/// "player 1: a=1 b=0" listing of one pure strategy over its control set.
fn pure_strategy_text(game: &BooleanGame, strategy: &PureStrategy) -> String {
    let mut s = format!("player {}:", strategy.player + 1);
    for var in game.control(strategy.player) {
        let _ = write!(
            s,
            " {var}={}",
            u8::from(strategy.assignment.contains(var))
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> CommandOutcome {
        run_command(args.iter().copied())
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(&["frobnicate"]).code, 2);
        assert_eq!(run(&["tm-run", "--no-such-flag"]).code, 2);
    }

    #[test]
    fn help_exits_zero() {
        let out = run(&["--help"]);
        assert_eq!(out.code, 0);
        assert!(out.report.contains("reduce"));
    }

    #[test]
    fn missing_file_is_input_error() {
        let out = run(&["tm-run", "--tm", "/nonexistent.tm", "--steps", "3"]);
        assert_eq!(out.code, 2);
        assert!(out.report.starts_with("error:"));
    }

    #[test]
    fn budget_exhaustion_is_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let tm = dir.path().join("m.tm");
        std::fs::write(
            &tm,
            "states: s0 sa\ninitial: s0\naccepting: sa\nrule: s0 1 -> sa 1 R\n",
        )
        .unwrap();
        let out = run(&[
            "tm-run",
            "--tm",
            tm.to_str().unwrap(),
            "--steps",
            "3",
            "--input",
            "1",
            "--budget",
            "0",
        ]);
        assert_eq!(out.code, 3);
    }
}
