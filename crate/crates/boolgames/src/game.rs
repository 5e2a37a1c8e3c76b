//! Boolean-game data model: players, disjoint control sets, goal formulas,
//! pure strategies, 0/1 utilities, and normal-form export for tiny games.

use crate::formula::{self, Formula, VarId, VarLookup};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("player index {0} out of range")]
    PlayerOutOfRange(usize),
    #[error("valuation does not assign {0}")]
    IncompleteValuation(VarId),
    #[error("goal mentions {0}, which no player controls")]
    UnboundGoalVar(VarId),
    #[error("normal form needs {required} joint profiles, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("control and goal counts differ: {controls} vs {goals}")]
    CountMismatch { controls: usize, goals: usize },
    #[error("true set contains {0}, which is outside the universe")]
    OutsideUniverse(VarId),
    #[error("game file: line {line}: {message}")]
    FileFormat { line: usize, message: String },
    #[error(transparent)]
    Formula(#[from] formula::ParseError),
}

/// A Boolean game: `n` disjoint control sets and `n` goal formulas.
/// Player indices are 0-based internally and 1-based in file formats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanGame {
    control: Vec<BTreeSet<VarId>>,
    goals: Vec<Formula>,
}

impl BooleanGame {
    pub fn new(control: Vec<BTreeSet<VarId>>, goals: Vec<Formula>) -> Result<Self, GameError> {
        if control.len() != goals.len() {
            return Err(GameError::CountMismatch {
                controls: control.len(),
                goals: goals.len(),
            });
        }
        Ok(BooleanGame { control, goals })
    }

    pub fn num_players(&self) -> usize {
        self.control.len()
    }

    pub fn control(&self, player: usize) -> &BTreeSet<VarId> {
        &self.control[player]
    }

    pub fn goal(&self, player: usize) -> &Formula {
        &self.goals[player]
    }

    pub fn goals(&self) -> &[Formula] {
        &self.goals
    }

    /// Union of all control sets.
    pub fn all_vars(&self) -> BTreeSet<VarId> {
        self.control.iter().flatten().cloned().collect()
    }
}

/// A total assignment over a variable universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    universe: BTreeSet<VarId>,
    true_set: BTreeSet<VarId>,
}

impl Valuation {
    pub fn new(universe: BTreeSet<VarId>, true_set: BTreeSet<VarId>) -> Result<Self, GameError> {
        if let Some(v) = true_set.difference(&universe).next() {
            return Err(GameError::OutsideUniverse(v.clone()));
        }
        Ok(Valuation { universe, true_set })
    }

    pub fn universe(&self) -> &BTreeSet<VarId> {
        &self.universe
    }

    pub fn true_set(&self) -> &BTreeSet<VarId> {
        &self.true_set
    }
}

impl VarLookup for Valuation {
    fn lookup(&self, var: &VarId) -> Option<bool> {
        if self.universe.contains(var) {
            Some(self.true_set.contains(var))
        } else {
            None
        }
    }
}

/// A pure strategy: the subset of the player's control set made true.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PureStrategy {
    pub player: usize,
    pub assignment: BTreeSet<VarId>,
}

impl PureStrategy {
    pub fn new(player: usize, assignment: BTreeSet<VarId>) -> Self {
        PureStrategy { player, assignment }
    }
}

/// Assemble the joint valuation of one pure strategy per player.
/// The universe is exactly the union of all control sets.
pub fn profile_valuation(game: &BooleanGame, profile: &[PureStrategy]) -> Valuation {
    let universe = game.all_vars();
    let true_set = profile
        .iter()
        .flat_map(|s| s.assignment.iter().cloned())
        .collect();
    Valuation { universe, true_set }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationIssue {
    OverlappingControl { players: (usize, usize), var: VarId },
    UncontrolledGoalVar { player: usize, var: VarId },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::OverlappingControl { players, var } => write!(
                f,
                "players {} and {} both control {var}",
                players.0 + 1,
                players.1 + 1
            ),
            ValidationIssue::UncontrolledGoalVar { player, var } => write!(
                f,
                "goal of player {} mentions {var}, which no player controls",
                player + 1
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Check the game invariants: control sets pairwise disjoint, and every
/// goal variable controlled by some player. Reports all offenders.
pub fn validate_game(game: &BooleanGame) -> ValidationReport {
    let mut issues = Vec::new();
    for i in 0..game.num_players() {
        for j in i + 1..game.num_players() {
            for var in game.control[i].intersection(&game.control[j]) {
                issues.push(ValidationIssue::OverlappingControl {
                    players: (i, j),
                    var: var.clone(),
                });
            }
        }
    }
    let all = game.all_vars();
    for (i, goal) in game.goals.iter().enumerate() {
        for var in goal.free_vars() {
            if !all.contains(&var) {
                issues.push(ValidationIssue::UncontrolledGoalVar { player: i, var });
            }
        }
    }
    ValidationReport { issues }
}

/// 0/1 utility of a player at a total valuation.
pub fn utility(game: &BooleanGame, valuation: &Valuation, player: usize) -> Result<u8, GameError> {
    if player >= game.num_players() {
        return Err(GameError::PlayerOutOfRange(player));
    }
    for var in game.all_vars() {
        if !valuation.universe.contains(&var) {
            return Err(GameError::IncompleteValuation(var));
        }
    }
    match formula::evaluate(&game.goals[player], valuation) {
        Ok(true) => Ok(1),
        Ok(false) => Ok(0),
        Err(formula::UnboundVar(v)) => Err(GameError::UnboundGoalVar(v)),
    }
}

/// The two-player matching pennies game: control sets {p} and {q},
/// goals `~(p <-> q)` and `p <-> q`.
pub fn matching_pennies() -> BooleanGame {
    let p = VarId::named("p");
    let q = VarId::named("q");
    BooleanGame {
        control: vec![
            [p.clone()].into_iter().collect(),
            [q.clone()].into_iter().collect(),
        ],
        goals: vec![
            Formula::not(Formula::iff(
                Formula::var(p.clone()),
                Formula::var(q.clone()),
            )),
            Formula::iff(Formula::var(p), Formula::var(q)),
        ],
    }
}

/// Enumerate a player's pure strategies in a fixed order: the control set
/// is sorted, and subset b makes variable i true iff bit i of b is set.
pub fn pure_strategies(game: &BooleanGame, player: usize) -> Vec<PureStrategy> {
    let vars: Vec<&VarId> = game.control[player].iter().collect();
    (0..(1u64 << vars.len()))
        .map(|bits| {
            let assignment = vars
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, v)| (*v).clone())
                .collect();
            PureStrategy::new(player, assignment)
        })
        .collect()
}

/// Explicit payoff tensor of a small game.
#[derive(Clone, Debug)]
pub struct NormalForm {
    /// Per-player pure strategies, in [`pure_strategies`] order.
    pub strategies: Vec<Vec<PureStrategy>>,
    /// `payoffs[joint][player]`, joint index row-major with player 0 slowest.
    pub payoffs: Vec<Vec<u8>>,
}

impl NormalForm {
    pub fn shape(&self) -> Vec<usize> {
        self.strategies.iter().map(Vec::len).collect()
    }

    pub fn joint_index(&self, choice: &[usize]) -> usize {
        let mut idx = 0;
        for (p, &c) in choice.iter().enumerate() {
            idx = idx * self.strategies[p].len() + c;
        }
        idx
    }

    pub fn payoff(&self, choice: &[usize], player: usize) -> u8 {
        self.payoffs[self.joint_index(choice)][player]
    }
}

/// Expand a game into its payoff tensor. Errors if the joint profile count
/// exceeds the budget, reporting the required size.
pub fn to_normal_form(game: &BooleanGame, budget: u128) -> Result<NormalForm, GameError> {
    let mut required: u128 = 1;
    for c in &game.control {
        required = required.saturating_mul(1u128 << c.len().min(127));
    }
    if required > budget {
        return Err(GameError::BudgetExceeded { required, budget });
    }
    let strategies: Vec<Vec<PureStrategy>> = (0..game.num_players())
        .map(|p| pure_strategies(game, p))
        .collect();
    let shape: Vec<usize> = strategies.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let mut payoffs = Vec::with_capacity(total);
    let mut choice = vec![0usize; game.num_players()];
    for _ in 0..total {
        let profile: Vec<PureStrategy> = choice
            .iter()
            .enumerate()
            .map(|(p, &c)| strategies[p][c].clone())
            .collect();
        let valuation = profile_valuation(game, &profile);
        let row = (0..game.num_players())
            .map(|p| utility(game, &valuation, p))
            .collect::<Result<Vec<u8>, _>>()?;
        payoffs.push(row);
        // Odometer increment, last player fastest.
        for p in (0..choice.len()).rev() {
            choice[p] += 1;
            if choice[p] < shape[p] {
                break;
            }
            choice[p] = 0;
        }
    }
    Ok(NormalForm {
        strategies,
        payoffs,
    })
}

/// Parse the line-based game file format.
pub fn parse_game(text: &str) -> Result<BooleanGame, GameError> {
    let mut players: Option<usize> = None;
    let mut control: Vec<Option<BTreeSet<VarId>>> = Vec::new();
    let mut goals: Vec<Option<Formula>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| GameError::FileFormat { line, message };
        if let Some(rest) = content.strip_prefix("players") {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| err(format!("bad player count '{}'", rest.trim())))?;
            players = Some(n);
            control = vec![None; n];
            goals = vec![None; n];
        } else if let Some(rest) = content.strip_prefix("control") {
            let (idx, body) = split_indexed_line(rest).ok_or_else(|| {
                err("expected 'control <i>: <var> ...'".to_string())
            })?;
            let n = players.ok_or_else(|| err("'players' line must come first".to_string()))?;
            if idx == 0 || idx > n {
                return Err(err(format!("player index {idx} out of range")));
            }
            let vars: BTreeSet<VarId> = body.split_whitespace().map(VarId::parse).collect();
            if control[idx - 1].replace(vars).is_some() {
                return Err(err(format!("duplicate control line for player {idx}")));
            }
        } else if let Some(rest) = content.strip_prefix("goal") {
            let (idx, body) = split_indexed_line(rest)
                .ok_or_else(|| err("expected 'goal <i>: <formula>'".to_string()))?;
            let n = players.ok_or_else(|| err("'players' line must come first".to_string()))?;
            if idx == 0 || idx > n {
                return Err(err(format!("player index {idx} out of range")));
            }
            let f = crate::formula::parse_formula(body)?;
            if goals[idx - 1].replace(f).is_some() {
                return Err(err(format!("duplicate goal line for player {idx}")));
            }
        } else {
            return Err(err(format!("unrecognised line '{content}'")));
        }
    }
    let n = players.ok_or(GameError::FileFormat {
        line: 0,
        message: "missing 'players' line".to_string(),
    })?;
    let mut ctrl = Vec::with_capacity(n);
    let mut gls = Vec::with_capacity(n);
    for i in 0..n {
        ctrl.push(control[i].take().ok_or(GameError::FileFormat {
            line: 0,
            message: format!("missing control line for player {}", i + 1),
        })?);
        gls.push(goals[i].take().ok_or(GameError::FileFormat {
            line: 0,
            message: format!("missing goal line for player {}", i + 1),
        })?);
    }
    BooleanGame::new(ctrl, gls)
}

fn split_indexed_line(rest: &str) -> Option<(usize, &str)> {
    let (head, body) = rest.split_once(':')?;
    let idx: usize = head.trim().parse().ok()?;
    Some((idx, body.trim()))
}

/// Render a game in the file format; parse/render round-trips exactly.
pub fn render_game(game: &BooleanGame) -> String {
    let mut out = format!("players {}\n", game.num_players());
    for i in 0..game.num_players() {
        let vars: Vec<String> = game.control[i].iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("control {}: {}\n", i + 1, vars.join(" ")));
        out.push_str(&format!("goal {}: {}\n", i + 1, game.goals[i]));
    }
    out
}
