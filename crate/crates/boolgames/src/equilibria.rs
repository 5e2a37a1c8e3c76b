//! Exact-rational mixed-strategy machinery: expected utility, best
//! responses, pure-equilibrium enumeration, epsilon checks, and a
//! two-player support-enumeration solver.
//!
//! All arithmetic is arbitrary-precision rational; there is no floating
//! point anywhere in this module. Equilibrium comparisons are exact.

use crate::eval::{Compiled, SlotMap};
use crate::formula::VarId;
use crate::game::{pure_strategies, to_normal_form, BooleanGame, GameError, PureStrategy};
use num::{BigInt, BigRational, One, Signed, Zero};
use std::collections::BTreeSet;
use std::fmt::Write as _;

pub type Rational = BigRational;

/// Shorthand for small exact rationals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, thiserror::Error)]
pub enum EqError {
    #[error("joint support needs {required} terms, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("operation requires a two-player game, got {0} players")]
    NotTwoPlayers(usize),
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("goal mentions {0}, which no player controls")]
    UnboundGoalVar(VarId),
    #[error("epsilon must lie in [0,1]")]
    EpsilonOutOfRange,
    #[error("profile file: line {line}: {message}")]
    ProfileFormat { line: usize, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Deviation-gain bound for epsilon equilibria; an exact rational in [0,1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonBound {
    value: Rational,
}

impl EpsilonBound {
    pub fn new(value: Rational) -> Result<Self, EqError> {
        if value.is_negative() || value > Rational::one() {
            return Err(EqError::EpsilonOutOfRange);
        }
        Ok(EpsilonBound { value })
    }

    pub fn zero() -> Self {
        EpsilonBound {
            value: Rational::zero(),
        }
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }
}

/// A sparse mixed strategy: explicit support with exact positive weights
/// summing to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedStrategy {
    pub player: usize,
    support: Vec<(PureStrategy, Rational)>,
}

impl MixedStrategy {
    pub fn new(player: usize, support: Vec<(PureStrategy, Rational)>) -> Result<Self, EqError> {
        if support.is_empty() {
            return Err(EqError::InvalidStrategy(format!(
                "player {} has an empty support",
                player + 1
            )));
        }
        let mut seen = BTreeSet::new();
        let mut total = Rational::zero();
        for (strategy, weight) in &support {
            if strategy.player != player {
                return Err(EqError::InvalidStrategy(format!(
                    "support entry for player {} found in strategy of player {}",
                    strategy.player + 1,
                    player + 1
                )));
            }
            if !weight.is_positive() {
                return Err(EqError::InvalidStrategy(format!(
                    "non-positive weight {weight} for player {}",
                    player + 1
                )));
            }
            if !seen.insert(strategy.assignment.clone()) {
                return Err(EqError::InvalidStrategy(format!(
                    "duplicate support entry for player {}",
                    player + 1
                )));
            }
            total += weight;
        }
        if !total.is_one() {
            return Err(EqError::InvalidStrategy(format!(
                "weights of player {} sum to {total}, not 1",
                player + 1
            )));
        }
        Ok(MixedStrategy { player, support })
    }

    pub fn pure(strategy: PureStrategy) -> Self {
        MixedStrategy {
            player: strategy.player,
            support: vec![(strategy, Rational::one())],
        }
    }

    /// Uniform mix over distinct pure strategies.
    pub fn uniform(player: usize, strategies: Vec<PureStrategy>) -> Result<Self, EqError> {
        let n = strategies.len();
        let w = Rational::new(BigInt::one(), BigInt::from(n.max(1)));
        Self::new(player, strategies.into_iter().map(|s| (s, w.clone())).collect())
    }

    pub fn support(&self) -> &[(PureStrategy, Rational)] {
        &self.support
    }
}

/// One mixed strategy per player, in player order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedProfile {
    strategies: Vec<MixedStrategy>,
}

impl MixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Result<Self, EqError> {
        for (i, s) in strategies.iter().enumerate() {
            if s.player != i {
                return Err(EqError::InvalidStrategy(format!(
                    "strategy at position {i} belongs to player {}",
                    s.player + 1
                )));
            }
        }
        Ok(MixedProfile { strategies })
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn strategy(&self, player: usize) -> &MixedStrategy {
        &self.strategies[player]
    }

    /// Profile with one player's strategy replaced.
    pub fn with_replaced(&self, replacement: MixedStrategy) -> MixedProfile {
        let mut strategies = self.strategies.clone();
        let player = replacement.player;
        strategies[player] = replacement;
        MixedProfile { strategies }
    }
}

fn check_profile(game: &BooleanGame, profile: &MixedProfile) -> Result<(), EqError> {
    if profile.strategies.len() != game.num_players() {
        return Err(EqError::InvalidStrategy(format!(
            "profile has {} strategies for a {}-player game",
            profile.strategies.len(),
            game.num_players()
        )));
    }
    for s in &profile.strategies {
        for (p, _) in &s.support {
            if !p.assignment.is_subset(game.control(s.player)) {
                return Err(EqError::InvalidStrategy(format!(
                    "support of player {} sets a variable outside its control set",
                    s.player + 1
                )));
            }
        }
    }
    Ok(())
}

/// Patches indexed per support entry, ready for joint enumeration.
fn support_patches(
    slots: &SlotMap,
    game: &BooleanGame,
    strategy: &MixedStrategy,
) -> Vec<(Vec<(usize, bool)>, Rational)> {
    strategy
        .support
        .iter()
        .map(|(p, w)| {
            let patch = slots.patch(game.control(strategy.player).iter(), |v| {
                p.assignment.contains(v)
            });
            (patch, w.clone())
        })
        .collect()
}

fn sum_over_supports(
    supports: &[Vec<(Vec<(usize, bool)>, Rational)>],
    bits: &mut [bool],
    goals: &[Compiled],
    acc: &mut [Rational],
    level: usize,
    weight: &Rational,
) {
    if level == supports.len() {
        for (g, a) in goals.iter().zip(acc.iter_mut()) {
            if g.eval(bits) {
                *a += weight;
            }
        }
        return;
    }
    for (patch, w) in &supports[level] {
        for &(slot, value) in patch {
            bits[slot] = value;
        }
        let next = weight * w;
        sum_over_supports(supports, bits, goals, acc, level + 1, &next);
    }
}

/// Exact expected utility of one player.
///
/// The sum runs over the joint support of the players whose variables occur
/// in the goal; the remaining players marginalise out exactly because each
/// weight vector sums to one. The budget bounds the joint-support size.
pub fn expected_utility(
    game: &BooleanGame,
    profile: &MixedProfile,
    player: usize,
    budget: u128,
) -> Result<Rational, EqError> {
    check_profile(game, profile)?;
    if player >= game.num_players() {
        return Err(GameError::PlayerOutOfRange(player).into());
    }
    let goal_vars = game.goal(player).free_vars();
    let relevant: Vec<usize> = (0..game.num_players())
        .filter(|&j| game.control(j).iter().any(|v| goal_vars.contains(v)))
        .collect();
    let required: u128 = relevant
        .iter()
        .map(|&j| profile.strategy(j).support.len() as u128)
        .product();
    if required > budget {
        return Err(EqError::BudgetExceeded { required, budget });
    }
    let slots = SlotMap::new(game.all_vars());
    let compiled = Compiled::compile(game.goal(player), &slots)
        .map_err(EqError::UnboundGoalVar)?;
    let supports: Vec<_> = relevant
        .iter()
        .map(|&j| support_patches(&slots, game, profile.strategy(j)))
        .collect();
    let mut bits = vec![false; slots.len()];
    let mut acc = vec![Rational::zero()];
    sum_over_supports(
        &supports,
        &mut bits,
        std::slice::from_ref(&compiled),
        &mut acc,
        0,
        &Rational::one(),
    );
    Ok(acc.pop().unwrap())
}

/// Expected utilities of all players in one pass over the full joint
/// support (no marginalisation). Used for cross-validation against the
/// marginalised path and for witness payoff certification.
pub fn joint_expected_utilities(
    game: &BooleanGame,
    profile: &MixedProfile,
    budget: u128,
) -> Result<Vec<Rational>, EqError> {
    check_profile(game, profile)?;
    let required: u128 = profile
        .strategies
        .iter()
        .map(|s| s.support.len() as u128)
        .product();
    if required > budget {
        return Err(EqError::BudgetExceeded { required, budget });
    }
    let slots = SlotMap::new(game.all_vars());
    let goals: Vec<Compiled> = game
        .goals()
        .iter()
        .map(|g| Compiled::compile(g, &slots).map_err(EqError::UnboundGoalVar))
        .collect::<Result<_, _>>()?;
    let supports: Vec<_> = profile
        .strategies
        .iter()
        .map(|s| support_patches(&slots, game, s))
        .collect();
    let mut bits = vec![false; slots.len()];
    let mut acc = vec![Rational::zero(); game.num_players()];
    sum_over_supports(&supports, &mut bits, &goals, &mut acc, 0, &Rational::one());
    Ok(acc)
}

/// Max over the player's pure strategies of the expected utility after a
/// unilateral deviation. Budget bounds the pure-strategy count.
pub fn best_response_value(
    game: &BooleanGame,
    profile: &MixedProfile,
    player: usize,
    budget: u128,
) -> Result<Rational, EqError> {
    check_profile(game, profile)?;
    let count = 1u128 << game.control(player).len().min(127);
    if count > budget {
        return Err(EqError::BudgetExceeded {
            required: count,
            budget,
        });
    }
    let mut best: Option<Rational> = None;
    for pure in pure_strategies(game, player) {
        let deviated = profile.with_replaced(MixedStrategy::pure(pure));
        let value = expected_utility(game, &deviated, player, budget)?;
        if best.as_ref().map_or(true, |b| value > *b) {
            best = Some(value);
        }
    }
    Ok(best.expect("at least one pure strategy exists"))
}

/// Exact Nash check: every player's expected utility equals the best pure
/// deviation value.
pub fn is_nash(game: &BooleanGame, profile: &MixedProfile, budget: u128) -> Result<bool, EqError> {
    is_epsilon_nash(game, profile, &EpsilonBound::zero(), budget)
}

/// Epsilon check: no player gains more than epsilon by deviating.
pub fn is_epsilon_nash(
    game: &BooleanGame,
    profile: &MixedProfile,
    epsilon: &EpsilonBound,
    budget: u128,
) -> Result<bool, EqError> {
    for player in 0..game.num_players() {
        let current = expected_utility(game, profile, player, budget)?;
        let best = best_response_value(game, profile, player, budget)?;
        if best - current > *epsilon.value() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All pure profiles where no player has an improving pure deviation.
pub fn enumerate_pure_nash(
    game: &BooleanGame,
    budget: u128,
) -> Result<Vec<Vec<PureStrategy>>, EqError> {
    let nf = to_normal_form(game, budget)?;
    let shape = nf.shape();
    let mut out = Vec::new();
    let mut choice = vec![0usize; shape.len()];
    let total: usize = shape.iter().product();
    for _ in 0..total.max(1) {
        let mut stable = true;
        'players: for p in 0..shape.len() {
            let here = nf.payoff(&choice, p);
            let mut alt = choice.clone();
            for c in 0..shape[p] {
                alt[p] = c;
                if nf.payoff(&alt, p) > here {
                    stable = false;
                    break 'players;
                }
            }
        }
        if stable {
            out.push(
                choice
                    .iter()
                    .enumerate()
                    .map(|(p, &c)| nf.strategies[p][c].clone())
                    .collect(),
            );
        }
        for p in (0..choice.len()).rev() {
            choice[p] += 1;
            if choice[p] < shape[p] {
                break;
            }
            choice[p] = 0;
        }
    }
    Ok(out)
}

/// A two-player equilibrium from support enumeration. `degenerate` flags
/// supports whose indifference system was underdetermined; the profile is
/// then one representative of the solution set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoPlayerEquilibrium {
    pub profile: MixedProfile,
    pub degenerate: bool,
}

/// Exact support enumeration for two-player games.
///
/// Support pairs are visited in increasing total size, lexicographic within
/// a size, so output order is deterministic. For each pair the linear
/// indifference-and-normalisation system is solved in exact rationals and
/// the candidate is kept iff all support weights are strictly positive and
/// no off-support strategy beats the support value.
pub fn solve_two_player_mixed(
    game: &BooleanGame,
    budget: u128,
) -> Result<Vec<TwoPlayerEquilibrium>, EqError> {
    if game.num_players() != 2 {
        return Err(EqError::NotTwoPlayers(game.num_players()));
    }
    let m = 1usize << game.control(0).len();
    let n = 1usize << game.control(1).len();
    if m as u128 > budget || n as u128 > budget {
        return Err(EqError::BudgetExceeded {
            required: (m as u128).max(n as u128),
            budget,
        });
    }
    let nf = to_normal_form(game, (m as u128) * (n as u128))?;
    let a = |i: usize, j: usize| Rational::from(BigInt::from(nf.payoff(&[i, j], 0)));
    let b = |i: usize, j: usize| Rational::from(BigInt::from(nf.payoff(&[i, j], 1)));

    let mut pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for si in subsets_by_size(m) {
        for sj in subsets_by_size(n) {
            pairs.push((si.clone(), sj));
        }
    }
    pairs.sort_by_key(|(i, j)| (i.len() + j.len(), i.clone(), j.clone()));

    let mut found: Vec<TwoPlayerEquilibrium> = Vec::new();
    let mut seen: Vec<(Vec<Rational>, Vec<Rational>)> = Vec::new();
    for (support_i, support_j) in pairs {
        // Player 2's mix makes player 1 indifferent across support_i.
        let y = solve_indifference(&support_i, &support_j, a);
        let x = solve_indifference_cols(&support_i, &support_j, b);
        let (Some((y, y_unique)), Some((x, x_unique))) = (y, x) else {
            continue;
        };
        if y.iter().any(|w| !w.is_positive()) || x.iter().any(|w| !w.is_positive()) {
            continue;
        }
        let row_value = |i: usize| -> Rational {
            support_j
                .iter()
                .zip(&y)
                .map(|(&j, w)| a(i, j) * w)
                .sum()
        };
        let col_value = |j: usize| -> Rational {
            support_i
                .iter()
                .zip(&x)
                .map(|(&i, w)| b(i, j) * w)
                .sum()
        };
        let u1 = row_value(support_i[0]);
        let u2 = col_value(support_j[0]);
        let ok = support_i.iter().all(|&i| row_value(i) == u1)
            && support_j.iter().all(|&j| col_value(j) == u2)
            && (0..m).all(|i| row_value(i) <= u1)
            && (0..n).all(|j| col_value(j) <= u2);
        if !ok {
            continue;
        }
        let mut xfull = vec![Rational::zero(); m];
        for (&i, w) in support_i.iter().zip(&x) {
            xfull[i] = w.clone();
        }
        let mut yfull = vec![Rational::zero(); n];
        for (&j, w) in support_j.iter().zip(&y) {
            yfull[j] = w.clone();
        }
        if seen.iter().any(|(xs, ys)| *xs == xfull && *ys == yfull) {
            continue;
        }
        let s1 = MixedStrategy::new(
            0,
            support_i
                .iter()
                .zip(&x)
                .map(|(&i, w)| (nf.strategies[0][i].clone(), w.clone()))
                .collect(),
        )?;
        let s2 = MixedStrategy::new(
            1,
            support_j
                .iter()
                .zip(&y)
                .map(|(&j, w)| (nf.strategies[1][j].clone(), w.clone()))
                .collect(),
        )?;
        seen.push((xfull, yfull));
        found.push(TwoPlayerEquilibrium {
            profile: MixedProfile::new(vec![s1, s2])?,
            degenerate: !(y_unique && x_unique),
        });
    }
    Ok(found)
}

fn subsets_by_size(n: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u64..(1 << n))
        .map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect())
        .collect();
    subsets.sort_by_key(|s: &Vec<usize>| (s.len(), s.clone()));
    subsets
}

/// Solve for weights over `cols` that equalise the row player's payoff
/// across `rows` and sum to one.
fn solve_indifference(
    rows: &[usize],
    cols: &[usize],
    payoff: impl Fn(usize, usize) -> Rational,
) -> Option<(Vec<Rational>, bool)> {
    let unknowns = cols.len();
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();
    for t in 1..rows.len() {
        matrix.push(
            cols.iter()
                .map(|&j| payoff(rows[0], j) - payoff(rows[t], j))
                .collect::<Vec<_>>(),
        );
        rhs.push(Rational::zero());
    }
    matrix.push(vec![Rational::one(); unknowns]);
    rhs.push(Rational::one());
    solve_exact(matrix, rhs, unknowns)
}

/// Column-player analogue of [`solve_indifference`].
fn solve_indifference_cols(
    rows: &[usize],
    cols: &[usize],
    payoff: impl Fn(usize, usize) -> Rational,
) -> Option<(Vec<Rational>, bool)> {
    let unknowns = rows.len();
    let mut matrix = Vec::new();
    let mut rhs = Vec::new();
    for t in 1..cols.len() {
        matrix.push(
            rows.iter()
                .map(|&i| payoff(i, cols[0]) - payoff(i, cols[t]))
                .collect::<Vec<_>>(),
        );
        rhs.push(Rational::zero());
    }
    matrix.push(vec![Rational::one(); unknowns]);
    rhs.push(Rational::one());
    solve_exact(matrix, rhs, unknowns)
}

/// Exact Gaussian elimination. Returns a solution and whether it is unique;
/// underdetermined systems get free variables fixed at zero. Returns None
/// when inconsistent.
fn solve_exact(
    mut a: Vec<Vec<Rational>>,
    mut b: Vec<Rational>,
    unknowns: usize,
) -> Option<(Vec<Rational>, bool)> {
    let rows = a.len();
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..unknowns {
        let Some(p) = (row..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        b.swap(row, p);
        let inv = a[row][col].recip();
        for c in col..unknowns {
            a[row][c] = &a[row][c] * &inv;
        }
        b[row] = &b[row] * &inv;
        for r in 0..rows {
            if r != row && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..unknowns {
                    a[r][c] = &a[r][c] - &factor * &a[row][c];
                }
                b[r] = &b[r] - &factor * &b[row];
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    for r in row..rows {
        if !b[r].is_zero() {
            return None;
        }
    }
    let mut solution = vec![Rational::zero(); unknowns];
    for (r, &col) in pivot_cols.iter().enumerate() {
        solution[col] = b[r].clone();
    }
    Some((solution, pivot_cols.len() == unknowns))
}

/// Parse the mixed-profile text format against a game.
pub fn parse_profile(text: &str, game: &BooleanGame) -> Result<MixedProfile, EqError> {
    let mut per_player: Vec<Vec<(PureStrategy, Rational)>> =
        vec![Vec::new(); game.num_players()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| EqError::ProfileFormat { line, message };
        let rest = content
            .strip_prefix("strategy")
            .ok_or_else(|| err("expected 'strategy <i> <num>/<den>: ...'".to_string()))?;
        let (head, body) = rest
            .split_once(':')
            .ok_or_else(|| err("missing ':'".to_string()))?;
        let mut head_parts = head.split_whitespace();
        let player: usize = head_parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad player index".to_string()))?;
        if player == 0 || player > game.num_players() {
            return Err(err(format!("player index {player} out of range")));
        }
        let player = player - 1;
        let weight_text = head_parts
            .next()
            .ok_or_else(|| err("missing weight".to_string()))?;
        let weight = parse_rational(weight_text)
            .ok_or_else(|| err(format!("bad weight '{weight_text}'")))?;
        if head_parts.next().is_some() {
            return Err(err("trailing tokens before ':'".to_string()));
        }
        let mut assignment = BTreeSet::new();
        let mut listed = BTreeSet::new();
        for token in body.split_whitespace() {
            let (name, value) = token
                .split_once('=')
                .ok_or_else(|| err(format!("expected var=0|1, got '{token}'")))?;
            let var = VarId::parse(name);
            if !game.control(player).contains(&var) {
                return Err(err(format!(
                    "{var} is not controlled by player {}",
                    player + 1
                )));
            }
            listed.insert(var.clone());
            match value {
                "1" => {
                    assignment.insert(var);
                }
                "0" => {}
                other => return Err(err(format!("bad value '{other}'"))),
            }
        }
        if &listed != game.control(player) {
            return Err(err(format!(
                "strategy line must list every variable of player {}",
                player + 1
            )));
        }
        per_player[player].push((PureStrategy::new(player, assignment), weight));
    }
    let strategies = per_player
        .into_iter()
        .enumerate()
        .map(|(player, support)| MixedStrategy::new(player, support))
        .collect::<Result<Vec<_>, _>>()?;
    MixedProfile::new(strategies)
}

pub fn parse_rational(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => {
            let n: BigInt = text.parse().ok()?;
            Some(Rational::from(n))
        }
    }
}

/// Render a profile in the text format.
pub fn render_profile(profile: &MixedProfile, game: &BooleanGame) -> String {
    let mut out = String::new();
    for strategy in &profile.strategies {
        for (pure, weight) in &strategy.support {
            let vars: Vec<String> = game
                .control(strategy.player)
                .iter()
                .map(|v| {
                    format!(
                        "{v}={}",
                        if pure.assignment.contains(v) { 1 } else { 0 }
                    )
                })
                .collect();
            let _ = writeln!(
                out,
                "strategy {} {}: {}",
                strategy.player + 1,
                rational_text(weight),
                vars.join(" ")
            );
        }
    }
    out
}

/// Stable `num/den` rendering, denominator always present.
pub fn rational_text(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, Formula};
    use crate::game::matching_pennies;

    const BUDGET: u128 = 1 << 20;

    fn uniform_profile(game: &BooleanGame) -> MixedProfile {
        let strategies = (0..game.num_players())
            .map(|p| MixedStrategy::uniform(p, pure_strategies(game, p)).unwrap())
            .collect();
        MixedProfile::new(strategies).unwrap()
    }

    #[test]
    fn pennies_uniform_expected_utility_is_half() {
        let g = matching_pennies();
        let profile = uniform_profile(&g);
        for p in 0..2 {
            assert_eq!(expected_utility(&g, &profile, p, BUDGET).unwrap(), ratio(1, 2));
        }
        assert_eq!(
            joint_expected_utilities(&g, &profile, BUDGET).unwrap(),
            vec![ratio(1, 2), ratio(1, 2)]
        );
    }

    #[test]
    fn degenerate_pure_profile_equals_utility() {
        let g = matching_pennies();
        let heads = pure_strategies(&g, 0)[1].clone();
        let tails = pure_strategies(&g, 1)[0].clone();
        let profile = MixedProfile::new(vec![
            MixedStrategy::pure(heads),
            MixedStrategy::pure(tails),
        ])
        .unwrap();
        assert_eq!(expected_utility(&g, &profile, 0, BUDGET).unwrap(), ratio(1, 1));
        assert_eq!(expected_utility(&g, &profile, 1, BUDGET).unwrap(), ratio(0, 1));
    }

    #[test]
    fn best_response_examples() {
        let g = matching_pennies();
        let profile = uniform_profile(&g);
        assert_eq!(best_response_value(&g, &profile, 0, BUDGET).unwrap(), ratio(1, 2));

        // Opponent pure heads: player 2 copies the coin for value 1.
        let heads = pure_strategies(&g, 0)[1].clone();
        let fixed = profile.with_replaced(MixedStrategy::pure(heads));
        assert_eq!(best_response_value(&g, &fixed, 1, BUDGET).unwrap(), ratio(1, 1));

        // Goal false: value 0 whatever the opponent does.
        let g2 = BooleanGame::new(
            vec![
                g.control(0).clone(),
                g.control(1).clone(),
            ],
            vec![Formula::fals(), g.goal(1).clone()],
        )
        .unwrap();
        assert_eq!(
            best_response_value(&g2, &uniform_profile(&g2), 0, BUDGET).unwrap(),
            ratio(0, 1)
        );
    }

    #[test]
    fn is_nash_examples() {
        let g = matching_pennies();
        assert!(is_nash(&g, &uniform_profile(&g), BUDGET).unwrap());

        let hh = MixedProfile::new(vec![
            MixedStrategy::pure(pure_strategies(&g, 0)[1].clone()),
            MixedStrategy::pure(pure_strategies(&g, 1)[1].clone()),
        ])
        .unwrap();
        assert!(!is_nash(&g, &hh, BUDGET).unwrap());

        let single = BooleanGame::new(
            vec![[VarId::named("p")].into_iter().collect()],
            vec![parse_formula("p").unwrap()],
        )
        .unwrap();
        let play_p = MixedProfile::new(vec![MixedStrategy::pure(
            pure_strategies(&single, 0)[1].clone(),
        )])
        .unwrap();
        assert!(is_nash(&single, &play_p, BUDGET).unwrap());
    }

    #[test]
    fn epsilon_examples() {
        let g = matching_pennies();
        // Exact NE passes with epsilon 0.
        assert!(is_epsilon_nash(&g, &uniform_profile(&g), &EpsilonBound::zero(), BUDGET).unwrap());

        // Player 1 weights (3/5, 2/5), player 2 uniform: deviation gains are
        // 0 for player 1 and exactly 1/10 for player 2.
        let p1 = MixedStrategy::new(
            0,
            vec![
                (pure_strategies(&g, 0)[1].clone(), ratio(3, 5)),
                (pure_strategies(&g, 0)[0].clone(), ratio(2, 5)),
            ],
        )
        .unwrap();
        let profile = uniform_profile(&g).with_replaced(p1);
        let eps10 = EpsilonBound::new(ratio(1, 10)).unwrap();
        let eps20 = EpsilonBound::new(ratio(1, 20)).unwrap();
        assert!(is_epsilon_nash(&g, &profile, &eps10, BUDGET).unwrap());
        assert!(!is_epsilon_nash(&g, &profile, &eps20, BUDGET).unwrap());
    }

    #[test]
    fn epsilon_monotonicity() {
        let g = matching_pennies();
        let p1 = MixedStrategy::new(
            0,
            vec![
                (pure_strategies(&g, 0)[1].clone(), ratio(3, 5)),
                (pure_strategies(&g, 0)[0].clone(), ratio(2, 5)),
            ],
        )
        .unwrap();
        let profile = uniform_profile(&g).with_replaced(p1);
        let mut previous = false;
        for num in 0..=10i64 {
            let eps = EpsilonBound::new(ratio(num, 10)).unwrap();
            let now = is_epsilon_nash(&g, &profile, &eps, BUDGET).unwrap();
            assert!(!previous || now, "monotonicity violated at {num}/10");
            previous = now;
        }
    }

    #[test]
    fn pure_nash_examples() {
        let g = matching_pennies();
        assert!(enumerate_pure_nash(&g, BUDGET).unwrap().is_empty());

        let g2 = BooleanGame::new(
            vec![
                [VarId::named("p")].into_iter().collect(),
                [VarId::named("q")].into_iter().collect(),
            ],
            vec![parse_formula("p").unwrap(), parse_formula("q").unwrap()],
        )
        .unwrap();
        let nash = enumerate_pure_nash(&g2, BUDGET).unwrap();
        assert_eq!(nash.len(), 1);
        assert_eq!(nash[0][0].assignment.len(), 1);
        assert_eq!(nash[0][1].assignment.len(), 1);

        let g3 = BooleanGame::new(
            vec![
                [VarId::named("p")].into_iter().collect(),
                [VarId::named("q")].into_iter().collect(),
            ],
            vec![Formula::tru(), Formula::tru()],
        )
        .unwrap();
        assert_eq!(enumerate_pure_nash(&g3, BUDGET).unwrap().len(), 4);
    }

    #[test]
    fn solve_two_player_pennies() {
        let g = matching_pennies();
        let eqs = solve_two_player_mixed(&g, BUDGET).unwrap();
        assert_eq!(eqs.len(), 1);
        let profile = &eqs[0].profile;
        for p in 0..2 {
            for (_, w) in profile.strategy(p).support() {
                assert_eq!(*w, ratio(1, 2));
            }
            assert_eq!(expected_utility(&g, profile, p, BUDGET).unwrap(), ratio(1, 2));
        }
        assert!(is_nash(&g, profile, BUDGET).unwrap());
    }

    #[test]
    fn solve_two_player_trivial_opponent() {
        let g = BooleanGame::new(
            vec![
                [VarId::named("p")].into_iter().collect(),
                [VarId::named("q")].into_iter().collect(),
            ],
            vec![parse_formula("p").unwrap(), Formula::tru()],
        )
        .unwrap();
        let eqs = solve_two_player_mixed(&g, BUDGET).unwrap();
        assert!(!eqs.is_empty());
        for eq in &eqs {
            for (pure, w) in eq.profile.strategy(0).support() {
                assert_eq!(pure.assignment.len(), 1, "player 1 must play {{p}}");
                assert_eq!(*w, ratio(1, 1));
            }
            assert!(is_nash(&g, &eq.profile, BUDGET).unwrap());
        }
    }

    #[test]
    fn solve_two_player_coordination_includes_pure() {
        let g = BooleanGame::new(
            vec![
                [VarId::named("p")].into_iter().collect(),
                [VarId::named("q")].into_iter().collect(),
            ],
            vec![
                parse_formula("p <-> q").unwrap(),
                parse_formula("p <-> q").unwrap(),
            ],
        )
        .unwrap();
        let eqs = solve_two_player_mixed(&g, BUDGET).unwrap();
        // Brute-force pure check confirms both pure equilibria are present.
        let pure_eqs = enumerate_pure_nash(&g, BUDGET).unwrap();
        assert_eq!(pure_eqs.len(), 2);
        for pure in pure_eqs {
            let as_profile = MixedProfile::new(vec![
                MixedStrategy::pure(pure[0].clone()),
                MixedStrategy::pure(pure[1].clone()),
            ])
            .unwrap();
            assert!(eqs.iter().any(|e| e.profile == as_profile));
        }
        for eq in &eqs {
            assert!(is_nash(&g, &eq.profile, BUDGET).unwrap());
        }
    }

    #[test]
    fn profile_file_roundtrip() {
        let g = matching_pennies();
        let profile = uniform_profile(&g);
        let text = render_profile(&profile, &g);
        let parsed = parse_profile(&text, &g).unwrap();
        assert_eq!(parsed, profile);

        // Weights must sum to one.
        let bad = "strategy 1 1/2: p=1\nstrategy 2 1/1: q=0\n";
        assert!(parse_profile(bad, &g).is_err());
    }

    #[test]
    fn budget_errors_are_reported() {
        let g = matching_pennies();
        let profile = uniform_profile(&g);
        match expected_utility(&g, &profile, 0, 1) {
            Err(EqError::BudgetExceeded { required, budget }) => {
                assert_eq!(required, 4);
                assert_eq!(budget, 1);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
