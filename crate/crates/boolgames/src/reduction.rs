//! The six-player game compiler: (machine, step bound, input) to a Boolean
//! game plus exact payoff targets, with the two-player guarantee extension
//! (Players Seven/Eight) and the pennies epsilon gadget.
//!
//! Variable naming is fixed so emission is deterministic: player i's
//! variable with prefix x, role R and index j renders as `pi.xRj`. Scalar
//! roles (Head, Zero, One, Left, Right) use index 0; Time/Tape/State
//! indices are 1-based with index 1 the most significant bit.

use crate::equilibria::Rational;
use crate::formula::{eq_block, expand_oneof, succ_formula, Formula, GadgetError, Prefix, VarId};
use crate::game::{BooleanGame, GameError};
use crate::tm::{BoundedInstance, Dir, Ntm, Symbol};
use num::{BigInt, One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum ReductionError {
    #[error("k = {0} is too small; the construction needs k >= 2")]
    KTooSmall(u32),
    #[error("bad extension: {0}")]
    BadExtension(String),
    #[error("targets file: line {line}: {message}")]
    TargetsFormat { line: usize, message: String },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// Every emitted variable, organised by paper family. Player 3's six
/// step/cell positions are indexed 0..6 in the order p, (plain), s, np, n,
/// ns — columns left/centre/right of the first step then of the next step.
#[derive(Clone, Debug)]
pub struct Vars {
    pub zero1: VarId,
    pub one1: VarId,
    pub head1: VarId,
    pub left1: VarId,
    pub right1: VarId,
    pub time1: Vec<VarId>,
    pub tape1: Vec<VarId>,
    pub state1: Vec<VarId>,

    pub head2: VarId,
    pub shead2: VarId,
    pub left2: VarId,
    pub sleft2: VarId,
    pub right2: VarId,
    pub sright2: VarId,
    pub tape2: Vec<VarId>,
    pub stape2: Vec<VarId>,
    pub time2: Vec<VarId>,

    pub head3: Vec<VarId>,
    pub zero3: Vec<VarId>,
    pub one3: Vec<VarId>,
    pub state3: Vec<Vec<VarId>>,
    pub tape3: Vec<Vec<VarId>>,
    pub time3: Vec<VarId>,
    pub ntime3: Vec<VarId>,

    pub time4: Vec<VarId>,
    pub tape4: Vec<VarId>,
    pub time5: Vec<VarId>,
    pub tape5: Vec<VarId>,
    pub time6: Vec<VarId>,
    pub tape6: Vec<VarId>,
}

/// The six position prefixes in column order for the two steps.
pub const POSITION_PREFIXES: [Prefix; 6] = [
    Prefix::P,
    Prefix::Plain,
    Prefix::S,
    Prefix::Np,
    Prefix::N,
    Prefix::Ns,
];

fn scoped(player: u32, prefix: Prefix, role: &str, index: u32) -> VarId {
    VarId::scoped(player, prefix, role, index)
}

fn family(player: u32, prefix: Prefix, role: &str, count: usize) -> Vec<VarId> {
    (1..=count as u32)
        .map(|i| scoped(player, prefix, role, i))
        .collect()
}

impl Vars {
    pub fn new(k: usize, q: usize) -> Vars {
        let plain = Prefix::Plain;
        let s = Prefix::S;
        Vars {
            zero1: scoped(1, plain, "Zero", 0),
            one1: scoped(1, plain, "One", 0),
            head1: scoped(1, plain, "Head", 0),
            left1: scoped(1, plain, "Left", 0),
            right1: scoped(1, plain, "Right", 0),
            time1: family(1, plain, "Time", k),
            tape1: family(1, plain, "Tape", k),
            state1: family(1, plain, "State", q),

            head2: scoped(2, plain, "Head", 0),
            shead2: scoped(2, s, "Head", 0),
            left2: scoped(2, plain, "Left", 0),
            sleft2: scoped(2, s, "Left", 0),
            right2: scoped(2, plain, "Right", 0),
            sright2: scoped(2, s, "Right", 0),
            tape2: family(2, plain, "Tape", k),
            stape2: family(2, s, "Tape", k),
            time2: family(2, plain, "Time", k),

            head3: POSITION_PREFIXES
                .iter()
                .map(|&p| scoped(3, p, "Head", 0))
                .collect(),
            zero3: POSITION_PREFIXES
                .iter()
                .map(|&p| scoped(3, p, "Zero", 0))
                .collect(),
            one3: POSITION_PREFIXES
                .iter()
                .map(|&p| scoped(3, p, "One", 0))
                .collect(),
            state3: POSITION_PREFIXES
                .iter()
                .map(|&p| family(3, p, "State", q))
                .collect(),
            tape3: POSITION_PREFIXES
                .iter()
                .map(|&p| family(3, p, "Tape", k))
                .collect(),
            time3: family(3, plain, "Time", k),
            ntime3: family(3, Prefix::N, "Time", k),

            time4: family(4, plain, "Time", k),
            tape4: family(4, plain, "Tape", k),
            time5: family(5, plain, "Time", k),
            tape5: family(5, plain, "Tape", k),
            time6: family(6, plain, "Time", k),
            tape6: family(6, plain, "Tape", k),
        }
    }

    fn control_sets(&self) -> Vec<BTreeSet<VarId>> {
        let mut phi1: BTreeSet<VarId> = [
            &self.zero1,
            &self.one1,
            &self.head1,
            &self.left1,
            &self.right1,
        ]
        .into_iter()
        .cloned()
        .collect();
        phi1.extend(self.time1.iter().cloned());
        phi1.extend(self.tape1.iter().cloned());
        phi1.extend(self.state1.iter().cloned());

        let mut phi2: BTreeSet<VarId> = [
            &self.head2,
            &self.shead2,
            &self.left2,
            &self.sleft2,
            &self.right2,
            &self.sright2,
        ]
        .into_iter()
        .cloned()
        .collect();
        phi2.extend(self.tape2.iter().cloned());
        phi2.extend(self.stape2.iter().cloned());
        phi2.extend(self.time2.iter().cloned());

        let mut phi3: BTreeSet<VarId> = BTreeSet::new();
        for pos in 0..6 {
            phi3.insert(self.head3[pos].clone());
            phi3.insert(self.zero3[pos].clone());
            phi3.insert(self.one3[pos].clone());
            phi3.extend(self.state3[pos].iter().cloned());
            phi3.extend(self.tape3[pos].iter().cloned());
        }
        phi3.extend(self.time3.iter().cloned());
        phi3.extend(self.ntime3.iter().cloned());

        let pair = |t: &[VarId], c: &[VarId]| -> BTreeSet<VarId> {
            t.iter().chain(c).cloned().collect()
        };
        vec![
            phi1,
            phi2,
            phi3,
            pair(&self.time4, &self.tape4),
            pair(&self.time5, &self.tape5),
            pair(&self.time6, &self.tape6),
        ]
    }

    fn index_maps(&self) -> BTreeMap<String, Vec<VarId>> {
        let mut m = BTreeMap::new();
        let mut put = |name: &str, vars: Vec<VarId>| {
            m.insert(name.to_string(), vars);
        };
        put("Zero1", vec![self.zero1.clone()]);
        put("One1", vec![self.one1.clone()]);
        put("Head1", vec![self.head1.clone()]);
        put("Left1", vec![self.left1.clone()]);
        put("Right1", vec![self.right1.clone()]);
        put("Time1", self.time1.clone());
        put("Tape1", self.tape1.clone());
        put("State1", self.state1.clone());

        put("Head2", vec![self.head2.clone()]);
        put("sHead2", vec![self.shead2.clone()]);
        put("Left2", vec![self.left2.clone()]);
        put("sLeft2", vec![self.sleft2.clone()]);
        put("Right2", vec![self.right2.clone()]);
        put("sRight2", vec![self.sright2.clone()]);
        put("Tape2", self.tape2.clone());
        put("sTape2", self.stape2.clone());
        put("Time2", self.time2.clone());

        for (pos, &prefix) in POSITION_PREFIXES.iter().enumerate() {
            let tag = prefix.as_str();
            put(&format!("{tag}Head3"), vec![self.head3[pos].clone()]);
            put(&format!("{tag}Zero3"), vec![self.zero3[pos].clone()]);
            put(&format!("{tag}One3"), vec![self.one3[pos].clone()]);
            put(&format!("{tag}State3"), self.state3[pos].clone());
            put(&format!("{tag}Tape3"), self.tape3[pos].clone());
        }
        put("Time3", self.time3.clone());
        put("nTime3", self.ntime3.clone());

        put("Time4", self.time4.clone());
        put("Tape4", self.tape4.clone());
        put("Time5", self.time5.clone());
        put("Tape5", self.tape5.clone());
        put("Time6", self.time6.clone());
        put("Tape6", self.tape6.clone());
        m
    }
}

/// The compiled game together with audit metadata: exact payoff targets,
/// the variable family maps, and every named subformula of the
/// construction.
#[derive(Clone, Debug)]
pub struct ReductionOutput {
    pub game: BooleanGame,
    pub targets: Vec<Rational>,
    pub vars: Vars,
    pub index_maps: BTreeMap<String, Vec<VarId>>,
    pub subformulas: BTreeMap<String, Formula>,
    pub k: usize,
    pub q: usize,
    pub steps: u64,
    /// The (do-nothing-augmented) machine the game was compiled from.
    pub machine: Ntm,
    /// Nominal utility increment 1/2^m after the pennies gadget.
    pub pennies_increment: Option<Rational>,
}

impl ReductionOutput {
    /// Same game with every oneof node rewritten to pure propositional
    /// logic.
    pub fn with_expanded_oneof(&self) -> Result<ReductionOutput, ReductionError> {
        let goals = self.game.goals().iter().map(expand_oneof).collect();
        let mut out = self.clone();
        out.game = BooleanGame::new(
            (0..self.game.num_players())
                .map(|p| self.game.control(p).clone())
                .collect(),
            goals,
        )?;
        Ok(out)
    }
}

fn lit(v: &VarId) -> Formula {
    Formula::var(v.clone())
}

fn nlit(v: &VarId) -> Formula {
    Formula::not(lit(v))
}

/// Conjunction of literals expressing `value` over an MSB-first family.
fn index_pattern(vars: &[VarId], value: usize) -> Formula {
    let k = vars.len();
    Formula::and(
        vars.iter()
            .enumerate()
            .map(|(i, v)| {
                if value >> (k - 1 - i) & 1 == 1 {
                    lit(v)
                } else {
                    nlit(v)
                }
            })
            .collect(),
    )
}

fn all_false(vars: &[VarId]) -> Formula {
    Formula::and(vars.iter().map(nlit).collect())
}

/// SUCC over two MSB-first families (the gadget wants LSB-first lists).
fn succ_msb(ps: &[VarId], qs: &[VarId]) -> Result<Formula, GadgetError> {
    let rev = |v: &[VarId]| -> Vec<VarId> { v.iter().rev().cloned().collect() };
    succ_formula(&rev(ps), &rev(qs))
}

fn eq_families(ps: &[VarId], qs: &[VarId]) -> Formula {
    eq_block(ps, qs).expect("families have equal length")
}

/// The paper's symbol literal at a position: Zero/One positively, blank as
/// the negated disjunction.
fn symbol_literal(vars: &Vars, pos: usize, symbol: Symbol) -> Formula {
    match symbol {
        Symbol::Zero => lit(&vars.zero3[pos]),
        Symbol::One => lit(&vars.one3[pos]),
        Symbol::Blank => Formula::not(Formula::or(vec![
            lit(&vars.zero3[pos]),
            lit(&vars.one3[pos]),
        ])),
    }
}

/// Content assertion for the written cell at a next-step position.
fn written_content(vars: &Vars, npos: usize, symbol: Symbol) -> Formula {
    match symbol {
        Symbol::Zero => lit(&vars.zero3[npos]),
        Symbol::One => lit(&vars.one3[npos]),
        Symbol::Blank => Formula::and(vec![nlit(&vars.zero3[npos]), nlit(&vars.one3[npos])]),
    }
}

/// Propagation biconditionals (contents unchanged) for one column.
fn propagate_column(vars: &Vars, col: usize) -> Vec<Formula> {
    vec![
        Formula::iff(lit(&vars.zero3[col]), lit(&vars.zero3[col + 3])),
        Formula::iff(lit(&vars.one3[col]), lit(&vars.one3[col + 3])),
    ]
}

/// One admissible next-step description for a machine rule fired with the
/// head at triple column `pos` (0 = left, 1 = centre, 2 = right). With
/// `boundary` set the leftmost column is tape cell 0, so a left move
/// stands still. Columns the head leaves the triple through get no head or
/// state terms.
fn rule_clause(
    vars: &Vars,
    to_state: usize,
    write: Symbol,
    dir: Dir,
    pos: usize,
    boundary: bool,
) -> Formula {
    let mut conj = vec![written_content(vars, pos + 3, write)];
    for col in 0..3 {
        if col != pos {
            conj.extend(propagate_column(vars, col));
        }
    }
    let dest = match dir {
        Dir::L if boundary && pos == 0 => 0i32,
        Dir::L => pos as i32 - 1,
        Dir::R => pos as i32 + 1,
    };
    if (0..3).contains(&dest) {
        let npos = dest as usize + 3;
        conj.push(lit(&vars.head3[npos]));
        conj.push(lit(&vars.state3[npos][to_state]));
    }
    Formula::and(conj)
}

/// The do-nothing step available in accepting states: head, state and all
/// three cell contents carry over unchanged.
fn do_nothing_clause(vars: &Vars, state: usize, pos: usize) -> Formula {
    let mut conj = vec![
        lit(&vars.head3[pos + 3]),
        lit(&vars.state3[pos + 3][state]),
    ];
    for col in 0..3 {
        conj.extend(propagate_column(vars, col));
    }
    Formula::and(conj)
}

/// Build the six-player game for a bounded instance. The instance's
/// machine is already do-nothing-augmented by construction.
pub fn build_reduction(inst: &BoundedInstance) -> Result<ReductionOutput, ReductionError> {
    let k = inst.k as usize;
    if k < 2 {
        return Err(ReductionError::KTooSmall(inst.k));
    }
    let machine = &inst.machine;
    let q = machine.num_states();
    let vars = Vars::new(k, q);
    let v = &vars;
    let mut subformulas: BTreeMap<String, Formula> = BTreeMap::new();

    // ---- Player One ----
    let init_head = Formula::and(vec![
        Formula::implies(all_false(&v.tape1), lit(&v.head1)),
        Formula::implies(Formula::not(all_false(&v.tape1)), lit(&v.left1)),
    ]);
    let initial_index = machine
        .state_index(&machine.initial)
        .expect("initial state is declared");
    let init_state = lit(&v.state1[initial_index]);
    let w = &inst.input;
    let mut init_tape_conj: Vec<Formula> = (0..w.len())
        .map(|i| {
            let content = match w[i] {
                Symbol::Zero => lit(&v.zero1),
                Symbol::One => lit(&v.one1),
                Symbol::Blank => unreachable!("inputs are binary"),
            };
            Formula::implies(index_pattern(&v.tape1, i), content)
        })
        .collect();
    let blank_cells = Formula::implies(
        Formula::not(Formula::or(
            (0..w.len()).map(|i| index_pattern(&v.tape1, i)).collect(),
        )),
        Formula::and(vec![nlit(&v.zero1), nlit(&v.one1)]),
    );
    init_tape_conj.push(blank_cells.clone());
    let init_tape = Formula::and(init_tape_conj);
    let init = Formula::implies(
        all_false(&v.time1),
        Formula::and(vec![init_head.clone(), init_state.clone(), init_tape.clone()]),
    );

    let accepting_disjunction = Formula::or(
        machine
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| machine.is_accepting(s))
            .map(|(i, _)| lit(&v.state1[i]))
            .collect(),
    );
    let final_f = Formula::implies(
        index_pattern(&v.time1, inst.steps as usize),
        accepting_disjunction,
    );

    let cons1 = Formula::and(vec![
        Formula::not(Formula::and(vec![lit(&v.zero1), lit(&v.one1)])),
        Formula::oneof(vec![lit(&v.head1), lit(&v.left1), lit(&v.right1)]),
        Formula::oneof(v.state1.iter().map(lit).collect()),
    ]);

    let gamma4 = Formula::and(vec![
        eq_families(&v.time1, &v.time4),
        eq_families(&v.tape1, &v.tape4),
    ]);
    let gamma1 = Formula::and(vec![
        init.clone(),
        final_f.clone(),
        cons1.clone(),
        Formula::not(gamma4.clone()),
    ]);

    // ---- Player Two ----
    let agree_time = eq_families(&v.time1, &v.time2);
    let agree_cell = eq_families(&v.tape1, &v.tape2);
    let s_agree_cell = eq_families(&v.tape1, &v.stape2);
    let agree_head = Formula::and(vec![
        Formula::iff(lit(&v.head1), lit(&v.head2)),
        Formula::iff(lit(&v.left1), lit(&v.left2)),
        Formula::iff(lit(&v.right1), lit(&v.right2)),
    ]);
    let s_agree_head = Formula::and(vec![
        Formula::iff(lit(&v.head1), lit(&v.shead2)),
        Formula::iff(lit(&v.left1), lit(&v.sleft2)),
        Formula::iff(lit(&v.right1), lit(&v.sright2)),
    ]);
    let match_one2 = Formula::implies(
        agree_time,
        Formula::and(vec![
            Formula::implies(agree_cell, agree_head),
            Formula::implies(s_agree_cell, s_agree_head),
        ]),
    );
    let cons2 = Formula::or(vec![
        Formula::and(vec![lit(&v.right2), lit(&v.sright2)]),
        Formula::and(vec![lit(&v.right2), lit(&v.shead2)]),
        Formula::and(vec![lit(&v.head2), lit(&v.sleft2)]),
        Formula::and(vec![lit(&v.left2), lit(&v.sleft2)]),
    ]);
    let succ2 = succ_msb(&v.tape2, &v.stape2)?;
    let gamma5 = Formula::and(vec![
        eq_families(&v.tape2, &v.tape5),
        eq_families(&v.time2, &v.time5),
    ]);
    let gamma2 = Formula::and(vec![
        match_one2.clone(),
        cons2.clone(),
        succ2.clone(),
        Formula::not(gamma5.clone()),
    ]);

    // ---- Player Three ----
    // Six agreement statements: (step row, triple column) in row-major
    // order, each comparing Player One's claims against the matching
    // prefixed family.
    let match_one3 = Formula::and(
        (0..6)
            .map(|pos| {
                let time_row = if pos < 3 { &v.time3 } else { &v.ntime3 };
                Formula::implies(
                    Formula::and(vec![
                        eq_families(&v.time1, time_row),
                        eq_families(&v.tape1, &v.tape3[pos]),
                    ]),
                    Formula::and(
                        [
                            Formula::iff(lit(&v.zero1), lit(&v.zero3[pos])),
                            Formula::iff(lit(&v.one1), lit(&v.one3[pos])),
                            Formula::iff(lit(&v.head1), lit(&v.head3[pos])),
                        ]
                        .into_iter()
                        .chain(
                            v.state1
                                .iter()
                                .zip(&v.state3[pos])
                                .map(|(a, b)| Formula::iff(lit(a), lit(b))),
                        )
                        .collect(),
                    ),
                )
            })
            .collect(),
    );

    let triple = Formula::and(vec![
        succ_msb(&v.tape3[0], &v.tape3[1])?,
        succ_msb(&v.tape3[1], &v.tape3[2])?,
        succ_msb(&v.tape3[3], &v.tape3[4])?,
        succ_msb(&v.tape3[4], &v.tape3[5])?,
        eq_families(&v.tape3[1], &v.tape3[4]),
    ]);
    let succ3 = succ_msb(&v.time3, &v.ntime3)?;

    // Available next-step descriptions when reading `symbol` in state `r`
    // with the head at triple column `pos`.
    let clauses_for = |r: usize, symbol: Symbol, pos: usize, boundary: bool| -> Formula {
        let mut clauses: Vec<Formula> = machine
            .rules
            .iter()
            .filter(|rule| {
                machine.state_index(&rule.from_state) == Some(r) && rule.read == symbol
            })
            .map(|rule| {
                let to = machine
                    .state_index(&rule.to_state)
                    .expect("rule endpoints are declared");
                rule_clause(v, to, rule.write, rule.dir, pos, boundary)
            })
            .collect();
        if machine.do_nothing && machine.is_accepting(&machine.states[r]) {
            clauses.push(do_nothing_clause(v, r, pos));
        }
        Formula::oneof(clauses)
    };

    let symbols = [Symbol::Zero, Symbol::One, Symbol::Blank];
    // Left: the head sits on the leftmost monitored cell. Each (r, s) row
    // splits into the interior implication L and the boundary implication
    // B (cell 0 moving left stands still).
    let left = Formula::and(
        (0..q)
            .flat_map(|r| {
                symbols.into_iter().flat_map(move |s| [(r, s, false), (r, s, true)])
            })
            .map(|(r, s, boundary)| {
                let zero_cell = all_false(&v.tape3[0]);
                let cell_cond = if boundary {
                    zero_cell
                } else {
                    Formula::not(zero_cell)
                };
                Formula::implies(
                    Formula::and(vec![
                        lit(&v.head3[0]),
                        lit(&v.state3[0][r]),
                        symbol_literal(v, 0, s),
                        cell_cond,
                    ]),
                    clauses_for(r, s, 0, boundary),
                )
            })
            .collect(),
    );
    let row_without_boundary = |pos: usize| -> Formula {
        Formula::and(
            (0..q)
                .flat_map(|r| symbols.into_iter().map(move |s| (r, s)))
                .map(|(r, s)| {
                    Formula::implies(
                        Formula::and(vec![
                            lit(&v.head3[pos]),
                            lit(&v.state3[pos][r]),
                            symbol_literal(v, pos, s),
                        ]),
                        clauses_for(r, s, pos, false),
                    )
                })
                .collect(),
        )
    };
    let centre = row_without_boundary(1);
    let right = row_without_boundary(2);
    let no_head = Formula::implies(
        Formula::and(vec![
            nlit(&v.head3[0]),
            nlit(&v.head3[1]),
            nlit(&v.head3[2]),
        ]),
        Formula::and((0..3).flat_map(|col| propagate_column(v, col)).collect()),
    );
    let rules = Formula::and(vec![
        left.clone(),
        centre.clone(),
        right.clone(),
        no_head.clone(),
    ]);

    let gamma6 = Formula::and(vec![
        eq_families(&v.tape3[1], &v.tape6),
        eq_families(&v.time3, &v.time6),
    ]);
    let gamma3 = Formula::and(vec![
        match_one3.clone(),
        triple.clone(),
        succ3.clone(),
        rules.clone(),
        Formula::not(gamma6.clone()),
    ]);

    for (name, f) in [
        ("Init", &init),
        ("InitHead", &init_head),
        ("InitState", &init_state),
        ("InitTape", &init_tape),
        ("BlankCells", &blank_cells),
        ("Final", &final_f),
        ("Cons1", &cons1),
        ("gamma1", &gamma1),
        ("gamma4", &gamma4),
        ("MatchOne2", &match_one2),
        ("Cons2", &cons2),
        ("Succ2", &succ2),
        ("gamma2", &gamma2),
        ("gamma5", &gamma5),
        ("MatchOne3", &match_one3),
        ("Triple", &triple),
        ("Succ3", &succ3),
        ("Left", &left),
        ("Centre", &centre),
        ("Right", &right),
        ("NoHead", &no_head),
        ("Rules", &rules),
        ("gamma3", &gamma3),
        ("gamma6", &gamma6),
    ] {
        subformulas.insert(name.to_string(), f.clone());
    }

    let game = BooleanGame::new(
        vars.control_sets(),
        vec![gamma1, gamma2, gamma3, gamma4, gamma5, gamma6],
    )?;
    let index_maps = vars.index_maps();
    Ok(ReductionOutput {
        game,
        targets: payoff_targets(inst.k)?,
        vars,
        index_maps,
        subformulas,
        k,
        q,
        steps: inst.steps,
        machine: machine.clone(),
        pennies_increment: None,
    })
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

/// The guaranteed payoffs: v1 = (2^2k - 1)/2^2k,
/// v2 = (2^k(2^k - 1) - 1)/(2^k(2^k - 1)),
/// v3 = ((2^k - 2)(2^k - 1) - 1)/((2^k - 2)(2^k - 1)), and 0 for Players
/// Four through Six.
pub fn payoff_targets(k: u32) -> Result<Vec<Rational>, ReductionError> {
    if k < 2 {
        return Err(ReductionError::KTooSmall(k));
    }
    let k = k as usize;
    let d1 = pow2(2 * k);
    let d2 = pow2(k) * (pow2(k) - 1);
    let d3 = (pow2(k) - 2) * (pow2(k) - 1);
    let frac = |d: BigInt| Rational::new(&d - BigInt::one(), d);
    Ok(vec![
        frac(d1),
        frac(d2),
        frac(d3),
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
    ])
}

/// Player Seven's guarantee threshold:
/// 1 - ((2^k - 2)(2^k - 1) + 2^k(2^k - 1) - 1) / (2^k(2^k - 1)(2^k - 2)(2^k - 1)).
pub fn forall_threshold(k: u32) -> Result<Rational, ReductionError> {
    if k < 2 {
        return Err(ReductionError::KTooSmall(k));
    }
    let k = k as usize;
    let d2 = pow2(k) * (pow2(k) - 1);
    let d3 = (pow2(k) - 2) * (pow2(k) - 1);
    let loss = Rational::new(&d3 + &d2 - BigInt::one(), d2 * d3);
    Ok(Rational::one() - loss)
}

/// Append Player Seven (goal gamma2 and gamma3, no variables) and Player
/// Eight (the complement, no variables).
pub fn extend_for_forall(out: &ReductionOutput) -> Result<ReductionOutput, ReductionError> {
    if out.game.num_players() != 6 {
        return Err(ReductionError::BadExtension(format!(
            "expected the 6-player reduction game, got {} players",
            out.game.num_players()
        )));
    }
    let gamma7 = Formula::and(vec![out.game.goal(1).clone(), out.game.goal(2).clone()]);
    let gamma8 = Formula::not(gamma7.clone());
    let mut control: Vec<BTreeSet<VarId>> = (0..6).map(|p| out.game.control(p).clone()).collect();
    control.push(BTreeSet::new());
    control.push(BTreeSet::new());
    let mut goals = out.game.goals().to_vec();
    goals.push(gamma7.clone());
    goals.push(gamma8.clone());

    let mut extended = out.clone();
    extended.game = BooleanGame::new(control, goals)?;
    let v7 = forall_threshold(out.k as u32)?;
    extended.targets.push(v7.clone());
    extended.targets.push(Rational::one() - v7);
    extended.subformulas.insert("gamma7".into(), gamma7);
    extended.subformulas.insert("gamma8".into(), gamma8);
    Ok(extended)
}

/// Add the epsilon gadget: Player Seven gets m fresh pennies variables and
/// a new player controls m matching ones; gamma7' = gamma7 or Pennies,
/// gamma8 stays the complement, and the new player wants the pennies to
/// mismatch. The nominal increment 1/2^m is recorded on the output.
pub fn pennies_epsilon(out: &ReductionOutput, m: usize) -> Result<ReductionOutput, ReductionError> {
    if out.game.num_players() != 8 {
        return Err(ReductionError::BadExtension(format!(
            "pennies gadget extends the 8-player game, got {} players",
            out.game.num_players()
        )));
    }
    if m == 0 {
        return Err(ReductionError::BadExtension(
            "pennies gadget needs at least one variable".into(),
        ));
    }
    let penny7: Vec<VarId> = family(7, Prefix::Plain, "Penny", m);
    let penny9: Vec<VarId> = family(9, Prefix::Plain, "Penny", m);
    let pennies = eq_families(&penny7, &penny9);

    let gamma7 = out
        .subformulas
        .get("gamma7")
        .ok_or_else(|| ReductionError::BadExtension("missing gamma7".into()))?
        .clone();
    let gamma7p = Formula::or(vec![gamma7, pennies.clone()]);
    let gamma8 = Formula::not(gamma7p.clone());
    let gamma9 = Formula::not(pennies.clone());

    let mut control: Vec<BTreeSet<VarId>> = (0..8).map(|p| out.game.control(p).clone()).collect();
    control[6].extend(penny7.iter().cloned());
    control.push(penny9.iter().cloned().collect());
    let mut goals = out.game.goals().to_vec();
    goals[6] = gamma7p.clone();
    goals[7] = gamma8.clone();
    goals.push(gamma9.clone());

    let mut extended = out.clone();
    extended.game = BooleanGame::new(control, goals)?;
    extended.targets.push(Rational::zero());
    extended.index_maps.insert("Penny7".into(), penny7);
    extended.index_maps.insert("Penny9".into(), penny9);
    extended.subformulas.insert("Pennies".into(), pennies);
    extended.subformulas.insert("gamma7prime".into(), gamma7p);
    extended.subformulas.insert("gamma8".into(), gamma8);
    extended.subformulas.insert("gamma9".into(), gamma9);
    extended.pennies_increment = Some(Rational::new(BigInt::one(), pow2(m)));
    Ok(extended)
}

/// Render the targets sidecar: one `v <i> <num>/<den>` line per player.
pub fn render_targets(targets: &[Rational]) -> String {
    let mut out = String::new();
    for (i, t) in targets.iter().enumerate() {
        let _ = writeln!(out, "v {} {}/{}", i + 1, t.numer(), t.denom());
    }
    out
}

/// Parse the targets sidecar.
pub fn parse_targets(text: &str) -> Result<Vec<Rational>, ReductionError> {
    let mut out: Vec<(usize, Rational)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ReductionError::TargetsFormat { line, message };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let ["v", idx, value] = tokens.as_slice() else {
            return Err(err("expected 'v <i> <num>/<den>'".to_string()));
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| err(format!("bad player index '{idx}'")))?;
        let value = crate::equilibria::parse_rational(value)
            .ok_or_else(|| err(format!("bad rational '{value}'")))?;
        out.push((idx, value));
    }
    out.sort_by_key(|(i, _)| *i);
    for (pos, (i, _)) in out.iter().enumerate() {
        if *i != pos + 1 {
            return Err(ReductionError::TargetsFormat {
                line: 0,
                message: format!("player indices must be 1..n, found {i}"),
            });
        }
    }
    Ok(out.into_iter().map(|(_, v)| v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::ratio;
    use crate::game::validate_game;
    use crate::tm::parse_machine;

    const MICRO: &str = "\
states: s0 sa
initial: s0
accepting: sa
rule: s0 1 -> sa 1 R
";

    fn micro_output() -> ReductionOutput {
        let inst =
            BoundedInstance::new(parse_machine(MICRO).unwrap(), 3, "1").unwrap();
        build_reduction(&inst).unwrap()
    }

    #[test]
    fn control_set_inventory_counts() {
        let out = micro_output();
        let (k, q) = (out.k, out.q);
        assert_eq!((k, q), (2, 2));
        let game = &out.game;
        assert_eq!(game.control(0).len(), 2 * k + 5 + q); // 11
        assert_eq!(game.control(1).len(), 3 * k + 6); // 12
        assert_eq!(game.control(2).len(), 8 * k + 6 * q + 18); // 46
        for p in 3..6 {
            assert_eq!(game.control(p).len(), 2 * k);
        }
        assert!(validate_game(game).is_valid());
        // Every family appears in the maps exactly once, and the maps
        // cover exactly the controlled variables.
        assert_eq!(out.index_maps.len(), 55);
        let mapped: BTreeSet<&VarId> = out.index_maps.values().flatten().collect();
        let controlled: BTreeSet<&VarId> = (0..6).flat_map(|p| game.control(p)).collect();
        assert_eq!(mapped, controlled);
    }

    #[test]
    fn payoff_targets_examples() {
        let t = payoff_targets(2).unwrap();
        assert_eq!(
            t,
            vec![
                ratio(15, 16),
                ratio(11, 12),
                ratio(5, 6),
                ratio(0, 1),
                ratio(0, 1),
                ratio(0, 1),
            ]
        );
        let t3 = payoff_targets(3).unwrap();
        assert_eq!(&t3[..3], &[ratio(63, 64), ratio(55, 56), ratio(41, 42)]);
        assert!(payoff_targets(1).is_err());
        assert_eq!(micro_output().targets, payoff_targets(2).unwrap());
    }

    #[test]
    fn every_goal_conjunct_is_addressable() {
        let out = micro_output();
        for name in [
            "Init", "InitHead", "InitState", "InitTape", "BlankCells", "Final", "Cons1",
            "MatchOne2", "Cons2", "Succ2", "MatchOne3", "Triple", "Succ3", "Left", "Centre",
            "Right", "NoHead", "Rules", "gamma1", "gamma2", "gamma3", "gamma4", "gamma5",
            "gamma6",
        ] {
            assert!(out.subformulas.contains_key(name), "missing {name}");
        }
        // Free variables of each named piece stay inside the families the
        // construction assigns them.
        let p1: BTreeSet<VarId> = out.game.control(0).clone();
        for name in ["Init", "Final", "Cons1"] {
            assert!(
                out.subformulas[name].free_vars().is_subset(&p1),
                "{name} leaks outside Player One's variables"
            );
        }
        let p13: BTreeSet<VarId> = p1
            .union(out.game.control(2))
            .cloned()
            .collect();
        assert!(out.subformulas["MatchOne3"].free_vars().is_subset(&p13));
        let p3 = out.game.control(2);
        for name in ["Triple", "Succ3", "Rules"] {
            assert!(out.subformulas[name].free_vars().is_subset(p3));
        }
    }

    #[test]
    fn deterministic_emission() {
        let a = micro_output();
        let b = micro_output();
        assert_eq!(
            crate::game::render_game(&a.game),
            crate::game::render_game(&b.game)
        );
        assert_eq!(render_targets(&a.targets), render_targets(&b.targets));
    }

    #[test]
    fn size_is_quadratic_in_k() {
        // For a fixed machine and input the emitted size is an exact
        // quadratic in k: fit on k = 2, 3, 4 and check k = 5..8.
        let machine = parse_machine(MICRO).unwrap();
        let size_at = |k: u32| -> i64 {
            let steps = (1u64 << k) - 1;
            let inst = BoundedInstance::new(machine.clone(), steps, "1").unwrap();
            let out = build_reduction(&inst).unwrap();
            out.game.goals().iter().map(|g| g.size() as i64).sum()
        };
        let (s2, s3, s4) = (size_at(2), size_at(3), size_at(4));
        let second = s4 - 2 * s3 + s2;
        let fit = |k: i64| s2 + (s3 - s2) * (k - 2) + second * (k - 2) * (k - 3) / 2;
        for k in 5..=8u32 {
            assert_eq!(size_at(k), fit(k as i64), "size at k={k} breaks the quadratic fit");
        }
    }

    #[test]
    fn forall_extension() {
        let out = micro_output();
        let ext = extend_for_forall(&out).unwrap();
        assert_eq!(ext.game.num_players(), 8);
        assert!(ext.game.control(6).is_empty());
        assert!(ext.game.control(7).is_empty());
        assert_eq!(ext.targets[6], ratio(55, 72));
        assert_eq!(ext.targets[7], ratio(17, 72));
        assert!(validate_game(&ext.game).is_valid());
        // gamma8 is the complement of gamma7 on every valuation: check a
        // few assignments by evaluating both.
        let g7 = &ext.subformulas["gamma7"];
        let g8 = &ext.subformulas["gamma8"];
        let vars: Vec<VarId> = g7.free_vars().into_iter().collect();
        for seedish in [0usize, 1, 17, 1234] {
            let val: std::collections::BTreeMap<VarId, bool> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), (i * 7 + seedish) % 3 == 0))
                .collect();
            assert_ne!(
                crate::formula::evaluate(g7, &val).unwrap(),
                crate::formula::evaluate(g8, &val).unwrap()
            );
        }
        assert!(extend_for_forall(&ext).is_err());
    }

    #[test]
    fn pennies_gadget() {
        let ext = extend_for_forall(&micro_output()).unwrap();
        let with_pennies = pennies_epsilon(&ext, 4).unwrap();
        assert_eq!(with_pennies.game.num_players(), 9);
        assert_eq!(with_pennies.game.control(6).len(), 4);
        assert_eq!(with_pennies.game.control(8).len(), 4);
        assert_eq!(with_pennies.pennies_increment, Some(ratio(1, 16)));
        assert!(validate_game(&with_pennies.game).is_valid());
        // Increment shrinks monotonically in m.
        let m1 = pennies_epsilon(&ext, 1).unwrap();
        assert_eq!(m1.pennies_increment, Some(ratio(1, 2)));
        assert!(pennies_epsilon(&ext, 0).is_err());
        assert!(pennies_epsilon(&micro_output(), 1).is_err());
    }

    #[test]
    fn targets_roundtrip() {
        let t = payoff_targets(2).unwrap();
        let text = render_targets(&t);
        assert_eq!(parse_targets(&text).unwrap(), t);
        assert!(parse_targets("v 2 1/2\n").is_err());
        assert!(parse_targets("w 1 1/2\n").is_err());
    }

    #[test]
    fn expanded_oneof_variant_has_no_oneof() {
        fn has_oneof(f: &Formula) -> bool {
            match f {
                Formula::OneOf(_) => true,
                Formula::Const(_) | Formula::Var(_) => false,
                Formula::Not(c) => has_oneof(c),
                Formula::And(cs) | Formula::Or(cs) => cs.iter().any(has_oneof),
                Formula::Implies(l, r) | Formula::Iff(l, r) => has_oneof(l) || has_oneof(r),
            }
        }
        let out = micro_output();
        assert!(out.game.goals().iter().any(has_oneof));
        let expanded = out.with_expanded_oneof().unwrap();
        assert!(!expanded.game.goals().iter().any(has_oneof));
    }
}
