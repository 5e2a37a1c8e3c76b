//! Nondeterministic Turing machines over the alphabet {0, 1, blank}, the
//! do-nothing augmentation for accepting states, bounded acceptance search,
//! and run tabulation into a 2^k x 2^k grid.

use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum TmError {
    #[error("machine file: line {line}: {message}")]
    FileFormat { line: usize, message: String },
    #[error("machine invariant violated: {0}")]
    MachineInvariant(String),
    #[error("bad instance: {0}")]
    BadInstance(String),
    #[error("search expanded more than {budget} configurations")]
    BudgetExceeded { budget: u128 },
    #[error("bad run: {0}")]
    BadRun(String),
    #[error("bad table: {0}")]
    BadTable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Zero,
    One,
    Blank,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Blank => '_',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            '0' => Some(Symbol::Zero),
            '1' => Some(Symbol::One),
            '_' => Some(Symbol::Blank),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    L,
    R,
}

/// One transition (r, s) -> (r', s', D).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub from_state: String,
    pub read: Symbol,
    pub to_state: String,
    pub write: Symbol,
    pub dir: Dir,
}

/// Nondeterministic machine; `do_nothing` marks the augmentation that lets
/// accepting states idle in place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ntm {
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: BTreeSet<String>,
    pub rules: Vec<Rule>,
    pub do_nothing: bool,
}

impl Ntm {
    pub fn new(
        states: Vec<String>,
        initial: String,
        accepting: BTreeSet<String>,
        rules: Vec<Rule>,
    ) -> Result<Ntm, TmError> {
        let known: BTreeSet<&str> = states.iter().map(|s| s.as_str()).collect();
        if known.len() != states.len() {
            return Err(TmError::MachineInvariant("duplicate state name".into()));
        }
        if !known.contains(initial.as_str()) {
            return Err(TmError::MachineInvariant(format!(
                "initial state '{initial}' not declared"
            )));
        }
        for a in &accepting {
            if !known.contains(a.as_str()) {
                return Err(TmError::MachineInvariant(format!(
                    "accepting state '{a}' not declared"
                )));
            }
        }
        for r in &rules {
            for endpoint in [&r.from_state, &r.to_state] {
                if !known.contains(endpoint.as_str()) {
                    return Err(TmError::MachineInvariant(format!(
                        "rule uses undeclared state '{endpoint}'"
                    )));
                }
            }
        }
        Ok(Ntm {
            states,
            initial,
            accepting,
            rules,
            do_nothing: false,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn is_accepting(&self, state: &str) -> bool {
        self.accepting.contains(state)
    }
}

/// Give every accepting state a stay-in-place, write-nothing, same-state
/// step. The accepted language is unchanged; a machine accepting at step t
/// can idle until any later bound. Idempotent.
pub fn augment_do_nothing(mut m: Ntm) -> Ntm {
    m.do_nothing = true;
    m
}

/// A NEXPTM instance: does `machine` accept `w` within `steps` steps?
/// `k` is the bit length of `steps`; the run table is 2^k x 2^k.
#[derive(Clone, Debug)]
pub struct BoundedInstance {
    pub machine: Ntm,
    pub steps: u64,
    pub input: Vec<Symbol>,
    pub k: u32,
}

impl BoundedInstance {
    pub fn new(machine: Ntm, steps: u64, w: &str) -> Result<BoundedInstance, TmError> {
        if steps == 0 {
            return Err(TmError::BadInstance("step bound must be positive".into()));
        }
        let k = 64 - steps.leading_zeros();
        if k < 2 {
            return Err(TmError::BadInstance(format!(
                "step bound {steps} has bit length {k}; need k >= 2"
            )));
        }
        let input: Vec<Symbol> = w
            .chars()
            .map(|c| match c {
                '0' => Ok(Symbol::Zero),
                '1' => Ok(Symbol::One),
                other => Err(TmError::BadInstance(format!(
                    "input must be binary, found '{other}'"
                ))),
            })
            .collect::<Result<_, _>>()?;
        let cells = 1usize << k;
        if input.len() > cells {
            return Err(TmError::BadInstance(format!(
                "input length {} exceeds the 2^k = {cells} cell window",
                input.len()
            )));
        }
        Ok(BoundedInstance {
            machine: augment_do_nothing(machine),
            steps,
            input,
            k,
        })
    }

    pub fn cells(&self) -> usize {
        1usize << self.k
    }
}

/// One machine configuration; tape is the fixed 2^k window (the head never
/// leaves it, since at most 2^k - 1 steps are taken from cell 0).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Config {
    pub state: String,
    pub head: usize,
    pub tape: Vec<Symbol>,
}

impl Config {
    fn initial(inst: &BoundedInstance) -> Config {
        let mut tape = vec![Symbol::Blank; inst.cells()];
        tape[..inst.input.len()].copy_from_slice(&inst.input);
        Config {
            state: inst.machine.initial.clone(),
            head: 0,
            tape,
        }
    }
}

/// Successor configurations in a fixed order: declared rules first (file
/// order), then the do-nothing step where available. The head standing at
/// cell 0 and moving left stands still.
fn successors(inst: &BoundedInstance, c: &Config) -> Vec<Config> {
    let mut out = Vec::new();
    let read = c.tape[c.head];
    for r in &inst.machine.rules {
        if r.from_state == c.state && r.read == read {
            let mut tape = c.tape.clone();
            tape[c.head] = r.write;
            let head = match r.dir {
                Dir::L => c.head.saturating_sub(1),
                Dir::R => c.head + 1,
            };
            if head >= inst.cells() {
                continue;
            }
            out.push(Config {
                state: r.to_state.clone(),
                head,
                tape,
            });
        }
    }
    if inst.machine.do_nothing && inst.machine.is_accepting(&c.state) {
        out.push(c.clone());
    }
    out
}

/// Breadth-first bounded acceptance: Some(run) iff some branch reaches an
/// accepting state within `inst.steps` steps; the run is the full branch
/// from step 0. Deterministic for fixed input. `budget` caps the number of
/// configurations expanded.
pub fn accepts_within(
    inst: &BoundedInstance,
    budget: u128,
) -> Result<Option<Vec<Config>>, TmError> {
    // Nodes carry a parent index so an accepting branch can be replayed.
    let mut nodes: Vec<(Config, usize, Option<usize>)> = vec![(Config::initial(inst), 0, None)];
    let mut visited: BTreeSet<(usize, Config)> = BTreeSet::new();
    visited.insert((0, nodes[0].0.clone()));
    let mut frontier = vec![0usize];
    let mut expanded: u128 = 0;

    let reconstruct = |nodes: &Vec<(Config, usize, Option<usize>)>, mut at: usize| {
        let mut run = Vec::new();
        loop {
            run.push(nodes[at].0.clone());
            match nodes[at].2 {
                Some(p) => at = p,
                None => break,
            }
        }
        run.reverse();
        run
    };

    if inst.machine.is_accepting(&nodes[0].0.state) {
        return Ok(Some(reconstruct(&nodes, 0)));
    }
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        for &idx in &frontier {
            let (config, step, _) = nodes[idx].clone();
            if step as u64 >= inst.steps {
                continue;
            }
            expanded += 1;
            if expanded > budget {
                return Err(TmError::BudgetExceeded { budget });
            }
            for succ in successors(inst, &config) {
                if !visited.insert((step + 1, succ.clone())) {
                    continue;
                }
                nodes.push((succ, step + 1, Some(idx)));
                let new_idx = nodes.len() - 1;
                if inst.machine.is_accepting(&nodes[new_idx].0.state) {
                    return Ok(Some(reconstruct(&nodes, new_idx)));
                }
                next_frontier.push(new_idx);
            }
        }
        frontier = next_frontier;
    }
    Ok(None)
}

/// Which side of a cell the head is on: at the cell, strictly to its left
/// (higher-indexed cells), or strictly to its right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadPlacement {
    Here,
    HeadLeft,
    HeadRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableCell {
    pub symbol: Symbol,
    pub placement: HeadPlacement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub state: String,
    pub cells: Vec<TableCell>,
}

/// The 2^k x 2^k computation history: per (step, cell) a tape symbol plus
/// head placement, and per step the machine state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTable {
    pub k: u32,
    pub rows: Vec<TableRow>,
}

/// An adjacent-cell head inconsistency; `pattern` is 1..=5 indexing the
/// five illegal placement pairs on cells (cell, cell+1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeadViolation {
    pub step: usize,
    pub cell: usize,
    pub pattern: u8,
}

/// The five illegal placement pairs for adjacent cells (c, c+1), in table
/// order: (left,right), (left,here), (here,here), (right,left),
/// (here,right). The four remaining pairs are exactly the legal ones.
pub const ILLEGAL_HEAD_PAIRS: [(HeadPlacement, HeadPlacement); 5] = [
    (HeadPlacement::HeadLeft, HeadPlacement::HeadRight),
    (HeadPlacement::HeadLeft, HeadPlacement::Here),
    (HeadPlacement::Here, HeadPlacement::Here),
    (HeadPlacement::HeadRight, HeadPlacement::HeadLeft),
    (HeadPlacement::Here, HeadPlacement::HeadRight),
];

impl RunTable {
    pub fn size(&self) -> usize {
        1usize << self.k
    }

    pub fn cell(&self, step: usize, cell: usize) -> TableCell {
        self.rows[step].cells[cell]
    }

    pub fn state(&self, step: usize) -> &str {
        &self.rows[step].state
    }

    /// Head column of a row, when the row is consistent.
    pub fn head(&self, step: usize) -> Option<usize> {
        let heres: Vec<usize> = self.rows[step]
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.placement == HeadPlacement::Here)
            .map(|(i, _)| i)
            .collect();
        match heres.as_slice() {
            [h] => Some(*h),
            _ => None,
        }
    }

    /// Check the per-row head-consistency discipline: exactly one head per
    /// row, every other cell marked with the correct side.
    pub fn validate(&self) -> Result<(), TmError> {
        let n = self.size();
        if self.rows.len() != n {
            return Err(TmError::BadTable(format!(
                "expected {n} rows, found {}",
                self.rows.len()
            )));
        }
        for (t, row) in self.rows.iter().enumerate() {
            if row.cells.len() != n {
                return Err(TmError::BadTable(format!(
                    "row {t} has {} cells, expected {n}",
                    row.cells.len()
                )));
            }
            let head = self.head(t).ok_or_else(|| {
                TmError::BadTable(format!("row {t} does not have exactly one head"))
            })?;
            for (c, cell) in row.cells.iter().enumerate() {
                // Cells before the head see it on their right; cells after
                // it see it on their left.
                let expected = match c.cmp(&head) {
                    std::cmp::Ordering::Equal => HeadPlacement::Here,
                    std::cmp::Ordering::Less => HeadPlacement::HeadRight,
                    std::cmp::Ordering::Greater => HeadPlacement::HeadLeft,
                };
                if cell.placement != expected {
                    return Err(TmError::BadTable(format!(
                        "row {t}, cell {c}: inconsistent head side"
                    )));
                }
            }
        }
        Ok(())
    }

    /// All adjacent-cell placement pairs matching the illegal table.
    pub fn detect_head_violations(&self) -> Vec<HeadViolation> {
        let mut out = Vec::new();
        for (t, row) in self.rows.iter().enumerate() {
            for c in 0..row.cells.len().saturating_sub(1) {
                let pair = (row.cells[c].placement, row.cells[c + 1].placement);
                if let Some(p) = ILLEGAL_HEAD_PAIRS.iter().position(|&q| q == pair) {
                    out.push(HeadViolation {
                        step: t,
                        cell: c,
                        pattern: (p + 1) as u8,
                    });
                }
            }
        }
        out
    }

    /// Overwrite the placements of cells (cell, cell+1) at one step with
    /// illegal pattern 1..=5, leaving everything else untouched.
    pub fn inject_head_violation(
        &self,
        step: usize,
        cell: usize,
        pattern: u8,
    ) -> Result<RunTable, TmError> {
        if !(1..=5).contains(&pattern) {
            return Err(TmError::BadTable(format!(
                "violation pattern {pattern} not in 1..=5"
            )));
        }
        if step >= self.rows.len() || cell + 1 >= self.size() {
            return Err(TmError::BadTable(format!(
                "violation site ({step}, {cell}) outside the table"
            )));
        }
        let (a, b) = ILLEGAL_HEAD_PAIRS[(pattern - 1) as usize];
        let mut table = self.clone();
        table.rows[step].cells[cell].placement = a;
        table.rows[step].cells[cell + 1].placement = b;
        Ok(table)
    }
}

/// Tabulate an accepting run into the 2^k x 2^k grid, padding the rows
/// after acceptance with do-nothing copies of the final configuration.
pub fn run_table(run: &[Config], k: u32) -> Result<RunTable, TmError> {
    let n = 1usize << k;
    if run.is_empty() {
        return Err(TmError::BadRun("empty run".into()));
    }
    if run.len() > n {
        return Err(TmError::BadRun(format!(
            "run has {} configurations, grid has {n} rows",
            run.len()
        )));
    }
    let mut rows = Vec::with_capacity(n);
    for t in 0..n {
        let config = &run[t.min(run.len() - 1)];
        if config.head >= n || config.tape.len() > n {
            return Err(TmError::BadRun(format!(
                "configuration at step {t} does not fit in {n} cells"
            )));
        }
        let cells = (0..n)
            .map(|c| TableCell {
                symbol: config.tape.get(c).copied().unwrap_or(Symbol::Blank),
                placement: match c.cmp(&config.head) {
                    std::cmp::Ordering::Equal => HeadPlacement::Here,
                    std::cmp::Ordering::Less => HeadPlacement::HeadRight,
                    std::cmp::Ordering::Greater => HeadPlacement::HeadLeft,
                },
            })
            .collect();
        rows.push(TableRow {
            state: config.state.clone(),
            cells,
        });
    }
    Ok(RunTable { k, rows })
}

/// Replay a run against the machine's rules, confirming every step is a
/// legal transition (or a do-nothing step in an accepting state).
pub fn validate_run(inst: &BoundedInstance, run: &[Config]) -> Result<(), TmError> {
    if run.is_empty() {
        return Err(TmError::BadRun("empty run".into()));
    }
    if run[0] != Config::initial(inst) {
        return Err(TmError::BadRun("run does not start at the initial configuration".into()));
    }
    for (t, window) in run.windows(2).enumerate() {
        if !successors(inst, &window[0]).contains(&window[1]) {
            return Err(TmError::BadRun(format!("illegal transition at step {t}")));
        }
    }
    if !inst.machine.is_accepting(&run[run.len() - 1].state) {
        return Err(TmError::BadRun("run does not end in an accepting state".into()));
    }
    Ok(())
}

/// Parse the machine text format.
pub fn parse_machine(text: &str) -> Result<Ntm, TmError> {
    let mut states: Option<Vec<String>> = None;
    let mut initial: Option<String> = None;
    let mut accepting: Option<BTreeSet<String>> = None;
    let mut rules: Vec<Rule> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| TmError::FileFormat { line, message };
        let (key, rest) = content
            .split_once(':')
            .ok_or_else(|| err("expected 'key: ...'".to_string()))?;
        let rest = rest.trim();
        match key.trim() {
            "states" => {
                states = Some(rest.split_whitespace().map(str::to_string).collect());
            }
            "initial" => {
                initial = Some(rest.to_string());
            }
            "accepting" => {
                accepting = Some(rest.split_whitespace().map(str::to_string).collect());
            }
            "rule" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let [from, read, arrow, to, write, dir] = tokens.as_slice() else {
                    return Err(err("expected 'rule: r s -> r' s' D'".to_string()));
                };
                if *arrow != "->" {
                    return Err(err("expected '->' in rule".to_string()));
                }
                let symbol = |s: &str| {
                    s.chars()
                        .next()
                        .filter(|_| s.len() == 1)
                        .and_then(Symbol::from_char)
                        .ok_or_else(|| err(format!("bad symbol '{s}'")))
                };
                let dir = match *dir {
                    "L" => Dir::L,
                    "R" => Dir::R,
                    other => return Err(err(format!("bad direction '{other}'"))),
                };
                rules.push(Rule {
                    from_state: from.to_string(),
                    read: symbol(read)?,
                    to_state: to.to_string(),
                    write: symbol(write)?,
                    dir,
                });
            }
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }
    let missing = |what: &str| TmError::FileFormat {
        line: 0,
        message: format!("missing '{what}:' line"),
    };
    Ntm::new(
        states.ok_or_else(|| missing("states"))?,
        initial.ok_or_else(|| missing("initial"))?,
        accepting.ok_or_else(|| missing("accepting"))?,
        rules,
    )
}

pub fn render_machine(m: &Ntm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states: {}", m.states.join(" "));
    let _ = writeln!(out, "initial: {}", m.initial);
    let _ = writeln!(
        out,
        "accepting: {}",
        m.accepting.iter().cloned().collect::<Vec<_>>().join(" ")
    );
    for r in &m.rules {
        let _ = writeln!(
            out,
            "rule: {} {} -> {} {} {}",
            r.from_state,
            r.read.as_char(),
            r.to_state,
            r.write.as_char(),
            match r.dir {
                Dir::L => "L",
                Dir::R => "R",
            }
        );
    }
    out
}
