//! Boolean games with goal formulas: exact mixed-strategy equilibrium
//! machinery and a compiler from bounded nondeterministic Turing machine
//! instances to six-player games whose equilibrium payoffs encode
//! acceptance.

pub mod cli;
pub mod equilibria;
mod eval;
pub mod formula;
pub mod game;
pub mod reduction;
pub mod tm;
pub mod witness;
