//! Satisfiability of LTL fragments over restricted Boolean bases.

pub mod boolfn;
pub mod classify;
pub mod deciders;
pub mod error;
pub mod formula;
pub mod harness;
pub mod reductions;
pub mod tableau;

pub use boolfn::{Base, BoolFn, CloneTag};
pub use classify::{classify, Class, FragmentSpec, Strategy, Verdict};
pub use deciders::{decide, decide_with, DecideOptions, SatResult};
pub use error::{Error, Result};
pub use formula::{eval_at, parse, Formula, Lasso, OpSet, TemporalOp, Witness};
pub use reductions::{QbfInstance, ReductionOutput};
pub use tableau::{decide_tableau, decide_tableau_with, TableauOptions};
