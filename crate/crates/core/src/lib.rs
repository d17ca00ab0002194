//! Weighted maximin share (WMMS) allocation of indivisible chores.
//!
//! All arithmetic is exact over [`Rational`]. The crate provides
//!
//! * exact and estimated WMMS values ([`wmms`]) and a brute-force oracle
//!   ([`oracle`]) that shares no code with them;
//! * the reduction to canonical instances and back ([`reduce`]);
//! * the greedy 3-WMMS algorithm on canonical instances and the composed
//!   12-WMMS solver ([`canonical`]);
//! * the LP-rounding solver ([`lp`]);
//! * generators, including the lower-bound family ([`generate`],
//!   [`lower_bound`]), and JSON documents ([`io`]).

pub mod canonical;
pub mod error;
pub mod generate;
pub mod io;
pub mod lower_bound;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod rational;
pub mod reduce;
mod scaled;
pub mod wmms;

/// Default cap on search states and enumerated allocations.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

pub use canonical::{check_threshold_claim, solve_12wmms, solve_canonical, CanonicalInstance};
pub use error::{Error, Result};
pub use generate::{example_table1, gen_canonical, gen_random, CanonicalMode, RandomSpec};
pub use lower_bound::{gen_lower_bound, verify_lower_bound};
pub use lp::solve_polytime;
pub use model::{validate_instance, Agent, AgentGroup, Allocation, GroupedInstance, Instance, Partition, WmmsProfile};
pub use oracle::{brute_wmms, optimal_ratio, verify_alpha};
pub use rational::{format_rational, parse_rational, Rational};
pub use reduce::{lift_canonical_allocation, to_canonical, CanonicalTrace};
pub use wmms::{estimate_wmms, exact_profile, exact_wmms};
