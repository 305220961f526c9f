//! Fair stable matchings for the Stable Marriage problem with Incomplete
//! lists (SMI).
//!
//! The crate provides the instance model and Gale-Shapley solvers, the
//! rotation-poset machinery (exposed rotations, elimination, closures,
//! enumeration of all stable matchings), fairness scoring over eight
//! measures, polynomial solvers for regret-equal and min-regret-sum
//! stable matchings alongside an egalitarian solver and a min-cost
//! regret-equal procedure, and an experiment harness that aggregates
//! solver quality statistics over randomly generated instance batches.

pub mod fairness;
mod flow;
pub mod gs;
pub mod harness;
pub mod instance;
pub mod rotations;
pub mod solvers;

pub use fairness::{score, select_best, Measure, ScoreReport};
pub use gs::{is_stable, man_oriented_gs, reduce_rural_hospitals, woman_oriented_gs, Matching};
pub use instance::{generate_random, parse_instance, Instance, ManId, WomanId};
pub use rotations::{
    all_rotations, build_poset, eliminate, find_exposed_rotations, for_each_stable_matching,
    next_successor, stable_matchings, Rotation, RotationPoset,
};
pub use solvers::{egalitarian, min_cost_regret_equal, mrs, optimal_by_enumeration, redi};
