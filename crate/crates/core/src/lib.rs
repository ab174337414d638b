//! Stabbing Planes and Cutting Planes refutations over exact rationals,
//! together with the two lower-bound laboratories (antichain counting and
//! hypercube covering) that attack those refutations at desk scale.

pub mod antichain;
pub mod arith;
pub mod cover;
pub mod cp;
pub mod formula;
pub mod lp;
pub mod solver;
pub mod sp;
pub mod words;

pub use arith::{evaluate, LinearInequality, LinearSystem, Point, Rational, Sense};
pub use formula::{Charging, Family, Formula, Graph};
pub use lp::{farkas_check, lp_feasible, FarkasCertificate, Feasibility};
pub use sp::{SpNode, SpProof, Query, Restriction};
pub use words::ValueSet;
