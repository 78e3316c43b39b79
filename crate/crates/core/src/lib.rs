#![no_std]
// `num_traits::Float` goes unused whenever std is linked (tests, dev-dependency feature unification)
#![allow(unused_imports)]
// quadrature tables keep their published digits; `!(x >= lo)` rejects NaN on purpose
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::redundant_guards, clippy::needless_range_loop)]

extern crate alloc;

pub mod actions;
pub mod asymptotics;
pub mod cap;
pub mod expr;
pub mod linalg;
pub mod problem;
pub mod quad;
pub mod roots;
pub mod shooting;
pub mod special;
pub mod stationary_phase;
pub mod sweep;
