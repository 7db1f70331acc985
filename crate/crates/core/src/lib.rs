//! Cartan projections adapted to a Hermitian form of signature `(p,q)`,
//! Busemann cocycles, and counting experiments for Schottky subgroups of
//! `GL(d)`.

// `!(x > t)` is used on purpose so that NaN fails every check; index loops
// follow the formulas.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod cocycles;
pub mod counting;
pub mod flags;
pub mod forms;
pub mod freegroup;
pub mod jsonmat;
pub mod numerics;
pub mod pq_cartan;
pub mod projections;
pub mod tol;
pub mod weyl;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
