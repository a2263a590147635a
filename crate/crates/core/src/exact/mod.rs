//! Exact arithmetic substrate: rationals, linear programming, Stern-Brocot search,
//! small linear systems and vertex enumeration.

pub mod linsys;
pub mod lp;
pub mod rational;
pub mod stern_brocot;
pub mod vertices;

pub use linsys::{solve_linear_system_2x2, Solve2};
pub use lp::{lp_solve_exact, Constraint, LinearProgram, LpResult, Rel, Sense};
pub use rational::Q;
pub use stern_brocot::{stern_brocot_find, stern_brocot_threshold};
pub use vertices::enumerate_polytope_vertices;
