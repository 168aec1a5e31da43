//! Geometric variable strain: `ξ(s, t) = B_q(s)·q(t) + ξ*(s)`.

pub mod basis;
pub mod dynamics;
pub mod kinematics;
pub mod statics;

pub use basis::{basis_matrix, strain_at, Atom, BasisDictionary, MODE_NAMES};
pub use dynamics::{generalized_dynamics, simulate, GvsModel, Trajectory};
pub use kinematics::{forward_kinematics, integrate_strain, jacobian, kinematics_on_grid, uniform_grid};
pub use statics::{static_strain_solve, StaticPoint, StaticSolution};
