//! Scalar building blocks: the divergence catalog, Lambert W, and the joint
//! prox of a perspective divergence on one pair `(u, xi)`.

mod difference;
mod divergence;
mod inner;
mod lambert;

pub use difference::prox_difference;
pub use divergence::{DivergenceKind, DivergenceSpec};
pub use inner::{
    chi_bounds, kl_newton_iterates, positive_branch, prox_divergence, prox_divergence_traced, psi_derivatives,
    psi_value, solve_inner, solve_inner_with, ChiBounds, InnerConfig, InnerSolveTrace, ProxPair, ScalarProxQuery,
    BRANCH_TIE_TOL, ZETA_MAX, ZETA_MIN,
};
pub use lambert::{lambert_w, lambert_w_of_exp};
