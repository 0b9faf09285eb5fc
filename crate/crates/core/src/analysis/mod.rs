//! Measuring the estimates the theory proves: residuals of test pairs, the
//! dissipative inequality, the Gronwall-type lemma, functional inequalities,
//! and refinement and `eps -> 0` studies.

pub mod dissipative;
pub mod gronwall;
pub mod inequality;
pub mod pair;
pub mod residual;
pub mod study;

pub use dissipative::{
    check_dissipative, default_gamma_grid, fit_minimal_gamma, geometric_grid, DissipativeData, DissipativeReport,
    GammaFit, InequalityForm,
};
pub use gronwall::{gronwall_check, gronwall_check_with, sampled_derivative, GronwallData, GronwallReport, GronwallTolerance, GronwallVerdict};
pub use inequality::{ladyzhenskaya_check, sobolev_constant_estimate, LADYZHENSKAYA};
pub use pair::{catalog, Admissibility, DerivativeSource, EigenmodePair, TestPair};
pub use residual::{residual_e1, residual_e2, residual_norms, residual_time_mean};
pub use study::{
    convergence_study, epsilon_limit_study, gamma_stability, residual_refinement, self_consistency_study,
    shipped_scenarios, time_convergence_study, ConvergenceReport, EpsilonReport, Scenario, SelfConsistency,
};
