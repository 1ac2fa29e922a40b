//! Definition-level testing: exact oracles on finite laws, Monte Carlo
//! falsification on samplers, and numerical verification of the covariance
//! interpolation formula for infinitely divisible laws.

mod hps;
mod monotone;
mod oracle;
mod tester;

pub use hps::{hps_formula_verify, HpsConfig, HpsNode, HpsReport, Logistic, SmoothFunction};
pub use monotone::{gen_monotone_function, FunctionFamily, MonotoneFunction};
pub use oracle::{
    exact_discrete_association, exact_discrete_block_association, AssociationOutcome, OracleBudget,
    COV_TOL,
};
pub use tester::{
    draw_trial, evaluate_pair, mc_block_association_test, mc_negative_block_association_test,
    mc_test_batch, mc_weak_block_association_test, replay_witness, FamilyWeight,
    FunctionPairWitness, McConfig, TestMode, TrialFunctions, MIN_SAMPLES,
};
