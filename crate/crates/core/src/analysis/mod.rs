//! Property checkers and numerical reproductions built on the auction and
//! prediction modules.

pub mod appendix;
pub mod conditions;
pub mod experiments;
pub mod quadrature;
pub mod rearrangement;
pub mod stats;
pub mod trials;

pub use appendix::{appendix_delta, AppendixDelta, AppendixRecord};
pub use conditions::{
    check_condition_helps, check_condition_hurts, loss_integral_coarseness, loss_integral_refinement,
    refinement_region_certified_empty, s_bar, CoarsenessLoss,
};
pub use experiments::{figure2_sweep, non_iid_welfare_gap, nonflipspread_welfare_gap, Figure2Row, WelfareGap};
pub use quadrature::{quadrature_1d, QuadratureResult};
pub use rearrangement::{all_rankings, check_rearrangement, more_ordered, rearrangement_dot, Ranking};
pub use stats::SampleStats;
pub use trials::{
    run_main_suite, run_tradeoff_suite, theorem_main_trial, theorem_tradeoff_trial, MhrDist, TradeoffConfig,
    TrialReport, TrialSettings, Verdict, ALPHA_GRID,
};
