//! Numerical slack used wherever an exact identity is checked in floating point.

/// Central record of comparison tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Algebraic identities such as `phi_alpha = (1 - alpha) v + alpha phi`.
    pub algebraic: f64,
    /// Slack for monotonicity checks on grids.
    pub monotone: f64,
    /// Realized-value transform identities evaluated through generic ratios.
    pub transform: f64,
    /// Welfare comparisons in pointwise trials.
    pub welfare: f64,
    /// Refinement expectation constraint.
    pub expectation: f64,
    /// Probability mass constraint.
    pub probability: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        algebraic: 1e-12,
        monotone: 1e-9,
        transform: 1e-8,
        welfare: 1e-12,
        expectation: 1e-9,
        probability: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
