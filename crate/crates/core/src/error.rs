use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter record violates its own invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input outside the domain of an operation (negative energy, k = 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Expression is 0/0 at this point and has to be taken from a closed form.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("gaussian spectrum has {fraction:.3e} of its weight at k <= 0 (limit {limit:.1e})")]
    NegativeMomentumTail { fraction: f64, limit: f64 },

    #[error("spatial grid [{lo}, {hi}] nm holds only {captured:.9} of the norm; try at least [{suggested_lo}, {suggested_hi}] nm")]
    GridTooSmall {
        lo: f64,
        hi: f64,
        captured: f64,
        suggested_lo: f64,
        suggested_hi: f64,
    },

    #[error("resonance fit failed: {0}")]
    ResonanceFit(String),

    #[error("precession angle {angle:.4} rad exceeds the principal branch guard pi/4; use omega_L below {max_omega:.4e} 1/ps")]
    BranchGuard { angle: f64, max_omega: f64 },

    #[error("transmitted centre of mass did not reach x = {target} nm within {budget} ps")]
    DetectionTimeout { target: f64, budget: f64 },

    /// A numeric invariant check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for errors caused by the inputs rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::NegativeMomentumTail { .. }
                | Error::BranchGuard { .. }
        )
    }
}
