//! Centralized numerical tolerances.
//!
//! Every validating constructor takes an optional [`Tolerances`] override;
//! the defaults below are used everywhere else.

/// Tolerance bundle shared by all validating constructors.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Unit-norm check for kets.
    pub unit: f64,
    /// Hermiticity residual allowed at construction.
    pub herm: f64,
    /// Slack below zero allowed for eigenvalues of PSD operators.
    pub psd: f64,
    /// Deviation from unit trace (and from probability sums).
    pub trace: f64,
    /// Residual of the POVM completeness relation.
    pub povm: f64,
    /// Singular values and Choi eigenvalues below this are treated as zero.
    pub rank: f64,
    /// Residual of the Kraus completeness relation and Choi partial trace.
    pub cptp: f64,
    /// Threshold on mu* above which a state is declared entangled.
    pub detect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unit: 1e-10,
            herm: 1e-10,
            psd: 1e-8,
            trace: 1e-10,
            povm: 1e-8,
            rank: 1e-8,
            cptp: 1e-8,
            detect: 1e-7,
        }
    }
}

/// Crate-wide default tolerances.
pub const DEFAULT_TOL: Tolerances = Tolerances {
    unit: 1e-10,
    herm: 1e-10,
    psd: 1e-8,
    trace: 1e-10,
    povm: 1e-8,
    rank: 1e-8,
    cptp: 1e-8,
    detect: 1e-7,
};
