use thiserror::Error;

/// Errors produced by the covert-sensing numerics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside its allowed range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The covariance matrix violates the uncertainty principle.
    #[error("unphysical covariance matrix: smallest symplectic eigenvalue {min_symplectic} < 1/2")]
    Unphysical { min_symplectic: f64 },

    /// The relative entropy diverges: the second state is pure along a
    /// direction where the first state has weight.
    #[error("relative entropy diverges (pure direction with symplectic eigenvalue {eigenvalue})")]
    InfiniteQre { eigenvalue: f64 },

    /// Willie cannot learn anything, or the small-signal expansion breaks
    /// down, so no finite covert photon budget exists.
    #[error("degenerate covertness: {0}")]
    DegenerateCovertness(String),

    /// The diffraction-limited transmissivity exceeds one under the
    /// far-field formula.
    #[error("near-field geometry: transmissivity {eta} > 1 at wavelength {wavelength_m} m, range {range_m} m")]
    NearField {
        eta: f64,
        wavelength_m: f64,
        range_m: f64,
    },

    /// A sweep or optimisation has no valid points.
    #[error("empty sweep: {0}")]
    EmptySweep(String),

    /// The Fock truncation needed for the requested tail bound exceeds the cap.
    #[error("Fock cutoff {required} required for tail bound, cap is {cap}")]
    Cutoff { required: usize, cap: usize },

    /// A numerical routine failed or produced an inconsistent value.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Unphysical { .. } => "unphysical",
            Error::InfiniteQre { .. } => "infinite_qre",
            Error::DegenerateCovertness(_) => "degenerate_covertness",
            Error::NearField { .. } => "near_field",
            Error::EmptySweep(_) => "empty_sweep",
            Error::Cutoff { .. } => "cutoff",
            Error::Numeric(_) => "numeric",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(domain(format!("{name} = {value} must lie in [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(domain(format!("{name} = {value} must be finite and >= 0")));
    }
    Ok(())
}
