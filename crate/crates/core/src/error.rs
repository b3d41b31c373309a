use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Quasimomentum or perturbation magnitude outside the admissible domain.
    #[error("parameter outside domain: {0}")]
    ParameterDomain(String),

    /// Frequency is not strictly between the first and second cut-off.
    #[error("outside the single-propagating-mode window: {0}")]
    OutsideWindow(String),

    #[error("Fourier mode {j} unavailable (profile carries modes |j| <= {max})")]
    ModeOutOfRange { j: i32, max: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("profile data: {0}")]
    Profile(String),

    #[error("discretization failure: relative residual {residual:e} exceeds tolerance {tol:e}")]
    Discretization { residual: f64, tol: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    /// The scattering formulas require `mu - eps*gamma*F != 0`.
    #[error(
        "near resonance: mu - eps*gamma*F = {value} is below the guard {guard:e}; \
         the unique-solvability hypothesis mu - eps*gamma*F != 0 fails here \
         (use the trapped-mode solver near real resonances)"
    )]
    NearResonance { value: Complex64, guard: f64 },

    #[error("root finding did not converge: {message}")]
    RootFailure { message: String, trace: Vec<(Complex64, f64)> },

    #[error("line shape undefined: resonance width {0:e} is numerically zero; use the trapped-mode solver")]
    DegenerateWidth(f64),

    /// A runtime check of a structural identity failed.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::ParameterDomain(_)
            | Error::OutsideWindow(_)
            | Error::ModeOutOfRange { .. }
            | Error::GridMismatch(_)
            | Error::Profile(_)
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::Discretization { .. }
            | Error::Singular(_)
            | Error::NearResonance { .. }
            | Error::RootFailure { .. }
            | Error::DegenerateWidth(_) => 3,
            Error::Consistency(_) => 4,
        }
    }
}
