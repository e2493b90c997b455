use thiserror::Error;

/// Errors raised by the verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument shapes or values do not fit the object they are applied to.
    #[error("input error: {0}")]
    Input(String),

    /// The operation is undefined at the requested point (e.g. on the diagonal).
    #[error("domain error: {0}")]
    Domain(String),

    /// `Df_a` is not injective, so the map is not an immersion at `a`.
    #[error("not an immersion at the base point: sigma_min(Df_a) = {sigma_min:e}")]
    NotImmersion { sigma_min: f64 },

    /// Torsion needs linearly independent first and second derivatives.
    #[error("torsion undefined: |g1 x g2| = {cross_norm:e}")]
    UndefinedTorsion { cross_norm: f64 },

    /// A sphere net would exceed the point budget.
    #[error("sphere net of {requested} points exceeds the budget of {budget}; use a larger mesh")]
    Resource { requested: u64, budget: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Input(format!("{what}: expected dimension {want}, got {got}")));
    }
    Ok(())
}
