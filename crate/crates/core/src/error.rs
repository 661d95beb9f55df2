use thiserror::Error;

/// Errors raised by the library. Each variant belongs to one module; `code()`
/// gives the module-qualified name used in CLI reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // lie_core
    #[error("quadric point has no Euclidean interpretation: {0}")]
    NondecodableQuadricPoint(String),
    #[error("normal is not a unit vector (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("matrix is not in the Lie sphere group: {0}")]
    InvalidGroupElement(String),
    #[error("invalid quadric point: {0}")]
    InvalidQuadricPoint(String),
    #[error("invalid contact element: {0}")]
    InvalidContactElement(String),
    #[error("sign alignment failed at sample {0}")]
    SignAlignmentFailure(usize),

    // surface_invariants
    #[error("coordinates are not curvature-line coordinates at node ({0}, {1}): off-diagonal entry {2:e}")]
    NotCurvatureLineCoordinates(usize, usize, f64),
    #[error("degenerate surface at node ({0}, {1}): {2}")]
    DegenerateSurface(usize, usize, String),
    #[error("stalk collapse at node ({0}, {1}): the quadratic-form sheaf is one-dimensional")]
    StalkCollapse(usize, usize),
    #[error("ill-conditioned coframe at node ({0}, {1})")]
    IllConditionedCoframe(usize, usize),
    #[error("umbilic point at node ({0}, {1})")]
    UmbilicPoint(usize, usize),
    #[error("signature failure: {0}")]
    SignatureFailure(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    // legendre_curves
    #[error("insufficient derivative order: need {need}, have {have}")]
    InsufficientOrder { need: usize, have: usize },
    #[error("fatness fails at sample {0}")]
    FatnessFailure(usize),
    #[error("curve is not linearly full at sample {0}")]
    NotLinearlyFull(usize),
    #[error("section is not a polarization at sample {0}")]
    NotPolarized(usize),
    #[error("integrator step failure at t = {0}")]
    StepFailure(f64),
    #[error("invalid curve data: {0}")]
    InvalidCurve(String),

    // eds_engine
    #[error("tangent value is not an integral element (max |eta| = {0:e})")]
    NotIntegralElement(f64),

    // cauchy_solver
    #[error("Cauchy data is characteristic: {0}")]
    CharacteristicData(String),
    #[error("order {order} solve failed: {reason}")]
    OrderSolveFailure { order: usize, reason: String },
    #[error("evaluation window exceeds the trust radius at ({0}, {1})")]
    WindowTooLarge(f64, f64),

    // io / cli
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Module-qualified error code.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            NondecodableQuadricPoint(_) => "lie_core.NondecodableQuadricPoint",
            NonUnitNormal(_) => "lie_core.NonUnitNormal",
            InvalidGroupElement(_) => "lie_core.InvalidGroupElement",
            InvalidQuadricPoint(_) => "lie_core.InvalidQuadricPoint",
            InvalidContactElement(_) => "lie_core.InvalidContactElement",
            SignAlignmentFailure(_) => "lie_core.SignAlignmentFailure",
            NotCurvatureLineCoordinates(..) => "surface_invariants.NotCurvatureLineCoordinates",
            DegenerateSurface(..) => "surface_invariants.DegenerateSurface",
            StalkCollapse(..) => "surface_invariants.StalkCollapse",
            IllConditionedCoframe(..) => "surface_invariants.IllConditionedCoframe",
            UmbilicPoint(..) => "surface_invariants.UmbilicPoint",
            SignatureFailure(_) => "surface_invariants.SignatureFailure",
            InvalidGrid(_) => "surface_invariants.InvalidGrid",
            InsufficientOrder { .. } => "legendre_curves.InsufficientOrder",
            FatnessFailure(_) => "legendre_curves.FatnessFailure",
            NotLinearlyFull(_) => "legendre_curves.NotLinearlyFull",
            NotPolarized(_) => "legendre_curves.NotPolarized",
            StepFailure(_) => "legendre_curves.StepFailure",
            InvalidCurve(_) => "legendre_curves.InvalidCurve",
            NotIntegralElement(_) => "eds_engine.NotIntegralElement",
            CharacteristicData(_) => "cauchy_solver.CharacteristicData",
            OrderSolveFailure { .. } => "cauchy_solver.OrderSolveFailure",
            WindowTooLarge(..) => "cauchy_solver.WindowTooLarge",
            InvalidInput(_) => "cli.InvalidInput",
            Io(_) => "cli.Io",
        }
    }

    /// True for input-validation failures, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        use Error::*;
        matches!(
            self,
            NonUnitNormal(_)
                | InvalidGroupElement(_)
                | InvalidQuadricPoint(_)
                | InvalidContactElement(_)
                | NotCurvatureLineCoordinates(..)
                | InvalidGrid(_)
                | InsufficientOrder { .. }
                | InvalidCurve(_)
                | NotIntegralElement(_)
                | InvalidInput(_)
                | Io(_)
        )
    }

    /// Process exit status: 2 for validation errors, 3 for numerical failures.
    pub fn exit_status(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            3
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
