use thiserror::Error;

pub type Result<T> = std::result::Result<T, CapaxError>;

#[derive(Debug, Error)]
pub enum CapaxError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel singularity: |x| = {norm:e} is below {threshold:e}")]
    Singularity { norm: f64, threshold: f64 },

    #[error("multi-index order {order} exceeds configured maximum {max}")]
    OrderCap { order: usize, max: usize },

    #[error("target at distance {distance:e} from the surface is inside the near field (h = {h:e})")]
    NearField { distance: f64, h: f64 },

    #[error("surface has coincident nodes {0} and {1}")]
    CoincidentNodes(usize, usize),

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("mesh is not closed: edge ({0}, {1}) has {2} incident faces")]
    OpenMesh(usize, usize, usize),

    #[error("mesh orientation is inconsistent across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),

    #[error("hole does not fit: epsilon * diameter = {scaled:e} >= dist(0, outer boundary) = {dist:e}")]
    HoleTooLarge { scaled: f64, dist: f64 },

    #[error("singular linear system ({what}): estimated condition number {cond:e}")]
    SingularSystem { what: String, cond: f64 },

    #[error("function is identically zero within tolerance {0:e}")]
    IdenticallyZero(f64),

    #[error("polynomial is not homogeneous (degrees {0} and {1} present)")]
    NotHomogeneous(usize, usize),

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("basis is not orthonormal: max |G - I| = {0:e}")]
    NotOrthonormal(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CapaxError {
    /// True for errors that come from numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CapaxError::SingularSystem { .. } | CapaxError::Bracketing(_) | CapaxError::Singularity { .. }
        )
    }
}
