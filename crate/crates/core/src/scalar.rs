//! Numeric abstraction shared by the graph, LP and search code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the solver can run on.
///
/// Tolerances are part of the scalar because an `f32` LP cannot honour the
/// `1e-9` optimality threshold that an `f64` one can.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Primal feasibility tolerance (cut violation, bound violation).
    const FEAS_TOL: f64;
    /// Reduced-cost optimality tolerance.
    const OPT_TOL: f64;
    /// Distance from an integer below which an LP value counts as integral.
    const INT_TOL: f64;
    /// Slack used when comparing objective values against the incumbent.
    const OBJ_TOL: f64;
    /// Pivot magnitude below which a tableau entry is treated as zero.
    const PIVOT_TOL: f64;

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 value representable in scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize value representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn feas_tol() -> Self {
        Self::of(Self::FEAS_TOL)
    }

    fn opt_tol() -> Self {
        Self::of(Self::OPT_TOL)
    }

    fn int_tol() -> Self {
        Self::of(Self::INT_TOL)
    }

    fn obj_tol() -> Self {
        Self::of(Self::OBJ_TOL)
    }

    fn pivot_tol() -> Self {
        Self::of(Self::PIVOT_TOL)
    }
}

impl Scalar for f64 {
    const FEAS_TOL: f64 = 1e-7;
    const OPT_TOL: f64 = 1e-9;
    const INT_TOL: f64 = 1e-6;
    const OBJ_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const FEAS_TOL: f64 = 1e-4;
    const OPT_TOL: f64 = 1e-5;
    const INT_TOL: f64 = 1e-3;
    const OBJ_TOL: f64 = 1e-4;
    const PIVOT_TOL: f64 = 1e-5;
}
