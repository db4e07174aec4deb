//! Scalar abstraction shared by every numerical module.
//!
//! All geometry and spectral code is written against [`Real`], which is
//! implemented for `f32` and `f64`. Dense factorizations are delegated to
//! `faer` through [`DenseSolve`], implemented per concrete float type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + DenseSolve
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in every Real")
    }

    /// Converts a count or index.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in every Real")
    }

    /// `max(tol, floor_ulps * epsilon)`: lets f64-calibrated tolerances
    /// degrade gracefully for `f32`.
    #[inline]
    fn tol(tol: f64, floor_ulps: f64) -> Self {
        Self::lit(tol).max(Self::lit(floor_ulps) * Self::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// LU factorization with partial pivoting of a dense square system.
pub trait DenseSolve: Sized {
    /// Solves `A X = B` in place.
    ///
    /// `a` is row-major `n x n`; `rhs` holds `nrhs` right-hand sides stored
    /// column after column (each of length `n`) and is overwritten with the
    /// solutions. Returns `false` when the factorization is numerically
    /// singular.
    fn lu_solve_in_place(n: usize, a: &[Self], rhs: &mut [Self], nrhs: usize) -> bool;
}

macro_rules! impl_dense_solve {
    ($t:ty) => {
        impl DenseSolve for $t {
            fn lu_solve_in_place(n: usize, a: &[$t], rhs: &mut [$t], nrhs: usize) -> bool {
                use faer::linalg::solvers::Solve;
                assert_eq!(a.len(), n * n);
                assert_eq!(rhs.len(), n * nrhs);
                if n == 0 {
                    return true;
                }
                let mat = faer::Mat::<$t>::from_fn(n, n, |i, j| a[i * n + j]);
                let lu = mat.partial_piv_lu();
                // A zero pivot shows up as a zero (or non-finite) diagonal in U.
                let u = lu.U();
                let scale = (0..n).map(|i| u[(i, i)].abs()).fold(0.0 as $t, <$t>::max);
                let tiny = scale * <$t>::EPSILON * (n as $t);
                if !(scale > 0.0) || (0..n).any(|i| !(u[(i, i)].abs() > tiny)) {
                    return false;
                }
                let b = faer::Mat::<$t>::from_fn(n, nrhs, |i, j| rhs[j * n + i]);
                let x = lu.solve(&b);
                for j in 0..nrhs {
                    for i in 0..n {
                        rhs[j * n + i] = x[(i, j)];
                    }
                }
                rhs.iter().all(|v| v.is_finite())
            }
        }
    };
}

impl_dense_solve!(f32);
impl_dense_solve!(f64);
