use std::fmt::Debug;

use num_traits::{Signed, Zero};

use crate::rational::{from_f64, to_f64, Rat};

/// Arithmetic the tableau needs; tolerances are zero for exact types.
pub trait Scalar: Clone + PartialOrd + Debug {
    const PIVOT_TOL: f64;
    const FEAS_TOL: f64;
    const DUAL_TOL: f64;

    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// `self -= f * o`
    fn sub_mul(&mut self, f: &Self, o: &Self);
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-9;
    const FEAS_TOL: f64 = 1e-9;
    const DUAL_TOL: f64 = 1e-10;

    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn sub_mul(&mut self, f: &Self, o: &Self) {
        *self -= f * o;
    }
}

impl Scalar for Rat {
    const PIVOT_TOL: f64 = 0.0;
    const FEAS_TOL: f64 = 0.0;
    const DUAL_TOL: f64 = 0.0;

    fn zero() -> Self {
        Zero::zero()
    }
    fn from_f64(v: f64) -> Self {
        from_f64(v)
    }
    fn to_f64(&self) -> f64 {
        to_f64(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub_mul(&mut self, f: &Self, o: &Self) {
        if !Zero::is_zero(o) {
            *self -= f * o;
        }
    }
}
