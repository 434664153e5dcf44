use std::f64::consts::PI;
use std::fmt::Debug;

use super::EgnnError;
use crate::fpn::{fp_add, fp_cos, fp_dot, fp_mul, fp_pi, fp_sin, fp_sub, fp_sum, Fpn, Precision};

/// Scalar arithmetic the network is evaluated with.
///
/// Reductions (`dot`, `sum`) are single operations so that an exact backend
/// can round once per reduction.
pub trait Backend: Sync {
    type S: Copy + Send + Sync + PartialEq + Debug;

    fn zero(&self) -> Self::S;
    fn from_f64(&self, x: f64) -> Result<Self::S, EgnnError>;
    fn to_f64(&self, x: Self::S) -> f64;
    fn add(&self, a: Self::S, b: Self::S) -> Result<Self::S, EgnnError>;
    fn sub(&self, a: Self::S, b: Self::S) -> Result<Self::S, EgnnError>;
    /// `Σ w_i x_i + bias`.
    fn dot(&self, w: &[Self::S], x: &[Self::S], bias: Option<Self::S>) -> Result<Self::S, EgnnError>;
    fn sum(&self, xs: &[Self::S]) -> Result<Self::S, EgnnError>;
    fn relu(&self, x: Self::S) -> Self::S;
    /// `π · j`, the per-order frequency.
    fn pi_times(&self, j: u32) -> Result<Self::S, EgnnError>;
    fn mul(&self, a: Self::S, b: Self::S) -> Result<Self::S, EgnnError>;
    fn sin(&self, x: Self::S) -> Result<Self::S, EgnnError>;
    fn cos(&self, x: Self::S) -> Result<Self::S, EgnnError>;
}

/// Plain `f64`, sums taken left to right.
#[derive(Debug, Clone, Copy, Default)]
pub struct RealBackend;

impl Backend for RealBackend {
    type S = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn from_f64(&self, x: f64) -> Result<f64, EgnnError> {
        Ok(x)
    }

    fn to_f64(&self, x: f64) -> f64 {
        x
    }

    fn add(&self, a: f64, b: f64) -> Result<f64, EgnnError> {
        Ok(a + b)
    }

    fn sub(&self, a: f64, b: f64) -> Result<f64, EgnnError> {
        Ok(a - b)
    }

    fn dot(&self, w: &[f64], x: &[f64], bias: Option<f64>) -> Result<f64, EgnnError> {
        let s = w.iter().zip(x).fold(0.0, |acc, (a, b)| acc + a * b);
        Ok(s + bias.unwrap_or(0.0))
    }

    fn sum(&self, xs: &[f64]) -> Result<f64, EgnnError> {
        Ok(xs.iter().sum())
    }

    fn relu(&self, x: f64) -> f64 {
        x.max(0.0)
    }

    fn pi_times(&self, j: u32) -> Result<f64, EgnnError> {
        Ok(PI * j as f64)
    }

    fn mul(&self, a: f64, b: f64) -> Result<f64, EgnnError> {
        Ok(a * b)
    }

    fn sin(&self, x: f64) -> Result<f64, EgnnError> {
        Ok(x.sin())
    }

    fn cos(&self, x: f64) -> Result<f64, EgnnError> {
        Ok(x.cos())
    }
}

/// Exact `p`-bit arithmetic; each reduction is rounded once.
#[derive(Debug, Clone, Copy)]
pub struct FpnBackend {
    pub prec: Precision,
}

impl FpnBackend {
    pub fn new(prec: Precision) -> Self {
        FpnBackend { prec }
    }
}

impl Backend for FpnBackend {
    type S = Fpn;

    fn zero(&self) -> Fpn {
        Fpn::ZERO
    }

    fn from_f64(&self, x: f64) -> Result<Fpn, EgnnError> {
        Ok(Fpn::from_f64(x, self.prec)?)
    }

    fn to_f64(&self, x: Fpn) -> f64 {
        x.to_f64(self.prec)
    }

    fn add(&self, a: Fpn, b: Fpn) -> Result<Fpn, EgnnError> {
        Ok(fp_add(a, b, self.prec)?)
    }

    fn sub(&self, a: Fpn, b: Fpn) -> Result<Fpn, EgnnError> {
        Ok(fp_sub(a, b, self.prec)?)
    }

    fn dot(&self, w: &[Fpn], x: &[Fpn], bias: Option<Fpn>) -> Result<Fpn, EgnnError> {
        Ok(fp_dot(w, x, bias, self.prec)?)
    }

    fn sum(&self, xs: &[Fpn]) -> Result<Fpn, EgnnError> {
        Ok(fp_sum(xs, self.prec)?)
    }

    fn relu(&self, x: Fpn) -> Fpn {
        if x.is_negative() {
            Fpn::ZERO
        } else {
            x
        }
    }

    fn pi_times(&self, j: u32) -> Result<Fpn, EgnnError> {
        Ok(fp_mul(fp_pi(self.prec), Fpn::from_i64(j as i64, self.prec), self.prec)?)
    }

    fn mul(&self, a: Fpn, b: Fpn) -> Result<Fpn, EgnnError> {
        Ok(fp_mul(a, b, self.prec)?)
    }

    fn sin(&self, x: Fpn) -> Result<Fpn, EgnnError> {
        Ok(fp_sin(x, self.prec)?)
    }

    fn cos(&self, x: Fpn) -> Result<Fpn, EgnnError> {
        Ok(fp_cos(x, self.prec)?)
    }
}
