//! Space and time scales tying the lattice process to the limit process.
//!
//! Time is accelerated by `log(1/λ)` and space is compressed by
//! `λ·log(1/λ)`, so a lattice site `i` covers the rescaled interval
//! `[i·w, (i+1)·w)` with `w = λ·log(1/λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    lambda: f64,
    log_inv: f64,
    width: f64,
}

impl Scaling {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return config(format!("lambda must lie in (0,1), got {lambda}"));
        }
        let log_inv = (1.0 / lambda).ln();
        Ok(Self {
            lambda,
            log_inv,
            width: lambda * log_inv,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `log(1/λ)`, the time acceleration factor.
    pub fn log_inv(&self) -> f64 {
        self.log_inv
    }

    /// `λ·log(1/λ)`, the rescaled width of one site.
    pub fn site_width(&self) -> f64 {
        self.width
    }

    pub fn raw_time(&self, t: f64) -> f64 {
        t * self.log_inv
    }

    pub fn rescaled_time(&self, raw: f64) -> f64 {
        raw / self.log_inv
    }

    /// Site whose cell contains the rescaled position `x`.
    pub fn site_of(&self, x: f64) -> i64 {
        (x / self.width).floor() as i64
    }

    /// `A_λ = ⌊A / (λ log(1/λ))⌋`.
    pub fn box_bound(&self, half_width: f64) -> i64 {
        (half_width / self.width).floor() as i64
    }
}
