//! Net welfare change of refining the prediction for one advertiser pair under
//! the truncated shifted equal-revenue prior, in closed form and by quadrature.
//!
//! With `x = v + b` ranging over `[1, H]` and `D = -b H`, the net change is
//! `(1/2) (H/(H-1))^2 (I1 - I2 - I3)` where
//!
//! * `I1 = 1/2 int log(2x^2 + D) / x^2`
//! * `I2 = int 1/x^2 - (2x - b) / (x^2 sqrt(2x^2 + D))`
//! * `I3 = int (x - b)/x^3 + log(x)/x^2`

use serde::Serialize;

use crate::error::{Error, Result};

use super::quadrature::{quadrature_1d, QuadratureResult};

pub const APPENDIX_QUAD_TOL: f64 = 1e-11;

/// The three integrals and the resulting net change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixDelta {
    pub h: f64,
    pub b: f64,
    pub closed_form: DeltaTerms,
    pub quadrature: DeltaTerms,
    pub quadrature_detail: [QuadratureResult; 3],
}

/// Flat JSON record `{"H","b","I1","I2","I3","delta_closed","delta_quad"}`;
/// the three integrals are the closed-form values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixRecord {
    #[serde(rename = "H")]
    pub h: f64,
    pub b: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I3")]
    pub i3: f64,
    pub delta_closed: f64,
    pub delta_quad: f64,
}

impl AppendixDelta {
    pub fn record(&self) -> AppendixRecord {
        AppendixRecord {
            h: self.h,
            b: self.b,
            i1: self.closed_form.i1,
            i2: self.closed_form.i2,
            i3: self.closed_form.i3,
            delta_closed: self.closed_form.delta,
            delta_quad: self.quadrature.delta,
        }
    }
}

fn combine(h: f64, i1: f64, i2: f64, i3: f64) -> DeltaTerms {
    let k = h / (h - 1.0);
    DeltaTerms { i1, i2, i3, delta: 0.5 * k * k * (i1 - i2 - i3) }
}

fn closed_form(h: f64, b: f64) -> DeltaTerms {
    let d = -b * h;
    let sd = d.sqrt();
    let y = |x: f64| (2.0 * x * x + d).sqrt();
    let a1 = |x: f64| {
        -(2.0 * x * x + d).ln() / (2.0 * x) + std::f64::consts::SQRT_2 / sd * (std::f64::consts::SQRT_2 * x / sd).atan()
    };
    let a2 = |x: f64| -(2.0 / sd) * ((sd + y(x)) / x).ln() + b * y(x) / (d * x);
    let a3 = |x: f64| -(2.0 + x.ln()) / x + b / (2.0 * x * x);
    let i1 = a1(h) - a1(1.0);
    let i2 = (1.0 - 1.0 / h) - (a2(h) - a2(1.0));
    let i3 = a3(h) - a3(1.0);
    combine(h, i1, i2, i3)
}

/// Evaluates both routes at truncation `h > 1` and shift `b < 0`.
pub fn appendix_delta(h: f64, b: f64) -> Result<AppendixDelta> {
    if !(h > 1.0) || !h.is_finite() {
        return Err(Error::param(format!("truncation H must exceed 1, got {h}")));
    }
    if !(b < 0.0) || !b.is_finite() {
        return Err(Error::param(format!("shift b must be negative, got {b}")));
    }
    let d = -b * h;
    let q1 = quadrature_1d(|x| 0.5 * (2.0 * x * x + d).ln() / (x * x), 1.0, h, APPENDIX_QUAD_TOL)?;
    let q2 = quadrature_1d(
        |x| 1.0 / (x * x) - (2.0 * x - b) / (x * x * (2.0 * x * x + d).sqrt()),
        1.0,
        h,
        APPENDIX_QUAD_TOL,
    )?;
    let q3 = quadrature_1d(|x| (x - b) / (x * x * x) + x.ln() / (x * x), 1.0, h, APPENDIX_QUAD_TOL)?;
    Ok(AppendixDelta {
        h,
        b,
        closed_form: closed_form(h, b),
        quadrature: combine(h, q1.value, q2.value, q3.value),
        quadrature_detail: [q1, q2, q3],
    })
}
