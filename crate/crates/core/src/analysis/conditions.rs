//! Pairwise conditions under which a refined (or coarse) prediction swaps the
//! winner of a two-advertiser auction, and the expected welfare losses they
//! cause.

use serde::Serialize;

use crate::dists::{bisect_increasing, DistributionSpec};
use crate::error::{Error, Result};

use super::quadrature::{integrate_2d, QuadratureResult};

/// Per-axis tolerance for the nested loss integrals.
pub const LOSS_TOL: f64 = 1e-7;

fn check_pair(v: f64, v_prime: f64, c: f64) -> Result<()> {
    if !(v_prime > 0.0) || !(v >= v_prime) {
        return Err(Error::param(format!("need v >= v' > 0, got v = {v}, v' = {v_prime}")));
    }
    check_factor(c)
}

fn check_factor(c: f64) -> Result<()> {
    if c.is_nan() || !(0.0..=1.0).contains(&c) {
        return Err(Error::param(format!("factor {c} outside [0, 1]")));
    }
    Ok(())
}

/// `v'/v < c < phi'/phi`: the refinement can hand the slot to the lower value.
/// False whenever `phi <= 0` or `phi' < 0`.
pub fn check_condition_hurts(v: f64, v_prime: f64, dist: &DistributionSpec, c: f64) -> Result<bool> {
    check_pair(v, v_prime, c)?;
    let phi = dist.virtual_value(v)?;
    let phi_p = dist.virtual_value(v_prime)?;
    if phi <= 0.0 || phi_p < 0.0 {
        return Ok(false);
    }
    Ok(v_prime < c * v && c * phi < phi_p)
}

/// `c < min(v'/v, phi'/phi)`: coarsening can hand the slot to the lower value.
/// False whenever `phi <= 0` or `phi' < 0`.
pub fn check_condition_helps(v: f64, v_prime: f64, dist: &DistributionSpec, c: f64) -> Result<bool> {
    check_pair(v, v_prime, c)?;
    let phi = dist.virtual_value(v)?;
    let phi_p = dist.virtual_value(v_prime)?;
    if phi <= 0.0 || phi_p < 0.0 {
        return Ok(false);
    }
    Ok(c * v < v_prime && c * phi < phi_p)
}

fn finite_support(dist: &DistributionSpec) -> Result<(f64, f64)> {
    if !dist.has_finite_support() {
        return Err(Error::Unsupported("loss integrals need a finite support".into()));
    }
    Ok(dist.support())
}

/// Largest `v` with `phi(v) <= phi(v') / c`, capped at the top of the support.
fn upper_value(dist: &DistributionSpec, v_prime: f64, c: f64) -> Result<f64> {
    let (_, hi) = dist.support();
    if c == 0.0 {
        return Ok(hi);
    }
    let target = dist.virtual_value(v_prime)? / c;
    bisect_increasing(|v| dist.virtual_value(v), target, v_prime, hi, 1e-13 * hi.abs().max(1.0))
}

/// Where `phi(v') = c phi(v_max)`, i.e. where the cap on [`upper_value`] starts to bind.
fn cap_point(dist: &DistributionSpec, c: f64) -> Result<f64> {
    let (lo, hi) = dist.support();
    let target = c * dist.virtual_value(hi)?;
    bisect_increasing(|v| dist.virtual_value(v), target, lo, hi, 1e-13 * hi.abs().max(1.0))
}

fn check_loss_factor(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::param(format!("factor {c} outside (0, 1)")));
    }
    Ok(())
}

/// Sufficient analytic test that the refinement-loss region is empty: no
/// `v'` with a non-negative virtual value has `v'/c` inside the support.
pub fn refinement_region_certified_empty(dist: &DistributionSpec, c: f64) -> Result<bool> {
    check_loss_factor(c)?;
    let (lo, hi) = finite_support(dist)?;
    Ok(match dist.alpha_reserve(1.0)? {
        None => true,
        Some(r) => lo.max(r) / c >= hi,
    })
}

/// Expected welfare lost because a refinement moves the slot to the lower
/// value: `E[(c v - v') ; v'/c <= v <= vbar(v')]` over independent `v, v'`,
/// where `phi(vbar(v')) = phi(v') / c`.
pub fn loss_integral_refinement(dist: &DistributionSpec, c: f64) -> Result<QuadratureResult> {
    check_loss_factor(c)?;
    let (lo, hi) = finite_support(dist)?;
    let mut breaks = vec![c * hi, cap_point(dist, c)?];
    if let Some(r) = dist.alpha_reserve(1.0)? {
        breaks.push(r);
    }
    integrate_2d(
        |vp, v| Ok((c * v - vp) * dist.pdf(v)? * dist.pdf(vp)?),
        lo,
        hi,
        |vp| {
            if dist.virtual_value(vp)? < 0.0 {
                return Ok((0.0, 0.0));
            }
            Ok(((vp / c).min(hi), upper_value(dist, vp, c)?.min(hi)))
        },
        &breaks,
        LOSS_TOL,
    )
}

/// Coarseness loss in two readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarsenessLoss {
    /// `E[(c v - v') ; v_min <= v <= v'/c]`, integrated literally; can be negative.
    pub as_written: QuadratureResult,
    /// `E[(v' - c v) ; v' <= v <= min(v'/c, vbar(v'))]` with `phi(v') >= 0`:
    /// only the pairs where the coarse ranking actually loses welfare.
    pub active: QuadratureResult,
}

pub fn loss_integral_coarseness(dist: &DistributionSpec, c: f64) -> Result<CoarsenessLoss> {
    check_factor(c)?;
    if c >= 1.0 {
        return Err(Error::param("factor must be below one"));
    }
    let (lo, hi) = finite_support(dist)?;
    let upper = |vp: f64| if c == 0.0 { hi } else { (vp / c).min(hi) };
    let as_written = integrate_2d(
        |vp, v| Ok((c * v - vp) * dist.pdf(v)? * dist.pdf(vp)?),
        lo,
        hi,
        |vp| Ok((lo, upper(vp))),
        &[c * hi],
        LOSS_TOL,
    )?;
    let mut breaks = vec![c * hi, cap_point(dist, c)?];
    if let Some(r) = dist.alpha_reserve(1.0)? {
        breaks.push(r);
    }
    let active = integrate_2d(
        |vp, v| Ok((vp - c * v) * dist.pdf(v)? * dist.pdf(vp)?),
        lo,
        hi,
        |vp| {
            if dist.virtual_value(vp)? < 0.0 {
                return Ok((0.0, 0.0));
            }
            Ok((vp, upper(vp).min(upper_value(dist, vp, c)?)))
        },
        &breaks,
        LOSS_TOL,
    )?;
    Ok(CoarsenessLoss { as_written, active })
}

/// Value whose virtual value is twice that of `s_prime` under the truncated
/// shifted equal-revenue prior with truncation `h` and shift `b`.
pub fn s_bar(s_prime: f64, h: f64, b: f64) -> Result<f64> {
    if !(h > 1.0) || !b.is_finite() {
        return Err(Error::param(format!("need H > 1 and finite shift, got H = {h}, b = {b}")));
    }
    let x = s_prime + b;
    let radicand = 2.0 * x * x - b * h;
    if !(x >= 1.0) || radicand < 0.0 {
        return Err(Error::OutOfDomain { what: "s_bar", value: s_prime, lo: 1.0 - b, hi: f64::INFINITY });
    }
    Ok(radicand.sqrt() - b)
}
