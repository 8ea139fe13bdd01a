//! Parametric value-per-click priors and their hazard-rate machinery.
//!
//! Every distribution here has a closed-form CDF, density and quantile, so
//! the inverse hazard rate `lambda(v) = (1 - F(v)) / f(v)` and the virtual
//! value `phi(v) = v - lambda(v)` are evaluated in closed form as well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::tolerance::Tolerances;

/// Upper quantile at which the exponential prior is cut for grids and
/// quadrature. Sampling never truncates.
pub const EXPONENTIAL_GRID_QUANTILE: f64 = 1.0 - 1e-9;

/// Default number of interior points used by the certification routines.
pub const DEFAULT_CERT_GRID: usize = 10_000;

/// A value distribution shared by all advertisers.
///
/// Serialized as `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", try_from = "RawSpec", into = "RawSpec")]
pub enum DistributionSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Equal-revenue distribution truncated to `[1, h]` and shifted by `-b`,
    /// so `F(v) = h/(h-1) * (1 - 1/(v+b))` on `[1-b, h-b]`.
    TruncatedShiftedEqualRevenue {
        h: f64,
        b: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
enum RawSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    Tser {
        #[serde(rename = "H")]
        h: f64,
        b: f64,
    },
}

impl TryFrom<RawSpec> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        match raw {
            RawSpec::Uniform { lo, hi } => DistributionSpec::uniform(lo, hi),
            RawSpec::Exponential { rate } => DistributionSpec::exponential(rate),
            RawSpec::Tser { h, b } => DistributionSpec::tser(h, b),
        }
    }
}

impl From<DistributionSpec> for RawSpec {
    fn from(d: DistributionSpec) -> Self {
        match d {
            DistributionSpec::Uniform { lo, hi } => RawSpec::Uniform { lo, hi },
            DistributionSpec::Exponential { rate } => RawSpec::Exponential { rate },
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => RawSpec::Tser { h, b },
        }
    }
}

/// A pair of grid points on which a monotonicity requirement fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub v1: f64,
    pub v2: f64,
    pub at_v1: f64,
    pub at_v2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MhrCertificate {
    Mhr,
    /// `v1 < v2` with `lambda(v1) < lambda(v2)`.
    NotMhr(Witness),
}

impl MhrCertificate {
    pub fn is_mhr(&self) -> bool {
        matches!(self, MhrCertificate::Mhr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularityCertificate {
    Regular,
    /// `v1 < v2` with `phi(v1) > phi(v2)`.
    NotRegular(Witness),
}

impl RegularityCertificate {
    pub fn is_regular(&self) -> bool {
        matches!(self, RegularityCertificate::Regular)
    }
}

fn finite(x: f64) -> bool {
    x.is_finite()
}

impl DistributionSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(finite(lo) && finite(hi)) || lo < 0.0 || hi <= lo {
            return Err(Error::param(format!("uniform requires 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        Ok(DistributionSpec::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !finite(rate) || rate <= 0.0 {
            return Err(Error::param(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(DistributionSpec::Exponential { rate })
    }

    pub fn tser(h: f64, b: f64) -> Result<Self> {
        if !(finite(h) && finite(b)) || h <= 1.0 {
            return Err(Error::param(format!("truncation H must exceed 1, got {h}")));
        }
        if 1.0 - b < 0.0 {
            return Err(Error::param(format!("shift b={b} moves support below zero")));
        }
        Ok(DistributionSpec::TruncatedShiftedEqualRevenue { h, b })
    }

    /// Support of the distribution; the exponential's upper end is infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Uniform { lo, hi } => (lo, hi),
            DistributionSpec::Exponential { .. } => (0.0, f64::INFINITY),
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => (1.0 - b, h - b),
        }
    }

    /// Finite interval used by grids and quadrature.
    pub fn grid_support(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Exponential { rate } => (0.0, -(1.0 - EXPONENTIAL_GRID_QUANTILE).ln() / rate),
            _ => self.support(),
        }
    }

    pub fn has_finite_support(&self) -> bool {
        self.support().1.is_finite()
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => {
                // E[X] for X on [1, h] with F = h/(h-1)(1 - 1/x) is h ln h / (h-1)
                h * h.ln() / (h - 1.0) - b
            }
        }
    }

    fn check_support(&self, what: &'static str, v: f64) -> Result<()> {
        let (lo, hi) = self.support();
        if v.is_nan() || v < lo || v > hi {
            return Err(Error::OutOfDomain { what, value: v, lo, hi });
        }
        Ok(())
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        self.check_support("cdf", v)?;
        Ok(match *self {
            DistributionSpec::Uniform { lo, hi } => (v - lo) / (hi - lo),
            DistributionSpec::Exponential { rate } => -(-rate * v).exp_m1(),
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => {
                (h / (h - 1.0) * (1.0 - 1.0 / (v + b))).clamp(0.0, 1.0)
            }
        })
    }

    pub fn pdf(&self, v: f64) -> Result<f64> {
        self.check_support("pdf", v)?;
        Ok(match *self {
            DistributionSpec::Uniform { lo, hi } => 1.0 / (hi - lo),
            DistributionSpec::Exponential { rate } => rate * (-rate * v).exp(),
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => h / (h - 1.0) / ((v + b) * (v + b)),
        })
    }

    /// Survival function `1 - F(v)`, computed without cancellation.
    pub fn survival(&self, v: f64) -> Result<f64> {
        self.check_support("survival", v)?;
        Ok(match *self {
            DistributionSpec::Uniform { lo, hi } => (hi - v) / (hi - lo),
            DistributionSpec::Exponential { rate } => (-rate * v).exp(),
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => {
                // 1 - h/(h-1)(1 - 1/x) = (h/x - 1)/(h - 1)
                ((h / (v + b) - 1.0) / (h - 1.0)).max(0.0)
            }
        })
    }

    /// Information rent `lambda(v) = (1 - F(v)) / f(v)`.
    pub fn inverse_hazard_rate(&self, v: f64) -> Result<f64> {
        if self.pdf(v)? <= 0.0 {
            return Err(Error::ZeroDensity(v));
        }
        Ok(match *self {
            DistributionSpec::Uniform { hi, .. } => hi - v,
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => {
                let x = v + b;
                x - x * x / h
            }
        })
    }

    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        Ok(v - self.inverse_hazard_rate(v)?)
    }

    /// `phi_alpha(v) = v - alpha * lambda(v)`, defined for `alpha` in `[0, 1]`.
    pub fn alpha_virtual_value(&self, v: f64, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(v - alpha * self.inverse_hazard_rate(v)?)
    }

    /// Relative size `lambda(v) / v` of the ranking penalty.
    pub fn penalty_fraction(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::OutOfDomain { what: "penalty_fraction", value: v, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(self.inverse_hazard_rate(v)? / v)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("probability {p} outside [0, 1]")));
        }
        let (lo, hi) = self.support();
        let v = match *self {
            DistributionSpec::Uniform { lo, hi } => lo + p * (hi - lo),
            DistributionSpec::Exponential { rate } => -(-p).ln_1p() / rate,
            DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => 1.0 / (1.0 - p * (h - 1.0) / h) - b,
        };
        Ok(v.clamp(lo, hi))
    }

    /// Single inverse-CDF draw.
    pub fn draw(&self, rng: &mut StreamRng) -> f64 {
        let u = rng::unit(rng);
        // u < 1, so the quantile is always finite and in support.
        self.quantile(u).expect("unit draw lies in [0, 1)")
    }

    /// `n` draws from stream 0 of `seed`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        self.sample_stream(seed, 0, n)
    }

    pub fn sample_stream(&self, seed: u64, stream: u64, n: usize) -> Vec<f64> {
        let mut rng = rng::stream(seed, stream);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// Evenly spaced interior grid of `n` points; support endpoints are excluded.
    pub fn interior_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.grid_support();
        let step = (hi - lo) / (n as f64 + 1.0);
        (1..=n).map(|k| lo + step * k as f64).collect()
    }

    /// Checks that `lambda` is non-increasing on an interior grid.
    pub fn certify_mhr(&self, grid_size: usize) -> Result<MhrCertificate> {
        let tol = Tolerances::DEFAULT.monotone;
        match self.first_violation(grid_size, |d, v| d.inverse_hazard_rate(v), |a, b| b > a + tol)? {
            None => Ok(MhrCertificate::Mhr),
            Some(w) => Ok(MhrCertificate::NotMhr(w)),
        }
    }

    /// Checks that `phi` is non-decreasing on an interior grid.
    pub fn certify_regular(&self, grid_size: usize) -> Result<RegularityCertificate> {
        let tol = Tolerances::DEFAULT.monotone;
        match self.first_violation(grid_size, |d, v| d.virtual_value(v), |a, b| b < a - tol)? {
            None => Ok(RegularityCertificate::Regular),
            Some(w) => Ok(RegularityCertificate::NotRegular(w)),
        }
    }

    fn first_violation(
        &self,
        grid_size: usize,
        eval: impl Fn(&Self, f64) -> Result<f64>,
        violates: impl Fn(f64, f64) -> bool,
    ) -> Result<Option<Witness>> {
        if grid_size < 2 {
            return Err(Error::param(format!("certification grid needs >= 2 points, got {grid_size}")));
        }
        let grid = self.interior_grid(grid_size);
        let mut prev = (grid[0], eval(self, grid[0])?);
        for &v in &grid[1..] {
            let cur = (v, eval(self, v)?);
            if violates(prev.1, cur.1) {
                return Ok(Some(Witness { v1: prev.0, v2: cur.0, at_v1: prev.1, at_v2: cur.1 }));
            }
            prev = cur;
        }
        Ok(None)
    }

    /// Smallest `v` in the grid support with `phi_alpha(v) >= 0`, or `None`
    /// when the alpha-virtual value is negative everywhere. Assumes regularity.
    pub fn alpha_reserve(&self, alpha: f64) -> Result<Option<f64>> {
        check_alpha(alpha)?;
        let (lo, hi) = self.grid_support();
        if self.alpha_virtual_value(lo, alpha)? >= 0.0 {
            return Ok(Some(lo));
        }
        if self.alpha_virtual_value(hi, alpha)? < 0.0 {
            return Ok(None);
        }
        let root = bisect_increasing(|v| self.alpha_virtual_value(v, alpha), 0.0, lo, hi, 1e-13)?;
        Ok(Some(root))
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Smallest `x` in `[lo, hi]` with `g(x) >= target` for non-decreasing `g`,
/// to within absolute `tol`. Returns `hi` if `g(hi) < target`.
pub(crate) fn bisect_increasing(
    g: impl Fn(f64) -> Result<f64>,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    if g(lo)? >= target {
        return Ok(lo);
    }
    if g(hi)? < target {
        return Ok(hi);
    }
    // invariant: g(lo) < target <= g(hi)
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Distribution of the realized value `r = p v` when `v` follows `base`.
///
/// Everything is evaluated through the generic ratio `(1 - G)/g`, so it
/// serves as an independent check of the closed-form identities
/// `lambda_G(r) = p lambda_F(r/p)` and `phi_G(r) = p phi_F(r/p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedValueDist {
    pub base: DistributionSpec,
    pub relevance: f64,
}

impl RealizedValueDist {
    pub fn new(base: DistributionSpec, relevance: f64) -> Result<Self> {
        if relevance.is_nan() || relevance <= 0.0 || relevance > 1.0 {
            return Err(Error::param(format!("relevance {relevance} outside (0, 1]")));
        }
        Ok(RealizedValueDist { base, relevance })
    }

    pub fn cdf(&self, r: f64) -> Result<f64> {
        self.base.cdf(r / self.relevance)
    }

    pub fn pdf(&self, r: f64) -> Result<f64> {
        Ok(self.base.pdf(r / self.relevance)? / self.relevance)
    }

    pub fn inverse_hazard_rate(&self, r: f64) -> Result<f64> {
        let g = self.pdf(r)?;
        if g <= 0.0 {
            return Err(Error::ZeroDensity(r));
        }
        Ok(self.base.survival(r / self.relevance)? / g)
    }

    pub fn virtual_value(&self, r: f64) -> Result<f64> {
        Ok(r - self.inverse_hazard_rate(r)?)
    }
}
