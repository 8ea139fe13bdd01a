//! Two-advertiser, single-slot experiments: the welfare cost of a refinement
//! that is not flip-spread, the efficiency loss of the revenue-optimal auction
//! as the second relevance varies, and a non-identical-values variant.

use rayon::prelude::*;
use serde::Serialize;

use crate::auction::{allocate_by_scores, SlotProfile};
use crate::dists::{check_alpha, DistributionSpec};
use crate::error::{Error, Result};
use crate::prediction::non_flip_spread_structure;
use crate::rng;

use super::stats::SampleStats;
use super::trials::compare_arms;

/// Range of realized values `p v` over the support.
pub fn realized_range(dist: &DistributionSpec, relevance: f64) -> (f64, f64) {
    let (lo, hi) = dist.support();
    (relevance * lo, relevance * hi)
}

/// Range of realized alpha-virtual values `p phi_alpha(v)` over the grid
/// support; assumes regularity, so the ends are attained at the endpoints.
pub fn virtual_range(dist: &DistributionSpec, relevance: f64, alpha: f64) -> Result<(f64, f64)> {
    let (lo, hi) = dist.grid_support();
    Ok((relevance * dist.alpha_virtual_value(lo, alpha)?, relevance * dist.alpha_virtual_value(hi, alpha)?))
}

/// Paired welfare estimates of the fine and coarse arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareGap {
    pub samples: usize,
    pub welfare_fine: f64,
    pub welfare_coarse: f64,
    pub se_fine: f64,
    pub se_coarse: f64,
    /// Standard error of the paired difference `fine - coarse`.
    pub se_diff: f64,
}

impl WelfareGap {
    fn from_samples(fine: &[f64], coarse: &[f64]) -> Self {
        let (f, c) = (SampleStats::of(fine), SampleStats::of(coarse));
        WelfareGap {
            samples: fine.len(),
            welfare_fine: f.mean,
            welfare_coarse: c.mean,
            se_fine: f.se,
            se_coarse: c.se,
            se_diff: SampleStats::paired(fine, coarse).se,
        }
    }

    /// True iff the fine arm is worse by more than `k` paired standard errors.
    pub fn fine_worse_by(&self, k: f64) -> bool {
        self.welfare_coarse - self.welfare_fine > k * self.se_diff
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("need at least two samples"));
    }
    Ok(())
}

/// The chain-versus-local-pizzeria refinement under the revenue-optimal
/// auction (`alpha = 1`), values Uniform(3, 5), one slot. Sample `k` draws its
/// values and query from stream `k` of `seed`.
pub fn nonflipspread_welfare_gap(epsilon: f64, n_samples: usize, seed: u64) -> Result<WelfareGap> {
    if !(epsilon > 0.0 && epsilon < 0.4) {
        return Err(Error::param(format!("epsilon {epsilon} outside (0, 0.4)")));
    }
    check_samples(n_samples)?;
    let dist = DistributionSpec::uniform(3.0, 5.0)?;
    let rs = non_flip_spread_structure(epsilon);
    let weights = rs.query_weights();
    let arms: Vec<(Vec<f64>, Vec<f64>)> = weights.iter().map(|(q, _)| rs.relevances(q, 2)).collect::<Result<_>>()?;
    let slots = SlotProfile::single();
    let pairs: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let values = [dist.draw(&mut r), dist.draw(&mut r)];
            let u = rng::unit(&mut r);
            let qi = if u < weights[0].1 { 0 } else { 1 };
            let (fine, coarse) = &arms[qi];
            let o = compare_arms(&dist, &slots, &values, fine, coarse, 1.0)?;
            Ok((o.welfare_fine, o.welfare_coarse))
        })
        .collect::<Result<_>>()?;
    let (fine, coarse): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(WelfareGap::from_samples(&fine, &coarse))
}

/// Same harness with non-identical priors: the chain draws from Uniform(3, 5)
/// with relevance 0.8; the local pizzeria draws from Uniform(1.2, 2) with coarse
/// relevance 0.25, refined to 1 on `SF` and `2.5 epsilon` elsewhere.
pub fn non_iid_welfare_gap(epsilon: f64, n_samples: usize, seed: u64) -> Result<WelfareGap> {
    if !(epsilon > 0.0 && epsilon < 0.1) {
        return Err(Error::param(format!("epsilon {epsilon} outside (0, 0.1)")));
    }
    check_samples(n_samples)?;
    let chain = DistributionSpec::uniform(3.0, 5.0)?;
    let local = DistributionSpec::uniform(1.2, 2.0)?;
    let (p_chain, p_local) = (0.8, 0.25);
    let (sf_rel, rest_rel) = (1.0, 2.5 * epsilon);
    // mean preservation: w_sf * 1 + (1 - w_sf) * rest = 0.25
    let w_sf = (p_local - rest_rel) / (sf_rel - rest_rel);
    let pairs: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            let (v0, v1) = (chain.draw(&mut r), local.draw(&mut r));
            let fine_local = if rng::unit(&mut r) < w_sf { sf_rel } else { rest_rel };
            let phi0 = chain.virtual_value(v0)?;
            let phi1 = local.virtual_value(v1)?;
            let realized = [p_chain * v0, fine_local * v1];
            let value_of = |scores: [f64; 2]| {
                allocate_by_scores(&scores, 1).winners().iter().map(|&(i, _)| realized[i]).sum::<f64>()
            };
            let fine = value_of([p_chain * phi0, fine_local * phi1]);
            let coarse = value_of([p_chain * phi0, p_local * phi1]);
            Ok((fine, coarse))
        })
        .collect::<Result<_>>()?;
    let (fine, coarse): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(WelfareGap::from_samples(&fine, &coarse))
}

/// Relevance of the first advertiser in [`figure2_sweep`].
pub const FIGURE2_P1: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure2Row {
    pub p2: f64,
    pub loss: f64,
    pub stderr: f64,
}

/// The grid `0, 0.05, ..., 0.8`.
pub fn figure2_default_grid() -> Vec<f64> {
    (0..=16).map(|k| k as f64 / 20.0).collect()
}

/// Expected welfare gap between the efficient (`alpha = 0`) and the
/// revenue-optimal (`alpha = 1`) single-slot auction for two Uniform(3, 5)
/// advertisers with relevances `0.8` and `p2`. All grid points share the same
/// value draws.
pub fn figure2_sweep(p2_grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<Figure2Row>> {
    check_samples(n_samples)?;
    if let Some(&p) = p2_grid.iter().find(|&&p| !(0.0..=FIGURE2_P1).contains(&p)) {
        return Err(Error::param(format!("relevance {p} outside [0, {FIGURE2_P1}]")));
    }
    let dist = DistributionSpec::uniform(3.0, 5.0)?;
    let slots = SlotProfile::single();
    let profiles: Vec<[f64; 2]> = (0..n_samples)
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            [dist.draw(&mut r), dist.draw(&mut r)]
        })
        .collect();
    p2_grid
        .par_iter()
        .map(|&p2| {
            let rel = [FIGURE2_P1, p2];
            let losses: Vec<f64> = profiles
                .iter()
                .map(|v| {
                    let eff = compare_arms(&dist, &slots, v, &rel, &rel, 0.0)?.welfare_fine;
                    let rev = compare_arms(&dist, &slots, v, &rel, &rel, 1.0)?.welfare_fine;
                    Ok(eff - rev)
                })
                .collect::<Result<_>>()?;
            let s = SampleStats::of(&losses);
            Ok(Figure2Row { p2, loss: s.mean, stderr: s.se })
        })
        .collect()
}

/// Largest `p2` at which the second advertiser can never outrank the first
/// under alpha: its best realized alpha-virtual value `p2 phi_alpha(v_max)`
/// does not exceed the first's worst.
pub fn never_outranked_threshold(dist: &DistributionSpec, p1: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (lo1, _) = virtual_range(dist, p1, alpha)?;
    let (_, hi2) = virtual_range(dist, 1.0, alpha)?;
    if hi2 <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lo1 / hi2)
}
