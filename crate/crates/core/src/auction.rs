//! Position auctions and the alpha-virtual-value mechanism family.
//!
//! Advertiser `i` with value-per-click `v_i` and relevance `p_i` placed in slot
//! `j` is worth `s_j p_i v_i` per impression. The alpha mechanism ranks by the
//! realized alpha-virtual value `p_i phi_alpha(v_i)`, drops negative scores and
//! fills slots top-down. `alpha = 0` is VCG, `alpha = 1` is Myerson.

use serde::{Deserialize, Serialize};

use crate::dists::{bisect_increasing, check_alpha, DistributionSpec};
use crate::error::{Error, Result};

/// Grid used to reject irregular priors before computing threshold prices.
const PAYMENT_REGULARITY_GRID: usize = 64;

/// Value-space tolerance of the threshold bisection.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// Non-increasing slot effects `1 >= s_1 >= ... >= s_m >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SlotProfile(Vec<f64>);

impl SlotProfile {
    pub fn new(effects: Vec<f64>) -> Result<Self> {
        if let Some(bad) = effects.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::param(format!("slot effect {bad} outside [0, 1]")));
        }
        if effects.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("slot effects must be non-increasing"));
        }
        Ok(SlotProfile(effects))
    }

    /// A single slot with effect one.
    pub fn single() -> Self {
        SlotProfile(vec![1.0])
    }

    pub fn effects(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Effect of slot `j`; slots past the end have effect zero.
    pub fn effect(&self, j: usize) -> f64 {
        self.0.get(j).copied().unwrap_or(0.0)
    }
}

impl TryFrom<Vec<f64>> for SlotProfile {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SlotProfile::new(v)
    }
}

impl From<SlotProfile> for Vec<f64> {
    fn from(s: SlotProfile) -> Self {
        s.0
    }
}

/// One advertiser; its id is its position in the instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Advertiser {
    pub v: f64,
    pub p: f64,
}

impl Advertiser {
    pub fn new(v: f64, p: f64) -> Result<Self> {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::param(format!("value-per-click {v} must be finite and >= 0")));
        }
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("relevance {p} outside [0, 1]")));
        }
        Ok(Advertiser { v, p })
    }

    pub fn realized_value(&self) -> f64 {
        self.p * self.v
    }
}

/// Realized value `r = p v`.
pub fn realized_value(adv: &Advertiser) -> f64 {
    adv.realized_value()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct AuctionInstance {
    pub slots: SlotProfile,
    pub advertisers: Vec<Advertiser>,
    pub dist: DistributionSpec,
}

#[derive(Deserialize)]
struct RawInstance {
    slots: SlotProfile,
    advertisers: Vec<Advertiser>,
    dist: DistributionSpec,
}

impl TryFrom<RawInstance> for AuctionInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        AuctionInstance::new(raw.slots, raw.advertisers, raw.dist)
    }
}

impl AuctionInstance {
    pub fn new(slots: SlotProfile, advertisers: Vec<Advertiser>, dist: DistributionSpec) -> Result<Self> {
        for (i, a) in advertisers.iter().enumerate() {
            Advertiser::new(a.v, a.p).map_err(|e| Error::param(format!("advertiser {i}: {e}")))?;
        }
        Ok(AuctionInstance { slots, advertisers, dist })
    }

    /// Builds an instance from parallel value and relevance slices.
    pub fn from_parts(slots: SlotProfile, values: &[f64], relevances: &[f64], dist: DistributionSpec) -> Result<Self> {
        if values.len() != relevances.len() {
            return Err(Error::param("values and relevances differ in length"));
        }
        let advertisers =
            values.iter().zip(relevances).map(|(&v, &p)| Advertiser::new(v, p)).collect::<Result<Vec<_>>>()?;
        Ok(AuctionInstance { slots, advertisers, dist })
    }

    /// Same values and slots, different relevance predictions.
    pub fn with_relevances(&self, relevances: &[f64]) -> Result<Self> {
        let values: Vec<f64> = self.advertisers.iter().map(|a| a.v).collect();
        Self::from_parts(self.slots.clone(), &values, relevances, self.dist)
    }

    pub fn n(&self) -> usize {
        self.advertisers.len()
    }

    pub fn m(&self) -> usize {
        self.slots.len()
    }

    /// Ranking scores `p_i phi_alpha(v_i)`.
    pub fn scores(&self, alpha: f64) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        self.advertisers.iter().map(|a| Ok(a.p * self.dist.alpha_virtual_value(a.v, alpha)?)).collect()
    }
}

/// Injective partial map from advertisers to slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    slot_of: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment { slot_of: vec![None; n] }
    }

    /// Validates injectivity and slot range.
    pub fn new(slot_of: Vec<Option<usize>>, m: usize) -> Result<Self> {
        let mut used = vec![false; m];
        for (i, s) in slot_of.iter().enumerate() {
            if let Some(j) = *s {
                if j >= m {
                    return Err(Error::param(format!("advertiser {i} assigned to slot {j} of {m}")));
                }
                if std::mem::replace(&mut used[j], true) {
                    return Err(Error::param(format!("slot {j} assigned twice")));
                }
            }
        }
        Ok(Assignment { slot_of })
    }

    /// `winners[k]` takes slot `k`.
    pub fn from_order(n: usize, winners: &[usize]) -> Self {
        let mut slot_of = vec![None; n];
        for (j, &i) in winners.iter().enumerate() {
            slot_of[i] = Some(j);
        }
        Assignment { slot_of }
    }

    pub fn slot_of(&self, advertiser: usize) -> Option<usize> {
        self.slot_of.get(advertiser).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.slot_of
    }

    /// `(advertiser, slot)` pairs in slot order.
    pub fn winners(&self) -> Vec<(usize, usize)> {
        let mut w: Vec<(usize, usize)> =
            self.slot_of.iter().enumerate().filter_map(|(i, s)| s.map(|j| (i, j))).collect();
        w.sort_by_key(|&(_, j)| j);
        w
    }

    pub fn unassigned(&self) -> Vec<usize> {
        (0..self.slot_of.len()).filter(|&i| self.slot_of[i].is_none()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_of.iter().all(Option::is_none)
    }
}

/// Orders advertiser ids by descending score; equal scores go to the lower id.
pub fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Assignment made by the alpha-virtual-value mechanism.
pub fn allocate(instance: &AuctionInstance, alpha: f64) -> Result<Assignment> {
    let scores = instance.scores(alpha)?;
    Ok(allocate_by_scores(&scores, instance.m()))
}

/// Fills `m` slots with the highest non-negative scores.
pub fn allocate_by_scores(scores: &[f64], m: usize) -> Assignment {
    let winners: Vec<usize> = rank_by_score(scores).into_iter().filter(|&i| scores[i] >= 0.0).take(m).collect();
    Assignment::from_order(scores.len(), &winners)
}

/// `sum s_j p_i v_i` over assigned advertisers.
pub fn welfare(instance: &AuctionInstance, asg: &Assignment) -> f64 {
    asg.winners()
        .into_iter()
        .map(|(i, j)| instance.slots.effect(j) * instance.advertisers[i].realized_value())
        .fold(0.0, |acc, x| acc + x)
}

/// `sum s_j p_i phi(v_i)` over assigned advertisers; its expectation is the
/// expected revenue of any truthful mechanism with this allocation rule.
pub fn realized_virtual_surplus(instance: &AuctionInstance, asg: &Assignment) -> Result<f64> {
    asg.winners()
        .into_iter()
        .map(|(i, j)| {
            let a = &instance.advertisers[i];
            Ok(instance.slots.effect(j) * a.p * instance.dist.virtual_value(a.v)?)
        })
        .try_fold(0.0, |acc, x: Result<f64>| Ok(acc + x?))
}

/// Pointwise trade-off objective `(1 - alpha) welfare + alpha virtual surplus`,
/// i.e. the realized alpha-virtual surplus of the assignment.
pub fn objective(instance: &AuctionInstance, asg: &Assignment, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    asg.winners()
        .into_iter()
        .map(|(i, j)| {
            let a = &instance.advertisers[i];
            Ok(instance.slots.effect(j) * a.p * instance.dist.alpha_virtual_value(a.v, alpha)?)
        })
        .try_fold(0.0, |acc, x: Result<f64>| Ok(acc + x?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Payment {
    pub advertiser: usize,
    pub slot: usize,
    /// Expected payment per impression.
    pub amount: f64,
}

/// Myerson threshold prices for the alpha mechanism.
///
/// A winner in slot `j` pays `p_i sum_{k>=j} (s_k - s_{k+1}) t_k`, where `t_k`
/// is the smallest value-per-click that still earns slot `k` or better with
/// the other bids fixed.
pub fn threshold_payments(instance: &AuctionInstance, alpha: f64, asg: &Assignment) -> Result<Vec<Payment>> {
    check_alpha(alpha)?;
    if !instance.dist.certify_regular(PAYMENT_REGULARITY_GRID)?.is_regular() {
        return Err(Error::Unsupported("threshold prices need a regular prior (monotone allocation)".into()));
    }
    let scores = instance.scores(alpha)?;
    let m = instance.m();
    let (v_min, _) = instance.dist.support();
    let mut out = Vec::new();
    for (i, j) in asg.winners() {
        let adv = instance.advertisers[i];
        if j >= m {
            return Err(Error::param(format!("slot {j} out of range")));
        }
        if adv.p == 0.0 {
            out.push(Payment { advertiser: i, slot: j, amount: 0.0 });
            continue;
        }
        let mut others: Vec<f64> = scores.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &s)| s).collect();
        others.sort_by(|a, b| b.total_cmp(a));
        let mut total = 0.0;
        for k in j..m {
            let drop = instance.slots.effect(k) - instance.slots.effect(k + 1);
            if drop == 0.0 {
                continue;
            }
            // slot k or better needs to beat the (k+1)-th best rival and the reserve
            let bar = others.get(k).copied().unwrap_or(0.0).max(0.0);
            let t = bisect_increasing(
                |v| Ok(adv.p * instance.dist.alpha_virtual_value(v, alpha)?),
                bar,
                v_min,
                adv.v,
                THRESHOLD_TOL,
            )?;
            total += drop * t;
        }
        out.push(Payment { advertiser: i, slot: j, amount: adv.p * total });
    }
    Ok(out)
}

/// Metrics of one mechanism run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeMetrics {
    pub alpha: f64,
    pub welfare: f64,
    pub realized_virtual_surplus: f64,
    pub objective: f64,
    pub payments: Vec<Payment>,
}

impl OutcomeMetrics {
    pub fn payment_total(&self) -> f64 {
        self.payments.iter().fold(0.0, |acc, p| acc + p.amount)
    }

    pub fn row(&self) -> MetricsRow {
        MetricsRow {
            alpha: self.alpha,
            welfare: self.welfare,
            virtual_surplus: self.realized_virtual_surplus,
            payment_total: self.payment_total(),
        }
    }
}

/// CSV record `alpha,welfare,virtual_surplus,payment_total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub alpha: f64,
    pub welfare: f64,
    pub virtual_surplus: f64,
    pub payment_total: f64,
}

/// Runs the alpha mechanism and measures the outcome.
pub fn run_mechanism(instance: &AuctionInstance, alpha: f64) -> Result<(Assignment, OutcomeMetrics)> {
    let asg = allocate(instance, alpha)?;
    let metrics = OutcomeMetrics {
        alpha,
        welfare: welfare(instance, &asg),
        realized_virtual_surplus: realized_virtual_surplus(instance, &asg)?,
        objective: objective(instance, &asg, alpha)?,
        payments: threshold_payments(instance, alpha, &asg)?,
    };
    Ok((asg, metrics))
}
