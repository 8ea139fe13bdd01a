//! Relevance prediction schemes and their refinements.
//!
//! A scheme partitions query-advertiser pairs into parts and predicts one
//! relevance per part. A refinement splits every coarse part into subparts
//! whose relevances average, under the subpart distribution, to the coarse
//! relevance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tolerance::Tolerances;

/// Bound on proposal attempts in [`generate_flip_spread_refinement`].
pub const MAX_GENERATION_RETRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: String,
    pub relevance: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Membership {
    pub query: String,
    pub advertiser: usize,
    pub part: String,
}

/// Partition of query-advertiser pairs with a relevance per part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScheme", into = "RawScheme")]
pub struct PredictionScheme {
    parts: BTreeMap<String, f64>,
    membership: BTreeMap<(String, usize), String>,
}

#[derive(Serialize, Deserialize)]
struct RawScheme {
    parts: Vec<Part>,
    membership: Vec<Membership>,
}

impl TryFrom<RawScheme> for PredictionScheme {
    type Error = Error;
    fn try_from(raw: RawScheme) -> Result<Self> {
        PredictionScheme::new(raw.parts, raw.membership)
    }
}

impl From<PredictionScheme> for RawScheme {
    fn from(s: PredictionScheme) -> Self {
        RawScheme {
            parts: s.parts().collect(),
            membership: s
                .membership
                .into_iter()
                .map(|((query, advertiser), part)| Membership { query, advertiser, part })
                .collect(),
        }
    }
}

impl PredictionScheme {
    pub fn new(parts: Vec<Part>, membership: Vec<Membership>) -> Result<Self> {
        let mut part_map = BTreeMap::new();
        for p in parts {
            if p.relevance.is_nan() || !(0.0..=1.0).contains(&p.relevance) {
                return Err(Error::param(format!("part {} relevance {} outside [0, 1]", p.id, p.relevance)));
            }
            if part_map.insert(p.id.clone(), p.relevance).is_some() {
                return Err(Error::param(format!("duplicate part id {}", p.id)));
            }
        }
        let mut members = BTreeMap::new();
        for m in membership {
            if !part_map.contains_key(&m.part) {
                return Err(Error::param(format!(
                    "pair ({}, {}) maps to unknown part {}",
                    m.query, m.advertiser, m.part
                )));
            }
            if members.insert((m.query.clone(), m.advertiser), m.part).is_some() {
                return Err(Error::param(format!("pair ({}, {}) listed twice", m.query, m.advertiser)));
            }
        }
        Ok(PredictionScheme { parts: part_map, membership: members })
    }

    pub fn parts(&self) -> impl Iterator<Item = Part> + '_ {
        self.parts.iter().map(|(id, &relevance)| Part { id: id.clone(), relevance })
    }

    pub fn part_relevance(&self, part: &str) -> Option<f64> {
        self.parts.get(part).copied()
    }

    pub fn part_of(&self, query: &str, advertiser: usize) -> Result<&str> {
        self.membership
            .get(&(query.to_string(), advertiser))
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownPair { query: query.to_string(), advertiser })
    }

    /// Relevance prediction for the pair according to this scheme.
    pub fn relevance_of(&self, query: &str, advertiser: usize) -> Result<f64> {
        let part = self.part_of(query, advertiser)?;
        Ok(self.parts[part])
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.membership.keys().map(|(q, a)| (q.as_str(), *a))
    }

    pub fn queries(&self) -> BTreeSet<String> {
        self.membership.keys().map(|(q, _)| q.clone()).collect()
    }

    /// Advertisers present on `query`, ascending.
    pub fn advertisers_on(&self, query: &str) -> Vec<usize> {
        self.membership.keys().filter(|(q, _)| q == query).map(|&(_, a)| a).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subpart {
    pub id: String,
    pub prob: f64,
}

/// A coarse scheme, a finer scheme, and the distribution over subparts of
/// every coarse part. Optional query weights drive Monte Carlo experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStructure {
    pub coarse: PredictionScheme,
    pub fine: PredictionScheme,
    pub subparts: BTreeMap<String, Vec<Subpart>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub queries: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefinementVerdict {
    Valid,
    Invalid(String),
}

impl RefinementVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, RefinementVerdict::Valid)
    }
}

/// Checks nesting, probability mass and the mean-preservation constraint.
pub fn validate_refinement(rs: &RefinementStructure) -> RefinementVerdict {
    let tol = Tolerances::DEFAULT;
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (coarse_id, subs) in &rs.subparts {
        let Some(coarse_rel) = rs.coarse.part_relevance(coarse_id) else {
            return RefinementVerdict::Invalid(format!("subparts listed for unknown coarse part {coarse_id}"));
        };
        let mut mass = 0.0;
        let mut mean = 0.0;
        for sp in subs {
            let Some(rel) = rs.fine.part_relevance(&sp.id) else {
                return RefinementVerdict::Invalid(format!("unknown fine part {}", sp.id));
            };
            if sp.prob.is_nan() || sp.prob < 0.0 {
                return RefinementVerdict::Invalid(format!("negative probability for {}", sp.id));
            }
            if let Some(prev) = owner.insert(&sp.id, coarse_id) {
                return RefinementVerdict::Invalid(format!(
                    "fine part {} nested in both {prev} and {coarse_id}",
                    sp.id
                ));
            }
            mass += sp.prob;
            mean += sp.prob * rel;
        }
        if (mass - 1.0).abs() > tol.probability {
            return RefinementVerdict::Invalid(format!("probabilities of {coarse_id} sum to {mass}"));
        }
        if (mean - coarse_rel).abs() > tol.expectation {
            return RefinementVerdict::Invalid(format!(
                "expectation mismatch in {coarse_id}: subparts average {mean}, coarse relevance {coarse_rel}"
            ));
        }
    }
    let coarse_pairs: BTreeSet<(&str, usize)> = rs.coarse.pairs().collect();
    let fine_pairs: BTreeSet<(&str, usize)> = rs.fine.pairs().collect();
    if coarse_pairs != fine_pairs {
        return RefinementVerdict::Invalid("coarse and fine schemes cover different pairs".into());
    }
    for (q, a) in coarse_pairs {
        let c = rs.coarse.part_of(q, a).expect("pair from coarse scheme");
        let f = rs.fine.part_of(q, a).expect("pairs coincide");
        match owner.get(f) {
            Some(&o) if o == c => {}
            Some(&o) => {
                return RefinementVerdict::Invalid(format!(
                    "pair ({q}, {a}) is in coarse part {c} but its fine part {f} nests in {o}"
                ))
            }
            None => return RefinementVerdict::Invalid(format!("fine part {f} not nested in any coarse part")),
        }
    }
    RefinementVerdict::Valid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Spread,
    Flipped,
    Neither,
}

/// Classifies the fine pair `(a, b)` against the coarse pair `(c, d)`.
///
/// Ratios are compared by cross-multiplication, so a single zero relevance
/// in a pair is handled as an infinite or zero ratio. A ratio of exactly one
/// satisfies both definitions and is reported as `Spread`.
pub fn classify_pair(a: f64, b: f64, c: f64, d: f64) -> Result<PairClass> {
    for x in [a, b, c, d] {
        if x.is_nan() || x < 0.0 {
            return Err(Error::OutOfDomain { what: "classify_pair", value: x, lo: 0.0, hi: f64::INFINITY });
        }
    }
    if (a == 0.0 && b == 0.0) || (c == 0.0 && d == 0.0) {
        return Err(Error::param("relevance ratio 0/0 is undefined"));
    }
    // a/b >= c/d  <=>  a d >= c b   (b, d >= 0)
    let ad = a * d;
    let cb = c * b;
    let spread = (ad >= cb && c >= d) || (d >= c && cb >= ad);
    if spread {
        return Ok(PairClass::Spread);
    }
    let flipped = (a >= b && d >= c) || (c >= d && b >= a);
    Ok(if flipped { PairClass::Flipped } else { PairClass::Neither })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlipSpreadVerdict {
    FlipSpread,
    Not { query: String, advertisers: (usize, usize) },
}

impl FlipSpreadVerdict {
    pub fn is_flip_spread(&self) -> bool {
        matches!(self, FlipSpreadVerdict::FlipSpread)
    }
}

/// Checks that on every listed query, every pair of competing advertisers is
/// spread or flipped by the refinement.
pub fn is_flip_spread(rs: &RefinementStructure, queries: &BTreeSet<String>) -> Result<FlipSpreadVerdict> {
    for q in queries {
        let ads = rs.fine.advertisers_on(q);
        for (x, &i) in ads.iter().enumerate() {
            for &j in &ads[x + 1..] {
                let class = classify_pair(
                    rs.fine.relevance_of(q, i)?,
                    rs.fine.relevance_of(q, j)?,
                    rs.coarse.relevance_of(q, i)?,
                    rs.coarse.relevance_of(q, j)?,
                )?;
                if class == PairClass::Neither {
                    return Ok(FlipSpreadVerdict::Not { query: q.clone(), advertisers: (i, j) });
                }
            }
        }
    }
    Ok(FlipSpreadVerdict::FlipSpread)
}

impl RefinementStructure {
    /// Every query of the fine scheme.
    pub fn all_queries(&self) -> BTreeSet<String> {
        self.fine.queries()
    }

    /// Query weights; uniform when none were declared.
    pub fn query_weights(&self) -> Vec<(String, f64)> {
        if self.queries.is_empty() {
            let qs = self.all_queries();
            let w = 1.0 / qs.len() as f64;
            qs.into_iter().map(|q| (q, w)).collect()
        } else {
            self.queries.iter().map(|(q, &w)| (q.clone(), w)).collect()
        }
    }

    /// Relevances of advertisers `0..n` on `query` under the fine and coarse schemes.
    pub fn relevances(&self, query: &str, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let fine = (0..n).map(|i| self.fine.relevance_of(query, i)).collect::<Result<_>>()?;
        let coarse = (0..n).map(|i| self.coarse.relevance_of(query, i)).collect::<Result<_>>()?;
        Ok((fine, coarse))
    }

    /// Number of advertisers, assuming ids `0..n`.
    pub fn advertiser_count(&self) -> usize {
        self.fine.pairs().map(|(_, a)| a + 1).max().unwrap_or(0)
    }

    /// The trivial refinement of `scheme`: each part is its own only subpart.
    pub fn identity(scheme: &PredictionScheme) -> Self {
        let subparts = scheme.parts().map(|p| (p.id.clone(), vec![Subpart { id: p.id, prob: 1.0 }])).collect();
        RefinementStructure { coarse: scheme.clone(), fine: scheme.clone(), subparts, queries: BTreeMap::new() }
    }

    /// Per-advertiser refinement: advertiser `i` has coarse part `c{i}` with
    /// relevance `coarse[i]`, and on query `q{k}` (weight `weights[k]`) fine
    /// part `f{i}.{k}` with relevance `fine[k][i]`.
    pub fn per_advertiser(coarse: &[f64], weights: &[f64], fine: &[Vec<f64>]) -> Result<Self> {
        if weights.len() != fine.len() {
            return Err(Error::param("one fine relevance row per query required"));
        }
        let n = coarse.len();
        let qname = |k: usize| format!("q{k}");
        let mut coarse_parts = Vec::new();
        let mut fine_parts = Vec::new();
        let mut coarse_members = Vec::new();
        let mut fine_members = Vec::new();
        let mut subparts = BTreeMap::new();
        for (i, &c) in coarse.iter().enumerate() {
            let cid = format!("c{i}");
            coarse_parts.push(Part { id: cid.clone(), relevance: c });
            let mut subs = Vec::new();
            for (k, row) in fine.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::param("fine relevance row has wrong length"));
                }
                let fid = format!("f{i}.{k}");
                fine_parts.push(Part { id: fid.clone(), relevance: row[i] });
                subs.push(Subpart { id: fid.clone(), prob: weights[k] });
                coarse_members.push(Membership { query: qname(k), advertiser: i, part: cid.clone() });
                fine_members.push(Membership { query: qname(k), advertiser: i, part: fid });
            }
            subparts.insert(cid, subs);
        }
        Ok(RefinementStructure {
            coarse: PredictionScheme::new(coarse_parts, coarse_members)?,
            fine: PredictionScheme::new(fine_parts, fine_members)?,
            subparts,
            queries: weights.iter().enumerate().map(|(k, &w)| (qname(k), w)).collect(),
        })
    }
}

/// Random flip-spread refinement of per-advertiser coarse relevances over
/// `n_subparts` query types.
///
/// Proposals alternate between unconstrained mean-preserving spreads (accepted
/// only if they happen to be flip-spread) and a structured family that is
/// flip-spread by construction: on "sharpening" queries fine relevances are
/// `(p_i - Q) h_k`, which moves every ratio away from one, and on "flattening"
/// queries every advertiser gets the same relevance, which flips or ties every
/// pair.
pub fn generate_flip_spread_refinement(coarse: &[f64], seed: u64, n_subparts: usize) -> Result<RefinementStructure> {
    if coarse.iter().any(|&p| p.is_nan() || p <= 0.0 || p > 1.0) {
        return Err(Error::param("coarse relevances must lie in (0, 1]"));
    }
    if n_subparts == 0 {
        return Err(Error::param("at least one subpart is required"));
    }
    if n_subparts == 1 {
        let fine = vec![coarse.to_vec()];
        return RefinementStructure::per_advertiser(coarse, &[1.0], &fine);
    }
    let mut rng = rng::stream(seed, 0);
    let mut last = String::new();
    for attempt in 0..MAX_GENERATION_RETRIES {
        let weights = random_weights(&mut rng, n_subparts);
        let fine = if attempt % 2 == 0 {
            propose_free(&mut rng, coarse, &weights)
        } else {
            propose_structured(&mut rng, coarse, &weights)
        };
        let Some(fine) = fine else {
            last = "proposal left [0, 1]".into();
            continue;
        };
        let rs = RefinementStructure::per_advertiser(coarse, &weights, &fine)?;
        match validate_refinement(&rs) {
            RefinementVerdict::Valid => {}
            RefinementVerdict::Invalid(why) => {
                last = why;
                continue;
            }
        }
        match is_flip_spread(&rs, &rs.all_queries())? {
            FlipSpreadVerdict::FlipSpread => return Ok(rs),
            FlipSpreadVerdict::Not { query, advertisers } => {
                last = format!("pair {advertisers:?} on {query} neither spread nor flipped");
            }
        }
    }
    Err(Error::Generation { retries: MAX_GENERATION_RETRIES, reason: last })
}

/// Random mean-preserving refinement with no flip-spread requirement.
pub fn generate_refinement(coarse: &[f64], seed: u64, n_subparts: usize) -> Result<RefinementStructure> {
    if coarse.iter().any(|&p| p.is_nan() || !(0.0..=1.0).contains(&p)) {
        return Err(Error::param("coarse relevances must lie in [0, 1]"));
    }
    if n_subparts == 0 {
        return Err(Error::param("at least one subpart is required"));
    }
    let mut rng = rng::stream(seed, 1);
    for _ in 0..MAX_GENERATION_RETRIES {
        let weights = random_weights(&mut rng, n_subparts);
        let Some(fine) = propose_free(&mut rng, coarse, &weights) else { continue };
        let rs = RefinementStructure::per_advertiser(coarse, &weights, &fine)?;
        if validate_refinement(&rs).is_valid() {
            return Ok(rs);
        }
    }
    Err(Error::Generation { retries: MAX_GENERATION_RETRIES, reason: "no proposal stayed in [0, 1]".into() })
}

fn random_weights(rng: &mut rng::StreamRng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng::unit(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // put the rounding residue on the last weight so the mass is exactly one
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

/// Rescales the last query's relevance so the weighted mean is exact.
fn fix_mean(fine: &mut [Vec<f64>], weights: &[f64], i: usize, target: f64) -> bool {
    let k = weights.len();
    let head: f64 = (0..k - 1).map(|q| weights[q] * fine[q][i]).sum();
    let last = (target - head) / weights[k - 1];
    if !(0.0..=1.0).contains(&last) {
        return false;
    }
    fine[k - 1][i] = last;
    true
}

fn propose_free(rng: &mut rng::StreamRng, coarse: &[f64], weights: &[f64]) -> Option<Vec<Vec<f64>>> {
    let k = weights.len();
    let mut fine = vec![vec![0.0; coarse.len()]; k];
    for (i, &c) in coarse.iter().enumerate() {
        let mult: Vec<f64> = (0..k).map(|_| rng::uniform(rng, 0.1, 1.9)).collect();
        let norm: f64 = mult.iter().zip(weights).map(|(m, w)| m * w).sum();
        for q in 0..k {
            fine[q][i] = (c * mult[q] / norm).min(1.0);
        }
        if !fix_mean(&mut fine, weights, i, c) {
            return None;
        }
    }
    Some(fine)
}

fn propose_structured(rng: &mut rng::StreamRng, coarse: &[f64], weights: &[f64]) -> Option<Vec<Vec<f64>>> {
    let k = weights.len();
    let p_min = coarse.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = coarse.iter().copied().fold(0.0, f64::max);
    // at least one sharpening query
    let up: Vec<bool> = (0..k).map(|q| q == 0 || rng::unit(rng) < 0.5).collect();
    let w_up: f64 = (0..k).filter(|&q| up[q]).map(|q| weights[q]).sum();
    let w_down = 1.0 - w_up;
    // Q = sum over flattening queries of w_k * level_k. It must stay below the
    // smallest coarse relevance, and high enough that flat sharpening stays <= 1.
    let q_total = if w_down > 0.0 {
        let lo = (p_max - w_up).max(0.0);
        let hi = (0.999 * p_min).min(w_down);
        if lo > hi {
            return None;
        }
        rng::uniform(rng, lo, hi)
    } else {
        0.0
    };
    let mut levels: Vec<f64> =
        (0..k).map(|q| if up[q] { 0.0 } else { q_total / w_down * rng::uniform(rng, 0.5, 1.5) }).collect();
    if levels.iter().any(|&l| l > 1.0) {
        for (q, l) in levels.iter_mut().enumerate() {
            if !up[q] {
                *l = q_total / w_down;
            }
        }
    }
    let q_actual: f64 = (0..k).filter(|&q| !up[q]).map(|q| weights[q] * levels[q]).sum();
    if q_actual >= p_min || levels.iter().any(|&l| l > 1.0) {
        return None;
    }
    // sharpening multipliers g_q with sum_up w_q g_q = 1, pulled toward the flat
    // 1/w_up just enough that (p_max - Q) g_q <= 1
    let h: Vec<f64> = (0..k).map(|_| rng::uniform(rng, 0.5, 1.5)).collect();
    let h_up: f64 = (0..k).filter(|&q| up[q]).map(|q| weights[q] * h[q]).sum();
    let flat = 1.0 / w_up;
    let cap = 1.0 / (p_max - q_actual);
    let mut t: f64 = 1.0;
    for q in (0..k).filter(|&q| up[q]) {
        let g = h[q] / h_up;
        if g > flat {
            t = t.min((cap - flat) / (g - flat));
        }
    }
    // without flattening the ratios are only scaled, which rounding can nudge
    // toward one; the unscaled copy ranks identically
    let mult: Vec<f64> = if w_down > 0.0 {
        let t = t.max(0.0);
        (0..k).map(|q| flat + t * (h[q] / h_up - flat)).collect()
    } else {
        vec![1.0; k]
    };
    let mut fine = vec![vec![0.0; coarse.len()]; k];
    for (i, &c) in coarse.iter().enumerate() {
        for q in 0..k {
            fine[q][i] = if up[q] { (c - q_actual) * mult[q] } else { levels[q] };
            if !(0.0..=1.0).contains(&fine[q][i]) {
                return None;
            }
        }
    }
    Some(fine)
}

/// The two-pizzeria refinement: coarse relevance 0.75 for both advertisers;
/// on query `SF` the fine relevances are (1, 0.5), on `SJ` (0.5, 1), each with
/// probability one half.
pub fn sf_sj_structure() -> RefinementStructure {
    let part = |id: &str, r: f64| Part { id: id.into(), relevance: r };
    let mem = |q: &str, a: usize, p: &str| Membership { query: q.into(), advertiser: a, part: p.into() };
    let coarse = PredictionScheme::new(
        vec![part("bay-area", 0.75)],
        vec![mem("SF", 0, "bay-area"), mem("SF", 1, "bay-area"), mem("SJ", 0, "bay-area"), mem("SJ", 1, "bay-area")],
    )
    .expect("static scheme");
    let fine = PredictionScheme::new(
        vec![part("local", 1.0), part("remote", 0.5)],
        vec![mem("SF", 0, "local"), mem("SF", 1, "remote"), mem("SJ", 0, "remote"), mem("SJ", 1, "local")],
    )
    .expect("static scheme");
    let subparts = BTreeMap::from([(
        "bay-area".to_string(),
        vec![Subpart { id: "local".into(), prob: 0.5 }, Subpart { id: "remote".into(), prob: 0.5 }],
    )]);
    let queries = BTreeMap::from([("SF".to_string(), 0.5), ("SJ".to_string(), 0.5)]);
    RefinementStructure { coarse, fine, subparts, queries }
}

/// Probability shift that keeps advertiser 2's coarse relevance at 0.1 in
/// [`non_flip_spread_structure`].
pub fn non_flip_spread_delta(epsilon: f64) -> f64 {
    15.0 * epsilon / (8.0 - 20.0 * epsilon)
}

/// Nationwide chain (advertiser 0, relevance 0.8 everywhere) against a local
/// pizzeria (advertiser 1, coarse 0.1; 0.4 on `SF`, `epsilon` on `notSF`),
/// with `SF` occurring with probability `1/4 - delta`.
pub fn non_flip_spread_structure_with_delta(epsilon: f64, delta: f64) -> RefinementStructure {
    let part = |id: &str, r: f64| Part { id: id.into(), relevance: r };
    let mem = |q: &str, a: usize, p: &str| Membership { query: q.into(), advertiser: a, part: p.into() };
    let p_sf = 0.25 - delta;
    let coarse = PredictionScheme::new(
        vec![part("chain", 0.8), part("local", 0.1)],
        vec![mem("SF", 0, "chain"), mem("notSF", 0, "chain"), mem("SF", 1, "local"), mem("notSF", 1, "local")],
    )
    .expect("static scheme");
    let fine = PredictionScheme::new(
        vec![part("chain", 0.8), part("local-sf", 0.4), part("local-elsewhere", epsilon)],
        vec![
            mem("SF", 0, "chain"),
            mem("notSF", 0, "chain"),
            mem("SF", 1, "local-sf"),
            mem("notSF", 1, "local-elsewhere"),
        ],
    )
    .expect("static scheme");
    let subparts = BTreeMap::from([
        ("chain".to_string(), vec![Subpart { id: "chain".into(), prob: 1.0 }]),
        (
            "local".to_string(),
            vec![
                Subpart { id: "local-sf".into(), prob: p_sf },
                Subpart { id: "local-elsewhere".into(), prob: 1.0 - p_sf },
            ],
        ),
    ]);
    let queries = BTreeMap::from([("SF".to_string(), p_sf), ("notSF".to_string(), 1.0 - p_sf)]);
    RefinementStructure { coarse, fine, subparts, queries }
}

pub fn non_flip_spread_structure(epsilon: f64) -> RefinementStructure {
    non_flip_spread_structure_with_delta(epsilon, non_flip_spread_delta(epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relevance_lookup_examples() {
        let rs = sf_sj_structure();
        for q in ["SF", "SJ"] {
            for a in [0, 1] {
                assert_eq!(rs.coarse.relevance_of(q, a).unwrap(), 0.75);
            }
        }
        assert_eq!(rs.fine.relevance_of("SF", 0).unwrap(), 1.0);
        assert_eq!(rs.fine.relevance_of("SF", 1).unwrap(), 0.5);
        assert!(matches!(rs.fine.relevance_of("LA", 0), Err(Error::UnknownPair { .. })));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_refinement(&sf_sj_structure()).is_valid());
        assert!(validate_refinement(&non_flip_spread_structure(0.01)).is_valid());
        match validate_refinement(&non_flip_spread_structure_with_delta(0.01, 0.0)) {
            RefinementVerdict::Invalid(why) => assert!(why.contains("expectation"), "{why}"),
            RefinementVerdict::Valid => panic!("delta = 0 breaks mean preservation"),
        }
    }

    #[test]
    fn validate_rejects_bad_nesting_and_mass() {
        let mut rs = sf_sj_structure();
        rs.subparts.get_mut("bay-area").unwrap()[0].prob = 0.6;
        assert!(!validate_refinement(&rs).is_valid());
        let mut rs = non_flip_spread_structure(0.01);
        // move a fine part under the wrong coarse part
        let moved = rs.subparts.get_mut("chain").unwrap().pop().unwrap();
        rs.subparts.get_mut("local").unwrap().push(moved);
        assert!(!validate_refinement(&rs).is_valid());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pair(1.0, 0.5, 0.75, 0.75).unwrap(), PairClass::Spread);
        assert_eq!(classify_pair(0.8, 0.4, 0.8, 0.1).unwrap(), PairClass::Neither);
        assert_eq!(classify_pair(0.5, 1.0, 2.0, 1.0).unwrap(), PairClass::Flipped);
        assert_eq!(classify_pair(0.8, 0.0, 0.8, 0.1).unwrap(), PairClass::Spread);
        assert!(classify_pair(0.0, 0.0, 0.5, 0.5).is_err());
        assert!(classify_pair(-0.1, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn flip_spread_examples() {
        let rs = sf_sj_structure();
        assert!(is_flip_spread(&rs, &rs.all_queries()).unwrap().is_flip_spread());
        let rs = non_flip_spread_structure(0.01);
        assert_eq!(
            is_flip_spread(&rs, &rs.all_queries()).unwrap(),
            FlipSpreadVerdict::Not { query: "SF".into(), advertisers: (0, 1) }
        );
    }

    #[test]
    fn any_refinement_of_undistinguishing_scheme_is_flip_spread() {
        for seed in 0..50 {
            let rs = generate_refinement(&[0.6, 0.6, 0.6], seed, 3).unwrap();
            assert!(validate_refinement(&rs).is_valid());
            assert!(is_flip_spread(&rs, &rs.all_queries()).unwrap().is_flip_spread());
        }
    }

    #[test]
    fn generator_examples() {
        let rs = generate_flip_spread_refinement(&[0.75, 0.75], 3, 2).unwrap();
        assert!(validate_refinement(&rs).is_valid());
        assert!(is_flip_spread(&rs, &rs.all_queries()).unwrap().is_flip_spread());

        let rs = generate_flip_spread_refinement(&[0.4, 0.9], 3, 1).unwrap();
        assert_eq!(rs.relevances("q0", 2).unwrap(), (vec![0.4, 0.9], vec![0.4, 0.9]));
        assert!(is_flip_spread(&rs, &rs.all_queries()).unwrap().is_flip_spread());

        let rs = generate_flip_spread_refinement(&[0.8, 0.1], 11, 3).unwrap();
        for (q, _) in rs.query_weights() {
            let (f, _) = rs.relevances(&q, 2).unwrap();
            // cross-multiplied: ratio >= 8 or <= 1
            assert!(f[0] >= 8.0 * f[1] || f[0] <= f[1], "{f:?}");
        }
        assert_eq!(
            generate_flip_spread_refinement(&[0.8, 0.1], 11, 3).unwrap(),
            generate_flip_spread_refinement(&[0.8, 0.1], 11, 3).unwrap()
        );
        assert!(generate_flip_spread_refinement(&[0.0, 0.5], 1, 2).is_err());
    }

    #[test]
    fn identity_refinement_is_valid() {
        let rs = RefinementStructure::identity(&non_flip_spread_structure(0.02).fine);
        assert!(validate_refinement(&rs).is_valid());
        assert!(is_flip_spread(&rs, &rs.all_queries()).unwrap().is_flip_spread());
    }

    #[test]
    fn json_shape() {
        let rs = sf_sj_structure();
        let v = serde_json::to_value(&rs).unwrap();
        assert!(v["coarse"]["parts"].is_array());
        assert_eq!(v["subparts"]["bay-area"][0]["prob"], 0.5);
        let back: RefinementStructure = serde_json::from_value(v).unwrap();
        assert_eq!(back, rs);
    }
}
