//! Randomized checks that refining a prediction never lowers welfare (for
//! flip-spread refinements under MHR priors) and never lowers the alpha
//! trade-off objective in expectation (for any refinement under regular priors).

use rayon::prelude::*;
use serde::Serialize;

use crate::auction::{allocate, objective, welfare, AuctionInstance, SlotProfile};
use crate::dists::{check_alpha, DistributionSpec, MhrCertificate};
use crate::error::{Error, Result};
use crate::prediction::{generate_flip_spread_refinement, generate_refinement, RefinementStructure};
use crate::rng::{self, StreamRng};
use crate::tolerance::Tolerances;

use super::stats::SampleStats;

pub const ALPHA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Alpha grid and comparison slack shared by the trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub alphas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for TrialSettings {
    fn default() -> Self {
        TrialSettings { alphas: ALPHA_GRID.to_vec(), tolerance: Tolerances::DEFAULT.welfare }
    }
}

impl TrialSettings {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::param("alpha grid is empty"));
        }
        for &a in &self.alphas {
            check_alpha(a)?;
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::param(format!("tolerance {} must be >= 0", self.tolerance)));
        }
        Ok(())
    }
}

/// Grid used to certify priors inside trials and suites.
pub const TRIAL_CERT_GRID: usize = 1000;

/// A prior that passed the MHR certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhrDist(DistributionSpec);

impl MhrDist {
    pub fn certify(dist: DistributionSpec) -> Result<Self> {
        match dist.certify_mhr(TRIAL_CERT_GRID)? {
            MhrCertificate::Mhr => Ok(MhrDist(dist)),
            MhrCertificate::NotMhr(w) => Err(Error::Unsupported(format!(
                "prior is not MHR: inverse hazard rate rises from {} at {} to {} at {}",
                w.at_v1, w.v1, w.at_v2, w.v2
            ))),
        }
    }

    pub fn dist(&self) -> &DistributionSpec {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialKind {
    /// Pointwise welfare comparison; a row passes iff `welfare_fine >= welfare_coarse - tol`.
    Main,
    /// Paired Monte Carlo on the objective; a row passes iff
    /// `objective_fine >= objective_coarse - 3 se` and no value profile regresses.
    Tradeoff,
}

/// Per-alpha outcome. For trade-off trials the four quantities are sample means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRow {
    pub alpha: f64,
    pub welfare_coarse: f64,
    pub welfare_fine: f64,
    pub objective_coarse: f64,
    pub objective_fine: f64,
    pub se_welfare_diff: f64,
    pub se_objective_diff: f64,
    pub pointwise_violations: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub kind: TrialKind,
    pub seed: u64,
    pub summary: String,
    pub tolerance: f64,
    pub rows: Vec<TrialRow>,
    pub verdict: Verdict,
}

/// Flat CSV record of one report row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialCsvRow {
    pub trial: usize,
    pub seed: u64,
    pub alpha: f64,
    pub welfare_coarse: f64,
    pub welfare_fine: f64,
    pub objective_coarse: f64,
    pub objective_fine: f64,
    pub se_welfare_diff: f64,
    pub se_objective_diff: f64,
    pub pointwise_violations: usize,
    pub verdict: Verdict,
    pub summary: String,
}

impl TrialReport {
    fn new(kind: TrialKind, seed: u64, summary: String, tolerance: f64, rows: Vec<TrialRow>) -> Self {
        let verdict = Verdict::from_bool(rows.iter().all(|r| r.verdict.passed()));
        TrialReport { kind, seed, summary, tolerance, rows, verdict }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Recomputes every verdict from the recorded numbers.
    pub fn is_consistent(&self) -> bool {
        let row_ok = |r: &TrialRow| match self.kind {
            TrialKind::Main => r.welfare_fine >= r.welfare_coarse - self.tolerance,
            TrialKind::Tradeoff => {
                r.objective_fine >= r.objective_coarse - 3.0 * r.se_objective_diff - self.tolerance
                    && r.pointwise_violations == 0
            }
        };
        self.rows.iter().all(|r| r.verdict == Verdict::from_bool(row_ok(r)))
            && self.verdict == Verdict::from_bool(self.rows.iter().all(|r| r.verdict.passed()))
    }

    pub fn csv_rows(&self, trial: usize) -> Vec<TrialCsvRow> {
        self.rows
            .iter()
            .map(|r| TrialCsvRow {
                trial,
                seed: self.seed,
                alpha: r.alpha,
                welfare_coarse: r.welfare_coarse,
                welfare_fine: r.welfare_fine,
                objective_coarse: r.objective_coarse,
                objective_fine: r.objective_fine,
                se_welfare_diff: r.se_welfare_diff,
                se_objective_diff: r.se_objective_diff,
                pointwise_violations: r.pointwise_violations,
                verdict: r.verdict,
                summary: self.summary.clone(),
            })
            .collect()
    }
}

/// Welfare and objective of the allocations induced by the fine and the
/// coarse relevances, all evaluated with the fine (true) relevances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmOutcome {
    pub welfare_coarse: f64,
    pub welfare_fine: f64,
    pub objective_coarse: f64,
    pub objective_fine: f64,
}

pub fn compare_arms(
    dist: &DistributionSpec,
    slots: &SlotProfile,
    values: &[f64],
    fine: &[f64],
    coarse: &[f64],
    alpha: f64,
) -> Result<ArmOutcome> {
    let truth = AuctionInstance::from_parts(slots.clone(), values, fine, *dist)?;
    let predicted = truth.with_relevances(coarse)?;
    let asg_fine = allocate(&truth, alpha)?;
    let asg_coarse = allocate(&predicted, alpha)?;
    Ok(ArmOutcome {
        welfare_coarse: welfare(&truth, &asg_coarse),
        welfare_fine: welfare(&truth, &asg_fine),
        objective_coarse: objective(&truth, &asg_coarse, alpha)?,
        objective_fine: objective(&truth, &asg_fine, alpha)?,
    })
}

/// Pointwise welfare comparison on one query of a given refinement.
pub fn main_trial_on(
    seed: u64,
    dist: &MhrDist,
    slots: &SlotProfile,
    values: &[f64],
    rs: &RefinementStructure,
    query: &str,
    settings: &TrialSettings,
) -> Result<TrialReport> {
    settings.validate()?;
    let tol = settings.tolerance;
    let (fine, coarse) = rs.relevances(query, values.len())?;
    let mut rows = Vec::with_capacity(settings.alphas.len());
    for &alpha in &settings.alphas {
        let o = compare_arms(dist.dist(), slots, values, &fine, &coarse, alpha)?;
        rows.push(TrialRow {
            alpha,
            welfare_coarse: o.welfare_coarse,
            welfare_fine: o.welfare_fine,
            objective_coarse: o.objective_coarse,
            objective_fine: o.objective_fine,
            se_welfare_diff: 0.0,
            se_objective_diff: 0.0,
            pointwise_violations: 0,
            verdict: Verdict::from_bool(o.welfare_fine >= o.welfare_coarse - tol),
        });
    }
    let summary = format!(
        "{} n={} m={} query={} v={:?} coarse={:?} fine={:?}",
        dist_label(dist.dist()),
        values.len(),
        slots.len(),
        query,
        values,
        coarse,
        fine
    );
    Ok(TrialReport::new(TrialKind::Main, seed, summary, tol, rows))
}

pub fn dist_label(d: &DistributionSpec) -> String {
    match *d {
        DistributionSpec::Uniform { lo, hi } => format!("Uniform({lo},{hi})"),
        DistributionSpec::Exponential { rate } => format!("Exponential({rate})"),
        DistributionSpec::TruncatedShiftedEqualRevenue { h, b } => format!("TSER({h},{b})"),
    }
}

fn random_slots(rng: &mut StreamRng, m: usize) -> SlotProfile {
    let mut s: Vec<f64> = (0..m).map(|_| rng::unit(rng)).collect();
    if rng::unit(rng) < 0.5 {
        s[0] = 1.0;
    }
    s.sort_by(|a, b| b.total_cmp(a));
    SlotProfile::new(s).expect("sorted draws in [0, 1)")
}

fn pick_query(rng: &mut StreamRng, weights: &[(String, f64)]) -> String {
    let u = rng::unit(rng);
    let mut acc = 0.0;
    for (q, w) in weights {
        acc += w;
        if u < acc {
            return q.clone();
        }
    }
    weights.last().expect("at least one query").0.clone()
}

/// One randomized pointwise welfare check: i.i.d. values from an MHR prior,
/// random coarse relevances, a generated flip-spread refinement and a random
/// query, compared on every alpha of [`ALPHA_GRID`].
pub fn theorem_main_trial(seed: u64, n_advertisers: usize, m_slots: usize, dist: &MhrDist) -> Result<TrialReport> {
    theorem_main_trial_with(seed, n_advertisers, m_slots, dist, &TrialSettings::default())
}

pub fn theorem_main_trial_with(
    seed: u64,
    n_advertisers: usize,
    m_slots: usize,
    dist: &MhrDist,
    settings: &TrialSettings,
) -> Result<TrialReport> {
    if n_advertisers == 0 || m_slots == 0 {
        return Err(Error::param("need at least one advertiser and one slot"));
    }
    let mut rng = rng::stream(seed, 0);
    let values: Vec<f64> = (0..n_advertisers).map(|_| dist.dist().draw(&mut rng)).collect();
    let coarse: Vec<f64> = if rng::unit(&mut rng) < 0.2 {
        vec![rng::uniform(&mut rng, 0.05, 1.0); n_advertisers]
    } else {
        (0..n_advertisers).map(|_| rng::uniform(&mut rng, 0.05, 1.0)).collect()
    };
    let slots = random_slots(&mut rng, m_slots);
    let n_subparts = rng::int_inclusive(&mut rng, 1, 4);
    let rs = generate_flip_spread_refinement(&coarse, rng::derive_seed(seed, 1), n_subparts)?;
    let query = pick_query(&mut rng, &rs.query_weights());
    main_trial_on(seed, dist, &slots, &values, &rs, &query, settings)
}

/// Runs `trials` main trials in parallel; trial `t` uses seed
/// `derive_seed(seed, t)`, prior `dists[t % len]`, and draws its own sizes in
/// `2..=n_max` advertisers and `1..=m_max` slots. Reports come back in trial order.
pub fn run_main_suite(
    seed: u64,
    trials: usize,
    dists: &[MhrDist],
    n_max: usize,
    m_max: usize,
    settings: &TrialSettings,
) -> Result<Vec<TrialReport>> {
    if dists.is_empty() || n_max < 2 || m_max < 1 {
        return Err(Error::param("main suite needs a prior, n_max >= 2 and m_max >= 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = rng::derive_seed(seed, t as u64);
            let mut sizes = rng::stream(s, 7);
            let n = rng::int_inclusive(&mut sizes, 2, n_max);
            let m = rng::int_inclusive(&mut sizes, 1, m_max);
            theorem_main_trial_with(s, n, m, &dists[t % dists.len()], settings)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffConfig {
    pub dist: DistributionSpec,
    pub slots: SlotProfile,
    pub structure: RefinementStructure,
    pub alpha: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub label: String,
}

/// Paired Monte Carlo on the trade-off objective: every sample draws one
/// value profile and one query, shared by both arms. Each profile is also
/// checked pointwise after averaging over all queries.
pub fn theorem_tradeoff_trial(seed: u64, config: &TradeoffConfig) -> Result<TrialReport> {
    check_alpha(config.alpha)?;
    if config.samples < 2 {
        return Err(Error::param("need at least two samples"));
    }
    if !config.dist.certify_regular(TRIAL_CERT_GRID)?.is_regular() {
        return Err(Error::Unsupported("trade-off trial needs a regular prior".into()));
    }
    let tol = config.tolerance;
    let rs = &config.structure;
    let n = rs.advertiser_count();
    let weights = rs.query_weights();
    let relevances: Vec<(Vec<f64>, Vec<f64>)> =
        weights.iter().map(|(q, _)| rs.relevances(q, n)).collect::<Result<_>>()?;

    let per_sample: Vec<(ArmOutcome, bool)> = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, k as u64);
            let values: Vec<f64> = (0..n).map(|_| config.dist.draw(&mut rng)).collect();
            let u = rng::unit(&mut rng);
            let mut acc = 0.0;
            let mut drawn = weights.len() - 1;
            for (qi, (_, w)) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    drawn = qi;
                    break;
                }
            }
            let mut gap = 0.0;
            let mut sampled = None;
            for (qi, ((_, w), (fine, coarse))) in weights.iter().zip(&relevances).enumerate() {
                let o = compare_arms(&config.dist, &config.slots, &values, fine, coarse, config.alpha)?;
                gap += w * (o.objective_fine - o.objective_coarse);
                if qi == drawn {
                    sampled = Some(o);
                }
            }
            Ok((sampled.expect("drawn query is enumerated"), gap >= -tol))
        })
        .collect::<Result<_>>()?;

    let col = |f: fn(&ArmOutcome) -> f64| per_sample.iter().map(|(o, _)| f(o)).collect::<Vec<f64>>();
    let (wc, wf) = (col(|o| o.welfare_coarse), col(|o| o.welfare_fine));
    let (oc, of) = (col(|o| o.objective_coarse), col(|o| o.objective_fine));
    let (swc, swf) = (SampleStats::of(&wc), SampleStats::of(&wf));
    let (soc, sof) = (SampleStats::of(&oc), SampleStats::of(&of));
    let se_w = SampleStats::paired(&wf, &wc).se;
    let se_o = SampleStats::paired(&of, &oc).se;
    let violations = per_sample.iter().filter(|(_, ok)| !ok).count();
    let ok = sof.mean >= soc.mean - 3.0 * se_o - tol && violations == 0;
    let row = TrialRow {
        alpha: config.alpha,
        welfare_coarse: swc.mean,
        welfare_fine: swf.mean,
        objective_coarse: soc.mean,
        objective_fine: sof.mean,
        se_welfare_diff: se_w,
        se_objective_diff: se_o,
        pointwise_violations: violations,
        verdict: Verdict::from_bool(ok),
    };
    let summary = format!(
        "{} {} n={} m={} queries={} samples={}",
        config.label,
        dist_label(&config.dist),
        n,
        config.slots.len(),
        weights.len(),
        config.samples
    );
    Ok(TrialReport::new(TrialKind::Tradeoff, seed, summary, tol, vec![row]))
}

/// Regular priors sampled by [`random_tradeoff_config`].
pub fn regular_priors() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
        DistributionSpec::Uniform { lo: 3.0, hi: 5.0 },
        DistributionSpec::Exponential { rate: 1.0 },
        DistributionSpec::TruncatedShiftedEqualRevenue { h: 1000.0, b: -1.0 },
    ]
}

/// Random trade-off configuration with an unconstrained refinement and an
/// alpha drawn from `settings.alphas`.
pub fn random_tradeoff_config(seed: u64, samples: usize, settings: &TrialSettings) -> Result<TradeoffConfig> {
    settings.validate()?;
    let mut rng = rng::stream(seed, 0);
    let priors = regular_priors();
    let dist = priors[rng::int_inclusive(&mut rng, 0, priors.len() - 1)];
    let n = rng::int_inclusive(&mut rng, 2, 5);
    let m = rng::int_inclusive(&mut rng, 1, 3);
    let slots = random_slots(&mut rng, m);
    let coarse: Vec<f64> = (0..n).map(|_| rng::uniform(&mut rng, 0.05, 1.0)).collect();
    let k = rng::int_inclusive(&mut rng, 1, 4);
    let structure = generate_refinement(&coarse, rng::derive_seed(seed, 1), k)?;
    let alpha = settings.alphas[rng::int_inclusive(&mut rng, 0, settings.alphas.len() - 1)];
    Ok(TradeoffConfig { dist, slots, structure, alpha, samples, tolerance: settings.tolerance, label: "random".into() })
}

/// Runs one trade-off trial per configuration; config `i` uses seed `derive_seed(seed, i)`.
pub fn run_tradeoff_suite(seed: u64, configs: &[TradeoffConfig]) -> Result<Vec<TrialReport>> {
    configs.par_iter().enumerate().map(|(i, c)| theorem_tradeoff_trial(rng::derive_seed(seed, i as u64), c)).collect()
}
