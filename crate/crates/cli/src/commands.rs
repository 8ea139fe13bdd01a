use anyhow::{bail, Context};
use serde::Serialize;

use refine_core::analysis::experiments::{figure2_default_grid, never_outranked_threshold, FIGURE2_P1};
use refine_core::analysis::trials::random_tradeoff_config;
use refine_core::analysis::{
    appendix_delta, check_condition_helps, check_condition_hurts, figure2_sweep, loss_integral_coarseness,
    loss_integral_refinement, refinement_region_certified_empty, run_main_suite, run_tradeoff_suite, s_bar, MhrDist,
    TradeoffConfig, TrialReport, TrialSettings,
};
use refine_core::prediction::non_flip_spread_structure;
use refine_core::{rng, DistributionSpec, SlotProfile};

use crate::output::{csv, emit, json};
use crate::{Common, Status};

const REFERENCE_H: f64 = 1000.0;
const REFERENCE_B: f64 = -1.0;
const REFERENCE_DELTA: f64 = 0.1473;
/// Closed form and quadrature must agree to this many absolute units.
const AGREEMENT_TOL: f64 = 1e-6;

fn slack(common: &Common, default: f64) -> anyhow::Result<f64> {
    let t = common.tolerance.unwrap_or(default);
    if !(t >= 0.0 && t.is_finite()) {
        bail!("--tolerance must be a non-negative number, got {t}");
    }
    Ok(t)
}

#[derive(Serialize)]
struct AppendixReport {
    #[serde(flatten)]
    record: refine_core::analysis::AppendixRecord,
    routes_agree: bool,
    reference: &'static str,
}

pub fn reproduce_appendix(h: f64, b: f64, common: &Common) -> anyhow::Result<Status> {
    let tol = slack(common, 1e-3)?;
    let d = appendix_delta(h, b)?;
    let rec = d.record();
    let agree = (rec.delta_closed - rec.delta_quad).abs() <= AGREEMENT_TOL;
    let at_reference = h == REFERENCE_H && b == REFERENCE_B;
    let reference = match (at_reference, (rec.delta_closed - REFERENCE_DELTA).abs() <= tol) {
        (false, _) => "no reference",
        (true, true) => "match",
        (true, false) => "mismatch",
    };
    emit(common, &json(&AppendixReport { record: rec, routes_agree: agree, reference })?)?;
    if !agree {
        return Ok(Status::PropertyFailed(format!(
            "closed form {} and quadrature {} differ by more than {AGREEMENT_TOL:e}",
            rec.delta_closed, rec.delta_quad
        )));
    }
    if reference == "mismatch" {
        return Ok(Status::PropertyFailed(format!(
            "delta {} is not within {tol} of {REFERENCE_DELTA}",
            rec.delta_closed
        )));
    }
    Ok(Status::Ok)
}

pub fn figure2(grid: Option<Vec<f64>>, samples: usize, seed: u64, common: &Common) -> anyhow::Result<Status> {
    let k = slack(common, 3.0)?;
    let grid = grid.unwrap_or_else(figure2_default_grid);
    let rows = figure2_sweep(&grid, samples, seed)?;
    emit(common, &csv(&["p2", "loss", "stderr"], &rows)?)?;
    let threshold = never_outranked_threshold(&DistributionSpec::uniform(3.0, 5.0)?, FIGURE2_P1, 1.0)?;
    let mut problems = Vec::new();
    for r in &rows {
        if r.loss < 0.0 {
            problems.push(format!("loss {} < 0 at p2 = {}", r.loss, r.p2));
        }
        let must_vanish = r.p2 <= threshold + 1e-12 || r.p2 == FIGURE2_P1;
        if must_vanish && r.loss.abs() > k * r.stderr {
            problems.push(format!("loss {} (se {}) should vanish at p2 = {}", r.loss, r.stderr, r.p2));
        }
    }
    if problems.is_empty() {
        Ok(Status::Ok)
    } else {
        Ok(Status::PropertyFailed(problems.join("\n")))
    }
}

pub struct CheckOptions {
    pub trials: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub alpha_grid: Option<Vec<f64>>,
    pub size: usize,
}

impl CheckOptions {
    fn settings(&self, common: &Common) -> anyhow::Result<TrialSettings> {
        let mut s = TrialSettings::default();
        if let Some(a) = &self.alpha_grid {
            s.alphas = a.clone();
        }
        if let Some(t) = common.tolerance {
            s.tolerance = t;
        }
        s.validate()?;
        Ok(s)
    }

    fn trials(&self, default: usize) -> anyhow::Result<usize> {
        let n = self.trials.unwrap_or(default);
        if n == 0 {
            bail!("--trials must be positive");
        }
        Ok(n)
    }
}

const TRIAL_HEADER: [&str; 12] = [
    "trial",
    "seed",
    "alpha",
    "welfare_coarse",
    "welfare_fine",
    "objective_coarse",
    "objective_fine",
    "se_welfare_diff",
    "se_objective_diff",
    "pointwise_violations",
    "verdict",
    "summary",
];

fn finish_trials(reports: &[TrialReport], common: &Common) -> anyhow::Result<Status> {
    let rows: Vec<_> = reports.iter().enumerate().flat_map(|(i, r)| r.csv_rows(i)).collect();
    emit(common, &csv(&TRIAL_HEADER, &rows)?)?;
    match reports.iter().find(|r| !r.passed() || !r.is_consistent()) {
        Some(r) => Ok(Status::PropertyFailed(serde_json::to_string_pretty(r)?)),
        None => Ok(Status::Ok),
    }
}

pub fn check_main(opts: &CheckOptions, common: &Common) -> anyhow::Result<Status> {
    let settings = opts.settings(common)?;
    let trials = opts.trials(1000)?;
    let dists = [
        DistributionSpec::uniform(0.0, 1.0)?,
        DistributionSpec::uniform(3.0, 5.0)?,
        DistributionSpec::exponential(1.0)?,
    ]
    .into_iter()
    .map(MhrDist::certify)
    .collect::<Result<Vec<_>, _>>()?;
    let reports = run_main_suite(opts.seed, trials, &dists, 6, 4, &settings)?;
    finish_trials(&reports, common)
}

pub fn check_tradeoff(opts: &CheckOptions, common: &Common) -> anyhow::Result<Status> {
    let settings = opts.settings(common)?;
    let trials = opts.trials(50)?;
    let mut configs = vec![TradeoffConfig {
        dist: DistributionSpec::uniform(3.0, 5.0)?,
        slots: SlotProfile::single(),
        structure: non_flip_spread_structure(0.01),
        alpha: 1.0,
        samples: opts.samples,
        tolerance: settings.tolerance,
        label: "non-flip-spread example, epsilon 0.01".into(),
    }];
    for i in 1..trials as u64 {
        configs.push(random_tradeoff_config(rng::derive_seed(opts.seed, i), opts.samples, &settings)?);
    }
    let reports = run_tradeoff_suite(opts.seed, &configs)?;
    finish_trials(&reports, common)
}

#[derive(Serialize)]
struct RearrangementRow {
    instance: usize,
    n: usize,
    m: usize,
    rankings: usize,
    ordered_pairs: usize,
    dominance_violations: usize,
    efficient_gap: f64,
    verdict: &'static str,
}

pub const MAX_REARRANGEMENT_SIZE: usize = 7;

pub fn check_rearrangements(opts: &CheckOptions, common: &Common) -> anyhow::Result<Status> {
    let n = opts.size;
    if !(1..=MAX_REARRANGEMENT_SIZE).contains(&n) {
        bail!("--size must be in 1..={MAX_REARRANGEMENT_SIZE}, got {n}");
    }
    let tol = slack(common, 1e-12)?;
    let trials = opts.trials(10)?;
    let mut rows = Vec::with_capacity(trials);
    for k in 0..trials {
        let mut r = rng::stream(opts.seed, k as u64);
        let mut realized: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r, 0.0, 5.0)).collect();
        // every other instance carries a tie
        if k % 2 == 1 && n > 1 {
            realized[n - 1] = realized[0];
        }
        let m = rng::int_inclusive(&mut r, 1, n);
        let mut s: Vec<f64> = (0..m).map(|_| rng::unit(&mut r)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let c = refine_core::analysis::check_rearrangement(&realized, &SlotProfile::new(s)?, tol)?;
        rows.push(RearrangementRow {
            instance: k,
            n,
            m,
            rankings: c.rankings,
            ordered_pairs: c.ordered_pairs,
            dominance_violations: c.dominance_violations,
            efficient_gap: c.efficient_gap,
            verdict: if c.passed(tol) { "PASS" } else { "FAIL" },
        });
    }
    let header =
        ["instance", "n", "m", "rankings", "ordered_pairs", "dominance_violations", "efficient_gap", "verdict"];
    emit(common, &csv(&header, &rows)?)?;
    match rows.iter().find(|r| r.verdict == "FAIL") {
        Some(r) => Ok(Status::PropertyFailed(serde_json::to_string_pretty(r)?)),
        None => Ok(Status::Ok),
    }
}

#[derive(Serialize)]
struct ConditionRow {
    case: String,
    dist: String,
    c: f64,
    observed: f64,
    expected: String,
    verdict: &'static str,
}

fn row(case: &str, dist: &DistributionSpec, c: f64, observed: f64, expected: String, ok: bool) -> ConditionRow {
    ConditionRow {
        case: case.into(),
        dist: refine_core::analysis::trials::dist_label(dist),
        c,
        observed,
        expected,
        verdict: if ok { "PASS" } else { "FAIL" },
    }
}

pub fn check_conditions(common: &Common) -> anyhow::Result<Status> {
    let tol = slack(common, 1e-12)?;
    let mut rows = Vec::new();
    let mhr = [
        DistributionSpec::uniform(0.0, 1.0)?,
        DistributionSpec::uniform(3.0, 5.0)?,
        DistributionSpec::exponential(1.0)?,
    ];
    let cs = [0.1, 0.25, 0.5, 0.75, 0.9];
    let u = DistributionSpec::uniform(0.0, 1.0)?;
    let empty = refinement_region_certified_empty(&u, 0.5)?;
    rows.push(row("harmful region empty", &u, 0.5, f64::from(u8::from(empty)), "1".into(), empty));
    for d in &mhr {
        let (lo, hi) = d.support();
        let top = if hi.is_finite() { hi } else { 10.0 };
        for &c in &cs {
            if hi.is_finite() {
                let q = loss_integral_refinement(d, c)?;
                rows.push(row("refinement loss", d, c, q.value, "0".into(), q.value.abs() <= tol));
            }
            // pairs v >= v' on a grid over the support
            let mut hurts = 0u32;
            let mut helps = 0u32;
            for i in 1..=200 {
                for j in 1..=i {
                    let v = lo + (top - lo) * i as f64 / 200.0;
                    let vp = lo + (top - lo) * j as f64 / 200.0;
                    hurts += u32::from(check_condition_hurts(v, vp, d, c)?);
                    helps += u32::from(check_condition_helps(v, vp, d, c)?);
                }
            }
            rows.push(row("pairs meeting harmful condition", d, c, hurts.into(), "0".into(), hurts == 0));
            rows.push(row("pairs meeting helpful condition", d, c, helps.into(), "> 0".into(), helps > 0));
        }
    }

    let (h, b) = (REFERENCE_H, REFERENCE_B);
    let t = DistributionSpec::tser(h, b)?;
    let empty = refinement_region_certified_empty(&t, 0.5)?;
    rows.push(row("harmful region empty", &t, 0.5, f64::from(u8::from(empty)), "0".into(), !empty));
    let refine = loss_integral_refinement(&t, 0.5)?;
    rows.push(row("refinement loss", &t, 0.5, refine.value, "> 0".into(), refine.value > 0.0));
    let coarse = loss_integral_coarseness(&t, 0.5)?;
    let delta = appendix_delta(h, b)?.closed_form.delta;
    let net = refine.value - coarse.active.value;
    rows.push(row("refinement minus coarseness loss", &t, 0.5, net, format!("{delta}"), (net - delta).abs() <= 1e-4));
    for sp in [2.0, 10.0, 100.0, 300.0] {
        let sb = s_bar(sp, h, b)?;
        let target = 2.0 * t.virtual_value(sp)?;
        let got = t.virtual_value(sb).context("s_bar left the support")?;
        rows.push(row(
            &format!("virtual value doubles at s_bar({sp})"),
            &t,
            0.5,
            got,
            format!("{target}"),
            (got - target).abs() <= 1e-9 * target.abs().max(1.0),
        ));
    }

    let header = ["case", "dist", "c", "observed", "expected", "verdict"];
    emit(common, &csv(&header, &rows)?)?;
    match rows.iter().find(|r| r.verdict == "FAIL") {
        Some(r) => Ok(Status::PropertyFailed(serde_json::to_string_pretty(r)?)),
        None => Ok(Status::Ok),
    }
}
