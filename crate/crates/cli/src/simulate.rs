use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use refine_core::analysis::ALPHA_GRID;
use refine_core::auction::{run_mechanism, MetricsRow, OutcomeMetrics};
use refine_core::{welfare, Assignment, AuctionInstance, RefinementStructure};

use crate::output::{csv, emit, json};
use crate::{Common, Status};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    instance: AuctionInstance,
    alphas: Option<Vec<f64>>,
    prediction: Option<PredictionChoice>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionChoice {
    structure: RefinementStructure,
    query: String,
    #[serde(rename = "use", default)]
    scheme: Scheme,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
enum Scheme {
    #[default]
    Fine,
    Coarse,
}

#[derive(Serialize)]
struct Run {
    alpha: f64,
    assignment: Assignment,
    metrics: OutcomeMetrics,
    /// Welfare under the fine relevances when the allocation used the coarse ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    welfare_fine_relevance: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<Scheme>,
    relevances: Vec<f64>,
    runs: Vec<Run>,
}

#[derive(Serialize)]
struct CsvRow {
    alpha: f64,
    welfare: f64,
    virtual_surplus: f64,
    payment_total: f64,
    winners: String,
}

fn parse(path: &Path) -> anyhow::Result<SimulateConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
}

pub fn run(path: &Path, alpha_grid: Option<Vec<f64>>, as_csv: bool, common: &Common) -> anyhow::Result<Status> {
    let cfg = parse(path)?;
    let alphas = alpha_grid.or(cfg.alphas).unwrap_or_else(|| ALPHA_GRID.to_vec());
    if alphas.is_empty() {
        bail!("alpha grid is empty");
    }
    let mut instance = cfg.instance;
    let mut truth = None;
    let (query, scheme) = match &cfg.prediction {
        Some(pred) => {
            let n = instance.n();
            let (fine, coarse) = pred.structure.relevances(&pred.query, n)?;
            let used = if pred.scheme == Scheme::Fine { &fine } else { &coarse };
            let true_instance = instance.with_relevances(&fine)?;
            instance = instance.with_relevances(used)?;
            if pred.scheme == Scheme::Coarse {
                truth = Some(true_instance);
            }
            (Some(pred.query.clone()), Some(pred.scheme))
        }
        None => (None, None),
    };
    let mut runs = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let (assignment, metrics) = run_mechanism(&instance, alpha)?;
        let welfare_fine_relevance = truth.as_ref().map(|t| welfare(t, &assignment));
        runs.push(Run { alpha, assignment, metrics, welfare_fine_relevance });
    }
    let relevances = instance.advertisers.iter().map(|a| a.p).collect();
    let bytes = if as_csv {
        let rows: Vec<CsvRow> = runs
            .iter()
            .map(|r| {
                let MetricsRow { alpha, welfare, virtual_surplus, payment_total } = r.metrics.row();
                CsvRow {
                    alpha,
                    welfare,
                    virtual_surplus,
                    payment_total,
                    winners: r
                        .assignment
                        .winners()
                        .iter()
                        .map(|(i, j)| format!("{i}:{j}"))
                        .collect::<Vec<_>>()
                        .join(" "),
                }
            })
            .collect();
        csv(&["alpha", "welfare", "virtual_surplus", "payment_total", "winners"], &rows)?
    } else {
        json(&Report { query, scheme, relevances, runs })?
    };
    emit(common, &bytes)?;
    Ok(Status::Ok)
}
