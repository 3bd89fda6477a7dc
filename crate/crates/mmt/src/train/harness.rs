//! Multi-configuration experiment harnesses: the five-row ablation table
//! and the λ_a × λ_r sweep. Cells are independent training runs and execute
//! on their own threads.

use crate::adversarial::Variant;
use crate::error::{Error, Result};
use crate::train::{train, TrainConfig, TrainData};

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub label: &'static str,
    pub variant: Variant,
    pub zero_visual: bool,
    /// (validation BLEU 0-100, ambiguous-token accuracy) per seed, at the
    /// best epoch.
    pub per_seed: Vec<(f64, Option<f64>)>,
    /// Wall-clock training seconds per seed.
    pub per_seed_seconds: Vec<f64>,
}

impl AblationRow {
    pub fn mean_bleu(&self) -> f64 {
        self.per_seed.iter().map(|(b, _)| b).sum::<f64>() / self.per_seed.len() as f64
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        let accs: Vec<f64> = self.per_seed.iter().filter_map(|(_, a)| *a).collect();
        if accs.is_empty() {
            None
        } else {
            Some(accs.iter().sum::<f64>() / accs.len() as f64)
        }
    }
}

#[derive(Clone, Debug)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub seeds: Vec<u64>,
}

impl AblationReport {
    /// Tab-separated table with a header row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("config\tbleu\tamb_accuracy\tper_seed_bleu\tper_seed_acc\n");
        for row in &self.rows {
            let acc = match row.mean_accuracy() {
                Some(a) => format!("{a:.4}"),
                None => "-".to_string(),
            };
            let per_bleu: Vec<String> =
                row.per_seed.iter().map(|(b, _)| format!("{b:.2}")).collect();
            let per_acc: Vec<String> = row
                .per_seed
                .iter()
                .map(|(_, a)| match a {
                    Some(a) => format!("{a:.4}"),
                    None => "-".to_string(),
                })
                .collect();
            out.push_str(&format!(
                "{}\t{:.2}\t{}\t{}\t{}\n",
                row.label,
                row.mean_bleu(),
                acc,
                per_bleu.join(","),
                per_acc.join(",")
            ));
        }
        out
    }
}

/// The five ablation configurations in the reporting order of the study:
/// plain model, reconstruction with and without the visual input, and the
/// latent-critic variant with and without it.
pub const ABLATION_ROWS: [(&str, Variant, bool); 5] = [
    ("baseline", Variant::None, false),
    ("baseline+G+no-v", Variant::RegressionOnly, true),
    ("baseline+G", Variant::RegressionOnly, false),
    ("q-waae+no-v", Variant::QWaae, true),
    ("q-waae", Variant::QWaae, false),
];

fn best_epoch_scores(
    cfg: &TrainConfig,
    data: &TrainData,
) -> Result<(f64, Option<f64>, f64)> {
    let result = train(cfg, data, None)?;
    let best = result
        .metrics
        .iter()
        .find(|m| m.epoch == result.best_epoch)
        .ok_or_else(|| Error::Contract("best epoch missing from metrics".into()))?;
    let seconds: f64 = result.metrics.iter().map(|m| m.seconds).sum();
    Ok((best.val_bleu, best.amb_accuracy, seconds))
}

/// Train all five ablation configurations over the shared seeds and data.
pub fn run_ablation(
    base: &TrainConfig,
    data: &TrainData,
    seeds: &[u64],
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(Error::Contract("run_ablation: no seeds".into()));
    }
    let mut cells: Vec<(usize, TrainConfig)> = Vec::new();
    for (row_idx, (_, variant, zero_visual)) in ABLATION_ROWS.iter().enumerate() {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.adv.variant = *variant;
            cfg.zero_visual = *zero_visual;
            cfg.seed = seed;
            cells.push((row_idx, cfg));
        }
    }

    let results = run_cells(&cells, data)?;

    let mut rows: Vec<AblationRow> = ABLATION_ROWS
        .iter()
        .map(|(label, variant, zero_visual)| AblationRow {
            label,
            variant: *variant,
            zero_visual: *zero_visual,
            per_seed: Vec::new(),
            per_seed_seconds: Vec::new(),
        })
        .collect();
    for ((row_idx, _), (bleu, acc, secs)) in cells.iter().zip(results) {
        rows[*row_idx].per_seed.push((bleu, acc));
        rows[*row_idx].per_seed_seconds.push(secs);
    }
    Ok(AblationReport {
        rows,
        seeds: seeds.to_vec(),
    })
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub lambda_a: f64,
    pub lambda_r: f64,
    pub per_seed_bleu: Vec<f64>,
}

impl SweepCell {
    pub fn mean_bleu(&self) -> f64 {
        self.per_seed_bleu.iter().sum::<f64>() / self.per_seed_bleu.len() as f64
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub seeds: Vec<u64>,
}

impl SweepReport {
    pub fn cell(&self, lambda_a: f64, lambda_r: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.lambda_a == lambda_a && c.lambda_r == lambda_r)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lambda_a\tlambda_r\tbleu\tper_seed_bleu\n");
        for c in &self.cells {
            let per: Vec<String> = c.per_seed_bleu.iter().map(|b| format!("{b:.2}")).collect();
            out.push_str(&format!(
                "{}\t{}\t{:.2}\t{}\n",
                c.lambda_a,
                c.lambda_r,
                c.mean_bleu(),
                per.join(",")
            ));
        }
        out
    }
}

pub const DEFAULT_SWEEP_GRID: [f64; 3] = [0.2, 0.5, 0.8];

/// Train the latent-critic variant over every (λ_a, λ_r) grid cell with
/// shared seeds; reports the best validation BLEU per cell.
pub fn run_lambda_sweep(
    base: &TrainConfig,
    data: &TrainData,
    grid_a: &[f64],
    grid_r: &[f64],
    seeds: &[u64],
) -> Result<SweepReport> {
    if base.adv.variant != Variant::QWaae {
        return Err(Error::Config(
            "the coefficient sweep runs on the q-waae variant".into(),
        ));
    }
    if grid_a.is_empty() || grid_r.is_empty() || seeds.is_empty() {
        return Err(Error::Contract("run_lambda_sweep: empty grid or seeds".into()));
    }
    let mut cells: Vec<(usize, TrainConfig)> = Vec::new();
    let mut layout = Vec::new();
    for &la in grid_a {
        for &lr in grid_r {
            let cell_idx = layout.len();
            layout.push((la, lr));
            for &seed in seeds {
                let mut cfg = base.clone();
                cfg.adv.lambda_a = la;
                cfg.adv.lambda_r = lr;
                cfg.seed = seed;
                cells.push((cell_idx, cfg));
            }
        }
    }

    let results = run_cells(&cells, data)?;

    let mut report_cells: Vec<SweepCell> = layout
        .into_iter()
        .map(|(lambda_a, lambda_r)| SweepCell {
            lambda_a,
            lambda_r,
            per_seed_bleu: Vec::new(),
        })
        .collect();
    for ((cell_idx, _), (bleu, _, _)) in cells.iter().zip(results) {
        report_cells[*cell_idx].per_seed_bleu.push(bleu);
    }
    Ok(SweepReport {
        cells: report_cells,
        seeds: seeds.to_vec(),
    })
}

/// Run every cell on its own thread and collect results in cell order.
fn run_cells(
    cells: &[(usize, TrainConfig)],
    data: &TrainData,
) -> Result<Vec<(f64, Option<f64>, f64)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|(_, cfg)| scope.spawn(move || best_epoch_scores(cfg, data)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|_| Error::Contract("experiment thread panicked".into()))?
            })
            .collect()
    })
}
