use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::{Activation, PathMode, Pooling, TigtConfig};

use super::{csl_inputs, train_on, TrainConfig, TrainError};

pub const FULL_MODEL: &str = "full";

/// The full configuration followed by one single-switch variant per row.
pub fn ablation_variants(base: &TigtConfig) -> Vec<(String, TigtConfig)> {
    let with = |f: &dyn Fn(&mut TigtConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    vec![
        (FULL_MODEL.into(), base.clone()),
        ("no_graph_info".into(), with(&|c| c.use_graph_info = false)),
        ("no_pe".into(), with(&|c| c.use_pe = false)),
        ("pe_not_shared".into(), with(&|c| c.pe_share_weights = false)),
        ("no_global_attention".into(), with(&|c| c.use_global_attention = false)),
        ("pe_relu".into(), with(&|c| c.pe_activation = Activation::Relu)),
        ("single_path".into(), with(&|c| c.dual_path = PathMode::Single)),
        ("mean_readout".into(), with(&|c| c.readout = Pooling::Mean)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub parameter_count: usize,
    /// Set when this variant beats the full model by more than two of its
    /// standard deviations.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn full(&self) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == FULL_MODEL)
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains every variant with the same dataset, splits and seeds.
pub fn run_ablation_suite(base: &TigtConfig, train: &TrainConfig) -> Result<AblationTable, TrainError> {
    train.validate()?;
    base.validate()?;
    let inputs = csl_inputs(base, train)?;
    let mut rows = Vec::new();
    for (variant, cfg) in ablation_variants(base) {
        let report = train_on(&cfg, train, &inputs)?;
        rows.push(AblationRow {
            variant,
            mean_accuracy: report.mean_test_accuracy,
            std_accuracy: report.std_test_accuracy,
            parameter_count: report.parameter_count,
            flagged: false,
        });
    }
    let full = rows[0].mean_accuracy;
    for row in rows.iter_mut().skip(1) {
        row.flagged = full < row.mean_accuracy - 2.0 * row.std_accuracy;
    }
    Ok(AblationTable { rows })
}
