//! On-disk dataset container: one generated problem instance with its
//! observations, measurement matrices, and (optionally) the ground truth.
//!
//! Plain numeric JSON arrays throughout; matrices are row-major nested
//! arrays, support sets are sorted 1-based index lists.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use suprec::datagen::{MeasurementMatrixBatch, ObservationBatch, SupportSet, VarianceVector};
use suprec::linalg::Matrix;
use suprec::ProblemConfig;

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub format_version: u32,
    pub config: ProblemConfig,
    /// Ground-truth support, sorted 1-based; absent for blind datasets.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support: Option<Vec<usize>>,
    /// Ground-truth variance vector; absent for blind datasets.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Vec<f64>>,
    /// n observation vectors of length m.
    pub observations: Vec<Vec<f64>>,
    /// n measurement matrices, each m x d row-major.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl Dataset {
    pub fn from_parts(
        config: &ProblemConfig,
        lambda: &VarianceVector,
        obs: &ObservationBatch,
    ) -> Self {
        Dataset {
            format_version: DATASET_FORMAT_VERSION,
            config: config.clone(),
            support: Some(lambda.support().one_based()),
            lambda: Some(lambda.values().to_vec()),
            observations: obs.observations().to_vec(),
            matrices: obs
                .matrices()
                .matrices()
                .iter()
                .map(|p| p.to_rows())
                .collect(),
        }
    }

    /// Rebuilds the estimator input, checking shapes against the config.
    pub fn to_observation_batch(&self) -> anyhow::Result<ObservationBatch> {
        if self.format_version != DATASET_FORMAT_VERSION {
            bail!(
                "unsupported dataset format_version {} (expected {DATASET_FORMAT_VERSION})",
                self.format_version
            );
        }
        let matrices: Vec<Matrix> = self
            .matrices
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                let m = Matrix::from_rows(rows).with_context(|| format!("matrix {j}"))?;
                if m.nrows() != self.config.m || m.ncols() != self.config.d {
                    bail!(
                        "matrix {j} is {}x{}, config says {}x{}",
                        m.nrows(),
                        m.ncols(),
                        self.config.m,
                        self.config.d
                    );
                }
                Ok(m)
            })
            .collect::<anyhow::Result<_>>()?;
        let batch = MeasurementMatrixBatch::new(matrices)?;
        Ok(ObservationBatch::new(self.observations.clone(), batch)?)
    }

    pub fn truth_support(&self) -> anyhow::Result<Option<SupportSet>> {
        match &self.support {
            None => Ok(None),
            Some(one_based) => Ok(Some(SupportSet::from_one_based(
                one_based,
                self.config.d,
            )?)),
        }
    }
}
