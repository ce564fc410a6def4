//! Attaching a scoring network to an arbitrary representation learner.
//!
//! A host model supplies a latent representation and a per-sample
//! self-supervision value (reconstruction error, density, distance, ...).
//! The scorer maps the representation to an anomaly score, and the
//! score-guided regulariser uses the self-supervision value to decide which
//! samples are pulled toward `mu0` and which are pushed past `a`.

use super::config::SgLossConfig;
use super::loss::{epsilon_from_percentile, score_guided_loss, PerSampleForward};
use super::sgae::SgaeModel;
use crate::error::{Error, Result};
use crate::numerics::{DataMatrix, MlpNetwork};

pub trait RepresentationLearner {
    fn input_dim(&self) -> usize;

    fn latent_dim(&self) -> usize;

    /// Latent representation, one row per sample.
    fn represent(&self, batch: &DataMatrix) -> Result<DataMatrix>;

    /// Per-sample discrimination value; larger means more anomalous.
    fn self_supervision(&self, batch: &DataMatrix) -> Result<Vec<f64>>;
}

impl RepresentationLearner for SgaeModel {
    fn input_dim(&self) -> usize {
        SgaeModel::input_dim(self)
    }

    fn latent_dim(&self) -> usize {
        SgaeModel::latent_dim(self)
    }

    fn represent(&self, batch: &DataMatrix) -> Result<DataMatrix> {
        self.encoder().predict(batch)
    }

    fn self_supervision(&self, batch: &DataMatrix) -> Result<Vec<f64>> {
        Ok(self.forward_batch(batch)?.into_iter().map(|p| p.recon_error).collect())
    }
}

/// A host learner composed with a scoring network.
#[derive(Debug, Clone)]
pub struct ScoreGuided<R> {
    pub learner: R,
    pub scorer: MlpNetwork,
    pub config: SgLossConfig,
}

impl<R: RepresentationLearner> ScoreGuided<R> {
    pub fn new(learner: R, scorer: MlpNetwork, config: SgLossConfig) -> Result<Self> {
        config.validate()?;
        if scorer.input_dim() != learner.latent_dim() || scorer.output_dim() != 1 {
            return Err(Error::dim(format!(
                "scorer must map {} latent dims to one score, maps {} to {}",
                learner.latent_dim(),
                scorer.input_dim(),
                scorer.output_dim()
            )));
        }
        Ok(Self {
            learner,
            scorer,
            config,
        })
    }

    /// `S(R(x))` for every row.
    pub fn scores(&self, batch: &DataMatrix) -> Result<Vec<f64>> {
        let z = self.learner.represent(batch)?;
        let out = self.scorer.predict(&z)?;
        Ok(out.values().to_vec())
    }

    /// Score-guided regulariser on `batch`, without the outer `lambda_se`,
    /// with the threshold at the `eps_p` quantile of the host's signal.
    pub fn regularizer(&self, batch: &DataMatrix) -> Result<f64> {
        let signal = self.learner.self_supervision(batch)?;
        let eps = epsilon_from_percentile(&signal, self.config.eps_p)?;
        let samples: Vec<PerSampleForward> = signal
            .iter()
            .zip(self.scores(batch)?)
            .map(|(&f, s)| PerSampleForward::scored(f, s))
            .collect();
        Ok(score_guided_loss(&samples, eps, &self.config))
    }

    /// Host loss plus the weighted regulariser.
    pub fn total_loss(&self, host_loss: f64, batch: &DataMatrix) -> Result<f64> {
        Ok(host_loss + self.config.lambda_se * self.regularizer(batch)?)
    }
}
