//! The score-guided autoencoder: encoder `E`, decoder `D`, scorer `S`, with
//! `z = E(x)`, `x~ = D(z)`, `s = S(z)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Architecture, SgLossConfig, Variant};
use super::loss::{
    self, branch, euclidean_distance, gaussian_kl, hinge_term, hinge_term_grad, normal_term,
    normal_term_grad, sigmoid, softplus, Branch, PerSampleForward,
};
use crate::error::{Error, Result};
use crate::numerics::{Activation, DataMatrix, ForwardCache, MlpNetwork, NetworkGrads};

/// RNG stream for the scorer, kept apart from the autoencoder's so adding or
/// removing a scorer never changes the autoencoder's initial weights.
const SCORER_STREAM: u64 = 1;

const EVAL_BLOCK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgaeModel {
    encoder: MlpNetwork,
    decoder: MlpNetwork,
    scorer: Option<MlpNetwork>,
    config: SgLossConfig,
}

/// Loss terms of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub reconstruction: f64,
    /// Mean score-guided term before multiplying by `lambda_se`.
    pub score_guided: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub encoder: NetworkGrads,
    pub decoder: NetworkGrads,
    pub scorer: Option<NetworkGrads>,
}

impl ModelGrads {
    /// Same ordering as [`SgaeModel::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.slices();
        out.extend(self.decoder.slices());
        if let Some(s) = &self.scorer {
            out.extend(s.slices());
        }
        out
    }
}

pub(crate) struct BatchForward {
    pub z: DataMatrix,
    pub x_tilde: DataMatrix,
    pub scorer_out: Option<DataMatrix>,
    pub recon_errors: Vec<f64>,
    enc_cache: ForwardCache,
    dec_cache: ForwardCache,
    scorer_cache: Option<ForwardCache>,
}

impl SgaeModel {
    /// Builds a randomly initialised model. The autoencoder draws from
    /// `seed`'s default stream, the scorer from a separate stream.
    pub fn new(input_dim: usize, arch: &Architecture, config: SgLossConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        arch.validate()?;
        if input_dim == 0 {
            return Err(Error::config("input dimension must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut enc_dims = vec![input_dim];
        enc_dims.extend(&arch.encoder);
        let dec_dims: Vec<usize> = enc_dims.iter().rev().copied().collect();
        let encoder = MlpNetwork::with_dims(&enc_dims, Activation::Relu, Activation::Relu, &mut rng)?;
        let decoder = MlpNetwork::with_dims(&dec_dims, Activation::Relu, Activation::Linear, &mut rng)?;

        let scorer = if config.variant.has_scorer() {
            let mut srng = ChaCha8Rng::seed_from_u64(seed);
            srng.set_stream(SCORER_STREAM);
            let mut dims = vec![arch.latent_dim()];
            dims.extend(&arch.scorer);
            dims.push(config.variant.scorer_outputs());
            Some(MlpNetwork::with_dims(&dims, Activation::Relu, Activation::Linear, &mut srng)?)
        } else {
            None
        };
        Self::from_parts(encoder, decoder, scorer, config)
    }

    /// Assembles a model from existing networks, checking the dimension contract.
    pub fn from_parts(
        encoder: MlpNetwork,
        decoder: MlpNetwork,
        scorer: Option<MlpNetwork>,
        config: SgLossConfig,
    ) -> Result<Self> {
        config.validate()?;
        if decoder.input_dim() != encoder.output_dim() {
            return Err(Error::dim(format!(
                "decoder expects {} latent dims, encoder produces {}",
                decoder.input_dim(),
                encoder.output_dim()
            )));
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(Error::dim(format!(
                "decoder emits {} dims, input has {}",
                decoder.output_dim(),
                encoder.input_dim()
            )));
        }
        match (&scorer, config.variant.has_scorer()) {
            (Some(s), true) => {
                if s.input_dim() != encoder.output_dim() {
                    return Err(Error::dim(format!(
                        "scorer expects {} latent dims, encoder produces {}",
                        s.input_dim(),
                        encoder.output_dim()
                    )));
                }
                if s.output_dim() != config.variant.scorer_outputs() {
                    return Err(Error::dim(format!(
                        "variant {} needs a {}-wide scorer head, got {}",
                        config.variant,
                        config.variant.scorer_outputs(),
                        s.output_dim()
                    )));
                }
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(Error::config(format!("variant {} takes no scorer", config.variant)))
            }
            (None, true) => {
                return Err(Error::config(format!("variant {} needs a scorer", config.variant)))
            }
        }
        Ok(Self {
            encoder,
            decoder,
            scorer,
            config,
        })
    }

    pub fn config(&self) -> &SgLossConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn encoder(&self) -> &MlpNetwork {
        &self.encoder
    }

    pub fn decoder(&self) -> &MlpNetwork {
        &self.decoder
    }

    pub fn scorer(&self) -> Option<&MlpNetwork> {
        self.scorer.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.encoder.num_params()
            + self.decoder.num_params()
            + self.scorer.as_ref().map_or(0, MlpNetwork::num_params)
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.param_slices_mut();
        out.extend(self.decoder.param_slices_mut());
        if let Some(s) = &mut self.scorer {
            out.extend(s.param_slices_mut());
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.param_slices();
        out.extend(self.decoder.param_slices());
        if let Some(s) = &self.scorer {
            out.extend(s.param_slices());
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    pub(crate) fn forward_internal(&self, batch: &DataMatrix) -> Result<BatchForward> {
        let (z, enc_cache) = self.encoder.forward(batch)?;
        let (x_tilde, dec_cache) = self.decoder.forward(&z)?;
        let (scorer_out, scorer_cache) = match &self.scorer {
            Some(s) => {
                let (out, cache) = s.forward(&z)?;
                (Some(out), Some(cache))
            }
            None => (None, None),
        };
        let recon_errors = batch
            .iter_rows()
            .zip(x_tilde.iter_rows())
            .map(|(x, r)| euclidean_distance(x, r))
            .collect();
        Ok(BatchForward {
            z,
            x_tilde,
            scorer_out,
            recon_errors,
            enc_cache,
            dec_cache,
            scorer_cache,
        })
    }

    /// Per-row latent, reconstruction, score and reconstruction error.
    pub fn forward_batch(&self, batch: &DataMatrix) -> Result<Vec<PerSampleForward>> {
        let fwd = self.forward_internal(batch)?;
        Ok(self.per_sample(&fwd))
    }

    fn per_sample(&self, fwd: &BatchForward) -> Vec<PerSampleForward> {
        (0..fwd.z.rows())
            .map(|i| {
                let e = fwd.recon_errors[i];
                let (s, s_sigma) = self.score_of(fwd, i);
                PerSampleForward {
                    z: fwd.z.row(i).to_vec(),
                    x_tilde: fwd.x_tilde.row(i).to_vec(),
                    s,
                    s_sigma,
                    recon_error: e,
                }
            })
            .collect()
    }

    #[inline]
    fn score_of(&self, fwd: &BatchForward, i: usize) -> (f64, Option<f64>) {
        self.score_at(fwd.scorer_out.as_ref(), &fwd.recon_errors, i)
    }

    #[inline]
    fn score_at(&self, scorer_out: Option<&DataMatrix>, errors: &[f64], i: usize) -> (f64, Option<f64>) {
        match (self.config.variant, scorer_out) {
            (Variant::Original, Some(out)) => (out.get(i, 0), None),
            (Variant::Normal | Variant::Lognormal, Some(out)) => {
                (out.get(i, 0), Some(softplus(out.get(i, 1))))
            }
            _ => (errors[i], None),
        }
    }

    /// Reconstruction errors and raw scorer outputs without keeping caches,
    /// evaluated in blocks to bound peak memory on large inputs.
    fn evaluate(&self, batch: &DataMatrix) -> Result<(Vec<f64>, Option<DataMatrix>)> {
        if batch.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        let n = batch.rows();
        let mut errors = Vec::with_capacity(n);
        let mut outputs = self.scorer.as_ref().map(|s| Vec::with_capacity(n * s.output_dim()));
        let mut start = 0;
        while start < n {
            let end = (start + EVAL_BLOCK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let block = batch.select_rows(&idx);
            let z = self.encoder.predict(&block)?;
            let x_tilde = self.decoder.predict(&z)?;
            errors.extend(
                block
                    .iter_rows()
                    .zip(x_tilde.iter_rows())
                    .map(|(x, r)| euclidean_distance(x, r)),
            );
            if let (Some(s), Some(out)) = (&self.scorer, outputs.as_mut()) {
                out.extend_from_slice(s.predict(&z)?.values());
            }
            start = end;
        }
        let scorer_out = match (&self.scorer, outputs) {
            (Some(s), Some(out)) => Some(DataMatrix::from_raw(n, s.output_dim(), out)),
            _ => None,
        };
        Ok((errors, scorer_out))
    }

    /// Anomaly scores; higher means more anomalous. Does not mutate the model.
    pub fn predict_scores(&self, batch: &DataMatrix) -> Result<Vec<f64>> {
        let (errors, out) = self.evaluate(batch)?;
        Ok((0..errors.len()).map(|i| self.score_at(out.as_ref(), &errors, i).0).collect())
    }

    pub fn reconstruction_errors(&self, batch: &DataMatrix) -> Result<Vec<f64>> {
        Ok(self.evaluate(batch)?.0)
    }

    /// Total loss with the threshold taken from this batch's reconstruction errors.
    pub fn total_loss(&self, batch: &DataMatrix) -> Result<f64> {
        Ok(self.loss_breakdown(batch, None)?.total)
    }

    /// Loss terms; `eps` overrides the per-batch threshold when given.
    pub fn loss_breakdown(&self, batch: &DataMatrix, eps: Option<f64>) -> Result<LossBreakdown> {
        let (errors, out) = self.evaluate(batch)?;
        self.loss_from_outputs(&errors, out.as_ref(), eps)
    }

    fn loss_from_outputs(
        &self,
        errors: &[f64],
        scorer_out: Option<&DataMatrix>,
        eps: Option<f64>,
    ) -> Result<LossBreakdown> {
        let n = errors.len();
        if n == 0 {
            return Err(Error::input("empty batch"));
        }
        let reconstruction = errors.iter().sum::<f64>() / n as f64;
        let cfg = &self.config;
        if cfg.variant == Variant::PlainAe {
            return Ok(LossBreakdown {
                total: reconstruction,
                reconstruction,
                score_guided: 0.0,
                eps: f64::NAN,
            });
        }
        let eps = match eps {
            Some(e) => e,
            None => loss::epsilon_from_percentile(errors, cfg.eps_p)?,
        };
        let samples: Vec<PerSampleForward> = (0..n)
            .map(|i| {
                let (s, sigma) = self.score_at(scorer_out, errors, i);
                PerSampleForward {
                    z: Vec::new(),
                    x_tilde: Vec::new(),
                    s,
                    s_sigma: sigma,
                    recon_error: errors[i],
                }
            })
            .collect();
        let score_guided = match cfg.variant {
            Variant::Normal | Variant::Lognormal => loss::kl_score_loss(&samples, eps, cfg)?,
            _ => loss::score_guided_loss(&samples, eps, cfg),
        };
        Ok(LossBreakdown {
            total: reconstruction + cfg.lambda_se * score_guided,
            reconstruction,
            score_guided,
            eps,
        })
    }

    /// Loss and parameter gradients for one batch. The threshold is treated
    /// as a constant (no gradient flows through the branch selection).
    pub fn loss_and_grads(&self, batch: &DataMatrix, eps: Option<f64>) -> Result<(LossBreakdown, ModelGrads)> {
        let fwd = self.forward_internal(batch)?;
        let breakdown = self.loss_from_outputs(&fwd.recon_errors, fwd.scorer_out.as_ref(), eps)?;
        let cfg = &self.config;
        let n = batch.rows();
        let inv_n = 1.0 / n as f64;
        let d = batch.cols();
        let eps = breakdown.eps;

        // dL/de_i for every sample, then chained through e = ||x - x~||.
        let mut d_err = vec![inv_n; n];
        let mut d_scorer = self
            .scorer
            .as_ref()
            .map(|s| DataMatrix::zeros(n, s.output_dim()));
        let w = cfg.lambda_se * inv_n;

        match cfg.variant {
            Variant::PlainAe => {}
            Variant::Recon => {
                for (i, de) in d_err.iter_mut().enumerate() {
                    let e = fwd.recon_errors[i];
                    *de += w * match branch(e, eps) {
                        Branch::Normal => normal_term_grad(e, cfg.mu0),
                        Branch::Abnormal => cfg.lambda_a * hinge_term_grad(e, cfg.a),
                    };
                }
            }
            Variant::Original => {
                let out = fwd.scorer_out.as_ref().expect("scorer present");
                let ds = d_scorer.as_mut().expect("scorer present");
                for i in 0..n {
                    let s = out.get(i, 0);
                    let g = match branch(fwd.recon_errors[i], eps) {
                        Branch::Normal => normal_term_grad(s, cfg.mu0),
                        Branch::Abnormal => cfg.lambda_a * hinge_term_grad(s, cfg.a),
                    };
                    ds.set(i, 0, w * g);
                }
            }
            Variant::Normal | Variant::Lognormal => {
                let out = fwd.scorer_out.as_ref().expect("scorer present");
                let ds = d_scorer.as_mut().expect("scorer present");
                for i in 0..n {
                    let mu = out.get(i, 0);
                    let raw = out.get(i, 1);
                    match branch(fwd.recon_errors[i], eps) {
                        Branch::Normal => {
                            let sigma = softplus(raw);
                            ds.set(i, 0, w * mu);
                            ds.set(i, 1, w * (sigma - 1.0 / sigma) * sigmoid(raw));
                        }
                        Branch::Abnormal => {
                            ds.set(i, 0, w * cfg.lambda_a * hinge_term_grad(mu, cfg.a));
                        }
                    }
                }
            }
        }

        let mut d_xt = DataMatrix::zeros(n, d);
        for i in 0..n {
            let e = fwd.recon_errors[i];
            if e == 0.0 {
                continue;
            }
            let scale = d_err[i] / e;
            let x = batch.row(i);
            let xt = fwd.x_tilde.row(i);
            for (g, (xv, xtv)) in d_xt.row_mut(i).iter_mut().zip(x.iter().zip(xt)) {
                *g = scale * (xtv - xv);
            }
        }

        let (dec_grads, mut d_z) = self.decoder.backward(&fwd.dec_cache, &d_xt)?;
        let scorer_grads = match (&self.scorer, &fwd.scorer_cache, &d_scorer) {
            (Some(s), Some(cache), Some(ds)) => {
                let (g, dz_s) = s.backward(cache, ds)?;
                for (a, b) in d_z.values_mut().iter_mut().zip(dz_s.values()) {
                    *a += b;
                }
                Some(g)
            }
            _ => None,
        };
        let (enc_grads, _) = self.encoder.backward(&fwd.enc_cache, &d_z)?;
        Ok((
            breakdown,
            ModelGrads {
                encoder: enc_grads,
                decoder: dec_grads,
                scorer: scorer_grads,
            },
        ))
    }

    /// Per-sample score-guided term, used by kink checks in tests and tooling.
    pub fn per_sample_guidance(&self, sample: &PerSampleForward, eps: f64) -> f64 {
        let cfg = &self.config;
        match (cfg.variant, branch(sample.recon_error, eps)) {
            (Variant::PlainAe, _) => 0.0,
            (Variant::Normal | Variant::Lognormal, Branch::Normal) => {
                gaussian_kl(sample.s, sample.s_sigma.unwrap_or(1.0))
            }
            (_, Branch::Normal) => normal_term(sample.s, cfg.mu0),
            (_, Branch::Abnormal) => cfg.lambda_a * hinge_term(sample.s, cfg.a),
        }
    }
}
