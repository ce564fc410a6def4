//! Fully connected layers and multilayer perceptrons with manual backprop.
//!
//! Weights are stored as `(in_dim, out_dim)` row-major matrices so a batch
//! `X` of shape `(n, in_dim)` maps to `X W + b` of shape `(n, out_dim)`.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative evaluated at the pre-activation value. Relu uses 0 at the kink.
    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    weights: DataMatrix,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: DataMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::dim(format!(
                "bias of length {} for a layer with {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::dim("layer dimensions must be positive"));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::input("non-finite bias"));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Uniform He initialisation, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero bias.
    pub fn he_uniform<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::dim("layer dimensions must be positive"));
        }
        let limit = (6.0 / in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let values = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Ok(Self {
            weights: DataMatrix::from_raw(in_dim, out_dim, values),
            bias: vec![0.0; out_dim],
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &DataMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Returns `(pre_activation, output)`.
    fn forward(&self, input: &DataMatrix) -> (DataMatrix, DataMatrix) {
        let (n, in_dim) = input.shape();
        let out_dim = self.out_dim();
        let mut pre = Vec::with_capacity(n * out_dim);
        for _ in 0..n {
            pre.extend_from_slice(&self.bias);
        }
        // pre = X W + pre
        gemm(
            (n, in_dim, out_dim),
            input.values(),
            (in_dim, 1),
            self.weights.values(),
            (out_dim, 1),
            1.0,
            &mut pre,
        );
        let out = match self.activation {
            Activation::Linear => pre.clone(),
            act => pre.iter().map(|&v| act.apply(v)).collect(),
        };
        (
            DataMatrix::from_raw(n, out_dim, pre),
            DataMatrix::from_raw(n, out_dim, out),
        )
    }
}

/// `c = a b + beta c` for row-major `c` of shape `(m, n)`; `a` is `(m, k)` and `b` is
/// `(k, n)`, each given with explicit `(row, col)` strides.
fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() == m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the slices cover every index reachable through the given shapes and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Parameter gradients of one layer, shaped like the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: DataMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub layers: Vec<LayerGrads>,
}

impl NetworkGrads {
    pub fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: DataMatrix::zeros(l.in_dim(), l.out_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    /// Flat views in the same order as [`MlpNetwork::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weights.values(), g.bias.as_slice()])
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&v| v == 0.0))
    }
}

/// Activations retained by [`MlpNetwork::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    inputs: Vec<DataMatrix>,
    pre_activations: Vec<DataMatrix>,
}

impl ForwardCache {
    pub fn batch_rows(&self) -> usize {
        self.inputs.first().map_or(0, DataMatrix::rows)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
    /// Bumped whenever parameters are handed out mutably; stale caches are rejected.
    #[serde(skip)]
    generation: u64,
}

impl PartialEq for MlpNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl MlpNetwork {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::dim("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            generation: 0,
        })
    }

    /// Builds `dims[0] -> dims[1] -> ... -> dims[last]` with `hidden` on every layer
    /// except the last, which uses `output`.
    pub fn with_dims<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::dim("need at least input and output dimensions"));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                DenseLayer::he_uniform(dims[i], dims[i + 1], act, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.in_dim() * l.out_dim() + l.out_dim())
            .sum()
    }

    /// Flat mutable parameter views: weights then bias, layer by layer.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation = self.generation.wrapping_add(1);
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.values_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.values(), l.bias.as_slice()])
            .collect()
    }

    /// Sizes of the slices returned by [`Self::param_slices`].
    pub fn param_shapes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    /// Output only; no cache is kept.
    pub fn predict(&self, batch: &DataMatrix) -> Result<DataMatrix> {
        self.check_input(batch)?;
        let mut current = batch.clone();
        for layer in &self.layers {
            current = layer.forward(&current).1;
        }
        Ok(current)
    }

    pub fn forward(&self, batch: &DataMatrix) -> Result<(DataMatrix, ForwardCache)> {
        self.check_input(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for layer in &self.layers {
            let (pre, out) = layer.forward(&current);
            inputs.push(current);
            pre_activations.push(pre);
            current = out;
        }
        Ok((
            current,
            ForwardCache {
                generation: self.generation,
                inputs,
                pre_activations,
            },
        ))
    }

    /// Returns parameter gradients and the gradient with respect to the batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &DataMatrix,
    ) -> Result<(NetworkGrads, DataMatrix)> {
        if cache.generation != self.generation || cache.inputs.len() != self.layers.len() {
            return Err(Error::input("forward cache does not belong to this network state"));
        }
        for (layer, input) in self.layers.iter().zip(&cache.inputs) {
            if input.cols() != layer.in_dim() {
                return Err(Error::input("forward cache does not match network layout"));
            }
        }
        let expected = (cache.batch_rows(), self.output_dim());
        if output_grad.shape() != expected {
            return Err(Error::dim(format!(
                "output gradient is {:?}, forward output was {:?}",
                output_grad.shape(),
                expected
            )));
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            let pre = &cache.pre_activations[i];
            let (n, in_dim) = input.shape();
            let out_dim = layer.out_dim();

            // dL/dpre
            let mut delta = upstream.into_values();
            if layer.activation != Activation::Linear {
                for (d, &p) in delta.iter_mut().zip(pre.values()) {
                    *d *= layer.activation.derivative(p);
                }
            }

            let mut gb = vec![0.0; out_dim];
            for d in delta.chunks_exact(out_dim) {
                for (b, dv) in gb.iter_mut().zip(d) {
                    *b += dv;
                }
            }
            // gW = X^T delta
            let mut gw = vec![0.0; in_dim * out_dim];
            gemm(
                (in_dim, n, out_dim),
                input.values(),
                (1, in_dim),
                &delta,
                (out_dim, 1),
                0.0,
                &mut gw,
            );
            // dX = delta W^T
            let mut dx = vec![0.0; n * in_dim];
            gemm(
                (n, out_dim, in_dim),
                &delta,
                (out_dim, 1),
                layer.weights.values(),
                (1, out_dim),
                0.0,
                &mut dx,
            );

            grads.push(LayerGrads {
                weights: DataMatrix::from_raw(in_dim, out_dim, gw),
                bias: gb,
            });
            upstream = DataMatrix::from_raw(n, in_dim, dx);
        }
        grads.reverse();
        Ok((NetworkGrads { layers: grads }, upstream))
    }

    fn check_input(&self, batch: &DataMatrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}
