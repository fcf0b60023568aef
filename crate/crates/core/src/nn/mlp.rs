//! Dense feed-forward network: elu on every hidden layer, linear output.
//!
//! Weights are `(out, in)` row-major; a batch is one sample per row.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{dim_check, Error, Result};

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice().unwrap(), l.biases.as_slice().unwrap()])
            .collect()
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Precondition(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weights: Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-limit..limit)),
                    biases: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Precondition("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            dim_check(&format!("layer {i} bias length"), l.out_dim(), l.biases.len())?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            dim_check(&format!("layer {} input width", i + 1), pair[0].out_dim(), pair[1].in_dim())?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(Dense::out_dim))
            .collect()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_slice_mut().unwrap(), l.biases.as_slice_mut().unwrap()])
            .collect()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let batch = x.insert_axis(Axis(0));
        Ok(self.forward_batch(batch)?.row(0).to_owned())
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        dim_check("network input width", self.in_dim(), x.ncols())?;
        let last = self.layers.len() - 1;
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.weights.t()) + &layer.biases;
            if i != last {
                a.mapv_inplace(elu);
            }
        }
        Ok(a)
    }

    /// MSE (mean over batch and output entries) and its exact gradients.
    pub fn backward_batch(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        dim_check("network input width", self.in_dim(), x.ncols())?;
        dim_check("target width", self.out_dim(), target.ncols())?;
        dim_check("target rows", x.nrows(), target.nrows())?;
        let last = self.layers.len() - 1;

        // Pre-activations of every layer; the activations are recomputed from them.
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let mut inputs = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights.t()) + &layer.biases;
            inputs.push(a);
            a = if i != last { z.mapv(elu) } else { z.clone() };
            pre.push(z);
        }

        let diff = &a - &target;
        let count = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;

        let mut delta = diff * (2.0 / count);
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            if i != last {
                delta.zip_mut_with(&pre[i], |d, &z| *d *= elu_derivative(z));
            }
            grads.push(Dense {
                weights: delta.t().dot(&inputs[i]).as_standard_layout().into_owned(),
                biases: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                delta = delta.dot(&self.layers[i].weights);
            }
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }

    pub fn backward(&self, x: ArrayView1<f64>, target: ArrayView1<f64>) -> Result<(f64, Gradients)> {
        self.backward_batch(x.insert_axis(Axis(0)), target.insert_axis(Axis(0)))
    }

    pub fn mse(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
        dim_check("target rows", x.nrows(), target.nrows())?;
        let y = self.forward_batch(x)?;
        Ok((&y - &target).mapv(|d| d * d).mean().unwrap_or(0.0))
    }
}
