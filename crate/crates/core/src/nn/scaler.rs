use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{dim_check, Error, Result};

/// Per-feature standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Array1<f64>,
    /// Population standard deviation; zero-variance features store 1.
    pub std: Array1<f64>,
}

impl Scaler {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(Error::Precondition(format!(
                "scaler needs at least 2 samples, got {}",
                x.nrows()
            )));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        Ok(Self { mean, std })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            std: Array1::ones(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        dim_check("scaler input width", self.dim(), x.ncols())?;
        Ok((&x - &self.mean) / &self.std)
    }

    pub fn transform_row(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        dim_check("scaler input width", self.dim(), x.len())?;
        Ok((&x - &self.mean) / &self.std)
    }
}
