use serde::{Deserialize, Serialize};

use crate::dataset::ImageDataset;
use crate::error::{Error, Result};

/// Affine input normalisation applied after scaling pixels to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub mean: f64,
    pub std: f64,
}

impl InputScaling {
    pub const IDENTITY: InputScaling = InputScaling {
        mean: 0.0,
        std: 1.0,
    };

    /// Population mean and standard deviation of the selected images' scaled
    /// pixels. Constant data keeps unit scale.
    pub fn fit(ds: &ImageDataset, indices: &[usize]) -> Self {
        let (mut n, mut sum, mut sq) = (0u64, 0.0, 0.0);
        for &i in indices {
            for &p in &ds.images[i].pixels {
                let v = p as f64 / 255.0;
                n += 1;
                sum += v;
                sq += v * v;
            }
        }
        if n == 0 {
            return Self::IDENTITY;
        }
        let mean = sum / n as f64;
        let var = (sq / n as f64 - mean * mean).max(0.0);
        let std = if var > 1e-12 { var.sqrt() } else { 1.0 };
        InputScaling { mean, std }
    }
}

/// Dense row-major `f64` tensor, `(n, h, w, c)` for images or `(n, d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Leading dimension.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Values of item `i` along the leading dimension.
    pub fn item(&self, i: usize) -> &[f64] {
        let stride = self.data.len() / self.batch().max(1);
        &self.data[i * stride..(i + 1) * stride]
    }

    /// `(x − mean) / std` element-wise.
    pub fn standardize(&mut self, scaling: InputScaling) {
        for v in &mut self.data {
            *v = (*v - scaling.mean) / scaling.std;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Images `indices` of `ds`, intensities scaled to `[0, 1]`.
    pub fn from_images(ds: &ImageDataset, indices: &[usize]) -> Result<Self> {
        let (h, w, c) = ds
            .shape()
            .ok_or_else(|| Error::Shape("empty dataset".into()))?;
        let mut data = Vec::with_capacity(indices.len() * h * w * c);
        for &i in indices {
            data.extend(ds.images[i].pixels.iter().map(|&p| p as f64 / 255.0));
        }
        Tensor::new(vec![indices.len(), h, w, c], data)
    }
}
