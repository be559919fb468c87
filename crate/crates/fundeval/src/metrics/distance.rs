//! Embedding and activation-stack distances.

use crate::{cast, Error, Real, Result};

/// Mean absolute difference between two equal-length vectors. The mean
/// reduction keeps the value comparable across embedding dimensions.
pub fn embedding_l1_distance<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::mismatch(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("vectors must be non-empty"));
    }
    let mut sum = T::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        sum += (x - y).abs();
    }
    Ok(sum / cast::<T>(a.len() as f64))
}

/// One feature tensor of an activation stack.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationLayer<T> {
    pub layer_id: u32,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> ActivationLayer<T> {
    pub fn new(
        layer_id: u32,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<T>,
    ) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::mismatch(format!(
                "layer {layer_id}: data length {} != {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            layer_id,
            channels,
            height,
            width,
            data,
        })
    }
}

/// Ordered list of feature tensors tagged by activation-layer id.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStack<T> {
    layers: Vec<ActivationLayer<T>>,
}

impl<T: Real> ActivationStack<T> {
    pub fn new(layers: Vec<ActivationLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("activation stack must be non-empty"));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[ActivationLayer<T>] {
        &self.layers
    }
}

/// Sum over layers of the per-layer RMS difference.
pub fn perceptual_stack_distance<T: Real>(
    a: &ActivationStack<T>,
    b: &ActivationStack<T>,
) -> Result<T> {
    if a.layers.len() != b.layers.len() {
        return Err(Error::mismatch("stacks have different layer counts"));
    }
    let mut total = T::zero();
    for (la, lb) in a.layers.iter().zip(b.layers.iter()) {
        if la.layer_id != lb.layer_id
            || la.channels != lb.channels
            || la.height != lb.height
            || la.width != lb.width
        {
            return Err(Error::mismatch(format!(
                "layer mismatch: id {} {}x{}x{} vs id {} {}x{}x{}",
                la.layer_id,
                la.channels,
                la.height,
                la.width,
                lb.layer_id,
                lb.channels,
                lb.height,
                lb.width
            )));
        }
        let mut sum = T::zero();
        for (&x, &y) in la.data.iter().zip(lb.data.iter()) {
            let d = x - y;
            sum += d * d;
        }
        total += (sum / cast::<T>(la.data.len() as f64)).sqrt();
    }
    Ok(total)
}
