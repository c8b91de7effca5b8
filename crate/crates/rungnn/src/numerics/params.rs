//! Trainable parameters and their gradient accumulators.

use super::scalar::Scalar;
use super::tensor::Tensor;

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One trainable tensor plus its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter<T: Scalar> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

/// Ordered collection of all model parameters.
///
/// Gradients accumulate additively across backward passes until
/// [`ParamStore::zero_grads`] is called, so one optimizer step can consume
/// the summed gradient of many per-query passes.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<T: Scalar> {
    entries: Vec<Parameter<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let (rows, cols) = value.shape();
        self.entries.push(Parameter {
            name: name.into(),
            value,
            grad: Tensor::zeros(rows, cols),
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.entries[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.entries[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].grad
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter<T>)> {
        self.entries.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Parameter<T>)> {
        self.entries
            .iter_mut()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p))
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.grad.fill(T::ZERO);
        }
    }

    /// Snapshot of all gradients, in parameter order.
    pub fn grads_snapshot(&self) -> Vec<Tensor<T>> {
        self.entries.iter().map(|p| p.grad.clone()).collect()
    }

    /// Element-wise add a gradient snapshot into the accumulators.
    pub fn accumulate_grads(&mut self, grads: &[Tensor<T>]) {
        assert_eq!(grads.len(), self.entries.len(), "gradient snapshot size");
        for (p, g) in self.entries.iter_mut().zip(grads.iter()) {
            for (a, &b) in p.grad.data_mut().iter_mut().zip(g.data().iter()) {
                *a += b;
            }
        }
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    /// Global L2 norm of all gradients, in f64.
    pub fn grad_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|p| p.grad.squared_norm_f64())
            .sum::<f64>()
            .sqrt()
    }

    /// Convert every parameter value to another precision. Gradients reset.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        let mut out = ParamStore::new();
        for p in &self.entries {
            let (r, c) = p.value.shape();
            let data = p.value.data().iter().map(|&x| U::from_f64(x.to_f64())).collect();
            out.add(
                p.name.clone(),
                Tensor::from_vec(r, c, data).expect("shape preserved in cast"),
            );
        }
        out
    }
}
