//! Adaptive-moment gradient descent over a parameter store.

use crate::numerics::{ParamStore, Scalar, Tensor};

/// Adam with bias correction. Moment buffers are allocated lazily to match
/// the store on the first step.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step_count
    }

    /// One update from the store's accumulated gradients. With `clip` set,
    /// gradients are rescaled so their global L2 norm is at most the limit.
    pub fn step(&mut self, store: &mut ParamStore<T>, clip: Option<f64>) {
        if self.first_moment.is_empty() {
            for (_, p) in store.iter() {
                let (r, c) = p.value.shape();
                self.first_moment.push(Tensor::zeros(r, c));
                self.second_moment.push(Tensor::zeros(r, c));
            }
        }
        let scale = match clip {
            Some(limit) if limit > 0.0 => {
                let norm = store.grad_norm();
                if norm > limit {
                    limit / norm
                } else {
                    1.0
                }
            }
            _ => 1.0,
        };
        self.step_count += 1;
        let t = self.step_count as f64;
        let bias1 = 1.0 - self.beta1.powf(t);
        let bias2 = 1.0 - self.beta2.powf(t);
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let one_minus_b1 = T::from_f64(1.0 - self.beta1);
        let one_minus_b2 = T::from_f64(1.0 - self.beta2);
        let clip_scale = T::from_f64(scale);
        let lr = T::from_f64(self.learning_rate / bias1);
        let inv_sqrt_bias2 = T::from_f64(1.0 / bias2.sqrt());
        let eps = T::from_f64(self.epsilon);

        for ((_, p), (m, v)) in store
            .iter_mut()
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            for ((w, &g_raw), (m_e, v_e)) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data().iter())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()))
            {
                let g = g_raw * clip_scale;
                *m_e = b1 * *m_e + one_minus_b1 * g;
                *v_e = b2 * *v_e + one_minus_b2 * g * g;
                let v_hat_sqrt = (*v_e).sqrt() * inv_sqrt_bias2;
                *w -= lr * *m_e / (v_hat_sqrt + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_changes_params_iff_some_gradient_is_nonzero() {
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::row_vector(&[1.0, 2.0]));
        let b = store.add("b", Tensor::row_vector(&[3.0, 4.0]));
        let mut opt = Adam::new(1e-2, 0.9, 0.999, 1e-8);

        // No gradient: nothing moves.
        opt.step(&mut store, None);
        assert_eq!(store.value(a).data(), &[1.0, 2.0]);
        assert_eq!(store.value(b).data(), &[3.0, 4.0]);

        // Gradient on `a` only.
        store.get_mut(a).grad.data_mut()[0] = 0.5;
        opt.step(&mut store, None);
        assert_ne!(store.value(a).data()[0], 1.0);
        assert_eq!(store.value(a).data()[1], 2.0);
        assert_eq!(store.value(b).data(), &[3.0, 4.0]);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut store = ParamStore::new();
        let x = store.add("x", Tensor::scalar(5.0_f64));
        let mut opt = Adam::new(0.1, 0.9, 0.999, 1e-8);
        let mut early = Vec::new();
        for step in 0..200 {
            store.zero_grads();
            let v = store.value(x).item();
            store.get_mut(x).grad.data_mut()[0] = 2.0 * v;
            opt.step(&mut store, None);
            if step < 10 {
                early.push(store.value(x).item().powi(2));
            }
        }
        // Steady early descent, then convergence near the minimum
        // (oscillation in a small band is expected of Adam).
        assert!(early.windows(2).all(|w| w[1] < w[0]));
        assert!(store.value(x).item().abs() < 0.2);
        assert_eq!(opt.steps(), 200);
    }

    #[test]
    fn clipping_bounds_the_applied_update() {
        let mut a = ParamStore::new();
        let pa = a.add("p", Tensor::scalar(0.0_f64));
        let mut b = a.clone();
        let mut opt_a = Adam::new(1e-3, 0.9, 0.999, 1e-8);
        let mut opt_b = opt_a.clone();

        a.get_mut(pa).grad.data_mut()[0] = 1000.0;
        b.get_mut(pa).grad.data_mut()[0] = 1000.0;
        opt_a.step(&mut a, Some(1.0));
        opt_b.step(&mut b, None);
        // Same direction, but the clipped run fed a smaller gradient into
        // the moments.
        let ga = a.value(pa).item();
        let gb = b.value(pa).item();
        assert!(ga < 0.0 && gb < 0.0);
        assert!(ga.abs() <= gb.abs() + 1e-12);
    }
}
