//! Central-difference verification of tape gradients.

use super::params::{ParamId, ParamStore};
use super::tape::{Tape, ValueId};
use super::NumericsError;

/// Outcome for one parameter.
#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    /// Worst relative error across the parameter's elements.
    pub max_rel_error: f64,
    /// Flat element index where it occurred.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Report over every parameter of the checked model.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_param: Vec<ParamCheck>,
    pub tolerance: f64,
    pub epsilon: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.per_param
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.per_param.iter().all(|p| p.max_rel_error <= self.tolerance)
    }

    /// Parameters exceeding the tolerance.
    pub fn failures(&self) -> impl Iterator<Item = &ParamCheck> {
        self.per_param
            .iter()
            .filter(move |p| p.max_rel_error > self.tolerance)
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "gradient check: eps={:.1e} tol={:.1e} params={}",
            self.epsilon,
            self.tolerance,
            self.per_param.len()
        )?;
        for p in &self.per_param {
            let mark = if p.max_rel_error <= self.tolerance {
                "ok  "
            } else {
                "FAIL"
            };
            writeln!(
                f,
                "  {mark} {:<28} max_rel_err={:.3e} (analytic={:.6e} numeric={:.6e} at [{}])",
                p.name, p.max_rel_error, p.analytic, p.numeric, p.worst_index
            )?;
        }
        Ok(())
    }
}

/// Compare tape gradients of a scalar loss against central differences
/// (f(θ+ε) − f(θ−ε)) / 2ε, element by element, for every parameter in the
/// store. Relative error is |a−b| / max(|a|, |b|, 1e−8).
///
/// `build_loss` must record the loss for the current store contents on a
/// fresh tape. Runs in 64-bit; the store is restored to its original values.
pub fn finite_diff_check<F>(
    mut build_loss: F,
    store: &mut ParamStore<f64>,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NumericsError>
where
    F: FnMut(&ParamStore<f64>) -> Result<(Tape<f64>, ValueId), NumericsError>,
{
    store.zero_grads();
    let (tape, loss) = build_loss(store)?;
    tape.backward(loss, store)?;
    drop(tape);
    let analytic = store.grads_snapshot();

    let mut per_param = Vec::with_capacity(store.len());
    #[allow(clippy::needless_range_loop)]
    for pi in 0..store.len() {
        let id = ParamId(pi);
        let n = analytic[pi].len();
        let mut worst = ParamCheck {
            name: store.get(id).name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: if n > 0 { analytic[pi].data()[0] } else { 0.0 },
            numeric: 0.0,
        };
        for ei in 0..n {
            let original = store.get(id).value.data()[ei];

            store.get_mut(id).value.data_mut()[ei] = original + epsilon;
            let (tape_p, loss_p) = build_loss(store)?;
            let f_plus = tape_p.value(loss_p).item();
            drop(tape_p);

            store.get_mut(id).value.data_mut()[ei] = original - epsilon;
            let (tape_m, loss_m) = build_loss(store)?;
            let f_minus = tape_m.value(loss_m).item();
            drop(tape_m);

            store.get_mut(id).value.data_mut()[ei] = original;

            let numeric = (f_plus - f_minus) / (2.0 * epsilon);
            let a = analytic[pi].data()[ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > worst.max_rel_error {
                worst.max_rel_error = rel;
                worst.worst_index = ei;
                worst.analytic = a;
                worst.numeric = numeric;
            }
        }
        per_param.push(worst);
    }
    Ok(GradCheckReport {
        per_param,
        tolerance,
        epsilon,
    })
}
