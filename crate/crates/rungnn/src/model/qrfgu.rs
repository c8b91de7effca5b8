//! Query-related fusion gate: a gated unit that folds an incoming message
//! into a rule state, conditioned on the query relation.
//!
//! With x = [h_rule, h_msg, h_q] (concatenated in that order):
//!
//! ```text
//! g_u    = σ(W_u·x + b_u)
//! g_f    = σ(W_f·x + b_f)
//! h_c    = tanh(W_c·(h_msg + g_f ⊙ h_rule) + b_c)
//! h_fuse = (1 − g_u) ⊙ h_rule + g_u ⊙ h_c
//! ```
//!
//! Each output component is a convex blend of the old state and the
//! candidate, so a closed update gate preserves the state exactly.

use crate::numerics::{ParamStore, Scalar, Tape, ValueId};

use super::{ModelError, QrfguParams};

/// Apply the fusion gate to row-batched inputs (all `k×d`), returning the
/// fused states `k×d`. For single vectors pass 1×d rows.
pub fn qrfgu<T: Scalar>(
    tape: &mut Tape<T>,
    store: &ParamStore<T>,
    p: &QrfguParams,
    h_rule: ValueId,
    h_msg: ValueId,
    h_q: ValueId,
) -> Result<ValueId, ModelError> {
    let (rows, d) = tape.value(h_rule).shape();
    for v in [h_msg, h_q] {
        if tape.value(v).shape() != (rows, d) {
            return Err(crate::numerics::NumericsError::ShapeMismatch {
                op: "qrfgu",
                lhs: (rows, d),
                rhs: tape.value(v).shape(),
            }
            .into());
        }
    }
    let w_u = tape.param(store, p.w_u);
    let w_f = tape.param(store, p.w_f);
    let w_c = tape.param(store, p.w_c);
    let b_u = tape.param(store, p.b_u);
    let b_f = tape.param(store, p.b_f);
    let b_c = tape.param(store, p.b_c);

    let x = tape.concat_cols(&[h_rule, h_msg, h_q])?;
    let pre_u = tape.matmul_nt(x, w_u)?;
    let pre_u = tape.add_row(pre_u, b_u)?;
    let g_u = tape.sigmoid(pre_u)?;
    let pre_f = tape.matmul_nt(x, w_f)?;
    let pre_f = tape.add_row(pre_f, b_f)?;
    let g_f = tape.sigmoid(pre_f)?;

    let kept = tape.hadamard(g_f, h_rule)?;
    let fuse_in = tape.add(h_msg, kept)?;
    let pre_c = tape.matmul_nt(fuse_in, w_c)?;
    let pre_c = tape.add_row(pre_c, b_c)?;
    let h_c = tape.tanh(pre_c)?;

    let ones = tape.ones(rows, d);
    let retain = tape.sub(ones, g_u)?;
    let old_part = tape.hadamard(retain, h_rule)?;
    let new_part = tape.hadamard(g_u, h_c)?;
    Ok(tape.add(old_part, new_part)?)
}
