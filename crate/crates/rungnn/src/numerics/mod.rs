//! Differentiable computation core: dense tensors, tape-recorded primitives,
//! edge-grouped softmax and scatter-sum, reverse-mode gradients, and a
//! finite-difference checker.

mod gradcheck;
mod params;
mod scalar;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, GradCheckReport, ParamCheck};
pub use params::{ParamId, ParamStore, Parameter};
pub use scalar::{Precision, Scalar};
pub use tape::{Tape, ValueId};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("tensor payload has {got} values, shape requires {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("value is not recorded on this tape")]
    DetachedValue,
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("{op}: group list has {got} entries, expected {expected}")]
    GroupCount {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("column slice {from}..{to} out of range for {cols} columns")]
    BadSlice {
        from: usize,
        to: usize,
        cols: usize,
    },
}
