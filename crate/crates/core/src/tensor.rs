//! Dense row-major tensors over `f32` or `f64`.
//!
//! Gradient checking needs double precision (finite-difference noise swamps
//! `f32`), while training runs in single precision, so everything numeric in
//! this crate is generic over [`Scalar`].

use num_traits::{Float, NumAssign};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Element type of a [`Tensor`]: `f32` or `f64`.
pub trait Scalar:
    Float + NumAssign + Copy + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Dense N-dimensional array with explicit shape and row-major flat storage.
///
/// Invariants: every dimension is at least 1 and `data.len()` equals the
/// product of the dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("shape must have at least one dimension".into()));
    }
    let mut len = 1usize;
    for (axis, &dim) in shape.iter().enumerate() {
        if dim == 0 {
            return Err(Error::InvalidShape(format!(
                "dimension {axis} of shape {shape:?} is zero; all dimensions must be >= 1"
            )));
        }
        len = len
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidShape(format!("shape {shape:?} overflows usize")))?;
    }
    Ok(len)
}

impl<T: Scalar> Tensor<T> {
    /// Tensor of the given shape with every element set to `fill`.
    pub fn new(shape: &[usize], fill: T) -> Result<Self> {
        let len = checked_len(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![fill; len],
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::new(shape, T::zero())
    }

    /// Wraps an existing flat buffer; `data.len()` must match the shape.
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let len = checked_len(shape)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} implies {len} elements but buffer holds {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform samples in `[lo, hi)`, drawn in row-major order.
    pub fn uniform(rng: &mut Rng, shape: &[usize], lo: f64, hi: f64) -> Result<Self> {
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidRange(format!(
                "uniform bounds must satisfy lo < hi, got [{lo}, {hi})"
            )));
        }
        let len = checked_len(shape)?;
        let data = (0..len).map(|_| T::from_f64(rng.uniform(lo, hi))).collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Gaussian samples from N(mean, std^2), drawn in row-major order.
    pub fn gaussian(rng: &mut Rng, shape: &[usize], mean: f64, std: f64) -> Result<Self> {
        if std < 0.0 || !std.is_finite() {
            return Err(Error::InvalidRange(format!(
                "gaussian std must be finite and >= 0, got {std}"
            )));
        }
        let len = checked_len(shape)?;
        let data = (0..len)
            .map(|_| T::from_f64(rng.gaussian(mean, std)))
            .collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Row-major linear offset of a multi-index.
    #[inline]
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut off = 0;
        for (i, (&idx, &dim)) in index.iter().zip(&self.shape).enumerate() {
            debug_assert!(idx < dim, "index {idx} out of bounds for axis {i} (dim {dim})");
            off = off * dim + idx;
        }
        off
    }

    /// Inverse of [`Tensor::offset`]: multi-index of a linear offset.
    pub fn unravel(&self, mut offset: usize) -> Vec<usize> {
        debug_assert!(offset < self.len());
        let mut index = vec![0; self.shape.len()];
        for (i, &dim) in self.shape.iter().enumerate().rev() {
            index[i] = offset % dim;
            offset /= dim;
        }
        index
    }

    /// Reinterprets the flat data under a new shape of equal length.
    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let len = checked_len(shape)?;
        if len != self.data.len() {
            return Err(Error::shape_mismatch("reshape", shape, &self.shape));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise conversion to another scalar type (used to move between
    /// training precision and gradient-check precision).
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_fills_every_element() {
        let t = Tensor::<f32>::new(&[2, 2], 0.0).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
        assert_eq!(t.data(), &[0.0; 4]);

        let t = Tensor::<f32>::new(&[3], 1.5).unwrap();
        assert_eq!(t.data(), &[1.5, 1.5, 1.5]);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let err = Tensor::<f32>::new(&[2, 0], 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidShape(_)));
        assert!(Tensor::<f32>::new(&[], 0.0).is_err());
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::<f32>::from_vec(&[2, 2], vec![0.0; 3]).is_err());
        let t = Tensor::<f32>::from_vec(&[2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn offset_is_row_major() {
        let t = Tensor::<f32>::zeros(&[2, 3, 4]).unwrap();
        assert_eq!(t.offset(&[0, 0, 0]), 0);
        assert_eq!(t.offset(&[0, 0, 3]), 3);
        assert_eq!(t.offset(&[0, 1, 0]), 4);
        assert_eq!(t.offset(&[1, 0, 0]), 12);
        assert_eq!(t.offset(&[1, 2, 3]), 23);
    }

    #[test]
    fn uniform_rejects_bad_bounds() {
        let mut rng = Rng::new(1);
        assert!(Tensor::<f32>::uniform(&mut rng, &[4], 1.0, 1.0).is_err());
        assert!(Tensor::<f32>::uniform(&mut rng, &[4], 2.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_rejects_negative_std() {
        let mut rng = Rng::new(1);
        assert!(Tensor::<f64>::gaussian(&mut rng, &[4], 0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_zero_std_is_constant() {
        let mut rng = Rng::new(9);
        let t = Tensor::<f64>::gaussian(&mut rng, &[8], 2.5, 0.0).unwrap();
        assert!(t.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::<f32>::from_vec(&[2, 3], (0..6).map(|v| v as f32).collect()).unwrap();
        let r = t.clone().reshape(&[6]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.reshape(&[4]).is_err());
    }
}
