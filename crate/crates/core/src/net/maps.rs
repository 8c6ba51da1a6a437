use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::tensor::Tensor;

/// Dimension of the per-pixel similarity vector.
pub const SIM_DIM: usize = 4;

/// Stride-4 network outputs: text scores, kernel scores (both `1×h×w` in
/// `[0,1]`) and the `4×h×w` similarity field.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionMaps<T = f32> {
    pub text: Tensor<T>,
    pub kernel: Tensor<T>,
    pub sim: Tensor<T>,
}

impl<T: Scalar> PredictionMaps<T> {
    pub fn new(text: Tensor<T>, kernel: Tensor<T>, sim: Tensor<T>) -> Result<Self> {
        let (ct, h, w) = text.chw()?;
        let (ck, hk, wk) = kernel.chw()?;
        let (cs, hs, ws) = sim.chw()?;
        if ct != 1 || ck != 1 || cs != SIM_DIM || (hk, wk) != (h, w) || (hs, ws) != (h, w) {
            return Err(Error::Shape(format!(
                "prediction maps {:?} / {:?} / {:?}",
                text.shape(),
                kernel.shape(),
                sim.shape()
            )));
        }
        Ok(Self { text, kernel, sim })
    }

    /// Split a `6×h×w` logit tensor; channels 0 and 1 are squashed.
    pub fn from_logits(logits: &Tensor<T>) -> Result<Self> {
        let squashed = super::squash_channels(logits, 2);
        Self::from_stacked(&squashed)
    }

    /// Inverse of [`Self::stacked`]: channels are `[text, kernel, sim…]`.
    pub fn from_stacked(t: &Tensor<T>) -> Result<Self> {
        let (c, h, w) = t.chw()?;
        if c != 2 + SIM_DIM {
            return Err(Error::Shape(format!("expected {}×h×w maps, got {:?}", 2 + SIM_DIM, t.shape())));
        }
        let plane = h * w;
        let d = t.data();
        Self::new(
            Tensor::new(vec![1, h, w], d[..plane].to_vec())?,
            Tensor::new(vec![1, h, w], d[plane..2 * plane].to_vec())?,
            Tensor::new(vec![SIM_DIM, h, w], d[2 * plane..].to_vec())?,
        )
    }

    pub fn stacked(&self) -> Tensor<T> {
        let (h, w) = self.dims();
        let mut data = Vec::with_capacity((2 + SIM_DIM) * h * w);
        data.extend_from_slice(self.text.data());
        data.extend_from_slice(self.kernel.data());
        data.extend_from_slice(self.sim.data());
        Tensor::new(vec![2 + SIM_DIM, h, w], data).expect("consistent maps")
    }

    pub fn dims(&self) -> (usize, usize) {
        let s = self.text.shape();
        (s[1], s[2])
    }

    /// Similarity vector at flat pixel index `i`.
    #[inline]
    pub fn sim_at(&self, i: usize) -> [T; SIM_DIM] {
        let plane = self.text.len();
        let d = self.sim.data();
        std::array::from_fn(|c| d[c * plane + i])
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |t: &Tensor<T>| t.data().iter().all(|&v| v >= T::zero() && v <= T::one());
        if !in_unit(&self.text) || !in_unit(&self.kernel) {
            return Err(Error::InvalidArgument("scores outside [0,1]".into()));
        }
        if !self.sim.all_finite() {
            return Err(Error::InvalidArgument("non-finite similarity vectors".into()));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> PredictionMaps<U> {
        PredictionMaps { text: self.text.cast(), kernel: self.kernel.cast(), sim: self.sim.cast() }
    }
}
