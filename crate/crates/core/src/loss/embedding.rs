use crate::error::{Error, Result};
use crate::gt::GroundTruth;
use crate::net::SIM_DIM;
use crate::num::Scalar;
use crate::tensor::Tensor;

type Vector<T> = [T; SIM_DIM];

/// Flat pixel indices of one instance's text region and kernel.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstancePixels {
    pub text: Vec<usize>,
    pub kernel: Vec<usize>,
}

impl InstancePixels {
    /// Per-instance pixel sets with ignore pixels removed. Instances left
    /// without text or kernel pixels do not participate.
    pub fn from_ground_truth(gt: &GroundTruth) -> Vec<Self> {
        let mut out = vec![Self::default(); gt.n_instances];
        for (i, ((&t, &k), &ig)) in gt
            .instance_labels
            .iter()
            .zip(&gt.kernel_labels)
            .zip(&gt.ignore)
            .enumerate()
        {
            if ig {
                continue;
            }
            if t > 0 {
                out[t as usize - 1].text.push(i);
            }
            if k > 0 {
                out[k as usize - 1].kernel.push(i);
            }
        }
        out.retain(|p| !p.text.is_empty() && !p.kernel.is_empty());
        out
    }
}

fn check_field<T: Scalar>(sim: &Tensor<T>) -> Result<usize> {
    let (c, h, w) = sim.chw()?;
    if c != SIM_DIM {
        return Err(Error::Shape(format!("similarity field must have {SIM_DIM} channels, got {:?}", sim.shape())));
    }
    Ok(h * w)
}

#[inline]
fn vec_at<T: Scalar>(sim: &[T], plane: usize, i: usize) -> Vector<T> {
    std::array::from_fn(|c| sim[c * plane + i])
}

#[inline]
fn norm<T: Scalar>(v: &Vector<T>) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[inline]
fn sub<T: Scalar>(a: &Vector<T>, b: &Vector<T>) -> Vector<T> {
    std::array::from_fn(|c| a[c] - b[c])
}

/// Mean similarity vector over a kernel's pixels.
pub fn kernel_mean<T: Scalar>(sim: &Tensor<T>, pixels: &[usize]) -> Result<Vector<T>> {
    let plane = check_field(sim)?;
    if pixels.is_empty() {
        return Err(Error::InvalidArgument("kernel has no pixels".into()));
    }
    let d = sim.data();
    let mut acc = [T::zero(); SIM_DIM];
    for &p in pixels {
        for (c, a) in acc.iter_mut().enumerate() {
            *a += d[c * plane + p];
        }
    }
    let n = T::from_usize_lossy(pixels.len());
    Ok(acc.map(|a| a / n))
}

/// Spread a gradient w.r.t. a kernel mean evenly over the kernel pixels.
fn scatter_mean_grad<T: Scalar>(grad: &mut [T], plane: usize, kernel: &[usize], g_mean: &Vector<T>) {
    let inv = T::one() / T::from_usize_lossy(kernel.len());
    for &q in kernel {
        for c in 0..SIM_DIM {
            grad[c * plane + q] += g_mean[c] * inv;
        }
    }
}

/// Aggregation loss: mean over instances of the mean over text pixels of
/// `ln(1 + max(‖F(p) − G(K_i)‖ − δ, 0)²)`.
///
/// The gradient includes the path through the kernel mean. At the hinge the
/// zero branch is taken.
pub fn loss_agg<T: Scalar>(sim: &Tensor<T>, instances: &[InstancePixels], delta: T) -> Result<(T, Tensor<T>)> {
    let plane = check_field(sim)?;
    let mut grad = Tensor::zeros(sim.shape());
    if instances.is_empty() {
        return Ok((T::zero(), grad));
    }
    let d = sim.data();
    let n = T::from_usize_lossy(instances.len());
    let mut value = T::zero();
    let g = grad.data_mut();
    for inst in instances {
        if inst.text.is_empty() {
            return Err(Error::InvalidArgument("instance without text pixels".into()));
        }
        let mean = kernel_mean(sim, &inst.kernel)?;
        let scale = T::one() / (n * T::from_usize_lossy(inst.text.len()));
        let mut inst_sum = T::zero();
        let mut g_mean = [T::zero(); SIM_DIM];
        for &p in &inst.text {
            let diff = sub(&vec_at(d, plane, p), &mean);
            let r = norm(&diff);
            let excess = r - delta;
            if excess > T::zero() {
                let dist = excess * excess;
                inst_sum += dist.ln_1p();
                // d/dF(p) ln(1 + (r-δ)²) = 2(r-δ)/(1+(r-δ)²) · diff/r
                let coef = scale * (excess + excess) / ((T::one() + dist) * r);
                for c in 0..SIM_DIM {
                    let gc = coef * diff[c];
                    g[c * plane + p] += gc;
                    g_mean[c] -= gc;
                }
            }
        }
        value += inst_sum / T::from_usize_lossy(inst.text.len());
        scatter_mean_grad(g, plane, &inst.kernel, &g_mean);
    }
    Ok((value / n, grad))
}

/// Discrimination loss over ordered kernel pairs:
/// `1/(N(N−1)) Σ ln(1 + max(δ − ‖G_i − G_j‖, 0)²)`; zero when `N ≤ 1`.
///
/// Coincident means contribute to the value but have no defined push
/// direction; their gradient is zero.
pub fn loss_dis<T: Scalar>(sim: &Tensor<T>, instances: &[InstancePixels], delta: T) -> Result<(T, Tensor<T>)> {
    let plane = check_field(sim)?;
    let mut grad = Tensor::zeros(sim.shape());
    let n = instances.len();
    if n <= 1 {
        return Ok((T::zero(), grad));
    }
    let means = instances
        .iter()
        .map(|inst| kernel_mean(sim, &inst.kernel))
        .collect::<Result<Vec<_>>>()?;
    let scale = T::one() / T::from_usize_lossy(n * (n - 1));
    let mut value = T::zero();
    let mut g_means = vec![[T::zero(); SIM_DIM]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = sub(&means[i], &means[j]);
            let s = norm(&diff);
            let gap = delta - s;
            if gap > T::zero() {
                let dist = gap * gap;
                value += dist.ln_1p();
                if s > T::zero() {
                    // d/dG_i ln(1 + (δ-s)²) = -2(δ-s)/(1+(δ-s)²) · diff/s
                    let coef = scale * (gap + gap) / ((T::one() + dist) * s);
                    for c in 0..SIM_DIM {
                        g_means[i][c] -= coef * diff[c];
                        g_means[j][c] += coef * diff[c];
                    }
                }
            }
        }
    }
    let g = grad.data_mut();
    for (inst, gm) in instances.iter().zip(&g_means) {
        scatter_mean_grad(g, plane, &inst.kernel, gm);
    }
    Ok((value * scale, grad))
}
