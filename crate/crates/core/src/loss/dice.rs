use crate::error::{Error, Result};
use crate::num::Scalar;

/// Dice loss `1 − 2ΣPG / (ΣP² + ΣG²)` over the masked pixels, with its
/// gradient w.r.t. `P` (zero outside the mask). A zero denominator gives
/// value 0 and zero gradient.
pub fn dice_loss<T: Scalar>(pred: &[T], target: &[T], mask: &[bool]) -> Result<(T, Vec<T>)> {
    if pred.len() != target.len() || pred.len() != mask.len() {
        return Err(Error::Shape(format!(
            "dice: pred {}, target {}, mask {}",
            pred.len(),
            target.len(),
            mask.len()
        )));
    }
    // sums are kept in f64: in f32 the rounding over a full map is large
    // enough to push a near-perfect loss below zero
    let (mut inter, mut pp, mut gg) = (0.0f64, 0.0f64, 0.0f64);
    for ((&p, &g), &m) in pred.iter().zip(target).zip(mask) {
        if m {
            let (p, g) = (p.as_f64(), g.as_f64());
            inter += p * g;
            pp += p * p;
            gg += g * g;
        }
    }
    let denom = pp + gg;
    let mut grad = vec![T::zero(); pred.len()];
    if denom == 0.0 {
        return Ok((T::zero(), grad));
    }
    let value = T::lit(1.0 - 2.0 * inter / denom);
    let denom2 = denom * denom;
    for (i, ((&p, &g), &m)) in pred.iter().zip(target).zip(mask).enumerate() {
        if m {
            // d/dp_i [-2a/(b+c)] = -2(g_i(b+c) - 2a p_i)/(b+c)²
            grad[i] = T::lit(-2.0 * (g.as_f64() * denom - 2.0 * inter * p.as_f64()) / denom2);
        }
    }
    Ok((value, grad))
}

/// Online hard example mining: every non-ignored positive plus the
/// `ratio × #positives` highest-scoring non-ignored negatives (ties go to
/// the earlier pixel in scan order). Without positives, every non-ignored
/// pixel is selected.
pub fn ohem_mask<T: Scalar>(scores: &[T], positives: &[bool], ignore: &[bool], ratio: usize) -> Vec<bool> {
    let n_pos = positives.iter().zip(ignore).filter(|(&p, &ig)| p && !ig).count();
    if n_pos == 0 {
        return ignore.iter().map(|&ig| !ig).collect();
    }
    let mut negatives: Vec<usize> = (0..scores.len())
        .filter(|&i| !positives[i] && !ignore[i])
        .collect();
    let keep = (ratio * n_pos).min(negatives.len());
    let order = |&a: &usize, &b: &usize| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    };
    if keep < negatives.len() && keep > 0 {
        negatives.select_nth_unstable_by(keep - 1, order);
    }
    let mut mask: Vec<bool> = positives.iter().zip(ignore).map(|(&p, &ig)| p && !ig).collect();
    for &i in &negatives[..keep] {
        mask[i] = true;
    }
    mask
}
