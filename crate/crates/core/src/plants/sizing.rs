//! Sequential (plant-first) sizing: the lightest design whose first resonance
//! clears a target, chosen without regard to the controller.

use crate::error::{CcdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SizingResult {
    pub theta: Vec<f64>,
    pub mass: f64,
    /// rad/s
    pub first_resonance: f64,
}

/// Minimize `mass(theta)` subject to `resonance(theta) >= min_resonance`
/// inside the box `[lo, hi]`.
///
/// A tensor grid with `n_grid` points per axis picks the start, then a
/// compass search refines it until the step falls below `tol` (in parameter
/// units). `eval` returns `(mass, first_resonance)`.
pub fn sequential_sizing<F>(eval: F, lo: &[f64], hi: &[f64], min_resonance: f64, n_grid: usize, tol: f64) -> Result<SizingResult>
where
    F: Fn(&[f64]) -> Result<(f64, f64)>,
{
    let k = lo.len();
    if hi.len() != k || k == 0 {
        return Err(CcdError::Dimension("sizing bounds must be nonempty and of equal length".into()));
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a < b)) || n_grid < 2 || !(tol > 0.0) {
        return Err(CcdError::InvalidParams("sizing needs lo < hi, n_grid >= 2 and tol > 0".into()));
    }
    let feasible = |theta: &[f64]| -> Result<Option<(f64, f64)>> {
        let (m, w) = eval(theta)?;
        Ok((w >= min_resonance).then_some((m, w)))
    };

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut index = vec![0usize; k];
    loop {
        let theta: Vec<f64> = (0..k)
            .map(|i| lo[i] + (hi[i] - lo[i]) * index[i] as f64 / (n_grid - 1) as f64)
            .collect();
        if let Some((m, w)) = feasible(&theta)? {
            if best.as_ref().is_none_or(|b| m < b.1) {
                best = Some((theta, m, w));
            }
        }
        let mut axis = 0;
        while axis < k {
            index[axis] += 1;
            if index[axis] < n_grid {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
        if axis == k {
            break;
        }
    }
    let (mut theta, mut mass, mut res) = best.ok_or_else(|| {
        CcdError::InvalidParams(format!("no design in the box reaches a first resonance of {min_resonance} rad/s"))
    })?;

    let mut step: Vec<f64> = (0..k).map(|i| (hi[i] - lo[i]) / (n_grid - 1) as f64).collect();
    while step.iter().any(|&h| h > tol) {
        let mut improved = false;
        for i in 0..k {
            for dir in [-1.0, 1.0] {
                let mut trial = theta.clone();
                trial[i] = (trial[i] + dir * step[i]).clamp(lo[i], hi[i]);
                if trial[i] == theta[i] {
                    continue;
                }
                if let Some((m, w)) = feasible(&trial)? {
                    if m < mass {
                        (theta, mass, res) = (trial, m, w);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|h| *h /= 2.0);
        }
    }
    Ok(SizingResult { theta, mass, first_resonance: res })
}
