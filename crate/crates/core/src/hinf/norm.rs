use nalgebra::DMatrix;

use crate::error::{CcdError, Result};
use crate::linalg::{self, block, cabs, sigma_max, sigma_max_real};
use crate::lti::StateSpaceModel;
use crate::scalar::Real;

/// H-infinity norm together with a frequency (rad/s) where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate<T> {
    pub value: T,
    pub omega_peak: T,
}

const MAX_ITER: usize = 60;

/// `sup_w sigma_max(sys(jw))` to relative accuracy `tol`.
pub fn hinf_norm<T: Real>(sys: &StateSpaceModel<T>, tol: T) -> Result<T> {
    Ok(hinf_norm_with_peak(sys, tol)?.value)
}

/// Level-set iteration on the Hamiltonian: every imaginary eigenvalue of
/// `H(gamma)` is a frequency where some singular value equals `gamma`; the
/// lower bound is raised to the gain at the midpoints of those crossings
/// until `H((1 + 2 tol) gamma)` has none.
pub fn hinf_norm_with_peak<T: Real>(sys: &StateSpaceModel<T>, tol: T) -> Result<NormEstimate<T>> {
    let d = sys.d();
    if sys.order() == 0 {
        return Ok(NormEstimate { value: sigma_max_real(d), omega_peak: T::zero() });
    }
    let poles = sys.poles()?;
    if poles.iter().any(|z| z.re >= T::zero()) {
        return Err(CcdError::Unstable);
    }
    let gain = |w: T| -> Result<T> { Ok(sigma_max(&sys.eval_freq(w)?)) };

    let mut best = NormEstimate { value: sigma_max_real(d), omega_peak: T::lit(f64::INFINITY) };
    let consider = |w: T, best: &mut NormEstimate<T>| -> Result<()> {
        let g = gain(w)?;
        if g > best.value {
            *best = NormEstimate { value: g, omega_peak: w };
        }
        Ok(())
    };
    consider(T::zero(), &mut best)?;
    for p in &poles {
        let w = if p.im.abs() > T::zero() { p.im.abs() } else { cabs(*p) };
        consider(w, &mut best)?;
        consider(cabs(*p), &mut best)?;
    }

    let two = T::lit(2.0);
    for _ in 0..MAX_ITER {
        let gamma = best.value * (T::one() + two * tol);
        if gamma <= T::zero() {
            return Ok(best);
        }
        let mut crossings = imaginary_crossings(sys, gamma)?;
        if crossings.is_empty() {
            return Ok(best);
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
        if crossings.len() % 2 == 1 {
            crossings.insert(0, T::zero());
        }
        let before = best.value;
        for pair in crossings.windows(2) {
            let mid = if pair[0] > T::zero() { (pair[0] * pair[1]).sqrt() } else { pair[1] * T::lit(0.5) };
            consider(mid, &mut best)?;
        }
        if best.value <= before {
            // crossings that do not enclose a higher gain: numerical noise
            return Ok(best);
        }
    }
    Ok(best)
}

/// Non-negative frequencies where `H(gamma)` has imaginary eigenvalues.
fn imaginary_crossings<T: Real>(sys: &StateSpaceModel<T>, gamma: T) -> Result<Vec<T>> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let (p, m) = (sys.n_outputs(), sys.n_inputs());
    let g2 = gamma * gamma;
    let r = DMatrix::identity(m, m) * g2 - d.transpose() * d;
    let rinv = linalg::inverse(&r).ok_or_else(|| CcdError::Numerical("gamma at feedthrough norm".into()))?;
    let ae = a + b * &rinv * d.transpose() * c;
    let h = block(&[
        &[&ae, &(b * &rinv * b.transpose())],
        &[&(-(c.transpose() * (DMatrix::identity(p, p) + d * &rinv * d.transpose()) * c)), &(-ae.transpose())],
    ]);
    let eig = linalg::eigenvalues(&h)?;
    let tiny = T::lit(1e-7);
    Ok(eig
        .into_iter()
        .filter(|z| z.im >= T::zero() && z.re.abs() <= tiny * cabs(*z).max(T::one()))
        .map(|z| z.im)
        .collect())
}

/// Peak of `sigma_max` over a log grid, with golden-section refinement
/// around the best grid point. Independent of the Hamiltonian route.
pub fn grid_peak_gain<T: Real>(sys: &StateSpaceModel<T>, lo: T, hi: T, points: usize) -> Result<NormEstimate<T>> {
    let grid = linalg::logspace(lo, hi, points);
    let gain = |w: T| -> Result<T> { Ok(sigma_max(&sys.eval_freq(w)?)) };
    let mut best = NormEstimate { value: gain(T::zero())?, omega_peak: T::zero() };
    let mut idx = None;
    for (i, &w) in grid.iter().enumerate() {
        let g = gain(w)?;
        if g > best.value {
            best = NormEstimate { value: g, omega_peak: w };
            idx = Some(i);
        }
    }
    if let Some(i) = idx {
        let mut l = grid[i.saturating_sub(1)].ln();
        let mut u = grid[(i + 1).min(grid.len() - 1)].ln();
        let phi = T::lit(0.618_033_988_749_894_9);
        for _ in 0..80 {
            let x1 = u - phi * (u - l);
            let x2 = l + phi * (u - l);
            if gain(x1.exp())? >= gain(x2.exp())? {
                u = x2;
            } else {
                l = x1;
            }
        }
        let w = ((l + u) * T::lit(0.5)).exp();
        let g = gain(w)?;
        if g > best.value {
            best = NormEstimate { value: g, omega_peak: w };
        }
    }
    best.value = best.value.max(sigma_max_real(sys.d()));
    Ok(best)
}
