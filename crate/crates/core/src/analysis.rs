//! Closed-loop sensitivity analysis: the -3 dB bandwidth and the
//! frozen-controller bandwidth gradient with respect to plant parameters.

use nalgebra::Complex;

use crate::error::{CcdError, Result};
use crate::linalg::{self, sigma_max, top_singular, CMatrix, CVector};
use crate::lti::StateSpaceModel;
use crate::plants::PlantFamily;
use crate::scalar::Real;

/// Bandwidth level: `sigma_max(S) = 1/sqrt(2)`.
pub fn bandwidth_level<T: Real>() -> T {
    T::lit(std::f64::consts::FRAC_1_SQRT_2)
}

/// Relative gap below which `sigma_max` counts as repeated.
pub const TOL_GAP: f64 = 1e-6;
pub const TOL_BW: f64 = 1e-6;
/// Lower end of the first-crossing search (rad/s).
pub const SEARCH_START: f64 = 1e-2;
const SCAN_POINTS_PER_DECADE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthResult<T> {
    pub omega_b: T,
    /// `sigma_max(S(j omega_lo)) < 1/sqrt(2) <= sigma_max(S(j omega_hi))`.
    pub omega_lo: T,
    pub omega_hi: T,
}

/// Lowest frequency in `[lower, upper]` where `sigma_max(S)` reaches
/// `1/sqrt(2)`: ascending log scan, then bisection to `tol_bw`.
pub fn bandwidth<T: Real>(s: &StateSpaceModel<T>, lower: T, upper: T, tol_bw: T) -> Result<BandwidthResult<T>> {
    if !s.is_stable(T::zero())? {
        return Err(CcdError::Unstable);
    }
    let level = bandwidth_level::<T>();
    let gain = |w: T| -> Result<T> { Ok(sigma_max(&s.eval_freq(w)?)) };
    if gain(lower)? >= level {
        return Err(CcdError::DegenerateStart { omega: lower.as_f64() });
    }
    let decades = (upper / lower).log10().max(T::zero());
    let n = ((decades * T::lit(SCAN_POINTS_PER_DECADE as f64)).ceil().as_f64() as usize).max(1) + 1;
    let grid = linalg::logspace(lower, upper, n);
    let mut lo = lower;
    let mut hi = None;
    for &w in grid.iter().skip(1) {
        if gain(w)? >= level {
            hi = Some(w);
            break;
        }
        lo = w;
    }
    let mut hi = hi.ok_or(CcdError::NoCrossing { lower: lower.as_f64(), upper: upper.as_f64() })?;
    while hi - lo > tol_bw * lo {
        let mid = (lo * hi).sqrt();
        if gain(mid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BandwidthResult { omega_b: (lo * hi).sqrt(), omega_lo: lo, omega_hi: hi })
}

/// First-order change of the largest singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaGradient<T> {
    pub value: T,
    /// Set when `sigma_max` is repeated to within [`TOL_GAP`].
    pub non_smooth: bool,
}

/// `Re[u1^* dA v1]` for the dominant singular pair of `a`.
pub fn sigma_gradient<T: Real>(a: &CMatrix<T>, da: &CMatrix<T>) -> SigmaGradient<T> {
    let top = top_singular(a);
    SigmaGradient { value: directional(&top.u1, da, &top.v1), non_smooth: repeated(top.sigma1, top.sigma2) }
}

fn directional<T: Real>(u: &CVector<T>, da: &CMatrix<T>, v: &CVector<T>) -> T {
    (u.adjoint() * da * v)[(0, 0)].re
}

fn repeated<T: Real>(s1: T, s2: T) -> bool {
    s1 - s2 <= T::lit(TOL_GAP) * s1
}

/// `S(jw) = (I + G K)^-1` together with `G(jw)` and `K(jw)`.
pub struct LoopPoint<T: Real> {
    pub omega: T,
    pub g: CMatrix<T>,
    pub k: CMatrix<T>,
    pub s: CMatrix<T>,
}

impl<T: Real> LoopPoint<T> {
    pub fn new(g: CMatrix<T>, k: CMatrix<T>, omega: T) -> Result<Self> {
        if g.ncols() != k.nrows() || g.nrows() != k.ncols() {
            return Err(CcdError::Dimension("G and K do not form a loop".into()));
        }
        let p = g.nrows();
        let rd = CMatrix::identity(p, p) + &g * &k;
        let s = linalg::cinverse(&rd).ok_or(CcdError::SingularReturnDifference { omega: omega.as_f64() })?;
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CcdError::SingularReturnDifference { omega: omega.as_f64() });
        }
        Ok(Self { omega, g, k, s })
    }

    pub fn eval(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>, omega: T) -> Result<Self> {
        Self::new(g.eval_freq(omega)?, k.eval_freq(omega)?, omega)
    }

    /// `-S dG K S`.
    pub fn ds_dtheta(&self, dg: &CMatrix<T>) -> CMatrix<T> {
        -(&self.s * dg * &self.k * &self.s)
    }

    /// `-S (dG K + G dK) S` for frequency derivatives `dg`, `dk`.
    pub fn ds_domega(&self, dg: &CMatrix<T>, dk: &CMatrix<T>) -> CMatrix<T> {
        -(&self.s * (dg * &self.k + &self.g * dk) * &self.s)
    }
}

/// `dS/dtheta_i` at `omega` for a plant-response derivative `dg`.
pub fn ds_dtheta<T: Real>(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>, omega: T, dg: &CMatrix<T>) -> Result<CMatrix<T>> {
    Ok(LoopPoint::eval(g, k, omega)?.ds_dtheta(dg))
}

/// `dS(jw)/dw` with `dG/dw = -j C (jwI - A)^-2 B` and likewise for `K`.
pub fn ds_domega<T: Real>(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>, omega: T) -> Result<CMatrix<T>> {
    let (gv, dg) = g.eval_with_derivative(omega)?;
    let (kv, dk) = k.eval_with_derivative(omega)?;
    Ok(LoopPoint::new(gv, kv, omega)?.ds_domega(&dg, &dk))
}

/// Singular vectors and partial derivatives behind a bandwidth gradient.
#[derive(Debug, Clone)]
pub struct GradientWorkspace<T: Real> {
    pub u1: CVector<T>,
    pub v1: CVector<T>,
    pub sigma: T,
    /// `d sigma_max(S) / d theta_i`.
    pub partials: Vec<T>,
    pub dnorm_domega: T,
    pub non_smooth: bool,
}

#[derive(Debug, Clone)]
pub struct BandwidthGradient<T: Real> {
    /// `d omega_b / d theta` (rad/s per parameter unit).
    pub gradient: Vec<T>,
    pub workspace: GradientWorkspace<T>,
}

/// Implicit-function gradient of the crossing `sigma_max(S(j wb; theta)) = 1/sqrt(2)`
/// with the controller held fixed.
pub fn dwb_dtheta<T: Real, F: PlantFamily<T> + ?Sized>(
    family: &F,
    theta: &[T],
    k: &StateSpaceModel<T>,
    wb: T,
) -> Result<BandwidthGradient<T>> {
    let g = family.state_space(theta)?;
    let (gv, dgw) = g.eval_with_derivative(wb)?;
    let (kv, dkw) = k.eval_with_derivative(wb)?;
    let point = LoopPoint::new(gv, kv, wb)?;
    let top = top_singular(&point.s);
    let dnorm_domega = directional(&top.u1, &point.ds_domega(&dgw, &dkw), &top.v1);
    if !(dnorm_domega.abs() * wb > T::lit(1e-9) * top.sigma1) {
        return Err(CcdError::FlatCrossing { slope: dnorm_domega.as_f64() });
    }
    let partials: Vec<T> = family
        .response_gradient(theta, wb)?
        .iter()
        .map(|dg| directional(&top.u1, &point.ds_dtheta(dg), &top.v1))
        .collect();
    let gradient = partials.iter().map(|&p| -p / dnorm_domega).collect();
    Ok(BandwidthGradient {
        gradient,
        workspace: GradientWorkspace {
            non_smooth: repeated(top.sigma1, top.sigma2),
            sigma: top.sigma1,
            u1: top.u1,
            v1: top.v1,
            partials,
            dnorm_domega,
        },
    })
}

/// Frequency-domain sensitivity magnitude `sigma_max(S(jw))` on a grid.
pub fn sensitivity_curve<T: Real>(g: &StateSpaceModel<T>, k: &StateSpaceModel<T>, freqs: &[T]) -> Result<Vec<T>> {
    freqs
        .iter()
        .map(|&w| Ok(sigma_max(&LoopPoint::eval(g, k, w)?.s)))
        .collect()
}

/// Convenience: `Complex` zero matrix of the right shape for a static `dG`.
pub fn zero_response<T: Real>(p: usize, m: usize) -> CMatrix<T> {
    CMatrix::from_element(p, m, Complex::new(T::zero(), T::zero()))
}
