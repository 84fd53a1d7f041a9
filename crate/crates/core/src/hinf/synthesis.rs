use nalgebra::{DMatrix, SymmetricEigen};

use super::norm::hinf_norm;
use super::GeneralizedPlant;
use crate::error::{CcdError, Result};
use crate::linalg::{self, block, inverse, orth_complement, sigma_max_real, symmetrize};
use crate::lti::StateSpaceModel;
use crate::riccati::{solve_hamiltonian, DEFAULT_AXIS_TOL};
use crate::scalar::Real;

/// Bisection interval for the closed-loop norm bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRange<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Default for GammaRange<T> {
    fn default() -> Self {
        Self { lower: T::lit(1e-3), upper: T::lit(1e6) }
    }
}

/// Treatment of plant poles on the imaginary axis (rigid-body modes),
/// which leave the filter Riccati equation without a stabilizing solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization<T> {
    /// Synthesize against an extra exogenous disturbance `delta * d` at the
    /// plant input. The `r -> z` loop is a sub-block of the augmented one,
    /// so its norm stays below the certified gamma.
    InputDisturbance(T),
    /// Shift plant poles left by `eps` (rad/s) for synthesis only.
    PoleShift(T),
}

impl<T: Real> Regularization<T> {
    fn apply(&self, p: &GeneralizedPlant<T>) -> GeneralizedPlant<T> {
        match *self {
            Regularization::InputDisturbance(delta) => p.with_input_disturbance(delta),
            Regularization::PoleShift(eps) => p.with_plant_shift(eps),
        }
    }
}

/// Default plant-input disturbance gain (plant input units).
pub const DEFAULT_DISTURBANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions<T> {
    pub gamma_range: GammaRange<T>,
    /// Relative width at which the bisection stops.
    pub tol_gamma: T,
    /// Applied only when the plant has poles with `Re >= -axis_margin`.
    pub regularization: Regularization<T>,
    pub axis_margin: T,
    /// Relative distance from the imaginary axis below which Hamiltonian
    /// eigenvalues count as imaginary.
    pub axis_tol: T,
}

impl<T: Real> Default for SynthesisOptions<T> {
    fn default() -> Self {
        Self {
            gamma_range: GammaRange::default(),
            tol_gamma: T::lit(1e-3),
            regularization: Regularization::InputDisturbance(T::lit(DEFAULT_DISTURBANCE)),
            axis_margin: T::lit(1e-6),
            axis_tol: T::lit(DEFAULT_AXIS_TOL),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult<T: Real> {
    pub controller: StateSpaceModel<T>,
    /// Smallest feasible bound found by bisection.
    pub gamma: T,
    /// `||[W_S S; W_KS KS; W_T T]||_inf` of the loop closed around the unshifted plant.
    pub stack_norm: T,
    pub internally_stable: bool,
    /// Whether the regularization had to be applied.
    pub regularized: bool,
}

/// Synthesize with default options and the given interval and tolerance.
pub fn synthesize<T: Real>(p: &GeneralizedPlant<T>, gamma_range: GammaRange<T>, tol_gamma: T) -> Result<SynthesisResult<T>> {
    synthesize_with(p, &SynthesisOptions { gamma_range, tol_gamma, ..SynthesisOptions::default() })
}

pub fn synthesize_with<T: Real>(p: &GeneralizedPlant<T>, opts: &SynthesisOptions<T>) -> Result<SynthesisResult<T>> {
    let GammaRange { lower, upper } = opts.gamma_range;
    if !(lower > T::zero()) || !(upper > lower) {
        return Err(CcdError::InvalidParams("gamma range must satisfy 0 < lower < upper".into()));
    }
    let infeasible = || CcdError::Infeasible { lower: lower.as_f64(), upper: upper.as_f64() };

    let (std, regularized) = design_problem(p, opts)?;

    let mut lo = lower.max(std.gamma_floor());
    let mut best = std.try_gamma(upper, opts.axis_tol).ok_or_else(infeasible)?;
    let mut hi = upper;
    if lo >= hi {
        return Err(infeasible());
    }
    if let Some(k) = std.try_gamma(lo, opts.axis_tol) {
        best = k;
        hi = lo;
    }
    while hi / lo > T::one() + opts.tol_gamma {
        let mid = (lo * hi).sqrt();
        match std.try_gamma(mid, opts.axis_tol) {
            Some(k) => {
                best = k;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    let controller = std.restore(&best)?;

    let closed = p.close_loop(&controller)?;
    let internally_stable = closed.is_stable(T::zero())?;
    if !internally_stable {
        return Err(CcdError::Numerical("controller does not stabilize the unregularized plant".into()));
    }
    let stack_norm = hinf_norm(&closed, opts.tol_gamma * T::lit(0.1))?;
    Ok(SynthesisResult { controller, gamma: hi, stack_norm, internally_stable, regularized })
}

fn design_problem<T: Real>(p: &GeneralizedPlant<T>, opts: &SynthesisOptions<T>) -> Result<(Normalized<T>, bool)> {
    let plant_a = p.realization.a().view((0, 0), (p.plant_order, p.plant_order)).into_owned();
    let regularized = linalg::eigenvalues(&plant_a)?.iter().any(|z| z.re >= -opts.axis_margin);
    let design = if regularized { opts.regularization.apply(p) } else { p.clone() };
    Ok((Normalized::new(&design)?, regularized))
}

/// Whether a stabilizing central controller exists at level `gamma`.
pub fn gamma_feasible<T: Real>(p: &GeneralizedPlant<T>, gamma: T, opts: &SynthesisOptions<T>) -> Result<bool> {
    let (std, _) = design_problem(p, opts)?;
    Ok(std.try_gamma(gamma, opts.axis_tol).is_some())
}

/// Generalized plant rescaled to `D12 = [0; I]`, `D21 = [0, I]`, `D22 = 0`.
struct Normalized<T: Real> {
    a: DMatrix<T>,
    b1: DMatrix<T>,
    b2: DMatrix<T>,
    c1: DMatrix<T>,
    c2: DMatrix<T>,
    d11: DMatrix<T>,
    d22: DMatrix<T>,
    /// `u = su * u~`
    su: DMatrix<T>,
    /// `y~ = sy * y`
    sy: DMatrix<T>,
    m1: usize,
    m2: usize,
    p1: usize,
    p2: usize,
}

impl<T: Real> Normalized<T> {
    fn new(p: &GeneralizedPlant<T>) -> Result<Self> {
        let sys = &p.realization;
        let (m2, p2) = (p.n_ctrl, p.n_meas);
        let (m1, p1) = (sys.n_inputs() - m2, sys.n_outputs() - p2);
        if p1 < m2 || m1 < p2 {
            return Err(CcdError::Dimension("need p1 >= m2 and m1 >= p2".into()));
        }
        let b = sys.b();
        let c = sys.c();
        let d = sys.d();
        let b1 = b.columns(0, m1).into_owned();
        let b2 = b.columns(m1, m2).into_owned();
        let c1 = c.rows(0, p1).into_owned();
        let c2 = c.rows(p1, p2).into_owned();
        let d11 = d.view((0, 0), (p1, m1)).into_owned();
        let d12 = d.view((0, m1), (p1, m2)).into_owned();
        let d21 = d.view((p1, 0), (p2, m1)).into_owned();
        let d22 = d.view((p1, m1), (p2, m2)).into_owned();

        let rank_tol = T::lit(1e3) * T::machine_eps();
        // D12 = U S V^T with U p1 x m2
        let svd12 = d12.clone().svd(true, true);
        let (u12, s12, vt12) = ordered_svd(svd12);
        if s12.iter().any(|&s| s <= rank_tol * s12[0]) || s12.is_empty() && m2 > 0 {
            return Err(CcdError::InvalidMatrix("z-to-u feedthrough lacks full column rank".into()));
        }
        let theta_z = block(&[&[&orth_complement(&u12), &u12]]);
        let su = vt12.transpose() * DMatrix::from_diagonal(&s12.map(|s| T::one() / s));
        // D21 = U S V^T with V m1 x p2
        let svd21 = d21.clone().svd(true, true);
        let (u21, s21, vt21) = ordered_svd(svd21);
        if s21.iter().any(|&s| s <= rank_tol * s21[0]) || s21.is_empty() && p2 > 0 {
            return Err(CcdError::InvalidMatrix("e-to-w feedthrough lacks full row rank".into()));
        }
        let v21 = vt21.transpose();
        let theta_w = block(&[&[&orth_complement(&v21), &v21]]);
        let sy = DMatrix::from_diagonal(&s21.map(|s| T::one() / s)) * u21.transpose();

        Ok(Self {
            a: sys.a().clone(),
            b1: &b1 * &theta_w,
            b2: &b2 * &su,
            c1: theta_z.transpose() * &c1,
            c2: &sy * &c2,
            d11: theta_z.transpose() * &d11 * &theta_w,
            d22: &sy * &d22 * &su,
            su,
            sy,
            m1,
            m2,
            p1,
            p2,
        })
    }

    fn d11_blocks(&self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        let (r0, c0) = (self.p1 - self.m2, self.m1 - self.p2);
        let d = &self.d11;
        (
            d.view((0, 0), (r0, c0)).into_owned(),
            d.view((0, c0), (r0, self.p2)).into_owned(),
            d.view((r0, 0), (self.m2, c0)).into_owned(),
            d.view((r0, c0), (self.m2, self.p2)).into_owned(),
        )
    }

    /// Infimum of feasible gamma imposed by the feedthrough alone.
    fn gamma_floor(&self) -> T {
        let (r0, c0) = (self.p1 - self.m2, self.m1 - self.p2);
        let top = self.d11.rows(0, r0).into_owned();
        let left = self.d11.columns(0, c0).into_owned();
        sigma_max_real(&top).max(sigma_max_real(&left))
    }

    /// Central controller for `D22 = 0` at level `gamma`, if one exists.
    fn try_gamma(&self, gamma: T, axis_tol: T) -> Option<StateSpaceModel<T>> {
        let (n, m1, m2, p1, p2) = (self.a.nrows(), self.m1, self.m2, self.p1, self.p2);
        if !(gamma > self.gamma_floor()) {
            return None;
        }
        let g2 = gamma * gamma;
        let a = &self.a;
        let b = block(&[&[&self.b1, &self.b2]]);
        let c = block(&[&[&self.c1], &[&self.c2]]);
        let eye = |k: usize| DMatrix::<T>::identity(k, k);
        let zeros = |r: usize, c: usize| DMatrix::<T>::zeros(r, c);

        let d12 = block(&[&[&zeros(p1 - m2, m2)], &[&eye(m2)]]);
        let d21 = block(&[&[&zeros(p2, m1 - p2), &eye(p2)]]);
        let d1_ = block(&[&[&self.d11, &d12]]);
        let d_1 = block(&[&[&self.d11], &[&d21]]);
        let r = d1_.transpose() * &d1_ - block(&[&[&(eye(m1) * g2), &zeros(m1, m2)], &[&zeros(m2, m1), &zeros(m2, m2)]]);
        let rt = &d_1 * d_1.transpose() - block(&[&[&(eye(p1) * g2), &zeros(p1, p2)], &[&zeros(p2, p1), &zeros(p2, p2)]]);
        let rinv = inverse(&r)?;
        let rtinv = inverse(&rt)?;

        let hx = block(&[&[a, &zeros(n, n)], &[&(-(self.c1.transpose() * &self.c1)), &(-a.transpose())]])
            - block(&[&[&b], &[&(-(self.c1.transpose() * &d1_))]])
                * &rinv
                * block(&[&[&(d1_.transpose() * &self.c1), &b.transpose()]]);
        let hy = block(&[&[&a.transpose(), &zeros(n, n)], &[&(-(&self.b1 * self.b1.transpose())), &(-a)]])
            - block(&[&[&c.transpose()], &[&(-(&self.b1 * d_1.transpose()))]])
                * &rtinv
                * block(&[&[&(&d_1 * self.b1.transpose()), &c]]);

        let x = solve_hamiltonian(&hx, axis_tol).ok()?;
        let y = solve_hamiltonian(&hy, axis_tol).ok()?;
        let psd_tol = |m: &DMatrix<T>| -T::lit(1e-8) * m.amax().max(T::one());
        if linalg::min_symmetric_eigenvalue(&x) < psd_tol(&x) || linalg::min_symmetric_eigenvalue(&y) < psd_tol(&y) {
            return None;
        }
        let rho = linalg::spectral_radius(&(&x * &y)).ok()?;
        if !(rho < g2) {
            return None;
        }

        let f = -(&rinv * (d1_.transpose() * &self.c1 + b.transpose() * &x));
        let l = -((&self.b1 * d_1.transpose() + &y * c.transpose()) * &rtinv);
        let f12 = f.rows(m1 - p2, p2).into_owned();
        let f2 = f.rows(m1, m2).into_owned();
        let l12 = l.columns(p1 - m2, m2).into_owned();
        let l2 = l.columns(p1, p2).into_owned();

        let (d1111, d1112, d1121, d1122) = self.d11_blocks();
        let inner_r = inverse(&(eye(p1 - m2) * g2 - &d1111 * d1111.transpose()))?;
        let inner_c = inverse(&(eye(m1 - p2) * g2 - d1111.transpose() * &d1111))?;
        let dk11 = -(&d1121 * d1111.transpose() * &inner_r * &d1112) - &d1122;
        let dk12 = cholesky_lower(&(eye(m2) - &d1121 * &inner_c * d1121.transpose()))?;
        let dk21 = cholesky_lower(&(eye(p2) - d1112.transpose() * &inner_r * &d1112))?.transpose();
        let dk12_inv = inverse(&dk12)?;
        let dk21_inv = inverse(&dk21)?;

        let z = inverse(&(eye(n) - &y * &x / g2))?;
        let bk2 = &z * (&self.b2 + &l12) * &dk12;
        let ck2 = -(&dk21 * (&self.c2 + &f12));
        let bk1 = -(&z * &l2) + &bk2 * &dk12_inv * &dk11;
        let ck1 = &f2 + &dk11 * &dk21_inv * &ck2;
        let ak = a + &b * &f + &bk1 * &dk21_inv * &ck2;
        let k = StateSpaceModel::new(ak, bk1, ck1, dk11).ok()?;
        if [k.a(), k.b(), k.c(), k.d()].iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return None;
        }

        // internal stability of the normalized loop
        let acl = block(&[
            &[&(a + &self.b2 * k.d() * &self.c2), &(&self.b2 * k.c())],
            &[&(k.b() * &self.c2), k.a()],
        ]);
        if !(linalg::spectral_abscissa(&acl).ok()? < T::zero()) {
            return None;
        }
        Some(k)
    }

    /// Undo the `D22` removal and the input/output scalings.
    fn restore(&self, k0: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
        let (ak, bk, ck, dk) = (k0.a(), k0.b(), k0.c(), k0.d());
        let m2 = self.m2;
        // u~ = K0 (y~ - D22 u~)
        let e = inverse(&(DMatrix::identity(m2, m2) + dk * &self.d22)).ok_or(CcdError::AlgebraicLoop)?;
        let c = &e * ck;
        let d = &e * dk;
        let a = ak - bk * &self.d22 * &c;
        let b = bk - bk * &self.d22 * &d;
        StateSpaceModel::new(a, &b * &self.sy, &self.su * &c, &self.su * &d * &self.sy)
    }
}

/// Thin SVD with singular values in descending order.
fn ordered_svd<T: Real>(svd: nalgebra::SVD<T, nalgebra::Dyn, nalgebra::Dyn>) -> (DMatrix<T>, nalgebra::DVector<T>, DMatrix<T>) {
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite singular values"));
    let u = DMatrix::from_fn(u.nrows(), idx.len(), |r, c| u[(r, idx[c])]);
    let vt = DMatrix::from_fn(idx.len(), vt.ncols(), |r, c| vt[(idx[r], c)]);
    let s = nalgebra::DVector::from_fn(idx.len(), |i, _| s[idx[i]]);
    (u, s, vt)
}

fn cholesky_lower<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    let sym = symmetrize(m);
    if let Some(ch) = sym.clone().cholesky() {
        return Some(ch.l());
    }
    // semidefinite edge: fall back on the eigen square root
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| l <= T::zero()) {
        return None;
    }
    Some(&eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt())))
}
