//! Continuous-time LTI state-space models.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CcdError, Result};
use crate::linalg::{self, block, to_complex, CMatrix};
use crate::plants::SecondOrderPlant;
use crate::scalar::Real;

/// State-space realization `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel<T: Real> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

impl<T: Real> StateSpaceModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(CcdError::Dimension(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(CcdError::Dimension(format!(
                "B is {}x{}, C is {}x{}, but A has {n} states",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(CcdError::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        let finite = [&a, &b, &c, &d].iter().all(|m| m.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(CcdError::InvalidMatrix("non-finite entry in realization".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain `y = D u`.
    pub fn static_gain(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self { a: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, m), c: DMatrix::zeros(p, 0), d }
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn poles(&self) -> Result<Vec<Complex<T>>> {
        linalg::eigenvalues(&self.a)
    }

    /// True when every pole has real part below `-margin`.
    pub fn is_stable(&self, margin: T) -> Result<bool> {
        if self.order() == 0 {
            return Ok(true);
        }
        Ok(linalg::spectral_abscissa(&self.a)? < -margin)
    }

    /// Transfer matrix `C (sI - A)^-1 B + D` at a complex point `s`.
    pub fn eval(&self, s: Complex<T>) -> Option<CMatrix<T>> {
        let d = to_complex(&self.d);
        if self.order() == 0 {
            return Some(d);
        }
        let n = self.order();
        let mut resolvent = to_complex(&self.a).map(|z| -z);
        for i in 0..n {
            resolvent[(i, i)] += s;
        }
        let x = resolvent.lu().solve(&to_complex(&self.b))?;
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        Some(to_complex(&self.c) * x + d)
    }

    /// Response at angular frequency `omega` (rad/s).
    pub fn eval_freq(&self, omega: T) -> Result<CMatrix<T>> {
        self.eval(Complex::new(T::zero(), omega))
            .ok_or(CcdError::Evaluation { omega: omega.as_f64() })
    }

    /// `C (jwI - A)^-1 B + D` and its frequency derivative
    /// `-j C (jwI - A)^-2 B` at `omega`.
    pub fn eval_with_derivative(&self, omega: T) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let (p, m) = (self.n_outputs(), self.n_inputs());
        if self.order() == 0 {
            return Ok((to_complex(&self.d), CMatrix::zeros(p, m)));
        }
        let n = self.order();
        let jw = Complex::new(T::zero(), omega);
        let mut resolvent = to_complex(&self.a).map(|z| -z);
        for i in 0..n {
            resolvent[(i, i)] += jw;
        }
        let lu = resolvent.lu();
        let err = || CcdError::Evaluation { omega: omega.as_f64() };
        let x = lu.solve(&to_complex(&self.b)).ok_or_else(err)?;
        let x2 = lu.solve(&x).ok_or_else(err)?;
        let c = to_complex(&self.c);
        let value = &c * x + to_complex(&self.d);
        let deriv = (c * x2) * Complex::new(T::zero(), -T::one());
        Ok((value, deriv))
    }

    pub fn frequency_response(&self, freqs: &[T]) -> Result<FrequencyResponse<T>> {
        let values = freqs.iter().map(|&w| self.eval_freq(w)).collect::<Result<Vec<_>>>()?;
        FrequencyResponse::new(freqs.to_vec(), values)
    }

    /// `other` driven by the output of `self`.
    pub fn series(&self, other: &Self) -> Result<Self> {
        if self.n_outputs() != other.n_inputs() {
            return Err(CcdError::Dimension(format!(
                "series: {} outputs feed {} inputs",
                self.n_outputs(),
                other.n_inputs()
            )));
        }
        let (n1, n2) = (self.order(), other.order());
        let a = block(&[
            &[&self.a, &DMatrix::zeros(n1, n2)],
            &[&(&other.b * &self.c), &other.a],
        ]);
        let b = block(&[&[&self.b], &[&(&other.b * &self.d)]]);
        let c = block(&[&[&(&other.d * &self.c), &other.c]]);
        let d = &other.d * &self.d;
        Self::new(a, b, c, d)
    }

    /// Sum of two systems sharing inputs and outputs.
    pub fn parallel(&self, other: &Self) -> Result<Self> {
        if self.n_inputs() != other.n_inputs() || self.n_outputs() != other.n_outputs() {
            return Err(CcdError::Dimension("parallel: I/O sizes differ".into()));
        }
        let (n1, n2) = (self.order(), other.order());
        let a = block(&[
            &[&self.a, &DMatrix::zeros(n1, n2)],
            &[&DMatrix::zeros(n2, n1), &other.a],
        ]);
        let b = block(&[&[&self.b], &[&other.b]]);
        let c = block(&[&[&self.c, &other.c]]);
        Self::new(a, b, c, &self.d + &other.d)
    }

    /// Block-diagonal stacking: inputs and outputs are concatenated.
    pub fn append(&self, other: &Self) -> Self {
        let (n1, n2) = (self.order(), other.order());
        let (p1, m1, p2, m2) = (self.n_outputs(), self.n_inputs(), other.n_outputs(), other.n_inputs());
        Self {
            a: block(&[
                &[&self.a, &DMatrix::zeros(n1, n2)],
                &[&DMatrix::zeros(n2, n1), &other.a],
            ]),
            b: block(&[
                &[&self.b, &DMatrix::zeros(n1, m2)],
                &[&DMatrix::zeros(n2, m1), &other.b],
            ]),
            c: block(&[
                &[&self.c, &DMatrix::zeros(p1, n2)],
                &[&DMatrix::zeros(p2, n1), &other.c],
            ]),
            d: block(&[
                &[&self.d, &DMatrix::zeros(p1, m2)],
                &[&DMatrix::zeros(p2, m1), &other.d],
            ]),
        }
    }

    /// Same system with every pole moved left by `eps`.
    pub fn shifted(&self, eps: T) -> Self {
        let mut out = self.clone();
        for i in 0..out.order() {
            out.a[(i, i)] -= eps;
        }
        out
    }

    /// `k` diagonal copies of a system.
    pub fn repeat_diagonal(&self, k: usize) -> Self {
        let mut out = Self::static_gain(DMatrix::zeros(0, 0));
        for _ in 0..k {
            out = out.append(self);
        }
        out
    }

    /// Lower linear fractional transformation: close the last `n_meas`
    /// outputs to the last `n_ctrl` inputs through `k`.
    pub fn lower_lft(&self, k: &Self, n_meas: usize, n_ctrl: usize) -> Result<Self> {
        let (p, m) = (self.n_outputs(), self.n_inputs());
        if n_meas > p || n_ctrl > m || k.n_inputs() != n_meas || k.n_outputs() != n_ctrl {
            return Err(CcdError::Dimension("lower_lft: partition mismatch".into()));
        }
        let (p1, m1) = (p - n_meas, m - n_ctrl);
        let n = self.order();
        let b1 = self.b.columns(0, m1).into_owned();
        let b2 = self.b.columns(m1, n_ctrl).into_owned();
        let c1 = self.c.rows(0, p1).into_owned();
        let c2 = self.c.rows(p1, n_meas).into_owned();
        let d11 = self.d.view((0, 0), (p1, m1)).into_owned();
        let d12 = self.d.view((0, m1), (p1, n_ctrl)).into_owned();
        let d21 = self.d.view((p1, 0), (n_meas, m1)).into_owned();
        let d22 = self.d.view((p1, m1), (n_meas, n_ctrl)).into_owned();
        let (ak, bk, ck, dk) = (&k.a, &k.b, &k.c, &k.d);
        let nk = k.order();
        // y = C2 x + D21 w + D22 u, u = Ck xk + Dk y
        let loop_gain = DMatrix::identity(n_meas, n_meas) - &d22 * dk;
        let e = linalg::inverse(&loop_gain).ok_or(CcdError::AlgebraicLoop)?;
        // y = E (C2 x + D22 Ck xk + D21 w)
        let y_x = &e * &c2;
        let y_xk = &e * &d22 * ck;
        let y_w = &e * &d21;
        // u = Dk y + Ck xk
        let u_x = dk * &y_x;
        let u_xk = dk * &y_xk + ck;
        let u_w = dk * &y_w;
        let a = block(&[
            &[&(&self.a + &b2 * &u_x), &(&b2 * &u_xk)],
            &[&(bk * &y_x), &(ak + bk * &y_xk)],
        ]);
        let b = block(&[&[&(&b1 + &b2 * &u_w)], &[&(bk * &y_w)]]);
        let c = block(&[&[&(&c1 + &d12 * &u_x), &(&d12 * &u_xk)]]);
        let d = &d11 + &d12 * &u_w;
        debug_assert_eq!(a.nrows(), n + nk);
        Self::new(a, b, c, d)
    }

    /// Output map composed with a static gain on the right (`sys * m`).
    pub fn scale_inputs(&self, m: &DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), &self.b * m, self.c.clone(), &self.d * m)
    }

    /// Static gain on the left (`m * sys`).
    pub fn scale_outputs(&self, m: &DMatrix<T>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), m * &self.c, m * &self.d)
    }

    pub fn cast<U: Real>(&self) -> StateSpaceModel<U> {
        let f = |m: &DMatrix<T>| m.map(|x| U::lit(x.as_f64()));
        StateSpaceModel { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Companion realization of `M x'' + D x' + K x = B u`, `y = C x` with state `[x; x']`.
pub fn lift_second_order<T: Real>(plant: &SecondOrderPlant<T>) -> Result<StateSpaceModel<T>> {
    let ndof = plant.mass.nrows();
    let minv = linalg::inverse(&plant.mass).ok_or(CcdError::SingularMass)?;
    let m = plant.input.ncols();
    let p = plant.output.nrows();
    let a = block(&[
        &[&DMatrix::zeros(ndof, ndof), &DMatrix::identity(ndof, ndof)],
        &[&(-&minv * &plant.stiffness), &(-&minv * &plant.damping)],
    ]);
    let b = block(&[&[&DMatrix::zeros(ndof, m)], &[&(&minv * &plant.input)]]);
    let c = block(&[&[&plant.output, &DMatrix::zeros(p, ndof)]]);
    StateSpaceModel::new(a, b, c, DMatrix::zeros(p, m))
}

/// Sensitivity, control sensitivity and complementary sensitivity of the
/// unity negative-feedback loop around `G` with controller `K`.
#[derive(Debug, Clone)]
pub struct ClosedLoopSet<T: Real> {
    pub s: StateSpaceModel<T>,
    pub ks: StateSpaceModel<T>,
    pub t: StateSpaceModel<T>,
}

impl<T: Real> ClosedLoopSet<T> {
    /// Closed-loop state matrix (shared by S, KS and T).
    pub fn a(&self) -> &DMatrix<T> {
        self.s.a()
    }

    pub fn is_stable(&self) -> Result<bool> {
        self.s.is_stable(T::zero())
    }
}

pub fn feedback_interconnect<T: Real>(
    g: &StateSpaceModel<T>,
    k: &StateSpaceModel<T>,
) -> Result<ClosedLoopSet<T>> {
    let (p, m) = (g.n_outputs(), g.n_inputs());
    if k.n_inputs() != p || k.n_outputs() != m {
        return Err(CcdError::Dimension(format!(
            "G is {p}x{m}, K is {}x{}",
            k.n_outputs(),
            k.n_inputs()
        )));
    }
    let (a1, b1, c1, d1) = (&g.a, &g.b, &g.c, &g.d);
    let (a2, b2, c2, d2) = (&k.a, &k.b, &k.c, &k.d);
    let rd = DMatrix::identity(p, p) + d1 * d2;
    let e = linalg::inverse(&rd).ok_or(CcdError::AlgebraicLoop)?;
    // e = E (r - C1 xg - D1 C2 xk), u = C2 xk + D2 e
    let e_xg = -(&e * c1);
    let e_xk = -(&e * d1 * c2);
    let e_r = e.clone();
    let u_xg = d2 * &e_xg;
    let u_xk = c2 + d2 * &e_xk;
    let u_r = d2 * &e_r;
    let a = block(&[
        &[&(a1 + b1 * &u_xg), &(b1 * &u_xk)],
        &[&(b2 * &e_xg), &(a2 + b2 * &e_xk)],
    ]);
    let b = block(&[&[&(b1 * &u_r)], &[&(b2 * &e_r)]]);
    let c_s = block(&[&[&e_xg, &e_xk]]);
    let s = StateSpaceModel::new(a.clone(), b.clone(), c_s.clone(), e_r.clone())?;
    let ks = StateSpaceModel::new(a.clone(), b.clone(), block(&[&[&u_xg, &u_xk]]), u_r)?;
    let t = StateSpaceModel::new(a, b, -c_s, DMatrix::identity(p, p) - e_r)?;
    Ok(ClosedLoopSet { s, ks, t })
}

/// Sampled frequency response on a strictly increasing positive grid.
#[derive(Debug, Clone)]
pub struct FrequencyResponse<T: Real> {
    frequencies: Vec<T>,
    values: Vec<CMatrix<T>>,
}

impl<T: Real> FrequencyResponse<T> {
    pub fn new(frequencies: Vec<T>, values: Vec<CMatrix<T>>) -> Result<Self> {
        if frequencies.len() != values.len() {
            return Err(CcdError::Dimension("one response matrix per frequency".into()));
        }
        if frequencies.iter().any(|&w| !(w > T::zero())) {
            return Err(CcdError::InvalidParams("frequencies must be positive".into()));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CcdError::InvalidParams("frequencies must be strictly increasing".into()));
        }
        Ok(Self { frequencies, values })
    }

    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    pub fn values(&self) -> &[CMatrix<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn sigma_max(&self) -> Vec<T> {
        self.values.iter().map(linalg::sigma_max).collect()
    }
}

/// Log-spaced grid with a fixed density per decade.
pub fn log_grid<T: Real>(lo: T, hi: T, points_per_decade: usize) -> Vec<T> {
    let decades = (hi / lo).log10().as_f64();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(1) + 1;
    linalg::logspace(lo, hi, n)
}

#[derive(Serialize, Deserialize)]
struct SsDoc<T> {
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
    c: Vec<Vec<T>>,
    d: Vec<Vec<T>>,
}

fn rows_of<T: Real>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows<T: Real>(rows: &[Vec<T>], ncols_hint: usize) -> std::result::Result<DMatrix<T>, String> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(ncols_hint);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl<T: Real> Serialize for StateSpaceModel<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SsDoc { a: rows_of(&self.a), b: rows_of(&self.b), c: rows_of(&self.c), d: rows_of(&self.d) }
            .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for StateSpaceModel<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let doc = SsDoc::<T>::deserialize(de)?;
        let n = doc.a.len();
        let m = doc.d.first().map(|r| r.len()).or_else(|| doc.b.first().map(|r| r.len())).unwrap_or(0);
        let a = matrix_from_rows(&doc.a, n).map_err(D::Error::custom)?;
        let b = matrix_from_rows(&doc.b, m).map_err(D::Error::custom)?;
        let c = matrix_from_rows(&doc.c, n).map_err(D::Error::custom)?;
        let d = matrix_from_rows(&doc.d, m).map_err(D::Error::custom)?;
        // empty blocks carry no column information
        let b = if b.nrows() == 0 { DMatrix::zeros(0, m) } else { b };
        let c = if c.ncols() != n && c.iter().next().is_none() { DMatrix::zeros(c.nrows(), n) } else { c };
        let d = if d.nrows() == 0 { DMatrix::zeros(c.nrows(), b.ncols()) } else { d };
        StateSpaceModel::new(a, b, c, d).map_err(D::Error::custom)
    }
}
