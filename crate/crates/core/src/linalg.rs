//! Dense linear-algebra helpers on top of nalgebra: complex embeddings,
//! singular-value extraction, balancing, and ordered complex Schur forms.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{CcdError, Result};
use crate::scalar::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

const SCHUR_ITER_PER_EIGENVALUE: usize = 60;

pub fn to_complex<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

pub fn cscalar<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Largest singular value.
pub fn sigma_max<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &b| a.max(b))
}

pub fn sigma_max_real<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &b| a.max(b))
}

/// Dominant singular triplet together with the runner-up singular value.
#[derive(Debug, Clone)]
pub struct TopSingular<T: Real> {
    pub sigma1: T,
    pub sigma2: T,
    pub u1: CVector<T>,
    pub v1: CVector<T>,
}

pub fn top_singular<T: Real>(m: &CMatrix<T>) -> TopSingular<T> {
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let mut i1 = 0;
    for i in 1..sv.len() {
        if sv[i] > sv[i1] {
            i1 = i;
        }
    }
    let sigma2 = sv
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != i1)
        .map(|(_, &s)| s)
        .fold(T::zero(), |a, b| a.max(b));
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let u1 = u.column(i1).into_owned();
    let v1 = v_t.row(i1).adjoint();
    TopSingular { sigma1: sv[i1], sigma2, u1, v1 }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (bal, _) = balance(m);
    Ok(ComplexSchur::new(&bal)?.eigenvalues())
}

/// Largest real part of the spectrum.
///
/// Eigenvalues far below the spectral radius are only resolved to about
/// `eps * |m|` in absolute terms, which is not enough to place a slow,
/// nearly defective cluster on the correct side of the axis. Those are taken
/// from the spectrum of `m^-1` instead, which resolves them relative to their
/// own magnitude. Real parts keep their sign under inversion.
pub fn spectral_abscissa<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let direct = eigenvalues(m)?;
    let floor = T::min_value().unwrap_or(-T::max_value().unwrap());
    let max_re = |zs: &mut dyn Iterator<Item = Complex<T>>| zs.map(|z| z.re).fold(floor, |a, b| a.max(b));
    let inverse = m
        .clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()))
        .map(|inv| eigenvalues(&inv))
        .transpose()?;
    let Some(inverse) = inverse else {
        return Ok(max_re(&mut direct.iter().copied()));
    };
    let big = direct.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
    let small_inv = inverse.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
    if big == T::zero() || small_inv == T::zero() {
        return Ok(max_re(&mut direct.iter().copied()));
    }
    // split at the geometric mean of the largest and smallest magnitudes
    let split = (big / small_inv).sqrt();
    let fast = max_re(&mut direct.iter().copied().filter(|z| cabs(*z) >= split));
    let one = Complex::new(T::one(), T::zero());
    let slow = max_re(&mut inverse.iter().map(|&mu| one / mu).filter(|z| cabs(*z) < split));
    Ok(fast.max(slow))
}

pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b)))
}

/// Diagonal similarity scaling (powers of two) that equalizes row and
/// column norms. Returns the balanced matrix and the scaling `d`, with
/// `balanced = diag(d)^-1 * m * diag(d)`.
pub fn balance<T: Real>(m: &DMatrix<T>) -> (DMatrix<T>, DVector<T>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = DVector::from_element(n, T::one());
    let two = T::lit(2.0);
    let factor = T::lit(0.95);
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut cc = c;
            let rr = r;
            while cc < rr / two {
                cc *= two * two;
                f *= two;
            }
            while cc >= rr * two {
                cc /= two * two;
                f /= two;
            }
            // scaled column norm c*f, row norm r/f
            if (c * f + r / f) < factor * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, d)
}

/// Complex upper-triangular Schur form `m = q t q^H`.
pub struct ComplexSchur<T: Real> {
    pub q: CMatrix<T>,
    pub t: CMatrix<T>,
}

impl<T: Real> ComplexSchur<T> {
    /// Hessenberg reduction followed by single-shift complex QR iteration
    /// with Wilkinson shifts and periodic exceptional shifts.
    pub fn new(m: &DMatrix<T>) -> Result<Self> {
        Self::from_complex(&to_complex(m))
    }

    pub fn from_complex(m: &CMatrix<T>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Ok(Self { q: m.clone(), t: m.clone() });
        }
        let (q, h) = m.clone().hessenberg().unpack();
        let mut s = Self { q, t: h };
        s.qr_iterate()?;
        Ok(s)
    }

    fn qr_iterate(&mut self) -> Result<()> {
        let n = self.t.nrows();
        let eps = T::machine_eps();
        let zero = Complex::new(T::zero(), T::zero());
        for i in 2..n {
            for j in 0..i - 1 {
                self.t[(i, j)] = zero;
            }
        }
        let scale = self.t.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
        let max_iter = SCHUR_ITER_PER_EIGENVALUE * n.max(1);
        let mut hi = n - 1;
        let mut its = 0usize;
        let mut total = 0usize;
        while hi > 0 {
            // deflate negligible subdiagonals inside the active window
            let mut l = hi;
            while l > 0 {
                let diag = cabs(self.t[(l - 1, l - 1)]) + cabs(self.t[(l, l)]);
                let reference = if diag > T::zero() { diag } else { scale };
                if cabs(self.t[(l, l - 1)]) <= eps * reference {
                    self.t[(l, l - 1)] = zero;
                    break;
                }
                l -= 1;
            }
            if l == hi {
                hi -= 1;
                its = 0;
                continue;
            }
            total += 1;
            its += 1;
            if total > max_iter {
                return Err(CcdError::Numerical("complex QR iteration did not converge".into()));
            }
            let mu = if its % 11 == 0 {
                self.t[(hi, hi)] + Complex::new(T::lit(0.75) * cabs(self.t[(hi, hi - 1)]), T::zero())
            } else {
                self.wilkinson_shift(hi)
            };
            self.qr_step(l, hi, mu);
        }
        Ok(())
    }

    fn wilkinson_shift(&self, hi: usize) -> Complex<T> {
        let a = self.t[(hi - 1, hi - 1)];
        let b = self.t[(hi - 1, hi)];
        let c = self.t[(hi, hi - 1)];
        let d = self.t[(hi, hi)];
        let half = T::lit(0.5);
        let tr = (a + d) * half;
        let disc = ((a - d) * half * ((a - d) * half) + b * c).sqrt();
        let (e1, e2) = (tr + disc, tr - disc);
        if cabs(e1 - d) <= cabs(e2 - d) {
            e1
        } else {
            e2
        }
    }

    /// One explicitly shifted QR sweep on rows/columns `l..=hi`.
    fn qr_step(&mut self, l: usize, hi: usize, mu: Complex<T>) {
        let n = self.t.nrows();
        for k in l..=hi {
            self.t[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let a = self.t[(k, k)];
            let b = self.t[(k + 1, k)];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == T::zero() {
                (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
            } else {
                (a / r, b / r)
            };
            for j in k..n {
                let x = self.t[(k, j)];
                let y = self.t[(k + 1, j)];
                self.t[(k, j)] = c.conj() * x + s.conj() * y;
                self.t[(k + 1, j)] = -s * x + c * y;
            }
            self.t[(k + 1, k)] = Complex::new(T::zero(), T::zero());
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            for i in 0..=(k + 1).min(hi) {
                let x = self.t[(i, k)];
                let y = self.t[(i, k + 1)];
                self.t[(i, k)] = x * c + y * s;
                self.t[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
            for i in 0..n {
                let x = self.q[(i, k)];
                let y = self.q[(i, k + 1)];
                self.q[(i, k)] = x * c + y * s;
                self.q[(i, k + 1)] = -x * s.conj() + y * c.conj();
            }
        }
        for k in l..=hi {
            self.t[(k, k)] += mu;
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Swap diagonal entries `k` and `k + 1` with a unitary rotation.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let a = self.t[(k, k)];
        let b = self.t[(k, k + 1)];
        let c = self.t[(k + 1, k + 1)];
        // eigenvector of the 2x2 block for eigenvalue c
        let x1 = b;
        let x2 = c - a;
        let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
        if nrm == T::zero() {
            return;
        }
        let g11 = x1 / nrm;
        let g21 = x2 / nrm;
        let g12 = -g21.conj();
        let g22 = g11.conj();
        // t <- G^H t G ; q <- q G
        for j in 0..n {
            let x = self.t[(k, j)];
            let y = self.t[(k + 1, j)];
            self.t[(k, j)] = g11.conj() * x + g21.conj() * y;
            self.t[(k + 1, j)] = g12.conj() * x + g22.conj() * y;
        }
        for i in 0..n {
            let x = self.t[(i, k)];
            let y = self.t[(i, k + 1)];
            self.t[(i, k)] = x * g11 + y * g21;
            self.t[(i, k + 1)] = x * g12 + y * g22;
            let x = self.q[(i, k)];
            let y = self.q[(i, k + 1)];
            self.q[(i, k)] = x * g11 + y * g21;
            self.q[(i, k + 1)] = x * g12 + y * g22;
        }
        self.t[(k + 1, k)] = Complex::new(T::zero(), T::zero());
        self.t[(k, k)] = c;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Move every eigenvalue satisfying `select` to the leading block,
    /// preserving relative order. Returns the size of the leading block.
    pub fn reorder<F: Fn(Complex<T>) -> bool>(&mut self, select: F) -> usize {
        let n = self.t.nrows();
        let mut placed = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                let mut k = i;
                while k > placed {
                    self.swap(k - 1);
                    k -= 1;
                }
                placed += 1;
            }
        }
        placed
    }
}

/// Orthonormal basis of the orthogonal complement of the columns of `u`
/// (assumed orthonormal), of dimension `rows - cols`.
pub fn orth_complement<T: Real>(u: &DMatrix<T>) -> DMatrix<T> {
    let p = u.nrows();
    let k = u.ncols();
    if k == 0 {
        return DMatrix::identity(p, p);
    }
    let proj = DMatrix::identity(p, p) - u * u.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..p).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(p, p - k);
    for (col, &i) in idx.iter().take(p - k).enumerate() {
        out.set_column(col, &eig.eigenvectors.column(i));
    }
    out
}

/// Inverse that also handles the empty matrix.
pub fn inverse<T: Real>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

pub fn cinverse<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Block matrix from a row-major grid of blocks.
pub fn block<T: Real>(rows: &[&[&DMatrix<T>]]) -> DMatrix<T> {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|b| b.ncols()).collect();
    let mut out = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (bi, row) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (bj, blk) in row.iter().enumerate() {
            assert_eq!(blk.nrows(), heights[bi], "block row height");
            assert_eq!(blk.ncols(), widths[bj], "block column width");
            out.view_mut((r0, c0), (blk.nrows(), blk.ncols())).copy_from(*blk);
            c0 += widths[bj];
        }
        r0 += heights[bi];
    }
    out
}

/// Logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    let step = (l1 - l0) / T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (l0 + step * T::from_usize(i).unwrap()).exp()
            }
        })
        .collect()
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

pub fn min_symmetric_eigenvalue<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap(), |a, &b| a.min(b))
}
