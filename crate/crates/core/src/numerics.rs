//! Dense complex linear algebra used by every other module.
//!
//! Hermitian problems go through a cyclic Jacobi sweep; general spectra
//! through Hessenberg reduction plus explicitly shifted QR. Both are plenty
//! for the matrix sizes this crate touches (a few hundred at most) and keep
//! the results bit-reproducible across runs.

use num_complex::Complex64;

use crate::error::{Result, SusyError};

pub type C64 = Complex64;

pub const C_ZERO: C64 = C64::new(0.0, 0.0);
pub const C_ONE: C64 = C64::new(1.0, 0.0);
pub const C_I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C_ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Row-major construction; rejects non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SusyError::DimensionMismatch(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        let m = CMatrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self
            .data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            Ok(())
        } else {
            Err(SusyError::NonFiniteEntry)
        }
    }

    /// X = sigma_x tensor 1_n, the 2n x 2n block swap of the doubled basis.
    pub fn x_matrix(n: usize) -> Self {
        let mut m = Self::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = C_ONE;
            m[(n + i, i)] = C_ONE;
        }
        m
    }

    /// Z = sigma_z tensor 1_n.
    pub fn z_matrix(n: usize) -> Self {
        let mut m = Self::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
            m[(n + i, n + i)] = -C_ONE;
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: C64) -> Self {
        let data = self.data.iter().map(|z| z * c).collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == C_ZERO {
                    continue;
                }
                let row = l * other.cols;
                let out_row = i * other.cols;
                for j in 0..other.cols {
                    out.data[out_row + j] += a * other.data[row + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C_ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = C_ZERO;
            let row = i * self.cols;
            for j in 0..self.cols {
                acc += self.data[row + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == C_ZERO {
                    continue;
                }
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] = a * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Real part as a RealMat, failing if any imaginary residue exceeds `tol`.
    pub fn real_part_checked(&self, tol: f64) -> Result<RealMat> {
        let imag = self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag > tol {
            return Err(SusyError::DimensionMismatch(format!(
                "matrix expected real, imaginary residue {imag:.3e}"
            )));
        }
        Ok(RealMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.re).collect(),
        })
    }
}

/// Hermitian eigendecomposition: ascending eigenvalues, unitary column frame.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Deterministic: ascending eigenvalues, each eigenvector phase-fixed so its
/// first largest-modulus component is real positive, and near-degenerate
/// clusters (gap < 1e-9) ordered by that component's index and then by a
/// lexicographic scan of the vector entries.
pub fn eigh(h: &CMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(SusyError::DimensionMismatch(
            "eigh needs a square matrix".into(),
        ));
    }
    h.check_finite()?;
    let n = h.rows;
    let scale = h.max_norm().max(1e-300);
    let dev = h.hermitian_deviation();
    if dev > 1e-12 * scale {
        return Err(SusyError::NotHermitian(dev));
    }

    // Work on the explicitly Hermitized copy.
    let mut a = CMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()));
    let mut v = CMatrix::identity(n);

    let off = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[(p, q)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let tol = 1e-14 * scale * (n as f64);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let beta = apq.norm();
                if beta <= 1e-300 {
                    continue;
                }
                let phase = apq / beta;
                let tau = (a[(p, p)].re - a[(q, q)].re) / (2.0 * beta);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p,q): [[c, -s e^{i phi}], [s e^{-i phi}, c]].
                let se_pos = s * phase; // s e^{i phi}
                let se_neg = s * phase.conj(); // s e^{-i phi}

                // Columns: A <- A U, V <- V U.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip + se_neg * aiq;
                    a[(i, q)] = -se_pos * aip + c * aiq;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip + se_neg * viq;
                    v[(i, q)] = -se_pos * vip + c * viq;
                }
                // Rows: A <- U† A.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj + se_pos * aqj;
                    a[(q, j)] = -se_neg * apj + c * aqj;
                }
            }
        }
    }
    if !converged && off(&a) > tol {
        return Err(SusyError::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let w: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());

    let mut eigenvalues = Vec::with_capacity(n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for &idx in &order {
        eigenvalues.push(w[idx]);
        cols.push(canonical_phase(v.column(idx)));
    }
    reorder_clusters(&mut eigenvalues, &mut cols);

    let mut vecs = CMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            vecs[(i, j)] = col[i];
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors: vecs,
    })
}

fn canonical_phase(mut col: Vec<C64>) -> Vec<C64> {
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for (i, z) in col.iter().enumerate() {
        let nm = z.norm();
        if nm > best_norm + 1e-15 {
            best_norm = nm;
            best = i;
        }
    }
    if best_norm > 1e-300 {
        let ph = col[best] / best_norm;
        let ph_conj = ph.conj();
        for z in col.iter_mut() {
            *z *= ph_conj;
        }
    }
    col
}

fn max_modulus_index(col: &[C64]) -> usize {
    let mut best = 0usize;
    let mut best_norm = -1.0;
    for (i, z) in col.iter().enumerate() {
        let nm = z.norm();
        if nm > best_norm + 1e-15 {
            best_norm = nm;
            best = i;
        }
    }
    best
}

fn lex_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re) {
            std::cmp::Ordering::Equal => {}
            ord => return ord,
        }
        match x.im.total_cmp(&y.im) {
            std::cmp::Ordering::Equal => {}
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

const DEGENERACY_GAP: f64 = 1e-9;

fn reorder_clusters(w: &mut [f64], cols: &mut [Vec<C64>]) {
    let n = w.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (w[end] - w[end - 1]).abs() < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            let mut idx: Vec<usize> = (start..end).collect();
            idx.sort_by(|&i, &j| {
                let ki = max_modulus_index(&cols[i]);
                let kj = max_modulus_index(&cols[j]);
                ki.cmp(&kj).then_with(|| lex_cmp(&cols[i], &cols[j]))
            });
            let new_w: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
            let new_c: Vec<Vec<C64>> = idx.iter().map(|&i| cols[i].clone()).collect();
            for (off, (wi, ci)) in new_w.into_iter().zip(new_c).enumerate() {
                w[start + off] = wi;
                cols[start + off] = ci;
            }
        }
        start = end;
    }
}

/// Eigenvalues of a general complex square matrix via Hessenberg + shifted QR.
///
/// Returned sorted by ascending real part, descending imaginary part within
/// ties, so conjugate pairs sit adjacent with the +i member first.
pub fn eig_general(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(SusyError::DimensionMismatch(
            "eig_general needs a square matrix".into(),
        ));
    }
    m.check_finite()?;
    let n = m.rows;
    if n == 0 {
        return Ok(vec![]);
    }
    let mut h = m.clone();
    balance_in_place(&mut h);
    hessenberg_in_place(&mut h);

    let scale = m.max_norm().max(1e-300);
    let eps = f64::EPSILON;
    let cap = 30 * n.max(2);
    let mut eigs: Vec<C64> = Vec::with_capacity(n);
    let mut hi = n;
    let mut iters = 0usize;
    let mut stagnant = 0usize;

    while hi > 0 {
        if hi == 1 {
            eigs.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        // Deflate converged subdiagonals.
        let sub = h[(hi - 1, hi - 2)].norm();
        let local = h[(hi - 1, hi - 1)].norm() + h[(hi - 2, hi - 2)].norm();
        if sub <= eps * local.max(scale * 1e-3) {
            eigs.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stagnant = 0;
            continue;
        }
        if hi == 2 {
            let (l1, l2) = eig2(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
            eigs.push(l1);
            eigs.push(l2);
            hi = 0;
            continue;
        }

        iters += 1;
        stagnant += 1;
        if iters > cap {
            return Err(SusyError::NoConvergence(cap));
        }

        // Active block start: first index below which the subdiagonal is dead.
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo, lo - 1)].norm();
            let l = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if s <= eps * l.max(scale * 1e-3) {
                h[(lo, lo - 1)] = C_ZERO;
                break;
            }
            lo -= 1;
        }
        if hi - lo == 2 {
            let (l1, l2) = eig2(
                h[(lo, lo)],
                h[(lo, lo + 1)],
                h[(lo + 1, lo)],
                h[(lo + 1, lo + 1)],
            );
            // Deflate the 2x2 corner exactly.
            eigs.push(l1);
            eigs.push(l2);
            hi = lo;
            stagnant = 0;
            continue;
        }

        // Exceptional shift every dozen stalled iterations breaks the rare
        // cycles of the plain Wilkinson shift.
        let shift = if stagnant > 0 && stagnant % 12 == 0 {
            h[(hi - 1, hi - 1)]
                + C64::new(
                    0.75 * h[(hi - 1, hi - 2)].norm() + 0.25 * h[(hi - 2, hi - 3)].norm(),
                    0.0,
                )
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, lo, hi, shift);
    }

    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(b.im.total_cmp(&a.im)));
    Ok(eigs)
}

fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    (l1, l2)
}

fn wilkinson_shift(h: &CMatrix, hi: usize) -> C64 {
    let a = h[(hi - 2, hi - 2)];
    let b = h[(hi - 2, hi - 1)];
    let c = h[(hi - 1, hi - 2)];
    let d = h[(hi - 1, hi - 1)];
    let (l1, l2) = eig2(a, b, c, d);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    let n = h.rows;
    for i in lo..hi {
        h[(i, i)] -= shift;
    }
    // QR by Givens rotations on the subdiagonal, then RQ.
    let mut rots: Vec<(usize, C64, C64)> = Vec::with_capacity(hi - lo);
    for j in lo..hi - 1 {
        let a = h[(j, j)];
        let b = h[(j + 1, j)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if r < 1e-300 {
            rots.push((j, C_ONE, C_ZERO));
            continue;
        }
        let ca = a / r;
        let cb = b / r;
        // G = [[ca*, cb*], [-cb, ca]] zeroes the subdiagonal entry.
        for col in j..n {
            let x = h[(j, col)];
            let y = h[(j + 1, col)];
            h[(j, col)] = ca.conj() * x + cb.conj() * y;
            h[(j + 1, col)] = -cb * x + ca * y;
        }
        rots.push((j, ca, cb));
    }
    for &(j, ca, cb) in &rots {
        // Post-multiply by G†: columns j, j+1.
        for row in 0..(j + 2).min(hi) {
            let x = h[(row, j)];
            let y = h[(row, j + 1)];
            h[(row, j)] = ca * x + cb * y;
            h[(row, j + 1)] = -cb.conj() * x + ca.conj() * y;
        }
    }
    for i in lo..hi {
        h[(i, i)] += shift;
    }
}

/// Parlett-Reinsch balancing by powers of two: equalizes row and column
/// norms under a diagonal similarity, improving eigenvalue accuracy for
/// matrices with a large dynamic range.
fn balance_in_place(h: &mut CMatrix) {
    let n = h.rows;
    let radix: f64 = 2.0;
    for _ in 0..32 {
        let mut converged = true;
        for i in 0..n {
            let mut row = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if j != i {
                    row += h[(i, j)].norm();
                    col += h[(j, i)].norm();
                }
            }
            if row < 1e-300 || col < 1e-300 {
                continue;
            }
            let mut f = 1.0;
            let s = row + col;
            let mut c = col;
            while c < row / radix {
                c *= radix;
                f *= radix;
            }
            while c > row * radix {
                c /= radix;
                f /= radix;
            }
            if (col * f + row / f) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    let v = h[(i, j)] / f;
                    h[(i, j)] = v;
                    let w = h[(j, i)] * f;
                    h[(j, i)] = w;
                }
            }
        }
        if converged {
            break;
        }
    }
}

fn hessenberg_in_place(h: &mut CMatrix) {
    let n = h.rows;
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        // Householder vector for column j below the subdiagonal.
        let mut norm = 0.0;
        for i in j + 1..n {
            norm += h[(i, j)].norm_sqr();
        }
        let norm = norm.sqrt();
        if norm < 1e-300 {
            continue;
        }
        let x0 = h[(j + 1, j)];
        let alpha = if x0.norm() > 1e-300 {
            -(x0 / x0.norm()) * norm
        } else {
            C64::new(-norm, 0.0)
        };
        let mut v: Vec<C64> = (j + 1..n).map(|i| h[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm < 1e-300 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (1 - 2vv†) H
        for col in j..n {
            let mut dot = C_ZERO;
            for (off, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(j + 1 + off, col)];
            }
            let dot = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let val = h[(j + 1 + off, col)] - dot * vi;
                h[(j + 1 + off, col)] = val;
            }
        }
        // H <- H (1 - 2vv†)
        for row in 0..n {
            let mut dot = C_ZERO;
            for (off, vi) in v.iter().enumerate() {
                dot += h[(row, j + 1 + off)] * *vi;
            }
            let dot = dot * 2.0;
            for (off, vi) in v.iter().enumerate() {
                let val = h[(row, j + 1 + off)] - dot * vi.conj();
                h[(row, j + 1 + off)] = val;
            }
        }
        for i in j + 2..n {
            h[(i, j)] = C_ZERO;
        }
        h[(j + 1, j)] = alpha;
    }
}

/// Spectral functions applied through the Hermitian eigendecomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralFn {
    Sqrt,
    InvSqrt,
    Abs,
    AbsInvSqrt,
    Sign,
}

/// f(H) = V diag(f(w)) V† for Hermitian H.
pub fn mat_func(h: &CMatrix, f: SpectralFn, gap_floor: f64) -> Result<CMatrix> {
    let eig = eigh(h)?;
    let n = h.rows;
    let mut fw = Vec::with_capacity(n);
    for &w in &eig.eigenvalues {
        let val = match f {
            SpectralFn::Sqrt => {
                if w < -gap_floor {
                    return Err(SusyError::SingularAtGapFloor {
                        eigenvalue: w,
                        floor: gap_floor,
                    });
                }
                w.max(0.0).sqrt()
            }
            SpectralFn::InvSqrt => {
                if w <= gap_floor {
                    return Err(SusyError::SingularAtGapFloor {
                        eigenvalue: w,
                        floor: gap_floor,
                    });
                }
                1.0 / w.sqrt()
            }
            SpectralFn::Abs => w.abs(),
            SpectralFn::AbsInvSqrt => {
                if w.abs() <= gap_floor {
                    return Err(SusyError::SingularAtGapFloor {
                        eigenvalue: w,
                        floor: gap_floor,
                    });
                }
                1.0 / w.abs().sqrt()
            }
            SpectralFn::Sign => {
                if w.abs() <= gap_floor {
                    return Err(SusyError::SingularAtGapFloor {
                        eigenvalue: w,
                        floor: gap_floor,
                    });
                }
                w.signum()
            }
        };
        fw.push(val);
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] = v[(i, j)] * fw[j];
        }
    }
    Ok(scaled.mul(&v.dagger()))
}

/// Polar decomposition M = U P with U unitary and P Hermitian positive.
pub fn polar(m: &CMatrix, gap_floor: f64) -> Result<(CMatrix, CMatrix)> {
    if !m.is_square() {
        return Err(SusyError::DimensionMismatch(
            "polar needs a square matrix".into(),
        ));
    }
    let p2 = m.dagger().mul(m);
    let eig = eigh(&p2)?;
    let wmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if wmin <= gap_floor * gap_floor {
        return Err(SusyError::SingularAtGapFloor {
            eigenvalue: wmin.max(0.0).sqrt(),
            floor: gap_floor,
        });
    }
    let p = mat_func(&p2, SpectralFn::Sqrt, gap_floor * gap_floor)?;
    let p_inv = mat_func(&p2, SpectralFn::InvSqrt, gap_floor * gap_floor)?;
    let u = m.mul(&p_inv);
    Ok((u, p))
}

/// Smallest singular value, computed as sqrt(min eig(M†M)).
pub fn sigma_min(m: &CMatrix) -> f64 {
    let p2 = m.dagger().mul(m);
    match eigh(&p2) {
        Ok(e) => e
            .eigenvalues
            .first()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt(),
        Err(_) => 0.0,
    }
}

/// All singular values, ascending.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let p2 = m.dagger().mul(m);
    let e = eigh(&p2)?;
    Ok(e.eigenvalues.iter().map(|w| w.max(0.0).sqrt()).collect())
}

/// LU solve with partial pivoting; `b` holds right-hand-side columns.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(SusyError::DimensionMismatch("solve shape mismatch".into()));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = b.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pmax = col;
        let mut vmax = lu[(col, col)].norm();
        for r in col + 1..n {
            let v = lu[(r, col)].norm();
            if v > vmax {
                vmax = v;
                pmax = r;
            }
        }
        if vmax < 1e-300 {
            return Err(SusyError::SingularMatrix);
        }
        if pmax != col {
            for j in 0..n {
                let t = lu[(col, j)];
                lu[(col, j)] = lu[(pmax, j)];
                lu[(pmax, j)] = t;
            }
            for j in 0..x.cols {
                let t = x[(col, j)];
                x[(col, j)] = x[(pmax, j)];
                x[(pmax, j)] = t;
            }
            piv.swap(col, pmax);
        }
        let d = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / d;
            lu[(r, col)] = factor;
            for j in col + 1..n {
                let v = lu[(col, j)];
                lu[(r, j)] = lu[(r, j)] - factor * v;
            }
            for j in 0..x.cols {
                let v = x[(col, j)];
                x[(r, j)] = x[(r, j)] - factor * v;
            }
        }
    }
    // Back substitution.
    for j in 0..x.cols {
        for r in (0..n).rev() {
            let mut acc = x[(r, j)];
            for c in r + 1..n {
                acc -= lu[(r, c)] * x[(c, j)];
            }
            x[(r, j)] = acc / lu[(r, r)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &CMatrix::identity(a.rows))
}

// ---------------------------------------------------------------------------
// Real dense matrices (Majorana-basis machinery).
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct RealMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl std::ops::Index<(usize, usize)> for RealMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl RealMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "real matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let row = l * other.cols;
                let out_row = i * other.cols;
                for j in 0..other.cols {
                    out.data[out_row + j] += a * other.data[row + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = i * self.cols;
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.data[row + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        RealMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RealMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self[(i, j)], 0.0))
    }

    /// Thin QR by twice-iterated modified Gram-Schmidt; returns Q or an error
    /// when the columns are numerically dependent.
    pub fn qr_thin(&self) -> Result<RealMat> {
        let mut q: Vec<Vec<f64>> = (0..self.cols).map(|j| self.column(j)).collect();
        let scale = self.max_norm().max(1e-300);
        for j in 0..q.len() {
            for _pass in 0..2 {
                for i in 0..j {
                    let qi = q[i].clone();
                    let dot: f64 = qi.iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                    for (x, y) in q[j].iter_mut().zip(&qi) {
                        *x -= dot * y;
                    }
                }
            }
            let nrm: f64 = q[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm < 1e-12 * scale {
                return Err(SusyError::InvalidSubsystem(
                    "subsystem basis columns are linearly dependent".into(),
                ));
            }
            for x in q[j].iter_mut() {
                *x /= nrm;
            }
        }
        Ok(RealMat::from_columns(&q))
    }

    /// Solve A x = b (square A) via partial-pivot LU.
    pub fn solve(&self, b: &RealMat) -> Result<RealMat> {
        let ca = self.to_complex();
        let cb = b.to_complex();
        let x = solve(&ca, &cb)?;
        x.real_part_checked(1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn random_cmatrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(uniform(rng), uniform(rng)))
    }

    pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let m = random_cmatrix(rng, n);
        m.add(&m.dagger()).scale(C64::new(0.5, 0.0))
    }

    #[test]
    fn eigh_identity_and_pauli_z() {
        let e = eigh(&CMatrix::identity(2)).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(e.eigenvectors.max_diff(&CMatrix::identity(2)) < 1e-14);

        let sz = CMatrix::z_matrix(1);
        let e = eigh(&sz).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(eigh(&m), Err(SusyError::NotHermitian(_))));
    }

    #[test]
    fn eigh_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let n = 2 + (trial % 31);
            let h = random_hermitian(&mut rng, n);
            let e = eigh(&h).unwrap();
            let v = &e.eigenvectors;
            // V diag(w) V†
            let mut vd = v.clone();
            for j in 0..n {
                for i in 0..n {
                    vd[(i, j)] = v[(i, j)] * e.eigenvalues[j];
                }
            }
            let rec = vd.mul(&v.dagger());
            let tol = 1e-10 * (1.0 + h.max_norm());
            assert!(rec.max_diff(&h) < tol, "round trip failed at n={n}");
            let unit = v.dagger().mul(v);
            assert!(unit.max_diff(&CMatrix::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn eigh_deterministic_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 8);
        let a = eigh(&h).unwrap();
        let b = eigh(&h).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert!(a.eigenvectors.max_diff(&b.eigenvectors) == 0.0);
    }

    #[test]
    fn eig_general_pauli_y_and_antisymmetric() {
        // Hermitian sigma_y has eigenvalues +-1; its real antisymmetric
        // counterpart [[0,-1],[1,0]] carries the +-i pair.
        let mut sy = CMatrix::zeros(2, 2);
        sy[(0, 1)] = -C_I;
        sy[(1, 0)] = C_I;
        let e = eig_general(&sy).unwrap();
        assert!((e[0] + C_ONE).norm() < 1e-12);
        assert!((e[1] - C_ONE).norm() < 1e-12);

        let mut rot = CMatrix::zeros(2, 2);
        rot[(0, 1)] = -C_ONE;
        rot[(1, 0)] = C_ONE;
        let e = eig_general(&rot).unwrap();
        assert!((e[0] - C_I).norm() < 1e-12);
        assert!((e[1] + C_I).norm() < 1e-12);

        let a = 0.7;
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(a, 0.0);
        m[(1, 0)] = C64::new(-a, 0.0);
        let e = eig_general(&m).unwrap();
        assert!((e[0] - C64::new(0.0, a)).norm() < 1e-12);
        assert!((e[1] - C64::new(0.0, -a)).norm() < 1e-12);
    }

    /// Independent oracle: characteristic polynomial via Faddeev-LeVerrier,
    /// roots via Durand-Kerner.
    fn char_poly(m: &CMatrix) -> Vec<C64> {
        let n = m.rows;
        let mut coeffs = vec![C_ONE]; // leading
        let mut aux = CMatrix::identity(n);
        for k in 1..=n {
            let am = m.mul(&aux);
            let tr: C64 = (0..n).map(|i| am[(i, i)]).sum();
            let c = -tr / (k as f64);
            coeffs.push(c);
            aux = am.clone();
            for i in 0..n {
                aux[(i, i)] += c;
            }
        }
        coeffs
    }

    fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
        let n = coeffs.len() - 1;
        let eval = |z: C64| -> C64 {
            let mut acc = C_ZERO;
            for c in coeffs {
                acc = acc * z + c;
            }
            acc
        };
        let seed = C64::new(0.4, 0.9);
        let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32 + 1)).collect();
        for _ in 0..800 {
            let mut moved = 0.0f64;
            for i in 0..n {
                let zi = roots[i];
                let mut denom = C_ONE;
                for (j, zj) in roots.iter().enumerate() {
                    if j != i {
                        denom *= zi - zj;
                    }
                }
                if denom.norm() < 1e-300 {
                    continue;
                }
                let delta = eval(zi) / denom;
                roots[i] = zi - delta;
                moved = moved.max(delta.norm());
            }
            if moved < 1e-13 {
                break;
            }
        }
        roots
    }

    #[test]
    fn eig_general_matches_char_poly_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m = random_cmatrix(&mut rng, 6);
            let mut mine = eig_general(&m).unwrap();
            let mut oracle = poly_roots(&char_poly(&m));
            let key = |z: &C64| (z.re, z.im);
            mine.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            oracle.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (a, b) in mine.iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-8, "eig mismatch {a} vs {b}");
            }
        }
    }

    #[test]
    fn mat_func_basics() {
        let id = CMatrix::identity(3);
        let s = mat_func(&id, SpectralFn::Sqrt, 1e-10).unwrap();
        assert!(s.max_diff(&id) < 1e-12);

        let sz = CMatrix::z_matrix(1);
        let a = mat_func(&sz, SpectralFn::Abs, 1e-10).unwrap();
        assert!(a.max_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn mat_func_inv_sqrt_identity_on_posdef() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_cmatrix(&mut rng, 6);
            let h = m
                .dagger()
                .mul(&m)
                .add(&CMatrix::identity(6).scale(C64::new(0.5, 0.0)));
            let inv_sqrt = mat_func(&h, SpectralFn::InvSqrt, 1e-10).unwrap();
            let prod = inv_sqrt.mul(&h).mul(&inv_sqrt);
            assert!(prod.max_diff(&CMatrix::identity(6)) < 1e-10);
        }
    }

    #[test]
    fn mat_func_sign_times_abs_recovers_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 8);
            let sgn = match mat_func(&h, SpectralFn::Sign, 1e-10) {
                Ok(s) => s,
                Err(SusyError::SingularAtGapFloor { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let abs = mat_func(&h, SpectralFn::Abs, 1e-10).unwrap();
            assert!(sgn.mul(&abs).max_diff(&h) < 1e-10);
        }
    }

    #[test]
    fn mat_func_fails_inside_gap_floor() {
        let sz = CMatrix::z_matrix(1).scale(C64::new(1e-12, 0.0));
        match mat_func(&sz, SpectralFn::AbsInvSqrt, 1e-10) {
            Err(SusyError::SingularAtGapFloor { eigenvalue, .. }) => {
                assert!(eigenvalue.abs() <= 1e-10);
            }
            other => panic!("expected SingularAtGapFloor, got {other:?}"),
        }
    }

    #[test]
    fn polar_unitary_and_scalar_cases() {
        // Unitary input: U = input, P = 1.
        let mut u = CMatrix::zeros(2, 2);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        u[(0, 0)] = C64::new(c, 0.0);
        u[(0, 1)] = C64::new(0.0, c);
        u[(1, 0)] = C64::new(0.0, c);
        u[(1, 1)] = C64::new(c, 0.0);
        let (uu, p) = polar(&u, 1e-10).unwrap();
        assert!(uu.max_diff(&u) < 1e-10);
        assert!(p.max_diff(&CMatrix::identity(2)) < 1e-10);

        let m = CMatrix::identity(3).scale(C64::new(2.0, 0.0));
        let (u2, p2) = polar(&m, 1e-10).unwrap();
        assert!(u2.max_diff(&CMatrix::identity(3)) < 1e-10);
        assert!(p2.max_diff(&m) < 1e-10);
    }

    #[test]
    fn polar_round_trip_and_uniqueness() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m =
                random_cmatrix(&mut rng, 6).add(&CMatrix::identity(6).scale(C64::new(2.0, 0.0)));
            if sigma_min(&m) < 1e-6 {
                continue;
            }
            let (u, p) = polar(&m, 1e-10).unwrap();
            assert!(u.mul(&p).max_diff(&m) < 1e-10 * (1.0 + m.max_norm()));
            assert!(u.dagger().mul(&u).max_diff(&CMatrix::identity(6)) < 1e-10);
            // P is the unique positive square root of M†M.
            assert!(p.mul(&p).max_diff(&m.dagger().mul(&m)) < 1e-9 * (1.0 + m.max_norm().powi(2)));
        }
    }

    #[test]
    fn sigma_min_examples() {
        assert!((sigma_min(&CMatrix::identity(4)) - 1.0).abs() < 1e-12);
        let mut d = CMatrix::zeros(2, 2);
        d[(0, 0)] = C64::new(3.0, 0.0);
        d[(1, 1)] = C64::new(0.5, 0.0);
        assert!((sigma_min(&d) - 0.5).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = random_cmatrix(&mut rng, 5);
        let p2 = m.dagger().mul(&m);
        let w0 = eigh(&p2).unwrap().eigenvalues[0].max(0.0).sqrt();
        assert!((sigma_min(&m) - w0).abs() < 1e-10);
    }

    #[test]
    fn lu_solve_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = random_cmatrix(&mut rng, 7).add(&CMatrix::identity(7).scale(C64::new(3.0, 0.0)));
        let inv = inverse(&m).unwrap();
        assert!(m.mul(&inv).max_diff(&CMatrix::identity(7)) < 1e-10);
    }

    #[test]
    fn realmat_qr_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = RealMat::from_columns(&[
            (0..10).map(|_| uniform(&mut rng)).collect(),
            (0..10).map(|_| uniform(&mut rng)).collect(),
            (0..10).map(|_| uniform(&mut rng)).collect(),
        ]);
        let q = m.qr_thin().unwrap();
        let gram = q.transpose().mul(&q);
        assert!(gram.sub(&RealMat::identity(3)).max_norm() < 1e-12);
    }
}
