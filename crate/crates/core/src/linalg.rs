//! Small dense least-squares kernels.
//!
//! Everything here works on tall-skinny problems (k <= ~10 columns), so the
//! implementations favour clarity over blocking.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics if rows have unequal lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative threshold on the pivoted diagonal below which a column counts
/// as linearly dependent on the ones already chosen.
pub const RANK_TOL: f64 = 1e-10;

/// Column-pivoted Householder QR of `x`, with `Q'y` carried along.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Upper-triangular factor in pivoted column order, `cols x cols`.
    r: Matrix,
    /// `perm[j]` is the original column sitting at pivoted position `j`.
    perm: Vec<usize>,
    rank: usize,
    qty: Vec<f64>,
}

impl PivotedQr {
    pub fn new(x: &Matrix, y: &[f64]) -> Self {
        assert_eq!(x.rows(), y.len());
        let (n, k) = (x.rows(), x.cols());
        // Column-major working copy.
        let mut a: Vec<Vec<f64>> = (0..k).map(|j| x.column(j)).collect();
        let mut b = y.to_vec();
        let mut perm: Vec<usize> = (0..k).collect();
        let steps = n.min(k);
        let mut rank = 0;
        let mut first_norm = 0.0;

        for j in 0..steps {
            let (p, best) = (j..k)
                .map(|c| (c, a[c][j..].iter().map(|v| v * v).sum::<f64>().sqrt()))
                .fold((j, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if j == 0 {
                first_norm = best;
            }
            if best <= RANK_TOL * first_norm || best == 0.0 {
                break;
            }
            a.swap(j, p);
            perm.swap(j, p);

            // Householder reflector zeroing a[j][j+1..].
            let alpha = if a[j][j] > 0.0 { -best } else { best };
            let mut v: Vec<f64> = a[j][j..].to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|t| t * t).sum();
            if vnorm2 > 0.0 {
                for col in a.iter_mut().skip(j + 1) {
                    let s = 2.0 * dot(&v, &col[j..]) / vnorm2;
                    for (c, vi) in col[j..].iter_mut().zip(&v) {
                        *c -= s * vi;
                    }
                }
                let s = 2.0 * dot(&v, &b[j..]) / vnorm2;
                for (c, vi) in b[j..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            a[j][j] = alpha;
            for t in a[j][j + 1..].iter_mut() {
                *t = 0.0;
            }
            rank += 1;
        }

        let r = Matrix::from_fn(k, k, |i, j| if i <= j && i < n { a[j][i] } else { 0.0 });
        PivotedQr { r, perm, rank, qty: b }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cols(&self) -> usize {
        self.perm.len()
    }

    /// Basic least-squares solution: dependent columns get zero weight.
    /// Fitted values `X b` are the orthogonal projection of `y` regardless.
    pub fn solve(&self) -> Vec<f64> {
        let r = self.rank;
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = self.qty[i];
            for j in i + 1..r {
                s -= self.r.get(i, j) * z[j];
            }
            z[i] = s / self.r.get(i, i);
        }
        let mut coef = vec![0.0; self.cols()];
        for (pos, &orig) in self.perm.iter().enumerate().take(r) {
            coef[orig] = z[pos];
        }
        coef
    }

    /// `(X'X)^{-1}` in original column order. Requires full column rank.
    pub fn inverse_gram(&self) -> Option<Matrix> {
        let k = self.cols();
        if self.rank < k {
            return None;
        }
        // R^{-1} by back substitution, column by column.
        let mut rinv = Matrix::zeros(k, k);
        for c in 0..k {
            for i in (0..=c).rev() {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for j in i + 1..=c {
                    s -= self.r.get(i, j) * rinv.get(j, c);
                }
                rinv.set(i, c, s / self.r.get(i, i));
            }
        }
        // (R'R)^{-1} = R^{-1} R^{-T}, then undo the pivoting.
        let mut out = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                let s: f64 = (a.max(b)..k).map(|t| rinv.get(a, t) * rinv.get(b, t)).sum();
                out.set(self.perm[a], self.perm[b], s);
            }
        }
        Some(out)
    }
}

/// Least squares with rank detection; returns coefficients and rank.
pub fn lstsq(x: &Matrix, y: &[f64]) -> (Vec<f64>, usize) {
    let qr = PivotedQr::new(x, y);
    (qr.solve(), qr.rank())
}

/// Running triangular factor of a growing regression, updated one row at a
/// time with Givens rotations. Solving after each append gives the
/// expanding-window fit without refactorising the whole sample.
#[derive(Debug, Clone)]
pub struct RowAccumulator {
    k: usize,
    r: Vec<f64>,
    z: Vec<f64>,
    n: usize,
}

impl RowAccumulator {
    pub fn new(k: usize) -> Self {
        RowAccumulator { k, r: vec![0.0; k * k], z: vec![0.0; k], n: 0 }
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.k);
        let k = self.k;
        let mut row = x.to_vec();
        let mut yy = y;
        for i in 0..k {
            if row[i] == 0.0 {
                continue;
            }
            let rii = self.r[i * k + i];
            let h = rii.hypot(row[i]);
            let (c, s) = (rii / h, row[i] / h);
            for j in i..k {
                let rij = self.r[i * k + j];
                self.r[i * k + j] = c * rij + s * row[j];
                row[j] = c * row[j] - s * rij;
            }
            let zi = self.z[i];
            self.z[i] = c * zi + s * yy;
            yy = c * yy - s * zi;
        }
        self.n += 1;
    }

    /// Coefficients of the fit over every row pushed so far.
    pub fn solve(&self) -> (Vec<f64>, usize) {
        let r = Matrix::from_fn(self.k, self.k, |i, j| self.r[i * self.k + j]);
        lstsq(&r, &self.z)
    }
}

/// Solve `A x = b` for symmetric positive-definite pentadiagonal `A`, given
/// its main diagonal and first two super-diagonals. Returns `None` if the
/// factorisation breaks down.
pub fn solve_pentadiagonal_spd(d0: &[f64], d1: &[f64], d2: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = d0.len();
    let mut e0 = vec![0.0; n];
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    for j in 0..n {
        let mut diag = d0[j];
        if j >= 1 {
            diag -= e1[j - 1] * e1[j - 1];
        }
        if j >= 2 {
            diag -= e2[j - 2] * e2[j - 2];
        }
        if diag <= 0.0 {
            return None;
        }
        e0[j] = diag.sqrt();
        if j + 1 < n {
            let prev = if j >= 1 { e2[j - 1] * e1[j - 1] } else { 0.0 };
            e1[j] = (d1[j] - prev) / e0[j];
        }
        if j + 2 < n {
            e2[j] = d2[j] / e0[j];
        }
    }
    // L w = b
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        if i >= 1 {
            s -= e1[i - 1] * w[i - 1];
        }
        if i >= 2 {
            s -= e2[i - 2] * w[i - 2];
        }
        w[i] = s / e0[i];
    }
    // L' x = w
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = w[i];
        if i + 1 < n {
            s -= e1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= e2[i] * x[i + 2];
        }
        x[i] = s / e0[i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_gram(x: &Matrix, y: &[f64], b: &[f64]) -> f64 {
        let fit = x.mul_vec(b);
        let e: Vec<f64> = y.iter().zip(&fit).map(|(a, f)| a - f).collect();
        (0..x.cols()).map(|j| dot(&x.column(j), &e).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn exact_line() {
        let x = Matrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * i as f64).collect();
        let (b, rank) = lstsq(&x, &y);
        assert_eq!(rank, 2);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_project() {
        // Third column duplicates the second.
        let x = Matrix::from_fn(8, 3, |i, j| if j == 0 { 1.0 } else { (i * i) as f64 });
        let y: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let (b, rank) = lstsq(&x, &y);
        assert_eq!(rank, 2);
        assert!(residual_gram(&x, &y, &b) < 1e-10);
    }

    #[test]
    fn accumulator_matches_batch() {
        let rows: Vec<[f64; 3]> = (0..20).map(|i| {
            let t = i as f64;
            [1.0, t.cos(), (0.3 * t).sin() + 0.1 * t]
        }).collect();
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut acc = RowAccumulator::new(3);
        for (r, &v) in rows.iter().zip(&y) {
            acc.push(r, v);
        }
        let (b1, _) = acc.solve();
        let (b2, _) = lstsq(&Matrix::from_rows(&rows), &y);
        for (a, b) in b1.iter().zip(&b2) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn inverse_gram_is_inverse() {
        let x = Matrix::from_fn(10, 3, |i, j| ((i + 1) as f64).powi(j as i32) + 0.1 * (i * j) as f64);
        let qr = PivotedQr::new(&x, &vec![0.0; 10]);
        let inv = qr.inverse_gram().unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let g: f64 = (0..3).map(|c| {
                    let xtx: f64 = (0..10).map(|i| x.get(i, a) * x.get(i, c)).sum();
                    xtx * inv.get(c, b)
                }).sum();
                assert!((g - if a == b { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pentadiagonal_solver() {
        let n = 7;
        let d0 = vec![6.0; n];
        let d1 = vec![-2.0; n - 1];
        let d2 = vec![0.5; n - 2];
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let b: Vec<f64> = (0..n).map(|i| {
            let mut s = d0[i] * x_true[i];
            if i >= 1 { s += d1[i - 1] * x_true[i - 1]; }
            if i + 1 < n { s += d1[i] * x_true[i + 1]; }
            if i >= 2 { s += d2[i - 2] * x_true[i - 2]; }
            if i + 2 < n { s += d2[i] * x_true[i + 2]; }
            s
        }).collect();
        let x = solve_pentadiagonal_spd(&d0, &d1, &d2, &b).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
