//! Dense matrices, complex to real decomposition and Givens QR.
//!
//! Everything here is double precision. The QR factorization zeroes the
//! sub-diagonal column by column with Givens rotations working bottom-up and
//! keeps the diagonal of `R` non-negative by flipping rows of `Q'` and `R`
//! together.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

/// Diagonal magnitude below which a triangular factor is treated as singular.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix-vector product `H x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(h, v)| h * v).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Copy with columns reordered so that column `j` of the result is
    /// column `order[j]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<RealMatrix> {
        if order.len() != self.cols {
            return Err(Error::Dimension("permutation length".into()));
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (j, &src) in order.iter().enumerate() {
                out[(r, j)] = self[(r, src)];
            }
        }
        Ok(out)
    }

    /// Largest absolute entry-wise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("empty {rows}x{cols} matrix")));
    }
    if len != rows * cols {
        return Err(Error::Dimension(format!(
            "{len} entries for a {rows}x{cols} matrix"
        )));
    }
    Ok(())
}

/// Rewrites `y = H x` as the real system `y_r = H_r x_r` with
/// `H_r = [[Re H, -Im H], [Im H, Re H]]` and `y_r = [Re y; Im y]`.
pub fn complex_to_real_system(
    h: &ComplexMatrix,
    y: &[Complex64],
) -> Result<(RealMatrix, Vec<f64>)> {
    if y.len() != h.rows() {
        return Err(Error::Dimension(format!(
            "receive vector of length {} for {} receive antennas",
            y.len(),
            h.rows()
        )));
    }
    Ok((real_channel(h), complex_to_real(y)))
}

/// Real-valued image of a complex channel matrix.
pub fn real_channel(h: &ComplexMatrix) -> RealMatrix {
    let (nr, nt) = (h.rows(), h.cols());
    let mut out = RealMatrix::zeros(2 * nr, 2 * nt);
    for r in 0..nr {
        for c in 0..nt {
            let z = h[(r, c)];
            out[(r, c)] = z.re;
            out[(r, c + nt)] = -z.im;
            out[(r + nr, c)] = z.im;
            out[(r + nr, c + nt)] = z.re;
        }
    }
    out
}

/// Stacks real parts above imaginary parts.
pub fn complex_to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// Output of [`qr_givens`]: `q * r == a[:, column_order]`.
#[derive(Debug, Clone)]
pub struct QrFactors {
    /// `m x n`, orthonormal columns.
    pub q: RealMatrix,
    /// `n x n`, upper triangular with non-negative diagonal.
    pub r: RealMatrix,
    pub column_order: Vec<usize>,
}

/// Thin QR factorization of an `m x n` matrix (`m >= n`) by Givens rotations.
///
/// With `sorted` set, column `j` is chosen among the remaining columns as the
/// one with the smallest residual norm over rows `j..m` (sorted QRD).
pub fn qr_givens(a: &RealMatrix, sorted: bool) -> Result<QrFactors> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::Dimension(format!(
            "QR needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut work = a.clone();
    // Q' accumulated as the product of all applied rotations.
    let mut qt = RealMatrix::identity(m);
    let mut order: Vec<usize> = (0..n).collect();

    for j in 0..n {
        if sorted {
            let pick = (j..n)
                .map(|c| {
                    let norm: f64 = (j..m).map(|i| work[(i, c)] * work[(i, c)]).sum();
                    (c, norm)
                })
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .map(|(c, _)| c)
                .unwrap_or(j);
            if pick != j {
                swap_columns(&mut work, j, pick);
                order.swap(j, pick);
            }
        }

        for i in (j + 1..m).rev() {
            let lower = work[(i, j)];
            if lower == 0.0 {
                continue;
            }
            let upper = work[(i - 1, j)];
            let radius = upper.hypot(lower);
            let (c, s) = (upper / radius, lower / radius);
            rotate_rows(&mut work, i - 1, i, c, s, j);
            rotate_rows(&mut qt, i - 1, i, c, s, 0);
            work[(i, j)] = 0.0;
        }

        if work[(j, j)] < 0.0 {
            negate_row(&mut work, j, j);
            negate_row(&mut qt, j, 0);
        }
        let diag = work[(j, j)];
        if diag.abs() < RANK_TOLERANCE {
            return Err(Error::RankDeficient {
                index: j,
                value: diag,
            });
        }
    }

    let mut r = RealMatrix::zeros(n, n);
    for i in 0..n {
        for c in i..n {
            r[(i, c)] = work[(i, c)];
        }
    }
    let mut q = RealMatrix::zeros(m, n);
    for i in 0..m {
        for k in 0..n {
            q[(i, k)] = qt[(k, i)];
        }
    }
    Ok(QrFactors {
        q,
        r,
        column_order: order,
    })
}

fn rotate_rows(mat: &mut RealMatrix, upper: usize, lower: usize, c: f64, s: f64, from: usize) {
    let cols = mat.cols;
    let (head, tail) = mat.data.split_at_mut(lower * cols);
    let up = &mut head[upper * cols + from..upper * cols + cols];
    let lo = &mut tail[from..cols];
    for (x, y) in up.iter_mut().zip(lo.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a + s * b;
        *y = c * b - s * a;
    }
}

fn negate_row(mat: &mut RealMatrix, row: usize, from: usize) {
    let cols = mat.cols;
    for v in &mut mat.data[row * cols + from..(row + 1) * cols] {
        *v = -*v;
    }
}

fn swap_columns(mat: &mut RealMatrix, a: usize, b: usize) {
    for r in 0..mat.rows {
        mat.data.swap(r * mat.cols + a, r * mat.cols + b);
    }
}

/// Returns `q' y`.
pub fn rotate_receive(q: &RealMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != q.rows() {
        return Err(Error::Dimension(format!(
            "receive vector of length {} for Q with {} rows",
            y.len(),
            q.rows()
        )));
    }
    let mut out = vec![0.0; q.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for (o, qv) in out.iter_mut().zip(q.row(i)) {
            *o += qv * yi;
        }
    }
    Ok(out)
}

/// The triangular system `Y = R x + N` that the tree searches operate on.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub r: RealMatrix,
    pub y_rot: Vec<f64>,
    pub q: RealMatrix,
    /// Position `j` of the detection order holds real symbol `column_order[j]`.
    pub column_order: Vec<usize>,
}

impl RealSystem {
    /// Factors the real channel and rotates the real receive vector.
    pub fn from_real(h_r: &RealMatrix, y_r: &[f64], sorted: bool) -> Result<Self> {
        let QrFactors { q, r, column_order } = qr_givens(h_r, sorted)?;
        let y_rot = rotate_receive(&q, y_r)?;
        Ok(Self {
            r,
            y_rot,
            q,
            column_order,
        })
    }

    pub fn from_complex(h: &ComplexMatrix, y: &[Complex64], sorted: bool) -> Result<Self> {
        let (h_r, y_r) = complex_to_real_system(h, y)?;
        Self::from_real(&h_r, &y_r, sorted)
    }

    /// Number of real tree levels (`2 N_T`).
    pub fn levels(&self) -> usize {
        self.r.cols()
    }

    /// Maps a vector in detection order back to natural real-stacking order.
    pub fn unpermute(&self, detected: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; detected.len()];
        for (j, &src) in self.column_order.iter().enumerate() {
            out[src] = detected[j];
        }
        out
    }

    /// Maps a natural-order real vector into detection order.
    pub fn permute(&self, natural: &[f64]) -> Vec<f64> {
        self.column_order.iter().map(|&src| natural[src]).collect()
    }

    /// `|| Y - R x ||^2` for a full vector in detection order.
    pub fn metric(&self, x: &[f64]) -> f64 {
        let n = self.levels();
        (0..n)
            .map(|i| {
                let fit: f64 = (i..n).map(|j| self.r[(i, j)] * x[j]).sum();
                let e = self.y_rot[i] - fit;
                e * e
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_real(rng: &mut ChaCha8Rng, m: usize, n: usize) -> RealMatrix {
        let data = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        RealMatrix::new(m, n, data).unwrap()
    }

    #[test]
    fn real_scalar_channel() {
        let h = ComplexMatrix::from_rows(&[vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let (hr, yr) = complex_to_real_system(&h, &[Complex64::new(2.0, 3.0)]).unwrap();
        assert_eq!(hr, RealMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        assert_eq!(yr, vec![2.0, 3.0]);
    }

    #[test]
    fn pure_rotation_channel() {
        let h = ComplexMatrix::from_rows(&[vec![Complex64::new(0.0, 1.0)]]).unwrap();
        let (hr, yr) = complex_to_real_system(&h, &[Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(hr, RealMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap());
        assert_eq!(yr, vec![0.0, 0.0]);
    }

    #[test]
    fn decomposition_rejects_bad_shapes() {
        let h = ComplexMatrix::new(2, 1, vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!(complex_to_real_system(&h, &[Complex64::new(0.0, 0.0)]).is_err());
        assert!(ComplexMatrix::new(2, 2, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(RealMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(RealMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn decomposition_homomorphism_2x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let data: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let h = ComplexMatrix::new(2, 2, data).unwrap();
            let x: Vec<Complex64> = (0..2)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let direct = complex_to_real(&h.mul_vec(&x).unwrap());
            let via_real = real_channel(&h).mul_vec(&complex_to_real(&x)).unwrap();
            for (a, b) in direct.iter().zip(&via_real) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_of_identity_is_trivial() {
        let f = qr_givens(&RealMatrix::identity(4), false).unwrap();
        assert_eq!(f.q, RealMatrix::identity(4));
        assert_eq!(f.r, RealMatrix::identity(4));
        assert_eq!(f.column_order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn qr_of_swap_matrix() {
        // One rotation by 90 degrees then a sign flip on the last row.
        let a = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let f = qr_givens(&a, false).unwrap();
        assert_eq!(f.r, RealMatrix::identity(2));
        assert_eq!(f.q, a);
    }

    #[test]
    fn qr_random_16() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = random_real(&mut rng, 16, 16);
        let f = qr_givens(&a, false).unwrap();
        let qr = f.q.matmul(&f.r).unwrap();
        assert!(qr.max_abs_diff(&a) < 1e-9);
        let qtq = f.q.transpose().matmul(&f.q).unwrap();
        assert!(qtq.max_abs_diff(&RealMatrix::identity(16)) < 1e-9);
        for i in 0..16 {
            assert!(f.r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn sorted_qr_orders_by_residual_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = random_real(&mut rng, 6, 4);
        // Make column 2 tiny so it is chosen first.
        for r in 0..6 {
            a[(r, 2)] *= 1e-3;
        }
        let f = qr_givens(&a, true).unwrap();
        assert_eq!(f.column_order[0], 2);
        let mut seen = f.column_order.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        let qr = f.q.matmul(&f.r).unwrap();
        assert!(qr.max_abs_diff(&a.permute_columns(&f.column_order).unwrap()) < 1e-9);
    }

    #[test]
    fn qr_rejects_rank_deficiency_and_wide_input() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(qr_givens(&a, false), Err(Error::RankDeficient { index: 1, .. })));
        let wide = RealMatrix::zeros(1, 2);
        assert!(matches!(qr_givens(&wide, false), Err(Error::Dimension(_))));
    }

    #[test]
    fn rotate_receive_examples() {
        assert_eq!(rotate_receive(&RealMatrix::identity(2), &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let rot90 = RealMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(rotate_receive(&rot90, &[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        assert!(rotate_receive(&rot90, &[1.0]).is_err());
    }

    #[test]
    fn rotated_receive_matches_triangular_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_real(&mut rng, 8, 6);
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let noise: Vec<f64> = (0..8).map(|_| rng.random_range(-0.1..0.1)).collect();
        let y: Vec<f64> = h
            .mul_vec(&x)
            .unwrap()
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b)
            .collect();
        let f = qr_givens(&h, false).unwrap();
        let lhs = rotate_receive(&f.q, &y).unwrap();
        let rx = f.r.mul_vec(&x).unwrap();
        let qn = rotate_receive(&f.q, &noise).unwrap();
        let err: f64 = lhs
            .iter()
            .zip(rx.iter().zip(&qn))
            .map(|(l, (a, b))| (l - a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9);
    }

    #[test]
    fn permutation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_real(&mut rng, 6, 6);
        let sys = RealSystem::from_real(&h, &[0.0; 6], true).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(sys.unpermute(&sys.permute(&x)), x.to_vec());
    }
}
