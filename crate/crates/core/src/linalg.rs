//! Banded linear least squares by Givens rotations.
//!
//! Every system in this crate has rows with at most `k` consecutive nonzero
//! entries (one B-spline block). Rows are sorted by their first column and
//! rotated one at a time into an upper triangular `R` with bandwidth `k`,
//! which costs `O(rows · k²)` and never forms the normal equations.

/// Relative rank tolerance on the diagonal of `R`, scaled by `‖A‖_F`.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct BandRow {
    first: usize,
    values: Vec<f64>,
    rhs: f64,
}

/// Overdetermined system `A·x ≈ b` with banded rows.
#[derive(Debug, Clone)]
pub struct BandedSystem {
    ncols: usize,
    bandwidth: usize,
    rows: Vec<BandRow>,
}

/// Failure of [`BandedSystem::solve`]: `R[column][column]` fell below tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankDeficient {
    pub column: usize,
}

impl BandedSystem {
    pub fn new(ncols: usize, bandwidth: usize) -> Self {
        assert!(bandwidth >= 1 && bandwidth <= ncols.max(1));
        Self {
            ncols,
            bandwidth,
            rows: Vec::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Appends a row whose nonzero entries start at column `first`.
    ///
    /// Panics if the row is wider than the bandwidth or runs past the last column.
    pub fn push_row(&mut self, first: usize, values: &[f64], rhs: f64) {
        assert!(values.len() <= self.bandwidth, "row wider than bandwidth");
        assert!(
            first + values.len() <= self.ncols,
            "row exceeds column count"
        );
        self.rows.push(BandRow {
            first,
            values: values.to_vec(),
            rhs,
        });
    }

    /// Dense row-major copy of `A`.
    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.ncols];
                dense[row.first..row.first + row.values.len()].copy_from_slice(&row.values);
                dense
            })
            .collect()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    /// `A·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.values
                    .iter()
                    .zip(&x[row.first..])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn frobenius_norm(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.values.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Least-squares minimizer of `‖A·x − b‖²`.
    pub fn solve(&self) -> Result<Vec<f64>, RankDeficient> {
        let n = self.ncols;
        let bw = self.bandwidth;
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.rows[i].first);

        // r[c * bw + j] holds R[c][c + j].
        let mut r = vec![0.0; n * bw];
        let mut qtb = vec![0.0; n];
        let mut work = vec![0.0; bw];

        for &idx in &order {
            let row = &self.rows[idx];
            work.iter_mut().for_each(|w| *w = 0.0);
            work[..row.values.len()].copy_from_slice(&row.values);
            let mut y = row.rhs;
            let mut col = row.first;
            while col < n {
                if work.iter().all(|&w| w == 0.0) {
                    break;
                }
                let pivot = work[0];
                if pivot != 0.0 {
                    let diag = r[col * bw];
                    if diag == 0.0 {
                        r[col * bw..col * bw + bw].copy_from_slice(&work);
                        qtb[col] = y;
                        work.iter_mut().for_each(|w| *w = 0.0);
                        break;
                    }
                    let h = diag.hypot(pivot);
                    let (cs, sn) = (diag / h, pivot / h);
                    let rrow = &mut r[col * bw..col * bw + bw];
                    for (rj, wj) in rrow.iter_mut().zip(work.iter_mut()) {
                        let (a, b) = (*rj, *wj);
                        *rj = cs * a + sn * b;
                        *wj = -sn * a + cs * b;
                    }
                    let (a, b) = (qtb[col], y);
                    qtb[col] = cs * a + sn * b;
                    y = -sn * a + cs * b;
                }
                work.rotate_left(1);
                work[bw - 1] = 0.0;
                col += 1;
            }
        }

        let tol = RANK_TOL * self.frobenius_norm();
        for c in 0..n {
            let d = r[c * bw].abs();
            if d <= tol || !d.is_finite() {
                return Err(RankDeficient { column: c });
            }
        }

        let mut x = vec![0.0; n];
        for c in (0..n).rev() {
            let mut acc = qtb[c];
            for j in 1..bw.min(n - c) {
                acc -= r[c * bw + j] * x[c + j];
            }
            x[c] = acc / r[c * bw];
        }
        Ok(x)
    }
}
