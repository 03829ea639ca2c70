//! Shared numerical routines: deterministic summation, 1D minimization,
//! dense least squares, natural cubic splines, and the 2x2 symmetric
//! eigenproblem.

use crate::error::{Error, Result};

/// Pairwise (tree) summation. Deterministic for a fixed slice order and more
/// accurate than a left fold on long energy accumulations.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
/// Returns the best abscissa and value found after `iters` shrink steps.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimize `‖A x − b‖₂` for a dense row-major `m×n` matrix, `m ≥ n`, by
/// Householder QR. Returns the solution and the explicitly recomputed
/// residual norm. Fails on rank deficiency.
pub fn least_squares(m: usize, n: usize, a_in: &[f64], b_in: &[f64]) -> Result<(Vec<f64>, f64)> {
    assert!(m >= n, "least_squares requires m >= n");
    assert_eq!(a_in.len(), m * n);
    assert_eq!(b_in.len(), m);
    let mut a = a_in.to_vec();
    let mut b = b_in.to_vec();
    let scale = a_in.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let pivot_tol = 1e-12 * scale.max(1.0);

    for k in 0..n {
        let mut col_norm = 0.0;
        for i in k..m {
            col_norm += a[i * n + k] * a[i * n + k];
        }
        let col_norm = col_norm.sqrt();
        if col_norm <= pivot_tol {
            return Err(Error::RankDeficient(k));
        }
        let alpha = if a[k * n + k] > 0.0 {
            -col_norm
        } else {
            col_norm
        };
        let mut v = vec![0.0; m - k];
        v[0] = a[k * n + k] - alpha;
        for i in (k + 1)..m {
            v[i - k] = a[i * n + k];
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        a[k * n + k] = alpha;
        for i in (k + 1)..m {
            a[i * n + k] = 0.0;
        }
        if vtv == 0.0 {
            continue;
        }
        for j in (k + 1)..n {
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i - k] * a[i * n + j];
            }
            let f = 2.0 * dot / vtv;
            for i in k..m {
                a[i * n + j] -= f * v[i - k];
            }
        }
        let mut dot = 0.0;
        for i in k..m {
            dot += v[i - k] * b[i];
        }
        let f = 2.0 * dot / vtv;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }

    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k * n + j] * x[j];
        }
        x[k] = s / a[k * n + k];
    }

    let mut residuals = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..n {
            row += a_in[i * n + j] * x[j];
        }
        let r = row - b_in[i];
        residuals.push(r * r);
    }
    Ok((x, pairwise_sum(&residuals).sqrt()))
}

/// Eigendecomposition of the symmetric matrix `[[a, b], [b, c]]`.
/// Returns `(l1, v1, l2, v2)` with `l1 <= l2` and orthonormal eigenvectors.
pub fn sym_eigen_2x2(a: f64, b: f64, c: f64) -> (f64, [f64; 2], f64, [f64; 2]) {
    let half_tr = 0.5 * (a + c);
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = half_tr - disc;
    let l2 = half_tr + disc;
    let (vx, vy) = if b != 0.0 {
        // Eigenvector for l2 from whichever row is better conditioned.
        if (l2 - a).abs() > (l2 - c).abs() {
            (b, l2 - a)
        } else {
            (l2 - c, b)
        }
    } else if a >= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let nrm = (vx * vx + vy * vy).sqrt();
    let (vx, vy) = if nrm == 0.0 {
        (1.0, 0.0)
    } else {
        (vx / nrm, vy / nrm)
    };
    (l1, [-vy, vx], l2, [vx, vy])
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m2: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::InsufficientData(
                "cubic spline needs at least 3 knots".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let n = xs.len();
        // Thomas algorithm for the tridiagonal second-derivative system.
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = (rhs[i] - sup[i] * m2[i + 1]) / diag[i];
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m2,
        })
    }

    pub fn from_knots(knots: &[(f64, f64)]) -> Result<Self> {
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        Self::natural(&xs, &ys)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 1] {
            return n - 2;
        }
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m2[i] + (b * b * b - b) * self.m2[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m2[i] + (3.0 * b * b - 1.0) * self.m2[i + 1]) * h / 6.0
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.m2[i] + b * self.m2[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_on_structured_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_min(|t| (t - 1.25) * (t - 1.25) + 3.0, -4.0, 6.0, 80);
        // Abscissa accuracy near a smooth minimum is limited to about
        // sqrt(machine epsilon) because the function is flat there.
        assert!((x - 1.25).abs() < 1e-6);
        assert!((fx - 3.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        // Overdetermined consistent system: rows (1, t_i), rhs 2 + 3 t_i.
        let ts = [0.0, 0.5, 1.0, 1.5, 2.0];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &t in &ts {
            a.extend_from_slice(&[1.0, t]);
            b.push(2.0 + 3.0 * t);
        }
        let (x, r) = least_squares(5, 2, &a, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
        assert!(r < 1e-12);
    }

    #[test]
    fn least_squares_minimizes_inconsistent_system() {
        // x ~ mean of observations for the all-ones design matrix.
        let a = [1.0, 1.0, 1.0];
        let b = [1.0, 2.0, 6.0];
        let (x, r) = least_squares(3, 1, &a, &b).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12);
        let expect =
            ((1.0f64 - 3.0).powi(2) + (2.0f64 - 3.0).powi(2) + (6.0f64 - 3.0).powi(2)).sqrt();
        assert!((r - expect).abs() < 1e-12);
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        // Two identical columns.
        let a = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        assert!(matches!(
            least_squares(3, 2, &a, &b),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn sym_eigen_diagonal_and_rotated() {
        let (l1, v1, l2, v2) = sym_eigen_2x2(2.0, 0.0, -1.0);
        assert_eq!((l1, l2), (-1.0, 2.0));
        assert!((v2[0].abs() - 1.0).abs() < 1e-15 && v2[1].abs() < 1e-15);
        assert!(v1[0].abs() < 1e-15 && (v1[1].abs() - 1.0).abs() < 1e-15);

        // [[0, 1], [1, 0]] has eigenpairs -1: (1,-1)/sqrt(2) and 1: (1,1)/sqrt(2).
        let (l1, v1, l2, v2) = sym_eigen_2x2(0.0, 1.0, 0.0);
        assert!((l1 + 1.0).abs() < 1e-15 && (l2 - 1.0).abs() < 1e-15);
        assert!((v2[0] - v2[1]).abs() < 1e-15);
        assert!((v1[0] + v1[1]).abs() < 1e-15);
        // Orthonormality.
        assert!((v1[0] * v2[0] + v1[1] * v2[1]).abs() < 1e-15);
    }

    #[test]
    fn spline_reproduces_line_exactly_and_parabola_approximately() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let line: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = CubicSpline::natural(&xs, &line).unwrap();
        for &x in &xs {
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-14);
            assert!((s.deriv(x) - 2.0).abs() < 1e-12);
        }

        let xs: Vec<f64> = (-20..=20).map(|i| i as f64 / 10.0).collect();
        let par: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let s = CubicSpline::natural(&xs, &par).unwrap();
        // Interior accuracy; natural end conditions only pollute the outer knots.
        assert!((s.eval(0.05) - 0.00125).abs() < 1e-4);
        assert!((s.deriv(0.0) - 0.0).abs() < 1e-12);
        assert!((s.deriv2(0.0) - 1.0).abs() < 1e-2);
    }
}
