//! Small least-squares helpers: dense linear solves, log-linear
//! exponential fits and a Gauss-Newton fit for the inversion-recovery
//! model.

use crate::error::{Result, SpinSimError};
use crate::Real;

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub fn solve_linear<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < T::of(1e-300) {
            return Err(SpinSimError::SingularInversion(format!(
                "zero pivot in column {col}"
            )));
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    Ok((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Least-squares solution of an overdetermined system via normal equations.
pub fn least_squares<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let rows = a.len();
    if rows == 0 || rows != b.len() {
        return Err(SpinSimError::SingularInversion("empty system".into()));
    }
    let cols = a[0].len();
    let mut ata = vec![vec![T::zero(); cols]; cols];
    let mut atb = vec![T::zero(); cols];
    for (row, &rhs) in a.iter().zip(b) {
        for i in 0..cols {
            atb[i] += row[i] * rhs;
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve_linear(&ata, &atb)
}

/// Ordinary least-squares line y = intercept + slope x.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(SpinSimError::FitFailure(
            "need at least two points for a line fit".into(),
        ));
    }
    let a: Vec<Vec<T>> = x.iter().map(|&xi| vec![T::one(), xi]).collect();
    let sol = least_squares(&a, y)?;
    Ok((sol[0], sol[1]))
}

/// Fit y = amplitude * exp(-t / tau) through positive samples by a
/// log-linear least squares. Returns (amplitude, tau).
pub fn fit_exp_decay<T: Real>(t: &[T], y: &[T]) -> Result<(T, T)> {
    if y.iter().any(|&v| v <= T::zero()) {
        return Err(SpinSimError::FitFailure(
            "exponential fit requires positive samples".into(),
        ));
    }
    let logs: Vec<T> = y.iter().map(|&v| v.ln()).collect();
    let (intercept, slope) = fit_line(t, &logs)?;
    if slope >= T::zero() {
        return Err(SpinSimError::FitFailure(format!(
            "no decay: fitted slope {slope} is non-negative"
        )));
    }
    Ok((intercept.exp(), -slope.recip()))
}

/// Gauss-Newton fit of M(t) = m_eq (1 - 2 exp(-t/t1)). Returns (m_eq, t1).
pub fn fit_inversion_recovery<T: Real>(t: &[T], m: &[T]) -> Result<(T, T)> {
    if t.len() < 4 || t.len() != m.len() {
        return Err(SpinSimError::FitFailure(
            "inversion-recovery fit needs at least 4 points".into(),
        ));
    }
    let mut m_eq = m
        .iter()
        .fold(T::zero(), |a, &b| if b.abs() > a.abs() { b } else { a });
    if m_eq == T::zero() {
        m_eq = T::of(0.5);
    }
    let span = t.iter().fold(T::zero(), |a, &b| if b > a { b } else { a });
    let mut t1 = span * T::of(0.3);
    for _ in 0..200 {
        let mut jtj = [[T::zero(); 2]; 2];
        let mut jtr = [T::zero(); 2];
        for (&ti, &mi) in t.iter().zip(m) {
            let e = (-ti / t1).exp();
            let model = m_eq * (T::one() - T::of(2.0) * e);
            let r = mi - model;
            let ja = T::one() - T::of(2.0) * e;
            let jb = -T::of(2.0) * m_eq * e * ti / (t1 * t1);
            jtj[0][0] += ja * ja;
            jtj[0][1] += ja * jb;
            jtj[1][0] += ja * jb;
            jtj[1][1] += jb * jb;
            jtr[0] += ja * r;
            jtr[1] += jb * r;
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < T::of(1e-300) {
            return Err(SpinSimError::FitFailure("degenerate Jacobian".into()));
        }
        let da = (jtr[0] * jtj[1][1] - jtr[1] * jtj[0][1]) / det;
        let db = (jtr[1] * jtj[0][0] - jtr[0] * jtj[1][0]) / det;
        m_eq += da;
        t1 += db;
        if t1 <= T::zero() {
            return Err(SpinSimError::FitFailure(
                "inversion-recovery fit diverged to non-positive T1".into(),
            ));
        }
        if da.abs() < T::of(1e-14) * (T::one() + m_eq.abs())
            && db.abs() < T::of(1e-14) * (T::one() + t1.abs())
        {
            break;
        }
    }
    Ok((m_eq, t1))
}
