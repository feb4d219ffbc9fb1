//! Ordinary least squares on small design matrices.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Real};

/// Straight-line fit `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Standard error of the slope.
    pub slope_stderr: T,
    /// Root-mean-square residual.
    pub rms: T,
    pub samples: usize,
}

pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Fit(format!("need at least two paired samples, got {n}")));
    }
    let nn = from_usize::<T>(n);
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / nn;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / nn;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == T::zero() {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: T = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .fold(T::zero(), |a, v| a + v);
    let dof = if n > 2 { from_usize::<T>(n - 2) } else { T::one() };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (ss / dof / sxx).sqrt(),
        rms: (ss / nn).sqrt(),
        samples: n,
    })
}

/// Least-squares polynomial coefficients (lowest order first) via the
/// normal equations; intended for degree ≤ 3 on a handful of points.
pub fn fit_polynomial<T: Real>(x: &[T], y: &[T], degree: usize) -> Result<Vec<T>> {
    let m = degree + 1;
    if x.len() != y.len() || x.len() < m {
        return Err(Error::Fit(format!(
            "degree {degree} fit needs at least {m} samples, got {}",
            x.len()
        )));
    }
    // scale abscissae to O(1) for conditioning
    let scale = x.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let scale = if scale > T::zero() { scale } else { T::one() };
    let mut a = vec![vec![T::zero(); m + 1]; m];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = xi / scale;
        let mut pow = vec![T::one(); m];
        for j in 1..m {
            pow[j] = pow[j - 1] * t;
        }
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pow[r] * pow[c];
            }
            a[r][m] += pow[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        if a[col][col] == T::zero() {
            return Err(Error::Fit("singular normal equations".into()));
        }
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(r);
            for (x, &v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * v;
            }
        }
    }
    let mut coef = vec![T::zero(); m];
    for r in (0..m).rev() {
        let mut s = a[r][m];
        for c in r + 1..m {
            s -= a[r][c] * coef[c];
        }
        coef[r] = s / a[r][r];
    }
    let mut sp = T::one();
    for c in coef.iter_mut() {
        *c /= sp;
        sp *= scale;
    }
    Ok(coef)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(f.rms < 1e-14);
    }

    #[test]
    fn exact_quadratic_through_three_points() {
        let x = [0.3, 0.15, 0.075];
        let y: Vec<f64> = x.iter().map(|v| -4.0 + 2.0 * v + 7.0 * v * v).collect();
        let c = fit_polynomial(&x, &y, 2).unwrap();
        assert!((c[0] + 4.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-10 && (c[2] - 7.0).abs() < 1e-9);
    }
}
