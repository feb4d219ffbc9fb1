//! Adaptive one-dimensional quadrature.

use crate::scalar::{lit, Real};

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let m = (a + b) / lit(2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let m = (a + b) / lit(2.0);
    let lm = (a + m) / lit(2.0);
    let rm = (m + b) / lit(2.0);
    let (flm, frm) = (f(lm), f(rm));
    let six = lit::<T>(6.0);
    let four = lit::<T>(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
        return left + right + delta / lit(15.0);
    }
    let half = tol / lit(2.0);
    recurse(f, a, m, fa, flm, fm, left, half, depth - 1) + recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_and_exponential() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x * (-x).exp(), 0.0, 5.0, 1e-13);
        let exact = 1.0 - 6.0 * (-5.0_f64).exp();
        assert!((v - exact).abs() < 1e-11);
    }
}
