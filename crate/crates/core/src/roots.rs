//! Scalar minimization and root bracketing.

use crate::scalar::{lit, Real};

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, tol: T) -> (T, T) {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = (c, fc);
    for x in [a, b, d] {
        let fx = if x == d { fd } else { f(x) };
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Maximization counterpart of [`golden_section_min`], with a fallible objective.
pub fn golden_section_max_fallible<T: Real, E>(
    f: impl Fn(T) -> Result<T, E>,
    lo: T,
    hi: T,
    tol: T,
) -> Result<(T, T), E> {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Bisection for a sign change of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must
/// have opposite signs (or one of them vanish).
pub fn bisect<T: Real, E>(f: impl Fn(T) -> Result<T, E>, mut lo: T, mut hi: T, tol: T) -> Result<Option<T>, E> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(Some(lo));
    }
    if fhi == T::zero() {
        return Ok(Some(hi));
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if (hi - lo).abs() <= tol {
            return Ok(Some(mid));
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(Some(mid));
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo + hi) / lit(2.0)))
}

/// Vertex `(x, y)` of the parabola through three points with distinct abscissae.
pub fn parabola_vertex<T: Real>(p0: (T, T), p1: (T, T), p2: (T, T)) -> Option<(T, T)> {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == T::zero() || !a.is_finite() {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let x = -b / (lit::<T>(2.0) * a);
    let y = y1 + d01 * (x - x1) + a * (x - x0) * (x - x1);
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, y) = golden_section_min(|x: f64| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_root_and_reports_no_bracket() {
        let r = bisect(|x: f64| Ok::<_, ()>(x * x - 2.0), 0.0, 2.0, 1e-14)
            .unwrap()
            .unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-13);
        assert_eq!(
            bisect(|x: f64| Ok::<_, ()>(x * x + 1.0), 0.0, 2.0, 1e-14).unwrap(),
            None
        );
    }

    #[test]
    fn vertex_of_exact_parabola() {
        let f = |x: f64| -2.0 * (x - 1.5).powi(2) + 4.0;
        let (x, y) = parabola_vertex((1.0, f(1.0)), (1.2, f(1.2)), (2.0, f(2.0))).unwrap();
        assert!((x - 1.5).abs() < 1e-12 && (y - 4.0).abs() < 1e-12);
    }
}
