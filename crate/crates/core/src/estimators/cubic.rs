//! Real roots of polynomials up to degree three.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative size below which the depressed-cubic discriminant counts as zero.
const DISCRIMINANT_EPS: f64 = 1e-12;
const NEWTON_STEPS: usize = 50;

fn eval<T: Scalar>(c: &[T; 4], x: T) -> T {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn deriv<T: Scalar>(c: &[T; 4], x: T) -> T {
    (T::lit(3.0) * c[0] * x + T::lit(2.0) * c[1]) * x + c[2]
}

/// Damped Newton: halve the step while it does not reduce the residual.
fn polish<T: Scalar>(c: &[T; 4], mut x: T, target: T) -> T {
    let mut fx = eval(c, x).abs();
    for _ in 0..NEWTON_STEPS {
        if fx <= target {
            break;
        }
        let dfx = deriv(c, x);
        if dfx == T::zero() {
            break;
        }
        let mut step = eval(c, x) / dfx;
        let mut improved = false;
        for _ in 0..20 {
            let cand = x - step;
            let fc = eval(c, cand).abs();
            if fc < fx {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
            step *= T::lit(0.5);
        }
        if !improved {
            break;
        }
    }
    x
}

fn quadratic<T: Scalar>(a: T, b: T, c: T) -> Vec<T> {
    if a == T::zero() {
        return if b == T::zero() { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    if disc == T::zero() {
        return vec![-b / (T::lit(2.0) * a)];
    }
    let sign = if b >= T::zero() { T::one() } else { -T::one() };
    let q = -T::lit(0.5) * (b + sign * disc.sqrt());
    vec![q / a, c / q]
}

/// All real roots of `a x^3 + b x^2 + c x + e`, ascending, multiple roots
/// reported once. Degenerate leading coefficients fall back to the
/// quadratic or linear case. Each root is polished by damped Newton steps
/// towards a residual of `1e-12 * max(1, max |coefficient|)`.
pub fn solve_cubic<T: Scalar>(a: T, b: T, c: T, e: T) -> Result<Vec<T>> {
    if [a, b, c, e].iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroPolynomial);
    }
    let coeffs = [a, b, c, e];
    let scale = coeffs.iter().fold(T::one(), |m, &v| m.max(v.abs()));
    let target = T::lit(1e-12) * scale;

    let mut roots = if a == T::zero() {
        quadratic(b, c, e)
    } else {
        depressed_roots(b / a, c / a, e / a)
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r, target);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= T::lit(1e-10) * T::one().max(y.abs()));
    Ok(roots)
}

/// Roots of the monic cubic `x^3 + b x^2 + c x + d` via the depressed form `t^3 + p t + q`.
fn depressed_roots<T: Scalar>(b: T, c: T, d: T) -> Vec<T> {
    let three = T::lit(3.0);
    let shift = b / three;
    let p = c - b * b / three;
    let q = T::lit(2.0) * b * b * b / T::lit(27.0) - b * c / three + d;
    let scale_p = c.abs() + b * b / three;
    let scale_q = T::lit(2.0) * (b * b * b).abs() / T::lit(27.0) + (b * c).abs() / three + d.abs();
    let eps = T::lit(DISCRIMINANT_EPS);

    if p.abs() <= eps * scale_p && q.abs() <= eps * scale_q {
        return vec![-shift];
    }
    let half_q = q / T::lit(2.0);
    let third_p = p / three;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let disc_scale = (half_q * half_q).max((third_p * third_p * third_p).abs());

    let ts: Vec<T> = if disc.abs() <= eps * disc_scale {
        // One simple and one double root.
        vec![three * q / p, -three * q / (T::lit(2.0) * p)]
    } else if disc > T::zero() {
        let sign = if q >= T::zero() { T::one() } else { -T::one() };
        let big = -sign * (half_q.abs() + disc.sqrt()).cbrt();
        let t = if big == T::zero() { T::zero() } else { big - p / (three * big) };
        vec![t]
    } else {
        let r = T::lit(2.0) * (-third_p).sqrt();
        let arg = (three * q / (T::lit(2.0) * p) * (-three / p).sqrt()).max(-T::one()).min(T::one());
        let phi = arg.acos() / three;
        let step = T::two_pi() / three;
        (0..3).map(|k| r * (phi - step * T::from_usize_lossy(k)).cos()).collect()
    };
    ts.into_iter().map(|t| t - shift).collect()
}
