//! Real roots of small real polynomials via companion-matrix eigenvalues.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 16;

/// Eigenvalues with an imaginary part below this (relative to `max(1, |z|)`)
/// are taken as real.
pub const IMAG_TOL: f64 = 1e-8;

/// Evaluate a polynomial with coefficients in descending powers.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// `sum |c_i| |x|^i`, the natural scale of a residual at `x`.
fn residual_scale(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .fold(0.0, |acc: f64, &c| acc * x.abs() + c.abs())
        .max(f64::MIN_POSITIVE)
}

/// Damped Newton polishing; never accepts a step that increases `|p|`.
pub fn polish(coeffs: &[f64], mut x: f64, steps: usize) -> f64 {
    let mut px = horner(coeffs, x).abs();
    for _ in 0..steps {
        if px == 0.0 {
            break;
        }
        let (p, dp) = horner_with_derivative(coeffs, x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let mut step = p / dp;
        let mut improved = false;
        for _ in 0..8 {
            let cand = x - step;
            let pc = horner(coeffs, cand).abs();
            if pc < px {
                x = cand;
                px = pc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Real parts of all eigenvalues of the companion matrix whose imaginary part
/// is at most `imag_tol * max(1, |z|)`.
pub(crate) fn near_real_eigenvalues(coeffs: &[f64], imag_tol: f64) -> Result<Vec<f64>> {
    let degree = validate(coeffs)?;
    let lead = coeffs[0];
    if degree == 1 {
        return Ok(vec![-coeffs[1] / lead]);
    }
    // companion of the monic polynomial: ones on the subdiagonal, negated
    // normalized coefficients in the first row
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for j in 0..degree {
        m[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    Ok(m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= imag_tol * z.norm().max(1.0))
        .map(|z| z.re)
        .collect())
}

fn validate(coeffs: &[f64]) -> Result<usize> {
    if coeffs.len() < 2 {
        return Err(Error::DegeneratePolynomial("degree must be at least 1"));
    }
    if coeffs[0] == 0.0 {
        return Err(Error::DegeneratePolynomial("leading coefficient is zero"));
    }
    if coeffs.len() - 1 > MAX_DEGREE {
        return Err(Error::DegeneratePolynomial("degree above 16"));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegeneratePolynomial("non-finite coefficient"));
    }
    Ok(coeffs.len() - 1)
}

/// Sorted, de-duplicated real roots of `coeffs` (descending powers) whose
/// relative residual after polishing is at most `tol`.
pub fn real_roots(coeffs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut roots: Vec<f64> = near_real_eigenvalues(coeffs, IMAG_TOL)?
        .into_iter()
        .map(|x| polish(coeffs, x, 6))
        .filter(|&x| horner(coeffs, x).abs() <= tol * residual_scale(coeffs, x))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs().max(1.0));
    Ok(roots)
}
