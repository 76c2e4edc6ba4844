//! Eigenvalues of small matrices through the characteristic polynomial.
//!
//! Coefficients come from the Faddeev-LeVerrier recursion; roots from
//! Durand-Kerner simultaneous iteration followed by Newton polishing.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const MAX_ITERATIONS: usize = 2000;

/// Monic characteristic polynomial coefficients, lowest degree first:
/// `det(lambda I - A) = c[0] + c[1] lambda + ... + c[n-1] lambda^(n-1) + lambda^n`.
/// The returned vector has `n + 1` entries with `c[n] = 1`.
pub fn characteristic_polynomial<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.dim();
    let mut c = vec![T::zero(); n + 1];
    c[n] = T::one();
    let mut m = Matrix::zeros(n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.mul(&m);
        for i in 0..n {
            next[(i, i)] = next[(i, i)] + c[n - k + 1];
        }
        let am = a.mul(&next);
        c[n - k] = -am.trace() / T::from_usize(k).unwrap();
        m = next;
    }
    c
}

/// Evaluates the polynomial and its "scale" `sum |c_k| |z|^k` by Horner's rule.
fn eval_with_scale<T: Scalar>(coeffs: &[T], z: Complex<T>) -> (Complex<T>, T) {
    let r = z.norm();
    let mut p = Complex::new(T::zero(), T::zero());
    let mut scale = T::zero();
    for &c in coeffs.iter().rev() {
        p = p * z + Complex::new(c, T::zero());
        scale = scale * r + c.abs();
    }
    (p, scale)
}

fn eval_derivative<T: Scalar>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let mut d = Complex::new(T::zero(), T::zero());
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        d = d * z + Complex::new(c * T::from_usize(k).unwrap(), T::zero());
    }
    d
}

fn residual_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::tolerance_floor())
}

/// Roots of a monic real polynomial (coefficients lowest degree first).
pub fn polynomial_roots<T: Scalar>(coeffs: &[T]) -> Result<Vec<Complex<T>>> {
    let degree = coeffs.len() - 1;
    assert!(coeffs[degree] == T::one(), "polynomial must be monic");
    match degree {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex::new(-coeffs[0], T::zero())]),
        2 => return Ok(quadratic_roots(coeffs[1], coeffs[0]).to_vec()),
        _ => {}
    }

    // Rescale lambda = sigma * mu so the coefficients are O(1).
    let sigma = coeffs[..degree]
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, c)| {
            acc.max(c.abs().powf(T::one() / T::from_usize(degree - k).unwrap()))
        });
    if sigma.is_zero() {
        return Ok(vec![Complex::new(T::zero(), T::zero()); degree]);
    }
    let coeffs: Vec<T> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c / sigma.powi((degree - k) as i32))
        .collect();
    let coeffs = &coeffs[..];

    let tol = residual_tolerance::<T>();
    let radius = T::one()
        + coeffs[..degree]
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.abs()));
    let seed = Complex::new(T::lit(0.4), T::lit(0.9));
    let mut z: Vec<Complex<T>> = (0..degree).map(|i| seed.powu(i as u32) * radius).collect();

    // near a multiple root at zero the Horner scale vanishes too, hence the floor
    let converged = |z: &[Complex<T>]| {
        z.iter().all(|&zi| {
            let (p, scale) = eval_with_scale(coeffs, zi);
            p.norm() <= tol * scale.max(T::one())
        })
    };

    let mut done = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = T::zero();
        for i in 0..degree {
            let (p, _) = eval_with_scale(coeffs, z[i]);
            let mut denom = Complex::new(T::one(), T::zero());
            for j in 0..degree {
                if i != j {
                    denom = denom * (z[i] - z[j]);
                }
            }
            if denom.norm().is_zero() {
                // coincident iterates; nudge apart
                z[i] = z[i] + Complex::new(tol, tol);
                continue;
            }
            let step = p / denom;
            z[i] = z[i] - step;
            max_step = max_step.max(step.norm() / (T::one() + z[i].norm()));
        }
        if converged(&z) && max_step <= T::epsilon() * T::lit(16.0) {
            done = true;
            break;
        }
    }

    // Newton polishing; only keep an update if it lowers the residual.
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, _) = eval_with_scale(coeffs, *zi);
            let d = eval_derivative(coeffs, *zi);
            if d.norm().is_zero() {
                break;
            }
            let cand = *zi - p / d;
            let (pc, _) = eval_with_scale(coeffs, cand);
            if pc.norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }

    if !done && !converged(&z) {
        return Err(Error::NoRootConvergence {
            iterations: MAX_ITERATIONS,
        });
    }
    Ok(z.into_iter().map(|zi| zi * sigma).collect())
}

/// Roots of `lambda^2 + b lambda + c`.
fn quadratic_roots<T: Scalar>(b: T, c: T) -> [Complex<T>; 2] {
    let two = T::lit(2.0);
    let disc = b * b - T::lit(4.0) * c;
    if disc >= T::zero() {
        let sq = disc.sqrt();
        // avoid cancellation
        let q = if b >= T::zero() {
            -(b + sq) / two
        } else {
            (sq - b) / two
        };
        let r1 = q;
        let r2 = if q.is_zero() { T::zero() } else { c / q };
        [Complex::new(r1, T::zero()), Complex::new(r2, T::zero())]
    } else {
        let re = -b / two;
        let im = (-disc).sqrt() / two;
        [Complex::new(re, im), Complex::new(re, -im)]
    }
}

/// Eigenvalues of a 2x2, 3x3 or 4x4 matrix, sorted by real part descending
/// (ties by imaginary part descending).
pub fn eigenvalues_small<T: Scalar>(a: &Matrix<T>) -> Result<Vec<Complex<T>>> {
    let n = a.dim();
    if !(2..=4).contains(&n) {
        return Err(Error::WrongDims(format!(
            "eigenvalues_small supports 2x2 to 4x4, got {n}x{n}"
        )));
    }
    let coeffs = characteristic_polynomial(a);
    let mut roots = polynomial_roots(&coeffs)?;
    let snap = T::lit(1e-9).max(T::tolerance_floor());
    for r in roots.iter_mut() {
        if r.im.abs() <= snap * (T::one() + r.re.abs()) {
            r.im = T::zero();
        }
    }
    roots.sort_by(|p, q| {
        q.re.partial_cmp(&p.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(q.im.partial_cmp(&p.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(roots)
}

/// Largest real part in a spectrum.
pub fn spectral_abscissa<T: Scalar>(eigs: &[Complex<T>]) -> T {
    eigs.iter().fold(T::neg_infinity(), |acc, e| acc.max(e.re))
}
