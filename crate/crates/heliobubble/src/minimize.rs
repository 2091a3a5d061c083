//! Derivative-free minimizers: bounded scalar search (Brent) and a
//! Nelder-Mead simplex for the small calibration problems.

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MinimizeError {
    #[error("search bracket must satisfy a < b and be finite, got [{0}, {1}]")]
    BadBracket(f64, f64),
    #[error("objective returned a non-finite value at x = {0}")]
    NonFiniteValue(f64),
    #[error("starting point must be non-empty and finite")]
    BadStart,
}

#[derive(Debug, Clone, Copy)]
pub struct BrentOptions<F = crate::Real> {
    /// Absolute tolerance on the minimizer location.
    pub xatol: F,
    pub max_iterations: usize,
}

impl<F: Float> Default for BrentOptions<F> {
    fn default() -> Self {
        Self {
            xatol: F::from(1e-8).unwrap(),
            max_iterations: 500,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarMin<F = crate::Real> {
    pub x: F,
    pub value: F,
    pub evaluations: usize,
    /// True when the minimizer landed within resolution of a bracket edge,
    /// meaning the true minimum may lie outside the bracket.
    pub at_boundary: bool,
}

/// Bounded scalar minimization by golden-section search with parabolic
/// acceleration (Brent's localmin). Finds a local minimum of `f` in [a, b]
/// to within `xatol`.
pub fn brent_min<F: Float>(
    mut f: impl FnMut(F) -> F,
    a: F,
    b: F,
    opts: &BrentOptions<F>,
) -> Result<ScalarMin<F>, MinimizeError> {
    let as_f64 = |v: F| v.to_f64().unwrap_or(f64::NAN);
    if !a.is_finite() || !b.is_finite() || !(a < b) {
        return Err(MinimizeError::BadBracket(as_f64(a), as_f64(b)));
    }
    let c0 = |x: f64| F::from(x).unwrap();
    let sqrt_eps = F::epsilon().sqrt();
    let golden = c0(0.5) * (c0(3.0) - c0(5.0).sqrt());

    let (mut lo, mut hi) = (a, b);
    let mut xf = lo + golden * (hi - lo);
    let mut nfc = xf;
    let mut fulc = xf;
    let mut rat = F::zero();
    let mut e = F::zero();
    let mut fx = f(xf);
    let mut evaluations = 1usize;
    if !fx.is_finite() {
        return Err(MinimizeError::NonFiniteValue(as_f64(xf)));
    }
    let mut fnfc = fx;
    let mut ffulc = fx;
    let mut xm = c0(0.5) * (lo + hi);
    let third = opts.xatol / c0(3.0);
    let mut tol1 = sqrt_eps * xf.abs() + third;
    let mut tol2 = c0(2.0) * tol1;

    while (xf - xm).abs() > tol2 - c0(0.5) * (hi - lo) {
        let mut use_golden = true;
        if e.abs() > tol1 {
            // fit a parabola through the three best points
            let r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = c0(2.0) * (q - r);
            if q > F::zero() {
                p = -p;
            }
            q = q.abs();
            let r_prev = e;
            e = rat;
            if p.abs() < (c0(0.5) * q * r_prev).abs()
                && p > q * (lo - xf)
                && p < q * (hi - xf)
            {
                use_golden = false;
                rat = p / q;
                let x_try = xf + rat;
                if x_try - lo < tol2 || hi - x_try < tol2 {
                    let si = if xm >= xf { F::one() } else { -F::one() };
                    rat = tol1 * si;
                }
            }
        }
        if use_golden {
            e = if xf >= xm { lo - xf } else { hi - xf };
            rat = golden * e;
        }

        let si = if rat >= F::zero() { F::one() } else { -F::one() };
        let x = xf + si * rat.abs().max(tol1);
        let fu = f(x);
        evaluations += 1;
        if !fu.is_finite() {
            return Err(MinimizeError::NonFiniteValue(as_f64(x)));
        }

        if fu <= fx {
            if x >= xf {
                lo = xf;
            } else {
                hi = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                lo = x;
            } else {
                hi = x;
            }
            if fu <= fnfc || nfc == xf {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                fulc = x;
                ffulc = fu;
            }
        }
        xm = c0(0.5) * (lo + hi);
        tol1 = sqrt_eps * xf.abs() + third;
        tol2 = c0(2.0) * tol1;
        if evaluations >= opts.max_iterations {
            break;
        }
    }

    let edge = (opts.xatol + sqrt_eps * xf.abs()) * c0(10.0);
    let at_boundary = (xf - a).abs() <= edge || (b - xf).abs() <= edge;
    Ok(ScalarMin {
        x: xf,
        value: fx,
        evaluations,
        at_boundary,
    })
}

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub xatol: f64,
    pub fatol: f64,
    pub max_iterations: usize,
    /// Per-coordinate offsets building the initial simplex; defaults to
    /// 5% of each coordinate (or 2.5e-4 where a coordinate is zero).
    pub initial_steps: Option<Vec<f64>>,
    /// Stop as soon as the best objective value drops below this.
    pub target_value: Option<f64>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xatol: 1e-8,
            fatol: 1e-12,
            max_iterations: 2000,
            initial_steps: None,
            target_value: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexMin {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead downhill simplex. Non-finite objective values act as an
/// infinite barrier, so the simplex retreats from them; the best point ever
/// evaluated is returned even if a later step wandered uphill.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Result<SimplexMin, MinimizeError> {
    let n = x0.len();
    if n == 0 || x0.iter().any(|v| !v.is_finite()) {
        return Err(MinimizeError::BadStart);
    }
    let eval = |x: &[f64], f: &mut dyn FnMut(&[f64]) -> f64| -> f64 {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        match &opts.initial_steps {
            Some(steps) => v[i] += steps[i % steps.len()],
            None => {
                if v[i] != 0.0 {
                    v[i] *= 1.05;
                } else {
                    v[i] = 2.5e-4;
                }
            }
        }
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut f)).collect();
    if values[0].is_infinite() {
        return Err(MinimizeError::BadStart);
    }

    let mut best_x = simplex[0].clone();
    let mut best_f = values[0];
    for (v, &fv) in simplex.iter().zip(&values) {
        if fv < best_f {
            best_f = fv;
            best_x = v.clone();
        }
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0usize;
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        if values[0] < best_f {
            best_f = values[0];
            best_x = simplex[0].clone();
        }
        if let Some(t) = opts.target_value {
            if best_f < t {
                converged = true;
                break;
            }
        }
        let f_spread = (values[n] - values[0]).abs();
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if f_spread <= opts.fatol && x_spread <= opts.xatol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, &vi) in centroid.iter_mut().zip(v) {
                *c += vi / n as f64;
            }
        }
        let point = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(&c, &w)| c + coef * (c - w))
                .collect()
        };

        let reflected = point(alpha, &simplex[n]);
        let f_r = eval(&reflected, &mut f);
        if f_r < best_f {
            best_f = f_r;
            best_x = reflected.clone();
        }

        if f_r < values[0] {
            let expanded = point(gamma, &simplex[n]);
            let f_e = eval(&expanded, &mut f);
            if f_e < best_f {
                best_f = f_e;
                best_x = expanded.clone();
            }
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
            continue;
        }

        let contracted = if f_r < values[n] {
            point(rho, &simplex[n])
        } else {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(&c, &w)| c + rho * (w - c))
                .collect()
        };
        let f_c = eval(&contracted, &mut f);
        if f_c < best_f {
            best_f = f_c;
            best_x = contracted.clone();
        }
        if f_c < values[n].min(f_r) {
            simplex[n] = contracted;
            values[n] = f_c;
            continue;
        }

        // shrink toward the best vertex
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(&b, &v)| b + sigma * (v - b))
                .collect();
            values[i] = eval(&shrunk, &mut f);
            if values[i] < best_f {
                best_f = values[i];
                best_x = shrunk.clone();
            }
            simplex[i] = shrunk;
        }
    }

    Ok(SimplexMin {
        x: best_x,
        value: best_f,
        iterations,
        converged,
    })
}
