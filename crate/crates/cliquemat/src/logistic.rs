//! The shifted logistic link and the one-dimensional Gaussian averages used
//! by the field updates.
//!
//! The link is `sigma(x) = 1 / (1 + exp(beta * (0.5 - x)))`. The 0.5 shift
//! makes the function approximate a step when its argument is an integer
//! overlap count: any shared column pushes the argument past the threshold.

/// Shifted logistic `sigma(x) = (1 + e^{beta (0.5 - x)})^{-1}`.
///
/// Monotone increasing in `x`, with `sigma(0.5, beta) = 0.5` for every
/// steepness `beta`.
pub fn sigma(x: f64, beta: f64) -> f64 {
    let u = beta * (0.5 - x);
    if u >= 0.0 {
        let e = (-u).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + u.exp())
    }
}

/// `log sigma(x)`, the present-link energy term, computed without overflow.
pub fn log_sigma(x: f64, beta: f64) -> f64 {
    neg_log1p_exp(beta * (0.5 - x))
}

/// `log (1 - sigma(x))`, the absent-link energy term.
pub fn log_one_minus_sigma(x: f64, beta: f64) -> f64 {
    neg_log1p_exp(beta * (x - 0.5))
}

/// `-log(1 + e^u)` with a linear branch once `e^u` would overflow.
#[inline]
pub(crate) fn neg_log1p_exp(u: f64) -> f64 {
    if u > 700.0 {
        -u
    } else {
        -u.exp().ln_1p()
    }
}

/// Plain logistic `1 / (1 + e^{-t})`, used to normalize two-state log odds.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Gauss–Hermite nodes and weights for `n` points (physicists' convention:
/// integrates against `e^{-x^2}`).
///
/// Computed by Newton iteration on the Hermite recurrence; accurate to close
/// to machine precision for the moderate `n` used here.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    // largest root estimate, then march inwards; roots are symmetric.
    let mut z = 0.0;
    for i in 0..(n + 1) / 2 {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // evaluate H_n via the orthonormal recurrence
            let mut p1 = std::f64::consts::PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Expectation of `g` under `N(mu, var)` by Gauss–Hermite quadrature.
pub(crate) fn gauss_average<F: Fn(f64) -> f64>(
    g: F,
    mu: f64,
    var: f64,
    nodes: &[f64],
    weights: &[f64],
) -> f64 {
    let scale = (2.0 * var.max(0.0)).sqrt();
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * g(mu + scale * x);
    }
    acc / std::f64::consts::PI.sqrt()
}
