//! Gaussian tails in log space and small numeric helpers.

use statrs::function::erf::erfc;
use std::f64::consts::{LN_2, PI, SQRT_2};

/// `ln P(N(0,1) >= z)`, accurate far into both tails.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 5.0 {
        let q = 0.5 * erfc(z / SQRT_2);
        if q > 0.0 {
            return q.ln();
        }
    }
    // Q(z) = phi(z) / (z + 1/(z + 2/(z + 3/(z + ...)))), modified Lentz
    let tiny = 1e-300;
    let mut f = z.max(tiny);
    let mut c = f;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -0.5 * z * z - 0.5 * (2.0 * PI).ln() - f.ln()
}

/// `P(N(0,1) >= z)`.
pub fn normal_sf(z: f64) -> f64 {
    if z < 5.0 {
        0.5 * erfc(z / SQRT_2)
    } else {
        ln_normal_sf(z).exp()
    }
}

/// `P(N(0,1) <= z)`.
pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - e^a)` for `a <= 0`.
pub fn log1m_exp(a: f64) -> f64 {
    if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// Bracketed root of a continuous function by bisection refined with
/// the Illinois false-position step.
pub fn find_root(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut side = 0i8;
    for _ in 0..300 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < tol {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < tol {
            return Some(0.5 * (a + b));
        }
    }
    Some(0.5 * (a + b))
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(ys: &[f64], dx: f64) -> f64 {
    match ys.len() {
        0 | 1 => 0.0,
        n => dx * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[n - 1])),
    }
}

/// Least squares `y = a x + b`; returns `(a, b, rms residual)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_matches_erfc_at_switch() {
        for &z in &[4.0, 4.9, 5.0, 5.1, 6.0] {
            let direct = (0.5 * erfc(z / SQRT_2)).ln();
            assert!((ln_normal_sf(z) - direct).abs() < 1e-9, "z={z}");
        }
    }

    #[test]
    fn far_tail_asymptotics() {
        // ln Q(z) = -z^2/2 - ln(z sqrt(2 pi)) - 1/z^2 + ...
        let z = 200.0f64;
        let approx = -0.5 * z * z - (z * (2.0 * PI).sqrt()).ln() - 1.0 / (z * z);
        assert!((ln_normal_sf(z) - approx).abs() < 1e-8);
    }

    #[test]
    fn roots() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - SQRT_2).abs() < 1e-12);
        assert!(find_root(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_none());
    }
}
