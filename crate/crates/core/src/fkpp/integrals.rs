//! Quadratures on solved fields: the `C(r, u)` integral, its window
//! restriction, the `psi` approximation of the leading edge, tail-constant
//! fits, and Laplace-functional predictions.

use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

use super::{evolve_to, Field, Grid, InitialCondition};
use crate::error::{Error, Result};
use crate::model::{standard_centering, Phi};
use crate::special::{linear_fit, trapezoid};

/// `sqrt(2/pi) * int_lo^hi u(r, y + sqrt2 r) y e^{sqrt2 y} dy` on the native
/// grid, with the window clipped to the grid. Returns the integral and the
/// integrand at the last grid point.
fn c_quadrature(field: &Field, lo: f64, hi: f64) -> (f64, f64, f64) {
    let g = &field.grid;
    let n = field.values.len();
    let i0 = (((lo - g.x_min) / g.dx).ceil().max(0.0) as usize).min(n - 1);
    let i1 = (((hi - g.x_min) / g.dx).floor().max(0.0) as usize).min(n - 1);
    if i1 <= i0 {
        return (0.0, 0.0, 0.0);
    }
    let f: Vec<f64> = (i0..=i1)
        .map(|i| {
            let y = g.x(i);
            // u underflows before e^{sqrt2 y} overflows on any sane grid
            field.values[i] * y * (SQRT_2 * y).exp()
        })
        .collect();
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut s = trapezoid(&f, g.dx);
    // partial cells at the window ends
    let head = g.x(i0) - lo;
    if head > 0.0 && i0 > 0 {
        s += head * f[0];
    }
    let tail = hi - g.x(i1);
    if tail > 0.0 && hi.is_finite() && i1 + 1 < n {
        s += tail * f[f.len() - 1];
    }
    ((2.0 / PI).sqrt() * s, *f.last().unwrap_or(&0.0), peak)
}

/// `C(r, u) = sqrt(2/pi) int_0^inf u(r, y + sqrt2 r) y e^{sqrt2 y} dy`.
/// Errors if the integrand at the right edge of the grid is not below
/// `1e-12` of its peak.
pub fn c_integral(field: &Field) -> Result<f64> {
    let (c, last, peak) = c_quadrature(field, 0.0, f64::INFINITY);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let relative = last.abs() / peak;
    if relative > 1e-12 {
        return Err(Error::IntegrandNotDecayed { relative });
    }
    Ok(c)
}

/// The same integral restricted to `y in [a1 sqrt r, a2 sqrt r]`, with
/// `r = field.t`.
pub fn windowed_c_integral(field: &Field, a1: f64, a2: f64) -> Result<f64> {
    if !(a1 > 0.0 && a1 < a2) {
        return Err(Error::param("window", "need 0 < a1 < a2"));
    }
    let sr = field.t.sqrt();
    Ok(c_quadrature(field, a1 * sr, a2 * sr).0)
}

/// `psi(r, t, x)` from the field at time `r`, with `X = x - sqrt2 t`:
///
/// `e^{-sqrt2 X} / sqrt(2 pi (t-r)) int_0^inf u(r, y + sqrt2 r)
///  e^{sqrt2 y - (y - X)^2 / (2(t-r))} (1 - e^{-2 y (x - m(t)) / (t - r)}) dy`.
///
/// Requires `t >= 8r` and `x >= m(t) + 8r`.
pub fn psi(r: f64, t: f64, x: f64, field_at_r: &Field) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Regime("r > 0".into()));
    }
    if (field_at_r.t - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::param("field", "field must be taken at time r"));
    }
    if !(t >= 8.0 * r) {
        return Err(Error::Regime(format!("t >= 8r fails: t = {t}, 8r = {}", 8.0 * r)));
    }
    let m = standard_centering(t);
    if !(x >= m + 8.0 * r) {
        return Err(Error::Regime(format!(
            "x >= m(t) + 8r fails: x = {x}, m(t) + 8r = {}",
            m + 8.0 * r
        )));
    }
    let g = &field_at_r.grid;
    let big_x = x - SQRT_2 * t;
    let s = t - r;
    let n = field_at_r.values.len();
    let i0 = ((-g.x_min) / g.dx).ceil().max(0.0) as usize;
    let ln_pref = -SQRT_2 * big_x - 0.5 * (2.0 * PI * s).ln();
    let f: Vec<f64> = (i0..n)
        .map(|i| {
            let y = g.x(i);
            let u = field_at_r.values[i];
            if u <= 0.0 || y < 0.0 {
                return 0.0;
            }
            let ln_term = u.ln() + SQRT_2 * y - (y - big_x).powi(2) / (2.0 * s) + ln_pref;
            let barrier = -(-2.0 * y * (x - m) / s).exp_m1();
            ln_term.exp() * barrier
        })
        .collect();
    Ok(trapezoid(&f, g.dx))
}

/// `E exp(-sum phi(X_k(t) - x_eval))` predicted by the PDE: `1 - u(t, x_eval)`
/// for the data `u(0, y) = 1 - exp(-phi(-y))`. `x_eval` is a fixed-frame
/// position.
pub fn laplace_prediction(phi: &Phi, t: f64, x_eval: f64, grid: Grid) -> Result<f64> {
    if phi.is_zero() {
        return Ok(1.0);
    }
    let f = evolve_to(&InitialCondition::ExpPhi(phi.clone()), t, grid)?;
    Ok(1.0 - f.at_fixed(x_eval))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// Tail constant of the latest field.
    pub constant: f64,
    /// Per-field `(t, A)`.
    pub per_field: Vec<(f64, f64)>,
    /// Worst relative RMS residual of the per-field fits.
    pub residual: f64,
}

/// Default window of the tail fit.
pub const TAIL_WINDOW: (f64, f64) = (3.0, 8.0);

/// Fits `u(t, m(t) + x) ~ (A x + B) e^{-sqrt2 x - x^2 / (2t)}` on
/// `x in window` for each field. The Gaussian factor is the finite-time
/// shape of the leading edge; without it `A` creeps up like `1/sqrt t`.
/// The returned constant is `A` of the field with the largest `t`.
pub fn tail_constant_fit(fields: &[Field], window: (f64, f64), max_residual: f64) -> Result<TailFit> {
    if fields.is_empty() {
        return Err(Error::InsufficientData("no fields".into()));
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::param("window", "need lo < hi"));
    }
    let mut per_field = Vec::with_capacity(fields.len());
    let mut worst = 0.0f64;
    for f in fields {
        if !(f.t > 0.0) {
            return Err(Error::param("fields", "need positive times"));
        }
        let m = standard_centering(f.t) - SQRT_2 * f.t;
        let k = ((hi - lo) / f.grid.dx).round().max(4.0) as usize;
        let pts: Vec<(f64, f64)> = (0..=k)
            .map(|j| {
                let x = lo + (hi - lo) * j as f64 / k as f64;
                (x, f.at(m + x) * (SQRT_2 * x + x * x / (2.0 * f.t)).exp())
            })
            .collect();
        if pts.iter().all(|p| p.1 == 0.0) {
            return Err(Error::InsufficientData(format!("no tail at t = {}", f.t)));
        }
        let (a, _, rms) = linear_fit(&pts);
        let scale = pts.iter().map(|p| p.1.abs()).sum::<f64>() / pts.len() as f64;
        let rel = rms / scale;
        worst = worst.max(rel);
        if rel > max_residual {
            return Err(Error::PoorFit {
                residual: rel,
                threshold: max_residual,
            });
        }
        per_field.push((f.t, a));
    }
    let constant = per_field
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|p| p.1)
        .expect("non-empty");
    Ok(TailFit {
        constant,
        per_field,
        residual: worst,
    })
}

/// Limit of `values` as `r -> infinity`, by least squares in powers of
/// `r^{-1/2}` up to `degree`.
pub fn extrapolate_inverse_sqrt(points: &[(f64, f64)], degree: usize) -> Result<f64> {
    if points.len() < degree + 1 || points.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "need {} points with positive abscissa",
            degree + 1
        )));
    }
    let k = degree + 1;
    // normal equations; the systems here are tiny
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for &(r, v) in points {
        let h = 1.0 / r.sqrt();
        let row: Vec<f64> = (0..k).map(|j| h.powi(j as i32)).collect();
        for i in 0..k {
            atb[i] += row[i] * v;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    for c in 0..k {
        let p = (c..k)
            .max_by(|&a, &b| ata[a][c].abs().total_cmp(&ata[b][c].abs()))
            .expect("non-empty");
        ata.swap(c, p);
        atb.swap(c, p);
        if ata[c][c].abs() < 1e-300 {
            return Err(Error::InsufficientData("degenerate extrapolation".into()));
        }
        for r in c + 1..k {
            let f = ata[r][c] / ata[c][c];
            for j in c..k {
                ata[r][j] -= f * ata[c][j];
            }
            atb[r] -= f * atb[c];
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| ata[i][j] * x[j]).sum();
        x[i] = (atb[i] - s) / ata[i][i];
    }
    Ok(x[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fkpp::initial_field;

    #[test]
    fn zero_field_integrals() {
        let g = Grid::default();
        let f = initial_field(&InitialCondition::Constant(0.0), g);
        assert_eq!(c_integral(&f).unwrap(), 0.0);
        assert!(tail_constant_fit(&[f], TAIL_WINDOW, 0.05).is_err());
    }

    #[test]
    fn extrapolation_recovers_limit() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&r: &f64| (r, 2.0 - 3.0 / r.sqrt() + 1.0 / r))
            .collect();
        assert!((extrapolate_inverse_sqrt(&pts, 2).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_phi_prediction() {
        assert_eq!(laplace_prediction(&Phi::zero(), 6.0, 0.0, Grid::default()).unwrap(), 1.0);
    }
}
