//! F-KPP equation `u_t = u_xx / 2 + u - u^2` in the frame moving at speed
//! `sqrt 2`, where it reads `u_t = u_xx / 2 + sqrt2 u_x + u - u^2`.
//!
//! Strang splitting: half a step of the exact logistic flow, the linear
//! part, half a logistic step. The linear part is solved for the weighted
//! unknown `V = e^{kappa x} u`, for which `u_xx / 2 + sqrt2 u_x` becomes
//! `V_xx / 2 - V`; `kappa` (about `sqrt 2`) is chosen so that the discrete
//! operator annihilates constants exactly. In this form the leading edge of
//! a pulled front is a slowly varying function, so central differences do
//! not shift the selected front speed.

mod integrals;
mod wave;

pub use integrals::{
    c_integral, extrapolate_inverse_sqrt, laplace_prediction, psi, tail_constant_fit,
    windowed_c_integral, TailFit, TAIL_WINDOW,
};
pub use wave::{wave_profile, WaveProfile};

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::Phi;

/// Uniform grid in moving-frame coordinates plus the time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x_min: -60.0,
            x_max: 140.0,
            dx: 0.02,
            dt: 0.01,
        }
    }
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, dx: f64, dt: f64) -> Result<Grid> {
        let g = Grid { x_min, x_max, dx, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::param("grid", "need finite x_min < x_max"));
        }
        if !(self.dx > 0.0) || !(self.dt > 0.0) {
            return Err(Error::param("grid", "dx and dt must be positive"));
        }
        if self.len() < 8 {
            return Err(Error::param("grid", "fewer than 8 grid points"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Largest explicit time step for the linear sub-step.
    pub fn explicit_dt_limit(&self) -> f64 {
        self.dx * self.dx / (1.0 + 0.5 * self.dx * self.dx)
    }

    /// Same grid with `dx` and `dt` halved.
    pub fn refined(&self) -> Grid {
        Grid {
            dx: self.dx / 2.0,
            dt: self.dt / 2.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    CrankNicolson,
    /// Forward Euler for the linear part; needs `dt <= dx^2 / (1 + dx^2/2)`.
    Explicit,
}

/// Initial data of the u-form equation (a front: 1 on the left, 0 on the right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// `u = 1` for `x < offset`, `1/2` at `offset`, `0` beyond.
    Heaviside(f64),
    /// `1 - exp(-phi(-x))` for `x >= -delta`, and 1 below.
    TruncatedExp(Phi, f64),
    /// `1 - exp(-phi(-x))`: localized data.
    ExpPhi(Phi),
    /// Constant data.
    Constant(f64),
}

impl InitialCondition {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            InitialCondition::Heaviside(c) => {
                if x < *c {
                    1.0
                } else if x == *c {
                    0.5
                } else {
                    0.0
                }
            }
            InitialCondition::TruncatedExp(phi, delta) => {
                if x < -delta {
                    1.0
                } else {
                    -(-phi.eval(-x)).exp_m1()
                }
            }
            InitialCondition::ExpPhi(phi) => -(-phi.eval(-x)).exp_m1(),
            InitialCondition::Constant(c) => *c,
        }
    }

    /// Boundary values `(left, right)`.
    pub fn boundary(&self) -> (f64, f64) {
        match self {
            InitialCondition::Heaviside(_) | InitialCondition::TruncatedExp(..) => (1.0, 0.0),
            InitialCondition::ExpPhi(_) => (0.0, 0.0),
            InitialCondition::Constant(c) => (*c, *c),
        }
    }

    fn is_localized(&self) -> bool {
        matches!(self, InitialCondition::ExpPhi(_))
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::Constant(c) if !(0.0..=1.0).contains(c) => {
                Err(Error::param("initial", "constant must lie in [0, 1]"))
            }
            InitialCondition::Heaviside(c) | InitialCondition::TruncatedExp(_, c) if !c.is_finite() => {
                Err(Error::param("initial", "offset must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Solution at one time, in the moving frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<f64>,
    /// Number of values clamped into `[0, 1]` since the start.
    pub clamp_events: u64,
}

impl Field {
    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    /// Linear interpolation at moving-frame coordinate `xi` (0 outside the grid
    /// on the right, the boundary value on the left).
    pub fn at(&self, xi: f64) -> f64 {
        let g = &self.grid;
        let n = self.values.len();
        let s = (xi - g.x_min) / g.dx;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Value at fixed-frame position `x`.
    pub fn at_fixed(&self, x: f64) -> f64 {
        self.at(x - SQRT_2 * self.t)
    }

    /// Moving-frame position of the rightmost crossing of `level`.
    pub fn crossing(&self, level: f64) -> Result<f64> {
        let v = &self.values;
        let i = v
            .iter()
            .rposition(|&u| u >= level)
            .ok_or(Error::NoCrossing { level })?;
        if i + 1 >= v.len() {
            return Err(Error::NoCrossing { level });
        }
        let (a, b) = (v[i], v[i + 1]);
        let w = if a == b { 0.0 } else { (a - level) / (a - b) };
        Ok(self.x(i) + w * self.grid.dx)
    }

    /// Position of the `u = 1/2` crossing in the fixed frame.
    pub fn median_front(&self) -> Result<f64> {
        median_front(self)
    }

    /// CSV with columns `x,u` (moving frame).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "u"])?;
        for (i, u) in self.values.iter().enumerate() {
            wr.write_record([self.x(i).to_string(), u.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Linear interpolation of the `u = 1/2` crossing, reported in fixed-frame
/// coordinates.
pub fn median_front(field: &Field) -> Result<f64> {
    Ok(field.crossing(0.5)? + SQRT_2 * field.t)
}

/// Solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solver {
    pub grid: Grid,
    pub scheme: Scheme,
    /// Skip the linear part (pure logistic flow).
    pub reaction_only: bool,
    /// Replace the first Crank-Nicolson step by four implicit Euler quarter
    /// steps, which damps the grid-scale oscillation of step data.
    pub smoothing_start: bool,
}

impl Solver {
    pub fn new(grid: Grid) -> Self {
        Solver {
            grid,
            scheme: Scheme::CrankNicolson,
            reaction_only: false,
            smoothing_start: true,
        }
    }

    /// Fields at each of `snapshot_times` (sorted, in `(0, t_end]`).
    pub fn evolve(&self, ic: &InitialCondition, t_end: f64, snapshot_times: &[f64]) -> Result<Vec<Field>> {
        self.grid.validate()?;
        ic.validate()?;
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::param("t_end", "must be positive"));
        }
        let mut times = snapshot_times.to_vec();
        if times.iter().any(|&s| !(s > 0.0 && s <= t_end)) {
            return Err(Error::param("snapshot_times", "must lie in (0, t_end]"));
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        if self.scheme == Scheme::Explicit && self.grid.dt > self.grid.explicit_dt_limit() {
            return Err(Error::param(
                "dt",
                format!("explicit scheme needs dt <= {:.3e}", self.grid.explicit_dt_limit()),
            ));
        }

        let mut st = State::new(self, ic);
        let mut out = Vec::with_capacity(times.len());
        let check_every = ((1.0 / self.grid.dt).ceil() as u64).max(1);
        let mut steps = 0u64;
        st.check_escape(ic)?;
        for &target in &times {
            loop {
                let remaining = target - st.t;
                if remaining <= 1e-9 * self.grid.dt {
                    break;
                }
                let h = if remaining < self.grid.dt * (1.0 + 1e-9) {
                    remaining
                } else {
                    self.grid.dt
                };
                st.step(h);
                steps += 1;
                if steps % check_every == 0 {
                    st.check_escape(ic)?;
                }
            }
            st.t = target;
            st.check_escape(ic)?;
            out.push(Field {
                grid: self.grid,
                t: target,
                values: st.u.clone(),
                clamp_events: st.clamps,
            });
        }
        Ok(out)
    }
}

/// Evolves `ic` with the default Crank-Nicolson solver on `grid`.
pub fn evolve(ic: &InitialCondition, t_end: f64, grid: Grid, snapshot_times: &[f64]) -> Result<Vec<Field>> {
    Solver::new(grid).evolve(ic, t_end, snapshot_times)
}

/// Evolves to a single time.
pub fn evolve_to(ic: &InitialCondition, t: f64, grid: Grid) -> Result<Field> {
    let mut f = evolve(ic, t, grid, &[t])?;
    Ok(f.pop().expect("one snapshot"))
}

/// Field at time zero.
pub fn initial_field(ic: &InitialCondition, grid: Grid) -> Field {
    let values = (0..grid.len()).map(|i| ic.value(grid.x(i))).collect();
    Field {
        grid,
        t: 0.0,
        values,
        clamp_events: 0,
    }
}

/// Tridiagonal system with constant coefficients `-a, b, -a` on the
/// interior, factorized once.
struct Tridiag {
    a: f64,
    /// Modified super-diagonal of the Thomas elimination.
    cp: Vec<f64>,
    /// Inverse pivots.
    inv: Vec<f64>,
}

impl Tridiag {
    fn new(a: f64, b: f64, m: usize) -> Self {
        let mut cp = vec![0.0; m];
        let mut inv = vec![0.0; m];
        let mut prev = 0.0;
        for i in 0..m {
            let denom = b - (-a) * prev;
            inv[i] = 1.0 / denom;
            cp[i] = -a * inv[i];
            prev = cp[i];
        }
        Tridiag { a, cp, inv }
    }

    /// Solves in place: `rhs` holds the right-hand side of the interior.
    fn solve(&self, rhs: &mut [f64]) {
        let m = rhs.len();
        let mut prev = 0.0;
        for i in 0..m {
            let d = (rhs[i] + self.a * prev) * self.inv[i];
            rhs[i] = d;
            prev = d;
        }
        for i in (0..m.saturating_sub(1)).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

struct State<'a> {
    solver: &'a Solver,
    t: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    rhs: Vec<f64>,
    weight: Vec<f64>,
    inv_weight: Vec<f64>,
    bc: (f64, f64),
    cn: Option<(f64, Tridiag)>,
    first: bool,
    clamps: u64,
}

impl<'a> State<'a> {
    fn new(solver: &'a Solver, ic: &InitialCondition) -> Self {
        let g = solver.grid;
        let n = g.len();
        let kappa = (1.0 + g.dx * g.dx).acosh() / g.dx;
        let weight: Vec<f64> = (0..n).map(|i| (kappa * g.x(i)).exp()).collect();
        let inv_weight = weight.iter().map(|w| 1.0 / w).collect();
        let u = initial_field(ic, g).values;
        State {
            solver,
            t: 0.0,
            u,
            v: vec![0.0; n],
            rhs: vec![0.0; n.saturating_sub(2)],
            weight,
            inv_weight,
            bc: ic.boundary(),
            cn: None,
            first: true,
            clamps: 0,
        }
    }

    fn logistic(&mut self, tau: f64) {
        let e = tau.exp();
        let em1 = tau.exp_m1();
        for u in self.u.iter_mut() {
            *u = *u * e / (1.0 + *u * em1);
        }
    }

    fn linear(&mut self, h: f64) {
        let g = self.solver.grid;
        let n = self.u.len();
        for i in 0..n {
            self.v[i] = self.u[i] * self.weight[i];
        }
        let vl = self.bc.0 * self.weight[0];
        let vr = self.bc.1 * self.weight[n - 1];
        let alpha = 0.5 / (g.dx * g.dx);
        match self.solver.scheme {
            Scheme::Explicit => {
                let v = &self.v;
                for i in 1..n - 1 {
                    self.rhs[i - 1] = v[i] + h * (alpha * (v[i - 1] - 2.0 * v[i] + v[i + 1]) - v[i]);
                }
            }
            Scheme::CrankNicolson if self.first && self.solver.smoothing_start => {
                // four implicit Euler quarter steps
                let q = h / 4.0;
                let sys = Tridiag::new(q * alpha, 1.0 + q * (2.0 * alpha + 1.0), n - 2);
                for _ in 0..4 {
                    for i in 1..n - 1 {
                        self.rhs[i - 1] = self.v[i];
                    }
                    self.rhs[0] += q * alpha * vl;
                    self.rhs[n - 3] += q * alpha * vr;
                    sys.solve(&mut self.rhs);
                    self.v[1..n - 1].copy_from_slice(&self.rhs);
                }
            }
            Scheme::CrankNicolson => {
                let a = 0.5 * h * alpha;
                let diag_l = 1.0 - 2.0 * a - 0.5 * h;
                let v = &self.v;
                for i in 1..n - 1 {
                    self.rhs[i - 1] = diag_l * v[i] + a * (v[i - 1] + v[i + 1]);
                }
                self.rhs[0] += a * vl;
                self.rhs[n - 3] += a * vr;
                let rebuild = !matches!(&self.cn, Some((hh, _)) if *hh == h);
                if rebuild {
                    self.cn = Some((h, Tridiag::new(a, 1.0 + 2.0 * a + 0.5 * h, n - 2)));
                }
                self.cn.as_ref().expect("factorized").1.solve(&mut self.rhs);
            }
        }
        if !(self.solver.scheme == Scheme::CrankNicolson && self.first && self.solver.smoothing_start) {
            self.v[1..n - 1].copy_from_slice(&self.rhs);
        }
        self.v[0] = vl;
        self.v[n - 1] = vr;
        self.first = false;
        for i in 0..n {
            let mut u = self.v[i] * self.inv_weight[i];
            if u < 0.0 {
                u = 0.0;
                self.clamps += 1;
            } else if u > 1.0 {
                u = 1.0;
                self.clamps += 1;
            }
            self.u[i] = u;
        }
        self.u[0] = self.bc.0;
        self.u[n - 1] = self.bc.1;
    }

    fn step(&mut self, h: f64) {
        self.logistic(0.5 * h);
        if !self.solver.reaction_only {
            self.linear(h);
        }
        self.logistic(0.5 * h);
        self.t += h;
    }

    fn check_escape(&self, ic: &InitialCondition) -> Result<()> {
        if self.solver.reaction_only {
            return Ok(());
        }
        let g = self.solver.grid;
        let n = self.u.len();
        let margin = 10.min(n / 2);
        let last = self.u.iter().rposition(|&u| u >= 0.5);
        let first = self.u.iter().position(|&u| u >= 0.5);
        let right_bad = self.bc.1 < 0.5 && last.is_some_and(|i| i >= n - 1 - margin);
        let left_bad = match (ic.is_localized(), first, last) {
            (true, Some(i), _) => i <= margin,
            (false, _, Some(i)) => self.bc.0 >= 0.5 && self.bc.1 < 0.5 && i <= margin,
            _ => false,
        };
        if right_bad || left_bad {
            let front = self
                .u
                .iter()
                .rposition(|&u| u >= 0.5)
                .map(|i| g.x(i))
                .unwrap_or(g.x_min);
            return Err(Error::FrontEscaped {
                t: self.t,
                front,
                x_min: g.x_min,
                x_max: g.x_max,
            });
        }
        Ok(())
    }
}
