//! Right-hand sides, time steppers and diagnostics.
//!
//! Fluid equations in normal variables, with `h_rho = u^2/2 + 3/2 rho^2 S_2 + phi`
//! and `h_l = rho^3/2 dS_2/dnu_l`:
//!
//! ```text
//! rho_t  = -(rho u)_x
//! u_t    = -(h_rho)_x + h_k (nu_k)_x / rho
//! nu_k_t = -u (nu_k)_x - (g_kl h_l / rho)_x / rho
//! ```

use super::grid::{FieldSolution, Operators};
use super::model::FluidModel;
use super::state::{FieldState, StreamState};
use super::{Grid, SimError};
use crate::Execution;

/// Densities at or below this abort the run.
pub const RHO_MIN: f64 = 1e-12;

/// Time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Rk4,
    /// Strang splitting: one sub-flow per eigen-direction of `g`, then the
    /// transport flow of `(rho, u)` with `nu` advected, then the directions
    /// again in reverse order. Each sub-flow is advanced with RK4.
    Split,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rk4" => Some(Scheme::Rk4),
            "split" => Some(Scheme::Split),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rk4 => "rk4",
            Scheme::Split => "split",
        }
    }
}

type Fields = Vec<Vec<f64>>;

/// `y + sum_i c_i k_i`.
fn lincomb(y: &[Vec<f64>], terms: &[(f64, &Fields)]) -> Fields {
    y.iter()
        .enumerate()
        .map(|(f, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| terms.iter().fold(x, |acc, (c, k)| acc + c * k[f][j]))
                .collect()
        })
        .collect()
}

fn rk4<F>(y: &[Vec<f64>], dt: f64, f: F) -> Result<Fields, SimError>
where
    F: Fn(&[Vec<f64>]) -> Result<Fields, SimError>,
{
    let k1 = f(y)?;
    let k2 = f(&lincomb(y, &[(0.5 * dt, &k1)]))?;
    let k3 = f(&lincomb(y, &[(0.5 * dt, &k2)]))?;
    let k4 = f(&lincomb(y, &[(dt, &k3)]))?;
    Ok(lincomb(
        y,
        &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    ))
}

fn check_density(rho: &[f64]) -> Result<(), SimError> {
    for (j, &r) in rho.iter().enumerate() {
        if !r.is_finite() {
            return Err(SimError::NonFinite(format!("density at point {j}")));
        }
        if r <= RHO_MIN {
            return Err(SimError::Positivity { index: j, value: r });
        }
    }
    Ok(())
}

fn check_finite(y: &[Vec<f64>]) -> Result<(), SimError> {
    for (f, row) in y.iter().enumerate() {
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(SimError::NonFinite(format!("field {f} at point {j}")));
        }
    }
    Ok(())
}

/// Pointwise energy gradients at one grid point.
struct Local {
    /// `u^2/2 + 3/2 rho^2 S_2` (without `phi`).
    h_rho: f64,
    /// `rho^3/2 dS_2/dnu_l`.
    h_nu: Vec<f64>,
}

/// One instant of the conserved quantities of a fluid run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    /// `1/2 int (rho u^2 + rho^3 S_2 + E^2)`.
    pub h: f64,
    pub c_mass: f64,
    /// `int (u - rho mu_1)`.
    pub c_psi: f64,
    /// `int rho nu_k`.
    pub c_nu: Vec<f64>,
    pub momentum: f64,
    pub field_energy: f64,
}

impl DiagnosticRecord {
    /// Column names matching [`Self::values`].
    pub fn header(nvars: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t", "H", "C_mass", "C_psi"].map(String::from).into();
        h.extend((1..=nvars).map(|k| format!("C_{k}")));
        h.push("momentum".into());
        h.push("field_energy".into());
        h
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.t, self.h, self.c_mass, self.c_psi];
        v.extend(&self.c_nu);
        v.push(self.momentum);
        v.push(self.field_energy);
        v
    }
}

/// Fluid solver for one closure on one grid.
#[derive(Clone, Debug)]
pub struct FluidSolver {
    ops: Operators,
    model: FluidModel,
    exec: Execution,
}

impl FluidSolver {
    pub fn new(ops: Operators, model: FluidModel, exec: Execution) -> Self {
        FluidSolver { ops, model, exec }
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }

    pub fn ops(&self) -> &Operators {
        &self.ops
    }

    pub fn model(&self) -> &FluidModel {
        &self.model
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    fn local(&self, rho: &[f64], u: &[f64], nu: &[Vec<f64>]) -> Result<Vec<Local>, SimError> {
        check_density(rho)?;
        let nv = self.model.nvars();
        let m = &self.model;
        let pts = self.exec.map_range(rho.len(), |j| {
            let p: Vec<f64> = nu.iter().map(|r| r[j]).collect();
            let r = rho[j];
            let mut s = vec![0.0; nv];
            m.grad_internal_energy(&p, &mut s);
            let half_r3 = 0.5 * r * r * r;
            Local {
                h_rho: 0.5 * u[j] * u[j] + 1.5 * r * r * m.internal_energy(&p),
                h_nu: s.into_iter().map(|x| half_r3 * x).collect(),
            }
        });
        Ok(pts)
    }

    fn derivatives(&self, fields: &[&[f64]]) -> Vec<Vec<f64>> {
        self.exec.map_slice(fields, |f| self.ops.ddx(f))
    }

    /// Time derivative of packed `[rho, u, nu..]`.
    fn rates(&self, y: &[Vec<f64>], n0: f64) -> Result<Fields, SimError> {
        let (rho, u, nu) = (&y[0], &y[1], &y[2..]);
        let nv = nu.len();
        let nx = rho.len();
        let loc = self.local(rho, u, nu)?;
        let FieldSolution { phi, .. } = self.ops.poisson(rho, n0)?;
        let g = self.model.metric();
        let flux: Vec<f64> = rho.iter().zip(u).map(|(r, v)| r * v).collect();
        let h_rho: Vec<f64> = loc.iter().zip(&phi).map(|(l, p)| l.h_rho + p).collect();
        let w: Vec<Vec<f64>> = (0..nv)
            .map(|k| {
                (0..nx)
                    .map(|j| (0..nv).map(|l| g[k][l] * loc[j].h_nu[l]).sum::<f64>() / rho[j])
                    .collect()
            })
            .collect();
        let mut inputs: Vec<&[f64]> = vec![&flux, &h_rho];
        inputs.extend(nu.iter().map(Vec::as_slice));
        inputs.extend(w.iter().map(Vec::as_slice));
        let d = self.derivatives(&inputs);
        let (d_flux, d_h, d_nu, d_w) = (&d[0], &d[1], &d[2..2 + nv], &d[2 + nv..]);

        let mut out = Vec::with_capacity(nv + 2);
        out.push(d_flux.iter().map(|x| -x).collect());
        out.push(
            (0..nx)
                .map(|j| {
                    let adv: f64 = (0..nv).map(|k| loc[j].h_nu[k] * d_nu[k][j]).sum();
                    -d_h[j] + adv / rho[j]
                })
                .collect(),
        );
        for k in 0..nv {
            out.push(
                (0..nx)
                    .map(|j| -u[j] * d_nu[k][j] - d_w[k][j] / rho[j])
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Time derivatives `(rho_t, u_t, nu_t)` packed like the state.
    pub fn rhs(&self, s: &FieldState) -> Result<FieldState, SimError> {
        s.check(self.model.nvars(), self.grid().nx)?;
        let r = self.rates(&s.pack(), s.n0)?;
        Ok(FieldState::unpack(r, s.n0, s.t))
    }

    /// Functional derivatives of `H`: `(dH/drho, dH/du, dH/dnu_l)` on the grid.
    pub fn energy_gradient(&self, s: &FieldState) -> Result<FieldState, SimError> {
        s.check(self.model.nvars(), self.grid().nx)?;
        let loc = self.local(&s.rho, &s.u, &s.nu)?;
        let phi = self.field(s)?.phi;
        Ok(FieldState {
            rho: loc.iter().zip(&phi).map(|(l, p)| l.h_rho + p).collect(),
            u: s.rho.iter().zip(&s.u).map(|(r, v)| r * v).collect(),
            nu: (0..s.nvars())
                .map(|k| loc.iter().map(|l| l.h_nu[k]).collect())
                .collect(),
            n0: s.n0,
            t: s.t,
        })
    }

    /// Transport sub-flow in `(rho, u, q = rho nu)`.
    fn transport_rates(&self, y: &[Vec<f64>], n0: f64) -> Result<Fields, SimError> {
        let (rho, u, q) = (&y[0], &y[1], &y[2..]);
        let nv = q.len();
        let nx = rho.len();
        check_density(rho)?;
        let nu: Vec<Vec<f64>> = q
            .iter()
            .map(|qk| qk.iter().zip(rho.iter()).map(|(a, r)| a / r).collect())
            .collect();
        let loc = self.local(rho, u, &nu)?;
        let FieldSolution { phi, .. } = self.ops.poisson(rho, n0)?;
        let flux: Vec<f64> = rho.iter().zip(u).map(|(r, v)| r * v).collect();
        let h_rho: Vec<f64> = loc.iter().zip(&phi).map(|(l, p)| l.h_rho + p).collect();
        let qflux: Vec<Vec<f64>> = q
            .iter()
            .map(|qk| qk.iter().zip(u).map(|(a, v)| a * v).collect())
            .collect();
        let mut inputs: Vec<&[f64]> = vec![&flux, &h_rho];
        inputs.extend(nu.iter().map(Vec::as_slice));
        inputs.extend(qflux.iter().map(Vec::as_slice));
        let d = self.derivatives(&inputs);
        let (d_flux, d_h, d_nu, d_q) = (&d[0], &d[1], &d[2..2 + nv], &d[2 + nv..]);
        let mut out = Vec::with_capacity(nv + 2);
        out.push(d_flux.iter().map(|x| -x).collect());
        out.push(
            (0..nx)
                .map(|j| {
                    let adv: f64 = (0..nv).map(|k| loc[j].h_nu[k] * d_nu[k][j]).sum();
                    -d_h[j] + adv / rho[j]
                })
                .collect(),
        );
        out.extend(d_q.iter().map(|r| r.iter().map(|x| -x).collect()));
        Ok(out)
    }

    /// Sub-flow of the metric direction `a`, with `rho` and `u` frozen.
    fn mode_rates(&self, a: usize, rho: &[f64], u: &[f64], nu: &[Vec<f64>]) -> Result<Fields, SimError> {
        let (lambda, e) = &self.model.modes()[a];
        let loc = self.local(rho, u, nu)?;
        let z: Vec<f64> = loc
            .iter()
            .zip(rho)
            .map(|(l, r)| lambda * l.h_nu.iter().zip(e).map(|(h, c)| h * c).sum::<f64>() / r)
            .collect();
        let dz = self.ops.ddx(&z);
        Ok(e.iter()
            .map(|c| dz.iter().zip(rho).map(|(d, r)| -c * d / r).collect())
            .collect())
    }

    /// One step of size `dt`.
    pub fn step(&self, s: &FieldState, dt: f64, scheme: Scheme) -> Result<FieldState, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::TimeStep(dt));
        }
        s.check(self.model.nvars(), self.grid().nx)?;
        let n0 = s.n0;
        let y = match scheme {
            Scheme::Rk4 => rk4(&s.pack(), dt, |y| self.rates(y, n0))?,
            Scheme::Split => self.split_step(s, dt)?,
        };
        check_finite(&y)?;
        check_density(&y[0])?;
        Ok(FieldState::unpack(y, n0, s.t + dt))
    }

    fn split_step(&self, s: &FieldState, dt: f64) -> Result<Fields, SimError> {
        let nmodes = self.model.modes().len();
        let (rho, u) = (&s.rho, &s.u);
        let mut nu = s.nu.clone();
        let half = 0.5 * dt;
        for a in 0..nmodes {
            nu = rk4(&nu, half, |y| self.mode_rates(a, rho, u, y))?;
        }
        let mut y = vec![rho.clone(), u.clone()];
        y.extend(nu.iter().map(|nk| nk.iter().zip(rho).map(|(v, r)| v * r).collect()));
        let mut y = rk4(&y, dt, |y| self.transport_rates(y, s.n0))?;
        check_density(&y[0])?;
        let q = y.split_off(2);
        let (rho, u) = (&y[0], &y[1]);
        nu = q
            .iter()
            .map(|qk| qk.iter().zip(rho).map(|(a, r)| a / r).collect())
            .collect();
        for a in (0..nmodes).rev() {
            nu = rk4(&nu, half, |y| self.mode_rates(a, rho, u, y))?;
        }
        y.extend(nu);
        Ok(y)
    }

    /// Largest characteristic speed over the grid.
    pub fn max_speed(&self, s: &FieldState) -> f64 {
        let speeds = self.exec.map_range(s.nx(), |j| {
            let mut p = vec![0.0; s.nvars()];
            s.nu_at(j, &mut p);
            self.model.max_speed(s.rho[j], s.u[j], &p)
        });
        speeds.into_iter().fold(0.0, f64::max)
    }

    /// Stable step estimate: `0.4 min(dx / max speed, 1 / omega_p)`.
    pub fn cfl_dt(&self, s: &FieldState) -> f64 {
        let rho_max = s.rho.iter().copied().fold(0.0, f64::max);
        cfl_bound(self.grid().dx(), self.max_speed(s), rho_max)
    }

    pub fn field(&self, s: &FieldState) -> Result<FieldSolution, SimError> {
        self.ops.poisson(&s.rho, s.n0)
    }

    pub fn diagnostics(&self, s: &FieldState) -> Result<DiagnosticRecord, SimError> {
        s.check(self.model.nvars(), self.grid().nx)?;
        let grid = self.grid();
        let e = self.field(s)?.e;
        let nv = s.nvars();
        let mut energy = 0.0;
        let mut psi = 0.0;
        let mut p = vec![0.0; nv];
        for j in 0..s.nx() {
            s.nu_at(j, &mut p);
            energy += self.model.energy_density(s.rho[j], s.u[j], &p);
            psi += self.model.psi(s.rho[j], s.u[j], &p);
        }
        let field_energy = 0.5 * grid.integrate(&e.iter().map(|x| x * x).collect::<Vec<_>>());
        let dx = grid.dx();
        Ok(DiagnosticRecord {
            t: s.t,
            h: energy * dx + field_energy,
            c_mass: grid.integrate(&s.rho),
            c_psi: psi * dx,
            c_nu: s
                .nu
                .iter()
                .map(|nk| nk.iter().zip(&s.rho).map(|(v, r)| v * r).sum::<f64>() * dx)
                .collect(),
            momentum: s.rho.iter().zip(&s.u).map(|(r, v)| r * v).sum::<f64>() * dx,
            field_energy,
        })
    }

    /// Raw moments `P_0..P_nmax` on the grid.
    pub fn moments(&self, s: &FieldState, nmax: usize) -> Vec<Vec<f64>> {
        let per_point = self.exec.map_range(s.nx(), |j| {
            let mut p = vec![0.0; s.nvars()];
            s.nu_at(j, &mut p);
            self.model.moments(s.rho[j], s.u[j], &p, nmax)
        });
        (0..=nmax)
            .map(|n| per_point.iter().map(|m| m[n]).collect())
            .collect()
    }
}

pub(crate) fn cfl_bound(dx: f64, speed: f64, rho_max: f64) -> f64 {
    let advective = if speed > 0.0 { dx / speed } else { f64::INFINITY };
    let plasma = 1.0 / rho_max.max(f64::MIN_POSITIVE).sqrt();
    0.4 * advective.min(plasma)
}

/// Conserved quantities of a stream run.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamRecord {
    pub t: f64,
    /// `1/2 sum_k int a_k v_k^2 + 1/2 int E^2`.
    pub h: f64,
    pub mass: f64,
    pub momentum: f64,
    pub field_energy: f64,
}

impl StreamRecord {
    pub fn header() -> Vec<String> {
        ["t", "H", "C_mass", "momentum", "field_energy"].map(String::from).into()
    }

    pub fn values(&self) -> Vec<f64> {
        vec![self.t, self.h, self.mass, self.momentum, self.field_energy]
    }
}

/// Cold multi-stream kinetic reference:
/// `a_k,t = -(a_k v_k)_x`, `v_k,t = -(v_k^2/2 + phi)_x`.
#[derive(Clone, Debug)]
pub struct StreamSolver {
    ops: Operators,
    exec: Execution,
}

impl StreamSolver {
    pub fn new(ops: Operators, exec: Execution) -> Self {
        StreamSolver { ops, exec }
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }

    fn rates(&self, y: &[Vec<f64>], n0: f64) -> Result<Fields, SimError> {
        let m = y.len() / 2;
        let (a, v) = y.split_at(m);
        let mut rho = vec![0.0; a[0].len()];
        for ak in a {
            check_density(ak)?;
            rho.iter_mut().zip(ak).for_each(|(r, x)| *r += x);
        }
        let phi = self.ops.poisson(&rho, n0)?.phi;
        let mut inputs: Vec<Vec<f64>> = a
            .iter()
            .zip(v)
            .map(|(ak, vk)| ak.iter().zip(vk).map(|(x, w)| x * w).collect())
            .collect();
        inputs.extend(
            v.iter()
                .map(|vk| vk.iter().zip(&phi).map(|(w, p)| 0.5 * w * w + p).collect()),
        );
        let d = self.exec.map_slice(&inputs, |f| self.ops.ddx(f));
        Ok(d.into_iter()
            .map(|row| row.into_iter().map(|x| -x).collect())
            .collect())
    }

    pub fn rhs(&self, s: &StreamState) -> Result<StreamState, SimError> {
        self.check(s)?;
        Ok(StreamState::unpack(self.rates(&s.pack(), s.n0)?, s.n0, s.t))
    }

    fn check(&self, s: &StreamState) -> Result<(), SimError> {
        let nx = self.grid().nx;
        if s.a.is_empty() || s.a.len() != s.v.len() {
            return Err(SimError::Shape("need matching stream densities and velocities".into()));
        }
        if s.a.iter().chain(&s.v).any(|r| r.len() != nx) {
            return Err(SimError::Shape(format!("stream arrays must have {nx} points")));
        }
        Ok(())
    }

    pub fn step(&self, s: &StreamState, dt: f64) -> Result<StreamState, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::TimeStep(dt));
        }
        self.check(s)?;
        let y = rk4(&s.pack(), dt, |y| self.rates(y, s.n0))?;
        check_finite(&y)?;
        for ak in &y[..y.len() / 2] {
            check_density(ak)?;
        }
        Ok(StreamState::unpack(y, s.n0, s.t + dt))
    }

    pub fn cfl_dt(&self, s: &StreamState) -> f64 {
        let speed = s.v.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let rho_max = s.density().into_iter().fold(0.0, f64::max);
        cfl_bound(self.grid().dx(), speed, rho_max)
    }

    pub fn diagnostics(&self, s: &StreamState) -> Result<StreamRecord, SimError> {
        self.check(s)?;
        let grid = self.grid();
        let e = self.ops.poisson(&s.density(), s.n0)?.e;
        let field_energy = 0.5 * e.iter().map(|x| x * x).sum::<f64>() * grid.dx();
        let (mut kin, mut mom) = (0.0, 0.0);
        for (a, v) in s.a.iter().zip(&s.v) {
            for (x, w) in a.iter().zip(v) {
                kin += 0.5 * x * w * w;
                mom += x * w;
            }
        }
        Ok(StreamRecord {
            t: s.t,
            h: kin * grid.dx() + field_energy,
            mass: grid.integrate(&s.density()),
            momentum: mom * grid.dx(),
            field_energy,
        })
    }

    /// Steepest negative velocity gradient over all streams, with its stream.
    pub fn steepest_gradient(&self, s: &StreamState) -> (usize, f64) {
        let slopes = self.exec.map_slice(&s.v, |vk| {
            self.ops.ddx(vk).into_iter().fold(f64::INFINITY, f64::min)
        });
        slopes
            .into_iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, m)| if m < best.1 { (k, m) } else { best })
    }
}
