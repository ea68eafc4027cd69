//! Fluid and multi-stream states, initial conditions and the map between
//! the two descriptions.

use std::f64::consts::PI;

use super::{Grid, SimError};
use crate::closures::{multidelta_from_normal, multidelta_to_normal, MultiDeltaNormal};

/// Fluid state in normal variables `(rho, u, nu_1..nu_{N-2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// `nu[k][j]`: variable `k` at grid point `j`.
    pub nu: Vec<Vec<f64>>,
    pub n0: f64,
    pub t: f64,
}

impl FieldState {
    /// Uniform state with `rho = n0`.
    pub fn homogeneous(grid: &Grid, n0: f64, u: f64, nu: &[f64]) -> Self {
        let nx = grid.nx;
        FieldState {
            rho: vec![n0; nx],
            u: vec![u; nx],
            nu: nu.iter().map(|&v| vec![v; nx]).collect(),
            n0,
            t: 0.0,
        }
    }

    pub fn nx(&self) -> usize {
        self.rho.len()
    }

    pub fn nvars(&self) -> usize {
        self.nu.len()
    }

    /// `nu` at grid point `j`.
    pub fn nu_at(&self, j: usize, out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.nu) {
            *o = row[j];
        }
    }

    /// Adds a single-mode perturbation. A density perturbation is relative,
    /// `rho -> rho (1 + eps cos(...))`, so it keeps the mean only when `rho`
    /// is uniform beforehand.
    pub fn perturb(&mut self, grid: &Grid, p: &Perturbation) -> Result<(), SimError> {
        let target = match p.field {
            Field::Density => &mut self.rho,
            Field::Velocity => &mut self.u,
            Field::Normal(k) => self.nu.get_mut(k).ok_or_else(|| {
                SimError::Shape(format!("no normal variable {} in this state", k + 1))
            })?,
        };
        let k = grid.wavenumber(p.mode as i64);
        for (j, v) in target.iter_mut().enumerate() {
            let c = p.amplitude * (k * grid.x(j) + p.phase).cos();
            match p.field {
                Field::Density => *v *= 1.0 + c,
                _ => *v += c,
            }
        }
        Ok(())
    }

    pub(crate) fn check(&self, nvars: usize, nx: usize) -> Result<(), SimError> {
        if self.rho.len() != nx || self.u.len() != nx || self.nu.iter().any(|r| r.len() != nx) {
            return Err(SimError::Shape(format!("state arrays must all have {nx} points")));
        }
        if self.nu.len() != nvars {
            return Err(SimError::Shape(format!(
                "state has {} normal variables, closure has {nvars}",
                self.nu.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn pack(&self) -> Vec<Vec<f64>> {
        let mut y = Vec::with_capacity(self.nu.len() + 2);
        y.push(self.rho.clone());
        y.push(self.u.clone());
        y.extend(self.nu.iter().cloned());
        y
    }

    pub(crate) fn unpack(mut y: Vec<Vec<f64>>, n0: f64, t: f64) -> Self {
        let nu = y.split_off(2);
        let u = y.pop().expect("packed u");
        let rho = y.pop().expect("packed rho");
        FieldState { rho, u, nu, n0, t }
    }
}

/// Cold-stream state: `M` densities `a_k` and velocities `v_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamState {
    pub a: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub n0: f64,
    pub t: f64,
}

impl StreamState {
    /// Uniform streams; `fractions` are scaled so the densities sum to `n0`.
    pub fn homogeneous(grid: &Grid, n0: f64, fractions: &[f64], velocities: &[f64]) -> Result<Self, SimError> {
        if fractions.len() != velocities.len() || fractions.is_empty() {
            return Err(SimError::Shape("need one velocity per stream".into()));
        }
        let total: f64 = fractions.iter().sum();
        if fractions.iter().any(|&f| f <= 0.0) || total <= 0.0 {
            return Err(SimError::Shape("stream fractions must be positive".into()));
        }
        Ok(StreamState {
            a: fractions.iter().map(|f| vec![n0 * f / total; grid.nx]).collect(),
            v: velocities.iter().map(|&v| vec![v; grid.nx]).collect(),
            n0,
            t: 0.0,
        })
    }

    pub fn streams(&self) -> usize {
        self.a.len()
    }

    /// `sum_k a_k`.
    pub fn density(&self) -> Vec<f64> {
        let mut rho = vec![0.0; self.a[0].len()];
        for ak in &self.a {
            rho.iter_mut().zip(ak).for_each(|(r, a)| *r += a);
        }
        rho
    }

    /// `P_n = sum_k a_k v_k^n` at every point, `n = 0..=nmax`.
    pub fn moments(&self, nmax: usize) -> Vec<Vec<f64>> {
        let nx = self.a[0].len();
        (0..=nmax)
            .map(|n| {
                (0..nx)
                    .map(|j| {
                        self.a
                            .iter()
                            .zip(&self.v)
                            .map(|(a, v)| a[j] * v[j].powi(n as i32))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Perturbs one stream: density relatively, velocity additively.
    pub fn perturb(&mut self, grid: &Grid, stream: usize, p: &Perturbation) -> Result<(), SimError> {
        let m = self.streams();
        let target = match p.field {
            Field::Density => self.a.get_mut(stream),
            Field::Velocity => self.v.get_mut(stream),
            Field::Normal(_) => None,
        }
        .ok_or_else(|| SimError::Shape(format!("cannot perturb stream {stream} of {m}")))?;
        let k = grid.wavenumber(p.mode as i64);
        for (j, v) in target.iter_mut().enumerate() {
            let c = p.amplitude * (k * grid.x(j) + p.phase).cos();
            match p.field {
                Field::Density => *v *= 1.0 + c,
                _ => *v += c,
            }
        }
        Ok(())
    }

    pub(crate) fn pack(&self) -> Vec<Vec<f64>> {
        self.a.iter().chain(&self.v).cloned().collect()
    }

    pub(crate) fn unpack(mut y: Vec<Vec<f64>>, n0: f64, t: f64) -> Self {
        let v = y.split_off(y.len() / 2);
        StreamState { a: y, v, n0, t }
    }
}

/// Which field a perturbation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Density,
    Velocity,
    /// Zero-based normal variable index.
    Normal(usize),
}

/// `amplitude * cos(2 pi mode x / L + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub field: Field,
    pub amplitude: f64,
    pub mode: usize,
    pub phase: f64,
}

impl Perturbation {
    pub fn cosine(field: Field, amplitude: f64, mode: usize) -> Self {
        Perturbation {
            field,
            amplitude,
            mode,
            phase: 0.0,
        }
    }

    pub fn sine(field: Field, amplitude: f64, mode: usize) -> Self {
        Perturbation {
            field,
            amplitude,
            mode,
            phase: -PI / 2.0,
        }
    }
}

/// Fluid state of the multi-delta closure equivalent to a stream state
/// (a single stream maps to the cold fluid).
pub fn fluid_from_streams(s: &StreamState) -> Result<FieldState, SimError> {
    let m = s.streams();
    let nx = s.a[0].len();
    if m == 1 {
        return Ok(FieldState {
            rho: s.a[0].clone(),
            u: s.v[0].clone(),
            nu: vec![],
            n0: s.n0,
            t: s.t,
        });
    }
    let mut out = FieldState {
        rho: vec![0.0; nx],
        u: vec![0.0; nx],
        nu: vec![vec![0.0; nx]; 2 * (m - 1)],
        n0: s.n0,
        t: s.t,
    };
    for j in 0..nx {
        let a: Vec<f64> = s.a.iter().map(|r| r[j]).collect();
        let v: Vec<f64> = s.v.iter().map(|r| r[j]).collect();
        let p = multidelta_to_normal(&a, &v)?;
        out.rho[j] = p.rho;
        out.u[j] = p.u;
        for (row, x) in out.nu.iter_mut().zip(p.nu()) {
            row[j] = x;
        }
    }
    Ok(out)
}

/// Inverse of [`fluid_from_streams`] for `M >= 2` streams.
pub fn streams_from_fluid(f: &FieldState) -> Result<StreamState, SimError> {
    let nv = f.nvars();
    if nv == 0 || nv % 2 == 1 {
        return Err(SimError::Shape(format!(
            "{nv} normal variables do not describe a multi-delta state"
        )));
    }
    let k = nv / 2;
    let nx = f.nx();
    let mut a = vec![vec![0.0; nx]; k + 1];
    let mut v = vec![vec![0.0; nx]; k + 1];
    for j in 0..nx {
        let p = MultiDeltaNormal {
            rho: f.rho[j],
            u: f.u[j],
            xi: (0..k).map(|i| f.nu[i][j]).collect(),
            eta: (0..k).map(|i| f.nu[k + i][j]).collect(),
        };
        let (aj, vj) = multidelta_from_normal(&p);
        for s in 0..=k {
            a[s][j] = aj[s];
            v[s][j] = vj[s];
        }
    }
    Ok(StreamState { a, v, n0: f.n0, t: f.t })
}
