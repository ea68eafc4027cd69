//! Periodic grid, derivative operators and the Poisson solve.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::SimError;

/// Uniform periodic grid `x_j = j L / nx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub length: f64,
    pub nx: usize,
}

impl Grid {
    pub fn new(length: f64, nx: usize) -> Result<Self, SimError> {
        if nx < 8 {
            return Err(SimError::Grid(format!("nx = {nx}, need at least 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SimError::Grid(format!("domain length {length} must be positive")));
        }
        Ok(Grid { length, nx })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// `2 pi m / L`.
    pub fn wavenumber(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.length
    }

    /// Rectangle rule, spectrally accurate for periodic integrands.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / self.nx as f64
    }
}

/// How `d/dx` is discretized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Derivative {
    /// Pseudo-spectral with the 2/3 truncation rule.
    #[default]
    Spectral,
    /// Second-order central differences.
    Central,
}

impl Derivative {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spectral" => Some(Derivative::Spectral),
            "central" => Some(Derivative::Central),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Derivative::Spectral => "spectral",
            Derivative::Central => "central",
        }
    }
}

/// Electric field and potential with `phi'' = -(rho - n0)`, `E = -phi'`.
#[derive(Clone, Debug)]
pub struct FieldSolution {
    pub e: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Planned transforms for one grid.
///
/// Both derivative operators are skew-symmetric as matrices, which is what
/// makes the semi-discrete energy and flux-form invariants exact.
#[derive(Clone)]
pub struct Operators {
    grid: Grid,
    kind: Derivative,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Signed wavenumber of each FFT bin; zero for the Nyquist bin.
    k: Vec<f64>,
    /// `i k` times the 2/3 mask, already divided by `nx`.
    dmul: Vec<f64>,
}

impl std::fmt::Debug for Operators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Operators")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

impl Operators {
    pub fn new(grid: Grid, kind: Derivative) -> Self {
        let n = grid.nx;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let cutoff = n / 3;
        let mut k = vec![0.0; n];
        let mut dmul = vec![0.0; n];
        for (b, (kb, db)) in k.iter_mut().zip(dmul.iter_mut()).enumerate() {
            let m = if b <= n / 2 { b as i64 } else { b as i64 - n as i64 };
            if n % 2 == 0 && b == n / 2 {
                continue;
            }
            *kb = grid.wavenumber(m);
            if m.unsigned_abs() as usize <= cutoff {
                *db = *kb / n as f64;
            }
        }
        Operators {
            grid,
            kind,
            forward,
            inverse,
            k,
            dmul,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> Derivative {
        self.kind
    }

    fn spectrum(&self, f: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn real_part(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// `df/dx`.
    pub fn ddx(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.grid.nx);
        match self.kind {
            Derivative::Spectral => {
                let mut s = self.spectrum(f);
                for (c, &d) in s.iter_mut().zip(&self.dmul) {
                    *c = Complex::new(-c.im * d, c.re * d);
                }
                self.real_part(s)
            }
            Derivative::Central => {
                let n = f.len();
                let h = 0.5 / self.grid.dx();
                (0..n)
                    .map(|j| (f[(j + 1) % n] - f[(j + n - 1) % n]) * h)
                    .collect()
            }
        }
    }

    /// Complex Fourier coefficient of mode `m`, normalized so that
    /// `cos(2 pi m x / L)` has coefficient `1/2`.
    pub fn mode(&self, f: &[f64], m: usize) -> Complex<f64> {
        self.spectrum(f)[m % self.grid.nx] / self.grid.nx as f64
    }

    /// Periodic zero-mean solution of `E' = rho - n0`.
    pub fn poisson(&self, rho: &[f64], n0: f64) -> Result<FieldSolution, SimError> {
        if rho.len() != self.grid.nx {
            return Err(SimError::Shape(format!(
                "density has {} points, grid has {}",
                rho.len(),
                self.grid.nx
            )));
        }
        let mean = self.grid.mean(rho);
        if (mean - n0).abs() > NEUTRALITY_TOL * n0.abs().max(1.0) {
            return Err(SimError::Neutrality { mean, n0 });
        }
        let n = self.grid.nx as f64;
        let s = self.spectrum(rho);
        let mut e = vec![Complex::new(0.0, 0.0); s.len()];
        let mut phi = e.clone();
        for (b, &k) in self.k.iter().enumerate() {
            if k == 0.0 {
                continue;
            }
            let r = s[b] / n;
            phi[b] = r / (k * k);
            e[b] = Complex::new(r.im / k, -r.re / k);
        }
        Ok(FieldSolution {
            e: self.real_part(e),
            phi: self.real_part(phi),
        })
    }
}

/// Allowed mismatch between the mean density and `n0`.
pub const NEUTRALITY_TOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(nx: usize, kind: Derivative) -> Operators {
        Operators::new(Grid::new(2.0 * PI, nx).unwrap(), kind)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 4).is_err());
        assert!(Grid::new(0.0, 16).is_err());
        assert!(Grid::new(1.0, 12).is_ok());
    }

    #[test]
    fn spectral_derivative_is_exact_on_resolved_modes() {
        let o = ops(32, Derivative::Spectral);
        let x = o.grid().points();
        let f: Vec<f64> = x.iter().map(|x| (3.0 * x).sin() + 0.5 * (2.0 * x).cos()).collect();
        let d = o.ddx(&f);
        for (xj, dj) in x.iter().zip(&d) {
            let exact = 3.0 * (3.0 * xj).cos() - (2.0 * xj).sin();
            assert!((dj - exact).abs() < 1e-12);
        }
        // mode 12 > 32/3 is removed
        let g: Vec<f64> = x.iter().map(|x| (12.0 * x).sin()).collect();
        assert!(o.ddx(&g).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn derivatives_are_skew() {
        for kind in [Derivative::Spectral, Derivative::Central] {
            let o = ops(16, kind);
            let f: Vec<f64> = (0..16).map(|j| ((j * 7 % 5) as f64).sin()).collect();
            let g: Vec<f64> = (0..16).map(|j| (j as f64 * 0.3).exp()).collect();
            let fg: f64 = f.iter().zip(o.ddx(&g)).map(|(a, b)| a * b).sum();
            let gf: f64 = g.iter().zip(o.ddx(&f)).map(|(a, b)| a * b).sum();
            assert!((fg + gf).abs() < 1e-11, "{kind:?}: {fg} {gf}");
        }
    }

    #[test]
    fn central_difference_is_second_order() {
        let err = |nx: usize| {
            let o = ops(nx, Derivative::Central);
            let x = o.grid().points();
            let f: Vec<f64> = x.iter().map(|x| x.sin()).collect();
            o.ddx(&f)
                .iter()
                .zip(&x)
                .map(|(d, x)| (d - x.cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn poisson_examples() {
        let l = 5.0;
        let o = Operators::new(Grid::new(l, 64).unwrap(), Derivative::Spectral);
        let x = o.grid().points();
        let flat = vec![1.3; 64];
        let sol = o.poisson(&flat, 1.3).unwrap();
        assert!(sol.e.iter().all(|e| e.abs() < 1e-14));

        let (n0, eps) = (2.0, 0.1);
        let k = 2.0 * PI / l;
        let rho: Vec<f64> = x.iter().map(|x| n0 * (1.0 + eps * (k * x).cos())).collect();
        let sol = o.poisson(&rho, n0).unwrap();
        for (xj, ej) in x.iter().zip(&sol.e) {
            assert!((ej - eps * n0 / k * (k * xj).sin()).abs() < 1e-13);
        }
        // E = -phi'
        let dphi = o.ddx(&sol.phi);
        for (e, d) in sol.e.iter().zip(&dphi) {
            assert!((e + d).abs() < 1e-13);
        }
    }

    #[test]
    fn poisson_random_neutral_density_has_zero_mean_field() {
        let o = ops(32, Derivative::Spectral);
        let mut rho: Vec<f64> = (0..32).map(|j| 1.0 + 0.3 * ((j * j) as f64).sin()).collect();
        let m = o.grid().mean(&rho);
        rho.iter_mut().for_each(|r| *r += 1.0 - m);
        let sol = o.poisson(&rho, 1.0).unwrap();
        assert!(o.grid().mean(&sol.e).abs() < 1e-15);
        let de = o.ddx(&sol.e);
        // resolved part of rho - n0 is recovered
        let r2 = o.ddx(&o.ddx(&sol.phi));
        for j in 0..32 {
            assert!((de[j] + r2[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_rejects_charged_state() {
        let o = ops(16, Derivative::Spectral);
        assert!(matches!(o.poisson(&vec![1.1; 16], 1.0), Err(SimError::Neutrality { .. })));
    }
}
