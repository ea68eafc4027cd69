//! Pointwise closure data used by the solver.

use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};

use crate::closures::Closure;
use crate::poly::{binomial, to_f64, CompiledPoly};

/// `mu_n`, the internal energy `S_2 = mu_2 - mu_1^2` and its derivatives,
/// compiled for `f64`, plus the metric and its eigen-decomposition.
#[derive(Clone, Debug)]
pub struct FluidModel {
    label: String,
    nvars: usize,
    mu: Vec<CompiledPoly>,
    s2: CompiledPoly,
    ds2: Vec<CompiledPoly>,
    d2s2: Vec<Vec<CompiledPoly>>,
    g: Vec<Vec<f64>>,
    /// `(lambda_a, e_a)` with `g = sum_a lambda_a e_a e_a^T`.
    modes: Vec<(f64, Vec<f64>)>,
}

impl FluidModel {
    pub fn new(closure: &Closure) -> Self {
        let nv = closure.nvars();
        let s2 = closure.s2();
        let ds2 = s2.gradient();
        let d2s2 = ds2
            .iter()
            .map(|p| p.gradient().iter().map(CompiledPoly::new).collect())
            .collect();
        let g = closure.metric().to_f64();
        let modes = if nv == 0 {
            vec![]
        } else {
            let m = DMatrix::from_fn(nv, nv, |i, j| g[i][j]);
            let eig = SymmetricEigen::new(m);
            (0..nv)
                .map(|a| {
                    let v = eig.eigenvectors.column(a).iter().copied().collect();
                    (eig.eigenvalues[a], v)
                })
                .collect()
        };
        FluidModel {
            label: closure.family().describe(),
            nvars: nv,
            mu: closure.mu_all().iter().map(CompiledPoly::new).collect(),
            s2: CompiledPoly::new(&s2),
            ds2: ds2.iter().map(CompiledPoly::new).collect(),
            d2s2,
            g,
            modes,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `N - 2`.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// `N`.
    pub fn nfields(&self) -> usize {
        self.nvars + 2
    }

    pub fn metric(&self) -> &[Vec<f64>] {
        &self.g
    }

    pub(crate) fn modes(&self) -> &[(f64, Vec<f64>)] {
        &self.modes
    }

    pub fn mu(&self, n: usize, nu: &[f64]) -> f64 {
        self.mu.get(n).map_or(0.0, |p| p.eval(nu))
    }

    pub fn internal_energy(&self, nu: &[f64]) -> f64 {
        self.s2.eval(nu)
    }

    /// `dS_2/dnu_l`.
    pub fn grad_internal_energy(&self, nu: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.ds2) {
            *o = p.eval(nu);
        }
    }

    /// Pressure-like energy density `rho^3 S_2 / 2` plus `rho u^2 / 2`.
    pub fn energy_density(&self, rho: f64, u: f64, nu: &[f64]) -> f64 {
        0.5 * rho * u * u + 0.5 * rho.powi(3) * self.internal_energy(nu)
    }

    /// `u - rho mu_1`.
    pub fn psi(&self, rho: f64, u: f64, nu: &[f64]) -> f64 {
        u - rho * self.mu(1, nu)
    }

    /// Raw moments `P_0..P_nmax` at one point.
    pub fn moments(&self, rho: f64, u: f64, nu: &[f64], nmax: usize) -> Vec<f64> {
        let psi = self.psi(rho, u, nu);
        let mu: Vec<f64> = (0..=nmax).map(|k| self.mu(k, nu)).collect();
        (0..=nmax)
            .map(|n| {
                (0..=n)
                    .map(|k| {
                        to_f64(&binomial(n as u32, k as u32))
                            * rho.powi(k as i32 + 1)
                            * mu[k]
                            * psi.powi((n - k) as i32)
                    })
                    .sum()
            })
            .collect()
    }

    /// Matrix `A` of the field-free quasilinear system `U_t + A U_x = 0` in
    /// the variables `(rho, u, nu)`.
    pub fn characteristic_matrix(&self, rho: f64, u: f64, nu: &[f64]) -> DMatrix<f64> {
        let nv = self.nvars;
        let n = nv + 2;
        let s2 = self.internal_energy(nu);
        let mut s = vec![0.0; nv];
        self.grad_internal_energy(nu, &mut s);
        let hess = DMatrix::from_fn(nv, nv, |l, m| self.d2s2[l][m].eval(nu));
        let g = DMatrix::from_fn(nv, nv, |i, j| self.g[i][j]);
        let gh = &g * &hess;
        let mut a = DMatrix::zeros(n, n);
        a[(0, 0)] = u;
        a[(0, 1)] = rho;
        a[(1, 0)] = 3.0 * rho * s2;
        a[(1, 1)] = u;
        for m in 0..nv {
            a[(1, m + 2)] = rho * rho * s[m];
        }
        for k in 0..nv {
            a[(k + 2, 0)] = (0..nv).map(|l| self.g[k][l] * s[l]).sum();
            for m in 0..nv {
                a[(k + 2, m + 2)] = 0.5 * rho * gh[(k, m)] + if k == m { u } else { 0.0 };
            }
        }
        a
    }

    /// Largest modulus among the characteristic speeds. Complex speeds
    /// (loss of hyperbolicity) are reported through their modulus. If the
    /// eigenvalue iteration stalls (near-defective `A`, e.g. the Burby
    /// family where all speeds coincide) the max-row-sum norm is returned,
    /// which bounds the spectral radius.
    pub fn max_speed(&self, rho: f64, u: f64, nu: &[f64]) -> f64 {
        let a = self.characteristic_matrix(rho, u, nu);
        match speeds(&a) {
            Some(ev) => ev.iter().map(|z| z.norm()).fold(0.0, f64::max),
            None => a
                .row_iter()
                .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Largest imaginary part among the characteristic speeds, `NaN` if
    /// the eigenvalue iteration does not converge.
    pub fn ellipticity(&self, rho: f64, u: f64, nu: &[f64]) -> f64 {
        speeds(&self.characteristic_matrix(rho, u, nu)).map_or(f64::NAN, |ev| {
            ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
        })
    }
}

/// Eigenvalues through a Schur decomposition with a bounded iteration
/// count. `complex_eigenvalues` iterates without limit and can hang.
fn speeds(a: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let n = a.nrows();
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(1))?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}
