//! Damped Newton inversion of `nu -> (mu_1..mu_{N-2})`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Closure, ClosureError};
use crate::poly::CompiledPoly;

#[derive(Clone, Debug)]
pub struct InvertOptions {
    pub max_iter: usize,
    /// Residual tolerance, relative to `max(1, |mu_observed|)`.
    pub tol: f64,
    /// Random restarts tried after the deterministic seeds.
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for InvertOptions {
    fn default() -> Self {
        InvertOptions {
            max_iter: 100,
            tol: 1e-12,
            restarts: 32,
            rng_seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub nu: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

struct System {
    mu: Vec<CompiledPoly>,
    jac: Vec<Vec<CompiledPoly>>,
}

impl System {
    fn new(c: &Closure) -> Self {
        let nv = c.nvars();
        let polys: Vec<_> = (1..=nv).map(|n| c.mu(n)).collect();
        System {
            mu: polys.iter().map(CompiledPoly::new).collect(),
            jac: polys
                .iter()
                .map(|p| p.gradient().iter().map(CompiledPoly::new).collect())
                .collect(),
        }
    }

    fn residual(&self, nu: &[f64], target: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            target.len(),
            self.mu.iter().zip(target).map(|(p, t)| p.eval(nu) - t),
        )
    }

    fn jacobian(&self, nu: &[f64]) -> DMatrix<f64> {
        let n = self.mu.len();
        DMatrix::from_fn(n, n, |i, j| self.jac[i][j].eval(nu))
    }
}

fn newton(
    c: &Closure,
    sys: &System,
    target: &[f64],
    start: Vec<f64>,
    opts: &InvertOptions,
) -> Option<NewtonReport> {
    let scale = target.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let ok = |nu: &[f64]| c.admissible(nu).is_ok();
    if !ok(&start) {
        return None;
    }
    let mut nu = start;
    let mut r = sys.residual(&nu, target);
    let mut norm = r.norm();
    for it in 0..opts.max_iter {
        if norm <= opts.tol * scale {
            return Some(NewtonReport {
                nu,
                iterations: it,
                residual: norm,
            });
        }
        let step = sys.jacobian(&nu).lu().solve(&(-&r))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = nu.iter().zip(step.iter()).map(|(x, d)| x + lambda * d).collect();
            if ok(&trial) {
                let rt = sys.residual(&trial, target);
                let nt = rt.norm();
                if nt.is_finite() && nt < norm {
                    nu = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
    }
    (norm <= opts.tol * scale).then_some(NewtonReport {
        nu,
        iterations: opts.max_iter,
        residual: norm,
    })
}

/// Tries the family seed, the seed rescaled by `|mu_2|^(1/3)`, then random
/// perturbations of both.
pub(crate) fn newton_invert(
    c: &Closure,
    mu_observed: &[f64],
    opts: &InvertOptions,
) -> Result<NewtonReport, ClosureError> {
    let nv = c.nvars();
    if mu_observed.len() != nv {
        return Err(ClosureError::InvalidParams(format!(
            "expected {nv} moments, got {}",
            mu_observed.len()
        )));
    }
    if mu_observed.iter().any(|x| !x.is_finite()) {
        return Err(ClosureError::Inversion("non-finite moments".into()));
    }
    let sys = System::new(c);
    let base = c.seed_point();
    let mut seeds = vec![base.clone()];
    if nv >= 2 {
        let s = mu_observed[1].abs().cbrt();
        if s > 0.0 && (s - 1.0).abs() > 1e-12 {
            seeds.push(base.iter().map(|x| x * s).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
    let spread = seeds.last().map_or(1.0, |s| s.iter().fold(1.0f64, |a, x| a.max(x.abs())));
    for k in 0..opts.restarts {
        let from = &seeds[k % seeds.len().min(2)];
        // widen the search as restarts accumulate
        let w = spread * (0.5 + 2.0 * k as f64 / opts.restarts.max(1) as f64);
        let jitter: Vec<f64> = from
            .iter()
            .map(|x| x * (1.0 + rng.random_range(-0.5..0.5)) + w * rng.random_range(-1.0..1.0))
            .collect();
        seeds.push(jitter);
    }
    let tried = seeds.len();
    seeds
        .into_iter()
        .find_map(|s| newton(c, &sys, mu_observed, s, opts))
        .ok_or_else(|| {
            ClosureError::Inversion(format!("Newton did not converge from {tried} starting points"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::ClosureFamily;
    use crate::poly::{int, rat};

    fn round_trip(c: &Closure, nu: &[f64]) {
        let mu = c.eval_mu(nu).unwrap();
        let obs = &mu[..c.nvars()];
        let back = newton_invert(c, obs, &InvertOptions::default()).unwrap();
        let again = c.eval_mu(&back.nu).unwrap();
        for (a, b) in again.iter().zip(&mu) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn multidelta_round_trip() {
        let c = Closure::new(ClosureFamily::MultiDelta { streams: 2 }).unwrap();
        round_trip(&c, &[0.3, 1.7]);
        let c = Closure::new(ClosureFamily::MultiDelta { streams: 3 }).unwrap();
        round_trip(&c, &[0.2, 0.3, -0.8, 1.1]);
    }

    #[test]
    fn waterbag_round_trip() {
        let c = Closure::new(ClosureFamily::Waterbag {
            heights: vec![int(1), int(1), int(-2)],
        })
        .unwrap();
        round_trip(&c, &[0.3]);
    }

    #[test]
    fn fourfield_round_trip() {
        let c = Closure::new(ClosureFamily::FourField { kappa: rat(1, 2) }).unwrap();
        round_trip(&c, &[0.8, 0.6]);
    }

    #[test]
    fn reports_bad_input() {
        let c = Closure::new(ClosureFamily::MultiDelta { streams: 2 }).unwrap();
        assert!(newton_invert(&c, &[1.0], &InvertOptions::default()).is_err());
        assert!(newton_invert(&c, &[f64::NAN, 1.0], &InvertOptions::default()).is_err());
    }
}
