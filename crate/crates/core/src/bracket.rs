//! Hydrodynamic Poisson brackets `{F,G} = int (d_x F_n alpha_nm G_m + F_n beta_nm G_m)`.
//!
//! Coefficients are polynomials in a list of parameters (usually the fields
//! themselves, sometimes coordinates the fields are written in), and
//! `beta_nm = sum_k beta_nmk d_x param_k`.

use std::collections::HashMap;

use num_rational::BigRational;
use thiserror::Error;

use crate::closures::{Closure, Metric};
use crate::exec::Execution;
use crate::linalg::{self, LinalgError, RatMatrix};
use crate::moments::{alpha_mu, beta_mu};
use crate::poly::{binomial, MultiPoly, PolyError, VarNames};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BracketError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("jacobian determinant vanishes identically")]
    Singular,
    #[error("jacobian determinant {0} is not a single term; cannot invert symbolically")]
    NonMonomialDeterminant(String),
}

pub type PolyMatrix = Vec<Vec<MultiPoly>>;

#[derive(Clone, Debug, PartialEq)]
pub struct HydroBracket {
    nparams: usize,
    alpha: PolyMatrix,
    /// `beta[n][m][k]`: coefficient of `d_x param_k` in `beta_nm`.
    beta: Vec<PolyMatrix>,
}

/// A failed identity `d alpha_nm / d param_k = beta_nmk + beta_mnk`.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymmetryDefect {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub residual: MultiPoly,
}

impl HydroBracket {
    pub fn new(nparams: usize, alpha: PolyMatrix, beta: Vec<PolyMatrix>) -> Result<Self, BracketError> {
        let nf = alpha.len();
        let shape_ok = alpha.iter().all(|r| r.len() == nf)
            && beta.len() == nf
            && beta
                .iter()
                .all(|r| r.len() == nf && r.iter().all(|c| c.len() == nparams));
        if !shape_ok {
            return Err(BracketError::Shape(format!(
                "expected {nf}x{nf} alpha and {nf}x{nf}x{nparams} beta"
            )));
        }
        let all = alpha.iter().flatten().chain(beta.iter().flatten().flatten());
        if let Some(p) = all.into_iter().find(|p| p.nvars() != nparams) {
            return Err(PolyError::NvarsMismatch(nparams, p.nvars()).into());
        }
        Ok(HydroBracket {
            nparams,
            alpha,
            beta,
        })
    }

    pub fn nfields(&self) -> usize {
        self.alpha.len()
    }

    pub fn nparams(&self) -> usize {
        self.nparams
    }

    pub fn alpha(&self) -> &PolyMatrix {
        &self.alpha
    }

    pub fn beta(&self) -> &[PolyMatrix] {
        &self.beta
    }

    pub fn is_alpha_symmetric(&self) -> bool {
        let n = self.nfields();
        (0..n).all(|i| (0..i).all(|j| self.alpha[i][j] == self.alpha[j][i]))
    }

    /// All nonzero residuals of the antisymmetry condition (empty when it holds).
    pub fn antisymmetry_defects(&self) -> Vec<AntisymmetryDefect> {
        let nf = self.nfields();
        let mut out = Vec::new();
        for n in 0..nf {
            for m in n..nf {
                for k in 0..self.nparams {
                    let d = self.alpha[n][m].diff(k).expect("k < nparams");
                    let r = &(&d - &self.beta[n][m][k]) - &self.beta[m][n][k];
                    if !r.is_zero() {
                        out.push(AntisymmetryDefect { n, m, k, residual: r });
                    }
                }
            }
        }
        out
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.is_alpha_symmetric() && self.antisymmetry_defects().is_empty()
    }

    /// `alpha` evaluated at a rational point.
    pub fn alpha_at(&self, point: &[BigRational]) -> Result<RatMatrix, BracketError> {
        self.alpha
            .iter()
            .map(|r| r.iter().map(|p| p.eval(point).map_err(Into::into)).collect())
            .collect()
    }

    /// Pushes the bracket to new fields with jacobian `j[i][a] = d new_i / d old_a`,
    /// written over the same parameters.
    pub fn transform(&self, j: &PolyMatrix, exec: Execution) -> Result<HydroBracket, BracketError> {
        let nf = self.nfields();
        let nn = j.len();
        if j.iter().any(|r| r.len() != nf) {
            return Err(BracketError::Shape(format!("jacobian must be {nn}x{nf}")));
        }
        if let Some(p) = j.iter().flatten().find(|p| p.nvars() != self.nparams) {
            return Err(PolyError::NvarsMismatch(self.nparams, p.nvars()).into());
        }
        let jt = transpose(j);
        let alpha_jt = mat_mul(&self.alpha, &jt);
        let alpha = mat_mul(j, &alpha_jt);
        let beta_k: Vec<PolyMatrix> = exec.map_range(self.nparams, |k| {
            let dj: PolyMatrix = j
                .iter()
                .map(|r| r.iter().map(|p| p.diff(k).expect("k < nparams")).collect())
                .collect();
            let bk: PolyMatrix = (0..nf)
                .map(|a| (0..nf).map(|b| self.beta[a][b][k].clone()).collect())
                .collect();
            let m = mat_add(&mat_mul(&dj, &self.alpha), &mat_mul(j, &bk));
            mat_mul(&m, &jt)
        });
        let beta = (0..nn)
            .map(|a| {
                (0..nn)
                    .map(|b| (0..self.nparams).map(|k| beta_k[k][a][b].clone()).collect())
                    .collect()
            })
            .collect();
        HydroBracket::new(self.nparams, alpha, beta)
    }

    /// Rewrites a bracket whose fields are its parameters in new coordinates,
    /// given the old fields as functions of the new ones.
    pub fn change_variables(
        &self,
        old_as_new: &[MultiPoly],
        exec: Execution,
    ) -> Result<HydroBracket, BracketError> {
        let nf = self.nfields();
        if nf != self.nparams || old_as_new.len() != nf {
            return Err(BracketError::Shape(
                "change_variables needs fields = parameters and one image per field".into(),
            ));
        }
        let nq = old_as_new[0].nvars();
        if nq != nf {
            return Err(BracketError::Shape(format!(
                "need {nf} new variables, images use {nq}"
            )));
        }
        // K[k][l] = d old_k / d new_l
        let k_mat: PolyMatrix = old_as_new
            .iter()
            .map(|p| (0..nq).map(|l| p.diff(l)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let sub = |p: &MultiPoly| p.compose(old_as_new);
        let alpha: PolyMatrix = self
            .alpha
            .iter()
            .map(|r| r.iter().map(sub).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let mut beta = Vec::with_capacity(nf);
        for row in &self.beta {
            let mut brow = Vec::with_capacity(nf);
            for cell in row {
                let composed: Vec<MultiPoly> = cell.iter().map(sub).collect::<Result<_, _>>()?;
                let mut out = vec![MultiPoly::zero(nq); nq];
                for (k, c) in composed.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (l, o) in out.iter_mut().enumerate() {
                        if !k_mat[k][l].is_zero() {
                            *o = &*o + &(c * &k_mat[k][l]);
                        }
                    }
                }
                brow.push(out);
            }
            beta.push(brow);
        }
        let reparam = HydroBracket::new(nq, alpha, beta)?;
        let j = symbolic_inverse(&k_mat)?;
        reparam.transform(&j, exec)
    }

    /// Truncated Kupershmidt-Manin bracket over fields `P_0..P_{N-1}` with
    /// `moments[n] = P_n` as polynomials in the parameters; missing entries are zero.
    pub fn kupershmidt_manin(nfields: usize, moments: &[MultiPoly]) -> Result<Self, BracketError> {
        let np = moments
            .first()
            .map(MultiPoly::nvars)
            .ok_or_else(|| BracketError::Shape("no moments".into()))?;
        let p = |i: usize| moments.get(i).cloned().unwrap_or_else(|| MultiPoly::zero(np));
        let c = |k: usize| BigRational::from_integer((k as i64).into());
        let mut alpha = vec![vec![MultiPoly::zero(np); nfields]; nfields];
        let mut beta = vec![vec![vec![MultiPoly::zero(np); np]; nfields]; nfields];
        for n in 0..nfields {
            for m in 0..nfields {
                if n + m == 0 {
                    continue;
                }
                let q = p(n + m - 1);
                alpha[n][m] = q.scale(&c(n + m));
                if n > 0 {
                    for k in 0..np {
                        beta[n][m][k] = q.diff(k)?.scale(&c(n));
                    }
                }
            }
        }
        HydroBracket::new(np, alpha, beta)
    }

    /// Partially decoupled bracket over `(rho, u, w)` built from a
    /// microscopic bracket over `w` (fields equal parameters).
    pub fn partially_decoupled(micro: &HydroBracket) -> Result<Self, BracketError> {
        let nw = micro.nfields();
        if micro.nparams != nw {
            return Err(BracketError::Shape("microscopic bracket must be over its fields".into()));
        }
        let n = nw + 2;
        let map: Vec<usize> = (2..n).collect();
        let lift = |p: &MultiPoly| p.reindex(n, &map);
        let rho = MultiPoly::var(n, 0);
        let inv = |k: u32| rho.pow(k).inverse_monomial().expect("rho^k is a monomial");
        let (inv1, inv2, inv3) = (inv(1), inv(2), inv(3));
        let mut alpha = vec![vec![MultiPoly::zero(n); n]; n];
        let mut beta = vec![vec![vec![MultiPoly::zero(n); n]; n]; n];
        alpha[0][1] = MultiPoly::one(n);
        alpha[1][0] = MultiPoly::one(n);
        for k in 0..nw {
            beta[1][2 + k][2 + k] = inv1.clone();
            beta[2 + k][1][2 + k] = -&inv1;
            for l in 0..nw {
                let a = lift(&micro.alpha[k][l])?;
                alpha[2 + k][2 + l] = &a * &inv2;
                beta[2 + k][2 + l][0] = -&(&a * &inv3);
                for j in 0..nw {
                    beta[2 + k][2 + l][2 + j] = &lift(&micro.beta[k][l][j])? * &inv2;
                }
            }
        }
        HydroBracket::new(n, alpha, beta)
    }

    /// Constant-metric bracket `alpha = g`, `beta = 0`.
    pub fn flat(metric: &RatMatrix) -> Result<Self, BracketError> {
        let n = metric.len();
        let alpha = metric
            .iter()
            .map(|r| r.iter().map(|c| MultiPoly::constant(n, c.clone())).collect())
            .collect();
        HydroBracket::new(n, alpha, vec![vec![vec![MultiPoly::zero(n); n]; n]; n])
    }
}

/// Truncated Kupershmidt-Manin bracket over `P_0..P_{N-1}` with `P_n = 0` for `n >= N`.
pub fn km_bracket(nfields: usize) -> HydroBracket {
    let moments: Vec<MultiPoly> = (0..nfields).map(|i| MultiPoly::var(nfields, i)).collect();
    HydroBracket::kupershmidt_manin(nfields, &moments).expect("well-formed")
}

/// `P_0..P_{2N-3}` as polynomials in `(rho, u, nu_1..nu_{N-2})`:
/// `P_n = sum_k C(n,k) rho^(k+1) mu_k(nu) psi^(n-k)` with `psi = u - rho mu_1`.
pub fn moments_in_normal_variables(closure: &Closure) -> Result<Vec<MultiPoly>, BracketError> {
    let n = closure.nfields();
    let map: Vec<usize> = (2..n).collect();
    let mu: Vec<MultiPoly> = closure
        .mu_all()
        .iter()
        .map(|p| p.reindex(n, &map))
        .collect::<Result<_, _>>()?;
    let rho = MultiPoly::var(n, 0);
    let psi = &MultiPoly::var(n, 1) - &(&rho * &mu[1]);
    let top = 2 * n - 3;
    let get = |k: usize| mu.get(k).cloned().unwrap_or_else(|| MultiPoly::zero(n));
    let mut psi_pow = vec![MultiPoly::one(n)];
    let mut rho_pow = vec![MultiPoly::one(n)];
    for i in 1..=top + 1 {
        psi_pow.push(&psi_pow[i - 1] * &psi);
        rho_pow.push(&rho_pow[i - 1] * &rho);
    }
    Ok((0..=top)
        .map(|p| {
            let mut acc = MultiPoly::zero(n);
            for k in 0..=p {
                let t = &(&rho_pow[k + 1] * &get(k)) * &psi_pow[p - k];
                acc = &acc + &t.scale(&binomial(p as u32, k as u32));
            }
            acc
        })
        .collect())
}

/// `d P / d (rho, u, nu)` for the moments above, truncated to `P_0..P_{N-1}`.
pub fn moment_jacobian(moments: &[MultiPoly], nfields: usize) -> Result<PolyMatrix, BracketError> {
    moments[..nfields]
        .iter()
        .map(|p| (0..p.nvars()).map(|l| p.diff(l).map_err(Into::into)).collect())
        .collect()
}

fn transpose(a: &PolyMatrix) -> PolyMatrix {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j].clone()).collect())
        .collect()
}

fn mat_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    let nv = a
        .iter()
        .flatten()
        .chain(b.iter().flatten())
        .next()
        .map_or(0, MultiPoly::nvars);
    a.iter()
        .map(|r| {
            (0..cols)
                .map(|j| {
                    let mut acc = MultiPoly::zero(nv);
                    for k in 0..inner {
                        if r[k].is_zero() || b[k][j].is_zero() {
                            continue;
                        }
                        acc = &acc + &(&r[k] * &b[k][j]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn mat_add(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

/// Exact determinant by Laplace expansion along rows, memoized on the set
/// of remaining columns.
pub fn symbolic_determinant(a: &PolyMatrix) -> MultiPoly {
    let n = a.len();
    let nv = a.iter().flatten().next().map_or(0, MultiPoly::nvars);
    assert!(n < 64, "determinant size limited to 63");
    fn rec(
        a: &PolyMatrix,
        row: usize,
        cols: u64,
        nv: usize,
        memo: &mut HashMap<u64, MultiPoly>,
    ) -> MultiPoly {
        if row == a.len() {
            return MultiPoly::one(nv);
        }
        if let Some(p) = memo.get(&cols) {
            return p.clone();
        }
        let mut acc = MultiPoly::zero(nv);
        let mut sign_pos = 0;
        for c in 0..a.len() {
            if cols & (1 << c) == 0 {
                continue;
            }
            let entry = &a[row][c];
            if !entry.is_zero() {
                let minor = rec(a, row + 1, cols & !(1 << c), nv, memo);
                if !minor.is_zero() {
                    let t = entry * &minor;
                    acc = if sign_pos % 2 == 0 { &acc + &t } else { &acc - &t };
                }
            }
            sign_pos += 1;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    rec(a, 0, full, nv, &mut HashMap::new())
}

/// Classical adjugate, `adj(a)[j][i] = (-1)^(i+j) det(a without row i, column j)`.
pub fn symbolic_adjugate(a: &PolyMatrix) -> PolyMatrix {
    let n = a.len();
    let nv = a.iter().flatten().next().map_or(0, MultiPoly::nvars);
    if n == 1 {
        return vec![vec![MultiPoly::one(nv)]];
    }
    let mut adj = vec![vec![MultiPoly::zero(nv); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: PolyMatrix = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| a[r][c].clone()).collect())
                .collect();
            let d = symbolic_determinant(&minor);
            adj[j][i] = if (i + j) % 2 == 0 { d } else { -&d };
        }
    }
    adj
}

/// `a^-1 = adj(a) / det(a)` when `det(a)` is a single term.
pub fn symbolic_inverse(a: &PolyMatrix) -> Result<PolyMatrix, BracketError> {
    let det = symbolic_determinant(a);
    if det.is_zero() {
        return Err(BracketError::Singular);
    }
    let inv = det
        .inverse_monomial()
        .map_err(|_| BracketError::NonMonomialDeterminant(det.to_string()))?;
    Ok(symbolic_adjugate(a)
        .into_iter()
        .map(|r| r.into_iter().map(|p| &p * &inv).collect())
        .collect())
}

/// `(positive, negative)` eigenvalue counts of a symmetric rational matrix.
pub fn signature(g: &RatMatrix) -> Result<(usize, usize), LinalgError> {
    linalg::signature(g)
}

/// Which identity a flatness cell checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identity {
    /// `grad mu_n . g grad mu_m = alpha_nm`.
    Alpha,
    /// Coefficient of `d_x nu_j` in the derivative identity.
    Beta { j: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub n: usize,
    pub m: usize,
    pub identity: Identity,
    pub residual: MultiPoly,
}

impl CellResult {
    pub fn passed(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn label(&self) -> String {
        match self.identity {
            Identity::Alpha => format!("alpha[{},{}]", self.n, self.m),
            Identity::Beta { j } => format!("beta[{},{}] d_x nu{}", self.n, self.m, j + 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlatnessReport {
    pub family: String,
    pub names: VarNames,
    pub cells: Vec<CellResult>,
}

impl FlatnessReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(CellResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| !c.passed())
    }
}

/// Checks that the normal variables flatten the microscopic bracket:
/// for `n, m = 1..N-2`,
/// `grad mu_n . g grad mu_m = alpha_nm(mu)` and, for each `j`,
/// `sum_kl d_j d_k mu_n g_kl d_l mu_m = beta_nmj(mu)`.
pub fn check_flatness(closure: &Closure, exec: Execution) -> FlatnessReport {
    let nf = closure.nfields() - 2;
    let nv = closure.nvars();
    let metric = closure.metric();
    let mu = closure.mu_all();
    let gamma = closure.gamma_all();
    let grads: Vec<Vec<MultiPoly>> = (0..=nf).map(|n| mu[n].gradient()).collect();
    let hess: Vec<Vec<Vec<MultiPoly>>> = grads
        .iter()
        .map(|g| {
            (0..nv)
                .map(|j| g.iter().map(|p| p.diff(j).expect("j < nv")).collect())
                .collect()
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (1..=nf).flat_map(|n| (1..=nf).map(move |m| (n, m))).collect();
    let cells = exec
        .map_slice(&pairs, |&(n, m)| {
            let mut out = Vec::with_capacity(nv + 1);
            let lhs = metric.pair(&grads[n], &grads[m]);
            out.push(CellResult {
                n,
                m,
                identity: Identity::Alpha,
                residual: &lhs - &alpha_mu(n, m, mu, gamma),
            });
            for j in 0..nv {
                let lhs = metric.pair(&hess[n][j], &grads[m]);
                out.push(CellResult {
                    n,
                    m,
                    identity: Identity::Beta { j },
                    residual: &lhs - &beta_mu(n, m, j, mu, gamma),
                });
            }
            out
        })
        .into_iter()
        .flatten()
        .collect();
    FlatnessReport {
        family: closure.family().describe(),
        names: closure.names().clone(),
        cells,
    }
}

/// Signature of the full bracket, `(rho, u)` pair included.
pub fn full_signature(closure: &Closure) -> (usize, usize) {
    closure.metric().full_signature()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CasimirKind {
    Mass,
    Psi,
    Normal(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Casimir {
    pub kind: CasimirKind,
    /// Density in `(rho, u, nu)`.
    pub density: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CasimirSet {
    pub items: Vec<Casimir>,
    mu1: MultiPoly,
}

impl CasimirSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Densities at one point.
    pub fn densities(&self, rho: f64, u: f64, nu: &[f64]) -> Vec<f64> {
        let mu1 = self.mu1.eval_f64(nu).unwrap_or(f64::NAN);
        self.items
            .iter()
            .map(|c| match c.kind {
                CasimirKind::Mass => rho,
                CasimirKind::Psi => u - rho * mu1,
                CasimirKind::Normal(k) => rho * nu[k],
            })
            .collect()
    }
}

/// `int rho`, `int (u - rho mu_1(nu))` and `int rho nu_k`.
pub fn casimirs(closure: &Closure) -> CasimirSet {
    let names = closure.names();
    let mu1 = closure.mu(1);
    let mut items = vec![
        Casimir {
            kind: CasimirKind::Mass,
            density: "rho".into(),
        },
        Casimir {
            kind: CasimirKind::Psi,
            density: if mu1.is_zero() {
                "u".into()
            } else {
                format!("u - rho * ({})", mu1.to_text(names))
            },
        },
    ];
    for k in 0..closure.nvars() {
        items.push(Casimir {
            kind: CasimirKind::Normal(k),
            density: format!("rho * {}", names.get(k)),
        });
    }
    CasimirSet { items, mu1 }
}

/// `g` as a matrix of constant polynomials.
pub fn constant_matrix(g: &Metric) -> PolyMatrix {
    let n = g.dim();
    g.matrix()
        .iter()
        .map(|r| r.iter().map(|c| MultiPoly::constant(n, c.clone())).collect())
        .collect()
}

pub fn identity_matrix(n: usize, nvars: usize) -> PolyMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        MultiPoly::one(nvars)
                    } else {
                        MultiPoly::zero(nvars)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closures::{Branch, ClosureFamily};
    use crate::poly::{int, parse_default, rat};

    #[test]
    fn km_small_block() {
        let b = km_bracket(3);
        assert!(b.alpha()[0][0].is_zero());
        assert_eq!(b.alpha()[0][1], MultiPoly::var(3, 0));
        assert_eq!(b.alpha()[1][1], MultiPoly::var(3, 1).scale(&int(2)));
        let a = b.alpha_at(&[int(2), int(1), int(5)]).unwrap();
        let block = vec![vec![a[0][0].clone(), a[0][1].clone()], vec![a[1][0].clone(), a[1][1].clone()]];
        assert_eq!(signature(&block).unwrap(), (1, 1));
        for n in 2..=6 {
            assert!(km_bracket(n).is_antisymmetric());
        }
    }

    #[test]
    fn identity_transform_is_noop() {
        let b = km_bracket(4);
        let id = identity_matrix(4, 4);
        assert_eq!(b.transform(&id, Execution::Sequential).unwrap(), b);
    }

    #[test]
    fn density_velocity_coordinates() {
        // P0 = rho, P1 = rho u
        let b = km_bracket(2);
        let rho = MultiPoly::var(2, 0);
        let u = MultiPoly::var(2, 1);
        let nb = b
            .change_variables(&[rho.clone(), &rho * &u], Execution::Sequential)
            .unwrap();
        assert!(nb.alpha()[0][0].is_zero());
        assert_eq!(nb.alpha()[0][1], MultiPoly::one(2));
        assert!(nb.alpha()[1][1].is_zero());
        assert!(nb.beta().iter().flatten().flatten().all(MultiPoly::is_zero));
    }

    #[test]
    fn determinant_and_inverse() {
        let x = |i| MultiPoly::var(2, i);
        let a = vec![vec![x(0), MultiPoly::zero(2)], vec![x(1), &x(0) * &x(1)]];
        assert_eq!(symbolic_determinant(&a), parse_default("x1^2*x2", 2).unwrap());
        let inv = symbolic_inverse(&a).unwrap();
        let prod = mat_mul(&a, &inv);
        assert_eq!(prod, identity_matrix(2, 2));
        let bad = vec![vec![x(0), x(1)], vec![x(1), x(0)]];
        assert!(matches!(
            symbolic_inverse(&bad),
            Err(BracketError::NonMonomialDeterminant(_))
        ));
        let sing = vec![vec![x(0), x(1)], vec![x(0), x(1)]];
        assert_eq!(symbolic_inverse(&sing), Err(BracketError::Singular));
    }

    #[test]
    fn multidelta_stream_variables_decouple() {
        for m in 2..=3 {
            let n = 2 * m;
            // fields (a_1..a_M, v_1..v_M), alpha = [[0, I], [I, 0]]
            let mut g = linalg::zeros(n, n);
            for i in 0..m {
                g[i][m + i] = int(1);
                g[m + i][i] = int(1);
            }
            let streams = HydroBracket::flat(&g).unwrap();
            // new variables (rho, u, xi_2..xi_M, eta_2..eta_M)
            let v = |i| MultiPoly::var(n, i);
            let rho = v(0);
            let u = v(1);
            let xi: Vec<_> = (0..m - 1).map(|k| v(2 + k)).collect();
            let eta: Vec<_> = (0..m - 1).map(|k| v(m + 1 + k)).collect();
            let sum_xi = xi.iter().fold(MultiPoly::zero(n), |a, b| &a + b);
            let mu1 = xi.iter().zip(&eta).fold(MultiPoly::zero(n), |a, (x, e)| &a + &(x * e));
            let v1 = &u - &(&rho * &mu1);
            let mut images = vec![&rho * &(&MultiPoly::one(n) - &sum_xi)];
            images.extend(xi.iter().map(|x| &rho * x));
            images.push(v1.clone());
            images.extend(eta.iter().map(|e| &v1 + &(&rho * e)));
            let got = streams.change_variables(&images, Execution::Parallel).unwrap();

            let c = Closure::new(ClosureFamily::MultiDelta { streams: m }).unwrap();
            let micro = HydroBracket::flat(c.metric().matrix()).unwrap();
            let expect = HydroBracket::partially_decoupled(&micro).unwrap();
            assert_eq!(got, expect, "M = {m}");
        }
    }

    fn km_matches_decoupled(c: &Closure) {
        let n = c.nfields();
        let moments = moments_in_normal_variables(c).unwrap();
        let km = HydroBracket::kupershmidt_manin(n, &moments).unwrap();
        let micro = HydroBracket::flat(c.metric().matrix()).unwrap();
        let dec = HydroBracket::partially_decoupled(&micro).unwrap();
        let k = moment_jacobian(&moments, n).unwrap();
        let pushed = dec.transform(&k, Execution::Parallel).unwrap();
        assert_eq!(pushed, km, "{}", c.family().describe());
    }

    #[test]
    fn closures_reproduce_truncated_km_bracket() {
        for fam in [
            ClosureFamily::Cold,
            ClosureFamily::MultiDelta { streams: 2 },
            ClosureFamily::Burby { level: 2, branch: Branch::Plus },
            ClosureFamily::Burby { level: 3, branch: Branch::Minus },
            ClosureFamily::Waterbag { heights: vec![int(1), int(2), int(-3)] },
            ClosureFamily::FourField { kappa: rat(1, 3) },
        ] {
            km_matches_decoupled(&Closure::new(fam).unwrap());
        }
    }

    #[test]
    fn flatness_holds_for_families() {
        for fam in [
            ClosureFamily::MultiDelta { streams: 3 },
            ClosureFamily::Burby { level: 4, branch: Branch::Plus },
            ClosureFamily::Waterbag { heights: vec![int(2), int(-1), int(3), int(-4)] },
            ClosureFamily::FourField { kappa: rat(-2, 5) },
        ] {
            let c = Closure::new(fam).unwrap();
            let r = check_flatness(&c, Execution::Parallel);
            assert!(r.passed(), "{}: {:?}", r.family, r.failures().next());
        }
    }

    #[test]
    fn casimir_densities() {
        let c = Closure::new(ClosureFamily::Cold).unwrap();
        let cs = casimirs(&c);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.items[1].density, "u");
        let c = Closure::new(ClosureFamily::Burby { level: 2, branch: Branch::Plus }).unwrap();
        let cs = casimirs(&c);
        assert_eq!(cs.len(), 4);
        let d = cs.densities(2.0, 1.0, &[0.5, 3.0]);
        assert_eq!(d, vec![2.0, 1.0 - 2.0 * 1.5, 1.0, 6.0]);
    }
}
