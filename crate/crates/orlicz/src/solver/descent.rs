//! Bounded-data solver: minimization of the discrete energy
//! `E(u) = Σ Φ_ε(x, ∇u) |T| − Σ g u w` over grid functions vanishing on the
//! boundary, by preconditioned nonlinear conjugate gradients.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{gradient, weak_divergence, GridDomain, ScalarField, VectorField};
use crate::solver::operator::Operator;
use crate::solver::problem::EllipticProblem;

/// Consecutive line-search failures before switching to halving steps.
pub const LINE_SEARCH_FAILURES: usize = 5;
/// Intermediate regularization levels are solved to this multiple of `tol`.
pub const CONTINUATION_SLACK: f64 = 1e3;
/// Relative energy increase still read as rounding.
const ENERGY_SLACK: f64 = 1e-13;

/// Inverse of the 5-point Dirichlet Laplacian (unit-spacing stencil) on the
/// interior grid points, by a two-dimensional sine transform.
pub struct PoissonPreconditioner {
    nx: usize,
    ny: usize,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    eig: Vec<f64>,
}

impl std::fmt::Debug for PoissonPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonPreconditioner")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

/// Unnormalized DST-I of `x` (length `n − 1`) through an FFT of length `2n`.
fn dst1(fft: &dyn Fft<f64>, x: &mut [f64], buf: &mut [Complex<f64>]) {
    let n = x.len() + 1;
    buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
    for (j, &v) in x.iter().enumerate() {
        buf[j + 1].re = v;
        buf[2 * n - j - 1].re = -v;
    }
    fft.process(buf);
    for (k, v) in x.iter_mut().enumerate() {
        *v = -0.5 * buf[k + 1].im;
    }
}

impl PoissonPreconditioner {
    pub fn new(domain: &GridDomain) -> Self {
        let (nx, ny) = (domain.nx(), domain.ny());
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_forward(2 * nx);
        let fft_y = planner.plan_fft_forward(2 * ny);
        let sx: Vec<f64> = (1..nx)
            .map(|k| {
                4.0 * (std::f64::consts::PI * k as f64 / (2 * nx) as f64)
                    .sin()
                    .powi(2)
            })
            .collect();
        let sy: Vec<f64> = (1..ny)
            .map(|l| {
                4.0 * (std::f64::consts::PI * l as f64 / (2 * ny) as f64)
                    .sin()
                    .powi(2)
            })
            .collect();
        let eig = sy
            .iter()
            .flat_map(|b| sx.iter().map(move |a| a + b))
            .collect();
        PoissonPreconditioner {
            nx,
            ny,
            fft_x,
            fft_y,
            eig,
        }
    }

    /// Solves `K z = r` on interior points; boundary entries of `r` are ignored
    /// and those of `z` are zero.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let (mx, my) = (nx - 1, ny - 1);
        let mut a: Vec<f64> = (1..ny)
            .flat_map(|j| (1..nx).map(move |i| (i, j)))
            .map(|(i, j)| r[j * (nx + 1) + i])
            .collect();
        self.transform(&mut a);
        for (v, e) in a.iter_mut().zip(&self.eig) {
            *v /= e;
        }
        self.transform(&mut a);
        let scale = (2.0 / nx as f64) * (2.0 / ny as f64);
        let mut z = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..my {
            for i in 0..mx {
                z[(j + 1) * (nx + 1) + i + 1] = scale * a[j * mx + i];
            }
        }
        z
    }

    fn transform(&self, a: &mut [f64]) {
        let (mx, my) = (self.nx - 1, self.ny - 1);
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * self.nx];
        for row in a.chunks_mut(mx) {
            dst1(self.fft_x.as_ref(), row, &mut buf);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); 2 * self.ny];
        let mut col = vec![0.0; my];
        for i in 0..mx {
            for j in 0..my {
                col[j] = a[j * mx + i];
            }
            dst1(self.fft_y.as_ref(), &mut col, &mut buf);
            for j in 0..my {
                a[j * mx + i] = col[j];
            }
        }
    }
}

/// Energy, residual and regularization per accepted iterate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DescentTrace {
    pub energy: Vec<f64>,
    pub residual: Vec<f64>,
    pub eps: Vec<f64>,
    /// Iterations taken with halving steps after repeated line-search failures.
    pub fallback_steps: usize,
}

#[derive(Clone, Debug)]
pub struct BoundedSolution {
    pub u: ScalarField,
    pub trace: DescentTrace,
}

impl BoundedSolution {
    pub fn iterations(&self) -> usize {
        self.trace.energy.len().saturating_sub(1)
    }
    pub fn residual(&self) -> f64 {
        self.trace.residual.last().copied().unwrap_or(f64::NAN)
    }
}

/// The discrete energy at one regularization level.
pub struct Energy<'a> {
    op: &'a Operator,
    /// `g_n w_n`, zero on the boundary.
    load: Vec<f64>,
    eps: f64,
    area: f64,
}

impl<'a> Energy<'a> {
    pub fn new(op: &'a Operator, g: &ScalarField, eps: f64) -> Result<Self> {
        let d = *op.domain();
        if g.domain() != &d {
            return Err(Error::DomainMismatch);
        }
        let load = (0..d.num_nodes())
            .map(|n| {
                if d.is_boundary_node(n) {
                    0.0
                } else {
                    g.values()[n] * d.node_weight(n)
                }
            })
            .collect();
        Ok(Energy {
            op,
            load,
            eps,
            area: 0.5 * d.cell_area(),
        })
    }

    fn cell(&self, k: usize) -> usize {
        k % self.op.domain().num_cells()
    }

    pub fn value(&self, u: &ScalarField) -> f64 {
        let grad = gradient(u);
        let stored: f64 = grad
            .values()
            .iter()
            .enumerate()
            .map(|(k, &xi)| self.op.potential(self.cell(k), xi, self.eps))
            .sum();
        stored * self.area - dot(&self.load, u.values())
    }

    /// `∂E/∂u_n` at interior points; zero on the boundary. Its max-norm is
    /// the weak-form residual against the hat-function basis.
    pub fn gradient(&self, u: &ScalarField) -> Vec<f64> {
        let d = *self.op.domain();
        let flux = self.op.apply_eps(&gradient(u), self.eps);
        let mut g = weak_divergence(&flux);
        for (n, v) in g.iter_mut().enumerate() {
            *v = if d.is_boundary_node(n) {
                0.0
            } else {
                *v - self.load[n]
            };
        }
        g
    }

    /// `E(u + t d) − E(u)` and `d/dt E(u + t d)` from the gradients of `u` and `d`.
    fn along(&self, gu: &VectorField, gd: &VectorField, load_d: f64, t: f64) -> (f64, f64) {
        let (mut de, mut slope) = (0.0, 0.0);
        for (k, (a, b)) in gu.values().iter().zip(gd.values()).enumerate() {
            let c = self.cell(k);
            let xi = [a[0] + t * b[0], a[1] + t * b[1]];
            de += self.op.potential(c, xi, self.eps) - self.op.potential(c, *a, self.eps);
            let f = self.op.flux(c, xi, self.eps);
            slope += f[0] * b[0] + f[1] * b[1];
        }
        (de * self.area - t * load_d, slope * self.area - load_d)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Step along `d` with `E` not increasing and `|φ′(t)| ≤ 0.1 |φ′(0)|`:
/// doubling until the slope turns, then safeguarded secant steps.
fn line_search(
    e: &Energy,
    gu: &VectorField,
    gd: &VectorField,
    load_d: f64,
    slope0: f64,
    t0: f64,
    slack: f64,
) -> Option<(f64, f64)> {
    if !(slope0 < 0.0) {
        return None;
    }
    let target = 0.1 * slope0.abs();
    let (mut lo, mut slo) = (0.0, slope0);
    let mut best: Option<(f64, f64)> = None;
    let keep = |t: f64, de: f64, best: &mut Option<(f64, f64)>| {
        if de <= slack && best.is_none_or(|b| de < b.1) {
            *best = Some((t, de));
        }
    };
    let mut t = t0;
    let mut hi = None;
    for _ in 0..60 {
        let (de, s) = e.along(gu, gd, load_d, t);
        if !(de.is_finite() && s.is_finite()) {
            hi = Some((t, f64::NAN));
            break;
        }
        keep(t, de, &mut best);
        if s.abs() <= target && de <= slack {
            return Some((t, de));
        }
        if s >= 0.0 || de > slack {
            hi = Some((t, s));
            break;
        }
        lo = t;
        slo = s;
        t *= 2.0;
    }
    let (mut hi, mut shi) = hi?;
    for _ in 0..60 {
        let w = hi - lo;
        let mut t = if shi.is_finite() && shi > slo {
            lo - slo * w / (shi - slo)
        } else {
            lo + 0.5 * w
        };
        if !(t > lo + 1e-3 * w && t < hi - 1e-3 * w) {
            t = lo + 0.5 * w;
        }
        let (de, s) = e.along(gu, gd, load_d, t);
        if de.is_finite() {
            keep(t, de, &mut best);
        }
        if s.abs() <= target && de <= slack {
            return Some((t, de));
        }
        if de.is_finite() && s < 0.0 && de <= slack {
            lo = t;
            slo = s;
        } else {
            hi = t;
            shi = if s.is_finite() { s } else { f64::NAN };
        }
        if w < 1e-14 * hi {
            break;
        }
    }
    best.filter(|b| b.1 < 0.0)
}

fn halving_step(
    e: &Energy,
    gu: &VectorField,
    gd: &VectorField,
    load_d: f64,
    t0: f64,
) -> Option<(f64, f64)> {
    let mut t = t0;
    for _ in 0..80 {
        let (de, _) = e.along(gu, gd, load_d, t);
        if de < 0.0 {
            return Some((t, de));
        }
        t *= 0.5;
    }
    None
}

/// Minimizes the energy with source `g` until the residual is at most `tol`.
pub fn solve_bounded(
    problem: &EllipticProblem,
    g: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<BoundedSolution> {
    solve_bounded_from(problem, g, tol, max_iter, None)
}

/// [`solve_bounded`] warm-started from `init` (boundary values are reset to 0).
pub fn solve_bounded_from(
    problem: &EllipticProblem,
    g: &ScalarField,
    tol: f64,
    max_iter: usize,
    init: Option<&ScalarField>,
) -> Result<BoundedSolution> {
    let d = *problem.domain();
    if g.domain() != &d {
        return Err(Error::DomainMismatch);
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut u = match init {
        Some(u0) if u0.domain() == &d => {
            let mut u = u0.clone();
            for (n, v) in u.values_mut().iter_mut().enumerate() {
                if d.is_boundary_node(n) {
                    *v = 0.0;
                }
            }
            u
        }
        Some(_) => return Err(Error::DomainMismatch),
        None => ScalarField::zeros(d),
    };
    let pre = PoissonPreconditioner::new(&d);
    let levels = problem.operator.continuation();
    let mut trace = DescentTrace::default();
    let mut iterations = 0;
    let mut step = 1.0;
    for (li, &eps) in levels.iter().enumerate() {
        let level_tol = if li + 1 == levels.len() {
            tol
        } else {
            tol * CONTINUATION_SLACK
        };
        let energy = Energy::new(&problem.operator, g, eps)?;
        let mut e_cur = energy.value(&u);
        let mut grad = energy.gradient(&u);
        let mut res = max_abs(&grad);
        trace.energy.push(e_cur);
        trace.residual.push(res);
        trace.eps.push(eps);
        let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        let mut dir: Vec<f64> = Vec::new();
        let mut failures = 0;
        while res > level_tol {
            if iterations >= max_iter {
                return Err(Error::NonConvergence {
                    level: None,
                    iterations,
                    last: res,
                    residuals: trace.residual,
                });
            }
            iterations += 1;
            let z = pre.apply(&grad);
            let gz = dot(&grad, &z);
            let beta = match &prev {
                Some((g_old, _, gz_old)) if failures == 0 => {
                    let num = gz - dot(&z, g_old);
                    (num / gz_old).max(0.0)
                }
                _ => 0.0,
            };
            if beta == 0.0 || dir.is_empty() {
                dir = z.iter().map(|v| -v).collect();
            } else {
                dir.iter_mut()
                    .zip(&z)
                    .for_each(|(p, zv)| *p = -zv + beta * *p);
            }
            let mut slope0 = dot(&grad, &dir);
            if !(slope0 < 0.0) {
                dir = z.iter().map(|v| -v).collect();
                slope0 = -gz;
            }
            let dfield = ScalarField::new(d, dir.clone())?;
            let gu = gradient(&u);
            let gd = gradient(&dfield);
            let load_d = dot(&energy.load, &dir);
            let slack = ENERGY_SLACK * e_cur.abs().max(f64::MIN_POSITIVE);
            let found = if failures < LINE_SEARCH_FAILURES {
                line_search(&energy, &gu, &gd, load_d, slope0, step, slack)
            } else {
                trace.fallback_steps += 1;
                halving_step(&energy, &gu, &gd, load_d, step.max(1.0))
            };
            let Some((t, de)) = found else {
                failures += 1;
                prev = None;
                if failures > LINE_SEARCH_FAILURES + 1 {
                    return Err(Error::NonConvergence {
                        level: None,
                        iterations,
                        last: res,
                        residuals: trace.residual,
                    });
                }
                continue;
            };
            failures = 0;
            step = t;
            u.values_mut()
                .iter_mut()
                .zip(&dir)
                .for_each(|(v, p)| *v += t * p);
            e_cur += de;
            prev = Some((grad, z, gz));
            grad = energy.gradient(&u);
            res = max_abs(&grad);
            trace.energy.push(e_cur);
            trace.residual.push(res);
            trace.eps.push(eps);
        }
    }
    Ok(BoundedSolution { u, trace })
}
