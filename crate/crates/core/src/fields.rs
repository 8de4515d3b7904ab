//! Point-evaluable scalar fields with analytic or finite-difference
//! derivative access.
//!
//! A [`ScalarField`] is a deterministic function of a point together with
//! optional analytic gradient/Hessian closures. When those are absent,
//! derivatives fall back to central differences. Fields built from the
//! `|x_i|^r` family carry kink markers; derivative evaluation inside the
//! kink-exclusion band is refused so quadrature layers can split instead.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Half-width of the band around a kink inside which derivative
/// evaluation is refused.
pub const KINK_BAND: f64 = 1e-8;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>;

/// A coordinate hyperplane `x[coord] = at` across which the field is not
/// twice differentiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    pub coord: usize,
    pub at: f64,
}

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    eval: EvalFn,
    grad: Option<GradFn>,
    hess: Option<HessFn>,
    kinks: Vec<Kink>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("analytic_grad", &self.grad.is_some())
            .field("analytic_hess", &self.hess.is_some())
            .field("kinks", &self.kinks)
            .finish()
    }
}

/// Default central-difference step for first derivatives:
/// eps^(1/3) * max(1, |x_i|), the usual truncation/rounding balance.
pub fn default_grad_step(xi: f64) -> f64 {
    const CBRT_EPS: f64 = 6.055454452393343e-6;
    CBRT_EPS * xi.abs().max(1.0)
}

/// Default step for second differences: eps^(1/4) * max(1, |x_i|).
/// The cube-root step used for gradients loses too much to rounding in
/// second differences.
pub fn default_hess_step(xi: f64) -> f64 {
    const QRT_EPS: f64 = 1.2207031250000002e-4;
    QRT_EPS * xi.abs().max(1.0)
}

impl ScalarField {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            dim,
            eval: Arc::new(f),
            grad: None,
            hess: None,
            kinks: Vec::new(),
        }
    }

    pub fn with_grad<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hess<H>(mut self, h: H) -> Self
    where
        H: Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(h));
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<Kink>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kinks(&self) -> &[Kink] {
        &self.kinks
    }

    pub fn has_analytic_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_analytic_hess(&self) -> bool {
        self.hess.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    fn check_kinks(&self, x: &[f64]) -> Result<()> {
        for k in &self.kinks {
            let dist = (x[k.coord] - k.at).abs();
            if dist < KINK_BAND {
                return Err(Error::KinkProximity {
                    coord: k.coord,
                    dist,
                });
            }
        }
        Ok(())
    }

    /// Gradient at `x`: analytic when supplied, otherwise central
    /// differences with per-coordinate step `h` (or the default step).
    pub fn eval_grad(&self, x: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
        debug_assert_eq!(x.len(), self.dim);
        self.check_kinks(x)?;
        if let Some(g) = &self.grad {
            return Ok(g(x));
        }
        let mut out = vec![0.0; self.dim];
        let mut xp = x.to_vec();
        for i in 0..self.dim {
            let hi = h.unwrap_or_else(|| default_grad_step(x[i]));
            xp[i] = x[i] + hi;
            let fp = (self.eval)(&xp);
            xp[i] = x[i] - hi;
            let fm = (self.eval)(&xp);
            xp[i] = x[i];
            out[i] = (fp - fm) / (2.0 * hi);
        }
        Ok(out)
    }

    /// Hessian at `x`, symmetrized. Numeric path averages the mixed
    /// differences; `SymMatrix::from_rows` enforces exact symmetry.
    pub fn eval_hess(&self, x: &[f64], h: Option<f64>) -> Result<SymMatrix> {
        debug_assert_eq!(x.len(), self.dim);
        self.check_kinks(x)?;
        if let Some(hess) = &self.hess {
            return Ok(hess(x));
        }
        let n = self.dim;
        let f0 = (self.eval)(x);
        let mut raw = vec![0.0; n * n];
        let mut xp = x.to_vec();
        for i in 0..n {
            let hi = h.unwrap_or_else(|| default_hess_step(x[i]));
            xp[i] = x[i] + hi;
            let fp = (self.eval)(&xp);
            xp[i] = x[i] - hi;
            let fm = (self.eval)(&xp);
            xp[i] = x[i];
            raw[i * n + i] = (fp - 2.0 * f0 + fm) / (hi * hi);
            for j in (i + 1)..n {
                let hj = h.unwrap_or_else(|| default_hess_step(x[j]));
                let mut probe = |si: f64, sj: f64| {
                    xp[i] = x[i] + si * hi;
                    xp[j] = x[j] + sj * hj;
                    let v = (self.eval)(&xp);
                    xp[i] = x[i];
                    xp[j] = x[j];
                    v
                };
                let mixed = (probe(1.0, 1.0) - probe(1.0, -1.0) - probe(-1.0, 1.0)
                    + probe(-1.0, -1.0))
                    / (4.0 * hi * hj);
                raw[i * n + j] = mixed;
                raw[j * n + i] = mixed;
            }
        }
        Ok(SymMatrix::from_rows(n, &raw))
    }

    /// `D^2 V(x) + (1/beta) grad V (x) grad V`, the modified Hessian used by
    /// the rank-one-perturbation inequality.
    pub fn modified_hessian(&self, x: &[f64], beta: f64) -> Result<SymMatrix> {
        assert!(beta > 0.0, "modified_hessian requires beta > 0");
        let mut w = self.eval_hess(x, None)?;
        let g = self.eval_grad(x, None)?;
        w.add_outer(&g, 1.0 / beta);
        Ok(w)
    }

    // ---- combinators (all derivative closures are exact product/chain rules)

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::from_fn(dim, move |_| c)
            .with_grad(move |x| vec![0.0; x.len()])
            .with_hess(move |x| SymMatrix::zeros(x.len()))
    }

    /// The coordinate function `x -> x[i]`.
    pub fn coord(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        ScalarField::from_fn(dim, move |x| x[i])
            .with_grad(move |x| {
                let mut g = vec![0.0; x.len()];
                g[i] = 1.0;
                g
            })
            .with_hess(move |x| SymMatrix::zeros(x.len()))
    }

    /// Pointwise sum `a + c*b`.
    pub fn add_scaled(a: &ScalarField, b: &ScalarField, c: f64) -> Self {
        assert_eq!(a.dim, b.dim);
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        let mut out = ScalarField::from_fn(a.dim, move |x| fa(x) + c * fb(x));
        if let (Some(ga), Some(gb)) = (a.grad.clone(), b.grad.clone()) {
            out = out.with_grad(move |x| {
                let mut g = ga(x);
                for (gi, bi) in g.iter_mut().zip(gb(x)) {
                    *gi += c * bi;
                }
                g
            });
        }
        if let (Some(ha), Some(hb)) = (a.hess.clone(), b.hess.clone()) {
            out = out.with_hess(move |x| {
                let mut m = ha(x);
                let mb = hb(x);
                let n = m.dim();
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += c * mb[(i, j)];
                    }
                }
                m
            });
        }
        let mut kinks = a.kinks.clone();
        kinks.extend_from_slice(&b.kinks);
        out.with_kinks(kinks)
    }

    /// Pointwise product `a * b`.
    pub fn product(a: &ScalarField, b: &ScalarField) -> Self {
        assert_eq!(a.dim, b.dim);
        let (fa, fb) = (a.eval.clone(), b.eval.clone());
        let mut out = ScalarField::from_fn(a.dim, move |x| fa(x) * fb(x));
        if let (Some(ga), Some(gb)) = (a.grad.clone(), b.grad.clone()) {
            let (fa, fb) = (a.eval.clone(), b.eval.clone());
            out = out.with_grad(move |x| {
                let (va, vb) = (fa(x), fb(x));
                ga(x)
                    .into_iter()
                    .zip(gb(x))
                    .map(|(dai, dbi)| dai * vb + va * dbi)
                    .collect()
            });
        }
        if let (Some(ha), Some(hb), Some(ga), Some(gb)) = (
            a.hess.clone(),
            b.hess.clone(),
            a.grad.clone(),
            b.grad.clone(),
        ) {
            let (fa, fb) = (a.eval.clone(), b.eval.clone());
            out = out.with_hess(move |x| {
                let (va, vb) = (fa(x), fb(x));
                let (da, db) = (ga(x), gb(x));
                let (ma, mb) = (ha(x), hb(x));
                let n = x.len();
                let mut m = SymMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = ma[(i, j)] * vb
                            + mb[(i, j)] * va
                            + da[i] * db[j]
                            + da[j] * db[i];
                    }
                }
                m
            });
        }
        let mut kinks = a.kinks.clone();
        kinks.extend_from_slice(&b.kinks);
        out.with_kinks(kinks)
    }

    /// Pointwise power `a^p` for a strictly positive base field.
    pub fn powf(a: &ScalarField, p: f64) -> Self {
        let fa = a.eval.clone();
        let mut out = ScalarField::from_fn(a.dim, move |x| fa(x).powf(p));
        if let Some(ga) = a.grad.clone() {
            let fa = a.eval.clone();
            out = out.with_grad(move |x| {
                let v = fa(x);
                let s = p * v.powf(p - 1.0);
                ga(x).into_iter().map(|d| s * d).collect()
            });
        }
        if let (Some(ha), Some(ga)) = (a.hess.clone(), a.grad.clone()) {
            let fa = a.eval.clone();
            out = out.with_hess(move |x| {
                let v = fa(x);
                let d = ga(x);
                let mut m = ha(x);
                let n = m.dim();
                let s1 = p * v.powf(p - 1.0);
                let s2 = p * (p - 1.0) * v.powf(p - 2.0);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] = s1 * m[(i, j)] + s2 * d[i] * d[j];
                    }
                }
                m
            });
        }
        out.with_kinks(a.kinks.clone())
    }

    pub fn scale(a: &ScalarField, c: f64) -> Self {
        Self::add_scaled(&Self::constant(a.dim, 0.0), a, c)
    }

    // ---- the potential/test-function library

    /// `1 + |x|^2`, the Cauchy potential.
    pub fn one_plus_norm_sq(dim: usize) -> Self {
        ScalarField::from_fn(dim, |x| 1.0 + x.iter().map(|v| v * v).sum::<f64>())
            .with_grad(|x| x.iter().map(|v| 2.0 * v).collect())
            .with_hess(|x| SymMatrix::scaled_identity(x.len(), 2.0))
    }

    /// `sigma^2 - |x|^2`, the half-sphere potential (concave).
    pub fn sphere_potential(dim: usize, sigma: f64) -> Self {
        let s2 = sigma * sigma;
        ScalarField::from_fn(dim, move |x| s2 - x.iter().map(|v| v * v).sum::<f64>())
            .with_grad(|x| x.iter().map(|v| -2.0 * v).collect())
            .with_hess(|x| SymMatrix::scaled_identity(x.len(), -2.0))
    }

    /// `1 + sum |x_i|`, the gauge-type potential with a kink at each
    /// coordinate hyperplane.
    pub fn one_plus_abs(dim: usize) -> Self {
        let kinks = (0..dim).map(|coord| Kink { coord, at: 0.0 }).collect();
        ScalarField::from_fn(dim, |x| 1.0 + x.iter().map(|v| v.abs()).sum::<f64>())
            .with_grad(|x| x.iter().map(|v| v.signum()).collect())
            .with_hess(|x| SymMatrix::zeros(x.len()))
            .with_kinks(kinks)
    }

    /// `sum_i |x_i|^r / r + offset`; convex for r >= 1, kinked at zero for r < 2.
    pub fn exp_power_potential(dim: usize, r: f64, offset: f64) -> Self {
        assert!(r >= 1.0, "exp_power_potential needs r >= 1");
        let kinks: Vec<Kink> = if r < 2.0 {
            (0..dim).map(|coord| Kink { coord, at: 0.0 }).collect()
        } else {
            Vec::new()
        };
        let f = ScalarField::from_fn(dim, move |x| {
            offset + x.iter().map(|v| v.abs().powf(r)).sum::<f64>() / r
        })
        .with_grad(move |x| {
            x.iter()
                .map(|v| v.signum() * v.abs().powf(r - 1.0))
                .collect()
        })
        .with_hess(move |x| {
            let n = x.len();
            let mut m = SymMatrix::zeros(n);
            for i in 0..n {
                m[(i, i)] = (r - 1.0) * x[i].abs().powf(r - 2.0);
            }
            m
        });
        f.with_kinks(kinks)
    }

    /// Gaussian potential `|x|^2/2 + (n/2) ln(2 pi)`, so that `e^{-V}` is the
    /// standard normal density.
    pub fn gaussian_potential(dim: usize) -> Self {
        let c = dim as f64 * 0.5 * (2.0 * std::f64::consts::PI).ln();
        ScalarField::from_fn(dim, move |x| {
            c + 0.5 * x.iter().map(|v| v * v).sum::<f64>()
        })
        .with_grad(|x| x.to_vec())
        .with_hess(|x| SymMatrix::identity(x.len()))
    }

    /// `c + x^2` in one dimension.
    pub fn shifted_square_1d(c: f64) -> Self {
        ScalarField::from_fn(1, move |x| c + x[0] * x[0])
            .with_grad(|x| vec![2.0 * x[0]])
            .with_hess(|_| SymMatrix::scaled_identity(1, 2.0))
    }

    /// The bump `exp(-|x|^2/2)`.
    pub fn gaussian_bump(dim: usize) -> Self {
        ScalarField::from_fn(dim, |x| {
            (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .with_grad(|x| {
            let e = (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            x.iter().map(|v| -v * e).collect()
        })
        .with_hess(|x| {
            let n = x.len();
            let e = (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            let mut m = SymMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = e * (x[i] * x[j] - if i == j { 1.0 } else { 0.0 });
                }
            }
            m
        })
    }

    /// Monomial in the first coordinate, `x_1^k`.
    pub fn coord_power(dim: usize, k: u32) -> Self {
        ScalarField::from_fn(dim, move |x| x[0].powi(k as i32))
            .with_grad(move |x| {
                let mut g = vec![0.0; x.len()];
                g[0] = k as f64 * x[0].powi(k as i32 - 1);
                g
            })
            .with_hess(move |x| {
                let mut m = SymMatrix::zeros(x.len());
                if k >= 2 {
                    m[(0, 0)] = (k * (k - 1)) as f64 * x[0].powi(k as i32 - 2);
                }
                m
            })
    }
}
