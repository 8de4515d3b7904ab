//! Deterministic and Monte Carlo integration with explicit error estimates.
//!
//! The 1-D workhorse is globally adaptive 7/15 Gauss-Kronrod. Full-line and
//! half-line integrals are compactified through `x = t/(1-t^2)` first.
//! Integrands carrying an algebraic endpoint factor `(b-x)^alpha` with
//! `alpha` in (-1,0) are tamed by the power substitution `s = (b-x)^(1+alpha)`
//! before subdivision. Tensor integration is iterated 1-D; Monte Carlo is
//! importance sampling against a caller-supplied proposal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (positive half, center first).
const XGK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

/// 7-point Gauss weights for the embedded rule (nodes XGK[0], XGK[2], XGK[4], XGK[6]).
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// Integration method tag carried by every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    AdaptiveGk,
    TensorGk,
    MonteCarlo,
    Exact,
}

/// A value paired with the honest internal error estimate of the method
/// that produced it.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
    pub node_count: usize,
}

impl IntegralEstimate {
    pub fn exact(value: f64) -> Self {
        IntegralEstimate {
            value,
            error_bound: 0.0,
            method: Method::Exact,
            node_count: 0,
        }
    }
}

/// N-dimensional strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NdStrategy {
    Tensor,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub tolerance: f64,
    pub max_subdivisions: usize,
    pub nd_strategy: NdStrategy,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            tolerance: 1e-10,
            max_subdivisions: 4000,
            nd_strategy: NdStrategy::Tensor,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    /// Default used for tensorized n-dimensional integrals (n <= 3).
    pub fn tensor_default() -> Self {
        QuadratureSpec {
            tolerance: 1e-8,
            ..Default::default()
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        assert!(tol > 0.0, "tolerance must be positive");
        self.tolerance = tol;
        self
    }
}

/// One-dimensional integration domain. Endpoint exponents mark an algebraic
/// factor `dist^alpha`, `alpha` in (-1, 0), contained in the integrand.
#[derive(Debug, Clone, Copy)]
pub enum Domain1D {
    Interval {
        a: f64,
        b: f64,
        alpha_left: Option<f64>,
        alpha_right: Option<f64>,
    },
    /// All of R, compactified through `x = t/(1-t^2)`.
    RealLine,
    /// `[from, +inf)`, compactified through `x = from + t/(1-t^2)`, t in [0,1).
    HalfLine { from: f64 },
}

impl Domain1D {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain1D::Interval {
            a,
            b,
            alpha_left: None,
            alpha_right: None,
        }
    }
}

/// The compactification map `x = t/(1-t^2)` and its Jacobian
/// `(1+t^2)/(1-t^2)^2` on t in (-1,1).
pub fn compactify_map(t: f64) -> (f64, f64) {
    let denom = 1.0 - t * t;
    (t / denom, (1.0 + t * t) / (denom * denom))
}

/// Inverse of the compactification map.
pub fn compactify_inv(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
    }
}

/// Wraps an absolutely integrable integrand on R into its compactified
/// form on (-1, 1).
pub fn compactify<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> f64 {
    move |t| {
        let (x, jac) = compactify_map(t);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

// Kahan compensated accumulator; panel sums must not depend on evaluation
// order when work is split across workers.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    s: f64,
    c: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.s
    }
}

/// Raw 7/15 Gauss-Kronrod application on [a, b]:
/// returns (kronrod value, error estimate, node count).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);

    let mut resk = WGK[0] * fc;
    let mut resg = WG[0] * fc;
    let mut resabs = WGK[0] * fc.abs();
    let mut fv = [0.0f64; 15];
    fv[0] = fc;

    for j in 1..8 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[2 * j - 1] = f1;
        fv[2 * j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 0 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[0] * (fc - reskh).abs();
    for j in 1..8 {
        resasc += WGK[j] * ((fv[2 * j - 1] - reskh).abs() + (fv[2 * j] - reskh).abs());
    }

    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive integration of `f` over finite panels.
/// `breakpoints` are interior points the panel structure must respect
/// (kinks, matching splits).
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut nodes = 0usize;
    for w in cuts.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        nodes += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            err: e,
        });
    }

    let mut splits = heap.len();
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        let total_val: f64 = {
            let mut k = KahanSum::default();
            for p in &heap {
                k.add(p.value);
            }
            k.value()
        };
        if total_err <= spec.tolerance {
            return Ok(IntegralEstimate {
                value: total_val,
                error_bound: total_err,
                method: Method::AdaptiveGk,
                node_count: nodes,
            });
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::NonConvergent {
                value: total_val,
                error_bound: total_err,
                node_count: nodes,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // interval exhausted floating point resolution; keep as is
            let mut k = KahanSum::default();
            for p in &heap {
                k.add(p.value);
            }
            k.add(worst.value);
            let v = k.value();
            let e: f64 = heap.iter().map(|p| p.err).sum::<f64>() + worst.err;
            return Ok(IntegralEstimate {
                value: v,
                error_bound: e,
                method: Method::AdaptiveGk,
                node_count: nodes,
            });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk15(f, lo, hi);
            nodes += 15;
            heap.push(Panel {
                a: lo,
                b: hi,
                value: v,
                err: e,
            });
        }
        splits += 1;
    }
}

/// Adaptive 1-D integration over `domain`. Full/half lines are compactified;
/// declared endpoint exponents get the power-law substitution; breakpoints
/// are mapped through the active transform.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: F,
    domain: Domain1D,
    spec: &QuadratureSpec,
    breakpoints: &[f64],
) -> Result<IntegralEstimate> {
    match domain {
        Domain1D::RealLine => {
            let g = compactify(&f);
            let bp: Vec<f64> = breakpoints.iter().map(|&x| compactify_inv(x)).collect();
            adapt(&g, -1.0 + 1e-15, 1.0 - 1e-15, &bp, spec)
        }
        Domain1D::HalfLine { from } => {
            let g = move |t: f64| {
                let (u, jac) = compactify_map(t);
                let v = f(from + u) * jac;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            let bp: Vec<f64> = breakpoints
                .iter()
                .map(|&x| compactify_inv(x - from))
                .collect();
            adapt(&g, 0.0, 1.0 - 1e-15, &bp, spec)
        }
        Domain1D::Interval {
            a,
            b,
            alpha_left,
            alpha_right,
        } => {
            if !(a < b) {
                return Ok(IntegralEstimate {
                    value: 0.0,
                    error_bound: 0.0,
                    method: Method::AdaptiveGk,
                    node_count: 0,
                });
            }
            match (alpha_left, alpha_right) {
                (None, None) => adapt(&f, a, b, breakpoints, spec),
                _ => {
                    // split at the midpoint; each singular half gets its own
                    // substitution, plain halves integrate directly
                    let mid = 0.5 * (a + b);
                    let inner: Vec<f64> = breakpoints
                        .iter()
                        .copied()
                        .filter(|&x| x > a && x < b)
                        .collect();
                    let mut total = IntegralEstimate {
                        value: 0.0,
                        error_bound: 0.0,
                        method: Method::AdaptiveGk,
                        node_count: 0,
                    };
                    let mut acc = |est: IntegralEstimate| {
                        total.value += est.value;
                        total.error_bound += est.error_bound;
                        total.node_count += est.node_count;
                    };
                    // left half
                    let left = match alpha_left {
                        Some(alpha) => {
                            check_alpha(alpha)?;
                            let p = 1.0 + alpha;
                            let g = |s: f64| {
                                let d = s.powf(1.0 / p); // distance from a
                                let v = f(a + d) * d.powf(-alpha) / p;
                                if v.is_finite() {
                                    v
                                } else {
                                    0.0
                                }
                            };
                            adapt(&g, 0.0, (mid - a).powf(p), &[], spec)?
                        }
                        None => adapt(
                            &f,
                            a,
                            mid,
                            &inner
                                .iter()
                                .copied()
                                .filter(|&x| x < mid)
                                .collect::<Vec<_>>(),
                            spec,
                        )?,
                    };
                    acc(left);
                    // right half
                    let right = match alpha_right {
                        Some(alpha) => {
                            check_alpha(alpha)?;
                            let p = 1.0 + alpha;
                            let g = |s: f64| {
                                let d = s.powf(1.0 / p); // distance from b
                                let v = f(b - d) * d.powf(-alpha) / p;
                                if v.is_finite() {
                                    v
                                } else {
                                    0.0
                                }
                            };
                            adapt(&g, 0.0, (b - mid).powf(p), &[], spec)?
                        }
                        None => adapt(
                            &f,
                            mid,
                            b,
                            &inner
                                .iter()
                                .copied()
                                .filter(|&x| x > mid)
                                .collect::<Vec<_>>(),
                            spec,
                        )?,
                    };
                    acc(right);
                    Ok(total)
                }
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha <= -1.0 {
        return Err(Error::NonIntegrable(format!(
            "endpoint exponent {alpha} <= -1"
        )));
    }
    Ok(())
}

/// N-dimensional domain for deterministic tensor integration.
#[derive(Debug, Clone)]
pub enum DomainNd {
    /// Cartesian product of finite intervals.
    Box(Vec<(f64, f64)>),
    /// All of R^n, compactified per axis.
    FullSpace(usize),
    /// Centered Euclidean ball; slices carry an optional boundary exponent
    /// for weights vanishing like a power of the distance to the sphere.
    Ball {
        dim: usize,
        radius: f64,
        boundary_alpha: Option<f64>,
    },
}

impl DomainNd {
    pub fn dim(&self) -> usize {
        match self {
            DomainNd::Box(iv) => iv.len(),
            DomainNd::FullSpace(n) => *n,
            DomainNd::Ball { dim, .. } => *dim,
        }
    }
}

// ------------------------------------------------- tensor-product cubature

/// Per-axis coordinate map from the cubature variable `u` to a physical (or
/// polar) coordinate, with Jacobian.
#[derive(Debug, Clone, Copy)]
enum AxisMap {
    /// u is the coordinate itself
    Identity,
    /// x = u/(1-u^2) on u in (-1,1)
    Compact,
    /// radial axis with a power substitution absorbing `dist^alpha` at the
    /// outer end: rho = R - s^{1/(1+alpha)}
    PowerOuter { radius: f64, alpha: f64 },
}

impl AxisMap {
    /// (coordinate, jacobian) at cubature variable u. For `PowerOuter` an
    /// extra factor `dist^{-alpha}` is folded into the Jacobian; the caller's
    /// integrand is expected to contain `dist^{alpha}`.
    fn apply(&self, u: f64) -> (f64, f64) {
        match *self {
            AxisMap::Identity => (u, 1.0),
            AxisMap::Compact => compactify_map(u),
            AxisMap::PowerOuter { radius, alpha } => {
                let p = 1.0 + alpha;
                let d = u.powf(1.0 / p);
                (radius - d, d.powf(-alpha) / p)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Axis {
    lo: f64,
    hi: f64,
    map: AxisMap,
}

/// Full 15-node arrays per axis: positions and (Kronrod, embedded-Gauss)
/// weights, the latter zero at Kronrod-only nodes.
fn rule15() -> ([f64; 15], [f64; 15], [f64; 15]) {
    let mut xs = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for j in 0..8 {
        // center at index 7; node j goes to 7 +- j
        xs[7 + j] = XGK[j];
        xs[7 - j] = -XGK[j];
        wk[7 + j] = WGK[j];
        wk[7 - j] = WGK[j];
        if j % 2 == 0 {
            wg[7 + j] = WG[j / 2];
            wg[7 - j] = WG[j / 2];
        }
    }
    (xs, wk, wg)
}

#[derive(Debug)]
struct CellResult {
    value: f64,
    err: f64,
    split_axis: usize,
}

struct Cubature<'a, F> {
    f: &'a F,
    axes: Vec<Axis>,
    /// geometric weight multiplying the integrand (polar Jacobian), as a
    /// function of the mapped coordinates
    geom: Box<dyn Fn(&[f64]) -> f64 + 'a>,
    /// converts mapped (possibly polar) coordinates to the physical point
    to_point: Box<dyn Fn(&[f64], &mut [f64]) + 'a>,
    evals: usize,
}

impl<'a, F: Fn(&[f64]) -> f64> Cubature<'a, F> {
    /// Tensor G7K15 on one cell, with one embedded-Gauss error per axis;
    /// the split hint is the axis with the largest discrepancy.
    fn eval_cell(&mut self, cell: &[(f64, f64)]) -> CellResult {
        let n = self.axes.len();
        let (xs, wk, wg) = rule15();
        // per-axis mapped nodes and weights
        let mut node_x = vec![[0.0f64; 15]; n]; // mapped coordinate
        let mut node_wk = vec![[0.0f64; 15]; n];
        let mut node_ratio = vec![[0.0f64; 15]; n]; // wg/wk per node
        for a in 0..n {
            let (lo, hi) = cell[a];
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            for k in 0..15 {
                let u = c + h * xs[k];
                let (x, jac) = self.axes[a].map.apply(u);
                node_x[a][k] = x;
                node_wk[a][k] = wk[k] * h * jac;
                node_ratio[a][k] = wg[k] / wk[k];
            }
        }
        let mut vk = KahanSum::default();
        let mut vg = vec![KahanSum::default(); n];
        let mut idx = vec![0usize; n];
        let mut mapped = vec![0.0f64; n];
        let mut point = vec![0.0f64; n];
        loop {
            let mut w = 1.0;
            for a in 0..n {
                mapped[a] = node_x[a][idx[a]];
                w *= node_wk[a][idx[a]];
            }
            (self.to_point)(&mapped, &mut point);
            let g = (self.geom)(&mapped);
            let mut fv = (self.f)(&point) * g;
            if !fv.is_finite() {
                fv = 0.0;
            }
            self.evals += 1;
            let fw = fv * w;
            vk.add(fw);
            for a in 0..n {
                vg[a].add(fw * node_ratio[a][idx[a]]);
            }
            // advance multi-index
            let mut a = 0;
            loop {
                if a == n {
                    let value = vk.value();
                    let mut err = 0.0;
                    let mut split_axis = 0;
                    let mut worst = -1.0f64;
                    for b in 0..n {
                        let e = (value - vg[b].value()).abs();
                        err += e;
                        if e > worst {
                            worst = e;
                            split_axis = b;
                        }
                    }
                    err = err.max(50.0 * f64::EPSILON * value.abs());
                    return CellResult {
                        value,
                        err,
                        split_axis,
                    };
                }
                idx[a] += 1;
                if idx[a] < 15 {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

#[derive(Debug)]
struct NdCell {
    bounds: Vec<(f64, f64)>,
    value: f64,
    err: f64,
    split_axis: usize,
}

impl PartialEq for NdCell {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for NdCell {}
impl PartialOrd for NdCell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NdCell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive tensor-product Gauss-Kronrod integration over an n-dimensional
/// domain, n <= 3. Full space is compactified per axis; balls integrate in
/// polar coordinates, with the radial power substitution when a boundary
/// exponent is declared.
pub fn integrate_nd<F>(f: F, domain: &DomainNd, spec: &QuadratureSpec) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64,
{
    let n = domain.dim();
    if n == 0 || n > 3 {
        return Err(Error::UnsupportedDimension {
            dim: n,
            strategy: "tensor",
        });
    }

    // identity transforms unless the domain says otherwise
    let mut geom: Box<dyn Fn(&[f64]) -> f64> = Box::new(|_| 1.0);
    let mut to_point: Box<dyn Fn(&[f64], &mut [f64])> = Box::new(|m, p| p.copy_from_slice(m));
    let axes: Vec<Axis> = match domain {
        DomainNd::Box(iv) => iv
            .iter()
            .map(|&(a, b)| Axis {
                lo: a,
                hi: b,
                map: AxisMap::Identity,
            })
            .collect(),
        DomainNd::FullSpace(_) => (0..n)
            .map(|_| Axis {
                lo: -1.0 + 1e-15,
                hi: 1.0 - 1e-15,
                map: AxisMap::Compact,
            })
            .collect(),
        DomainNd::Ball {
            dim,
            radius,
            boundary_alpha,
        } => {
            if *dim == 1 {
                return integrate_1d(
                    |x| f(&[x]),
                    Domain1D::Interval {
                        a: -radius,
                        b: *radius,
                        alpha_left: *boundary_alpha,
                        alpha_right: *boundary_alpha,
                    },
                    spec,
                    &[],
                )
                .map(|mut est| {
                    est.method = Method::TensorGk;
                    est
                });
            }
            let radial = match boundary_alpha {
                Some(alpha) => {
                    check_alpha(*alpha)?;
                    Axis {
                        lo: 0.0,
                        hi: radius.powf(1.0 + alpha),
                        map: AxisMap::PowerOuter {
                            radius: *radius,
                            alpha: *alpha,
                        },
                    }
                }
                None => Axis {
                    lo: 0.0,
                    hi: *radius,
                    map: AxisMap::Identity,
                },
            };
            let dim = *dim;
            // mapped coordinates are (rho, theta[, phi])
            if dim == 2 {
                geom = Box::new(|m: &[f64]| m[0].abs());
                to_point = Box::new(|m: &[f64], p: &mut [f64]| {
                    p[0] = m[0] * m[1].cos();
                    p[1] = m[0] * m[1].sin();
                });
                vec![
                    radial,
                    Axis {
                        lo: 0.0,
                        hi: 2.0 * std::f64::consts::PI,
                        map: AxisMap::Identity,
                    },
                ]
            } else {
                geom = Box::new(|m: &[f64]| (m[0] * m[0] * m[2].sin()).abs());
                to_point = Box::new(|m: &[f64], p: &mut [f64]| {
                    let sp = m[2].sin();
                    p[0] = m[0] * m[1].cos() * sp;
                    p[1] = m[0] * m[1].sin() * sp;
                    p[2] = m[0] * m[2].cos();
                });
                vec![
                    radial,
                    Axis {
                        lo: 0.0,
                        hi: 2.0 * std::f64::consts::PI,
                        map: AxisMap::Identity,
                    },
                    Axis {
                        lo: 0.0,
                        hi: std::f64::consts::PI,
                        map: AxisMap::Identity,
                    },
                ]
            }
        }
    };

    let bounds0: Vec<(f64, f64)> = axes.iter().map(|a| (a.lo, a.hi)).collect();
    let mut cub = Cubature {
        f: &f,
        axes,
        geom,
        to_point,
        evals: 0,
    };
    let first = cub.eval_cell(&bounds0);
    let mut heap = BinaryHeap::new();
    heap.push(NdCell {
        bounds: bounds0,
        value: first.value,
        err: first.err,
        split_axis: first.split_axis,
    });

    // cells too small to split retire here; their error still counts
    let mut retired_val = KahanSum::default();
    let mut retired_err = 0.0f64;
    let mut splits = 0usize;
    loop {
        let mut total_val = retired_val;
        for c in &heap {
            total_val.add(c.value);
        }
        let total_err: f64 = retired_err + heap.iter().map(|c| c.err).sum::<f64>();
        if total_err <= spec.tolerance || heap.is_empty() {
            return Ok(IntegralEstimate {
                value: total_val.value(),
                error_bound: total_err,
                method: Method::TensorGk,
                node_count: cub.evals,
            });
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::NonConvergent {
                value: total_val.value(),
                error_bound: total_err,
                node_count: cub.evals,
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let axis = worst.split_axis;
        let (lo, hi) = worst.bounds[axis];
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            retired_val.add(worst.value);
            retired_err += worst.err;
            continue;
        }
        for (a, b) in [(lo, mid), (mid, hi)] {
            let mut bounds = worst.bounds.clone();
            bounds[axis] = (a, b);
            let res = cub.eval_cell(&bounds);
            heap.push(NdCell {
                bounds,
                value: res.value,
                err: res.err,
                split_axis: res.split_axis,
            });
        }
        splits += 1;
    }
}

/// Importance-sampled Monte Carlo estimate of `integral of h(x) dx` given a
/// proposal sampler and its (normalized) density. Error bound is one
/// standard error. Bit-reproducible for a fixed seed.
pub fn integrate_mc<F, S>(
    h: F,
    proposal: S,
    proposal_density: impl Fn(&[f64]) -> f64,
    samples: usize,
    seed: u64,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64,
    S: Fn(&mut ChaCha8Rng) -> Vec<f64>,
{
    assert!(samples >= 2, "need at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = KahanSum::default();
    let mut sumsq = KahanSum::default();
    for _ in 0..samples {
        let x = proposal(&mut rng);
        let q = proposal_density(&x);
        let w = if q > 0.0 { h(&x) / q } else { 0.0 };
        sum.add(w);
        sumsq.add(w * w);
    }
    let nf = samples as f64;
    let mean = sum.value() / nf;
    let var = (sumsq.value() / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(IntegralEstimate {
        value: mean,
        error_bound: (var / nf).sqrt(),
        method: Method::MonteCarlo,
        node_count: samples,
    })
}

/// Fixed 4-point Gauss-Legendre on [a, b]; used for exact-ish cell masses.
pub fn gauss4<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 2] = [0.339981043584856264802665759103, 0.861136311594052575223946488893];
    const W: [f64; 2] = [0.652145154862546142626936050778, 0.347854845137453857373063949222];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..2 {
        s += W[k] * (f(c - h * X[k]) + f(c + h * X[k]));
    }
    s * h
}
