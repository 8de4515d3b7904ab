//! Measure families: convex-potential measures `phi^{-beta} dx` (Case 1),
//! concave-potential measures `phi^{beta} 1_Omega dx` (Case 2), exponential
//! power products, and the chi family, together with parameter guards,
//! normalizers, expectations, variances and seeded samplers.
//!
//! Measures are immutable after construction: the normalizer is computed
//! eagerly and no setter exists, so the cache can never go stale.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma as GammaDist, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::quad::{
    integrate_1d, integrate_mc, integrate_nd, Domain1D, DomainNd, IntegralEstimate, Method,
    NdStrategy, QuadratureSpec,
};

/// Sampler acceptance-rate floor below which rejection sampling aborts.
const MIN_ACCEPT_RATE: f64 = 1e-4;

/// Decay-slope threshold of the square-integrability heuristic on rays.
const TAIL_SLOPE_LIMIT: f64 = -1.05;

// ---------------------------------------------------------------- domains

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    FullSpace,
    Interval { a: f64, b: f64 },
    CenteredBall { sigma: f64 },
    Box(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub dim: usize,
}

impl DomainSpec {
    pub fn full_space(dim: usize) -> Self {
        DomainSpec {
            kind: DomainKind::FullSpace,
            dim,
        }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        assert!(a < b, "interval requires a < b");
        DomainSpec {
            kind: DomainKind::Interval { a, b },
            dim: 1,
        }
    }

    pub fn centered_ball(dim: usize, sigma: f64) -> Self {
        assert!(sigma > 0.0, "ball requires sigma > 0");
        DomainSpec {
            kind: DomainKind::CenteredBall { sigma },
            dim,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::FullSpace => true,
            DomainKind::Interval { a, b } => x[0] > *a && x[0] < *b,
            DomainKind::CenteredBall { sigma } => {
                x.iter().map(|v| v * v).sum::<f64>() < sigma * sigma
            }
            DomainKind::Box(iv) => x.iter().zip(iv).all(|(v, (a, b))| v > a && v < b),
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, DomainKind::FullSpace)
    }
}

// ----------------------------------------------------------- param guards

/// The (n, beta, r) triple of the two main variance inequalities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ParamTriple {
    pub n: usize,
    pub beta: f64,
    pub r: f64,
}

impl ParamTriple {
    pub fn new(n: usize, beta: f64, r: f64) -> Self {
        ParamTriple { n, beta, r }
    }
}

fn guard_disc(n: f64, r: f64) -> f64 {
    // n^2 + 4(r^2 - r)n = n(n - 1 + (2r-1)^2) >= 0 for n >= 1
    (n * n + 4.0 * (r * r - r) * n).sqrt()
}

/// Case 1 admissibility: `beta > r + (n + sqrt(n^2 + 4(r^2-r)n))/2`, with the
/// sharp constant `A(n, beta, r) = (beta-n)/n - (n-1) r^2 / (n (beta-2r))`
/// returned only on the valid side. Validity implies `A > 0` and `beta > 2r`.
pub fn case1_guard(p: &ParamTriple) -> (bool, Option<f64>) {
    let n = p.n as f64;
    let threshold = p.r + (n + guard_disc(n, p.r)) / 2.0;
    if p.beta > threshold {
        let a = (p.beta - n) / n - (n - 1.0) * p.r * p.r / (n * (p.beta - 2.0 * p.r));
        debug_assert!(a > 0.0 && p.beta > 2.0 * p.r);
        (true, Some(a))
    } else {
        (false, None)
    }
}

/// Case 2 admissibility: `beta > -r + (-n + sqrt(n^2 + 4(r^2-r)n))/2`, with
/// `B(n, beta, r) = (beta+n)/n - (n-1) r^2 / (n (beta+2r))`.
pub fn case2_guard(p: &ParamTriple) -> (bool, Option<f64>) {
    let n = p.n as f64;
    let threshold = -p.r + (-n + guard_disc(n, p.r)) / 2.0;
    if p.beta > threshold {
        let b = (p.beta + n) / n - (n - 1.0) * p.r * p.r / (n * (p.beta + 2.0 * p.r));
        debug_assert!(b > 0.0);
        (true, Some(b))
    } else {
        (false, None)
    }
}

// ---------------------------------------------------------------- measures

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum MeasureKind {
    /// density `phi^{-beta}`, phi positive convex
    Case1,
    /// density `phi^{beta} 1_Omega`, phi positive concave, Omega bounded
    Case2,
}

/// Family tag selecting closed forms and exact samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
enum WmFamily {
    Cauchy,
    HalfSphere { sigma: f64 },
    Generic,
}

/// A probability measure `phi^{-beta} dx` or `phi^{beta} 1_Omega dx` with an
/// eagerly cached normalizer.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    pub kind: MeasureKind,
    phi: ScalarField,
    beta: f64,
    domain: DomainSpec,
    normalizer: f64,
    normalizer_err: f64,
    family: WmFamily,
}

/// Generalized Cauchy measure: `phi = 1 + |x|^2`,
/// `Z = pi^{n/2} Gamma(beta - n/2) / Gamma(beta)`, requires `beta > n/2`.
pub fn make_cauchy(n: usize, beta: f64) -> Result<WeightedMeasure> {
    let nf = n as f64;
    if !(beta > nf / 2.0) {
        return Err(Error::NonIntegrable(format!(
            "cauchy measure needs beta > n/2 (got beta = {beta}, n = {n})"
        )));
    }
    let z = (std::f64::consts::PI.ln() * nf / 2.0 + ln_gamma(beta - nf / 2.0) - ln_gamma(beta))
        .exp();
    Ok(WeightedMeasure {
        kind: MeasureKind::Case1,
        phi: ScalarField::one_plus_norm_sq(n),
        beta,
        domain: DomainSpec::full_space(n),
        normalizer: z,
        normalizer_err: 1e-13 * z,
        family: WmFamily::Cauchy,
    })
}

/// Half-sphere measure: `phi = sigma^2 - |x|^2` on the centered ball,
/// `Z = sigma^{2 beta + n} pi^{n/2} Gamma(beta+1) / Gamma(beta + n/2 + 1)`,
/// requires `beta > -1`.
pub fn make_halfsphere(n: usize, sigma: f64, beta: f64) -> Result<WeightedMeasure> {
    if !(beta > -1.0) {
        return Err(Error::NonIntegrable(format!(
            "half-sphere measure needs beta > -1 (got {beta})"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::UnsupportedParameter(format!(
            "half-sphere radius must be positive (got {sigma})"
        )));
    }
    let nf = n as f64;
    let z = ((2.0 * beta + nf) * sigma.ln()
        + std::f64::consts::PI.ln() * nf / 2.0
        + ln_gamma(beta + 1.0)
        - ln_gamma(beta + nf / 2.0 + 1.0))
    .exp();
    Ok(WeightedMeasure {
        kind: MeasureKind::Case2,
        phi: ScalarField::sphere_potential(n, sigma),
        beta,
        domain: DomainSpec::centered_ball(n, sigma),
        normalizer: z,
        normalizer_err: 1e-13 * z,
        family: WmFamily::HalfSphere { sigma },
    })
}

impl WeightedMeasure {
    /// Generic Case 1 measure `phi^{-beta} dx`; normalizer by quadrature.
    pub fn case1(phi: ScalarField, beta: f64, domain: DomainSpec, spec: &QuadratureSpec) -> Result<Self> {
        let mut m = WeightedMeasure {
            kind: MeasureKind::Case1,
            phi,
            beta,
            domain,
            normalizer: 1.0,
            normalizer_err: 0.0,
            family: WmFamily::Generic,
        };
        let est = m.normalizer_by_quadrature(spec)?;
        if !est.value.is_finite() || est.value <= 0.0 {
            return Err(Error::NonIntegrable(
                "case-1 normalizer is not finite and positive".into(),
            ));
        }
        m.normalizer = est.value;
        m.normalizer_err = est.error_bound;
        Ok(m)
    }

    /// Generic Case 2 measure `phi^{beta} 1_Omega dx` on a bounded domain.
    pub fn case2(phi: ScalarField, beta: f64, domain: DomainSpec, spec: &QuadratureSpec) -> Result<Self> {
        if !domain.is_bounded() {
            return Err(Error::UnsupportedParameter(
                "case-2 measures need a bounded domain".into(),
            ));
        }
        if !(beta > -1.0) {
            return Err(Error::NonIntegrable(format!(
                "case-2 density phi^beta with beta = {beta} <= -1 is not integrable"
            )));
        }
        let mut m = WeightedMeasure {
            kind: MeasureKind::Case2,
            phi,
            beta,
            domain,
            normalizer: 1.0,
            normalizer_err: 0.0,
            family: WmFamily::Generic,
        };
        let est = m.normalizer_by_quadrature(spec)?;
        m.normalizer = est.value;
        m.normalizer_err = est.error_bound;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Sign of the exponent on phi: -beta for Case 1, +beta for Case 2.
    fn exponent(&self) -> f64 {
        match self.kind {
            MeasureKind::Case1 => -self.beta,
            MeasureKind::Case2 => self.beta,
        }
    }

    /// Unnormalized density `phi^{+-beta}` (zero outside the domain).
    pub fn weight(&self, x: &[f64]) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        self.phi.eval(x).powf(self.exponent())
    }

    /// Normalized probability density.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.weight(x) / self.normalizer
    }

    /// `integral of h * phi^{shift} dmu`, with the boundary exponent of the
    /// combined weight handled by the quadrature layer. `shift = 0` is the
    /// plain expectation.
    pub fn expectation_phi_shift<H>(
        &self,
        h: H,
        shift: f64,
        spec: &QuadratureSpec,
    ) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        let net = self.exponent() + shift;
        let phi = &self.phi;
        let integrand = move |x: &[f64]| {
            let p = phi.eval(x);
            if p <= 0.0 {
                return 0.0;
            }
            let v = h(x) * p.powf(net);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        let mut est = self.integrate_weighted_dx(&integrand, net, spec)?;
        est.value /= self.normalizer;
        est.error_bound = est.error_bound / self.normalizer
            + est.value.abs() * self.normalizer_err / self.normalizer;
        Ok(est)
    }

    /// Expectation of `h` against the normalized measure.
    pub fn expectation<H>(&self, h: H, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        self.expectation_phi_shift(h, 0.0, spec)
    }

    /// Raw integral over the domain of an integrand whose boundary behavior
    /// is `phi^{net}`; callers pass the full integrand.
    fn integrate_weighted_dx<F>(
        &self,
        f: &F,
        net: f64,
        spec: &QuadratureSpec,
    ) -> Result<IntegralEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        // Case 2 boundary: phi vanishes at the boundary of its support, so
        // the integrand behaves like dist^net there.
        let boundary_alpha = if self.kind == MeasureKind::Case2 && net < 0.0 {
            if net <= -1.0 {
                return Err(Error::NonIntegrable(format!(
                    "case-2 integrand with net boundary exponent {net} <= -1"
                )));
            }
            Some(net)
        } else {
            None
        };
        let breakpoints: Vec<f64> = if self.dim() == 1 {
            self.phi.kinks().iter().map(|k| k.at).collect()
        } else {
            Vec::new()
        };
        match (&self.domain.kind, self.dim()) {
            (DomainKind::FullSpace, 1) => {
                integrate_1d(|x| f(&[x]), Domain1D::RealLine, spec, &breakpoints)
            }
            (DomainKind::Interval { a, b }, _) => {
                let vanishes_left = self.phi.eval(&[*a]).abs() < 1e-12;
                let vanishes_right = self.phi.eval(&[*b]).abs() < 1e-12;
                integrate_1d(
                    |x| f(&[x]),
                    Domain1D::Interval {
                        a: *a,
                        b: *b,
                        alpha_left: boundary_alpha.filter(|_| vanishes_left),
                        alpha_right: boundary_alpha.filter(|_| vanishes_right),
                    },
                    spec,
                    &breakpoints,
                )
            }
            (DomainKind::CenteredBall { sigma }, 1) => integrate_1d(
                |x| f(&[x]),
                Domain1D::Interval {
                    a: -sigma,
                    b: *sigma,
                    alpha_left: boundary_alpha,
                    alpha_right: boundary_alpha,
                },
                spec,
                &breakpoints,
            ),
            (DomainKind::FullSpace, n) => {
                if spec.nd_strategy == NdStrategy::MonteCarlo || n > 3 {
                    self.integrate_mc_fullspace(f, spec)
                } else {
                    integrate_nd(f, &DomainNd::FullSpace(n), spec)
                }
            }
            (DomainKind::CenteredBall { sigma }, n) => integrate_nd(
                f,
                &DomainNd::Ball {
                    dim: n,
                    radius: *sigma,
                    boundary_alpha,
                },
                spec,
            ),
            (DomainKind::Box(iv), _) => integrate_nd(f, &DomainNd::Box(iv.clone()), spec),
        }
    }

    /// Monte Carlo integral over R^n with the Student-like proposal whose
    /// polynomial tail order matches 2 beta (importance weights stay bounded).
    fn integrate_mc_fullspace<F>(&self, f: &F, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = self.dim();
        if n > 10 {
            return Err(Error::UnsupportedDimension {
                dim: n,
                strategy: "monte-carlo",
            });
        }
        let nu = (2.0 * self.beta - n as f64).max(0.5);
        let logc = student_log_normalizer(n, nu);
        integrate_mc(
            f,
            move |rng| sample_student(n, nu, rng),
            move |x| {
                let q2: f64 = x.iter().map(|v| v * v).sum();
                (logc - 0.5 * (nu + n as f64) * (1.0 + q2 / nu).ln()).exp()
            },
            spec.mc_samples,
            spec.seed,
        )
    }

    /// Recomputes the normalizer by quadrature (oracle for the closed forms).
    pub fn normalizer_by_quadrature(&self, spec: &QuadratureSpec) -> Result<IntegralEstimate> {
        let net = self.exponent();
        let phi = self.phi.clone();
        self.integrate_weighted_dx(
            &move |x: &[f64]| {
                let p = phi.eval(x);
                if p <= 0.0 {
                    0.0
                } else {
                    p.powf(net)
                }
            },
            net,
            spec,
        )
    }

    /// Seeded exact sampler. Cauchy families use Student-proposal rejection,
    /// Case 2 families rejection from the uniform law on the domain.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match (self.kind, self.family) {
            (MeasureKind::Case1, WmFamily::Cauchy) => {
                let n = self.dim();
                let nu = 2.0 * self.beta - n as f64;
                if nu <= 0.0 {
                    return Err(Error::UnsupportedParameter(
                        "cauchy sampler needs beta > n/2".into(),
                    ));
                }
                let mut out = Vec::with_capacity(count);
                let mut draws = 0usize;
                while out.len() < count {
                    draws += 1;
                    let x = sample_student(n, nu, &mut rng);
                    let q2: f64 = x.iter().map(|v| v * v).sum();
                    // accept prob [(1 + |x|^2/nu)/(1 + |x|^2)]^beta, <= 1 for nu >= 1
                    let mut logp = self.beta * (((1.0 + q2 / nu) / (1.0 + q2)).ln());
                    if nu < 1.0 {
                        logp += self.beta * nu.ln();
                    }
                    if rng.gen::<f64>() < logp.exp() {
                        out.push(x);
                    }
                    if draws >= 100_000 && (out.len() as f64) < MIN_ACCEPT_RATE * draws as f64 {
                        return Err(Error::SamplerInefficiency {
                            rate: out.len() as f64 / draws as f64,
                        });
                    }
                }
                Ok(out)
            }
            (MeasureKind::Case2, _) => {
                if self.beta < 0.0 {
                    return Err(Error::UnsupportedParameter(
                        "uniform-rejection sampler needs beta >= 0 (density unbounded otherwise)"
                            .into(),
                    ));
                }
                let bounds = self.bounding_box();
                let phi_max = self.phi_max_on_grid(&bounds);
                let mut out = Vec::with_capacity(count);
                let mut draws = 0usize;
                while out.len() < count {
                    draws += 1;
                    let x: Vec<f64> = bounds
                        .iter()
                        .map(|(a, b)| rng.gen_range(*a..*b))
                        .collect();
                    if !self.domain.contains(&x) {
                        continue;
                    }
                    let p = self.phi.eval(&x).max(0.0);
                    if rng.gen::<f64>() < (p / phi_max).powf(self.beta) {
                        out.push(x);
                    }
                    if draws >= 100_000 && (out.len() as f64) < MIN_ACCEPT_RATE * draws as f64 {
                        return Err(Error::SamplerInefficiency {
                            rate: out.len() as f64 / draws as f64,
                        });
                    }
                }
                Ok(out)
            }
            _ => Err(Error::UnsupportedParameter(
                "no exact sampler for generic case-1 potentials; use Monte Carlo integration"
                    .into(),
            )),
        }
    }

    fn bounding_box(&self) -> Vec<(f64, f64)> {
        match &self.domain.kind {
            DomainKind::Interval { a, b } => vec![(*a, *b)],
            DomainKind::CenteredBall { sigma } => vec![(-sigma, *sigma); self.dim()],
            DomainKind::Box(iv) => iv.clone(),
            DomainKind::FullSpace => unreachable!("bounded sampler on full space"),
        }
    }

    fn phi_max_on_grid(&self, bounds: &[(f64, f64)]) -> f64 {
        // coarse scan; concavity puts the max in the interior
        let steps = 33usize;
        let mut best = f64::MIN;
        let n = bounds.len();
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = idx
                .iter()
                .zip(bounds)
                .map(|(&i, (a, b))| a + (b - a) * (i as f64 + 0.5) / steps as f64)
                .collect();
            if self.domain.contains(&x) {
                best = best.max(self.phi.eval(&x));
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best.max(f64::MIN_POSITIVE);
                }
                idx[k] += 1;
                if idx[k] < steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

// -------------------------------------------------------------- log-concave

#[derive(Debug, Clone, Copy, PartialEq)]
enum LcFamily {
    /// product density prop. to exp(-(sum |x_i|^r)/r)
    ExpPower { r: f64 },
    Generic,
}

/// Log-concave probability measure `e^{-V} dx / Z`.
#[derive(Debug, Clone)]
pub struct LogConcaveMeasure {
    v: ScalarField,
    domain: DomainSpec,
    normalizer: f64,
    normalizer_err: f64,
    family: LcFamily,
}

/// Product measure with density `c_{r,n} exp(-(|x_1|^r + ... + |x_n|^r)/r)`,
/// `r` in [1, 2]. The normalizer comes from 1-D quadrature and tensorization.
pub fn make_exp_power(n: usize, r: f64) -> Result<LogConcaveMeasure> {
    if !(1.0..=2.0).contains(&r) {
        return Err(Error::UnsupportedParameter(format!(
            "exponential power family needs r in [1, 2], got {r}"
        )));
    }
    let spec = QuadratureSpec::default();
    let z1 = integrate_1d(
        |x: f64| (-(x.abs().powf(r)) / r).exp(),
        Domain1D::RealLine,
        &spec,
        &[0.0],
    )?;
    let z = z1.value.powi(n as i32);
    Ok(LogConcaveMeasure {
        v: ScalarField::exp_power_potential(n, r, 0.0),
        domain: DomainSpec::full_space(n),
        normalizer: z,
        normalizer_err: n as f64 * z1.value.powi(n as i32 - 1) * z1.error_bound,
        family: LcFamily::ExpPower { r },
    })
}

impl LogConcaveMeasure {
    /// Generic `e^{-V} dx` measure on full space; normalizer by quadrature.
    pub fn from_potential(v: ScalarField, spec: &QuadratureSpec) -> Result<Self> {
        let n = v.dim();
        let mut m = LogConcaveMeasure {
            v,
            domain: DomainSpec::full_space(n),
            normalizer: 1.0,
            normalizer_err: 0.0,
            family: LcFamily::Generic,
        };
        let est = m.expectation_raw(&|_: &[f64]| 1.0, spec)?;
        m.normalizer = est.value;
        m.normalizer_err = est.error_bound;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn potential(&self) -> &ScalarField {
        &self.v
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        (-self.v.eval(x)).exp() / self.normalizer
    }

    fn expectation_raw<H>(&self, h: &H, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        let v = self.v.clone();
        let integrand = move |x: &[f64]| {
            let val = h(x) * (-v.eval(x)).exp();
            if val.is_finite() {
                val
            } else {
                0.0
            }
        };
        let breakpoints: Vec<f64> = if self.dim() == 1 {
            self.v.kinks().iter().map(|k| k.at).collect()
        } else {
            Vec::new()
        };
        match self.dim() {
            1 => integrate_1d(|x| integrand(&[x]), Domain1D::RealLine, spec, &breakpoints),
            n if n <= 3 && spec.nd_strategy == NdStrategy::Tensor => {
                integrate_nd(integrand, &DomainNd::FullSpace(n), spec)
            }
            n if n <= 10 => {
                let sampler = self.sampler_fn()?;
                let dens = {
                    let me = self.clone();
                    move |x: &[f64]| me.density(x)
                };
                integrate_mc(integrand, sampler, dens, spec.mc_samples, spec.seed)
            }
            n => Err(Error::UnsupportedDimension {
                dim: n,
                strategy: "monte-carlo",
            }),
        }
    }

    pub fn expectation<H>(&self, h: H, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        let mut est = self.expectation_raw(&h, spec)?;
        est.value /= self.normalizer;
        est.error_bound = est.error_bound / self.normalizer
            + est.value.abs() * self.normalizer_err / self.normalizer;
        Ok(est)
    }

    fn sampler_fn(&self) -> Result<impl Fn(&mut ChaCha8Rng) -> Vec<f64> + '_> {
        match self.family {
            LcFamily::ExpPower { r } => {
                let n = self.dim();
                let gamma = GammaDist::new(1.0 / r, 1.0)
                    .map_err(|e| Error::UnsupportedParameter(e.to_string()))?;
                Ok(move |rng: &mut ChaCha8Rng| {
                    (0..n)
                        .map(|_| {
                            let g: f64 = gamma.sample(rng);
                            let mag = (r * g).powf(1.0 / r);
                            if rng.gen::<bool>() {
                                mag
                            } else {
                                -mag
                            }
                        })
                        .collect()
                })
            }
            LcFamily::Generic => Err(Error::UnsupportedParameter(
                "no exact sampler for generic log-concave potentials".into(),
            )),
        }
    }

    /// Seeded exact sampler (product exponential-power families only).
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let f = self.sampler_fn()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count).map(|_| f(&mut rng)).collect())
    }

    /// Monte Carlo expectation using the measure's own sampler; the error
    /// bound is one standard error of the sample mean.
    pub fn expectation_mc<H>(&self, h: H, samples: usize, seed: u64) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        let f = self.sampler_fn()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..samples {
            let x = f(&mut rng);
            let v = h(&x);
            sum += v;
            sumsq += v * v;
        }
        let nf = samples as f64;
        let mean = sum / nf;
        let var = ((sumsq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        Ok(IntegralEstimate {
            value: mean,
            error_bound: (var / nf).sqrt(),
            method: Method::MonteCarlo,
            node_count: samples,
        })
    }
}

// ---------------------------------------------------------------- chi family

/// The chi distribution on `[0, inf)`:
/// density `(2^{1-n/2} / Gamma(n/2)) r^{n-1} e^{-r^2/2}`.
#[derive(Debug, Clone)]
pub struct ChiMeasure {
    pub n: usize,
    normalizer: f64,
}

pub fn make_chi(n: usize) -> Result<ChiMeasure> {
    if n == 0 {
        return Err(Error::UnsupportedParameter("chi family needs n >= 1".into()));
    }
    let nf = n as f64;
    // Z = Gamma(n/2) 2^{n/2 - 1}
    let z = (ln_gamma(nf / 2.0) + (nf / 2.0 - 1.0) * std::f64::consts::LN_2).exp();
    Ok(ChiMeasure { n, normalizer: z })
}

impl ChiMeasure {
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        x.powi(self.n as i32 - 1) * (-0.5 * x * x).exp() / self.normalizer
    }

    pub fn expectation<H>(&self, h: H, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        H: Fn(f64) -> f64,
    {
        let mut est = integrate_1d(
            |x| {
                let v = h(x) * x.powi(self.n as i32 - 1) * (-0.5 * x * x).exp();
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            Domain1D::HalfLine { from: 0.0 },
            spec,
            &[],
        )?;
        est.value /= self.normalizer;
        est.error_bound /= self.normalizer;
        Ok(est)
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        let gamma = GammaDist::new(self.n as f64 / 2.0, 1.0)
            .map_err(|e| Error::UnsupportedParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..count)
            .map(|_| {
                let g: f64 = gamma.sample(&mut rng);
                (2.0 * g).sqrt()
            })
            .collect())
    }
}

// ------------------------------------------------------------ measure enum

/// Any measure the catalogue can integrate against.
#[derive(Debug, Clone)]
pub enum Measure {
    Weighted(WeightedMeasure),
    LogConcave(LogConcaveMeasure),
    Chi(ChiMeasure),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Weighted(m) => m.dim(),
            Measure::LogConcave(m) => m.dim(),
            Measure::Chi(_) => 1,
        }
    }

    pub fn expectation<H>(&self, h: H, spec: &QuadratureSpec) -> Result<IntegralEstimate>
    where
        H: Fn(&[f64]) -> f64,
    {
        match self {
            Measure::Weighted(m) => m.expectation(h, spec),
            Measure::LogConcave(m) => m.expectation(h, spec),
            Measure::Chi(m) => m.expectation(|x| h(&[x]), spec),
        }
    }
}

/// Variance of a field against a measure:
/// `Var = E[f^2] - E[f]^2`, errors combined first-order.
pub fn variance(measure: &Measure, f: &ScalarField, spec: &QuadratureSpec) -> Result<IntegralEstimate> {
    if let Measure::Weighted(m) = measure {
        if matches!(m.domain().kind, DomainKind::FullSpace) {
            check_square_integrable(m, f)?;
        }
    }
    let second = measure.expectation(|x| f.eval(x) * f.eval(x), spec)?;
    let first = measure.expectation(|x| f.eval(x), spec)?;
    let value = second.value - first.value * first.value;
    let err = second.error_bound + 2.0 * first.value.abs() * first.error_bound;
    Ok(IntegralEstimate {
        value,
        error_bound: err,
        method: second.method,
        node_count: second.node_count + first.node_count,
    })
}

/// Tail-decay heuristic: along each coordinate ray, `(1 + f^2) phi^{exp+shift}`
/// must decay faster than `|x|^{-1}`, else the integral of `f^2 phi^{shift}`
/// against the measure is declared non-integrable. Only full-space domains
/// have tails to check.
pub fn check_tail_decay(m: &WeightedMeasure, shift: f64, f: &ScalarField) -> Result<()> {
    if m.domain().is_bounded() {
        return Ok(());
    }
    let n = m.dim();
    let net = m.exponent() + shift;
    let (r1, r2) = (1e3, 1e6);
    for axis in 0..n {
        for sign in [-1.0, 1.0] {
            let probe = |r: f64| {
                let mut x = vec![0.0; n];
                x[axis] = sign * r;
                let fv = f.eval(&x);
                (1.0 + fv * fv) * m.phi.eval(&x).powf(net)
            };
            let (s1, s2) = (probe(r1), probe(r2));
            if s2 == 0.0 {
                continue; // compactly supported or rapidly decaying
            }
            let slope = (s2 / s1).ln() / (r2 / r1).ln();
            if !(slope < TAIL_SLOPE_LIMIT) {
                return Err(Error::NonIntegrable(format!(
                    "f^2 phi^{shift} dmu tail decays like |x|^{slope:.2} along axis {axis}"
                )));
            }
        }
    }
    Ok(())
}

fn check_square_integrable(m: &WeightedMeasure, f: &ScalarField) -> Result<()> {
    check_tail_decay(m, 0.0, f)
}

// ------------------------------------------------------- student machinery

fn sample_student(n: usize, nu: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let chi2 = GammaDist::new(nu / 2.0, 2.0).expect("nu > 0");
    let w: f64 = chi2.sample(rng);
    let scale = (nu / w).sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn student_log_normalizer(n: usize, nu: f64) -> f64 {
    let nf = n as f64;
    ln_gamma((nu + nf) / 2.0) - ln_gamma(nu / 2.0) - (nf / 2.0) * (nu * std::f64::consts::PI).ln()
}
