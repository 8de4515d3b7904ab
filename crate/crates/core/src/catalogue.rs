//! The inequality catalogue: every registered inequality as a named
//! scenario with computable left/right sides, parameter guards, equality
//! witnesses and a uniform report format.
//!
//! Compound entries (two-sided chains, paired weighted/reverse forms)
//! evaluate every sub-inequality and report the one with the smallest
//! margin as the headline; the parts land in `meta`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::linalg::{dot, hess_inv_quadform, rank_one_inv_quadform};
use crate::measures::{
    case1_guard, case2_guard, make_chi, variance, DomainKind, DomainSpec, Measure, MeasureKind,
    ParamTriple, WeightedMeasure,
};
use crate::quad::{integrate_1d, integrate_nd, Domain1D, DomainNd, IntegralEstimate, QuadratureSpec};

/// Status slack multiplier: equality cases must report inconclusive or
/// holds, never violated, under quadrature noise.
const SLACK_FACTOR: f64 = 10.0;

/// Registry tags, one per verified inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum EqTag {
    Thm1,
    Thm2,
    BlDim1,
    BlDim2,
    BlClassic,
    RevHolder1,
    Psi3pt,
    RevHolder2,
    Psibar3pt,
    Cor6,
    Thm8,
    RevWeighted1,
    Thm9,
    RevWeighted2,
    Prop10,
    Prop11,
    Thm12,
    Cor14,
    Thm15,
    Cor16,
    ChiN,
}

impl EqTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EqTag::Thm1 => "thm1",
            EqTag::Thm2 => "thm2",
            EqTag::BlDim1 => "bl-dim-1",
            EqTag::BlDim2 => "bl-dim-2",
            EqTag::BlClassic => "bl-classic",
            EqTag::RevHolder1 => "rev-holder-1",
            EqTag::Psi3pt => "psi-3pt",
            EqTag::RevHolder2 => "rev-holder-2",
            EqTag::Psibar3pt => "psibar-3pt",
            EqTag::Cor6 => "cor6",
            EqTag::Thm8 => "thm8",
            EqTag::RevWeighted1 => "rev-weighted-1",
            EqTag::Thm9 => "thm9",
            EqTag::RevWeighted2 => "rev-weighted-2",
            EqTag::Prop10 => "prop10",
            EqTag::Prop11 => "prop11",
            EqTag::Thm12 => "thm12",
            EqTag::Cor14 => "cor14",
            EqTag::Thm15 => "thm15",
            EqTag::Cor16 => "cor16",
            EqTag::ChiN => "chi-n",
        }
    }

    pub fn parse(s: &str) -> Option<EqTag> {
        [
            EqTag::Thm1,
            EqTag::Thm2,
            EqTag::BlDim1,
            EqTag::BlDim2,
            EqTag::BlClassic,
            EqTag::RevHolder1,
            EqTag::Psi3pt,
            EqTag::RevHolder2,
            EqTag::Psibar3pt,
            EqTag::Cor6,
            EqTag::Thm8,
            EqTag::RevWeighted1,
            EqTag::Thm9,
            EqTag::RevWeighted2,
            EqTag::Prop10,
            EqTag::Prop11,
            EqTag::Thm12,
            EqTag::Cor14,
            EqTag::Thm15,
            EqTag::Cor16,
            EqTag::ChiN,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    Inconclusive,
}

/// Outcome of one scenario: sides, margin, combined quadrature error and a
/// slack-aware status.
#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub equation_tag: &'static str,
    pub params: ParamTriple,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub err: f64,
    pub status: Status,
    pub meta: BTreeMap<String, String>,
}

fn status_from(margin: f64, err: f64) -> Status {
    let band = err + SLACK_FACTOR * err;
    if margin < -band {
        Status::Violated
    } else if margin.abs() <= band {
        Status::Inconclusive
    } else {
        Status::Holds
    }
}

fn report(
    id: &str,
    tag: EqTag,
    params: ParamTriple,
    lhs: f64,
    rhs: f64,
    err: f64,
    meta: BTreeMap<String, String>,
) -> InequalityReport {
    let margin = rhs - lhs;
    InequalityReport {
        id: id.to_string(),
        equation_tag: tag.as_str(),
        params,
        lhs,
        rhs,
        margin,
        err,
        status: status_from(margin, err),
        meta,
    }
}

/// One verifiable scenario: measure, parameters, test function and tag.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub tag: EqTag,
    pub measure: Measure,
    pub params: ParamTriple,
    pub f: ScalarField,
    /// uniform convexity constant of the potential, where the tag needs one
    pub convexity: Option<f64>,
    pub quad: QuadratureSpec,
}

impl Scenario {
    pub fn new(id: &str, tag: EqTag, measure: Measure, params: ParamTriple, f: ScalarField) -> Self {
        Scenario {
            id: id.to_string(),
            tag,
            measure,
            params,
            f,
            convexity: None,
            quad: QuadratureSpec::default(),
        }
    }

    pub fn with_convexity(mut self, c: f64) -> Self {
        self.convexity = Some(c);
        self
    }

    pub fn with_quad(mut self, q: QuadratureSpec) -> Self {
        self.quad = q;
        self
    }
}

// ------------------------------------------------------------ error capture

/// Captures the first evaluation error raised inside a quadrature closure.
struct ErrCell(RefCell<Option<Error>>);

impl ErrCell {
    fn new() -> Self {
        ErrCell(RefCell::new(None))
    }

    fn guard(&self, r: Result<f64>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.0.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                0.0
            }
        }
    }

    fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

// ------------------------------------------------------- integrand builders

/// `<(sign * D^2 phi)^{-1} grad g, grad g>` at a point.
fn quadform_at(phi: &ScalarField, g: &ScalarField, sign: f64, x: &[f64]) -> Result<f64> {
    let mut h = phi.eval_hess(x, None)?;
    if sign < 0.0 {
        let n = h.dim();
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = -h[(i, j)];
            }
        }
    }
    let grad = g.eval_grad(x, None)?;
    hess_inv_quadform(&h, &grad)
}

fn expect_weighted(m: &Measure) -> Result<&WeightedMeasure> {
    match m {
        Measure::Weighted(wm) => Ok(wm),
        _ => Err(Error::InvalidParameters(
            "this scenario needs a weighted (case 1 / case 2) measure".into(),
        )),
    }
}

/// Unnormalized `integral of phi^s dx` over the domain, with Case-2
/// boundary exponents handled by the measure's own machinery when needed.
pub fn phi_power_integral(
    phi: &ScalarField,
    domain: &DomainSpec,
    s: f64,
    quad: &QuadratureSpec,
) -> Result<IntegralEstimate> {
    let breakpoints: Vec<f64> = if domain.dim == 1 {
        phi.kinks().iter().map(|k| k.at).collect()
    } else {
        Vec::new()
    };
    let integrand = |x: &[f64]| {
        let p = phi.eval(x);
        if p <= 0.0 {
            0.0
        } else {
            let v = p.powf(s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        }
    };
    // a negative power needs care only where phi vanishes at a finite
    // boundary; heavy-tail integrability on full space is the quadrature's
    // problem and shows up as non-convergence
    let hint_for = |vanishes: bool| -> Result<Option<f64>> {
        if !vanishes || s >= 0.0 {
            return Ok(None);
        }
        if s <= -1.0 {
            return Err(Error::NonIntegrable(format!(
                "phi^{s} is not integrable against a vanishing boundary"
            )));
        }
        Ok(Some(s))
    };
    match (&domain.kind, domain.dim) {
        (DomainKind::FullSpace, 1) => {
            integrate_1d(|x| integrand(&[x]), Domain1D::RealLine, quad, &breakpoints)
        }
        (DomainKind::FullSpace, n) if n <= 3 => {
            integrate_nd(integrand, &DomainNd::FullSpace(n), quad)
        }
        (DomainKind::Interval { a, b }, _) => {
            let alpha_left = hint_for(phi.eval(&[*a]).abs() < 1e-12)?;
            let alpha_right = hint_for(phi.eval(&[*b]).abs() < 1e-12)?;
            integrate_1d(
                |x| integrand(&[x]),
                Domain1D::Interval {
                    a: *a,
                    b: *b,
                    alpha_left,
                    alpha_right,
                },
                quad,
                &breakpoints,
            )
        }
        (DomainKind::CenteredBall { sigma }, n) if n <= 3 => {
            let mut probe = vec![0.0; n];
            probe[0] = *sigma;
            let boundary_alpha = hint_for(phi.eval(&probe).abs() < 1e-12)?;
            integrate_nd(
                integrand,
                &DomainNd::Ball {
                    dim: n,
                    radius: *sigma,
                    boundary_alpha,
                },
                quad,
            )
        }
        (DomainKind::Box(iv), n) if n <= 3 => integrate_nd(integrand, &DomainNd::Box(iv.clone()), quad),
        (_, n) => Err(Error::UnsupportedDimension {
            dim: n,
            strategy: "tensor",
        }),
    }
}

// ----------------------------------------------------------------- verify

/// Evaluates the scenario's inequality per the registry and reports
/// lhs, rhs, margin and status.
pub fn verify(sc: &Scenario) -> Result<InequalityReport> {
    match sc.tag {
        EqTag::Thm1 => verify_main(sc, MeasureKind::Case1),
        EqTag::Thm2 => verify_main(sc, MeasureKind::Case2),
        EqTag::BlDim1 => verify_bl_dim1(sc),
        EqTag::BlDim2 => verify_bl_dim2(sc),
        EqTag::BlClassic => verify_bl_classic(sc),
        EqTag::RevHolder1 => verify_rev_holder(sc, MeasureKind::Case1),
        EqTag::RevHolder2 => verify_rev_holder(sc, MeasureKind::Case2),
        EqTag::Psi3pt => verify_psi_3pt(sc, MeasureKind::Case1),
        EqTag::Psibar3pt => verify_psi_3pt(sc, MeasureKind::Case2),
        EqTag::Cor6 => verify_cor6(sc),
        EqTag::Thm8 => verify_thm8(sc),
        EqTag::RevWeighted1 => verify_rev_weighted(sc, MeasureKind::Case1),
        EqTag::Thm9 => verify_thm9(sc),
        EqTag::RevWeighted2 => verify_rev_weighted(sc, MeasureKind::Case2),
        EqTag::Prop10 => verify_prop10(sc),
        EqTag::Prop11 => verify_prop11(sc),
        EqTag::Thm12 => verify_uniform_poincare(sc, MeasureKind::Case1),
        EqTag::Thm15 => verify_uniform_poincare(sc, MeasureKind::Case2),
        EqTag::Cor14 => verify_cor14(sc),
        EqTag::Cor16 => verify_cor16(sc),
        EqTag::ChiN => verify_chi_chain(sc),
    }
}

/// Theorems 1 and 2: `(beta -+ 2r +- 1) Var(f) <= int <(+-D^2 phi)^{-1}
/// grad g, grad g> phi^{2r-1} dmu + (1-r)^2/(A or B) (int f dmu)^2`.
fn verify_main(sc: &Scenario, kind: MeasureKind) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    if wm.kind != kind {
        return Err(Error::InvalidParameters(
            "measure case does not match the theorem".into(),
        ));
    }
    let (beta, r) = (sc.params.beta, sc.params.r);
    let (valid, constant, sign, factor) = match kind {
        MeasureKind::Case1 => {
            let (ok, a) = case1_guard(&sc.params);
            (ok, a, 1.0, beta - 2.0 * r + 1.0)
        }
        MeasureKind::Case2 => {
            let (ok, b) = case2_guard(&sc.params);
            (ok, b, -1.0, beta + 2.0 * r - 1.0)
        }
    };
    if !valid {
        return Err(Error::InvalidParameters(format!(
            "(n={}, beta={beta}, r={r}) fails the guard",
            sc.params.n
        )));
    }
    let constant = constant.expect("guard returned the constant");

    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let g = ScalarField::product(&sc.f, &ScalarField::powf(wm.phi(), 1.0 - r));
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let gc = g.clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &gc, sign, x)),
        2.0 * r - 1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let mean = wm.expectation(|x| sc.f.eval(x), &sc.quad)?;

    let lhs = factor * var.value;
    let mean_term = (1.0 - r) * (1.0 - r) / constant * mean.value * mean.value;
    let rhs = dirichlet.value + mean_term;
    let err = factor.abs() * var.error_bound
        + dirichlet.error_bound
        + (1.0 - r) * (1.0 - r) / constant * 2.0 * mean.value.abs() * mean.error_bound;
    let mut meta = BTreeMap::new();
    meta.insert("sharp_constant".into(), format!("{constant}"));
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, meta))
}

/// Eq. (1.10): `(beta+1) Var <= int <(D^2 phi)^{-1} grad g, grad g>/phi dmu
/// + n/(beta-n) (int f)^2` with g = phi f; must coincide with thm1 at r=0.
fn verify_bl_dim1(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    if !(beta > n) {
        return Err(Error::InvalidParameters(format!("needs beta > n, got {beta}")));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let g = ScalarField::product(&sc.f, wm.phi());
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &g, 1.0, x)),
        -1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let mean = wm.expectation(|x| sc.f.eval(x), &sc.quad)?;
    let lhs = (beta + 1.0) * var.value;
    let rhs = dirichlet.value + n / (beta - n) * mean.value * mean.value;
    let err = (beta + 1.0) * var.error_bound
        + dirichlet.error_bound
        + n / (beta - n) * 2.0 * mean.value.abs() * mean.error_bound;
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, BTreeMap::new()))
}

/// Eq. (1.12): `(beta-1) Var <= int <(-D^2 phi)^{-1} grad g, grad g>/phi dnu
/// + n/(n+beta) (int f)^2` with g = f phi.
fn verify_bl_dim2(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameters(format!("needs beta >= 0, got {beta}")));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let g = ScalarField::product(&sc.f, wm.phi());
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &g, -1.0, x)),
        -1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let mean = wm.expectation(|x| sc.f.eval(x), &sc.quad)?;
    let lhs = (beta - 1.0) * var.value;
    let rhs = dirichlet.value + n / (n + beta) * mean.value * mean.value;
    let err = (beta - 1.0).abs() * var.error_bound
        + dirichlet.error_bound
        + n / (n + beta) * 2.0 * mean.value.abs() * mean.error_bound;
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, BTreeMap::new()))
}

/// Eq. (1.9): `Var(f) <= int <(D^2 V)^{-1} grad f, grad f> dmu` for
/// log-concave e^{-V}.
fn verify_bl_classic(sc: &Scenario) -> Result<InequalityReport> {
    let lc = match &sc.measure {
        Measure::LogConcave(lc) => lc,
        _ => {
            return Err(Error::InvalidParameters(
                "bl-classic needs a log-concave measure".into(),
            ))
        }
    };
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let cell = ErrCell::new();
    let v = lc.potential().clone();
    let f = sc.f.clone();
    let rhs = lc.expectation(
        |x: &[f64]| cell.guard(quadform_at(&v, &f, 1.0, x)),
        &sc.quad,
    )?;
    cell.check()?;
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs.value,
        var.error_bound + rhs.error_bound,
        BTreeMap::new(),
    ))
}

/// Propositions 5 and 7: the reverse Holder products of unnormalized
/// integrals of phi powers.
fn verify_rev_holder(sc: &Scenario, kind: MeasureKind) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (beta, r) = (sc.params.beta, sc.params.r);
    let (s0, s1, s2, coeff) = match kind {
        MeasureKind::Case1 => {
            let (ok, a) = case1_guard(&sc.params);
            if !ok {
                return Err(Error::InvalidParameters("case-1 guard failed".into()));
            }
            (
                -beta,
                -beta - 2.0 * (1.0 - r),
                -beta - 1.0 + r,
                1.0 + (1.0 - r) * (1.0 - r) / ((beta - 2.0 * r + 1.0) * a.unwrap()),
            )
        }
        MeasureKind::Case2 => {
            let (ok, b) = case2_guard(&sc.params);
            if !ok || !(beta > 1.0 - 2.0 * r) {
                return Err(Error::InvalidParameters(
                    "case-2 guard (or beta > 1-2r) failed".into(),
                ));
            }
            (
                beta,
                beta + 2.0 * r - 2.0,
                beta + r - 1.0,
                1.0 + (1.0 - r) * (1.0 - r) / ((beta + 2.0 * r - 1.0) * b.unwrap()),
            )
        }
    };
    let i0 = phi_power_integral(wm.phi(), wm.domain(), s0, &sc.quad)?;
    let i1 = phi_power_integral(wm.phi(), wm.domain(), s1, &sc.quad)?;
    let i2 = phi_power_integral(wm.phi(), wm.domain(), s2, &sc.quad)?;
    let lhs = i0.value * i1.value;
    let rhs = coeff * i2.value * i2.value;
    let err = i0.error_bound * i1.value.abs()
        + i1.error_bound * i0.value.abs()
        + coeff * 2.0 * i2.value.abs() * i2.error_bound;
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, BTreeMap::new()))
}

/// Three-point concavity of `Psi` (Case 1) and `Psi-bar` (Case 2):
/// `Psi(beta) + Psi(beta+2) <= 2 Psi(beta+1)`.
fn verify_psi_3pt(sc: &Scenario, kind: MeasureKind) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n, sc.params.beta);
    let psi = |b: f64| -> Result<(f64, f64)> {
        let (s, prefactor) = match kind {
            MeasureKind::Case1 => {
                if !(b > n as f64) {
                    return Err(Error::Range(format!("Psi needs beta > n, got {b}")));
                }
                let prod: f64 = (1..=n).map(|i| b - i as f64).product();
                (-b, prod)
            }
            MeasureKind::Case2 => {
                if !(b > -1.0) {
                    return Err(Error::Range(format!("Psi-bar needs beta > -1, got {b}")));
                }
                let prod: f64 = (1..=n).map(|i| b + i as f64).product();
                (b, prod)
            }
        };
        let est = phi_power_integral(wm.phi(), wm.domain(), s, &sc.quad)?;
        if est.value <= 0.0 {
            return Err(Error::NonIntegrable("vanishing phi-power integral".into()));
        }
        Ok(((prefactor * est.value).ln(), est.error_bound / est.value))
    };
    let (p0, e0) = psi(beta)?;
    let (p1, e1) = psi(beta + 1.0)?;
    let (p2, e2) = psi(beta + 2.0)?;
    let lhs = p0 + p2;
    let rhs = 2.0 * p1;
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        lhs,
        rhs,
        e0 + 2.0 * e1 + e2,
        BTreeMap::new(),
    ))
}

/// Corollary 6: `Var_mu(V) <= n` for a log-concave probability e^{-V}.
fn verify_cor6(sc: &Scenario) -> Result<InequalityReport> {
    let lc = match &sc.measure {
        Measure::LogConcave(lc) => lc,
        _ => {
            return Err(Error::InvalidParameters(
                "cor6 needs a log-concave measure".into(),
            ))
        }
    };
    let v = lc.potential().clone();
    let var = variance(&sc.measure, &v, &sc.quad)?;
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        sc.params.n as f64,
        var.error_bound,
        BTreeMap::new(),
    ))
}

/// Theorem 8: `Var(f) <= 1/(beta-1) int <(D^2 phi)^{-1} grad f, grad f>
/// phi dmu` for beta >= n+1.
fn verify_thm8(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    if !(beta >= n + 1.0) {
        return Err(Error::InvalidParameters(format!(
            "thm8 needs beta >= n+1, got {beta}"
        )));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let f = sc.f.clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &f, 1.0, x)),
        1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let rhs = dirichlet.value / (beta - 1.0);
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs,
        var.error_bound + dirichlet.error_bound / (beta - 1.0),
        BTreeMap::new(),
    ))
}

/// Eqs. (4.2)/(4.4): `inf_c int |f-c|^2/phi dmu <= 1/beta int
/// <(+-D^2 phi)^{-1} grad f, grad f> dmu`, the infimum attained at the
/// phi^{-1}-weighted mean.
fn verify_rev_weighted(sc: &Scenario, kind: MeasureKind) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    let sign = match kind {
        MeasureKind::Case1 => {
            if !(beta >= n) {
                return Err(Error::InvalidParameters(format!(
                    "(4.2) needs beta >= n, got {beta}"
                )));
            }
            1.0
        }
        MeasureKind::Case2 => {
            if !(beta > 0.0) {
                return Err(Error::InvalidParameters(format!(
                    "(4.4) needs beta > 0, got {beta}"
                )));
            }
            -1.0
        }
    };
    crate::measures::check_tail_decay(wm, -1.0, &sc.f)?;
    // c* from the first-order condition of the quadratic in c
    let num = wm.expectation_phi_shift(|x| sc.f.eval(x), -1.0, &sc.quad)?;
    let den = wm.expectation_phi_shift(|_| 1.0, -1.0, &sc.quad)?;
    let c_star = num.value / den.value;
    let second = wm.expectation_phi_shift(
        |x| {
            let d = sc.f.eval(x) - c_star;
            d * d
        },
        -1.0,
        &sc.quad,
    )?;
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let f = sc.f.clone();
    let dirichlet = wm.expectation(
        |x: &[f64]| cell.guard(quadform_at(&phi, &f, sign, x)),
        &sc.quad,
    )?;
    cell.check()?;
    let lhs = second.value;
    let rhs = dirichlet.value / beta;
    let mut meta = BTreeMap::new();
    meta.insert("c_star".into(), format!("{c_star}"));
    if kind == MeasureKind::Case1 && beta < n + 1.0 {
        meta.insert("paper_asserted_only".into(), "true".into());
    }
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        lhs,
        rhs,
        second.error_bound + dirichlet.error_bound / beta,
        meta,
    ))
}

/// Theorem 9: `Var(f) <= 1/(beta+1) int <(-D^2 phi)^{-1} grad f, grad f>
/// phi dnu` for beta > -1.
fn verify_thm9(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let beta = sc.params.beta;
    if !(beta > -1.0) {
        return Err(Error::InvalidParameters(format!(
            "thm9 needs beta > -1, got {beta}"
        )));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let f = sc.f.clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &f, -1.0, x)),
        1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let rhs = dirichlet.value / (beta + 1.0);
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs,
        var.error_bound + dirichlet.error_bound / (beta + 1.0),
        BTreeMap::new(),
    ))
}

/// Proposition 10: `Var(f) <= beta/(beta-1) int <W^{-1} grad f, grad f> dmu`
/// with `W = D^2 V + (1/beta) grad V x grad V`, via the rank-one identity.
fn verify_prop10(sc: &Scenario) -> Result<InequalityReport> {
    let lc = match &sc.measure {
        Measure::LogConcave(lc) => lc,
        _ => {
            return Err(Error::InvalidParameters(
                "prop10 needs a log-concave measure".into(),
            ))
        }
    };
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    if !(beta >= n + 1.0) {
        return Err(Error::InvalidParameters(format!(
            "prop10 needs beta >= n+1, got {beta}"
        )));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let v = lc.potential().clone();
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let weighted = lc.expectation(
        |x: &[f64]| {
            cell.guard((|| {
                let hess = v.eval_hess(x, None)?;
                let grad_v = v.eval_grad(x, None)?;
                let grad_f = f.eval_grad(x, None)?;
                let a: Vec<f64> = grad_v.iter().map(|t| t / beta.sqrt()).collect();
                rank_one_inv_quadform(&hess, &a, &grad_f)
            })())
        },
        &sc.quad,
    )?;
    cell.check()?;
    let rhs = beta / (beta - 1.0) * weighted.value;
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs,
        var.error_bound + beta / (beta - 1.0) * weighted.error_bound,
        BTreeMap::new(),
    ))
}

/// `C_r = (4/r) (2-r)^{(2-r)/r}` with the `0^0 = 1` convention at r = 2.
pub fn prop11_constant(r: f64) -> f64 {
    if (r - 2.0).abs() < 1e-15 {
        2.0
    } else {
        (4.0 / r) * (2.0 - r).powf((2.0 - r) / r)
    }
}

/// Proposition 11 two-sided chain for the exponential power family.
fn verify_prop11(sc: &Scenario) -> Result<InequalityReport> {
    let lc = match &sc.measure {
        Measure::LogConcave(lc) => lc,
        _ => {
            return Err(Error::InvalidParameters(
                "prop11 needs the exponential power measure".into(),
            ))
        }
    };
    let r = sc.params.r;
    if !(1.0..=2.0).contains(&r) {
        return Err(Error::UnsupportedParameter(format!(
            "prop11 needs r in [1,2], got {r}"
        )));
    }
    let n = lc.dim();
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    // per-coordinate weight |x|^{2-r} / (|x|^r + 2(r-1)); identically 1 at r=1
    let weight = move |t: f64| -> f64 {
        if (r - 1.0).abs() < 1e-15 {
            1.0
        } else {
            let t = t.abs();
            t.powf(2.0 - r) / (t.powf(r) + 2.0 * (r - 1.0))
        }
    };
    let cell = ErrCell::new();
    let f = sc.f.clone();
    let mid = lc.expectation(
        |x: &[f64]| {
            cell.guard((|| {
                let grad = f.eval_grad(x, None)?;
                Ok((0..n).map(|i| weight(x[i]) * grad[i] * grad[i]).sum::<f64>())
            })())
        },
        &sc.quad,
    )?;
    cell.check()?;
    let cell2 = ErrCell::new();
    let f = sc.f.clone();
    let grad_sq = lc.expectation(
        |x: &[f64]| {
            cell2.guard((|| {
                let grad = f.eval_grad(x, None)?;
                Ok(dot(&grad, &grad))
            })())
        },
        &sc.quad,
    )?;
    cell2.check()?;

    let c_r = prop11_constant(r);
    let lhs1 = var.value;
    let rhs1 = 4.0 * mid.value;
    let lhs2 = rhs1;
    let rhs2 = c_r * grad_sq.value;
    let err = var.error_bound + 4.0 * mid.error_bound + c_r * grad_sq.error_bound;
    let mut meta = BTreeMap::new();
    meta.insert("c_r".into(), format!("{c_r}"));
    meta.insert("first_margin".into(), format!("{}", rhs1 - lhs1));
    meta.insert("second_margin".into(), format!("{}", rhs2 - lhs2));
    // headline: the binding side of the chain
    let (lhs, rhs) = if rhs1 - lhs1 <= rhs2 - lhs2 {
        (lhs1, rhs1)
    } else {
        (lhs2, rhs2)
    };
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, meta))
}

/// Theorems 12 and 15: uniformly convex (or concave) potentials; checks the
/// weighted Poincare form and, where beta allows, the reverse-weighted form,
/// reporting the binding one.
fn verify_uniform_poincare(sc: &Scenario, kind: MeasureKind) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    let c = sc.convexity.ok_or(Error::InvalidParameters(
        "uniform convexity constant required".into(),
    ))?;
    let rate_den = match kind {
        MeasureKind::Case1 => {
            if !(beta >= n + 1.0) {
                return Err(Error::InvalidParameters(format!(
                    "(5.1) needs beta >= n+1, got {beta}"
                )));
            }
            c * (beta - 1.0)
        }
        MeasureKind::Case2 => {
            if !(beta > -1.0) {
                return Err(Error::InvalidParameters(format!(
                    "(5.5) needs beta > -1, got {beta}"
                )));
            }
            c * (beta + 1.0)
        }
    };
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let grad_sq_phi = wm.expectation_phi_shift(
        |x: &[f64]| {
            cell.guard((|| {
                let g = f.eval_grad(x, None)?;
                Ok(dot(&g, &g))
            })())
        },
        1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let lhs1 = var.value;
    let rhs1 = grad_sq_phi.value / rate_den;
    let err1 = var.error_bound + grad_sq_phi.error_bound / rate_den;
    let mut meta = BTreeMap::new();
    meta.insert("weighted_margin".into(), format!("{}", rhs1 - lhs1));

    // reverse-weighted companion, where the beta range allows it
    let rev_ok = match kind {
        MeasureKind::Case1 => beta >= n,
        MeasureKind::Case2 => beta > 0.0,
    };
    let rev_ok = rev_ok && crate::measures::check_tail_decay(wm, -1.0, &sc.f).is_ok();
    let (lhs, rhs, err) = if rev_ok {
        let num = wm.expectation_phi_shift(|x| sc.f.eval(x), -1.0, &sc.quad)?;
        let den = wm.expectation_phi_shift(|_| 1.0, -1.0, &sc.quad)?;
        let c_star = num.value / den.value;
        let second = wm.expectation_phi_shift(
            |x| {
                let d = sc.f.eval(x) - c_star;
                d * d
            },
            -1.0,
            &sc.quad,
        )?;
        let f = sc.f.clone();
        let cell = ErrCell::new();
        let grad_sq = wm.expectation(
            |x: &[f64]| {
                cell.guard((|| {
                    let g = f.eval_grad(x, None)?;
                    Ok(dot(&g, &g))
                })())
            },
            &sc.quad,
        )?;
        cell.check()?;
        let lhs2 = second.value;
        let rhs2 = grad_sq.value / (c * beta);
        let err2 = second.error_bound + grad_sq.error_bound / (c * beta);
        meta.insert("reverse_margin".into(), format!("{}", rhs2 - lhs2));
        if kind == MeasureKind::Case1 && beta < n + 1.0 {
            meta.insert("paper_asserted_only".into(), "true".into());
        }
        if rhs1 - lhs1 <= rhs2 - lhs2 {
            (lhs1, rhs1, err1)
        } else {
            (lhs2, rhs2, err2)
        }
    } else {
        meta.insert("reverse_skipped".into(), "beta out of range".into());
        (lhs1, rhs1, err1)
    };
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, meta))
}

/// Corollary 14: the sharp Cauchy form
/// `Var(f) <= 1/(2(beta-1)) int |grad f|^2 (1+|x|^2) dtau`.
fn verify_cor14(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let (n, beta) = (sc.params.n as f64, sc.params.beta);
    if !(beta >= n + 1.0) {
        return Err(Error::InvalidParameters(format!(
            "cor14 needs beta >= n+1, got {beta}"
        )));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let weighted = wm.expectation_phi_shift(
        |x: &[f64]| {
            cell.guard((|| {
                let g = f.eval_grad(x, None)?;
                Ok(dot(&g, &g))
            })())
        },
        1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let rhs = weighted.value / (2.0 * (beta - 1.0));
    let mut meta = BTreeMap::new();
    meta.insert("decay_rate".into(), format!("{}", 4.0 * (beta - 1.0)));
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs,
        var.error_bound + weighted.error_bound / (2.0 * (beta - 1.0)),
        meta,
    ))
}

/// Corollary 16: the sharp sphere form
/// `Var(f) <= 1/(2(beta+1)) int |grad f|^2 (sigma^2-|x|^2) dtau`.
fn verify_cor16(sc: &Scenario) -> Result<InequalityReport> {
    let wm = expect_weighted(&sc.measure)?;
    let beta = sc.params.beta;
    if !(beta > -1.0) {
        return Err(Error::InvalidParameters(format!(
            "cor16 needs beta > -1, got {beta}"
        )));
    }
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let weighted = wm.expectation_phi_shift(
        |x: &[f64]| {
            cell.guard((|| {
                let g = f.eval_grad(x, None)?;
                Ok(dot(&g, &g))
            })())
        },
        1.0,
        &sc.quad,
    )?;
    cell.check()?;
    let rhs = weighted.value / (2.0 * (beta + 1.0));
    let mut meta = BTreeMap::new();
    meta.insert("decay_rate".into(), format!("{}", 4.0 * (beta + 1.0)));
    Ok(report(
        &sc.id,
        sc.tag,
        sc.params,
        var.value,
        rhs,
        var.error_bound + weighted.error_bound / (2.0 * (beta + 1.0)),
        meta,
    ))
}

/// The chi chain: `Var(g) <= ((n+1)^2/n) int g'^2/(n+1+r^2) dchi
/// <= (n+3) int g'^2/(n+r^2) dchi`.
fn verify_chi_chain(sc: &Scenario) -> Result<InequalityReport> {
    let chi = match &sc.measure {
        Measure::Chi(c) => c.clone(),
        _ => return Err(Error::InvalidParameters("chi-n needs the chi measure".into())),
    };
    let n = chi.n as f64;
    let var = variance(&sc.measure, &sc.f, &sc.quad)?;
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let mid = chi.expectation(
        |x| {
            cell.guard((|| {
                let g = f.eval_grad(&[x], None)?;
                Ok(g[0] * g[0] / (n + 1.0 + x * x))
            })())
        },
        &sc.quad,
    )?;
    cell.check()?;
    let f = sc.f.clone();
    let cell = ErrCell::new();
    let outer = chi.expectation(
        |x| {
            cell.guard((|| {
                let g = f.eval_grad(&[x], None)?;
                Ok(g[0] * g[0] * (n + 3.0) / (n + x * x))
            })())
        },
        &sc.quad,
    )?;
    cell.check()?;
    let lhs1 = var.value;
    let rhs1 = (n + 1.0) * (n + 1.0) / n * mid.value;
    let lhs2 = rhs1;
    let rhs2 = outer.value;
    let err = var.error_bound
        + (n + 1.0) * (n + 1.0) / n * mid.error_bound
        + outer.error_bound;
    let mut meta = BTreeMap::new();
    meta.insert("first_margin".into(), format!("{}", rhs1 - lhs1));
    meta.insert("second_margin".into(), format!("{}", rhs2 - lhs2));
    let (lhs, rhs) = if rhs1 - lhs1 <= rhs2 - lhs2 {
        (lhs1, rhs1)
    } else {
        (lhs2, rhs2)
    };
    Ok(report(&sc.id, sc.tag, sc.params, lhs, rhs, err, meta))
}

// ------------------------------------------------------- optimized margins

/// Output of the translation-optimized form: the quadratic data R, S and
/// the strengthened report.
#[derive(Debug, Clone)]
pub struct OptimizedMargin {
    pub r_f: f64,
    pub s_f: f64,
    pub r_denom: f64,
    pub report: InequalityReport,
}

/// The optimized inequality: `R(f) - S(f)^2 / R(phi^{r-1})` (times
/// `(beta+2r-1)` in Case 2) against the Dirichlet side. Strengthens the
/// plain form whenever `R(phi^{r-1}) < 0`.
pub fn optimized_margin(sc: &Scenario) -> Result<OptimizedMargin> {
    let wm = expect_weighted(&sc.measure)?;
    let (beta, r) = (sc.params.beta, sc.params.r);
    let (sign, factor, constant) = match wm.kind {
        MeasureKind::Case1 => {
            let (ok, a) = case1_guard(&sc.params);
            if !ok {
                return Err(Error::InvalidParameters("case-1 guard failed".into()));
            }
            (1.0, beta - 2.0 * r + 1.0, a.unwrap())
        }
        MeasureKind::Case2 => {
            let (ok, b) = case2_guard(&sc.params);
            if !ok {
                return Err(Error::InvalidParameters("case-2 guard failed".into()));
            }
            (-1.0, beta + 2.0 * r - 1.0, b.unwrap())
        }
    };
    let coeff = 1.0 + (1.0 - r) * (1.0 - r) / (factor * constant);

    let q = &sc.quad;
    let ef = wm.expectation(|x| sc.f.eval(x), q)?;
    let ef2 = wm.expectation(|x| sc.f.eval(x) * sc.f.eval(x), q)?;
    let ew = wm.expectation_phi_shift(|_| 1.0, r - 1.0, q)?; // int phi^{r-1} dmu
    let ew2 = wm.expectation_phi_shift(|_| 1.0, 2.0 * (r - 1.0), q)?;
    let efw = wm.expectation_phi_shift(|x| sc.f.eval(x), r - 1.0, q)?;

    let r_f = ef2.value - coeff * ef.value * ef.value;
    let s_f = efw.value - coeff * ef.value * ew.value;
    let r_denom = ew2.value - coeff * ew.value * ew.value;
    let denom_err = ew2.error_bound + coeff * 2.0 * ew.value.abs() * ew.error_bound;
    if r_denom.abs() <= denom_err {
        return Err(Error::DegenerateDenominator {
            value: r_denom,
            err: denom_err,
        });
    }

    let g = ScalarField::product(&sc.f, &ScalarField::powf(wm.phi(), 1.0 - r));
    let cell = ErrCell::new();
    let phi = wm.phi().clone();
    let dirichlet = wm.expectation_phi_shift(
        |x: &[f64]| cell.guard(quadform_at(&phi, &g, sign, x)),
        2.0 * r - 1.0,
        q,
    )?;
    cell.check()?;

    let optimized = r_f - s_f * s_f / r_denom;
    let (lhs, rhs) = match wm.kind {
        MeasureKind::Case1 => (optimized, dirichlet.value / factor),
        MeasureKind::Case2 => (factor * optimized, dirichlet.value),
    };
    let err = ef2.error_bound
        + coeff * 2.0 * ef.value.abs() * ef.error_bound
        + 2.0 * (s_f / r_denom).abs()
            * (efw.error_bound + coeff * (ef.value.abs() * ew.error_bound + ew.value.abs() * ef.error_bound))
        + (s_f / r_denom).powi(2) * denom_err
        + dirichlet.error_bound / factor.abs();
    let mut meta = BTreeMap::new();
    meta.insert("plain_lhs".into(), format!("{r_f}"));
    meta.insert("optimized_lhs".into(), format!("{optimized}"));
    let rep = report(&sc.id, sc.tag, sc.params, lhs, rhs, err, meta);
    Ok(OptimizedMargin {
        r_f,
        s_f,
        r_denom,
        report: rep,
    })
}

// ---------------------------------------------------------- psi curvature

/// Second-derivative data for `psi(beta) = ln int phi^{-beta}`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PsiCurvature {
    pub psi_dd: f64,
    pub bound: f64,
    pub improved: f64,
    pub err: f64,
    /// `psi'' <= improved + err`
    pub ok_improved: bool,
    /// `improved <= bound + err` (trivially true) and `psi'' <= bound + err`
    pub ok_bound: bool,
    /// true when the W integral diverged and the improved bound degenerates
    /// to the plain one
    pub w_infinite: bool,
}

/// Central second difference of `psi` in beta with Richardson extrapolation,
/// the curvature bound `n(beta-2)/((beta-1)^2 (beta-n-1))`, and its
/// `W/(1+W)` improvement for smooth strictly convex potentials.
pub fn psi_curvature(
    phi: &ScalarField,
    domain: &DomainSpec,
    n: usize,
    beta: f64,
    dbeta_rel: f64,
    quad: &QuadratureSpec,
) -> Result<PsiCurvature> {
    let nf = n as f64;
    if !(beta > nf + 1.0) {
        return Err(Error::Range(format!(
            "psi curvature bound needs beta > n+1, got {beta}"
        )));
    }
    let psi = |b: f64| -> Result<(f64, f64)> {
        let est = phi_power_integral(phi, domain, -b, quad)?;
        if est.value <= 0.0 {
            return Err(Error::Range(format!("phi^(-{b}) integral vanished")));
        }
        Ok((est.value.ln(), est.error_bound / est.value))
    };
    let delta = dbeta_rel * beta;
    if !(beta - delta > nf) {
        return Err(Error::Range("beta step leaves the integrable range".into()));
    }
    let second_diff = |d: f64| -> Result<(f64, f64)> {
        let (p0, e0) = psi(beta)?;
        let (pm, em) = psi(beta - d)?;
        let (pp, ep) = psi(beta + d)?;
        Ok(((pp - 2.0 * p0 + pm) / (d * d), (ep + 2.0 * e0 + em) / (d * d)))
    };
    let (d1, e1) = second_diff(delta)?;
    let (d2, e2) = second_diff(delta / 2.0)?;
    let psi_dd = (4.0 * d2 - d1) / 3.0;
    let err = (4.0 * e2 + e1) / 3.0 + (d2 - d1).abs() / 3.0;

    let bound = nf * (beta - 2.0) / ((beta - 1.0) * (beta - 1.0) * (beta - nf - 1.0));

    // W(phi, beta) needs the Hessian-inverse quadform of phi itself;
    // a kinked or flat potential sends it to infinity, degenerating the
    // improvement to the plain bound.
    let cell = ErrCell::new();
    let phi2 = phi.clone();
    let w_int = {
        let integrand = |x: &[f64]| {
            cell.guard((|| {
                let p = phi2.eval(x);
                if !p.is_finite() || p <= 0.0 {
                    return Ok(0.0); // weight underflows before phi overflows
                }
                let w = p.powf(-beta);
                if w == 0.0 {
                    return Ok(0.0);
                }
                let h = phi2.eval_hess(x, None)?;
                let grad = phi2.eval_grad(x, None)?;
                let q = hess_inv_quadform(&h, &grad)?;
                Ok(q / p * w)
            })())
        };
        match &domain.kind {
            DomainKind::FullSpace if domain.dim == 1 => integrate_1d(
                |x| integrand(&[x]),
                Domain1D::RealLine,
                quad,
                &phi.kinks().iter().map(|k| k.at).collect::<Vec<_>>(),
            ),
            DomainKind::Interval { a, b } => integrate_1d(
                |x| integrand(&[x]),
                Domain1D::interval(*a, *b),
                quad,
                &phi.kinks().iter().map(|k| k.at).collect::<Vec<_>>(),
            ),
            _ => integrate_nd(integrand, &DomainNd::FullSpace(domain.dim), quad),
        }
    };
    let (improved, w_infinite) = match (w_int, cell.check()) {
        (Ok(est), Ok(())) => {
            let norm = phi_power_integral(phi, domain, -beta, quad)?;
            let w = (beta - 1.0) * (beta - nf - 1.0) / (nf * (beta - 2.0) * norm.value) * est.value;
            ((w / (1.0 + w)) * bound, false)
        }
        _ => (bound, true),
    };

    Ok(PsiCurvature {
        psi_dd,
        bound,
        improved,
        err,
        ok_improved: psi_dd <= improved + err,
        ok_bound: psi_dd <= bound + err && improved <= bound + err,
        w_infinite,
    })
}

/// Concavity report for `Phi` (Case 1) / `Phi-bar` (Case 2) on a beta grid:
/// all second differences must be nonpositive within the quadrature error.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConcavityReport {
    pub betas: Vec<f64>,
    pub second_differences: Vec<f64>,
    pub err: f64,
    pub ok: bool,
}

pub fn phi_concavity(
    phi: &ScalarField,
    domain: &DomainSpec,
    kind: MeasureKind,
    n: usize,
    betas: &[f64],
    quad: &QuadratureSpec,
) -> Result<ConcavityReport> {
    if betas.len() < 3 {
        return Err(Error::InvalidParameters(
            "concavity check needs at least three grid points".into(),
        ));
    }
    let nf = n as f64;
    let value = |b: f64| -> Result<(f64, f64)> {
        match kind {
            MeasureKind::Case1 => {
                if !(b > nf + 1.0) {
                    return Err(Error::Range(format!("Phi needs beta > n+1, got {b}")));
                }
                let est = phi_power_integral(phi, domain, -b, quad)?;
                let v = ((b - 1.0) * est.value).ln()
                    - (nf - 1.0) / nf
                        * ((b - 1.0) * (b - 1.0).ln() - (b - nf - 1.0) * (b - nf - 1.0).ln());
                Ok((v, est.error_bound / est.value))
            }
            MeasureKind::Case2 => {
                if !(b > -1.0) {
                    return Err(Error::Range(format!("Phi-bar needs beta > -1, got {b}")));
                }
                let est = phi_power_integral(phi, domain, b, quad)?;
                let v = ((b + 1.0) * est.value).ln()
                    - (nf - 1.0) / nf
                        * ((b + 1.0) * (b + 1.0).ln() - (b + nf + 1.0) * (b + nf + 1.0).ln());
                Ok((v, est.error_bound / est.value))
            }
        }
    };
    let mut vals = Vec::with_capacity(betas.len());
    let mut err = 0.0f64;
    for &b in betas {
        let (v, e) = value(b)?;
        vals.push(v);
        err = err.max(e);
    }
    let mut seconds = Vec::new();
    for w in vals.windows(3) {
        seconds.push(w[0] - 2.0 * w[1] + w[2]);
    }
    let tol = 4.0 * err + 1e-12;
    let ok = seconds.iter().all(|s| *s <= tol);
    Ok(ConcavityReport {
        betas: betas.to_vec(),
        second_differences: seconds,
        err: tol,
        ok,
    })
}

// -------------------------------------------------------- equality witness

/// The equality function `f = <grad phi, z0> phi^{r-1}` with exact
/// derivatives assembled from phi's.
pub fn witness_field(phi: &ScalarField, z0: &[f64], r: f64) -> ScalarField {
    let n = phi.dim();
    assert_eq!(z0.len(), n);
    let z: Vec<f64> = z0.to_vec();
    let p1 = phi.clone();
    let p2 = phi.clone();
    let z2 = z.clone();
    let field = ScalarField::from_fn(n, move |x| {
        let grad = p1.eval_grad(x, None).expect("witness needs smooth phi");
        dot(&grad, &z) * p1.eval(x).powf(r - 1.0)
    })
    .with_grad(move |x| {
        let val = p2.eval(x);
        let grad = p2.eval_grad(x, None).expect("witness needs smooth phi");
        let hess = p2.eval_hess(x, None).expect("witness needs smooth phi");
        let hz = hess.matvec(&z2);
        let gz = dot(&grad, &z2);
        (0..n)
            .map(|i| {
                hz[i] * val.powf(r - 1.0) + (r - 1.0) * val.powf(r - 2.0) * gz * grad[i]
            })
            .collect()
    });
    field.with_kinks(phi.kinks().to_vec())
}

/// Verifies the main theorem with the equality witness; margins are zero
/// within slack for smooth strictly convex/concave potentials.
pub fn equality_witness(
    measure: &WeightedMeasure,
    params: &ParamTriple,
    z0: &[f64],
    quad: &QuadratureSpec,
) -> Result<InequalityReport> {
    let tag = match measure.kind {
        MeasureKind::Case1 => EqTag::Thm1,
        MeasureKind::Case2 => EqTag::Thm2,
    };
    let f = witness_field(measure.phi(), z0, params.r);
    let sc = Scenario {
        id: format!("witness-{}", tag.as_str()),
        tag,
        measure: Measure::Weighted(measure.clone()),
        params: *params,
        f,
        convexity: None,
        quad: *quad,
    };
    verify(&sc)
}

// --------------------------------------------------------- local Prekopa

/// Both paths to the second derivative of the marginal at t = 0 for the
/// uniformly convexified extension `phi_eps(t, x) = phi + t g +
/// (t^2/2) <(D^2 phi)^{-1} grad g, grad g> + (eps/2)(|x|^2 + t^2)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PrekopaCheck {
    pub second_deriv_a: f64,
    pub second_deriv_b: f64,
    pub err: f64,
}

/// One-dimensional local check: path (a) evaluates the variance identity
/// for the second derivative at t = 0 by quadrature, path (b) takes a
/// Richardson-extrapolated central second difference of
/// `t -> (int phi_eps(t,.)^{-beta})^{-1/(beta-n)}`.
pub fn prekopa_local_check(
    phi: &ScalarField,
    g: &ScalarField,
    beta: f64,
    eps: f64,
    interval: (f64, f64),
    quad: &QuadratureSpec,
) -> Result<PrekopaCheck> {
    if phi.dim() != 1 || g.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            dim: phi.dim().max(g.dim()),
            strategy: "prekopa-1d",
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameters("needs eps > 0".into()));
    }
    let n = 1.0f64;
    if !(beta > n) {
        return Err(Error::InvalidParameters(format!("needs beta > n, got {beta}")));
    }
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::InvalidParameters("empty interval".into()));
    }

    // the quadratic-in-t coefficient <(D^2 phi)^{-1} grad g, grad g>(x)
    let q_of = {
        let phi = phi.clone();
        let g = g.clone();
        move |x: f64| -> Result<f64> {
            let h = phi.eval_hess(&[x], None)?;
            let grad = g.eval_grad(&[x], None)?;
            hess_inv_quadform(&h, &grad)
        }
    };

    let phi_eps = {
        let phi = phi.clone();
        let g = g.clone();
        let q_of = q_of.clone();
        move |t: f64, x: f64| -> Result<f64> {
            Ok(phi.eval(&[x])
                + t * g.eval(&[x])
                + 0.5 * t * t * q_of(x)?
                + 0.5 * eps * (x * x + t * t))
        }
    };

    // path (b): marginal through the normalizing integral
    let marginal = |t: f64| -> Result<(f64, f64)> {
        let cell = ErrCell::new();
        let pe = &phi_eps;
        let est = integrate_1d(
            |x| cell.guard(pe(t, x).map(|v| v.powf(-beta))),
            Domain1D::interval(a, b),
            quad,
            &[],
        )?;
        cell.check()?;
        let v = est.value.powf(-1.0 / (beta - n));
        let dv = (1.0 / (beta - n)) * v / est.value * est.error_bound;
        Ok((v, dv))
    };
    let second_diff = |dt: f64| -> Result<(f64, f64)> {
        let (m0, e0) = marginal(0.0)?;
        let (mm, em) = marginal(-dt)?;
        let (mp, ep) = marginal(dt)?;
        Ok((
            (mp - 2.0 * m0 + mm) / (dt * dt),
            (ep + 2.0 * e0 + em) / (dt * dt),
        ))
    };
    let dt = 0.05;
    let (d1, e1) = second_diff(dt)?;
    let (d2, e2) = second_diff(dt / 2.0)?;
    let second_b = (4.0 * d2 - d1) / 3.0;
    let err_b = (4.0 * e2 + e1) / 3.0 + (d2 - d1).abs() / 3.0;

    // path (a): the variance identity at t = 0 against mu_0 ~ phi_eps(0, .)^{-beta}
    let cell = ErrCell::new();
    let pe0 = |x: f64| phi_eps(0.0, x);
    let z0 = integrate_1d(
        |x| cell.guard(pe0(x).map(|v| v.powf(-beta))),
        Domain1D::interval(a, b),
        quad,
        &[],
    )?;
    let e_tt = integrate_1d(
        |x| {
            cell.guard((|| {
                let p = pe0(x)?;
                Ok((q_of(x)? + eps) / p * p.powf(-beta))
            })())
        },
        Domain1D::interval(a, b),
        quad,
        &[],
    )?;
    let e_t = integrate_1d(
        |x| {
            cell.guard((|| {
                let p = pe0(x)?;
                Ok(g.eval(&[x]) / p * p.powf(-beta))
            })())
        },
        Domain1D::interval(a, b),
        quad,
        &[],
    )?;
    let e_t2 = integrate_1d(
        |x| {
            cell.guard((|| {
                let p = pe0(x)?;
                let ratio = g.eval(&[x]) / p;
                Ok(ratio * ratio * p.powf(-beta))
            })())
        },
        Domain1D::interval(a, b),
        quad,
        &[],
    )?;
    cell.check()?;
    let m_tt = e_tt.value / z0.value;
    let m_t = e_t.value / z0.value;
    let m_t2 = e_t2.value / z0.value;
    let var_t = m_t2 - m_t * m_t;
    let bracket = m_tt + n / (beta - n) * m_t * m_t - (beta + 1.0) * var_t;
    let phi_at_0 = z0.value.powf(-1.0 / (beta - n));
    let second_a = phi_at_0 * beta / (beta - n) * bracket;
    let err_a = {
        let rel = |est: &IntegralEstimate| est.error_bound / z0.value;
        phi_at_0 * beta / (beta - n)
            * (rel(&e_tt)
                + n / (beta - n) * 2.0 * m_t.abs() * rel(&e_t)
                + (beta + 1.0) * (rel(&e_t2) + 2.0 * m_t.abs() * rel(&e_t))
                + bracket.abs() * z0.error_bound / z0.value)
    };

    Ok(PrekopaCheck {
        second_deriv_a: second_a,
        second_deriv_b: second_b,
        err: err_a + err_b,
    })
}

// --------------------------------------------------------- BL limit sweep

/// One row of the beta sweep toward the classical inequality.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BlLimitRow {
    pub beta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub err: f64,
}

/// Margins of the weighted inequality for `phi_beta = 1 + V/beta` along a
/// beta grid, plus the classical margin they approach.
pub fn bl_limit_sweep(
    v: &ScalarField,
    f: &ScalarField,
    betas: &[f64],
    quad: &QuadratureSpec,
) -> Result<(Vec<BlLimitRow>, BlLimitRow)> {
    if v.dim() != 1 {
        return Err(Error::UnsupportedDimension {
            dim: v.dim(),
            strategy: "bl-limit-1d",
        });
    }
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        if !(beta > 0.5) {
            return Err(Error::Range(format!("sweep needs beta > 1/2, got {beta}")));
        }
        // phi = 1 + V/beta must stay positive
        let weight = {
            let v = v.clone();
            move |x: f64| -> Result<f64> {
                let p = 1.0 + v.eval(&[x]) / beta;
                if p <= 0.0 {
                    return Err(Error::Range(format!("1 + V/beta <= 0 at x = {x}")));
                }
                Ok(p.powf(-beta))
            }
        };
        let cell = ErrCell::new();
        let z = integrate_1d(
            |x| cell.guard(weight(x)),
            Domain1D::RealLine,
            quad,
            &[],
        )?;
        let ef = integrate_1d(
            |x| cell.guard(weight(x).map(|w| w * f.eval(&[x]))),
            Domain1D::RealLine,
            quad,
            &[],
        )?;
        let ef2 = integrate_1d(
            |x| {
                cell.guard(weight(x).map(|w| {
                    let fv = f.eval(&[x]);
                    w * fv * fv
                }))
            },
            Domain1D::RealLine,
            quad,
            &[],
        )?;
        let dirichlet = integrate_1d(
            |x| {
                cell.guard((|| {
                    let w = weight(x)?;
                    let hv = v.eval_hess(&[x], None)?;
                    let gf = f.eval_grad(&[x], None)?;
                    let q = hess_inv_quadform(&hv, &gf)?;
                    Ok(w * q * (1.0 + v.eval(&[x]) / beta))
                })())
            },
            Domain1D::RealLine,
            quad,
            &[],
        )?;
        cell.check()?;
        let mean = ef.value / z.value;
        let lhs = ef2.value / z.value - mean * mean;
        let rhs = beta / (beta - 1.0) * dirichlet.value / z.value;
        let err = (ef2.error_bound + 2.0 * mean.abs() * ef.error_bound + dirichlet.error_bound)
            / z.value
            + (lhs.abs() + rhs.abs()) * z.error_bound / z.value;
        rows.push(BlLimitRow {
            beta,
            lhs,
            rhs,
            margin: rhs - lhs,
            err,
        });
    }

    // the classical margin (1.9) against e^{-V}
    let cell = ErrCell::new();
    let wexp = {
        let v = v.clone();
        move |x: f64| (-v.eval(&[x])).exp()
    };
    let z = integrate_1d(|x| wexp(x), Domain1D::RealLine, quad, &[])?;
    let ef = integrate_1d(
        |x| wexp(x) * f.eval(&[x]),
        Domain1D::RealLine,
        quad,
        &[],
    )?;
    let ef2 = integrate_1d(
        |x| {
            let fv = f.eval(&[x]);
            wexp(x) * fv * fv
        },
        Domain1D::RealLine,
        quad,
        &[],
    )?;
    let dirichlet = integrate_1d(
        |x| {
            cell.guard((|| {
                let hv = v.eval_hess(&[x], None)?;
                let gf = f.eval_grad(&[x], None)?;
                Ok(wexp(x) * hess_inv_quadform(&hv, &gf)?)
            })())
        },
        Domain1D::RealLine,
        quad,
        &[],
    )?;
    cell.check()?;
    let mean = ef.value / z.value;
    let lhs = ef2.value / z.value - mean * mean;
    let rhs = dirichlet.value / z.value;
    let classic = BlLimitRow {
        beta: f64::INFINITY,
        lhs,
        rhs,
        margin: rhs - lhs,
        err: (ef2.error_bound + 2.0 * mean.abs() * ef.error_bound + dirichlet.error_bound)
            / z.value,
    };
    Ok((rows, classic))
}

// ------------------------------------------------------- battery and stock

/// The fixed 12-function test battery: polynomials crossed with Gaussian
/// bumps. Versioned: tests and acceptance refer to these by name.
pub const BATTERY_NAMES: [&str; 12] = [
    "x1",
    "x1^2",
    "x1*bump",
    "x1^2*bump",
    "x1^3*bump",
    "bump",
    "(1+x1)*bump^2",
    "x1*bump^2",
    "(x1^2-1)*bump",
    "normsq*bump",
    "x1+0.1*x1^3*bump",
    "x1^2+x1",
];

/// Builds the named battery function in dimension n.
pub fn battery_field(name: &str, n: usize) -> Option<ScalarField> {
    let bump = ScalarField::gaussian_bump(n);
    let bump2 = ScalarField::product(&bump, &bump);
    let x1 = ScalarField::coord(n, 0);
    let x1sq = ScalarField::coord_power(n, 2);
    let x1cube = ScalarField::coord_power(n, 3);
    let one = ScalarField::constant(n, 1.0);
    let normsq = {
        let mut acc = ScalarField::coord_power(n, 2);
        for i in 1..n {
            let ci = ScalarField::coord(n, i);
            acc = ScalarField::add_scaled(&acc, &ScalarField::product(&ci, &ci), 1.0);
        }
        acc
    };
    let f = match name {
        "x1" => x1,
        "x1^2" => x1sq,
        "x1*bump" => ScalarField::product(&x1, &bump),
        "x1^2*bump" => ScalarField::product(&x1sq, &bump),
        "x1^3*bump" => ScalarField::product(&x1cube, &bump),
        "bump" => bump,
        "(1+x1)*bump^2" => ScalarField::product(&ScalarField::add_scaled(&one, &x1, 1.0), &bump2),
        "x1*bump^2" => ScalarField::product(&x1, &bump2),
        "(x1^2-1)*bump" => ScalarField::product(
            &ScalarField::add_scaled(&x1sq, &one, -1.0),
            &bump,
        ),
        "normsq*bump" => ScalarField::product(&normsq, &bump),
        "x1+0.1*x1^3*bump" => {
            ScalarField::add_scaled(&x1, &ScalarField::product(&x1cube, &bump), 0.1)
        }
        "x1^2+x1" => ScalarField::add_scaled(&x1sq, &x1, 1.0),
        _ => return None,
    };
    Some(f)
}

/// All battery fields for dimension n.
pub fn battery(n: usize) -> Vec<(&'static str, ScalarField)> {
    BATTERY_NAMES
        .iter()
        .map(|name| (*name, battery_field(name, n).expect("battery name")))
        .collect()
}

/// The stock scenario suite: every registry tag at its reference
/// parameters, with the coordinate function as the default test function.
pub fn stock_scenarios() -> Result<Vec<Scenario>> {
    use crate::measures::{make_cauchy, make_exp_power, make_halfsphere};

    let x1 = |n: usize| ScalarField::coord(n, 0);
    let mut out = Vec::new();

    // main theorems
    out.push(Scenario::new(
        "thm1-cauchy-n1-b3-r1",
        EqTag::Thm1,
        Measure::Weighted(make_cauchy(1, 3.0)?),
        ParamTriple::new(1, 3.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "thm1-cauchy-n1-b4-r0.5",
        EqTag::Thm1,
        Measure::Weighted(make_cauchy(1, 4.0)?),
        ParamTriple::new(1, 4.0, 0.5),
        x1(1),
    ));
    out.push(Scenario::new(
        "thm1-cauchy-n2-b6-r1",
        EqTag::Thm1,
        Measure::Weighted(make_cauchy(2, 6.0)?),
        ParamTriple::new(2, 6.0, 1.0),
        x1(2),
    ));
    out.push(Scenario::new(
        "thm2-sphere-n1-b2-r1",
        EqTag::Thm2,
        Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
        ParamTriple::new(1, 2.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "thm2-sphere-n1-b3-r0.5",
        EqTag::Thm2,
        Measure::Weighted(make_halfsphere(1, 1.0, 3.0)?),
        ParamTriple::new(1, 3.0, 0.5),
        x1(1),
    ));

    // dimensional BL forms
    out.push(Scenario::new(
        "bl-dim-1-cauchy-n1-b4",
        EqTag::BlDim1,
        Measure::Weighted(make_cauchy(1, 4.0)?),
        ParamTriple::new(1, 4.0, 0.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "bl-dim-2-sphere-n1-b2",
        EqTag::BlDim2,
        Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
        ParamTriple::new(1, 2.0, 0.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "bl-classic-gauss-n1",
        EqTag::BlClassic,
        Measure::LogConcave(make_exp_power(1, 2.0)?),
        ParamTriple::new(1, f64::INFINITY, 0.0),
        x1(1),
    ));

    // reverse Holder / three-point concavity
    let gauge = ScalarField::one_plus_abs(1);
    let rev1 = WeightedMeasure::case1(
        gauge.clone(),
        4.0,
        DomainSpec::full_space(1),
        &QuadratureSpec::default(),
    )?;
    out.push(Scenario::new(
        "rev-holder-1-gauge-n1-b4-r0.5",
        EqTag::RevHolder1,
        Measure::Weighted(rev1.clone()),
        ParamTriple::new(1, 4.0, 0.5),
        x1(1),
    ));
    out.push(Scenario::new(
        "psi-3pt-gauge-n1-b3",
        EqTag::Psi3pt,
        Measure::Weighted(rev1),
        ParamTriple::new(1, 3.0, 0.0),
        x1(1),
    ));
    let wedge = ScalarField::from_fn(1, |x| 1.0 - x[0].abs())
        .with_grad(|x| vec![-x[0].signum()])
        .with_hess(|_| crate::linalg::SymMatrix::zeros(1))
        .with_kinks(vec![crate::fields::Kink { coord: 0, at: 0.0 }]);
    let rev2 = WeightedMeasure::case2(
        wedge.clone(),
        2.0,
        DomainSpec::interval(-1.0, 1.0),
        &QuadratureSpec::default(),
    )?;
    out.push(Scenario::new(
        "rev-holder-2-wedge-n1-b2-r0.5",
        EqTag::RevHolder2,
        Measure::Weighted(rev2.clone()),
        ParamTriple::new(1, 2.0, 0.5),
        x1(1),
    ));
    out.push(Scenario::new(
        "psibar-3pt-wedge-n1-b1",
        EqTag::Psibar3pt,
        Measure::Weighted(rev2),
        ParamTriple::new(1, 1.0, 0.0),
        x1(1),
    ));

    // variance of the potential
    out.push(Scenario::new(
        "cor6-laplace-n1",
        EqTag::Cor6,
        Measure::LogConcave(make_exp_power(1, 1.0)?),
        ParamTriple::new(1, f64::INFINITY, 0.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "cor6-gauss-n1",
        EqTag::Cor6,
        Measure::LogConcave(make_exp_power(1, 2.0)?),
        ParamTriple::new(1, f64::INFINITY, 0.0),
        x1(1),
    ));

    // weighted BL family
    out.push(Scenario::new(
        "thm8-cauchy-n1-b3",
        EqTag::Thm8,
        Measure::Weighted(make_cauchy(1, 3.0)?),
        ParamTriple::new(1, 3.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "rev-weighted-1-cauchy-n1-b3",
        EqTag::RevWeighted1,
        Measure::Weighted(make_cauchy(1, 3.0)?),
        ParamTriple::new(1, 3.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "rev-weighted-1-cauchy-n1-b1.5",
        EqTag::RevWeighted1,
        Measure::Weighted(make_cauchy(1, 1.5)?),
        ParamTriple::new(1, 1.5, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "thm9-sphere-n1-b2",
        EqTag::Thm9,
        Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
        ParamTriple::new(1, 2.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "rev-weighted-2-sphere-n1-b2",
        EqTag::RevWeighted2,
        Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
        ParamTriple::new(1, 2.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "prop10-gauss-n1-b2",
        EqTag::Prop10,
        Measure::LogConcave(make_exp_power(1, 2.0)?),
        ParamTriple::new(1, 2.0, 1.0),
        x1(1),
    ));
    for r in [1.0, 1.5, 2.0] {
        out.push(Scenario::new(
            &format!("prop11-exp-power-r{r}"),
            EqTag::Prop11,
            Measure::LogConcave(make_exp_power(1, r)?),
            ParamTriple::new(1, 2.0, r),
            x1(1),
        ));
    }

    // uniformly convex potentials and the sharp corollaries
    out.push(
        Scenario::new(
            "thm12-cauchy-n1-b3",
            EqTag::Thm12,
            Measure::Weighted(make_cauchy(1, 3.0)?),
            ParamTriple::new(1, 3.0, 1.0),
            x1(1),
        )
        .with_convexity(2.0),
    );
    out.push(
        Scenario::new(
            "thm15-sphere-n1-b2",
            EqTag::Thm15,
            Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
            ParamTriple::new(1, 2.0, 1.0),
            x1(1),
        )
        .with_convexity(2.0),
    );
    out.push(Scenario::new(
        "cor14-cauchy-n1-b3",
        EqTag::Cor14,
        Measure::Weighted(make_cauchy(1, 3.0)?),
        ParamTriple::new(1, 3.0, 1.0),
        x1(1),
    ));
    out.push(Scenario::new(
        "cor16-sphere-n1-b2",
        EqTag::Cor16,
        Measure::Weighted(make_halfsphere(1, 1.0, 2.0)?),
        ParamTriple::new(1, 2.0, 1.0),
        x1(1),
    ));
    for n in [1usize, 2, 3] {
        out.push(Scenario::new(
            &format!("chi-n{n}"),
            EqTag::ChiN,
            Measure::Chi(make_chi(n)?),
            ParamTriple::new(n, f64::NAN, 0.0),
            x1(1),
        ));
    }
    Ok(out)
}
