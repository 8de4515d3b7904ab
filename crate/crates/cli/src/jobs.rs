//! Builds and executes the individual jobs of a run configuration.

use serde_json::{json, Value};

use varineq_core::catalogue::{
    self, battery_field, psi_curvature, verify, EqTag, Scenario, Status,
};
use varineq_core::dual::{check_decomposition, DualProblem, Grid1D, GridFunction};
use varineq_core::error::Error;
use varineq_core::evolve::{
    cauchy_truncation_radius, spectral_gap, variance_decay_check, EvolutionProblem, GeneratorTag,
    SpectralProblem,
};
use varineq_core::fields::{Kink, ScalarField};
use varineq_core::measures::{
    make_cauchy, make_chi, make_exp_power, make_halfsphere, DomainSpec, Measure,
    ParamTriple, WeightedMeasure,
};
use varineq_core::quad::QuadratureSpec;

use crate::config::{JobKind, JobSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobStatus {
    Holds,
    Violated,
    Inconclusive,
    Ok,
    Skipped,
    Error,
}

#[derive(Debug)]
pub struct JobOutcome {
    pub id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    /// violated inside a paper-asserted-only range under lenient mode
    pub waived: bool,
    pub detail: Value,
    pub csv: Option<(String, String)>,
}

pub struct Globals {
    pub seed: u64,
    pub tol: Option<f64>,
    pub strict: bool,
}

/// Stable per-job seed: global seed folded with the job id bytes.
fn job_seed(global: u64, id: &str) -> u64 {
    id.bytes()
        .fold(global ^ 0x9e37_79b9_7f4a_7c15, |acc, b| {
            acc.rotate_left(5) ^ (b as u64).wrapping_mul(0x100_0000_01b3)
        })
}

fn quad_spec(g: &Globals, job: &JobSpec) -> QuadratureSpec {
    let mut q = QuadratureSpec::default();
    if let Some(t) = g.tol {
        q.tolerance = t;
    }
    q.seed = job_seed(g.seed, &job.id);
    if let Some(samples) = job.keys.get("mc_samples") {
        if let Ok(n) = samples.parse() {
            q.mc_samples = n;
        }
    }
    q
}

fn wedge_field() -> ScalarField {
    ScalarField::from_fn(1, |x| 1.0 - x[0].abs())
        .with_grad(|x| vec![-x[0].signum()])
        .with_hess(|_| varineq_core::SymMatrix::zeros(1))
        .with_kinks(vec![Kink { coord: 0, at: 0.0 }])
}

/// Builds the measure named by `family`.
fn build_measure(job: &JobSpec, quad: &QuadratureSpec) -> Result<(Measure, ParamTriple), String> {
    let family = job.str_key("family")?;
    let n = job.usize_or("n", 1)?;
    let beta = job.f64_or("beta", 0.0)?;
    let r = job.f64_or("r", 0.0)?;
    let params = ParamTriple::new(n, beta, r);
    let m = match family {
        "cauchy" => Measure::Weighted(make_cauchy(n, beta).map_err(|e| e.to_string())?),
        "halfsphere" => {
            let sigma = job.f64_or("sigma", 1.0)?;
            Measure::Weighted(make_halfsphere(n, sigma, beta).map_err(|e| e.to_string())?)
        }
        "exp-power" => Measure::LogConcave(make_exp_power(n, r).map_err(|e| e.to_string())?),
        "gaussian" => Measure::LogConcave(make_exp_power(n, 2.0).map_err(|e| e.to_string())?),
        "chi" => Measure::Chi(make_chi(n).map_err(|e| e.to_string())?),
        "gauge" => Measure::Weighted(
            WeightedMeasure::case1(
                ScalarField::one_plus_abs(n),
                beta,
                DomainSpec::full_space(n),
                quad,
            )
            .map_err(|e| e.to_string())?,
        ),
        "wedge" => Measure::Weighted(
            WeightedMeasure::case2(wedge_field(), beta, DomainSpec::interval(-1.0, 1.0), quad)
                .map_err(|e| e.to_string())?,
        ),
        "shifted-square" => {
            let c = job.f64_or("c", 2.0)?;
            let a = job.f64_or("a", -1.0)?;
            let b = job.f64_or("b", 1.0)?;
            Measure::Weighted(
                WeightedMeasure::case1(
                    ScalarField::shifted_square_1d(c),
                    beta,
                    DomainSpec::interval(a, b),
                    quad,
                )
                .map_err(|e| e.to_string())?,
            )
        }
        other => return Err(format!("job '{}': unknown family '{other}'", job.id)),
    };
    Ok((m, params))
}

fn report_to_json(rep: &catalogue::InequalityReport) -> Value {
    serde_json::to_value(rep).expect("report serializes")
}

fn error_outcome(job: &JobSpec, msg: String) -> JobOutcome {
    JobOutcome {
        id: job.id.clone(),
        kind: job.kind,
        status: JobStatus::Error,
        waived: false,
        detail: json!({ "error": msg }),
        csv: None,
    }
}

pub fn run_job(job: &JobSpec, g: &Globals) -> JobOutcome {
    let result = match job.kind {
        JobKind::Verify => run_verify(job, g),
        JobKind::Dual => run_dual(job, g),
        JobKind::Evolve => run_evolve(job, g),
        JobKind::Spectrum => run_spectrum(job, g),
        JobKind::Sweep => run_sweep(job, g),
    };
    match result {
        Ok(outcome) => outcome,
        Err(msg) => error_outcome(job, msg),
    }
}

fn run_verify(job: &JobSpec, g: &Globals) -> Result<JobOutcome, String> {
    let quad = quad_spec(g, job);
    let tag = EqTag::parse(job.str_key("tag")?)
        .ok_or_else(|| format!("job '{}': unknown tag", job.id))?;
    let (measure, params) = build_measure(job, &quad)?;
    let fname = job.keys.get("f").map(|s| s.as_str()).unwrap_or("x1");
    let n = measure.dim();
    let f = battery_field(fname, n)
        .ok_or_else(|| format!("job '{}': unknown battery function '{fname}'", job.id))?;
    let mut sc = Scenario::new(&job.id, tag, measure, params, f).with_quad(quad);
    if let Some(c) = job.keys.get("convexity") {
        sc = sc.with_convexity(c.parse().map_err(|_| "bad convexity".to_string())?);
    }
    match verify(&sc) {
        Ok(rep) => {
            let status = match rep.status {
                Status::Holds => JobStatus::Holds,
                Status::Violated => JobStatus::Violated,
                Status::Inconclusive => JobStatus::Inconclusive,
            };
            let waived = status == JobStatus::Violated
                && !g.strict
                && rep.meta.get("paper_asserted_only").map(|s| s.as_str()) == Some("true");
            Ok(JobOutcome {
                id: job.id.clone(),
                kind: job.kind,
                status,
                waived,
                detail: report_to_json(&rep),
                csv: None,
            })
        }
        Err(Error::InvalidParameters(msg) | Error::NonIntegrable(msg)) if !g.strict => {
            Ok(JobOutcome {
                id: job.id.clone(),
                kind: job.kind,
                status: JobStatus::Skipped,
                waived: false,
                detail: json!({ "skipped": msg }),
                csv: None,
            })
        }
        Err(e) => Err(e.to_string()),
    }
}

fn run_dual(job: &JobSpec, _g: &Globals) -> Result<JobOutcome, String> {
    let c = job.f64_or("c", 2.0)?;
    let a = job.f64_or("a", -1.0)?;
    let b = job.f64_or("b", 1.0)?;
    let beta = job.f64_key("beta")?;
    let r = job.f64_or("r", 0.0)?;
    let ms = job
        .usize_list("m")
        .unwrap_or_else(|_| vec![251, 501, 1001, 2001]);
    let fname = job.keys.get("f").map(|s| s.as_str()).unwrap_or("x1");
    let f = battery_field(fname, 1)
        .ok_or_else(|| format!("job '{}': unknown battery function '{fname}'", job.id))?;
    let problem = DualProblem {
        phi: ScalarField::shifted_square_1d(c),
        beta,
        r,
        f,
    };

    let mut csv = String::from("term,value,m,residual\n");
    let mut residuals = Vec::new();
    for &m in &ms {
        let table = check_decomposition(&problem, &Grid1D::new(a, b, m)).map_err(|e| e.to_string())?;
        for t in &table.terms {
            csv.push_str(&format!("{},{:.16e},{m},{:.16e}\n", t.name, t.value, table.residual));
        }
        csv.push_str(&format!("lhs,{:.16e},{m},{:.16e}\n", table.lhs, table.residual));
        residuals.push((m, table.residual));
    }
    // observed order from the finest consecutive pair
    let order = if residuals.len() >= 2 {
        let (m0, r0) = residuals[residuals.len() - 2];
        let (m1, r1) = residuals[residuals.len() - 1];
        let hr = (m1 - 1) as f64 / (m0 - 1) as f64;
        Some((r0 / r1).ln() / hr.ln())
    } else {
        None
    };
    Ok(JobOutcome {
        id: job.id.clone(),
        kind: job.kind,
        status: JobStatus::Ok,
        waived: false,
        detail: json!({
            "residuals": residuals
                .iter()
                .map(|(m, r)| json!({ "m": m, "residual": r }))
                .collect::<Vec<_>>(),
            "observed_order": order,
        }),
        csv: Some((format!("{}.csv", job.id), csv)),
    })
}

fn build_evolution(job: &JobSpec) -> Result<(EvolutionProblem, f64), String> {
    let n = job.usize_or("n", 1)?;
    if n != 1 {
        return Err(format!("job '{}': evolution is one-dimensional", job.id));
    }
    let beta = job.f64_key("beta")?;
    let m = job.usize_or("m", 2001)?;
    let generator = job.str_key("generator")?;
    let (gen_tag, measure, grid, default_rate) = match generator {
        "lbeta-cauchy" => {
            let measure = make_cauchy(1, beta).map_err(|e| e.to_string())?;
            let tail = job.f64_or("tail", 1e-8)?;
            let x = match job.keys.get("x") {
                Some(v) => v.parse().map_err(|_| "bad x".to_string())?,
                None => cauchy_truncation_radius(beta, measure.normalizer(), tail),
            };
            (
                GeneratorTag::LbetaCauchy,
                measure,
                Grid1D::new(-x, x, m),
                4.0 * (beta - 1.0),
            )
        }
        "nbeta-sphere" => {
            let sigma = job.f64_or("sigma", 1.0)?;
            let measure = make_halfsphere(1, sigma, beta).map_err(|e| e.to_string())?;
            (
                GeneratorTag::NbetaSphere,
                measure,
                Grid1D::new(-sigma, sigma, m),
                4.0 * (beta + 1.0),
            )
        }
        other => return Err(format!("job '{}': unknown generator '{other}'", job.id)),
    };
    let h = grid.h();
    let dt = job.f64_or("dt", h)?;
    let horizon = job.f64_or("horizon", 1.0)?;
    Ok((
        EvolutionProblem {
            generator: gen_tag,
            measure,
            grid,
            dt,
            horizon,
        },
        default_rate,
    ))
}

fn run_evolve(job: &JobSpec, g: &Globals) -> Result<JobOutcome, String> {
    let _ = g;
    let (problem, default_rate) = build_evolution(job)?;
    let rate = job.f64_or("rate", default_rate)?;
    let tol = job.f64_or("tol", 1e-3)?;
    let fname = job.keys.get("f0").map(|s| s.as_str()).unwrap_or("x1");
    let f = battery_field(fname, 1)
        .ok_or_else(|| format!("job '{}': unknown battery function '{fname}'", job.id))?;
    let f0 = GridFunction::from_field(&f, &problem.grid);
    let rep = variance_decay_check(&problem, &f0, rate, tol).map_err(|e| e.to_string())?;

    let mut csv = String::from("t,var,bound\n");
    for ((t, v), b) in rep.times.iter().zip(&rep.variances).zip(&rep.bounds) {
        csv.push_str(&format!("{t:.10e},{v:.16e},{b:.16e}\n"));
    }
    // truncation sensitivity: double the domain and compare the variances
    let sensitivity = if job.keys.get("sensitivity").map(|s| s.as_str()) == Some("true")
        && problem.generator == GeneratorTag::LbetaCauchy
    {
        let wide = EvolutionProblem {
            grid: Grid1D::new(2.0 * problem.grid.a, 2.0 * problem.grid.b, problem.grid.m),
            ..problem.clone()
        };
        let f0w = GridFunction::from_field(&f, &wide.grid);
        let rep_w = variance_decay_check(&wide, &f0w, rate, tol).map_err(|e| e.to_string())?;
        let k = rep.variances.len().min(rep_w.variances.len()) - 1;
        Some((rep.variances[k] - rep_w.variances[k]).abs())
    } else {
        None
    };
    Ok(JobOutcome {
        id: job.id.clone(),
        kind: job.kind,
        status: if rep.ok {
            JobStatus::Ok
        } else {
            JobStatus::Violated
        },
        waived: false,
        detail: json!({
            "rate": rate,
            "tol": tol,
            "steps": rep.times.len() - 1,
            "final_variance": rep.variances.last(),
            "truncation_sensitivity": sensitivity,
            "bound_holds": rep.ok,
        }),
        csv: Some((format!("{}.csv", job.id), csv)),
    })
}

fn run_spectrum(job: &JobSpec, g: &Globals) -> Result<JobOutcome, String> {
    let quad = quad_spec(g, job);
    let (measure, params) = build_measure(job, &quad)?;
    let m = job.usize_or("m", 4001)?;
    let grid = match &measure {
        Measure::Weighted(wm) => match &wm.domain().kind {
            varineq_core::measures::DomainKind::FullSpace => {
                let tail = job.f64_or("tail", 1e-8)?;
                let x = match job.keys.get("x") {
                    Some(v) => v.parse().map_err(|_| "bad x".to_string())?,
                    None => cauchy_truncation_radius(params.beta, wm.normalizer(), tail),
                };
                Grid1D::new(-x, x, m)
            }
            varineq_core::measures::DomainKind::Interval { a, b } => Grid1D::new(*a, *b, m),
            varineq_core::measures::DomainKind::CenteredBall { sigma } => {
                Grid1D::new(-sigma, *sigma, m)
            }
            _ => return Err("spectrum needs a 1-D domain".to_string()),
        },
        Measure::LogConcave(_) => {
            let x = job.f64_or("x", 9.0)?;
            Grid1D::new(-x, x, m)
        }
        Measure::Chi(_) => return Err("chi spectrum is not supported".to_string()),
    };
    let weight = match job.keys.get("weight").map(|s| s.as_str()).unwrap_or("phi") {
        "one" => ScalarField::constant(1, 1.0),
        "phi" => match &measure {
            Measure::Weighted(wm) => wm.phi().clone(),
            _ => ScalarField::constant(1, 1.0),
        },
        other => return Err(format!("unknown weight '{other}'")),
    };
    let sp = SpectralProblem {
        weight,
        measure,
        grid,
    };
    let (lambda, constant) = spectral_gap(&sp).map_err(|e| e.to_string())?;
    let (status, expect) = match job.keys.get("expect") {
        Some(v) => {
            let e: f64 = v.parse().map_err(|_| "bad expect".to_string())?;
            let rtol = job.f64_or("rtol", 0.01)?;
            (
                if (lambda - e).abs() <= rtol * e.abs() {
                    JobStatus::Ok
                } else {
                    JobStatus::Violated
                },
                Some(e),
            )
        }
        None => (JobStatus::Ok, None),
    };
    Ok(JobOutcome {
        id: job.id.clone(),
        kind: job.kind,
        status,
        waived: false,
        detail: json!({
            "lambda1": lambda,
            "constant": constant,
            "expect": expect,
        }),
        csv: None,
    })
}

fn sweep_grid(job: &JobSpec) -> Result<Vec<f64>, String> {
    let from = job.f64_key("from")?;
    let to = job.f64_key("to")?;
    let step = job.f64_key("step")?;
    if !(step > 0.0) {
        return Err(format!("job '{}': step must be positive", job.id));
    }
    let mut grid = Vec::new();
    let mut v = from;
    let mut k = 0usize;
    while v <= to + 1e-12 {
        grid.push(v);
        k += 1;
        v = from + step * k as f64;
    }
    Ok(grid)
}

fn run_sweep(job: &JobSpec, g: &Globals) -> Result<JobOutcome, String> {
    let target = job.str_key("target")?;
    let grid = sweep_grid(job)?;
    let quad = quad_spec(g, job);
    let mut csv = String::from("param,lhs,rhs,margin,err\n");
    let mut worst_margin = f64::INFINITY;
    let mut any_violated = false;

    for &p in &grid {
        let (lhs, rhs, err) = match target {
            "cr-constant" => {
                let c = catalogue::prop11_constant(p);
                (c, 4.0, 0.0)
            }
            "psi-curvature" => {
                let family = job.keys.get("family").map(|s| s.as_str()).unwrap_or("gauge");
                let (phi, dom) = match family {
                    "gauge" => (ScalarField::one_plus_abs(1), DomainSpec::full_space(1)),
                    "cauchy" => (ScalarField::one_plus_norm_sq(1), DomainSpec::full_space(1)),
                    other => return Err(format!("psi-curvature sweep: unknown family '{other}'")),
                };
                let pc = psi_curvature(&phi, &dom, 1, p, 1e-2, &quad).map_err(|e| e.to_string())?;
                (pc.psi_dd, pc.bound, pc.err)
            }
            tag_name => {
                let tag = EqTag::parse(tag_name)
                    .ok_or_else(|| format!("unknown sweep target '{tag_name}'"))?;
                let axis = job.str_key("axis")?;
                let mut patched = job.clone();
                patched
                    .keys
                    .insert(axis.to_string(), format!("{p}"));
                let (measure, params) = build_measure(&patched, &quad)?;
                let fname = job.keys.get("f").map(|s| s.as_str()).unwrap_or("x1");
                let f = battery_field(fname, measure.dim())
                    .ok_or_else(|| format!("unknown battery function '{fname}'"))?;
                let mut sc =
                    Scenario::new(&format!("{}-{p}", job.id), tag, measure, params, f).with_quad(quad);
                if let Some(c) = job.keys.get("convexity") {
                    sc = sc.with_convexity(c.parse().map_err(|_| "bad convexity".to_string())?);
                }
                match verify(&sc) {
                    Ok(rep) => {
                        if rep.status == Status::Violated {
                            any_violated = true;
                        }
                        (rep.lhs, rep.rhs, rep.err)
                    }
                    Err(Error::InvalidParameters(_)) => continue,
                    Err(e) => return Err(e.to_string()),
                }
            }
        };
        let margin = rhs - lhs;
        worst_margin = worst_margin.min(margin);
        csv.push_str(&format!(
            "{p:.10e},{lhs:.16e},{rhs:.16e},{margin:.16e},{err:.16e}\n"
        ));
    }
    Ok(JobOutcome {
        id: job.id.clone(),
        kind: job.kind,
        status: if any_violated {
            JobStatus::Violated
        } else {
            JobStatus::Ok
        },
        waived: false,
        detail: json!({
            "target": target,
            "points": grid.len(),
            "worst_margin": if grid.is_empty() { None } else { Some(worst_margin) },
        }),
        csv: Some((format!("{}.csv", job.id), csv)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn job_seed_is_stable() {
        assert_eq!(job_seed(1, "a"), job_seed(1, "a"));
        assert_ne!(job_seed(1, "a"), job_seed(1, "b"));
        assert_ne!(job_seed(1, "a"), job_seed(2, "a"));
    }

    #[test]
    fn verify_job_roundtrip() {
        let cfg = parse(
            "[job t]\nkind = verify\ntag = thm1\nfamily = cauchy\nn = 1\nbeta = 3\nr = 1\nf = x1\n",
        )
        .unwrap();
        let g = Globals {
            seed: 0,
            tol: None,
            strict: false,
        };
        let out = run_job(&cfg.jobs[0], &g);
        assert!(
            matches!(out.status, JobStatus::Holds | JobStatus::Inconclusive),
            "{:?}",
            out.detail
        );
    }

    #[test]
    fn invalid_triple_skips_lenient_errors_strict() {
        let cfg = parse(
            "[job bad]\nkind = verify\ntag = thm1\nfamily = cauchy\nn = 2\nbeta = 5\nr = 2\n",
        )
        .unwrap();
        let lenient = Globals {
            seed: 0,
            tol: None,
            strict: false,
        };
        assert_eq!(run_job(&cfg.jobs[0], &lenient).status, JobStatus::Skipped);
        let strict = Globals {
            seed: 0,
            tol: None,
            strict: true,
        };
        assert_eq!(run_job(&cfg.jobs[0], &strict).status, JobStatus::Error);
    }

    #[test]
    fn sweep_empty_grid_gives_header_only() {
        let cfg = parse(
            "[job s]\nkind = sweep\ntarget = cr-constant\nfrom = 2\nto = 1\nstep = 0.1\n",
        )
        .unwrap();
        let g = Globals {
            seed: 0,
            tol: None,
            strict: false,
        };
        let out = run_job(&cfg.jobs[0], &g);
        assert_eq!(out.status, JobStatus::Ok);
        let (_, csv) = out.csv.unwrap();
        assert_eq!(csv, "param,lhs,rhs,margin,err\n");
    }

    #[test]
    fn cr_sweep_brackets_constant() {
        let cfg = parse(
            "[job s]\nkind = sweep\ntarget = cr-constant\nfrom = 1\nto = 2\nstep = 0.01\n",
        )
        .unwrap();
        let g = Globals {
            seed: 0,
            tol: None,
            strict: false,
        };
        let out = run_job(&cfg.jobs[0], &g);
        let (_, csv) = out.csv.unwrap();
        let mut min_c = f64::INFINITY;
        let mut first = None;
        let mut last = None;
        for line in csv.lines().skip(1) {
            let lhs: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            min_c = min_c.min(lhs);
            if first.is_none() {
                first = Some(lhs);
            }
            last = Some(lhs);
        }
        assert!((first.unwrap() - 4.0).abs() < 1e-12);
        assert!((last.unwrap() - 2.0).abs() < 1e-12);
        assert!(min_c > 1.8 && min_c <= 4.0);
    }
}
