use std::fs;
use std::path::Path;

use driftwalk::bounds::{
    bound_diff_grid, bound_report, grid_csv, iid_rwre_speed, jensen_rwre_bound, speed_upper_bound,
    tightness_gap, upsilon_speed,
};
use driftwalk::environment::{make_finite_env, parse_window_csv, window_csv};
use driftwalk::exact::{
    closed_form_coeffs, solve_expected_hitting, solve_expected_hitting_f64, solve_second_moment,
};
use driftwalk::quadratic::{
    evaluate_quadratic_identity, hessian_determinant, hessian_norm_report, integer_b,
    minimum_value, optimal_b,
};
use driftwalk::rational::{self, round15};
use driftwalk::rebalance::rebalance_descent;
use driftwalk::rng::derive_seed;
use driftwalk::simulator::{
    coupled_run, sample_hitting_time, speed_samples, HittingSample, Moments, SpeedEstimate,
    WalkConfig,
};
use driftwalk::{EnvKind, Environment, LineEnvironment, Probability, Rational};
use num::One;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::args::{
    BoundsArgs, CoupleArgs, EnvArgs, Format, Formula, OptimizeArgs, ScanArgs, SimulateArgs,
    SolveArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<driftwalk::Error> for CliError {
    fn from(e: driftwalk::Error) -> Self {
        match e {
            driftwalk::Error::Consistency(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn fmt(value: &Rational) -> String {
    rational::format(value)
}

fn fmt_all(values: &[Rational]) -> Vec<String> {
    values.iter().map(fmt).collect()
}

fn line(value: &Value) -> String {
    let mut s = value.to_string();
    s.push('\n');
    s
}

fn probability(p: &Rational) -> Result<Probability> {
    Ok(Probability::new(p.clone())?)
}

/// Reads an environment from inline JSON, a JSON or CSV file, or the
/// inline `kind:key=val` form.
pub fn load_env(spec: &str) -> Result<Environment> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return env_from_json_text(spec);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        {
            return env_from_csv(&text);
        }
        return env_from_json_text(&text);
    }
    Ok(Environment::parse_inline(spec)?)
}

fn env_from_json_text(text: &str) -> Result<Environment> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| usage(format!("environment JSON: {e}")))?;
    Ok(Environment::from_json(&doc)?)
}

/// The drift value is the largest listed probability above 1/2.
fn env_from_csv(text: &str) -> Result<Environment> {
    let probe = parse_window_csv(text, Probability::one())?;
    let p = match probe.kind() {
        EnvKind::Explicit { sites } => sites
            .values()
            .filter(|q| q.value() > Probability::half().value())
            .max_by(|a, b| a.value().cmp(b.value()))
            .cloned()
            .unwrap_or_else(Probability::one),
        _ => Probability::one(),
    };
    Ok(Environment::Line(parse_window_csv(text, p)?))
}

fn line_env(spec: &str, flag: &str) -> Result<LineEnvironment> {
    match load_env(spec)? {
        Environment::Line(env) => Ok(env),
        Environment::Finite(_) => Err(usage(format!(
            "--{flag} needs an environment on the whole line"
        ))),
    }
}

pub fn solve(args: &SolveArgs, format: Format) -> Result<String> {
    let p = probability(&args.p)?;
    let env = make_finite_env(args.n, p.clone(), &args.drifts)?;
    if args.float {
        let v = solve_expected_hitting_f64(&env);
        return Ok(match format {
            Format::Csv => {
                let mut out = String::from("x,v\n");
                for (x, vx) in v.iter().enumerate() {
                    out.push_str(&format!("{x},{}\n", round15(*vx)));
                }
                out
            }
            Format::Json => line(&json!({
                "N": args.n,
                "p": fmt(p.value()),
                "drifts": args.drifts,
                "v": v.iter().map(|x| round15(*x)).collect::<Vec<_>>(),
            })),
        });
    }
    let v = solve_expected_hitting(&env).v;
    let w = args.second_moment.then(|| solve_second_moment(&env));
    let coeffs = if args.coeffs {
        Some(closed_form_coeffs(args.n, &p, &args.drifts)?)
    } else {
        None
    };
    Ok(match format {
        Format::Csv => {
            let mut out = String::from(if w.is_some() { "x,v,w\n" } else { "x,v\n" });
            for (x, vx) in v.iter().enumerate() {
                out.push_str(&format!("{x},{}", fmt(vx)));
                if let Some(w) = &w {
                    out.push_str(&format!(",{}", fmt(&w[x])));
                }
                out.push('\n');
            }
            if let Some(q) = &coeffs {
                out.push_str("\nj,C,D\n");
                for (j, (c, d)) in q.c.iter().zip(&q.d).enumerate() {
                    out.push_str(&format!("{},{},{}\n", j + 1, fmt(c), fmt(d)));
                }
            }
            out
        }
        Format::Json => {
            let mut doc = json!({
                "N": args.n,
                "p": fmt(p.value()),
                "drifts": args.drifts,
                "v": fmt_all(&v),
            });
            if let Some(w) = &w {
                doc["w"] = json!(fmt_all(w));
            }
            if let Some(q) = &coeffs {
                doc["C"] = json!(fmt_all(&q.c));
                doc["D"] = json!(fmt_all(&q.d));
            }
            line(&doc)
        }
    })
}

pub fn simulate(args: &SimulateArgs, format: Format, seed: u64) -> Result<String> {
    let env = load_env(&args.env)?;
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let mut out = String::new();
    match (args.steps, args.target) {
        (Some(steps), None) => {
            let values = speed_samples(&env, steps, args.reps, seed)?;
            let est = SpeedEstimate::from_samples(&values, steps, seed);
            match format {
                Format::Json => {
                    for (rep, v) in values.iter().enumerate() {
                        out.push_str(&line(&json!({"rep": rep, "value": round15(*v)})));
                    }
                    out.push_str(&line(&json!({"summary": {
                        "quantity": "speed",
                        "mean": round15(est.mean),
                        "stderr": round15(est.stderr),
                        "reps": est.reps,
                        "steps": steps,
                        "seed": seed,
                    }})));
                }
                Format::Csv => {
                    out.push_str("rep,value\n");
                    for (rep, v) in values.iter().enumerate() {
                        out.push_str(&format!("{rep},{}\n", round15(*v)));
                    }
                    out.push_str("\nmean,stderr,reps,steps,seed\n");
                    out.push_str(&format!(
                        "{},{},{},{steps},{seed}\n",
                        round15(est.mean),
                        round15(est.stderr),
                        est.reps
                    ));
                }
            }
        }
        (None, Some(target)) => {
            let mut config = WalkConfig::target(env, target, seed);
            config.cap = args.cap;
            let samples = (0..args.reps)
                .into_par_iter()
                .map(|r| {
                    let mut c = config.clone();
                    c.seed = derive_seed(seed, r);
                    sample_hitting_time(&c)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let hits: Vec<f64> = samples
                .iter()
                .filter_map(HittingSample::value)
                .map(|t| t as f64)
                .collect();
            let capped = samples.len() - hits.len();
            let m = Moments::from_samples(&hits);
            let summary = |v: f64| {
                if m.count > 0 {
                    json!(round15(v))
                } else {
                    Value::Null
                }
            };
            match format {
                Format::Json => {
                    for (rep, s) in samples.iter().enumerate() {
                        out.push_str(&line(&match s {
                            HittingSample::Hit(t) => json!({"rep": rep, "value": t}),
                            HittingSample::CapExceeded => {
                                json!({"rep": rep, "value": null, "cap_exceeded": true})
                            }
                        }));
                    }
                    out.push_str(&line(&json!({"summary": {
                        "quantity": "hitting_time",
                        "target": target,
                        "mean": summary(m.mean),
                        "stderr": summary(m.stderr),
                        "reps": args.reps,
                        "capped": capped,
                        "cap": args.cap,
                        "seed": seed,
                    }})));
                }
                Format::Csv => {
                    out.push_str("rep,value\n");
                    for (rep, s) in samples.iter().enumerate() {
                        match s {
                            HittingSample::Hit(t) => out.push_str(&format!("{rep},{t}\n")),
                            HittingSample::CapExceeded => {
                                out.push_str(&format!("{rep},cap-exceeded\n"))
                            }
                        }
                    }
                    out.push_str("\nmean,stderr,reps,capped,seed\n");
                    out.push_str(&format!(
                        "{},{},{},{capped},{seed}\n",
                        round15(m.mean),
                        round15(m.stderr),
                        args.reps
                    ));
                }
            }
        }
        _ => return Err(usage("simulate needs exactly one of --steps or --target")),
    }
    Ok(out)
}

pub fn couple(args: &CoupleArgs, format: Format, seed: u64) -> Result<String> {
    let lower = line_env(&args.lower, "lower")?;
    let upper = line_env(&args.upper, "upper")?;
    let run = coupled_run(&lower, &upper, args.steps, seed)?;
    Ok(match format {
        Format::Csv if args.paths => {
            let mut out = String::from("n,lower,upper\n");
            for (n, (a, b)) in run.lower_path.iter().zip(&run.upper_path).enumerate() {
                out.push_str(&format!("{n},{a},{b}\n"));
            }
            out
        }
        Format::Csv => format!(
            "steps,seed,dominated,lower_final,upper_final\n{},{seed},{},{},{}\n",
            args.steps,
            run.dominated,
            run.lower_path.last().unwrap(),
            run.upper_path.last().unwrap()
        ),
        Format::Json => {
            let mut doc = json!({
                "steps": args.steps,
                "seed": seed,
                "dominated": run.dominated,
                "lower_final": run.lower_path.last(),
                "upper_final": run.upper_path.last(),
            });
            if args.paths {
                doc["lower_path"] = json!(run.lower_path);
                doc["upper_path"] = json!(run.upper_path);
            }
            line(&doc)
        }
    })
}

pub fn optimize(args: &OptimizeArgs, format: Format) -> Result<String> {
    if format == Format::Csv {
        return Err(usage("optimize emits JSON lines only"));
    }
    let p = probability(&args.p)?;
    let k = match (args.k, &args.drifts) {
        (Some(k), Some(d)) if k != d.len() => {
            return Err(usage(format!("--k {k} disagrees with {} drifts", d.len())))
        }
        (Some(k), _) => k,
        (None, Some(d)) => d.len(),
        (None, None) => return Err(usage("optimize needs --k or --drifts")),
    };
    let b = optimal_b(args.n, &p, k)?;
    let feasible = integer_b(args.n, &p, k)?;
    let f_b = match &feasible {
        Some(b) if b.iter().all(|&x| x > 0 && x < args.n) => Some(fmt(
            &driftwalk::exact::closed_form_expectation(args.n, &p, b)?,
        )),
        _ => None,
    };
    let mut out = line(&json!({
        "record": "optimum",
        "N": args.n,
        "p": fmt(p.value()),
        "k": k,
        "b": fmt_all(&b),
        "integer_feasible": feasible.is_some(),
        "minimum_value": fmt(&minimum_value(args.n, &p, k)),
        "f_b": f_b,
    }));
    let Some(drifts) = &args.drifts else {
        return Ok(out);
    };
    let q = evaluate_quadratic_identity(args.n, &p, drifts)?;
    out.push_str(&line(&json!({
        "record": "placement",
        "drifts": drifts,
        "f": fmt(&q.direct),
        "via_form": fmt(&q.via_form),
        "residual": fmt(&q.residual),
    })));
    if p.value().is_one() {
        let env = make_finite_env(args.n, p, drifts)?;
        let outcome = rebalance_descent(&env)?;
        for (i, s) in outcome.trace.iter().enumerate() {
            out.push_str(&line(&json!({
                "record": "move",
                "step": i + 1,
                "lengths": [s.lengths.0, s.lengths.1],
                "drifts_before": s.drifts_before,
                "drifts_after": s.drifts_after,
                "expected_before": fmt(&s.expected_before),
                "expected_after": fmt(&s.expected_after),
                "decrease": fmt(&s.decrease),
            })));
        }
        out.push_str(&line(&json!({
            "record": "rebalanced",
            "drifts": outcome.env.drifts(),
            "intervals": outcome.env.intervals(),
            "m": outcome.m,
            "moves": outcome.trace.len(),
        })));
    }
    Ok(out)
}

fn need<T: Clone>(value: &Option<T>, flag: &str, formula: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| usage(format!("--formula {formula} needs --{flag}")))
}

pub fn bounds(args: &BoundsArgs) -> Result<String> {
    let name = clap::ValueEnum::to_possible_value(&args.formula)
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let p = || -> Result<Probability> { probability(&need(&args.p, "p", &name)?) };
    let lambda = || need(&args.lambda, "lambda", &name);
    let doc = match args.formula {
        Formula::SpeedUpper => {
            let (p, l) = (p()?, lambda()?);
            json!({"p": fmt(p.value()), "lambda": fmt(&l), "value": fmt(&speed_upper_bound(&p, &l)?)})
        }
        Formula::UpsilonSpeed => {
            let (m, l) = (need(&args.m, "m", &name)?, lambda()?);
            json!({"m": m, "lambda": fmt(&l), "value": fmt(&upsilon_speed(m, &l)?)})
        }
        Formula::Gap => {
            let n = need(&args.n, "n", &name)?;
            let m = need(&args.m, "m", &name)?;
            let l = need(&args.l, "l", &name)?;
            let g = tightness_gap(n, m, l)?;
            json!({
                "n": n, "m": m, "l": l,
                "lambda": fmt(&g.lambda),
                "speed": fmt(&g.speed),
                "value": fmt(&g.gap),
                "rearranged": fmt(&g.rearranged),
                "rearranged_minus": fmt(&g.rearranged_minus),
                "cubic_lower": fmt(&g.cubic_lower),
            })
        }
        Formula::Jensen => {
            let (p, l) = (p()?, lambda()?);
            let j = jensen_rwre_bound(&p, &l)?;
            json!({"p": fmt(p.value()), "lambda": fmt(&l), "s": round15(j.s), "value": round15(j.bound)})
        }
        Formula::IidSpeed => {
            let (p, l) = (p()?, lambda()?);
            json!({"p": fmt(p.value()), "lambda": fmt(&l), "value": fmt(&iid_rwre_speed(&p, &l)?)})
        }
        Formula::Report => {
            let (p, l) = (p()?, lambda()?);
            let r = bound_report(&p, &l)?;
            json!({
                "p": fmt(p.value()),
                "lambda": fmt(&l),
                "main_bound": fmt(&r.main_bound),
                "jensen_s": round15(r.jensen.s),
                "jensen_bound": round15(r.jensen.bound),
                "iid_speed": fmt(&r.iid_speed),
                "winner": r.winner.as_str(),
            })
        }
        Formula::Determinant => {
            let (k, p) = (need(&args.k, "k", &name)?, p()?);
            let d = hessian_determinant(k, &p)?;
            json!({
                "k": k,
                "p": fmt(p.value()),
                "value": fmt(&d.hessian_closed),
                "det_h_elimination": fmt(&d.hessian_eliminated),
                "det_m": fmt(&d.scaled_closed),
                "det_m_elimination": fmt(&d.scaled_eliminated),
                "det_m_recursion": fmt(&d.scaled_recursion),
            })
        }
        Formula::Norm => {
            let (k, p) = (need(&args.k, "k", &name)?, p()?);
            let r = hessian_norm_report(k, &p)?;
            if !r.within_constant() {
                return Err(CliError::Internal(format!(
                    "norm estimate {} exceeds 8(2p-1)/p = {}",
                    r.estimate,
                    fmt(&r.constant)
                )));
            }
            json!({
                "k": k,
                "p": fmt(p.value()),
                "value": round15(r.estimate),
                "exact": r.exact,
                "iterations": r.iterations,
                "row_sum_bound": fmt(&r.row_sum_bound),
                "constant": fmt(&r.constant),
            })
        }
    };
    let mut doc = doc;
    doc["formula"] = json!(name);
    Ok(line(&doc))
}

fn parse_range(text: &str, flag: &str) -> Result<(Rational, Rational)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| usage(format!("--{flag} must be `lo:hi`")))?;
    Ok((rational::parse(lo)?, rational::parse(hi)?))
}

pub fn scan(args: &ScanArgs, format: Format) -> Result<String> {
    let (p_lo, p_hi) = parse_range(&args.p_range, "p-range")?;
    let (l_lo, l_hi) = parse_range(&args.lambda_range, "lambda-range")?;
    let cells = bound_diff_grid((&p_lo, &p_hi), (&l_lo, &l_hi), args.resolution)?;
    Ok(match format {
        Format::Csv => grid_csv(&cells),
        Format::Json => cells
            .iter()
            .map(|c| {
                line(&json!({
                    "p": fmt(&c.p),
                    "lambda": fmt(&c.lambda),
                    "main": round15(c.main),
                    "jensen": round15(c.jensen),
                    "diff": round15(c.diff),
                }))
            })
            .collect(),
    })
}

pub fn env(args: &EnvArgs) -> Result<String> {
    let env = load_env(&args.spec)?;
    Ok(match args.emit {
        Format::Json => line(&env.to_json()),
        Format::Csv => match &env {
            Environment::Line(e) => {
                if args.from > args.to {
                    return Err(usage("--from must not exceed --to"));
                }
                window_csv(e, args.from, args.to)
            }
            Environment::Finite(e) => {
                let mut out = String::from("site,prob\n");
                for x in 0..e.len() {
                    out.push_str(&format!("{x},{}\n", fmt(&e.prob(x))));
                }
                out
            }
        },
    })
}
