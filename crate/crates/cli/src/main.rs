//! `cmono`: conditionally monotone probability from the command line.
//!
//! Exit codes: 0 success, 1 validation error (bad specs, bad flags),
//! 2 numerical-assertion failure (nonconvergent ladders, failed selftest,
//! transforms that are not probability transforms).

mod spec;

use clap::{Args, Parser, Subcommand};
use cmono::cumulants;
use cmono::limits::{self, CltMode, LimitKind, LimitLaw, PoissonMode};
use cmono::measures::MomentSeq;
use cmono::mixed_moments::{eval_pair, AlgebraSpec, Word};
use cmono::pair_convolutions::{
    boolean_convolve_h, boolean_convolve_moments, cfree_convolve, cmonotone_convolve,
    cmonotone_convolve_h, deformed_convolve_h, deformed_convolve_moments, monotone_convolve_h,
    monotone_convolve_moments, orthogonal_convolve_h, orthogonal_convolve_moments, HPair,
    MeasurePair,
};
use cmono::ring::{fmt_q, Q};
use cmono::semigroups::{default_grid, integrate_flow, is_infinitely_divisible, verify_semigroup_law};
use cmono::transforms::{h_of_atomic, measure_from_h, RecoveredMeasure};
use num::ToPrimitive;
use serde_json::{json, Value};
use spec::{
    atomic_json, law_name, moments_json, parse_field, parse_json_arg, parse_law, parse_measure,
    parse_pair, parse_transform, q_array, SpecError,
};

#[derive(Parser)]
#[command(name = "cmono", version, about = "conditionally monotone probability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulants of a measure (or pair) in a chosen flavor.
    Cumulants(CumulantsArgs),
    /// Convolutions: monotone, Boolean, orthogonal, pair and deformed.
    Convolve(ConvolveArgs),
    /// Mixed moments of a word under the two-state product.
    Mixedmoment(MixedArgs),
    /// Integrate a pair flow and check the semigroup law.
    Semigroup(SemigroupArgs),
    /// Order-K infinite-divisibility check (shifted-cumulant Hankels).
    Idcheck(IdcheckArgs),
    /// Limit-theorem iterates against the closed-form limit moments.
    Limit(LimitArgs),
    /// Density grid of a closed-form law (CSV).
    Density(DensityArgs),
    /// Run the acceptance suite in-process.
    Selftest,
}

#[derive(Args)]
struct CumulantsArgs {
    /// monotone | boolean | free | cfree | cmonotone
    #[arg(long)]
    flavor: String,
    /// Measure spec (inline JSON or a file path).
    #[arg(long)]
    mu: String,
    /// Second component for pair flavors; defaults to delta_0.
    #[arg(long)]
    nu: Option<String>,
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Args)]
struct ConvolveArgs {
    /// mono | bool | ortho | cmono | cfree | deformed
    #[arg(long)]
    op: String,
    /// Transform spec for --op deformed.
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    mu: String,
    #[arg(long)]
    nu: String,
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Args)]
struct MixedArgs {
    /// Word like "1^2 2^1 1^1" (1-based algebra indices).
    #[arg(long)]
    word: String,
    /// JSON array of {"phi": [...], "psi": [...]} tables.
    #[arg(long)]
    tables: String,
}

#[derive(Args)]
struct SemigroupArgs {
    /// Field spec for the first component (JSON or file).
    #[arg(long)]
    a1: String,
    /// Field spec for the second component.
    #[arg(long)]
    a2: String,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Also verify the semigroup law at s = t/2.
    #[arg(long, default_value_t = false)]
    check_law: bool,
}

#[derive(Args)]
struct IdcheckArgs {
    #[arg(long)]
    mu: String,
    #[arg(long)]
    nu: String,
    /// Cumulant order 2K for the K x K Hankel matrices.
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Args)]
struct LimitArgs {
    /// clt | poisson
    #[arg(long)]
    mode: String,
    /// Transform spec (deformed mode). Without it, pair mode is used.
    #[arg(long)]
    transform: Option<String>,
    /// Base measure for the CLT (default: symmetric Bernoulli).
    #[arg(long)]
    mu: Option<String>,
    /// Second component (pair CLT mode; default: same as mu).
    #[arg(long)]
    nu: Option<String>,
    /// Poisson rate lambda as "p/q".
    #[arg(long, default_value = "1/2")]
    lambda: String,
    /// Second-component rate rho (pair Poisson mode).
    #[arg(long, default_value = "1/2")]
    rho: String,
    #[arg(long, default_value_t = 512)]
    n: u32,
    #[arg(long, default_value_t = 8)]
    order: usize,
}

#[derive(Args)]
struct DensityArgs {
    /// Law spec (JSON or file).
    #[arg(long)]
    law: String,
    /// Grid "a:b:n".
    #[arg(long, default_value = "-2:2:400")]
    grid: String,
}

enum AppError {
    Validation(String),
    Numeric(String),
}

impl From<SpecError> for AppError {
    fn from(e: SpecError) -> Self {
        AppError::Validation(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(AppError::Validation(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(AppError::Numeric(msg)) => {
            eprintln!("numerical check failed: {msg}");
            std::process::exit(2);
        }
    }
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Cumulants(args) => cmd_cumulants(args),
        Command::Convolve(args) => cmd_convolve(args),
        Command::Mixedmoment(args) => cmd_mixed(args),
        Command::Semigroup(args) => cmd_semigroup(args),
        Command::Idcheck(args) => cmd_idcheck(args),
        Command::Limit(args) => cmd_limit(args),
        Command::Density(args) => cmd_density(args),
        Command::Selftest => cmd_selftest(),
    }
}

fn measure_moments(arg: &str, order: usize) -> Result<MomentSeq, AppError> {
    let value = parse_json_arg(arg)?;
    let m = parse_measure(&value)?;
    Ok(m.moments(order)?)
}

fn cmd_cumulants(args: CumulantsArgs) -> Result<(), AppError> {
    let m_mu = measure_moments(&args.mu, args.order)?;
    let m_nu = match &args.nu {
        Some(nu) => measure_moments(nu, args.order)?,
        None => MomentSeq::zeros(args.order),
    };
    let values = match args.flavor.as_str() {
        "monotone" => cumulants::monotone_cumulants(&m_mu).values,
        "boolean" => cumulants::boolean_cumulants(&m_mu).values,
        "cmonotone" => cumulants::cmonotone_cumulants(&m_mu, &m_nu).values,
        "free" => {
            let (free, _) = cumulants::free_and_cfree_cumulants(&m_mu, &m_mu);
            free.values
        }
        "cfree" => {
            let (_, pair) = cumulants::free_and_cfree_cumulants(&m_mu, &m_nu);
            pair.values
        }
        other => {
            return Err(AppError::Validation(format!("unknown flavor '{other}'")));
        }
    };
    emit(&q_array(&values));
    Ok(())
}

fn cmd_convolve(args: ConvolveArgs) -> Result<(), AppError> {
    let mu_val = parse_json_arg(&args.mu)?;
    let nu_val = parse_json_arg(&args.nu)?;
    match args.op.as_str() {
        "mono" | "bool" | "ortho" | "deformed" => {
            let mu = parse_measure(&mu_val)?;
            let nu = parse_measure(&nu_val)?;
            let transform = match args.op.as_str() {
                "deformed" => {
                    let t = args.transform.as_ref().ok_or_else(|| {
                        AppError::Validation("--op deformed needs --transform".into())
                    })?;
                    Some(parse_transform(&parse_json_arg(t)?)?)
                }
                _ => None,
            };
            // exact rational track when both inputs are atomic
            if let (Some(a), Some(b)) = (mu.atomic(), nu.atomic()) {
                let (ha, hb) = (h_of_atomic(a), h_of_atomic(b));
                let h = match args.op.as_str() {
                    "mono" => monotone_convolve_h(&ha, &hb),
                    "bool" => Ok(boolean_convolve_h(&ha, &hb)),
                    "ortho" => orthogonal_convolve_h(&ha, &hb),
                    "deformed" => deformed_convolve_h(transform.as_ref().unwrap(), &ha, &hb),
                    _ => unreachable!(),
                }
                .map_err(|e| AppError::Numeric(e.to_string()))?;
                match measure_from_h(&h) {
                    Ok(RecoveredMeasure::Exact(out)) => {
                        emit(&atomic_json(&out));
                        return Ok(());
                    }
                    Ok(RecoveredMeasure::Approx(_)) | Err(_) => {
                        // fall through to the moment output
                    }
                }
            }
            let (m_mu, m_nu) = (mu.moments(args.order)?, nu.moments(args.order)?);
            let out = match args.op.as_str() {
                "mono" => monotone_convolve_moments(&m_mu, &m_nu),
                "bool" => boolean_convolve_moments(&m_mu, &m_nu),
                "ortho" => orthogonal_convolve_moments(&m_mu, &m_nu),
                "deformed" => deformed_convolve_moments(transform.as_ref().unwrap(), &m_mu, &m_nu)
                    .map_err(|e| AppError::Numeric(e.to_string()))?,
                _ => unreachable!(),
            };
            emit(&moments_json(&out));
            Ok(())
        }
        "cmono" => {
            // pair specs; plain measures embed diagonally
            if let (Some("pair"), Some("pair")) = (
                mu_val.get("type").and_then(Value::as_str),
                nu_val.get("type").and_then(Value::as_str),
            ) {
                // attempt the exact rational track for atomic pair inputs
                let parts: Option<Vec<_>> = ["first", "second"]
                    .iter()
                    .flat_map(|k| [mu_val.get(k), nu_val.get(k)])
                    .map(|v| {
                        v.and_then(|v| parse_measure(v).ok())
                            .and_then(|m| m.atomic().cloned())
                    })
                    .collect();
                if let Some(p) = parts {
                    let pair = cmonotone_convolve_h(
                        &HPair::of_atomic(&p[0], &p[2]),
                        &HPair::of_atomic(&p[1], &p[3]),
                    )
                    .map_err(|e| AppError::Numeric(e.to_string()))?;
                    if let (Ok(RecoveredMeasure::Exact(first)), Ok(RecoveredMeasure::Exact(second))) =
                        (measure_from_h(&pair.first), measure_from_h(&pair.second))
                    {
                        emit(&json!({
                            "first": atomic_json(&first),
                            "second": atomic_json(&second),
                        }));
                        return Ok(());
                    }
                }
            }
            let p1 = parse_pair(&mu_val, args.order)?;
            let p2 = parse_pair(&nu_val, args.order)?;
            let out = cmonotone_convolve(
                &MeasurePair::new(p1.0, p1.1),
                &MeasurePair::new(p2.0, p2.1),
            );
            emit(&json!({
                "first": moments_json(&out.first),
                "second": moments_json(&out.second),
            }));
            Ok(())
        }
        "cfree" => {
            let p1 = parse_pair(&mu_val, args.order)?;
            let p2 = parse_pair(&nu_val, args.order)?;
            let out = cfree_convolve(
                &MeasurePair::new(p1.0, p1.1),
                &MeasurePair::new(p2.0, p2.1),
            );
            emit(&json!({
                "first": moments_json(&out.first),
                "second": moments_json(&out.second),
            }));
            Ok(())
        }
        other => Err(AppError::Validation(format!("unknown op '{other}'"))),
    }
}

fn cmd_mixed(args: MixedArgs) -> Result<(), AppError> {
    let tables = parse_json_arg(&args.tables)?;
    let arr = tables
        .as_array()
        .ok_or_else(|| AppError::Validation("--tables must be a JSON array".into()))?;
    let mut family = Vec::with_capacity(arr.len());
    for entry in arr {
        let get = |key: &str| -> Result<Vec<Q>, AppError> {
            entry
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| AppError::Validation(format!("table needs \"{key}\" array")))?
                .iter()
                .map(|v| spec::q_value(v).map_err(AppError::from))
                .collect()
        };
        family.push(AlgebraSpec::new(get("phi")?, get("psi")?));
    }
    let mut letters = Vec::new();
    for token in args.word.split_whitespace() {
        let (alg, exp) = match token.split_once('^') {
            Some((a, e)) => (a, e),
            None => (token, "1"),
        };
        let alg: usize = alg
            .parse()
            .map_err(|_| AppError::Validation(format!("bad letter '{token}'")))?;
        let exp: u32 = exp
            .parse()
            .map_err(|_| AppError::Validation(format!("bad exponent in '{token}'")))?;
        if alg == 0 {
            return Err(AppError::Validation("algebra indices are 1-based".into()));
        }
        letters.push((alg - 1, exp));
    }
    let word = Word::new(letters).map_err(|e| AppError::Validation(e.to_string()))?;
    let (phi, psi) =
        eval_pair(&word, &family).map_err(|e| AppError::Validation(e.to_string()))?;
    emit(&json!({ "phi": fmt_q(&phi), "psi": fmt_q(&psi) }));
    Ok(())
}

fn cmd_semigroup(args: SemigroupArgs) -> Result<(), AppError> {
    let a1 = parse_field(&parse_json_arg(&args.a1)?)?;
    let a2 = parse_field(&parse_json_arg(&args.a2)?)?;
    if args.t < 0.0 {
        return Err(AppError::Validation("time must be nonnegative".into()));
    }
    let grid = default_grid();
    let state = integrate_flow(&a1, &a2, args.t, &grid, 1e-12)
        .map_err(|e| AppError::Numeric(e.to_string()))?;
    let mut out = json!({
        "t": args.t,
        "grid_points": grid.len(),
        "upper_expanding": state.is_upper_expanding(1e-9),
    });
    if args.check_law {
        let half = args.t / 2.0;
        let report = verify_semigroup_law(&a1, &a2, half, half, &grid, 1e-12)
            .map_err(|e| AppError::Numeric(e.to_string()))?;
        out["law"] = json!({
            "max_f_residual": report.max_f_residual,
            "max_h_residual": report.max_h_residual,
            "pass": report.passes(1e-8),
        });
        if !report.passes(1e-8) {
            emit(&out);
            return Err(AppError::Numeric("semigroup law residual above 1e-8".into()));
        }
    }
    emit(&out);
    Ok(())
}

fn cmd_idcheck(args: IdcheckArgs) -> Result<(), AppError> {
    if args.order < 2 || !args.order.is_multiple_of(2) {
        return Err(AppError::Validation(
            "--order must be an even number >= 2 (cumulants to order 2K)".into(),
        ));
    }
    let m_mu = measure_moments(&args.mu, args.order)?;
    let m_nu = measure_moments(&args.nu, args.order)?;
    let data = cumulants::cmonotone_cumulants(&m_mu, &m_nu);
    let verdict = is_infinitely_divisible(
        &data.values,
        data.companion.as_ref().expect("pair flavor"),
        args.order / 2,
    )
    .map_err(|e| AppError::Validation(e.to_string()))?;
    emit(&json!({
        "divisible": verdict.divisible,
        "min_eig": verdict.min_eig,
        "pair_psd": verdict.pair_psd,
        "companion_psd": verdict.companion_psd,
        "tracks_agree": verdict.tracks_agree,
    }));
    if !verdict.tracks_agree {
        return Err(AppError::Numeric(
            "exact and floating-point PSD verdicts disagree".into(),
        ));
    }
    Ok(())
}

fn cmd_limit(args: LimitArgs) -> Result<(), AppError> {
    if args.n == 0 {
        return Err(AppError::Validation("--n must be at least 1".into()));
    }
    let order = args.order.min(8);
    let default_bernoulli = || {
        MomentSeq::new(
            (1..=order)
                .map(|n| {
                    if n % 2 == 0 {
                        Q::from_integer(1.into())
                    } else {
                        Q::from_integer(0.into())
                    }
                })
                .collect(),
        )
    };
    let (iterate, reference) = match args.mode.as_str() {
        "clt" => {
            let mu = match &args.mu {
                Some(m) => measure_moments(m, order)?,
                None => default_bernoulli(),
            };
            match &args.transform {
                Some(t) => {
                    let transform = parse_transform(&parse_json_arg(t)?)?;
                    let it = limits::clt_iterate(&mu, &CltMode::Deformed(transform.clone()), args.n, order)
                        .map_err(|e| AppError::Numeric(e.to_string()))?;
                    let reference = limits::deformed_limit_moments(&transform, &LimitKind::Clt, order)
                        .map_err(|e| AppError::Numeric(e.to_string()))?;
                    (it, reference)
                }
                None => {
                    let nu = match &args.nu {
                        Some(m) => measure_moments(m, order)?,
                        None => mu.clone(),
                    };
                    let reference = LimitLaw::KestenClt {
                        alpha2: mu.variance(),
                        beta2: nu.variance(),
                    }
                    .moments(order);
                    let it = limits::clt_iterate(&mu, &CltMode::Pair(nu), args.n, order)
                        .map_err(|e| AppError::Numeric(e.to_string()))?;
                    (it, reference)
                }
            }
        }
        "poisson" => {
            let lambda = spec::q_value(&Value::String(args.lambda.clone()))?;
            match &args.transform {
                Some(t) => {
                    let transform = parse_transform(&parse_json_arg(t)?)?;
                    let it = limits::poisson_iterate(
                        &lambda,
                        &PoissonMode::Deformed(transform.clone()),
                        args.n,
                        order,
                    )
                    .map_err(|e| AppError::Numeric(e.to_string()))?;
                    let reference = limits::deformed_limit_moments(
                        &transform,
                        &LimitKind::Poisson(lambda),
                        order,
                    )
                    .map_err(|e| AppError::Numeric(e.to_string()))?;
                    (it, reference)
                }
                None => {
                    let rho = spec::q_value(&Value::String(args.rho.clone()))?;
                    let reference = LimitLaw::CMonotonePoisson {
                        lambda: lambda.clone(),
                        rho: rho.clone(),
                    }
                    .moments(order);
                    let it = limits::poisson_iterate(
                        &lambda,
                        &PoissonMode::Pair(rho),
                        args.n,
                        order,
                    )
                    .map_err(|e| AppError::Numeric(e.to_string()))?;
                    (it, reference)
                }
            }
        }
        other => return Err(AppError::Validation(format!("unknown mode '{other}'"))),
    };
    let abs_errors: Vec<f64> = iterate
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).to_f64().unwrap_or(f64::NAN).abs())
        .collect();
    emit(&json!({
        "moments": q_array(iterate.values()),
        "reference": q_array(reference.values()),
        "abs_errors": abs_errors,
    }));
    Ok(())
}

fn cmd_density(args: DensityArgs) -> Result<(), AppError> {
    let law_val = parse_json_arg(&args.law)?;
    let law = parse_law(&law_val)?;
    let parts: Vec<&str> = args.grid.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::Validation("--grid must be a:b:n".into()));
    }
    let a: f64 = parts[0]
        .parse()
        .map_err(|_| AppError::Validation("bad grid start".into()))?;
    let b: f64 = parts[1]
        .parse()
        .map_err(|_| AppError::Validation("bad grid end".into()))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| AppError::Validation("bad grid count".into()))?;
    if a.is_nan() || b.is_nan() || b <= a || n < 2 {
        return Err(AppError::Validation("grid needs a < b and n >= 2".into()));
    }
    println!("# law: {}", law_name(&law_val));
    println!("x,density");
    for i in 0..n {
        let x = a + (b - a) * (i as f64) / ((n - 1) as f64);
        let d = limits::limit_law_density_at(&law, x).unwrap_or(0.0);
        println!("{x},{d}");
    }
    Ok(())
}

fn cmd_selftest() -> Result<(), AppError> {
    let results = cmono::acceptance::run_all();
    let mut all_pass = true;
    for c in &results {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {:>2}: {} ({})", c.id, c.name, c.detail);
        all_pass &= c.passed;
    }
    if all_pass {
        println!("selftest: all {} criteria passed", results.len());
        Ok(())
    } else {
        Err(AppError::Numeric("acceptance criteria failed".into()))
    }
}
