use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lpball::distributions::{DistributionSpec, Law, MarginalCdf, DEFAULT_REFERENCE_SIZE};
use lpball::experiment::{gr_baseline_compare, run_sandwich, sample_size_for, CompareConfig, SandwichConfig};
use lpball::oracle;
use lpball::params::{GateRule, RatioParams};
use lpball::ratio::{vc_event_frequency, VcConfig};
use lpball::seed::{derive_seed, purpose};
use lpball::theory::{run_lemma_suite, summarize, validate_sample, LemmaRow, LemmaSuiteConfig, OracleTerms};
use lpball::trim::{theta_from_epsilon, TrimSpec};
use lpball::Error;
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use crate::args::{CommonFile, CommonFlags, Compare, Format, LemmaCheck, Oracle, Quantity, RatioCheck, Sandwich};
use crate::output::{num, Emit, Table};

pub const DEFAULT_SEED: u64 = 1;
/// Sandwich constants from calibration runs (see README).
pub const SANDWICH_C0: f64 = 1.0 / 64.0;
pub const SANDWICH_C1: f64 = 8.0;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Infeasible(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MomentDoesNotExist { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<bool, Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

/// Resolved shared settings.
struct Run {
    seed: u64,
    out_dir: PathBuf,
    format: Format,
    timing: bool,
    threads: Option<usize>,
    started: Instant,
}

impl Run {
    fn runtime(&self) -> Option<f64> {
        self.timing.then(|| self.started.elapsed().as_secs_f64())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            if t == 0 {
                return usage("--threads must be >= 1");
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))
    }

    fn emit<R: serde::Serialize>(
        &self,
        command: &'static str,
        config: Value,
        summary: Value,
        table: Table,
        rows: &[R],
    ) -> Result<(), Failure> {
        let files = Emit { dir: &self.out_dir, format: self.format, command, config, summary, runtime: self.runtime() }
            .write(&table, rows)?;
        for f in files {
            println!("wrote {}", f.display());
        }
        Ok(())
    }
}

/// Reads `--config`, overlays it under the flags and resolves the shared
/// settings.
fn load<T: DeserializeOwned + Default>(common: &CommonFlags) -> Result<(T, Run), Failure> {
    let (file_common, file_cmd) = match &common.config {
        None => (CommonFile::default(), T::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
            let Value::Object(mut obj) = value else {
                return usage("config must be a JSON object");
            };
            let mut shared = Map::new();
            for key in ["seed", "out_dir", "threads", "format"] {
                if let Some(v) = obj.remove(key) {
                    shared.insert(key.into(), v);
                }
            }
            let c: CommonFile =
                serde_json::from_value(Value::Object(shared)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
            let t: T =
                serde_json::from_value(Value::Object(obj)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
            (c, t)
        }
    };
    let out_dir = common
        .out_dir
        .clone()
        .or(file_common.out_dir)
        .or_else(|| std::env::var_os("LPBALL_OUT_DIR").filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lpball-out"));
    let run = Run {
        seed: common.seed.or(file_common.seed).unwrap_or(DEFAULT_SEED),
        out_dir,
        format: common.format.or(file_common.format).unwrap_or_default(),
        timing: common.timing,
        threads: common.threads.or(file_common.threads),
        started: Instant::now(),
    };
    Ok((file_cmd, run))
}

fn dist_spec(name: &str, nu: Option<f64>, d: usize) -> Result<DistributionSpec, Failure> {
    if d == 0 {
        return usage("dimension d must be >= 1");
    }
    Ok(DistributionSpec::parse(name, nu, d)?)
}

fn check_moment(law: &Law, p: f64) -> Result<(), Failure> {
    if !law.has_moment(p) {
        return Err(Failure::Infeasible(format!("E|<X, v>|^{p} does not exist for {law}")));
    }
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn sandwich(args: Sandwich) -> Outcome {
    let (file, run) = load::<Sandwich>(&args.common)?;
    let a = args.clone().overlay(file);
    let epsilon = a.epsilon.unwrap_or(0.25);
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return usage(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    let dist = dist_spec(a.dist.as_deref().unwrap_or("gaussian"), a.nu, a.d.unwrap_or(20))?;
    let p = a.p.unwrap_or(3.0);
    let c0 = a.c0.unwrap_or(SANDWICH_C0);
    let c1 = a.c1.unwrap_or(SANDWICH_C1);
    let n = a.n.unwrap_or_else(|| sample_size_for(c1, dist.dim, epsilon));
    if n == 0 {
        return usage("sample size must be >= 1");
    }
    let cfg = SandwichConfig {
        dist,
        p,
        epsilon,
        n,
        theta: a.theta.unwrap_or_else(|| theta_from_epsilon(epsilon, c0, n)),
        directions: a.directions.unwrap_or(500),
        trials: a.trials.unwrap_or(20),
        seed: run.seed,
        pass_rate: a.pass_rate.unwrap_or(0.95),
        mc_draws: a.mc_draws.unwrap_or(10_000_000),
    };
    cfg.validate()?;
    check_moment(&dist.law, p)?;
    let rep = run.pool()?.install(|| run_sandwich(&cfg))?;
    let config = json!({
        "dist": dist.name(), "d": dist.dim, "p": p, "epsilon": epsilon, "n": cfg.n, "c0": c0, "c1": c1,
        "theta": cfg.theta, "directions": cfg.directions, "trials": cfg.trials, "pass_rate": cfg.pass_rate,
        "mc_draws": cfg.mc_draws, "seed": run.seed, "format": run.format,
    });
    let summary = json!({
        "pass": rep.pass, "pass_rate": rep.pass_rate, "trials_within": rep.trials_within,
        "trial_max_error": rep.trial_max_error, "rel_error": rep.errors,
        "truth_max_rel_std_error": rep.truth_max_std_error,
    });
    let table = Table {
        header: vec!["trial", "direction", "psi", "truth", "rel_error", "within"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.direction.to_string(),
                    num(r.psi),
                    num(r.truth),
                    num(r.rel_error),
                    (r.rel_error <= epsilon).to_string(),
                ]
            })
            .collect(),
    };
    run.emit("sandwich", config, summary, table, &rep.rows)?;
    println!(
        "sandwich: {}/{} trials within eps = {epsilon} (rate {:.3}, required {}): {}",
        rep.trials_within,
        cfg.trials,
        rep.pass_rate,
        cfg.pass_rate,
        verdict(rep.pass)
    );
    Ok(rep.pass)
}

pub fn ratio_check(args: RatioCheck) -> Outcome {
    let (file, run) = load::<RatioCheck>(&args.common)?;
    let a = args.clone().overlay(file);
    let dist = dist_spec(a.dist.as_deref().unwrap_or("gaussian"), a.nu, a.d.unwrap_or(10))?;
    let cfg = VcConfig {
        n: a.n.unwrap_or(5000),
        delta: a.delta.unwrap_or(0.05),
        lambda: a.lambda.unwrap_or(0.5),
        big_c: a.big_c.unwrap_or(2.0),
        directions: a.directions.unwrap_or(200),
        trials: a.trials.unwrap_or(50),
        seed: run.seed,
        floor_c0: a.floor_c0.unwrap_or(1.0),
        reference_size: a.reference_size.unwrap_or(DEFAULT_REFERENCE_SIZE),
    };
    let max_rate = a.max_failure_rate.unwrap_or(0.05);
    RatioParams::new(cfg.delta, cfg.lambda, cfg.big_c)?;
    if cfg.trials == 0 || cfg.n == 0 {
        return usage("trials and n must be >= 1");
    }
    let floor = lpball::ratio::delta_floor(cfg.floor_c0, dist.dim, cfg.n);
    if cfg.delta < floor {
        eprintln!("warning: delta = {} is below the floor c0 (d/N) log(eN/d) = {floor:.6}; proceeding", cfg.delta);
    }
    let rep = run.pool()?.install(|| vc_event_frequency(&dist, &cfg))?;
    let pass = rep.failure_rate <= max_rate;
    let config = json!({
        "dist": dist.name(), "d": dist.dim, "n": cfg.n, "delta": cfg.delta, "lambda": cfg.lambda,
        "big_c": cfg.big_c, "directions": cfg.directions, "coordinate_directions": 2 * dist.dim,
        "trials": cfg.trials, "floor_c0": cfg.floor_c0, "reference_size": cfg.reference_size,
        "max_failure_rate": max_rate, "seed": run.seed, "format": run.format,
    });
    let summary = json!({
        "pass": pass, "failure_rate": rep.failure_rate, "failed_trials": rep.failed_trials,
        "property_failures": rep.property_failures, "delta_floor": rep.delta_floor, "warning": rep.warning,
    });
    let table = Table {
        header: vec!["trial", "direction", "prop1_dev", "prop2_margin", "prop3_sup", "pass"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    r.direction.to_string(),
                    num(r.prop1_dev),
                    num(r.prop2_margin),
                    num(r.prop3_sup),
                    r.pass().to_string(),
                ]
            })
            .collect(),
    };
    run.emit("ratio-check", config, summary, table, &rep.rows)?;
    println!(
        "ratio-check: failure rate {:.3} over {} trials (allowed {max_rate}): {}",
        rep.failure_rate,
        cfg.trials,
        verdict(pass)
    );
    Ok(pass)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad {what} entry '{x}'"))))
        .collect()
}

fn read_sample_file(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| Failure::Usage(format!("{}:{}: not a number: '{line}'", path.display(), i + 1)))?;
        out.push(x.abs());
    }
    if out.is_empty() {
        return usage(format!("{} holds no values", path.display()));
    }
    Ok(out)
}

pub fn lemma_check(args: LemmaCheck) -> Outcome {
    let (file, run) = load::<LemmaCheck>(&args.common)?;
    let a = args.clone().overlay(file);
    let nu = a.nu.unwrap_or(6.0);
    let laws = a
        .laws
        .as_deref()
        .unwrap_or("gaussian,cube_uniform,product_laplace,product_student_t")
        .split(',')
        .map(|name| Law::parse(name.trim(), Some(nu)))
        .collect::<lpball::Result<Vec<_>>>()?;
    let ps = parse_list(a.ps.as_deref().unwrap_or("1,2,3"), "exponent")?;
    let gate = match a.gate.as_deref().unwrap_or("proof") {
        "proof" => GateRule::Proof,
        "theorem" => GateRule::Theorem,
        other => return usage(format!("unknown gate '{other}' (expected proof or theorem)")),
    };
    let cfg = LemmaSuiteConfig {
        laws,
        n: a.n.unwrap_or(10_000),
        delta: a.delta.unwrap_or(0.01),
        lambda: a.lambda.unwrap_or(0.5),
        big_c: a.big_c.unwrap_or(2.0),
        theta: a.theta.unwrap_or(0.1),
        ps,
        trials: a.trials.unwrap_or(1000),
        seed: run.seed,
        gate,
    };
    for law in &cfg.laws {
        for &p in &cfg.ps {
            check_moment(law, p)?;
        }
    }
    let rep = match &a.sample_file {
        None => run.pool()?.install(|| run_lemma_suite(&cfg))?,
        Some(path) => {
            let values = read_sample_file(path)?;
            let params = RatioParams::new(cfg.delta, cfg.lambda, cfg.big_c)?;
            let thetas = params.derive(cfg.theta)?;
            let law = cfg.laws[0];
            let spec = DistributionSpec::new(law, 1)?;
            let cdf = MarginalCdf::for_direction(&spec, &[1.0], 0, 0)?;
            let terms = cfg
                .ps
                .iter()
                .map(|&p| OracleTerms::compute(&cdf, p, &thetas, cfg.delta))
                .collect::<lpball::Result<Vec<_>>>()?;
            for &p in &cfg.ps {
                TrimSpec::new(p, cfg.theta)?.validate_for(values.len())?;
            }
            let rows = validate_sample(&values, &cdf, &terms, cfg.theta, &params, gate)?
                .into_iter()
                .map(|(p, check, c)| {
                    let s = c.values.unwrap_or(lpball::theory::Sandwich {
                        lower: f64::NAN,
                        value: f64::NAN,
                        upper: f64::NAN,
                    });
                    LemmaRow {
                        law: spec.name(),
                        trial: 0,
                        p,
                        check: check.into(),
                        verdict: c.verdict,
                        lower: s.lower,
                        value: s.value,
                        upper: s.upper,
                    }
                })
                .collect();
            summarize(rows)
        }
    };
    let pass = rep.hard_failures == 0;
    let config = json!({
        "laws": cfg.laws.iter().map(|l| l.to_string()).collect::<Vec<_>>(), "n": cfg.n, "delta": cfg.delta,
        "lambda": cfg.lambda, "big_c": cfg.big_c, "theta": cfg.theta, "ps": cfg.ps,
        "trials": if a.sample_file.is_some() { 1 } else { cfg.trials }, "gate": cfg.gate,
        "sample_file": a.sample_file.as_ref().map(|p| p.display().to_string()), "seed": run.seed, "format": run.format,
    });
    let tallies: Map<String, Value> = rep.tallies.iter().map(|(k, t)| (k.clone(), json!(t))).collect();
    let summary = json!({ "pass": pass, "hard_failures": rep.hard_failures, "tallies": tallies });
    let table = Table {
        header: vec!["law", "trial", "p", "check", "verdict", "lower", "value", "upper"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.law.clone(),
                    r.trial.to_string(),
                    num(r.p),
                    r.check.clone(),
                    r.verdict.as_str().into(),
                    num(r.lower),
                    num(r.value),
                    num(r.upper),
                ]
            })
            .collect(),
    };
    run.emit("lemma-check", config, summary, table, &rep.rows)?;
    for (name, t) in &rep.tallies {
        println!("lemma-check: {name}: pass {} fail {} not_applicable {}", t.pass, t.fail, t.not_applicable);
    }
    println!("lemma-check: {} hard failures: {}", rep.hard_failures, verdict(pass));
    Ok(pass)
}

pub fn compare(args: Compare) -> Outcome {
    let (file, run) = load::<Compare>(&args.common)?;
    let a = args.clone().overlay(file);
    let dist = dist_spec(a.dist.as_deref().unwrap_or("product_student_t"), a.nu, a.d.unwrap_or(20))?;
    let n = a.n.unwrap_or(50 * dist.dim);
    if n < 2 {
        return usage("sample size must be >= 2");
    }
    let p = a.p.unwrap_or(2.0);
    check_moment(&dist.law, p)?;
    let cfg = CompareConfig {
        dist,
        n,
        p,
        theta: a.theta.unwrap_or(2.0 / n as f64),
        directions: a.directions.unwrap_or(200),
        trials: a.trials.unwrap_or(200),
        seed: run.seed,
        mc_draws: a.mc_draws.unwrap_or(10_000_000),
    };
    let required = match a.require_win {
        Some(r) if r < 0.0 => None,
        Some(r) => Some(r),
        None => matches!(dist.law, Law::ProductStudentT { .. }).then_some(0.9),
    };
    let rep = run.pool()?.install(|| gr_baseline_compare(&cfg))?;
    let pass = required.is_none_or(|r| rep.psi_win_fraction >= r);
    let config = json!({
        "dist": dist.name(), "d": dist.dim, "n": cfg.n, "p": cfg.p, "theta": cfg.theta,
        "directions": cfg.directions, "trials": cfg.trials, "mc_draws": cfg.mc_draws,
        "require_win": required, "seed": run.seed, "format": run.format,
    });
    let summary = json!({
        "pass": pass, "psi_wins": rep.psi_wins, "psi_win_fraction": rep.psi_win_fraction,
        "psi_rel_error": rep.psi_overall, "mean_rel_error": rep.mean_overall,
    });
    let table = Table {
        header: vec!["trial", "psi_q50", "psi_q95", "psi_max", "mean_q50", "mean_q95", "mean_max", "winner"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.trial.to_string(),
                    num(r.psi.q50),
                    num(r.psi.q95),
                    num(r.psi.max),
                    num(r.mean.q50),
                    num(r.mean.q95),
                    num(r.mean.max),
                    r.winner.as_str().into(),
                ]
            })
            .collect(),
    };
    run.emit("compare", config, summary, table, &rep.rows)?;
    match required {
        Some(r) => println!(
            "compare: psi wins the 95th-percentile error in {}/{} trials (required fraction {r}): {}",
            rep.psi_wins,
            cfg.trials,
            verdict(pass)
        ),
        None => println!("compare: psi wins the 95th-percentile error in {}/{} trials", rep.psi_wins, cfg.trials),
    }
    Ok(pass)
}

pub fn oracle(args: Oracle) -> Outcome {
    let (file, run) = load::<Oracle>(&args.common)?;
    let a = args.clone().overlay(file);
    let dist = dist_spec(a.dist.as_deref().unwrap_or("gaussian"), a.nu, a.d.unwrap_or(1))?;
    let v = match &a.direction {
        Some(s) => parse_list(s, "direction")?,
        None => {
            let mut e = vec![0.0; dist.dim];
            e[0] = 1.0;
            e
        }
    };
    let reference_size = a.reference_size.unwrap_or(DEFAULT_REFERENCE_SIZE);
    let cdf = MarginalCdf::for_direction(&dist, &v, reference_size, derive_seed(run.seed, &[purpose::REFERENCE, 0]))?;
    let quantity = a.quantity.unwrap_or(Quantity::Moment);
    let p = a.p.unwrap_or(2.0);
    let t = a.t.unwrap_or(f64::INFINITY);
    let delta = a.delta.unwrap_or(0.01);
    let kappa = a.kappa.unwrap_or(0.01);
    let eta = a.eta.unwrap_or(0.05);
    let q = a.q.or_else(|| oracle::default_q(p, cdf.tail_index()));
    let mut pass = true;
    let entries: Vec<(String, Value)> = match quantity {
        Quantity::Quantile => vec![("quantile".into(), json!(oracle::quantile(&cdf, eta)?))],
        Quantity::TailMoment => {
            let r = oracle::tail_integral_moment_detailed(&cdf, p, t)?;
            vec![
                ("value".into(), json!(r.value)),
                ("error_estimate".into(), json!(r.error_estimate)),
                ("truncation_bound".into(), json!(r.truncation_bound)),
            ]
        }
        Quantity::ErrorFunctional => vec![("value".into(), json!(oracle::error_functional(&cdf, p, t, delta)?))],
        Quantity::UpperMoment => vec![("value".into(), json!(oracle::truncated_upper_moment(&cdf, p, kappa)?))],
        Quantity::Moment => vec![("value".into(), json!(oracle::moment(&cdf, p)?))],
        Quantity::TailBounds => {
            let Some(q) = q else {
                return Err(Failure::Infeasible(format!("no exponent q > 2p = {} has a finite moment", 2.0 * p)));
            };
            let r = oracle::lemma24_bounds(&cdf, p, q, kappa, delta)?;
            pass = r.all_hold();
            let mut e = vec![("threshold".into(), json!(r.threshold)), ("c_qp".into(), json!(r.c_qp))];
            for (name, ineq) in [("tail", &r.tail), ("log_bound", &r.log_bound), ("power_bound", &r.power_bound)] {
                e.push((format!("{name}_lhs"), json!(ineq.lhs)));
                e.push((format!("{name}_rhs"), json!(ineq.rhs)));
                e.push((format!("{name}_holds"), json!(ineq.holds)));
            }
            e.push(("all_hold".into(), json!(pass)));
            e
        }
    };
    let config = json!({
        "quantity": quantity, "dist": dist.name(), "d": dist.dim, "direction": v, "marginal": cdf.mode(),
        "p": p, "q": q, "eta": eta, "t": if t.is_finite() { json!(t) } else { json!("inf") },
        "delta": delta, "kappa": kappa, "reference_size": reference_size, "seed": run.seed, "format": run.format,
    });
    let summary: Map<String, Value> = entries.iter().cloned().collect();
    let table = Table {
        header: vec!["key", "value"],
        rows: entries
            .iter()
            .map(|(k, v)| vec![k.clone(), v.as_f64().map(num).unwrap_or_else(|| v.to_string())])
            .collect(),
    };
    run.emit("oracle", config, Value::Object(summary.clone()), table, &[Value::Object(summary)])?;
    for (k, v) in &entries {
        println!("oracle: {k} = {v}");
    }
    Ok(pass)
}
