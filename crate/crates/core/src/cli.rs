//! The `pax` command line: field commands, certificate checks and suites.
//!
//! Exit codes: 0 success, 1 numeric or certificate failure, 2 bad input
//! (config, flags or field files).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ApplyForm, Check, ExperimentConfig, TranslationForm};
use crate::error::PaxError;
use crate::grid::{norm_p, Field, Norm, SpatialSet, TensorGrid};
use crate::io::{read_field, write_atomic, write_field};
use crate::multiplier::{
    apply_convolution, apply_spectral, apply_theta, calderon_isometry_defect, check_admissibility, default_rays,
};
use crate::transform::{plancherel_defect, KernelStorage, TransformPlan};
use crate::translation::{convolve, translate_field, translate_kernel_form, AngularRule};
use crate::uncertainty::{
    donoho_stark_certificate, hpw_general, hpw_multiplier, hpw_transform, remark_bound, ScaleRegion,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SCHEMA: u32 = 1;
const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "pax", version, about = "Fourier-Bessel transforms, multipliers and uncertainty certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input field (PAXF, or .csv on the config grid)
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Output field, certificate file or suite directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print JSON to stdout
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward transform of a field
    Transform,
    /// Generalized translation T_x f, x from [translation]
    Translate,
    /// Convolution with the [convolve] function
    Convolve,
    /// T_σ f with σ and the form from [apply]
    MultiplierApply,
    /// Run one certificate check
    Verify {
        #[arg(value_enum)]
        which: Check,
    },
    /// Run every *.cfg in a directory and write a summary
    Suite { dir: PathBuf },
}

/// Why a command stopped: bad input (exit 2) or a numeric failure (exit 1).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numeric(_) => EXIT_FAIL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => m,
        }
    }
}

fn usage(e: PaxError) -> Failure {
    Failure::Usage(e.to_string())
}

fn numeric(e: PaxError) -> Failure {
    Failure::Numeric(e.to_string())
}

type Outcome<T> = std::result::Result<T, Failure>;

pub fn run(cli: Cli) -> i32 {
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_USAGE;
        }
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let result = match &cli.command {
        Command::Transform => cmd_transform(&cli),
        Command::Translate | Command::Convolve | Command::MultiplierApply => cmd_field_op(&cli),
        Command::Verify { which } => cmd_verify(&cli, *which),
        Command::Suite { dir } => cmd_suite(dir, cli.out.as_deref(), cli.json),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn load_config(cli: &Cli) -> Outcome<Option<ExperimentConfig>> {
    cli.config.as_deref().map(ExperimentConfig::load).transpose().map_err(usage)
}

fn require_config(cli: &Cli) -> Outcome<ExperimentConfig> {
    load_config(cli)?.ok_or_else(|| Failure::Usage("this command needs --config".into()))
}

/// The input field: `--in` when given, else the config's [function] sampled on its grid.
fn input_field(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Outcome<Field> {
    match (&cli.input, cfg) {
        (Some(p), cfg) => read_field(p, cfg.map(|c| &c.grid)).map_err(usage),
        (None, Some(c)) => Ok(c.require_function().map_err(usage)?.sample(&c.grid)),
        (None, None) => Err(Failure::Usage("give --in or a --config with a [function] section".into())),
    }
}

fn plan_for(input: &Arc<TensorGrid>, cfg: Option<&ExperimentConfig>) -> Outcome<TransformPlan> {
    let output = match cfg.and_then(|c| c.spectral.as_ref()) {
        Some(s) => s.clone(),
        None => input.clone(),
    };
    TransformPlan::with_output(input.clone(), output, KernelStorage::Precomputed).map_err(usage)
}

fn emit(cli: &Cli, value: &Value, human: &str) -> Outcome<()> {
    if cli.json {
        print_line(&to_json(value));
    } else {
        print_line(human);
    }
    Ok(())
}

/// A line to stdout; a closed pipe (`pax ... | head`) is not an error.
fn print_line(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn to_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values always serialize")
}

fn cmd_transform(cli: &Cli) -> Outcome<i32> {
    let cfg = load_config(cli)?;
    let f = input_field(cli, cfg.as_ref())?;
    let plan = plan_for(f.grid(), cfg.as_ref())?;
    let tol = cfg.as_ref().map(|c| c.tolerances.clone()).unwrap_or_default();
    let ff = plan.forward(&f).map_err(numeric)?;
    if let Some(out) = &cli.out {
        write_field(out, &ff).map_err(numeric)?;
    }
    let (defect, roundtrip) = if f.is_zero() {
        (None, None)
    } else {
        let d = plancherel_defect(&plan, &f).map_err(numeric)?;
        let back = plan.inverse(&ff).map_err(numeric)?;
        let rt = back.max_abs_diff(&f).map_err(numeric)? / norm_p(&f, Norm::Inf);
        (Some(d), Some(rt))
    };
    let pass = defect.is_none_or(|d| d <= tol.plancherel) && roundtrip.is_none_or(|r| r <= tol.roundtrip);
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
    emit(
        cli,
        &json!({
            "schema": SCHEMA,
            "plancherel_defect": defect,
            "roundtrip_error": roundtrip,
            "pass": pass,
        }),
        &format!("plancherel_defect={} roundtrip_error={}", fmt(defect), fmt(roundtrip)),
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_field_op(cli: &Cli) -> Outcome<i32> {
    let cfg = require_config(cli)?;
    let f = input_field(cli, Some(&cfg))?;
    let tr = &cfg.translation;
    let opts = tr.options();
    let rule = AngularRule::gauss_jacobi(f.grid().alpha(), tr.angular_nodes).map_err(usage)?;
    let (label, out) = match cli.command {
        Command::Translate => {
            if tr.x.is_empty() {
                return Err(Failure::Usage("[translation] x is required".into()));
            }
            let g = match tr.form {
                TranslationForm::Angular => translate_field(&f, &tr.x, &rule, &opts),
                TranslationForm::Kernel => translate_kernel_form(&f, &tr.x, &opts),
            };
            ("translate", g.map_err(numeric)?)
        }
        Command::Convolve => {
            let g = cfg
                .convolve_with
                .ok_or_else(|| Failure::Usage("[convolve] section is required".into()))?
                .sample(f.grid());
            ("convolve", convolve(&f, &g, &rule, &opts).map_err(numeric)?)
        }
        _ => {
            let m = cfg.require_multiplier().map_err(usage)?;
            let plan = plan_for(f.grid(), Some(&cfg))?;
            let s = cfg.apply.sigma;
            let g = match cfg.apply.form {
                ApplyForm::Spectral => apply_spectral(&f, m, s, &plan),
                ApplyForm::Convolution => apply_convolution(&f, m, s, &plan, &rule, &opts),
                ApplyForm::Theta => apply_theta(&f, m, s, &plan),
            };
            ("multiplier-apply", g.map_err(numeric)?)
        }
    };
    if let Some(p) = &cli.out {
        write_field(p, &out).map_err(numeric)?;
    }
    let l2 = norm_p(&out, Norm::L2);
    emit(
        cli,
        &json!({ "schema": SCHEMA, "command": label, "l2_norm": l2, "points": out.grid().len() }),
        &format!("{label}: l2_norm={l2:.6e} points={}", out.grid().len()),
    )?;
    Ok(EXIT_OK)
}

/// Result of one check on one config.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub check: Check,
    pub pass: bool,
    /// Smallest slack over the certificates, where one applies.
    pub slack: Option<f64>,
    pub ratio: Option<f64>,
    pub defect: Option<f64>,
    pub detail: String,
    pub document: Value,
}

fn grid_json(g: &TensorGrid) -> Value {
    json!({
        "alpha": g.alpha().orders(),
        "axes": g.axes().iter().map(|a| a.spec()).collect::<Vec<_>>(),
    })
}

fn envelope(cfg: &ExperimentConfig, check: Check, pass: bool, certificates: Vec<Value>) -> Value {
    json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.name,
        "check": check.name(),
        "pass": pass,
        "grid": grid_json(&cfg.grid),
        "spectral_grid": cfg.spectral.as_deref().map(grid_json),
        "scales": {
            "sigma_min": cfg.scales.sigma_min(),
            "sigma_max": cfg.scales.sigma_max(),
            "count": cfg.scales.len(),
        },
        "function": cfg.function,
        "multiplier": cfg.multiplier_desc,
        "certificates": certificates,
    })
}

fn tagged<T: Serialize>(kind: &str, v: &T) -> Value {
    let mut obj = serde_json::to_value(v).expect("certificates serialize");
    if let Value::Object(map) = &mut obj {
        map.insert("kind".into(), Value::from(kind));
    }
    obj
}

/// A refused certificate (non-admissible multiplier) fails the check; other
/// numeric errors abort it.
fn refusal(kind: &str, e: PaxError) -> Outcome<Value> {
    match e {
        PaxError::NotAdmissible(report) => Ok(json!({
            "kind": kind,
            "refused": true,
            "reason": "multiplier is not admissible",
            "report": report,
        })),
        other => Err(numeric(other)),
    }
}

fn seed() -> Outcome<u64> {
    match std::env::var("PAX_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("PAX_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn random_box(rng: &mut ChaCha8Rng, grid: &TensorGrid) -> SpatialSet {
    SpatialSet::Box(
        grid.axes()
            .iter()
            .map(|a| {
                let r = a.radius();
                let lo = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) * r };
                let hi = lo + rng.gen_range(0.05..1.0) * (r - lo);
                (lo, hi)
            })
            .collect(),
    )
}

/// Random E and S, S confined to scales above σ_min of the scale grid.
pub fn random_sets(seed: u64, count: usize, cfg: &ExperimentConfig) -> Vec<(SpatialSet, ScaleRegion)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (cfg.scales.sigma_min().ln(), cfg.scales.sigma_max().ln());
    (0..count)
        .map(|_| {
            let e = random_box(&mut rng, &cfg.grid);
            let a = rng.gen_range(lo..hi);
            let b = rng.gen_range(a..hi);
            let s = ScaleRegion {
                sigma: (a.exp(), b.exp()),
                spatial: random_box(&mut rng, &cfg.grid),
            };
            (e, s)
        })
        .collect()
}

/// Runs one check; `Err` only for bad input or numeric breakdown.
pub fn run_check(cfg: &ExperimentConfig, check: Check) -> Outcome<CheckReport> {
    let grid = &cfg.grid;
    let plan = plan_for(grid, Some(cfg))?;
    let function = || cfg.require_function().map(|f| f.sample(grid)).map_err(usage);
    let multiplier = || cfg.require_multiplier().map_err(usage);
    let mut certs = Vec::new();
    let mut pass = true;
    let mut slack: Option<f64> = None;
    let (mut ratio, mut defect) = (None, None);
    let mut detail = String::new();
    let mut note_slack = |s: f64| slack = Some(slack.map_or(s, |v| v.min(s)));
    match check {
        Check::Hpw => {
            let f = function()?;
            let c = hpw_transform(&f, &plan).map_err(numeric)?;
            pass &= c.pass;
            note_slack(c.slack);
            ratio = Some(c.ratio);
            certs.push(tagged("hpw-transform", &c));
            if let Some(m) = &cfg.multiplier {
                match hpw_multiplier(&f, m, &cfg.scales, &plan) {
                    Ok(c) => {
                        pass &= c.pass;
                        note_slack(c.slack);
                        certs.push(tagged("hpw-multiplier", &c));
                    }
                    Err(e) => {
                        pass = false;
                        detail = "multiplier refused: not admissible".into();
                        certs.push(refusal("hpw-multiplier", e)?);
                    }
                }
            }
        }
        Check::HpwGeneral => {
            let f = function()?;
            let m = multiplier()?;
            for &(a, b) in &cfg.verify.exponents {
                match hpw_general(&f, m, a, b, &cfg.scales, &plan) {
                    Ok(c) => {
                        pass &= c.pass;
                        note_slack(c.slack);
                        let mut v = tagged("hpw-general", &c);
                        v["a"] = json!(a);
                        v["b"] = json!(b);
                        certs.push(v);
                    }
                    Err(e) => {
                        pass = false;
                        detail = "multiplier refused: not admissible".into();
                        certs.push(refusal("hpw-general", e)?);
                        break;
                    }
                }
            }
        }
        Check::DonohoStark => {
            let m = multiplier()?;
            let (e, s) = match (&cfg.e, &cfg.s) {
                (Some(e), Some(s)) => (e.clone(), s.clone()),
                _ => return Err(Failure::Usage(format!("{}: donoho-stark needs e_* and s_sigma in [sets]", cfg.name))),
            };
            let f = function()?;
            let mut cases = vec![(e, s)];
            if cfg.verify.random_sets > 0 {
                cases.extend(random_sets(seed()?, cfg.verify.random_sets, cfg));
            }
            for (e, s) in &cases {
                match donoho_stark_certificate(&f, m, e, s, &cfg.scales, &plan) {
                    Ok(c) => {
                        let xi = cfg.xi.filter(|_| certs.is_empty()).unwrap_or(s.sigma.0);
                        let remark = if xi > 0.0 && s.sigma.0 >= xi {
                            Some(remark_bound(s, m, e, xi, &plan).map_err(numeric)?)
                        } else {
                            None
                        };
                        let dominates = remark.is_none_or(|r| r >= c.lhs * (1.0 - 1e-12));
                        pass &= c.pass && dominates;
                        note_slack(c.slack);
                        let mut v = tagged("donoho-stark", &c);
                        v["e"] = json!(e);
                        v["s"] = json!(s);
                        v["remark_bound"] = json!(remark);
                        v["remark_dominates"] = json!(dominates);
                        certs.push(v);
                    }
                    Err(err) => {
                        pass = false;
                        detail = "multiplier refused: not admissible".into();
                        certs.push(refusal("donoho-stark", err)?);
                        break;
                    }
                }
            }
            if detail.is_empty() {
                detail = format!("{} cases", cases.len());
            }
        }
        Check::Calderon => {
            let f = function()?;
            let m = multiplier()?;
            let report = check_admissibility(m, &cfg.scales, &default_rays(grid.dim())).map_err(numeric)?;
            let d = calderon_isometry_defect(&f, m, &cfg.scales, &plan).map_err(numeric)?;
            defect = Some(d);
            pass = d <= cfg.tolerances.calderon;
            certs.push(json!({
                "kind": "calderon",
                "defect": d,
                "tolerance": cfg.tolerances.calderon,
                "pass": pass,
                "admissibility": report,
            }));
        }
        Check::Admissibility => {
            let m = multiplier()?;
            let report = check_admissibility(m, &cfg.scales, &default_rays(grid.dim())).map_err(numeric)?;
            pass = report.admissible;
            defect = Some(report.max_deviation);
            detail = format!("deviation {:.6e}", report.max_deviation);
            certs.push(tagged("admissibility", &report));
        }
    }
    Ok(CheckReport {
        check,
        pass,
        slack,
        ratio,
        defect,
        detail,
        document: envelope(cfg, check, pass, certs),
    })
}

fn describe(r: &CheckReport) -> String {
    let mut parts = vec![format!("{}: {}", r.check.name(), if r.pass { "pass" } else { "FAIL" })];
    if let Some(s) = r.slack {
        parts.push(format!("slack={s:.6e}"));
    }
    if let Some(x) = r.ratio {
        parts.push(format!("ratio={x:.6}"));
    }
    if let Some(d) = r.defect {
        parts.push(format!("defect={d:.6e}"));
    }
    if !r.detail.is_empty() {
        parts.push(r.detail.clone());
    }
    parts.join(" ")
}

fn cmd_verify(cli: &Cli, which: Check) -> Outcome<i32> {
    let cfg = require_config(cli)?;
    let report = run_check(&cfg, which)?;
    let text = to_json(&report.document);
    if let Some(out) = &cli.out {
        write_atomic(out, format!("{text}\n").as_bytes()).map_err(numeric)?;
    }
    if cli.json {
        print_line(&text);
    } else {
        print_line(&describe(&report));
    }
    if !report.pass {
        eprintln!("{} failed: {}", which.name(), describe(&report));
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub config: String,
    pub check: String,
    pub status: String,
    pub slack: Option<f64>,
    pub ratio: Option<f64>,
    pub defect: Option<f64>,
    pub detail: String,
}

fn config_files(dir: &Path) -> Outcome<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::Usage(format!("no .cfg files in {}", dir.display())));
    }
    Ok(files)
}

fn suite_config(path: &Path, out: &Path) -> Vec<SummaryRow> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let row = |check: &str, status: &str, detail: String| SummaryRow {
        config: name.clone(),
        check: check.into(),
        status: status.into(),
        slack: None,
        ratio: None,
        defect: None,
        detail,
    };
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return vec![row("-", "config-error", e.to_string())],
    };
    let checks = if cfg.verify.checks.is_empty() { vec![Check::Hpw] } else { cfg.verify.checks.clone() };
    checks
        .into_iter()
        .map(|check| match run_check(&cfg, check) {
            Ok(r) => {
                let file = out.join(format!("{}.{}.json", cfg.name, check.name()));
                let written = write_atomic(&file, format!("{}\n", to_json(&r.document)).as_bytes());
                SummaryRow {
                    config: cfg.name.clone(),
                    check: check.name().into(),
                    status: match (&written, r.pass) {
                        (Err(_), _) => "error".into(),
                        (Ok(()), true) => "pass".into(),
                        (Ok(()), false) => "fail".into(),
                    },
                    slack: r.slack,
                    ratio: r.ratio,
                    defect: r.defect,
                    detail: match written {
                        Err(e) => e.to_string(),
                        Ok(()) => r.detail,
                    },
                }
            }
            Err(Failure::Usage(m)) => row(check.name(), "config-error", m),
            Err(Failure::Numeric(m)) => row(check.name(), "error", m),
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "check", "status", "slack", "ratio", "defect", "detail"])
        .expect("in-memory csv");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.config.as_str(),
            r.check.as_str(),
            r.status.as_str(),
            &opt(r.slack),
            &opt(r.ratio),
            &opt(r.defect),
            r.detail.as_str(),
        ])
        .expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn cmd_suite(dir: &Path, out: Option<&Path>, as_json: bool) -> Outcome<i32> {
    let files = config_files(dir)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("pax-suite"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?;
    let rows: Vec<SummaryRow> = files.par_iter().flat_map_iter(|p| suite_config(p, &out)).collect();
    write_atomic(&out.join("summary.csv"), &summary_csv(&rows)).map_err(numeric)?;
    if as_json {
        print_line(&to_json(&json!({ "schema": SCHEMA, "rows": rows })));
    } else {
        for r in &rows {
            print_line(&format!("{:<32} {:<14} {:<12} {}", r.config, r.check, r.status, r.detail));
        }
    }
    let failed: Vec<&SummaryRow> = rows.iter().filter(|r| r.status != "pass").collect();
    for r in &failed {
        eprintln!("{} / {}: {} {}", r.config, r.check, r.status, r.detail);
    }
    Ok(if rows.iter().any(|r| r.status == "config-error") {
        EXIT_USAGE
    } else if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}
