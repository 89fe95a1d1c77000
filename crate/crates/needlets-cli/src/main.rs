//! Command-line driver: certifies the analytic inputs of a weighted-interval
//! setting, builds and exercises frames against a frame directory, and runs
//! the four-route smoothness-norm comparison.
//!
//! Every command reads one TOML configuration (all keys defaulted, flags
//! overriding one key each), writes its artifacts under the output
//! directory, and is deterministic given the configuration and seed.  Exit
//! codes: 0 all checks pass, 1 a check failed, 2 configuration error,
//! 3 missing or mismatched artifact, 4 numerical divergence.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use needlets::besov::{build_corpus, equivalence_sweep, BesovParams};
use needlets::frames::{
    analyze, build_general_dual, build_needlet_pair, build_tight_frame, frame_bounds,
    frame_localization_check, reconstruction_check, synthesize, FrameKind, FrameSide,
};
use needlets::io::{
    self, fmt_f64, load_frame, load_tree, parse_spectral_csv, report_path, save_frame, save_tree,
    spectral_csv, CheckRecord, FrameManifest,
};
use needlets::nets::certify_gamma;
use needlets::spectral::{
    gaussian_bound_fit, random_band_limited, verify_markov, LPFlavor, LPSystem, SpectralVector,
};
use needlets::{Error, JacobiSetting};

use config::RunConfig;

/// Band-limited frames for weighted expansions on [-1, 1]: certification,
/// construction, analysis/synthesis, and smoothness-norm comparison.
#[derive(Parser)]
#[command(name = "needlets", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring configuration keys one-for-one; a flag wins over the
/// file, the file over the built-in defaults.
#[derive(Args)]
struct Overrides {
    /// Configuration file (TOML); built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (key output.dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (key seed).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Weight exponent at the right endpoint (key setting.alpha).
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "A")]
    alpha: Option<f64>,
    /// Weight exponent at the left endpoint (key setting.beta).
    #[arg(long, global = true, allow_hyphen_values = true, value_name = "B")]
    beta: Option<f64>,
    /// Top frame level J (key frame.levels).
    #[arg(long, global = true, value_name = "J")]
    levels: Option<usize>,
    /// Scale factor between levels (key frame.b).
    #[arg(long, global = true, value_name = "B")]
    b: Option<f64>,
    /// Frame kind: tight | needlet | general (key frame.kind).
    #[arg(long, global = true, value_name = "KIND")]
    kind: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Measures the analytic inputs of the setting and writes certify.json.
    Certify,
    /// Frame construction and use against the frame directory.
    Frame {
        #[command(subcommand)]
        action: FrameAction,
    },
    /// Four-route norm comparison over the corpus; writes CSV and summary.
    Besov,
}

#[derive(Subcommand)]
enum FrameAction {
    /// Builds the configured frame into <out>/frame.
    Build,
    /// Expands a function in the frame and writes coefficients.csv.
    Analyze {
        /// corpus:ID, mode:N, bandlimited:DEG:SEED, or a coefficient CSV path.
        #[arg(long, value_name = "SPEC")]
        function: String,
    },
    /// Reconstructs from a coefficient CSV; writes reconstructed.csv and the
    /// roundtrip residual.
    Synth {
        /// Coefficient CSV written by `frame analyze`.
        #[arg(long, value_name = "PATH")]
        coefficients: PathBuf,
    },
    /// Recomputes frame bounds, localization tables and reproduction
    /// residuals; writes frame_report.json.
    Verify,
}

/// Either a configuration problem (exit 2) or a library error (exit by
/// class).
enum Failure {
    Config(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_class(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::DegreeLimit { .. } => 2,
        Error::Artifact(_) | Error::Io(_) | Error::Shape(_) => 3,
        Error::SeriesDivergence { .. }
        | Error::TailTolerance { .. }
        | Error::LinearAlgebra(_)
        | Error::CubatureInfeasible { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if matches!(e, Error::SeriesDivergence { .. }) {
                eprintln!("hint: decrease gamma (set frame.gamma_override below the certified value)");
            }
            ExitCode::from(exit_class(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let mut cfg = config::load(cli.overrides.config.as_deref()).map_err(Failure::Config)?;
    apply_overrides(&mut cfg, &cli.overrides);
    cfg.validate().map_err(Failure::Config)?;
    match &cli.command {
        Command::Certify => cmd_certify(&cfg),
        Command::Frame { action } => match action {
            FrameAction::Build => cmd_frame_build(&cfg),
            FrameAction::Analyze { function } => cmd_frame_analyze(&cfg, function),
            FrameAction::Synth { coefficients } => cmd_frame_synth(&cfg, coefficients),
            FrameAction::Verify => cmd_frame_verify(&cfg),
        },
        Command::Besov => cmd_besov(&cfg),
    }
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(dir) = &o.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = o.seed {
        cfg.seed = config::Seed(seed);
    }
    if let Some(alpha) = o.alpha {
        cfg.setting.alpha = alpha;
    }
    if let Some(beta) = o.beta {
        cfg.setting.beta = beta;
    }
    if let Some(levels) = o.levels {
        cfg.frame.levels = levels;
    }
    if let Some(b) = o.b {
        cfg.frame.b = b;
    }
    if let Some(kind) = &o.kind {
        cfg.frame.kind = kind.clone();
    }
}

fn make_setting(cfg: &RunConfig) -> Result<JacobiSetting, Failure> {
    Ok(JacobiSetting::with_max_degree(
        cfg.setting.alpha,
        cfg.setting.beta,
        cfg.setting.max_degree,
    )?)
}

/// The setting a saved frame was built in; the manifest wins when the
/// configuration disagrees, since the frame geometry is already fixed.
fn setting_for_manifest(cfg: &RunConfig, m: &FrameManifest) -> Result<JacobiSetting, Failure> {
    if (cfg.setting.alpha - m.alpha).abs() > 1e-12 || (cfg.setting.beta - m.beta).abs() > 1e-12 {
        eprintln!(
            "note: configured setting ({}, {}) differs from the frame's ({}, {}); using the frame's",
            cfg.setting.alpha, cfg.setting.beta, m.alpha, m.beta
        );
    }
    Ok(JacobiSetting::with_max_degree(
        m.alpha,
        m.beta,
        cfg.setting.max_degree,
    )?)
}

fn frame_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.join("frame")
}

fn push_check(
    checks: &mut Vec<CheckRecord>,
    name: &str,
    parameters: serde_json::Value,
    realized: serde_json::Value,
    pass: bool,
) {
    println!("check {name}: {}", if pass { "PASS" } else { "FAIL" });
    checks.push(CheckRecord {
        name: name.into(),
        parameters,
        realized,
        pass,
    });
}

/// JSON cannot carry infinities as numbers; report them as strings.
fn json_num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

/// Value of the realized sharp constant for the linear profile on the whole
/// interval in the unweighted setting: 1 / (2 pi^2).
const POINCARE_LINEAR_FULL: f64 = 5.066_059_182_116_888_77e-2;

fn cmd_certify(cfg: &RunConfig) -> Result<bool, Failure> {
    let setting = make_setting(cfg)?;
    let c = &cfg.certify;
    let mut checks: Vec<CheckRecord> = Vec::new();

    // Volume growth: doubling exponents and a non-collapsing witness.
    let (d_est, beta_est) = setting.doubling_exponents();
    let unit_ball_min = setting.non_collapsing_inf(129);
    push_check(
        &mut checks,
        "doubling",
        json!({ "grid": 161 }),
        json!({ "d_est": d_est, "beta_est": beta_est, "unit_ball_min": unit_ball_min }),
        d_est.is_finite() && d_est > 0.0 && beta_est > 0.0 && unit_ball_min > 0.0,
    );

    // Mass conservation of the semigroup.
    let defect = verify_markov(&setting, &c.markov_times, c.markov_points, 1e-12)?;
    push_check(
        &mut checks,
        "markov_mass",
        json!({ "times": c.markov_times, "points": c.markov_points, "tol": c.markov_tol }),
        json!({ "worst_defect": defect }),
        defect < c.markov_tol,
    );

    // Two-sided Gaussian envelopes for the heat kernel.
    let fit = gaussian_bound_fit(&setting, &c.gaussian_times, c.gaussian_grid)?;
    let gaussian_ok = [fit.c1_prime, fit.c1, fit.c2_prime, fit.c2]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
    push_check(
        &mut checks,
        "gaussian_envelopes",
        json!({ "times": c.gaussian_times, "grid": c.gaussian_grid }),
        json!({
            "c1_prime": fit.c1_prime, "c1": fit.c1,
            "c2_prime": fit.c2_prime, "c2": fit.c2,
            "holder_exponent_est": fit.holder_exponent_est,
        }),
        gaussian_ok,
    );

    // Net fineness certificate from the factor-2 sampling ensemble.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.0);
    let cert = match certify_gamma(&setting, c.gamma_lambda, c.gamma_p, c.gamma_draws, &mut rng) {
        Ok(cert) => Some(cert),
        Err(Error::Domain(msg)) => {
            push_check(
                &mut checks,
                "gamma_certificate",
                json!({ "lambda": c.gamma_lambda, "p": c.gamma_p, "draws": c.gamma_draws }),
                json!({ "failure": msg }),
                false,
            );
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(cert) = &cert {
        push_check(
            &mut checks,
            "gamma_certificate",
            json!({ "lambda": c.gamma_lambda, "p": c.gamma_p, "draws": c.gamma_draws }),
            json!({ "gamma_star": cert.gamma_star, "recommended": cert.recommended }),
            cert.gamma_star > 0.0,
        );
    }

    // Poincare constants: random polynomial/interval sweep, plus the known
    // linear-profile value in the unweighted setting.
    let worst_poincare = poincare_sweep(&setting, c.poincare_draws, &mut rng)?;
    push_check(
        &mut checks,
        "poincare_sweep",
        json!({ "draws": c.poincare_draws }),
        json!({ "worst_constant": worst_poincare }),
        worst_poincare.is_finite(),
    );
    let mut linear_case = serde_json::Value::Null;
    if cfg.setting.alpha == 0.0 && cfg.setting.beta == 0.0 {
        let realized = setting.verify_poincare(|x| x, |_| 1.0, -1.0, 1.0)?;
        let pass = (realized - POINCARE_LINEAR_FULL).abs() <= 1e-10;
        linear_case = json!({ "expected": POINCARE_LINEAR_FULL, "realized": realized });
        push_check(
            &mut checks,
            "poincare_linear_profile",
            json!({ "interval": [-1.0, 1.0], "tol": 1e-10 }),
            linear_case.clone(),
            pass,
        );
    }

    let pass = checks.iter().all(|r| r.pass);
    let report = json!({
        "setting": { "alpha": cfg.setting.alpha, "beta": cfg.setting.beta },
        "seed": cfg.seed.0,
        "d_est": d_est,
        "beta_est": beta_est,
        "gamma_star": cert.as_ref().map(|c| c.gamma_star),
        "gamma_recommended": cert.as_ref().map(|c| c.recommended),
        "gaussian": {
            "c1_prime": fit.c1_prime, "c1": fit.c1,
            "c2_prime": fit.c2_prime, "c2": fit.c2,
            "holder_exponent_est": fit.holder_exponent_est,
        },
        "poincare_worst": worst_poincare,
        "poincare_linear_profile": linear_case,
        "checks": serde_json::to_value(&checks).expect("static shape"),
    });
    let path = report_path(&cfg.output.dir, "certify.json")?;
    let mut text = serde_json::to_string_pretty(&report).expect("static shape");
    text.push('\n');
    fs::write(&path, text).map_err(Error::from)?;
    println!("wrote {}", path.display());
    println!("certify: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

/// Largest realized local-Poincare constant over random polynomial profiles
/// on random subintervals.
fn poincare_sweep(
    setting: &JacobiSetting,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, Failure> {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < draws {
        let deg = 1 + rng.gen_range(0..6usize);
        let coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let u = rng.gen::<f64>() * 2.0 - 1.0;
        let v = rng.gen::<f64>() * 2.0 - 1.0;
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        if hi - lo < 0.2 {
            continue;
        }
        let poly = coeffs.clone();
        let f = move |x: f64| poly.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        let f_deriv = move |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a)
        };
        worst = worst.max(setting.verify_poincare(f, f_deriv, lo, hi)?);
        done += 1;
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// frame build / analyze / synth / verify
// ---------------------------------------------------------------------------

fn cmd_frame_build(cfg: &RunConfig) -> Result<bool, Failure> {
    let setting = make_setting(cfg)?;
    let f = &cfg.frame;
    let kind = FrameKind::parse(&f.kind)?;
    let gamma = match f.gamma_override {
        Some(g) => g,
        None => {
            // No fineness given: certify one at the top-level bandwidth.
            let lambda = f.b.powi(f.levels as i32);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.0);
            let cert = certify_gamma(&setting, lambda, 2.0, cfg.certify.gamma_draws, &mut rng)?;
            println!(
                "certified gamma* = {} at bandwidth {lambda}; building with gamma = {}",
                cert.gamma_star, cert.recommended
            );
            cert.recommended
        }
    };
    let pair = match kind {
        FrameKind::Tight => build_tight_frame(&setting, f.b, f.levels, gamma)?,
        FrameKind::NeedletDual => {
            let lp = LPSystem::new(f.b, LPFlavor::Partition)?;
            build_needlet_pair(&setting, f.b, f.levels, gamma, &lp)?
        }
        FrameKind::NaturalGeneral => {
            build_general_dual(&setting, f.b, f.levels, gamma, f.epsilon, f.sigma)?
        }
    };
    let dir = frame_dir(cfg);
    let manifest = save_frame(&setting, &pair, &dir)?;
    let n_elements: usize = (0..=pair.j_max())
        .map(|j| pair.elements(j, FrameSide::Primal).len())
        .sum();
    println!(
        "built {} frame: b = {}, levels 0..={}, gamma = {}, {n_elements} elements",
        manifest.kind.as_str(),
        manifest.b,
        manifest.j_max,
        manifest.gamma,
    );
    println!("wrote {} (content fnv1a64:{:016x})", dir.display(), manifest.content_hash);
    Ok(true)
}

/// Materializes a `--function` spec: a corpus member, a single mode, a
/// seeded random band-limited draw, or a coefficient CSV on disk.
fn resolve_function(
    cfg: &RunConfig,
    setting: &JacobiSetting,
    spec: &str,
) -> Result<SpectralVector, Failure> {
    if let Some(id) = spec.strip_prefix("corpus:") {
        let corpus = build_corpus(setting, cfg.besov.corpus, cfg.seed.0)?;
        return corpus
            .into_iter()
            .find(|e| e.id == id)
            .map(|e| e.f)
            .ok_or_else(|| {
                Failure::Config(format!(
                    "no corpus member '{id}' in a corpus of {}",
                    cfg.besov.corpus
                ))
            });
    }
    if let Some(n) = spec.strip_prefix("mode:") {
        let n: usize = n
            .parse()
            .map_err(|_| Failure::Config(format!("bad mode number in '{spec}'")))?;
        if n > setting.max_degree() {
            return Err(Error::DegreeLimit {
                requested: n,
                max: setting.max_degree(),
            }
            .into());
        }
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        return Ok(SpectralVector::new(coeffs));
    }
    if let Some(rest) = spec.strip_prefix("bandlimited:") {
        let (deg, seed) = rest
            .split_once(':')
            .ok_or_else(|| Failure::Config(format!("expected bandlimited:DEG:SEED in '{spec}'")))?;
        let deg: usize = deg
            .parse()
            .map_err(|_| Failure::Config(format!("bad degree in '{spec}'")))?;
        let seed: u64 = seed
            .parse()
            .map_err(|_| Failure::Config(format!("bad seed in '{spec}'")))?;
        if deg > setting.max_degree() {
            return Err(Error::DegreeLimit {
                requested: deg,
                max: setting.max_degree(),
            }
            .into());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(random_band_limited(
            setting,
            setting.sqrt_eigenvalue(deg),
            &mut rng,
        ));
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path)
        .map_err(|_| Error::Artifact(format!("no coefficient file at {spec}")))?;
    Ok(parse_spectral_csv(&text)?)
}

fn cmd_frame_analyze(cfg: &RunConfig, function: &str) -> Result<bool, Failure> {
    let (pair, manifest) = load_frame(&frame_dir(cfg))?;
    let setting = setting_for_manifest(cfg, &manifest)?;
    let f = resolve_function(cfg, &setting, function)?;
    let tree = analyze(&pair, &f);
    let path = report_path(&cfg.output.dir, "coefficients.csv")?;
    save_tree(&tree, &pair, &path)?;
    println!(
        "analyzed '{function}' (degree {}) over levels 0..={}: coefficient norm {}",
        f.degree(),
        pair.j_max(),
        fmt_f64(tree.l2_norm()),
    );
    println!("wrote {}", path.display());
    Ok(true)
}

fn cmd_frame_synth(cfg: &RunConfig, coefficients: &Path) -> Result<bool, Failure> {
    let (pair, _) = load_frame(&frame_dir(cfg))?;
    let tree = load_tree(coefficients, &pair)?;
    let f = synthesize(&pair, &tree)?;
    // Roundtrip residual: distance from being a fixed point of
    // analyze-then-synthesize.  For coefficients produced by `frame analyze`
    // this is exactly the frame's reproduction error on that function.
    let again = synthesize(&pair, &analyze(&pair, &f))?;
    let residual = rel_l2_diff(&f, &again);
    let out_csv = report_path(&cfg.output.dir, "reconstructed.csv")?;
    fs::write(&out_csv, spectral_csv(&f)).map_err(Error::from)?;
    let report = json!({
        "coefficients": coefficients.display().to_string(),
        "degree": f.degree(),
        "l2_norm": f.norm2(),
        "roundtrip_residual": residual,
    });
    let out_json = report_path(&cfg.output.dir, "synth_report.json")?;
    let mut text = serde_json::to_string_pretty(&report).expect("static shape");
    text.push('\n');
    fs::write(&out_json, text).map_err(Error::from)?;
    println!(
        "synthesized degree {} from {}: roundtrip residual {}",
        f.degree(),
        coefficients.display(),
        fmt_f64(residual),
    );
    println!("wrote {}", out_csv.display());
    println!("wrote {}", out_json.display());
    Ok(true)
}

fn rel_l2_diff(a: &SpectralVector, b: &SpectralVector) -> f64 {
    let n = a.coeffs().len().max(b.coeffs().len());
    let mut acc = 0.0;
    for k in 0..n {
        let d = a.coeffs().get(k).copied().unwrap_or(0.0)
            - b.coeffs().get(k).copied().unwrap_or(0.0);
        acc += d * d;
    }
    let base = a.norm2();
    if base == 0.0 {
        acc.sqrt()
    } else {
        acc.sqrt() / base
    }
}

fn localization_json(
    rows: &[needlets::frames::LocalizationRow],
) -> serde_json::Value {
    serde_json::Value::Array(
        rows.iter()
            .map(|r| json!({ "level": r.j, "sigma": r.sigma, "constant": json_num(r.constant) }))
            .collect(),
    )
}

fn cmd_frame_verify(cfg: &RunConfig) -> Result<bool, Failure> {
    let (pair, manifest) = load_frame(&frame_dir(cfg))?;
    let setting = setting_for_manifest(cfg, &manifest)?;
    let v = &cfg.verify;
    let mut checks: Vec<CheckRecord> = Vec::new();

    // Frame bounds on the widest built band.
    let j_test = pair.j_max();
    let (a_lo, b_hi) = frame_bounds(&setting, &pair, j_test, FrameSide::Primal)?;
    let bounds_pass = match pair.kind() {
        FrameKind::Tight => (a_lo - 1.0).abs() <= v.tol && (b_hi - 1.0).abs() <= v.tol,
        _ => a_lo > 0.0 && b_hi.is_finite() && a_lo <= b_hi,
    };
    push_check(
        &mut checks,
        "frame_bounds",
        json!({ "j_test": j_test, "side": "primal", "tol": v.tol }),
        json!({ "lower": a_lo, "upper": b_hi }),
        bounds_pass,
    );
    let mut dual_bounds = serde_json::Value::Null;
    if pair.kind() != FrameKind::Tight {
        let (da, db) = frame_bounds(&setting, &pair, j_test, FrameSide::Dual)?;
        dual_bounds = json!({ "lower": da, "upper": db });
        push_check(
            &mut checks,
            "dual_frame_bounds",
            json!({ "j_test": j_test, "side": "dual" }),
            dual_bounds.clone(),
            da > 0.0 && db.is_finite() && da <= db,
        );
    }

    // Localization tables per family, measured over a fixed scaled window so
    // levels are comparable.
    let window = Some(2.0 * std::f64::consts::PI);
    let mut localization = serde_json::Map::new();
    let prim = frame_localization_check(&setting, &pair, &v.sigmas, FrameSide::Primal, v.grid, window)?;
    let mut loc_pass = prim.iter().all(|r| r.constant.is_finite());
    localization.insert("primal".into(), localization_json(&prim));
    if pair.kind() != FrameKind::Tight {
        let dual = frame_localization_check(&setting, &pair, &v.sigmas, FrameSide::Dual, v.grid, window)?;
        loc_pass &= dual.iter().all(|r| r.constant.is_finite());
        localization.insert("dual".into(), localization_json(&dual));
    }
    push_check(
        &mut checks,
        "localization_finite",
        json!({ "sigmas": v.sigmas, "grid": v.grid, "scaled_window": 2.0 * std::f64::consts::PI }),
        json!({ "tables": localization.len() }),
        loc_pass,
    );

    // Reproduction of random band-limited functions through both family
    // orders.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.0);
    let residual = reconstruction_check(&setting, &pair, v.draws, &mut rng)?;
    push_check(
        &mut checks,
        "reproduction",
        json!({ "draws": v.draws, "tol": v.tol }),
        json!({ "worst_residual": residual }),
        residual <= v.tol,
    );

    let pass = checks.iter().all(|r| r.pass);
    let report = json!({
        "kind": pair.kind().as_str(),
        "b": pair.b(),
        "levels": pair.j_max(),
        "gamma": pair.gamma(),
        "bounds": { "lower": a_lo, "upper": b_hi },
        "dual_bounds": dual_bounds,
        "localization": serde_json::Value::Object(localization),
        "reproduction_residual": residual,
        "checks": serde_json::to_value(&checks).expect("static shape"),
    });
    let path = report_path(&cfg.output.dir, "frame_report.json")?;
    let mut text = serde_json::to_string_pretty(&report).expect("static shape");
    text.push('\n');
    fs::write(&path, text).map_err(Error::from)?;
    println!("wrote {}", path.display());
    println!("frame verify: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

// ---------------------------------------------------------------------------
// besov
// ---------------------------------------------------------------------------

fn cmd_besov(cfg: &RunConfig) -> Result<bool, Failure> {
    let (pair, manifest) = load_frame(&frame_dir(cfg))?;
    let setting = setting_for_manifest(cfg, &manifest)?;
    let lp = LPSystem::new(pair.b(), LPFlavor::Partition)?;
    let corpus = build_corpus(&setting, cfg.besov.corpus, cfg.seed.0)?;
    let covered = setting.degree_for_band(pair.b().powi(pair.j_max() as i32 + 1));
    let top = corpus.iter().map(|e| e.f.degree()).max().unwrap_or(0);
    if top > covered {
        eprintln!(
            "note: the frame's top band covers degrees <= {covered} but the corpus reaches \
             degree {top}; frame-route norms will miss the higher modes (build with more levels)"
        );
    }
    let mut reports = Vec::new();
    for &[s, p, q] in &cfg.besov.triples {
        let params = BesovParams::new(s, p, q)?;
        let report = equivalence_sweep(&setting, &pair, &lp, &corpus, params)?;
        println!(
            "(s = {s}, p = {p}, q = {q}): worst equivalence constant {:.6e}",
            report.worst_constant
        );
        reports.push(report);
    }

    let csv_path = report_path(&cfg.output.dir, "norm_report.csv")?;
    fs::write(&csv_path, io::equivalence_csv(&reports)).map_err(Error::from)?;

    let worst = reports.iter().fold(0.0f64, |m, r| m.max(r.worst_constant));
    let pass = !reports.is_empty()
        && reports
            .iter()
            .all(|r| r.worst_constant.is_finite() && r.worst_constant > 0.0);
    let summary = json!({
        "corpus": cfg.besov.corpus,
        "seed": cfg.seed.0,
        "rows": reports.iter().map(|r| r.rows.len()).sum::<usize>(),
        "triples": reports.iter().map(|r| json!({
            "s": r.params.s,
            "p": json_num(r.params.p),
            "q": json_num(r.params.q),
            "constants": r.constants.iter().map(|(label, lo, hi, c)| json!({
                "pair": label,
                "min_ratio": lo,
                "max_ratio": hi,
                "constant": c,
            })).collect::<Vec<_>>(),
            "worst_constant": r.worst_constant,
        })).collect::<Vec<_>>(),
        "worst_constant": worst,
        "pass": pass,
    });
    let json_path = report_path(&cfg.output.dir, "besov_summary.json")?;
    let mut text = serde_json::to_string_pretty(&summary).expect("static shape");
    text.push('\n');
    fs::write(&json_path, text).map_err(Error::from)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("besov: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}
