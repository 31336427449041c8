//! Argument parsing and the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use expskel_core::currents::{
    catalog, section_zeros, study_net, study_rows, EpsilonRule, PairingTable, StudyConfig,
};
use expskel_core::genericity::classify_sum;
use expskel_core::geometry::{segment_distance, Rect};
use expskel_core::pencil::{default_t_samples, find_pencil_singular, verify_pencil, wronskian_winding};
use expskel_core::section::{
    build_section, detect_clusters, generic_net, perturb_section, random_amplitudes, section_skeleton, Field, NetParams,
    SectionError,
};
use expskel_core::skeleton::{build_skeleton_2d, Skeleton2D};
use expskel_core::solve::{find_roots, verify_bounds, BoundKind, RootMode, SolveError, SolveOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dto::*;
use crate::svg::{render_svg, SvgStyle};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "expskel", version, about = "Skeletons, roots, pencils and Gaussian-net sections of exponential sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Genericity report of a sum's exponents.
    Certify(CertifyArgs),
    /// Planar skeleton in a window.
    Skeleton(SkeletonArgs),
    /// Zeros or critical points in a window.
    Roots(RootsArgs),
    /// Singular set and fibre verification of a pencil.
    Pencil(PencilArgs),
    /// Generic ε-net in a box.
    Net(NetArgs),
    /// Section over a net with cluster detection and surgery.
    Section(SectionArgs),
    /// Zero-set and skeleton pairings as k grows.
    Current(CurrentArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write JSON here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Window for the skeleton-dependent conditions, `x0,y0,x1,y1`.
    #[arg(long, value_parser = parse_box)]
    pub window: Option<Rect>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    pub window: Rect,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Zeros,
    Critical,
    CriticalZeros,
}

impl From<ModeArg> for RootMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Zeros => RootMode::Zeros,
            ModeArg::Critical => RootMode::Critical,
            ModeArg::CriticalZeros => RootMode::CriticalZeros,
        }
    }
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "zeros")]
    pub mode: ModeArg,
    /// One window per variable.
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true, required = true)]
    pub window: Vec<Rect>,
    #[arg(long, default_value_t = 64)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check that every zero lies in `U_c` of the skeleton.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PencilArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    pub window: Rect,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Containment constant; defaults to `log l + 0.1`.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true, default_value = "0,0,1,1")]
    pub domain: Rect,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub c2_target: f64,
    #[arg(long, default_value_t = 200)]
    pub max_tries: usize,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SectionArgs {
    /// Net JSON; without it a net is generated from `--domain` and `--epsilon`.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true, default_value = "0,0,1,1")]
    pub domain: Rect,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long)]
    pub k: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the amplitude phases; defaults to `--seed`.
    #[arg(long)]
    pub amplitude_seed: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub c3: f64,
    #[arg(long, default_value_t = 0.05)]
    pub r1: f64,
    #[arg(long, default_value_t = 4)]
    pub grid_density: usize,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CurrentArgs {
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true, default_value = "0,0,1,1")]
    pub domain: Rect,
    /// Fixed ε for every k.
    #[arg(long, conflicts_with = "epsilon_power")]
    pub epsilon: Option<f64>,
    /// Schedule `ε_k = k^p`.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon_power: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    pub k: Vec<f64>,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

pub fn parse_box(s: &str) -> Result<Rect, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, y0, x1, y1] if v.iter().all(|x| x.is_finite()) => Ok(Rect::new(x0, y0, x1, y1)),
        _ => Err(format!("expected four finite numbers x0,y0,x1,y1, got {s:?}")),
    }
}

/// What a command produced: the JSON document and whether its checks held.
pub struct Outcome {
    pub json: String,
    pub verified: bool,
    pub message: Option<String>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

/// serde_json appends ` at line L column C`; the path prefix already says it.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn ok(json: String) -> Outcome {
    Outcome { json, verified: true, message: None }
}

pub fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Certify(a) => certify(a),
        Command::Skeleton(a) => skeleton(a),
        Command::Roots(a) => roots(a),
        Command::Pencil(a) => pencil(a),
        Command::Net(a) => net(a),
        Command::Section(a) => section(a),
        Command::Current(a) => current(a),
    }
}

pub fn output_path(cmd: &Command) -> Option<&Path> {
    let o = match cmd {
        Command::Certify(a) => &a.out,
        Command::Skeleton(a) => &a.out,
        Command::Roots(a) => &a.out,
        Command::Pencil(a) => &a.out,
        Command::Net(a) => &a.out,
        Command::Section(a) => &a.out,
        Command::Current(a) => &a.out,
    };
    o.output.as_deref()
}

fn certify(a: &CertifyArgs) -> Result<Outcome, CliError> {
    let sum = read_json::<SumDto>(&a.input)?.to_sum().map_err(input)?;
    let class = classify_sum(&sum, a.window.as_ref()).map_err(input)?;
    Ok(ok(to_json(&CertifyDto::from(&class))))
}

fn skeleton(a: &SkeletonArgs) -> Result<Outcome, CliError> {
    let sum = read_json::<SumDto>(&a.input)?.to_sum().map_err(input)?;
    let sk = build_skeleton_2d(&sum, &a.window).map_err(input)?;
    if let Some(p) = &a.svg {
        write_file(p, &render_svg(&sk, &[], &SvgStyle::default()))?;
    }
    Ok(ok(to_json(&SkeletonDto::from(&sk))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootsOutput {
    #[serde(flatten)]
    pub roots: RootSetDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReportDto>,
}

fn roots(a: &RootsArgs) -> Result<Outcome, CliError> {
    let sum = read_json::<SumDto>(&a.input)?.to_sum().map_err(input)?;
    let opts = SolveOptions { grid_density: a.grid_density, seed: a.seed };
    let rs = match find_roots(&sum, &a.window, a.mode.into(), opts) {
        Ok(rs) => rs,
        Err(e @ (SolveError::Incomplete { .. } | SolveError::WindingNotConverged { .. })) => {
            return Ok(Outcome { json: to_json(&serde_json::json!({ "error": e.to_string() })), verified: false, message: Some(e.to_string()) });
        }
        Err(e) => return Err(input(e)),
    };
    let mut out = RootsOutput { roots: (&rs).into(), bound: None };
    let mut verified = true;
    let mut message = None;
    if let Some(c) = a.c {
        if sum.dim() != 1 {
            return Err(CliError::Input("--c needs a planar sum".into()));
        }
        let rep = verify_bounds(&sum, &a.window[0], BoundKind::ZeroContainment, c, None, a.grid_density).map_err(input)?;
        if !rep.passed {
            verified = false;
            message = Some(format!("{} zero(s) outside U_{c} of the skeleton", rep.violations.len()));
        }
        out.bound = Some((&rep).into());
    }
    if let Some(p) = &a.svg {
        if sum.dim() != 1 {
            return Err(CliError::Input("--svg needs a planar sum".into()));
        }
        let sk = build_skeleton_2d(&sum, &a.window[0]).map_err(input)?;
        write_file(p, &render_svg(&sk, &rs.planar_points(), &SvgStyle::default()))?;
    }
    Ok(Outcome { json: to_json(&out), verified, message })
}

fn pencil(a: &PencilArgs) -> Result<Outcome, CliError> {
    let p = read_json::<PencilDto>(&a.input)?.to_pencil().map_err(input)?;
    let singular = find_pencil_singular(&p, &a.window, a.grid_density.max(8) * 2, a.seed).map_err(input)?;
    let winding = wronskian_winding(&p, &a.window).map_err(input)?;
    let l = p.len().saturating_sub(1).max(1) as f64;
    let c = a.c.unwrap_or(l.ln() + 0.1);
    let ts = default_t_samples(a.samples);
    let v = verify_pencil(&p, &a.window, &ts, c, a.grid_density).map_err(input)?;
    let consistent = singular.total() as i64 == winding;
    let out = PencilOutput { singular: (&singular).into(), winding, verification: (&v).into() };
    let verified = v.passed && consistent;
    let message = (!verified).then(|| {
        if consistent {
            "pencil verification failed".to_string()
        } else {
            format!("singular total {} differs from the Wronskian winding {winding}", singular.total())
        }
    });
    Ok(Outcome { json: to_json(&out), verified, message })
}

/// Picture of a net through its unit-amplitude section skeleton.
fn net_skeleton(net: &expskel_core::section::Net) -> Result<Skeleton2D, CliError> {
    let k = (16.0 / (net.epsilon * net.epsilon)).max(1.0);
    let spec = build_section(net, &vec![Complex64::new(1.0, 0.0); net.points.len()], k).map_err(input)?;
    section_skeleton(&spec, &net.domain).map_err(input)
}

fn net(a: &NetArgs) -> Result<Outcome, CliError> {
    let params = NetParams {
        epsilon: a.epsilon,
        c1: a.c1,
        c2_target: a.c2_target,
        periodic: a.periodic,
        seed: a.seed,
        max_tries: a.max_tries,
    };
    let net = generic_net(&a.domain, &params).map_err(input)?;
    if let Some(p) = &a.svg {
        write_file(p, &render_svg(&net_skeleton(&net)?, &[], &SvgStyle::default()))?;
    }
    let message = (!net.target_met).then(|| format!("quality target missed: delta {}", net.delta));
    Ok(Outcome { json: to_json(&NetDto::from(&net)), verified: true, message })
}

fn section(a: &SectionArgs) -> Result<Outcome, CliError> {
    let net = match (&a.net, a.epsilon) {
        (Some(path), _) => read_json::<NetDto>(path)?.to_net().map_err(input)?,
        (None, Some(eps)) => {
            let params = NetParams { periodic: a.periodic, seed: a.seed, ..NetParams::new(eps) };
            generic_net(&a.domain, &params).map_err(input)?
        }
        (None, None) => return Err(CliError::Input("section needs --net or --epsilon".into())),
    };
    let amps = random_amplitudes(net.points.len(), a.amplitude_seed.unwrap_or(a.seed));
    let spec = build_section(&net, &amps, a.k).map_err(input)?;
    let domain = net.domain;
    let (sk, skeleton_ok) = match section_skeleton(&spec, &domain) {
        Ok(sk) => (Some(sk), true),
        Err(SectionError::Inconsistent { .. }) => (None, false),
        Err(e) => return Err(input(e)),
    };
    let zeros: Vec<Complex64> = match section_zeros(&spec, &domain) {
        Ok(z) => z.into_iter().map(|(z, _)| z).collect(),
        Err(e) => return Err(input(e)),
    };
    let max_dist = match &sk {
        Some(sk) => zeros
            .iter()
            .map(|&z| sk.edges.iter().map(|e| segment_distance(z, e.start, e.end)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max),
        None => f64::NAN,
    };
    let clusters = detect_clusters(&spec, a.c3, a.r1, a.grid_density).map_err(input)?;
    let (surgery, error) = match perturb_section(&spec, &clusters, a.seed) {
        Ok(s) => (Some(s), None),
        Err(e @ SectionError::SurgeryFailed { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(input(e)),
    };
    let mut margin = None;
    let mut locality = 0;
    if let Some(s) = &surgery {
        margin = (0..s.clusters.len())
            .flat_map(|i| s.ball_grid(i, 3.0 * s.r1, s.r1 / 8.0))
            .map(|z| s.c1_datum(&spec, Field::Hat, z))
            .reduce(f64::min);
        locality = domain
            .grid(81, 81)
            .filter(|&z| !s.in_support(z) && s.eval(&spec, Field::Hat, z) != s.eval(&spec, Field::Base, z))
            .count();
    }
    let margin_ok = margin.is_none_or(|m| m >= clusters.c4);
    let passed = skeleton_ok && surgery.is_some() && margin_ok && locality == 0;
    let check = SectionCheckDto {
        skeleton_matches_voronoi: skeleton_ok,
        zeros: zeros.len() as u64,
        max_zero_distance: Real(max_dist),
        scaled_zero_distance: Real(max_dist * spec.k * net.epsilon),
        surgery_margin: margin.map(Real),
        locality_violations: locality,
        passed,
    };
    if let (Some(p), Some(sk)) = (&a.svg, &sk) {
        write_file(p, &render_svg(sk, &zeros, &SvgStyle::default()))?;
    }
    let out = SectionOutput {
        section: (&spec).into(),
        clusters: (&clusters).into(),
        surgery: surgery.as_ref().map(SurgeryDto::from),
        verification: check,
        error: error.clone(),
    };
    let message = (!passed).then(|| error.unwrap_or_else(|| "section verification failed".to_string()));
    Ok(Outcome { json: to_json(&out), verified: passed, message })
}

/// The pairing table with one row per `(k, ψ)`, rows of different `k`
/// computed in parallel.
pub fn pairing_table(cfg: &StudyConfig) -> Result<PairingTable, SectionError> {
    let mut ks = cfg.k_list.clone();
    ks.sort_by(f64::total_cmp);
    if let EpsilonRule::Fixed(_) = cfg.rule {
        let net = study_net(cfg, ks.first().copied().unwrap_or(1.0))?;
        let rows: Vec<_> = ks.par_iter().map(|&k| study_rows(cfg, &net, k)).collect();
        return Ok(PairingTable { rows: rows.into_iter().flatten().collect() });
    }
    let rows: Vec<_> = ks
        .par_iter()
        .map(|&k| study_net(cfg, k).map(|net| study_rows(cfg, &net, k)))
        .collect::<Result<_, _>>()?;
    Ok(PairingTable { rows: rows.into_iter().flatten().collect() })
}

pub fn csv_of(table: &PairingTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "k",
        "epsilon",
        "zero_pairing",
        "beta_pairing",
        "gap_over_k",
        "psi",
        "omega_pairing",
        "omega_gap",
        "zero_count",
    ])?;
    for r in &table.rows {
        w.write_record([
            r.k.to_string(),
            r.epsilon.to_string(),
            r.zero_pairing.to_string(),
            r.beta_pairing.to_string(),
            r.gap_over_k.to_string(),
            r.psi.clone(),
            r.omega_pairing.to_string(),
            r.omega_gap.to_string(),
            r.zero_count.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn current(a: &CurrentArgs) -> Result<Outcome, CliError> {
    let rule = match (a.epsilon, a.epsilon_power) {
        (Some(e), None) => EpsilonRule::Fixed(e),
        (None, Some(p)) => EpsilonRule::Power(p),
        (None, None) => EpsilonRule::Fixed(0.3),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    if a.k.len() < 3 || a.k.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(CliError::Input("--k needs at least three positive values".into()));
    }
    let cfg = StudyConfig {
        domain: a.domain,
        rule,
        k_list: a.k.clone(),
        catalog: catalog(),
        periodic: a.periodic,
        seed: a.seed,
    };
    let table = pairing_table(&cfg).map_err(input)?;
    if let Some(p) = &a.csv {
        write_file(p, &csv_of(&table).map_err(input)?)?;
    }
    Ok(ok(to_json(&PairingTableDto::from(&table))))
}
