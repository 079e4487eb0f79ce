//! The `discavg` command line.
//!
//! Exit codes: 0 success, 1 I/O or a failed reproduction check, 2 usage
//! error, 3 domain error or escaped orbit. Settings are taken from flags,
//! then from `--config FILE` (flat `key=value`), then from defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use discavg_core::diagnostics::{GridSpec, ScanGrid, DEFAULT_ESCAPE_RADIUS, DEFAULT_N_MAX};
use discavg_core::flow::{flow_error, IntegratorConfig, DEFAULT_SUBSTEPS};
use discavg_core::interpolation::{
    lagrange_field, lagrange_weights, newton_forward_field, stirling_symmetric_field, InterpolationScheme,
};
use discavg_core::invariants::{extract_invariant, htilde2_reference, InvariantReport, SplitValuation};
use discavg_core::jet::{Caps, Valuation};
use discavg_core::maps::{
    henon_inverse_jet, henon_jet, HenonCenter, HenonParam, Iterated, MapSystem, Model, Orbit,
};
use serde::Serialize;
use serde_json::json;

use crate::error::as_usage;
use crate::manifest::RunManifest;
use crate::output::{fmt_f64, Destination, Format, Table};
use crate::repro::{self, ScanSummary, SUITES};
use crate::series_json::SeriesJson;
use crate::{config, parallel, CliError};

#[derive(Parser, Debug, Serialize)]
#[command(name = "discavg", version, about = "Discrete averaging: interpolating vector fields and adiabatic invariants")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Output file, or `csv` / `json` to pick the stdout format.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Companion JSON file (metadata or report).
    #[arg(long, global = true)]
    pub out_json: Option<PathBuf>,
    /// Worker threads for scans and drift runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key=value file with flag defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reserved; nothing is random yet.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Interpolation weights of the stencil {-n0, ..., n-n0}.
    Weights(WeightsArgs),
    /// Interpolating vector field at a point.
    Vfield(VfieldArgs),
    /// Distance between the time-one flow of X_m and the map.
    FlowError(FlowErrorArgs),
    /// Adiabatic invariant of a planar map jet.
    Invariant(InvariantArgs),
    /// Drift of an invariant along orbits.
    Drift(DriftArgs),
    /// Optimal-order scan over a grid.
    Scan(ScanArgs),
    /// Orbit points.
    Orbit(OrbitArgs),
    /// Named reproduction checks.
    Repro(ReproArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Weights(_) => "weights",
            Command::Vfield(_) => "vfield",
            Command::FlowError(_) => "flow-error",
            Command::Invariant(_) => "invariant",
            Command::Drift(_) => "drift",
            Command::Scan(_) => "scan",
            Command::Orbit(_) => "orbit",
            Command::Repro(_) => "repro",
        }
    }
}

const SUBCOMMANDS: &[&str] = &["weights", "vfield", "flow-error", "invariant", "drift", "scan", "orbit", "repro"];

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct WeightsArgs {
    #[arg(long)]
    pub n0: usize,
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// henon, rotation, exp_scalar or identity.
    #[arg(long, default_value = "henon")]
    pub model: String,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Work with the k-th iterate of the map.
    #[arg(long, default_value_t = 1)]
    pub base_iterate: u32,
}

impl ModelArgs {
    fn model(&self) -> Result<Model, CliError> {
        let dim = self.dim.map(|d| d as f64);
        Model::from_name(&self.model, |k| match k {
            "eps" => self.eps,
            "c" => self.c,
            "theta" => self.theta,
            "s" => self.s,
            "dim" => dim,
            _ => None,
        })
        .map_err(as_usage)
    }

    fn map(&self) -> Result<Iterated<Model>, CliError> {
        if self.base_iterate == 0 {
            return Err(CliError::usage("--base-iterate must be at least 1"));
        }
        Ok(Iterated::new(self.model()?, self.base_iterate))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Newton forward, stencil 0..=m.
    Forward,
    /// Stirling-Newton symmetric, stencil -m..=m (order 2m).
    Symmetric,
    /// General stencil from --n0 and --n.
    Lagrange,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SchemeArgs {
    #[arg(long, value_enum, default_value = "symmetric")]
    pub scheme: SchemeKind,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

impl SchemeArgs {
    fn build(&self, m: usize) -> Result<InterpolationScheme, CliError> {
        let s = match self.scheme {
            SchemeKind::Forward => InterpolationScheme::forward(m),
            SchemeKind::Symmetric => InterpolationScheme::symmetric(m),
            SchemeKind::Lagrange => {
                let (n0, n) = self
                    .n0
                    .zip(self.n)
                    .ok_or_else(|| CliError::usage("--scheme lagrange needs --n0 and --n"))?;
                lagrange_weights(n0, n)
            }
        };
        s.map_err(as_usage)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMethod {
    Lagrange,
    Newton,
    Stirling,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct VfieldArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Evaluation formula; newton and stirling need the matching scheme.
    #[arg(long, value_enum, default_value = "lagrange")]
    pub method: FieldMethod,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct FlowErrorArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Orders to test: `3`, `1..12` or `1,2,5`. Overrides --m.
    #[arg(long)]
    pub orders: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    pub substeps: usize,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct InvariantArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Keep eps = c - 1 as a series variable (Hénon only).
    #[arg(long)]
    pub eps_symbolic: bool,
    /// Degree cap in the phase variables.
    #[arg(long, default_value_t = 8)]
    pub cap_xy: u32,
    /// Degree cap in eps (with --eps-symbolic).
    #[arg(long, default_value_t = 1)]
    pub cap_eps: u32,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct DriftArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `from-file:PATH` (series or invariant JSON) or `builtin:htilde2`.
    #[arg(long)]
    pub h: String,
    /// Starting point; repeat for several orbits.
    #[arg(long, allow_hyphen_values = true, required = true)]
    pub point: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Values of the invariant's parameter variables, comma-separated.
    /// Defaults to the model parameters of the same name.
    #[arg(long, allow_hyphen_values = true)]
    pub h_params: Option<String>,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct ScanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub xmin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub xmax: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub ymin: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub ymax: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 50)]
    pub res: usize,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    pub nmax: usize,
    #[arg(long, default_value_t = DEFAULT_ESCAPE_RADIUS)]
    pub escape_radius: f64,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Backward steps (needs an invertible map).
    #[arg(long, default_value_t = 0)]
    pub back: usize,
    #[arg(long, default_value_t = DEFAULT_ESCAPE_RADIUS)]
    pub escape_radius: f64,
}

#[derive(Args, Debug, Serialize)]
#[command(args_override_self = true)]
pub struct ReproArgs {
    /// Suite name, or `all`. Suites that produce a series (`henon-h2`)
    /// write it to `--out`, default `<suite>.json`.
    pub name: String,
}

/// Entry point: parses `argv` (including the program name), runs, and
/// returns the exit code.
pub fn main(argv: Vec<String>) -> i32 {
    match run(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Inlines `--config` entries right after the subcommand name, so flags
/// given on the command line (which come later) override them.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config::find_config_flag(&argv)? else {
        return Ok(argv);
    };
    let extra = config::to_args(&config::load(Path::new(&path))?);
    let pos = argv
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|p| p + 2)
        .unwrap_or(argv.len());
    let mut out = argv[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos..]);
    Ok(out)
}

pub fn run(argv: Vec<String>) -> Result<i32, CliError> {
    let argv = expand_config(argv)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(0)
                }
                _ => {
                    let msg = e.render().to_string();
                    let msg = msg.trim_end();
                    Err(CliError::Usage(msg.strip_prefix("error: ").unwrap_or(msg).to_owned()))
                }
            };
        }
    };
    if cli.global.threads == Some(0) {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    let manifest = RunManifest::new(
        cli.command.name(),
        serde_json::to_value(&cli)?,
        argv.iter().skip(1).cloned().collect(),
    );
    let ctx = Ctx { global: &cli.global, manifest: &manifest };
    match &cli.command {
        Command::Weights(a) => weights(&ctx, a),
        Command::Vfield(a) => vfield(&ctx, a),
        Command::FlowError(a) => flow_error_cmd(&ctx, a),
        Command::Invariant(a) => invariant(&ctx, a),
        Command::Drift(a) => drift(&ctx, a),
        Command::Scan(a) => scan(&ctx, a),
        Command::Orbit(a) => orbit(&ctx, a),
        Command::Repro(a) => repro_cmd(&ctx, a),
    }
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    manifest: &'a RunManifest,
}

impl Ctx<'_> {
    fn dest(&self, default: Format) -> Destination {
        Destination::parse(self.global.out.as_deref(), default)
    }

    /// Writes the primary output and, for files, its manifest.
    fn emit(&self, dest: &Destination, text: &str) -> Result<(), CliError> {
        dest.write(text)?;
        if let Some(p) = dest.path() {
            self.manifest.write_next_to(p)?;
        }
        Ok(())
    }

    fn emit_json_companion(&self, value: &serde_json::Value) -> Result<(), CliError> {
        if let Some(p) = &self.global.out_json {
            crate::output::write_file(p, &serde_json::to_string_pretty(value)?)?;
            self.manifest.write_next_to(p)?;
        }
        Ok(())
    }

    fn emit_table_or_json(&self, table: &Table, json: serde_json::Value) -> Result<(), CliError> {
        let dest = self.dest(Format::Csv);
        let text = match dest.format() {
            Format::Csv => table.to_csv()?,
            Format::Json => serde_json::to_string_pretty(&json)?,
        };
        self.emit(&dest, &text)?;
        self.emit_json_companion(&json)
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad coordinate {t:?} in point {s:?}")))
        })
        .collect()
}

fn check_dim(map: &dyn MapSystem, p: &[f64]) -> Result<(), CliError> {
    if p.len() != map.dim() {
        return Err(CliError::usage(format!(
            "point has {} coordinates, {} needs {}",
            p.len(),
            map.name(),
            map.dim()
        )));
    }
    Ok(())
}

fn coord_names(dim: usize) -> Vec<String> {
    const NAMES: [&str; 4] = ["x", "y", "z", "w"];
    (0..dim)
        .map(|i| NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{i}")))
        .collect()
}

fn weights(ctx: &Ctx, a: &WeightsArgs) -> Result<i32, CliError> {
    let s = lagrange_weights(a.n0, a.n).map_err(as_usage)?;
    let ws: Vec<String> = s.weights().iter().map(ToString::to_string).collect();
    let json = json!({ "n0": a.n0, "n": a.n, "stencil": s.stencil().collect::<Vec<_>>(), "weights": ws });
    let dest = ctx.dest(Format::Csv);
    let text = match (&dest, dest.format()) {
        (Destination::Stdout(_), Format::Csv) if ctx.global.out.is_none() => ws.join(","),
        (_, Format::Csv) => {
            let mut t = Table::new(["k", "weight"]);
            for (k, w) in s.stencil().zip(&ws) {
                t.push(vec![k.to_string(), w.clone()]);
            }
            t.to_csv()?
        }
        (_, Format::Json) => serde_json::to_string_pretty(&json)?,
    };
    ctx.emit(&dest, &text)?;
    ctx.emit_json_companion(&json)?;
    Ok(0)
}

fn vfield(ctx: &Ctx, a: &VfieldArgs) -> Result<i32, CliError> {
    let map = a.model.map()?;
    let p = parse_point(&a.point)?;
    check_dim(&map, &p)?;
    let m = a.scheme.m;
    let v = match (a.method, a.scheme.scheme) {
        (FieldMethod::Lagrange, _) => lagrange_field(&map, &p, &a.scheme.build(m)?)?,
        (FieldMethod::Newton, SchemeKind::Forward) => newton_forward_field(&map, &p, m)?,
        (FieldMethod::Stirling, SchemeKind::Symmetric) => stirling_symmetric_field(&map, &p, m)?,
        _ => return Err(CliError::usage("--method newton needs --scheme forward, stirling needs symmetric")),
    };
    let names = coord_names(p.len());
    let mut header = names.clone();
    header.extend(names.iter().map(|n| format!("v{n}")));
    let mut t = Table::new(header);
    t.push(p.iter().chain(&v).map(|&x| fmt_f64(x)).collect());
    let json = json!({ "point": p, "field": v, "order": a.scheme.build(m)?.order() });
    ctx.emit_table_or_json(&t, json)?;
    Ok(0)
}

fn parse_orders(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::usage(format!("bad order list {s:?} (use 3, 1..12 or 1,2,5)"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn flow_error_cmd(ctx: &Ctx, a: &FlowErrorArgs) -> Result<i32, CliError> {
    let map = a.model.map()?;
    let p = parse_point(&a.point)?;
    check_dim(&map, &p)?;
    if a.substeps == 0 {
        return Err(CliError::usage("--substeps must be positive"));
    }
    let orders = match &a.orders {
        Some(s) => parse_orders(s)?,
        None => vec![a.scheme.m],
    };
    let cfg = IntegratorConfig { substeps: a.substeps };
    let mut t = Table::new(["m", "order", "error", "integrator_estimate", "integrator_limited"]);
    let mut rows = Vec::new();
    for m in orders {
        let scheme = a.scheme.build(m)?;
        let r = flow_error(&map, &p, &scheme, cfg)?;
        t.push(vec![
            m.to_string(),
            r.m.to_string(),
            fmt_f64(r.error),
            fmt_f64(r.integrator_estimate),
            r.integrator_limited.to_string(),
        ]);
        rows.push(json!({ "m": m, "order": r.m, "error": r.error,
            "integrator_estimate": r.integrator_estimate, "integrator_limited": r.integrator_limited }));
    }
    ctx.emit_table_or_json(&t, json!({ "point": p, "rows": rows }))?;
    Ok(0)
}

fn valuation_json(v: Valuation) -> serde_json::Value {
    match v {
        Valuation::Finite(k) => json!(k),
        Valuation::Infinite => json!("inf"),
    }
}

fn split_json(v: &SplitValuation) -> serde_json::Value {
    json!({
        "pure": valuation_json(v.pure),
        "eps_linear": valuation_json(v.eps_linear),
        "eps_higher": valuation_json(v.eps_higher),
    })
}

fn invariant_report(a: &InvariantArgs) -> Result<InvariantReport, CliError> {
    let scheme = a.scheme.build(a.scheme.m)?;
    let base = a.model.base_iterate;
    if base == 0 {
        return Err(CliError::usage("--base-iterate must be at least 1"));
    }
    if a.eps_symbolic {
        if a.model.model != "henon" {
            return Err(CliError::usage("--eps-symbolic is available for the henon model only"));
        }
        let caps = Caps::with_params(2, a.cap_xy, &[a.cap_eps]);
        let jet = henon_jet(HenonCenter::Elliptic, HenonParam::SymbolicEps, caps)?;
        let inv = henon_inverse_jet(&jet)?;
        return Ok(extract_invariant(&jet, Some(&inv), base, &scheme)?);
    }
    let model = a.model.model()?;
    let caps = Caps::phase(model.dim(), a.cap_xy);
    let jet = model.jet(&vec![0.0; model.dim()], caps)?;
    let inv = match &model {
        Model::Henon(_) => Some(henon_inverse_jet(&jet)?),
        _ => None,
    };
    Ok(extract_invariant(&jet, inv.as_deref(), base, &scheme)?)
}

fn invariant(ctx: &Ctx, a: &InvariantArgs) -> Result<i32, CliError> {
    let r = invariant_report(a)?;
    let json = json!({
        "hamiltonian": SeriesJson::from_series(&r.hamiltonian),
        "defect_valuations": split_json(&r.defect_valuations),
        "non_hamiltonian_valuations": split_json(&r.non_hamiltonian_valuations),
        "divergence": SeriesJson::from_series(&r.divergence),
        "base_iterate": a.model.base_iterate,
        "scheme": { "n0": a.scheme.build(a.scheme.m)?.n0(), "n": a.scheme.build(a.scheme.m)?.order() },
    });
    let dest = ctx.dest(Format::Json);
    if dest.format() == Format::Csv {
        return Err(CliError::usage("invariant output is JSON only"));
    }
    ctx.emit(&dest, &serde_json::to_string_pretty(&json)?)?;
    Ok(0)
}

/// Invariant from `--h`, with its variable names.
fn load_invariant(spec: &str) -> Result<SeriesJson, CliError> {
    if spec == "builtin:htilde2" {
        return Ok(SeriesJson::from_series(&htilde2_reference()));
    }
    let path = spec
        .strip_prefix("from-file:")
        .ok_or_else(|| CliError::usage("--h must be from-file:PATH or builtin:htilde2"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read invariant {path}: {e}")))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("terms").is_none() {
        if let Some(h) = value.get_mut("hamiltonian") {
            value = h.take();
        }
    }
    Ok(serde_json::from_value(value)?)
}

fn drift(ctx: &Ctx, a: &DriftArgs) -> Result<i32, CliError> {
    let map = a.model.map()?;
    let hj = load_invariant(&a.h)?;
    let h = hj.to_series()?;
    let caps = *h.caps();
    let names: Vec<&str> = caps.param_vars().iter().map(|&v| hj.vars[v].as_str()).collect();
    let params: Vec<f64> = match &a.h_params {
        Some(s) => parse_point(s)?,
        None => {
            let known = map.params();
            names
                .iter()
                .map(|n| {
                    known.iter().find(|(k, _)| k == n).map(|(_, v)| *v).ok_or_else(|| {
                        CliError::usage(format!("no model parameter named {n:?}; pass --h-params"))
                    })
                })
                .collect::<Result<_, _>>()?
        }
    };
    if params.len() != names.len() {
        return Err(CliError::usage(format!("the invariant has {} parameters", names.len())));
    }
    let points: Vec<Vec<f64>> = a.point.iter().map(|p| parse_point(p)).collect::<Result<_, _>>()?;
    for p in &points {
        check_dim(&map, p)?;
    }
    let stats = parallel::drift(&map, &h, &params, &points, a.steps, ctx.global.threads)?;
    let mut header = coord_names(map.dim());
    header.extend(["max", "mean", "steps", "escaped_at"].map(String::from));
    let mut t = Table::new(header);
    let mut rows = Vec::new();
    for (p, s) in points.iter().zip(&stats) {
        let mut row: Vec<String> = p.iter().map(|&x| fmt_f64(x)).collect();
        row.extend([
            fmt_f64(s.max),
            fmt_f64(s.mean),
            s.steps.to_string(),
            s.escaped_at.map(|k| k.to_string()).unwrap_or_default(),
        ]);
        t.push(row);
        rows.push(json!({ "point": p, "max": s.max, "mean": s.mean, "steps": s.steps, "escaped_at": s.escaped_at }));
    }
    ctx.emit_table_or_json(&t, json!({ "params": params, "orbits": rows }))?;
    Ok(0)
}

pub fn scan_table(g: &ScanGrid) -> Table {
    let mut t = Table::new(["x", "y", "opt_n", "min_G", "escaped"]);
    for c in &g.cells {
        t.push(vec![
            fmt_f64(c.x),
            fmt_f64(c.y),
            c.opt_n.map(|n| n.to_string()).unwrap_or_default(),
            c.min_g.map(fmt_f64).unwrap_or_default(),
            c.escaped.to_string(),
        ]);
    }
    t
}

fn scan(ctx: &Ctx, a: &ScanArgs) -> Result<i32, CliError> {
    let map = a.model.map()?;
    if map.dim() != 2 {
        return Err(CliError::usage("scan needs a planar map"));
    }
    let mut spec = GridSpec::new((a.xmin, a.xmax), (a.ymin, a.ymax), a.res, a.nmax).map_err(as_usage)?;
    spec.escape_radius = a.escape_radius;
    spec.validate().map_err(as_usage)?;
    let g = parallel::scan(&map, spec, ctx.global.threads)?;
    let s = ScanSummary::of(&g);
    let meta = json!({
        "model": map.name(),
        "params": map.params().into_iter().map(|(k, v)| (k.to_string(), v)).collect::<std::collections::BTreeMap<_, _>>(),
        "x_range": [a.xmin, a.xmax],
        "y_range": [a.ymin, a.ymax],
        "resolution": a.res,
        "n_max": a.nmax,
        "escape_radius": a.escape_radius,
        "order": "row-major, y rows from ymin, x within a row",
        "cells": g.cells.len(),
        "escaped": g.escaped_count(),
        "core_region_opt_n_ge_5": s.core,
        "opt_n_1": s.ones,
    });
    ctx.emit_table_or_json(&scan_table(&g), meta)?;
    Ok(0)
}

fn orbit(ctx: &Ctx, a: &OrbitArgs) -> Result<i32, CliError> {
    let map = a.model.map()?;
    let p = parse_point(&a.point)?;
    check_dim(&map, &p)?;
    let o = Orbit::compute(&map, &p, a.back, a.steps, a.escape_radius)?;
    let mut header = vec!["k".to_string()];
    header.extend(coord_names(map.dim()));
    let mut t = Table::new(header);
    for k in -(o.reach_back() as i64)..=o.reach_fwd() as i64 {
        let q = o.get(k).expect("within reach");
        let mut row = vec![k.to_string()];
        row.extend(q.iter().map(|&x| fmt_f64(x)));
        t.push(row);
    }
    let escaped = o.escape_index(a.back, a.steps);
    ctx.emit_table_or_json(&t, json!({ "point": p, "steps": a.steps, "back": a.back, "escaped_at": escaped }))?;
    match escaped {
        Some(k) => Err(CliError::Domain(format!("orbit left the escape box after iterate {k}"))),
        None => Ok(0),
    }
}

fn repro_cmd(ctx: &Ctx, a: &ReproArgs) -> Result<i32, CliError> {
    let names: Vec<&str> = if a.name == "all" { SUITES.to_vec() } else { vec![a.name.as_str()] };
    let mut reports = Vec::new();
    for n in names {
        let r = repro::run(n, ctx.global.threads)?;
        for c in &r.checks {
            println!("{} [{}]", c.line(), r.suite);
        }
        if let Some(series) = &r.series {
            let out = ctx.global.out.clone().unwrap_or_else(|| format!("{}.json", r.suite));
            let dest = Destination::parse(Some(&out), Format::Json);
            ctx.emit(&dest, &serde_json::to_string_pretty(&SeriesJson::from_series(series))?)?;
        }
        reports.push(r);
    }
    ctx.emit_json_companion(&serde_json::to_value(&reports)?)?;
    Ok(if reports.iter().all(|r| r.passed()) { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn orders() {
        assert_eq!(parse_orders("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_orders("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_orders("2,5").unwrap(), vec![2, 5]);
        assert!(parse_orders("3..1").is_err());
    }

    #[test]
    fn config_goes_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        std::fs::write(&cfg, "res=7\n").unwrap();
        let argv = args(&format!("discavg --threads 2 scan --config {} --res 9", cfg.display()));
        let out = expand_config(argv).unwrap();
        let i = out.iter().position(|a| a == "scan").unwrap();
        assert_eq!(&out[i + 1..i + 3], ["--res", "7"]);
        let cli = Cli::try_parse_from(&out).unwrap();
        match cli.command {
            Command::Scan(s) => assert_eq!(s.res, 9),
            _ => unreachable!(),
        }
    }

    #[test]
    fn negative_values_parse() {
        let cli = Cli::try_parse_from(args("discavg scan --eps -1e-3 --xmin -0.5 --base-iterate 4")).unwrap();
        match cli.command {
            Command::Scan(s) => {
                assert_eq!(s.model.eps, Some(-1e-3));
                assert_eq!(s.xmin, -0.5);
            }
            _ => unreachable!(),
        }
    }
}
