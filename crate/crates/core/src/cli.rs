//! Command-line surface: build codes, grow ancillas, verify diagrams, report overheads.
//!
//! Exit codes: 0 success or certified run, 1 verification failure or
//! uncertified run, 2 input error. Machine-readable outputs depend only on
//! the inputs and `--seed`; wall times go to a `timing.json` sidecar.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{compare_schemes, overhead, to_csv, CodeParams, OverheadReport};
use crate::codes::{estimate_css_distance, CssCode, Side};
use crate::constructions::{
    bivariate_bicycle_from, classical_library, hgp, sc_hgp, sc_seed_search, BivariateBicycleConfig, ClassicalCode,
    ScHgpSpec,
};
use crate::f2core::BitMatrix;
use crate::io::{
    read_code, read_json, read_text, write_json, write_text, CodeJson, CodeMeta, DiagramJson, IoError, MergedJson,
};
use crate::randomized::{
    construct, construct_from, measures_exactly, random_basis_targets, Checkpoint, Construction, GrowthConfig,
};
use crate::surgery::{
    hgp_ancilla_for_hgp_data, hgp_predicted_targets, homomorphism_from, measured_space, merge, verify_diagram,
    Homomorphism, HomomorphismKind, SurgerySchedule,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "surgery", version, about = "High-rate code surgery toolkit")]
pub struct Cli {
    /// Root seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a code file.
    #[command(subcommand)]
    Build(BuildCommand),
    /// Grow an ancilla measuring X logicals of a code.
    Surger(SurgerArgs),
    /// Check the commutation and chain conditions of a diagram file.
    Verify {
        #[arg(long)]
        diagram: PathBuf,
    },
    /// Overhead table for a merged code or for bare code parameters.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum BuildCommand {
    /// Hypergraph product of two library codes, e.g. `--b hamming3 --d hamming3T`.
    Hgp {
        #[arg(long)]
        b: String,
        #[arg(long)]
        d: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write `<prefix>_hx.alist` and `<prefix>_hz.alist`.
        #[arg(long)]
        alist: Option<PathBuf>,
    },
    /// Spatially coupled hypergraph product from a spec file or a seed.
    Sc {
        #[arg(long, conflicts_with_all = ["rc", "nc", "layers"])]
        spec: Option<PathBuf>,
        #[arg(long)]
        rc: Option<usize>,
        #[arg(long)]
        nc: Option<usize>,
        #[arg(long = "L")]
        layers: Option<usize>,
        /// Search this many seeds from `--seed` for the largest k under `--cap`.
        #[arg(long)]
        search: Option<u64>,
        /// Degree cap `qubit_degree,check_weight` for the search.
        #[arg(long, default_value = "6,9")]
        cap: String,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the spec that produced the code.
        #[arg(long)]
        spec_out: Option<PathBuf>,
        #[arg(long)]
        alist: Option<PathBuf>,
    },
    /// Bivariate bicycle code from a polynomial config file.
    Bb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        alist: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SurgerArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Measure this many logicals of a random logical basis.
    #[arg(long, group = "targets")]
    pub random: Option<usize>,
    /// Measure the listed rows of the stored X logical basis.
    #[arg(long, group = "targets", value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    /// Homomorphic HGP ancilla; needs `--b`, `--f`, `--d-code` and `--hom`.
    #[arg(long, group = "targets")]
    pub homomorphic: bool,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub d_code: Option<String>,
    /// `id`, `shift:S` or `puncture:I`, one per column logical.
    #[arg(long)]
    pub hom: Vec<String>,
    /// TOML file with growth settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target_d: Option<usize>,
    #[arg(long)]
    pub degree_limit: Option<usize>,
    #[arg(long)]
    pub n_trials: Option<usize>,
    #[arg(long)]
    pub max_layers: Option<usize>,
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Continue from a checkpoint instead of starting over.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Merged-code file written by `surger`.
    #[arg(long, conflicts_with = "params")]
    pub merged: Option<PathBuf>,
    /// Bare parameters `n,k,d,total_size` for the scheme models.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<usize>>,
    /// Number of measured logicals; defaults to the merged file's measured classes.
    #[arg(long)]
    pub t: Option<usize>,
    /// Sweep `t = 1..=t_max` instead of a single `t`.
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub cycles: usize,
    /// Data distance for the models; defaults to the code file's recorded distance.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<String> {
    if let Some(jobs) = cli.jobs {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let seed = cli.seed;
    match cli.command {
        Command::Build(b) => build(b, seed.unwrap_or(0)),
        Command::Surger(args) => surger(args, seed),
        Command::Verify { diagram } => verify(&diagram),
        Command::Report(args) => report(args),
    }
}

fn library(name: &str) -> CliResult<ClassicalCode> {
    classical_library(name).ok_or_else(|| CliError::Input(format!("unknown classical code {name:?}")))
}

fn write_code(out: &Path, code: &CssCode, meta: CodeMeta, alist: Option<&Path>) -> CliResult<String> {
    let file = CodeJson::from_code(code, meta);
    write_json(out, &file)?;
    if let Some(prefix) = alist {
        let name = |suffix: &str| PathBuf::from(format!("{}_{suffix}.alist", prefix.display()));
        write_text(&name("hx"), &crate::io::write_alist(&code.hx))?;
        write_text(&name("hz"), &crate::io::write_alist(&code.hz))?;
    }
    Ok(format!("[[{}, {}]] written to {}", code.n(), code.k(), out.display()))
}

fn estimated_d(code: &CssCode, seed: u64) -> Option<usize> {
    let dx = estimate_css_distance(code, Side::X, 0, 200, seed).d_upper;
    let dz = estimate_css_distance(code, Side::Z, 0, 200, seed).d_upper;
    dx.min(dz).finite()
}

fn build(cmd: BuildCommand, seed: u64) -> CliResult<String> {
    match cmd {
        BuildCommand::Hgp { b, d, out, alist } => {
            let code = hgp(&library(&b)?, &library(&d)?);
            let meta = CodeMeta {
                name: format!("hgp({b}, {d})"),
                d: estimated_d(&code, seed),
                source: Some("hypergraph product".into()),
                ..Default::default()
            };
            write_code(&out, &code, meta, alist.as_deref())
        }
        BuildCommand::Sc { spec, rc, nc, layers, search, cap, out, spec_out, alist } => {
            let spec: ScHgpSpec = match (spec, rc, nc, layers) {
                (Some(path), ..) => read_json(&path)?,
                (None, Some(r_c), Some(n_c), Some(l)) => {
                    let cap = parse_pair(&cap)?;
                    let seeds = seed..seed + search.unwrap_or(1).max(1);
                    sc_seed_search(r_c, n_c, l, cap, seeds, 50)
                        .ok_or_else(|| CliError::Input("no seed meets the degree cap".into()))?
                        .spec
                }
                _ => return Err(CliError::Input("give --spec or all of --rc, --nc, --L".into())),
            };
            let code = sc_hgp(&spec).map_err(input)?;
            if let Some(path) = spec_out {
                write_json(&path, &spec)?;
            }
            let meta = CodeMeta {
                name: format!("sc_hgp({}, {}, {})", spec.r_c, spec.n_c, spec.l),
                d: estimated_d(&code, seed),
                source: Some(format!("coupling seed {}", spec.coupling_seed)),
                ..Default::default()
            };
            write_code(&out, &code, meta, alist.as_deref())
        }
        BuildCommand::Bb { config, out, alist } => {
            let cfg: BivariateBicycleConfig = read_json(&config)?;
            let code = bivariate_bicycle_from(&cfg);
            let meta = CodeMeta {
                name: cfg.name.clone(),
                d: estimated_d(&code, seed),
                source: Some(format!("bivariate bicycle l={} m={}", cfg.l, cfg.m)),
                ..Default::default()
            };
            write_code(&out, &code, meta, alist.as_deref())
        }
    }
}

fn parse_pair(s: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<usize> = s.split(',').map(|p| p.trim().parse().map_err(input)).collect::<CliResult<_>>()?;
    match parts[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Input(format!("expected two comma-separated numbers, got {s:?}"))),
    }
}

/// Growth settings: checkpoint or TOML file or defaults, then flag overrides.
fn growth_config(
    args: &SurgerArgs,
    seed: Option<u64>,
    data_d: Option<usize>,
    ckpt: Option<&Checkpoint>,
) -> CliResult<GrowthConfig> {
    let mut cfg = match (ckpt, &args.config) {
        (Some(_), Some(_)) => return Err(CliError::Input("--resume takes its settings from the checkpoint".into())),
        (Some(c), None) => c.config.clone(),
        (None, Some(path)) => toml::from_str(&read_text(path)?).map_err(input)?,
        (None, None) => GrowthConfig { target_d: data_d.unwrap_or(0), ..GrowthConfig::default() },
    };
    match (seed, ckpt) {
        // the seed also fixes the random logical basis, so a resumed run keeps it
        (Some(s), Some(c)) if s != c.config.seed => {
            return Err(CliError::Input(format!("checkpoint was grown with seed {}", c.config.seed)))
        }
        (Some(s), _) => cfg.seed = s,
        (None, _) => {}
    }
    if let Some(d) = args.target_d {
        cfg.target_d = d;
    }
    if args.degree_limit.is_some() {
        cfg.degree_limit = args.degree_limit;
    }
    if let Some(n) = args.n_trials {
        cfg.n_trials = n;
    }
    if let Some(m) = args.max_layers {
        cfg.max_layers = m;
    }
    if args.time_budget.is_some() {
        cfg.time_budget_secs = args.time_budget;
    }
    Ok(cfg)
}

fn parse_hom(spec: &str, b: &ClassicalCode) -> CliResult<(ClassicalCode, Homomorphism)> {
    let kind = match spec.split_once(':') {
        None if spec == "id" => HomomorphismKind::Automorphism { permutation: (0..b.n()).collect() },
        Some(("shift", s)) => {
            let s: usize = s.parse().map_err(input)?;
            HomomorphismKind::Automorphism { permutation: (0..b.n()).map(|i| (i + s) % b.n()).collect() }
        }
        Some(("puncture", i)) => HomomorphismKind::Puncture { bit: i.parse().map_err(input)? },
        _ => return Err(CliError::Input(format!("unknown homomorphism {spec:?}"))),
    };
    homomorphism_from(b, kind).map_err(input)
}

struct SurgerOutput {
    construction: Option<Construction>,
    diagram: crate::surgery::SurgeryDiagram,
    data_meta: CodeMeta,
    targets: BitMatrix,
}

fn surger(args: SurgerArgs, seed: Option<u64>) -> CliResult<String> {
    let (code, meta) = read_code(&args.code)?;
    let code_ref = args.code.display().to_string();
    let ckpt: Option<Checkpoint> = args.resume.as_deref().map(read_json).transpose()?;
    let cfg = growth_config(&args, seed, meta.d, ckpt.as_ref())?;
    let out = if args.homomorphic {
        if ckpt.is_some() {
            return Err(CliError::Input("homomorphic ancillas are not grown, so there is nothing to resume".into()));
        }
        homomorphic(&args, &code, meta)?
    } else {
        let (data, targets) = match (args.random, &args.rows) {
            (Some(t), None) => random_basis_targets(&code, t, cfg.seed).map_err(input)?,
            (None, Some(rows)) => {
                if let Some(&r) = rows.iter().find(|&&r| r >= code.k()) {
                    return Err(CliError::Input(format!("row {r} outside k = {}", code.k())));
                }
                let t = code.lx.select_rows(rows);
                (code.clone(), t)
            }
            _ => return Err(CliError::Input("choose one of --random, --rows, --homomorphic".into())),
        };
        let c = match ckpt {
            Some(mut ckpt) => {
                let grown = BitMatrix::from_index_rows(data.n(), ckpt.ancilla.targets.clone());
                if !measures_exactly(&data, &grown, &targets) {
                    return Err(CliError::Input("checkpoint was grown for different targets".into()));
                }
                ckpt.config = cfg.clone();
                construct_from(&data, ckpt)
            }
            None => construct(&data, &targets, &cfg),
        }
        .map_err(input)?;
        SurgerOutput { diagram: c.diagram.clone(), construction: Some(c), data_meta: meta, targets }
    };
    let dir = &args.out_dir;
    let schedule = SurgerySchedule::new(cfg.target_d.max(1)).map_err(input)?;
    let diagram_file = DiagramJson::from_diagram(&out.diagram, &code_ref, out.data_meta.clone(), Some(schedule));
    let merged = merge(&out.diagram).map_err(input)?;
    write_json(&dir.join("diagram.json"), &diagram_file)?;
    write_json(&dir.join("merged.json"), &MergedJson::new(diagram_file.clone(), &merged))?;
    write_json(&dir.join("targets.json"), &crate::io::MatrixJson::from(&out.targets))?;
    let summary =
        format!("|A| = {}, IER = {:.4}, degree {:?}", out.diagram.ancilla_size(), merged.ier, merged.degree_profile);
    match out.construction {
        Some(c) => {
            write_json(&dir.join("report.json"), &c.report)?;
            let ckpt = Checkpoint {
                config: c.report.config.clone(),
                ancilla: c.ancilla.clone(),
                next_step: c.report.steps.last().map_or(0, |s| s.step),
                steps: c.report.steps[..c.report.steps.len().saturating_sub(1)].to_vec(),
            };
            write_json(&dir.join("checkpoint.json"), &ckpt)?;
            write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_time_secs": c.wall_time_secs }))?;
            if c.report.metrics.certified {
                Ok(format!("certified: {summary}"))
            } else {
                Err(CliError::Failed(format!(
                    "not certified (lightest witness {}): {summary}",
                    c.report.metrics.d_upper
                )))
            }
        }
        None => Ok(format!("homomorphic ancilla: {summary}")),
    }
}

fn homomorphic(args: &SurgerArgs, code: &CssCode, meta: CodeMeta) -> CliResult<SurgerOutput> {
    let need = |o: &Option<String>, flag: &str| {
        o.clone().ok_or_else(|| CliError::Input(format!("--homomorphic needs {flag}")))
    };
    let b = library(&need(&args.b, "--b")?)?;
    let f = library(&need(&args.f, "--f")?)?;
    let d_code = library(&need(&args.d_code, "--d-code")?)?;
    let expected = hgp(&b, &f);
    if expected.hx != code.hx || expected.hz != code.hz {
        return Err(CliError::Input("code file is not hgp(--b, --f)".into()));
    }
    if args.hom.is_empty() {
        return Err(CliError::Input("give at least one --hom".into()));
    }
    let parsed: Vec<(ClassicalCode, Homomorphism)> =
        args.hom.iter().map(|h| parse_hom(h, &b)).collect::<CliResult<_>>()?;
    let source = parsed[0].0.clone();
    if parsed.iter().any(|(s, _)| *s != source) {
        return Err(CliError::Input("all homomorphisms must share one source code".into()));
    }
    let homs: Vec<Homomorphism> = parsed.into_iter().map(|(_, h)| h).collect();
    let diagram = hgp_ancilla_for_hgp_data(&b, &f, &source, &homs, &d_code).map_err(input)?;
    let targets = hgp_predicted_targets(&b, &f, &homs).map_err(input)?;
    measured_space(&diagram).map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(SurgerOutput { construction: None, diagram, data_meta: meta, targets })
}

fn verify(path: &Path) -> CliResult<String> {
    let file: DiagramJson = read_json(path)?;
    let diag = file.to_diagram()?;
    let report = verify_diagram(&diag).map_err(input)?;
    if report.is_certificate() {
        Ok(format!("valid diagram: |A| = {}", diag.ancilla_size()))
    } else {
        let list = |v: &[(usize, usize)]| v.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ");
        Err(CliError::Failed(format!(
            "commutation violations: [{}]; chain violations: [{}]",
            list(&report.commutation),
            list(&report.chain)
        )))
    }
}

fn report(args: ReportArgs) -> CliResult<String> {
    let ts = |default_t: usize| -> Vec<usize> {
        match args.t_max {
            Some(m) => (1..=m).collect(),
            None => vec![args.t.unwrap_or(default_t)],
        }
    };
    let mut rows: Vec<OverheadReport> = Vec::new();
    if let Some(path) = &args.merged {
        let file: DiagramJson = read_json(path)?;
        let diag = file.to_diagram()?;
        let d = args.d.or(file.data.meta.d).ok_or_else(|| CliError::Input("distance unknown; pass --d".into()))?;
        let measured = measured_space(&diag).map_err(input)?.m_logical.rank();
        let data = &diag.data;
        let params =
            CodeParams { n: data.n(), k: data.k(), d, total_size: data.n() + data.hx.n_rows() + data.hz.n_rows() };
        for t in ts(measured) {
            let mut table = compare_schemes(&params, t, Some(diag.ancilla_size()));
            table[3] = overhead(&diag, d, t, args.cycles);
            rows.extend(table);
        }
    } else if let Some(p) = &args.params {
        let [n, k, d, total_size] = p[..] else {
            return Err(CliError::Input("--params needs n,k,d,total_size".into()));
        };
        if k == 0 {
            return Err(CliError::Input("k must be positive".into()));
        }
        for t in ts(k) {
            rows.extend(compare_schemes(&CodeParams { n, k, d, total_size }, t, None));
        }
    } else {
        return Err(CliError::Input("give --merged or --params".into()));
    }
    let csv = to_csv(&rows);
    if let Some(path) = &args.csv {
        write_text(path, &csv)?;
    }
    if let Some(path) = &args.json {
        write_json(path, &rows)?;
    }
    Ok(csv.trim_end().to_string())
}
