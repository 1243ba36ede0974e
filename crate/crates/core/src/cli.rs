//! The `ymh` command line.

use crate::checks::{grad_check, magic_check, GradSuite};
use crate::config::{sha256_hex, Config, SamplerMode};
use crate::error::{Error, Result};
use crate::groups::{Family, ModelParams, Target};
use crate::sampler::{
    collect_samples, iid_product_sample, read_snapshot, rhat, write_snapshot, SnapshotHeader,
};
use crate::stringops::{enumerate_set, Anchor, OpKind, SiteTarget};
use crate::strings::{
    parse_edge, parse_vertex, render_collection, render_edge, render_string, LatticeString, Loop,
};
use crate::verifier::{
    catalog_jobs, render_report, run_batch, BatchOptions, BatchReport, Catalog, CoefficientTable,
    Equation, Job, Mutation, SampleSource,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser, Debug)]
#[command(
    name = "ymh",
    version,
    about = "Lattice Yang-Mills-Higgs strings and loop-equation checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// TOML config, or a run manifest to reproduce.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Strings or catalog file.
    #[arg(long, global = true)]
    pub catalog: Option<PathBuf>,
    /// Output directory for reports, samples and the manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub z_threshold: Option<f64>,
    /// Print the resolved config and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    /// Line-delimited JSON records instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lattice and group summary.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// String operations.
    Ops {
        #[command(subcommand)]
        cmd: OpsCmd,
    },
    /// Contraction identities.
    Magic {
        #[command(subcommand)]
        cmd: MagicCmd,
    },
    /// Finite-difference gradient checks.
    Grad {
        #[command(subcommand)]
        cmd: GradCmd,
    },
    /// Draw samples and write a snapshot.
    Sample,
    /// Loop-equation verification.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    Info,
}

#[derive(Args, Debug, Clone)]
pub struct AnchorArgs {
    /// Collection name in the catalog (`#1` for the first unnamed group).
    #[arg(long, default_value = "#1")]
    pub collection: String,
    /// Anchor edge, e.g. "(0,0) +x".
    #[arg(long, conflicts_with = "site")]
    pub edge: Option<String>,
    /// Anchor vertex, e.g. "(0,0)".
    #[arg(long)]
    pub site: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum OpsCmd {
    Enumerate {
        #[command(flatten)]
        anchor: AnchorArgs,
        /// Comma-separated operation kinds; all kinds of the anchor type when omitted.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MagicCmd {
    Check {
        /// Use this λ in the closed forms.
        #[arg(long, hide = true)]
        inject_lambda: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum GradCmd {
    Check,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SourceArgs {
    /// Verify on a stored snapshot instead of sampling.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Scale one coefficient row, `class=factor`.
    #[arg(long, hide = true)]
    pub corrupt: Option<String>,
    /// Also report the effect of scaling rows, `class=factor`.
    #[arg(long)]
    pub mutate: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    Edge {
        #[command(flatten)]
        anchor: AnchorArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    Site {
        #[command(flatten)]
        anchor: AnchorArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    Batch {
        #[command(flatten)]
        source: SourceArgs,
    },
}

/// Exit status: 0 success, 1 a check failed, 2 bad input.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut out = String::new();
    let code = match execute(&cli, &mut out) {
        Ok(ok) => {
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    print!("{out}");
    code
}

fn resolve_config(g: &GlobalArgs) -> Result<Config> {
    let mut c = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = g.seed {
        c.seed = s;
    }
    if let Some(t) = g.threads {
        c.threads = t;
    }
    if let Some(z) = g.z_threshold {
        c.z_threshold = z;
    }
    c.validate()?;
    Ok(c)
}

/// Run a parsed command, appending its printed output to `out`. Returns whether checks passed.
pub fn execute(cli: &Cli, out: &mut String) -> Result<bool> {
    let cfg = resolve_config(&cli.global)?;
    if cli.global.print_config {
        out.push_str(&cfg.to_toml());
        return Ok(true);
    }
    let Some(command) = &cli.command else {
        return Err(Error::Usage("no command given; see --help".into()));
    };
    if cfg.threads > 0 {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let started = unix_now();
    let mut run = Run {
        cfg: &cfg,
        global: &cli.global,
        files: Vec::new(),
    };
    let ok = match command {
        Command::Lattice {
            cmd: LatticeCmd::Info,
        } => lattice_info(&cfg, out)?,
        Command::Ops {
            cmd: OpsCmd::Enumerate { anchor, kinds },
        } => ops_enumerate(&mut run, anchor, kinds.as_deref(), out)?,
        Command::Magic {
            cmd: MagicCmd::Check { inject_lambda },
        } => magic(&mut run, *inject_lambda, out)?,
        Command::Grad {
            cmd: GradCmd::Check,
        } => grad(&mut run, out)?,
        Command::Sample => sample(&mut run, out)?,
        Command::Verify { cmd } => verify(&mut run, cmd, out)?,
    };
    if let Some(dir) = &cli.global.out {
        write_manifest(dir, &run, started, ok)?;
    }
    Ok(ok)
}

struct Run<'a> {
    cfg: &'a Config,
    global: &'a GlobalArgs,
    files: Vec<String>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        if let Some(dir) = &self.global.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), contents)?;
            self.files.push(name.to_string());
        }
        Ok(())
    }

    fn catalog(&self, params: &ModelParams) -> Result<(String, Catalog)> {
        let path = self
            .global
            .catalog
            .as_ref()
            .ok_or_else(|| Error::Usage("--catalog is required".into()))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read catalog {}: {e}", path.display())))?;
        let cat = Catalog::parse(&text, &params.geometry)?;
        Ok((text, cat))
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    config: &'a Config,
    config_sha256: String,
    seed: u64,
    threads: usize,
    catalog: Option<CatalogRef>,
    started_unix: u64,
    finished_unix: u64,
    outputs: &'a [String],
    pass: bool,
}

#[derive(Serialize)]
struct CatalogRef {
    path: String,
    sha256: String,
}

fn write_manifest(dir: &Path, run: &Run, started: u64, pass: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let catalog = match &run.global.catalog {
        Some(p) => Some(CatalogRef {
            path: p.display().to_string(),
            sha256: sha256_hex(&std::fs::read(p)?),
        }),
        None => None,
    };
    let m = Manifest {
        tool: "ymh",
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        config: run.cfg,
        config_sha256: run.cfg.digest(),
        seed: run.cfg.seed,
        threads: run.cfg.threads,
        catalog,
        started_unix: started,
        finished_unix: unix_now(),
        outputs: &run.files,
        pass,
    };
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

fn lattice_info(cfg: &Config, out: &mut String) -> Result<bool> {
    let p = cfg.params()?;
    let g = &p.geometry;
    let gr = &p.group;
    let _ = writeln!(out, "lattice    d = {}  L = {}", g.dim(), g.side());
    let _ = writeln!(out, "vertices   {}", g.num_vertices());
    let _ = writeln!(out, "links      {}", g.num_links());
    let _ = writeln!(out, "plaquettes {}", g.num_plaquettes());
    let _ = writeln!(
        out,
        "group      {}  dim {}  q = {}",
        gr,
        gr.dim_algebra(),
        gr.q()
    );
    let _ = writeln!(
        out,
        "constants  c_g = {}  lambda = {}  mu = {}  nu = {}",
        gr.c_g(),
        gr.lambda(),
        gr.mu(),
        gr.nu()
    );
    let _ = writeln!(
        out,
        "target     {}  c_M = {}",
        crate::checks::target_name(&p.higgs.target),
        p.higgs.c_m()
    );
    let _ = writeln!(out, "couplings  beta = {}  kappa = {}", p.beta, p.kappa);
    let _ = writeln!(out, "coefficient table:");
    for (c, v) in CoefficientTable::from_params(&p).rows() {
        let _ = writeln!(out, "  {c:<10} {v}");
    }
    Ok(true)
}

fn anchor_of(params: &ModelParams, a: &AnchorArgs) -> Result<Anchor> {
    match (&a.edge, &a.site) {
        (Some(e), None) => Ok(Anchor::Edge(parse_edge(e, &params.geometry)?)),
        (None, Some(x)) => Ok(Anchor::Site(parse_vertex(x, &params.geometry)?)),
        _ => Err(Error::Usage("give exactly one of --edge or --site".into())),
    }
}

#[derive(Serialize)]
struct OpRecord {
    kind: String,
    sign: crate::stringops::Sign,
    class: String,
    coefficient: f64,
    weight: f64,
    locations: Vec<(usize, usize)>,
    incidences: Vec<(usize, crate::stringops::Endpoint)>,
    plaquette: Option<String>,
    edge: Option<String>,
    result: String,
}

fn ops_enumerate(
    run: &mut Run,
    a: &AnchorArgs,
    kinds: Option<&[String]>,
    out: &mut String,
) -> Result<bool> {
    let p = run.cfg.params()?;
    let g = &p.geometry;
    let (_, cat) = run.catalog(&p)?;
    let s = &cat.collection(&a.collection)?.strings;
    let anchor = anchor_of(&p, a)?;
    let kinds: Vec<OpKind> = match kinds {
        Some(ks) => ks
            .iter()
            .filter(|k| !k.trim().is_empty())
            .map(|k| {
                OpKind::parse(k.trim())
                    .ok_or_else(|| Error::Usage(format!("unknown operation kind '{k}'")))
            })
            .collect::<Result<_>>()?,
        None => match anchor {
            Anchor::Edge(_) => OpKind::EDGE_KINDS.to_vec(),
            Anchor::Site(_) => vec![
                OpKind::Extension,
                OpKind::ExpansionAtSite,
                OpKind::ExpansionNull(1),
                OpKind::Gluing,
                OpKind::RGluing,
            ],
        },
    };
    let target = SiteTarget {
        sphere: p.higgs.is_sphere(),
        max_null: p.higgs.max_null(),
    };
    let entries = enumerate_set(g, s, anchor, &kinds, target)?;
    let table = CoefficientTable::from_params(&p);
    let mut jsonl = String::new();
    let _ = writeln!(
        out,
        "{} operations on {}",
        entries.len(),
        render_collection(g, s)
    );
    for en in &entries {
        let rec = OpRecord {
            kind: en.kind.name(),
            sign: en.sign,
            class: en.coefficient_class().to_string(),
            coefficient: en.sign.factor() * en.weight * table.get(en.coefficient_class()),
            weight: en.weight,
            locations: en
                .locations
                .iter()
                .map(|l| (l.component, l.index))
                .collect(),
            incidences: en
                .incidences
                .iter()
                .map(|i| (i.component, i.endpoint))
                .collect(),
            plaquette: en.plaquette.map(|pl| {
                render_string(g, &LatticeString::Loop(Loop::from_cyclic_word(&pl.edges)))
            }),
            edge: en.edge.map(|e| render_edge(g, e)),
            result: render_collection(g, &en.result),
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Config(e.to_string()))?;
        let _ = writeln!(jsonl, "{line}");
        if !run.global.json {
            let loc: Vec<String> = rec
                .locations
                .iter()
                .map(|(c, i)| format!("{c}:{i}"))
                .collect();
            let inc: Vec<String> = rec
                .incidences
                .iter()
                .map(|(c, e)| format!("{c}:{}", format!("{e:?}").to_lowercase()))
                .collect();
            let _ = writeln!(
                out,
                "{:<20} {:<8} {:<9} {:+.4}  at [{}]  =>  {}",
                rec.kind,
                format!("{:?}", rec.sign).to_lowercase(),
                rec.class,
                rec.coefficient,
                if loc.is_empty() {
                    inc.join(" ")
                } else {
                    loc.join(" ")
                },
                rec.result
            );
        }
    }
    if run.global.json {
        out.clear();
        out.push_str(&jsonl);
    }
    run.write("ops.jsonl", jsonl.as_bytes())?;
    Ok(true)
}

fn magic(run: &mut Run, inject_lambda: Option<f64>, out: &mut String) -> Result<bool> {
    let c = &run.cfg.checks;
    let mut reports = Vec::new();
    for family in [Family::SO, Family::U, Family::SU] {
        reports.push(magic_check(
            &[family],
            c.n_min..=c.n_max,
            c.magic_inputs,
            run.cfg.seed,
            inject_lambda,
        )?);
    }
    let pass = reports.iter().all(|r| r.pass);
    let mut text = String::new();
    for r in &reports {
        for row in &r.rows {
            let _ = writeln!(
                text,
                "{:<8} {:<16} {:.3e}",
                row.group, row.identity, row.max_residual
            );
        }
    }
    let worst = reports.iter().map(|r| r.max_residual()).fold(0.0, f64::max);
    let _ = writeln!(
        text,
        "max residual {worst:.3e}  {}",
        if pass { "PASS" } else { "FAIL" }
    );
    let json = serde_json::to_string(&reports).map_err(|e| Error::Config(e.to_string()))?;
    out.push_str(if run.global.json { &json } else { &text });
    if run.global.json {
        out.push('\n');
    }
    run.write("magic.txt", text.as_bytes())?;
    run.write("magic.json", json.as_bytes())?;
    Ok(pass)
}

fn grad(run: &mut Run, out: &mut String) -> Result<bool> {
    let cfg = run.cfg;
    let c = &cfg.checks;
    let flat = match &cfg.model.target {
        Target::Flat { a } => a.clone(),
        Target::Sphere => vec![-0.8, 0.3, -0.2],
    };
    let suite = GradSuite {
        families: vec![Family::SO, Family::U, Family::SU],
        ns: vec![2, 3],
        targets: vec![Target::Sphere, Target::Flat { a: flat }],
        d: 2,
        l: c.grad_side,
        beta: cfg.model.beta,
        kappa: cfg.model.kappa,
        configs: c.grad_configs,
        seed: cfg.seed,
    };
    let r = grad_check(&suite)?;
    let mut text = String::new();
    for row in &r.rows {
        let _ = writeln!(
            text,
            "{:<8} {:<24} edge {:.2e}  site {:.2e}",
            row.group, row.target, row.edge_error, row.site_error
        );
    }
    let _ = writeln!(
        text,
        "worst relative error {:.3e}  {}",
        r.worst,
        if r.pass { "PASS" } else { "FAIL" }
    );
    let json = serde_json::to_string(&r).map_err(|e| Error::Config(e.to_string()))?;
    out.push_str(if run.global.json { &json } else { &text });
    if run.global.json {
        out.push('\n');
    }
    run.write("grad.txt", text.as_bytes())?;
    Ok(r.pass)
}

fn sample(run: &mut Run, out: &mut String) -> Result<bool> {
    let cfg = run.cfg;
    let p = cfg.params()?;
    let (samples, chains) = match cfg.sampler.mode {
        SamplerMode::Iid => (
            iid_product_sample(&p, cfg.seed, cfg.sampler.iid_samples)?,
            Vec::new(),
        ),
        SamplerMode::Mcmc => collect_samples(&p, &cfg.mcmc, cfg.seed)?,
    };
    let mut text = String::new();
    let _ = writeln!(text, "{} samples ({:?})", samples.len(), cfg.sampler.mode);
    for c in &chains {
        let mean = c.plaquette.iter().sum::<f64>() / c.plaquette.len().max(1) as f64;
        let _ = writeln!(
            text,
            "chain {}: sigma {:.3}/{:.3}  acceptance {:.3}/{:.3}  mean plaquette {:.5}",
            c.chain, c.sigma_edge, c.sigma_site, c.edge_acceptance, c.site_acceptance, mean
        );
    }
    let mut pass = true;
    if chains.len() > 1 {
        let series: Vec<Vec<f64>> = chains.iter().map(|c| c.plaquette.clone()).collect();
        let r = rhat(&series);
        pass = r < 1.05;
        let _ = writeln!(text, "R-hat {r:.4}");
    }
    out.push_str(&text);
    if run.global.out.is_some() {
        let header = SnapshotHeader {
            version: 1,
            params_hash: cfg.digest(),
            d: p.geometry.dim(),
            l: p.geometry.side(),
            n: p.n(),
            group: p.group.to_string(),
            scalar: "complex".into(),
            samples: samples.len(),
        };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &header, &samples)?;
        run.write("samples.bin", &buf)?;
        run.write("sample.txt", text.as_bytes())?;
    }
    Ok(pass)
}

fn source_of(run: &Run, p: &ModelParams, s: &SourceArgs) -> Result<SampleSource> {
    if let Some(path) = &s.snapshot {
        let mut f = std::fs::File::open(path)?;
        let (h, samples) = read_snapshot(&mut f)?;
        if h.d != p.geometry.dim()
            || h.l != p.geometry.side()
            || h.n != p.n()
            || h.group != p.group.to_string()
        {
            return Err(Error::Snapshot(
                "snapshot does not match the configured model".into(),
            ));
        }
        return Ok(SampleSource::Stored(samples));
    }
    Ok(match run.cfg.sampler.mode {
        SamplerMode::Iid => SampleSource::Iid {
            samples: run.cfg.sampler.iid_samples,
        },
        SamplerMode::Mcmc => SampleSource::Mcmc(run.cfg.mcmc.clone()),
    })
}

fn verify(run: &mut Run, cmd: &VerifyCmd, out: &mut String) -> Result<bool> {
    let p = run.cfg.params()?;
    let (jobs, source) = match cmd {
        VerifyCmd::Edge { anchor, source } | VerifyCmd::Site { anchor, source } => {
            let (_, cat) = run.catalog(&p)?;
            let coll = cat.collection(&anchor.collection)?;
            let eq = match (cmd, anchor_of(&p, anchor)?) {
                (VerifyCmd::Edge { .. }, Anchor::Edge(e)) => Equation::edge(&p, &coll.strings, e)?,
                (VerifyCmd::Site { .. }, Anchor::Site(x)) => Equation::site(&p, &coll.strings, x)?,
                (VerifyCmd::Edge { .. }, _) => {
                    return Err(Error::Usage("verify edge needs --edge".into()))
                }
                _ => return Err(Error::Usage("verify site needs --site".into())),
            };
            let name = format!("{} @ {}", coll.name, eq.render_anchor(&p.geometry));
            (vec![Job { name, equation: eq }], source)
        }
        VerifyCmd::Batch { source } => {
            let (_, cat) = run.catalog(&p)?;
            (catalog_jobs(&p, &cat.entries)?, source)
        }
    };
    let mut opts = BatchOptions::new(run.cfg.seed, run.cfg.z_threshold);
    if let Some(c) = &source.corrupt {
        let m = Mutation::parse(c)?;
        opts.table = Some(CoefficientTable::from_params(&p).perturbed(m.class, m.factor));
    }
    opts.mutations = source
        .mutate
        .iter()
        .map(|m| Mutation::parse(m))
        .collect::<Result<_>>()?;
    let src = source_of(run, &p, source)?;
    let report = run_batch(&p, jobs, &src, &opts)?;
    emit_report(run, &report, out)?;
    Ok(report.pass)
}

/// One structured record per equation.
pub fn report_records(r: &BatchReport) -> Result<String> {
    #[derive(Serialize)]
    struct Record<'a> {
        key: &'a str,
        anchor: &'a str,
        lhs: f64,
        rhs: f64,
        lhs_im: f64,
        rhs_im: f64,
        stderr_re: f64,
        stderr_im: f64,
        z_re: f64,
        z_im: f64,
        pass: bool,
    }
    let mut s = String::new();
    for e in &r.equations {
        let rec = Record {
            key: &e.name,
            anchor: &e.anchor,
            lhs: e.lhs.mean_re,
            rhs: e.rhs.mean_re,
            lhs_im: e.lhs.mean_im,
            rhs_im: e.rhs.mean_im,
            stderr_re: e.difference.stderr_re,
            stderr_im: e.difference.stderr_im,
            z_re: e.z_re,
            z_im: e.z_im,
            pass: e.pass,
        };
        let _ = writeln!(
            s,
            "{}",
            serde_json::to_string(&rec).map_err(|e| Error::Config(e.to_string()))?
        );
    }
    Ok(s)
}

fn emit_report(run: &mut Run, r: &BatchReport, out: &mut String) -> Result<()> {
    let text = render_report(r);
    let records = report_records(r)?;
    let mut scatter = String::from("key\tlhs\trhs\tstderr\n");
    for e in &r.equations {
        let _ = writeln!(
            scatter,
            "{}\t{}\t{}\t{}",
            e.name, e.lhs.mean_re, e.rhs.mean_re, e.difference.stderr_re
        );
    }
    out.push_str(if run.global.json { &records } else { &text });
    run.write("report.txt", text.as_bytes())?;
    run.write("report.jsonl", records.as_bytes())?;
    run.write(
        "report.json",
        serde_json::to_string_pretty(r)
            .map_err(|e| Error::Config(e.to_string()))?
            .as_bytes(),
    )?;
    run.write("scatter.tsv", scatter.as_bytes())?;
    Ok(())
}
