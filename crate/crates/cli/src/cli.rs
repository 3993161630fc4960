use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use xaskit_core::pipeline::{artifact_stem, process_bytes, Analysis, Engine, ExportFormat, PipelineConfig, Product};
use xaskit_core::signal::E0Method;
use xaskit_core::{AcquisitionMode, WindowKind, WindowSpec};

use crate::compare::{compare_texts, CompareStage};
use crate::{EXIT_FAILED, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "xaskit", version, about = "X-ray absorption spectrum reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce files to normalized, χ(k) and χ(R) products plus a JSON report
    Process {
        files: Vec<PathBuf>,
        /// Output directory (default: next to each input)
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
        /// Worker threads; 0 uses every core
        #[arg(short, long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare two χ(k) or χ(R) tables
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "chi")]
        stage: CompareStage,
        /// Largest allowed absolute difference
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Print the edge energy found by every method
    E0 {
        files: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write one product of one file
    Export {
        file: PathBuf,
        /// original, mu, norm, chi or r
        #[arg(long, default_value = "norm")]
        product: Product,
        /// Output path (default: stdout)
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the HTTP API
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Minutes before an untouched session is dropped
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
}

/// Pipeline settings from `--config` with individual flags layered on top.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// xdi or columnar
    #[arg(long)]
    pub format: Option<ExportFormat>,
    /// transmission, fluorescence or tey
    #[arg(long)]
    pub mode: Option<AcquisitionMode>,
    #[arg(long)]
    pub e0_method: Option<E0Method>,
    /// Fixed edge energy, eV
    #[arg(long)]
    pub e0: Option<f64>,
    /// spline or poly
    #[arg(long)]
    pub engine: Option<Engine>,
    /// Background cutoff distance for the knot count, Å
    #[arg(long)]
    pub r_bkg: Option<f64>,
    /// Refine spline knots by BQS minimization
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub k_weight: Option<u8>,
    /// hanning or kaiser
    #[arg(long)]
    pub window: Option<WindowKind>,
    #[arg(long)]
    pub k_min: Option<f64>,
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Window taper width, Å⁻¹
    #[arg(long)]
    pub dk: Option<f64>,
    /// Kaiser shape parameter
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Low-R filter cutoff for the filtered χ(k), Å
    #[arg(long)]
    pub ft_r_bkg: Option<f64>,
    #[arg(long)]
    pub oversample: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                PipelineConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(f) = self.format {
            cfg.export.format = f;
        }
        if self.mode.is_some() {
            cfg.ingest.mode = self.mode;
        }
        if let Some(m) = self.e0_method {
            cfg.e0.method = m;
        }
        if self.e0.is_some() {
            cfg.e0.value = self.e0;
        }
        if let Some(e) = self.engine {
            cfg.background.engine = e;
        }
        if let Some(r) = self.r_bkg {
            cfg.background.r_bkg = r;
        }
        if self.refine {
            cfg.background.refine = true;
        }
        if let Some(w) = self.k_weight {
            cfg.chi.k_weight = w;
        }
        if let Some(r) = self.r_max {
            cfg.ft.r_max = r;
        }
        if let Some(r) = self.ft_r_bkg {
            cfg.ft.r_bkg = r;
        }
        if let Some(o) = self.oversample {
            cfg.ft.oversample = o;
        }
        let touches_window = self.window.is_some()
            || self.k_min.is_some()
            || self.k_max.is_some()
            || self.dk.is_some()
            || self.alpha.is_some();
        if touches_window {
            let base = cfg.ft.window;
            let k_min = self.k_min.or(base.map(|w| w.k_min));
            let k_max = self.k_max.or(base.map(|w| w.k_max));
            let (Some(k_min), Some(k_max)) = (k_min, k_max) else {
                return Err("window flags need both --k-min and --k-max".into());
            };
            cfg.ft.window = Some(WindowSpec {
                kind: self.window.or(base.map(|w| w.kind)).unwrap_or_default(),
                k_min,
                k_max,
                dk: self.dk.or(base.map(|w| w.dk)).unwrap_or(1.0),
                alpha: self.alpha.or(base.map(|w| w.alpha)).unwrap_or(0.0),
            });
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileOutcome {
    pub path: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub error: Option<String>,
    pub error_code: Option<&'static str>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub files: Vec<FileOutcome>,
    pub failed: usize,
}

impl BatchReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}

fn process_one(path: &Path, config: &PipelineConfig, out_dir: Option<&Path>) -> FileOutcome {
    let start = Instant::now();
    let mut outcome =
        FileOutcome { path: path.to_path_buf(), artifacts: Vec::new(), error: None, error_code: None, elapsed_ms: 0.0 };
    let name = path.file_name().map_or_else(|| path.to_string_lossy(), |n| n.to_string_lossy()).into_owned();
    let result = std::fs::read(path).map_err(|e| ("io", e.to_string())).and_then(|bytes| {
        process_bytes(&name, bytes, config).map_err(|e| (e.code(), e.to_string()))
    });
    match result {
        Ok((artifacts, _)) => {
            let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| {
                path.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            });
            for a in artifacts {
                let target = dir.join(&a.name);
                if let Err(e) = std::fs::write(&target, &a.bytes) {
                    outcome.error = Some(format!("{}: {e}", target.display()));
                    outcome.error_code = Some("io");
                    break;
                }
                outcome.artifacts.push(target);
            }
        }
        Err((code, msg)) => {
            outcome.error = Some(msg);
            outcome.error_code = Some(code);
        }
    }
    outcome.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    outcome
}

/// Process every file independently. One failure never stops the batch.
/// `jobs` of 0 uses the global thread pool; 1 runs serially.
pub fn cmd_process(paths: &[PathBuf], config: &PipelineConfig, out_dir: Option<&Path>, jobs: usize) -> BatchReport {
    if let Some(dir) = out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            let files: Vec<FileOutcome> = paths
                .iter()
                .map(|p| FileOutcome {
                    path: p.clone(),
                    artifacts: Vec::new(),
                    error: Some(format!("{}: {e}", dir.display())),
                    error_code: Some("io"),
                    elapsed_ms: 0.0,
                })
                .collect();
            return BatchReport { failed: files.len(), files };
        }
    }
    let run = || -> Vec<FileOutcome> { paths.par_iter().map(|p| process_one(p, config, out_dir)).collect() };
    let files = if jobs == 1 {
        paths.iter().map(|p| process_one(p, config, out_dir)).collect()
    } else if jobs == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    };
    let failed = files.iter().filter(|f| f.error.is_some()).count();
    BatchReport { files, failed }
}

fn print_batch(report: &BatchReport) {
    for f in &report.files {
        match &f.error {
            None => println!("ok     {} -> {} artifacts ({:.1} ms)", f.path.display(), f.artifacts.len(), f.elapsed_ms),
            Some(e) => println!("FAILED {}: {e}", f.path.display()),
        }
    }
    let n = report.files.len();
    println!("{n} file{}, {} failed", if n == 1 { "" } else { "s" }, report.failed);
}

fn cmd_e0(paths: &[PathBuf], config: &PipelineConfig) -> i32 {
    let mut failed = 0;
    for path in paths {
        let result = std::fs::read(path).map_err(|e| e.to_string()).and_then(|bytes| {
            let name = artifact_stem(&path.to_string_lossy());
            let mut a = Analysis::load(name, bytes, config.clone()).map_err(|e| e.to_string())?;
            a.e0().cloned().map_err(|e| e.to_string())
        });
        match result {
            Ok(stage) => {
                for c in &stage.candidates {
                    let mark = if stage.method == Some(c.method) { "*" } else { " " };
                    match (c.e0, &c.error) {
                        (Some(v), _) => println!("{}\t{}{}\t{v:.3}", path.display(), c.method, mark),
                        (None, e) => println!("{}\t{}{}\t-\t{}", path.display(), c.method, mark, e.as_deref().unwrap_or("")),
                    }
                }
                if stage.method.is_none() {
                    println!("{}\tfixed*\t{:.3}", path.display(), stage.e0);
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("FAILED {}: {e}", path.display());
            }
        }
    }
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn cmd_export(file: &Path, product: Product, output: Option<&Path>, config: &PipelineConfig) -> i32 {
    let result = std::fs::read(file).map_err(|e| e.to_string()).and_then(|bytes| {
        let name = file.file_name().map_or_else(|| file.to_string_lossy(), |n| n.to_string_lossy()).into_owned();
        let mut a = Analysis::load(name, bytes, config.clone()).map_err(|e| e.to_string())?;
        a.export(product, config.export.format).map_err(|e| e.to_string())
    });
    let bytes = match result {
        Ok(b) => b,
        Err(e) => {
            eprintln!("FAILED {}: {e}", file.display());
            return EXIT_FAILED;
        }
    };
    let written = match output {
        Some(p) => std::fs::write(p, &bytes),
        None => std::io::Write::write_all(&mut std::io::stdout(), &bytes),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("write failed: {e}");
            EXIT_FAILED
        }
    }
}

fn cmd_compare(a: &Path, b: &Path, stage: CompareStage, tolerance: f64) -> i32 {
    let read = |p: &Path| std::fs::read(p).map(|b| String::from_utf8_lossy(&b).into_owned());
    let (ta, tb) = match (read(a), read(b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("read failed: {e}");
            return EXIT_USAGE;
        }
    };
    match compare_texts(&ta, &tb, stage, tolerance) {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            if r.within_tolerance {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("compare failed: {e}");
            EXIT_FAILED
        }
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let resolve = |args: &ConfigArgs| {
        args.resolve().map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })
    };
    match cli.command {
        Command::Process { files, out_dir, jobs, config } => match resolve(&config) {
            Ok(cfg) => {
                let report = cmd_process(&files, &cfg, out_dir.as_deref(), jobs);
                print_batch(&report);
                report.exit_code()
            }
            Err(code) => code,
        },
        Command::Compare { a, b, stage, tolerance } => cmd_compare(&a, &b, stage, tolerance),
        Command::E0 { files, config } => resolve(&config).map_or_else(|c| c, |cfg| cmd_e0(&files, &cfg)),
        Command::Export { file, product, output, config } => {
            resolve(&config).map_or_else(|c| c, |cfg| cmd_export(&file, product, output.as_deref(), &cfg))
        }
        Command::Serve { bind, idle_minutes } => {
            let rt = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("runtime: {e}");
                    return EXIT_FAILED;
                }
            };
            let idle = std::time::Duration::from_secs(idle_minutes.saturating_mul(60));
            match rt.block_on(crate::serve::serve(&bind, idle)) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("serve: {e}");
                    EXIT_USAGE
                }
            }
        }
    }
}
