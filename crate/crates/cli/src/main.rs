use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plantsynth::imageops::{io, BinaryMask};
use plantsynth::leafgeom::{build_leaf_pool, read_leaf_manifest, DEFAULT_INTERIOR_SPACING};
use plantsynth::metrics::{evaluate_dataset, EvaluateOptions, MetricsError};
use plantsynth::pipeline::{
    demo, generate_dataset, preview, verify_samples, DatasetManifest, GenerateError, GenerateOptions, GeneratorConfig,
    MANIFEST_FILE,
};
use plantsynth::textures::{build_texture_pool, inpaint_background, read_texture_manifest, TextureKind};

#[derive(Parser)]
#[command(name = "plantsynth", version, about = "Synthetic top-down plant images with leaf annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonicalize leaf images listed in a manifest into a leaf pool.
    IngestLeaves {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Interior mesh spacing relative to leaf height.
        #[arg(long, default_value_t = DEFAULT_INTERIOR_SPACING)]
        spacing: f64,
    },
    /// Build a leaf or background texture pool.
    IngestTextures {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        kind: TextureKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill the masked plant region of an image from its surroundings.
    InpaintBackground {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a dataset.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "PLANTSYNTH_OUT_DIR", default_value = "dataset")]
        out: PathBuf,
        #[arg(long, env = "PLANTSYNTH_WORKERS")]
        workers: Option<usize>,
        /// Keep samples that are already complete in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Score predicted label maps against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        /// Report path; `.txt` and `.json` extensions are added.
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Label ids excluded on both sides; repeatable.
        #[arg(long = "ignore-id")]
        ignore_id: Vec<u32>,
        /// Keep the trunk id recorded in sibling meta records.
        #[arg(long)]
        keep_trunk: bool,
    },
    /// Tile rgb and label previews of the first samples into one image.
    Preview {
        #[arg(long)]
        config: PathBuf,
        #[arg(short = 'n', default_value_t = 4)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "preview.png")]
        out: PathBuf,
        #[arg(long, env = "PLANTSYNTH_WORKERS")]
        workers: Option<usize>,
    },
    /// Regenerate samples of a dataset and compare them with its manifest.
    Verify {
        #[arg(long)]
        dataset: PathBuf,
        /// Samples to check, spread evenly over the dataset; 0 checks all.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Write procedural demo inputs, pools and a config.
    MakeDemoAssets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        let code = if matches!(e, MetricsError::InvalidThreshold(_)) { 1 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: format!("{}: {e}", path.display()) }
}

fn load_config(path: &Path, count: Option<usize>, seed: Option<u64>, workers: Option<usize>) -> Result<GeneratorConfig, Failure> {
    let mut cfg = GeneratorConfig::load(path)?;
    if let Some(c) = count {
        cfg.count = c;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::IngestLeaves { manifest, out, spacing } => {
            let entries = read_leaf_manifest(&manifest).map_err(GenerateError::from)?;
            let (pool, report) = build_leaf_pool(&entries, spacing).map_err(GenerateError::from)?;
            pool.save(&out).map_err(|e| io_failure(&out, e))?;
            println!("{} leaves ({} held out) from {} entries", report.leaves, pool.held_out.len(), report.entries);
            for (id, why) in &report.skipped {
                println!("skipped {id}: {why}");
            }
        }
        Command::IngestTextures { manifest, kind, out } => {
            let entries = read_texture_manifest(&manifest).map_err(GenerateError::from)?;
            let pool = build_texture_pool(&entries, kind).map_err(GenerateError::from)?;
            pool.save(&out).map_err(GenerateError::from)?;
            println!("{} of {} textures pooled", pool.len(), entries.len());
        }
        Command::InpaintBackground { image, mask, out } => {
            let img = io::read_rgb(&image).map_err(|e| io_failure(&image, e))?;
            let m = BinaryMask::from_image(&io::read_gray(&mask).map_err(|e| io_failure(&mask, e))?);
            let filled = inpaint_background(&img, &m).map_err(|e| Failure { code: 1, message: e.to_string() })?;
            io::write_png(&out, &filled).map_err(|e| io_failure(&out, e))?;
        }
        Command::Generate { config, count, seed, out, workers, resume } => {
            let cfg = load_config(&config, count, seed, workers)?;
            let manifest = generate_dataset(&cfg, &out, &GenerateOptions { resume })?;
            println!("{} samples written to {}", manifest.samples.len(), out.display());
        }
        Command::Evaluate { pred, gt, iou, out, ignore_id, keep_trunk } => {
            let opts = EvaluateOptions { ignore_ids: ignore_id, ignore_trunk_from_meta: !keep_trunk };
            let report = evaluate_dataset(&pred, &gt, iou, &opts)?;
            let text = report.to_text();
            for (ext, body) in [("txt", &text), ("json", &report.to_json())] {
                let path = out.with_extension(ext);
                std::fs::write(&path, body).map_err(|e| io_failure(&path, e))?;
            }
            print!("{text}");
        }
        Command::Preview { config, n, seed, out, workers } => {
            let cfg = load_config(&config, None, seed, workers)?;
            let sheet = preview(&cfg, n)?;
            io::write_png(&out, &sheet).map_err(|e| io_failure(&out, e))?;
        }
        Command::Verify { dataset, samples } => {
            let manifest = DatasetManifest::load(&dataset.join(MANIFEST_FILE))?;
            let total = manifest.samples.len();
            let indices: Vec<u64> = if samples == 0 || samples >= total {
                manifest.samples.iter().map(|r| r.index).collect()
            } else {
                (0..samples).map(|k| manifest.samples[k * total / samples].index).collect()
            };
            let bad = verify_samples(&manifest, &indices)?;
            if !bad.is_empty() {
                return Err(Failure { code: 1, message: format!("samples differ from the manifest: {bad:?}") });
            }
            println!("{} samples reproduce their manifest records", indices.len());
        }
        Command::MakeDemoAssets { out, seed } => {
            let assets = demo::write_demo_assets(&out, seed)?;
            println!("demo config at {}", assets.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
