use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depthpocs::codec::{decode_map, encode_map, QuantTable, QuantizedDescription};
use depthpocs::config::{CameraFile, RefineSection, RunConfig};
use depthpocs::metrics::{error_map, format_db, quality_g};
use depthpocs::pgm::{self, BitDepth};
use depthpocs::pipeline::{csv_text, run_pipeline, sweep, write_atomic, CSV_NAME};
use depthpocs::pocs::refine;
use depthpocs::warp::bilateral_filter;
use depthpocs::scene::{generate_scene, SceneSpec};
use depthpocs::{Error, Result};

#[derive(Parser)]
#[command(name = "depthpocs", version, about = "Refine block-DCT compressed stereo depth maps by alternating projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic stereo scene: truth maps, visibility masks, cameras.
    Generate {
        /// TOML scene spec; the bundled scene when omitted.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Quantize a PGM depth map into a QDM1 description.
    Compress {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        quant: QuantArgs,
    },
    /// Standard (bin-midpoint) decode of a description.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Store levels × 256 in a 16-bit PGM.
        #[arg(long)]
        sixteen_bit: bool,
    },
    /// Jointly refine a left/right pair of descriptions.
    Refine {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        cameras: PathBuf,
        /// TOML file with a [refine] section.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        truth: TruthArgs,
        #[arg(long)]
        sixteen_bit: bool,
    },
    /// PSNR of a left/right pair against references, plus the averaged score.
    Evaluate {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        truth_left: PathBuf,
        #[arg(long)]
        truth_right: PathBuf,
        /// Also write |a − b| maps here.
        #[arg(long)]
        error_maps: Option<PathBuf>,
    },
    /// Full pipeline from a run config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// `run` over a list of flat step sizes.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        steps: Vec<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QuantArgs {
    /// Flat quantization step.
    #[arg(long, conflicts_with = "quality")]
    step: Option<f64>,
    /// Quality factor for the scaled luminance table.
    #[arg(long)]
    quality: Option<u32>,
}

impl QuantArgs {
    fn table(&self) -> Result<QuantTable> {
        match (self.step, self.quality) {
            (_, Some(q)) => QuantTable::jpeg_luminance(q),
            (Some(s), None) => QuantTable::flat(s),
            (None, None) => QuantTable::flat(24.0),
        }
    }
}

#[derive(Args)]
struct TruthArgs {
    #[arg(long, requires = "truth_right")]
    truth_left: Option<PathBuf>,
    #[arg(long, requires = "truth_left")]
    truth_right: Option<PathBuf>,
}

fn load_run_config(config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::bundled(PathBuf::from("out")),
    };
    if let Some(d) = out_dir {
        cfg.output_dir = d;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { scene, out_dir } => {
            let spec = match scene {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    toml::from_str::<SceneSpec>(&text)
                        .map_err(|e| Error::InvalidConfiguration(format!("{}: {}", p.display(), e.message())))?
                }
                None => SceneSpec::bundled(),
            };
            let scene = generate_scene(&spec)?;
            create_dir(&out_dir)?;
            pgm::write(&out_dir.join("truth_left.pgm"), &scene.left, BitDepth::Eight)?;
            pgm::write(&out_dir.join("truth_right.pgm"), &scene.right, BitDepth::Eight)?;
            pgm::write_mask(&out_dir.join("mask_left.pgm"), spec.width, spec.height, &scene.left_mask)?;
            pgm::write_mask(&out_dir.join("mask_right.pgm"), spec.width, spec.height, &scene.right_mask)?;
            let cams = out_dir.join("cameras.toml");
            fs::write(&cams, CameraFile::from_pair(&scene.cameras).to_toml()).map_err(|e| Error::io(&cams, e))?;
            println!("wrote {}", out_dir.display());
        }
        Command::Compress { input, output, quant } => {
            let table = quant.table().map_err(|e| Error::InvalidConfiguration(e.to_string()))?;
            let map = pgm::read(&input)?;
            encode_map(&map, &table)?.write_to(&output)?;
        }
        Command::Decode {
            input,
            output,
            sixteen_bit,
        } => {
            let desc = QuantizedDescription::read_from(&input)?;
            let depth = if sixteen_bit { BitDepth::Sixteen } else { BitDepth::Eight };
            pgm::write(&output, &decode_map(&desc)?, depth)?;
        }
        Command::Refine {
            left,
            right,
            cameras,
            params,
            out_dir,
            truth,
            sixteen_bit,
        } => {
            let cams = CameraFile::load(&cameras)?;
            let pair = cams.pair()?;
            let section = match params {
                Some(p) => {
                    #[derive(serde::Deserialize)]
                    struct ParamsFile {
                        #[serde(default)]
                        refine: RefineSection,
                    }
                    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    toml::from_str::<ParamsFile>(&text)
                        .map_err(|e| Error::InvalidConfiguration(format!("{}: {}", p.display(), e.message())))?
                        .refine
                }
                None => RefineSection::default(),
            };
            let options = section.options(cams.depth_scale)?;
            let ld = QuantizedDescription::read_from(&left)?;
            let rd = QuantizedDescription::read_from(&right)?;
            let gt = match (truth.truth_left, truth.truth_right) {
                (Some(l), Some(r)) => Some((pgm::read(&l)?, pgm::read(&r)?)),
                _ => None,
            };
            let result = refine(&ld, &rd, &pair, &options, gt.as_ref().map(|(l, r)| (l, r)))?;
            create_dir(&out_dir)?;
            let depth = if sixteen_bit { BitDepth::Sixteen } else { BitDepth::Eight };
            pgm::write(&out_dir.join("our_left.pgm"), &result.left, depth)?;
            pgm::write(&out_dir.join("our_right.pgm"), &result.right, depth)?;
            let summary = match &gt {
                Some((l, r)) => {
                    let (std_l, std_r) = (decode_map(&ld)?, decode_map(&rd)?);
                    let smooth = |m| bilateral_filter(m, &options.warp.bilateral);
                    let q_std = quality_g(&std_l, &std_r, l, r)?;
                    let q_smo = quality_g(&smooth(&std_l)?, &smooth(&std_r)?, l, r)?;
                    let q_our = quality_g(&result.left, &result.right, l, r)?;
                    println!(
                        "Q_std {}  Q_smo {}  Q_our {}",
                        format_db(q_std.g),
                        format_db(q_smo.g),
                        format_db(q_our.g)
                    );
                    Some((q_std.g, q_smo.g, q_our.g))
                }
                None => None,
            };
            write_atomic(&out_dir.join(CSV_NAME), csv_text(&result.report, summary).as_bytes())?;
            println!(
                "{} iterations, converged: {}",
                result.report.iterations, result.report.converged
            );
        }
        Command::Evaluate {
            left,
            right,
            truth_left,
            truth_right,
            error_maps,
        } => {
            let (l, r) = (pgm::read(&left)?, pgm::read(&right)?);
            let (tl, tr) = (pgm::read(&truth_left)?, pgm::read(&truth_right)?);
            let q = quality_g(&l, &r, &tl, &tr)?;
            println!("psnr_left,psnr_right,g");
            println!("{},{},{}", format_db(q.psnr_left), format_db(q.psnr_right), format_db(q.g));
            if let Some(dir) = error_maps {
                create_dir(&dir)?;
                pgm::write(&dir.join("err_left.pgm"), &error_map(&l, &tl)?, BitDepth::Eight)?;
                pgm::write(&dir.join("err_right.pgm"), &error_map(&r, &tr)?, BitDepth::Eight)?;
            }
        }
        Command::Run { config, out_dir } => {
            let cfg = load_run_config(config.as_deref(), out_dir)?;
            let s = run_pipeline(&cfg)?;
            println!(
                "Q_std {}  Q_smo {}  Q_our {}  ({} iterations, converged: {}) -> {}",
                format_db(s.q_std.g),
                format_db(s.q_smo.g),
                format_db(s.q_our.g),
                s.iterations,
                s.converged,
                s.output_dir.display()
            );
        }
        Command::Sweep { config, steps, out_dir } => {
            let cfg = load_run_config(config.as_deref(), out_dir)?;
            for (step, s) in sweep(&cfg, &steps)? {
                println!(
                    "step {step}: Q_std {}  Q_smo {}  Q_our {}",
                    format_db(s.q_std.g),
                    format_db(s.q_smo.g),
                    format_db(s.q_our.g)
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
