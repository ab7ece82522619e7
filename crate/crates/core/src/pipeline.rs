//! End-to-end runs: ground truth → descriptions → standard, smoothed and
//! refined decodes → scores, error maps and the per-half-step CSV trace.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::{decode_map, encode_map, QuantTable, QuantizedDescription};
use crate::config::{QuantSpec, RunConfig, Source};
use crate::error::{Error, Result};
use crate::geometry::RectifiedPair;
use crate::map::DepthMap;
use crate::metrics::{error_map, format_db, psnr, psnr_8bit, QualityScore};
use crate::pgm::{self, BitDepth};
use crate::pocs::{refine, IterationReport, RefineOptions};
use crate::scene::generate_scene;
use crate::warp::bilateral_filter;

pub const CSV_HEADER: &str = "iter,view,psnr_left,psnr_right,g,mean_change,clip_fraction";
pub const CSV_NAME: &str = "refine.csv";

/// Ground truth and cameras for one run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub left: DepthMap,
    pub right: DepthMap,
    pub cameras: RectifiedPair,
    pub depth_scale: Option<f64>,
    pub masks: Option<(Vec<bool>, Vec<bool>)>,
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs> {
    match &config.source {
        Source::Scene(spec) => {
            let scene = generate_scene(spec)?;
            Ok(Inputs {
                left: scene.left,
                right: scene.right,
                cameras: scene.cameras,
                depth_scale: None,
                masks: Some((scene.left_mask, scene.right_mask)),
            })
        }
        Source::Files { left, right, cameras } => {
            let cams = cameras.load()?;
            let pair = cams.pair()?;
            let (l, r) = (pgm::read(left)?, pgm::read(right)?);
            if l.dims() != r.dims() {
                return Err(Error::InvalidInput(format!(
                    "left is {}×{}, right is {}×{}",
                    l.width(),
                    l.height(),
                    r.width(),
                    r.height()
                )));
            }
            Ok(Inputs {
                left: l,
                right: r,
                cameras: pair,
                depth_scale: cams.depth_scale,
                masks: None,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub q_std: QualityScore,
    pub q_smo: QualityScore,
    pub q_our: QualityScore,
    pub iterations: usize,
    pub converged: bool,
    pub output_dir: PathBuf,
}

/// Renders the trace: header, one row per half-step, optional summary line.
pub fn csv_text(report: &IterationReport, summary: Option<(f64, f64, f64)>) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for s in &report.steps {
        let (pl, pr, g) = match s.quality {
            Some(q) => (format_db(q.psnr_left), format_db(q.psnr_right), format_db(q.g)),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            s.iter, s.view, pl, pr, g, s.mean_change, s.clip_fraction
        )
        .unwrap();
    }
    if let Some((std, smo, our)) = summary {
        writeln!(
            out,
            "summary,Q_std={},Q_smo={},Q_our={}",
            format_db(std),
            format_db(smo),
            format_db(our)
        )
        .unwrap();
    }
    out
}

/// Writes via a temporary sibling and a rename so no partial file is left.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

struct Outputs<'a> {
    dir: &'a Path,
}

impl Outputs<'_> {
    fn map(&self, name: &str, map: &DepthMap) -> Result<()> {
        write_atomic(&self.dir.join(name), &pgm::encode(map, BitDepth::Eight))
    }
}

fn score(a: &DepthMap, b: &DepthMap, ref_l: &DepthMap, ref_r: &DepthMap, eight_bit: bool) -> Result<QualityScore> {
    let f = if eight_bit { psnr_8bit } else { psnr };
    Ok(QualityScore::from_psnrs(f(a, ref_l)?, f(b, ref_r)?))
}

/// Full pipeline for one configuration. Nothing is written until every
/// input has loaded and the refinement has finished.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary> {
    let inputs = load_inputs(config).map_err(|e| e.in_stage("load"))?;
    let options = config
        .refine
        .options(inputs.depth_scale)
        .map_err(|e| e.in_stage("configure"))?;
    let table = config.quant.table().map_err(|e| e.in_stage("configure"))?;
    run_with(config, &inputs, &table, &options)
}

pub fn run_with(config: &RunConfig, inputs: &Inputs, table: &QuantTable, options: &RefineOptions) -> Result<RunSummary> {
    let encode = |m: &DepthMap| encode_map(m, table);
    let left_desc = encode(&inputs.left).map_err(|e| e.in_stage("encode"))?;
    let right_desc = encode(&inputs.right).map_err(|e| e.in_stage("encode"))?;

    let decode = |d: &QuantizedDescription| decode_map(d);
    let std_l = decode(&left_desc).map_err(|e| e.in_stage("decode"))?;
    let std_r = decode(&right_desc).map_err(|e| e.in_stage("decode"))?;

    let smooth = |m: &DepthMap| bilateral_filter(m, &options.warp.bilateral);
    let smo_l = smooth(&std_l).map_err(|e| e.in_stage("smooth"))?;
    let smo_r = smooth(&std_r).map_err(|e| e.in_stage("smooth"))?;

    let refined = refine(
        &left_desc,
        &right_desc,
        &inputs.cameras,
        options,
        Some((&inputs.left, &inputs.right)),
    )
    .map_err(|e| e.in_stage("refine"))?;

    let (tl, tr) = (&inputs.left, &inputs.right);
    let eval = |a: &DepthMap, b: &DepthMap| score(a, b, tl, tr, config.compare_8bit).map_err(|e| e.in_stage("evaluate"));
    let q_std = eval(&std_l, &std_r)?;
    let q_smo = eval(&smo_l, &smo_r)?;
    let q_our = eval(&refined.left, &refined.right)?;

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("write"))?;
    let out = Outputs { dir };
    let write = || -> Result<()> {
        out.map("truth_left.pgm", tl)?;
        out.map("truth_right.pgm", tr)?;
        if let Some((ml, mr)) = &inputs.masks {
            pgm::write_mask(&dir.join("mask_left.pgm"), tl.width(), tl.height(), ml)?;
            pgm::write_mask(&dir.join("mask_right.pgm"), tr.width(), tr.height(), mr)?;
        }
        write_atomic(&dir.join("left.qdm"), &left_desc.to_bytes())?;
        write_atomic(&dir.join("right.qdm"), &right_desc.to_bytes())?;
        for (tag, l, r) in [
            ("std", &std_l, &std_r),
            ("smo", &smo_l, &smo_r),
            ("our", &refined.left, &refined.right),
        ] {
            out.map(&format!("{tag}_left.pgm"), l)?;
            out.map(&format!("{tag}_right.pgm"), r)?;
            out.map(&format!("err_{tag}_left.pgm"), &error_map(l, tl)?)?;
            out.map(&format!("err_{tag}_right.pgm"), &error_map(r, tr)?)?;
        }
        if let Some(best) = &refined.best {
            out.map("best_left.pgm", &best.left)?;
            out.map("best_right.pgm", &best.right)?;
        }
        let csv = csv_text(&refined.report, Some((q_std.g, q_smo.g, q_our.g)));
        write_atomic(&dir.join(CSV_NAME), csv.as_bytes())
    };
    write().map_err(|e| e.in_stage("write"))?;

    Ok(RunSummary {
        q_std,
        q_smo,
        q_our,
        iterations: refined.report.iterations,
        converged: refined.report.converged,
        output_dir: dir.clone(),
    })
}

pub const SWEEP_HEADER: &str = "step,Q_std,Q_smo,Q_our,iterations,converged";

/// Repeats [`run_pipeline`] over flat step sizes, each into
/// `output_dir/step_<Δ>`, then writes `output_dir/sweep.csv`.
pub fn sweep(config: &RunConfig, steps: &[f64]) -> Result<Vec<(f64, RunSummary)>> {
    if steps.is_empty() {
        return Err(Error::InvalidConfiguration("sweep needs at least one step".into()));
    }
    let inputs = load_inputs(config).map_err(|e| e.in_stage("load"))?;
    let options = config
        .refine
        .options(inputs.depth_scale)
        .map_err(|e| e.in_stage("configure"))?;
    let tables = steps
        .iter()
        .map(|&s| QuantTable::flat(s).map_err(|e| Error::InvalidConfiguration(e.to_string()).in_stage("configure")))
        .collect::<Result<Vec<_>>>()?;
    let results = steps
        .par_iter()
        .zip(tables.par_iter())
        .map(|(&step, table)| {
            let cfg = RunConfig {
                output_dir: config.output_dir.join(format!("step_{step}")),
                quant: QuantSpec::Step(step),
                ..config.clone()
            };
            run_with(&cfg, &inputs, table, &options).map(|s| (step, s))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = format!("{SWEEP_HEADER}\n");
    for (step, s) in &results {
        writeln!(
            csv,
            "{step},{},{},{},{},{}",
            format_db(s.q_std.g),
            format_db(s.q_smo.g),
            format_db(s.q_our.g),
            s.iterations,
            s.converged
        )
        .unwrap();
    }
    write_atomic(&config.output_dir.join("sweep.csv"), csv.as_bytes()).map_err(|e| e.in_stage("write"))?;
    Ok(results)
}
