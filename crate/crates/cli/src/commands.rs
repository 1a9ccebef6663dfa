//! Subcommand implementations: file I/O around the core operations, JSON on
//! stdout, diagnostics on stderr.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use logismos_core::metaimage::{read_label, read_probability, read_scalar, write_metaimage};
use logismos_core::metrics::{dsc, rvd};
use logismos_core::phantom::{generate, PhantomRecipe};
use logismos_core::pipeline::{
    load_inputs, paste_roi, run_pipeline, write_outputs, PipelineConfig, PipelineReport,
};
use logismos_core::refine::{refine_pipeline, RefineReport};
use logismos_core::volume::crop_roi;
use logismos_core::{RoiSpec, Volume};

use crate::CliError;

pub const REFINED_FILE: &str = "refined.mha";
pub const INTENSITY_FILE: &str = "intensity.mha";
pub const LABEL_FILE: &str = "label.mha";
pub const PROB_FILE: &str = "prob.mha";
pub const SPEC_FILE: &str = "spec.json";

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct BatchEntry {
    center: [i64; 3],
    out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<PipelineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn roi_dir(out: &Path, center: [i64; 3]) -> PathBuf {
    out.join(format!("roi_{}_{}_{}", center[0], center[1], center[2]))
}

/// Single center: writes into `out` and prints the report. Several
/// centers: one subdirectory each, processed in parallel, and a JSON array
/// of per-center results.
pub fn segment(
    intensity: &Path,
    prob: &Path,
    centers: &[[i64; 3]],
    out: &Path,
    config: &PipelineConfig,
) -> Result<(), CliError> {
    let (intensity, prob) = load_inputs(intensity, prob)?;
    let full = *intensity.geometry();
    let batch = centers.len() > 1;
    let results: Vec<(PathBuf, Result<PipelineReport, CliError>)> = centers
        .par_iter()
        .map(|&center| {
            let dir = if batch {
                roi_dir(out, center)
            } else {
                out.to_path_buf()
            };
            let start = Instant::now();
            let result = run_pipeline(&intensity, &prob, center, config)
                .and_then(|o| write_outputs(&o, &full, &dir).map(|()| o.report))
                .map_err(CliError::from);
            match &result {
                Ok(r) => eprintln!(
                    "center {center:?}: {} voxels, cost {:.6}, {:.2} s",
                    r.output_voxels,
                    r.solution.total_cost,
                    start.elapsed().as_secs_f64()
                ),
                Err(e) => eprintln!("center {center:?}: error: {e}"),
            }
            (dir, result)
        })
        .collect();

    if !batch {
        let (_, result) = results.into_iter().next().expect("one center");
        return print_json(&result?);
    }
    let mut first_error = None;
    let entries: Vec<BatchEntry> = centers
        .iter()
        .zip(results)
        .map(|(&center, (dir, result))| match result {
            Ok(report) => BatchEntry {
                center,
                out: dir,
                report: Some(report),
                error: None,
            },
            Err(e) => {
                let message = e.to_string();
                first_error.get_or_insert(e);
                BatchEntry {
                    center,
                    out: dir,
                    report: None,
                    error: Some(message),
                }
            }
        })
        .collect();
    print_json(&entries)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct RefineSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    roi: Option<RoiSpec>,
    initial_voxels: usize,
    refined_voxels: usize,
    #[serde(flatten)]
    report: RefineReport,
}

/// Threshold + refine on the whole volume, or on the ROI around `center`
/// (the mask is then pasted back into the full volume).
pub fn refine(
    intensity: &Path,
    prob: &Path,
    center: Option<[i64; 3]>,
    out: Option<&Path>,
    config: &PipelineConfig,
) -> Result<(), CliError> {
    let full_intensity = read_scalar(intensity)?;
    let full_prob = read_probability(prob)?;
    full_intensity
        .geometry()
        .ensure_matches(full_prob.geometry(), "intensity vs probability")?;
    let roi = center
        .map(|c| RoiSpec::new(c, config.roi_size))
        .transpose()?;
    let (intensity, prob) = match &roi {
        Some(r) => (crop_roi(&full_intensity, r)?, crop_roi(&full_prob, r)?),
        None => (full_intensity.clone(), full_prob.clone()),
    };
    let initial = prob.threshold(config.threshold);
    let (mask, _, report) = refine_pipeline(&prob, &initial, &intensity, &config.refine_params())?;
    if let Some(dir) = out {
        let full = match &roi {
            Some(r) => paste_roi(&mask, r, full_intensity.geometry()),
            None => mask.clone(),
        };
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::bad_input(format!("{}: {e}", dir.display())))?;
        write_metaimage(&full, dir.join(REFINED_FILE))?;
    }
    print_json(&RefineSummary {
        roi,
        initial_voxels: initial.count(),
        refined_voxels: mask.count(),
        report,
    })
}

#[derive(Serialize)]
struct MetricsOutput {
    dsc: f64,
    rvd: f64,
}

pub fn metrics(seg: &Path, reference: &Path) -> Result<(), CliError> {
    let seg = read_label(seg)?;
    let reference = read_label(reference)?;
    let out = MetricsOutput {
        dsc: dsc(&seg, &reference)?,
        rvd: rvd(&seg, &reference)?,
    };
    println!(
        "{}",
        serde_json::to_string(&out).map_err(|e| CliError::internal(e.to_string()))?
    );
    Ok(())
}

#[derive(Serialize)]
struct PhantomSummary {
    intensity: PathBuf,
    label: PathBuf,
    prob: PathBuf,
    spec: PathBuf,
    label_voxels: usize,
    distractor_voxels: Option<usize>,
}

/// Writes the phantom triple plus the recipe with every default filled in,
/// so the sidecar alone reproduces the files.
pub fn phantom(spec: &Path, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::bad_input(format!("{}: {e}", spec.display())))?;
    let mut recipe: PhantomRecipe = serde_json::from_str(&text)
        .map_err(|e| CliError::bad_input(format!("{}: {e}", spec.display())))?;
    recipe.prob_seed = Some(recipe.prob_seed());
    let ph = generate(&recipe)?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::bad_input(format!("{}: {e}", out.display())))?;
    let summary = PhantomSummary {
        intensity: out.join(INTENSITY_FILE),
        label: out.join(LABEL_FILE),
        prob: out.join(PROB_FILE),
        spec: out.join(SPEC_FILE),
        label_voxels: ph.label.count(),
        distractor_voxels: ph.distractor.as_ref().map(|d| d.count()),
    };
    write_metaimage(&ph.intensity, &summary.intensity)?;
    write_metaimage(&ph.label, &summary.label)?;
    write_metaimage(&ph.probability, &summary.prob)?;
    let sidecar =
        serde_json::to_string_pretty(&recipe).map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(&summary.spec, sidecar + "\n")
        .map_err(|e| CliError::bad_input(format!("{}: {e}", summary.spec.display())))?;
    print_json(&summary)
}
