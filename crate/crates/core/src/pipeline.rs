//! End-to-end segmentation of one clicked lesion.
//!
//! crop ROI → threshold → refine → mesh → columns → costs → flow network →
//! max-flow → surface → voxelize. The sphere initialisation with gradient
//! costs reproduces the classic LOGISMOS baseline.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphcut::{
    build_flow_network, eq1_costs, extract_surface, gradient_costs, max_flow, voxelize,
    SurfaceSolution,
};
use crate::metaimage::{read_probability, read_scalar, write_metaimage};
use crate::refine::{refine_pipeline, RefineParams, RefineReport};
use crate::surface::{build_columns, extract_mesh, ColumnMode, ColumnParams, SurfaceMesh};
use crate::volume::{
    crop_roi, Geometry, LabelVolume, ProbabilityVolume, RoiSpec, ScalarVolume, Volume,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    Eq1,
    Gradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    RefinedMask,
    Sphere,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub roi_size: usize,
    pub column_length: usize,
    pub node_spacing_mm: f64,
    pub delta: usize,
    pub threshold: f64,
    pub cost_mode: CostMode,
    pub column_mode: ColumnMode,
    pub init_mode: InitMode,
    pub sphere_radius_mm: f64,
    /// Subdivision level of the icosphere used by `init_mode = sphere`.
    pub sphere_subdivisions: usize,
    pub open_iterations: usize,
    pub close_iterations: usize,
    /// Distance exponent of the inward ELF field (see `ColumnParams`).
    pub inward_falloff: i32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let columns = ColumnParams::default();
        Self {
            roi_size: RoiSpec::DEFAULT_SIZE,
            column_length: columns.length,
            node_spacing_mm: columns.spacing,
            delta: 2,
            threshold: 0.5,
            cost_mode: CostMode::Eq1,
            column_mode: columns.mode,
            init_mode: InitMode::RefinedMask,
            sphere_radius_mm: 8.0,
            sphere_subdivisions: 3,
            open_iterations: RefineParams::default().open_iterations,
            close_iterations: RefineParams::default().close_iterations,
            inward_falloff: columns.inward_falloff,
        }
    }
}

impl PipelineConfig {
    /// The classic LOGISMOS baseline: analytic sphere, gradient costs.
    pub fn sphere_baseline() -> Self {
        Self {
            init_mode: InitMode::Sphere,
            cost_mode: CostMode::Gradient,
            ..Self::default()
        }
    }

    pub fn column_params(&self) -> ColumnParams {
        ColumnParams {
            length: self.column_length,
            spacing: self.node_spacing_mm,
            mode: self.column_mode,
            inward_falloff: self.inward_falloff,
            ..ColumnParams::default()
        }
    }

    pub fn refine_params(&self) -> RefineParams {
        RefineParams {
            open_iterations: self.open_iterations,
            close_iterations: self.close_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        RoiSpec::new([0; 3], self.roi_size)?;
        self.column_params().validate()?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if !(self.sphere_radius_mm.is_finite() && self.sphere_radius_mm > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sphere radius must be positive, got {}",
                self.sphere_radius_mm
            )));
        }
        if self.sphere_subdivisions > 6 {
            return Err(Error::InvalidConfig(format!(
                "sphere subdivisions must be at most 6, got {}",
                self.sphere_subdivisions
            )));
        }
        Ok(())
    }
}

/// Error tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl StageError {
    pub fn is_bad_input(&self) -> bool {
        self.error.is_bad_input()
    }
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub enclosed_volume_mm3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub roi: RoiSpec,
    pub initial_voxels: usize,
    /// Absent for the sphere initialisation, which skips refinement.
    pub refine: Option<RefineReport>,
    pub refined_voxels: Option<usize>,
    pub mesh: MeshSummary,
    pub columns: usize,
    /// Closest approach of nodes from different columns, clamped to one
    /// node spacing.
    pub min_inter_column_distance_mm: f64,
    pub solution: SurfaceSolution,
    pub output_voxels: usize,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Masks and report of one run. All masks are in the ROI geometry.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    /// Thresholded probability map before refinement.
    pub initial: LabelVolume,
    /// Refined mask (refined-mask initialisation only).
    pub refined: Option<LabelVolume>,
    pub segmentation: LabelVolume,
    pub mesh: SurfaceMesh,
    pub report: PipelineReport,
}

struct Timer {
    timings: BTreeMap<String, f64>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Self {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings
            .insert(stage.to_string(), (now - self.last).as_secs_f64() * 1e3);
        self.last = now;
    }
}

/// Runs the pipeline on in-memory volumes; `center` is a voxel index of the
/// full volume.
pub fn run_pipeline(
    intensity: &ScalarVolume,
    prob: &ProbabilityVolume,
    center: [i64; 3],
    config: &PipelineConfig,
) -> Result<PipelineOutput, StageError> {
    let mut timer = Timer::new();
    config.validate().stage("config")?;
    intensity
        .geometry()
        .ensure_matches(prob.geometry(), "intensity vs probability")
        .stage("crop")?;
    let roi = RoiSpec::new(center, config.roi_size).stage("crop")?;
    let intensity = crop_roi(intensity, &roi).stage("crop")?;
    let prob = crop_roi(prob, &roi).stage("crop")?;
    let geometry = *intensity.geometry();
    timer.lap("crop");

    let initial = prob.threshold(config.threshold);
    timer.lap("threshold");

    let (mesh, cost_prob, refined, refine_report) = match config.init_mode {
        InitMode::RefinedMask => {
            let (mask, refined_prob, report) =
                refine_pipeline(&prob, &initial, &intensity, &config.refine_params())
                    .stage("refine")?;
            timer.lap("refine");
            let mesh = extract_mesh(&mask).stage("mesh")?;
            timer.lap("mesh");
            (mesh, refined_prob, Some(mask), Some(report))
        }
        InitMode::Sphere => {
            let mesh = SurfaceMesh::icosphere(
                geometry.center(),
                config.sphere_radius_mm,
                config.sphere_subdivisions,
            );
            timer.lap("mesh");
            (mesh, prob.clone(), None, None)
        }
    };

    let columns = build_columns(&mesh, &config.column_params()).stage("columns")?;
    let min_distance = columns.min_inter_column_distance();
    timer.lap("columns");

    let graph = match config.cost_mode {
        CostMode::Eq1 => eq1_costs(&columns, &cost_prob, config.delta),
        CostMode::Gradient => gradient_costs(&columns, &intensity, config.delta),
    }
    .stage("costs")?;
    timer.lap("costs");

    let network = build_flow_network(&graph).stage("network")?;
    timer.lap("network");
    let flow = max_flow(&network);
    timer.lap("max_flow");
    let solution = extract_surface(&flow.source_side, &graph).stage("surface")?;
    timer.lap("surface");

    let segmentation = voxelize(&solution, &columns, &mesh, &geometry).stage("voxelize")?;
    timer.lap("voxelize");

    let report = PipelineReport {
        config: config.clone(),
        roi,
        initial_voxels: initial.count(),
        refine: refine_report,
        refined_voxels: refined.as_ref().map(LabelVolume::count),
        mesh: MeshSummary {
            vertices: mesh.vertex_count(),
            triangles: mesh.triangles().len(),
            enclosed_volume_mm3: mesh.signed_volume(),
        },
        columns: columns.len(),
        min_inter_column_distance_mm: min_distance,
        solution,
        output_voxels: segmentation.count(),
        timings_ms: timer.timings,
    };
    Ok(PipelineOutput {
        initial,
        refined,
        segmentation,
        mesh,
        report,
    })
}

/// Copies an ROI mask back into the full volume; voxels that the crop
/// replicated from beyond the border are dropped.
pub fn paste_roi(mask: &LabelVolume, roi: &RoiSpec, full: &Geometry) -> LabelVolume {
    let half = (roi.size / 2) as i64;
    let start = roi.center.map(|c| c - half);
    let g = mask.geometry();
    let mut out = vec![false; full.len()];
    for i in 0..g.len() {
        if !mask.is_set(i) {
            continue;
        }
        let c = g.coords(i);
        let target = [
            start[0] + c[0] as i64,
            start[1] + c[1] as i64,
            start[2] + c[2] as i64,
        ];
        if full.contains(target) {
            out[full.index(target[0] as usize, target[1] as usize, target[2] as usize)] = true;
        }
    }
    LabelVolume::from_mask(*full, &out)
}

/// File names written by [`segment_files`].
pub const SEGMENTATION_FILE: &str = "segmentation.mha";
pub const REPORT_FILE: &str = "report.json";

/// Reads the intensity and probability volumes (stage "load").
pub fn load_inputs(
    intensity_path: &Path,
    prob_path: &Path,
) -> Result<(ScalarVolume, ProbabilityVolume), StageError> {
    let intensity = read_scalar(intensity_path).stage("load")?;
    let prob = read_probability(prob_path).stage("load")?;
    intensity
        .geometry()
        .ensure_matches(prob.geometry(), "intensity vs probability")
        .stage("load")?;
    Ok((intensity, prob))
}

/// Writes the run's mask, pasted back into `full`, and its JSON report
/// into `out_dir` (stage "write").
pub fn write_outputs(
    output: &PipelineOutput,
    full: &Geometry,
    out_dir: &Path,
) -> Result<(), StageError> {
    let mask = paste_roi(&output.segmentation, &output.report.roi, full);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(out_dir, e))
        .stage("write")?;
    write_metaimage(&mask, out_dir.join(SEGMENTATION_FILE)).stage("write")?;
    let json = serde_json::to_string_pretty(&output.report).expect("report serialises");
    let report_path: PathBuf = out_dir.join(REPORT_FILE);
    std::fs::write(&report_path, json + "\n")
        .map_err(|e| Error::io(&report_path, e))
        .stage("write")
}

/// Loads the inputs, runs the pipeline and writes the full-size mask plus
/// the JSON report into `out_dir`.
pub fn segment_files(
    intensity_path: &Path,
    prob_path: &Path,
    center: [i64; 3],
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<PipelineReport, StageError> {
    let (intensity, prob) = load_inputs(intensity_path, prob_path)?;
    let out = run_pipeline(&intensity, &prob, center, config)?;
    write_outputs(&out, intensity.geometry(), out_dir)?;
    Ok(out.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metaimage::{read_label, write_metaimage};
    use crate::metrics::evaluate;
    use crate::phantom::{generate, PhantomRecipe, PhantomSpec};

    #[test]
    fn config_defaults_and_json() {
        let c = PipelineConfig::default();
        assert_eq!(
            (
                c.roi_size,
                c.column_length,
                c.node_spacing_mm,
                c.delta,
                c.threshold
            ),
            (32, 50, 0.5, 2, 0.5)
        );
        assert_eq!(c.open_iterations, 2);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["cost_mode"], "eq1");
        assert_eq!(json["column_mode"], "elf");
        assert_eq!(json["init_mode"], "refined-mask");
        let parsed: PipelineConfig =
            serde_json::from_str(r#"{"delta": 3, "init_mode": "sphere"}"#).unwrap();
        assert_eq!(parsed.delta, 3);
        assert_eq!(parsed.init_mode, InitMode::Sphere);
        assert_eq!(parsed.roi_size, 32);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = [
            PipelineConfig {
                threshold: 1.0,
                ..Default::default()
            },
            PipelineConfig {
                roi_size: 31,
                ..Default::default()
            },
            PipelineConfig {
                node_spacing_mm: -0.5,
                ..Default::default()
            },
            PipelineConfig {
                sphere_radius_mm: 0.0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        assert!(PipelineConfig::sphere_baseline().validate().is_ok());
    }

    #[test]
    fn paste_roi_drops_replicated_voxels() {
        let full = Geometry::unit([6, 6, 6]).unwrap();
        let roi = RoiSpec::new([1, 3, 3], 4).unwrap();
        let roi_geom = Geometry::new([4; 3], [1.0; 3], [-1.0, 1.0, 1.0]).unwrap();
        let mut m = vec![false; roi_geom.len()];
        m[roi_geom.index(0, 1, 1)] = true; // x = -1, outside the volume
        m[roi_geom.index(2, 1, 1)] = true; // x = 1
        let pasted = paste_roi(&LabelVolume::from_mask(roi_geom, &m), &roi, &full);
        assert_eq!(pasted.count(), 1);
        assert!(pasted.is_set(full.index(1, 2, 2)));
    }

    fn phantom() -> crate::phantom::PhantomOutput {
        generate(&PhantomRecipe::new(PhantomSpec::centered_sphere(
            32, 8.0, 5,
        )))
        .unwrap()
    }

    #[test]
    fn phantom_run_is_accurate_and_deterministic() {
        let ph = phantom();
        let config = PipelineConfig::default();
        let a = run_pipeline(&ph.intensity, &ph.probability, [16, 16, 16], &config).unwrap();
        let eval = evaluate(&a.segmentation, &ph.label).unwrap();
        assert!(eval.dsc >= 0.9 && eval.rvd <= 0.1, "{eval:?}");
        let b = run_pipeline(&ph.intensity, &ph.probability, [16, 16, 16], &config).unwrap();
        assert_eq!(a.segmentation, b.segmentation);
        let strip = |r: &PipelineReport| {
            let mut v = serde_json::to_value(r).unwrap();
            v.as_object_mut().unwrap().remove("timings_ms");
            v
        };
        assert_eq!(strip(&a.report), strip(&b.report));
        for stage in [
            "crop", "refine", "mesh", "columns", "costs", "max_flow", "voxelize",
        ] {
            assert!(a.report.timings_ms.contains_key(stage), "{stage}");
        }
    }

    #[test]
    fn sphere_baseline_runs() {
        let ph = phantom();
        let out = run_pipeline(
            &ph.intensity,
            &ph.probability,
            [16, 16, 16],
            &PipelineConfig::sphere_baseline(),
        )
        .unwrap();
        assert!(out.report.refine.is_none() && out.refined.is_none());
        assert_eq!(out.report.columns, 642);
        assert!(out.segmentation.count() > 0);
    }

    #[test]
    fn stage_names_on_errors() {
        let ph = phantom();
        let err = run_pipeline(
            &ph.intensity,
            &ph.probability,
            [40, 0, 0],
            &PipelineConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage, "crop");
        assert!(err.is_bad_input());
        let empty = ProbabilityVolume::new(*ph.label.geometry(), vec![0.0; 32 * 32 * 32]).unwrap();
        let err = run_pipeline(
            &ph.intensity,
            &empty,
            [16, 16, 16],
            &PipelineConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err.stage, "refine");
        let err = run_pipeline(
            &ph.intensity,
            &ph.probability,
            [16, 16, 16],
            &PipelineConfig {
                threshold: 0.0,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.stage, "config");
    }

    #[test]
    fn files_round_trip() {
        let ph = phantom();
        let dir = tempfile::tempdir().unwrap();
        let ip = dir.path().join("intensity.mha");
        let pp = dir.path().join("prob.mha");
        write_metaimage(&ph.intensity, &ip).unwrap();
        write_metaimage(&ph.probability, &pp).unwrap();
        let out = dir.path().join("out");
        let report =
            segment_files(&ip, &pp, [16, 16, 16], &PipelineConfig::default(), &out).unwrap();
        let mask = read_label(out.join(SEGMENTATION_FILE)).unwrap();
        assert_eq!(mask.count(), report.output_voxels);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap();
        assert!(json["solution"]["boundary_index"].is_array());
        assert!(json["refine"]["mu1"].is_number());
        let err = segment_files(
            &dir.path().join("missing.mha"),
            &pp,
            [16, 16, 16],
            &PipelineConfig::default(),
            &out,
        )
        .unwrap_err();
        assert_eq!(err.stage, "load");
        assert!(err.is_bad_input());
    }
}
