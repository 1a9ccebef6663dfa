//! Post-processing of a thresholded probability map: mixture-based false
//! positive suppression, opening, largest-component retention and closing.

pub mod components;
pub mod gmm;
pub mod morphology;

use serde::{Deserialize, Serialize};

pub use components::{count_components, label_components, largest_component, Components};
pub use gmm::{fit_gmm2, GmmFit};
pub use morphology::{close3d, dilate, erode, open3d};

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelVolume, ProbabilityVolume, ScalarVolume, Volume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    /// `None` when the foreground intensities are all identical and no
    /// mixture can be fitted.
    #[serde(flatten)]
    pub gmm: Option<GmmFit>,
    pub condition_applied: bool,
    pub voxels_zeroed: usize,
    pub components_before: usize,
    pub components_after: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub open_iterations: usize,
    pub close_iterations: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            open_iterations: 2,
            close_iterations: 1,
        }
    }
}

/// Fits a two-component mixture to the intensities under the segmentation.
/// When the darker mean lies more than one sigma below the brighter one,
/// every segmented voxel darker than the darker mean is a false positive: it
/// loses its probability and its label. Voxels outside the segmentation are
/// never touched. Otherwise the inputs pass through unchanged.
pub fn gmm_suppress(
    prob: &ProbabilityVolume,
    seg: &LabelVolume,
    intensity: &ScalarVolume,
) -> Result<(ProbabilityVolume, LabelVolume, RefineReport)> {
    prob.geometry()
        .ensure_matches(seg.geometry(), "probability vs segmentation")?;
    prob.geometry()
        .ensure_matches(intensity.geometry(), "probability vs intensity")?;

    let samples: Vec<f64> = seg
        .data()
        .iter()
        .zip(intensity.data())
        .filter(|(&s, _)| s != 0.0)
        .map(|(_, &v)| v as f64)
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyMask);
    }
    let components = count_components(seg);
    let fit = match fit_gmm2(&samples) {
        Ok(fit) => fit,
        Err(Error::DegenerateSamples) => {
            let report = RefineReport {
                gmm: None,
                condition_applied: false,
                voxels_zeroed: 0,
                components_before: components,
                components_after: components,
            };
            return Ok((prob.clone(), seg.clone(), report));
        }
        Err(e) => return Err(e),
    };

    let applied = fit.separated();
    if !applied {
        let report = RefineReport {
            gmm: Some(fit),
            condition_applied: false,
            voxels_zeroed: 0,
            components_before: components,
            components_after: components,
        };
        return Ok((prob.clone(), seg.clone(), report));
    }

    let g = *prob.geometry();
    let cutoff = fit.mu2;
    let mut p = prob.data().to_vec();
    let mut s = seg.data().to_vec();
    let mut zeroed = 0;
    for (i, &v) in intensity.data().iter().enumerate() {
        if seg.is_set(i) && (v as f64) < cutoff {
            p[i] = 0.0;
            s[i] = 0.0;
            zeroed += 1;
        }
    }
    let seg_out = LabelVolume::from_grid(Grid::new(g, s)?)?;
    let report = RefineReport {
        gmm: Some(fit),
        condition_applied: true,
        voxels_zeroed: zeroed,
        components_before: components,
        components_after: count_components(&seg_out),
    };
    Ok((ProbabilityVolume::new(g, p)?, seg_out, report))
}

/// Suppression, opening, largest component, closing — in that order.
/// Morphology never touches the probability map.
pub fn refine_pipeline(
    prob: &ProbabilityVolume,
    seg: &LabelVolume,
    intensity: &ScalarVolume,
    params: &RefineParams,
) -> Result<(LabelVolume, ProbabilityVolume, RefineReport)> {
    let (prob, suppressed, mut report) = gmm_suppress(prob, seg, intensity)?;
    report.components_before = count_components(seg);
    let opened = open3d(&suppressed, params.open_iterations);
    let kept = largest_component(&opened);
    let closed = close3d(&kept, params.close_iterations);
    report.components_after = count_components(&closed);
    Ok((closed, prob, report))
}
