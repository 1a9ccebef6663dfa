//! Pipeline configuration flags: every `PipelineConfig` field can be set on
//! the command line, on top of an optional JSON config file.

use std::path::PathBuf;

use clap::Args;
use serde::de::DeserializeOwned;

use logismos_core::pipeline::{CostMode, InitMode, PipelineConfig};
use logismos_core::surface::ColumnMode;

use crate::CliError;

/// Parses a serde-named enum variant such as `eq1` or `refined-mask`.
fn parse_variant<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Parses `x,y,z` into a voxel index.
pub fn parse_center(s: &str) -> Result<[i64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got `{s}`"));
    }
    let mut out = [0i64; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("`{part}` is not an integer voxel index"))?;
    }
    Ok(out)
}

#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// JSON file with pipeline settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge length of the cubic ROI in voxels (even, >= 4).
    #[arg(long)]
    pub roi_size: Option<usize>,
    /// Nodes per graph column.
    #[arg(long)]
    pub column_length: Option<usize>,
    /// Distance between column nodes in mm.
    #[arg(long)]
    pub node_spacing_mm: Option<f64>,
    /// Smoothness bound between adjacent columns, in nodes.
    #[arg(long)]
    pub delta: Option<usize>,
    /// Probability threshold for the initial segmentation.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Node costs: `eq1` (probability) or `gradient` (intensity edges).
    #[arg(long, value_parser = parse_variant::<CostMode>)]
    pub cost_mode: Option<CostMode>,
    /// Column geometry: `elf` (electric lines of force) or `normal`.
    #[arg(long, value_parser = parse_variant::<ColumnMode>)]
    pub column_mode: Option<ColumnMode>,
    /// Initial surface: `refined-mask` or `sphere`.
    #[arg(long, value_parser = parse_variant::<InitMode>)]
    pub init_mode: Option<InitMode>,
    /// Radius of the initial sphere in mm (`--init-mode sphere`).
    #[arg(long)]
    pub sphere_radius_mm: Option<f64>,
    /// Icosphere subdivision level (`--init-mode sphere`).
    #[arg(long)]
    pub sphere_subdivisions: Option<usize>,
    /// Opening iterations in the refinement stage.
    #[arg(long)]
    pub open_iterations: Option<usize>,
    /// Closing iterations in the refinement stage.
    #[arg(long)]
    pub close_iterations: Option<usize>,
    /// Distance exponent of the field used to trace columns inward.
    #[arg(long)]
    pub inward_falloff: Option<i32>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))?
            }
            None => PipelineConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        apply!(
            roi_size,
            column_length,
            node_spacing_mm,
            delta,
            threshold,
            cost_mode,
            column_mode,
            init_mode,
            sphere_radius_mm,
            sphere_subdivisions,
            open_iterations,
            close_iterations,
            inward_falloff
        );
        c.validate()
            .map_err(|e| CliError::bad_input(e.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers() {
        assert_eq!(parse_center("16,16,16"), Ok([16, 16, 16]));
        assert_eq!(parse_center(" 1, -2 ,3"), Ok([1, -2, 3]));
        assert!(parse_center("1,2").is_err());
        assert!(parse_center("1,2,x").is_err());
    }

    #[test]
    fn variants() {
        assert_eq!(
            parse_variant::<CostMode>("gradient"),
            Ok(CostMode::Gradient)
        );
        assert_eq!(
            parse_variant::<InitMode>("refined-mask"),
            Ok(InitMode::RefinedMask)
        );
        assert_eq!(
            parse_variant::<ColumnMode>("normal"),
            Ok(ColumnMode::Normal)
        );
        assert!(parse_variant::<CostMode>("eq2").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = ConfigArgs {
            delta: Some(3),
            init_mode: Some(InitMode::Sphere),
            ..Default::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.delta, 3);
        assert_eq!(c.init_mode, InitMode::Sphere);
        assert_eq!(c.roi_size, 32);
        let bad = ConfigArgs {
            threshold: Some(1.5),
            ..Default::default()
        };
        assert!(bad.resolve().unwrap_err().is_bad_input());
    }
}
