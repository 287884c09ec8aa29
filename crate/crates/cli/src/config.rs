//! TOML run configuration. Every field is optional; missing ones take the
//! library defaults.

use std::path::Path;

use epiline::planar::{InlierTest, PlanarParams};
use epiline::refine::RefineParams;
use epiline::sim::SceneConfig;
use epiline::{MatchParams, PipelineParams, RansacParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSection {
    pub tau_p: f64,
    pub tau_l: f64,
    pub theta_ncc: f64,
    pub max_recurring: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacSection {
    pub iterations: usize,
    pub validation_lines: usize,
    pub early_exit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    pub enabled: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanarSection {
    pub disc_radius: f64,
    pub theta_planar: f64,
    pub tau_e: f64,
    pub inlier_test: InlierTest,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub mode: Mode,
    pub matching: MatchingSection,
    pub ransac: RansacSection,
    pub refine: RefineSection,
    pub planar: PlanarSection,
}

impl Default for MatchingSection {
    fn default() -> Self {
        let m = MatchParams::default();
        Self { tau_p: m.tau_p, tau_l: m.tau_l, theta_ncc: m.theta_ncc, max_recurring: m.max_recurring }
    }
}

impl Default for RansacSection {
    fn default() -> Self {
        let r = RansacParams::default();
        Self { iterations: r.iterations, validation_lines: r.validation_lines, early_exit: r.early_exit }
    }
}

impl Default for RefineSection {
    fn default() -> Self {
        Self { enabled: true, iterations: RefineParams::default().iterations }
    }
}

impl Default for PlanarSection {
    fn default() -> Self {
        let p = PlanarParams::default();
        Self {
            disc_radius: p.disc_radius,
            theta_planar: p.theta_planar,
            tau_e: p.tau_e,
            inlier_test: p.inlier_test,
            iterations: p.iterations,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Standard,
            matching: MatchingSection::default(),
            ransac: RansacSection::default(),
            refine: RefineSection::default(),
            planar: PlanarSection::default(),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    toml::from_str(&read_to_string(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn load_scene_config(path: &Path) -> Result<SceneConfig, CliError> {
    toml::from_str(&read_to_string(path)?).map_err(|e| CliError::parse(path, e))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("tau_p", self.matching.tau_p),
            ("tau_l", self.matching.tau_l),
            ("theta_ncc", self.matching.theta_ncc),
            ("theta_planar", self.planar.theta_planar),
            ("tau_e", self.planar.tau_e),
            ("disc_radius", self.planar.disc_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ransac.iterations == 0 || self.ransac.validation_lines == 0 {
            return Err(CliError::Config("RANSAC iterations and validation lines must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        let m = &self.matching;
        let params = PipelineParams {
            matching: MatchParams {
                tau_p: m.tau_p,
                tau_l: m.tau_l,
                theta_ncc: m.theta_ncc,
                max_recurring: m.max_recurring,
                seed: 0,
            },
            ransac: RansacParams {
                iterations: self.ransac.iterations,
                theta_ncc: m.theta_ncc,
                validation_lines: self.ransac.validation_lines,
                early_exit: self.ransac.early_exit,
                seed: 0,
            },
            refine: RefineParams {
                iterations: self.refine.iterations,
                validation_lines: self.ransac.validation_lines,
                seed: 0,
            },
            refine_enabled: self.refine.enabled,
        };
        params.with_seed(self.seed)
    }

    pub fn refine_params(&self) -> RefineParams {
        self.pipeline_params().refine
    }

    pub fn planar_params(&self) -> PlanarParams {
        let p = &self.planar;
        PlanarParams {
            tau_p: self.matching.tau_p,
            tau_l: self.matching.tau_l,
            disc_radius: p.disc_radius,
            theta_planar: p.theta_planar,
            tau_e: p.tau_e,
            inlier_test: p.inlier_test,
            iterations: p.iterations,
            max_recurring: self.matching.max_recurring,
            seed: self.seed,
        }
    }
}
