//! JSON run reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{AlignmentSolution, Transform};
use crate::registration::{IterationRecord, RegistrationResult};
use crate::stats::PairTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    /// Row-major.
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
    pub scale: f64,
    pub mode: String,
}

impl From<&Transform<f64>> for TransformReport {
    fn from(t: &Transform<f64>) -> Self {
        Self {
            rotation: t.rotation.rows(),
            translation: t.translation.clone(),
            scale: t.scale,
            mode: mode_name(t.mode).to_string(),
        }
    }
}

pub fn mode_name(mode: crate::align::Mode) -> &'static str {
    match mode {
        crate::align::Mode::Rigid => "rigid",
        crate::align::Mode::Similarity => "similarity",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub k: usize,
    pub weight: f64,
}

pub fn pair_reports(table: &PairTable<f64>) -> Vec<PairReport> {
    table
        .entries()
        .iter()
        .map(|e| PairReport { i: e.i, k: e.k, weight: e.weight })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub threshold: f64,
    pub pairs_before: usize,
    pub pairs_after: usize,
    pub e_min: f64,
    pub transform: TransformReport,
    pub pruned: Vec<[usize; 2]>,
}

impl From<&IterationRecord<f64>> for IterationReport {
    fn from(r: &IterationRecord<f64>) -> Self {
        Self {
            iteration: r.iteration,
            threshold: r.threshold_used,
            pairs_before: r.pairs_before,
            pairs_after: r.pairs_after,
            e_min: r.e_min,
            transform: (&r.transform).into(),
            pruned: r.pruned.iter().map(|&(i, k)| [i, k]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub det_sign: i8,
    pub eigenvalues_zzt: Vec<f64>,
    pub reflection_corrected: bool,
    pub trace_sqrt: f64,
}

impl From<&AlignmentSolution<f64>> for Diagnostics {
    fn from(s: &AlignmentSolution<f64>) -> Self {
        Self {
            det_sign: s.det_sign,
            eigenvalues_zzt: s.eigenvalues_zzt.clone(),
            reflection_corrected: s.reflection_corrected,
            trace_sqrt: s.trace_sqrt,
        }
    }
}

/// Everything needed to rerun: input paths, weight source and solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub source: String,
    pub target: String,
    pub mode: String,
    pub allow_reflection: bool,
    pub rank_tol: f64,
    pub weights: Option<String>,
    pub weights_init: Option<String>,
    pub sigma: Option<f64>,
    pub threshold: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: ConfigEcho,
    pub input_digests: BTreeMap<String, String>,
    pub transform: TransformReport,
    pub e_min: f64,
    /// `None` for a single alignment.
    pub converged: Option<bool>,
    pub termination: Option<String>,
    pub score: Option<f64>,
    pub diagnostics: Diagnostics,
    pub iterations: Vec<IterationReport>,
    pub pairs: Vec<PairReport>,
    pub pair_visits: Option<usize>,
    /// Registration only: the transform was refit on the surviving pairs.
    pub refit: Option<bool>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn for_alignment(config: ConfigEcho, solution: &AlignmentSolution<f64>, table: &PairTable<f64>) -> Self {
        Self {
            command: "align".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            input_digests: BTreeMap::new(),
            transform: (&solution.transform).into(),
            e_min: solution.e_min,
            converged: None,
            termination: None,
            score: None,
            diagnostics: solution.into(),
            iterations: Vec::new(),
            pairs: pair_reports(table),
            pair_visits: None,
            refit: None,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn for_registration(command: &str, config: ConfigEcho, result: &RegistrationResult<f64>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            input_digests: BTreeMap::new(),
            transform: (&result.transform).into(),
            e_min: result.final_alignment.e_min,
            converged: Some(result.converged),
            termination: Some(result.termination.as_str().into()),
            score: Some(result.score),
            diagnostics: (&result.final_alignment).into(),
            iterations: result.iterations.iter().map(Into::into).collect(),
            pairs: pair_reports(&result.pairs),
            pair_visits: Some(result.pair_visits),
            refit: Some(result.refit),
            timings_ms: BTreeMap::new(),
        }
    }
}

/// Ground truth written next to a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub dim: usize,
    pub n_points: usize,
    pub noise_sigma: f64,
    pub outlier_count: usize,
    pub spurious_pairs: usize,
    pub transform: TransformReport,
    pub true_pairs: Vec<[usize; 2]>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}
