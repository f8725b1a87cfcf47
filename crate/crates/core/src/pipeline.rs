//! Batch pipeline: generate → split → join → fit → grid → rank → report,
//! with figure emission and a hashed artifact manifest.
//!
//! `run_pipeline` executes the whole chain in memory and writes every
//! artifact; the step functions mirror individual subcommands and go
//! through the filesystem, so a chained run reproduces the same bytes
//! (CSV round trips are value-exact and fitting is deterministic).

use crate::config::RunConfig;
use crate::cusp::fold_boundary_b;
use crate::datastore::{
    self, import_csv, join, population_from_table, population_table, split, DbTable, StoreError,
};
use crate::influence::{
    apply_intervention, fusion_gain, rank_targets, susceptibility_csv, susceptibility_record,
    Branch, InfluenceError,
};
use crate::model::{fit, probability_grid, FeatureSpec, FittedModel, ModelError, ProbabilityGrid};
use crate::sampler::{sample_population, Person, SampleError};
use crate::svg::{Figure, RenderError, ScatterPoint};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Fixed artifact file names inside the output directory.
pub mod artifacts {
    pub const POPULATION: &str = "population.csv";
    pub const DB_A: &str = "db_a.csv";
    pub const DB_B: &str = "db_b.csv";
    pub const JOINED: &str = "joined.csv";
    pub const MODEL_A: &str = "model_a.json";
    pub const MODEL_B: &str = "model_b.json";
    pub const MODEL_JOINT: &str = "model_joint.json";
    pub const GRID_A: &str = "grid_a.csv";
    pub const GRID_B: &str = "grid_b.csv";
    pub const GRID_JOINT: &str = "grid_joint.csv";
    pub const SCATTER: &str = "scatter.csv";
    pub const CUSP_CURVE: &str = "cusp_curve.csv";
    pub const SUSCEPTIBILITY: &str = "susceptibility.csv";
    pub const INTERVENTIONS: &str = "interventions.csv";
    pub const FUSION_REPORT: &str = "fusion_report.json";
    pub const FIG_1A: &str = "fig_1a.svg";
    pub const FIG_1B: &str = "fig_1b.svg";
    pub const FIG_1C: &str = "fig_1c.svg";
    pub const FIG_1D: &str = "fig_1d.svg";
    pub const FIG_2B: &str = "fig_2b.svg";
    pub const MANIFEST: &str = "manifest.json";
}

/// How far below the fold the `intervene` subcommand pushes `b`.
pub const INTERVENTION_MARGIN: f64 = 0.01;

/// Points on the emitted fold-curve polyline.
const CUSP_CURVE_SAMPLES: usize = 401;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// 64-bit FNV-1a content hash, the manifest's change detector.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &byte in bytes {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub hash: String,
}

/// Listing of every artifact the pipeline wrote, with content hashes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub hash_algorithm: String,
    /// True when the run aborted and the listing covers only the files
    /// written before the failure.
    pub partial: bool,
    pub files: Vec<ManifestEntry>,
}

/// Records every artifact written into the output directory.
struct ArtifactSink {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactSink {
    fn new(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            hash: format!("{:016x}", fnv1a64(bytes)),
        });
        Ok(())
    }

    fn manifest(&self, partial: bool) -> Manifest {
        let mut files = self.entries.clone();
        files.sort_by(|l, r| l.path.cmp(&r.path));
        Manifest {
            hash_algorithm: "fnv1a-64".to_string(),
            partial,
            files,
        }
    }
}

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, PipelineError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Run the full pipeline, writing every artifact plus the manifest.
/// On error a partial manifest is still written before returning.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let mut sink = ArtifactSink::new(&cfg.output_dir)?;
    match run_steps(cfg, &mut sink) {
        Ok(()) => {
            let manifest = sink.manifest(false);
            let bytes = to_json_bytes(&manifest)?;
            let path = cfg.output_dir.join(artifacts::MANIFEST);
            std::fs::write(&path, bytes).map_err(|e| PipelineError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(manifest)
        }
        Err(error) => {
            let manifest = sink.manifest(true);
            if let Ok(bytes) = to_json_bytes(&manifest) {
                let _ = std::fs::write(cfg.output_dir.join(artifacts::MANIFEST), bytes);
            }
            Err(error)
        }
    }
}

fn run_steps(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<(), PipelineError> {
    let population = sample_population(&cfg.sampler)?;
    sink.write(
        artifacts::POPULATION,
        population_table(&population).to_csv().as_bytes(),
    )?;

    let (db_a, db_b) = split(&population);
    sink.write(artifacts::DB_A, db_a.to_csv().as_bytes())?;
    sink.write(artifacts::DB_B, db_b.to_csv().as_bytes())?;

    let joined = join(&db_a, &db_b)?;
    sink.write(artifacts::JOINED, joined.to_csv().as_bytes())?;

    let model_a = fit(&joined, &FeatureSpec::a_only(), cfg.lambda)?;
    let model_b = fit(&joined, &FeatureSpec::b_only(), cfg.lambda)?;
    let model_joint = fit(&joined, &FeatureSpec::joint(), cfg.lambda)?;
    sink.write(artifacts::MODEL_A, &to_json_bytes(&model_a)?)?;
    sink.write(artifacts::MODEL_B, &to_json_bytes(&model_b)?)?;
    sink.write(artifacts::MODEL_JOINT, &to_json_bytes(&model_joint)?)?;

    let a_range = cfg.sampler.a_range;
    let b_range = cfg.sampler.b_range;
    let grid_a = probability_grid(&model_a, a_range, b_range, cfg.grid_resolution)?;
    let grid_b = probability_grid(&model_b, a_range, b_range, cfg.grid_resolution)?;
    let grid_joint = probability_grid(&model_joint, a_range, b_range, cfg.grid_resolution)?;
    sink.write(artifacts::GRID_A, grid_a.to_csv().as_bytes())?;
    sink.write(artifacts::GRID_B, grid_b.to_csv().as_bytes())?;
    sink.write(artifacts::GRID_JOINT, grid_joint.to_csv().as_bytes())?;

    sink.write(artifacts::SCATTER, scatter_csv(&population).as_bytes())?;
    let curve = cusp_curve_points(a_range, b_range);
    sink.write(artifacts::CUSP_CURVE, curve_csv(&curve).as_bytes())?;

    let ranking = rank_targets(&population);
    sink.write(
        artifacts::SUSCEPTIBILITY,
        susceptibility_csv(&ranking).as_bytes(),
    )?;

    let report = fusion_gain(&population, &joined, &model_a, &model_b, &model_joint)?;
    sink.write(artifacts::FUSION_REPORT, &to_json_bytes(&report)?)?;

    if cfg.emit_svg {
        let points: Vec<ScatterPoint> = population
            .iter()
            .map(|p| ScatterPoint {
                a: p.a,
                b: p.b,
                vote: p.y,
            })
            .collect();
        let heatmaps = [
            (artifacts::FIG_1A, "P(Y=1|A) from DB_A", &grid_a),
            (artifacts::FIG_1B, "P(Y=1|B) from DB_B", &grid_b),
            (
                artifacts::FIG_1D,
                "P(Y=1|A,B) from joined databases",
                &grid_joint,
            ),
        ];
        for (name, title, grid) in heatmaps {
            sink.write(
                name,
                figure_bytes(&Figure::Heatmap { title, grid })?.as_slice(),
            )?;
        }
        let scatter = Figure::Scatter {
            title: "Sampled votes and fold curve",
            points: &points,
            a_range,
            b_range,
            cusp_curve: Some(&curve),
            switch_level: None,
        };
        sink.write(artifacts::FIG_1C, figure_bytes(&scatter)?.as_slice())?;
        let scatter_with_lines = Figure::Scatter {
            title: "Sampled votes, fold curve, switching lines",
            points: &points,
            a_range,
            b_range,
            cusp_curve: Some(&curve),
            switch_level: Some(0.5),
        };
        sink.write(
            artifacts::FIG_2B,
            figure_bytes(&scatter_with_lines)?.as_slice(),
        )?;
    }
    Ok(())
}

fn figure_bytes(figure: &Figure) -> Result<Vec<u8>, PipelineError> {
    Ok(crate::svg::figure_svg(figure)?.into_bytes())
}

/// `id,a,b,y` projection of the population for the scatter figures.
fn scatter_csv(population: &[Person]) -> String {
    let mut out = String::from("id,a,b,y\n");
    for p in population {
        let _ = writeln!(out, "{},{},{},{}", p.id, p.a, p.b, p.y);
    }
    out
}

/// Sample the fold curve `b = 3*(|a|/2)^(2/3)` over the `a` range,
/// dropping points outside the `b` range.
pub fn cusp_curve_points(a_range: (f64, f64), b_range: (f64, f64)) -> Vec<(f64, f64)> {
    (0..CUSP_CURVE_SAMPLES)
        .map(|i| {
            let t = i as f64 / (CUSP_CURVE_SAMPLES - 1) as f64;
            let a = a_range.0 + t * (a_range.1 - a_range.0);
            (a, fold_boundary_b(a))
        })
        .filter(|(_, b)| (b_range.0..=b_range.1).contains(b))
        .collect()
}

fn curve_csv(curve: &[(f64, f64)]) -> String {
    let mut out = String::from("a,b\n");
    for (a, b) in curve {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })
}

fn load_population(cfg: &RunConfig) -> Result<Vec<Person>, PipelineError> {
    let table = import_csv(
        &cfg.output_dir.join(artifacts::POPULATION),
        &datastore::population_schema(),
    )?;
    Ok(population_from_table(&table)?)
}

fn load_model(cfg: &RunConfig, name: &str) -> Result<FittedModel, PipelineError> {
    let path = cfg.output_dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// `generate`: sample the population and write `population.csv`.
pub fn step_generate(cfg: &RunConfig) -> Result<(), PipelineError> {
    ensure_dir(&cfg.output_dir)?;
    let population = sample_population(&cfg.sampler)?;
    write_file(
        &cfg.output_dir.join(artifacts::POPULATION),
        population_table(&population).to_csv().as_bytes(),
    )
}

/// `split`: read the population, write the two provider tables.
pub fn step_split(cfg: &RunConfig) -> Result<(), PipelineError> {
    let population = load_population(cfg)?;
    let (db_a, db_b) = split(&population);
    write_file(
        &cfg.output_dir.join(artifacts::DB_A),
        db_a.to_csv().as_bytes(),
    )?;
    write_file(
        &cfg.output_dir.join(artifacts::DB_B),
        db_b.to_csv().as_bytes(),
    )
}

/// `join`: inner-join the provider tables on id.
pub fn step_join(cfg: &RunConfig) -> Result<(), PipelineError> {
    let db_a = import_csv(
        &cfg.output_dir.join(artifacts::DB_A),
        &datastore::db_a_schema(),
    )?;
    let db_b = import_csv(
        &cfg.output_dir.join(artifacts::DB_B),
        &datastore::db_b_schema(),
    )?;
    let joined = join(&db_a, &db_b)?;
    write_file(
        &cfg.output_dir.join(artifacts::JOINED),
        joined.to_csv().as_bytes(),
    )
}

fn load_joined(cfg: &RunConfig) -> Result<DbTable, PipelineError> {
    Ok(import_csv(
        &cfg.output_dir.join(artifacts::JOINED),
        &datastore::joined_schema(),
    )?)
}

/// `fit`: train the three models on the joined table.
pub fn step_fit(cfg: &RunConfig) -> Result<(), PipelineError> {
    let joined = load_joined(cfg)?;
    for (name, spec) in [
        (artifacts::MODEL_A, FeatureSpec::a_only()),
        (artifacts::MODEL_B, FeatureSpec::b_only()),
        (artifacts::MODEL_JOINT, FeatureSpec::joint()),
    ] {
        let model = fit(&joined, &spec, cfg.lambda)?;
        write_file(&cfg.output_dir.join(name), &to_json_bytes(&model)?)?;
    }
    Ok(())
}

/// `grid`: evaluate each stored model on the probability grid.
pub fn step_grid(cfg: &RunConfig) -> Result<(), PipelineError> {
    for (model_name, grid_name) in [
        (artifacts::MODEL_A, artifacts::GRID_A),
        (artifacts::MODEL_B, artifacts::GRID_B),
        (artifacts::MODEL_JOINT, artifacts::GRID_JOINT),
    ] {
        let model = load_model(cfg, model_name)?;
        let grid: ProbabilityGrid = probability_grid(
            &model,
            cfg.sampler.a_range,
            cfg.sampler.b_range,
            cfg.grid_resolution,
        )?;
        write_file(&cfg.output_dir.join(grid_name), grid.to_csv().as_bytes())?;
    }
    Ok(())
}

/// `rank`: write the susceptibility ranking.
pub fn step_rank(cfg: &RunConfig) -> Result<(), PipelineError> {
    let population = load_population(cfg)?;
    let ranking = rank_targets(&population);
    write_file(
        &cfg.output_dir.join(artifacts::SUSCEPTIBILITY),
        susceptibility_csv(&ranking).as_bytes(),
    )
}

/// `intervene`: push every metastable individual's `b` just below the fold
/// and record the outcomes.
pub fn step_intervene(cfg: &RunConfig) -> Result<(), PipelineError> {
    let population = load_population(cfg)?;
    let mut out = String::from("id,a,b,new_b,x,new_x,p,new_p,flipped\n");
    for person in &population {
        if susceptibility_record(person).branch != Branch::Metastable {
            continue;
        }
        let new_b = fold_boundary_b(person.a) - INTERVENTION_MARGIN;
        let result = apply_intervention(person, new_b, cfg.sampler.sigma, &cfg.sampler.minimizer)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            person.id,
            person.a,
            person.b,
            result.new_b,
            person.x,
            result.new_x,
            person.p,
            result.new_p,
            result.flipped as u8
        );
    }
    write_file(
        &cfg.output_dir.join(artifacts::INTERVENTIONS),
        out.as_bytes(),
    )
}

/// `report`: evaluate the stored models and write the fusion-gain report.
pub fn step_report(cfg: &RunConfig) -> Result<(), PipelineError> {
    let population = load_population(cfg)?;
    let joined = load_joined(cfg)?;
    let model_a = load_model(cfg, artifacts::MODEL_A)?;
    let model_b = load_model(cfg, artifacts::MODEL_B)?;
    let model_joint = load_model(cfg, artifacts::MODEL_JOINT)?;
    let report = fusion_gain(&population, &joined, &model_a, &model_b, &model_joint)?;
    write_file(
        &cfg.output_dir.join(artifacts::FUSION_REPORT),
        &to_json_bytes(&report)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn cusp_curve_stays_in_range_and_matches_fold() {
        let curve = cusp_curve_points((-1.0, 1.0), (-2.0, 4.0));
        assert_eq!(curve.len(), CUSP_CURVE_SAMPLES);
        for (a, b) in &curve {
            assert!((b - fold_boundary_b(*a)).abs() <= 1e-12);
            assert!((-2.0..=4.0).contains(b));
        }
    }
}
