//! Per-individual susceptibility to opinion flipping via fold crossings,
//! target ranking, hysteresis interventions, and the fusion-gain report.
//!
//! A bistable individual occupies one of two minima. If the occupied
//! minimum's sign opposes the demographic index, that minimum is the one
//! that vanishes first as the behavior index decreases toward the fold
//! curve: the individual is metastable and can be flipped by lowering `b`
//! past `fold_boundary_b(a)`. Aligned individuals occupy the minimum that
//! survives for every `b`, so no change of `b` alone can flip them.

use crate::cusp::{fold_boundary_b, CuspError, CuspParams, MinimizerConfig, Stability};
use crate::datastore::DbTable;
use crate::model::{evaluate, FittedModel, ModelError};
use crate::sampler::{vote_probability, Person};
use crate::stats::{chi_square_independence, IndependenceTest, MetricsReport, StatsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Occupancy classification of one individual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Bistable, occupying the minimum on the demographic side; cannot be
    /// flipped by moving `b` alone.
    Aligned,
    /// Bistable, occupying the minimum that a fold crossing annihilates.
    Metastable,
    /// Not bistable, or bistable with `a = 0` (no preferred surviving side).
    MonostableNeutral,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Branch::Aligned => "aligned",
            Branch::Metastable => "metastable",
            Branch::MonostableNeutral => "monostable_neutral",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipDirection {
    To1,
    To0,
}

impl std::fmt::Display for FlipDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlipDirection::To1 => "to_1",
            FlipDirection::To0 => "to_0",
        })
    }
}

/// Intervention analysis for one individual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityRecord {
    pub id: u64,
    pub branch: Branch,
    /// Distance in `b` down to the fold where the occupied minimum
    /// vanishes; present only for metastable individuals.
    pub delta_b_flip: Option<f64>,
    pub flip_direction: Option<FlipDirection>,
    /// Parameters sit on the cusp curve within tolerance.
    pub on_degenerate: bool,
}

/// Outcome of moving one individual's behavior index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    pub id: u64,
    pub new_b: f64,
    pub new_x: f64,
    pub new_p: f64,
    pub flipped: bool,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum InfluenceError {
    #[error("parameters (a = {a}, b = {b}) lie on the cusp curve within tolerance")]
    DegenerateParameters { a: f64, b: f64 },
    #[error(transparent)]
    Minimize(#[from] CuspError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Total classification; degenerate parameters are flagged, not fatal.
pub fn susceptibility_record(person: &Person) -> SusceptibilityRecord {
    let base = SusceptibilityRecord {
        id: person.id,
        branch: Branch::MonostableNeutral,
        delta_b_flip: None,
        flip_direction: None,
        on_degenerate: false,
    };
    match person.params().stability() {
        Stability::Degenerate => SusceptibilityRecord {
            on_degenerate: true,
            ..base
        },
        Stability::Monostable => base,
        Stability::Bistable => {
            if sign(person.a) == 0 {
                // No preferred surviving side; unflippable by b alone.
                base
            } else if sign(person.x) == sign(person.a) {
                SusceptibilityRecord {
                    branch: Branch::Aligned,
                    ..base
                }
            } else {
                SusceptibilityRecord {
                    branch: Branch::Metastable,
                    delta_b_flip: Some(person.b - fold_boundary_b(person.a)),
                    flip_direction: Some(if person.a > 0.0 {
                        FlipDirection::To1
                    } else {
                        FlipDirection::To0
                    }),
                    ..base
                }
            }
        }
    }
}

/// Classification of one individual; errors when the parameters are on the
/// cusp curve within tolerance.
pub fn susceptibility(person: &Person) -> Result<SusceptibilityRecord, InfluenceError> {
    let record = susceptibility_record(person);
    if record.on_degenerate {
        return Err(InfluenceError::DegenerateParameters {
            a: person.a,
            b: person.b,
        });
    }
    Ok(record)
}

/// Rank the whole population by flippability: metastable records first in
/// ascending `delta_b_flip` (ties by id), everyone else after in id order.
pub fn rank_targets(population: &[Person]) -> Vec<SusceptibilityRecord> {
    let mut metastable = Vec::new();
    let mut rest = Vec::new();
    for person in population {
        let record = susceptibility_record(person);
        if record.branch == Branch::Metastable {
            metastable.push(record);
        } else {
            rest.push(record);
        }
    }
    metastable.sort_by(|l, r| {
        l.delta_b_flip
            .unwrap()
            .total_cmp(&r.delta_b_flip.unwrap())
            .then(l.id.cmp(&r.id))
    });
    rest.sort_by_key(|r| r.id);
    metastable.extend(rest);
    metastable
}

/// Move one individual's behavior index with hysteresis semantics: the new
/// latent state is re-minimized from the current state, not from the
/// original initial guess.
pub fn apply_intervention(
    person: &Person,
    new_b: f64,
    sigma: f64,
    cfg: &MinimizerConfig,
) -> Result<InterventionResult, InfluenceError> {
    let params = CuspParams::new(person.a, new_b);
    let new_x = params.local_minimum_from(person.x, cfg)?;
    Ok(InterventionResult {
        id: person.id,
        new_b,
        new_x,
        new_p: vote_probability(new_x, sigma),
        flipped: sign(person.x) != 0 && sign(new_x) != sign(person.x),
    })
}

/// Track the occupied minimum through a sequence of `b` values, feeding
/// each converged state into the next minimization.
pub fn track_through_b(
    person: &Person,
    b_values: &[f64],
    cfg: &MinimizerConfig,
) -> Result<Vec<f64>, InfluenceError> {
    let mut x = person.x;
    let mut states = Vec::with_capacity(b_values.len());
    for &b in b_values {
        x = CuspParams::new(person.a, b).local_minimum_from(x, cfg)?;
        states.push(x);
    }
    Ok(states)
}

/// Differences of a metric across the three models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDeltas {
    pub joint_minus_a: f64,
    pub joint_minus_b: f64,
    pub a_minus_b: f64,
}

impl PairwiseDeltas {
    fn of(joint: f64, a: f64, b: f64) -> Self {
        Self {
            joint_minus_a: joint - a,
            joint_minus_b: joint - b,
            a_minus_b: a - b,
        }
    }
}

/// What joining the databases buys: per-model metrics, their deltas, the
/// marginal independence check, and the count of flippable individuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub metrics_a: MetricsReport,
    pub metrics_b: MetricsReport,
    pub metrics_joint: MetricsReport,
    pub auc_delta: PairwiseDeltas,
    pub log_loss_delta: PairwiseDeltas,
    pub independence: IndependenceTest,
    pub metastable_count: usize,
    pub metastable_fraction: f64,
}

/// Evaluate the three models (fitted on the same training split) against
/// the joined table and summarize the gain from fusion.
pub fn fusion_gain(
    population: &[Person],
    joined: &DbTable,
    model_a: &FittedModel,
    model_b: &FittedModel,
    model_joint: &FittedModel,
) -> Result<FusionReport, InfluenceError> {
    let metrics_a = evaluate(model_a, joined)?;
    let metrics_b = evaluate(model_b, joined)?;
    let metrics_joint = evaluate(model_joint, joined)?;
    let b_column = joined
        .column("b")
        .ok_or_else(|| ModelError::SpecMismatch("joined table lacks column b".into()))?;
    let labels: Vec<u8> = joined
        .column("y")
        .ok_or_else(|| ModelError::SpecMismatch("joined table lacks column y".into()))?
        .iter()
        .map(|&v| v as u8)
        .collect();
    let independence = chi_square_independence(&b_column, &labels)?;
    let metastable_count = population
        .iter()
        .filter(|p| susceptibility_record(p).branch == Branch::Metastable)
        .count();
    Ok(FusionReport {
        auc_delta: PairwiseDeltas::of(metrics_joint.auc, metrics_a.auc, metrics_b.auc),
        log_loss_delta: PairwiseDeltas::of(
            metrics_joint.log_loss,
            metrics_a.log_loss,
            metrics_b.log_loss,
        ),
        metrics_a,
        metrics_b,
        metrics_joint,
        independence,
        metastable_count,
        metastable_fraction: metastable_count as f64 / population.len() as f64,
    })
}

/// CSV form of a ranking: `id,branch,delta_b_flip,flip_direction`, empty
/// fields for absent values, LF endings.
pub fn susceptibility_csv(records: &[SusceptibilityRecord]) -> String {
    let mut out = String::from("id,branch,delta_b_flip,flip_direction\n");
    for r in records {
        let delta = r.delta_b_flip.map(|d| d.to_string()).unwrap_or_default();
        let direction = r.flip_direction.map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.id, r.branch, delta, direction));
    }
    out
}
