//! Exhaustive prospecting over reduction, slot layouts and split strategies.

mod lower;

pub use lower::{lower, Lowered, SubGroup};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::SearchError;
use crate::grouping::{build_group_graph, GroupGraph};
use crate::reduction::{apply_all, find_reduction_paths, Rewrite};
use crate::scalar::{dedup, interpret_scalar, MemoryImage, ScalarGraph};
use crate::splitting::{SplitSpace, Strategy};
use crate::vector::{interpret_vector, VectorCensus, VectorGraph};

/// Relative tolerance when reductions reassociate sums or products.
pub const REDUCTION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PipelineConfig {
    pub use_reduction: bool,
    /// Index into the slot-layout space of the (possibly reduced) graph.
    pub split_choice: usize,
    pub strategy: Strategy,
    pub vec_size: usize,
}

/// Axes fixed by the user; `None` searches the axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pins {
    pub reduction: Option<bool>,
    pub split_choice: Option<usize>,
    pub strategy: Option<Strategy>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Upper bound on slot layouts tried per reduction setting.
    pub c_max: usize,
    /// Seed of the memory image used to screen candidates.
    pub seed: u64,
    pub pins: Pins,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            c_max: 4096,
            seed: 0,
            pins: Pins::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigReport {
    pub config: PipelineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub census: Option<VectorCensus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub configs: Vec<ConfigReport>,
    pub winner: PipelineConfig,
    pub winner_census: VectorCensus,
    pub evaluated: usize,
}

/// Everything produced for the winning configuration.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub vector: VectorGraph,
    pub report: SearchReport,
    /// The scalar graph that was lowered, after dedup and any reduction.
    pub scalar: ScalarGraph,
    pub groups: GroupGraph,
    pub lowered: Lowered,
    pub rewrites: Vec<Rewrite>,
}

/// Node counts by reporting category.
pub fn count_nodes(vg: &VectorGraph) -> VectorCensus {
    vg.census()
}

struct Stage {
    reduction: bool,
    graph: ScalarGraph,
    groups: GroupGraph,
    space: SplitSpace,
    choices: usize,
    rewrites: Vec<Rewrite>,
}

impl Stage {
    fn new(graph: ScalarGraph, reduction: bool, rewrites: Vec<Rewrite>, vec_size: usize, c_max: usize) -> Self {
        let groups = build_group_graph(&graph);
        let space = SplitSpace::new(&graph, &groups, vec_size);
        let choices = space.total().min(c_max as u128) as usize;
        Stage {
            reduction,
            graph,
            groups,
            space,
            choices,
            rewrites,
        }
    }

    fn lower(&self, config: &PipelineConfig) -> Result<Lowered, SearchError> {
        lower(
            &self.graph,
            &self.groups,
            &self.space.choice(config.split_choice),
            config.strategy,
            config.vec_size,
        )
    }
}

/// Screens a candidate against the scalar result on the reference image.
fn screen(vg: &VectorGraph, mem: &MemoryImage, expected: &MemoryImage, reduction: bool) -> Result<(), String> {
    let got = interpret_vector(vg, mem).map_err(|e| e.to_string())?;
    if reduction {
        let diff = expected.max_rel_diff(&got);
        if diff > REDUCTION_TOLERANCE {
            return Err(format!("oracle mismatch: relative difference {diff:e}"));
        }
    } else if !expected.bit_eq(&got) {
        return Err("oracle mismatch: results differ bitwise".into());
    }
    Ok(())
}

/// Builds every configuration, discards those that disagree with the scalar
/// interpreter, and returns the one with the fewest vector nodes. Ties go to
/// fewer data transformations, then to the earlier configuration.
pub fn prospect(graph: &ScalarGraph, vec_size: usize, limits: &SearchLimits) -> Result<Outcome, SearchError> {
    if vec_size < 2 {
        return Err(SearchError::Unsupported(format!("vector size {vec_size}")));
    }
    graph.validate()?;
    let mem = MemoryImage::random(graph.arrays(), limits.seed, 1.0, 2.0);
    let expected = interpret_scalar(graph, &mem)?;
    let base = dedup(graph);

    let mut stages = Vec::new();
    let has_paths = !find_reduction_paths(&base, vec_size).is_empty();
    let reduction_axis: Vec<bool> = match limits.pins.reduction {
        Some(true) if !has_paths => {
            return Err(SearchError::Unsupported(
                "no reduction chain longer than a vector".into(),
            ))
        }
        Some(r) => vec![r],
        None if has_paths => vec![false, true],
        None => vec![false],
    };
    for r in reduction_axis {
        if r {
            let (g, rewrites) = apply_all(&base, vec_size)?;
            stages.push(Stage::new(g, true, rewrites, vec_size, limits.c_max));
        } else {
            stages.push(Stage::new(base.clone(), false, Vec::new(), vec_size, limits.c_max));
        }
    }
    let strategies: Vec<Strategy> = match limits.pins.strategy {
        Some(s) => vec![s],
        None => Strategy::ALL.to_vec(),
    };

    let mut configs: Vec<(usize, PipelineConfig)> = Vec::new();
    for (si, stage) in stages.iter().enumerate() {
        let choices: Vec<usize> = match limits.pins.split_choice {
            Some(c) if c >= stage.choices => {
                return Err(SearchError::Unsupported(format!(
                    "split choice {c} out of range, {} available",
                    stage.choices
                )))
            }
            Some(c) => vec![c],
            None => (0..stage.choices).collect(),
        };
        for c in choices {
            for &strategy in &strategies {
                configs.push((
                    si,
                    PipelineConfig {
                        use_reduction: stage.reduction,
                        split_choice: c,
                        strategy,
                        vec_size,
                    },
                ));
            }
        }
    }

    let reports: Vec<ConfigReport> = configs
        .par_iter()
        .map(|(si, config)| {
            let stage = &stages[*si];
            let outcome = stage
                .lower(config)
                .map_err(|e| e.to_string())
                .and_then(|l| screen(&l.vector, &mem, &expected, stage.reduction).map(|_| l.vector.census()));
            match outcome {
                Ok(census) => ConfigReport {
                    config: *config,
                    census: Some(census),
                    diagnostic: None,
                },
                Err(d) => ConfigReport {
                    config: *config,
                    census: None,
                    diagnostic: Some(d),
                },
            }
        })
        .collect();

    let best = reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.census.map(|c| (c.total(), c.data_transformations, i)))
        .min();
    let Some((_, _, wi)) = best else {
        let diagnostics = reports
            .iter()
            .map(|r| {
                format!(
                    "reduction={} split={} strategy={}: {}",
                    r.config.use_reduction,
                    r.config.split_choice,
                    r.config.strategy.name(),
                    r.diagnostic.as_deref().unwrap_or("?")
                )
            })
            .collect();
        return Err(SearchError::NoValidConfig { diagnostics });
    };
    let (si, winner) = configs[wi];
    let stage = &stages[si];
    let lowered = stage.lower(&winner)?;
    let report = SearchReport {
        winner,
        winner_census: lowered.vector.census(),
        evaluated: reports.len(),
        configs: reports,
    };
    Ok(Outcome {
        vector: lowered.vector.clone(),
        report,
        scalar: stage.graph.clone(),
        groups: stage.groups.clone(),
        lowered,
        rewrites: stage.rewrites.clone(),
    })
}
