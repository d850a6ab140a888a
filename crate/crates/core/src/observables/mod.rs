//! The three observables of a trace segment: graph distance, cut-point
//! count and effective resistance between its endpoints.

pub mod cuts;
pub mod distance;
pub mod graph;
pub mod resistance;
pub mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{SegmentView, WalkPath};

pub use cuts::{cut_point_count, cut_point_count_naive, cut_points_in, CutScratch};
pub use distance::{graph_distance, graph_distance_dijkstra};
pub use graph::{GraphScratch, RangeGraph};
pub use resistance::{
    effective_resistance, effective_resistance_dense, Preconditioner, ResistanceSolveConfig,
};
pub use trace::{PointTable, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    GraphDistance,
    CutPoints,
    EffectiveResistance,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 3] =
        [ObservableKind::GraphDistance, ObservableKind::CutPoints, ObservableKind::EffectiveResistance];

    /// Short label used in CSV output and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            ObservableKind::GraphDistance => "distance",
            ObservableKind::CutPoints => "cut",
            ObservableKind::EffectiveResistance => "resistance",
        }
    }

    /// Integer valued observables satisfy their identities exactly.
    pub fn is_integral(self) -> bool {
        !matches!(self, ObservableKind::EffectiveResistance)
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" | "graph-distance" | "x1" => Ok(ObservableKind::GraphDistance),
            "cut" | "cut-points" | "x2" => Ok(ObservableKind::CutPoints),
            "resistance" | "effective-resistance" | "x3" => Ok(ObservableKind::EffectiveResistance),
            other => Err(Error::InvalidParameter(format!("unknown observable kind {other:?}"))),
        }
    }
}

/// `X[a, b]` for the segment `view`.
pub fn observable(view: SegmentView<'_>, kind: ObservableKind, cfg: &ResistanceSolveConfig) -> Result<f64> {
    match kind {
        ObservableKind::CutPoints => Ok(cut_point_count(view) as f64),
        _ if view.steps() == 0 => Ok(0.0),
        ObservableKind::GraphDistance => Ok(graph_distance(&RangeGraph::build(view)?) as f64),
        ObservableKind::EffectiveResistance => effective_resistance(&RangeGraph::build(view)?, cfg),
    }
}

/// Evaluates observables on many segments of one path, hashing the path once.
#[derive(Debug)]
pub struct PathObservables<'a> {
    path: &'a WalkPath,
    trace: Trace,
    graphs: GraphScratch,
    cuts: CutScratch,
    cfg: ResistanceSolveConfig,
}

impl<'a> PathObservables<'a> {
    pub fn new(path: &'a WalkPath, cfg: &ResistanceSolveConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            path,
            trace: Trace::new(path),
            graphs: GraphScratch::default(),
            cuts: CutScratch::default(),
            cfg: *cfg,
        })
    }

    pub fn path(&self) -> &'a WalkPath {
        self.path
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn graph(&mut self, a: usize, b: usize) -> Result<RangeGraph> {
        RangeGraph::from_trace(&self.trace, a, b, &mut self.graphs)
    }

    pub fn eval(&mut self, a: usize, b: usize, kind: ObservableKind) -> Result<f64> {
        if a > b || b > self.path.len() {
            return Err(Error::Segment { a, b, n: self.path.len() });
        }
        match kind {
            ObservableKind::CutPoints => Ok(cut_points_in(&self.trace, a, b, &mut self.cuts) as f64),
            _ if a == b => Ok(0.0),
            ObservableKind::GraphDistance => Ok(graph_distance(&self.graph(a, b)?) as f64),
            ObservableKind::EffectiveResistance => {
                let g = self.graph(a, b)?;
                effective_resistance(&g, &self.cfg)
            }
        }
    }
}
