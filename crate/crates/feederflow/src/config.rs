use std::fs;
use std::path::Path;

use feederflow_core::density::coarse_grain;
use feederflow_core::network::discretize;
use feederflow_core::{
    Category, CoarseGrainSpec, DensityProfile, FeederNetwork, Grid, Node, NodeKind, PointInjection, Segment,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDto {
    pub id: String,
    pub length_km: f64,
    #[serde(rename = "G")]
    pub conductance: f64,
    #[serde(rename = "B")]
    pub susceptance: f64,
    pub upstream: String,
    pub downstream: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KindDto {
    Root,
    Junction,
    Svr { turn_ratio: f64 },
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDto {
    pub id: String,
    #[serde(flatten)]
    pub kind: KindDto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryDto {
    Ev,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionDto {
    pub segment: String,
    pub xi_km: f64,
    #[serde(rename = "P_pu")]
    pub active_power: f64,
    #[serde(rename = "Q_pu", default)]
    pub reactive_power: f64,
    pub category: CategoryDto,
}

/// On-disk network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub segments: Vec<SegmentDto>,
    pub nodes: Vec<NodeDto>,
    #[serde(default)]
    pub injections: Vec<InjectionDto>,
}

impl NetworkFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.into(), source })
    }

    pub fn network(&self) -> FeederNetwork {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment::new(&s.id, s.length_km, s.conductance, s.susceptance, &s.upstream, &s.downstream))
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let kind = match n.kind {
                    KindDto::Root => NodeKind::Root,
                    KindDto::Junction => NodeKind::Junction,
                    KindDto::Svr { turn_ratio } => NodeKind::Svr { turn_ratio },
                    KindDto::Leaf => NodeKind::Leaf,
                };
                Node::new(&n.id, kind)
            })
            .collect();
        FeederNetwork::new(segments, nodes)
    }

    pub fn injections(&self) -> Vec<PointInjection> {
        self.injections
            .iter()
            .map(|i| {
                let category = match i.category {
                    CategoryDto::Ev => Category::Ev,
                    CategoryDto::Load => Category::Load,
                };
                PointInjection::new(&i.segment, i.xi_km, i.active_power, i.reactive_power, category)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    pub grid_h_km: f64,
    pub sigma_km: f64,
    pub epsilon: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { grid_h_km: 0.002, sigma_km: 0.05, epsilon: 1.0 }
    }
}

/// A validated network with its grid and coarse-grained density.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub network: FeederNetwork,
    pub injections: Vec<PointInjection>,
    pub grid: Grid,
    pub density: DensityProfile,
}

impl Scenario {
    pub fn load(path: &Path, options: ScenarioOptions) -> Result<Self> {
        Self::from_file(&NetworkFile::read(path)?, options)
    }

    pub fn from_file(file: &NetworkFile, options: ScenarioOptions) -> Result<Self> {
        let network = file.network();
        network.topology()?;
        let grid = discretize(&network, options.grid_h_km)?;
        let injections = file.injections();
        let spec = CoarseGrainSpec::with_sigma(options.sigma_km);
        let density = coarse_grain(&injections, spec, &network, &grid, options.epsilon)?;
        Ok(Self { name: file.name.clone(), network, injections, grid, density })
    }

    pub fn segment_id(&self, i: usize) -> &str {
        &self.network.segments[i].id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "name": "t",
        "segments": [
            {"id": "A", "length_km": 1.0, "G": 2.0, "B": 4.0, "upstream": "r", "downstream": "s"},
            {"id": "B", "length_km": 1.0, "G": 2.0, "B": 4.0, "upstream": "s", "downstream": "e"}
        ],
        "nodes": [
            {"id": "r", "kind": "root"},
            {"id": "s", "kind": "svr", "turn_ratio": 1.02},
            {"id": "e", "kind": "leaf"}
        ],
        "injections": [{"segment": "B", "xi_km": 0.5, "P_pu": -0.1, "category": "ev"}]
    }"#;

    #[test]
    fn parses_node_kinds_and_defaults() {
        let f: NetworkFile = serde_json::from_str(SAMPLE).unwrap();
        assert_eq!(f.nodes[1].kind, KindDto::Svr { turn_ratio: 1.02 });
        assert_eq!(f.injections[0].reactive_power, 0.0);
        let s = Scenario::from_file(&f, ScenarioOptions { grid_h_km: 0.01, ..Default::default() }).unwrap();
        assert_eq!(s.grid.len(), 2);
        assert_eq!(s.injections[0].category, Category::Ev);
    }

    #[test]
    fn round_trips() {
        let f: NetworkFile = serde_json::from_str(SAMPLE).unwrap();
        let again: NetworkFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SAMPLE.replace("\"xi_km\"", "\"x_km\"");
        assert!(serde_json::from_str::<NetworkFile>(&bad).is_err());
    }
}
