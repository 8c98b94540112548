//! JSON tree dump. Floats are written with round-trip precision, so a
//! reloaded model predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{Node, Tree};
use super::{BoostedEnsemble, HyperParams};
use crate::error::{Error, Result};

pub const FORMAT: &str = "radshift-gbdt";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDump {
    Split {
        id: usize,
        feature: String,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        id: usize,
        leaf: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDump {
    class: usize,
    nodes: Vec<NodeDump>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDump {
    format: String,
    version: u32,
    n_classes: usize,
    feature_names: Vec<String>,
    base_score: Vec<f64>,
    hyper_params: HyperParams,
    seed: u64,
    training_loss: Vec<f64>,
    /// One entry per round, one tree per class.
    rounds: Vec<Vec<TreeDump>>,
}

impl BoostedEnsemble {
    pub fn to_json(&self) -> Result<String> {
        let rounds = self
            .trees
            .iter()
            .map(|round| {
                round
                    .iter()
                    .enumerate()
                    .map(|(class, t)| TreeDump {
                        class,
                        nodes: t
                            .nodes
                            .iter()
                            .enumerate()
                            .map(|(id, n)| match *n {
                                Node::Split {
                                    feature,
                                    threshold,
                                    left,
                                    right,
                                } => NodeDump::Split {
                                    id,
                                    feature: self.feature_names[feature].clone(),
                                    threshold,
                                    left,
                                    right,
                                },
                                Node::Leaf { value } => NodeDump::Leaf { id, leaf: value },
                            })
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        let dump = ModelDump {
            format: FORMAT.into(),
            version: VERSION,
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            base_score: self.base_score.clone(),
            hyper_params: self.hyper_params,
            seed: self.seed,
            training_loss: self.training_loss.clone(),
            rounds,
        };
        Ok(serde_json::to_string_pretty(&dump)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: ModelDump = serde_json::from_str(text)?;
        let bad = |m: String| Error::InvalidArgument(format!("model dump: {m}"));
        if d.format != FORMAT || d.version != VERSION {
            return Err(bad(format!("unsupported format {} v{}", d.format, d.version)));
        }
        if d.base_score.len() != d.n_classes {
            return Err(bad("base_score length differs from n_classes".into()));
        }
        let mut trees = Vec::with_capacity(d.rounds.len());
        for round in d.rounds {
            if round.len() != d.n_classes {
                return Err(bad("every round needs one tree per class".into()));
            }
            let mut out = Vec::with_capacity(round.len());
            for (c, t) in round.into_iter().enumerate() {
                if t.class != c {
                    return Err(bad(format!("tree for class {} out of order", t.class)));
                }
                let n_nodes = t.nodes.len();
                let mut nodes = Vec::with_capacity(n_nodes);
                for (i, n) in t.nodes.into_iter().enumerate() {
                    nodes.push(match n {
                        NodeDump::Split {
                            id,
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            let f = d
                                .feature_names
                                .iter()
                                .position(|x| *x == feature)
                                .ok_or_else(|| Error::MissingFeature(feature.clone()))?;
                            if id != i || left <= i || right <= i || left >= n_nodes || right >= n_nodes {
                                return Err(bad(format!("malformed node {id}")));
                            }
                            Node::Split {
                                feature: f,
                                threshold,
                                left,
                                right,
                            }
                        }
                        NodeDump::Leaf { id, leaf } => {
                            if id != i {
                                return Err(bad(format!("malformed node {id}")));
                            }
                            Node::Leaf { value: leaf }
                        }
                    });
                }
                if nodes.is_empty() {
                    return Err(bad("empty tree".into()));
                }
                out.push(Tree { nodes });
            }
            trees.push(out);
        }
        Ok(Self {
            n_classes: d.n_classes,
            feature_names: d.feature_names,
            base_score: d.base_score,
            trees,
            hyper_params: d.hyper_params,
            seed: d.seed,
            training_loss: d.training_loss,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
