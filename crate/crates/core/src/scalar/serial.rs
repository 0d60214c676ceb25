//! JSON form of a scalar graph.
//!
//! ```json
//! {
//!   "name": "KA",
//!   "arrays": [{"name": "src0", "role": "input", "len": 6}, ...],
//!   "nodes": [
//!     {"id": 0, "kind": "load", "array": 0, "index": 2, "inputs": []},
//!     {"id": 2, "kind": "operation", "opcode": "add", "inputs": [0, 1]},
//!     {"id": 3, "kind": "set", "constant": 1.5, "inputs": []},
//!     ...
//!   ]
//! }
//! ```
//!
//! `opcode` appears on `operation` and `reduce` nodes, `array`/`index` on
//! `load` and `store`, `constant` on `set`. Nodes are listed by ascending id.

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::scalar::{ArrayDecl, NodeKind, Opcode, ScalarGraph, ScalarNode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub name: String,
    pub arrays: Vec<ArrayDecl>,
    pub nodes: Vec<NodeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opcode: Option<Opcode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub inputs: Vec<usize>,
}

impl GraphJson {
    pub fn from_graph(graph: &ScalarGraph) -> Self {
        let nodes = graph
            .nodes()
            .map(|n| {
                let mut j = NodeJson {
                    id: n.id,
                    kind: n.kind.name().to_string(),
                    opcode: n.kind.opcode(),
                    array: None,
                    index: None,
                    constant: None,
                    inputs: n.inputs.clone(),
                };
                if let Some((array, index)) = n.kind.memory() {
                    j.array = Some(array);
                    j.index = Some(index);
                }
                if let NodeKind::Set { constant } = n.kind {
                    j.constant = Some(constant);
                }
                j
            })
            .collect();
        GraphJson {
            name: graph.name.clone(),
            arrays: graph.arrays().to_vec(),
            nodes,
        }
    }

    pub fn to_graph(&self) -> Result<ScalarGraph, GraphError> {
        let mut g = ScalarGraph::new(self.name.clone(), self.arrays.clone());
        for n in &self.nodes {
            let missing = |what: &str| GraphError::Json(format!("node {} lacks `{what}`", n.id));
            let memory = || -> Result<(usize, usize), GraphError> {
                Ok((
                    n.array.ok_or_else(|| missing("array"))?,
                    n.index.ok_or_else(|| missing("index"))?,
                ))
            };
            let kind = match n.kind.as_str() {
                "set" => NodeKind::Set {
                    constant: n.constant.ok_or_else(|| missing("constant"))?,
                },
                "load" => {
                    let (array, index) = memory()?;
                    NodeKind::Load { array, index }
                }
                "store" => {
                    let (array, index) = memory()?;
                    NodeKind::Store { array, index }
                }
                "operation" => NodeKind::Operation {
                    opcode: n.opcode.ok_or_else(|| missing("opcode"))?,
                },
                "reduce" => NodeKind::Reduce {
                    opcode: n.opcode.ok_or_else(|| missing("opcode"))?,
                },
                other => return Err(GraphError::Json(format!("unknown node kind `{other}`"))),
            };
            if g.contains(n.id) {
                return Err(GraphError::Json(format!("duplicate node id {}", n.id)));
            }
            g.insert_node(ScalarNode {
                id: n.id,
                kind,
                inputs: n.inputs.clone(),
            });
        }
        g.validate()?;
        Ok(g)
    }

    pub fn to_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph json is always serializable")
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))
    }
}
