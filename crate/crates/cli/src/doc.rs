//! The on-disk graph format: a JSON document with the rank, vertex names,
//! one integer matrix per colour, an optional default scaling exponent,
//! and free-form metadata.

use kgs_core::{KGraph, KgsError};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A graph as stored on disk.  `adjacency[i]` is the row-major matrix of
/// colour `i + 1`; entry `(v, w)` counts the colour-`i+1` edges with range
/// `v` and source `w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphDocument {
    pub k: usize,
    pub vertices: Vec<String>,
    pub adjacency: Vec<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub metadata: Map<String, Value>,
}

impl GraphDocument {
    /// Parse a document from JSON text.  Serde errors keep their line and
    /// column context; the shape checks afterwards name the offending field
    /// and indices.
    pub fn parse(text: &str) -> Result<Self, String> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| format!("graph document: {e}"))?;
        doc.check_shape()?;
        Ok(doc)
    }

    fn check_shape(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("field \"k\" must be at least 1".to_string());
        }
        let n = self.vertices.len();
        if n == 0 {
            return Err("field \"vertices\" must name at least one vertex".to_string());
        }
        if self.adjacency.len() != self.k {
            return Err(format!(
                "field \"adjacency\" has {} matrices but \"k\" is {}",
                self.adjacency.len(),
                self.k
            ));
        }
        for (i, m) in self.adjacency.iter().enumerate() {
            if m.len() != n {
                return Err(format!(
                    "adjacency[{i}] has {} rows, expected {n} (one per vertex)",
                    m.len()
                ));
            }
            for (r, row) in m.iter().enumerate() {
                if row.len() != n {
                    return Err(format!(
                        "adjacency[{i}][{r}] has {} entries, expected {n}",
                        row.len()
                    ));
                }
            }
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(format!("field \"delta\" must be finite, got {d}"));
            }
        }
        Ok(())
    }

    /// Build the validated in-memory graph.
    pub fn to_graph(&self) -> Result<KGraph, KgsError> {
        KGraph::new(self.vertices.clone(), self.adjacency.clone(), self.delta)
    }
}
