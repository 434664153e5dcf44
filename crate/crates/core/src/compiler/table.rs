use serde::{Deserialize, Serialize};

use crate::circuit::DepthExpr;

/// Claimed depth of each construct, in units of the primitive depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthTable {
    pub trig: DepthExpr,
    pub fourier: DepthExpr,
    pub mlp: DepthExpr,
    pub matmul: DepthExpr,
    pub message: DepthExpr,
    /// Message followed by the sum over neighbours, as an intermediate of
    /// the layer bound.
    pub message_with_sum: DepthExpr,
    pub layer: DepthExpr,
    /// Multiplied by `q` for the whole network.
    pub egnn_per_layer: DepthExpr,
}

impl Default for DepthTable {
    fn default() -> Self {
        DepthTable::published()
    }
}

/// One identity between table entries and whether it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Consistency {
    pub identity: &'static str,
    pub lhs: DepthExpr,
    pub rhs: DepthExpr,
    pub holds: bool,
}

impl DepthTable {
    /// The constants as published with the construction.
    pub const fn published() -> Self {
        DepthTable {
            trig: DepthExpr::new(8, 1, 1),
            fourier: DepthExpr::new(10, 1, 1),
            mlp: DepthExpr::new(2, 1, 0),
            matmul: DepthExpr::new(1, 1, 0),
            message: DepthExpr::new(13, 2, 1),
            message_with_sum: DepthExpr::new(13, 2, 2),
            layer: DepthExpr::new(16, 3, 2),
            egnn_per_layer: DepthExpr::new(18, 4, 2),
        }
    }

    pub fn egnn(&self, q: u64) -> DepthExpr {
        self.egnn_per_layer.scale(q)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// How the entries are meant to compose.
    pub fn consistency(&self) -> Vec<Consistency> {
        let std = DepthExpr::std();
        let check = |identity, lhs: DepthExpr, rhs: DepthExpr| Consistency { identity, lhs, rhs, holds: lhs == rhs };
        vec![
            check("fourier = 2 d_std + trig", self.fourier, std.scale(2) + self.trig),
            check(
                "message = mlp + max(matmul, d_std + fourier)",
                self.message,
                self.mlp + self.matmul.join(std + self.fourier).0,
            ),
            check("layer = message_with_sum + mlp + d_std", self.layer, self.message_with_sum + self.mlp + std),
            check("egnn_per_layer = layer + mlp", self.egnn_per_layer, self.layer + self.mlp),
        ]
    }
}
