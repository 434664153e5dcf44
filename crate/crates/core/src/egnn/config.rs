use serde::{Deserialize, Serialize};

use super::EgnnError;
use crate::fpn::Precision;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Fpn,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// How weights are produced when none are supplied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    #[default]
    Seeded,
    Zero,
}

/// Layer widths of the three MLPs, input first. Missing entries default to a
/// single affine layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_in: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_msg: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_upd: Option<Vec<usize>>,
}

/// Architecture of a `q`-layer network over `n` atoms with `h`-dimensional
/// descriptors, `d`-dimensional hidden states and `k` Fourier orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgnnConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n: usize,
    pub h: usize,
    pub d: usize,
    pub k: usize,
    pub q: usize,
    pub mode: Mode,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub widths: Widths,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub init: Init,
}

fn default_schema() -> u32 {
    MODEL_SCHEMA_VERSION
}

fn default_p() -> u32 {
    24
}

impl EgnnConfig {
    /// Single-layer MLPs everywhere, seeded weights.
    pub fn new(n: usize, h: usize, d: usize, k: usize, q: usize, mode: Mode, p: u32, seed: u64) -> Self {
        EgnnConfig {
            schema_version: MODEL_SCHEMA_VERSION,
            n,
            h,
            d,
            k,
            q,
            mode,
            p,
            seed,
            widths: Widths::default(),
            activation: Activation::Relu,
            init: Init::Seeded,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, EgnnError> {
        let cfg: EgnnConfig = serde_json::from_str(s).map_err(|e| EgnnError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// `2d + 9 + 3k`: `h_i`, `h_j`, `LᵀL` and the Fourier block.
    pub fn msg_input_dim(&self) -> usize {
        2 * self.d + 9 + 3 * self.k
    }

    pub fn phi_in_widths(&self) -> Vec<usize> {
        self.widths.phi_in.clone().unwrap_or_else(|| vec![self.h, self.d])
    }

    pub fn phi_msg_widths(&self) -> Vec<usize> {
        self.widths.phi_msg.clone().unwrap_or_else(|| vec![self.msg_input_dim(), self.d])
    }

    pub fn phi_upd_widths(&self) -> Vec<usize> {
        self.widths.phi_upd.clone().unwrap_or_else(|| vec![2 * self.d, self.d])
    }

    pub fn precision(&self) -> Result<Precision, EgnnError> {
        Precision::new(self.p).map_err(EgnnError::Fpn)
    }

    pub fn validate(&self) -> Result<(), EgnnError> {
        let bad = |msg: String| Err(EgnnError::Config(msg));
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return bad(format!("unsupported schema_version {}", self.schema_version));
        }
        if self.n == 0 || self.h == 0 || self.d == 0 || self.q == 0 {
            return bad("n, h, d and q must be positive".into());
        }
        if self.k < 2 || self.k % 2 != 0 {
            return bad(format!("k must be a positive even number, got {}", self.k));
        }
        if self.mode == Mode::Fpn {
            Precision::new(self.p).map_err(|e| EgnnError::Config(e.to_string()))?;
        }
        let checks = [
            ("phi_in", self.phi_in_widths(), self.h, self.d),
            ("phi_msg", self.phi_msg_widths(), self.msg_input_dim(), self.d),
            ("phi_upd", self.phi_upd_widths(), 2 * self.d, self.d),
        ];
        for (name, w, input, output) in checks {
            if w.len() < 2 || w.contains(&0) {
                return bad(format!("{name} needs at least two positive widths, got {w:?}"));
            }
            if w[0] != input || w[w.len() - 1] != output {
                return bad(format!("{name} must map {input} -> {output}, got {w:?}"));
            }
        }
        Ok(())
    }
}
