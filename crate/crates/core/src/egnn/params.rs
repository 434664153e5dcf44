use std::io::{BufRead, Read};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Activation, EgnnConfig, Init};
use super::EgnnError;

pub const WEIGHTS_SCHEMA_VERSION: u32 = 1;

/// `y = W x + b` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Affine layers with `activation` between them (never after the last).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl Mlp {
    pub fn zeros(widths: &[usize], activation: Activation) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| Dense { weight: DMatrix::zeros(w[1], w[0]), bias: DVector::zeros(w[1]) })
            .collect();
        Mlp { layers, activation }
    }

    /// Weights then bias of each layer, uniform in `±1/√fan_in`, weights in
    /// row-major order.
    pub fn random<R: Rng + ?Sized>(widths: &[usize], activation: Activation, rng: &mut R) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let a = 1.0 / (fan_in as f64).sqrt();
                let mut draw = || rng.random_range(-a..=a);
                let rows: Vec<f64> = (0..fan_in * fan_out).map(|_| draw()).collect();
                let bias: Vec<f64> = (0..fan_out).map(|_| draw()).collect();
                Dense { weight: DMatrix::from_row_slice(fan_out, fan_in, &rows), bias: DVector::from_vec(bias) }
            })
            .collect();
        Mlp { layers, activation }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.weight.ncols()).collect();
        w.extend(self.layers.last().map(|l| l.weight.nrows()));
        w
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.ncols())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.nrows())
    }

    /// All parameters in blob order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            for r in 0..l.weight.nrows() {
                out.extend(l.weight.row(r).iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    fn unflatten(widths: &[usize], activation: Activation, values: &mut impl Iterator<Item = f64>) -> Option<Self> {
        let mut layers = Vec::new();
        for w in widths.windows(2) {
            let rows: Vec<f64> = values.by_ref().take(w[0] * w[1]).collect();
            let bias: Vec<f64> = values.by_ref().take(w[1]).collect();
            if rows.len() != w[0] * w[1] || bias.len() != w[1] {
                return None;
            }
            layers.push(Dense { weight: DMatrix::from_row_slice(w[1], w[0], &rows), bias: DVector::from_vec(bias) });
        }
        Some(Mlp { layers, activation })
    }
}

/// Weights of `φ_in`, `φ_msg` and `φ_upd`; every layer of the network uses
/// the same `φ_msg` and `φ_upd`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub phi_in: Mlp,
    pub phi_msg: Mlp,
    pub phi_upd: Mlp,
}

impl Params {
    pub fn zeros(cfg: &EgnnConfig) -> Self {
        Params {
            phi_in: Mlp::zeros(&cfg.phi_in_widths(), cfg.activation),
            phi_msg: Mlp::zeros(&cfg.phi_msg_widths(), cfg.activation),
            phi_upd: Mlp::zeros(&cfg.phi_upd_widths(), cfg.activation),
        }
    }

    /// Parameters as dictated by `cfg.init` and `cfg.seed`.
    pub fn from_config(cfg: &EgnnConfig) -> Self {
        match cfg.init {
            Init::Seeded => init_params(cfg, cfg.seed),
            Init::Zero => Params::zeros(cfg),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.phi_in.flatten();
        v.extend(self.phi_msg.flatten());
        v.extend(self.phi_upd.flatten());
        v
    }

    /// SHA-256 of the little-endian parameter bytes, hex encoded.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.flatten() {
            hasher.update(v.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn check_shapes(&self, cfg: &EgnnConfig) -> Result<(), EgnnError> {
        let pairs = [
            ("phi_in", &self.phi_in, cfg.phi_in_widths()),
            ("phi_msg", &self.phi_msg, cfg.phi_msg_widths()),
            ("phi_upd", &self.phi_upd, cfg.phi_upd_widths()),
        ];
        for (name, mlp, want) in pairs {
            if mlp.widths() != want {
                return Err(EgnnError::Config(format!("{name} has widths {:?}, config says {want:?}", mlp.widths())));
            }
        }
        Ok(())
    }

    /// Blob: one JSON header line, then the parameters as little-endian `f64`.
    pub fn to_blob(&self, seed: u64) -> Vec<u8> {
        let header = WeightsHeader {
            schema_version: WEIGHTS_SCHEMA_VERSION,
            seed,
            checksum: self.checksum(),
            activation: self.phi_in.activation,
            dims: Dims { phi_in: self.phi_in.widths(), phi_msg: self.phi_msg.widths(), phi_upd: self.phi_upd.widths() },
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for v in self.flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_blob(bytes: &[u8]) -> Result<(Params, WeightsHeader), EgnnError> {
        let mut reader = bytes;
        let mut line = String::new();
        reader.read_line(&mut line).map_err(|e| EgnnError::Schema(e.to_string()))?;
        let header: WeightsHeader =
            serde_json::from_str(line.trim_end()).map_err(|e| EgnnError::Schema(format!("weights header: {e}")))?;
        let mut body = Vec::new();
        reader.read_to_end(&mut body).map_err(|e| EgnnError::Schema(e.to_string()))?;
        if body.len() % 8 != 0 {
            return Err(EgnnError::Schema("weights body is not a whole number of f64 values".into()));
        }
        let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let act = header.activation;
        let short = || EgnnError::Schema("weights body too short".into());
        let params = Params {
            phi_in: Mlp::unflatten(&header.dims.phi_in, act, &mut values).ok_or_else(short)?,
            phi_msg: Mlp::unflatten(&header.dims.phi_msg, act, &mut values).ok_or_else(short)?,
            phi_upd: Mlp::unflatten(&header.dims.phi_upd, act, &mut values).ok_or_else(short)?,
        };
        if values.next().is_some() {
            return Err(EgnnError::Schema("weights body has trailing values".into()));
        }
        if params.checksum() != header.checksum {
            return Err(EgnnError::Schema("weights checksum mismatch".into()));
        }
        Ok((params, header))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub phi_in: Vec<usize>,
    pub phi_msg: Vec<usize>,
    pub phi_upd: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub schema_version: u32,
    pub seed: u64,
    pub checksum: String,
    pub activation: Activation,
    pub dims: Dims,
}

/// Deterministic weights: a ChaCha8 stream seeded with `seed`, consumed by
/// `φ_in`, `φ_msg`, `φ_upd` in that order.
pub fn init_params(cfg: &EgnnConfig, seed: u64) -> Params {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Params {
        phi_in: Mlp::random(&cfg.phi_in_widths(), cfg.activation, &mut rng),
        phi_msg: Mlp::random(&cfg.phi_msg_widths(), cfg.activation, &mut rng),
        phi_upd: Mlp::random(&cfg.phi_upd_widths(), cfg.activation, &mut rng),
    }
}
