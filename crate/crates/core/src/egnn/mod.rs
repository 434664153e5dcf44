//! Reference crystalline EGNN.
//!
//! Hidden states `h_i` start as `φ_in(a_i)` and go through `q` layers of
//!
//! ```text
//! m_ij = φ_msg(h_i, h_j, LᵀL, ψ_k(f_i - f_j))
//! y_i  = h_i + φ_upd(h_i, Σ_j m_ij)
//! ```
//!
//! where `ψ_k` is the `3 × k` Fourier block whose column `j` holds
//! `cos(πj x)` for odd `j` and `sin(πj x)` for even `j`. The sum runs over all
//! `j`, including `j = i`. The lattice only enters through `LᵀL`, so the
//! output is unchanged by rotating the lattice, and only differences
//! `f_i - f_j` are used, so a common shift of every atom changes nothing.
//!
//! The same network can be run in `f64` or in exact `p`-bit arithmetic
//! ([`Backend`]). In the exact mode every dot product and every message sum
//! is rounded once, which makes the output independent of summation order
//! and of how work is split across threads.

mod backend;
mod config;
mod params;

pub use backend::{Backend, FpnBackend, RealBackend};
pub use config::{Activation, EgnnConfig, Init, Mode, Widths, MODEL_SCHEMA_VERSION};
pub use params::{init_params, Dense, Dims, Mlp, Params, WeightsHeader, WEIGHTS_SCHEMA_VERSION};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::crystal::FracUnitCell;
use crate::fpn::{Fpn, FpnError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EgnnError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Schema(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("arithmetic: {0}")]
    Fpn(#[from] FpnError),
}

impl EgnnError {
    /// Errors raised by values rather than by the shape of the input.
    pub fn is_domain(&self) -> bool {
        matches!(self, EgnnError::Domain(_) | EgnnError::Fpn(_))
    }
}

/// An [`Mlp`] with its parameters converted to the backend's scalars.
#[derive(Debug, Clone)]
pub struct PreparedMlp<S> {
    layers: Vec<PreparedDense<S>>,
    activation: Activation,
}

#[derive(Debug, Clone)]
struct PreparedDense<S> {
    fan_in: usize,
    rows: Vec<Vec<S>>,
    bias: Vec<S>,
}

impl<S: Copy> PreparedMlp<S> {
    pub fn new<B: Backend<S = S>>(b: &B, mlp: &Mlp) -> Result<Self, EgnnError> {
        let layers = mlp
            .layers
            .iter()
            .map(|l| {
                let rows = (0..l.weight.nrows())
                    .map(|r| l.weight.row(r).iter().map(|&w| b.from_f64(w)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                let bias = l.bias.iter().map(|&v| b.from_f64(v)).collect::<Result<Vec<_>, _>>()?;
                Ok(PreparedDense { fan_in: l.weight.ncols(), rows, bias })
            })
            .collect::<Result<Vec<_>, EgnnError>>()?;
        Ok(PreparedMlp { layers, activation: mlp.activation })
    }

    pub fn eval<B: Backend<S = S>>(&self, b: &B, v: &[S]) -> Result<Vec<S>, EgnnError> {
        let mut cur = v.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            if cur.len() != layer.fan_in {
                return Err(EgnnError::Config(format!(
                    "mlp layer {idx} expects {} inputs, got {}",
                    layer.fan_in,
                    cur.len()
                )));
            }
            let last = idx + 1 == self.layers.len();
            cur = layer
                .rows
                .iter()
                .zip(&layer.bias)
                .map(|(w, &bias)| {
                    let y = b.dot(w, &cur, Some(bias))?;
                    Ok(if !last && self.activation == Activation::Relu { b.relu(y) } else { y })
                })
                .collect::<Result<Vec<_>, EgnnError>>()?;
        }
        Ok(cur)
    }
}

/// Evaluates an MLP in `f64` or at `prec` (when given).
pub fn mlp_eval(mlp: &Mlp, v: &[f64], prec: Option<crate::fpn::Precision>) -> Result<Vec<f64>, EgnnError> {
    match prec {
        None => PreparedMlp::new(&RealBackend, mlp)?.eval(&RealBackend, v),
        Some(p) => {
            let b = FpnBackend::new(p);
            let x = v.iter().map(|&t| b.from_f64(t)).collect::<Result<Vec<_>, _>>()?;
            let y = PreparedMlp::new(&b, mlp)?.eval(&b, &x)?;
            Ok(y.into_iter().map(|t| b.to_f64(t)).collect())
        }
    }
}

/// `ψ_k(x)` as a column-major `3 × k` block.
///
/// Errors unless every entry of `x` lies strictly inside `(-1, 1)`.
pub fn fourier_features<B: Backend>(b: &B, x: &[B::S; 3], k: usize) -> Result<Vec<B::S>, EgnnError> {
    for &v in x {
        let f = b.to_f64(v);
        if !(f > -1.0 && f < 1.0) {
            return Err(EgnnError::Domain(format!("Fourier input {f} is outside (-1, 1)")));
        }
    }
    let mut out = Vec::with_capacity(3 * k);
    for j in 1..=k as u32 {
        let freq = b.pi_times(j)?;
        for &v in x {
            let arg = b.mul(freq, v)?;
            out.push(if j % 2 == 0 { b.sin(arg)? } else { b.cos(arg)? });
        }
    }
    Ok(out)
}

/// `LᵀL` in column-major order from `L` in column-major order.
pub fn gram<B: Backend>(b: &B, l: &[B::S; 9]) -> Result<[B::S; 9], EgnnError> {
    let mut g = [b.zero(); 9];
    for c in 0..3 {
        for r in 0..3 {
            g[r + 3 * c] = b.dot(&l[3 * r..3 * r + 3], &l[3 * c..3 * c + 3], None)?;
        }
    }
    Ok(g)
}

/// Network weights converted for one backend.
pub struct Model<B: Backend> {
    pub backend: B,
    k: usize,
    phi_in: PreparedMlp<B::S>,
    phi_msg: PreparedMlp<B::S>,
    phi_upd: PreparedMlp<B::S>,
}

/// Network inputs converted for one backend: `F` per atom and `LᵀL`.
pub struct Geometry<S> {
    pub frac: Vec<[S; 3]>,
    pub gram: [S; 9],
}

impl<B: Backend> Model<B> {
    pub fn new(backend: B, cfg: &EgnnConfig, params: &Params) -> Result<Self, EgnnError> {
        cfg.validate()?;
        params.check_shapes(cfg)?;
        Ok(Model {
            phi_in: PreparedMlp::new(&backend, &params.phi_in)?,
            phi_msg: PreparedMlp::new(&backend, &params.phi_msg)?,
            phi_upd: PreparedMlp::new(&backend, &params.phi_upd)?,
            k: cfg.k,
            backend,
        })
    }

    pub fn geometry(&self, cell: &FracUnitCell) -> Result<Geometry<B::S>, EgnnError> {
        let b = &self.backend;
        let frac = cell
            .frac()
            .column_iter()
            .map(|c| Ok([b.from_f64(c[0])?, b.from_f64(c[1])?, b.from_f64(c[2])?]))
            .collect::<Result<Vec<_>, EgnnError>>()?;
        let l = cell.lattice();
        let mut flat = [b.zero(); 9];
        for (slot, &v) in flat.iter_mut().zip(l.as_slice()) {
            *slot = b.from_f64(v)?;
        }
        Ok(Geometry { frac, gram: gram(b, &flat)? })
    }

    pub fn embed(&self, cell: &FracUnitCell) -> Result<Vec<Vec<B::S>>, EgnnError> {
        let b = &self.backend;
        cell.descriptors()
            .column_iter()
            .map(|a| {
                let v = a.iter().map(|&t| b.from_f64(t)).collect::<Result<Vec<_>, _>>()?;
                self.phi_in.eval(b, &v)
            })
            .collect()
    }

    pub fn message(&self, h: &[Vec<B::S>], geo: &Geometry<B::S>, i: usize, j: usize) -> Result<Vec<B::S>, EgnnError> {
        let b = &self.backend;
        let (fi, fj) = (&geo.frac[i], &geo.frac[j]);
        let diff = [b.sub(fi[0], fj[0])?, b.sub(fi[1], fj[1])?, b.sub(fi[2], fj[2])?];
        let mut input = Vec::with_capacity(2 * h[i].len() + 9 + 3 * self.k);
        input.extend_from_slice(&h[i]);
        input.extend_from_slice(&h[j]);
        input.extend_from_slice(&geo.gram);
        input.extend(fourier_features(b, &diff, self.k)?);
        self.phi_msg.eval(b, &input)
    }

    fn update_atom(&self, h: &[Vec<B::S>], geo: &Geometry<B::S>, i: usize) -> Result<Vec<B::S>, EgnnError> {
        let b = &self.backend;
        let msgs = (0..h.len()).map(|j| self.message(h, geo, i, j)).collect::<Result<Vec<_>, _>>()?;
        let d = h[i].len();
        let mut input = h[i].clone();
        for c in 0..d {
            let column: Vec<B::S> = msgs.iter().map(|m| m[c]).collect();
            input.push(b.sum(&column)?);
        }
        let upd = self.phi_upd.eval(b, &input)?;
        h[i].iter().zip(upd).map(|(&x, u)| b.add(x, u)).collect()
    }

    /// One layer; atoms are processed in parallel on the current rayon pool.
    pub fn layer(&self, h: &[Vec<B::S>], geo: &Geometry<B::S>) -> Result<Vec<Vec<B::S>>, EgnnError> {
        (0..h.len()).into_par_iter().map(|i| self.update_atom(h, geo, i)).collect()
    }

    pub fn forward(&self, cell: &FracUnitCell, q: usize) -> Result<Vec<Vec<B::S>>, EgnnError> {
        let geo = self.geometry(cell)?;
        let mut h = self.embed(cell)?;
        for _ in 0..q {
            h = self.layer(&h, &geo)?;
        }
        Ok(h)
    }
}

/// Threading for [`egnn_forward`]. `None` uses the global rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub threads: Option<usize>,
}

/// Output `H` (`d × n`), plus the exact values in fpn mode, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub values: DMatrix<f64>,
    pub exact: Option<Vec<Fpn>>,
}

fn columns_to_matrix<B: Backend>(b: &B, cols: &[Vec<B::S>]) -> DMatrix<f64> {
    let d = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(d, cols.len(), |r, c| b.to_f64(cols[c][r]))
}

fn matrix_to_columns<B: Backend>(b: &B, h: &DMatrix<f64>) -> Result<Vec<Vec<B::S>>, EgnnError> {
    h.column_iter().map(|c| c.iter().map(|&v| b.from_f64(v)).collect()).collect()
}

fn check_cell(cfg: &EgnnConfig, cell: &FracUnitCell) -> Result<(), EgnnError> {
    if cell.num_atoms() != cfg.n || cell.descriptor_dim() != cfg.h {
        return Err(EgnnError::Schema(format!(
            "crystal has n = {}, h = {} but the model expects n = {}, h = {}",
            cell.num_atoms(),
            cell.descriptor_dim(),
            cfg.n,
            cfg.h
        )));
    }
    Ok(())
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, EgnnError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| EgnnError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// `EGNN_q ∘ … ∘ EGNN_1(φ_in(A), F, L)` in the mode named by `cfg`.
pub fn egnn_forward(
    cfg: &EgnnConfig,
    params: &Params,
    cell: &FracUnitCell,
    opts: EvalOptions,
) -> Result<HiddenState, EgnnError> {
    check_cell(cfg, cell)?;
    match cfg.mode {
        Mode::Real => {
            let m = Model::new(RealBackend, cfg, params)?;
            let h = run_in_pool(opts.threads, || m.forward(cell, cfg.q))??;
            Ok(HiddenState { values: columns_to_matrix(&m.backend, &h), exact: None })
        }
        Mode::Fpn => {
            let m = Model::new(FpnBackend::new(cfg.precision()?), cfg, params)?;
            let h = run_in_pool(opts.threads, || m.forward(cell, cfg.q))??;
            Ok(HiddenState {
                values: columns_to_matrix(&m.backend, &h),
                exact: Some(h.into_iter().flatten().collect()),
            })
        }
    }
}

/// One layer applied to an explicit hidden state `h` (`d × n`).
pub fn egnn_layer(
    cfg: &EgnnConfig,
    params: &Params,
    h: &DMatrix<f64>,
    cell: &FracUnitCell,
) -> Result<DMatrix<f64>, EgnnError> {
    fn go<B: Backend>(m: Model<B>, h: &DMatrix<f64>, cell: &FracUnitCell) -> Result<DMatrix<f64>, EgnnError> {
        let geo = m.geometry(cell)?;
        let cols = matrix_to_columns(&m.backend, h)?;
        Ok(columns_to_matrix(&m.backend, &m.layer(&cols, &geo)?))
    }
    if h.ncols() != cell.num_atoms() || h.nrows() != cfg.d {
        return Err(EgnnError::Schema(format!(
            "hidden state is {} x {}, expected {} x {}",
            h.nrows(),
            h.ncols(),
            cfg.d,
            cell.num_atoms()
        )));
    }
    match cfg.mode {
        Mode::Real => go(Model::new(RealBackend, cfg, params)?, h, cell),
        Mode::Fpn => go(Model::new(FpnBackend::new(cfg.precision()?), cfg, params)?, h, cell),
    }
}

/// `MSG_ij` for an explicit hidden state.
pub fn pairwise_message(
    cfg: &EgnnConfig,
    params: &Params,
    h: &DMatrix<f64>,
    cell: &FracUnitCell,
    i: usize,
    j: usize,
) -> Result<DVector<f64>, EgnnError> {
    fn go<B: Backend>(
        m: Model<B>,
        h: &DMatrix<f64>,
        cell: &FracUnitCell,
        i: usize,
        j: usize,
    ) -> Result<DVector<f64>, EgnnError> {
        let geo = m.geometry(cell)?;
        let cols = matrix_to_columns(&m.backend, h)?;
        let msg = m.message(&cols, &geo, i, j)?;
        Ok(DVector::from_iterator(msg.len(), msg.into_iter().map(|v| m.backend.to_f64(v))))
    }
    let n = cell.num_atoms();
    if i >= n || j >= n {
        return Err(EgnnError::Schema(format!("atom index ({i}, {j}) out of range for n = {n}")));
    }
    match cfg.mode {
        Mode::Real => go(Model::new(RealBackend, cfg, params)?, h, cell, i, j),
        Mode::Fpn => go(Model::new(FpnBackend::new(cfg.precision()?), cfg, params)?, h, cell, i, j),
    }
}

/// `φ_in` applied to every atom's descriptors.
pub fn embed(cfg: &EgnnConfig, params: &Params, cell: &FracUnitCell) -> Result<DMatrix<f64>, EgnnError> {
    check_cell(cfg, cell)?;
    match cfg.mode {
        Mode::Real => {
            let m = Model::new(RealBackend, cfg, params)?;
            Ok(columns_to_matrix(&m.backend, &m.embed(cell)?))
        }
        Mode::Fpn => {
            let m = Model::new(FpnBackend::new(cfg.precision()?), cfg, params)?;
            Ok(columns_to_matrix(&m.backend, &m.embed(cell)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::random_cell;
    use crate::fpn::Precision;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fourier_at_zero_and_half() {
        let z = fourier_features(&RealBackend, &[0.0; 3], 2).unwrap();
        assert_eq!(z, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let y = fourier_features(&RealBackend, &[0.5, 0.0, 0.0], 2).unwrap();
        assert!(y[0].abs() < 1e-15 && y[3].abs() < 1e-15);
        assert!(fourier_features(&RealBackend, &[1.0, 0.0, 0.0], 2).is_err());

        let b = FpnBackend::new(Precision::new(24).unwrap());
        let z = fourier_features(&b, &[Fpn::ZERO; 3], 2).unwrap();
        let one = Fpn::from_i64(1, b.prec);
        assert_eq!(z, vec![one, one, one, Fpn::ZERO, Fpn::ZERO, Fpn::ZERO]);
    }

    #[test]
    fn mlp_worked_example() {
        let mlp = Mlp {
            layers: vec![Dense { weight: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), bias: DVector::zeros(1) }],
            activation: Activation::Relu,
        };
        let p2 = Precision::new(2).unwrap();
        assert_eq!(mlp_eval(&mlp, &[2.0, 3.0], Some(p2)).unwrap(), vec![4.0]);
        assert_eq!(mlp_eval(&mlp, &[2.0, 3.0], None).unwrap(), vec![5.0]);
        assert!(mlp_eval(&mlp, &[1.0], None).is_err());
    }

    #[test]
    fn zero_update_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = EgnnConfig::new(3, 2, 4, 2, 2, Mode::Fpn, 16, 1);
        let cell = random_cell(&mut rng, 3, 2);
        let mut params = init_params(&cfg, 1);
        params.phi_upd = Mlp::zeros(&cfg.phi_upd_widths(), cfg.activation);
        let h0 = embed(&cfg, &params, &cell).unwrap();
        let out = egnn_forward(&cfg, &params, &cell, EvalOptions::default()).unwrap();
        assert_eq!(out.values, h0);
    }

    #[test]
    fn blob_round_trip() {
        let cfg = EgnnConfig::new(2, 3, 4, 2, 1, Mode::Real, 24, 9);
        let params = init_params(&cfg, 9);
        let blob = params.to_blob(9);
        let (back, header) = Params::from_blob(&blob).unwrap();
        assert_eq!(back, params);
        assert_eq!(header.seed, 9);
        let mut corrupt = blob.clone();
        let last = corrupt.len() - 1;
        corrupt[last] ^= 1;
        assert!(Params::from_blob(&corrupt).is_err());
        assert_ne!(init_params(&cfg, 10).checksum(), params.checksum());
    }
}
