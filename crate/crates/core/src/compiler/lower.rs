use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{FpStdOp, MacroBuilder, MacroCircuit, MacroOp, NodeRef};
use crate::egnn::{Activation, EgnnConfig, EgnnError};

/// Default slack in the regime assertions `d <= c n`, `k <= c n`.
pub const DEFAULT_REGIME_FACTOR: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoweringError {
    #[error(transparent)]
    Config(#[from] EgnnError),
    #[error("{what} = {value} exceeds {factor} n = {bound}")]
    Regime { what: &'static str, value: usize, factor: usize, bound: usize },
}

/// Where the neighbour sum `Σ_j m_ij` goes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Fold the messages into the first reduction of `φ_upd`: its products
    /// are taken against each `m_ij` directly and one iterated sum adds them
    /// together with the `h_i` terms.
    #[default]
    Fused,
    /// An iterated sum of the messages feeding `φ_upd` as a separate stage.
    Separate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoweringOptions {
    pub aggregation: Aggregation,
    /// Make each Fourier order wait for the previous order's trig block.
    /// Only useful to check that the bound checks catch a slow circuit.
    pub serialize_trig: bool,
    /// Regime factor `c` in `d, k <= c n`; zero means the default.
    pub regime_factor: usize,
}

impl LoweringOptions {
    pub fn separate() -> Self {
        LoweringOptions { aggregation: Aggregation::Separate, ..Self::default() }
    }

    fn factor(&self) -> usize {
        if self.regime_factor == 0 {
            DEFAULT_REGIME_FACTOR
        } else {
            self.regime_factor
        }
    }
}

/// Checks the size regime the bounds are stated for.
pub fn check_regime(cfg: &EgnnConfig, opts: &LoweringOptions) -> Result<(), LoweringError> {
    cfg.validate()?;
    let factor = opts.factor();
    let bound = factor * cfg.n;
    for (what, value) in [("d", cfg.d), ("k", cfg.k)] {
        if value > bound {
            return Err(LoweringError::Regime { what, value, factor, bound });
        }
    }
    Ok(())
}

fn lanes(x: usize) -> u64 {
    x as u64
}

/// `W x + b` per layer, with the activation between layers.
fn mlp(b: &mut MacroBuilder, widths: &[usize], act: Activation, input: Vec<NodeRef>) -> NodeRef {
    let mut deps = input;
    let mut last = None;
    for (idx, w) in widths.windows(2).enumerate() {
        let out = affine(b, w[0], w[1], deps);
        let hidden = idx + 2 < widths.len();
        let node =
            if hidden && act == Activation::Relu { b.std(FpStdOp::Relu, lanes(w[1]), vec![out], "relu") } else { out };
        deps = vec![node];
        last = Some(node);
    }
    last.expect("mlp has a layer")
}

fn affine(b: &mut MacroBuilder, fan_in: usize, fan_out: usize, deps: Vec<NodeRef>) -> NodeRef {
    let prod = b.std(FpStdOp::Mul, lanes(fan_in * fan_out), deps, "mlp_mul");
    let sum = b.node(MacroOp::IterSum, lanes(fan_out), vec![prod], "mlp_sum");
    b.std(FpStdOp::Add, lanes(fan_out), vec![sum], "mlp_bias")
}

/// The per-order frequencies `π j`, a product of two constants.
fn frequencies(b: &mut MacroBuilder, k: usize) -> NodeRef {
    b.std(FpStdOp::Mul, lanes(k), Vec::new(), "pi_j")
}

fn fourier(b: &mut MacroBuilder, freqs: NodeRef, x: NodeRef, k: usize, serialize: bool) -> NodeRef {
    let mut trigs = Vec::with_capacity(k);
    for _ in 0..k {
        let mut deps = vec![freqs, x];
        if serialize {
            deps.extend(trigs.last().copied());
        }
        let arg = b.std(FpStdOp::Mul, 3, deps, "fourier_arg");
        trigs.push(b.node(MacroOp::TrigBlock, 3, vec![arg], "trig"));
    }
    b.node(MacroOp::Wire, lanes(3 * k), trigs, "fourier_cat")
}

fn gram(b: &mut MacroBuilder, lattice: NodeRef) -> NodeRef {
    let prod = b.std(FpStdOp::Mul, 27, vec![lattice], "gram_mul");
    b.node(MacroOp::IterSum, 9, vec![prod], "gram_sum")
}

/// Shared inputs of one layer.
struct LayerCtx {
    gram: NodeRef,
    /// `ψ_k(f_i - f_j)` at index `i n + j`; geometry only, so shared by all layers.
    psi: Vec<NodeRef>,
}

fn pair_features(b: &mut MacroBuilder, cfg: &EgnnConfig, opts: &LoweringOptions, frac: &[NodeRef]) -> Vec<NodeRef> {
    let freqs = frequencies(b, cfg.k);
    let n = frac.len();
    (0..n * n)
        .map(|ij| {
            let diff = b.std(FpStdOp::Sub, 3, vec![frac[ij / n], frac[ij % n]], "frac_diff");
            fourier(b, freqs, diff, cfg.k, opts.serialize_trig)
        })
        .collect()
}

fn message(b: &mut MacroBuilder, cfg: &EgnnConfig, gram: NodeRef, h_i: NodeRef, h_j: NodeRef, psi: NodeRef) -> NodeRef {
    let cat = b.node(MacroOp::Wire, lanes(cfg.msg_input_dim()), vec![h_i, h_j, gram, psi], "msg_cat");
    mlp(b, &cfg.phi_msg_widths(), cfg.activation, vec![cat])
}

fn layer(
    b: &mut MacroBuilder,
    cfg: &EgnnConfig,
    opts: &LoweringOptions,
    ctx: &LayerCtx,
    h: &[NodeRef],
) -> Vec<NodeRef> {
    let n = h.len();
    let d = cfg.d;
    let widths = cfg.phi_upd_widths();
    (0..n)
        .map(|i| {
            let msgs: Vec<NodeRef> =
                (0..n).map(|j| message(b, cfg, ctx.gram, h[i], h[j], ctx.psi[i * n + j])).collect();
            let upd = match opts.aggregation {
                Aggregation::Separate => {
                    let m = b.node(MacroOp::IterSum, lanes(d), msgs, "msg_sum");
                    let cat = b.node(MacroOp::Wire, lanes(2 * d), vec![h[i], m], "upd_cat");
                    mlp(b, &widths, cfg.activation, vec![cat])
                }
                Aggregation::Fused => {
                    // W [h; Σ m] = W_h h + Σ_j W_m m_j: one product per term, one sum.
                    let first = widths[1];
                    let mut deps = vec![h[i]];
                    deps.extend(msgs);
                    let prod = b.std(FpStdOp::Mul, lanes(first * (d + n * d)), deps, "upd_fused_mul");
                    let sum = b.node(MacroOp::IterSum, lanes(first), vec![prod], "upd_fused_sum");
                    let mut out = b.std(FpStdOp::Add, lanes(first), vec![sum], "mlp_bias");
                    if widths.len() > 2 {
                        if cfg.activation == Activation::Relu {
                            out = b.std(FpStdOp::Relu, lanes(first), vec![out], "relu");
                        }
                        out = mlp(b, &widths[1..], cfg.activation, vec![out]);
                    }
                    out
                }
            };
            b.std(FpStdOp::Add, lanes(d), vec![h[i], upd], "residual")
        })
        .collect()
}

fn layer_inputs(b: &mut MacroBuilder, cfg: &EgnnConfig, opts: &LoweringOptions) -> LayerCtx {
    let frac: Vec<NodeRef> = (0..cfg.n).map(|_| b.input(3, "frac")).collect();
    let lattice = b.input(9, "lattice");
    let gram = gram(b, lattice);
    let psi = pair_features(b, cfg, opts, &frac);
    LayerCtx { gram, psi }
}

pub fn lower_trig() -> MacroCircuit {
    let mut b = MacroBuilder::new();
    let x = b.input(1, "x");
    let t = b.node(MacroOp::TrigBlock, 1, vec![x], "trig");
    b.finish(vec![t])
}

pub fn lower_fourier(k: usize, opts: &LoweringOptions) -> MacroCircuit {
    let mut b = MacroBuilder::new();
    let x = b.input(3, "x");
    let freqs = frequencies(&mut b, k);
    let out = fourier(&mut b, freqs, x, k, opts.serialize_trig);
    b.finish(vec![out])
}

pub fn lower_mlp(widths: &[usize], act: Activation) -> MacroCircuit {
    assert!(widths.len() >= 2, "an mlp needs input and output widths");
    let mut b = MacroBuilder::new();
    let x = b.input(lanes(widths[0]), "x");
    let out = mlp(&mut b, widths, act, vec![x]);
    b.finish(vec![out])
}

/// `LᵀL` for a 3 × 3 lattice.
pub fn lower_matmul() -> MacroCircuit {
    let mut b = MacroBuilder::new();
    let l = b.input(9, "lattice");
    let g = gram(&mut b, l);
    b.finish(vec![g])
}

/// A single message `m_01` with its own inputs.
pub fn lower_message(cfg: &EgnnConfig, opts: &LoweringOptions) -> Result<MacroCircuit, LoweringError> {
    cfg.validate()?;
    let mut b = MacroBuilder::new();
    let h = [b.input(lanes(cfg.d), "hidden"), b.input(lanes(cfg.d), "hidden")];
    let frac = vec![b.input(3, "frac"), b.input(3, "frac")];
    let lattice = b.input(9, "lattice");
    let gram = gram(&mut b, lattice);
    let freqs = frequencies(&mut b, cfg.k);
    let diff = b.std(FpStdOp::Sub, 3, frac, "frac_diff");
    let psi = fourier(&mut b, freqs, diff, cfg.k, opts.serialize_trig);
    let m = message(&mut b, cfg, gram, h[0], h[1], psi);
    Ok(b.finish(vec![m]))
}

/// One layer over all `n` atoms, hidden states given as inputs.
pub fn lower_layer(cfg: &EgnnConfig, opts: &LoweringOptions) -> Result<MacroCircuit, LoweringError> {
    check_regime(cfg, opts)?;
    let mut b = MacroBuilder::new();
    let h: Vec<NodeRef> = (0..cfg.n).map(|_| b.input(lanes(cfg.d), "hidden")).collect();
    let ctx = layer_inputs(&mut b, cfg, opts);
    let out = layer(&mut b, cfg, opts, &ctx, &h);
    Ok(b.finish(out))
}

/// `φ_in` on every atom followed by `q` layers.
pub fn lower_egnn(cfg: &EgnnConfig, opts: &LoweringOptions) -> Result<MacroCircuit, LoweringError> {
    check_regime(cfg, opts)?;
    let mut b = MacroBuilder::new();
    let atoms: Vec<NodeRef> = (0..cfg.n).map(|_| b.input(lanes(cfg.h), "descriptors")).collect();
    let ctx = layer_inputs(&mut b, cfg, opts);
    let widths = cfg.phi_in_widths();
    let mut h: Vec<NodeRef> = atoms.into_iter().map(|a| mlp(&mut b, &widths, cfg.activation, vec![a])).collect();
    for _ in 0..cfg.q {
        h = layer(&mut b, cfg, opts, &ctx, &h);
    }
    Ok(b.finish(h))
}
