//! Bit-level circuits for the four primitive operations at small `p`.
//!
//! The construction is two-level: one NOT per input bit, one AND per pair of
//! valid operand encodings whose result has any bit set, and one OR per output
//! bit collecting the ANDs where that bit is 1. Depth is 3 for every
//! operation and precision. Size grows like `4^(2p)`, which is why `p` is
//! capped at [`MAX_SYNTH_P`].
//!
//! Operands enter as `a`'s bits followed by `b`'s, each in the
//! [`encode_bits`] layout. Both finite values and `±∞` are valid encodings;
//! when the operation is undefined (an infinite operand, division by zero)
//! the circuit outputs all zeros, as it does for any invalid encoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitBuilder, NodeId, ThresholdCircuit};
use crate::fpn::{encode_bits, finite_values, fp_arith, ArithOp, ArithResult, Fpn, Precision};

pub const MAX_SYNTH_P: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    TwoLevelDnf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub op: ArithOp,
    pub prec: Precision,
    pub strategy: Strategy,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("two-level synthesis supports p <= {MAX_SYNTH_P}, got p = {0}")]
    PrecisionTooLarge(u32),
}

impl SynthSpec {
    pub fn new(op: ArithOp, prec: Precision) -> Result<Self, SynthError> {
        if prec.bits() > MAX_SYNTH_P {
            return Err(SynthError::PrecisionTooLarge(prec.bits()));
        }
        Ok(SynthSpec { op, prec, strategy: Strategy::TwoLevelDnf })
    }

    pub fn operand_width(&self) -> usize {
        self.prec.encoded_width()
    }

    pub fn input_width(&self) -> usize {
        2 * self.operand_width()
    }

    pub fn output_width(&self) -> usize {
        match self.op {
            ArithOp::Leq => 1,
            _ => self.operand_width(),
        }
    }

    /// The value the circuit must produce for operands `a`, `b`.
    pub fn expected(&self, a: Fpn, b: Fpn) -> Vec<bool> {
        match fp_arith(self.op, a, b, self.prec) {
            Ok(ArithResult::Value(v)) => encode_bits(v, self.prec),
            Ok(ArithResult::Bool(t)) => vec![t],
            Err(_) => vec![false; self.output_width()],
        }
    }

    pub fn encode_pair(&self, a: Fpn, b: Fpn) -> Vec<bool> {
        let mut bits = encode_bits(a, self.prec);
        bits.extend(encode_bits(b, self.prec));
        bits
    }
}

/// Valid operand values: every finite value plus both infinities.
pub fn operand_values(prec: Precision) -> Vec<Fpn> {
    let mut v = finite_values(prec);
    v.insert(0, Fpn::infinity(true, prec));
    v.push(Fpn::infinity(false, prec));
    v
}

pub fn synthesize(spec: &SynthSpec) -> ThresholdCircuit {
    let n_in = spec.input_width();
    let mut b = CircuitBuilder::new(n_in);
    let negated: Vec<NodeId> = (0..n_in).map(|i| b.not(i)).collect();

    let values = operand_values(spec.prec);
    let mut on_set: Vec<Vec<NodeId>> = vec![Vec::new(); spec.output_width()];
    for &x in &values {
        for &y in &values {
            let out = spec.expected(x, y);
            if !out.iter().any(|&t| t) {
                continue;
            }
            let literals =
                spec.encode_pair(x, y).iter().enumerate().map(|(i, &bit)| if bit { i } else { negated[i] }).collect();
            let term = b.and(literals);
            for (bit, terms) in out.iter().zip(on_set.iter_mut()) {
                if *bit {
                    terms.push(term);
                }
            }
        }
    }

    let mut never = None;
    for terms in on_set {
        let fanin =
            if terms.is_empty() { vec![*never.get_or_insert_with(|| b.and(vec![0, negated[0]]))] } else { terms };
        let g = b.or(fanin);
        b.output(g);
    }
    b.finish().expect("synthesized circuit is well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub a: Fpn,
    pub b: Fpn,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub op: ArithOp,
    pub p: u32,
    #[serde(flatten)]
    pub mode: VerifyMode,
    pub cases: u64,
    pub mismatches: u64,
    pub mismatch_examples: Vec<Mismatch>,
    pub depth: usize,
    pub size: usize,
}

const MAX_EXAMPLES: usize = 16;
/// Cases per parallel work item (a multiple of the 64-lane word).
const CHUNK: usize = 64 * 64;

/// Checks `c` against the arithmetic it was synthesized for.
pub fn verify(spec: &SynthSpec, c: &ThresholdCircuit, mode: VerifyMode) -> VerifyReport {
    let values = operand_values(spec.prec);
    let cases: Vec<(Fpn, Fpn)> = match mode {
        VerifyMode::Exhaustive => values.iter().flat_map(|&x| values.iter().map(move |&y| (x, y))).collect(),
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples)
                .map(|_| (values[rng.random_range(0..values.len())], values[rng.random_range(0..values.len())]))
                .collect()
        }
    };

    let shape_ok = c.num_inputs == spec.input_width() && c.outputs.len() == spec.output_width();
    let valid = shape_ok && c.validate().is_ok();
    let per_chunk: Vec<(u64, Vec<Mismatch>)> = cases
        .par_chunks(CHUNK)
        .map(|chunk| {
            if !valid {
                return (chunk.len() as u64, Vec::new());
            }
            check_chunk(spec, c, chunk)
        })
        .collect();

    let mut mismatches = 0;
    let mut mismatch_examples = Vec::new();
    for (count, examples) in per_chunk {
        mismatches += count;
        for m in examples {
            if mismatch_examples.len() < MAX_EXAMPLES {
                mismatch_examples.push(m);
            }
        }
    }
    VerifyReport {
        op: spec.op,
        p: spec.prec.bits(),
        mode,
        cases: cases.len() as u64,
        mismatches,
        mismatch_examples,
        depth: if valid { c.depth() } else { 0 },
        size: c.size(),
    }
}

fn check_chunk(spec: &SynthSpec, c: &ThresholdCircuit, chunk: &[(Fpn, Fpn)]) -> (u64, Vec<Mismatch>) {
    let mut count = 0;
    let mut examples = Vec::new();
    for word in chunk.chunks(64) {
        let mut inputs = vec![0u64; spec.input_width()];
        let mut expected = Vec::with_capacity(word.len());
        for (lane, &(a, b)) in word.iter().enumerate() {
            for (i, bit) in spec.encode_pair(a, b).into_iter().enumerate() {
                inputs[i] |= (bit as u64) << lane;
            }
            expected.push(spec.expected(a, b));
        }
        let out = c.eval_words_unchecked(&inputs);
        for (lane, (&(a, b), want)) in word.iter().zip(&expected).enumerate() {
            let got: Vec<bool> = out.iter().map(|w| w >> lane & 1 == 1).collect();
            if &got != want {
                count += 1;
                if examples.len() < MAX_EXAMPLES {
                    examples.push(Mismatch { a, b, expected: bit_string(want), found: bit_string(&got) });
                }
            }
        }
    }
    (count, examples)
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}
