use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::diagnostics::{DiagnosticKind, Diagnostics};

pub const CIRCUIT_SCHEMA_VERSION: u32 = 1;

/// Node ids: `0..num_inputs` are inputs, gate `g` is `num_inputs + g`.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Not,
    /// 1 iff strictly more than half of the fan-in is 1. An even split is 0.
    Majority,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Majority => "MAJORITY",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "NOT" => Ok(GateKind::Not),
            "MAJORITY" | "MAJ" => Ok(GateKind::Majority),
            _ => Err(format!("unknown gate kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub fanin: Vec<NodeId>,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("expected {expected} input bits, got {found}")]
    InputLength { expected: usize, found: usize },
    #[error("invalid circuit: {0}")]
    Invalid(#[from] Diagnostics),
    #[error("circuit json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Gates are stored in evaluation order. The fields are public so malformed
/// circuits can be written down and passed to [`ThresholdCircuit::validate`];
/// evaluation validates first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdCircuit {
    pub num_inputs: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<NodeId>,
}

impl ThresholdCircuit {
    pub fn num_nodes(&self) -> usize {
        self.num_inputs + self.gates.len()
    }

    pub fn validate(&self) -> Result<(), Diagnostics> {
        let mut diags = Diagnostics::default();
        let total = self.num_nodes();
        for (g, gate) in self.gates.iter().enumerate() {
            let id = self.num_inputs + g;
            let arity_ok = match gate.kind {
                GateKind::Not => gate.fanin.len() == 1,
                _ => !gate.fanin.is_empty(),
            };
            if !arity_ok {
                let expected = if gate.kind == GateKind::Not { "exactly 1" } else { "at least 1" };
                diags.push(
                    Some(id),
                    DiagnosticKind::Arity {
                        gate: gate.kind.name().to_string(),
                        expected: expected.to_string(),
                        found: gate.fanin.len(),
                    },
                );
            }
            for &src in &gate.fanin {
                if src >= total {
                    diags.push(Some(id), DiagnosticKind::DanglingReference { target: src });
                } else if src >= id {
                    diags.push(Some(id), DiagnosticKind::ForwardReference { target: src });
                }
            }
        }
        for &out in &self.outputs {
            if out >= total {
                diags.push(None, DiagnosticKind::DanglingOutput { target: out });
            }
        }
        diags.into_result()
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Longest input-to-output path counted in gates. Assumes a valid circuit.
    pub fn depth(&self) -> usize {
        let levels = self.levels();
        self.outputs.iter().map(|&o| levels[o]).max().unwrap_or(0)
    }

    /// Gate level of every node; inputs are level 0.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.num_nodes()];
        for (g, gate) in self.gates.iter().enumerate() {
            level[self.num_inputs + g] = 1 + gate.fanin.iter().map(|&s| level[s]).max().unwrap_or(0);
        }
        level
    }

    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, CircuitError> {
        self.check_input(input.len())?;
        self.validate()?;
        let words: Vec<u64> = input.iter().map(|&b| b as u64).collect();
        Ok(self.eval_words_unchecked(&words).into_iter().map(|w| w & 1 == 1).collect())
    }

    /// Evaluates 64 independent input vectors at once; bit `l` of
    /// `input[i]` is input `i` of lane `l`.
    pub fn evaluate_words(&self, input: &[u64]) -> Result<Vec<u64>, CircuitError> {
        self.check_input(input.len())?;
        self.validate()?;
        Ok(self.eval_words_unchecked(input))
    }

    fn check_input(&self, found: usize) -> Result<(), CircuitError> {
        if found != self.num_inputs {
            return Err(CircuitError::InputLength { expected: self.num_inputs, found });
        }
        Ok(())
    }

    pub(crate) fn eval_words_unchecked(&self, input: &[u64]) -> Vec<u64> {
        let mut val = Vec::with_capacity(self.num_nodes());
        val.extend_from_slice(input);
        for gate in &self.gates {
            let v = match gate.kind {
                GateKind::Not => !val[gate.fanin[0]],
                GateKind::And => {
                    let mut acc = !0u64;
                    for &s in &gate.fanin {
                        acc &= val[s];
                        if acc == 0 {
                            break;
                        }
                    }
                    acc
                }
                GateKind::Or => {
                    let mut acc = 0u64;
                    for &s in &gate.fanin {
                        acc |= val[s];
                        if acc == !0 {
                            break;
                        }
                    }
                    acc
                }
                GateKind::Majority => majority_words(gate.fanin.iter().map(|&s| val[s]), gate.fanin.len()),
            };
            val.push(v);
        }
        self.outputs.iter().map(|&o| val[o]).collect()
    }

    /// Copy with gate `index` switched to `kind`; used for fault injection.
    pub fn with_gate_kind(&self, index: usize, kind: GateKind) -> ThresholdCircuit {
        let mut c = self.clone();
        c.gates[index].kind = kind;
        c
    }

    pub fn to_doc(&self) -> CircuitDoc {
        CircuitDoc {
            schema_version: CIRCUIT_SCHEMA_VERSION,
            inputs: (0..self.num_inputs).collect(),
            gates: self.gates.iter().map(|g| GateDoc { kind: g.kind, fanin: g.fanin.clone() }).collect(),
            outputs: self.outputs.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CircuitError> {
        let doc: CircuitDoc = serde_json::from_str(s)?;
        Ok(doc.into_circuit()?)
    }
}

fn majority_words(words: impl Iterator<Item = u64>, n: usize) -> u64 {
    let mut counts = [0u32; 64];
    for w in words {
        let mut w = w;
        while w != 0 {
            counts[w.trailing_zeros() as usize] += 1;
            w &= w - 1;
        }
    }
    let need = (n / 2 + 1) as u32;
    counts.iter().enumerate().fold(0u64, |acc, (l, &c)| if c >= need { acc | (1 << l) } else { acc })
}

/// Serialized form: `{schema_version, inputs, gates: [{kind, fanin}], outputs}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub schema_version: u32,
    pub inputs: Vec<NodeId>,
    pub gates: Vec<GateDoc>,
    pub outputs: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDoc {
    pub kind: GateKind,
    pub fanin: Vec<NodeId>,
}

impl CircuitDoc {
    pub fn into_circuit(self) -> Result<ThresholdCircuit, Diagnostics> {
        let mut diags = Diagnostics::default();
        if self.schema_version != CIRCUIT_SCHEMA_VERSION {
            diags.push(
                None,
                DiagnosticKind::InputIds { reason: format!("unsupported schema_version {}", self.schema_version) },
            );
        }
        if self.inputs.iter().enumerate().any(|(i, &id)| i != id) {
            diags.push(None, DiagnosticKind::InputIds { reason: "inputs must be 0..n in order".into() });
        }
        diags.into_result()?;
        let c = ThresholdCircuit {
            num_inputs: self.inputs.len(),
            gates: self.gates.into_iter().map(|g| Gate { kind: g.kind, fanin: g.fanin }).collect(),
            outputs: self.outputs,
        };
        c.validate()?;
        Ok(c)
    }
}

/// Appends gates in order, so every circuit it finishes is topologically sorted.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<NodeId>,
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder { num_inputs, gates: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&self, i: usize) -> NodeId {
        assert!(i < self.num_inputs, "input {i} out of range");
        i
    }

    pub fn gate(&mut self, kind: GateKind, fanin: Vec<NodeId>) -> NodeId {
        self.gates.push(Gate { kind, fanin });
        self.num_inputs + self.gates.len() - 1
    }

    pub fn and(&mut self, fanin: Vec<NodeId>) -> NodeId {
        self.gate(GateKind::And, fanin)
    }

    pub fn or(&mut self, fanin: Vec<NodeId>) -> NodeId {
        self.gate(GateKind::Or, fanin)
    }

    pub fn not(&mut self, x: NodeId) -> NodeId {
        self.gate(GateKind::Not, vec![x])
    }

    pub fn majority(&mut self, fanin: Vec<NodeId>) -> NodeId {
        self.gate(GateKind::Majority, fanin)
    }

    pub fn output(&mut self, id: NodeId) {
        self.outputs.push(id);
    }

    pub fn finish(self) -> Result<ThresholdCircuit, Diagnostics> {
        let c = ThresholdCircuit { num_inputs: self.num_inputs, gates: self.gates, outputs: self.outputs };
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kind: GateKind, n: usize) -> ThresholdCircuit {
        let mut b = CircuitBuilder::new(n);
        let g = b.gate(kind, (0..n).collect());
        b.output(g);
        b.finish().unwrap()
    }

    #[test]
    fn gate_semantics() {
        let maj3 = single(GateKind::Majority, 3);
        assert_eq!(maj3.evaluate(&[true, true, false]).unwrap(), vec![true]);
        assert_eq!(maj3.evaluate(&[true, false, false]).unwrap(), vec![false]);
        let maj2 = single(GateKind::Majority, 2);
        assert_eq!(maj2.evaluate(&[true, false]).unwrap(), vec![false]);
        assert_eq!(maj2.evaluate(&[true, true]).unwrap(), vec![true]);
        let not = single(GateKind::Not, 1);
        assert_eq!(not.evaluate(&[false]).unwrap(), vec![true]);
        assert_eq!((not.depth(), not.size()), (1, 1));
    }

    #[test]
    fn words_agree_with_bits() {
        let maj = single(GateKind::Majority, 4);
        let words = [0b1111_0000u64, 0b1100_1100, 0b1010_1010, 0b0110_1001];
        let out = maj.evaluate_words(&words).unwrap()[0];
        for lane in 0..8 {
            let bits: Vec<bool> = words.iter().map(|w| w >> lane & 1 == 1).collect();
            assert_eq!(maj.evaluate(&bits).unwrap()[0], out >> lane & 1 == 1, "lane {lane}");
        }
    }

    #[test]
    fn depth_and_size() {
        let mut b = CircuitBuilder::new(4);
        let o1 = b.or(vec![0, 1]);
        let o2 = b.or(vec![2, 3]);
        let a = b.and(vec![o1, o2]);
        b.output(a);
        let c = b.finish().unwrap();
        assert_eq!((c.depth(), c.size()), (2, 3));

        let wire = ThresholdCircuit { num_inputs: 2, gates: vec![], outputs: vec![1, 0] };
        assert_eq!(wire.depth(), 0);
        assert_eq!(wire.evaluate(&[true, false]).unwrap(), vec![false, true]);
    }

    #[test]
    fn diagnostics() {
        let fwd = ThresholdCircuit {
            num_inputs: 1,
            gates: vec![Gate { kind: GateKind::Not, fanin: vec![2] }, Gate { kind: GateKind::Not, fanin: vec![0] }],
            outputs: vec![1],
        };
        let d = fwd.validate().unwrap_err();
        assert!(matches!(d.0[0].kind, DiagnosticKind::ForwardReference { target: 2 }));

        let arity = ThresholdCircuit {
            num_inputs: 2,
            gates: vec![Gate { kind: GateKind::Not, fanin: vec![0, 1] }],
            outputs: vec![2],
        };
        assert!(matches!(arity.validate().unwrap_err().0[0].kind, DiagnosticKind::Arity { found: 2, .. }));
        assert!(matches!(arity.evaluate(&[true, true]), Err(CircuitError::Invalid(_))));
        assert!(matches!(single(GateKind::And, 2).evaluate(&[true]), Err(CircuitError::InputLength { .. })));
    }

    #[test]
    fn json_round_trip() {
        let c = single(GateKind::Majority, 3);
        let json = c.to_json();
        assert_eq!(
            json,
            r#"{"schema_version":1,"inputs":[0,1,2],"gates":[{"kind":"MAJORITY","fanin":[0,1,2]}],"outputs":[3]}"#
        );
        assert_eq!(ThresholdCircuit::from_json(&json).unwrap(), c);
        let bad = r#"{"schema_version":1,"inputs":[0],"gates":[{"kind":"NOT","fanin":[1]}],"outputs":[1]}"#;
        assert!(matches!(ThresholdCircuit::from_json(bad), Err(CircuitError::Invalid(_))));
    }
}
