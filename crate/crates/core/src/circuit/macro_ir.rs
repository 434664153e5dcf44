use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::diagnostics::{DiagnosticKind, Diagnostics};

/// `d_std·c_std + d_⊕·c_⊕ + d_⊗·c_⊗ + d_exp·c_exp + d_sqrt·c_sqrt`, kept as
/// its coefficient vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepthExpr {
    pub d_std: u64,
    pub d_plus: u64,
    pub d_times: u64,
    #[serde(default)]
    pub d_exp: u64,
    #[serde(default)]
    pub d_sqrt: u64,
}

/// Outcome of comparing a measured depth with a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Within,
    Equal,
    Exceeds,
    Incomparable,
}

impl Verdict {
    pub fn passes(self) -> bool {
        matches!(self, Verdict::Within | Verdict::Equal)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Within => "within",
            Verdict::Equal => "equal",
            Verdict::Exceeds => "exceeds",
            Verdict::Incomparable => "incomparable",
        })
    }
}

impl DepthExpr {
    pub const ZERO: DepthExpr = DepthExpr::new(0, 0, 0);

    pub const fn new(d_std: u64, d_plus: u64, d_times: u64) -> Self {
        DepthExpr { d_std, d_plus, d_times, d_exp: 0, d_sqrt: 0 }
    }

    pub const fn std() -> Self {
        DepthExpr::new(1, 0, 0)
    }

    pub fn coefficients(self) -> [u64; 5] {
        [self.d_std, self.d_plus, self.d_times, self.d_exp, self.d_sqrt]
    }

    fn from_coefficients(c: [u64; 5]) -> Self {
        DepthExpr { d_std: c[0], d_plus: c[1], d_times: c[2], d_exp: c[3], d_sqrt: c[4] }
    }

    pub fn scale(self, q: u64) -> Self {
        DepthExpr::from_coefficients(self.coefficients().map(|c| c * q))
    }

    /// `self ≥ other` in every coefficient.
    pub fn dominates(self, other: DepthExpr) -> bool {
        self.coefficients().iter().zip(other.coefficients()).all(|(a, b)| *a >= b)
    }

    /// Componentwise maximum, plus whether the two were incomparable.
    pub fn join(self, other: DepthExpr) -> (DepthExpr, bool) {
        let a = self.coefficients();
        let b = other.coefficients();
        let max = std::array::from_fn(|i| a[i].max(b[i]));
        let incomparable = !self.dominates(other) && !other.dominates(self);
        (DepthExpr::from_coefficients(max), incomparable)
    }

    /// How `self` (measured) relates to `bound`.
    pub fn verdict(self, bound: DepthExpr) -> Verdict {
        if self == bound {
            Verdict::Equal
        } else if bound.dominates(self) {
            Verdict::Within
        } else if self.dominates(bound) {
            Verdict::Exceeds
        } else {
            Verdict::Incomparable
        }
    }

    /// Signed per-coefficient difference `self - other`.
    pub fn diff(self, other: DepthExpr) -> [i64; 5] {
        let a = self.coefficients();
        let b = other.coefficients();
        std::array::from_fn(|i| a[i] as i64 - b[i] as i64)
    }
}

impl Add for DepthExpr {
    type Output = DepthExpr;

    fn add(self, rhs: DepthExpr) -> DepthExpr {
        let a = self.coefficients();
        let b = rhs.coefficients();
        DepthExpr::from_coefficients(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl AddAssign for DepthExpr {
    fn add_assign(&mut self, rhs: DepthExpr) {
        *self = *self + rhs;
    }
}

impl fmt::Display for DepthExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["d_std", "d_⊕", "d_⊗", "d_exp", "d_sqrt"];
        let mut first = true;
        for (c, name) in self.coefficients().iter().zip(names) {
            if *c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *c == 1 {
                f.write_str(name)?;
            } else {
                write!(f, "{c}{name}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FpStdOp {
    Add,
    Sub,
    Mul,
    Div,
    Leq,
    /// `max(x, 0)`: one comparison feeding a select.
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroOp {
    Input,
    /// Regrouping or concatenation; free.
    Wire,
    FpStd(FpStdOp),
    IterSum,
    IterProd,
    Exp,
    Sqrt,
    /// A sin/cos evaluator charged at `8d_std + d_⊕ + d_⊗` as one unit.
    TrigBlock,
}

impl MacroOp {
    pub fn cost(self) -> DepthExpr {
        match self {
            MacroOp::Input | MacroOp::Wire => DepthExpr::ZERO,
            MacroOp::FpStd(_) => DepthExpr::std(),
            MacroOp::IterSum => DepthExpr::new(0, 1, 0),
            MacroOp::IterProd => DepthExpr::new(0, 0, 1),
            MacroOp::Exp => DepthExpr { d_exp: 1, ..DepthExpr::ZERO },
            MacroOp::Sqrt => DepthExpr { d_sqrt: 1, ..DepthExpr::ZERO },
            MacroOp::TrigBlock => DepthExpr::new(8, 1, 1),
        }
    }

    /// Whether the node performs arithmetic and so counts toward size.
    pub fn counts_toward_size(self) -> bool {
        !matches!(self, MacroOp::Input | MacroOp::Wire)
    }
}

pub type NodeRef = usize;

/// One vectorized operation: `lanes` independent copies of `op`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MacroNode {
    pub op: MacroOp,
    pub lanes: u64,
    pub deps: Vec<NodeRef>,
    pub tag: &'static str,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MacroCircuit {
    pub nodes: Vec<MacroNode>,
    pub outputs: Vec<NodeRef>,
}

#[derive(Debug, Error)]
pub enum MacroError {
    #[error("macro circuit has a cycle through node {0}")]
    Cycle(NodeRef),
    #[error("invalid macro circuit: {0}")]
    Invalid(#[from] Diagnostics),
}

/// Result of [`macro_depth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MacroDepth {
    pub depth: DepthExpr,
    /// Nodes whose dependencies had pairwise incomparable depths.
    pub flagged: Vec<NodeRef>,
    /// The final join over outputs was incomparable.
    pub output_join_flagged: bool,
}

impl MacroDepth {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty() && !self.output_join_flagged
    }
}

impl MacroCircuit {
    /// Total lanes over arithmetic nodes.
    pub fn size(&self) -> u64 {
        self.nodes.iter().filter(|n| n.op.counts_toward_size()).map(|n| n.lanes).sum()
    }

    /// Lane count summed over nodes with this tag.
    pub fn lanes_tagged(&self, tag: &str) -> u64 {
        self.nodes.iter().filter(|n| n.tag == tag).map(|n| n.lanes).sum()
    }

    pub fn count_tagged(&self, tag: &str) -> usize {
        self.nodes.iter().filter(|n| n.tag == tag).count()
    }

    pub fn validate(&self) -> Result<(), Diagnostics> {
        let mut diags = Diagnostics::default();
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.lanes == 0 {
                diags.push(Some(i), DiagnosticKind::ZeroLanes);
            }
            if node.op == MacroOp::Input && !node.deps.is_empty() {
                diags.push(Some(i), DiagnosticKind::InputWithDependencies);
            }
            for &d in &node.deps {
                if d >= n {
                    diags.push(Some(i), DiagnosticKind::DanglingReference { target: d });
                }
            }
        }
        for &o in &self.outputs {
            if o >= n {
                diags.push(None, DiagnosticKind::DanglingOutput { target: o });
            }
        }
        if diags.is_empty() {
            if let Err(on_cycle) = topo_order(self) {
                for i in on_cycle {
                    diags.push(Some(i), DiagnosticKind::Cycle);
                }
            }
        }
        diags.into_result()
    }
}

/// Kahn's algorithm; on failure returns the nodes left unprocessed.
fn topo_order(c: &MacroCircuit) -> Result<Vec<NodeRef>, Vec<NodeRef>> {
    let n = c.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut users: Vec<Vec<NodeRef>> = vec![Vec::new(); n];
    for (i, node) in c.nodes.iter().enumerate() {
        for &d in &node.deps {
            indegree[i] += 1;
            users[d].push(i);
        }
    }
    let mut queue: VecDeque<NodeRef> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                queue.push_back(u);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// Longest-path depth of the circuit's outputs. Node order in `nodes` does
/// not matter.
pub fn macro_depth(c: &MacroCircuit) -> Result<MacroDepth, MacroError> {
    c.validate().map_err(|d| match d.0.iter().find(|x| x.kind == DiagnosticKind::Cycle) {
        Some(x) => MacroError::Cycle(x.node.unwrap_or(0)),
        None => MacroError::Invalid(d),
    })?;
    let order = topo_order(c).expect("validated");
    let mut depth = vec![DepthExpr::ZERO; c.nodes.len()];
    let mut flagged = Vec::new();
    for i in order {
        let node = &c.nodes[i];
        let (base, clash) = join_all(node.deps.iter().map(|&d| depth[d]));
        if clash {
            flagged.push(i);
        }
        depth[i] = base + node.op.cost();
    }
    flagged.sort_unstable();
    let (total, output_join_flagged) = join_all(c.outputs.iter().map(|&o| depth[o]));
    Ok(MacroDepth { depth: total, flagged, output_join_flagged })
}

fn join_all(it: impl Iterator<Item = DepthExpr>) -> (DepthExpr, bool) {
    it.fold((DepthExpr::ZERO, false), |(acc, clash), d| {
        let (j, c) = acc.join(d);
        (j, clash || c)
    })
}

/// Appends nodes; references always point backwards.
#[derive(Debug, Clone, Default)]
pub struct MacroBuilder {
    nodes: Vec<MacroNode>,
}

impl MacroBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, lanes: u64, tag: &'static str) -> NodeRef {
        self.node(MacroOp::Input, lanes, Vec::new(), tag)
    }

    pub fn node(&mut self, op: MacroOp, lanes: u64, deps: Vec<NodeRef>, tag: &'static str) -> NodeRef {
        self.nodes.push(MacroNode { op, lanes, deps, tag });
        self.nodes.len() - 1
    }

    pub fn std(&mut self, op: FpStdOp, lanes: u64, deps: Vec<NodeRef>, tag: &'static str) -> NodeRef {
        self.node(MacroOp::FpStd(op), lanes, deps, tag)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn finish(self, outputs: Vec<NodeRef>) -> MacroCircuit {
        MacroCircuit { nodes: self.nodes, outputs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_and_serial() {
        let mut b = MacroBuilder::new();
        let x = b.input(4, "x");
        let m = b.std(FpStdOp::Mul, 4, vec![x], "mul");
        let one = b.clone().finish(vec![m]);
        assert_eq!(macro_depth(&one).unwrap().depth, DepthExpr::new(1, 0, 0));
        let s = b.node(MacroOp::IterSum, 1, vec![m], "sum");
        let c = b.finish(vec![s]);
        assert_eq!(macro_depth(&c).unwrap().depth, DepthExpr::new(1, 1, 0));
        assert_eq!(c.size(), 5);
    }

    #[test]
    fn parallel_branches_do_not_add() {
        let mut b = MacroBuilder::new();
        let x = b.input(1, "x");
        let a = b.std(FpStdOp::Add, 1, vec![x], "a");
        let c = b.std(FpStdOp::Add, 1, vec![x], "b");
        let w = b.node(MacroOp::Wire, 2, vec![a, c], "cat");
        let d = macro_depth(&b.finish(vec![w])).unwrap();
        assert_eq!(d.depth, DepthExpr::std());
        assert!(d.is_clean());
    }

    #[test]
    fn incomparable_join_is_flagged() {
        let mut b = MacroBuilder::new();
        let x = b.input(1, "x");
        let s = b.node(MacroOp::IterSum, 1, vec![x], "s");
        let p = b.node(MacroOp::IterProd, 1, vec![x], "p");
        let j = b.std(FpStdOp::Add, 1, vec![s, p], "j");
        let d = macro_depth(&b.finish(vec![j])).unwrap();
        assert_eq!(d.depth, DepthExpr::new(1, 1, 1));
        assert_eq!(d.flagged, vec![j]);
    }

    #[test]
    fn cycles_and_dangling() {
        let node = |deps| MacroNode { op: MacroOp::FpStd(FpStdOp::Add), lanes: 1, deps, tag: "n" };
        let cyc = MacroCircuit { nodes: vec![node(vec![1]), node(vec![0])], outputs: vec![0] };
        assert!(matches!(macro_depth(&cyc), Err(MacroError::Cycle(_))));
        let dangling = MacroCircuit { nodes: vec![node(vec![7])], outputs: vec![0] };
        assert!(matches!(macro_depth(&dangling), Err(MacroError::Invalid(_))));
    }

    #[test]
    fn verdicts() {
        let b = DepthExpr::new(16, 3, 2);
        assert_eq!(DepthExpr::new(16, 3, 1).verdict(b), Verdict::Within);
        assert_eq!(b.verdict(b), Verdict::Equal);
        assert_eq!(DepthExpr::new(17, 3, 2).verdict(b), Verdict::Exceeds);
        assert_eq!(DepthExpr::new(16, 4, 1).verdict(b), Verdict::Incomparable);
        assert_eq!(DepthExpr::new(18, 4, 2).scale(3), DepthExpr::new(54, 12, 6));
        assert_eq!(DepthExpr::new(13, 2, 1).to_string(), "13d_std + 2d_⊕ + d_⊗");
    }
}
