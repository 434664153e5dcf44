use std::fmt;

use serde::Serialize;

/// One structural problem found by a `validate` call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// Offending node, when the problem belongs to one.
    pub node: Option<usize>,
    pub kind: DiagnosticKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// A fan-in names a node at or after the gate itself.
    ForwardReference {
        target: usize,
    },
    /// A reference to a node id that does not exist.
    DanglingReference {
        target: usize,
    },
    DanglingOutput {
        target: usize,
    },
    Arity {
        gate: String,
        expected: String,
        found: usize,
    },
    /// The node lies on a dependency cycle.
    Cycle,
    InputWithDependencies,
    ZeroLanes,
    InputIds {
        reason: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.node {
            write!(f, "node {n}: ")?;
        }
        match &self.kind {
            DiagnosticKind::ForwardReference { target } => {
                write!(f, "fan-in {target} does not precede the gate")
            }
            DiagnosticKind::DanglingReference { target } => write!(f, "reference to missing node {target}"),
            DiagnosticKind::DanglingOutput { target } => write!(f, "output names missing node {target}"),
            DiagnosticKind::Arity { gate, expected, found } => {
                write!(f, "{gate} takes {expected} inputs, found {found}")
            }
            DiagnosticKind::Cycle => f.write_str("node is on a cycle"),
            DiagnosticKind::InputWithDependencies => f.write_str("input node has dependencies"),
            DiagnosticKind::ZeroLanes => f.write_str("node has zero lanes"),
            DiagnosticKind::InputIds { reason } => write!(f, "bad input ids: {reason}"),
        }
    }
}

/// All problems found in one circuit; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn push(&mut self, node: Option<usize>, kind: DiagnosticKind) {
        self.0.push(Diagnostic { node, kind });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter()
    }

    pub(crate) fn into_result(self) -> Result<(), Diagnostics> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}
