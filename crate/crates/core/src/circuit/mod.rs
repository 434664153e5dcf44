//! Circuit representations.
//!
//! [`ThresholdCircuit`] is a bit-level DAG of AND/OR/NOT/MAJORITY gates.
//! [`MacroCircuit`] is a coarser DAG whose nodes are whole floating-point
//! operations, each charged a symbolic depth; it is what the compiler
//! lowers networks to.

mod diagnostics;
mod macro_ir;
mod threshold;

pub use diagnostics::{Diagnostic, DiagnosticKind, Diagnostics};
pub use macro_ir::{
    macro_depth, DepthExpr, FpStdOp, MacroBuilder, MacroCircuit, MacroDepth, MacroError, MacroNode, MacroOp, NodeRef,
    Verdict,
};
pub use threshold::{
    CircuitBuilder, CircuitDoc, CircuitError, Gate, GateDoc, GateKind, NodeId, ThresholdCircuit, CIRCUIT_SCHEMA_VERSION,
};
