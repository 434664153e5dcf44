//! Lowering of the network to a [`MacroCircuit`](crate::circuit::MacroCircuit)
//! and depth/size accounting against a [`DepthTable`].
//!
//! ```
//! use crystal_tc0::circuit::{macro_depth, DepthExpr};
//! use crystal_tc0::compiler::{lower_egnn, LoweringOptions};
//! use crystal_tc0::egnn::{EgnnConfig, Mode};
//!
//! let cfg = EgnnConfig::new(4, 3, 4, 4, 2, Mode::Real, 24, 0);
//! let c = lower_egnn(&cfg, &LoweringOptions::default()).unwrap();
//! let depth = macro_depth(&c).unwrap().depth;
//! assert!(DepthExpr::new(18, 4, 2).scale(2).dominates(depth));
//! ```

mod bounds;
mod lower;
mod table;

pub use bounds::{
    check_bounds, scaling_csv, size_scaling, BoundReport, BoundsOutcome, ScalingError, ScalingRegime, ScalingRow,
};
pub use lower::{
    check_regime, lower_egnn, lower_fourier, lower_layer, lower_matmul, lower_message, lower_mlp, lower_trig,
    Aggregation, LoweringError, LoweringOptions, DEFAULT_REGIME_FACTOR,
};
pub use table::{Consistency, DepthTable};
