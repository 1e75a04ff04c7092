// published constants are kept at full precision; `!(x > 0.0)` also rejects NaN
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod abm_range;
pub mod cli_io;
pub mod estimators;
pub mod mc_oracle;
pub mod normal;
pub mod pricing;
pub mod quadrature;
pub mod special;
pub mod trading;
