//! Spanning trees: normal, end-faithful and rayless.

mod efst;
mod ops;
mod rayless;
mod tree;

pub use efst::*;
pub use ops::*;
pub use rayless::*;
pub use tree::*;
