//! Exact information measures on finite joint tables, in bits.

mod directed;
mod joint;

pub use directed::{
    directed_info, directed_info_terms, unrolled_joint, CausalConditioning, DEFAULT_ATOM_BUDGET,
};
pub(crate) use joint::cmi_dense;
pub use joint::{conditional_mi, entropy, Axis, JointTable};
