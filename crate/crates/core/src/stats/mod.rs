//! p-value kernels for the matching criteria and the registry that resolves
//! them by name.

mod anderson;
mod registry;
pub mod special;
mod welch;

pub use anderson::{anderson_darling_p, anderson_darling_test, AdResult, AD_P_FLOOR};
pub use registry::{Arity, TestFunction, TestRegistry, ANDERSON_DARLING, WELCH_T};
pub use welch::{welch_t_p, welch_t_test, WelchResult};
