//! Distribution comparison utilities and the reference size distributions.

mod ecdf;
mod kde;
mod reference;

pub use ecdf::{ks_distance, ks_two_sample, qq_pairs, quantile, Ecdf};
pub use kde::{kde_gaussian, silverman_bandwidth, Kde};
pub use reference::{gini_curve, matched_lognormal_scale, GiniPoint, ReferenceDistribution, ReferenceFamily, StdDev};
