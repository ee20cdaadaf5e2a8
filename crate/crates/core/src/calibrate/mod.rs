//! Parameter estimation from fund-month panels.

pub mod decompose;
pub mod panel;
pub mod rates;
pub mod regression;
pub mod binning;
pub mod powerfit;
pub mod flow;
pub mod pipeline;
