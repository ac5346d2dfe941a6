pub mod analytic;
pub mod bohm;
pub mod error;
pub mod kostin;
pub mod ode;
pub mod output;
pub mod problem;
pub mod scan;
pub mod validation;
