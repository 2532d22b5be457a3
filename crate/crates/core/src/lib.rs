pub mod cutoffs;
pub mod heatops;
pub mod ode;
pub mod perturb;
pub mod profile;
pub mod quadrature;
pub mod scenarios;
pub mod special;
