pub mod cones;
pub mod cq;
pub mod config;
pub mod deriv;
pub mod expr;
pub mod gencvx;
pub mod kkt;
pub mod lp;
pub mod problem;
pub mod report;
