pub mod cli;
pub mod dirichlet;
pub mod distance;
mod linalg;
pub mod mahalanobis;
pub mod rbtest;
pub mod simgen;
pub mod specialfn;
