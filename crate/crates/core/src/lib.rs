pub mod numerics;
pub mod qsim;
pub mod hhl;
pub mod grid;
pub mod solvers;
pub mod stochastic;
pub mod cli;
