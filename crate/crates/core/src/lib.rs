pub mod constellation;
pub mod cli;
pub mod convexity;
pub mod engine;
pub mod error;
pub mod fading;
pub mod gaussian;
pub mod qcheck;
pub mod quadrature;
pub mod rng;
pub mod sharing;
pub mod systems;
