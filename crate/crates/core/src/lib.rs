pub mod grid;
pub mod pcg;
pub mod repair;
pub mod rng;
pub mod robot;
#[cfg(feature = "server")]
pub mod server;
pub mod sim;
pub mod solver;
