//! Clock, seeded randomness, and the simulation loop.

pub mod clock;
pub mod engine;
pub mod rng;

pub use clock::SimClock;
pub use engine::{run_scenario, Simulation};
pub use rng::SeededRng;
