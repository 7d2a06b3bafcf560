pub mod campaign;
pub mod de;
pub mod fitness;
pub mod keyed;
pub mod mc_eval;
pub mod numeric;
pub mod param_space;
pub mod rng;
pub mod sim;
pub mod stats;
