pub mod arch;
pub mod cvae;
pub mod error;
pub mod heads;
pub mod kv;
pub mod rng;
pub mod scene;
pub mod social;
pub mod split;
pub mod synth;
pub mod tracks;
pub mod window;
pub mod checkpoint;
pub mod efficiency;
pub mod eval;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod train;
