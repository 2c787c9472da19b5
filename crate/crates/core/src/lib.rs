pub mod drift;
pub mod eval;
pub mod features;
pub mod frame;
pub mod ingest;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod search;
pub mod synth;

pub use frame::Frame;
pub use scalar::Scalar;

pub type Weights32 = nn::NetworkWeights<f32>;
pub type Weights64 = nn::NetworkWeights<f64>;
pub type WindowSet32 = nn::WindowSet<f32>;
pub type WindowSet64 = nn::WindowSet<f64>;
