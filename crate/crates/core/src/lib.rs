pub mod agents;
pub mod bundling;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod dataset;
pub mod embedding;
pub mod labeling;
pub mod layout;
pub mod model;
pub mod pipeline;
pub mod server;
pub mod spatial;
pub mod synth;
