pub mod expressiveness;
pub mod graph;
pub mod model;
pub mod tensor;
pub mod topology;
pub mod train;
