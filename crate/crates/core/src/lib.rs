pub mod aggregation;
pub mod assignment;
pub mod control;
pub mod harness;
pub mod mesh;
pub mod netsim;
pub mod pipeline;
pub mod tensor;
pub mod wire;
