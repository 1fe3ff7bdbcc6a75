pub mod cli;
pub mod config;
pub mod estlab;
pub mod fem;
pub mod material;
pub mod mesh;
pub mod output;
pub mod saddle;
pub mod sparse;
pub mod stepper;
pub mod studies;
pub mod tensor;
