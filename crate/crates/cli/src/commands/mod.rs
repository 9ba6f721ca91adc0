pub mod bench;
pub mod cluster;
pub mod demo;
pub mod explain;
pub mod importance;
pub mod validate;
