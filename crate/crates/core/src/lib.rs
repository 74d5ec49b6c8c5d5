pub mod classifier;
pub mod coalescent;
pub mod dataset;
pub mod hard;
pub mod harness;
pub mod lp;
pub mod phylo;
pub mod soft;
pub mod synth;
pub mod tropical;
