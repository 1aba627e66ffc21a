pub mod ao;
pub mod benchmarks;
pub mod channel;
pub mod harness;
pub mod numerics;
pub mod reflect;
pub mod stcode;
pub mod txprecode;
