pub mod bench;
pub mod bitpack;
pub mod codec;
pub mod fp;
pub mod gd;
pub mod minifloat;
pub mod transforms;
