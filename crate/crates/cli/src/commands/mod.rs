pub mod ces;
pub mod eval;
pub mod flops;
pub mod prepare;
pub mod train;
