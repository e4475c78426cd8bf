pub mod ber;
pub mod files;
pub mod lyapunov;
pub mod map;
pub mod selftest;
pub mod sync;
