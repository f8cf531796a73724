pub mod acoustics;
pub mod basis;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod exact;
pub mod mesh;
pub mod operator;
pub mod time;
pub mod verify;
