pub mod cost;
pub mod error;
pub mod fit;
pub mod fixed;
pub mod func;
pub mod lut;
pub mod noc;
pub mod profiles;
pub mod pwl;
pub mod softmax;

pub use error::{Error, Result};
