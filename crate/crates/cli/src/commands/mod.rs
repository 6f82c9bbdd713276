pub mod fit;
pub mod report;
pub mod sim;
pub mod sweep;
