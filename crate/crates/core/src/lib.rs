pub mod hints;
pub mod logic;
pub mod policy;
pub mod session;
pub mod sim;
