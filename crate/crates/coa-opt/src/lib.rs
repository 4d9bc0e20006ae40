pub mod clustering;
pub mod coa;
pub mod error;
pub mod ga;
pub mod lot_sizing;
pub mod oracle;
pub mod space;

pub use error::{Error, Result};
pub use space::SearchSpace;
