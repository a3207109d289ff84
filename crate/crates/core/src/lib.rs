pub mod error;
pub mod etnc;
pub mod gen;
pub mod howell;
pub mod ideal;
pub mod io;
pub mod module;
pub mod oracle;
pub mod ring;
pub mod selmer;
pub mod stark;
pub mod wedge;
pub mod zmod;

pub use error::{Error, Result};
