mod analyze;
mod granger;
mod ingest;
mod plotdata;
mod simulate;

pub use analyze::analyze;
pub use granger::granger;
pub use ingest::ingest;
pub use plotdata::plotdata;
pub use simulate::simulate;
