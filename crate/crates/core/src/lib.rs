pub mod calibration;
pub mod clearing;
pub mod io;
pub mod network;
pub mod oracle;
pub mod qp;
pub mod report;
pub mod run;
pub mod synthetic;
pub mod tso;
pub mod validate;
pub mod welfare;
