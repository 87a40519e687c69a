pub mod bench;
pub mod binder;
pub mod driver;
pub mod hfqasm;
pub mod kv;
pub mod latency;
pub mod partition;
pub mod qmdg;
pub mod requp;
pub mod scheduler;
pub mod templates;
pub mod time;
