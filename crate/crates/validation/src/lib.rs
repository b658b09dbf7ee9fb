//! Holds the workspace acceptance suite in `tests/acceptance.rs`. It is a
//! separate package so a failing criterion does not stop `cargo test
//! --workspace` before the other crates' tests run.
