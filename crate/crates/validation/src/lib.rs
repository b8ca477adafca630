//! Holds the acceptance suite in `tests/acceptance.rs`; there is no library
//! code. It lives in its own package so that it runs after the unit and
//! integration tests of both crates.
