//! Oracles shared by the integration and acceptance tests. Each one is an
//! independent re-derivation, not a call back into the code under test.
#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;
