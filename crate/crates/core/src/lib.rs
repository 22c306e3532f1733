pub mod cli;
pub mod dsl;
pub mod ordinal;
pub mod par;
pub mod ends;
pub mod rank;
pub mod spanning;
