//! Command-line front end for the rainbow-matching toolbox: instance
//! generators, the three randomized solvers, the exact oracle, matching
//! verification, schedule curves, seeded campaigns, and the acceptance
//! suite.

pub mod acceptance;
pub mod campaign;
pub mod commands;
pub mod params;
