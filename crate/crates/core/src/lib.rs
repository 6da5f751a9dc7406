//! Certified two-sided bounds on the competitive spectral radius of games
//! in which two players alternately pick nonnegative matrices.
//!
//! Pipeline: validate a [`GameInstance`], build an invariant polyhedral cone
//! ([`cone`]), lay a barycentric lattice over the simplex ([`grid`]),
//! precompute the discretized Shapley operator ([`shapley`]) and iterate it
//! with Krasnoselskii-Mann damping ([`solver`]). The result is an additive
//! eigenvalue `λ` (growth rate `exp λ`) with the interval
//! `[λ − 3h, λ + 2h]` for the log of the competitive spectral radius.
//!
//! ```no_run
//! use cosra::{rvi_km_solve, Discretization, GameInstance, SolveOptions};
//!
//! let game = GameInstance::leslie_benchmark().validate()?;
//! let disc = Discretization::new(game, 80)?;
//! let res = rvi_km_solve(&disc, &SolveOptions::default())?;
//! println!("growth rate {:.4} in {:?}", res.growth_rate(), res.interval);
//! # Ok::<(), cosra::Error>(())
//! ```

pub mod cli;
pub mod cone;
pub mod continuity;
pub mod error;
pub mod game;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod shapley;
pub mod solver;
pub mod strategies;

pub use error::{Error, Result};
pub use game::{GameInstance, ValidatedGame};
pub use metrics::{Matrix, MatrixSet, PosVector};
pub use solver::{rvi_km_solve, Discretization, SolveOptions, SolveResult};
