//! Robust forward investment and consumption preferences under drift and
//! idiosyncratic-volatility ambiguity.
//!
//! The pipeline is: validate a [`model_config::MarketSpec`], solve the
//! Hamiltonian saddle point ([`hamiltonian`]), the opportunity-process PDE
//! ([`opportunity_pde`]) and the consumption ODE ([`consumption_ode`]),
//! assemble strategies ([`strategy`]) and check the martingale structure by
//! simulation ([`simulator`]).
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod cli_io;
pub mod consumption_ode;
pub mod error;
pub mod golden;
pub mod hamiltonian;
pub mod model_config;
pub mod opportunity_pde;
pub mod par;
pub mod simulator;
pub mod strategy;

pub use error::{Error, Result};
