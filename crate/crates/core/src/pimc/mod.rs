//! The Trotterized effective classical model.
//!
//! A chain of `L` quantum spins becomes an `L x P` lattice of classical Ising
//! variables `S_i(tau)` with weight `exp(-beta_eff * H_eff)`, where
//!
//! ```text
//! H_eff = - J      sum_{i<L-1} sum_tau S_i(tau) S_{i+1}(tau)
//!         - g/b    sum_i       sum_tau S_i(tau) S_i(tau+1)
//!         - sum_i  sum_{tau>tau'} K(tau - tau') S_i(tau) S_i(tau')
//! ```
//!
//! with `g = -1/2 ln tanh(beta_eff * Gamma)`, `b = beta_eff`, periodic
//! imaginary time, and `K` the Ohmic long-range kernel (see [`BathKernel`]).

mod energy;
mod field;
mod kernel;
mod schedule;

pub(crate) use energy::local_delta;
pub use energy::{EffectiveModel, TrotterSites};
pub use field::SpinField;
pub use kernel::BathKernel;
pub use schedule::{schedule_at, trotter_coupling, CouplingSet, ScheduleParams};
