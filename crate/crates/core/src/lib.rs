//! Optimal dividend barriers for the dual risk model with a surplus-dependent cost rate.
//!
//! The surplus falls deterministically at rate `p(x)` and rises by i.i.d. gains
//! arriving at Poisson rate `λ`. Under a barrier strategy at `β` everything
//! above `β` is paid out. This crate computes the barrier value `v_β` three
//! ways, locates the optimal barrier `β*`, checks the HJB conditions, and
//! simulates the controlled process as an independent check.
//!
//! ```
//! use dualdiv::{find_beta_star, CostFunction, ModelParams, SearchOptions};
//!
//! let params = ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, 0.01);
//! let report = find_beta_star(&params, &SearchOptions::default()).unwrap();
//! assert!((report.gamma_at_star - 1.0).abs() < 1e-4);
//! ```

pub mod barrier_value;
pub mod classical_exit;
pub mod error;
pub mod grid;
pub mod hjb;
pub mod io;
pub mod model;
pub mod numerics;
pub mod optimal_barrier;
pub mod simulator;

pub use barrier_value::{BarrierSolution, Method};
pub use classical_exit::{ClassicalModel, ExitFunctions, Penalty, PremiumExtension};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use hjb::{verify_hjb, CandidateValue, HjbReport};
pub use model::{validate, CostFunction, JumpLaw, ModelParams};
pub use optimal_barrier::{find_beta_star, gamma, OptimalBarrierReport, SearchOptions};
pub use simulator::{estimate_value, SimConfig, SimEstimate};

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($($name:ident => $file:literal),* $(,)?) => {
            $(
                #[doc = include_str!(concat!("../../../book/src/", $file))]
                pub struct $name;
            )*
        };
    }
    chapter! {
        Introduction => "introduction.md",
        Model => "model.md",
        BarrierValue => "barrier-value.md",
        OptimalBarrier => "optimal-barrier.md",
        Hjb => "hjb.md",
        Simulation => "simulation.md",
        Cli => "cli.md",
    }
}
