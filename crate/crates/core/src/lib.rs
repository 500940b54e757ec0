//! Robust time-varying formation control for second-order multi-agent
//! systems with external disturbances.
//!
//! Each agent obeys `p' = v`, `v' = a_p p + a_v v + u + w` and runs an
//! extended state observer whose estimate `z` cancels the disturbance `w`
//! inside a consensus-based formation protocol. The crate covers the whole
//! pipeline:
//!
//! * [`graph`]: Laplacian, spanning-tree test, spectrum and left null vector.
//! * [`riccati`]: closed-form Riccati kernel, protocol gain, Hurwitz check.
//! * [`signals`]: sinusoidal formation and disturbance specifications.
//! * [`eso`]: observer vector field and its frequency response.
//! * [`simulator`]: fixed-step RK4 integration of the closed loop.
//! * [`center`]: formation-center decomposition and its verification.
//! * [`design`]: the four-step design procedure producing a [`DesignReport`].
//! * [`presets`]: the bundled six-agent hexagon scenario.
//! * [`export`]: CSV trace and center files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod center;
pub mod design;
pub mod eso;
pub mod export;
pub mod graph;
pub mod presets;
pub mod riccati;
pub mod signals;
pub mod simulator;

mod error;

pub use design::{design, DesignInput, DesignReport};
pub use error::{Error, Result};
pub use graph::{Digraph, LaplacianSpectrum};
pub use riccati::{GainRow, PlantParams, RiccatiSolution};
pub use signals::{AxisSignal, DisturbanceSpec, FormationSpec, Sinusoid};
pub use simulator::{Protocol, Scenario, SimulationTrace};
