//! Bond-dimension minimality for tree tensor networks.
//!
//! * [`topology`]: trees with physical and bond dimensions, admissibility.
//! * [`tensor`]: dense labelled tensors, flattenings, SVD-based rank.
//! * [`network`]: local tensors on a tree, contraction, the minimality certificate.
//! * [`reduction`]: exact two-sweep hierarchical SVD to minimal bonds.
//! * [`sampling`]: random networks and the genericity experiment.
//! * [`io`] and [`cli`]: file formats and the `ttn` binary.

pub mod cli;
pub mod error;
pub mod io;
pub mod network;
mod par;
pub mod reduction;
pub mod sampling;
pub mod tensor;
pub mod topology;

pub use error::{Error, Result};
pub use network::{MinimalityCertificate, RankReport, TreeNetwork, DEFAULT_MEMORY_BUDGET};
pub use reduction::{local_tucker_refactor, minimal_bonds_oracle, reduce_to_minimal, ReductionTrace};
pub use sampling::{genericity_experiment, sample_network, GenericityResult};
pub use tensor::{AxisLabel, DenseTensor, FlatteningSpec, Matrix, DEFAULT_TOL};
pub use topology::{AdmissibilityVerdict, Edge, RootedView, TreeTopology, VertexId};
