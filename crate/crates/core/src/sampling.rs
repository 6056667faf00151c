//! Random networks and the genericity experiment.
//!
//! Local tensors are filled with i.i.d. standard normals drawn from ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`), vertex by vertex in ascending
//! id order, each tensor in its canonical axis layout and row-major order.
//! The same topology and seed always give bit-identical networks.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::network::{local_axes, TreeNetwork};
use crate::par;
use crate::tensor::DenseTensor;
use crate::topology::TreeTopology;

pub fn sample_network(topology: &TreeTopology, seed: u64) -> TreeNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = topology
        .vertices()
        .map(|v| {
            let axes = local_axes(topology, v).expect("vertex of this topology");
            let len: usize = axes.iter().map(|a| a.1).product();
            let data: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
            let t = DenseTensor::new(
                axes.iter().map(|a| a.1).collect(),
                axes.iter().map(|a| a.0).collect(),
                data,
            )
            .expect("canonical layout");
            (v, t)
        })
        .collect::<BTreeMap<_, _>>();
    TreeNetwork::new(topology.clone(), tensors).expect("canonical layout matches topology")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityResult {
    pub trials: u64,
    pub minimal_count: u64,
    pub seed: u64,
    pub tol_rel: f64,
    /// Per trial, the smallest `σ_bond / σ_1` over all local flattenings.
    pub failure_margins: Vec<f64>,
}

/// Samples `trials` networks (trial `k` uses seed `seed + k`, wrapping) and
/// counts how many pass the local minimality certificate.
pub fn genericity_experiment(topology: &TreeTopology, trials: u64, seed: u64, tol_rel: f64) -> GenericityResult {
    let outcomes = par::map_range(trials, |k| {
        let net = sample_network(topology, seed.wrapping_add(k));
        let cert = net.check_minimality(tol_rel);
        (cert.minimal, cert.report.min_margin())
    });
    GenericityResult {
        trials,
        minimal_count: outcomes.iter().filter(|o| o.0).count() as u64,
        seed,
        tol_rel,
        failure_margins: outcomes.into_iter().map(|o| o.1).collect(),
    }
}
