//! A smooth spatio-temporal field over random sites in a continental box.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::SyntheticSpec;
use crate::error::Result;
use crate::geo_graph::NodeTable;
use crate::ingest::{Dataset, Provenance};
use crate::tv_signal::TvSignal;

const LAT_RANGE: (f64, f64) = (25.0, 50.0);
const LON_RANGE: (f64, f64) = (-125.0, -65.0);
/// Angular frequency of the amplitude modulation, radians per step.
const OMEGA: f64 = 0.15;

struct Bump {
    center: (f64, f64),
    radius: f64,
    amplitude: f64,
    phase: f64,
}

/// Sum of Gaussian bumps whose amplitudes oscillate slowly in time, plus
/// i.i.d. normal noise scaled to `noise_fraction` of the clean field's spread.
pub fn synthetic_smooth(spec: &SyntheticSpec) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let coords: Vec<(f64, f64)> = (0..spec.n_nodes)
        .map(|_| (rng.gen_range(LAT_RANGE.0..LAT_RANGE.1), rng.gen_range(LON_RANGE.0..LON_RANGE.1)))
        .collect();
    let bumps: Vec<Bump> = (0..spec.bumps)
        .map(|_| Bump {
            center: (rng.gen_range(LAT_RANGE.0..LAT_RANGE.1), rng.gen_range(LON_RANGE.0..LON_RANGE.1)),
            radius: rng.gen_range(5.0..15.0),
            amplitude: rng.gen_range(1.0..10.0),
            phase: rng.gen_range(0.0..TAU),
        })
        .collect();
    let clean = TvSignal::from_fn(spec.n_nodes, spec.n_steps, |i, t| {
        let (lat, lon) = coords[i];
        bumps
            .iter()
            .map(|b| {
                let d2 = (lat - b.center.0).powi(2) + (lon - b.center.1).powi(2);
                let envelope = 1.0 + 0.5 * (b.phase + OMEGA * t as f64).sin();
                b.amplitude * envelope * (-d2 / (2.0 * b.radius * b.radius)).exp()
            })
            .sum()
    });
    let values = clean.as_slice();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    let scale = spec.noise_fraction * spread;
    let noisy: Vec<f64> = values
        .iter()
        .map(|&v| v + scale * rng.sample::<f64, _>(StandardNormal))
        .collect();

    Ok(Dataset {
        nodes: NodeTable::unlabeled(coords)?,
        signal: TvSignal::from_vec(spec.n_nodes, spec.n_steps, noisy)?,
        time_labels: (0..spec.n_steps).map(|t| format!("t{t}")).collect(),
        provenance: Provenance {
            source: format!(
                "synthetic(n_nodes={}, n_steps={}, seed={}, bumps={}, noise_fraction={})",
                spec.n_nodes, spec.n_steps, spec.seed, spec.bumps, spec.noise_fraction
            ),
            rows_read: spec.n_nodes,
            ..Provenance::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let spec = SyntheticSpec::default();
        let a = synthetic_smooth(&spec).unwrap();
        let b = synthetic_smooth(&spec).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.signal.shape(), (200, 30));
        assert!(a.nodes.coords().iter().all(|&(lat, lon)| (25.0..50.0).contains(&lat) && (-125.0..-65.0).contains(&lon)));
    }

    #[test]
    fn noise_free_field_is_nonnegative() {
        let spec = SyntheticSpec { noise_fraction: 0.0, n_nodes: 20, n_steps: 5, ..Default::default() };
        let d = synthetic_smooth(&spec).unwrap();
        assert!(d.signal.as_slice().iter().all(|&v| v >= 0.0));
    }
}
