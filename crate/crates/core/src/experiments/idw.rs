//! Inverse-distance-weighted interpolation from the nearest sampled nodes.
//! A simple spatial baseline; each time step is interpolated independently.

use crate::error::{invalid, Result};
use crate::geo_graph::{Metric, NodeTable};
use crate::scalar::Real;
use crate::tv_signal::{SamplingMask, TvSignal};

/// Sampled entries keep their observed value. Each unsampled entry averages
/// the `k` nearest nodes sampled at the same step with weights `1/d^power`;
/// a coincident sampled node is copied. A step without samples stays zero.
pub fn idw_baseline<T: Real>(
    nodes: &NodeTable<T>,
    metric: Metric,
    mask: &SamplingMask<T>,
    k: usize,
    power: T,
) -> Result<TvSignal<T>> {
    if k == 0 {
        return invalid("idw needs k >= 1");
    }
    let n = nodes.len();
    if mask.n_nodes() != n {
        return invalid(format!("mask has {} nodes, table has {n}", mask.n_nodes()));
    }
    let coords = nodes.coords();
    let mut out = mask.observed().clone();
    let mut candidates: Vec<(T, usize)> = Vec::with_capacity(n);
    for t in 0..mask.n_steps() {
        let sampled: Vec<usize> = (0..n).filter(|&i| mask.is_sampled(i, t)).collect();
        if sampled.is_empty() {
            continue;
        }
        for i in (0..n).filter(|&i| !mask.is_sampled(i, t)) {
            candidates.clear();
            candidates.extend(sampled.iter().map(|&j| (metric.distance(coords[i], coords[j]), j)));
            let take = k.min(candidates.len());
            let by_distance = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1));
            if take < candidates.len() {
                candidates.select_nth_unstable_by(take - 1, by_distance);
            }
            let nearest = &mut candidates[..take];
            nearest.sort_by(by_distance);
            let value = if nearest[0].0 == T::zero() {
                mask.observed().get(nearest[0].1, t)
            } else {
                let (num, den) = nearest.iter().fold((T::zero(), T::zero()), |(num, den), &(d, j)| {
                    let w = d.powf(-power);
                    (num + w * mask.observed().get(j, t), den + w)
                });
                num / den
            };
            out.set(i, t, value);
        }
    }
    Ok(out)
}
