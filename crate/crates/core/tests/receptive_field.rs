use gcn_matgrad_core::graph::ddi_fixture;
use gcn_matgrad_core::matgrad::link_output_sensitivity;
use gcn_matgrad_core::oracle::{fd_output_grad, FdVariable, FD_STEP};
use gcn_matgrad_core::presets;
use gcn_matgrad_core::train::run_node_experiment;
use gcn_matgrad_core::{forward, Graph, Matrix};

/// Nodes more than `d` hops from both endpoints, read off the zero pattern
/// of `Â^d` rather than from a graph search.
fn outside_receptive_field(graph: &Graph, d: usize, i: usize, j: usize) -> Vec<usize> {
    let a_hat = graph.normalized_adjacency();
    let mut power = Matrix::identity(graph.node_count());
    for _ in 0..d {
        power = power.matmul(&a_hat).unwrap();
    }
    (0..graph.node_count())
        .filter(|&k| power.get(i, k) == 0.0 && power.get(j, k) == 0.0)
        .collect()
}

#[test]
fn far_rows_vanish_exactly() {
    let g = ddi_fixture();
    let p = presets::ddi();
    let far = outside_receptive_field(&g, 2, 2, 7);
    assert_eq!(far, vec![0, 1, 8, 9]);
    for seed in 0..5 {
        let model = p.config.model.init(seed).unwrap();
        let cache = forward(&model, &g).unwrap();
        let map = link_output_sensitivity(&model, &cache, 2, 7).unwrap();
        let fd = fd_output_grad(&model, &cache.propagation, g.features(), (2, 7), FdVariable::Features, FD_STEP)
            .unwrap();
        for k in 0..g.node_count() {
            let row = map.value.row(k);
            if far.contains(&k) {
                assert!(row.as_slice().iter().all(|&v| v == 0.0), "row {k}");
                assert!(fd.value.row(k).max_abs() <= 1e-10);
            }
        }
        let near_mass: f64 = (0..g.node_count()).filter(|k| !far.contains(k)).map(|k| map.value.row(k).abs_sum()).sum();
        assert!(near_mass > 0.0);
    }
}

#[test]
fn hop_distances_agree_with_the_power_pattern() {
    let g = ddi_fixture();
    let d2 = g.hop_distances(2);
    let d7 = g.hop_distances(7);
    let by_hops: Vec<usize> = (0..g.node_count())
        .filter(|&k| d2[k].is_none_or(|d| d > 2) && d7[k].is_none_or(|d| d > 2))
        .collect();
    assert_eq!(by_hops, outside_receptive_field(&g, 2, 2, 7));
}

/// Least-squares slope of `y` against `0, 1, 2, …`.
fn slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &v) in y.iter().enumerate() {
        let dx = k as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

#[test]
fn karate_sensitivity_trends_down() {
    let p = presets::karate();
    let log = run_node_experiment(&p.config, &p.dataset.graph()).unwrap();
    let series = log.sensitivity_series();
    assert_eq!(series.len(), p.config.iterations);
    assert!(slope(&series) < 0.0);
}
