use gossipcalc_core::conductance::{
    conductance_complete_closed_form, conductance_exact, cut_ratio, spectral_gap,
};
use gossipcalc_core::graph::{
    build_complete, build_grid, build_path, build_random_regular, build_ring, max_degree_matrix,
    Graph,
};

fn desk_scale_family() -> Vec<(String, Graph)> {
    let mut out = Vec::new();
    for n in 2..=16 {
        out.push((format!("complete-{n}"), build_complete(n).unwrap()));
        out.push((format!("path-{n}"), build_path(n).unwrap()));
        if n >= 3 {
            out.push((format!("ring-{n}"), build_ring(n).unwrap()));
        }
    }
    for (d, c) in [(2, 2), (2, 3), (2, 4), (3, 2), (4, 2), (1, 16)] {
        out.push((format!("grid-{d}x{c}"), build_grid(d, c).unwrap()));
    }
    for seed in 0..4 {
        out.push((format!("regular-16-3-{seed}"), build_random_regular(16, 3, seed).unwrap()));
        out.push((format!("regular-12-4-{seed}"), build_random_regular(12, 4, seed).unwrap()));
    }
    out
}

#[test]
fn conductance_in_unit_interval_and_self_consistent() {
    for (name, g) in desk_scale_family() {
        let p = max_degree_matrix(&g);
        let r = conductance_exact(&p).unwrap();
        assert!(r.value > 0.0 && r.value <= 1.0, "{name}: {}", r.value);
        assert!(!r.argmin_set.is_empty() && r.argmin_set.len() <= g.n() / 2, "{name}");
        assert_eq!(cut_ratio(&p, &r.argmin_set), r.value, "{name}");
    }
}

#[test]
fn complete_graph_matches_closed_form() {
    for n in 2..=12 {
        let p = max_degree_matrix(&build_complete(n).unwrap());
        let exact = conductance_exact(&p).unwrap().value;
        let closed = conductance_complete_closed_form(n);
        assert!((exact - closed).abs() < 1e-12, "n={n}: {exact} vs {closed}");
    }
}

#[test]
fn cheeger_bracket() {
    for (name, g) in desk_scale_family() {
        let p = max_degree_matrix(&g);
        let phi = conductance_exact(&p).unwrap().value;
        let gap = spectral_gap(&p).unwrap();
        assert!(gap >= phi * phi / 2.0 - 1e-9, "{name}: gap {gap} phi {phi}");
        assert!(gap <= 2.0 * phi + 1e-9, "{name}: gap {gap} phi {phi}");
    }
}

#[test]
fn adding_edges_at_fixed_max_degree_never_lowers_conductance() {
    // Close paths into rings, and fill grid boundary rows with wrap-around
    // edges; the maximum degree stays put in every case.
    for n in 4..=14 {
        let path = build_path(n).unwrap();
        let ring = build_ring(n).unwrap();
        assert_eq!(path.max_degree(), ring.max_degree());
        let before = conductance_exact(&max_degree_matrix(&path)).unwrap().value;
        let after = conductance_exact(&max_degree_matrix(&ring)).unwrap().value;
        assert!(after >= before, "n={n}");
    }
    let grid = build_grid(2, 4).unwrap();
    let mut edges = grid.edges().to_vec();
    let mut last = conductance_exact(&max_degree_matrix(&grid)).unwrap().value;
    for row in 0..4 {
        edges.push((4 * row, 4 * row + 3));
        let g = Graph::new(16, edges.clone()).unwrap();
        assert_eq!(g.max_degree(), 4);
        let phi = conductance_exact(&max_degree_matrix(&g)).unwrap().value;
        assert!(phi >= last);
        last = phi;
    }
}

#[test]
fn random_regular_conductance_positive() {
    let g = build_random_regular(64, 6, 3).unwrap();
    let p = max_degree_matrix(&g);
    // n = 64 is beyond enumeration; the spectral gap's Cheeger upper bound
    // Φ >= gap / 2 certifies positivity.
    let gap = spectral_gap(&p).unwrap();
    assert!(gap > 0.0);
    let small = build_random_regular(16, 6, 3).unwrap();
    assert!(conductance_exact(&max_degree_matrix(&small)).unwrap().value > 0.0);
}
