use formation_core::{CommGraph, SymMatrix};

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

// Determinant by cofactor expansion; only used on tiny matrices.
fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|col| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| *v).collect())
                .collect();
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][col] * det(&minor)
        })
        .sum()
}

fn component_labels(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut label: Vec<usize> = (0..n).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &(a, b) in edges {
            let m = label[a].min(label[b]);
            if label[a] != m || label[b] != m {
                label[a] = m;
                label[b] = m;
                changed = true;
            }
        }
    }
    label
}

fn shifted(h: &SymMatrix, lambda: f64) -> Vec<Vec<f64>> {
    (0..h.dim())
        .map(|i| (0..h.dim()).map(|j| h.get(i, j) - if i == j { lambda } else { 0.0 }).collect())
        .collect()
}

#[test]
fn every_small_graph_classified_correctly() {
    for n in 1..=4 {
        let pairs = all_pairs(n);
        for edge_mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(k, _)| edge_mask & (1 << k) != 0)
                .map(|(_, e)| *e)
                .collect();
            for link_mask in 0u32..(1 << n) {
                let links: Vec<bool> = (0..n).map(|i| link_mask & (1 << i) != 0).collect();
                let g = CommGraph::new(n, &edges, &links).unwrap();
                let report = g.validate_assumption3();
                let labels = component_labels(n, &edges);
                let connected = labels.iter().all(|&l| l == 0);
                assert_eq!(g.is_connected(), connected);
                assert_eq!(report.passes(), connected && link_mask != 0, "n={n} edges={edges:?} links={links:?}");
                // H is positive definite exactly when every component reaches the leader.
                let every_component_pinned = (0..n).all(|root| {
                    labels[root] != root || (0..n).any(|i| labels[i] == root && links[i])
                });
                assert_eq!(report.lambda_min_h > 1e-10, every_component_pinned, "n={n} edges={edges:?} links={links:?}");
            }
        }
    }
}

#[test]
fn laplacian_rows_sum_to_zero_and_are_symmetric() {
    for n in 2..=5 {
        let pairs = all_pairs(n);
        let edges: Vec<_> = pairs.iter().copied().step_by(2).collect();
        let g = CommGraph::new(n, &edges, &vec![false; n]).unwrap();
        let l = g.laplacian();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| l.get(i, j)).sum();
            assert_eq!(row_sum, 0.0);
            assert_eq!(l.get(i, i), g.degree(i) as f64);
            for j in 0..n {
                assert_eq!(l.get(i, j), l.get(j, i));
            }
        }
    }
}

#[test]
fn ring_of_four_spectrum() {
    let g = CommGraph::ring(4, &[false; 4]).unwrap();
    let eig = g.laplacian().eigenvalues();
    for (got, want) in eig.iter().zip([0.0, 2.0, 2.0, 4.0]) {
        assert!((got - want).abs() < 1e-12, "{eig:?}");
    }
}

#[test]
fn pinned_ring_smallest_eigenvalue_matches_characteristic_root() {
    let g = CommGraph::ring(4, &[true, false, false, false]).unwrap();
    let h = g.h_matrix();
    let lmin = h.min_eigenvalue();
    // Bisection on det(H − λI), bracketing the smallest root from below.
    let (mut lo, mut hi) = (0.0, 0.5);
    assert!(det(&shifted(&h, lo)) * det(&shifted(&h, hi)) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if det(&shifted(&h, lo)) * det(&shifted(&h, mid)) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!((lmin - lo).abs() < 1e-12);
    assert!((lmin - 0.186393497).abs() < 1e-9);
}

#[test]
fn h_adds_leader_links_on_the_diagonal() {
    let g = CommGraph::new(3, &[(0, 1), (1, 2)], &[false, true, false]).unwrap();
    let l = g.laplacian();
    let h = g.h_matrix();
    for i in 0..3 {
        for j in 0..3 {
            let extra = if i == j && i == 1 { 1.0 } else { 0.0 };
            assert_eq!(h.get(i, j), l.get(i, j) + extra);
        }
    }
}

#[test]
fn malformed_graphs_are_rejected() {
    assert!(CommGraph::new(0, &[], &[]).is_err());
    assert!(CommGraph::new(2, &[(0, 0)], &[true, false]).is_err());
    assert!(CommGraph::new(2, &[(0, 2)], &[true, false]).is_err());
    assert!(CommGraph::new(2, &[(0, 1)], &[true]).is_err());
}
