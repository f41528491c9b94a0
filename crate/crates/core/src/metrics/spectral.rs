//! Laplacian spectrum by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::kuramoto::GraphSpec;

const MAX_SWEEPS: usize = 100;

/// `L = D − A` for a symmetric adjacency.
pub fn laplacian(graph: &GraphSpec) -> Result<Vec<Vec<f64>>> {
    if !graph.is_symmetric() {
        return Err(Error::invalid(
            "Laplacian spectrum requires a symmetric adjacency",
        ));
    }
    let n = graph.n;
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if graph.has_edge(i, j) {
                l[i][j] = -1.0;
                l[i][i] += 1.0;
            }
        }
    }
    Ok(l)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn laplacian_spectrum(graph: &GraphSpec) -> Result<Vec<f64>> {
    Ok(symmetric_eigenvalues(laplacian(graph)?))
}

/// Second-smallest Laplacian eigenvalue λ2.
pub fn algebraic_connectivity(graph: &GraphSpec) -> Result<f64> {
    if graph.n < 2 {
        return Err(Error::invalid(
            "algebraic connectivity needs at least 2 nodes",
        ));
    }
    let eig = laplacian_spectrum(graph)?;
    Ok(eig[1].max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kuramoto::{attach_avatar, make_complete_graph, make_ring_graph};
    use std::f64::consts::PI;

    #[test]
    fn complete_graph_spectrum() {
        let eig = laplacian_spectrum(&make_complete_graph(3).unwrap()).unwrap();
        assert!(eig[0].abs() < 1e-12);
        assert!((eig[1] - 3.0).abs() < 1e-12 && (eig[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ring_matches_circulant_closed_form() {
        for n in 3..10 {
            let eig = laplacian_spectrum(&make_ring_graph(n).unwrap()).unwrap();
            let mut closed: Vec<f64> = (0..n)
                .map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos())
                .collect();
            closed.sort_by(f64::total_cmp);
            for (a, b) in eig.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
        let l2 = algebraic_connectivity(&make_ring_graph(5).unwrap()).unwrap();
        assert!((l2 - 1.381966011250105).abs() < 1e-9);
    }

    #[test]
    fn avatar_to_all_raises_connectivity() {
        let ring = make_ring_graph(7).unwrap();
        let with = attach_avatar(&ring, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        assert!(algebraic_connectivity(&with).unwrap() > algebraic_connectivity(&ring).unwrap());
    }

    #[test]
    fn asymmetric_rejected() {
        let g = GraphSpec::from_adjacency(vec![vec![0, 1], vec![0, 0]]).unwrap();
        assert!(algebraic_connectivity(&g).is_err());
    }
}
