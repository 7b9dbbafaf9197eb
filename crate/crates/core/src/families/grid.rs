//! Uniform periodic grid on the flat unit torus [0,1)².

use crate::sparse::CsrMatrix;

use super::{BaseGeometry, Discretization};

/// Node index of grid point (ix, iy); x = ix·h, y = iy·h.
#[inline]
pub fn node(n: usize, ix: usize, iy: usize) -> usize {
    iy * n + ix
}

/// N×N periodic grid with the 5-point stiffness and lumped mass h².
pub fn flat_torus(n: usize) -> BaseGeometry {
    let h = 1.0 / n as f64;
    let count = n * n;
    let mut positions = Vec::with_capacity(count);
    let mut triplets = Vec::with_capacity(5 * count);
    for iy in 0..n {
        for ix in 0..n {
            positions.push([ix as f64 * h, iy as f64 * h, 0.0]);
            let i = node(n, ix, iy);
            let neighbors = [
                node(n, (ix + 1) % n, iy),
                node(n, (ix + n - 1) % n, iy),
                node(n, ix, (iy + 1) % n),
                node(n, ix, (iy + n - 1) % n),
            ];
            triplets.push((i, i, 4.0));
            for j in neighbors {
                triplets.push((i, j, -1.0));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(count, triplets);
    BaseGeometry::new(
        positions,
        stiffness,
        vec![h * h; count],
        vec![0.0; count],
        Discretization::PeriodicGrid { n, h },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_structure() {
        let g = flat_torus(8);
        assert_eq!(g.stiffness.n, 64);
        assert_eq!(g.stiffness.nnz(), 64 * 5);
        assert_eq!(g.stiffness.get(0, 7), -1.0);
        assert_eq!(g.stiffness.get(0, 56), -1.0);
        let total: f64 = g.mass.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
