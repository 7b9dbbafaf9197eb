//! Icosphere discretization of the unit round sphere.
//!
//! Built by repeated 4-to-1 subdivision of the icosahedron with every new
//! vertex projected back onto the sphere. The stiffness is the cotangent
//! Laplacian, the mass is barycentric (a third of each incident triangle),
//! and the base scalar curvature is twice the angle defect per unit mass.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::sparse::CsrMatrix;

use super::{BaseGeometry, Discretization};

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: Vec3) -> Vec3 {
    let r = dot3(a, a).sqrt();
    [a[0] / r, a[1] / r, a[2] / r]
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let verts = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (verts, faces)
}

fn subdivide(verts: &mut Vec<Vec3>, faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (verts[a], verts[b]);
            verts.push(normalize([pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]]));
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces {
        let ab = midpoint(a, b, verts);
        let bc = midpoint(b, c, verts);
        let ca = midpoint(c, a, verts);
        out.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    out
}

/// Vertex and triangle lists of the icosphere at the given subdivision level.
pub fn mesh(subdivisions: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let (mut verts, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        faces = subdivide(&mut verts, &faces);
    }
    (verts, faces)
}

pub fn unit_sphere(subdivisions: usize) -> BaseGeometry {
    let (verts, faces) = mesh(subdivisions);
    let nv = verts.len();
    let mut mass = vec![0.0; nv];
    let mut angle_sum = vec![0.0; nv];
    let mut triplets = Vec::with_capacity(faces.len() * 9);
    for f in &faces {
        let p = [verts[f[0]], verts[f[1]], verts[f[2]]];
        let area = 0.5 * dot3(cross(sub(p[1], p[0]), sub(p[2], p[0])), cross(sub(p[1], p[0]), sub(p[2], p[0]))).sqrt();
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let e1 = sub(p[i], p[k]);
            let e2 = sub(p[j], p[k]);
            let cos = dot3(e1, e2);
            let sin = dot3(cross(e1, e2), cross(e1, e2)).sqrt();
            // edge (i, j) is opposite corner k
            let w = 0.5 * cos / sin;
            let (vi, vj) = (f[i], f[j]);
            triplets.push((vi, vj, -w));
            triplets.push((vj, vi, -w));
            triplets.push((vi, vi, w));
            triplets.push((vj, vj, w));
            angle_sum[f[k]] += sin.atan2(cos);
            mass[f[k]] += area / 3.0;
        }
    }
    let stiffness = CsrMatrix::from_triplets(nv, triplets);
    let r0 = (0..nv).map(|v| 2.0 * (2.0 * PI - angle_sum[v]) / mass[v]).collect();
    BaseGeometry::new(
        verts,
        stiffness,
        mass,
        r0,
        Discretization::Icosphere { subdivisions, triangles: faces },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_characteristic_is_two() {
        for level in 0..4 {
            let (v, f) = mesh(level);
            let e = f.len() * 3 / 2;
            assert_eq!(v.len() as i64 - e as i64 + f.len() as i64, 2);
            assert_eq!(v.len(), 10 * 4usize.pow(level as u32) + 2);
        }
    }

    #[test]
    fn vertices_on_unit_sphere_and_weights_positive() {
        let g = unit_sphere(3);
        for p in &g.positions {
            assert!((dot3(*p, *p) - 1.0).abs() < 1e-12);
        }
        // acute triangles: every cotangent weight positive
        assert!(g.edges.iter().all(|&(_, _, w)| w > 0.0));
    }

    #[test]
    fn total_angle_defect_is_four_pi() {
        let g = unit_sphere(2);
        let total: f64 = g.r0.iter().zip(&g.mass).map(|(r, m)| r * m).sum();
        assert!((total - 8.0 * PI).abs() < 1e-10);
    }
}
