//! Symmetric 3x3 matrices and their eigendecomposition.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic
//! cubic. The eigenvector of the best separated extreme eigenvalue is taken
//! from the largest cross product of rows of `A - lambda I`; the remaining two
//! are found with an exact 2x2 rotation in its orthogonal complement. A single
//! cyclic Jacobi sweep on `V^T A V` then polishes the basis.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

/// The six unique entries of a real symmetric 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Covariance matrices are plain symmetric matrices.
pub type CovarianceMatrix = SymMat3;

impl SymMat3 {
    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Self { xx, yy, zz, xy, xz, yz }
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self::new(m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2])
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.to_rows()[i])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn determinant(&self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz)
            - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.xx * self.xx
            + self.yy * self.yy
            + self.zz * self.zz
            + 2.0 * (self.xy * self.xy + self.xz * self.xz + self.yz * self.yz))
            .sqrt()
    }

    pub fn sub(&self, o: &SymMat3) -> SymMat3 {
        SymMat3::new(
            self.xx - o.xx,
            self.yy - o.yy,
            self.zz - o.zz,
            self.xy - o.xy,
            self.xz - o.xz,
            self.yz - o.yz,
        )
    }

    pub fn scale(&self, s: f64) -> SymMat3 {
        SymMat3::new(
            self.xx * s,
            self.yy * s,
            self.zz * s,
            self.xy * s,
            self.xz * s,
            self.yz * s,
        )
    }

    fn shifted(&self, lambda: f64) -> SymMat3 {
        SymMat3::new(
            self.xx - lambda,
            self.yy - lambda,
            self.zz - lambda,
            self.xy,
            self.xz,
            self.yz,
        )
    }

    pub fn is_finite(&self) -> bool {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Eigenvalues sorted descending with their unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

/// Eigenvalues of a symmetric matrix from the characteristic cubic, descending.
pub fn sym3_eigenvalues(a: &SymMat3) -> [f64; 3] {
    let p1 = a.xy * a.xy + a.xz * a.xz + a.yz * a.yz;
    let q = a.trace() / 3.0;
    let (dx, dy, dz) = (a.xx - q, a.yy - q, a.zz - q);
    let p2 = dx * dx + dy * dy + dz * dz + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 || !p.is_finite() {
        return [q, q, q];
    }
    let b = a.shifted(q).scale(1.0 / p);
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l0 = q + 2.0 * p * phi.cos();
    let l2 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let l1 = 3.0 * q - l0 - l2;
    let mut v = [l0, l1, l2];
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Null vector of `A - lambda I` from the best conditioned row cross product.
fn eigenvector_by_cross(a: &SymMat3, lambda: f64) -> Option<Vec3> {
    let m = a.shifted(lambda);
    let (r0, r1, r2) = (m.row(0), m.row(1), m.row(2));
    let candidates = [r0.cross(r1), r0.cross(r2), r1.cross(r2)];
    let best = candidates
        .iter()
        .copied()
        .max_by(|u, v| u.norm_squared().total_cmp(&v.norm_squared()))?;
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    if best.norm() <= 1e-30 * scale * scale {
        return None;
    }
    best.try_normalize()
}

/// Exact diagonalization of the restriction of `a` to the plane spanned by the
/// orthonormal pair `(u, w)`. Returns the two eigenvectors, larger first.
fn rotate_in_plane(a: &SymMat3, u: Vec3, w: Vec3) -> (Vec3, Vec3) {
    let auu = u.dot(a.mul_vec(u));
    let aww = w.dot(a.mul_vec(w));
    let auw = u.dot(a.mul_vec(w));
    let theta = 0.5 * (2.0 * auw).atan2(auu - aww);
    let (s, c) = theta.sin_cos();
    let e0 = u * c + w * s;
    let e1 = w * c - u * s;
    if e0.dot(a.mul_vec(e0)) >= e1.dot(a.mul_vec(e1)) {
        (e0, e1)
    } else {
        (e1, e0)
    }
}

/// One cyclic Jacobi sweep over `V^T A V`, updating the columns of `v`.
fn jacobi_sweep(a: &SymMat3, v: &mut [Vec3; 3]) {
    for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
        let app = v[p].dot(a.mul_vec(v[p]));
        let aqq = v[q].dot(a.mul_vec(v[q]));
        let apq = v[p].dot(a.mul_vec(v[q]));
        if apq.abs() <= f64::EPSILON * (app.abs() + aqq.abs()) * 1e-3 || apq == 0.0 {
            continue;
        }
        let theta = 0.5 * (2.0 * apq).atan2(app - aqq);
        let (s, c) = theta.sin_cos();
        let (vp, vq) = (v[p], v[q]);
        v[p] = vp * c + vq * s;
        v[q] = vq * c - vp * s;
    }
}

fn canonical_sign(v: Vec3) -> Vec3 {
    let a = v.abs();
    let lead = if a.x >= a.y && a.x >= a.z {
        v.x
    } else if a.y >= a.z {
        v.y
    } else {
        v.z
    };
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Full eigendecomposition. Eigenvalues are descending; each eigenvector has
/// its largest-magnitude component positive. Repeated eigenvalues yield some
/// orthonormal basis of the eigenspace.
pub fn eig_sym3(a: &SymMat3) -> SymEigen {
    let lambda = sym3_eigenvalues(a);
    let spread = lambda[0] - lambda[2];
    let scale = lambda[0].abs().max(lambda[2].abs());

    let mut basis: [Vec3; 3] = if spread <= 1e-14 * scale || spread == 0.0 {
        [Vec3::X, Vec3::Y, Vec3::Z]
    } else {
        let gap_top = lambda[0] - lambda[1];
        let gap_bottom = lambda[1] - lambda[2];
        if gap_bottom >= gap_top {
            let v2 = eigenvector_by_cross(a, lambda[2]).unwrap_or(Vec3::Z);
            let u = v2.any_orthonormal();
            let w = v2.cross(u);
            let (v0, v1) = rotate_in_plane(a, u, w);
            [v0, v1, v2]
        } else {
            let v0 = eigenvector_by_cross(a, lambda[0]).unwrap_or(Vec3::X);
            let u = v0.any_orthonormal();
            let w = v0.cross(u);
            let (v1, v2) = rotate_in_plane(a, u, w);
            [v0, v1, v2]
        }
    };

    jacobi_sweep(a, &mut basis);

    let mut pairs: Vec<(f64, Vec3)> = basis
        .iter()
        .map(|&v| {
            let v = v.normalize();
            (v.dot(a.mul_vec(v)), v)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));

    // Re-orthonormalize: keep the normal direction (smallest) exact, then the
    // largest, and derive the middle one.
    let v2 = pairs[2].1.normalize();
    let v0 = (pairs[0].1 - v2 * pairs[0].1.dot(v2)).normalize();
    let v1 = canonical_sign(v2.cross(v0));
    let v0 = canonical_sign(v0);
    let v2 = canonical_sign(v2);

    SymEigen {
        values: [pairs[0].0, pairs[1].0, pairs[2].0],
        vectors: [v0, v1, v2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &SymMat3, e: &SymEigen) -> f64 {
        (0..3)
            .map(|i| (a.mul_vec(e.vectors[i]) - e.vectors[i] * e.values[i]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = eig_sym3(&SymMat3::identity());
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = e.vectors[i].dot(e.vectors[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_gives_coordinate_axes() {
        let e = eig_sym3(&SymMat3::diagonal(1.0, 3.0, 2.0));
        assert_eq!(e.values, [3.0, 2.0, 1.0]);
        assert!((e.vectors[0] - Vec3::Y).norm() < 1e-12);
        assert!((e.vectors[1] - Vec3::Z).norm() < 1e-12);
        assert!((e.vectors[2] - Vec3::X).norm() < 1e-12);
    }

    #[test]
    fn repeated_eigenvalue_gives_orthonormal_basis() {
        let a = SymMat3::diagonal(2.0, 2.0, 0.0);
        let e = eig_sym3(&a);
        assert!(residual(&a, &e) < 1e-12);
        assert!((e.vectors[2] - Vec3::Z).norm() < 1e-12);
        assert!(e.vectors[0].dot(e.vectors[1]).abs() < 1e-12);
    }

    #[test]
    fn sign_convention_is_positive_leading_component() {
        let a = SymMat3::new(2.0, 1.0, 0.5, -0.3, 0.2, 0.1);
        let e = eig_sym3(&a);
        for v in e.vectors {
            let m = [v.x, v.y, v.z]
                .into_iter()
                .max_by(|p, q| p.abs().total_cmp(&q.abs()))
                .unwrap();
            assert!(m > 0.0);
        }
    }

    #[test]
    fn zero_matrix() {
        let e = eig_sym3(&SymMat3::default());
        assert_eq!(e.values, [0.0, 0.0, 0.0]);
    }
}
