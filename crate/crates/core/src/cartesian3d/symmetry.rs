//! Spherical averages on the cube.
//!
//! The field is first translated spectrally so that the requested center
//! sits on the origin node. Nodes are then grouped by their exact integer
//! squared distance i² + j² + k² from that node. Every node of a group lies
//! on the same sphere, so a sampled radial field is its own average up to
//! roundoff, and odd angular components average to zero within each group.

use std::collections::HashMap;

use super::Field3D;
use crate::solvers::Translatable;
use crate::space::FieldSpace;

/// The spherical average about `center`, returned in the recentered frame:
/// node (n/2, n/2, n/2) corresponds to `center`.
pub fn spherical_average(u: &Field3D, center: [f64; 3]) -> (Field3D, Field3D) {
    let v = u.translated([-center[0], -center[1], -center[2]]);
    let g = *v.grid();
    let n = g.n() as i64;
    let half = n / 2;
    let key = |idx: usize| {
        let i = idx as i64 / (n * n) - half;
        let j = (idx as i64 / n) % n - half;
        let k = idx as i64 % n - half;
        i * i + j * j + k * k
    };
    let mut shells: HashMap<i64, (f64, usize)> = HashMap::new();
    for (idx, val) in v.values().iter().enumerate() {
        let e = shells.entry(key(idx)).or_insert((0.0, 0));
        e.0 += val;
        e.1 += 1;
    }
    let mut avg = v.clone();
    for (idx, a) in avg.values_mut().iter_mut().enumerate() {
        let (s, c) = shells[&key(idx)];
        *a = s / c as f64;
    }
    (v, avg)
}

/// ‖u − A_center u‖ / ‖u‖.
pub fn symmetry_defect(u: &Field3D, center: [f64; 3]) -> f64 {
    let (v, avg) = spherical_average(u, center);
    let norm = v.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    v.axpy(-1.0, &avg).l2_norm() / norm
}
