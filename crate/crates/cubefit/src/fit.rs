//! Candidate polynomial enumeration, weighted least-squares pseudo-inverse
//! and the stabilisation procedure (§2.1.2–§2.1.4), plus the Appendix-A
//! von Neumann amplification modulus.

use crate::mesh::{GeometryKind, Mesh, Vec3};
use crate::stencil::Stencil;
use nalgebra::DMatrix;

/// Exponent pair/triple; k is unused (0) in two dimensions.
pub type Monomial = (u8, u8, u8);

fn monomials(dim: usize) -> Vec<Monomial> {
    let mut out = Vec::new();
    let kmax = if dim == 3 { 2 } else { 0 };
    for i in 0..=3u8 {
        for j in 0..=2u8 {
            for k in 0..=kmax {
                if i + j + k <= 3 {
                    out.push((i, j, k));
                }
            }
        }
    }
    out
}

/// All dense subsets of the full polynomial with more than one term:
/// 26 in two dimensions, 842 in three (§2.1.3, §2.1.5).
pub fn dense_subsets(dim: usize) -> Vec<Vec<Monomial>> {
    let mons = monomials(dim);
    let n = mons.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let set: Vec<Monomial> = (0..n).filter(|&b| mask >> b & 1 == 1).map(|b| mons[b]).collect();
        let has = |m: Monomial| set.contains(&m);
        let dense = set.iter().all(|&(i, j, k)| {
            (i == 0 || has((i - 1, j, k)))
                && (j == 0 || has((i, j - 1, k)))
                && (k == 0 || has((i, j, k - 1)))
        });
        if dense {
            out.push(set);
        }
    }
    out
}

/// Per-point local coordinates (§2.1.2): origin at the face centre, x normal
/// to the face directed downwind, y completing the in-plane frame. On shells
/// the points are first projected onto the tangent plane at the face centre.
/// Coordinates are non-dimensionalised by the upwind–downwind distance.
pub fn local_coordinates(stencil: &Stencil, mesh: &Mesh) -> Vec<(f64, f64)> {
    let fc = mesh.face_centre[stencil.face];
    let n = match mesh.geometry_kind {
        GeometryKind::Planar => Vec3::y(),
        GeometryKind::SphericalShell { .. } => fc.normalize(),
    };
    let s = mesh.face_area[stencil.face] * mesh.outward_sign(stencil.upwind_cell, stencil.face);
    let x_hat = (s - s.dot(&n) * n).normalize();
    let y_hat = n.cross(&x_hat);
    let raw: Vec<(f64, f64)> = (0..stencil.points.len())
        .map(|k| {
            let d = stencil.position(mesh, k) - fc;
            let p = d - d.dot(&n) * n;
            (p.dot(&x_hat), p.dot(&y_hat))
        })
        .collect();
    let (ux, uy) = raw[0];
    let (dx, dy) = raw[1];
    let scale = ((dx - ux).powi(2) + (dy - uy).powi(2)).sqrt();
    raw.iter().map(|&(x, y)| (x / scale, y / scale)).collect()
}

/// B[i][k] = monomial_k(x_i, y_i) (Eq. 8–9).
pub fn stencil_matrix(points: &[(f64, f64)], poly: &[Monomial]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), poly.len(), |r, c| {
        let (i, j, _) = poly[c];
        points[r].0.powi(i as i32) * points[r].1.powi(j as i32)
    })
}

/// Weights w = (first row of (diag(m) B)^+) * m (Eqs. 10–12); None if the
/// weighted matrix cannot be pseudo-inverted.
pub fn pseudo_inverse_first_row(b: &DMatrix<f64>, m: &[f64]) -> Option<Vec<f64>> {
    let mut bt = b.clone();
    for (r, &mr) in m.iter().enumerate() {
        bt.row_mut(r).scale_mut(mr);
    }
    let svd = bt.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let pinv = svd.pseudo_inverse(1e-9 * smax).ok()?;
    Some((0..m.len()).map(|i| pinv[(0, i)] * m[i]).collect())
}

/// The three stability conditions of Eq. 13 on (w_u, w_d, peripherals).
pub fn check_stability_conditions(w: &[f64]) -> [bool; 3] {
    let (wu, wd) = (w[0], w[1]);
    let max_p = w[2..].iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    [
        (0.5..=1.0).contains(&wu),
        (0.0..=0.5).contains(&wd),
        wu - wd >= max_p,
    ]
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitWeights {
    pub weights: Vec<f64>,
    /// Chosen polynomial (empty when falling back to pure upwind).
    pub poly: Vec<Monomial>,
    /// Final downwind multiplier.
    pub m_d: f64,
    pub fallback: bool,
}

/// One attempted fit in the stabilisation walk (for diagnostics and tests).
#[derive(Debug, Clone)]
pub struct FitAttempt {
    pub n_terms: usize,
    pub m_d: f64,
    pub w_u: f64,
    pub w_d: f64,
    pub accepted: bool,
}

const M_UP: f64 = 1024.0; // 2^10

/// Stabilisation procedure of §2.1.4. Candidates are preferred by term
/// count, then by larger minimum singular value (computed lazily per term
/// count), then lexicographically; for each candidate m_d is halved from
/// 2^10 down to 1 until the Eq. 13 conditions pass.
pub fn stabilise(points: &[(f64, f64)]) -> FitWeights {
    stabilise_traced(points).0
}

pub fn stabilise_traced(points: &[(f64, f64)]) -> (FitWeights, Vec<FitAttempt>) {
    let mut trace = Vec::new();
    let n_pts = points.len();
    let all = dense_subsets(2);
    let mut by_size: Vec<Vec<&Vec<Monomial>>> = vec![Vec::new(); 10];
    for cand in &all {
        by_size[cand.len()].push(cand);
    }
    for size in (2..=9usize).rev() {
        if size > n_pts {
            continue;
        }
        // rank-filter and order this size group by sigma_min, ties broken
        // lexicographically by exponent tuples
        let mut group: Vec<(f64, &Vec<Monomial>)> = Vec::new();
        for cand in &by_size[size] {
            let b = stencil_matrix(points, cand);
            let smin = b.svd(false, false).singular_values.min();
            if smin > 1e-9 {
                group.push((smin, cand));
            }
        }
        group.sort_by(|(sa, ca), (sb, cb)| {
            let rel = (sa - sb).abs() / sa.max(*sb);
            if rel <= 1e-12 {
                ca.cmp(cb)
            } else {
                sb.partial_cmp(sa).unwrap()
            }
        });
        for (_, cand) in group {
            let b = stencil_matrix(points, cand);
            let mut m_d = M_UP;
            while m_d >= 1.0 {
                let mut m = vec![1.0; n_pts];
                m[0] = M_UP;
                m[1] = m_d;
                if let Some(w) = pseudo_inverse_first_row(&b, &m) {
                    let ok = check_stability_conditions(&w).iter().all(|&c| c);
                    trace.push(FitAttempt {
                        n_terms: size,
                        m_d,
                        w_u: w[0],
                        w_d: w[1],
                        accepted: ok,
                    });
                    if ok {
                        // enforce exact consistency: the pinv leaves
                        // sum(w) - 1 at the SVD-cutoff level (~1e-11),
                        // which would otherwise accumulate as constancy
                        // drift over thousands of steps
                        let sum: f64 = w.iter().sum();
                        let w: Vec<f64> = w.iter().map(|wi| wi / sum).collect();
                        return (
                            FitWeights {
                                weights: w,
                                poly: cand.clone(),
                                m_d,
                                fallback: false,
                            },
                            trace,
                        );
                    }
                }
                m_d /= 2.0;
            }
        }
    }
    // last resort: pure upwind
    let mut w = vec![0.0; n_pts];
    w[0] = 1.0;
    (
        FitWeights {
            weights: w,
            poly: Vec::new(),
            m_d: 0.0,
            fallback: true,
        },
        trace,
    )
}

/// Fit for one stencil on the mesh.
pub fn fit_stencil(stencil: &Stencil, mesh: &Mesh) -> FitWeights {
    stabilise(&local_coordinates(stencil, mesh))
}

/// Appendix-A amplification modulus for a 1-D uniform mesh with the same
/// face weights everywhere: |A| = exp(-c * sum_o w_o (cos(o k dx) -
/// cos((o-1) k dx))), offsets o relative to the upwind cell (downwind = +1).
pub fn amplification_modulus(offset_weights: &[(i64, f64)], c: f64, kdx: f64) -> f64 {
    let re: f64 = offset_weights
        .iter()
        .map(|&(o, w)| w * ((o as f64 * kdx).cos() - ((o - 1) as f64 * kdx).cos()))
        .sum();
    (-c * re).exp()
}
