//! Spherical-shell mesh generators: hexagonal-icosahedral (dual of a
//! subdivided icosahedron) and equidistant-gnomonic cubed sphere. Shells are
//! one cell deep between r1 = Re - 1000 m and r2 = Re + 1000 m.

use super::VertexDedup;
use crate::mesh::{BcKind, Face, GeometryKind, Mesh, Patch, Vec3};
use crate::Result;
use std::collections::HashMap;

pub const EARTH_RADIUS: f64 = 6.3712e6;
pub const SHELL_HALF_DEPTH: f64 = 1000.0;

/// Build the shell mesh from unit-sphere surface polygons (CCW viewed from
/// outside). Cell i extrudes polygon i radially between r1 and r2.
fn assemble_shell(unit_verts: &[Vec3], polys: &[Vec<usize>], re: f64) -> Result<Mesh> {
    let r1 = re - SHELL_HALF_DEPTH;
    let r2 = re + SHELL_HALF_DEPTH;
    let nv = unit_verts.len();
    let mut vertices = Vec::with_capacity(2 * nv);
    for v in unit_verts {
        vertices.push(r1 * v);
    }
    for v in unit_verts {
        vertices.push(r2 * v);
    }

    struct Edge {
        owner: usize,
        a: usize,
        b: usize,
        neighbour: Option<usize>,
    }
    let mut edges: HashMap<(usize, usize), Edge> = HashMap::new();
    for (c, poly) in polys.iter().enumerate() {
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            let key = (a.min(b), a.max(b));
            match edges.get_mut(&key) {
                None => {
                    edges.insert(key, Edge { owner: c, a, b, neighbour: None });
                }
                Some(e) => e.neighbour = Some(c),
            }
        }
    }
    let mut interior: Vec<Edge> = edges.into_values().collect();
    assert!(interior.iter().all(|e| e.neighbour.is_some()));
    interior.sort_by_key(|e| (e.owner, e.neighbour.unwrap()));

    let mut faces: Vec<Face> = interior
        .iter()
        .map(|e| Face {
            // radial quad in the owner's traversal direction
            verts: vec![e.a, e.b, e.b + nv, e.a + nv],
            owner: e.owner,
            neighbour: e.neighbour,
        })
        .collect();

    let inner_first = faces.len();
    for (c, poly) in polys.iter().enumerate() {
        let mut verts: Vec<usize> = poly.clone();
        verts.reverse(); // outward (inward normal) orientation fixed in build
        faces.push(Face { verts, owner: c, neighbour: None });
    }
    let outer_first = faces.len();
    for (c, poly) in polys.iter().enumerate() {
        faces.push(Face {
            verts: poly.iter().map(|&v| v + nv).collect(),
            owner: c,
            neighbour: None,
        });
    }
    let patches = vec![
        Patch {
            name: "inner".into(),
            first_face: inner_first,
            n_faces: polys.len(),
            bc: BcKind::NoNormalFlow,
        },
        Patch {
            name: "outer".into(),
            first_face: outer_first,
            n_faces: polys.len(),
            bc: BcKind::NoNormalFlow,
        },
    ];
    Mesh::build(
        vertices,
        faces,
        polys.len(),
        patches,
        GeometryKind::SphericalShell { r1, r2, re },
    )
}

/// Icosahedron subdivided `level` times; returns unit vertices and CCW
/// (outward) triangles.
fn icosphere(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut verts: Vec<Vec3> = raw
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    // enforce outward orientation
    for t in &mut tris {
        let c = verts[t[0]] + verts[t[1]] + verts[t[2]];
        let n = (verts[t[1]] - verts[t[0]]).cross(&(verts[t[2]] - verts[t[0]]));
        if n.dot(&c) < 0.0 {
            t.swap(1, 2);
        }
    }
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in &tris {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    verts.push((verts[a] + verts[b]).normalize());
                    verts.len() - 1
                });
            }
            next.push([t[0], mid[0], mid[2]]);
            next.push([t[1], mid[1], mid[0]]);
            next.push([t[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        tris = next;
    }
    (verts, tris)
}

/// Hexagonal-icosahedral shell: the dual of the subdivided icosahedron, with
/// 10*4^level + 2 cells of which exactly 12 are pentagons.
pub fn gen_hex_icosahedral(level: usize) -> Result<Mesh> {
    let (pverts, tris) = icosphere(level);
    // dual vertices: projected triangle centroids
    let dual_verts: Vec<Vec3> = tris
        .iter()
        .map(|t| (pverts[t[0]] + pverts[t[1]] + pverts[t[2]]).normalize())
        .collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); pverts.len()];
    for (ti, t) in tris.iter().enumerate() {
        for &v in t {
            incident[v].push(ti);
        }
    }
    // one dual cell per primal vertex, triangle centroids ordered CCW
    // around the outward normal
    let mut polys = Vec::with_capacity(pverts.len());
    for (v, tids) in incident.iter().enumerate() {
        let p = pverts[v];
        let e1 = (dual_verts[tids[0]] - p.dot(&dual_verts[tids[0]]) * p).normalize();
        let e2 = p.cross(&e1);
        let mut ordered: Vec<usize> = tids.clone();
        ordered.sort_by(|&i, &j| {
            let ang = |t: usize| {
                let d = dual_verts[t];
                d.dot(&e2).atan2(d.dot(&e1))
            };
            ang(i).partial_cmp(&ang(j)).unwrap()
        });
        polys.push(ordered);
    }
    assemble_shell(&dual_verts, &polys, EARTH_RADIUS)
}

/// Cubed-sphere shell: equidistant gnomonic projection, n x n cells per
/// panel, 6 n^2 cells total.
pub fn gen_cubed_sphere(n: usize) -> Result<Mesh> {
    assert!(n >= 1);
    // panel frames with e1 x e2 = normal, so panel polygons are CCW outward
    let axes = [
        (Vec3::x(), Vec3::y(), Vec3::z()),
        (-Vec3::x(), Vec3::z(), Vec3::y()),
        (Vec3::y(), Vec3::z(), Vec3::x()),
        (-Vec3::y(), Vec3::x(), Vec3::z()),
        (Vec3::z(), Vec3::x(), Vec3::y()),
        (-Vec3::z(), Vec3::y(), Vec3::x()),
    ];
    let mut dedup = VertexDedup::new(1e-9);
    let mut polys = Vec::with_capacity(6 * n * n);
    for (nrm, e1, e2) in axes {
        let angle = |i: usize| -std::f64::consts::FRAC_PI_4
            + i as f64 * std::f64::consts::FRAC_PI_2 / n as f64;
        let mut ids = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n {
                let p = (nrm + angle(i).tan() * e1 + angle(j).tan() * e2).normalize();
                ids[i][j] = dedup.insert(p);
            }
        }
        for i in 0..n {
            for j in 0..n {
                polys.push(vec![ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]]);
            }
        }
    }
    assemble_shell(&dedup.verts, &polys, EARTH_RADIUS)
}

/// Average equatorial spacing (degrees): 360 * mean great-circle distance
/// between adjacent cell centres / (2 pi Re).
pub fn equatorial_spacing(mesh: &Mesh) -> f64 {
    let re = match mesh.geometry_kind {
        GeometryKind::SphericalShell { re, .. } => re,
        GeometryKind::Planar => panic!("equatorial spacing needs a shell mesh"),
    };
    let mut total = 0.0;
    let mut count = 0usize;
    for f in &mesh.faces {
        if let Some(nei) = f.neighbour {
            let a = mesh.cell_centre[f.owner].normalize();
            let b = mesh.cell_centre[nei].normalize();
            total += re * a.cross(&b).norm().atan2(a.dot(&b));
            count += 1;
        }
    }
    360.0 * (total / count as f64) / (2.0 * std::f64::consts::PI * re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::solid_angle;
    use approx::assert_relative_eq;

    #[test]
    fn dodecahedron_dual() {
        let m = gen_hex_icosahedral(0).unwrap();
        assert_eq!(m.n_cells, 12);
        // every cell: 5 radial + 2 surface faces
        for fs in &m.cell_faces {
            assert_eq!(fs.len(), 7);
        }
    }

    #[test]
    fn hexicos_counts_and_euler() {
        for level in [1usize, 3] {
            let (pverts, tris) = super::icosphere(level);
            assert_eq!(pverts.len(), 10 * 4usize.pow(level as u32) + 2);
            // Euler characteristic of the surface triangulation
            let mut edges = std::collections::HashSet::new();
            for t in &tris {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            assert_eq!(
                pverts.len() as i64 - edges.len() as i64 + tris.len() as i64,
                2
            );
            let m = gen_hex_icosahedral(level).unwrap();
            assert_eq!(m.n_cells, 10 * 4usize.pow(level as u32) + 2);
            // pentagons have 5 radial + 2 surface faces
            let pentagons = m.cell_faces.iter().filter(|fs| fs.len() == 7).count();
            assert_eq!(pentagons, 12);
        }
    }

    #[test]
    fn shell_volume_and_solid_angle_closures() {
        let m = gen_hex_icosahedral(2).unwrap();
        let (r1, r2) = (EARTH_RADIUS - 1000.0, EARTH_RADIUS + 1000.0);
        let expect = 4.0 * std::f64::consts::PI / 3.0 * (r2.powi(3) - r1.powi(3));
        let total: f64 = m.cell_volume.iter().sum();
        assert_relative_eq!(total, expect, max_relative = 1e-9);

        // solid angles of the outer surface faces sum to 4 pi
        let outer = m.patches.iter().find(|p| p.name == "outer").unwrap();
        let mut omega = 0.0;
        for fi in outer.first_face..outer.first_face + outer.n_faces {
            let verts: Vec<_> = m.faces[fi].verts.iter().map(|&v| m.vertices[v]).collect();
            let c = (verts.iter().sum::<crate::mesh::Vec3>() / verts.len() as f64).normalize();
            for k in 0..verts.len() {
                omega += solid_angle(
                    &verts[k].normalize(),
                    &verts[(k + 1) % verts.len()].normalize(),
                    &c,
                )
                .unwrap();
            }
        }
        assert_relative_eq!(omega, 4.0 * std::f64::consts::PI, max_relative = 1e-9);
    }

    #[test]
    fn radial_face_area_matches_quadrature() {
        let m = gen_cubed_sphere(4).unwrap();
        let (r1, r2) = (EARTH_RADIUS - 1000.0, EARTH_RADIUS + 1000.0);
        // first interior (radial) face
        let fi = (0..m.faces.len()).find(|&i| !m.is_boundary(i)).unwrap();
        let vs: Vec<_> = m.faces[fi].verts.iter().map(|&v| m.vertices[v]).collect();
        let a = vs[0].normalize();
        let b = vs
            .iter()
            .map(|v| v.normalize())
            .find(|u| (u - a).norm() > 1e-6)
            .unwrap();
        let d = a.cross(&b).norm().atan2(a.dot(&b));
        // 2-D midpoint quadrature of the annular sector: int_r1^r2 r d dr
        let nn = 2000usize;
        let mut quad = 0.0;
        for i in 0..nn {
            let r = r1 + (i as f64 + 0.5) / nn as f64 * (r2 - r1);
            quad += r * (r2 - r1) / nn as f64 * d;
        }
        assert_relative_eq!(m.face_area[fi].norm(), d / 2.0 * (r2 * r2 - r1 * r1), max_relative = 1e-12);
        assert_relative_eq!(m.face_area[fi].norm(), quad, max_relative = 1e-7);
    }

    #[test]
    fn cubed_sphere_counts() {
        let m = gen_cubed_sphere(1).unwrap();
        assert_eq!(m.n_cells, 6);
        // surface vertices shared: 8 cube corners per layer
        assert_eq!(m.vertices.len(), 16);
        let m3 = gen_cubed_sphere(3).unwrap();
        assert_eq!(m3.n_cells, 54);
        for c in 0..m3.n_cells {
            let surf = m3.cell_faces[c]
                .iter()
                .filter(|&&f| m3.is_boundary(f))
                .count();
            assert_eq!(surf, 2);
        }
    }

    #[test]
    fn equatorial_spacing_halves_with_refinement() {
        let d1 = equatorial_spacing(&gen_hex_icosahedral(1).unwrap());
        let d2 = equatorial_spacing(&gen_hex_icosahedral(2).unwrap());
        assert!((d1 / d2 - 2.0).abs() < 0.1);
        let c16 = equatorial_spacing(&gen_cubed_sphere(16).unwrap());
        let c32 = equatorial_spacing(&gen_cubed_sphere(32).unwrap());
        assert!((c16 / c32 - 2.0).abs() < 0.1);
    }
}
