//! Mesh generators: uniform, basic terrain-following, cut-cell and
//! slanted-cell x–z meshes, plus spherical shells (see `sphere`).

mod sphere;

pub use sphere::{
    equatorial_spacing, gen_cubed_sphere, gen_hex_icosahedral, EARTH_RADIUS, SHELL_HALF_DEPTH,
};

use crate::mesh::{BcKind, Face, GeometryKind, Mesh, Patch, Vec3};
use crate::terrain::TerrainProfile;
use crate::{Error, Result};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub struct DomainSpec {
    /// Domain width, m.
    pub width: f64,
    /// Domain height, m.
    pub height: f64,
    pub dx: f64,
    pub dz: f64,
}

impl DomainSpec {
    /// The paper's x–z domain: 301 km wide, 25 km high.
    pub fn standard(dx: f64, dz: f64) -> DomainSpec {
        DomainSpec {
            width: 301_000.0,
            height: 25_000.0,
            dx,
            dz,
        }
    }

    pub fn nx(&self) -> usize {
        (self.width / self.dx).round() as usize
    }

    pub fn nz(&self) -> usize {
        (self.height / self.dz).round() as usize
    }

    pub fn x0(&self) -> f64 {
        -self.width / 2.0
    }
}

/// Deduplicates vertices by proximity; tolerant of round-off differences
/// between the same point computed along different code paths.
pub(crate) struct VertexDedup {
    map: HashMap<(i64, i64, i64), Vec<usize>>,
    pub verts: Vec<Vec3>,
    tol: f64,
}

impl VertexDedup {
    pub fn new(tol: f64) -> VertexDedup {
        VertexDedup {
            map: HashMap::new(),
            verts: Vec::new(),
            tol,
        }
    }

    fn key(&self, p: &Vec3) -> (i64, i64, i64) {
        let q = self.tol * 2.0;
        (
            (p.x / q).round() as i64,
            (p.y / q).round() as i64,
            (p.z / q).round() as i64,
        )
    }

    pub fn insert(&mut self, p: Vec3) -> usize {
        let (kx, ky, kz) = self.key(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &id in ids {
                            if (self.verts[id] - p).norm() <= self.tol {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.verts.len();
        self.verts.push(p);
        self.map.entry((kx, ky, kz)).or_default().push(id);
        id
    }
}

/// Assemble a planar mesh from per-cell CCW polygons (x–z coordinates).
/// Boundary faces are classified into inlet/outlet/top/ground patches by
/// position against the domain box.
fn assemble_planar(polys: &[Vec<(f64, f64)>], spec: &DomainSpec) -> Result<Mesh> {
    let mut dedup = VertexDedup::new(1e-7);
    let cells: Vec<Vec<usize>> = polys
        .iter()
        .map(|poly| {
            poly.iter()
                .map(|&(x, z)| dedup.insert(Vec3::new(x, 0.0, z)))
                .collect()
        })
        .collect();

    // edge -> (owner cell, owner's traversal order, optional neighbour)
    struct Edge {
        owner: usize,
        a: usize,
        b: usize,
        neighbour: Option<usize>,
    }
    let mut edges: HashMap<(usize, usize), Edge> = HashMap::new();
    for (c, poly) in cells.iter().enumerate() {
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            match edges.get_mut(&key) {
                None => {
                    edges.insert(key, Edge { owner: c, a, b, neighbour: None });
                }
                Some(e) => {
                    if e.neighbour.is_some() {
                        return Err(Error::Mesh(format!(
                            "edge {key:?} shared by more than two cells"
                        )));
                    }
                    e.neighbour = Some(c);
                }
            }
        }
    }

    let verts = dedup.verts;
    let mut interior: Vec<Edge> = Vec::new();
    let mut boundary: Vec<Edge> = Vec::new();
    for (_, e) in edges {
        if e.neighbour.is_some() {
            interior.push(e);
        } else {
            boundary.push(e);
        }
    }
    interior.sort_by_key(|e| (e.owner, e.neighbour.unwrap()));

    let (xmin, xmax) = (spec.x0(), spec.x0() + spec.width);
    let top = spec.height;
    let tol = 1e-6;
    let side = |e: &Edge| {
        let (pa, pb) = (verts[e.a], verts[e.b]);
        if (pa.x - xmin).abs() < tol && (pb.x - xmin).abs() < tol {
            0 // inlet
        } else if (pa.x - xmax).abs() < tol && (pb.x - xmax).abs() < tol {
            1 // outlet
        } else if (pa.z - top).abs() < tol && (pb.z - top).abs() < tol {
            2 // top
        } else {
            3 // ground
        }
    };
    boundary.sort_by(|p, q| {
        (side(p), p.owner, p.a).cmp(&(side(q), q.owner, q.a))
    });

    let mut faces: Vec<Face> = interior
        .iter()
        .map(|e| Face {
            verts: vec![e.a, e.b],
            owner: e.owner,
            neighbour: e.neighbour,
        })
        .collect();
    let mut patches = Vec::new();
    let names = ["inlet", "outlet", "top", "ground"];
    let bcs = [
        BcKind::FixedValue(0.0),
        BcKind::ZeroNormalGradient,
        BcKind::NoNormalFlow,
        BcKind::NoNormalFlow,
    ];
    for s in 0..4 {
        let first = faces.len();
        for e in boundary.iter().filter(|e| side(e) == s) {
            faces.push(Face {
                verts: vec![e.a, e.b],
                owner: e.owner,
                neighbour: None,
            });
        }
        if faces.len() > first {
            patches.push(Patch {
                name: names[s].into(),
                first_face: first,
                n_faces: faces.len() - first,
                bc: bcs[s].clone(),
            });
        }
    }

    Mesh::build(verts, faces, cells.len(), patches, GeometryKind::Planar)
}

/// Basic terrain-following mesh (Eq. 17): z = (H - h)(z*/H) + h.
pub fn gen_btf(spec: &DomainSpec, profile: &TerrainProfile) -> Result<Mesh> {
    if profile.h0 >= spec.height {
        return Err(Error::Mesh(format!(
            "terrain peak {} m reaches the domain top {} m",
            profile.h0, spec.height
        )));
    }
    let (nx, nz) = (spec.nx(), spec.nz());
    let h = spec.height;
    let z_at = |x: f64, zstar: f64| {
        let hx = profile.height(x);
        hx + zstar * (h - hx) / h
    };
    let mut polys = Vec::with_capacity(nx * nz);
    for i in 0..nx {
        let xl = spec.x0() + i as f64 * spec.dx;
        let xr = spec.x0() + (i + 1) as f64 * spec.dx;
        for k in 0..nz {
            let (zb, zt) = (k as f64 * spec.dz, (k + 1) as f64 * spec.dz);
            polys.push(vec![
                (xl, z_at(xl, zb)),
                (xr, z_at(xr, zb)),
                (xr, z_at(xr, zt)),
                (xl, z_at(xl, zt)),
            ]);
        }
    }
    assemble_planar(&polys, spec)
}

pub fn gen_uniform(spec: &DomainSpec) -> Result<Mesh> {
    gen_btf(spec, &TerrainProfile::new(0.0))
}

/// Clip polygon to the half-plane z >= z0 + s (x - x0), with intersection
/// points snapped to existing vertices within `snap`.
fn clip_above_line(
    poly: &[(f64, f64)],
    x0: f64,
    z0: f64,
    s: f64,
    snap: f64,
) -> Vec<(f64, f64)> {
    let d = |p: &(f64, f64)| p.1 - (z0 + s * (p.0 - x0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (da, db) = (d(&a), d(&b));
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            let mut p = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            for q in poly {
                if (p.0 - q.0).abs() <= snap && (p.1 - q.1).abs() <= snap {
                    p = *q;
                    break;
                }
            }
            out.push(p);
        }
    }
    // drop consecutive duplicates (vertex-on-line cases)
    let mut cleaned: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for p in out {
        if cleaned.last().map_or(true, |q| *q != p) {
            cleaned.push(p);
        }
    }
    while cleaned.len() > 1 && cleaned.first() == cleaned.last() {
        cleaned.pop();
    }
    cleaned
}

fn poly_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let mut a2 = 0.0;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        a2 += p.0 * q.1 - q.0 * p.1;
    }
    a2 / 2.0
}

/// Cut-cell mesh: uniform mesh intersected with the piecewise-linear terrain
/// sampled at cell-column edges; fully-buried cells removed.
pub fn gen_cut_cell(spec: &DomainSpec, profile: &TerrainProfile) -> Result<Mesh> {
    if profile.h0 >= spec.height {
        return Err(Error::Mesh("terrain reaches the domain top".into()));
    }
    let (nx, nz) = (spec.nx(), spec.nz());
    let snap = 1e-9 * spec.dz;
    let mut polys = Vec::new();
    for i in 0..nx {
        let xl = spec.x0() + i as f64 * spec.dx;
        let xr = spec.x0() + (i + 1) as f64 * spec.dx;
        let (hl, hr) = (profile.height(xl), profile.height(xr));
        let s = (hr - hl) / (xr - xl);
        for k in 0..nz {
            let (zb, zt) = (k as f64 * spec.dz, (k + 1) as f64 * spec.dz);
            let rect = vec![(xl, zb), (xr, zb), (xr, zt), (xl, zt)];
            let cut = if hl == 0.0 && hr == 0.0 {
                rect
            } else {
                clip_above_line(&rect, xl, hl, s, snap)
            };
            if cut.len() >= 3 && poly_area(&cut) > 0.0 {
                polys.push(cut);
            }
        }
    }
    assemble_planar(&polys, spec)
}

/// Slanted-cell mesh: underground lattice vertices are raised to the terrain
/// surface; zero-area faces and zero-volume cells are removed.
pub fn gen_slanted_cell(spec: &DomainSpec, profile: &TerrainProfile) -> Result<Mesh> {
    if profile.h0 >= spec.height {
        return Err(Error::Mesh("terrain reaches the domain top".into()));
    }
    let (nx, nz) = (spec.nx(), spec.nz());
    let lift = |x: f64, z: f64| {
        let h = profile.height(x);
        if z < h {
            h
        } else {
            z
        }
    };
    let mut polys = Vec::new();
    for i in 0..nx {
        let xl = spec.x0() + i as f64 * spec.dx;
        let xr = spec.x0() + (i + 1) as f64 * spec.dx;
        for k in 0..nz {
            let (zb, zt) = (k as f64 * spec.dz, (k + 1) as f64 * spec.dz);
            let quad = [
                (xl, lift(xl, zb)),
                (xr, lift(xr, zb)),
                (xr, lift(xr, zt)),
                (xl, lift(xl, zt)),
            ];
            let mut poly: Vec<(f64, f64)> = Vec::with_capacity(4);
            for p in quad {
                if poly.last().map_or(true, |q| *q != p) {
                    poly.push(p);
                }
            }
            while poly.len() > 1 && poly.first() == poly.last() {
                poly.pop();
            }
            if poly.len() >= 3 && poly_area(&poly) > 0.0 {
                polys.push(poly);
            }
        }
    }
    assemble_planar(&polys, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshio::write_mesh;

    fn small_spec() -> DomainSpec {
        DomainSpec {
            width: 80_000.0,
            height: 25_000.0,
            dx: 2000.0,
            dz: 1000.0,
        }
    }

    #[test]
    fn btf_layer_heights() {
        let p = TerrainProfile::new(5000.0);
        let h = 25_000.0;
        // Eq. 17 spot values
        let z = |zstar: f64, hx: f64| hx + zstar * (h - hx) / h;
        assert_eq!(z(0.0, 5000.0), 5000.0);
        assert_eq!(z(h, 5000.0), h);
        assert_eq!(z(h / 2.0, 5000.0), 15_000.0);
        let _ = p;
    }

    #[test]
    fn flat_terrain_meshes_identical() {
        let spec = small_spec();
        let p = TerrainProfile::new(0.0);
        let btf = write_mesh(&gen_btf(&spec, &p).unwrap());
        let cut = write_mesh(&gen_cut_cell(&spec, &p).unwrap());
        let sla = write_mesh(&gen_slanted_cell(&spec, &p).unwrap());
        assert_eq!(btf, cut);
        assert_eq!(btf, sla);
        let m = gen_uniform(&spec).unwrap();
        assert_eq!(m.n_cells, spec.nx() * spec.nz());
    }

    #[test]
    fn cut_cell_total_area_matches_integral() {
        let spec = small_spec();
        let p = TerrainProfile::new(5000.0);
        let m = gen_cut_cell(&spec, &p).unwrap();
        let total: f64 = m.cell_volume.iter().sum();
        // exact integral of the sampled piecewise-linear terrain
        let mut expect = 0.0;
        for i in 0..spec.nx() {
            let xl = spec.x0() + i as f64 * spec.dx;
            let xr = xl + spec.dx;
            expect += spec.dx * (spec.height - (p.height(xl) + p.height(xr)) / 2.0);
        }
        assert!((total - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn slanted_vertices_never_below_terrain() {
        let spec = small_spec();
        let p = TerrainProfile::new(5000.0);
        let m = gen_slanted_cell(&spec, &p).unwrap();
        for v in &m.vertices {
            assert!(v.z >= p.height(v.x) - 1e-9);
        }
        for vol in &m.cell_volume {
            assert!(*vol > 0.0);
        }
    }

    #[test]
    fn slanted_min_volume_exceeds_cut_min() {
        let spec = small_spec();
        let p = TerrainProfile::new(5000.0);
        let cut = gen_cut_cell(&spec, &p).unwrap();
        let sla = gen_slanted_cell(&spec, &p).unwrap();
        let min = |m: &Mesh| m.cell_volume.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min(&sla) > min(&cut));
    }

    #[test]
    fn terrain_through_vertex_creates_no_degenerate_face() {
        // flat-topped terrain tuned to pass exactly through lattice vertices
        let spec = DomainSpec {
            width: 8000.0,
            height: 4000.0,
            dx: 1000.0,
            dz: 1000.0,
        };
        // piecewise terrain via a profile whose samples hit z = 1000 exactly:
        // h0 chosen so h(0) = 1000 at the centre column edge
        let p = TerrainProfile::new(1000.0);
        let m = gen_cut_cell(&spec, &p).unwrap();
        for (i, s) in m.face_area.iter().enumerate() {
            assert!(s.norm() > 1e-9, "face {i} degenerate");
        }
    }

    #[test]
    fn btf_rejects_tall_terrain() {
        let spec = small_spec();
        assert!(gen_btf(&spec, &TerrainProfile::new(30_000.0)).is_err());
    }
}
