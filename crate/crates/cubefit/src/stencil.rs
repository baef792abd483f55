//! Upwind-biased stencil construction (§2.1.1): opposing faces, internal and
//! external cells, and Dirichlet stencil boundary faces. Two stencils exist
//! per interior face, one for each flow direction.

use crate::mesh::{BcKind, Mesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PointLoc {
    Cell(usize),
    /// Dirichlet boundary face, sampled at its centre.
    BoundaryFace(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Role {
    Upwind,
    Downwind,
    Peripheral,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Stencil {
    pub face: usize,
    pub upwind_cell: usize,
    pub downwind_cell: usize,
    /// Upwind point first, downwind second, then peripherals ordered by
    /// (distance from the face centre, kind, index).
    pub points: Vec<(PointLoc, Role)>,
}

impl Stencil {
    pub fn position(&self, mesh: &Mesh, k: usize) -> Vec3 {
        match self.points[k].0 {
            PointLoc::Cell(c) => mesh.cell_centre[c],
            PointLoc::BoundaryFace(f) => mesh.face_centre[f],
        }
    }
}

/// Opp(f, g) = -(S_f . S_g) / |S_f|^2 with both area vectors directed
/// outward from c_u (Eq. 5).
pub fn opposedness(mesh: &Mesh, f: usize, g: usize, c_u: usize) -> Result<f64> {
    let sf = mesh.face_area[f] * mesh.outward_sign(c_u, f);
    let sg = mesh.face_area[g] * mesh.outward_sign(c_u, g);
    let n2 = sf.norm_squared();
    if n2 == 0.0 {
        return Err(Error::Stencil(format!("face {f} has zero area")));
    }
    Ok(-sf.dot(&sg) / n2)
}

/// Opposing faces of f in c_u (Eq. 7): all faces with Opp >= 0.5, plus the
/// maximal-Opp face (lowest index on ties).
pub fn opposing_faces(mesh: &Mesh, f: usize, c_u: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &g in &mesh.cell_faces[c_u] {
        if g == f {
            continue;
        }
        let opp = opposedness(mesh, f, g, c_u)?;
        // round-off tolerance so exact geometric ties (regular hexagons)
        // stay included
        if opp >= 0.5 - 1e-12 {
            out.push(g);
        }
        if best.map_or(true, |(_, b)| opp > b) {
            best = Some((g, opp));
        }
    }
    let (gmax, _) = best.ok_or_else(|| Error::Stencil(format!("cell {c_u} has one face")))?;
    if !out.contains(&gmax) {
        out.push(gmax);
    }
    out.sort_unstable();
    Ok(out)
}

/// Build the stencil for interior face `f` with upwind cell `c_u`.
pub fn build_stencil(mesh: &Mesh, f: usize, c_u: usize) -> Result<Stencil> {
    if mesh.is_boundary(f) {
        return Err(Error::Stencil(
            "stencils are not constructed for boundary faces".into(),
        ));
    }
    let c_d = mesh
        .other_cell(c_u, f)
        .ok_or_else(|| Error::Stencil(format!("cell {c_u} does not border face {f}")))?;

    // internal cells: c_u plus cells across each opposing face
    let mut internal = vec![c_u];
    for g in opposing_faces(mesh, f, c_u)? {
        if let Some(c) = mesh.other_cell(c_u, g) {
            if !internal.contains(&c) {
                internal.push(c);
            }
        }
    }

    // external cells share a vertex with an internal cell; Dirichlet
    // boundary faces sharing a vertex join as stencil boundary faces
    let mut seen = vec![false; mesh.n_cells];
    for &c in &internal {
        seen[c] = true;
    }
    let mut cells: Vec<usize> = internal.clone();
    for &c in &internal {
        for &v in &mesh.cell_verts[c] {
            for &c2 in &mesh.vert_cells[v] {
                if !seen[c2] {
                    seen[c2] = true;
                    cells.push(c2);
                }
            }
        }
    }
    let shares_vertex = |verts: &[usize]| {
        verts.iter().any(|v| {
            internal
                .iter()
                .any(|&c| mesh.cell_verts[c].binary_search(v).is_ok())
        })
    };
    let mut bfaces: Vec<usize> = Vec::new();
    for p in &mesh.patches {
        if !matches!(p.bc, BcKind::FixedValue(_)) {
            continue;
        }
        for bf in p.first_face..p.first_face + p.n_faces {
            if shares_vertex(&mesh.faces[bf].verts) {
                bfaces.push(bf);
            }
        }
    }

    let fc = mesh.face_centre[f];
    let mut peripherals: Vec<(PointLoc, f64, usize, usize)> = Vec::new();
    for &c in &cells {
        if c != c_u && c != c_d {
            peripherals.push((PointLoc::Cell(c), (mesh.cell_centre[c] - fc).norm(), 0, c));
        }
    }
    for &bf in &bfaces {
        peripherals.push((
            PointLoc::BoundaryFace(bf),
            (mesh.face_centre[bf] - fc).norm(),
            1,
            bf,
        ));
    }
    peripherals.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });

    let mut points = vec![
        (PointLoc::Cell(c_u), Role::Upwind),
        (PointLoc::Cell(c_d), Role::Downwind),
    ];
    points.extend(peripherals.into_iter().map(|(loc, ..)| (loc, Role::Peripheral)));
    Ok(Stencil {
        face: f,
        upwind_cell: c_u,
        downwind_cell: c_d,
        points,
    })
}

/// Both stencils for every interior face: `result[f] = Some([own-upwind,
/// nei-upwind])`.
pub fn build_all(mesh: &Mesh) -> Result<Vec<Option<[Stencil; 2]>>> {
    let mut out = Vec::with_capacity(mesh.faces.len());
    for (f, face) in mesh.faces.iter().enumerate() {
        out.push(match face.neighbour {
            Some(nei) => Some([
                build_stencil(mesh, f, face.owner)?,
                build_stencil(mesh, f, nei)?,
            ]),
            None => None,
        });
    }
    Ok(out)
}
