//! Unstructured mesh representation with planar (x–z) and spherical-shell
//! geometry. Planar meshes are true 2-D meshes: faces are edges, cells are
//! polygons and "volume" is area (implicit unit depth in y).

use crate::{Error, Result};
use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    /// Dirichlet value in kg m^-3.
    FixedValue(f64),
    ZeroNormalGradient,
    NoNormalFlow,
}

#[derive(Debug, Clone)]
pub struct Patch {
    pub name: String,
    pub first_face: usize,
    pub n_faces: usize,
    pub bc: BcKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometryKind {
    Planar,
    SphericalShell { r1: f64, r2: f64, re: f64 },
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Ordered vertex indices; 2 for planar edges, >=3 on shells.
    pub verts: Vec<usize>,
    pub owner: usize,
    pub neighbour: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<Face>,
    pub n_cells: usize,
    pub patches: Vec<Patch>,
    pub geometry_kind: GeometryKind,
    // geometry, populated by build()
    pub face_centre: Vec<Vec3>,
    /// S_f with |S_f| = face area, directed owner -> neighbour (outward on
    /// boundary faces).
    pub face_area: Vec<Vec3>,
    pub cell_centre: Vec<Vec3>,
    pub cell_volume: Vec<f64>,
    pub cell_faces: Vec<Vec<usize>>,
    pub cell_verts: Vec<Vec<usize>>,
    pub vert_cells: Vec<Vec<usize>>,
}

impl Mesh {
    pub fn build(
        vertices: Vec<Vec3>,
        faces: Vec<Face>,
        n_cells: usize,
        patches: Vec<Patch>,
        geometry_kind: GeometryKind,
    ) -> Result<Mesh> {
        let mut mesh = Mesh {
            vertices,
            faces,
            n_cells,
            patches,
            geometry_kind,
            face_centre: Vec::new(),
            face_area: Vec::new(),
            cell_centre: Vec::new(),
            cell_volume: Vec::new(),
            cell_faces: Vec::new(),
            cell_verts: Vec::new(),
            vert_cells: Vec::new(),
        };
        mesh.index_topology()?;
        match mesh.geometry_kind {
            GeometryKind::Planar => mesh.compute_planar_geometry()?,
            GeometryKind::SphericalShell { r1, r2, re } => {
                mesh.spherical_corrections(r1, r2, re)?
            }
        }
        Ok(mesh)
    }

    fn index_topology(&mut self) -> Result<()> {
        let mut cell_faces = vec![Vec::new(); self.n_cells];
        let mut cell_verts = vec![Vec::new(); self.n_cells];
        for (i, f) in self.faces.iter().enumerate() {
            if f.verts.len() < 2 {
                return Err(Error::Mesh(format!("face {i} has < 2 vertices")));
            }
            if f.owner >= self.n_cells {
                return Err(Error::Mesh(format!("face {i}: bad owner {}", f.owner)));
            }
            cell_faces[f.owner].push(i);
            cell_verts[f.owner].extend_from_slice(&f.verts);
            if let Some(n) = f.neighbour {
                if n >= self.n_cells || n == f.owner {
                    return Err(Error::Mesh(format!("face {i}: bad neighbour {n}")));
                }
                cell_faces[n].push(i);
                cell_verts[n].extend_from_slice(&f.verts);
            }
        }
        for vs in &mut cell_verts {
            vs.sort_unstable();
            vs.dedup();
        }
        let mut vert_cells = vec![Vec::new(); self.vertices.len()];
        for (c, vs) in cell_verts.iter().enumerate() {
            for &v in vs {
                vert_cells[v].push(c);
            }
        }
        self.cell_faces = cell_faces;
        self.cell_verts = cell_verts;
        self.vert_cells = vert_cells;
        Ok(())
    }

    /// +1 if `cell` owns `face` (S_f already points outward), -1 otherwise.
    pub fn outward_sign(&self, cell: usize, face: usize) -> f64 {
        if self.faces[face].owner == cell {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_boundary(&self, face: usize) -> bool {
        self.faces[face].neighbour.is_none()
    }

    /// The cell on the other side of an interior face.
    pub fn other_cell(&self, cell: usize, face: usize) -> Option<usize> {
        let f = &self.faces[face];
        if f.owner == cell {
            f.neighbour
        } else {
            Some(f.owner)
        }
    }

    pub fn patch_of_face(&self, face: usize) -> Option<&Patch> {
        self.patches
            .iter()
            .find(|p| face >= p.first_face && face < p.first_face + p.n_faces)
    }

    fn compute_planar_geometry(&mut self) -> Result<()> {
        let n_faces = self.faces.len();
        // provisional cell centres from face midpoints, for orientation only
        let mut prov = vec![Vec3::zeros(); self.n_cells];
        for (c, fs) in self.cell_faces.iter().enumerate() {
            for &fi in fs {
                let f = &self.faces[fi];
                prov[c] += (self.vertices[f.verts[0]] + self.vertices[f.verts[1]]) / 2.0;
            }
            prov[c] /= self.cell_faces[c].len() as f64;
        }

        let mut centre = vec![Vec3::zeros(); n_faces];
        let mut area = vec![Vec3::zeros(); n_faces];
        for i in 0..n_faces {
            let (a, b) = (self.faces[i].verts[0], self.faces[i].verts[1]);
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let mid = (pa + pb) / 2.0;
            // edge a->b gets normal (dz, 0, -dx): outward of a CCW polygon
            let mut s = Vec3::new(pb.z - pa.z, 0.0, -(pb.x - pa.x));
            if s.norm() == 0.0 {
                return Err(Error::DegenerateFace {
                    face: i,
                    reason: "zero-length edge".into(),
                });
            }
            if s.dot(&(mid - prov[self.faces[i].owner])) < 0.0 {
                self.faces[i].verts.swap(0, 1);
                s = -s;
            }
            centre[i] = mid;
            area[i] = s;
        }

        let mut cc = vec![Vec3::zeros(); self.n_cells];
        let mut vol = vec![0.0; self.n_cells];
        for c in 0..self.n_cells {
            let mut a2 = 0.0; // twice the polygon area
            let mut cx = 0.0;
            let mut cz = 0.0;
            for &fi in &self.cell_faces[c] {
                let f = &self.faces[fi];
                // outward-directed edge for this cell
                let (va, vb) = if f.owner == c {
                    (f.verts[0], f.verts[1])
                } else {
                    (f.verts[1], f.verts[0])
                };
                let (pa, pb) = (self.vertices[va], self.vertices[vb]);
                let cross = pa.x * pb.z - pb.x * pa.z;
                a2 += cross;
                cx += (pa.x + pb.x) * cross;
                cz += (pa.z + pb.z) * cross;
            }
            if a2 <= 0.0 {
                return Err(Error::BadVolume {
                    cell: c,
                    volume: a2 / 2.0,
                });
            }
            vol[c] = a2 / 2.0;
            cc[c] = Vec3::new(cx / (3.0 * a2), 0.0, cz / (3.0 * a2));
        }
        self.face_centre = centre;
        self.face_area = area;
        self.cell_centre = cc;
        self.cell_volume = vol;
        Ok(())
    }

    fn spherical_corrections(&mut self, r1: f64, r2: f64, re: f64) -> Result<()> {
        let n_faces = self.faces.len();
        let mut prov = vec![Vec3::zeros(); self.n_cells];
        for (c, vs) in self.cell_verts.iter().enumerate() {
            for &v in vs {
                prov[c] += self.vertices[v];
            }
            prov[c] /= vs.len() as f64;
        }

        let mut centre = vec![Vec3::zeros(); n_faces];
        let mut area = vec![Vec3::zeros(); n_faces];
        // surface faces remembered for the cell-volume sum
        let mut is_surface = vec![false; n_faces];

        for i in 0..n_faces {
            let verts: Vec<Vec3> = self.faces[i].verts.iter().map(|&v| self.vertices[v]).collect();
            let radii: Vec<f64> = verts.iter().map(|v| v.norm()).collect();
            let rmax = radii.iter().cloned().fold(f64::MIN, f64::max);
            let surface = radii.iter().all(|&r| (r - rmax).abs() <= 1e-6 * rmax);

            if surface {
                is_surface[i] = true;
                let c_tilde: Vec3 = verts.iter().sum::<Vec3>() / verts.len() as f64;
                let n = verts.len();
                let mut omega = 0.0;
                let mut dir = Vec3::zeros();
                let mut rad_num = 0.0;
                for k in 0..n {
                    let x1 = verts[k];
                    let x2 = verts[(k + 1) % n];
                    let om = solid_angle(
                        &x1.normalize(),
                        &x2.normalize(),
                        &c_tilde.normalize(),
                    )?;
                    omega += om;
                    dir += om * (x1 + x2 + c_tilde);
                    rad_num += om * (x1.norm() + x2.norm()) / 2.0;
                }
                if omega <= 0.0 {
                    return Err(Error::DegenerateFace {
                        face: i,
                        reason: format!("non-positive solid angle {omega}"),
                    });
                }
                let r_hat = dir.normalize();
                let r = rad_num / omega;
                centre[i] = r * r_hat;
                // orient along the stored winding: the vertex-mean of a
                // whole cell sits below the inner surface (unit-vector
                // means shrink), so the provisional-centre rule used for
                // radial faces cannot distinguish inner from outer here
                let mut nrm = Vec3::zeros();
                for k in 0..n {
                    nrm += verts[k].cross(&verts[(k + 1) % n]) / 2.0;
                }
                let mut s = r * r * omega * r_hat;
                if s.dot(&nrm) < 0.0 {
                    s = -s;
                }
                area[i] = s;
            } else {
                // radial face: 4 vertices, two radii, two horizontal directions
                if verts.len() != 4 {
                    return Err(Error::Mesh(format!(
                        "face {i}: cannot classify ({}-vertex face with mixed radii)",
                        verts.len()
                    )));
                }
                let a_hat = verts[0].normalize();
                let mut b_hat = None;
                for v in &verts[1..] {
                    let u = v.normalize();
                    if (u - a_hat).norm() > 1e-6 {
                        b_hat = Some(u);
                        break;
                    }
                }
                let b_hat = b_hat.ok_or_else(|| {
                    Error::Mesh(format!("face {i}: radial face with one horizontal position"))
                })?;
                let d = a_hat.cross(&b_hat).norm().atan2(a_hat.dot(&b_hat));
                let a_f = d / 2.0 * (r2 * r2 - r1 * r1).abs();
                let r_hat = (a_hat + b_hat).normalize();
                centre[i] = re * r_hat;
                let mut s = a_f * a_hat.cross(&b_hat).normalize();
                if s.dot(&(centre[i] - prov[self.faces[i].owner])) < 0.0 {
                    s = -s;
                }
                area[i] = s;
            }
        }

        let mut cc = vec![Vec3::zeros(); self.n_cells];
        let mut vol = vec![0.0; self.n_cells];
        for c in 0..self.n_cells {
            let mut v = 0.0;
            let mut outer: Option<usize> = None;
            let mut outer_r = f64::MIN;
            for &fi in &self.cell_faces[c] {
                if is_surface[fi] {
                    v += self.outward_sign(c, fi) * area[fi].dot(&centre[fi]) / 3.0;
                    let r = centre[fi].norm();
                    if r > outer_r {
                        outer_r = r;
                        outer = Some(fi);
                    }
                }
            }
            if v <= 0.0 {
                return Err(Error::BadVolume { cell: c, volume: v });
            }
            vol[c] = v;
            let fi = outer.ok_or_else(|| Error::Mesh(format!("cell {c} has no surface face")))?;
            cc[c] = re * centre[fi].normalize();
        }
        self.face_centre = centre;
        self.face_area = area;
        self.cell_centre = cc;
        self.cell_volume = vol;
        Ok(())
    }
}

/// Solid angle of the spherical triangle with unit-vector corners, by
/// l'Huilier's theorem.
pub fn solid_angle(v1: &Vec3, v2: &Vec3, v3: &Vec3) -> Result<f64> {
    let side = |p: &Vec3, q: &Vec3| p.cross(q).norm().atan2(p.dot(q));
    let a = side(v2, v3);
    let b = side(v1, v3);
    let c = side(v1, v2);
    let s = (a + b + c) / 2.0;
    let prod =
        (s / 2.0).tan() * ((s - a) / 2.0).tan() * ((s - b) / 2.0).tan() * ((s - c) / 2.0).tan();
    if prod <= 0.0 {
        return Err(Error::Mesh("collinear points in solid angle".into()));
    }
    Ok(4.0 * prod.sqrt().atan())
}

/// Multidimensional Courant number per cell (Eq. 4):
/// Co_c = dt / (2 V_c) * sum_f |u_f . S_f|.
pub fn courant_field(mesh: &Mesh, flux: &[f64], dt: f64) -> Vec<f64> {
    (0..mesh.n_cells)
        .map(|c| {
            let sum: f64 = mesh.cell_faces[c].iter().map(|&fi| flux[fi].abs()).sum();
            dt / (2.0 * mesh.cell_volume[c]) * sum
        })
        .collect()
}
