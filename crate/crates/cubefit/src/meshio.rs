//! Plain-text mesh file format.
//!
//! ```text
//! mesh2d                      (or: meshShell r1 r2 Re)
//! vertices N
//! x z                         (x y z for shells)
//! ...
//! faces M
//! k v1 ... vk owner neighbour (neighbour = -1 for boundary)
//! ...
//! patches P
//! name firstFace nFaces bcKind [bcValue]
//! ```

use crate::mesh::{BcKind, Face, GeometryKind, Mesh, Patch, Vec3};
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let planar = matches!(mesh.geometry_kind, GeometryKind::Planar);
    match mesh.geometry_kind {
        GeometryKind::Planar => s.push_str("mesh2d\n"),
        GeometryKind::SphericalShell { r1, r2, re } => {
            writeln!(s, "meshShell {r1} {r2} {re}").unwrap()
        }
    }
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for v in &mesh.vertices {
        if planar {
            writeln!(s, "{} {}", v.x, v.z).unwrap();
        } else {
            writeln!(s, "{} {} {}", v.x, v.y, v.z).unwrap();
        }
    }
    writeln!(s, "faces {}", mesh.faces.len()).unwrap();
    for f in &mesh.faces {
        write!(s, "{}", f.verts.len()).unwrap();
        for v in &f.verts {
            write!(s, " {v}").unwrap();
        }
        let nei = f.neighbour.map_or(-1, |n| n as i64);
        writeln!(s, " {} {}", f.owner, nei).unwrap();
    }
    writeln!(s, "patches {}", mesh.patches.len()).unwrap();
    for p in &mesh.patches {
        match &p.bc {
            BcKind::FixedValue(v) => {
                writeln!(s, "{} {} {} fixedValue {}", p.name, p.first_face, p.n_faces, v).unwrap()
            }
            BcKind::ZeroNormalGradient => writeln!(
                s,
                "{} {} {} zeroNormalGradient",
                p.name, p.first_face, p.n_faces
            )
            .unwrap(),
            BcKind::NoNormalFlow => {
                writeln!(s, "{} {} {} noNormalFlow", p.name, p.first_face, p.n_faces).unwrap()
            }
        }
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut tok = text.split_whitespace();
    let mut next = || {
        tok.next()
            .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))
    };
    let parse_f = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad float '{t}'")))
    };
    let parse_u = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad index '{t}'")))
    };

    let header = next()?;
    let (kind, planar) = match header {
        "mesh2d" => (GeometryKind::Planar, true),
        "meshShell" => {
            let r1 = parse_f(next()?)?;
            let r2 = parse_f(next()?)?;
            let re = parse_f(next()?)?;
            (GeometryKind::SphericalShell { r1, r2, re }, false)
        }
        other => return Err(Error::Parse(format!("unknown mesh header '{other}'"))),
    };

    let expect = |tok: &str, want: &str| {
        if tok == want {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{want}', got '{tok}'")))
        }
    };

    expect(next()?, "vertices")?;
    let nv = parse_u(next()?)?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = parse_f(next()?)?;
        if planar {
            let z = parse_f(next()?)?;
            vertices.push(Vec3::new(x, 0.0, z));
        } else {
            let y = parse_f(next()?)?;
            let z = parse_f(next()?)?;
            vertices.push(Vec3::new(x, y, z));
        }
    }

    expect(next()?, "faces")?;
    let nf = parse_u(next()?)?;
    let mut faces = Vec::with_capacity(nf);
    let mut n_cells = 0usize;
    for _ in 0..nf {
        let k = parse_u(next()?)?;
        let mut verts = Vec::with_capacity(k);
        for _ in 0..k {
            verts.push(parse_u(next()?)?);
        }
        let owner = parse_u(next()?)?;
        let nei_raw = next()?
            .parse::<i64>()
            .map_err(|_| Error::Parse("bad neighbour".into()))?;
        let neighbour = if nei_raw < 0 {
            None
        } else {
            Some(nei_raw as usize)
        };
        n_cells = n_cells.max(owner + 1).max(neighbour.map_or(0, |n| n + 1));
        faces.push(Face {
            verts,
            owner,
            neighbour,
        });
    }

    expect(next()?, "patches")?;
    let np = parse_u(next()?)?;
    let mut patches = Vec::with_capacity(np);
    for _ in 0..np {
        let name = next()?.to_string();
        let first_face = parse_u(next()?)?;
        let n_faces = parse_u(next()?)?;
        let bc = match next()? {
            "fixedValue" => BcKind::FixedValue(parse_f(next()?)?),
            "zeroNormalGradient" => BcKind::ZeroNormalGradient,
            "noNormalFlow" => BcKind::NoNormalFlow,
            other => return Err(Error::Parse(format!("unknown bcKind '{other}'"))),
        };
        patches.push(Patch {
            name,
            first_face,
            n_faces,
            bc,
        });
    }

    Mesh::build(vertices, faces, n_cells, patches, kind)
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}
