//! The three idealised test cases (§3): horizontal transport over mountains,
//! transport over a mountainous lower boundary, and deformational flow on
//! the sphere; streamfunction-derived fluxes, analytic solutions and error
//! norms.

use crate::mesh::{GeometryKind, Mesh, Vec3};
use crate::meshgen::{self, DomainSpec, EARTH_RADIUS};
use crate::terrain::TerrainProfile;
use crate::transport::FluxField;
use crate::{Error, Result};
use std::f64::consts::PI;

pub const U0: f64 = 10.0;
pub const H1: f64 = 10_000.0;
pub const T_END: f64 = 10_000.0;
/// Deformational-flow duration: 12 days.
pub const T_DEFORM: f64 = 12.0 * 86_400.0;

/// Planar specialisation of Eq. B1: the flux through an edge from vertex a
/// to b (ordered so that the rotated normal matches S_f) is Psi(a) - Psi(b).
/// Exactly divergence-free by telescoping around each cell.
pub fn flux_from_streamfunction(mesh: &Mesh, psi: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..mesh.faces.len())
        .map(|f| {
            let (a, b) = (mesh.faces[f].verts[0], mesh.faces[f].verts[1]);
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let s_raw = Vec3::new(pb.z - pa.z, 0.0, -(pb.x - pa.x));
            let q = psi(pa.x, pa.z) - psi(pb.x, pb.z);
            if s_raw.dot(&mesh.face_area[f]) >= 0.0 {
                q
            } else {
                -q
            }
        })
        .collect()
}

/// Schär streamfunction: Psi(z) = -integral of u (Eq. 18) from 0 to z.
pub fn schaer_psi(z: f64) -> f64 {
    let (z1, z2) = (7000.0, 8000.0);
    if z <= z1 {
        0.0
    } else if z >= z2 {
        -(U0 * (z2 - z1) / 2.0 + U0 * (z - z2))
    } else {
        let s = (z - z1) / (z2 - z1);
        -U0 * (z2 - z1) * (s / 2.0 - (PI * s).sin() / (2.0 * PI))
    }
}

/// Mountain-case streamfunction (Eq. 20): Psi = -u0 H1 (z - h)/(H1 - h).
pub fn mountain_psi(profile: &TerrainProfile, x: f64, z: f64) -> f64 {
    // purely horizontal flow above H1; terrain-following below
    if z >= H1 {
        return -U0 * z;
    }
    let h = profile.height(x);
    -U0 * H1 * (z - h) / (H1 - h)
}

/// Cosine-squared tracer blob (Eq. 19).
pub fn cos2_tracer(x: f64, z: f64, x0: f64, z0: f64, ax: f64, az: f64) -> f64 {
    let r = (((x - x0) / ax).powi(2) + ((z - z0) / az).powi(2)).sqrt();
    if r <= 1.0 {
        (PI * r / 2.0).cos().powi(2)
    } else {
        0.0
    }
}

pub struct CaseSetup {
    pub mesh: Mesh,
    pub flux: FluxField,
    pub phi0: Vec<f64>,
    pub analytic: Vec<f64>,
    pub t_end: f64,
}

/// §3.1: horizontal transport over mountains on a BTF mesh, h0 = 6 km,
/// dx : dz = 2 : 1; analytic solution is a 100 km translation.
pub fn schaer_case(dx: f64) -> Result<CaseSetup> {
    let spec = DomainSpec::standard(dx, dx / 2.0);
    let profile = TerrainProfile::new(6000.0);
    let mesh = meshgen::gen_btf(&spec, &profile)?;
    let flux = flux_from_streamfunction(&mesh, |_, z| schaer_psi(z));
    let tracer = |x: f64, z: f64, x0: f64| cos2_tracer(x, z, x0, 12_000.0, 25_000.0, 3000.0);
    let phi0 = mesh.cell_centre.iter().map(|c| tracer(c.x, c.z, -50_000.0)).collect();
    let analytic = mesh.cell_centre.iter().map(|c| tracer(c.x, c.z, 50_000.0)).collect();
    Ok(CaseSetup {
        mesh,
        flux: FluxField::Steady(flux),
        phi0,
        analytic,
        t_end: T_END,
    })
}

/// Integral of the terrain profile from 0 to x (closed form).
fn terrain_integral(profile: &TerrainProfile, x: f64) -> f64 {
    let a = profile.a;
    let xc = x.clamp(-a, a);
    let (al, be) = (profile.alpha(), profile.beta());
    profile.h0 / 16.0
        * (4.0 * xc
            + 2.0 * ((2.0 * al * xc).sin() / al + (2.0 * be * xc).sin() / be)
            + (2.0 * (al + be) * xc).sin() / (al + be)
            + (2.0 * (al - be) * xc).sin() / (al - be))
}

/// Trajectory time from x = 0 to x (Eq. 22–24 with the streamfunction's
/// H1): t(x) = (x - I(x)/H1) / u0 where I is the terrain integral.
pub fn trajectory_time(h0: f64, x: f64) -> f64 {
    let profile = TerrainProfile::new(h0);
    (x - terrain_integral(&profile, x) / H1) / U0
}

/// Horizontal position reached after time t starting from x = 0 (monotone
/// root of trajectory_time, bisected to 1e-6 m).
pub fn trajectory_arrival(h0: f64, t: f64) -> f64 {
    let mut lo = U0 * t - 1.0;
    let mut hi = U0 * t + 2.0 * terrain_integral(&TerrainProfile::new(h0), 25_000.0) / H1
        + 2.0 * 25_000.0
        + 1.0;
    while hi - lo > 1e-6 {
        let mid = (lo + hi) / 2.0;
        if trajectory_time(h0, mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Arrival position after time t starting from x0: solves
/// t(x) - t(x0) = t along the same trajectory.
pub fn arrival_from(h0: f64, x0: f64, t: f64) -> f64 {
    let t_total = t + trajectory_time(h0, x0);
    let mut lo = x0;
    let mut hi = x0 + U0 * t * (1.0 + H1 / (H1 - h0).max(1.0)) + 100_000.0;
    while hi - lo > 1e-6 {
        let mid = (lo + hi) / 2.0;
        if trajectory_time(h0, mid) < t_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MountainMeshKind {
    Btf,
    CutCell,
    SlantedCell,
}

/// §3.2: transport over a mountainous lower boundary. dx = 1000 m,
/// dz = 500 m; tracer at the ground; analytic solution translated to the
/// trajectory arrival position.
pub fn mountain_case(kind: MountainMeshKind, h0: f64) -> Result<CaseSetup> {
    let spec = DomainSpec::standard(1000.0, 500.0);
    let profile = TerrainProfile::new(h0);
    if h0 >= H1 {
        return Err(Error::Case(format!("h0 = {h0} m must stay below H1 = {H1} m")));
    }
    let mesh = match kind {
        MountainMeshKind::Btf => meshgen::gen_btf(&spec, &profile)?,
        MountainMeshKind::CutCell => meshgen::gen_cut_cell(&spec, &profile)?,
        MountainMeshKind::SlantedCell => meshgen::gen_slanted_cell(&spec, &profile)?,
    };
    let flux = flux_from_streamfunction(&mesh, |x, z| mountain_psi(&profile, x, z));
    let x0 = -50_000.0;
    let tracer = |x: f64, z: f64, xc: f64| cos2_tracer(x, z, xc, 0.0, 25_000.0, 10_000.0);
    let phi0 = mesh.cell_centre.iter().map(|c| tracer(c.x, c.z, x0)).collect();
    let x_end = arrival_from(h0, x0, T_END);
    let analytic = mesh.cell_centre.iter().map(|c| tracer(c.x, c.z, x_end)).collect();
    Ok(CaseSetup {
        mesh,
        flux: FluxField::Steady(flux),
        phi0,
        analytic,
        t_end: T_END,
    })
}

/// Closed-domain variant of the mountain case: a single recirculating
/// vortex whose streamfunction vanishes on every boundary, for conservation
/// and constancy tests.
pub fn mountain_closed_case(h0: f64) -> Result<CaseSetup> {
    let spec = DomainSpec::standard(1000.0, 500.0);
    let profile = TerrainProfile::new(h0);
    let mesh = meshgen::gen_btf(&spec, &profile)?;
    let (w, hgt) = (spec.width, spec.height);
    let amp = U0 * hgt / PI;
    let psi = move |x: f64, z: f64| {
        let h = profile.height(x);
        let zeta = ((z - h) / (hgt - h)).clamp(0.0, 1.0);
        amp * (PI * (x / w + 0.5)).sin() * (PI * zeta).sin()
    };
    let flux = flux_from_streamfunction(&mesh, psi);
    let phi0 = mesh
        .cell_centre
        .iter()
        .map(|c| cos2_tracer(c.x, c.z, -50_000.0, 0.0, 25_000.0, 10_000.0))
        .collect();
    let mut setup = CaseSetup {
        mesh,
        flux: FluxField::Steady(flux),
        phi0,
        analytic: Vec::new(),
        t_end: T_END,
    };
    // make the domain genuinely closed for mass accounting
    for p in &mut setup.mesh.patches {
        p.bc = crate::mesh::BcKind::NoNormalFlow;
    }
    setup.analytic = setup.phi0.clone();
    Ok(setup)
}

fn lon_lat(p: &Vec3) -> (f64, f64) {
    (p.y.atan2(p.x), (p.z / p.norm()).asin())
}

/// Deformational-flow streamfunction (§3.3).
pub fn deformational_psi(lambda: f64, theta: f64, t: f64) -> f64 {
    let lp = lambda - 2.0 * PI * t / T_DEFORM;
    10.0 * EARTH_RADIUS / T_DEFORM * lp.sin().powi(2) * theta.cos().powi(2)
        * (PI * t / T_DEFORM).cos()
        - 2.0 * PI * EARTH_RADIUS / T_DEFORM * theta.sin()
}

/// Time-dependent flux field on a shell mesh via Eq. B1:
/// u_f . S_f = sum over edges of (e . x_e) Psi(edge midpoint).
pub fn deformational_flux(mesh: &Mesh) -> FluxField {
    assert!(matches!(mesh.geometry_kind, GeometryKind::SphericalShell { .. }));
    // precompute e . x_e and the midpoint coordinates of contributing edges
    struct EdgeTerm {
        weight: f64, // e . x_e, signed to match S_f
        lambda: f64,
        theta: f64,
    }
    let mut face_edges: Vec<Vec<EdgeTerm>> = Vec::with_capacity(mesh.faces.len());
    for (f, face) in mesh.faces.iter().enumerate() {
        let verts: Vec<Vec3> = face.verts.iter().map(|&v| mesh.vertices[v]).collect();
        let n = verts.len();
        // straight-edge normal of the stored traversal, to match S_f
        let mut nrm = Vec3::zeros();
        for k in 0..n {
            nrm += verts[k].cross(&verts[(k + 1) % n]) / 2.0;
        }
        // u = r_hat x grad(psi) = curl(-psi x), so the circulation of
        // psi x around the face, counter-clockwise about S_f, is -flux
        let sign = if nrm.dot(&mesh.face_area[f]) >= 0.0 { -1.0 } else { 1.0 };
        let mut terms = Vec::new();
        for k in 0..n {
            let (a, b) = (verts[k], verts[(k + 1) % n]);
            let e = b - a;
            let xm = (a + b) / 2.0;
            let w = sign * e.dot(&xm);
            if w.abs() > 1e-6 {
                let (lambda, theta) = lon_lat(&xm);
                terms.push(EdgeTerm { weight: w, lambda, theta });
            }
        }
        face_edges.push(terms);
    }
    FluxField::Unsteady(Box::new(move |t| {
        face_edges
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|e| e.weight * deformational_psi(e.lambda, e.theta, t))
                    .sum()
            })
            .collect()
    }))
}

/// Sum of two Gaussian hills (§3.3), phi0 = 0.95, b = 5, centres at
/// (5 pi/6, 0) and (7 pi/6, 0).
pub fn gaussian_hills(p: &Vec3) -> f64 {
    let x = EARTH_RADIUS * p.normalize();
    let mut phi = 0.0;
    for lam in [5.0 * PI / 6.0, 7.0 * PI / 6.0] {
        let xi = EARTH_RADIUS * Vec3::new(lam.cos(), lam.sin(), 0.0);
        phi += 0.95 * (-5.0 * ((x - xi).norm() / EARTH_RADIUS).powi(2)).exp();
    }
    phi
}

/// Sum of two cosine bells over a background (Lauritzen et al. 2012
/// standard): b = 0.1, c = 0.9, bell radius Re/2.
pub fn cosine_bells(p: &Vec3) -> f64 {
    let (b, c) = (0.1, 0.9);
    let r = EARTH_RADIUS / 2.0;
    let u = p.normalize();
    let mut phi = b;
    for lam in [5.0 * PI / 6.0, 7.0 * PI / 6.0] {
        let ui = Vec3::new(lam.cos(), lam.sin(), 0.0);
        let ri = EARTH_RADIUS * u.cross(&ui).norm().atan2(u.dot(&ui));
        if ri < r {
            phi += c * 0.5 * (1.0 + (PI * ri / r).cos());
        }
    }
    phi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereTracer {
    GaussianHills,
    CosineBells,
}

/// §3.3: deformational flow on a shell mesh; the analytic final state is
/// the initial condition.
pub fn deformational_case(mesh: Mesh, tracer: SphereTracer) -> CaseSetup {
    let flux = deformational_flux(&mesh);
    let phi0: Vec<f64> = mesh
        .cell_centre
        .iter()
        .map(|c| match tracer {
            SphereTracer::GaussianHills => gaussian_hills(c),
            SphereTracer::CosineBells => cosine_bells(c),
        })
        .collect();
    CaseSetup {
        analytic: phi0.clone(),
        mesh,
        flux,
        phi0,
        t_end: T_DEFORM,
    }
}

/// Error norms of Eqs. 9–10.
pub fn error_norms(numerical: &[f64], analytic: &[f64], mesh: &Mesh) -> Result<(f64, f64)> {
    let mut num2 = 0.0;
    let mut den2 = 0.0;
    let mut ninf = 0.0f64;
    let mut dinf = 0.0f64;
    for c in 0..mesh.n_cells {
        let v = mesh.cell_volume[c];
        num2 += (numerical[c] - analytic[c]).powi(2) * v;
        den2 += analytic[c].powi(2) * v;
        ninf = ninf.max((numerical[c] - analytic[c]).abs());
        dinf = dinf.max(analytic[c].abs());
    }
    if den2 == 0.0 || dinf == 0.0 {
        return Err(Error::Case("analytic solution is identically zero".into()));
    }
    Ok(((num2 / den2).sqrt(), ninf / dinf))
}

/// Coarsest spacing for which l2 = 0.033, by log-log interpolation between
/// bracketing table entries or slope -2 extrapolation beyond the finest.
pub fn minimal_resolution(table: &[(f64, f64)]) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::Case("empty error table".into()));
    }
    let mut rows: Vec<(f64, f64)> = table.to_vec();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap()); // finest first
    let target = 0.033f64;
    for w in rows.windows(2) {
        let (d0, e0) = w[0];
        let (d1, e1) = w[1];
        if (e0 - target) * (e1 - target) <= 0.0 && e0 != e1 {
            let s = (target.ln() - e0.ln()) / (e1.ln() - e0.ln());
            return Ok((d0.ln() + s * (d1.ln() - d0.ln())).exp());
        }
    }
    let (d, e) = rows[0];
    Ok(d * (target / e).sqrt())
}
