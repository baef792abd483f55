//! Face-value assembly, Gauss divergence and Heun time stepping for the
//! cubicFit and linearUpwind schemes (§2, §2.2).

use crate::fit::{fit_stencil, FitWeights};
use crate::mesh::{courant_field, BcKind, Mesh, Vec3};
use crate::stencil::{build_all, PointLoc, Stencil};
use crate::{Error, Result};

/// Prescribed face fluxes u_f . S_f, signed owner -> neighbour positive.
pub enum FluxField {
    Steady(Vec<f64>),
    Unsteady(Box<dyn Fn(f64) -> Vec<f64> + Sync>),
}

impl FluxField {
    pub fn at(&self, t: f64) -> std::borrow::Cow<'_, [f64]> {
        match self {
            FluxField::Steady(v) => std::borrow::Cow::Borrowed(v),
            FluxField::Unsteady(f) => std::borrow::Cow::Owned(f(t)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CubicFit,
    LinearUpwind,
}

/// Precomputed cubicFit weight tables: per interior face, one entry per flow
/// direction (0: owner upwind, 1: neighbour upwind).
pub struct WeightTables {
    pub stencils: Vec<Option<[Stencil; 2]>>,
    pub weights: Vec<Option<[FitWeights; 2]>>,
}

impl WeightTables {
    pub fn build(mesh: &Mesh) -> Result<WeightTables> {
        let stencils = build_all(mesh)?;
        let weights = stencils
            .iter()
            .map(|pair| {
                pair.as_ref()
                    .map(|[a, b]| [fit_stencil(a, mesh), fit_stencil(b, mesh)])
            })
            .collect();
        Ok(WeightTables { stencils, weights })
    }

    pub fn fallback_count(&self) -> usize {
        self.weights
            .iter()
            .flatten()
            .flatten()
            .filter(|w| w.fallback)
            .count()
    }
}

/// Boundary value of phi at a boundary face.
fn boundary_value(mesh: &Mesh, phi: &[f64], face: usize) -> f64 {
    match mesh.patch_of_face(face).map(|p| &p.bc) {
        Some(BcKind::FixedValue(v)) => *v,
        _ => phi[mesh.faces[face].owner],
    }
}

/// phi_F per face with the cubicFit scheme (Eq. 11): the weight table for
/// the upwind side selected by the flux sign.
pub fn face_value_cubic_fit(
    mesh: &Mesh,
    tables: &WeightTables,
    flux: &[f64],
    phi: &[f64],
) -> Vec<f64> {
    (0..mesh.faces.len())
        .map(|f| match &tables.weights[f] {
            None => boundary_value(mesh, phi, f),
            Some(pair) => {
                let dir = if flux[f] >= 0.0 { 0 } else { 1 };
                let st = &tables.stencils[f].as_ref().unwrap()[dir];
                let w = &pair[dir].weights;
                st.points
                    .iter()
                    .zip(w)
                    .map(|(&(loc, _), wi)| {
                        wi * match loc {
                            PointLoc::Cell(c) => phi[c],
                            PointLoc::BoundaryFace(bf) => boundary_value(mesh, phi, bf),
                        }
                    })
                    .sum()
            }
        })
        .collect()
}

/// Cell-centred gradient by Gauss' theorem (Eq. 15); face values are
/// distance-weighted interpolants, boundary values per the BC.
pub fn gauss_gradient(mesh: &Mesh, phi: &[f64]) -> Vec<Vec3> {
    let mut grad = vec![Vec3::zeros(); mesh.n_cells];
    for (f, face) in mesh.faces.iter().enumerate() {
        let phi_f = match face.neighbour {
            Some(nei) => {
                let nf = mesh.face_area[f].normalize();
                let do_ = (mesh.face_centre[f] - mesh.cell_centre[face.owner]).dot(&nf).abs();
                let dn = (mesh.face_centre[f] - mesh.cell_centre[nei]).dot(&nf).abs();
                let lam = dn / (do_ + dn);
                lam * phi[face.owner] + (1.0 - lam) * phi[nei]
            }
            None => boundary_value(mesh, phi, f),
        };
        grad[face.owner] += mesh.face_area[f] * phi_f;
        if let Some(nei) = face.neighbour {
            grad[nei] -= mesh.face_area[f] * phi_f;
        }
    }
    for c in 0..mesh.n_cells {
        grad[c] /= mesh.cell_volume[c];
    }
    grad
}

/// phi_F per face with the linearUpwind scheme (Eq. 14):
/// phi_F = phi_u + grad phi_u . (x_f - x_u).
pub fn face_value_linear_upwind(mesh: &Mesh, flux: &[f64], phi: &[f64]) -> Vec<f64> {
    let grad = gauss_gradient(mesh, phi);
    (0..mesh.faces.len())
        .map(|f| match mesh.faces[f].neighbour {
            None => boundary_value(mesh, phi, f),
            Some(nei) => {
                let up = if flux[f] >= 0.0 { mesh.faces[f].owner } else { nei };
                phi[up] + grad[up].dot(&(mesh.face_centre[f] - mesh.cell_centre[up]))
            }
        })
        .collect()
}

fn face_values(
    mesh: &Mesh,
    scheme: Scheme,
    tables: Option<&WeightTables>,
    flux: &[f64],
    phi: &[f64],
) -> Vec<f64> {
    match scheme {
        Scheme::CubicFit => face_value_cubic_fit(mesh, tables.unwrap(), flux, phi),
        Scheme::LinearUpwind => face_value_linear_upwind(mesh, flux, phi),
    }
}

/// g(phi) = -div(u phi) per cell (Eq. 3).
pub fn divergence_rhs(mesh: &Mesh, flux: &[f64], phi_f: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; mesh.n_cells];
    for (f, face) in mesh.faces.iter().enumerate() {
        let q = flux[f] * phi_f[f];
        g[face.owner] -= q;
        if let Some(nei) = face.neighbour {
            g[nei] += q;
        }
    }
    for c in 0..mesh.n_cells {
        g[c] /= mesh.cell_volume[c];
    }
    g
}

pub struct Integrator<'a> {
    pub mesh: &'a Mesh,
    pub scheme: Scheme,
    pub tables: Option<&'a WeightTables>,
    pub flux: &'a FluxField,
}

impl Integrator<'_> {
    fn rhs(&self, phi: &[f64], t: f64) -> Vec<f64> {
        let flux = self.flux.at(t);
        let phi_f = face_values(self.mesh, self.scheme, self.tables, &flux, phi);
        divergence_rhs(self.mesh, &flux, &phi_f)
    }

    /// One Heun (RK2 trapezoidal) step (Eq. 2); stage 2 evaluates the flux
    /// at t + dt.
    pub fn heun_step(&self, phi: &mut Vec<f64>, t: f64, dt: f64) -> Result<()> {
        let g1 = self.rhs(phi, t);
        let star: Vec<f64> = phi.iter().zip(&g1).map(|(p, g)| p + dt * g).collect();
        let g2 = self.rhs(&star, t + dt);
        for c in 0..phi.len() {
            phi[c] += dt / 2.0 * (g1[c] + g2[c]);
            if !phi[c].is_finite() {
                return Err(Error::BlowUp { time: t + dt, cell: c });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiagRow {
    pub t: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub max_co: f64,
}

pub struct RunResult {
    pub phi: Vec<f64>,
    pub diags: Vec<DiagRow>,
}

pub struct RunOptions {
    pub t_end: f64,
    pub dt: f64,
    pub output_every: usize,
    /// Abort (as a blow-up) when max|phi| exceeds this multiple of the
    /// initial max; disabled when None.
    pub growth_limit: Option<f64>,
}

pub fn run_simulation(
    integ: &Integrator,
    phi0: &[f64],
    opts: &RunOptions,
) -> Result<RunResult> {
    let mesh = integ.mesh;
    let mut phi = phi0.to_vec();
    let mut t = 0.0;
    let mut step = 0usize;
    let mut diags = Vec::new();
    let phi0_max = phi0.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let diag = |phi: &[f64], t: f64| {
        let flux = integ.flux.at(t);
        let co = courant_field(mesh, &flux, opts.dt);
        let mass: f64 = phi.iter().zip(&mesh.cell_volume).map(|(p, v)| p * v).sum();
        DiagRow {
            t,
            mass,
            min: phi.iter().cloned().fold(f64::MAX, f64::min),
            max: phi.iter().cloned().fold(f64::MIN, f64::max),
            max_co: co.iter().cloned().fold(0.0, f64::max),
        }
    };
    diags.push(diag(&phi, 0.0));
    while t < opts.t_end - 1e-9 * opts.dt {
        let dt = opts.dt.min(opts.t_end - t);
        integ.heun_step(&mut phi, t, dt)?;
        t += dt;
        step += 1;
        if let Some(limit) = opts.growth_limit {
            let m = phi.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if m > limit * phi0_max {
                return Err(Error::BlowUp { time: t, cell: 0 });
            }
        }
        if step % opts.output_every == 0 || t >= opts.t_end - 1e-9 * opts.dt {
            diags.push(diag(&phi, t));
        }
    }
    Ok(RunResult { phi, diags })
}

/// Longest stable time-step by bisection (§3.2, Fig. 9a): grows from a
/// known-stable dt until instability (or `cap`), then bisects to 5 %
/// relative width. The caller's closure decides what counts as stable.
pub fn find_max_stable_dt<F>(dt_stable: f64, cap: f64, mut stable: F) -> f64
where
    F: FnMut(f64) -> bool,
{
    let mut lo = dt_stable;
    let mut hi = dt_stable;
    loop {
        let trial = (hi * 2.0).min(cap);
        if stable(trial) {
            lo = trial;
            hi = trial;
            if trial >= cap {
                return cap;
            }
        } else {
            hi = trial;
            break;
        }
    }
    while (hi - lo) / lo > 0.05 {
        let mid = (lo + hi) / 2.0;
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::{gen_btf, gen_uniform, DomainSpec};
    use crate::terrain::TerrainProfile;
    use approx::assert_relative_eq;

    fn spec() -> DomainSpec {
        DomainSpec {
            width: 40_000.0,
            height: 20_000.0,
            dx: 2000.0,
            dz: 1000.0,
        }
    }

    fn uniform_flux(m: &crate::Mesh, u0: f64) -> Vec<f64> {
        (0..m.faces.len()).map(|f| u0 * m.face_area[f].x).collect()
    }

    #[test]
    fn constant_field_constant_face_values() {
        let m = gen_btf(&spec(), &TerrainProfile::new(4000.0)).unwrap();
        let tables = WeightTables::build(&m).unwrap();
        let flux = uniform_flux(&m, 10.0);
        let phi = vec![2.5; m.n_cells];
        let cf = face_value_cubic_fit(&m, &tables, &flux, &phi);
        let lu = face_value_linear_upwind(&m, &flux, &phi);
        // the Dirichlet inlet (phi = 0) influences faces near x = -20 km,
        // so restrict the check to the rest of the domain
        for f in 0..m.faces.len() {
            if m.is_boundary(f) || m.face_centre[f].x < -10_000.0 {
                continue;
            }
            assert_relative_eq!(cf[f], 2.5, max_relative = 1e-12);
            assert_relative_eq!(lu[f], 2.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn linear_field_exact_in_interior() {
        let m = gen_uniform(&spec()).unwrap();
        let tables = WeightTables::build(&m).unwrap();
        let flux = uniform_flux(&m, 10.0);
        let lin = |p: &Vec3| 1.0 + 3e-4 * p.x - 2e-4 * p.z;
        let phi: Vec<f64> = m.cell_centre.iter().map(lin).collect();
        let cf = face_value_cubic_fit(&m, &tables, &flux, &phi);
        let lu = face_value_linear_upwind(&m, &flux, &phi);
        for f in 0..m.faces.len() {
            let c = m.face_centre[f];
            if m.is_boundary(f) || c.x.abs() > 12_000.0 || c.z < 3000.0 || c.z > 17_000.0 {
                continue;
            }
            assert_relative_eq!(cf[f], lin(&c), max_relative = 1e-10);
            assert_relative_eq!(lu[f], lin(&c), max_relative = 1e-10);
        }
    }

    #[test]
    fn divergence_of_constant_is_zero() {
        let m = gen_btf(&spec(), &TerrainProfile::new(4000.0)).unwrap();
        let flux = uniform_flux(&m, 10.0);
        let phi_f = vec![3.0; m.faces.len()];
        let g = divergence_rhs(&m, &flux, &phi_f);
        let scale = 10.0 * 3.0 / 2000.0;
        for gc in g {
            assert!(gc.abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn zero_flux_is_identity() {
        let m = gen_uniform(&spec()).unwrap();
        let tables = WeightTables::build(&m).unwrap();
        let flux = FluxField::Steady(vec![0.0; m.faces.len()]);
        let integ = Integrator {
            mesh: &m,
            scheme: Scheme::CubicFit,
            tables: Some(&tables),
            flux: &flux,
        };
        let phi0: Vec<f64> = (0..m.n_cells).map(|c| c as f64).collect();
        let res = run_simulation(
            &integ,
            &phi0,
            &RunOptions { t_end: 100.0, dt: 10.0, output_every: 100, growth_limit: None },
        )
        .unwrap();
        assert_eq!(res.phi, phi0);
    }

    #[test]
    fn heun_scalar_amplification() {
        // dphi/dt = lambda phi via a hand-built rhs: Heun gives
        // 1 + z + z^2/2 per step. Emulate with a 1-cell "mesh" shortcut by
        // checking the update formula directly.
        let lambda = -0.3;
        let dt = 0.5;
        let phi = 1.0;
        let g1: f64 = lambda * phi;
        let star = phi + dt * g1;
        let g2 = lambda * star;
        let next = phi + dt / 2.0 * (g1 + g2);
        let z = lambda * dt;
        assert_relative_eq!(next, 1.0 + z + z * z / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn find_max_dt_matches_threshold() {
        let dt = find_max_stable_dt(0.1, 100.0, |dt| dt <= 7.3);
        assert!(dt <= 7.3 && dt > 7.3 * 0.93);
        assert_eq!(find_max_stable_dt(1.0, 16.0, |_| true), 16.0);
    }
}
