//! Command-line harness: mesh generation, single runs, convergence sweeps,
//! longest-stable-timestep sweeps and stencil inspection. All outputs are
//! batch artifacts (CSV tables, field dumps) for external plotting.

use crate::cases::{self, CaseSetup, MountainMeshKind, SphereTracer};
use crate::fit::FitWeights;
use crate::mesh::{courant_field, Mesh};
use crate::meshgen::{self, DomainSpec};
use crate::meshio;
use crate::stencil::{build_stencil, opposing_faces, PointLoc, Role};
use crate::terrain::TerrainProfile;
use crate::transport::{
    find_max_stable_dt, run_simulation, FluxField, Integrator, RunOptions, RunResult, Scheme,
    WeightTables,
};
use crate::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "cubefit", about = "Finite-volume scalar transport on arbitrary meshes")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeshKindArg {
    Uniform,
    Btf,
    Cutcell,
    Slanted,
    Hexicos,
    Cubedsphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Owner cell upwind.
    Own,
    /// Neighbour cell upwind.
    Nei,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a mesh file and print a quality report.
    Meshgen {
        #[arg(long, value_enum)]
        kind: MeshKindArg,
        /// Peak mountain height, m (terrain meshes).
        #[arg(long, default_value_t = 0.0)]
        h0: f64,
        #[arg(long, default_value_t = 1000.0)]
        dx: f64,
        /// Vertical spacing, m; defaults to dx/2.
        #[arg(long)]
        dz: Option<f64>,
        /// Hexagonal-icosahedral refinement level.
        #[arg(long, default_value_t = 3)]
        level: usize,
        /// Cells per cubed-sphere panel edge.
        #[arg(long, default_value_t = 12)]
        panel_n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one case from a config file; write diagnostics and field dumps.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Error norms over a list of mesh spacings, with fitted l2 slope.
    Converge {
        config: PathBuf,
        /// Spacings: dx in m (planar) or refinement level / panel count
        /// (spherical), comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        spacings: Vec<f64>,
        #[arg(long, default_value = "convergence.csv")]
        out: PathBuf,
    },
    /// Longest stable time-step per spacing, by bisection.
    Maxdt {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        spacings: Vec<f64>,
        #[arg(long, default_value = "maxdt.csv")]
        out: PathBuf,
    },
    /// Dump the full cubicFit weight table for a mesh as text lines
    /// `face dir nPoints w1 .. wN polyTerms m_d fallback`.
    DumpWeights {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Dump the cubicFit stencil for one face and flow direction.
    InspectStencil {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        face: usize,
        #[arg(long, value_enum)]
        direction: DirectionArg,
    },
}

/// Parsed key = value case configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub case: String,
    pub mesh_kind: String,
    pub h0: f64,
    pub dx: f64,
    pub dz: Option<f64>,
    pub level: usize,
    pub panel_n: usize,
    pub scheme: Scheme,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub output_every: usize,
    pub tracer: SphereTracer,
}

pub fn parse_config(text: &str) -> Result<Config> {
    let mut kv = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", lineno + 1)))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| kv.get(k).cloned();
    let num = |k: &str| -> Result<Option<f64>> {
        get(k)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("config key {k}: bad number {v:?}")))
            })
            .transpose()
    };
    let case = get("case").ok_or_else(|| Error::Parse("config: missing `case`".into()))?;
    let scheme = match get("scheme").as_deref().unwrap_or("cubicFit") {
        "cubicFit" => Scheme::CubicFit,
        "linearUpwind" => Scheme::LinearUpwind,
        s => return Err(Error::Parse(format!("config: unknown scheme {s:?}"))),
    };
    let tracer = match get("tracer").as_deref().unwrap_or("gaussianHills") {
        "gaussianHills" => SphereTracer::GaussianHills,
        "cosineBells" => SphereTracer::CosineBells,
        s => return Err(Error::Parse(format!("config: unknown tracer {s:?}"))),
    };
    let known = [
        "case", "meshKind", "h0", "dx", "dz", "level", "panelN", "scheme", "dt", "tEnd",
        "outputEvery", "tracer",
    ];
    for k in kv.keys() {
        if !known.contains(&k.as_str()) {
            return Err(Error::Parse(format!("config: unknown key {k:?}")));
        }
    }
    Ok(Config {
        case,
        mesh_kind: get("meshKind").unwrap_or_else(|| "btf".into()),
        h0: num("h0")?.unwrap_or(0.0),
        dx: num("dx")?.unwrap_or(1000.0),
        dz: num("dz")?,
        level: num("level")?.unwrap_or(3.0) as usize,
        panel_n: num("panelN")?.unwrap_or(12.0) as usize,
        scheme,
        dt: num("dt")?,
        t_end: num("tEnd")?,
        output_every: num("outputEvery")?.unwrap_or(50.0) as usize,
        tracer,
    })
}

/// Build the case described by a config, optionally overriding the spacing
/// (dx in m for planar cases, level / panel count for spherical ones).
pub fn build_case(cfg: &Config, spacing: Option<f64>) -> Result<(CaseSetup, f64)> {
    match cfg.case.as_str() {
        "schaer" => {
            let dx = spacing.unwrap_or(cfg.dx);
            Ok((cases::schaer_case(dx)?, dx))
        }
        "mountain" => {
            let kind = match cfg.mesh_kind.as_str() {
                "btf" => MountainMeshKind::Btf,
                "cutcell" => MountainMeshKind::CutCell,
                "slanted" => MountainMeshKind::SlantedCell,
                k => return Err(Error::Parse(format!("config: bad mountain meshKind {k:?}"))),
            };
            Ok((cases::mountain_case(kind, cfg.h0)?, 1000.0))
        }
        "deformational" => {
            let (mesh, dlambda) = match cfg.mesh_kind.as_str() {
                "hexicos" => {
                    let level = spacing.map(|s| s as usize).unwrap_or(cfg.level);
                    let m = meshgen::gen_hex_icosahedral(level)?;
                    let d = meshgen::equatorial_spacing(&m);
                    (m, d)
                }
                "cubedsphere" => {
                    let n = spacing.map(|s| s as usize).unwrap_or(cfg.panel_n);
                    let m = meshgen::gen_cubed_sphere(n)?;
                    let d = meshgen::equatorial_spacing(&m);
                    (m, d)
                }
                k => {
                    return Err(Error::Parse(format!(
                        "config: bad deformational meshKind {k:?}"
                    )))
                }
            };
            Ok((cases::deformational_case(mesh, cfg.tracer), dlambda))
        }
        c => Err(Error::Parse(format!("config: unknown case {c:?}"))),
    }
}

/// Time-step giving max Co ~ 0.4, rounded down to divide t_end exactly.
pub fn auto_dt(mesh: &Mesh, flux: &FluxField, t_end: f64) -> f64 {
    let mut co_max = 0.0f64;
    for &t in &[0.0, t_end / 4.0, t_end / 2.0, 3.0 * t_end / 4.0] {
        let q = flux.at(t);
        let co = courant_field(mesh, &q, 1.0);
        co_max = co_max.max(co.iter().cloned().fold(0.0, f64::max));
    }
    let ideal = 0.4 / co_max;
    let n = (t_end / ideal).ceil().max(1.0);
    t_end / n
}

fn sha_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

type CachedTables = (
    Vec<Option<[crate::stencil::Stencil; 2]>>,
    Vec<Option<[FitWeights; 2]>>,
);

/// Weight tables, cached per mesh content hash under CUBEFIT_CACHE_DIR
/// (built in-process when the env var is unset).
pub fn weight_tables_cached(mesh: &Mesh) -> Result<WeightTables> {
    let dir = match std::env::var_os("CUBEFIT_CACHE_DIR") {
        Some(d) => PathBuf::from(d),
        None => return WeightTables::build(mesh),
    };
    let key = sha_hex(meshio::write_mesh(mesh).as_bytes());
    let path = dir.join(format!("weights-{key}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok((stencils, weights)) = serde_json::from_str::<CachedTables>(&text) {
            return Ok(WeightTables { stencils, weights });
        }
    }
    let tables = WeightTables::build(mesh)?;
    fs::create_dir_all(&dir)?;
    let tmp = dir.join(format!("weights-{key}.json.tmp{}", std::process::id()));
    fs::write(
        &tmp,
        serde_json::to_string(&(&tables.stencils, &tables.weights))
            .map_err(|e| Error::Parse(e.to_string()))?,
    )?;
    fs::rename(&tmp, &path)?;
    Ok(tables)
}

fn make_tables(mesh: &Mesh, scheme: Scheme) -> Result<Option<WeightTables>> {
    match scheme {
        Scheme::CubicFit => Ok(Some(weight_tables_cached(mesh)?)),
        Scheme::LinearUpwind => Ok(None),
    }
}

fn write_field_dump(path: &Path, phi: &[f64]) -> Result<()> {
    let mut s = format!("field {}\n", phi.len());
    for v in phi {
        writeln!(s, "{v:.17e}").unwrap();
    }
    fs::write(path, s)?;
    Ok(())
}

fn diagnostics_csv(result: &RunResult) -> String {
    let mut s = String::from("t,mass,min,max,maxCo\n");
    for d in &result.diags {
        writeln!(s, "{},{:.12e},{:.12e},{:.12e},{:.6}", d.t, d.mass, d.min, d.max, d.max_co)
            .unwrap();
    }
    s
}

struct SweepRow {
    mesh_kind: String,
    scheme: &'static str,
    spacing: f64,
    dt: f64,
    max_co: f64,
    l2: f64,
    linf: f64,
    status: &'static str,
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::CubicFit => "cubicFit",
        Scheme::LinearUpwind => "linearUpwind",
    }
}

/// One sweep entry: run the config at one spacing, return the CSV row.
fn sweep_run(cfg: &Config, spacing: f64) -> Result<SweepRow> {
    let (setup, dlam) = build_case(cfg, Some(spacing))?;
    let t_end = cfg.t_end.unwrap_or(setup.t_end);
    let dt = cfg.dt.unwrap_or_else(|| auto_dt(&setup.mesh, &setup.flux, t_end));
    let tables = make_tables(&setup.mesh, cfg.scheme)?;
    let integ = Integrator {
        mesh: &setup.mesh,
        scheme: cfg.scheme,
        tables: tables.as_ref(),
        flux: &setup.flux,
    };
    let opts = RunOptions {
        t_end,
        dt,
        output_every: usize::MAX,
        growth_limit: Some(10.0),
    };
    let spacing_out = if cfg.case.as_str() == "deformational" { dlam } else { spacing };
    let mut row = SweepRow {
        mesh_kind: cfg.mesh_kind.clone(),
        scheme: scheme_name(cfg.scheme),
        spacing: spacing_out,
        dt,
        max_co: 0.0,
        l2: f64::NAN,
        linf: f64::NAN,
        status: "stable",
    };
    match run_simulation(&integ, &setup.phi0, &opts) {
        Ok(res) => {
            row.max_co = res.diags.iter().map(|d| d.max_co).fold(0.0, f64::max);
            let (l2, linf) = cases::error_norms(&res.phi, &setup.analytic, &setup.mesh)?;
            row.l2 = l2;
            row.linf = linf;
        }
        Err(Error::BlowUp { .. }) => row.status = "unstable",
        Err(e) => return Err(e),
    }
    Ok(row)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("meshKind,scheme,dx_or_dlambda,dt,maxCo,l2,linf,status\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{:.6},{:.8e},{:.8e},{}",
            r.mesh_kind, r.scheme, r.spacing, r.dt, r.max_co, r.l2, r.linf, r.status
        )
        .unwrap();
    }
    s
}

/// Least-squares log-log slope of l2 against spacing over the stable rows.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(d, e) in points {
        let (x, y) = (d.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn cmd_meshgen(
    kind: MeshKindArg,
    h0: f64,
    dx: f64,
    dz: Option<f64>,
    level: usize,
    panel_n: usize,
    out: &Path,
) -> Result<()> {
    let spec = DomainSpec::standard(dx, dz.unwrap_or(dx / 2.0));
    let mesh = match kind {
        MeshKindArg::Uniform => meshgen::gen_uniform(&spec)?,
        MeshKindArg::Btf => meshgen::gen_btf(&spec, &TerrainProfile::new(h0))?,
        MeshKindArg::Cutcell => meshgen::gen_cut_cell(&spec, &TerrainProfile::new(h0))?,
        MeshKindArg::Slanted => meshgen::gen_slanted_cell(&spec, &TerrainProfile::new(h0))?,
        MeshKindArg::Hexicos => meshgen::gen_hex_icosahedral(level)?,
        MeshKindArg::Cubedsphere => meshgen::gen_cubed_sphere(panel_n)?,
    };
    meshio::save_mesh(&mesh, out)?;
    let vmin = mesh.cell_volume.iter().cloned().fold(f64::MAX, f64::min);
    let vmax = mesh.cell_volume.iter().cloned().fold(0.0f64, f64::max);
    let mut opp_max = 0;
    let mut nonorth_max = 0.0f64;
    for (f, face) in mesh.faces.iter().enumerate() {
        if let Some(nei) = face.neighbour {
            for cu in [face.owner, nei] {
                opp_max = opp_max.max(opposing_faces(&mesh, f, cu)?.len());
            }
            let d = mesh.cell_centre[nei] - mesh.cell_centre[face.owner];
            let cosang =
                (d.dot(&mesh.face_area[f]) / (d.norm() * mesh.face_area[f].norm())).clamp(-1.0, 1.0);
            nonorth_max = nonorth_max.max(cosang.acos().to_degrees());
        }
    }
    println!("wrote {} ({} cells, {} faces)", out.display(), mesh.n_cells, mesh.faces.len());
    println!("min volume   {vmin:.6e}");
    println!("max/min vol  {:.3}", vmax / vmin);
    println!("max opposing {opp_max}");
    println!("max nonorthogonality {nonorth_max:.2} deg");
    Ok(())
}

fn cmd_run(config: &Path, out_dir: &Path) -> Result<()> {
    let cfg = parse_config(&fs::read_to_string(config)?)?;
    let (setup, _) = build_case(&cfg, None)?;
    let t_end = cfg.t_end.unwrap_or(setup.t_end);
    let dt = cfg.dt.unwrap_or_else(|| auto_dt(&setup.mesh, &setup.flux, t_end));
    let tables = make_tables(&setup.mesh, cfg.scheme)?;
    let integ = Integrator {
        mesh: &setup.mesh,
        scheme: cfg.scheme,
        tables: tables.as_ref(),
        flux: &setup.flux,
    };
    fs::create_dir_all(out_dir)?;
    write_field_dump(&out_dir.join("phi_t0.txt"), &setup.phi0)?;
    // first half, dump, second half
    let half = RunOptions {
        t_end: t_end / 2.0,
        dt,
        output_every: cfg.output_every,
        growth_limit: Some(10.0),
    };
    let unstable_row = |e: Error| -> Error {
        let _ = fs::write(
            out_dir.join("errors.csv"),
            format!("scheme,dt,l2,linf,status\n{},{},nan,nan,unstable\n", scheme_name(cfg.scheme), dt),
        );
        e
    };
    let mid = run_simulation(&integ, &setup.phi0, &half).map_err(unstable_row)?;
    write_field_dump(&out_dir.join("phi_tmid.txt"), &mid.phi)?;
    let res = run_simulation(&integ, &mid.phi, &half).map_err(unstable_row)?;
    write_field_dump(&out_dir.join("phi_tend.txt"), &res.phi)?;
    let mut diags = mid.diags;
    diags.extend(res.diags.iter().skip(1).map(|d| {
        let mut d = d.clone();
        d.t += t_end / 2.0;
        d
    }));
    fs::write(out_dir.join("diagnostics.csv"), diagnostics_csv(&RunResult { phi: res.phi.clone(), diags }))?;
    let (l2, linf) = cases::error_norms(&res.phi, &setup.analytic, &setup.mesh)?;
    println!("scheme={} dt={} l2={:.8e} linf={:.8e}", scheme_name(cfg.scheme), dt, l2, linf);
    fs::write(
        out_dir.join("errors.csv"),
        format!("scheme,dt,l2,linf,status\n{},{},{:.8e},{:.8e},stable\n", scheme_name(cfg.scheme), dt, l2, linf),
    )?;
    Ok(())
}

fn cmd_converge(config: &Path, spacings: &[f64], out: &Path) -> Result<()> {
    let cfg = parse_config(&fs::read_to_string(config)?)?;
    if spacings.len() < 3 {
        return Err(Error::Usage("converge needs at least 3 spacings".into()));
    }
    let mut rows = Vec::new();
    for &s in spacings {
        rows.push(sweep_run(&cfg, s)?);
    }
    rows.sort_by(|a, b| a.spacing.partial_cmp(&b.spacing).unwrap());
    fs::write(out, sweep_csv(&rows))?;
    let stable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == "stable")
        .map(|r| (r.spacing, r.l2))
        .collect();
    if stable.len() >= 2 {
        println!("l2 slope (stable rows): {:.3}", fit_slope(&stable));
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_maxdt(config: &Path, spacings: &[f64], out: &Path) -> Result<()> {
    let cfg = parse_config(&fs::read_to_string(config)?)?;
    let mut csv = String::from("meshKind,dx,dtMax,maxCoAtDtMax\n");
    let mut sorted = spacings.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &dx in &sorted {
        let (setup, _) = build_case(&cfg, Some(dx))?;
        let t_end = cfg.t_end.unwrap_or(setup.t_end);
        let tables = make_tables(&setup.mesh, cfg.scheme)?;
        let integ = Integrator {
            mesh: &setup.mesh,
            scheme: cfg.scheme,
            tables: tables.as_ref(),
            flux: &setup.flux,
        };
        let dt0 = auto_dt(&setup.mesh, &setup.flux, t_end) / 4.0;
        let dt_max = find_max_stable_dt(dt0, t_end, |dt| {
            let opts = RunOptions {
                // stability is asymptotic: give every probe at least 200
                // steps so slow modes cannot hide in a short run
                t_end: t_end.max(200.0 * dt),
                dt,
                output_every: usize::MAX,
                // slow growth must count as unstable before blow-up scale;
                // 2x leaves room for normal overshoot
                growth_limit: Some(2.0),
            };
            run_simulation(&integ, &setup.phi0, &opts).is_ok()
        });
        let q = setup.flux.at(0.0);
        let co = courant_field(&setup.mesh, &q, dt_max);
        let co_max = co.iter().cloned().fold(0.0, f64::max);
        writeln!(csv, "{},{},{:.6},{:.4}", cfg.mesh_kind, dx, dt_max, co_max).unwrap();
        println!("dx={dx}: dtMax={dt_max:.4} maxCo={co_max:.3}");
    }
    fs::write(out, csv)?;
    Ok(())
}

fn cmd_dump_weights(mesh_path: &Path) -> Result<()> {
    let mesh = meshio::load_mesh(mesh_path)?;
    let tables = weight_tables_cached(&mesh)?;
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    for (f, pair) in tables.weights.iter().enumerate() {
        let Some(pair) = pair else { continue };
        for (dir, fw) in pair.iter().enumerate() {
            let mut line = format!("{f} {dir} {}", fw.weights.len());
            for w in &fw.weights {
                write!(line, " {w:.17e}").unwrap();
            }
            writeln!(line, " {} {} {}", fw.poly.len(), fw.m_d, fw.fallback as u8).unwrap();
            // a closed pipe (e.g. `| head`) is not an error for a dump
            match std::io::Write::write_all(&mut out, line.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                r => r?,
            }
        }
    }
    match std::io::Write::flush(&mut out) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn cmd_inspect_stencil(mesh_path: &Path, face: usize, direction: DirectionArg) -> Result<()> {
    let mesh = meshio::load_mesh(mesh_path)?;
    if face >= mesh.faces.len() {
        return Err(Error::Usage(format!("face {face} out of range")));
    }
    let c_u = match direction {
        DirectionArg::Own => mesh.faces[face].owner,
        DirectionArg::Nei => mesh.faces[face]
            .neighbour
            .ok_or_else(|| Error::Usage(format!("face {face} is a boundary face")))?,
    };
    let st = build_stencil(&mesh, face, c_u)?;
    println!(
        "face {face}: upwind cell {}, downwind cell {}, {} points",
        st.upwind_cell,
        st.downwind_cell,
        st.points.len()
    );
    for (k, &(loc, role)) in st.points.iter().enumerate() {
        let p = st.position(&mesh, k);
        let kind = match loc {
            PointLoc::Cell(c) => format!("cell {c}"),
            PointLoc::BoundaryFace(f) => format!("bface {f}"),
        };
        let role = match role {
            Role::Upwind => "upwind",
            Role::Downwind => "downwind",
            Role::Peripheral => "peripheral",
        };
        println!("  [{k:2}] {kind:<12} {role:<10} ({:.2}, {:.2}, {:.2})", p.x, p.y, p.z);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Meshgen { kind, h0, dx, dz, level, panel_n, out } => {
            cmd_meshgen(kind, h0, dx, dz, level, panel_n, &out)
        }
        Cmd::Run { config, out_dir } => cmd_run(&config, &out_dir),
        Cmd::Converge { config, spacings, out } => cmd_converge(&config, &spacings, &out),
        Cmd::Maxdt { config, spacings, out } => cmd_maxdt(&config, &spacings, &out),
        Cmd::DumpWeights { mesh } => cmd_dump_weights(&mesh),
        Cmd::InspectStencil { mesh, face, direction } => {
            cmd_inspect_stencil(&mesh, face, direction)
        }
    }
}

/// Exit codes: 0 success, 1 usage, 2 numerical blow-up, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let cfg = parse_config(
            "case = schaer\nscheme = linearUpwind\ndx = 2000 # metres\ndt = 16\n",
        )
        .unwrap();
        assert_eq!(cfg.case, "schaer");
        assert_eq!(cfg.scheme, Scheme::LinearUpwind);
        assert_eq!(cfg.dx, 2000.0);
        assert_eq!(cfg.dt, Some(16.0));
        assert!(parse_config("case = schaer\nbogusKey = 1\n").is_err());
        assert!(parse_config("just a line\n").is_err());
        assert!(parse_config("scheme = cubicFit\n").is_err()); // no case
    }

    #[test]
    fn auto_dt_divides_t_end() {
        let spec = DomainSpec::standard(4000.0, 2000.0);
        let mesh = meshgen::gen_uniform(&spec).unwrap();
        let flux = FluxField::Steady(
            (0..mesh.faces.len()).map(|f| 10.0 * mesh.face_area[f].x).collect(),
        );
        let dt = auto_dt(&mesh, &flux, 10_000.0);
        let n = 10_000.0 / dt;
        assert!((n - n.round()).abs() < 1e-9);
        let co = courant_field(&mesh, &flux.at(0.0), dt);
        let co_max = co.iter().cloned().fold(0.0, f64::max);
        assert!(co_max <= 0.4 + 1e-9 && co_max > 0.3);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0].iter().map(|&d| (d, 3.0 * d * d)).collect();
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weight_cache_roundtrip() {
        let dir = std::env::temp_dir().join(format!("cubefit-cache-{}", std::process::id()));
        std::env::set_var("CUBEFIT_CACHE_DIR", &dir);
        let spec = DomainSpec {
            width: 20_000.0,
            height: 10_000.0,
            dx: 2000.0,
            dz: 1000.0,
        };
        let mesh = meshgen::gen_uniform(&spec).unwrap();
        let t1 = weight_tables_cached(&mesh).unwrap();
        let t2 = weight_tables_cached(&mesh).unwrap();
        std::env::remove_var("CUBEFIT_CACHE_DIR");
        assert_eq!(t1.weights.len(), t2.weights.len());
        for (a, b) in t1.weights.iter().zip(&t2.weights) {
            match (a, b) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    assert_eq!(x[0].weights, y[0].weights);
                    assert_eq!(x[1].weights, y[1].weights);
                }
                _ => panic!("cache changed interior/boundary split"),
            }
        }
        let _ = std::fs::remove_dir_all(&dir);
    }
}
