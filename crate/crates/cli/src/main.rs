//! Command-line front end: sampling, harmonic decomposition, norms, locus
//! topology, and the Monte Carlo experiment harness.
//!
//! Exit codes: 0 success, 1 unresolved result under --strict, 2 usage or
//! parse error, 3 internal numerical or i/o failure.

mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use kostlan_core::jet::SingularityType;
use kostlan_core::mesh::SphereMesh;
use kostlan_core::{
    cr_norm_estimate, critical_points_s2, curve_components_s2, decompose, l2_norm, sobolev_norm,
    zeros_on_circle, Error, HomogeneousPoly, Manifest, PolySystem, SphereFunction,
};

use config::ExperimentKind;

#[derive(Parser)]
#[command(name = "kostlan", version, about = "Random polynomial systems on spheres: sampling, harmonics, jets, topology, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw Kostlan random polynomials and write them as JSON files.
    Sample {
        /// Sphere dimension n (the polynomials have n+1 variables).
        #[arg(long)]
        n: usize,
        /// Degree.
        #[arg(long)]
        d: usize,
        /// Number of polynomials.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a polynomial into harmonic parts.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Write the harmonic parts as a sphere-function JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the invariant norms of a polynomial.
    Norms {
        #[arg(long)]
        input: PathBuf,
        /// Sobolev exponent.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Jet order of the C^r sup estimate.
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Mesh resolution override: icosphere level on S^2, point count on S^1.
        #[arg(long)]
        mesh_level: Option<usize>,
    },
    /// Extract the type-W singular locus invariants of a polynomial.
    Topology {
        #[arg(long)]
        input: PathBuf,
        /// Singularity type: zero_set | critical_points | minima.
        #[arg(long, default_value = "zero_set")]
        w: String,
        /// Icosphere level for curve extraction on S^2.
        #[arg(long, default_value_t = 4)]
        mesh_level: usize,
        /// Exit with code 1 when the result is unresolved.
        #[arg(long)]
        strict: bool,
    },
    /// Run a configured Monte Carlo experiment.
    Experiment {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// sqrtlog | power | linear | fixed.
        #[arg(long)]
        regime: Option<String>,
        /// Comma-separated schedule coefficients.
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        mesh_level: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Embed per-trial records in the manifest.
        #[arg(long)]
        verbose: bool,
        /// Exit with code 1 when any trial is unresolved.
        #[arg(long)]
        strict: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    };
    std::process::exit(code);
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Unresolved(_) => 1,
        Error::Io(_) | Error::Internal(_) => 3,
        _ => 2,
    }
}

fn read_poly(path: &Path) -> Result<HomogeneousPoly, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("cannot parse {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Sample { n, d, count, seed, out } => cmd_sample(n, d, count, seed, &out),
        Command::Decompose { input, out } => cmd_decompose(&input, out.as_deref()),
        Command::Norms { input, q, r, mesh_level } => cmd_norms(&input, q, r, mesh_level),
        Command::Topology { input, w, mesh_level, strict } => {
            cmd_topology(&input, &w, mesh_level, strict)
        }
        Command::Experiment {
            config,
            seed,
            trials,
            regime,
            b,
            c1,
            mesh_level,
            workers,
            out,
            verbose,
            strict,
        } => {
            let mut file = config::parse_file(&config).map_err(Error::InvalidArgument)?;
            if let Some(v) = seed {
                file.set("seed", v.to_string());
            }
            if let Some(v) = trials {
                file.set("trials", v.to_string());
            }
            if let Some(v) = regime {
                file.set("regime", v);
            }
            if let Some(v) = b {
                file.set("b", v);
            }
            if let Some(v) = c1 {
                file.set("c1", v.to_string());
            }
            if let Some(v) = mesh_level {
                file.set("mesh_level", v.to_string());
            }
            if let Some(v) = workers {
                file.set("workers", v.to_string());
            }
            if let Some(v) = &out {
                file.set("out", v.display().to_string());
            }
            cmd_experiment(&file, verbose, strict)
        }
    }
}

fn cmd_sample(n: usize, d: usize, count: usize, seed: u64, out: &Path) -> Result<i32, Error> {
    if n == 0 {
        return Err(Error::InvalidArgument("sphere dimension must be at least 1".into()));
    }
    // an unwritable destination is a usage error, not an internal failure
    std::fs::create_dir_all(out).map_err(|e| {
        Error::InvalidArgument(format!("cannot create output directory {}: {e}", out.display()))
    })?;
    let mut files = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = kostlan_core::stream::substream(seed, 0, i as u64);
        let poly = kostlan_core::sample_kostlan(n, d, &mut rng);
        let name = format!("poly_{i:04}.json");
        let mut text = serde_json::to_string(&poly)?;
        text.push('\n');
        std::fs::write(out.join(&name), text)?;
        files.push(name);
    }
    let cfg = json!({"n": n, "d": d, "count": count, "seed": seed});
    let mut manifest = Manifest::new("sample", &cfg)?;
    manifest.outputs = files;
    manifest.write(out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "written": count,
            "out": out.display().to_string(),
            "content_hash": manifest.content_hash,
        }))?
    );
    Ok(0)
}

fn cmd_decompose(input: &Path, out: Option<&Path>) -> Result<i32, Error> {
    let poly = read_poly(input)?;
    let dec = decompose(&poly)?;
    let parts: Vec<_> = dec
        .parts()
        .iter()
        .map(|(&l, h)| json!({"l": l, "l2_norm": l2_norm(h)}))
        .collect();
    let function = SphereFunction::from_decomposition(dec);
    if let Some(path) = out {
        let mut text = serde_json::to_string(&function)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    let cfg = json!({"input": input.display().to_string()});
    let manifest = Manifest::new("decompose", &cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "n": poly.sphere_dim(),
            "d": poly.degree(),
            "parts": parts,
            "out": out.map(|p| p.display().to_string()),
            "manifest": manifest,
        }))?
    );
    Ok(0)
}

fn cmd_norms(input: &Path, q: f64, r: usize, mesh_level: Option<usize>) -> Result<i32, Error> {
    let poly = read_poly(input)?;
    let system = PolySystem::single(poly.clone());
    let f = SphereFunction::from_system(&system)?;
    let n = poly.sphere_dim();
    let mesh = match (mesh_level, n) {
        (Some(level), 2) => SphereMesh::icosphere(level)?,
        (Some(k), 1) => SphereMesh::circle(k.max(3))?,
        _ => SphereMesh::for_degree(n, poly.degree().max(1))?,
    };
    let cr = cr_norm_estimate(&system, r, &mesh)?;
    let cfg = json!({
        "input": input.display().to_string(),
        "q": q,
        "r": r,
        "resolution": cr.resolution,
    });
    let manifest = Manifest::new("norms", &cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "n": n,
            "d": poly.degree(),
            "bw_norm": kostlan_core::bw_norm(&poly),
            "l2_norm": l2_norm(&poly),
            "sobolev": {"q": q, "value": sobolev_norm(&f, q)},
            "cr": {"r": r, "value": cr.value, "resolution": cr.resolution},
            "manifest": manifest,
        }))?
    );
    Ok(0)
}

fn cmd_topology(input: &Path, w: &str, mesh_level: usize, strict: bool) -> Result<i32, Error> {
    let poly = read_poly(input)?;
    let w = SingularityType::parse(w)?;
    let system = PolySystem::single(poly.clone());
    let f = SphereFunction::from_system(&system)?;
    let n = poly.sphere_dim();
    let mut unresolved = false;
    let result = match (w, n) {
        (SingularityType::ZeroSet, 1) => match zeros_on_circle(&f) {
            Ok(zeros) => json!({"kind": "circle_zeros", "count": zeros.len(), "angles": zeros}),
            Err(Error::Unresolved(msg)) => {
                unresolved = true;
                json!({"kind": "circle_zeros", "unresolved": msg})
            }
            Err(e) => return Err(e),
        },
        (SingularityType::ZeroSet, 2) => {
            let curve = curve_components_s2(&f, mesh_level)?;
            unresolved = !curve.certified;
            serde_json::to_value(&curve)?
        }
        (SingularityType::CriticalPoints, 2) | (SingularityType::NondegenerateMinima, 2) => {
            let set = critical_points_s2(&f)?;
            unresolved = !set.is_clean();
            json!({
                "kind": "critical_points",
                "counts_by_index": set.counts_by_index,
                "degenerate": set.degenerate_count,
                "minima": set.counts_by_index[0],
                "points": set.points.len(),
            })
        }
        (w, n) => {
            return Err(Error::InvalidArgument(format!(
                "no catalogued invariants for {w:?} on S^{n}"
            )))
        }
    };
    let cfg = json!({
        "input": input.display().to_string(),
        "w": w.name(),
        "mesh_level": mesh_level,
    });
    let manifest = Manifest::new("topology", &cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "w": w.name(),
            "n": n,
            "result": result,
            "manifest": manifest,
        }))?
    );
    Ok(if strict && unresolved { 1 } else { 0 })
}

fn cmd_experiment(file: &config::FileConfig, verbose: bool, strict: bool) -> Result<i32, Error> {
    let out_dir = PathBuf::from(file.out_dir().unwrap_or("kostlan-out"));
    let started = std::time::Instant::now();
    let mut unresolved_total = 0usize;
    match file.kind {
        ExperimentKind::LowDegree => {
            let cfg = file.to_experiment_config().map_err(Error::InvalidArgument)?;
            let report = kostlan_core::run_low_degree_experiment(&cfg)?;
            let csv = report.to_csv();
            let mut manifest = Manifest::new("low_degree", &cfg)?;
            if verbose {
                manifest.trial_records = Some(serde_json::to_value(&report.trial_records)?);
            }
            kostlan_core::experiment::write_output(
                &out_dir,
                "low_degree.csv",
                &csv,
                manifest,
                started.elapsed().as_secs_f64(),
            )?;
            for cell in &report.cells {
                unresolved_total += cell.unresolved;
                println!(
                    "d={} L={} {}: consistent {}/{} [{:.4}, {:.4}] unresolved {}",
                    cell.d,
                    cell.level,
                    cell.schedule,
                    cell.consistent,
                    cell.trials,
                    cell.consistent_rate.lo,
                    cell.consistent_rate.hi,
                    cell.unresolved,
                );
            }
            println!("wrote {}", out_dir.join("low_degree.csv").display());
        }
        ExperimentKind::BettiTail => {
            let cfg = file.to_experiment_config().map_err(Error::InvalidArgument)?;
            let threshold_c = file.threshold_c().map_err(Error::InvalidArgument)?;
            let report = kostlan_core::run_betti_tail(&cfg, threshold_c)?;
            let csv = report.to_csv();
            let manifest = Manifest::new("betti_tail", &cfg)?;
            kostlan_core::experiment::write_output(
                &out_dir,
                "betti_tail.csv",
                &csv,
                manifest,
                started.elapsed().as_secs_f64(),
            )?;
            for cell in &report.cells {
                unresolved_total += cell.unresolved;
                println!(
                    "d={} threshold={} exceed {}/{} mean_stat={:.3}",
                    cell.d, cell.threshold, cell.exceed, cell.resolved, cell.mean_stat
                );
            }
            println!("wrote {}", out_dir.join("betti_tail.csv").display());
        }
        ExperimentKind::Inequality => {
            let cfg = file.to_inequality_config().map_err(Error::InvalidArgument)?;
            let report = kostlan_core::run_inequality_suite(&cfg)?;
            let csv = report.to_csv();
            let manifest = Manifest::new("inequality", &cfg)?;
            kostlan_core::experiment::write_output(
                &out_dir,
                "inequality.csv",
                &csv,
                manifest,
                started.elapsed().as_secs_f64(),
            )?;
            for row in &report.seeley {
                println!(
                    "alpha={:?} beta_hat={:.6} bounded={}",
                    row.alpha, row.beta_hat, row.bounded
                );
            }
            println!(
                "cr_constant_hat={:.6} bounded={} alpha0_exact={}",
                report.cr_constant_hat, report.cr_bounded, report.alpha_zero_exact
            );
            println!("wrote {}", out_dir.join("inequality.csv").display());
        }
    }
    Ok(if strict && unresolved_total > 0 { 1 } else { 0 })
}
