//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use refmaps::evaluate::{evaluate_channel, lighting_angle_deg};
use refmaps::io::{estimate, fields_to_pfm, lighting, Dataset, Reconstruction};
use refmaps::shading::render_pixel;
use refmaps::synth::{generate as synthesize, SceneSpec};
use refmaps::{Error, ScalarField, SolverConfig};

use super::{EstimateArgs, Failure};

type CmdResult = std::result::Result<(), Failure>;

pub(crate) fn generate(spec: &Path, out_dir: &Path, seed: u64) -> CmdResult {
    let spec = SceneSpec::load(spec)?;
    let truth = synthesize(&spec, seed)?;
    let dataset = Dataset::from_ground_truth(&truth)?;
    dataset.store(out_dir)?;
    eprintln!(
        "wrote {} view(s), {} channel(s), {} correspondence(s) to {}",
        dataset.problem.view_count(),
        dataset.problem.channels(),
        dataset.problem.correspondences().len(),
        out_dir.display()
    );
    Ok(())
}

pub(crate) fn estimate(a: &EstimateArgs) -> CmdResult {
    let cfg = SolverConfig {
        lambda: a.lambda,
        mu: a.mu,
        delta: a.delta,
        max_outer_iters: a.max_iters,
        rel_energy_tol: a.tol,
        cg_max_iters: a.cg_max_iters,
        cg_tol: a.cg_tol,
        normalize: !a.no_normalize,
        threads: a.threads,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dataset = Dataset::load(&a.dataset)?;
    let solution = refmaps::solver::solve_with_observer(&dataset.problem, &cfg, |c, r| {
        if r.iteration > 0 {
            eprintln!(
                "ch{c} iter {:>3}  E = {:.6e}  rel = {:.3e}  cg = {}",
                r.iteration, r.energy.total, r.rel_change, r.cg_iterations
            );
        }
    })?;
    let rec = Reconstruction::from_solution(&solution);
    estimate::store(&a.out_dir, &rec)?;

    if let Some(trace) = &a.trace {
        let channels = solution.channels.len();
        for (c, ch) in solution.channels.iter().enumerate() {
            let path = if channels == 1 { trace.clone() } else { channel_path(trace, c) };
            let mut buf = Vec::new();
            ch.trace.write_csv(&mut buf, a.trace_timing).expect("writing to memory");
            std::fs::write(&path, buf).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        }
    }
    if a.preview {
        for v in 0..rec.view_count() {
            let path = a.out_dir.join(format!("view{v}_reflectance_preview.png"));
            write_preview(&path, &rec.reflectance[v])?;
        }
    }
    for (c, ch) in solution.channels.iter().enumerate() {
        let iters = ch.trace.last().map_or(0, |r| r.iteration);
        let e = ch.trace.last().map_or(f64::NAN, |r| r.energy.total);
        eprintln!(
            "ch{c}: {} after {iters} iteration(s), E = {e:.6e}",
            if ch.converged { "converged" } else { "stopped" }
        );
        if ch.trace.conditioning_warning() {
            eprintln!("warning: ch{c}: some lighting fits were rank deficient (fewer than 9 independent normals)");
        }
    }
    Ok(())
}

/// `out.csv` → `out_ch{c}.csv`.
fn channel_path(path: &Path, c: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_ch{c}.{}", ext.to_string_lossy()),
        None => format!("{stem}_ch{c}"),
    };
    path.with_file_name(name)
}

fn write_preview(path: &Path, fields: &[ScalarField]) -> refmaps::Result<()> {
    let d = fields[0].domain();
    let max = fields.iter().map(ScalarField::max_masked).fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let bytes: Vec<u8> = (0..d.len())
        .flat_map(|i| fields.iter().map(move |f| (f.at(i) * scale).round().clamp(0.0, 255.0) as u8))
        .collect();
    let (w, h) = (d.width() as u32, d.height() as u32);
    let color = if fields.len() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    image::save_buffer(path, &bytes, w, h, color)
        .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })
}

pub(crate) fn evaluate(estimate_dir: &Path, dataset: &Path, csv: Option<&Path>) -> CmdResult {
    let ds = Dataset::load(dataset)?;
    let Some(truth) = &ds.truth else {
        return Err(Error::UnsupportedInput(format!("{} has no ground truth", dataset.display())).into());
    };
    let p = &ds.problem;
    let domains: Vec<_> = (0..p.view_count()).map(|v| p.domain(v).clone()).collect();
    let est = estimate::load(estimate_dir, &domains, p.channels())?;

    let mut text = String::new();
    let mut table = String::from("channel,view,kappa,rmse,lighting_angle_deg\n");
    for c in 0..p.channels() {
        let report = evaluate_channel(&est.channel(c), &truth.channel(c))?;
        writeln!(text, "channel {c}: RMSE {:.6e} (kappa {:.6e})", report.rmse, report.kappa).unwrap();
        writeln!(table, "{c},all,{:e},{:e},", report.kappa, report.rmse).unwrap();
        for (v, r) in report.per_view_rmse.iter().enumerate() {
            let angle = lighting_angle_deg(&est.lighting[v][c], &truth.lighting[v][c]);
            writeln!(text, "  view {v}: RMSE {r:.6e}, lighting direction error {angle:.3} deg").unwrap();
            writeln!(table, "{c},{v},{:e},{r:e},{angle:e}", report.kappa).unwrap();
        }
    }
    print!("{text}");
    if let Some(path) = csv {
        std::fs::write(path, table).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    }
    Ok(())
}

pub(crate) fn render(reflectance_dir: &Path, dataset: &Path, lighting_file: &Path, out_dir: &Path) -> CmdResult {
    let ds = Dataset::load(dataset)?;
    let p = &ds.problem;
    let domains: Vec<_> = (0..p.view_count()).map(|v| p.domain(v).clone()).collect();
    let rho = estimate::load_reflectance(reflectance_dir, &domains, p.channels())?;
    let light = lighting::per_view(lighting::read(lighting_file)?, p.view_count(), p.channels(), lighting_file)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io { path: out_dir.to_path_buf(), source: e })?;
    for v in 0..p.view_count() {
        let g = p.geometry(v);
        let images: Vec<ScalarField> = (0..p.channels())
            .map(|c| {
                let r = &rho[v][c];
                ScalarField::from_fn(domains[v].clone(), |px| {
                    let i = domains[v].index(px);
                    render_pixel(r.at(i), &light[v][c], g.at(i))
                })
            })
            .collect();
        fields_to_pfm(&images)?.write(&out_dir.join(format!("view{v}_render.pfm")))?;
    }
    Ok(())
}
