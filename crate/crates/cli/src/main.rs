//! `reflectsim` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O or input-format error,
//! 3 numerical failure.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use reflectsim::error::Error;
use reflectsim::estimator::{
    estimate_batch, estimate_with_table, noisy_runs, po_calibration, select_focus_points, simulate_measurements,
    PredictionTable, SweepGrid, SweepRange,
};
use reflectsim::geometry::Vec3;
use reflectsim::go::GoModel;
use reflectsim::io::{self, OutputDir, ResultReport, RunManifest, Table};
use reflectsim::po::{pixel_grid, PoImager, DEFAULT_K_ORDER};
use reflectsim::scene::{build_scene, ComplexPermittivity, Scale, Scene, SceneConfig, TargetConfig};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "reflectsim", version, about = "Reflectarray imaging and permittivity estimation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scene configuration (JSON). Defaults to the built-in two-array scene.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (falls back to REFLECTSIM_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Reflectarray size preset.
    #[arg(long, global = true, value_enum)]
    scale: Option<ScaleArg>,
    /// PO order K.
    #[arg(long = "k-order", global = true, default_value_t = DEFAULT_K_ORDER)]
    k_order: usize,
    /// Focal step along z, mm.
    #[arg(long = "dz-mm", global = true, default_value_t = 10.0)]
    dz_mm: f64,
    /// Maximum mesh edge, mm (overrides the config).
    #[arg(long = "max-edge-mm", global = true)]
    max_edge_mm: Option<f64>,
    /// Place a named target (object1, object2, object3, pa66, none).
    #[arg(long, global = true)]
    object: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Full,
    Reduced,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Full => Scale::Full,
            ScaleArg::Reduced => Scale::Reduced,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Focal-spot magnitude on a box around the focus (psf.csv).
    Psf(PsfArgs),
    /// Depth profile by focal scanning (profile.csv, profile.json).
    Image(ImageArgs),
    /// GO received amplitudes for a given slab (prediction.csv, masks.csv).
    Predict(PredictArgs),
    /// Grid-search estimate of (ε′, ε″, T) (result.json, error_surface.csv).
    Estimate(EstimateArgs),
    /// PO and GO calibration amplitudes on the bare plate (calibration.csv).
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct PsfArgs {
    /// Focus point x,y,z in mm (default: plate centre at z_bg).
    #[arg(long)]
    focus: Option<Triple>,
    /// Half-widths of the box along x,y,z, mm.
    #[arg(long = "half-mm", default_value = "24,24,24")]
    half_mm: Triple,
    #[arg(long = "step-mm", default_value_t = 2.0)]
    step_mm: f64,
}

#[derive(Args, Debug)]
struct ImageArgs {
    /// Pixel grid centre x,y in mm (default: target or plate centre).
    #[arg(long)]
    center: Option<Pair>,
    /// Pixel counts nx,ny.
    #[arg(long, default_value = "1,1")]
    pixels: Pair,
    #[arg(long = "spacing-mm", default_value_t = 10.0)]
    spacing_mm: f64,
    /// Focal scan range start:end in mm.
    #[arg(long = "z-range", default_value = "600:1000")]
    z_range: Pair,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long = "eps-real")]
    eps_real: Option<f64>,
    #[arg(long = "eps-imag")]
    eps_imag: Option<f64>,
    #[arg(long = "thickness-mm")]
    thickness_mm: Option<f64>,
    #[arg(long = "air-gap-mm")]
    air_gap_mm: Option<f64>,
    /// Centre focus point x,y,z in mm.
    #[arg(long)]
    center: Option<Triple>,
    /// Number of focus points N (odd).
    #[arg(long, default_value_t = 3)]
    points: usize,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Measurement CSV (x_mm,y_mm,z_mm,re,im plus a `cal` row).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    measurements: Option<PathBuf>,
    /// Simulate measurements with PO for a named object.
    #[arg(long)]
    synthetic: Option<String>,
    /// Add complex Gaussian noise at this SNR to synthetic measurements.
    #[arg(long = "noise-snr-db", requires = "synthetic")]
    noise_snr_db: Option<f64>,
    /// Number of noisy runs (batch statistics when > 1).
    #[arg(long, default_value_t = 1, requires = "noise_snr_db")]
    runs: usize,
    /// Number of focus points N (odd).
    #[arg(long, default_value_t = 3)]
    points: usize,
    /// Focal scan range start:end in mm for locating the profile centre.
    #[arg(long = "z-range", default_value = "600:1000")]
    z_range: Pair,
    /// ε′ sweep start:end:step.
    #[arg(long = "eps-real-range", default_value = "2:10:0.25")]
    eps_real_range: Range,
    /// ε″ sweep start:end:step.
    #[arg(long = "eps-imag-range", default_value = "0:0.5:0.05")]
    eps_imag_range: Range,
    /// T sweep start:end:step in mm.
    #[arg(long = "thickness-range", default_value = "0:60:1")]
    thickness_range: Range,
    /// Air gap assumed by the GO model, mm.
    #[arg(long = "air-gap-mm")]
    air_gap_mm: Option<f64>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Transverse position x,y in mm (default: plate centre).
    #[arg(long)]
    at: Option<Pair>,
}

#[derive(Debug, Clone, Copy)]
struct Triple([f64; 3]);

#[derive(Debug, Clone, Copy)]
struct Pair([f64; 2]);

#[derive(Debug, Clone, Copy)]
struct Range(SweepRangeSpec);

#[derive(Debug, Clone, Copy)]
struct SweepRangeSpec {
    start: f64,
    end: f64,
    step: f64,
}

fn parse_list<const N: usize>(s: &str, sep: char) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} values separated by '{sep}', got {s:?}"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse::<f64>().map_err(|_| format!("not a number: {p:?}"))?;
        if !o.is_finite() {
            return Err(format!("not finite: {p:?}"));
        }
    }
    Ok(out)
}

impl FromStr for Triple {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list::<3>(s, ',').map(Triple)
    }
}

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let sep = if s.contains(':') { ':' } else { ',' };
        parse_list::<2>(s, sep).map(Pair)
    }
}

impl FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [start, end, step] = parse_list::<3>(s, ':')?;
        Ok(Range(SweepRangeSpec { start, end, step }))
    }
}

impl Range {
    fn to_sweep(self) -> reflectsim::Result<SweepRange> {
        SweepRange::new(self.0.start, self.0.end, self.0.step)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse { .. } => EXIT_IO,
        Error::SingularKernel { .. } | Error::ZeroDenominator(_) | Error::ZeroCalibration | Error::Numerical(_) => {
            EXIT_NUMERICAL
        }
        _ => EXIT_VALIDATION,
    }
}

fn workers(flag: Option<usize>) -> reflectsim::Result<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("REFLECTSIM_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("REFLECTSIM_WORKERS: not a count: {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Scene configuration after applying command-line overrides.
struct Setup {
    config: SceneConfig,
    overrides: BTreeMap<String, String>,
}

fn load_config(common: &Common) -> reflectsim::Result<Setup> {
    let mut overrides = BTreeMap::new();
    let scale = common.scale.map(Scale::from);
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            let mut c = SceneConfig::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            if let Some(s) = scale {
                for f in &mut c.faras {
                    f.side_mm = s.array_side_mm();
                }
            }
            c
        }
        None => SceneConfig::two_array(scale.unwrap_or(Scale::Reduced)),
    };
    if let Some(s) = common.scale {
        overrides.insert("scale".into(), format!("{s:?}").to_lowercase());
    }
    if let Some(e) = common.max_edge_mm {
        config.mesh.max_edge_mm = e;
        overrides.insert("max_edge_mm".into(), e.to_string());
    }
    if let Some(name) = &common.object {
        config.target = named_target(name)?;
        overrides.insert("object".into(), name.clone());
    }
    overrides.insert("k_order".into(), common.k_order.to_string());
    overrides.insert("dz_mm".into(), common.dz_mm.to_string());
    overrides.insert("seed".into(), common.seed.to_string());
    Ok(Setup { config, overrides })
}

fn named_target(name: &str) -> reflectsim::Result<Option<TargetConfig>> {
    if name.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    TargetConfig::by_name(name)
        .map(Some)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown object {name:?} (object1, object2, object3, pa66, none)")))
}

fn check_roi(scene: &Scene, points: &[Vec3]) -> reflectsim::Result<()> {
    points.iter().try_for_each(|&p| scene.roi.check(p))
}

fn plate_center(scene: &Scene) -> (f64, f64) {
    match scene.target {
        Some(t) => (t.center.x, t.center.y),
        None => (scene.plate.center_x, scene.plate.center_y),
    }
}

fn run(cli: Cli) -> reflectsim::Result<()> {
    if let Some(n) = workers(cli.common.workers)? {
        if n == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let common = cli.common.clone();
    if common.k_order == 0 {
        return Err(Error::InvalidOrder(0));
    }
    if !(common.dz_mm > 0.0 && common.dz_mm.is_finite()) {
        return Err(Error::NonPositive {
            what: "dz-mm",
            value: common.dz_mm,
        });
    }
    let mut setup = load_config(&common)?;
    let (name, files) = match &cli.command {
        Command::Psf(a) => ("psf", cmd_psf(&common, &mut setup, a)?),
        Command::Image(a) => ("image", cmd_image(&common, &mut setup, a)?),
        Command::Predict(a) => ("predict", cmd_predict(&common, &mut setup, a)?),
        Command::Estimate(a) => ("estimate", cmd_estimate(&common, &mut setup, a)?),
        Command::Calibrate(a) => ("calibrate", cmd_calibrate(&common, &mut setup, a)?),
    };
    let manifest = RunManifest {
        command: name.into(),
        config_path: common.config.as_ref().map(|p| p.display().to_string()),
        out_dir: common.out.display().to_string(),
        overrides: setup.overrides,
        scene_hash: setup.config.content_hash(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        files: Vec::new(),
    };
    let m = files.finish(manifest)?;
    for f in &m.files {
        println!("{}", common.out.join(&f.file).display());
    }
    Ok(())
}

fn cmd_psf(common: &Common, setup: &mut Setup, a: &PsfArgs) -> reflectsim::Result<OutputDir> {
    let scene = build_scene(&setup.config)?;
    let focus = match a.focus {
        Some(Triple([x, y, z])) => Vec3::new(x, y, z),
        None => Vec3::new(scene.plate.center_x, scene.plate.center_y, scene.plate.z_bg),
    };
    check_roi(&scene, &[focus])?;
    setup.overrides.insert("focus".into(), format!("{},{},{}", focus.x, focus.y, focus.z));
    let imager = PoImager::new(&scene)?;
    let psf = imager.psf_box(focus, a.half_mm.0, a.step_mm)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_table("psf.csv", &io::psf_table(&psf))?;
    Ok(out)
}

fn cmd_image(common: &Common, setup: &mut Setup, a: &ImageArgs) -> reflectsim::Result<OutputDir> {
    let scene = build_scene(&setup.config)?;
    let (cx, cy) = a.center.map_or_else(|| plate_center(&scene), |Pair([x, y])| (x, y));
    let [nx, ny] = a.pixels.0;
    if nx < 1.0 || ny < 1.0 || nx.fract() != 0.0 || ny.fract() != 0.0 {
        return Err(Error::InvalidConfig(format!("pixel counts must be positive integers, got {nx},{ny}")));
    }
    let pixels = pixel_grid(cx, cy, nx as usize, ny as usize, a.spacing_mm);
    let [z0, z1] = a.z_range.0;
    for &(x, y) in &pixels {
        check_roi(&scene, &[Vec3::new(x, y, z0), Vec3::new(x, y, z1)])?;
    }
    let imager = PoImager::new(&scene)?;
    let profile = imager.reconstruct_profile(&pixels, z0, z1, common.dz_mm, common.k_order)?;
    let mut out = OutputDir::create(&common.out)?;
    out.write_table("profile.csv", &io::profile_table(&profile))?;
    out.write_json("profile.json", &io::profile_metadata(&profile)?)?;
    Ok(out)
}

fn cmd_predict(common: &Common, setup: &mut Setup, a: &PredictArgs) -> reflectsim::Result<OutputDir> {
    let scene = build_scene(&setup.config)?;
    let target = scene.target;
    let eps_real = a.eps_real.or(target.map(|t| t.eps.eps_real));
    let eps_imag = a.eps_imag.or(target.map(|t| t.eps.eps_imag)).unwrap_or(0.0);
    let thickness = a.thickness_mm.or(target.map(|t| t.thickness));
    let (Some(eps_real), Some(thickness)) = (eps_real, thickness) else {
        return Err(Error::InvalidConfig(
            "predict needs --eps-real and --thickness-mm or a target in the scene".into(),
        ));
    };
    let eps = ComplexPermittivity::new(eps_real, eps_imag)?;
    let mut model = GoModel::new(&scene);
    if let Some(g) = a.air_gap_mm {
        model.air_gap = g;
    }
    let center = match a.center {
        Some(Triple([x, y, z])) => Vec3::new(x, y, z),
        None => {
            let (x, y) = plate_center(&scene);
            Vec3::new(x, y, model.front_z(thickness))
        }
    };
    let points = reflectsim::estimator::focus_stencil(center, a.points, common.dz_mm)?;
    check_roi(&scene, &points)?;
    let values = model.predict_trace(&points, eps, thickness);
    let calibration = model.calibration(center.x, center.y);
    let meas = reflectsim::estimator::MeasurementSet::new(points.clone(), values, calibration)?;
    let masks: Vec<_> = points.iter().flat_map(|&p| model.masks(p)).collect();
    let mut out = OutputDir::create(&common.out)?;
    out.write_table("prediction.csv", &io::measurement_table(&meas))?;
    out.write_table("masks.csv", &mask_table_with_focus(&masks))?;
    Ok(out)
}

fn mask_table_with_focus(masks: &[reflectsim::reflectarray::PhaseMask]) -> Table {
    let mut t = Table::new(&["focus_x_mm", "focus_y_mm", "focus_z_mm", "feed", "patch", "bit"]);
    for m in masks {
        for (i, &b) in m.bits.iter().enumerate() {
            t.rows.push(vec![
                io::num(m.focus.x),
                io::num(m.focus.y),
                io::num(m.focus.z),
                m.feed.to_string(),
                i.to_string(),
                u8::from(b).to_string(),
            ]);
        }
    }
    t
}

fn cmd_estimate(common: &Common, setup: &mut Setup, a: &EstimateArgs) -> reflectsim::Result<OutputDir> {
    let started = Instant::now();
    let grid = SweepGrid::new(
        a.eps_real_range.to_sweep()?,
        a.eps_imag_range.to_sweep()?,
        a.thickness_range.to_sweep()?,
    )?;
    if a.runs == 0 {
        return Err(Error::InvalidConfig("--runs must be at least 1".into()));
    }
    let mut out = OutputDir::create(&common.out)?;
    let (scene, measurements) = match (&a.measurements, &a.synthetic) {
        (Some(path), _) => {
            let meas = io::read_measurements(path)?;
            setup.overrides.insert("measurements".into(), path.display().to_string());
            let scene = build_scene(&setup.config)?;
            check_roi(&scene, &meas.points)?;
            (scene, vec![meas])
        }
        (None, Some(name)) => {
            setup.config.target = named_target(name)?;
            setup.overrides.insert("synthetic".into(), name.clone());
            let scene = build_scene(&setup.config)?;
            let (cx, cy) = plate_center(&scene);
            let [z0, z1] = a.z_range.0;
            check_roi(&scene, &[Vec3::new(cx, cy, z0), Vec3::new(cx, cy, z1)])?;
            let profile = PoImager::new(&scene)?.reconstruct_profile(&[(cx, cy)], z0, z1, common.dz_mm, common.k_order)?;
            out.write_table("profile.csv", &io::profile_table(&profile))?;
            let points = select_focus_points(&profile, a.points, common.dz_mm)?.points;
            check_roi(&scene, &points)?;
            let base = simulate_measurements(&scene, &points, common.k_order)?;
            let runs = match a.noise_snr_db {
                Some(snr) => {
                    setup.overrides.insert("noise_snr_db".into(), snr.to_string());
                    setup.overrides.insert("runs".into(), a.runs.to_string());
                    noisy_runs(&base, a.runs, snr, common.seed)
                }
                None => vec![base],
            };
            (scene, runs)
        }
        (None, None) => unreachable!("clap requires one measurement source"),
    };
    let mut model = GoModel::new(&scene);
    if let Some(g) = a.air_gap_mm {
        model.air_gap = g;
        setup.overrides.insert("air_gap_mm".into(), g.to_string());
    }
    let table = PredictionTable::build(&model, &measurements[0].points, &grid)?;
    let result = estimate_with_table(&table, &measurements[0])?;
    if a.synthetic.is_some() {
        out.write_table("measurements.csv", &io::measurement_table(&measurements[0]))?;
    }
    out.write_table("error_surface.csv", &io::error_surface_table(&result))?;
    if measurements.len() > 1 {
        let stats = estimate_batch(&table, &measurements)?;
        let mut t = Table::new(&["run", "eps_real", "eps_imag", "T_mm"]);
        for (i, e) in stats.runs.iter().enumerate() {
            t.rows.push(vec![
                i.to_string(),
                io::num(e.eps_real),
                io::num(e.eps_imag),
                io::num(e.thickness_mm),
            ]);
        }
        t.rows.push(vec!["mean".into(), io::num(stats.mean[0]), io::num(stats.mean[1]), io::num(stats.mean[2])]);
        t.rows.push(vec!["std".into(), io::num(stats.std[0]), io::num(stats.std[1]), io::num(stats.std[2])]);
        out.write_table("batch.csv", &t)?;
    }
    let report = ResultReport {
        estimate: result.estimate.clone(),
        min_error: result.min_error,
        grid_spec: grid,
        runtime_ms: started.elapsed().as_millis() as u64,
    };
    out.write_json("result.json", &report)?;
    eprintln!(
        "estimate: eps' = {}, eps'' = {}, T = {} mm (f = {:.3e})",
        report.estimate.eps_real, report.estimate.eps_imag, report.estimate.thickness_mm, report.min_error
    );
    Ok(out)
}

fn cmd_calibrate(common: &Common, setup: &mut Setup, a: &CalibrateArgs) -> reflectsim::Result<OutputDir> {
    let scene = build_scene(&setup.config)?;
    let (x, y) = a.at.map_or((scene.plate.center_x, scene.plate.center_y), |Pair([x, y])| (x, y));
    check_roi(&scene, &[Vec3::new(x, y, scene.plate.z_bg)])?;
    let po = po_calibration(&scene, x, y)?;
    let go = GoModel::new(&scene).calibration(x, y);
    let mut t = Table::new(&["model", "x_mm", "y_mm", "z_mm", "re", "im", "magnitude", "phase_deg"]);
    for (name, v) in [("po", po), ("go", go)] {
        let v: Complex64 = v;
        let mut row = vec![name.to_string()];
        row.extend(
            [x, y, scene.plate.z_bg, v.re, v.im, v.norm(), v.arg().to_degrees()]
                .iter()
                .map(|&n| io::num(n)),
        );
        t.rows.push(row);
    }
    let mut out = OutputDir::create(&common.out)?;
    out.write_table("calibration.csv", &t)?;
    Ok(out)
}
