use std::fs;
use std::path::{Path, PathBuf};

use krphase::heterodyne::{ideal_scan, points_for_overlap, resolution_sweep, timedomain_scan};
use krphase::io::config::{load_field_file, ConfigBuilder};
use krphase::io::{self, RunConfig, Scenario, SigmaRef};
use krphase::metrics::{compare as compare_arrays, Comparison};
use krphase::phasespace::{
    characteristic_from_kr, direct_wigner, fit_gaussian, kr_conjugate, kr_conjugate_at, kr_from_conjugate,
    marginals as grid_marginals, p_from_characteristic, q_from_characteristic, wigner_characteristic,
    wigner_from_kr,
};
use krphase::{Error, Field, Kind, PsGrid};

use crate::{Common, Mode, Target};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn tolerance(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::MalformedHeader { .. } | Error::VersionMismatch { .. } | Error::Truncated { .. } => 4,
            Error::ImaginaryResidual { .. }
            | Error::NegativeQ { .. }
            | Error::KernelOverflow { .. }
            | Error::FitNotConverged { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Resolves a relative input against the output directory when it is not
/// found relative to the working directory.
pub fn resolve_input(common: &Common, path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let joined = common.out_dir.join(path);
    if joined.exists() {
        joined
    } else {
        path.to_path_buf()
    }
}

/// Builds the run config: the `--config` file, or else the manifest next to
/// `input`, then the named flags, then `--set` assignments.
pub fn load_config(common: &Common, input: Option<&Path>) -> CliResult<RunConfig> {
    let mut b = ConfigBuilder::default();
    let base = common
        .config
        .clone()
        .or_else(|| input.map(manifest_path).filter(|m| m.exists()));
    if let Some(path) = base {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::from(e).with_context(&format!("reading config {}", path.display())))?;
        b.parse_str(&text)?;
    }
    if let Some(s) = &common.scenario {
        b.set("field.scenario", s, 0)?;
    }
    if let Some(u) = &common.units {
        b.set("units", u, 0)?;
    }
    if let Some(n) = common.points {
        b.set("grid.n_points", &n.to_string(), 0)?;
    }
    for a in &common.set {
        b.set_assignment(a)?;
    }
    let cfg = b.build()?;
    match common.lo_ratio {
        Some(r) if !(r >= 1.0) || !r.is_finite() => Err(CliError::config(format!("--lo-ratio must be a finite value of at least 1, got {r}"))),
        Some(r) => {
            b.set("lo.a", &(cfg.field.waist / r).to_string(), 0)?;
            b.set("lo.A", &(cfg.field.waist * r).to_string(), 0)?;
            Ok(b.build()?)
        }
        None => Ok(cfg),
    }
}

impl CliError {
    fn with_context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

fn out_path(common: &Common, stem: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&common.out_dir)?;
    Ok(common.out_dir.join(format!("{stem}.{}", common.format.extension())))
}

fn save_grid(grid: &PsGrid, path: &Path) -> CliResult {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        io::write_grid_csv(grid, path)?;
    } else {
        io::save_grid(grid, path)?;
    }
    Ok(())
}

pub fn load_grid(path: &Path) -> CliResult<PsGrid> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        Ok(io::read_grid_csv(path)?)
    } else {
        Ok(io::load_grid(path)?)
    }
}

fn save_field(field: &Field, path: &Path) -> CliResult {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => io::write_field_csv(field, path)?,
        _ => io::save_field(field, path)?,
    }
    Ok(())
}

fn write_manifest(cfg: &RunConfig, output: &Path, command: &str, results: &[(String, String)]) -> CliResult {
    let header = [format!("command = {command}"), format!("output = {}", output.display())];
    cfg.write_manifest(manifest_path(output), &header, results)?;
    Ok(())
}

/// Points the config at an externally supplied field so its manifest still
/// reproduces the run.
fn adopt_field(cfg: &mut RunConfig, field: &Field, path: &Path) {
    cfg.field.scenario = Scenario::Custom;
    cfg.field.input = Some(fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf()));
    cfg.field.wavenumber = field.wavenumber();
    cfg.n_points = field.grid().n_points();
    cfg.extent = field.grid().extent();
    cfg.units = field.grid().unit_mode();
}

pub fn field(common: &Common) -> CliResult {
    let cfg = load_config(common, None)?;
    let f = cfg.build_field()?;
    let path = out_path(common, "field")?;
    save_field(&f, &path)?;
    write_manifest(&cfg, &path, "field", &[("norm_squared".into(), f.norm_squared().to_string())])?;
    println!("wrote {} ({} points, norm {:.6})", path.display(), f.grid().n_points(), f.norm_squared());
    Ok(())
}

fn source_field(common: &Common, input: Option<&Path>) -> CliResult<(RunConfig, Field)> {
    match input {
        Some(p) => {
            let p = resolve_input(common, p);
            let mut cfg = load_config(common, Some(&p))?;
            let f = load_field_file(&p, cfg.units)?;
            adopt_field(&mut cfg, &f, &p);
            Ok((cfg, f))
        }
        None => {
            let cfg = load_config(common, None)?;
            let f = cfg.build_field()?;
            Ok((cfg, f))
        }
    }
}

pub fn kr(common: &Common, input: Option<&Path>, with_kr: bool) -> CliResult {
    let (cfg, f) = source_field(common, input)?;
    let krc = kr_conjugate(&f)?;
    let path = out_path(common, "kr_conj")?;
    save_grid(&krc, &path)?;
    let m = grid_marginals(&krc);
    let results = [("residual_imag".to_string(), m.residual_imag.to_string())];
    write_manifest(&cfg, &path, "kr", &results)?;
    println!("wrote {} ({}x{})", path.display(), krc.dim().0, krc.dim().1);
    if with_kr {
        let k = kr_from_conjugate(&krc)?;
        let kp = out_path(common, "kr")?;
        save_grid(&k, &kp)?;
        write_manifest(&cfg, &kp, "kr", &results)?;
        println!("wrote {}", kp.display());
    }
    Ok(())
}

/// The K* grid for a transform: the given file, else `kr_conj.<ext>` in the
/// output directory, else computed from the configured field.
fn source_kr(common: &Common, input: Option<&Path>) -> CliResult<(RunConfig, PsGrid)> {
    let default = common.out_dir.join(format!("kr_conj.{}", common.format.extension()));
    let path = match input {
        Some(p) => Some(resolve_input(common, p)),
        None => default.exists().then_some(default),
    };
    match path {
        Some(p) => {
            let cfg = load_config(common, Some(&p))?;
            Ok((cfg, load_grid(&p)?))
        }
        None => {
            let cfg = load_config(common, None)?;
            let krc = kr_conjugate(&cfg.build_field()?)?;
            Ok((cfg, krc))
        }
    }
}

/// The Q / P reference width: the configured value, or the waist fitted to the
/// position marginal, falling back to the configured waist.
fn resolve_sigma(cfg: &RunConfig, krc: &PsGrid) -> f64 {
    match cfg.sigma_ref {
        SigmaRef::Value(v) => v,
        SigmaRef::Auto => {
            let m = grid_marginals(krc);
            fit_gaussian(&m.position, &krc.x_axis().coordinates())
                .ok()
                .map(|r| r.width)
                .filter(|w| w.is_finite() && *w > 0.0)
                .unwrap_or(cfg.field.waist)
        }
    }
}

pub fn transform(common: &Common, to: Target, input: Option<&Path>) -> CliResult {
    let (cfg, krc) = source_kr(common, input)?;
    let mut results = Vec::new();
    let (stem, grid) = match to {
        Target::Wigner => ("wigner", wigner_from_kr(&krc)?),
        Target::DirectWigner => ("direct_wigner", direct_wigner(&cfg.build_field()?)?),
        Target::Kr => ("kr", kr_from_conjugate(&krc)?),
        Target::CharKr => ("char_kr", characteristic_from_kr(&krc)?),
        Target::CharW => ("char_w", wigner_characteristic(&characteristic_from_kr(&krc)?)?),
        Target::Q => {
            let sigma = resolve_sigma(&cfg, &krc);
            results.push(("sigma_ref".to_string(), sigma.to_string()));
            ("q", q_from_characteristic(&characteristic_from_kr(&krc)?, sigma)?)
        }
        Target::P => {
            let sigma = resolve_sigma(&cfg, &krc);
            let p = p_from_characteristic(&characteristic_from_kr(&krc)?, sigma, &cfg.reg)?;
            results.push(("sigma_ref".to_string(), sigma.to_string()));
            results.push(("ill_conditioned".to_string(), p.ill_conditioned.to_string()));
            results.push(("removed_energy_fraction".to_string(), p.removed_energy_fraction.to_string()));
            results.push(("kept_fraction".to_string(), p.kept_fraction.to_string()));
            results.push(("imaginary_residual".to_string(), p.imaginary_residual.to_string()));
            if p.ill_conditioned {
                eprintln!(
                    "warning: P is ill-conditioned ({:.3} of the sharpened characteristic energy was removed)",
                    p.removed_energy_fraction
                );
            }
            ("p", p.grid)
        }
    };
    let path = out_path(common, stem)?;
    save_grid(&grid, &path)?;
    write_manifest(&cfg, &path, &format!("transform --to {stem}"), &results)?;
    println!("wrote {} ({})", path.display(), grid.kind());
    for (k, v) in &results {
        println!("{k} = {v}");
    }
    Ok(())
}

pub fn marginals(common: &Common, input: Option<&Path>) -> CliResult {
    let (cfg, grid) = match input {
        Some(p) => {
            let p = resolve_input(common, p);
            (load_config(common, Some(&p))?, load_grid(&p)?)
        }
        None => source_kr(common, None)?,
    };
    if grid.kind().is_characteristic() {
        return Err(CliError::config(format!("marginals of a {} grid are not defined", grid.kind())));
    }
    let m = grid_marginals(&grid);
    fs::create_dir_all(&common.out_dir)?;
    let (xp, pp) = (common.out_dir.join("marginal_x.csv"), common.out_dir.join("marginal_p.csv"));
    io::write_marginals(&grid, &m, &xp, &pp)?;
    let results = [("residual_imag".to_string(), m.residual_imag.to_string())];
    write_manifest(&cfg, &xp, "marginals", &results)?;
    write_manifest(&cfg, &pp, "marginals", &results)?;
    println!("wrote {} and {}", xp.display(), pp.display());
    println!("residual_imag = {:e}", m.residual_imag);
    Ok(())
}

pub fn heterodyne(common: &Common, mode: Mode, sweep: &[f64]) -> CliResult {
    let mut cfg = load_config(common, None)?;
    // the overlaps need the field sampled finely enough to resolve lo.a
    cfg.n_points = cfg.n_points.max(points_for_overlap(&cfg.lo, cfg.extent));
    let f = cfg.build_field()?;
    let scan = cfg.scan_config();
    let mut results = vec![("field_points".to_string(), cfg.n_points.to_string())];
    let (stem, grid) = match mode {
        Mode::Ideal => ("heterodyne_ideal", ideal_scan(&f, &cfg.lo, &scan)?),
        Mode::Timedomain => {
            let r = timedomain_scan(&f, &cfg.lo, &scan, &cfg.dsp)?;
            results.push(("gain_re".into(), r.gain.re.to_string()));
            results.push(("gain_im".into(), r.gain.im.to_string()));
            results.push(("rel_l2_vs_ideal".into(), r.rel_l2_vs_ideal.to_string()));
            println!("rel_l2_vs_ideal = {:e}", r.rel_l2_vs_ideal);
            ("heterodyne_timedomain", r.to_grid(&f)?)
        }
    };
    if !sweep.is_empty() {
        let report = resolution_sweep(&f, &cfg.lo, &scan, sweep)?;
        println!("factor  a  A  rel_l2_error  correlation");
        for e in &report.entries {
            println!("{}  {}  {}  {:.6e}  {:.6}", e.factor, e.a, e.big_a, e.rel_l2_error, e.correlation);
            results.push((format!("sweep_{}_rel_l2", e.factor), e.rel_l2_error.to_string()));
        }
        println!("nonincreasing = {}", report.is_nonincreasing());
    }
    let path = out_path(common, stem)?;
    save_grid(&grid, &path)?;
    write_manifest(&cfg, &path, &format!("heterodyne --mode {stem}"), &results)?;
    println!("wrote {} ({}x{} scan, field on {} points)", path.display(), scan.dx.len, scan.p0.len, cfg.n_points);
    Ok(())
}

pub fn fit(common: &Common, input: &Path, min_width: Option<f64>, max_width: Option<f64>) -> CliResult {
    let input = resolve_input(common, input);
    let (xs, ys) = io::read_xy_csv::<f64>(&input)?;
    let r = fit_gaussian(&ys, &xs)?;
    println!("amplitude = {}", r.amplitude);
    println!("center = {:.6e}", r.center);
    println!("width = {:.6}", r.width);
    println!("residual_l2 = {:e}", r.residual_l2);
    // a momentum marginal of a waist-σ beam has width 1/σ
    let momentum = fs::read_to_string(&input)?
        .lines()
        .any(|l| l.trim_start_matches('#').trim().replace(' ', "") == "axis=p");
    let reported = if momentum {
        let w = 1.0 / r.width;
        println!("position_equivalent_width = {w:.6}");
        w
    } else {
        r.width
    };
    check_range("width", reported, min_width, max_width)
}

fn check_range(name: &str, value: f64, min: Option<f64>, max: Option<f64>) -> CliResult {
    if let Some(lo) = min.filter(|lo| !(value >= *lo)) {
        return Err(CliError::tolerance(format!("{name} {value} is below {lo}")));
    }
    if let Some(hi) = max.filter(|hi| !(value <= *hi)) {
        return Err(CliError::tolerance(format!("{name} {value} is above {hi}")));
    }
    Ok(())
}

pub struct Thresholds {
    pub max_linf: Option<f64>,
    pub max_rel_l2: Option<f64>,
    pub min_corr: Option<f64>,
}

pub fn compare(common: &Common, input: Option<&Path>, against: &str, t: Thresholds) -> CliResult {
    let ext = common.format.extension();
    let input = match input {
        Some(p) => resolve_input(common, p),
        None => match against {
            "direct-wigner" => common.out_dir.join(format!("wigner.{ext}")),
            "kr" => common.out_dir.join(format!("heterodyne_ideal.{ext}")),
            _ => return Err(CliError::config("--input is required when comparing against a file")),
        },
    };
    let measured = load_grid(&input)?;
    let reference = match against {
        "direct-wigner" | "kr" => {
            let cfg = load_config(common, Some(&input))?;
            let f = cfg.build_field()?;
            if against == "direct-wigner" {
                direct_wigner(&f)?.into_values()
            } else {
                reference_kr(&f, &measured)?
            }
        }
        path => load_grid(&resolve_input(common, Path::new(path)))?.into_values(),
    };
    if reference.dim() != measured.dim() {
        return Err(CliError::config(format!(
            "shape mismatch: {:?} against reference {:?}",
            measured.dim(),
            reference.dim()
        )));
    }
    let c: Comparison<f64> = compare_arrays(measured.values(), &reference);
    println!("linf = {:e}", c.linf);
    println!("rel_l2 = {:e}", c.rel_l2);
    println!("rel_l2_after_gain = {:e}", c.rel_l2_after_gain);
    println!("correlation = {:.9}", c.correlation);
    let mut failures = Vec::new();
    if let Some(m) = t.max_linf.filter(|m| !(c.linf <= *m)) {
        failures.push(format!("linf {:e} exceeds {m:e}", c.linf));
    }
    if let Some(m) = t.max_rel_l2.filter(|m| !(c.rel_l2 <= *m)) {
        failures.push(format!("rel_l2 {:e} exceeds {m:e}", c.rel_l2));
    }
    if let Some(m) = t.min_corr.filter(|m| !(c.correlation >= *m)) {
        failures.push(format!("correlation {} is below {m}", c.correlation));
    }
    if failures.is_empty() {
        println!("PASS");
        Ok(())
    } else {
        Err(CliError::tolerance(failures.join("; ")))
    }
}

/// `K*` on the axes of `like`: the full grid when they match the field's own
/// axes, otherwise evaluated point by point.
fn reference_kr(f: &Field, like: &PsGrid) -> CliResult<ndarray::Array2<num_complex::Complex<f64>>> {
    let full = kr_conjugate(f)?;
    let same = |a: &krphase::Axis<f64>, b: &krphase::Axis<f64>| {
        a.len == b.len && (a.origin - b.origin).abs() <= 1e-12 * b.spacing.abs() && (a.spacing - b.spacing).abs() <= 1e-12 * b.spacing.abs()
    };
    let values = if same(like.x_axis(), full.x_axis()) && same(like.p_axis(), full.p_axis()) {
        full.into_values()
    } else {
        kr_conjugate_at(f, &like.x_axis().coordinates(), &like.p_axis().coordinates())?
    };
    Ok(if like.kind() == Kind::KR {
        values.mapv(|v| v.conj())
    } else {
        values
    })
}
