//! `key = value` run configuration and the manifest that records it.
//!
//! Blank lines and text after `#` are ignored. Every key is optional; defaults
//! depend on `units` and on the field scenario, and the manifest written by
//! [`RunConfig::manifest`] lists every effective value so a run can be
//! repeated from the manifest alone.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heterodyne::{DspSpec, LOConfig, ScanConfig, LAB_SIGNAL_WAIST_MM};
use crate::io::{binary, csv};
use crate::phasespace::RegSpec;
use crate::wavefield::{apply_obstruction, make_gaussian_with_wavenumber, Grid1D, SampledField, UnitMode};

/// Every key the parser accepts, in manifest order.
pub const KEYS: &[&str] = &[
    "units",
    "grid.n_points",
    "grid.extent",
    "field.scenario",
    "field.input",
    "field.waist",
    "field.curvature_radius",
    "field.center",
    "field.wire_half_width",
    "field.wavenumber",
    "lo.a",
    "lo.A",
    "lo.alpha",
    "lo.focal_length",
    "lo.freq_signal",
    "lo.freq_lo1",
    "lo.freq_lo2",
    "lo.analyzer_bandwidth",
    "scan.dx_max",
    "scan.nx",
    "scan.p0_max",
    "scan.np",
    "dsp.sample_rate",
    "dsp.demod_periods",
    "dsp.guard_periods",
    "dsp.quadrature_phase",
    "dsp.with_spurs",
    "transform.sigma_ref",
    "transform.p_floor",
    "transform.p_taper",
    "transform.p_kernel_cap",
];

const DEFAULT_POINTS: usize = 512;
const DEFAULT_EXTENT_PER_WAIST: f64 = 16.0;
const WIRE_HALF_WIDTH_MM: f64 = 0.5;
/// Even, so that no default scan row sits on the optical axis where a centered
/// obstruction has its sharpest features.
const DEFAULT_SCAN_POINTS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Gaussian,
    /// Gaussian with a centered opaque wire.
    Wire,
    /// Field read from `field.input`.
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Gaussian => "gaussian",
            Scenario::Wire => "wire",
            Scenario::Custom => "custom",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Scenario::Gaussian),
            "wire" => Ok(Scenario::Wire),
            "custom" => Ok(Scenario::Custom),
            other => Err(format!("expected gaussian, wire or custom, got `{other}`")),
        }
    }
}

/// Reference width for the Q / P transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaRef {
    /// The field waist.
    Auto,
    Value(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSpec {
    pub scenario: Scenario,
    pub input: Option<PathBuf>,
    pub waist: f64,
    pub curvature_radius: f64,
    pub center: f64,
    pub wire_half_width: f64,
    pub wavenumber: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSpec {
    pub dx_max: f64,
    pub nx: usize,
    pub p0_max: f64,
    pub np: usize,
}

impl ScanSpec {
    pub fn to_scan(&self) -> ScanConfig<f64> {
        ScanConfig::symmetric(self.dx_max, self.nx, self.p0_max, self.np)
    }
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub units: UnitMode,
    pub n_points: usize,
    pub extent: f64,
    pub field: FieldSpec,
    pub lo: LOConfig<f64>,
    pub scan: ScanSpec,
    pub dsp: DspSpec<f64>,
    pub sigma_ref: SigmaRef,
    pub reg: RegSpec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        ConfigBuilder::default().build().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid1D<f64>> {
        Grid1D::new(self.n_points, self.extent, self.units)
    }

    pub fn scan_config(&self) -> ScanConfig<f64> {
        self.scan.to_scan()
    }

    pub fn sigma(&self) -> f64 {
        match self.sigma_ref {
            SigmaRef::Auto => self.field.waist,
            SigmaRef::Value(v) => v,
        }
    }

    /// The configured field on the configured grid.
    pub fn build_field(&self) -> Result<SampledField<f64>> {
        self.build_field_with_points(self.n_points)
    }

    /// The configured field on a grid of the same extent with `n_points`
    /// samples. Custom inputs are resampled with band-limited interpolation.
    pub fn build_field_with_points(&self, n_points: usize) -> Result<SampledField<f64>> {
        let grid = Grid1D::new(n_points, self.extent, self.units)?;
        let f = &self.field;
        match f.scenario {
            Scenario::Gaussian | Scenario::Wire => {
                let g = make_gaussian_with_wavenumber(grid, f.waist, f.curvature_radius, f.center, f.wavenumber)?;
                if f.scenario == Scenario::Wire {
                    apply_obstruction(&g, f.wire_half_width)
                } else {
                    Ok(g)
                }
            }
            Scenario::Custom => {
                let path = f.input.as_ref().ok_or_else(|| Error::MissingKey {
                    line: 0,
                    key: "field.input".into(),
                })?;
                let loaded = load_field_file(path, self.units)?;
                if loaded.grid() == &grid {
                    return Ok(loaded);
                }
                let amps = loaded.values_at(&grid.coordinates());
                SampledField::with_domain(grid, amps, loaded.wavenumber(), loaded.domain())
            }
        }
    }

    /// Every effective key, one `key = value` line each, preceded by `header`
    /// comment lines and followed by `results` as `# result.name = value`.
    pub fn manifest(&self, header: &[String], results: &[(String, String)]) -> String {
        let mut out = String::from("# krphase run manifest\n");
        for h in header {
            out.push_str(&format!("# {h}\n"));
        }
        for key in KEYS {
            if let Some(v) = self.value_of(key) {
                out.push_str(&format!("{key} = {v}\n"));
            }
        }
        for (k, v) in results {
            out.push_str(&format!("# result.{k} = {v}\n"));
        }
        out
    }

    pub fn write_manifest(
        &self,
        path: impl AsRef<Path>,
        header: &[String],
        results: &[(String, String)],
    ) -> Result<()> {
        fs::write(path, self.manifest(header, results))?;
        Ok(())
    }

    fn value_of(&self, key: &str) -> Option<String> {
        let f = &self.field;
        let v = match key {
            "units" => self.units.to_string(),
            "grid.n_points" => self.n_points.to_string(),
            "grid.extent" => self.extent.to_string(),
            "field.scenario" => f.scenario.to_string(),
            "field.input" => return f.input.as_ref().map(|p| p.display().to_string()),
            "field.waist" => f.waist.to_string(),
            "field.curvature_radius" => f.curvature_radius.to_string(),
            "field.center" => f.center.to_string(),
            "field.wire_half_width" => f.wire_half_width.to_string(),
            "field.wavenumber" => f.wavenumber.to_string(),
            "lo.a" => self.lo.a.to_string(),
            "lo.A" => self.lo.big_a.to_string(),
            "lo.alpha" => self.lo.alpha.to_string(),
            "lo.focal_length" => self.lo.focal_length.to_string(),
            "lo.freq_signal" => self.lo.freq_signal.to_string(),
            "lo.freq_lo1" => self.lo.freq_lo1.to_string(),
            "lo.freq_lo2" => self.lo.freq_lo2.to_string(),
            "lo.analyzer_bandwidth" => self.lo.analyzer_bandwidth.to_string(),
            "scan.dx_max" => self.scan.dx_max.to_string(),
            "scan.nx" => self.scan.nx.to_string(),
            "scan.p0_max" => self.scan.p0_max.to_string(),
            "scan.np" => self.scan.np.to_string(),
            "dsp.sample_rate" => self.dsp.sample_rate.to_string(),
            "dsp.demod_periods" => self.dsp.demod_periods.to_string(),
            "dsp.guard_periods" => self.dsp.guard_periods.to_string(),
            "dsp.quadrature_phase" => self.dsp.quadrature_phase_deg.to_string(),
            "dsp.with_spurs" => self.dsp.with_spurs.to_string(),
            "transform.sigma_ref" => match self.sigma_ref {
                SigmaRef::Auto => "auto".into(),
                SigmaRef::Value(v) => v.to_string(),
            },
            "transform.p_floor" => self.reg.floor.to_string(),
            "transform.p_taper" => self.reg.taper_samples.to_string(),
            "transform.p_kernel_cap" => match self.reg.kernel_cap {
                Some(c) => c.to_string(),
                None => "none".into(),
            },
            _ => return None,
        };
        Some(v)
    }
}

/// Loads a field from `.bin` (binary grid format) or CSV.
pub fn load_field_file(path: &Path, fallback_mode: UnitMode) -> Result<SampledField<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => binary::load_field(path),
        _ => csv::read_field_csv(path, fallback_mode),
    }
}

/// Raw `key = value` assignments with the line each came from. Line 0 marks a
/// value set outside any file, for example on the command line.
#[derive(Clone, Debug, Default)]
pub struct ConfigBuilder {
    entries: BTreeMap<&'static str, (String, usize)>,
}

impl ConfigBuilder {
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<&mut Self> {
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| Error::UnknownKey {
            line,
            key: key.to_string(),
        })?;
        self.entries.insert(known, (value.trim().to_string(), line));
        Ok(self)
    }

    /// Applies a `key=value` assignment given outside a file.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<&mut Self> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| Error::BadValue {
            line: 0,
            key: assignment.to_string(),
            reason: "expected key=value".into(),
        })?;
        self.set(k.trim(), v, 0)
    }

    pub fn parse_str(&mut self, text: &str) -> Result<&mut Self> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| Error::BadValue {
                line,
                key: content.to_string(),
                reason: "expected `key = value`".into(),
            })?;
            self.set(k.trim(), v, line)?;
        }
        Ok(self)
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(_, l)| *l)
    }

    fn get<V: FromStr>(&self, key: &'static str) -> Result<Option<V>>
    where
        V::Err: fmt::Display,
    {
        let Some((raw, line)) = self.entries.get(key) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|e: V::Err| Error::BadValue {
            line: *line,
            key: key.to_string(),
            reason: e.to_string(),
        })
    }

    fn range(&self, key: &'static str, reason: impl Into<String>) -> Error {
        Error::OutOfRange {
            line: self.line_of(key),
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn positive(&self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.get::<f64>(key)?.unwrap_or(default);
        if v > 0.0 && !v.is_nan() {
            Ok(v)
        } else {
            Err(self.range(key, format!("must be positive, got {v}")))
        }
    }

    fn finite_nonnegative(&self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.get::<f64>(key)?.unwrap_or(default);
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.range(key, format!("must be finite and nonnegative, got {v}")))
        }
    }

    fn count(&self, key: &'static str, default: usize, min: usize) -> Result<usize> {
        let v = self.get::<usize>(key)?.unwrap_or(default);
        if v >= min {
            Ok(v)
        } else {
            Err(self.range(key, format!("must be at least {min}, got {v}")))
        }
    }

    pub fn build(&self) -> Result<RunConfig> {
        let units: UnitMode = self.get("units")?.unwrap_or_default();
        let mm = units == UnitMode::Millimeters;
        let waist_scale = if mm { 1.0 } else { 1.0 / LAB_SIGNAL_WAIST_MM };

        let scenario: Scenario = self.get("field.scenario")?.unwrap_or(Scenario::Gaussian);
        let input: Option<PathBuf> = self.get("field.input")?;
        if scenario == Scenario::Custom && input.is_none() {
            return Err(Error::MissingKey {
                line: self.line_of("field.scenario"),
                key: "field.input".into(),
            });
        }
        let waist = self.positive("field.waist", LAB_SIGNAL_WAIST_MM * waist_scale)?;

        let n_points = self.count("grid.n_points", DEFAULT_POINTS, 2)?;
        if n_points % 2 != 0 {
            return Err(self.range("grid.n_points", format!("must be even, got {n_points}")));
        }
        let extent = self.positive("grid.extent", DEFAULT_EXTENT_PER_WAIST * waist)?;
        if !extent.is_finite() {
            return Err(self.range("grid.extent", "must be finite"));
        }

        let curvature_radius = self.get::<f64>("field.curvature_radius")?.unwrap_or(f64::INFINITY);
        if curvature_radius == 0.0 || curvature_radius.is_nan() {
            return Err(self.range("field.curvature_radius", "must be nonzero (inf for a flat wavefront)"));
        }
        let center = self.get::<f64>("field.center")?.unwrap_or(0.0);
        if center.abs() >= extent / 2.0 || center.is_nan() {
            return Err(self.range("field.center", format!("must lie inside ±{}", extent / 2.0)));
        }
        let wire_half_width = self.finite_nonnegative("field.wire_half_width", WIRE_HALF_WIDTH_MM * waist_scale)?;
        if wire_half_width >= extent / 2.0 {
            return Err(self.range(
                "field.wire_half_width",
                format!("must be below half the grid extent ({})", extent / 2.0),
            ));
        }
        let wavenumber = self.positive("field.wavenumber", units.default_wavenumber())?;

        let defaults = LOConfig::<f64>::lab(units);
        let lo = LOConfig {
            a: self.positive("lo.a", defaults.a)?,
            big_a: self.positive("lo.A", defaults.big_a)?,
            alpha: self.finite_nonnegative("lo.alpha", defaults.alpha)?,
            focal_length: self.positive("lo.focal_length", defaults.focal_length)?,
            freq_signal: self.positive("lo.freq_signal", defaults.freq_signal)?,
            freq_lo1: self.positive("lo.freq_lo1", defaults.freq_lo1)?,
            freq_lo2: self.positive("lo.freq_lo2", defaults.freq_lo2)?,
            analyzer_bandwidth: self.positive("lo.analyzer_bandwidth", defaults.analyzer_bandwidth)?,
        };
        if let Err(Error::InvalidParameter { name, reason }) = lo.validate() {
            return Err(self.range(name, reason));
        }

        let scan_default = ScanConfig::<f64>::lab(units, waist, DEFAULT_SCAN_POINTS, DEFAULT_SCAN_POINTS);
        let scan = ScanSpec {
            dx_max: self.finite_nonnegative("scan.dx_max", -scan_default.dx.origin)?,
            nx: self.count("scan.nx", DEFAULT_SCAN_POINTS, 1)?,
            p0_max: self.finite_nonnegative("scan.p0_max", -scan_default.p0.origin)?,
            np: self.count("scan.np", DEFAULT_SCAN_POINTS, 1)?,
        };

        let dsp_default = DspSpec::<f64>::default();
        let quadrature_phase_deg = self
            .get::<f64>("dsp.quadrature_phase")?
            .unwrap_or(dsp_default.quadrature_phase_deg);
        if !(-180.0..=180.0).contains(&quadrature_phase_deg) {
            return Err(self.range("dsp.quadrature_phase", "must lie in [-180, 180] degrees"));
        }
        let dsp = DspSpec {
            sample_rate: self.positive("dsp.sample_rate", dsp_default.sample_rate)?,
            demod_periods: self.count("dsp.demod_periods", dsp_default.demod_periods, 1)?,
            guard_periods: self.count("dsp.guard_periods", dsp_default.guard_periods, 0)?,
            quadrature_phase_deg,
            with_spurs: self.get("dsp.with_spurs")?.unwrap_or(dsp_default.with_spurs),
        };

        let sigma_ref = match self.entries.get("transform.sigma_ref") {
            None => SigmaRef::Auto,
            Some((raw, _)) if raw == "auto" => SigmaRef::Auto,
            Some(_) => SigmaRef::Value(self.positive("transform.sigma_ref", 1.0)?),
        };
        let reg_default = RegSpec::<f64>::default();
        let floor = self.finite_nonnegative("transform.p_floor", reg_default.floor)?;
        if floor >= 1.0 {
            return Err(self.range("transform.p_floor", "must be below 1"));
        }
        let kernel_cap = match self.entries.get("transform.p_kernel_cap") {
            None => reg_default.kernel_cap,
            Some((raw, _)) if raw == "none" => None,
            Some(_) => {
                let c = self.positive("transform.p_kernel_cap", 1.0)?;
                if c <= 1.0 {
                    return Err(self.range("transform.p_kernel_cap", "must exceed 1 (or be `none`)"));
                }
                Some(c)
            }
        };
        let reg = RegSpec {
            floor,
            taper_samples: self.count("transform.p_taper", reg_default.taper_samples, 0)?,
            kernel_cap,
        };

        Ok(RunConfig {
            units,
            n_points,
            extent,
            field: FieldSpec {
                scenario,
                input,
                waist,
                curvature_radius,
                center,
                wire_half_width,
                wavenumber,
            },
            lo,
            scan,
            dsp,
            sigma_ref,
            reg,
        })
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    ConfigBuilder::default().parse_str(text)?.build()
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_config_str(&fs::read_to_string(path)?)
}
