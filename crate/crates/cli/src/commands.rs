//! The subcommands. Each returns the text of its main output plus any side
//! files; the caller decides where to write them.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use slhnet::ccd::{self, DesignRuleInputs};
use slhnet::fit::{self, FitConfig, FitError, NetlistModel};
use slhnet::linear::{self, LoweringError, PowerUnit, SpectrumConfig, DB_FLOOR_RATIO};
use slhnet::netlist::{self, Netlist, NetlistError, Overrides};
use slhnet::oracle::{self, OracleConfig, OracleError};
use slhnet::SlhTriple;

use crate::files::{self, FreeSpec};
use crate::{sig12, CliError, RunManifest};

/// Label used in manifests when no netlist path is given.
pub const BUILTIN_NETLIST: &str = "<builtin ccd.slh>";
pub const DEFAULT_GRID: &str = "1546:1554:401";
pub const DEFAULT_ORACLE_GRID: &str = "1549:1551:5";
/// Largest accepted linear-versus-oracle disagreement (relative).
pub const ORACLE_TOLERANCE: f64 = 1e-4;

/// Result of a command: the main output, extra files to write, and a
/// failure to report after writing them (a check that did not pass).
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub side_files: Vec<(PathBuf, String)>,
    pub failure: Option<CliError>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            side_files: Vec::new(),
            failure: None,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn netlist_err(label: &str, e: NetlistError) -> CliError {
    CliError::input(format!("{label}:{e}"))
}

fn lowering_err(e: LoweringError) -> CliError {
    match e {
        LoweringError::SingularDrift { .. } | LoweringError::Singular => {
            CliError::numeric(e.to_string())
        }
        _ => CliError::input(e.to_string()),
    }
}

fn oracle_err(e: OracleError) -> CliError {
    match e {
        OracleError::Lowering(l) => lowering_err(l),
        OracleError::OperatorScattering { .. } | OracleError::DimensionCap { .. } => {
            CliError::input(e.to_string())
        }
        _ => CliError::numeric(e.to_string()),
    }
}

/// Where the network comes from and how its parameters are set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelArgs {
    /// `None` selects the shipped coupled-cavity netlist.
    pub netlist: Option<PathBuf>,
    /// Key=value parameter file, applied before `set`.
    pub params: Option<PathBuf>,
    /// `NAME=VALUE` overrides.
    pub set: Vec<String>,
    pub n_eff: Option<f64>,
}

/// A parsed netlist with its overrides resolved.
#[derive(Debug, Clone)]
pub struct Model {
    pub netlist: Netlist,
    pub label: String,
    pub overrides: Overrides,
    /// Index used to turn probe wavelengths into frequencies.
    pub n_eff: f64,
}

impl Model {
    pub fn compile(&self) -> Result<SlhTriple, CliError> {
        netlist::compile(&self.netlist, &self.overrides).map_err(|e| netlist_err(&self.label, e))
    }
}

impl ModelArgs {
    fn record(&self, m: &mut RunManifest) {
        m.inputs.push(self.label());
        if let Some(p) = &self.params {
            m.inputs.push(p.display().to_string());
        }
        m.overrides.extend(self.set.iter().cloned());
        if let Some(n) = self.n_eff {
            m.settings.push(format!("n_eff={}", sig12(n)));
        }
    }

    fn label(&self) -> String {
        self.netlist
            .as_ref()
            .map_or_else(|| BUILTIN_NETLIST.to_string(), |p| p.display().to_string())
    }

    pub fn load(&self) -> Result<Model, CliError> {
        let label = self.label();
        let source = match &self.netlist {
            Some(p) => read_file(p)?,
            None => netlist::CCD_NETLIST.to_string(),
        };
        let parsed = netlist::parse(&source).map_err(|e| netlist_err(&label, e))?;

        let mut overrides = Overrides::new();
        if let Some(p) = &self.params {
            let text = read_file(p)?;
            let file =
                files::parse_params(&text).map_err(|e| e.in_file(&p.display().to_string()))?;
            overrides.extend(file);
        }
        for s in &self.set {
            let (k, v) = files::parse_assignment(s)?;
            overrides.insert(k, v);
        }
        let declares_n_eff = parsed.params().any(|(n, _)| n == "n_eff");
        if let Some(n) = self.n_eff {
            if !(n.is_finite() && n > 0.0) {
                return Err(CliError::input(format!(
                    "--n-eff must be positive (got {n})"
                )));
            }
            if declares_n_eff {
                overrides.insert("n_eff".into(), n.into());
            }
        }
        // Reject unknown or missing parameters before any numerics.
        let resolved = parsed
            .resolve_params(&overrides)
            .map_err(|e| netlist_err(&label, e))?;
        let n_eff = match resolved.get("n_eff") {
            Some(v) if v.im == 0.0 && v.re > 0.0 => v.re,
            Some(v) => {
                return Err(CliError::input(format!(
                    "n_eff must be real and positive (got {v})"
                )))
            }
            None => self.n_eff.unwrap_or(linear::DEFAULT_N_EFF),
        };
        Ok(Model {
            netlist: parsed,
            label,
            overrides,
            n_eff,
        })
    }
}

pub fn compose(args: &ModelArgs, out: Option<&Path>) -> Result<Output, CliError> {
    let mut m = RunManifest::new("compose");
    args.record(&mut m);
    m.outputs.extend(out.map(|p| p.display().to_string()));
    let g = args.load()?.compile()?;
    Ok(Output::ok(format!("{}{g}", m.header())))
}

/// 1-based port as given on the command line.
fn port_index(port: usize, n_ports: usize) -> Result<usize, CliError> {
    if port == 0 || port > n_ports {
        return Err(CliError::input(format!(
            "--port {port} is out of range for a {n_ports}-port network (ports count from 1)"
        )));
    }
    Ok(port - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumArgs {
    pub model: ModelArgs,
    pub grid: String,
    /// 1-based.
    pub port: usize,
    pub unit: PowerUnit,
    pub oracle: bool,
    pub max_photons: f64,
}

impl Default for SpectrumArgs {
    fn default() -> Self {
        Self {
            model: ModelArgs::default(),
            grid: DEFAULT_GRID.into(),
            port: 1,
            unit: PowerUnit::Db,
            oracle: false,
            max_photons: oracle::DEFAULT_MAX_PHOTONS,
        }
    }
}

fn check_photons(max_photons: f64) -> Result<(), CliError> {
    if !(max_photons > 0.0 && max_photons < 1.0) {
        return Err(CliError::input(format!(
            "--max-photons must lie in (0, 1) (got {max_photons})"
        )));
    }
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs, out: Option<&Path>) -> Result<Output, CliError> {
    let mut m = RunManifest::new("spectrum");
    args.model.record(&mut m);
    m.settings.push(format!("grid={}", args.grid));
    m.settings.push(format!("port={}", args.port));
    if args.unit == PowerUnit::Linear {
        m.settings.push("unit=w".into());
    }
    if args.oracle {
        m.settings
            .push(format!("oracle max_photons={}", sig12(args.max_photons)));
        check_photons(args.max_photons)?;
    }
    m.outputs.extend(out.map(|p| p.display().to_string()));

    let grid = files::parse_grid(&args.grid)?;
    let model = args.model.load()?;
    let g = model.compile()?;
    let port = port_index(args.port, g.n_ports())?;
    let cfg = SpectrumConfig {
        n_eff: model.n_eff,
        monitored_port: port,
        unit: args.unit,
        reference_power: None,
    };
    let s = linear::spectrum(&g, &[], &grid, &cfg).map_err(lowering_err)?;
    if !args.oracle {
        return Ok(Output::ok(format!(
            "{}{}",
            m.header(),
            files::write_spectrum(&s)
        )));
    }

    let unit = match args.unit {
        PowerUnit::Db => "db",
        PowerUnit::Linear => "w",
    };
    let mut text = m.header();
    let _ = writeln!(
        text,
        "wavelength_nm,power_{unit},oracle_power_{unit},oracle_relative_error"
    );
    let floor = s.reference_power * DB_FLOOR_RATIO;
    let mut failure = None;
    for (i, &(w, p)) in s.samples.iter().enumerate() {
        let cc = cross_check_at(&g, i, w, model.n_eff, args.max_photons)?;
        let rel = cc.relative_error(port, floor);
        let op = match args.unit {
            PowerUnit::Db => linear::to_db(cc.oracle_power[port], s.reference_power),
            PowerUnit::Linear => cc.oracle_power[port],
        };
        let _ = writeln!(
            text,
            "{},{},{},{}",
            sig12(w),
            sig12(p),
            sig12(op),
            sig12(rel)
        );
        if failure.is_none() {
            failure = oracle_failure(i, w, rel, &cc);
        }
    }
    Ok(Output {
        text,
        side_files: Vec::new(),
        failure,
    })
}

fn cross_check_at(
    g: &SlhTriple,
    index: usize,
    w: f64,
    n_eff: f64,
    max_photons: f64,
) -> Result<oracle::CrossCheck, CliError> {
    let omega = linear::wavelength_to_omega(w, n_eff).map_err(lowering_err)?;
    oracle::cross_check(g, omega, max_photons, &OracleConfig::default()).map_err(|e| match e {
        OracleError::Lowering(LoweringError::Singular) => CliError::numeric(format!(
            "drift matrix is singular at grid point {index} ({w} nm)"
        )),
        e => oracle_err(e),
    })
}

fn oracle_failure(index: usize, w: f64, rel: f64, cc: &oracle::CrossCheck) -> Option<CliError> {
    if !cc.converged {
        Some(CliError::numeric(format!(
            "oracle truncation did not converge at grid point {index} ({w} nm): change {:e}",
            cc.change
        )))
    } else if !(rel <= ORACLE_TOLERANCE) {
        Some(CliError::numeric(format!(
            "oracle and linear model disagree at grid point {index} ({w} nm): relative error {rel:e}"
        )))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleArgs {
    pub model: ModelArgs,
    pub grid: String,
    pub port: usize,
    pub max_photons: f64,
}

impl Default for OracleArgs {
    fn default() -> Self {
        Self {
            model: ModelArgs::default(),
            grid: DEFAULT_ORACLE_GRID.into(),
            port: 1,
            max_photons: oracle::DEFAULT_MAX_PHOTONS,
        }
    }
}

/// Linear model and master-equation oracle side by side, in linear power.
pub fn oracle_cmd(args: &OracleArgs, out: Option<&Path>) -> Result<Output, CliError> {
    let mut m = RunManifest::new("oracle");
    args.model.record(&mut m);
    m.settings.push(format!("grid={}", args.grid));
    m.settings.push(format!("port={}", args.port));
    m.settings
        .push(format!("max_photons={}", sig12(args.max_photons)));
    m.outputs.extend(out.map(|p| p.display().to_string()));
    check_photons(args.max_photons)?;

    let grid = files::parse_grid(&args.grid)?;
    linear::check_grid(&grid).map_err(lowering_err)?;
    let model = args.model.load()?;
    let g = model.compile()?;
    let port = port_index(args.port, g.n_ports())?;
    let reference = linear::lower(&g, 0.0).map_err(lowering_err)?.bypass_power();
    let floor = reference * DB_FLOOR_RATIO;

    let mut text = m.header();
    text.push_str("wavelength_nm,linear_power_w,oracle_power_w,relative_error,mean_photons,truncation_change,converged\n");
    let mut failure = None;
    for (i, &w) in grid.iter().enumerate() {
        let cc = cross_check_at(&g, i, w, model.n_eff, args.max_photons)?;
        let rel = cc.relative_error(port, floor);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            sig12(w),
            sig12(cc.linear_power[port]),
            sig12(cc.oracle_power[port]),
            sig12(rel),
            sig12(cc.mean_photons),
            sig12(cc.change),
            cc.converged
        );
        if failure.is_none() {
            failure = oracle_failure(i, w, rel, &cc);
        }
    }
    Ok(Output {
        text,
        side_files: Vec::new(),
        failure,
    })
}

/// Design-rule inputs plus the optional derived quantities.
pub fn check(
    params: Option<&Path>,
    set: &[String],
    out: Option<&Path>,
) -> Result<Output, CliError> {
    let mut m = RunManifest::new("check");
    m.inputs.extend(params.map(|p| p.display().to_string()));
    m.overrides.extend(set.iter().cloned());
    m.outputs.extend(out.map(|p| p.display().to_string()));

    let mut values = Overrides::new();
    if let Some(p) = params {
        let text = read_file(p)?;
        values.extend(files::parse_params(&text).map_err(|e| e.in_file(&p.display().to_string()))?);
    }
    for s in set {
        let (k, v) = files::parse_assignment(s)?;
        values.insert(k, v);
    }

    let mut d = DesignRuleInputs::default();
    let (mut n2, mut a_eff, mut transmittance) = (None, None, None);
    for (k, v) in &values {
        if v.im != 0.0 {
            return Err(CliError::input(format!("`{k}` must be real (got {v})")));
        }
        let x = v.re;
        match k.as_str() {
            "n2" => n2 = Some(x),
            "a_eff" => a_eff = Some(x),
            "transmittance" => transmittance = Some(x),
            _ => d.set(k, x).map_err(|e| CliError::input(e.to_string()))?,
        }
    }
    let derived_gamma = match (n2, a_eff) {
        (Some(n2), Some(a)) => {
            if values.contains_key("gamma_nl") {
                return Err(CliError::input(
                    "give either gamma_nl or n2 with a_eff, not both",
                ));
            }
            if !(n2 > 0.0 && a > 0.0) {
                return Err(CliError::input("n2 and a_eff must be positive"));
            }
            d.gamma_nl = ccd::nonlinear_parameter(n2, d.lambda_m, a);
            true
        }
        (None, None) => false,
        _ => return Err(CliError::input("n2 and a_eff must be given together")),
    };
    let r = ccd::assess(&d).map_err(|e| CliError::input(e.to_string()))?;

    let verdict = |b: bool| if b { "significant" } else { "negligible" };
    let mut text = m.header();
    if derived_gamma {
        let _ = writeln!(text, "gamma_nl = {}", sig12(d.gamma_nl));
    }
    let _ = writeln!(text, "criterion = {}", sig12(d.criterion));
    let _ = writeln!(text, "waveguide_phase_rad = {}", sig12(r.waveguide_phase));
    let _ = writeln!(text, "length_threshold_m = {}", sig12(r.length_threshold_m));
    let _ = writeln!(text, "waveguide = {}", verdict(r.waveguide_significant));
    let _ = writeln!(text, "enhancement = {}", sig12(r.enhancement));
    let _ = writeln!(text, "ring_phase_rad = {}", sig12(r.ring_phase));
    let _ = writeln!(text, "q_threshold = {}", sig12(r.q_threshold));
    let _ = writeln!(text, "ring = {}", verdict(r.ring_significant));
    if let Some(t) = transmittance {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::input(format!(
                "transmittance must lie in [0, 1] (got {t})"
            )));
        }
        let kappa = ccd::kappa_from_transmittance(t, d.n_eff, d.ell_r_m);
        let _ = writeln!(text, "kappa_rad_per_s = {}", sig12(kappa));
    }
    Ok(Output::ok(text))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitArgs {
    pub data: PathBuf,
    /// Initial guess and fixed values come from the model's parameters.
    pub model: ModelArgs,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    /// 1-based monitored port.
    pub port: usize,
    pub trace: Option<PathBuf>,
}

/// Free parameters used when the configuration names none: whichever of
/// the coupled-cavity parameters the netlist declares.
fn default_free(name: &str) -> Option<FreeSpec> {
    match name {
        "lambda_p_nm" | "lambda_c_nm" => Some(FreeSpec::Window(1.0)),
        "kappa" | "gamma_p" | "gamma_c" => Some(FreeSpec::Relative(0.5)),
        "phi" => Some(FreeSpec::Periodic),
        "eta" => Some(FreeSpec::Bounds {
            lower: 0.0,
            upper: 1.0,
            scale: None,
        }),
        _ => None,
    }
}

fn fit_err(e: FitError) -> CliError {
    match e {
        FitError::Lowering(l) => lowering_err(l),
        FitError::Model(_) => CliError::numeric(e.to_string()),
        _ => CliError::input(e.to_string()),
    }
}

pub fn fit_cmd(args: &FitArgs, out: Option<&Path>) -> Result<Output, CliError> {
    let mut m = RunManifest::new("fit");
    m.inputs.push(args.data.display().to_string());
    args.model.record(&mut m);
    m.inputs
        .extend(args.config.as_ref().map(|p| p.display().to_string()));
    m.settings.push(format!("port={}", args.port));
    m.outputs.extend(out.map(|p| p.display().to_string()));
    m.outputs
        .extend(args.trace.as_ref().map(|p| p.display().to_string()));

    let data_label = args.data.display().to_string();
    let data = files::read_spectrum(&read_file(&args.data)?).map_err(|e| e.in_file(&data_label))?;
    let settings = match &args.config {
        Some(p) => files::parse_fit_config(&read_file(p)?)
            .map_err(|e| e.in_file(&p.display().to_string()))?,
        None => files::FitSettings::default(),
    };
    let model = args.model.load()?;
    let probe = model.compile()?;
    let port = port_index(args.port, probe.n_ports())?;
    let initial = model
        .netlist
        .resolve_params(&model.overrides)
        .map_err(|e| netlist_err(&model.label, e))?;

    let free_specs: Vec<(String, FreeSpec)> = if settings.free.is_empty() {
        initial
            .keys()
            .filter_map(|k| default_free(k).map(|s| (k.clone(), s)))
            .collect()
    } else {
        settings.free.clone()
    };
    if free_specs.is_empty() {
        return Err(CliError::input(
            "no free parameters: add `free.NAME = ...` lines to the fit configuration",
        ));
    }
    let mut free = Vec::new();
    for (name, spec) in &free_specs {
        let v = initial.get(name).ok_or_else(|| {
            CliError::input(format!(
                "free parameter `{name}` is not declared by {}",
                model.label
            ))
        })?;
        if v.im != 0.0 {
            return Err(CliError::input(format!(
                "free parameter `{name}` must be real (got {v})"
            )));
        }
        free.push(spec.to_param(name, v.re));
    }
    let seed = args.seed.unwrap_or(settings.schedule.seed);
    m.seed = Some(seed);
    let fixed = initial
        .iter()
        .filter(|(k, _)| !free.iter().any(|p| &p.name == *k))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let cfg = FitConfig {
        free,
        fixed,
        seed,
        ..settings.schedule.clone()
    };

    let fm = NetlistModel {
        netlist: model.netlist.clone(),
        monitored_port: port,
        n_eff: model.n_eff,
    };
    let r = fit::anneal(&fm, &cfg, &data).map_err(fit_err)?;

    let mut text = m.header();
    let _ = writeln!(text, "# objective = {}", sig12(r.objective));
    let _ = writeln!(text, "# evaluations = {}", r.evaluations);
    let _ = writeln!(text, "# restarts = {}", r.restarts_used);
    let _ = writeln!(text, "# converged = {}", r.converged);
    let _ = writeln!(
        text,
        "# free = {}",
        r.free
            .iter()
            .map(|(k, _)| k.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    text.push_str(&files::write_params(&r.params));

    let mut side_files = Vec::new();
    if let Some(path) = &args.trace {
        let mut t = m.header();
        t.push_str("restart,evaluations,temperature,current,best\n");
        for e in &r.trace {
            let _ = writeln!(
                t,
                "{},{},{},{},{}",
                e.restart,
                e.evaluations,
                sig12(e.temperature),
                sig12(e.current),
                sig12(e.best)
            );
        }
        side_files.push((path.clone(), t));
    }
    Ok(Output {
        text,
        side_files,
        failure: None,
    })
}
