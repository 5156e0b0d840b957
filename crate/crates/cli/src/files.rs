//! Text formats: wavelength grids, `NAME=VALUE` assignments, key=value
//! parameter and fit-configuration files, and spectrum CSV.
//!
//! In every format a `#` starts a comment and blank lines are ignored.

use std::fmt::Write;

use slhnet::fit::{FitConfig, FitParam};
use slhnet::linear::{PowerUnit, Spectrum};
use slhnet::netlist::{self, Overrides};
use slhnet::Complex64;

use crate::{sig12, CliError};

/// `start_nm:stop_nm:count`, evenly spaced and inclusive of both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::input(format!("grid `{spec}`: {why}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [start, stop, count] = parts[..] else {
        return Err(bad("expected start_nm:stop_nm:count"));
    };
    let start: f64 = start.parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = stop.parse().map_err(|_| bad("stop is not a number"))?;
    let count: usize = count
        .parse()
        .map_err(|_| bad("count is not a positive integer"))?;
    if !(start.is_finite() && stop.is_finite() && start > 0.0) {
        return Err(bad("wavelengths must be positive"));
    }
    match count {
        0 => Err(bad("count must be at least 1")),
        1 => Ok(vec![start]),
        _ if stop <= start => Err(bad("stop must exceed start")),
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            Ok((0..count)
                .map(|i| {
                    if i == count - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect())
        }
    }
}

/// A parameter value in netlist literal syntax: `2.5`, `-1e9`, `0.3-1.2i`.
pub fn parse_value(text: &str) -> Result<Complex64, CliError> {
    netlist::parse_literal(text)
        .map_err(|e| CliError::input(format!("value `{}`: {}", text.trim(), e.kind)))
}

/// `NAME=VALUE` as given to `--set`.
pub fn parse_assignment(text: &str) -> Result<(String, Complex64), CliError> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| CliError::input(format!("`{text}`: expected NAME=VALUE")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(CliError::input(format!("`{text}`: empty parameter name")));
    }
    Ok((name.to_string(), parse_value(value)?))
}

/// One `key = value` line with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn read_entries(text: &str) -> Result<Vec<Entry>, CliError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::input(format!("{}: expected key=value", i + 1)));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::input(format!("{}: empty key", i + 1)));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(CliError::input(format!(
                "{}: `{key}` already set on line {}",
                i + 1,
                prev.line
            )));
        }
        out.push(Entry {
            line: i + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

/// A parameter file: one `name = value` per line.
pub fn parse_params(text: &str) -> Result<Overrides, CliError> {
    read_entries(text)?
        .into_iter()
        .map(|e| {
            let v = parse_value(&e.value)
                .map_err(|err| CliError::input(format!("{}: {}", e.line, err.message)))?;
            Ok((e.key, v))
        })
        .collect()
}

/// A parameter block in the format [`parse_params`] reads.
pub fn write_params(params: &Overrides) -> String {
    let mut s = String::new();
    for (k, v) in params {
        let _ = writeln!(s, "{k} = {}", format_value(*v));
    }
    s
}

pub fn format_value(z: Complex64) -> String {
    if z.im == 0.0 {
        return sig12(z.re);
    }
    let im = format!("{}i", sig12(z.im.abs()));
    match (z.re == 0.0, z.im < 0.0) {
        (true, false) => im,
        (true, true) => format!("-{im}"),
        (false, neg) => format!("{}{}{im}", sig12(z.re), if neg { '-' } else { '+' }),
    }
}

fn unit_column(unit: PowerUnit) -> &'static str {
    match unit {
        PowerUnit::Db => "power_db",
        PowerUnit::Linear => "power_w",
    }
}

/// `wavelength_nm,power_db` (or `power_w`) with a row per sample.
pub fn write_spectrum(s: &Spectrum) -> String {
    let mut out = format!("wavelength_nm,{}\n", unit_column(s.unit));
    for (w, p) in &s.samples {
        let _ = writeln!(out, "{},{}", sig12(*w), sig12(*p));
    }
    out
}

/// Reads a spectrum CSV. Extra columns are ignored; a `power_db` column is
/// preferred over `power_w`. Linear powers are taken relative to 1.
pub fn read_spectrum(text: &str) -> Result<Spectrum, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let w_col =
        col("wavelength_nm").ok_or_else(|| CliError::input("missing column `wavelength_nm`"))?;
    let (p_col, unit) = match (col("power_db"), col("power_w")) {
        (Some(c), _) => (c, PowerUnit::Db),
        (None, Some(c)) => (c, PowerUnit::Linear),
        (None, None) => return Err(CliError::input("missing column `power_db` (or `power_w`)")),
    };
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(format!("row at line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |c: usize, name: &str| -> Result<f64, CliError> {
            let raw = rec.get(c).ok_or_else(|| {
                CliError::input(format!("line {line}: column `{name}` is missing"))
            })?;
            raw.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    CliError::input(format!(
                        "line {line}: column `{name}`: `{raw}` is not a finite number"
                    ))
                })
        };
        let w = field(w_col, "wavelength_nm")?;
        let p = field(p_col, unit_column(unit))?;
        samples.push((w, p));
    }
    if samples.is_empty() {
        return Err(CliError::input("no data rows"));
    }
    let grid: Vec<f64> = samples.iter().map(|s| s.0).collect();
    slhnet::linear::check_grid(&grid).map_err(|e| CliError::input(e.to_string()))?;
    Ok(Spectrum {
        samples,
        unit,
        reference_power: 1.0,
    })
}

/// Free-parameter specification read from a fit configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeSpec {
    Bounds {
        lower: f64,
        upper: f64,
        scale: Option<f64>,
    },
    /// Bounds `initial·(1 ∓ fraction)`.
    Relative(f64),
    /// Bounds `initial ∓ half_width`.
    Window(f64),
    Periodic,
}

impl FreeSpec {
    pub fn to_param(&self, name: &str, initial: f64) -> FitParam {
        match *self {
            FreeSpec::Bounds {
                lower,
                upper,
                scale,
            } => {
                let mut p = FitParam::bounded(name, initial, lower, upper);
                if let Some(s) = scale {
                    p.scale = s;
                }
                p
            }
            FreeSpec::Relative(f) => FitParam::relative(name, initial, f),
            FreeSpec::Window(h) => FitParam::bounded(name, initial, initial - h, initial + h),
            FreeSpec::Periodic => FitParam::phase(name, initial),
        }
    }
}

fn parse_free(value: &str) -> Result<FreeSpec, String> {
    if value == "periodic" {
        return Ok(FreeSpec::Periodic);
    }
    if let Some(pct) = value.strip_suffix('%') {
        let f: f64 = pct
            .trim()
            .parse()
            .map_err(|_| format!("`{value}` is not a percentage"))?;
        if !(f > 0.0 && f.is_finite()) {
            return Err("percentage must be positive".into());
        }
        return Ok(FreeSpec::Relative(f / 100.0));
    }
    if let Some(h) = value.strip_prefix("+-") {
        let h: f64 = h
            .trim()
            .parse()
            .map_err(|_| format!("`{value}` is not a window"))?;
        if !(h > 0.0 && h.is_finite()) {
            return Err("window must be positive".into());
        }
        return Ok(FreeSpec::Window(h));
    }
    let nums: Vec<f64> = value
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            format!("`{value}`: expected LOWER:UPPER[:SCALE], PERCENT%, +-HALF_WIDTH or `periodic`")
        })?;
    match nums[..] {
        [lower, upper] => Ok(FreeSpec::Bounds {
            lower,
            upper,
            scale: None,
        }),
        [lower, upper, scale] => Ok(FreeSpec::Bounds {
            lower,
            upper,
            scale: Some(scale),
        }),
        _ => Err(format!(
            "`{value}`: expected LOWER:UPPER[:SCALE], PERCENT%, +-HALF_WIDTH or `periodic`"
        )),
    }
}

/// Contents of a fit configuration file.
///
/// ```text
/// free.kappa = 20%          # bounds relative to the initial value
/// free.lambda_p_nm = 1549:1551
/// free.lambda_c_nm = +-0.5    # initial value ± 0.5
/// free.phi = periodic
/// t0 = 0.01
/// cooling = 0.95
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitSettings {
    pub free: Vec<(String, FreeSpec)>,
    /// Schedule and seed; `free` and `fixed` are left empty.
    pub schedule: FitConfig,
    pub seed_set: bool,
}

pub fn parse_fit_config(text: &str) -> Result<FitSettings, CliError> {
    let mut out = FitSettings::default();
    for e in read_entries(text)? {
        let at = |msg: String| CliError::input(format!("{}: {msg}", e.line));
        let real = || -> Result<f64, CliError> {
            e.value
                .parse::<f64>()
                .map_err(|_| at(format!("`{}` expects a number, got `{}`", e.key, e.value)))
        };
        let count = || -> Result<usize, CliError> {
            e.value.parse::<usize>().map_err(|_| {
                at(format!(
                    "`{}` expects a non-negative integer, got `{}`",
                    e.key, e.value
                ))
            })
        };
        let s = &mut out.schedule;
        match e.key.as_str() {
            "t0" => s.t0 = Some(real()?),
            "cooling" => s.cooling = real()?,
            "steps_per_temperature" => s.steps_per_temperature = count()?,
            "stop_ratio" => s.stop_ratio = real()?,
            "max_evaluations" => s.max_evaluations = count()?,
            "restarts" => s.restarts = count()?,
            "restart_threshold" => s.restart_threshold = real()?,
            "seed" => {
                s.seed = e.value.parse().map_err(|_| {
                    at(format!(
                        "`seed` expects an unsigned integer, got `{}`",
                        e.value
                    ))
                })?;
                out.seed_set = true;
            }
            key => match key.strip_prefix("free.") {
                Some(name) if !name.is_empty() => {
                    let spec = parse_free(&e.value).map_err(at)?;
                    out.free.push((name.to_string(), spec));
                }
                _ => return Err(at(format!("unknown setting `{key}`"))),
            },
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1550:1550:1").unwrap(), vec![1550.0]);
        let g = parse_grid("1546:1554:201").unwrap();
        assert_eq!((g.len(), g[200]), (201, 1554.0));
        for bad in ["1:2", "2:1:5", "1:2:0", "-1:2:3", "a:2:3", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn assignments() {
        assert_eq!(
            parse_assignment("alpha=0.5-2i").unwrap(),
            ("alpha".into(), Complex64::new(0.5, -2.0))
        );
        assert!(parse_assignment("kappa").is_err());
        assert!(parse_assignment("=1").is_err());
        assert!(parse_assignment("k=x").is_err());
    }

    #[test]
    fn params_round_trip() {
        let text = "# guess\nkappa = 8e10\nalpha = 1-0.5i  # drive\n\nphi=0.5\n";
        let p = parse_params(text).unwrap();
        assert_eq!(p["alpha"], Complex64::new(1.0, -0.5));
        assert_eq!(parse_params(&write_params(&p)).unwrap(), p);
        let e = parse_params("kappa = 1\nkappa = 2\n").unwrap_err();
        assert!(e.message.starts_with("2:"), "{}", e.message);
        assert!(parse_params("kappa 1\n")
            .unwrap_err()
            .message
            .starts_with("1:"));
    }

    #[test]
    fn spectrum_csv() {
        let s = Spectrum {
            samples: vec![(1550.0, -3.25), (1551.0, -180.0)],
            unit: PowerUnit::Db,
            reference_power: 1.0,
        };
        let text = write_spectrum(&s);
        assert_eq!(text, "wavelength_nm,power_db\n1550,-3.25\n1551,-180\n");
        assert_eq!(read_spectrum(&format!("# header\n{text}")).unwrap(), s);
    }

    #[test]
    fn spectrum_csv_errors_name_the_place() {
        let e = read_spectrum("wavelength_nm,power\n1,2\n").unwrap_err();
        assert!(e.message.contains("power_db"));
        let e = read_spectrum("wavelength_nm,power_db\n1,2\n2,x\n").unwrap_err();
        assert!(
            e.message.contains("line 3") && e.message.contains("power_db"),
            "{}",
            e.message
        );
        assert!(read_spectrum("wavelength_nm,power_db\n2,1\n1,1\n").is_err());
        assert!(read_spectrum("wavelength_nm,power_db\n").is_err());
    }

    #[test]
    fn fit_config() {
        let text = "free.kappa = 20%\nfree.phi = periodic\nfree.lambda_p_nm = 1549:1551:0.01\nfree.eta = +-0.05\nt0 = 0.01\nseed = 9\n";
        let f = parse_fit_config(text).unwrap();
        assert_eq!(f.free.len(), 4);
        let eta = f.free[3].1.to_param("eta", 0.1);
        assert!((eta.lower - 0.05).abs() < 1e-15 && (eta.upper - 0.15).abs() < 1e-15);
        assert_eq!(f.free[0].1, FreeSpec::Relative(0.2));
        assert_eq!(f.schedule.t0, Some(0.01));
        assert!(f.seed_set && f.schedule.seed == 9);
        let p = f.free[2].1.to_param("lambda_p_nm", 1550.0);
        assert_eq!((p.lower, p.upper, p.scale), (1549.0, 1551.0, 0.01));
        assert!(parse_fit_config("cooling = fast\n")
            .unwrap_err()
            .message
            .starts_with("1:"));
        assert!(parse_fit_config("nonsense = 1\n").is_err());
        assert!(parse_fit_config("free.kappa = 1:2:3:4\n").is_err());
    }
}
