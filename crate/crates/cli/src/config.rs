//! Run settings: config file first, then command-line flags on top.

use std::path::{Path, PathBuf};
use std::time::Duration;

use qmap_core::driver::{DriverError, MapConfig};
use qmap_core::kv::parse_pairs;
use qmap_core::latency::LatencyTable;
use qmap_core::requp::{ArchParams, QecProfile};
use qmap_core::templates::GateTemplateTable;
use qmap_core::time::{parse_decimal, Micros, Rational};

use crate::args::{ArchArgs, Format};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e.to_string())
        } else if e.is_internal() {
            CliError::Internal(e.to_string())
        } else if let DriverError::Invalid(diags) = &e {
            let lines: Vec<String> = diags.iter().map(|d| d.render("input")).collect();
            CliError::Input(format!("{e}\n{}", lines.join("\n")))
        } else {
            CliError::Input(e.to_string())
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug)]
pub struct Settings {
    pub ks: Vec<u32>,
    pub budgets: Vec<u64>,
    pub alpha_int: u32,
    pub beta_pmd: Micros,
    pub gamma_l2: Rational,
    pub qec: QecProfile,
    pub latencies: LatencyTable,
    pub placeholder_latencies: bool,
    pub templates: Option<GateTemplateTable>,
    pub map: MapConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Settings {
    pub fn params(&self, k: u32, budget: u64) -> ArchParams {
        ArchParams { k, alpha_int: self.alpha_int, beta_pmd: self.beta_pmd, gamma_l2: self.gamma_l2, b_qrcr: budget }
    }
}

/// Raw string values gathered from the config file and flags.
#[derive(Debug, Default)]
struct Raw {
    k: Option<String>,
    budget: Option<String>,
    alpha_int: Option<String>,
    beta_pmd: Option<String>,
    gamma_l2: Option<String>,
    qec: Option<String>,
    latency_table: Option<PathBuf>,
    templates: Option<PathBuf>,
    tolerance: Option<String>,
    timeout: Option<String>,
    seed: Option<String>,
    out: Option<PathBuf>,
    format: Option<String>,
}

fn load_config(path: &Path) -> Result<Raw, CliError> {
    let text = read_file(path)?;
    let pairs = parse_pairs(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut raw = Raw::default();
    for (line, key, value) in pairs {
        let relative = |v: &str| base.join(v);
        match key.as_str() {
            "k" => raw.k = Some(value),
            "budget" => raw.budget = Some(value),
            "alpha_int" => raw.alpha_int = Some(value),
            "beta_pmd" => raw.beta_pmd = Some(value),
            "gamma_l2" => raw.gamma_l2 = Some(value),
            "qec" => {
                raw.qec = Some(if QecProfile::builtin(&value).is_some() { value } else { relative(&value).display().to_string() })
            }
            "latency_table" => raw.latency_table = Some(relative(&value)),
            "templates" => raw.templates = Some(relative(&value)),
            "tolerance" => raw.tolerance = Some(value),
            "timeout" => raw.timeout = Some(value),
            "seed" => raw.seed = Some(value),
            "out" => raw.out = Some(relative(&value)),
            "format" => raw.format = Some(value),
            other => {
                return Err(CliError::Input(format!("{}: line {line}: unknown key `{other}`", path.display())));
            }
        }
    }
    Ok(raw)
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::Input(format!("invalid {what} `{}`", s.trim()))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(what: &str, text: &str) -> Result<T, CliError> {
    text.trim().parse().map_err(|_| CliError::Input(format!("invalid {what} `{text}`")))
}

fn join<T: ToString>(values: &[T]) -> Option<String> {
    (!values.is_empty()).then(|| values.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
}

pub fn resolve(ks: &[u32], budgets: &[u64], arch: &ArchArgs) -> Result<Settings, CliError> {
    let mut raw = match &arch.config {
        Some(path) => load_config(path)?,
        None => Raw::default(),
    };
    macro_rules! over {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                raw.$field = Some(v);
            }
        };
    }
    over!(k, join(ks));
    over!(budget, join(budgets));
    over!(alpha_int, arch.alpha_int.map(|v| v.to_string()));
    over!(beta_pmd, arch.beta_pmd.clone());
    over!(gamma_l2, arch.gamma_l2.clone());
    over!(qec, arch.qec.clone());
    over!(latency_table, arch.latency_table.clone());
    over!(templates, arch.templates.clone());
    over!(tolerance, arch.tolerance.map(|v| v.to_string()));
    over!(timeout, arch.timeout.map(|v| v.to_string()));
    over!(seed, arch.seed.map(|v| v.to_string()));
    over!(out, arch.out.clone());
    over!(format, arch.format.map(|f| if f == Format::Csv { "csv".to_string() } else { "json".to_string() }));

    let ks: Vec<u32> = parse_list("core count", raw.k.as_deref().ok_or_else(|| CliError::Input("missing --k".into()))?)?;
    let budgets: Vec<u64> =
        parse_list("budget", raw.budget.as_deref().ok_or_else(|| CliError::Input("missing --budget".into()))?)?;
    let alpha_int = raw.alpha_int.as_deref().map(|v| parse_one("alpha_int", v)).transpose()?.unwrap_or(3);
    let beta_pmd = match raw.beta_pmd.as_deref() {
        Some(v) => Micros::from_ratio(parse_decimal(v).ok_or_else(|| CliError::Input(format!("invalid beta_pmd `{v}`")))?),
        None => Micros::from_int(10),
    };
    let gamma_l2 = match raw.gamma_l2.as_deref() {
        Some(v) => parse_decimal(v).ok_or_else(|| CliError::Input(format!("invalid gamma_l2 `{v}`")))?,
        None => Rational::new(1, 5),
    };
    let qec = match raw.qec.as_deref() {
        None => QecProfile::steane(),
        Some(name) => match QecProfile::builtin(name) {
            Some(p) => p,
            None => QecProfile::parse(&read_file(Path::new(name))?).map_err(|e| CliError::Input(format!("{name}: {e}")))?,
        },
    };
    let templates = raw
        .templates
        .as_deref()
        .map(|p| GateTemplateTable::parse(&read_file(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))))
        .transpose()?;
    let (latencies, placeholder_latencies) = match (&raw.latency_table, &templates) {
        (Some(p), _) => {
            (LatencyTable::parse(&read_file(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?, false)
        }
        (None, Some(t)) => (t.latencies(), false),
        (None, None) => (LatencyTable::placeholder(), true),
    };
    let mut map = MapConfig::default();
    if let Some(v) = raw.tolerance.as_deref() {
        map.tolerance = parse_one("tolerance", v)?;
        if map.tolerance.is_nan() || map.tolerance < 1.0 {
            return Err(CliError::Input("tolerance must be at least 1".into()));
        }
    }
    if let Some(v) = raw.timeout.as_deref() {
        let secs: f64 = parse_one("timeout", v)?;
        map.timeout = Duration::try_from_secs_f64(secs).map_err(|_| CliError::Input(format!("invalid timeout `{v}`")))?;
    }
    if let Some(v) = raw.seed.as_deref() {
        map.seed = parse_one("seed", v)?;
    }
    let format = match raw.format.as_deref() {
        None | Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        Some(other) => return Err(CliError::Input(format!("unknown format `{other}`"))),
    };
    Ok(Settings {
        ks,
        budgets,
        alpha_int,
        beta_pmd,
        gamma_l2,
        qec,
        latencies,
        placeholder_latencies,
        templates,
        map,
        out: raw.out,
        format,
    })
}
