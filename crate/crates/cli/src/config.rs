//! Layered TOML configuration.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, then
//! `--set key=value` overrides in command-line order. Tables merge key by
//! key, except that a table whose `kind` changes is replaced wholesale so
//! that fields of the previous variant do not leak into the new one.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use nls_core::randomization::{synthesize_data, Profile};
use nls_core::solver::{Scheme, SolverConfig};
use nls_core::{io, Complex, Field, Grid, View};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

/// Resolves a command configuration from defaults, an optional file and overrides.
pub fn resolve<C>(file: Option<&Path>, overrides: &[String]) -> Result<C>
where
    C: Default + Serialize + DeserializeOwned,
{
    let mut table = Table::try_from(C::default()).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parsed: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config(format!("{}: {}", path.display(), e.message())))?;
        merge(&mut table, parsed);
    }
    for item in overrides {
        let (key, value) = parse_override(item)?;
        set_path(&mut table, &key, value)?;
    }
    C::deserialize(Value::Table(table)).map_err(|e| CliError::config(e.message().to_string()))
}

fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) if b.get("kind") == o.get("kind") || o.get("kind").is_none() => {
                merge(b, o)
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Splits `a.b=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn parse_override(item: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{item}` is not of the form key=value")))?;
    let key: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if key.iter().any(String::is_empty) {
        return Err(CliError::config(format!("override `{item}` has an empty key segment")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()));
    Ok((key, value))
}

fn set_path(table: &mut Table, key: &[String], value: Value) -> Result<()> {
    let (last, parents) = key.split_last().expect("non-empty key");
    let mut cur = table;
    for (depth, part) in parents.iter().enumerate() {
        let entry = cur.entry(part.clone()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("`{}` is not a table", key[..=depth].join("."))))?;
    }
    if last == "kind" && cur.get("kind") != Some(&value) {
        cur.clear();
    }
    cur.insert(last.clone(), value);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { dim: 1, n: 64, length: TAU }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid<f64>> {
        Ok(Grid::new(self.dim, self.n, self.length)?)
    }
}

/// Initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `amplitude · e^{ik·x}` with `k` an integer lattice mode.
    PlaneWave { mode: Vec<i64>, amplitude: f64 },
    /// `amplitude · exp(−|x|²/(2 width²))` about the origin (minimum image).
    Gaussian { width: f64, amplitude: f64 },
    /// Fourier decay `⟨ξ⟩^{−s−d/2−ε}`, optionally cut off at `radius`.
    PowerLaw {
        s: f64,
        epsilon: f64,
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
        #[serde(default)]
        radial: bool,
        #[serde(default)]
        phase_seed: u64,
    },
    /// A field file written by this tool.
    File { path: PathBuf },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Gaussian { width: 0.5, amplitude: 1.0 }
    }
}

impl DataSpec {
    pub fn build(&self, grid: &Grid<f64>) -> Result<Field<f64>> {
        Ok(match self {
            DataSpec::PlaneWave { mode, amplitude } => {
                if mode.len() != grid.dim() {
                    return Err(CliError::config(format!(
                        "plane-wave mode has {} components on a {}-D grid",
                        mode.len(),
                        grid.dim()
                    )));
                }
                Field::plane_wave(grid, mode, Complex::new(*amplitude, 0.0))
            }
            DataSpec::Gaussian { width, amplitude } => {
                if !(*width > 0.0) {
                    return Err(CliError::config("gaussian width must be positive"));
                }
                let values = (0..grid.len())
                    .map(|i| {
                        let r = grid.centered_radius(i);
                        Complex::new(amplitude * (-r * r / (2.0 * width * width)).exp(), 0.0)
                    })
                    .collect();
                Field::from_values(grid, values, View::Physical)?
            }
            DataSpec::PowerLaw { s, epsilon, amplitude, radius, radial, phase_seed } => {
                let profile = match radius {
                    Some(radius) => Profile::CompactBump { radius: *radius },
                    None => Profile::PowerLaw,
                };
                synthesize_data(grid, *s, *epsilon, profile, *radial, *phase_seed)?
                    .scaled(Complex::new(*amplitude, 0.0))
            }
            DataSpec::File { path } => {
                let (field, _) = io::load_field::<f64>(path)?;
                if field.grid() != grid {
                    return Err(CliError::config(format!(
                        "{} holds a (d={}, n={}, L={}) field, config asks for (d={}, n={}, L={})",
                        path.display(),
                        field.grid().dim(),
                        field.grid().n(),
                        field.grid().box_length(),
                        grid.dim(),
                        grid.n(),
                        grid.box_length()
                    )));
                }
                field
            }
        })
    }

    pub fn source_file(&self) -> Option<&Path> {
        match self {
            DataSpec::File { path } => Some(path),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub dt: f64,
    pub t_end: f64,
    pub mu: f64,
    pub dealias: bool,
    pub save_stride: usize,
    pub scheme: Scheme,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 0.1, mu: 1.0, dealias: true, save_stride: 10, scheme: Scheme::Strang }
    }
}

impl SolverSpec {
    pub fn build(&self) -> Result<SolverConfig<f64>> {
        let cfg = SolverConfig::new(self.dt, self.t_end)
            .with_mu(self.mu)
            .with_dealias(self.dealias)
            .with_stride(self.save_stride)
            .with_scheme(self.scheme);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `count` consecutive seeds starting at `first`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedRange {
    pub first: u64,
    pub count: usize,
}

impl Default for SeedRange {
    fn default() -> Self {
        Self { first: 0, count: 8 }
    }
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.first..).take(self.count).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct Demo {
        steps: usize,
        grid: GridSpec,
        data: DataSpec,
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn override_values_parse_as_toml_literals() {
        assert_eq!(parse_override("a.b=3").unwrap(), (vec!["a".into(), "b".into()], Value::Integer(3)));
        assert_eq!(parse_override("x=[1, 2]").unwrap().1, Value::Array(vec![Value::Integer(1), Value::Integer(2)]));
        assert_eq!(parse_override("kind=plane_wave").unwrap().1, Value::String("plane_wave".into()));
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let f = file("steps = 5\n[grid]\nn = 32\n");
        let c: Demo = resolve(Some(f.path()), &["grid.n=16".into()]).unwrap();
        assert_eq!(c.steps, 5);
        assert_eq!(c.grid.n, 16);
        assert_eq!(c.grid.dim, GridSpec::default().dim);
    }

    #[test]
    fn switching_kind_replaces_the_table() {
        let f = file("[data]\nkind = \"plane_wave\"\nmode = [2]\namplitude = 0.5\n");
        let c: Demo = resolve(Some(f.path()), &[]).unwrap();
        assert_eq!(c.data, DataSpec::PlaneWave { mode: vec![2], amplitude: 0.5 });
        let c: Demo = resolve(None, &["data.kind=file".into(), "data.path=u.field".into()]).unwrap();
        assert_eq!(c.data, DataSpec::File { path: "u.field".into() });
        let c: Demo = resolve(None, &["data.amplitude=3.0".into()]).unwrap();
        assert_eq!(c.data, DataSpec::Gaussian { width: 0.5, amplitude: 3.0 });
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = resolve::<Demo>(None, &["grid.size=3".into()]).unwrap_err().to_string();
        assert!(err.contains("size"), "{err}");
        let f = file("stepz = 1\n");
        let err = resolve::<Demo>(Some(f.path()), &[]).unwrap_err().to_string();
        assert!(err.contains("stepz"), "{err}");
    }

    #[test]
    fn grid_mismatch_on_file_data_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.field");
        let g = Grid::new(1, 16, TAU).unwrap();
        io::save_field(&path, &Field::plane_wave(&g, &[1], Complex::new(1.0, 0.0)), 0.0).unwrap();
        let spec = DataSpec::File { path };
        assert!(spec.build(&g).is_ok());
        assert!(spec.build(&Grid::new(1, 32, TAU).unwrap()).is_err());
    }
}
