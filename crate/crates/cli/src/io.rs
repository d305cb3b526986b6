//! File formats: JSON for maps, branches and Γ elements, CSV for sampled data.
//!
//! JSON numbers are written in shortest round-trip form, so reading a file
//! back gives the identical map. CSV numbers carry 12 significant digits.

use std::fs;
use std::path::Path;

use lebesgue_circle::{BranchFunction, CircleMap, DensityGrid, GammaElement, HomotopyPath, Knot, DEFAULT_MARGIN};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Tolerance between a map file's declared branch point and its first branch.
const BRANCH_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub branch_point: f64,
    pub rotation_offset: f64,
    pub branch1: Vec<[f64; 3]>,
    pub branch2: Vec<[f64; 3]>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFile {
    pub knots: Vec<[f64; 3]>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFile {
    pub x: f64,
    pub y: f64,
    pub profile: Vec<[f64; 3]>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

fn triples(b: &BranchFunction) -> Vec<[f64; 3]> {
    b.knots().iter().map(|k| [k.x, k.y, k.dy]).collect()
}

fn knots(t: &[[f64; 3]]) -> impl Iterator<Item = Knot> + '_ {
    t.iter().map(|&k| Knot::from(k))
}

impl From<&CircleMap> for MapFile {
    fn from(m: &CircleMap) -> Self {
        Self {
            branch_point: m.branch_point(),
            rotation_offset: m.rotation_offset(),
            branch1: triples(m.branch1()),
            branch2: triples(m.branch2()),
            margin: m.margin(),
        }
    }
}

impl MapFile {
    pub fn to_map(&self) -> Result<CircleMap> {
        let b1 = BranchFunction::new(knots(&self.branch1), self.margin).map_err(CliError::Input)?;
        let b2 = BranchFunction::new(knots(&self.branch2), self.margin).map_err(CliError::Input)?;
        if (b1.hi() - self.branch_point).abs() > BRANCH_POINT_TOL {
            return Err(CliError::BranchPointMismatch { declared: self.branch_point, actual: b1.hi() });
        }
        CircleMap::new(b1, b2, self.rotation_offset).map_err(CliError::Input)
    }
}

impl From<&BranchFunction> for BranchFile {
    fn from(b: &BranchFunction) -> Self {
        Self { knots: triples(b), margin: b.margin() }
    }
}

impl BranchFile {
    pub fn to_branch(&self) -> Result<BranchFunction> {
        BranchFunction::new(knots(&self.knots), self.margin).map_err(CliError::Input)
    }
}

impl From<&GammaElement> for GammaFile {
    fn from(g: &GammaElement) -> Self {
        Self { x: g.x(), y: g.y(), profile: triples(g.profile()), margin: g.profile().margin() }
    }
}

impl GammaFile {
    pub fn to_element(&self) -> Result<GammaElement> {
        let profile = BranchFunction::new(knots(&self.profile), self.margin).map_err(CliError::Input)?;
        GammaElement::new(self.x, self.y, profile).map_err(CliError::Input)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json { path: path.into(), source })?;
    fs::write(path, text + "\n").map_err(CliError::io(path))
}

pub fn map_to_json(m: &CircleMap) -> String {
    serde_json::to_string(&MapFile::from(m)).expect("plain numbers serialize")
}

pub fn map_from_json(text: &str) -> Result<CircleMap> {
    let file: MapFile =
        serde_json::from_str(text).map_err(|source| CliError::Json { path: "<string>".into(), source })?;
    file.to_map()
}

pub fn read_map(path: &Path) -> Result<CircleMap> {
    read_json::<MapFile>(path)?.to_map()
}

pub fn write_map(path: &Path, m: &CircleMap) -> Result<()> {
    write_json(path, &MapFile::from(m))
}

pub fn read_branch(path: &Path) -> Result<BranchFunction> {
    read_json::<BranchFile>(path)?.to_branch()
}

pub fn write_branch(path: &Path, b: &BranchFunction) -> Result<()> {
    write_json(path, &BranchFile::from(b))
}

pub fn read_gamma(path: &Path) -> Result<GammaElement> {
    read_json::<GammaFile>(path)?.to_element()
}

pub fn write_gamma(path: &Path, g: &GammaElement) -> Result<()> {
    write_json(path, &GammaFile::from(g))
}

/// `x` with 12 significant digits, formatted like C's `%.12g`.
pub fn sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Columns `x, h(x)`.
pub fn write_density_csv(path: &Path, h: &DensityGrid) -> Result<()> {
    let rows = h.values().iter().enumerate().map(|(i, v)| [sig12(h.node(i)), sig12(*v)]);
    write_rows(path, ["x", "h(x)"], rows)
}

/// Columns `iter, residual`.
pub fn write_history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let rows = history.iter().enumerate().map(|(k, r)| [k.to_string(), sig12(*r)]);
    write_rows(path, ["iter", "residual"], rows)
}

/// Graph of the normalized map at `x = i / n`, `i = 0..=n`, plus the left
/// limit at the branch point; `n + 2` rows ordered by `x`.
///
/// Nodes at or beyond the branch point are read from the second branch, so the
/// branch point appears once with value 1 and once with value 0.
pub fn export_rows(m: &CircleMap, n: usize) -> Vec<[f64; 3]> {
    let n = n.max(1);
    let a = m.branch_point();
    let end = m.branch1().last();
    let mut rows = Vec::with_capacity(n + 2);
    let mut emitted_left = false;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        if !emitted_left && x >= a {
            rows.push([a, end.y, end.dy]);
            emitted_left = true;
        }
        let b = if x < a { m.branch1() } else { m.branch2() };
        let (y, dy) = b.eval_both(x).expect("node inside its branch");
        rows.push([x, y, dy]);
    }
    rows
}

/// Columns `x, f(x), f'(x)`; see [`export_rows`].
pub fn write_export_csv(path: &Path, m: &CircleMap, n: usize) -> Result<()> {
    let rows = export_rows(m, n).into_iter().map(|r| r.map(sig12));
    write_rows(path, ["x", "f(x)", "f'(x)"], rows)
}

/// File name of path sample `k`.
pub fn sample_file_name(k: usize) -> String {
    format!("sample_{k:04}.json")
}

/// Writes `index.csv` (columns `k, t, preservation_residual, gluing_residual,
/// branch_x, branch_y`) and one map JSON per sample into `dir`.
pub fn write_path(dir: &Path, path: &HomotopyPath) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    for (k, m) in path.samples().iter().enumerate() {
        write_map(&dir.join(sample_file_name(k)), m)?;
    }
    let rows = path.samples().iter().zip(path.reports()).enumerate().map(|(k, (m, r))| {
        let (bx, by) = m.branch_points();
        [
            k.to_string(),
            sig12(path.time(k)),
            sig12(r.preservation_residual),
            sig12(r.gluing_residual),
            sig12(bx),
            sig12(by),
        ]
    });
    write_rows(
        &dir.join("index.csv"),
        ["k", "t", "preservation_residual", "gluing_residual", "branch_x", "branch_y"],
        rows,
    )
}
