//! Experiment configuration: `[section]` headers followed by `key = value`
//! lines. `#` starts a comment. Lists are whitespace separated.
//!
//! ```text
//! [run]
//! mode = sweep
//! seed = 7
//!
//! [domain]
//! kind = disk
//! radius = 1
//!
//! [data]
//! source = random
//! count = 5
//!
//! [inequality]
//! p = 1 2 4
//! h = 0.08 0.04 0.02
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::coefficients::{CoefficientField, FieldSpec, SymMat2};
use crate::geometry::{Domain, Point};
use crate::solver::{Analytic, BoundaryData, FourierSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Verify,
    MeanValue,
    Extremal,
    Sweep,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verify" => Ok(Mode::Verify),
            "meanvalue" => Ok(Mode::MeanValue),
            "extremal" => Ok(Mode::Extremal),
            "sweep" => Ok(Mode::Sweep),
            _ => Err(format!("unknown mode '{s}'")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Verify => "verify",
            Mode::MeanValue => "meanvalue",
            Mode::Extremal => "extremal",
            Mode::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryChoice {
    /// Ball for disks, smooth for ellipses, cone for polygons.
    Auto,
    Ball,
    Smooth,
    Cone,
    John,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Single(BoundaryData),
    /// `count` seeded random trigonometric data of the given degree. Without
    /// an explicit seed the run seed is used.
    Random {
        count: usize,
        degree: usize,
        seed: Option<u64>,
    },
}

impl DataSpec {
    /// Boundary data in config order.
    pub fn items(&self, run_seed: u64) -> Vec<BoundaryData> {
        match self {
            DataSpec::Single(d) => vec![d.clone()],
            DataSpec::Random {
                count,
                degree,
                seed,
            } => {
                let base = seed.unwrap_or(run_seed);
                (0..*count as u64)
                    .map(|i| {
                        BoundaryData::Fourier(FourierSeries::random(*degree, base.wrapping_add(i)))
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanValueSettings {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Closed form to sample instead of solving with the boundary data.
    pub reference: Option<Analytic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSettings {
    pub degree: usize,
    pub population: usize,
    pub iterations: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
    /// `None`: gated unless the field is variable.
    pub gated: Option<bool>,
    pub slack_tolerance: f64,
    pub domain: Domain,
    pub field: CoefficientField,
    pub data: Option<DataSpec>,
    pub alpha: f64,
    pub p_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub geometry: GeometryChoice,
    pub meanvalue: MeanValueSettings,
    pub extremal: ExtremalSettings,
}

/// One planned solve-and-verify run of a verify or sweep config.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub index: usize,
    pub data_index: usize,
    pub data: BoundaryData,
    pub p: f64,
    pub h: f64,
}

impl ExperimentConfig {
    /// Cartesian product data × p × h, in that nesting order.
    pub fn planned_runs(&self) -> Vec<PlannedRun> {
        let items = self
            .data
            .as_ref()
            .map(|d| d.items(self.seed))
            .unwrap_or_default();
        let mut runs = Vec::new();
        for (data_index, data) in items.iter().enumerate() {
            for &p in &self.p_list {
                for &h in &self.h_list {
                    runs.push(PlannedRun {
                        index: runs.len(),
                        data_index,
                        data: data.clone(),
                        p,
                        h,
                    });
                }
            }
        }
        runs
    }

    pub fn is_gated(&self) -> bool {
        self.gated
            .unwrap_or_else(|| self.field.constant_matrix().is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based; 0 for problems not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "run",
        &["mode", "out", "seed", "workers", "gated", "slack_tolerance"],
    ),
    (
        "domain",
        &["kind", "center", "radius", "a", "b", "vertices"],
    ),
    (
        "field",
        &[
            "kind", "matrix", "cell", "even", "odd", "min_eig", "max_eig", "seed",
        ],
    ),
    ("data", &["source", "count", "degree", "seed"]),
    ("inequality", &["alpha", "p", "h", "geometry"]),
    ("meanvalue", &["centers", "radii", "reference"]),
    ("extremal", &["degree", "population", "iterations", "h"]),
];

type Entries<'a> = BTreeMap<&'a str, Vec<(&'a str, &'a str, usize)>>;

struct Parser<'a> {
    entries: Entries<'a>,
    section_lines: BTreeMap<&'a str, usize>,
    diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn diag(&mut self, line: usize, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            line,
            message: message.into(),
        });
    }

    fn get(&self, section: &str, key: &str) -> Option<(&'a str, usize)> {
        self.entries
            .get(section)?
            .iter()
            .rev()
            .find(|(k, _, _)| *k == key)
            .map(|(_, v, l)| (*v, *l))
    }

    fn number<T: FromStr>(&mut self, section: &str, key: &str) -> Option<T> {
        let (v, line) = self.get(section, key)?;
        match v.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.diag(line, format!("malformed number '{v}' for '{key}'"));
                None
            }
        }
    }

    fn list(&mut self, section: &str, key: &str) -> Option<(Vec<f64>, usize)> {
        let (v, line) = self.get(section, key)?;
        let parsed: Result<Vec<f64>, _> = v.split_whitespace().map(str::parse).collect();
        match parsed {
            Ok(x) if !x.is_empty() => Some((x, line)),
            _ => {
                self.diag(line, format!("malformed number list '{v}' for '{key}'"));
                None
            }
        }
    }

    fn matrix(&mut self, section: &str, key: &str) -> Option<SymMat2> {
        let (m, line) = self.list(section, key)?;
        match m.as_slice() {
            [xx, xy, yy] => Some(SymMat2::new(*xx, *xy, *yy)),
            _ => {
                self.diag(line, format!("'{key}' expects three numbers: xx xy yy"));
                None
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, Diagnostics> {
    parse_config_for(text, None)
}

/// Like [`parse_config`], with the run mode forced (as a CLI subcommand does).
pub fn parse_config_for(text: &str, mode: Option<Mode>) -> Result<ExperimentConfig, Diagnostics> {
    let mut p = Parser {
        entries: BTreeMap::new(),
        section_lines: BTreeMap::new(),
        diags: Vec::new(),
    };
    let mut current: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            match SECTIONS.iter().find(|(s, _)| *s == name) {
                Some((s, _)) => {
                    current = Some(s);
                    p.section_lines.entry(s).or_insert(line_no);
                    p.entries.entry(s).or_default();
                }
                None => {
                    p.diag(line_no, format!("unknown section '[{name}]'"));
                    current = None;
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            p.diag(line_no, format!("expected 'key = value', got '{line}'"));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current else {
            p.diag(line_no, format!("key '{key}' outside a known section"));
            continue;
        };
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|s| s.1)
            .unwrap_or(&[]);
        if !known.contains(&key) {
            p.diag(line_no, format!("unknown key '{key}' in [{section}]"));
            continue;
        }
        p.entries
            .entry(section)
            .or_default()
            .push((key, value, line_no));
    }

    // [run]
    let mode = match (mode, p.get("run", "mode")) {
        (Some(m), _) => Some(m),
        (None, Some((m, line))) => m.parse::<Mode>().map_err(|e| p.diag(line, e)).ok(),
        (None, None) => Some(Mode::Verify),
    };
    let out_dir = p
        .get("run", "out")
        .map_or_else(|| PathBuf::from("results"), |(v, _)| PathBuf::from(v));
    let seed = p.number::<u64>("run", "seed").unwrap_or(0);
    let workers = p.number::<usize>("run", "workers");
    let gated = match p.get("run", "gated") {
        Some((v, line)) => match v {
            "true" => Some(true),
            "false" => Some(false),
            _ => {
                p.diag(line, "gated must be true or false");
                None
            }
        },
        None => None,
    };
    let slack_tolerance = p.number::<f64>("run", "slack_tolerance").unwrap_or(0.02);

    // [domain]
    let domain = if p.entries.contains_key("domain") {
        let entries: Vec<(&str, &str)> = p.entries["domain"]
            .iter()
            .map(|(k, v, _)| (*k, *v))
            .collect();
        match Domain::from_entries(entries) {
            Ok(d) => Some(d),
            Err(e) => {
                let line = p.section_lines["domain"];
                p.diag(line, format!("invalid domain: {e}"));
                None
            }
        }
    } else {
        p.diag(0, "missing required section [domain]");
        None
    };

    // [field]
    let field = parse_field(&mut p);

    // [data]
    let data = if p.entries.contains_key("data") {
        parse_data(&mut p)
    } else {
        None
    };

    // [inequality]
    let alpha = p.number::<f64>("inequality", "alpha").unwrap_or(1.0);
    if !(alpha > 0.0 && alpha <= 1.0) {
        let line = p.get("inequality", "alpha").map_or(0, |x| x.1);
        p.diag(line, "alpha must lie in (0,1]");
    }
    let p_list = match p.list("inequality", "p") {
        Some((list, line)) => {
            if list.iter().any(|&x| !(x >= 1.0 && x.is_finite())) {
                p.diag(line, "p values must lie in [1, inf)");
            }
            list
        }
        None => vec![2.0],
    };
    let h_list = match p.list("inequality", "h") {
        Some((list, line)) => {
            if list.iter().any(|&x| !(x > 0.0)) {
                p.diag(line, "h values must be positive");
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                p.diag(line, "h list must be strictly decreasing");
            }
            list
        }
        None => vec![0.02],
    };
    let geometry = match p.get("inequality", "geometry") {
        None | Some(("auto", _)) => GeometryChoice::Auto,
        Some(("ball", _)) => GeometryChoice::Ball,
        Some(("smooth", _)) => GeometryChoice::Smooth,
        Some(("cone", _)) => GeometryChoice::Cone,
        Some(("john", _)) => GeometryChoice::John,
        Some((other, line)) => {
            p.diag(line, format!("unknown geometry '{other}'"));
            GeometryChoice::Auto
        }
    };

    // [meanvalue]
    let centers = match p.list("meanvalue", "centers") {
        Some((c, line)) => {
            if c.len() % 2 != 0 {
                p.diag(line, "centers need an even number of coordinates");
            }
            c.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
        }
        None => vec![[0.0, 0.0]],
    };
    let radii = match p.list("meanvalue", "radii") {
        Some((r, line)) => {
            if r.windows(2).any(|w| w[1] <= w[0]) || r.iter().any(|&x| !(x > 0.0)) {
                p.diag(line, "radii must be positive and strictly increasing");
            }
            r
        }
        None => vec![0.2, 0.4, 0.6],
    };
    let reference = match p.get("meanvalue", "reference") {
        Some((v, line)) => match v.parse::<Analytic>() {
            Ok(a) => Some(a),
            Err(e) => {
                p.diag(line, e.to_string());
                None
            }
        },
        None => None,
    };

    // [extremal]
    let extremal = ExtremalSettings {
        degree: p.number("extremal", "degree").unwrap_or(8),
        population: p.number("extremal", "population").unwrap_or(32),
        iterations: p.number("extremal", "iterations").unwrap_or(200),
        h: p.number("extremal", "h").unwrap_or(0.04),
    };
    if extremal.degree == 0 || extremal.degree > 12 {
        let line = p.get("extremal", "degree").map_or(0, |x| x.1);
        p.diag(line, "extremal degree must lie in 1..=12");
    }

    if let Some(mode) = mode {
        let needs_data = matches!(mode, Mode::Verify | Mode::Sweep)
            || (mode == Mode::MeanValue && reference.is_none());
        if needs_data && !p.entries.contains_key("data") {
            p.diag(
                0,
                format!("missing required section [data] for mode {mode}"),
            );
        }
    }

    if !p.diags.is_empty() {
        p.diags.sort_by_key(|d| d.line);
        return Err(Diagnostics(p.diags));
    }
    Ok(ExperimentConfig {
        mode: mode.expect("checked"),
        out_dir,
        seed,
        workers,
        gated,
        slack_tolerance,
        domain: domain.expect("checked"),
        field: field.expect("checked"),
        data,
        alpha,
        p_list,
        h_list,
        geometry,
        meanvalue: MeanValueSettings {
            centers,
            radii,
            reference,
        },
        extremal,
    })
}

fn parse_field(p: &mut Parser<'_>) -> Option<CoefficientField> {
    if !p.entries.contains_key("field") {
        return Some(CoefficientField::identity());
    }
    let seed = p.number::<u64>("field", "seed").unwrap_or(0);
    let header = p.section_lines["field"];
    let (kind, line) = p.get("field", "kind").unwrap_or(("identity", header));
    let spec = match kind {
        "identity" => FieldSpec::Identity,
        "constant" => FieldSpec::Constant(p.matrix("field", "matrix").or_else(|| {
            p.diag(line, "constant field needs 'matrix'");
            None
        })?),
        "checkerboard" => {
            let cell = p.number("field", "cell");
            let even = p.matrix("field", "even");
            let odd = p.matrix("field", "odd");
            match (cell, even, odd) {
                (Some(cell), Some(even), Some(odd)) => FieldSpec::Checkerboard { cell, even, odd },
                _ => {
                    p.diag(line, "checkerboard field needs 'cell', 'even' and 'odd'");
                    return None;
                }
            }
        }
        "random" => {
            let cell = p.number("field", "cell");
            let lo = p.number("field", "min_eig");
            let hi = p.number("field", "max_eig");
            match (cell, lo, hi) {
                (Some(cell), Some(min_eig), Some(max_eig)) => FieldSpec::RandomCells {
                    cell,
                    min_eig,
                    max_eig,
                },
                _ => {
                    p.diag(line, "random field needs 'cell', 'min_eig' and 'max_eig'");
                    return None;
                }
            }
        }
        other => {
            p.diag(line, format!("unknown field kind '{other}'"));
            return None;
        }
    };
    match CoefficientField::new(spec, seed) {
        Ok(f) => Some(f),
        Err(e) => {
            p.diag(line, format!("invalid field: {e}"));
            None
        }
    }
}

fn parse_data(p: &mut Parser<'_>) -> Option<DataSpec> {
    let header = p.section_lines["data"];
    let Some((source, line)) = p.get("data", "source") else {
        p.diag(header, "[data] needs 'source'");
        return None;
    };
    if source == "random" {
        let count = p.number("data", "count").unwrap_or(1);
        let degree = p.number("data", "degree").unwrap_or(8);
        let seed = p.number("data", "seed");
        if count == 0 {
            p.diag(line, "random data needs count >= 1");
        }
        return Some(DataSpec::Random {
            count,
            degree,
            seed,
        });
    }
    match source.parse::<BoundaryData>() {
        Ok(d) => Some(DataSpec::Single(d)),
        Err(e) => {
            p.diag(line, e.to_string());
            None
        }
    }
}
