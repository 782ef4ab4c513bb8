//! Run configuration: a small `section { key = value }` language and its
//! typed reading into [`RunConfig`].
//!
//! ```text
//! # comment
//! grid { lower = [-2, -2]  upper = [2, 2]  n = 129 }
//! scene {
//!   reference = [0, 0]
//!   screw { burgers = 0.1  center = [0, 0]  core_radius = 0.05 }
//! }
//! ```
//!
//! Values are numbers, `true`/`false`, bare words, double-quoted strings and
//! `[ ... ]` lists (commas optional). Entries are separated by whitespace,
//! newlines or `;`. Sections that describe a repeatable object (`screw`,
//! `blob`, `loop`, `path`, `geodesic`) may appear more than once.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use defectgeom_core::defects::{DefectKind, DefectScene, DensityBlob, Displacement, ScalarSpec, ScrewSource};
use defectgeom_core::evolution::Boundary;
use defectgeom_core::geometry::DEFAULT_STRAIN_GUARD;
use defectgeom_core::point_defects::DEFAULT_EXCESS_GUARD;
use defectgeom_core::tensor::{Mat3, Vec3};
use defectgeom_core::{CurvatureForm, Grid2D, Polyline};

use crate::error::{invalid, io_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Word(String),
    Text(String),
    List(Vec<Value>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    Value(Value),
    Section(Vec<Entry>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub pos: Pos,
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    Text(String),
    Sym(char),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
    path: &'a str,
}

impl<'a> Lexer<'a> {
    fn err(&self, pos: Pos, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, Pos)>> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let start = self.pos;
            if c.is_whitespace() || c == ',' || c == ';' {
                self.bump();
            } else if c == '#' {
                while self.chars.peek().is_some_and(|c| *c != '\n') {
                    self.bump();
                }
            } else if matches!(c, '{' | '}' | '[' | ']' | '=') {
                self.bump();
                out.push((Tok::Sym(c), start));
            } else if c == '"' {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => return Err(self.err(start, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(e @ ('"' | '\\')) => s.push(e),
                            _ => return Err(self.err(start, "unknown escape in string")),
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                out.push((Tok::Text(s), start));
            } else if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') {
                let mut s = String::new();
                while self
                    .chars
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '+' | '.'))
                {
                    s.push(self.bump().unwrap());
                }
                let v: f64 = s.parse().map_err(|_| self.err(start, format!("malformed number `{s}`")))?;
                out.push((Tok::Number(v), start));
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while self.chars.peek().is_some_and(|c| c.is_alphanumeric() || *c == '_') {
                    s.push(self.bump().unwrap());
                }
                out.push((Tok::Word(s), start));
            } else {
                return Err(self.err(start, format!("unexpected character `{c}`")));
            }
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    path: &'a str,
    end: Pos,
}

impl Parser<'_> {
    fn err(&self, pos: Pos, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&(Tok, Pos)> {
        self.toks.get(self.at)
    }

    fn next(&mut self) -> Result<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned().ok_or_else(|| self.err(self.end, "unexpected end of input"))?;
        self.at += 1;
        Ok(t)
    }

    fn entries(&mut self, nested: bool) -> Result<Vec<Entry>> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None if nested => return Err(self.err(self.end, "missing `}`")),
                None => return Ok(out),
                Some((Tok::Sym('}'), p)) => {
                    if nested {
                        self.at += 1;
                        return Ok(out);
                    }
                    return Err(self.err(*p, "unmatched `}`"));
                }
                _ => {}
            }
            let (tok, pos) = self.next()?;
            let Tok::Word(key) = tok else {
                return Err(self.err(pos, "expected a key"));
            };
            let body = match self.next()? {
                (Tok::Sym('{'), _) => Body::Section(self.entries(true)?),
                (Tok::Sym('='), _) => Body::Value(self.value()?),
                (_, p) => return Err(self.err(p, format!("expected `=` or `{{` after `{key}`"))),
            };
            out.push(Entry { key, pos, body });
        }
    }

    fn value(&mut self) -> Result<Value> {
        let (tok, pos) = self.next()?;
        Ok(match tok {
            Tok::Number(v) => Value::Number(v),
            Tok::Text(s) => Value::Text(s),
            Tok::Word(w) if w == "true" => Value::Bool(true),
            Tok::Word(w) if w == "false" => Value::Bool(false),
            Tok::Word(w) => Value::Word(w),
            Tok::Sym('[') => {
                let mut items = Vec::new();
                loop {
                    if let Some((Tok::Sym(']'), _)) = self.peek() {
                        self.at += 1;
                        break;
                    }
                    if self.peek().is_none() {
                        return Err(self.err(pos, "unterminated list"));
                    }
                    items.push(self.value()?);
                }
                Value::List(items)
            }
            Tok::Sym(c) => return Err(self.err(pos, format!("unexpected `{c}`"))),
        })
    }
}

/// Parses config text into raw entries. `path` is only used in messages.
pub fn parse(text: &str, path: &str) -> Result<Vec<Entry>> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, col: 1 },
        path,
    };
    let end = {
        let lines = text.split('\n').count();
        Pos {
            line: lines,
            col: text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1,
        }
    };
    let toks = lexer.tokens()?;
    Parser { toks, at: 0, path, end }.entries(false)
}

/// Typed view of one section that remembers which keys were read.
struct Section<'a> {
    name: String,
    entries: &'a [Entry],
    used: RefCell<Vec<bool>>,
    path: &'a str,
}

impl<'a> Section<'a> {
    fn new(name: impl Into<String>, entries: &'a [Entry], path: &'a str) -> Self {
        Self {
            name: name.into(),
            entries,
            used: RefCell::new(vec![false; entries.len()]),
            path,
        }
    }

    fn field(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn find(&self, key: &str, want_section: bool) -> Result<Vec<usize>> {
        let mut hits = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.key != key {
                continue;
            }
            let is_section = matches!(e.body, Body::Section(_));
            if is_section != want_section {
                return Err(Error::Parse {
                    path: self.path.to_string(),
                    line: e.pos.line,
                    col: e.pos.col,
                    msg: format!(
                        "`{}` must be {}",
                        self.field(key),
                        if want_section { "a `{ ... }` section" } else { "a `key = value` entry" }
                    ),
                });
            }
            self.used.borrow_mut()[i] = true;
            hits.push(i);
        }
        Ok(hits)
    }

    fn value(&self, key: &str) -> Result<Option<&'a Value>> {
        let hits = self.find(key, false)?;
        if hits.len() > 1 {
            let e = &self.entries[hits[1]];
            return Err(Error::Parse {
                path: self.path.to_string(),
                line: e.pos.line,
                col: e.pos.col,
                msg: format!("duplicate key `{}`", self.field(key)),
            });
        }
        Ok(hits.first().map(|&i| match &self.entries[i].body {
            Body::Value(v) => v,
            Body::Section(_) => unreachable!(),
        }))
    }

    fn sections(&self, key: &str) -> Result<Vec<Section<'a>>> {
        Ok(self
            .find(key, true)?
            .into_iter()
            .map(|i| match &self.entries[i].body {
                Body::Section(s) => Section::new(self.field(key), s, self.path),
                Body::Value(_) => unreachable!(),
            })
            .collect())
    }

    fn section(&self, key: &str) -> Result<Option<Section<'a>>> {
        let mut all = self.sections(key)?;
        if all.len() > 1 {
            return Err(invalid(self.field(key), "section given more than once"));
        }
        Ok(all.pop())
    }

    /// Rejects every key that was never read.
    fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().zip(used.iter()).find(|(_, u)| !**u) {
            Some((e, _)) => Err(Error::UnknownKey {
                path: self.path.to_string(),
                line: e.pos.line,
                col: e.pos.col,
                key: e.key.clone(),
                section: if self.name.is_empty() { "top level".into() } else { self.name.clone() },
            }),
            None => Ok(()),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.value(key)? {
            None => Ok(None),
            Some(v) => as_number(v).map(Some).ok_or_else(|| invalid(self.field(key), "expected a number")),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| invalid(self.field(key), "missing"))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        match self.number(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e15 => Ok(Some(v as usize)),
            Some(_) => Err(invalid(self.field(key), "expected a non-negative integer")),
        }
    }

    fn numbers<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>> {
        match self.value(key)? {
            None => Ok(None),
            Some(v) => as_array::<N>(v)
                .map(Some)
                .ok_or_else(|| invalid(self.field(key), format!("expected a list of {N} numbers"))),
        }
    }

    fn word(&self, key: &str) -> Result<Option<&'a str>> {
        match self.value(key)? {
            None => Ok(None),
            Some(Value::Word(w)) | Some(Value::Text(w)) => Ok(Some(w)),
            Some(_) => Err(invalid(self.field(key), "expected a word")),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.value(key)? {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(invalid(self.field(key), "expected true or false")),
        }
    }

    /// A scalar `d` (read as `d·𝟙`) or a 3×3 nested list.
    fn matrix(&self, key: &str) -> Result<Option<Mat3>> {
        match self.value(key)? {
            None => Ok(None),
            Some(Value::Number(d)) => {
                let mut m = [[0.0; 3]; 3];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = *d;
                }
                Ok(Some(m))
            }
            Some(Value::List(rows)) if rows.len() == 3 => {
                let mut m = [[0.0; 3]; 3];
                for (row, v) in m.iter_mut().zip(rows) {
                    *row = as_array::<3>(v).ok_or_else(|| invalid(self.field(key), "rows must hold 3 numbers"))?;
                }
                Ok(Some(m))
            }
            Some(_) => Err(invalid(self.field(key), "expected a number or a 3x3 list")),
        }
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(x) => Some(*x),
        _ => None,
    }
}

fn as_array<const N: usize>(v: &Value) -> Option<[f64; N]> {
    let Value::List(items) = v else { return None };
    if items.len() != N {
        return None;
    }
    let mut out = [0.0; N];
    for (o, i) in out.iter_mut().zip(items) {
        *o = as_number(i)?;
    }
    Some(out)
}

/// Which pipeline a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    Analyze,
    Verify,
    Transport,
    Geodesic,
    Evolve,
}

impl Pipeline {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "analyze" => Pipeline::Analyze,
            "verify" => Pipeline::Verify,
            "transport" => Pipeline::Transport,
            "geodesic" => Pipeline::Geodesic,
            "evolve" => Pipeline::Evolve,
            _ => return None,
        })
    }
}

/// Default tolerances of the verification rows.
pub const DEFAULT_TOLERANCES: [(&str, f64); 11] = [
    ("kroener", 1e-3),
    ("metric_compatibility", 1e-10),
    ("torsion_recovery", 1e-13),
    ("contortion_closed_form", 1e-13),
    ("einstein", 1e-2),
    ("gauss_trace", 1e-2),
    ("stokes", 1e-3),
    ("holonomy", 0.05),
    ("conservation", 1e-10),
    ("hat_fixed_point", 1e-10),
    ("nonmetricity_identity", 5e-2),
];

/// Named tolerances, defaults merged with overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    /// Replaces a known tolerance; the value must be positive.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.0.contains_key(name) {
            return Err(invalid(
                format!("tolerances.{name}"),
                format!("unknown tolerance; known: {}", self.0.keys().cloned().collect::<Vec<_>>().join(", ")),
            ));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!("tolerances.{name}"), "must be positive"));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    /// Applies a `name=value` override.
    pub fn apply(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| invalid("--tol", format!("expected name=value, got `{spec}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| invalid(format!("tolerances.{}", name.trim()), format!("`{value}` is not a number")))?;
        self.set(name.trim(), v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Uniform grid with `h = (upper_x − lower_x)/(nx − 1)`; `ny` must give the same spacing.
    pub fn grid(&self) -> Result<Grid2D> {
        if self.nx < 2 || self.ny < 2 {
            return Err(invalid("grid.n", "need at least 2 nodes per axis"));
        }
        let h = (self.upper[0] - self.lower[0]) / (self.nx - 1) as f64;
        let hy = (self.upper[1] - self.lower[1]) / (self.ny - 1) as f64;
        if h.is_nan() || h <= 0.0 || (h - hy).abs() > 1e-9 * h {
            return Err(invalid("grid", format!("spacing must be equal on both axes (x: {h}, y: {hy})")));
        }
        Ok(Grid2D::new(self.lower, h, self.nx, self.ny)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifySpec {
    pub holonomy_center: Option<[f64; 2]>,
    pub holonomy_side: f64,
    /// Multiplies `κ` before the checks; 1 means no fault.
    pub kappa_fault: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub strain_guard: f64,
    pub excess_guard: f64,
    pub curvature_form: CurvatureForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSpec {
    pub vector: Vec3,
    pub loops: Vec<Polyline>,
    pub paths: Vec<Polyline>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSpec {
    pub start: [f64; 2],
    pub direction: Vec3,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesSpec {
    pub diffusivity: Mat3,
    pub thermodiffusivity: Mat3,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveSpec {
    pub dt: f64,
    pub t_end: f64,
    pub recombination: f64,
    pub velocity: [f64; 2],
    pub vacancy: SpeciesSpec,
    pub interstitial: SpeciesSpec,
    pub kappa_diffusivity: f64,
    pub kappa_thermodiffusivity: f64,
    pub kappa_boundary: Boundary,
    pub output_every: usize,
    pub project: bool,
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub scene: DefectScene,
    pub pipeline: Option<Pipeline>,
    pub out: PathBuf,
    pub refine: usize,
    pub seed: u64,
    pub vtk: bool,
    pub tolerances: Tolerances,
    pub verify: VerifySpec,
    pub geometry: GeometrySpec,
    pub transport: TransportSpec,
    pub geodesics: Vec<GeodesicSpec>,
    pub evolve: Option<EvolveSpec>,
}

/// Reads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_config(&text, &path.display().to_string())
}

/// [`load_config`] on text already in memory.
pub fn parse_config(text: &str, path: &str) -> Result<RunConfig> {
    let entries = parse(text, path)?;
    let top = Section::new("", &entries, path);
    let grid = read_grid(&top.section("grid")?.ok_or_else(|| invalid("grid", "missing"))?)?;
    let g = grid.grid()?;
    let scene = match top.section("scene")? {
        Some(s) => read_scene(&s, &g)?,
        None => DefectScene::empty(centre(&g)),
    };
    scene.validate(&g)?;

    let mut cfg = RunConfig {
        grid,
        scene,
        pipeline: None,
        out: PathBuf::from("out"),
        refine: 0,
        seed: 0,
        vtk: false,
        tolerances: Tolerances::default(),
        verify: VerifySpec {
            holonomy_center: None,
            holonomy_side: 0.1,
            kappa_fault: 1.0,
            samples: 1000,
        },
        geometry: GeometrySpec {
            strain_guard: DEFAULT_STRAIN_GUARD,
            excess_guard: DEFAULT_EXCESS_GUARD,
            curvature_form: CurvatureForm::Transport,
        },
        transport: TransportSpec {
            vector: [1.0, 0.0, 0.0],
            loops: Vec::new(),
            paths: Vec::new(),
        },
        geodesics: Vec::new(),
        evolve: None,
    };

    if let Some(s) = top.section("run")? {
        if let Some(p) = s.word("pipeline")? {
            cfg.pipeline = Some(Pipeline::parse(p).ok_or_else(|| invalid("run.pipeline", format!("unknown pipeline `{p}`")))?);
        }
        if let Some(o) = s.word("out")? {
            cfg.out = PathBuf::from(o);
        }
        cfg.refine = s.count("refine")?.unwrap_or(0);
        cfg.seed = s.count("seed")?.unwrap_or(0) as u64;
        cfg.vtk = s.flag("vtk", false)?;
        s.finish()?;
    }
    if let Some(s) = top.section("tolerances")? {
        for e in s.entries {
            let v = s.required(&e.key)?;
            cfg.tolerances.set(&e.key, v)?;
        }
        s.finish()?;
    }
    if let Some(s) = top.section("verify")? {
        cfg.verify.holonomy_center = s.numbers::<2>("holonomy_center")?;
        cfg.verify.holonomy_side = positive(&s, "holonomy_side", 0.1)?;
        cfg.verify.kappa_fault = s.number_or("kappa_fault", 1.0)?;
        cfg.verify.samples = s.count("samples")?.unwrap_or(1000).max(1);
        s.finish()?;
    }
    if let Some(s) = top.section("geometry")? {
        cfg.geometry.strain_guard = positive(&s, "strain_guard", DEFAULT_STRAIN_GUARD)?;
        cfg.geometry.excess_guard = positive(&s, "excess_guard", DEFAULT_EXCESS_GUARD)?;
        cfg.geometry.curvature_form = match s.word("curvature_form")? {
            None | Some("transport") => CurvatureForm::Transport,
            Some("bravais") => CurvatureForm::Bravais,
            Some(w) => return Err(invalid("geometry.curvature_form", format!("unknown form `{w}`"))),
        };
        s.finish()?;
    }
    if let Some(s) = top.section("transport")? {
        cfg.transport = read_transport(&s)?;
    }
    for s in top.sections("geodesic")? {
        let direction = s.numbers::<3>("direction")?.ok_or_else(|| invalid("geodesic.direction", "missing"))?;
        cfg.geodesics.push(GeodesicSpec {
            start: s.numbers::<2>("start")?.ok_or_else(|| invalid("geodesic.start", "missing"))?,
            direction,
            length: positive(&s, "length", 1.0)?,
        });
        s.finish()?;
    }
    if let Some(s) = top.section("evolve")? {
        cfg.evolve = Some(read_evolve(&s)?);
    }
    top.finish()?;
    Ok(cfg)
}

fn centre(g: &Grid2D) -> [f64; 2] {
    let (o, u) = (g.origin(), g.upper());
    [0.5 * (o[0] + u[0]), 0.5 * (o[1] + u[1])]
}

fn positive(s: &Section, key: &str, default: f64) -> Result<f64> {
    let v = s.number_or(key, default)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(s.field(key), "must be positive"));
    }
    Ok(v)
}

fn read_grid(s: &Section) -> Result<GridSpec> {
    let lower = s.numbers::<2>("lower")?.unwrap_or([-2.0, -2.0]);
    let upper = s.numbers::<2>("upper")?.unwrap_or([2.0, 2.0]);
    let (nx, ny) = match s.value("n")? {
        None => (129, 129),
        Some(Value::Number(_)) => {
            let n = s.count("n")?.unwrap();
            (n, n)
        }
        Some(v) => {
            let [a, b] = as_array::<2>(v).ok_or_else(|| invalid("grid.n", "expected a count or [nx, ny]"))?;
            if a < 0.0 || b < 0.0 || a.fract() != 0.0 || b.fract() != 0.0 {
                return Err(invalid("grid.n", "counts must be non-negative integers"));
            }
            (a as usize, b as usize)
        }
    };
    s.finish()?;
    Ok(GridSpec { lower, upper, nx, ny })
}

fn read_scalar_spec(s: &Section) -> Result<ScalarSpec> {
    let kind = s.word("kind")?.unwrap_or("uniform");
    let spec = match kind {
        "uniform" => ScalarSpec::Uniform(s.number_or("value", 0.0)?),
        "gaussian" => ScalarSpec::Gaussian {
            background: s.number_or("background", 0.0)?,
            amplitude: s.required("amplitude")?,
            center: s.numbers::<2>("center")?.unwrap_or([0.0, 0.0]),
            width: positive(s, "width", 1.0)?,
        },
        "linear" => ScalarSpec::Linear {
            value: s.number_or("value", 0.0)?,
            gradient: s.numbers::<2>("gradient")?.unwrap_or([0.0, 0.0]),
        },
        other => return Err(invalid(s.field("kind"), format!("unknown field kind `{other}`"))),
    };
    s.finish()?;
    Ok(spec)
}

fn read_scene(s: &Section, g: &Grid2D) -> Result<DefectScene> {
    let mut scene = DefectScene::empty(s.numbers::<2>("reference")?.unwrap_or_else(|| centre(g)));
    for sc in s.sections("screw")? {
        scene.screws.push(ScrewSource::new(
            sc.required("burgers")?,
            sc.numbers::<2>("center")?.unwrap_or([0.0, 0.0]),
            positive(&sc, "core_radius", 0.05)?,
        )?);
        sc.finish()?;
    }
    for b in s.sections("blob")? {
        let kind = match b.word("kind")? {
            Some("dislocation") => DefectKind::Dislocation,
            Some("disclination") => DefectKind::Disclination,
            Some(w) => return Err(invalid("scene.blob.kind", format!("unknown defect kind `{w}`"))),
            None => return Err(invalid("scene.blob.kind", "missing")),
        };
        scene.blobs.push(DensityBlob::new(
            kind,
            b.numbers::<3>("charge")?.ok_or_else(|| invalid("scene.blob.charge", "missing"))?,
            b.numbers::<2>("center")?.unwrap_or([0.0, 0.0]),
            positive(&b, "width", 0.3)?,
        )?);
        b.finish()?;
    }
    if let Some(d) = s.section("displacement")? {
        let amplitude = d.required("amplitude")?;
        let wavenumber = d.number_or("wavenumber", 1.0)?;
        scene.displacement = Some(match d.word("kind")? {
            Some("shear_wave") => Displacement::ShearWave { amplitude, wavenumber },
            Some("cellular") => Displacement::Cellular { amplitude, wavenumber },
            Some("antiplane") => Displacement::Antiplane { amplitude, wavenumber },
            Some("radial") => Displacement::Radial { amplitude, wavenumber },
            Some(w) => return Err(invalid("scene.displacement.kind", format!("unknown displacement `{w}`"))),
            None => return Err(invalid("scene.displacement.kind", "missing")),
        });
        d.finish()?;
    }
    if let Some(v) = s.section("vacancies")? {
        scene.vacancies = Some(read_scalar_spec(&v)?);
    }
    if let Some(v) = s.section("interstitials")? {
        scene.interstitials = Some(read_scalar_spec(&v)?);
    }
    if let Some(v) = s.section("temperature")? {
        scene.temperature = Some(read_scalar_spec(&v)?);
    }
    s.finish()?;
    Ok(scene)
}

fn read_transport(s: &Section) -> Result<TransportSpec> {
    let mut t = TransportSpec {
        vector: s.numbers::<3>("vector")?.unwrap_or([1.0, 0.0, 0.0]),
        loops: Vec::new(),
        paths: Vec::new(),
    };
    for l in s.sections("loop")? {
        let center = l.numbers::<2>("center")?.unwrap_or([0.0, 0.0]);
        let lp = match l.word("kind")?.unwrap_or("square") {
            "square" => Polyline::square(center, positive(&l, "side", 0.2)?)?,
            "circle" => Polyline::circle(center, positive(&l, "radius", 0.1)?, l.count("segments")?.unwrap_or(64))?,
            w => return Err(invalid("transport.loop.kind", format!("unknown loop `{w}`"))),
        };
        l.finish()?;
        t.loops.push(lp);
    }
    for p in s.sections("path")? {
        let pts = match p.value("points")? {
            Some(Value::List(items)) => items
                .iter()
                .map(|v| as_array::<2>(v).ok_or_else(|| invalid("transport.path.points", "expected [x, y] pairs")))
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(invalid("transport.path.points", "expected a list of [x, y] pairs")),
        };
        let closed = p.flag("closed", false)?;
        p.finish()?;
        t.paths.push(Polyline::new(pts, closed)?);
    }
    s.finish()?;
    Ok(t)
}

fn read_boundary(s: &Section, key: &str) -> Result<Boundary> {
    match s.word(key)? {
        None | Some("zero_flux") => Ok(Boundary::ZeroFlux),
        Some("dirichlet") => Ok(Boundary::Dirichlet),
        Some(w) => Err(invalid(s.field(key), format!("unknown boundary `{w}`"))),
    }
}

fn read_species(s: Option<Section>) -> Result<SpeciesSpec> {
    let Some(s) = s else {
        return Ok(SpeciesSpec {
            diffusivity: [[0.0; 3]; 3],
            thermodiffusivity: [[0.0; 3]; 3],
            boundary: Boundary::ZeroFlux,
        });
    };
    let spec = SpeciesSpec {
        diffusivity: s.matrix("diffusivity")?.unwrap_or([[0.0; 3]; 3]),
        thermodiffusivity: s.matrix("thermodiffusivity")?.unwrap_or([[0.0; 3]; 3]),
        boundary: read_boundary(&s, "boundary")?,
    };
    s.finish()?;
    Ok(spec)
}

fn read_evolve(s: &Section) -> Result<EvolveSpec> {
    let spec = EvolveSpec {
        dt: positive(s, "dt", 1e-3)?,
        t_end: s.number_or("t_end", 0.0)?,
        recombination: s.number_or("recombination", 0.0)?,
        velocity: s.numbers::<2>("velocity")?.unwrap_or([0.0, 0.0]),
        vacancy: read_species(s.section("vacancy")?)?,
        interstitial: read_species(s.section("interstitial")?)?,
        kappa_diffusivity: s.number_or("kappa_diffusivity", 0.0)?,
        kappa_thermodiffusivity: s.number_or("kappa_thermodiffusivity", 0.0)?,
        kappa_boundary: read_boundary(s, "kappa_boundary")?,
        output_every: s.count("output_every")?.unwrap_or(1).max(1),
        project: s.flag("project", false)?,
    };
    if spec.t_end.is_nan() || spec.t_end < 0.0 {
        return Err(invalid("evolve.t_end", "must be non-negative"));
    }
    s.finish()?;
    Ok(spec)
}
