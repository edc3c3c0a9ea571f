//! Scenario files: `[section]` headers followed by `key = value` lines.
//!
//! ```text
//! [flux]
//! kind = burgers
//! step = 1/8
//!
//! [datum]
//! left = 1
//! jump = 0, 1/2
//! jump = 1, -1/2
//!
//! [scheme]
//! kind = wft
//! ```
//!
//! Numbers are integers, decimals or fractions and are kept exact. Blank
//! lines are ignored and `#` starts a comment that runs to the end of the
//! line. `jump` may repeat; every other key appears at most once.

use std::fmt::Write as _;
use std::sync::Arc;

use wavelab::datum::StepDatum;
use wavelab::envelope::PiecewiseAffineFn;
use wavelab::glimm::SamplingKind;
use wavelab::verifier::counterexample::splitting_flux;
use wavelab::verifier::{GlimmConfig, VerifyOptions};

use crate::error::{CliError, Result};
use crate::number::{format_exact, parse_exact, to_f64, Exact};

/// Flux of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxKind {
    /// `f(u) = u² / 2`.
    Burgers,
    /// The splitting construction with amplitude `α` and scales `L`, `ε`.
    Splitting {
        /// Amplitude `α`.
        alpha: Exact,
        /// Scale `L`.
        l: Exact,
        /// Scale `ε`.
        eps: Exact,
    },
    /// Samples at `start, start + step, ...`.
    Table {
        /// State of the first sample.
        start: Exact,
        /// Flux values.
        values: Vec<Exact>,
    },
}

/// Flux section.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSpec {
    /// Named flux or table.
    pub kind: FluxKind,
    /// Value grid step `ε_u`.
    pub step: Exact,
    /// State range sampled by named fluxes; the datum range when absent.
    pub range: Option<(Exact, Exact)>,
    /// Rescale the flux affinely so that every slope lies in `(0, 1)`.
    pub normalize: bool,
}

/// Sampling rule of a Glimm run.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// Van der Corput sequence.
    VanDerCorput,
    /// Seeded uniform samples.
    Uniform(u64),
    /// Explicit values, repeated.
    Explicit(Vec<Exact>),
}

/// Scheme section.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    /// Wavefront tracking.
    Wft {
        /// Event limit.
        max_events: Option<usize>,
    },
    /// Glimm scheme.
    Glimm {
        /// Grid step in space and time.
        eps_x: Exact,
        /// Number of time steps.
        steps: usize,
        /// Sampling rule.
        sampling: Sampling,
    },
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Flux section.
    pub flux: FluxSpec,
    /// Value left of every jump.
    pub left: Exact,
    /// Jumps `(x, value on the right)`, increasing in `x`.
    pub jumps: Vec<(Exact, Exact)>,
    /// Scheme section.
    pub scheme: SchemeSpec,
    /// Evaluate the potential and the checks that need it.
    pub qfrak: bool,
    /// Output directory.
    pub output: Option<String>,
}

/// Flux and datum on the value grid.
#[derive(Debug, Clone)]
pub struct Problem {
    /// Sampled flux.
    pub flux: Arc<PiecewiseAffineFn>,
    /// Step datum in grid indices.
    pub datum: StepDatum,
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    value: &'a str,
    col: usize,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Parse { line: self.no, col: self.col, msg: msg.into() }
    }

    fn exact(&self) -> Result<Exact> {
        parse_exact(self.value).map_err(|m| self.err(m))
    }

    fn list(&self) -> Result<Vec<Exact>> {
        self.value.split(',').map(|v| parse_exact(v).map_err(|m| self.err(m))).collect()
    }

    fn pair(&self) -> Result<(Exact, Exact)> {
        match self.list()?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(self.err(format!("'{}' expects two numbers", self.key))),
        }
    }

    fn bool(&self) -> Result<bool> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(self.err(format!("'{v}' is not true or false"))),
        }
    }

    fn count<T: std::str::FromStr>(&self) -> Result<T> {
        self.value.parse().map_err(|_| self.err(format!("'{}' is not a nonnegative integer", self.value)))
    }
}

#[derive(Default)]
struct Sections<'a> {
    flux: Vec<Line<'a>>,
    datum: Vec<Line<'a>>,
    scheme: Vec<Line<'a>>,
    verify: Vec<Line<'a>>,
    output: Vec<Line<'a>>,
}

fn split(text: &str) -> Result<Sections<'_>> {
    let mut s = Sections::default();
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let raw = raw.split_once('#').map_or(raw, |(code, _)| code);
        let indent = raw.len() - raw.trim_start().len();
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(CliError::Parse { line: no, col: indent + 1, msg: "unclosed section header".into() })?;
            if !["flux", "datum", "scheme", "verify", "output"].contains(&name.trim()) {
                return Err(CliError::Parse { line: no, col: indent + 2, msg: format!("unknown section '{name}'") });
            }
            current = Some(name.trim());
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(CliError::Parse { line: no, col: indent + 1, msg: "expected 'key = value'".into() });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        let col = indent + eq + 2 + (line[eq + 1..].len() - line[eq + 1..].trim_start().len());
        let entry = Line { no, key, value, col };
        let bucket = match current {
            Some("flux") => &mut s.flux,
            Some("datum") => &mut s.datum,
            Some("scheme") => &mut s.scheme,
            Some("verify") => &mut s.verify,
            Some("output") => &mut s.output,
            _ => return Err(CliError::Parse { line: no, col: indent + 1, msg: "key outside of any section".into() }),
        };
        if key != "jump" {
            if let Some(prev) = bucket.iter().find(|l| l.key == key) {
                return Err(CliError::Parse {
                    line: no,
                    col: indent + 1,
                    msg: format!("duplicate key '{key}', first set on line {}", prev.no),
                });
            }
        }
        bucket.push(entry);
    }
    Ok(s)
}

fn take<'a, 'b>(lines: &'b [Line<'a>], key: &str) -> Option<&'b Line<'a>> {
    lines.iter().find(|l| l.key == key)
}

fn reject_unknown(lines: &[Line<'_>], known: &[&str], section: &str) -> Result<()> {
    match lines.iter().find(|l| !known.contains(&l.key)) {
        Some(l) => Err(CliError::Parse {
            line: l.no,
            col: l.col.saturating_sub(l.key.len() + 3).max(1),
            msg: format!("unknown key '{}' in [{section}]", l.key),
        }),
        None => Ok(()),
    }
}

fn missing(section: &str, key: &str) -> CliError {
    CliError::Parse { line: 0, col: 0, msg: format!("missing '{key}' in [{section}]") }
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s = split(text)?;
    if s.flux.is_empty() {
        return Err(CliError::Parse { line: 0, col: 0, msg: "missing [flux] section".into() });
    }
    reject_unknown(&s.flux, &["kind", "step", "range", "normalize", "alpha", "l", "eps", "start", "values"], "flux")?;
    let kind_line = take(&s.flux, "kind").ok_or_else(|| missing("flux", "kind"))?;
    let step = take(&s.flux, "step").ok_or_else(|| missing("flux", "step"))?.exact()?;
    if step <= Exact::from_integer(0) {
        return Err(take(&s.flux, "step").unwrap().err("step must be positive"));
    }
    let need = |key: &str| take(&s.flux, key).ok_or_else(|| missing("flux", key));
    let kind = match kind_line.value {
        "burgers" => FluxKind::Burgers,
        "splitting" => FluxKind::Splitting { alpha: need("alpha")?.exact()?, l: need("l")?.exact()?, eps: need("eps")?.exact()? },
        "table" => FluxKind::Table { start: need("start")?.exact()?, values: need("values")?.list()? },
        v => return Err(kind_line.err(format!("unknown flux '{v}', expected burgers, splitting or table"))),
    };
    let range = take(&s.flux, "range").map(|l| l.pair()).transpose()?;
    let normalize = take(&s.flux, "normalize").map(|l| l.bool()).transpose()?.unwrap_or(false);

    reject_unknown(&s.datum, &["left", "jump"], "datum")?;
    let left = take(&s.datum, "left").ok_or_else(|| missing("datum", "left"))?.exact()?;
    let jumps = s.datum.iter().filter(|l| l.key == "jump").map(|l| l.pair()).collect::<Result<Vec<_>>>()?;

    reject_unknown(&s.scheme, &["kind", "max_events", "eps_x", "steps", "sampling"], "scheme")?;
    let scheme = match take(&s.scheme, "kind") {
        None => SchemeSpec::Wft { max_events: None },
        Some(l) if l.value == "wft" => {
            SchemeSpec::Wft { max_events: take(&s.scheme, "max_events").map(|l| l.count()).transpose()? }
        }
        Some(l) if l.value == "glimm" => {
            let eps_x = take(&s.scheme, "eps_x").ok_or_else(|| missing("scheme", "eps_x"))?.exact()?;
            let steps = take(&s.scheme, "steps").ok_or_else(|| missing("scheme", "steps"))?.count()?;
            let sampling = match take(&s.scheme, "sampling") {
                None => Sampling::VanDerCorput,
                Some(l) => parse_sampling(l)?,
            };
            SchemeSpec::Glimm { eps_x, steps, sampling }
        }
        Some(l) => return Err(l.err(format!("unknown scheme '{}', expected wft or glimm", l.value))),
    };

    reject_unknown(&s.verify, &["qfrak"], "verify")?;
    let qfrak = take(&s.verify, "qfrak").map(|l| l.bool()).transpose()?.unwrap_or(true);
    reject_unknown(&s.output, &["dir"], "output")?;
    let output = take(&s.output, "dir").map(|l| l.value.to_string());
    Ok(Scenario { flux: FluxSpec { kind, step, range, normalize }, left, jumps, scheme, qfrak, output })
}

fn parse_sampling(l: &Line<'_>) -> Result<Sampling> {
    let (name, rest) = l.value.split_once(char::is_whitespace).unwrap_or((l.value, ""));
    match name {
        "van-der-corput" if rest.trim().is_empty() => Ok(Sampling::VanDerCorput),
        "uniform" => rest.trim().parse().map(Sampling::Uniform).map_err(|_| l.err("uniform sampling needs an integer seed")),
        "explicit" => rest.split(',').map(|v| parse_exact(v).map_err(|m| l.err(m))).collect::<Result<_>>().map(Sampling::Explicit),
        _ => Err(l.err(format!("unknown sampling '{}'", l.value))),
    }
}

fn list(values: &[Exact]) -> String {
    values.iter().map(format_exact).collect::<Vec<_>>().join(", ")
}

/// Writes a scenario in canonical form; parsing the text gives it back.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::from("[flux]\n");
    let f = &s.flux;
    match &f.kind {
        FluxKind::Burgers => out.push_str("kind = burgers\n"),
        FluxKind::Splitting { alpha, l, eps } => {
            out.push_str("kind = splitting\n");
            let _ = writeln!(out, "alpha = {}\nl = {}\neps = {}", format_exact(alpha), format_exact(l), format_exact(eps));
        }
        FluxKind::Table { start, values } => {
            out.push_str("kind = table\n");
            let _ = writeln!(out, "start = {}\nvalues = {}", format_exact(start), list(values));
        }
    }
    let _ = writeln!(out, "step = {}", format_exact(&f.step));
    if let Some((a, b)) = &f.range {
        let _ = writeln!(out, "range = {}, {}", format_exact(a), format_exact(b));
    }
    if f.normalize {
        out.push_str("normalize = true\n");
    }
    let _ = writeln!(out, "\n[datum]\nleft = {}", format_exact(&s.left));
    for (x, v) in &s.jumps {
        let _ = writeln!(out, "jump = {}, {}", format_exact(x), format_exact(v));
    }
    out.push_str("\n[scheme]\n");
    match &s.scheme {
        SchemeSpec::Wft { max_events } => {
            out.push_str("kind = wft\n");
            if let Some(m) = max_events {
                let _ = writeln!(out, "max_events = {m}");
            }
        }
        SchemeSpec::Glimm { eps_x, steps, sampling } => {
            let _ = writeln!(out, "kind = glimm\neps_x = {}\nsteps = {steps}", format_exact(eps_x));
            let text = match sampling {
                Sampling::VanDerCorput => "van-der-corput".to_string(),
                Sampling::Uniform(seed) => format!("uniform {seed}"),
                Sampling::Explicit(v) => format!("explicit {}", list(v)),
            };
            let _ = writeln!(out, "sampling = {text}");
        }
    }
    if !s.qfrak {
        out.push_str("\n[verify]\nqfrak = false\n");
    }
    if let Some(dir) = &s.output {
        let _ = writeln!(out, "\n[output]\ndir = {dir}");
    }
    out
}

fn grid_index(u: &Exact, step: &Exact, what: &str) -> Result<i64> {
    let m = u / step;
    if !m.is_integer() {
        return Err(CliError::Scenario(format!("{what} {} is not on the value grid of step {}", format_exact(u), format_exact(step))));
    }
    i64::try_from(m.to_integer()).map_err(|_| CliError::Scenario(format!("{what} is out of range")))
}

impl Scenario {
    /// Samples the flux and maps the datum onto the value grid.
    pub fn problem(&self) -> Result<Problem> {
        let step = &self.flux.step;
        let left = grid_index(&self.left, step, "datum value")?;
        let mut steps = Vec::with_capacity(self.jumps.len());
        for (x, v) in &self.jumps {
            steps.push((to_f64(x), grid_index(v, step, "datum value")?));
        }
        let datum = StepDatum::new(left, steps)?;
        let (dlo, dhi) = datum.range();
        let (lo, hi) = match &self.flux.range {
            Some((a, b)) => (grid_index(a, step, "range end")?, grid_index(b, step, "range end")?),
            None => (dlo, dhi.max(dlo + 1)),
        };
        if lo > dlo || hi < dhi {
            return Err(CliError::Scenario("the flux range does not cover the datum".into()));
        }
        let h = to_f64(step);
        let flux = match &self.flux.kind {
            FluxKind::Burgers => PiecewiseAffineFn::from_fn(0.0, h, lo, hi, |u| 0.5 * u * u)?,
            FluxKind::Splitting { alpha, l, eps } => {
                for (name, u) in [("-L", -*l), ("eps", *eps), ("3 eps", *eps * 3)] {
                    grid_index(&u, step, name)?;
                }
                let (a, l, e) = (to_f64(alpha), to_f64(l), to_f64(eps));
                PiecewiseAffineFn::from_fn(0.0, h, lo, hi, |u| splitting_flux(a, l, e, u))?
            }
            FluxKind::Table { start, values } => {
                let first = grid_index(start, step, "table start")?;
                let last = first + values.len() as i64 - 1;
                if first > dlo || last < dhi {
                    return Err(CliError::Scenario("the flux table does not cover the datum".into()));
                }
                PiecewiseAffineFn::new(0.0, h, first, values.iter().map(to_f64).collect())?
            }
        };
        let flux = if self.flux.normalize { normalize(&flux)? } else { flux };
        Ok(Problem { flux: Arc::new(flux), datum })
    }

    /// Options of the verified run.
    pub fn verify_options(&self) -> VerifyOptions {
        let mut o = VerifyOptions { qfrak: self.qfrak, ..VerifyOptions::default() };
        if let SchemeSpec::Wft { max_events: Some(m) } = self.scheme {
            o.max_events = m;
        }
        o
    }

    /// Glimm configuration, when the scheme is Glimm.
    pub fn glimm_config(&self) -> Option<GlimmConfig> {
        match &self.scheme {
            SchemeSpec::Glimm { eps_x, steps, sampling } => Some(GlimmConfig {
                eps_x: to_f64(eps_x),
                steps: *steps,
                sampling: match sampling {
                    Sampling::VanDerCorput => SamplingKind::VanDerCorput,
                    Sampling::Uniform(seed) => SamplingKind::SeededUniform(*seed),
                    Sampling::Explicit(v) => SamplingKind::Explicit(v.iter().map(to_f64).collect()),
                },
            }),
            SchemeSpec::Wft { .. } => None,
        }
    }
}

/// Maps `f` to `c f(u) + d u` with slopes spread over `[0.1, 0.9]`.
/// Speeds change by the same affine map, so every bound keeps its slack
/// up to the factor `c`.
pub fn normalize(f: &PiecewiseAffineFn) -> Result<PiecewiseAffineFn> {
    let slopes: Vec<f64> = (f.lo() + 1..=f.hi()).map(|m| f.cell_slope(m)).collect();
    let lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (c, d) = if hi > lo { (0.8 / (hi - lo), 0.1 - 0.8 * lo / (hi - lo)) } else { (0.0, 0.5) };
    Ok(f.map_samples(|u, v| c * v + d * u)?)
}
