//! Batch driver for the gamma × refinement × variant iteration-count study.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::krylov::{pcg, PcgOptions};
use crate::multigrid::{Discretization, MgConfig, MgHierarchy};
use crate::relaxation::Relaxation;
use crate::transfer::Transfer;

/// Relaxation and transfer choice of one solver variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    RobustRobust,
    RobustStandard,
    JacobiRobust,
    JacobiStandard,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::RobustRobust,
        Variant::RobustStandard,
        Variant::JacobiRobust,
        Variant::JacobiStandard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::RobustRobust => "robust-robust",
            Variant::RobustStandard => "robust-standard",
            Variant::JacobiRobust => "jacobi-robust",
            Variant::JacobiStandard => "jacobi-standard",
        }
    }

    pub fn relaxation(self) -> Relaxation {
        match self {
            Variant::RobustRobust | Variant::RobustStandard => Relaxation::MacroStar,
            Variant::JacobiRobust | Variant::JacobiStandard => Relaxation::Jacobi,
        }
    }

    pub fn transfer(self) -> Transfer {
        match self {
            Variant::RobustRobust | Variant::JacobiRobust => Transfer::Robust,
            Variant::RobustStandard | Variant::JacobiStandard => Transfer::Standard,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

impl Serialize for Variant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Iteration count of one solve, or the cap it ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    Converged(usize),
    Exceeded(usize),
}

impl Iterations {
    pub fn count(self) -> Option<usize> {
        match self {
            Iterations::Converged(n) => Some(n),
            Iterations::Exceeded(_) => None,
        }
    }
}

impl fmt::Display for Iterations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Iterations::Converged(n) => write!(f, "{n}"),
            Iterations::Exceeded(n) => write!(f, ">{n}"),
        }
    }
}

impl FromStr for Iterations {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad iteration count '{s}'"));
        match s.strip_prefix('>') {
            Some(cap) => cap.parse().map(Iterations::Exceeded).map_err(|_| bad()),
            None => s.parse().map(Iterations::Converged).map_err(|_| bad()),
        }
    }
}

impl Serialize for Iterations {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Iterations::Converged(n) => s.serialize_u64(*n as u64),
            Iterations::Exceeded(_) => s.serialize_str(&self.to_string()),
        }
    }
}

struct IterationsVisitor;

impl Visitor<'_> for IterationsVisitor {
    type Value = Iterations;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an iteration count or '>maxit'")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Iterations, E> {
        Ok(Iterations::Converged(v as usize))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Iterations, E> {
        usize::try_from(v)
            .map(Iterations::Converged)
            .map_err(|_| E::custom("negative iteration count"))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Iterations, E> {
        v.parse().map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Iterations {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(IterationsVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub coarse_n: usize,
    pub refinements: Vec<usize>,
    pub gammas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub rtol: f64,
    pub maxit: usize,
    pub seed: u64,
    pub parallel: bool,
    /// Record wall time per row. Off gives byte-identical output across runs.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            coarse_n: 4,
            refinements: vec![1, 2, 3],
            gammas: vec![0.0, 1.0, 10.0, 1e2, 1e3, 1e4, 1e6, 1e8],
            variants: Variant::ALL.to_vec(),
            rtol: 1e-8,
            maxit: 200,
            seed: 0,
            parallel: false,
            timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_n == 0 {
            return Err(Error::Config("coarse grid size must be positive".into()));
        }
        if self.refinements.is_empty() || self.refinements.contains(&0) {
            return Err(Error::Config("refinements must be a non-empty list of values >= 1".into()));
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::Config("gammas must be a non-empty list of finite values >= 0".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::Config(format!("rtol must lie in (0, 1), got {}", self.rtol)));
        }
        if self.maxit == 0 {
            return Err(Error::Config("maxit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub variant: Variant,
    pub refinement: usize,
    pub dofs: usize,
    pub gamma: f64,
    pub iterations: Iterations,
    pub converged: bool,
    pub seconds: f64,
}

/// Solves the benchmark problem once with the given variant and returns the
/// finished row.
pub fn solve_one(
    disc: &Discretization,
    refinement: usize,
    variant: Variant,
    gamma: f64,
    config: &ExperimentConfig,
) -> Result<ResultRow> {
    let start = std::time::Instant::now();
    let mg_config = MgConfig {
        seed: config.seed,
        parallel: config.parallel,
        ..MgConfig::new(gamma, variant.relaxation(), variant.transfer())
    };
    let mg = MgHierarchy::setup(disc, mg_config)?;
    let a = mg.matrix();
    let b = disc.load_vector();
    let opts = PcgOptions {
        rtol: config.rtol,
        maxit: config.maxit,
    };
    // A W-cycle with rediscretized coarse operators and a transfer that does
    // not respect the divergence kernel can lose definiteness at large gamma.
    // CG cannot continue from there, so the cell counts as not converged.
    let converged = match pcg(|x| a.spmv(x), |r| mg.apply(r), &b, None, opts) {
        Ok((_, report)) => report.converged.then_some(report.iterations),
        Err(Error::IndefinitePreconditioner { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ResultRow {
        variant,
        refinement,
        dofs: disc.finest_space().num_dofs(),
        gamma,
        iterations: converged.map_or(Iterations::Exceeded(config.maxit), Iterations::Converged),
        converged: converged.is_some(),
        seconds: if config.timing { start.elapsed().as_secs_f64() } else { 0.0 },
    })
}

/// Runs the full grid. Rows come out ordered by variant, refinement, gamma in
/// the order given by the config; `on_row` sees each row as it finishes.
pub fn run_with(config: &ExperimentConfig, mut on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut keyed = Vec::new();
    for (ri, &refinement) in config.refinements.iter().enumerate() {
        let disc = Discretization::new(config.coarse_n, refinement + 1)?;
        for (vi, &variant) in config.variants.iter().enumerate() {
            for (gi, &gamma) in config.gammas.iter().enumerate() {
                let row = solve_one(&disc, refinement, variant, gamma, config)?;
                on_row(&row);
                keyed.push(((vi, ri, gi), row));
            }
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_with(config, |_| {})
}

pub const CSV_HEADER: [&str; 7] = ["variant", "refinement", "dofs", "gamma", "iterations", "converged", "seconds"];

pub fn emit(rows: &[ResultRow], format: OutputFormat, out: impl Write) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(CSV_HEADER)?;
            }
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn parse(format: OutputFormat, input: impl Read) -> Result<Vec<ResultRow>> {
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_reader(input);
            let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
            if header != CSV_HEADER {
                return Err(Error::Config(format!("unexpected CSV header {header:?}")));
            }
            Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
        }
        OutputFormat::Json => Ok(serde_json::from_reader(input)?),
    }
}

pub fn emit_to_file(rows: &[ResultRow], format: OutputFormat, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    emit(rows, format, &mut w)?;
    w.flush()?;
    Ok(())
}
