//! Command-line front end: configuration, overrides and the subcommands.
//!
//! Every output file `name` is accompanied by `name.config.json` holding the
//! command and the fully resolved configuration. Exit codes are `0` on
//! success, `1` for configuration errors and `2` for solver failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bounces::{bounce_series, BounceDecomposition};
use crate::dynamics::{self, AtomicState, EigenCache, LatticeBasis, LatticeSpec};
use crate::error::{Error, Result};
use crate::greens::{self, ComplexEnergy, Region};
use crate::output::write_float_csv;
use crate::params::{Channel, ModelParams, SymmetrySector};
use crate::quad::QuadratureSpec;
use crate::sweep;
use crate::waveguide::{self, WaveguideParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "COLLECTIVE_THREADS";

/// Closed grid `start, start+step, …, end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        sweep::uniform_grid(self.start, self.end, self.step).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourBlock {
    pub region: Region,
    /// Points along `Re z` and `Im z`.
    pub grid: [usize; 2],
    pub channel: Channel,
}

impl Default for ContourBlock {
    fn default() -> Self {
        Self {
            region: Region { re_min: 1.6, re_max: 2.4, im_min: -0.25, im_max: 0.02 },
            grid: [161, 109],
            channel: Channel::Symmetric,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolesBlock {
    /// Lattice indices `−n_max..=n_max` in each sector.
    pub n_max: i32,
    pub contour: Option<ContourBlock>,
}

impl Default for PolesBlock {
    fn default() -> Self {
        Self { n_max: 3, contour: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveBlock {
    /// Initial states among `1`, `2`, `s`, `a`.
    pub initial: Vec<String>,
    pub times: Grid,
    pub profile_times: Vec<f64>,
    pub profile_x: Grid,
    /// Directory for cached eigensystems.
    pub cache_dir: Option<PathBuf>,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        Self {
            initial: vec!["s".into()],
            times: Grid { start: 0.0, end: 145.125, step: 0.25 },
            profile_times: vec![116.6805],
            profile_x: Grid { start: -10.0, end: 39.025, step: 0.25 },
            cache_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub grid: Grid,
    pub zero_decay: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self { grid: Grid { start: 5.0, end: 40.0, step: 0.05 }, zero_decay: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BouncesBlock {
    pub times: Grid,
}

impl Default for BouncesBlock {
    fn default() -> Self {
        Self { times: Grid { start: 0.0, end: 87.075, step: 0.5 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveguideBlock {
    pub params: WaveguideParams,
    pub n: u32,
    pub sector: SymmetrySector,
}

impl Default for WaveguideBlock {
    fn default() -> Self {
        Self { params: WaveguideParams::default(), n: 1, sector: SymmetrySector::Symmetric }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelParams,
    pub lattice: LatticeSpec,
    pub quad: QuadratureSpec,
    pub poles: PolesBlock,
    pub contour: ContourBlock,
    pub evolve: EvolveBlock,
    pub sweep: SweepBlock,
    pub bounces: BouncesBlock,
    pub waveguide: WaveguideBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default().with_separation(29.025),
            lattice: LatticeSpec::default(),
            quad: QuadratureSpec::default(),
            poles: PolesBlock::default(),
            contour: ContourBlock::default(),
            evolve: EvolveBlock::default(),
            sweep: SweepBlock::default(),
            bounces: BouncesBlock::default(),
            waveguide: WaveguideBlock::default(),
        }
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets `path = value` in a JSON tree; `value` is parsed as JSON when possible
/// and taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed key `{path}`")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Map::new());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a table", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*key)
            .ok_or_else(|| Error::Config(format!("unknown key `{}`", keys[..=i].join("."))))?;
    }
    unreachable!("split always yields a key")
}

impl RunConfig {
    /// Defaults, then the optional JSON file, then each override in order.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut tree = serde_json::to_value(RunConfig::default())?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            merge(&mut tree, file);
        }
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything the command will need before any solver runs.
    pub fn validate(&self, command: Command) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        if self.model.lambda == 0.0 {
            return Err(Error::Config("λ = 0: the free theory has no resonance poles".into()));
        }
        if command != Command::Waveguide {
            self.model.validate_pair().map_err(cfg)?;
            self.quad.validate(self.model.omega_m).map_err(cfg)?;
        }
        match command {
            Command::Poles => {
                if self.poles.n_max < 0 {
                    return Err(Error::Config("poles.n_max must be non-negative".into()));
                }
            }
            Command::Contour => {}
            Command::Evolve => {
                let l = &self.lattice;
                if l.n_modes < 3 || l.n_modes % 2 == 0 {
                    return Err(Error::Config("lattice.n_modes must be odd and at least 3".into()));
                }
                if !(l.box_length > 2.0 * self.model.x21()) {
                    return Err(Error::Config("lattice.box_length must exceed twice the separation".into()));
                }
                if self.evolve.initial.is_empty() {
                    return Err(Error::Config("evolve.initial is empty".into()));
                }
                for s in &self.evolve.initial {
                    AtomicState::from_label(s).map_err(cfg)?;
                }
                self.evolve.times.values()?;
                if !self.evolve.profile_times.is_empty() {
                    self.evolve.profile_x.values()?;
                }
            }
            Command::Sweep => {
                let g = self.sweep.grid.values()?;
                if g[0] <= 0.0 {
                    return Err(Error::Config("sweep grid must be positive".into()));
                }
            }
            Command::Bounces => {
                self.bounces.times.values()?;
            }
            Command::Waveguide => {
                self.waveguide.params.validate().map_err(cfg)?;
                waveguide::trap_distance(
                    self.waveguide.params.xi0(),
                    self.waveguide.n,
                    self.waveguide.sector,
                    self.waveguide.params.w_lead,
                )
                .map_err(cfg)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Principal and lattice poles of both sectors.
    Poles,
    /// log(1/|η⁺|) over a rectangle of the complex plane.
    Contour,
    /// Exact finite-box evolution with the pole-only overlay.
    Evolve,
    /// Principal poles against the separation.
    Sweep,
    /// Bounce series and its resummation check.
    Bounces,
    /// Trapped state of two cavities on a waveguide.
    Waveguide,
}

#[derive(Debug, Parser)]
#[command(name = "collective", version, about = "Collective resonances of two emitters on a one-dimensional field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// `dot.path=value` applied after the configuration file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

struct Outputs<'a> {
    dir: &'a Path,
    command: Command,
    config: &'a RunConfig,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: &'a str,
    command: Command,
    config: &'a RunConfig,
}

impl Outputs<'_> {
    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        let side = self.dir.join(format!("{name}.config.json"));
        let mut s = BufWriter::new(File::create(side)?);
        serde_json::to_writer_pretty(&mut s, &Sidecar { file: name, command: self.command, config: self.config })?;
        writeln!(s)?;
        s.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }
}

fn cmd_poles(c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let x = c.model.x21();
    let mut poles = vec![greens::principal_pole(Channel::OneAtom, x, &c.model, &c.quad)?];
    for s in SymmetrySector::BOTH {
        let scan = greens::pole_scan(s, x, -c.poles.n_max..=c.poles.n_max, &c.model, &c.quad)?;
        if !scan.gaps.is_empty() {
            eprintln!("warning: sector {s}: no distinct pole for n = {:?}", scan.gaps);
        }
        poles.extend(scan.poles);
    }
    out.write("poles.csv", |w| greens::write_pole_csv(w, &poles))?;
    if let Some(block) = &c.poles.contour {
        contour(block, c, out)?;
    }
    Ok(())
}

fn contour(block: &ContourBlock, c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let map = greens::contour_map(
        &block.region,
        (block.grid[0], block.grid[1]),
        block.channel,
        c.model.x21(),
        &c.model,
        &c.quad,
    )?;
    if map.overflow_cells > 0 {
        eprintln!("warning: {} cells could not be evaluated", map.overflow_cells);
    }
    out.write("contour.csv", |w| map.write_csv(w))
}

fn sector_of(label: &str) -> Option<SymmetrySector> {
    match label {
        "s" => Some(SymmetrySector::Symmetric),
        "a" => Some(SymmetrySector::Antisymmetric),
        _ => None,
    }
}

fn cmd_evolve(c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let e = &c.evolve;
    let times = e.times.values()?;
    let sectors: Vec<Option<SymmetrySector>> = e.initial.iter().map(|s| sector_of(s)).collect();
    let basis = match sectors.first() {
        Some(&Some(s)) if sectors.iter().all(|&x| x == Some(s)) => LatticeBasis::Sector(s),
        _ => LatticeBasis::Parity,
    };
    let model = match &e.cache_dir {
        Some(dir) => EigenCache::new(dir).diagonalize(&c.model, &c.lattice, basis)?,
        None => dynamics::diagonalized_lattice(&c.model, &c.lattice, basis)?,
    };
    let xs = if e.profile_times.is_empty() { Vec::new() } else { e.profile_x.values()? };
    for (label, sector) in e.initial.iter().zip(&sectors) {
        let init = AtomicState::from_label(label)?;
        let lattice = model.survival_probability(&init, &times)?;
        for w in &lattice.warnings {
            eprintln!("warning: {w}");
        }
        let pole: Option<(Vec<f64>, ComplexEnergy)> = match sector {
            Some(s) => {
                let (series, pole) = dynamics::collective_survival(&c.model, *s, &times, &c.quad)?;
                Some((series.values, pole))
            }
            None => None,
        };
        let overlay = pole.as_ref().map(|p| p.0.clone()).unwrap_or_else(|| vec![f64::NAN; times.len()]);
        out.write(&format!("survival_{label}.csv"), |w| {
            write_float_csv(
                w,
                "t,lattice,collective",
                times.iter().zip(&lattice.values).zip(&overlay).map(|((&t, &p), &q)| [t, p, q]),
            )
        })?;
        for (i, &t) in e.profile_times.iter().enumerate() {
            let field = model.field_intensity(&init, &xs, t)?;
            let collective = match &pole {
                Some((_, z)) => dynamics::collective_field(&c.model, z, &xs, t, &c.quad)?.intensity,
                None => vec![f64::NAN; xs.len()],
            };
            out.write(&format!("profile_{label}_{i}.csv"), |w| {
                writeln!(w, "# t = {}", crate::output::fmt17(t))?;
                write_float_csv(
                    w,
                    "x,lattice,collective",
                    xs.iter().zip(&field.intensity).zip(&collective).map(|((&x, &p), &q)| [x, p, q]),
                )
            })?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary {
    warnings: Vec<String>,
    stable_points_s: Vec<sweep::StablePoint>,
    stable_points_a: Vec<sweep::StablePoint>,
    pair_relation_max_deviation: f64,
    pair_relation_at_x21: f64,
}

fn cmd_sweep(c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let grid = c.sweep.grid.values()?;
    let result = sweep::sweep_poles(&grid, &c.model, &c.quad)?;
    out.write("sweep.csv", |w| sweep::write_sweep_csv(w, &result.records))?;
    let stable = |s| {
        sweep::force_indicator(&result.records, s).map(|f| sweep::stable_points(&f)).unwrap_or_default()
    };
    let pair = sweep::pair_relation_check(&result.records, &c.model, &c.quad)?;
    out.json(
        "sweep_summary.json",
        &SweepSummary {
            warnings: result.warnings.clone(),
            stable_points_s: stable(SymmetrySector::Symmetric),
            stable_points_a: stable(SymmetrySector::Antisymmetric),
            pair_relation_max_deviation: pair.max_deviation,
            pair_relation_at_x21: pair.at_x21,
        },
    )?;
    if c.sweep.zero_decay {
        let (lo, hi) = (grid[0], *grid.last().expect("validated grid"));
        let mut sols = Vec::new();
        for s in SymmetrySector::BOTH {
            sols.extend(sweep::zero_decay_in_range(s, lo, hi, &c.model, &c.quad)?);
        }
        out.json("zero_decay.json", &sweep::zero_decay_report(&sols, &c.model, &c.quad))?;
    }
    Ok(())
}

fn cmd_bounces(c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let times = c.bounces.times.values()?;
    let decomposition = BounceDecomposition::new(c.model.x21(), &c.model, &c.quad)?;
    let series = bounce_series(&decomposition, &times)?;
    out.write("bounces.csv", |w| series.write_csv(w))?;
    let report = decomposition.resummation_report(&times)?;
    out.json("resummation.json", &report)?;
    if let Some(bad) = report.points.iter().find(|p| p.error.is_some()) {
        decomposition.resummed(bad.t)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WaveguideSummary {
    trap: waveguide::TrapReport,
    configured_x21: f64,
    configured_pole: Option<ComplexEnergy>,
}

fn cmd_waveguide(c: &RunConfig, out: &mut Outputs) -> Result<()> {
    let b = &c.waveguide;
    let trap = waveguide::trap_report(&b.params, b.n, b.sector, &c.quad)?;
    let x = (b.params.x2 - b.params.x1).abs();
    let configured_pole =
        if x > 0.0 { Some(waveguide::collective_pole_wg(&b.params, b.sector, x, &c.quad)?) } else { None };
    out.json("trap.json", &WaveguideSummary { trap, configured_x21: x, configured_pole })
}

fn thread_pool() -> std::result::Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or(format!("{THREADS_VAR}={v} is not a positive integer"))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}

/// Runs one subcommand and returns the files it wrote.
pub fn execute(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = Outputs { dir: out_dir, command, config, written: Vec::new() };
    match command {
        Command::Poles => cmd_poles(config, &mut out)?,
        Command::Contour => contour(&config.contour, config, &mut out)?,
        Command::Evolve => cmd_evolve(config, &mut out)?,
        Command::Sweep => cmd_sweep(config, &mut out)?,
        Command::Bounces => cmd_bounces(config, &mut out)?,
        Command::Waveguide => cmd_waveguide(config, &mut out)?,
    }
    Ok(out.written)
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::resolve(cli.config.as_deref(), &cli.overrides)
        .and_then(|c| c.validate(cli.command).map(|_| c))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| execute(cli.command, &config, &cli.out)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_SOLVER
        }
    }
}
