//! Experiment specs, seeded Monte Carlo sweeps and result files.
//!
//! A spec file is plain text made of sections of `key = value` lines:
//!
//! ```text
//! # comment
//! [experiment]
//! name = fig6a
//! rho_db = -4:2:10          # start:step:stop, or a comma list
//! packets = 500
//! seed = 2024
//! workers = 0               # 0 = all cores
//! paired = true             # share channel draws across modes
//!
//! [defaults]                # inherited by every mode section
//! antennas = 2x2
//! l_info = 2020
//!
//! [mode chase-16qam]
//! mode = chase
//! constellation = 16qam
//! ```
//!
//! Mode keys: `mode`, `constellation`, `antennas` (`MrxMt`), `sigma2`,
//! `gamma` (`auto` or a number), `n_max`, `t_sym` (count or `NN%`),
//! `quant_bits`, `l_info`, `iterations`, `decoder` (`exact`, `table`,
//! `max-log`), `early_stop`, `interleaver_seed`, `ack` (`crc`, `genie`),
//! `demap` (`exact`, `max-log`).
//!
//! A file holding a single `[snr]` or `[miso]` section is a channel-level
//! study instead (see [`crate::curves`]): average post-combining SNR over
//! fading traces, or uncoded MISO symbol error rate per retransmission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::AntennaDims;
use crate::curves::{miso_error_curves, snr_curves, MisoSpec, SnrSpec};
use crate::fec::{MaxStar, IR_PUNCTURING_DESCRIPTION};
use crate::harq::{throughput, AckRule, DemapModeSetting, HarqConfig, HarqEngine, Mode, SessionResult};
use crate::modem::Modulation;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTemplate {
    pub label: String,
    /// `rho` is overwritten at every sweep point.
    pub config: HarqConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub sweep_db: Vec<f64>,
    pub modes: Vec<ModeTemplate>,
    pub packets_per_point: usize,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Reuse the same per-packet seeds for every mode.
    pub paired: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_db.is_empty() {
            return Err(Error::config("rho sweep is empty"));
        }
        if self.modes.is_empty() {
            return Err(Error::config("no modes given"));
        }
        if self.packets_per_point == 0 {
            return Err(Error::config("packets must be >= 1"));
        }
        for m in &self.modes {
            m.config.validate().map_err(|e| Error::config(format!("mode '{}': {e}", m.label)))?;
        }
        Ok(())
    }

    /// Per-session seed.
    pub fn session_seed(&self, mode_index: usize, rho_index: usize, packet: usize) -> u64 {
        if self.paired {
            derive_seed(self.master_seed, &[rho_index as u64, packet as u64])
        } else {
            derive_seed(self.master_seed, &[mode_index as u64, rho_index as u64, packet as u64])
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn perr(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), line, msg: msg.into() }
}

fn parse_sweep(v: &str, path: &str, line: usize) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| perr(path, line, format!("'{s}' is not a number")));
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(perr(path, line, "range must be start:step:stop"));
        }
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(perr(path, line, "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    v.split(',').filter(|s| !s.trim().is_empty()).map(num).collect()
}

fn parse_bool(v: &str, path: &str, line: usize) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(perr(path, line, format!("'{v}' is not a boolean"))),
    }
}

fn parse_antennas(v: &str) -> Result<AntennaDims> {
    let lower = v.to_ascii_lowercase();
    let (r, t) = lower
        .split_once('x')
        .ok_or_else(|| Error::config(format!("antennas must look like 2x2, got '{v}'")))?;
    let mr = r.trim().parse().map_err(|_| Error::config(format!("bad antenna count '{r}'")))?;
    let mt = t.trim().parse().map_err(|_| Error::config(format!("bad antenna count '{t}'")))?;
    let dims = AntennaDims::mimo(mr, mt);
    dims.validate()?;
    Ok(dims)
}

fn apply_mode_key(cfg: &mut HarqConfig, key: &str, v: &str) -> Result<()> {
    let int = |s: &str| s.parse::<u64>().map_err(|_| Error::config(format!("'{s}' is not an integer")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| Error::config(format!("'{s}' is not a number")));
    match key {
        "mode" => cfg.mode = v.parse()?,
        "constellation" => cfg.modulation = v.parse()?,
        "antennas" => cfg.antennas = parse_antennas(v)?,
        "sigma2" => cfg.sigma2 = real(v)?,
        "gamma" => cfg.gamma = v.parse()?,
        "n_max" => cfg.n_max = int(v)? as usize,
        "t_sym" => cfg.t_sym = Some(v.parse()?),
        "quant_bits" => cfg.quant_bits = Some(int(v)? as u32),
        "l_info" => cfg.codec.l_info = int(v)? as usize,
        "iterations" => cfg.codec.iterations = int(v)? as usize,
        "interleaver_seed" => cfg.codec.interleaver_seed = int(v)?,
        "early_stop" => {
            cfg.codec.early_stop = parse_bool(v, "", 0).map_err(|_| Error::config(format!("'{v}' is not a boolean")))?
        }
        "decoder" => {
            cfg.codec.max_star = match v {
                "exact" => MaxStar::Exact,
                "table" => MaxStar::Table,
                "max-log" | "maxlog" => MaxStar::MaxLog,
                _ => return Err(Error::config(format!("unknown decoder '{v}'"))),
            }
        }
        "ack" => {
            cfg.ack = match v {
                "crc" => AckRule::Crc,
                "genie" => AckRule::Genie,
                _ => return Err(Error::config(format!("unknown ack rule '{v}'"))),
            }
        }
        "demap" => {
            cfg.demap = match v {
                "exact" => DemapModeSetting::Exact,
                "max-log" | "maxlog" => DemapModeSetting::MaxLog,
                _ => return Err(Error::config(format!("unknown demapper '{v}'"))),
            }
        }
        _ => return Err(Error::config(format!("unknown mode key '{key}'"))),
    }
    Ok(())
}

/// One `[name args...]` block of a spec file.
#[derive(Clone, Debug)]
pub(crate) struct Section {
    pub name: String,
    pub args: Vec<String>,
    pub line: usize,
    pub entries: Vec<(usize, String, String)>,
    pub path: String,
}

impl Section {
    /// Wraps `e` as a parse error at `line`, keeping an existing location.
    pub fn error(&self, line: usize, e: Error) -> Error {
        match e {
            Error::Parse { .. } => e,
            other => perr(&self.path, line, other.to_string()),
        }
    }
}

pub(crate) fn parse_sections(text: &str, path: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| perr(path, line_no, "section header needs a closing ']'"))?;
            let mut words = inner.split_whitespace().map(str::to_string);
            let name = words.next().ok_or_else(|| perr(path, line_no, "empty section header"))?;
            sections.push(Section { name, args: words.collect(), line: line_no, entries: Vec::new(), path: path.into() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(path, line_no, "expected key = value"))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| perr(path, line_no, "key outside of any section"))?;
        section.entries.push((line_no, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(sections)
}

fn spec_from_sections(sections: &[Section], path: &str) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec {
        name: "experiment".into(),
        sweep_db: Vec::new(),
        modes: Vec::new(),
        packets_per_point: 1000,
        master_seed: 1,
        output: None,
        workers: 0,
        paired: true,
    };
    let mut defaults: Vec<&(usize, String, String)> = Vec::new();
    let mut modes: Vec<&Section> = Vec::new();
    for sec in sections {
        match (sec.name.as_str(), sec.args.as_slice()) {
            ("experiment", []) => {
                for (line_no, key, value) in &sec.entries {
                    let line_no = *line_no;
                    match key.as_str() {
                        "name" => spec.name = value.clone(),
                        "rho_db" => spec.sweep_db = parse_sweep(value, path, line_no)?,
                        "packets" => {
                            spec.packets_per_point =
                                value.parse().map_err(|_| perr(path, line_no, "packets must be an integer"))?
                        }
                        "seed" => {
                            spec.master_seed =
                                value.parse().map_err(|_| perr(path, line_no, "seed must be an integer"))?
                        }
                        "workers" => {
                            spec.workers =
                                value.parse().map_err(|_| perr(path, line_no, "workers must be an integer"))?
                        }
                        "paired" => spec.paired = parse_bool(value, path, line_no)?,
                        "output" => spec.output = Some(PathBuf::from(value)),
                        _ => return Err(perr(path, line_no, format!("unknown experiment key '{key}'"))),
                    }
                }
            }
            ("defaults", []) => defaults.extend(&sec.entries),
            ("mode", [label]) => {
                if modes.iter().any(|m| &m.args[0] == label) {
                    return Err(perr(path, sec.line, format!("duplicate mode '{label}'")));
                }
                modes.push(sec);
            }
            _ => return Err(perr(path, sec.line, format!("unexpected section [{}]", sec.name))),
        }
    }
    for sec in modes {
        let label = &sec.args[0];
        let mut cfg = HarqConfig::new(Mode::Chase, 1.0, Modulation::Qpsk);
        for (line_no, key, value) in defaults.iter().copied().chain(sec.entries.iter()) {
            apply_mode_key(&mut cfg, key, value).map_err(|e| perr(path, *line_no, e.to_string()))?;
        }
        cfg.validate().map_err(|e| perr(path, sec.line, format!("mode '{label}': {e}")))?;
        spec.modes.push(ModeTemplate { label: label.clone(), config: cfg });
    }
    spec.validate()?;
    Ok(spec)
}

/// Parses a HARQ sweep spec; `path` is only used in error messages.
pub fn parse_spec(text: &str, path: &str) -> Result<ExperimentSpec> {
    spec_from_sections(&parse_sections(text, path)?, path)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, &path.display().to_string())
}

/// Anything a spec file can describe.
#[derive(Clone, Debug, PartialEq)]
pub enum Study {
    Harq(ExperimentSpec),
    Snr(SnrSpec),
    Miso(MisoSpec),
}

impl Study {
    pub fn name(&self) -> &str {
        match self {
            Study::Harq(s) => &s.name,
            Study::Snr(s) => &s.name,
            Study::Miso(s) => &s.name,
        }
    }

    pub fn output(&self) -> Option<&Path> {
        match self {
            Study::Harq(s) => s.output.as_deref(),
            Study::Snr(s) => s.output.as_deref(),
            Study::Miso(s) => s.output.as_deref(),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Study::Harq(s) => s.master_seed = seed,
            Study::Snr(s) => s.seed = seed,
            Study::Miso(s) => s.seed = seed,
        }
    }
}

/// Parses any spec file. A file holding a single `[snr]` or `[miso]` section is
/// a channel-level study; anything else is a HARQ sweep. Relative codebook
/// paths resolve against `base`.
pub fn parse_study(text: &str, path: &str, base: &Path) -> Result<Study> {
    let sections = parse_sections(text, path)?;
    match sections.as_slice() {
        [s] if s.name == "snr" && s.args.is_empty() => Ok(Study::Snr(SnrSpec::from_section(s)?)),
        [s] if s.name == "miso" && s.args.is_empty() => Ok(Study::Miso(MisoSpec::from_section(s, base)?)),
        _ => Ok(Study::Harq(spec_from_sections(&sections, path)?)),
    }
}

pub fn load_study(path: impl AsRef<Path>) -> Result<Study> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_study(&text, &path.display().to_string(), base)
}

/// One (mode, rho) grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub mode: String,
    pub rho_db: f64,
    pub constellation: Modulation,
    pub antennas: AntennaDims,
    pub tau: f64,
    pub tau_ci95: f64,
    pub fer: f64,
    pub packets: usize,
    pub seed: u64,
    /// Mean post-combining SNR at each round, over sessions that reached it.
    pub mean_snr_per_round: Vec<f64>,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
    pub wall_time_s: f64,
}

fn summarize(results: &[SessionResult], n_max: usize) -> Vec<f64> {
    (0..n_max)
        .map(|k| {
            let reached: Vec<f64> = results.iter().filter_map(|r| r.rounds.get(k)).map(|r| r.snr_post).collect();
            if reached.is_empty() {
                f64::NAN
            } else {
                reached.iter().sum::<f64>() / reached.len() as f64
            }
        })
        .collect()
}

/// Runs every session of the spec and returns the results per grid point, in
/// spec order (mode-major, then rho). The output does not depend on `workers`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_experiment_with(spec, |_, _| {})
}

/// Like [`run_experiment`], also handing every finished session to `observe`
/// (grid point index, result) in deterministic order.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    mut observe: impl FnMut(usize, &SessionResult),
) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut engines = Vec::new();
    for t in &spec.modes {
        for &db in &spec.sweep_db {
            let mut cfg = t.config.clone();
            cfg.rho = db_to_linear(db);
            engines.push(HarqEngine::new(cfg)?);
        }
    }
    let n_rho = spec.sweep_db.len();
    let packets = spec.packets_per_point;
    let tasks: Vec<(usize, usize)> = (0..engines.len()).flat_map(|p| (0..packets).map(move |k| (p, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<SessionResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, k)| engines[p].run_seeded(spec.session_seed(p / n_rho, p % n_rho, k)))
            .collect()
    });
    let mut per_point: Vec<Vec<SessionResult>> = vec![Vec::with_capacity(packets); engines.len()];
    for ((p, _), r) in tasks.iter().zip(outcomes) {
        let r = r?;
        observe(*p, &r);
        per_point[*p].push(r);
    }
    let mut rows = Vec::with_capacity(engines.len());
    for (p, results) in per_point.iter().enumerate() {
        let cfg = engines[p].config();
        let t = throughput(results)?;
        rows.push(ResultRow {
            mode: spec.modes[p / n_rho].label.clone(),
            rho_db: spec.sweep_db[p % n_rho],
            constellation: cfg.modulation,
            antennas: cfg.antennas,
            tau: t.tau,
            tau_ci95: t.half_width,
            fer: t.fer,
            packets: results.len(),
            seed: spec.master_seed,
            mean_snr_per_round: summarize(results, cfg.n_max),
            gamma: engines[p].gamma(),
        });
    }
    Ok(ExperimentResult { spec: spec.clone(), rows, wall_time_s: start.elapsed().as_secs_f64() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::config(format!("unknown format '{s}' (csv or json)"))),
        }
    }
}

pub const CSV_HEADER: &str = "mode,rho_db,constellation,antennas,tau,tau_ci95,fer,packets,seed";

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.mode, r.rho_db, r.constellation, r.antennas, r.tau, r.tau_ci95, r.fer, r.packets, r.seed
        );
    }
    out
}

fn provenance(result: &ExperimentResult) -> serde_json::Value {
    let codecs: BTreeMap<String, serde_json::Value> = result
        .spec
        .modes
        .iter()
        .map(|m| {
            (
                m.label.clone(),
                serde_json::json!({
                    "interleaver_seed": m.config.codec.interleaver_seed,
                    "l_info": m.config.codec.l_info,
                    "iterations": m.config.codec.iterations,
                    "ir_puncturing": IR_PUNCTURING_DESCRIPTION,
                }),
            )
        })
        .collect();
    serde_json::json!({ "codecs": codecs, "crate_version": env!("CARGO_PKG_VERSION") })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Sidecar path written next to a CSV result file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// A finished study, ready to be written.
#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub csv: String,
    /// Spec, rows and provenance; never holds timing so it stays deterministic.
    pub body: serde_json::Value,
    pub rows: usize,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn output(&self) -> StudyOutput {
        StudyOutput {
            csv: to_csv(&self.rows),
            body: serde_json::json!({
                "spec": self.spec,
                "rows": self.rows,
                "provenance": provenance(self),
            }),
            rows: self.rows.len(),
            wall_time_s: self.wall_time_s,
        }
    }
}

pub const SNR_CSV_HEADER: &str = "rho_db,sigma2,gamma,gamma_value,n,mean_snr,snr_ci95,awgn_snr";
pub const MISO_CSV_HEADER: &str = "variant,rate_fraction,rate,n,pe";

/// Runs any study; `workers` only affects speed (0 = all cores).
pub fn run_study(study: &Study, workers: usize) -> Result<StudyOutput> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    match study {
        Study::Harq(spec) => {
            let mut spec = spec.clone();
            spec.workers = workers;
            Ok(run_experiment(&spec)?.output())
        }
        Study::Snr(spec) => {
            let rows = pool.install(|| snr_curves(spec))?;
            let mut csv = format!("{SNR_CSV_HEADER}\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    r.rho_db, r.sigma2, r.gamma, r.gamma_value, r.n, r.mean_snr, r.snr_ci95, r.awgn_snr
                );
            }
            Ok(StudyOutput {
                csv,
                body: serde_json::json!({ "spec": spec, "rows": rows }),
                rows: rows.len(),
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        }
        Study::Miso(spec) => {
            let rows = pool.install(|| miso_error_curves(spec))?;
            let mut csv = format!("{MISO_CSV_HEADER}\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{},{},{}", r.variant, r.rate_fraction, r.rate, r.n, r.pe);
            }
            Ok(StudyOutput {
                csv,
                body: serde_json::json!({ "spec": spec, "rows": rows }),
                rows: rows.len(),
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        }
    }
}

/// Writes a study's table. CSV output also gets a `.meta.json` sidecar with the
/// full spec, all row fields, provenance and wall time.
pub fn write_output(out: &StudyOutput, path: &Path, format: OutputFormat) -> Result<()> {
    if out.rows == 0 {
        return Err(Error::config("no result rows to write"));
    }
    let json = |v: &serde_json::Value| serde_json::to_string_pretty(v).map_err(|e| Error::Numeric(e.to_string()));
    match format {
        OutputFormat::Csv => {
            write_file(path, &out.csv)?;
            let mut meta = out.body.clone();
            meta["wall_time_s"] = serde_json::json!(out.wall_time_s);
            write_file(&sidecar_path(path), &json(&meta)?)
        }
        OutputFormat::Json => write_file(path, &json(&out.body)?),
    }
}

pub fn write_results(result: &ExperimentResult, path: &Path, format: OutputFormat) -> Result<()> {
    write_output(&result.output(), path, format)
}

/// A row read back from a result CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub mode: String,
    pub rho_db: f64,
    pub constellation: Modulation,
    pub antennas: String,
    pub tau: f64,
    pub tau_ci95: f64,
    pub fer: f64,
    pub packets: usize,
    pub seed: u64,
}

pub fn parse_results_csv(text: &str, path: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(perr(path, 1, "missing result header")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let ln = idx + 1;
        if f.len() != 9 {
            return Err(perr(path, ln, format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| perr(path, ln, format!("'{s}' is not a number")));
        rows.push(CsvRow {
            mode: f[0].to_string(),
            rho_db: num(f[1])?,
            constellation: f[2].parse().map_err(|e: Error| perr(path, ln, e.to_string()))?,
            antennas: f[3].to_string(),
            tau: num(f[4])?,
            tau_ci95: num(f[5])?,
            fer: num(f[6])?,
            packets: f[7].parse().map_err(|_| perr(path, ln, "packets must be an integer"))?,
            seed: f[8].parse().map_err(|_| perr(path, ln, "seed must be an integer"))?,
        });
    }
    Ok(rows)
}
