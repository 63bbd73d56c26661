//! The five command-line experiments as library functions.
//!
//! Each command returns its data files in memory together with the seeds it
//! used; [`run`] writes them and the manifest. Trajectory seeds are
//! `derive_seed(master, index)` with indices allocated deterministically per
//! command, so results do not depend on the number of worker threads.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};
use crate::dynamics::analytic::{analytic_pee, first_pee_maximum, single_excitation_product};
use crate::dynamics::{qmc_trajectory, AtomNumber, OpenSystem, SimConfig, Trajectory};
use crate::error::Error;
use crate::manifest::{write_outputs, OutputFile, RunManifest, SeedRecord};
use crate::nanotip::{
    parameter_map, realize_parameters, sample_sites, write_map_csv, write_sites_csv, ShellVolume,
    Spherical,
};
use crate::output::fmt_sig;
use crate::photon_stats::{
    concat_g2, factorial_moment_g2_zero, mixture_g2_zero, poisson_weight, rate_weighted_average,
    CorrelationEstimate, MixtureSpec,
};
use crate::quantum_core::PhysicalParams;
use crate::seeding::derive_seed;

/// Index of the stream used to place emitters in the tip experiment.
const SITE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analytic,
    G2,
    Sweep,
    TipMap,
    TipExperiment,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analytic => "analytic",
            Command::G2 => "g2",
            Command::Sweep => "sweep",
            Command::TipMap => "tip-map",
            Command::TipExperiment => "tip-experiment",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Model(Error),
    Io(std::io::Error),
}

impl RunError {
    /// 2 for invalid input, 3 for numerical-invariant violations, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Model(e) if e.is_config() => 2,
            RunError::Model(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Model(e) if e.is_config() => write!(f, "invalid input: {e}"),
            RunError::Model(e) => write!(f, "numerical failure: {e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Model(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Data files and seeds produced by one command.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub files: Vec<OutputFile>,
    pub seeds: Vec<SeedRecord>,
}

fn csv_file(name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> RunResult<OutputFile> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(OutputFile::new(name, buf))
}

fn json_file<T: Serialize>(name: &str, value: &T) -> RunResult<OutputFile> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    Ok(OutputFile::new(name, text.into_bytes()))
}

/// A run of independently seeded trajectories that together cover one
/// stretch of simulated time.
#[derive(Debug, Clone)]
pub struct Segment {
    pub trajectories: Vec<Trajectory>,
    pub seeds: Vec<SeedRecord>,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.trajectories.iter().map(Trajectory::duration).sum()
    }

    pub fn photons(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn rate(&self) -> f64 {
        self.photons() as f64 / self.duration()
    }

    /// Pair-count `g²` over the pieces, or an empty estimate if fewer than
    /// two photons were emitted.
    pub fn g2(&self, bin_width: f64, tau_max: f64) -> crate::Result<CorrelationEstimate> {
        match concat_g2(&self.trajectories, bin_width, tau_max) {
            Err(Error::InsufficientPhotons { found, .. }) => {
                CorrelationEstimate::empty(found as u64, self.duration(), bin_width, tau_max)
            }
            other => other,
        }
    }
}

/// Number of pieces a segment of length `duration` is split into.
pub fn chunk_count(duration: f64, chunk: f64) -> u64 {
    ((duration / chunk) - 1e-9).ceil().max(1.0) as u64
}

/// Simulates `duration` of the given system from the ground state in pieces
/// of at most `cfg.chunk`, piece `k` seeded with index `first_index + k`.
pub fn simulate_segment(
    params: &PhysicalParams,
    atoms: AtomNumber,
    duration: f64,
    cfg: &RunConfig,
    label: &str,
    first_index: u64,
) -> crate::Result<Segment> {
    let system = OpenSystem::new(params, atoms)?;
    let n = chunk_count(duration, cfg.chunk);
    let pieces: Vec<(u64, f64)> = (0..n)
        .map(|k| {
            let len = if k + 1 < n {
                cfg.chunk
            } else {
                duration - cfg.chunk * (n - 1) as f64
            };
            (first_index + k, len)
        })
        .collect();
    let trajectories = pieces
        .par_iter()
        .map(|&(index, len)| {
            let sim = SimConfig::new(cfg.dt, len, derive_seed(cfg.seed, index), system.ground_state())?;
            qmc_trajectory(&system, &sim)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let seeds = pieces
        .iter()
        .map(|&(index, _)| SeedRecord {
            label: label.to_string(),
            index,
            seed: derive_seed(cfg.seed, index),
        })
        .collect();
    Ok(Segment { trajectories, seeds })
}

// ---------------------------------------------------------------- analytic

/// `t,Pee,Pprod` rows for one coupling strength.
pub fn analytic_table(omega: f64, delta12: f64, t_max: f64, dt_out: f64) -> crate::Result<Vec<[f64; 3]>> {
    let n = (t_max / dt_out).round() as u64;
    (0..=n)
        .map(|k| {
            let t = k as f64 * dt_out;
            Ok([
                t,
                analytic_pee(omega, delta12, t)?,
                single_excitation_product(omega, delta12, t)?,
            ])
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct AnalyticSummary {
    omega: f64,
    delta12: Vec<f64>,
    files: Vec<String>,
    first_maximum_time: Vec<Option<f64>>,
}

pub fn analytic_file_name(delta12: f64) -> String {
    format!("analytic_delta12_{}.csv", fmt_sig(delta12, 12))
}

pub fn cmd_analytic(cfg: &RunConfig) -> RunResult<CommandOutput> {
    cfg.validate_analytic()?;
    let mut files = Vec::new();
    let mut first_max = Vec::new();
    for &d in &cfg.delta12_list {
        let rows = analytic_table(cfg.omega, d, cfg.t_max, cfg.dt_out)?;
        files.push(csv_file(&analytic_file_name(d), |w| {
            writeln!(w, "t,Pee,Pprod")?;
            for r in &rows {
                writeln!(w, "{},{},{}", fmt_sig(r[0], 12), fmt_sig(r[1], 12), fmt_sig(r[2], 12))?;
            }
            Ok(())
        })?);
        first_max.push(first_pee_maximum(cfg.omega, d, cfg.dt_out, cfg.t_max)?);
    }
    let summary = AnalyticSummary {
        omega: cfg.omega,
        delta12: cfg.delta12_list.clone(),
        files: files.iter().map(|f| f.name.clone()).collect(),
        first_maximum_time: first_max,
    };
    files.push(json_file("analytic_summary.json", &summary)?);
    Ok(CommandOutput {
        files,
        seeds: Vec::new(),
    })
}

// ---------------------------------------------------------------------- g2

/// One- and two-atom segments of a Poisson ensemble, simulated for
/// durations in the ratio `P(1) : P(2)` and appended.
#[derive(Debug, Clone)]
pub struct MixtureRun {
    pub mu: f64,
    pub one: Segment,
    pub two: Segment,
    pub bin_width: f64,
    pub tau_max: f64,
}

/// Scalar results of a mixture run.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureSummary {
    /// First bin of the appended-trajectory `g²`.
    pub g2_zero: f64,
    pub g2_zero_sigma: f64,
    /// Photons per unit time over the appended trajectory.
    pub mean_rate: f64,
    /// `mean_rate / rate_1atom`.
    pub brightness: f64,
    pub total_photons: u64,
    pub duration: f64,
    /// `Σ g²_N(0) P(N) R_N / Σ P(N) R_N` with the measured per-segment
    /// values, `N ∈ {1, 2}`.
    pub g2_zero_weighted: Option<f64>,
    /// `⟨N(N−1)⟩/⟨N⟩²` of the Poisson atom-number law.
    pub g2_zero_textbook: f64,
    pub mu: f64,
    pub rate_1atom: f64,
    pub rate_2atom: f64,
    pub g2_zero_1atom: Option<f64>,
    pub g2_zero_2atom: Option<f64>,
    pub duration_1atom: f64,
    pub duration_2atom: f64,
}

impl MixtureRun {
    /// Segment durations `(T₁, T₂)` for two-atom duration `t2`.
    pub fn durations(mu: f64, t2: f64) -> (f64, f64) {
        (t2 * poisson_weight(mu, 1) / poisson_weight(mu, 2), t2)
    }

    pub fn correlation(&self) -> crate::Result<CorrelationEstimate> {
        let all: Vec<Trajectory> = self
            .one
            .trajectories
            .iter()
            .chain(&self.two.trajectories)
            .cloned()
            .collect();
        concat_g2(&all, self.bin_width, self.tau_max)
    }

    pub fn summary(&self, estimate: &CorrelationEstimate) -> crate::Result<MixtureSummary> {
        let seg_g2 = |s: &Segment| match concat_g2(&s.trajectories, self.bin_width, self.tau_max) {
            Ok(e) => Ok(Some(e.g2_zero())),
            Err(Error::InsufficientPhotons { .. }) => Ok(None),
            Err(e) => Err(e),
        };
        let (g1, g2) = (seg_g2(&self.one)?, seg_g2(&self.two)?);
        let (r1, r2) = (self.one.rate(), self.two.rate());
        let weighted = match (g1, g2) {
            (Some(a), Some(b)) => Some(mixture_g2_zero(&MixtureSpec::new(self.mu, vec![r1, r2])?, &[a, b])?),
            (Some(a), None) if r2 == 0.0 => Some(a),
            _ => None,
        };
        if r1 <= 0.0 {
            return Err(Error::ZeroRates);
        }
        Ok(MixtureSummary {
            g2_zero: estimate.g2_zero(),
            g2_zero_sigma: estimate.g2_zero_sigma(),
            mean_rate: estimate.mean_rate,
            brightness: estimate.mean_rate / r1,
            total_photons: estimate.total_photons,
            duration: estimate.total_time,
            g2_zero_weighted: weighted,
            g2_zero_textbook: factorial_moment_g2_zero(self.mu, textbook_cutoff(self.mu)),
            mu: self.mu,
            rate_1atom: r1,
            rate_2atom: r2,
            g2_zero_1atom: g1,
            g2_zero_2atom: g2,
            duration_1atom: self.one.duration(),
            duration_2atom: self.two.duration(),
        })
    }
}

/// Atom number beyond which the Poisson tail is below `1e-16`.
fn textbook_cutoff(mu: f64) -> u32 {
    let mut n = 1u32;
    while !(n as f64 > mu && poisson_weight(mu, n) < 1e-16) && n < 10_000 {
        n += 1;
    }
    n
}

/// Runs the one-atom segment (seed indices from 0) and a two-atom segment
/// with `pair` parameters (seed indices from `two_index`).
pub fn run_mixture(
    cfg: &RunConfig,
    one: Option<Segment>,
    pair: &PhysicalParams,
    two_index: u64,
) -> crate::Result<MixtureRun> {
    let (t1, t2) = MixtureRun::durations(cfg.mu, cfg.t2);
    let one = match one {
        Some(s) => s,
        None => simulate_segment(&single_of(pair), AtomNumber::One, t1, cfg, "one-atom", 0)?,
    };
    let two = simulate_segment(pair, AtomNumber::Two, t2, cfg, "two-atom", two_index)?;
    Ok(MixtureRun {
        mu: cfg.mu,
        one,
        two,
        bin_width: cfg.bin_width,
        tau_max: cfg.tau_max,
    })
}

fn single_of(pair: &PhysicalParams) -> PhysicalParams {
    PhysicalParams {
        omega2: 0.0,
        gamma12: 0.0,
        delta12: 0.0,
        ..*pair
    }
}

/// First seed index of the two-atom segment.
fn two_atom_base(cfg: &RunConfig) -> u64 {
    chunk_count(MixtureRun::durations(cfg.mu, cfg.t2).0, cfg.chunk)
}

pub fn cmd_g2(cfg: &RunConfig) -> RunResult<CommandOutput> {
    cfg.validate_sampling()?;
    cfg.validate_mixture()?;
    let pair = cfg.pair_params()?;
    let run = run_mixture(cfg, None, &pair, two_atom_base(cfg))?;
    let estimate = run.correlation()?;
    let summary = run.summary(&estimate)?;
    info!(
        "g2(0) = {:.4} ± {:.4}, brightness {:.4}",
        summary.g2_zero, summary.g2_zero_sigma, summary.brightness
    );
    let files = vec![
        csv_file("g2.csv", |w| estimate.write_csv(w))?,
        json_file("g2_summary.json", &summary)?,
    ];
    let seeds = run.one.seeds.iter().chain(&run.two.seeds).cloned().collect();
    Ok(CommandOutput { files, seeds })
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub delta12: f64,
    pub gamma12: f64,
    pub summary: MixtureSummary,
}

/// Mixture runs over the `delta12_grid × gamma12_grid` product; the one-atom
/// segment is shared by every row.
pub fn sweep(cfg: &RunConfig) -> RunResult<(Vec<SweepRow>, Vec<SeedRecord>)> {
    cfg.validate_sampling()?;
    cfg.validate_mixture()?;
    cfg.validate_sweep()?;
    let base = cfg.pair_params()?;
    let (t1, t2) = MixtureRun::durations(cfg.mu, cfg.t2);
    let one = simulate_segment(&single_of(&base), AtomNumber::One, t1, cfg, "one-atom", 0)?;
    let mut seeds = one.seeds.clone();
    let mut next_index = two_atom_base(cfg);
    let block = chunk_count(t2, cfg.chunk);
    let mut rows = Vec::new();
    for &delta12 in &cfg.delta12_grid {
        for &gamma12 in &cfg.gamma12_grid {
            let pair = PhysicalParams {
                delta12,
                gamma12,
                ..base
            };
            pair.validate()?;
            let run = run_mixture(cfg, Some(one.clone()), &pair, next_index)?;
            next_index += block;
            let estimate = run.correlation()?;
            let summary = run.summary(&estimate)?;
            info!(
                "delta12 = {delta12}, gamma12 = {gamma12}: g2(0) = {:.4} ± {:.4}, brightness {:.4}",
                summary.g2_zero, summary.g2_zero_sigma, summary.brightness
            );
            seeds.extend(run.two.seeds.iter().map(|s| SeedRecord {
                label: format!("two-atom delta12={delta12} gamma12={gamma12}"),
                ..s.clone()
            }));
            rows.push(SweepRow {
                delta12,
                gamma12,
                summary,
            });
        }
    }
    Ok((rows, seeds))
}

pub fn cmd_sweep(cfg: &RunConfig) -> RunResult<CommandOutput> {
    let (rows, seeds) = sweep(cfg)?;
    let files = vec![
        csv_file("sweep.csv", |w| {
            writeln!(w, "delta12,gamma12,g2_zero,brightness")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_sig(r.delta12, 12),
                    fmt_sig(r.gamma12, 12),
                    fmt_sig(r.summary.g2_zero, 12),
                    fmt_sig(r.summary.brightness, 12)
                )?;
            }
            Ok(())
        })?,
        json_file("sweep_summary.json", &rows)?,
    ];
    Ok(CommandOutput { files, seeds })
}

// ----------------------------------------------------------------- tip-map

pub fn cmd_tip_map(cfg: &RunConfig) -> RunResult<CommandOutput> {
    let tip = cfg.validate_tip_map()?;
    let map = parameter_map(&tip, cfg.geometry, &cfg.r_grid()?, &cfg.theta_grid()?, cfg.r12)?;
    let invalid = map.iter().filter(|p| !p.valid).count();
    info!("{} grid points, {invalid} with an atom inside the sphere", map.len());
    Ok(CommandOutput {
        files: vec![csv_file("tip_map.csv", |w| write_map_csv(&map, w))?],
        seeds: Vec::new(),
    })
}

// ---------------------------------------------------------- tip-experiment

/// One simulated emitter configuration near the tip.
#[derive(Debug, Clone)]
pub struct TipRealization {
    pub positions: Vec<Spherical>,
    pub params: PhysicalParams,
    pub segment: Segment,
    pub estimate: CorrelationEstimate,
}

impl TipRealization {
    pub fn atoms(&self) -> usize {
        self.positions.len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TipSummary {
    pub n1: usize,
    pub n2: usize,
    pub duration: f64,
    pub rate_1atom: f64,
    pub rate_2atom: Option<f64>,
    pub rate_mixture: f64,
    /// `rate_mixture / rate_1atom`.
    pub brightness: f64,
    pub g2_zero_1atom: f64,
    pub g2_zero_2atom: Option<f64>,
    pub g2_zero_mixture: f64,
    pub shell_volume_full_cm3: f64,
    pub shell_volume_half_cm3: f64,
    /// Density giving one atom on average in the sampled half shell.
    pub density_mu1_half_shell_cm3: f64,
    /// Density giving one atom on average in the full shell.
    pub density_mu1_full_shell_cm3: f64,
}

#[derive(Debug, Clone)]
pub struct TipExperiment {
    pub realizations: Vec<TipRealization>,
    pub one_atom: CorrelationEstimate,
    pub two_atom: Option<CorrelationEstimate>,
    pub mixture: CorrelationEstimate,
    pub summary: TipSummary,
    pub seeds: Vec<SeedRecord>,
}

/// Places `n1` single emitters and `n2` pairs in the forward half shell,
/// simulates each configuration and averages the correlation curves with
/// rate weights.
pub fn tip_experiment(cfg: &RunConfig) -> RunResult<TipExperiment> {
    cfg.validate_sampling()?;
    let tip = cfg.validate_tip_experiment()?;
    let site_seed = derive_seed(cfg.seed, SITE_STREAM);
    let sites = sample_sites(&tip, cfg.r_inner, cfg.r_outer, cfg.n1 + 2 * cfg.n2, site_seed)?;
    let configs: Vec<Vec<Spherical>> = sites[..cfg.n1]
        .iter()
        .map(|s| vec![*s])
        .chain(sites[cfg.n1..].chunks(2).map(<[Spherical]>::to_vec))
        .collect();
    let per = chunk_count(cfg.duration, cfg.chunk);

    let realizations = configs
        .into_par_iter()
        .enumerate()
        .map(|(i, positions)| {
            let (params, _) = realize_parameters(&tip, &positions)?;
            let atoms = if positions.len() == 1 {
                AtomNumber::One
            } else {
                AtomNumber::Two
            };
            let label = format!("realization {i} ({} atom)", positions.len());
            let segment = simulate_segment(&params, atoms, cfg.duration, cfg, &label, i as u64 * per)?;
            let estimate = segment.g2(cfg.bin_width, cfg.tau_max)?;
            Ok(TipRealization {
                positions,
                params,
                segment,
                estimate,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;

    let (ones, twos): (Vec<&TipRealization>, Vec<&TipRealization>) =
        realizations.iter().partition(|r| r.atoms() == 1);
    let average = |set: &[&TipRealization]| {
        rate_weighted_average(&set.iter().map(|r| r.estimate.clone()).collect::<Vec<_>>())
    };
    let one_atom = average(&ones)?;
    let two_atom = if twos.is_empty() { None } else { Some(average(&twos)?) };
    let all: Vec<&TipRealization> = realizations.iter().collect();
    let mixture = average(&all)?;

    let volume = ShellVolume::new(cfg.r_inner, cfg.r_outer);
    let summary = TipSummary {
        n1: cfg.n1,
        n2: cfg.n2,
        duration: cfg.duration,
        rate_1atom: one_atom.mean_rate,
        rate_2atom: two_atom.as_ref().map(|e| e.mean_rate),
        rate_mixture: mixture.mean_rate,
        brightness: mixture.mean_rate / one_atom.mean_rate,
        g2_zero_1atom: one_atom.g2_zero(),
        g2_zero_2atom: two_atom.as_ref().map(CorrelationEstimate::g2_zero),
        g2_zero_mixture: mixture.g2_zero(),
        shell_volume_full_cm3: volume.full_cm3(),
        shell_volume_half_cm3: volume.half_cm3(),
        density_mu1_half_shell_cm3: 1.0 / volume.half_cm3(),
        density_mu1_full_shell_cm3: 1.0 / volume.full_cm3(),
    };
    let mut seeds = vec![SeedRecord {
        label: "site placement".into(),
        index: SITE_STREAM,
        seed: site_seed,
    }];
    seeds.extend(realizations.iter().flat_map(|r| r.segment.seeds.iter().cloned()));
    Ok(TipExperiment {
        realizations,
        one_atom,
        two_atom,
        mixture,
        summary,
        seeds,
    })
}

pub fn cmd_tip_experiment(cfg: &RunConfig) -> RunResult<CommandOutput> {
    let exp = tip_experiment(cfg)?;
    let s = &exp.summary;
    info!(
        "R_1A = {:.4}, R_2A = {}, R_mix = {:.4}, B = {:.4}, g2(0) mixture = {:.4}",
        s.rate_1atom,
        s.rate_2atom.map_or("n/a".into(), |r| format!("{r:.4}")),
        s.rate_mixture,
        s.brightness,
        s.g2_zero_mixture
    );
    let positions = |n: usize| -> Vec<Spherical> {
        exp.realizations
            .iter()
            .filter(|r| r.atoms() == n)
            .flat_map(|r| r.positions.iter().copied())
            .collect()
    };
    let mut files = vec![
        csv_file("sites_1atom.csv", |w| write_sites_csv(&positions(1), w))?,
        csv_file("sites_2atom.csv", |w| write_sites_csv(&positions(2), w))?,
        csv_file("realizations.csv", |w| {
            writeln!(w, "index,atoms,omega1,omega2,gamma1,gamma2,gamma12,delta12,photons,rate")?;
            for (i, r) in exp.realizations.iter().enumerate() {
                let p = &r.params;
                writeln!(
                    w,
                    "{i},{},{},{},{},{},{},{},{},{}",
                    r.atoms(),
                    fmt_sig(p.omega1, 12),
                    fmt_sig(p.omega2, 12),
                    fmt_sig(p.gamma1, 12),
                    fmt_sig(p.gamma2, 12),
                    fmt_sig(p.gamma12, 12),
                    fmt_sig(p.delta12, 12),
                    r.segment.photons(),
                    fmt_sig(r.segment.rate(), 12)
                )?;
            }
            Ok(())
        })?,
        csv_file("g2_1atom.csv", |w| exp.one_atom.write_csv(w))?,
    ];
    if let Some(two) = &exp.two_atom {
        files.push(csv_file("g2_2atom.csv", |w| two.write_csv(w))?);
    }
    files.push(csv_file("g2_mixture.csv", |w| exp.mixture.write_csv(w))?);
    files.push(json_file("tip_summary.json", &exp.summary)?);
    Ok(CommandOutput {
        files,
        seeds: exp.seeds,
    })
}

// ------------------------------------------------------------------ driver

pub fn execute(command: Command, cfg: &RunConfig) -> RunResult<CommandOutput> {
    match command {
        Command::Analytic => cmd_analytic(cfg),
        Command::G2 => cmd_g2(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::TipMap => cmd_tip_map(cfg),
        Command::TipExperiment => cmd_tip_experiment(cfg),
    }
}

/// Runs `command`, writes its data files plus `resolved.conf` into `out`,
/// and records everything in `manifest.json`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, threads: usize) -> RunResult<RunManifest> {
    let start = Instant::now();
    let mut result = execute(command, cfg)?;
    result
        .files
        .push(OutputFile::new("resolved.conf", cfg.render().into_bytes()));
    write_outputs(out, &result.files)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name().to_string(),
        master_seed: cfg.seed,
        threads,
        config: cfg
            .pairs()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        seeds: result.seeds,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: RunManifest::digests(&result.files),
    };
    manifest.write(out)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunConfig {
        RunConfig {
            t2: 200.0,
            chunk: 150.0,
            tau_max: 2.0,
            ..RunConfig::default()
        }
    }

    #[test]
    fn chunking() {
        assert_eq!(chunk_count(1e4, 1e4), 1);
        assert_eq!(chunk_count(2e5, 1e4), 20);
        assert_eq!(chunk_count(2.5e4, 1e4), 3);
        assert_eq!(chunk_count(0.5, 1e4), 1);
    }

    #[test]
    fn segment_pieces_cover_the_duration() {
        let cfg = quick();
        let p = PhysicalParams::single(1.0, 0.0, 1.0);
        let s = simulate_segment(&p, AtomNumber::One, 400.0, &cfg, "x", 5).unwrap();
        assert_eq!(s.trajectories.len(), 3);
        assert!((s.duration() - 400.0).abs() < 1e-9);
        assert_eq!(s.seeds.iter().map(|r| r.index).collect::<Vec<_>>(), vec![5, 6, 7]);
        assert_eq!(s.seeds[1].seed, derive_seed(cfg.seed, 6));
    }

    #[test]
    fn mixture_durations_follow_poisson_weights() {
        let (t1, t2) = MixtureRun::durations(1.0, 1e5);
        assert!((t1 - 2e5).abs() < 1e-6);
        assert_eq!(t2, 1e5);
        let (t1, _) = MixtureRun::durations(2.0, 1e5);
        assert!((t1 - 1e5).abs() < 1e-6);
    }

    #[test]
    fn textbook_value_is_one() {
        assert!((factorial_moment_g2_zero(1.0, textbook_cutoff(1.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analytic_command_files() {
        let cfg = RunConfig {
            t_max: 5.0,
            dt_out: 0.5,
            ..RunConfig::default()
        };
        let out = cmd_analytic(&cfg).unwrap();
        let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "analytic_delta12_0.csv",
                "analytic_delta12_2.csv",
                "analytic_delta12_10.csv",
                "analytic_summary.json"
            ]
        );
        let text = String::from_utf8(out.files[0].bytes.clone()).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert_eq!(text.lines().nth(1), Some("0,0,0"));
    }

    #[test]
    fn g2_command_is_reproducible() {
        let cfg = quick();
        let a = cmd_g2(&cfg).unwrap();
        let b = cmd_g2(&cfg).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.seeds.len(), 3 + 2);
        let json: serde_json::Value = serde_json::from_slice(&a.files[1].bytes).unwrap();
        for key in ["g2_zero", "mean_rate", "brightness", "total_photons", "duration"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!((json["duration"].as_f64().unwrap() - 600.0).abs() < 1e-6);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let bad = RunConfig {
            gamma12: 3.0,
            ..quick()
        };
        assert_eq!(cmd_g2(&bad).unwrap_err().exit_code(), 2);
        let coarse = RunConfig { dt: 1.0, ..quick() };
        assert_eq!(cmd_g2(&coarse).unwrap_err().exit_code(), 3);
    }
}
