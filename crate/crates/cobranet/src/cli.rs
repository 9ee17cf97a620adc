//! Experiment orchestration: resolved run configurations, CSV and plot
//! script emission, theory reports, and reproducibility manifests.
//!
//! Every randomized run derives its per-trial RNG streams from one base
//! seed (see [`crate::seeding`]) and records them, together with SHA-256
//! digests of every emitted file, in a [`RunManifest`]. Re-running with
//! the manifest's seed reproduces the data files byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cobrad;
use crate::degree::{self, DegreeProfile, DegreeSequence, ValidationMode};
use crate::duality::{self, MismatchReport};
use crate::error::{Error, Result};
use crate::forward::{self, DensitySeries, OpinionConfig};
use crate::graph::{sample_dcm, Digraph};
use crate::seeding::{dynamics_stream, graph_stream, stream_rng};
use crate::theory::{self, RegimeTag};
use crate::tree::OffspringLaw;
use crate::SurvivalEstimate;

/// Machine-readable report of the closed-form predictions for one
/// `(sequence, p)` pair. Only defined for stubbornness 2.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub n: usize,
    pub p: f64,
    pub s: u8,
    pub rho: f64,
    pub lambda: f64,
    pub p_c: f64,
    pub regime: RegimeTag,
    pub z_star: f64,
    pub q_star_closed: f64,
    pub q_star_sum: f64,
}

pub fn theory_report(seq: &DegreeSequence, p: f64, s: u8) -> Result<TheoryReport> {
    theory::require_stubbornness_two(s)?;
    let report = degree::validate(seq, ValidationMode::TheoryValid);
    if !report.ok {
        return Err(Error::Sequence(format!(
            "theory needs a theory-valid sequence: {}",
            report.violations.join("; ")
        )));
    }
    let stats = degree::compute_stats(seq, 1.0)?;
    let regime = theory::classify(p, stats.rho)?;
    Ok(TheoryReport {
        n: seq.n(),
        p,
        s,
        rho: stats.rho,
        lambda: stats.lambda,
        p_c: regime.p_c,
        regime: regime.tag,
        z_star: regime.z_star,
        q_star_closed: theory::q_star_closed(p, stats.rho, stats.lambda)?,
        q_star_sum: theory::q_star_sum(seq, p)?,
    })
}

/// Companion file written next to simulation outputs. For stubbornness
/// other than 2 the closed-form fields are absent and a note says why.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryCompanion {
    pub n: usize,
    pub p: f64,
    pub s: u8,
    pub rho: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_star_closed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_star_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn theory_companion(seq: &DegreeSequence, p: f64, s: u8) -> Result<TheoryCompanion> {
    let stats = degree::compute_stats(seq, 1.0)?;
    if s == 2 && p < 1.0 && degree::validate(seq, ValidationMode::TheoryValid).ok {
        let report = theory_report(seq, p, s)?;
        Ok(TheoryCompanion {
            n: report.n,
            p,
            s,
            rho: report.rho,
            lambda: report.lambda,
            p_c: Some(report.p_c),
            regime: Some(report.regime),
            z_star: Some(report.z_star),
            q_star_closed: Some(report.q_star_closed),
            q_star_sum: Some(report.q_star_sum),
            note: None,
        })
    } else {
        let note = if s != 2 {
            "closed-form predictions available only for s=2"
        } else if p >= 1.0 {
            "closed-form predictions undefined at p=1"
        } else {
            "sequence is not theory-valid; only rho and lambda reported"
        };
        Ok(TheoryCompanion {
            n: seq.n(),
            p,
            s,
            rho: stats.rho,
            lambda: stats.lambda,
            p_c: None,
            regime: None,
            z_star: None,
            q_star_closed: None,
            q_star_sum: None,
            note: Some(note.to_string()),
        })
    }
}

/// Fully resolved parameters of a randomized experiment, embedded verbatim
/// in every manifest.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSpec {
    pub profile: DegreeProfile,
    pub n: usize,
    pub p_values: Vec<f64>,
    pub s: u8,
    pub t_max: f64,
    pub sample_dt: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StreamRecord {
    pub role: String,
    pub stream: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Reproducibility record: tool version, the resolved spec, every derived
/// RNG stream, wall-clock time and digests of all written files.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: serde_json::Value,
    pub base_seed: u64,
    pub streams: Vec<StreamRecord>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    fn new(command: &str, params: serde_json::Value, base_seed: u64) -> Self {
        RunManifest {
            tool: "cobranet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            params,
            base_seed,
            streams: Vec::new(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    fn record_output(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: hex,
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn build_validated_sequence(
    profile: &DegreeProfile,
    expected_n: Option<usize>,
) -> Result<DegreeSequence> {
    let seq = profile.build_sequence()?;
    if let Some(n) = expected_n {
        if n != seq.n() {
            return Err(Error::Profile(format!(
                "--n {n} does not match the profile total {}",
                seq.n()
            )));
        }
    }
    let report = degree::validate(&seq, ValidationMode::Generable);
    if !report.ok {
        return Err(Error::Sequence(report.violations.join("; ")));
    }
    Ok(seq)
}

fn dump_graph_if_requested(g: &Digraph, path: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = path {
        let mut w = BufWriter::new(File::create(path)?);
        g.dump_edge_list(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Configuration of the `simulate` subcommand.
#[derive(Clone, Debug)]
pub struct SimulateConfig {
    pub profile: DegreeProfile,
    pub expected_n: Option<usize>,
    pub p: f64,
    pub s: u8,
    pub t_max: f64,
    pub sample_dt: f64,
    pub trials: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub dump_graph: Option<PathBuf>,
}

pub struct SimulateSummary {
    pub n: usize,
    pub trials: u64,
    pub mean_series: DensitySeries,
    pub csv_path: PathBuf,
    pub theory_path: PathBuf,
    pub manifest_path: PathBuf,
}

fn mean_series(series: &[DensitySeries]) -> DensitySeries {
    let times = series[0].sample_times.clone();
    let mut mean = vec![0.0; times.len()];
    for s in series {
        for (acc, &d) in mean.iter_mut().zip(&s.red_density) {
            *acc += d;
        }
    }
    for acc in &mut mean {
        *acc /= series.len() as f64;
    }
    DensitySeries {
        sample_times: times,
        red_density: mean,
    }
}

fn run_density_trials(
    g: &Digraph,
    p: f64,
    s: u8,
    t_max: f64,
    sample_dt: f64,
    trials: u64,
    seed: u64,
    combo: u64,
) -> Result<Vec<DensitySeries>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, dynamics_stream(combo, trial));
            let initial = OpinionConfig::all_red(g.n());
            forward::simulate_density(g, p, s, t_max, sample_dt, &initial, &mut rng)
                .map(|(series, _)| series)
        })
        .collect()
}

fn write_density_csv(path: &Path, series: &[DensitySeries]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "trial,time,red_density")?;
    for (trial, s) in series.iter().enumerate() {
        for (&t, &d) in s.sample_times.iter().zip(&s.red_density) {
            writeln!(w, "{trial},{t},{d}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_mean_csv(path: &Path, mean: &DensitySeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time,mean_red_density")?;
    for (&t, &d) in mean.sample_times.iter().zip(&mean.red_density) {
        writeln!(w, "{t},{d}")?;
    }
    w.flush()?;
    Ok(())
}

/// Run the forward dynamics: one shared graph, `trials` independent
/// trajectories, a CSV of all trajectories, a theory companion JSON and a
/// manifest.
pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateSummary> {
    let start = Instant::now();
    if cfg.trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let seq = build_validated_sequence(&cfg.profile, cfg.expected_n)?;
    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::to_value(ExperimentSpec {
            profile: cfg.profile.clone(),
            n: seq.n(),
            p_values: vec![cfg.p],
            s: cfg.s,
            t_max: cfg.t_max,
            sample_dt: cfg.sample_dt,
            trials: cfg.trials,
            seed: cfg.seed,
        })?,
        cfg.seed,
    );
    let g_stream = graph_stream(0, 0);
    let g = sample_dcm(&seq, &mut stream_rng(cfg.seed, g_stream))?;
    manifest.streams.push(StreamRecord {
        role: "graph".into(),
        stream: g_stream,
    });
    dump_graph_if_requested(&g, &cfg.dump_graph)?;
    let series = run_density_trials(
        &g,
        cfg.p,
        cfg.s,
        cfg.t_max,
        cfg.sample_dt,
        cfg.trials,
        cfg.seed,
        0,
    )?;
    for trial in 0..cfg.trials {
        manifest.streams.push(StreamRecord {
            role: format!("trial{trial}"),
            stream: dynamics_stream(0, trial),
        });
    }
    write_density_csv(&cfg.out, &series)?;
    let theory_path = companion_path(&cfg.out);
    {
        let companion = theory_companion(&seq, cfg.p, cfg.s)?;
        let mut w = BufWriter::new(File::create(&theory_path)?);
        serde_json::to_writer_pretty(&mut w, &companion)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    manifest.record_output(&cfg.out)?;
    manifest.record_output(&theory_path)?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest_path = manifest_path_for(&cfg.out);
    manifest.write(&manifest_path)?;
    Ok(SimulateSummary {
        n: seq.n(),
        trials: cfg.trials,
        mean_series: mean_series(&series),
        csv_path: cfg.out.clone(),
        theory_path,
        manifest_path,
    })
}

fn companion_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".theory.json");
    out.with_file_name(name)
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// What the `dual` subcommand estimates.
#[derive(Clone, Copy, Debug)]
pub enum DualTarget {
    /// Survival of the label started at one vertex.
    Vertex(u32),
    /// Vertex-averaged survival: the predicted red density.
    AllVertices,
}

#[derive(Clone, Debug)]
pub struct DualConfig {
    pub profile: DegreeProfile,
    pub p: f64,
    pub s: u8,
    pub target: DualTarget,
    pub t_max: f64,
    pub trials: u64,
    pub seed: u64,
    pub dump_graph: Option<PathBuf>,
}

pub struct DualSummary {
    pub n: usize,
    pub estimate: SurvivalEstimate,
    /// Closed-form prediction (s=2 only): `1 - z_hat` for a single vertex,
    /// the limiting red density for the averaged target.
    pub prediction: Option<f64>,
}

pub fn run_dual(cfg: &DualConfig) -> Result<DualSummary> {
    let seq = build_validated_sequence(&cfg.profile, None)?;
    let g = sample_dcm(&seq, &mut stream_rng(cfg.seed, graph_stream(0, 0)))?;
    dump_graph_if_requested(&g, &cfg.dump_graph)?;
    let estimate = match cfg.target {
        DualTarget::Vertex(x) => {
            cobrad::estimate_survival(&g, cfg.p, cfg.s, x, cfg.t_max, cfg.trials, cfg.seed)?
        }
        DualTarget::AllVertices => {
            cobrad::estimate_mean_survival(&g, cfg.p, cfg.s, cfg.t_max, cfg.trials, cfg.seed)?
        }
    };
    let prediction = if cfg.s == 2
        && cfg.p < 1.0
        && degree::validate(&seq, ValidationMode::TheoryValid).ok
    {
        let stats = degree::compute_stats(&seq, 1.0)?;
        Some(match cfg.target {
            DualTarget::Vertex(x) => {
                let d = seq.d_plus()[x as usize];
                1.0 - theory::z_hat_root(d, cfg.p, stats.rho)?
            }
            DualTarget::AllVertices => theory::q_star_sum(&seq, cfg.p)?,
        })
    } else {
        None
    };
    Ok(DualSummary {
        n: seq.n(),
        estimate,
        prediction,
    })
}

#[derive(Clone, Debug)]
pub struct TreeConfig {
    pub profile: DegreeProfile,
    pub p: f64,
    pub root_degree: u32,
    pub trials: u64,
    pub gen_cap: u32,
    pub seed: u64,
}

pub struct TreeSummary {
    pub estimate: SurvivalEstimate,
    pub rho: f64,
    /// `1 - z_hat(root_degree, p, rho)`.
    pub prediction: f64,
}

pub fn run_tree(cfg: &TreeConfig) -> Result<TreeSummary> {
    let seq = cfg.profile.build_sequence()?;
    let law = OffspringLaw::from_sequence(&seq)?;
    let stats = degree::compute_stats(&seq, 1.0)?;
    let estimate = crate::tree::survival_probability_mc(
        cfg.root_degree,
        &law,
        cfg.p,
        cfg.gen_cap,
        cfg.trials,
        cfg.seed,
    )?;
    let prediction = 1.0 - theory::z_hat_root(cfg.root_degree, cfg.p, stats.rho)?;
    Ok(TreeSummary {
        estimate,
        rho: stats.rho,
        prediction,
    })
}

#[derive(Clone, Debug)]
pub struct VerifyDualityConfig {
    pub profile: DegreeProfile,
    pub expected_n: Option<usize>,
    pub p: f64,
    pub s: u8,
    pub t_max: f64,
    pub seeds: u64,
    pub base_seed: u64,
}

pub struct VerifyDualitySummary {
    pub seeds_run: u64,
    pub mismatches: Vec<MismatchReport>,
}

/// Re-sample the graph and verify the pathwise identity once per seed.
pub fn run_verify_duality(cfg: &VerifyDualityConfig) -> Result<VerifyDualitySummary> {
    let seq = build_validated_sequence(&cfg.profile, cfg.expected_n)?;
    let mismatches: Vec<MismatchReport> = (0..cfg.seeds)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.base_seed.wrapping_add(i);
            let g = sample_dcm(&seq, &mut stream_rng(seed, graph_stream(0, 0)))?;
            let labels: Vec<u32> = (0..g.n() as u32).collect();
            duality::verify_pathwise(&g, cfg.t_max, cfg.p, cfg.s, &labels, seed)
        })
        .filter(|r| match r {
            Ok(report) => !report.is_clean(),
            Err(_) => true,
        })
        .collect::<Result<_>>()?;
    Ok(VerifyDualitySummary {
        seeds_run: cfg.seeds,
        mismatches,
    })
}

/// Evenly spaced grid with `count` points including both endpoints.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && hi >= lo);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Emit the `(rho, p, regime, p_c)` grid as CSV: the survival phase
/// diagram, with the `p_c(rho)` boundary readable off every row.
pub fn write_phase_diagram(
    rho_grid: &[f64],
    p_grid: &[f64],
    w: &mut impl Write,
) -> Result<()> {
    writeln!(w, "rho,p,regime,p_c")?;
    for &rho in rho_grid {
        let p_c = theory::p_critical(rho)?;
        for &p in p_grid {
            let regime = match theory::classify(p, rho)?.tag {
                RegimeTag::Subcritical => "subcritical",
                RegimeTag::Supercritical => "supercritical",
            };
            writeln!(w, "{rho},{p},{regime},{p_c}")?;
        }
    }
    Ok(())
}

pub fn run_phase_diagram(
    rho_grid: &[f64],
    p_grid: &[f64],
    out: &Path,
    base_seed: u64,
) -> Result<PathBuf> {
    let start = Instant::now();
    {
        let mut w = BufWriter::new(File::create(out)?);
        write_phase_diagram(rho_grid, p_grid, &mut w)?;
        w.flush()?;
    }
    let mut manifest = RunManifest::new(
        "phase-diagram",
        serde_json::json!({
            "rho_grid": rho_grid,
            "p_grid": p_grid,
        }),
        base_seed,
    );
    manifest.record_output(out)?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest_path = manifest_path_for(out);
    manifest.write(&manifest_path)?;
    Ok(manifest_path)
}

/// Scale of the preset experiment: the full graph size or a desk-sized
/// variant that runs in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fig3Scale {
    Full,
    Desk,
}

impl Fig3Scale {
    pub fn n(self) -> usize {
        match self {
            Fig3Scale::Full => 10_000,
            Fig3Scale::Desk => 2_000,
        }
    }
}

/// The three preset profiles of the density experiment, with the plot
/// colors conventionally attached to them.
pub fn fig3_profiles(n: usize) -> Vec<(&'static str, &'static str, DegreeProfile)> {
    vec![
        ("regular6", "red", degree::presets::regular6(n)),
        ("half-10-5", "green", degree::presets::half_10_5(n)),
        ("half-10-2", "blue", degree::presets::half_10_2(n)),
    ]
}

pub const FIG3_P_VALUES: [f64; 2] = [0.3, 0.45];
pub const FIG3_SAMPLE_DT: f64 = 0.5;

/// Horizon long enough for the plateau at p=0.3 and for the supercritical
/// decay at p=0.45.
pub fn fig3_t_max(p: f64) -> f64 {
    if p <= 0.3 {
        30.0
    } else {
        50.0
    }
}

#[derive(Clone, Debug)]
pub struct Fig3Config {
    pub scale: Fig3Scale,
    pub trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub struct Fig3Combo {
    pub profile_name: &'static str,
    pub color: &'static str,
    pub p: f64,
    pub q_star: f64,
    pub mean_series: DensitySeries,
    pub csv_path: PathBuf,
}

pub struct Fig3Summary {
    pub n: usize,
    pub combos: Vec<Fig3Combo>,
    pub plot_script_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Run the preset experiment: the three profiles at p in {0.3, 0.45},
/// one shared graph per profile, a raw and a mean CSV per (profile, p),
/// a gnuplot script overlaying the predicted densities, and a manifest.
pub fn run_fig3(cfg: &Fig3Config) -> Result<Fig3Summary> {
    let start = Instant::now();
    if cfg.trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let n = cfg.scale.n();
    let mut manifest = RunManifest::new(
        "experiment fig3",
        serde_json::json!({
            "scale": match cfg.scale { Fig3Scale::Full => "full", Fig3Scale::Desk => "desk" },
            "n": n,
            "p_values": FIG3_P_VALUES,
            "s": 2,
            "sample_dt": FIG3_SAMPLE_DT,
            "trials": cfg.trials,
            "seed": cfg.seed,
        }),
        cfg.seed,
    );
    let mut combos = Vec::new();
    for (profile_index, (name, color, profile)) in fig3_profiles(n).into_iter().enumerate() {
        let seq = profile.build_sequence()?;
        let g_stream = graph_stream(profile_index as u64, 0);
        let g = sample_dcm(&seq, &mut stream_rng(cfg.seed, g_stream))?;
        manifest.streams.push(StreamRecord {
            role: format!("{name}/graph"),
            stream: g_stream,
        });
        for (p_index, &p) in FIG3_P_VALUES.iter().enumerate() {
            let combo = (profile_index * FIG3_P_VALUES.len() + p_index) as u64;
            let t_max = fig3_t_max(p);
            let series = run_density_trials(
                &g,
                p,
                2,
                t_max,
                FIG3_SAMPLE_DT,
                cfg.trials,
                cfg.seed,
                combo,
            )?;
            for trial in 0..cfg.trials {
                manifest.streams.push(StreamRecord {
                    role: format!("{name}/p{p}/trial{trial}"),
                    stream: dynamics_stream(combo, trial),
                });
            }
            let csv_path = cfg.out_dir.join(format!("fig3_{name}_p{p:.2}.csv"));
            write_density_csv(&csv_path, &series)?;
            let mean = mean_series(&series);
            let mean_path = cfg.out_dir.join(format!("fig3_{name}_p{p:.2}_mean.csv"));
            write_mean_csv(&mean_path, &mean)?;
            manifest.record_output(&csv_path)?;
            manifest.record_output(&mean_path)?;
            combos.push(Fig3Combo {
                profile_name: name,
                color,
                p,
                q_star: theory::q_star_sum(&seq, p)?,
                mean_series: mean,
                csv_path,
            });
        }
    }
    let plot_script_path = cfg.out_dir.join("fig3.gp");
    write_fig3_plot_script(&plot_script_path, &combos)?;
    manifest.record_output(&plot_script_path)?;
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    let manifest_path = cfg.out_dir.join("manifest.json");
    manifest.write(&manifest_path)?;
    Ok(Fig3Summary {
        n,
        combos,
        plot_script_path,
        manifest_path,
    })
}

/// Gnuplot script consuming the mean CSVs; predictions as dashed lines.
fn write_fig3_plot_script(path: &Path, combos: &[Fig3Combo]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# gnuplot script; run from this directory: gnuplot fig3.gp")?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set terminal pngcairo size 1200,500")?;
    writeln!(w, "set output 'fig3.png'")?;
    writeln!(w, "set xlabel 'time'")?;
    writeln!(w, "set ylabel 'red density'")?;
    writeln!(w, "set yrange [0:1]")?;
    writeln!(w, "set key bottom left")?;
    writeln!(w, "set multiplot layout 1,2")?;
    for &p in &FIG3_P_VALUES {
        writeln!(w, "set title 'p = {p}'")?;
        let mut parts = Vec::new();
        for combo in combos.iter().filter(|c| c.p == p) {
            let file = combo
                .csv_path
                .file_name()
                .unwrap()
                .to_string_lossy()
                .replace(".csv", "_mean.csv");
            parts.push(format!(
                "'{file}' skip 1 using 1:2 with lines lc rgb '{color}' title '{name}'",
                color = combo.color,
                name = combo.profile_name
            ));
            parts.push(format!(
                "{q} with lines dt 2 lc rgb '{color}' notitle",
                q = combo.q_star,
                color = combo.color
            ));
        }
        writeln!(w, "plot {}", parts.join(", \\\n     "))?;
    }
    writeln!(w, "unset multiplot")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::presets;

    #[test]
    fn theory_report_matches_expected_values() {
        let seq = presets::regular6(1000).build_sequence().unwrap();
        let report = theory_report(&seq, 0.3, 2).unwrap();
        assert!((report.rho - 1.0 / 6.0).abs() < 1e-12);
        assert!((report.p_c - 0.4772).abs() < 1e-3);
        assert!((report.q_star_closed - 0.7796).abs() < 1e-3);
        assert_eq!(report.regime, RegimeTag::Subcritical);
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "rho",
            "lambda",
            "p_c",
            "regime",
            "z_star",
            "q_star_closed",
            "q_star_sum",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }

    #[test]
    fn theory_report_rejects_other_stubbornness() {
        let seq = presets::regular6(100).build_sequence().unwrap();
        let err = theory_report(&seq, 0.3, 3).unwrap_err();
        assert!(err.to_string().contains("only for s=2"));
    }

    #[test]
    fn theory_companion_degrades_gracefully() {
        let seq = presets::regular6(100).build_sequence().unwrap();
        let companion = theory_companion(&seq, 0.3, 3).unwrap();
        assert!(companion.p_c.is_none());
        assert!(companion.note.as_deref().unwrap().contains("s=2"));
        assert!((companion.rho - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn phase_diagram_rows() {
        let mut buf = Vec::new();
        write_phase_diagram(&[1.0 / 6.0, 0.5], &[0.0, 0.45, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rho,p,regime,p_c");
        assert_eq!(lines.len(), 7);
        // p = 0 is subcritical everywhere, p = 1 supercritical everywhere
        assert!(lines[1].contains("subcritical"));
        assert!(lines[3].contains("supercritical"));
        // rho = 1/6 boundary near 0.477: p = 0.45 still subcritical
        assert!(lines[2].contains("subcritical"));
        // rho = 0.5 boundary is sqrt(2)-1 < 0.45: supercritical
        assert!(lines[5].contains("supercritical"));
        assert!(lines[4].contains(&format!("{}", 2f64.sqrt() - 1.0)[..8]));
    }

    #[test]
    fn zero_trials_are_rejected() {
        let dir = std::env::temp_dir();
        let cfg = SimulateConfig {
            profile: presets::regular6(10),
            expected_n: None,
            p: 0.3,
            s: 2,
            t_max: 1.0,
            sample_dt: 0.5,
            trials: 0,
            seed: 0,
            out: dir.join("never-written.csv"),
            dump_graph: None,
        };
        assert!(run_simulate(&cfg).is_err());
    }

    #[test]
    fn linspace_includes_endpoints() {
        let grid = linspace(0.1, 0.5, 5);
        assert_eq!(grid.len(), 5);
        assert!((grid[0] - 0.1).abs() < 1e-15);
        assert!((grid[4] - 0.5).abs() < 1e-15);
    }
}
