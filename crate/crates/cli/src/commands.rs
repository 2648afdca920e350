use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use isac_mrp::config::RunConfig;
use isac_mrp::gbsm::ScenarioConfig;
use isac_mrp::io;
use isac_mrp::monostatic::compose_channel;
use isac_mrp::optimizer::{mean_stats, run_ga, validation_stream, OptimizationResult};
use isac_mrp::rng::RandomStream;
use isac_mrp::stats::{channel_stats, normalized_error, synth_measurement, SynthMeasurementConfig};
use isac_mrp::targets::MeasuredTargets;
use serde::{Deserialize, Serialize};

use crate::reproduce::{self, average_placement};
use crate::{Cli, Command, GlobalArgs, ReproduceTarget};

/// Written next to every run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub version: String,
}

/// Collects artifact paths while a command writes them.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(mut self, command: &str, config: &RunConfig) -> Result<RunManifest> {
        let manifest_path = self.path("manifest.json");
        let manifest = RunManifest {
            command: command.to_string(),
            config: config.clone(),
            seed: config.seed,
            artifacts: self.written,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        io::write_json(&manifest_path, &manifest)?;
        Ok(manifest)
    }
}

/// Loads the configuration (TOML or a previous manifest) and applies the
/// command-line overrides. Also returns the directory relative paths in the
/// configuration refer to.
pub fn load_config(g: &GlobalArgs) -> Result<(RunConfig, PathBuf)> {
    let (mut cfg, base) = match &g.config {
        None => (RunConfig::default(), PathBuf::from(".")),
        Some(p) => {
            let base = p
                .parent()
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            let cfg = if p.extension().is_some_and(|e| e == "json") {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                let m: RunManifest = serde_json::from_str(&text)
                    .with_context(|| format!("{} is not a run manifest", p.display()))?;
                m.config
            } else {
                RunConfig::load(p)?
            };
            (cfg, base)
        }
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(n) = g.realizations {
        cfg.realizations = n;
    }
    if g.include_sf {
        cfg.include_sf = true;
    }
    cfg.check()?;
    Ok((cfg, base))
}

/// Executes a parsed command line, printing a short report to stdout.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let (mut cfg, base) = load_config(&cli.global)?;
    let sc = cfg.scenario(&base)?;
    let out = &cli.global.out;
    match &cli.command {
        Command::Simulate { average, no_paths } => {
            let placement = match average {
                Some(q) => average_placement(*q, cfg.targets.pl_db, sc.fc_ghz)?,
                None => cfg.placement.clone().ok_or_else(|| {
                    anyhow!("no placement: add a [placement] table or pass --average Q")
                })?,
            };
            cfg.placement = Some(placement);
            simulate(&cfg, &sc, out, !no_paths)
        }
        Command::Optimize { targets } => {
            if let Some(path) = targets {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                cfg.targets = toml::from_str::<MeasuredTargets>(&text)
                    .with_context(|| format!("parsing targets {}", path.display()))?;
                cfg.check()?;
            }
            optimize(&cfg, &sc, out)
        }
        Command::Stats { csv } => stats(&cfg, csv, out),
        Command::Reproduce { target } => match target {
            ReproduceTarget::Distances => distances(&cfg, &sc, out),
            ReproduceTarget::Sweep => sweep(&cfg, &sc, out),
            ReproduceTarget::Cdf => cdf(&cfg, &sc, out),
        },
        Command::SynthMeasure { count, pl, file } => synth(&cfg, *count, *pl, file.as_deref(), out),
    }
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    q: usize,
    realizations: usize,
    include_sf: bool,
    pl_total_db: f64,
    sf_total_db_mean: f64,
    ds_mean_ns: f64,
    ds_std_ns: f64,
    as_az_mean_deg: f64,
    as_az_std_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    as_zen_mean_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    as_zen_std_deg: Option<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

/// Sorted samples with their empirical CDF.
fn write_cdf(path: &Path, header: &str, samples: &[f64]) -> Result<()> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([header, "cdf"])?;
    for (i, s) in sorted.iter().enumerate() {
        w.write_record([s.to_string(), ((i + 1) as f64 / n).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(
    cfg: &RunConfig,
    sc: &ScenarioConfig,
    out: &Path,
    dump_paths: bool,
) -> Result<RunManifest> {
    let placement = cfg
        .placement
        .as_ref()
        .expect("placement resolved by caller");
    let mut o = Outputs::new(out);
    let root = RandomStream::new(cfg.seed);
    let with_zenith = sc.zenith_spread_enabled;
    let mut per = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "realization",
        "pl_total_db",
        "sf_total_db",
        "ds_ns",
        "as_az_deg",
    ];
    if with_zenith {
        header.push("as_zen_deg");
    }
    per.write_record(&header)?;
    let (mut ds, mut az, mut zen, mut sf) = (vec![], vec![], vec![], vec![]);
    let mut pl_total = f64::NAN;
    for r in 0..cfg.realizations {
        let ch = compose_channel(placement, sc, &root.child(r as u64), cfg.include_sf)?;
        if dump_paths {
            io::write_weighted_paths_csv(&o.path(&format!("paths/realization_{r:04}.csv")), &ch)?;
        }
        let s = ch.stats(with_zenith);
        pl_total = ch.pl_total_db;
        let mut row = vec![
            r.to_string(),
            ch.pl_total_db.to_string(),
            ch.sf_total_db.to_string(),
            (s.ds_s * 1e9).to_string(),
            s.as_az_deg.to_string(),
        ];
        if let Some(z) = s.as_zen_deg {
            row.push(z.to_string());
            zen.push(z);
        }
        per.write_record(&row)?;
        ds.push(s.ds_s);
        az.push(s.as_az_deg);
        sf.push(ch.sf_total_db);
    }
    let per_path = o.path("realizations.csv");
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(&per_path, per.into_inner()?)
        .with_context(|| format!("writing {}", per_path.display()))?;

    let (ds_m, ds_s) = mean_std(&ds);
    let (az_m, az_s) = mean_std(&az);
    let zen_ms = with_zenith.then(|| mean_std(&zen));
    let summary = SimulationSummary {
        q: placement.len(),
        realizations: cfg.realizations,
        include_sf: cfg.include_sf,
        pl_total_db: pl_total,
        sf_total_db_mean: mean_std(&sf).0,
        ds_mean_ns: ds_m * 1e9,
        ds_std_ns: ds_s * 1e9,
        as_az_mean_deg: az_m,
        as_az_std_deg: az_s,
        as_zen_mean_deg: zen_ms.map(|z| z.0),
        as_zen_std_deg: zen_ms.map(|z| z.1),
    };
    io::write_json(&o.path("stats.json"), &summary)?;
    let log_ds: Vec<f64> = ds.iter().map(|d| d.log10()).collect();
    let log_as: Vec<f64> = az.iter().map(|a| a.log10()).collect();
    write_cdf(&o.path("cdf_log10_ds.csv"), "log10_ds_s", &log_ds)?;
    write_cdf(&o.path("cdf_log10_as.csv"), "log10_as_deg", &log_as)?;

    println!(
        "Q={} PL={:.4} dB over {} realizations: DS {:.2} +/- {:.2} ns, AS {:.2} +/- {:.2} deg",
        summary.q, pl_total, cfg.realizations, summary.ds_mean_ns, summary.ds_std_ns, az_m, az_s
    );
    o.finish("simulate", cfg)
}

/// Best placement re-simulated on fresh draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub realizations: usize,
    pub ds_s: f64,
    pub as_az_deg: f64,
    pub ds_err_pct: f64,
    pub as_err_pct: f64,
}

pub fn validate_result(
    result: &OptimizationResult,
    targets: &MeasuredTargets,
    sc: &ScenarioConfig,
    seed: u64,
    realizations: usize,
    include_sf: bool,
) -> isac_mrp::Result<Validation> {
    let s = mean_stats(
        &result.best_placement,
        sc,
        &validation_stream(seed),
        realizations,
        include_sf,
        false,
    )?;
    Ok(Validation {
        realizations,
        ds_s: s.ds_s,
        as_az_deg: s.as_az_deg,
        ds_err_pct: normalized_error(targets.ds_s, s.ds_s)?,
        as_err_pct: normalized_error(targets.as_az_deg, s.as_az_deg)?,
    })
}

#[derive(Debug, Serialize)]
struct OptimizeReport<'a> {
    targets: &'a MeasuredTargets,
    q_star: usize,
    result: &'a OptimizationResult,
    validation: &'a Validation,
}

fn optimize(cfg: &RunConfig, sc: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let result = run_ga(&cfg.ga_config(), &cfg.targets, sc)?;
    let validation = validate_result(
        &result,
        &cfg.targets,
        sc,
        cfg.seed,
        cfg.realizations,
        cfg.include_sf,
    )?;
    let mut o = Outputs::new(out);
    io::write_json(
        &o.path("result.json"),
        &OptimizeReport {
            targets: &cfg.targets,
            q_star: result.q_star(),
            result: &result,
            validation: &validation,
        },
    )?;
    io::write_trace_csv(&o.path("trace.csv"), &result)?;
    io::write_top_csv(&o.path("top.csv"), &result)?;

    let p = &result.best_placement;
    println!(
        "Q* = {} after {} generations ({:?})",
        p.len(),
        result.generations,
        result.stop_reason
    );
    println!("best fitness {:.6}", result.best_fitness);
    for rp in p.entries() {
        println!(
            "  d = {:8.3} m  aod = {:8.3} deg  zod = {:6.2} deg",
            rp.distance_m, rp.aod_deg, rp.zod_deg
        );
    }
    println!(
        "validated over {} realizations: DS {:.2} ns ({:.2}%), AS {:.2} deg ({:.2}%)",
        validation.realizations,
        validation.ds_s * 1e9,
        validation.ds_err_pct,
        validation.as_az_deg,
        validation.as_err_pct
    );
    o.finish("optimize", cfg)
}

fn stats(cfg: &RunConfig, csv_path: &Path, out: &Path) -> Result<RunManifest> {
    let list = io::read_path_list_csv(csv_path)?;
    let s = channel_stats(&list)?;
    println!("paths   {}", list.len());
    println!("PL      {:.4} dB", s.pl_db);
    println!("DS      {:.4} ns", s.ds_s * 1e9);
    println!("AS az   {:.4} deg", s.as_az_deg);
    if let Some(z) = s.as_zen_deg {
        println!("AS zen  {z:.4} deg");
    }
    let mut o = Outputs::new(out);
    io::write_json(&o.path("stats.json"), &s)?;
    o.finish("stats", cfg)
}

fn distances(cfg: &RunConfig, sc: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let rows = reproduce::equal_distances(5, cfg.targets.pl_db, sc.fc_ghz)?;
    let mut o = Outputs::new(out);
    let path = o.path("distances.csv");
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["q", "distance_m"])?;
    println!(
        "equal RP distances for PL {} dB at {} GHz",
        cfg.targets.pl_db, sc.fc_ghz
    );
    for (q, d) in &rows {
        println!("Q={q}  {d:.2} m");
        w.write_record([q.to_string(), d.to_string()])?;
    }
    w.flush()?;
    o.finish("reproduce distances", cfg)
}

fn sweep(cfg: &RunConfig, sc: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let rows = reproduce::rp_count_sweep(
        sc,
        &cfg.targets,
        &RandomStream::new(cfg.seed),
        cfg.realizations,
    )?;
    let mut o = Outputs::new(out);
    let path = o.path("sweep.csv");
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "placement",
        "q",
        "ds_ns",
        "as_az_deg",
        "ds_err_pct",
        "as_err_pct",
        "reference_ds_ns",
        "reference_as_deg",
    ])?;
    println!(
        "measured DS {:.2} ns, AS {:.2} deg; {} realizations per placement",
        cfg.targets.ds_s * 1e9,
        cfg.targets.as_az_deg,
        cfg.realizations
    );
    println!(
        "{:<10} {:>9} {:>8} {:>9} {:>8} {:>10} {:>10}",
        "placement", "DS [ns]", "err %", "AS [deg]", "err %", "ref DS", "ref AS"
    );
    for r in &rows {
        println!(
            "{:<10} {:>9.2} {:>8.2} {:>9.2} {:>8.2} {:>10.2} {:>10.2}",
            r.label,
            r.ds_ns,
            r.ds_err_pct,
            r.as_az_deg,
            r.as_err_pct,
            r.reference_ds_ns,
            r.reference_as_deg
        );
        w.write_record([
            r.label.clone(),
            r.q.to_string(),
            r.ds_ns.to_string(),
            r.as_az_deg.to_string(),
            r.ds_err_pct.to_string(),
            r.as_err_pct.to_string(),
            r.reference_ds_ns.to_string(),
            r.reference_as_deg.to_string(),
        ])?;
    }
    w.flush()?;
    io::write_json(&o.path("sweep.json"), &rows)?;
    o.finish("reproduce sweep", cfg)
}

fn cdf(cfg: &RunConfig, sc: &ScenarioConfig, out: &Path) -> Result<RunManifest> {
    let optimal = cfg
        .placement
        .clone()
        .unwrap_or_else(reproduce::reference_optimal_placement);
    let cdfs = reproduce::spread_cdfs(
        sc,
        &cfg.targets,
        &optimal,
        &RandomStream::new(cfg.seed),
        cfg.realizations,
    )?;
    let mut o = Outputs::new(out);
    let path = o.path("cdf_samples.csv");
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["placement", "log10_ds_s", "log10_as_deg"])?;
    for set in &cdfs.sets {
        for (d, a) in set.log10_ds.iter().zip(&set.log10_as) {
            w.write_record([set.label.clone(), d.to_string(), a.to_string()])?;
        }
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Fit<'a> {
        placement: &'a str,
        log10_ds: isac_mrp::stats::NormalFit,
        log10_as: isac_mrp::stats::NormalFit,
    }
    #[derive(Serialize)]
    struct Fits<'a> {
        measured_log10_ds: f64,
        measured_log10_as: f64,
        fits: Vec<Fit<'a>>,
    }
    let fits = Fits {
        measured_log10_ds: cdfs.measured_log10_ds,
        measured_log10_as: cdfs.measured_log10_as,
        fits: cdfs
            .sets
            .iter()
            .map(|s| Fit {
                placement: &s.label,
                log10_ds: s.ds_fit,
                log10_as: s.as_fit,
            })
            .collect(),
    };
    io::write_json(&o.path("cdf_fits.json"), &fits)?;
    println!(
        "measured: log10 DS {:.2}, log10 AS {:.2}",
        cdfs.measured_log10_ds, cdfs.measured_log10_as
    );
    for s in &cdfs.sets {
        println!(
            "{:<10} log10 DS ~ N({:.3}, {:.3}) KS {:.3}   log10 AS ~ N({:.3}, {:.3}) KS {:.3}",
            s.label,
            s.ds_fit.mu,
            s.ds_fit.sigma,
            s.ds_fit.ks_distance,
            s.as_fit.mu,
            s.as_fit.sigma,
            s.as_fit.ks_distance
        );
    }
    o.finish("reproduce cdf", cfg)
}

fn synth(
    cfg: &RunConfig,
    count: usize,
    pl: f64,
    file: Option<&Path>,
    out: &Path,
) -> Result<RunManifest> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let sm = SynthMeasurementConfig {
        count,
        pl_db: pl,
        ..SynthMeasurementConfig::default()
    };
    let list = synth_measurement(&sm, &RandomStream::new(cfg.seed))?;
    let mut o = Outputs::new(out);
    let target = match file {
        Some(f) => {
            o.written.push(f.display().to_string());
            f.to_path_buf()
        }
        None => o.path("measurement.csv"),
    };
    io::write_path_list_csv(&target, &list)?;
    println!("wrote {} paths to {}", list.len(), target.display());
    o.finish("synth-measure", cfg)
}

/// Process exit code for an error: 3 for infeasible constraints, 4 for
/// invalid input or configuration, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use isac_mrp::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Infeasible { .. }) => 3,
        Some(
            E::Config(_)
            | E::MalformedInput(_)
            | E::MalformedRows { .. }
            | E::Toml(_)
            | E::Csv(_)
            | E::Json(_),
        ) => 4,
        _ => 1,
    }
}
