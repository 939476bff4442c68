use clap::{Args, Parser, Subcommand};
use regionkit::geometry::BBox;
use regionkit::ingest::{
    geometry_to_geojson, parse_geometry, parse_records, write_records, ConfigOverrides, PipelineConfig, RecordSet,
};
use regionkit::pipeline::evaluate::{evaluate_regions, grid_regions, rows_to_csv, summaries_to_csv};
use regionkit::pipeline::scalability::{run_scalability, scale_points_to_csv};
use regionkit::pipeline::synth::{synth_geometry, synth_records, River, SynthSpec};
use regionkit::pipeline::{
    elements_to_geojson, export_lookup, optimize, parse_elements, parse_region_polygons, prepare, read_file,
    segment_city, write_file, OptimizeArtifacts, PipelineError, TimeSplit,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Generate operation regions from a road map and service records.
#[derive(Parser)]
#[command(name = "regionkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city: geometry.geojson and records.csv.
    Synth(SynthArgs),
    /// Segment a road/obstacle map into atomic elements (elements.geojson).
    Segment {
        #[command(flatten)]
        common: Common,
        /// Road/obstacle GeoJSON.
        #[arg(long)]
        geometry: PathBuf,
    },
    /// Cluster elements into regions (regions.geojson,
    /// regions_specificity.geojson, pareto.json, trace.csv).
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        elements: PathBuf,
        /// Records CSV (`timestamp,lat,lon`).
        #[arg(long)]
        records: PathBuf,
        /// Geometry GeoJSON whose obstacles block merging.
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Score regions against an equal-count grid on the held-out window
    /// (metrics.csv, metrics_grid.csv, comparison.csv).
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        regions: PathBuf,
        #[arg(long)]
        records: PathBuf,
        /// Geometry GeoJSON giving the city extent for the grid baseline;
        /// defaults to the configured bbox, else the regions' extent.
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Time the optimize stage on grid elements of growing count
    /// (scalability.csv).
    Scalability {
        #[command(flatten)]
        common: Common,
        /// Synthetic city TOML; defaults to a random 10 km city.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "100,400,1600")]
        sizes: Vec<usize>,
    },
    /// Flatten regions.geojson into one polygon per part for point lookup
    /// (regions_lookup.geojson).
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        regions: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML key/value file over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability of refining the best-predictability solution.
    #[arg(long)]
    w: Option<f64>,
    /// Move-evaluation budget.
    #[arg(long)]
    eps: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut file = match &self.config {
            Some(path) => ConfigOverrides::from_toml(&read_file(path)?)?,
            None => ConfigOverrides::default(),
        };
        file.seed = self.seed.or(file.seed);
        file.w = self.w.or(file.w);
        file.eps = self.eps.or(file.eps);
        Ok(PipelineConfig::from_overrides(&file)?)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Synthetic city TOML; when absent a random city is drawn from the
    /// flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 4.0)]
    extent_km: f64,
    #[arg(long, default_value_t = 500.0)]
    road_spacing_m: f64,
    #[arg(long, default_value_t = 30)]
    days: u32,
    #[arg(long, default_value_t = 6)]
    hotspots: usize,
    /// Add a river at this many km east of the west edge.
    #[arg(long)]
    river_km: Option<f64>,
    #[arg(long, default_value_t = 60.0)]
    river_width_m: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synth(args) => synth(&args),
        Command::Segment { common, geometry } => {
            let cfg = common.config()?;
            let geometry = parse_geometry(&geometry)?;
            let elements = segment_city(&cfg, &geometry)?;
            log::info!("{} atomic elements", elements.len());
            write_file(&common.out.join("elements.geojson"), &elements_to_geojson(&elements))
        }
        Command::Optimize { common, elements, records, geometry } => {
            let cfg = common.config()?;
            let elements = parse_elements(&read_file(&elements)?)?;
            let records = load_records(&records, cfg.bbox().as_ref())?;
            let obstacles = match geometry {
                Some(path) => parse_geometry(&path)?.obstacles,
                None => Vec::new(),
            };
            let prepared = prepare(&cfg, &elements, &records)?;
            let report = optimize(&cfg, &prepared, &obstacles)?;
            log::info!(
                "{} regions ({} clusters + {} standalone), {} Pareto solutions",
                report.best_acf.len(),
                report.clusters,
                report.standalone.len(),
                report.pareto().len()
            );
            OptimizeArtifacts::render(&report, &elements).write(&common.out)
        }
        Command::Evaluate { common, regions, records, geometry } => {
            let cfg = common.config()?;
            let regions: Vec<_> =
                parse_region_polygons(&read_file(&regions)?)?.into_iter().map(|(_, parts)| parts).collect();
            let records = load_records(&records, cfg.bbox().as_ref())?;
            let bbox = match (cfg.bbox(), geometry) {
                (Some(b), _) => b,
                (None, Some(path)) => parse_geometry(&path)?.bbox(),
                (None, None) => regions.iter().flatten().fold(BBox::empty(), |b, p| b.union(&p.bbox())),
            };
            let split = TimeSplit::of(&records, cfg.interval_minutes)?;
            let ours = evaluate_regions("regions", &regions, &records, &split, cfg.recall_target)?;
            let grid = evaluate_regions("grid", &grid_regions(&bbox, regions.len()), &records, &split, cfg.recall_target)?;
            for s in [&ours.summary, &grid.summary] {
                log::info!(
                    "{}: {} regions, mean ACF {:.4}, specificity {:.4}, {} {:.4}",
                    s.method,
                    s.regions,
                    s.mean_acf_daily,
                    s.mean_specificity,
                    s.label,
                    s.mape
                );
            }
            write_file(&common.out.join("metrics.csv"), &rows_to_csv(&ours.rows))?;
            write_file(&common.out.join("metrics_grid.csv"), &rows_to_csv(&grid.rows))?;
            write_file(&common.out.join("comparison.csv"), &summaries_to_csv(&[ours.summary, grid.summary]))
        }
        Command::Scalability { common, spec, sizes } => {
            let cfg = common.config()?;
            let spec = match spec {
                Some(path) => load_spec(&path)?,
                None => SynthSpec::random(cfg.seed, 10.0, 1000.0, 30, 12),
            };
            let points = run_scalability(&cfg, &spec, &sizes)?;
            write_file(&common.out.join("scalability.csv"), &scale_points_to_csv(&points))
        }
        Command::Export { common, regions } => {
            let lookup = export_lookup(&read_file(&regions)?)?;
            write_file(&common.out.join("regions_lookup.geojson"), &lookup)
        }
    }
}

fn synth(args: &SynthArgs) -> Result<(), PipelineError> {
    let mut spec = match &args.spec {
        Some(path) => load_spec(path)?,
        None => SynthSpec::random(args.seed.unwrap_or(0), args.extent_km, args.road_spacing_m, args.days, args.hotspots),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(x_km) = args.river_km {
        spec.river = Some(River { x_km, width_m: args.river_width_m });
    }
    let geometry = synth_geometry(&spec)?;
    let records = synth_records(&spec)?;
    log::info!("{} roads, {} obstacles, {} records", geometry.roads.len(), geometry.obstacles.len(), records.len());
    write_file(&args.out.join("geometry.geojson"), &geometry_to_geojson(&geometry))?;
    let mut csv = Vec::new();
    write_records(&mut csv, &records)?;
    write_file(&args.out.join("records.csv"), &String::from_utf8(csv).expect("records CSV is UTF-8"))
}

fn load_spec(path: &Path) -> Result<SynthSpec, PipelineError> {
    toml::from_str(&read_file(path)?).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn load_records(path: &Path, bbox: Option<&BBox>) -> Result<Vec<regionkit::ingest::ServiceRecord>, PipelineError> {
    let RecordSet { records, malformed, out_of_bounds } = parse_records(path, bbox)?;
    if malformed + out_of_bounds > 0 {
        log::warn!("skipped {malformed} malformed and {out_of_bounds} out-of-bounds records");
    }
    Ok(records)
}
