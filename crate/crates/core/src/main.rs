use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmindex::analysis::{
    bin_histogram, cert_value_distribution, concentration_anchor, concentration_exact, distance_exponent, growth_csv,
    histogram_csv, neighbourhood_growth, qm_metric_ratio, ratio_csv, ball_growth, CertAnchor, EmpiricalMMSpace,
};
use qmindex::fragment::{FragmentIndex, Partition};
use qmindex::ingest::{extract_fragments, load_index, read_fasta, save_index, IngestError};
use qmindex::matrix::{Alphabet, MetricMode, ScoringMatrix, SymbolQuasiMetric};
use qmindex::reduce::{fragment_reduction, BinEnumeration, MetricBallWorkload, MetricReplacement};
use qmindex::sampling::SymbolDistribution;
use qmindex::scheme::{LinearScan, RangeQuery};

#[derive(Parser)]
#[command(name = "qmindex", version, about = "Quasi-metric fragment index: build, query, benchmark, diagnose")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract fragments from a FASTA file and write an index archive.
    Build(BuildArgs),
    /// Range or k-nearest-neighbour query against an archive.
    Query(QueryArgs),
    /// Fraction of the dataset scanned by k-NN queries from random probes.
    Bench(BenchArgs),
    /// Geometry diagnostics as CSV.
    Stats {
        #[command(subcommand)]
        which: StatsCommand,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    fasta: PathBuf,
    /// Scoring matrix file, or `blosum62` for the built-in matrix.
    #[arg(long, default_value = "blosum62")]
    matrix: String,
    /// Partition file (one group per line), or `default`.
    #[arg(long, default_value = "default")]
    partition: String,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["radius", "k"]))]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    seq: String,
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value_t = 1000)]
    probes: usize,
    #[arg(long)]
    seed: u64,
    /// `symbol probability` lines; uniform when absent.
    #[arg(long)]
    freq: Option<PathBuf>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    probe: ProbeArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    k_list: Vec<usize>,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Bin occupancy histogram.
    Bins {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mean fraction of the dataset inside balls of growing radius.
    Balls {
        #[command(flatten)]
        probe: ProbeArgs,
        /// `start:stop:step` or a comma list.
        #[arg(long, default_value = "0:120:5")]
        radii: String,
        /// Use dataset points as centers instead of random strings.
        #[arg(long)]
        from_data: bool,
    },
    /// Metric versus quasi-metric ball sizes around k nearest neighbours.
    Ratio {
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        k: Vec<usize>,
        #[arg(long, default_value = "max")]
        mode: MetricMode,
    },
    /// Concentration function of a sample under the associated metric.
    Concentration {
        #[command(flatten)]
        probe: ProbeArgs,
        /// Enumerate all subsets (sample of at most 20 points).
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value = "0:60:2")]
        eps: String,
        #[arg(long, default_value = "max")]
        mode: MetricMode,
    },
    /// Access overhead of the bin reduction and of metric replacement.
    Overhead {
        #[command(flatten)]
        probe: ProbeArgs,
        /// Probe radius is the distance to the k-th nearest neighbour.
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value = "max")]
        mode: MetricMode,
    },
    /// Distribution of distances from random strings to a fragment or to its bin.
    Certdist {
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long)]
        anchor: String,
        /// Measure distance to the anchor's bin instead of the anchor itself.
        #[arg(long)]
        bin: bool,
    },
    /// Fraction of random strings within distance r of the dataset.
    Neighbourhoods {
        #[command(flatten)]
        probe: ProbeArgs,
        #[arg(long, default_value = "0:60:2")]
        radii: String,
        #[arg(long, default_value = "max")]
        mode: MetricMode,
    },
}

/// Errors in the data rather than the invocation.
struct DataError(anyhow::Error);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), DataError> {
    let r = match cli.command {
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Bench(a) => bench(a),
        Command::Stats { which } => stats(which),
    };
    r.map_err(DataError)
}

fn load_matrix(spec: &str) -> Result<SymbolQuasiMetric> {
    let matrix = if spec == "blosum62" {
        ScoringMatrix::blosum62()
    } else {
        let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        let m = ScoringMatrix::parse(&text)?;
        let standard = Alphabet::amino_acids();
        if standard.symbols().iter().all(|&s| m.alphabet().contains(s)) {
            m.restrict(&standard)?
        } else {
            m
        }
    };
    Ok(SymbolQuasiMetric::from_scores(&matrix)?)
}

fn load_partition(spec: &str, alphabet: &Alphabet) -> Result<Partition> {
    Ok(if spec == "default" {
        Partition::amino_default(alphabet)?
    } else {
        Partition::parse(alphabet, &fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?)?
    })
}

fn build(a: BuildArgs) -> Result<()> {
    let qm = load_matrix(&a.matrix)?;
    let partition = load_partition(&a.partition, qm.alphabet())?;
    let records = match read_fasta(&a.fasta) {
        Err(IngestError::NoRecords) => bail!("no fragments: {} holds no FASTA records", a.fasta.display()),
        r => r?,
    };
    let counts = extract_fragments(&records, a.m, qm.alphabet());
    if counts.unique() == 0 {
        bail!("no fragments of length {} in {}", a.m, a.fasta.display());
    }
    let (unique, total) = (counts.unique(), counts.total);
    let index = FragmentIndex::build(qm, partition, a.m, counts.fragments)?;
    save_index(&index, &a.out)?;
    let nonempty = index.directory().len() as u64;
    println!("records          {}", records.len());
    println!("unique fragments {unique}");
    println!("total fragments  {total}");
    println!("bins total       {}", index.code_space());
    println!("bins non-empty   {nonempty}");
    println!("bins empty       {}", index.code_space() - nonempty);
    println!("archive          {}", a.out.display());
    Ok(())
}

fn query(a: QueryArgs) -> Result<()> {
    let index = load_index(&a.index)?;
    let omega = index.encode(a.seq.as_bytes())?;
    let result = match (a.radius, a.k) {
        (Some(r), None) => index.range_search_encoded(&omega, r)?,
        (None, Some(k)) => {
            if k > index.len() {
                eprintln!("warning: k = {k} exceeds the {} indexed fragments; returning all", index.len());
            }
            index.knn_encoded(&omega, k)?
        }
        _ => unreachable!("clap enforces exactly one mode"),
    };
    for m in &result.matches {
        println!("{} {}", index.fragment_string(m.index), m.distance);
    }
    let s = result.stats;
    println!(
        "# matches {} | bins opened {} | points scanned {} of {} ({:.4}%)",
        result.matches.len(),
        s.leaves_opened,
        s.points_scanned,
        index.len(),
        100.0 * s.points_scanned as f64 / index.len() as f64
    );
    Ok(())
}

fn distribution(p: &ProbeArgs, alphabet: &Alphabet) -> Result<SymbolDistribution> {
    Ok(match &p.freq {
        Some(path) => SymbolDistribution::parse(alphabet, &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => SymbolDistribution::uniform(alphabet),
    })
}

fn emit(csv: Option<&Path>, text: &str) -> Result<()> {
    match csv {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid: Vec<f64> = if parts.len() == 3 {
        let [start, stop, step] = [parts[0], parts[1], parts[2]].map(|s| s.trim().parse::<f64>());
        let (start, stop, step) = (start?, stop?, step?);
        if step <= 0.0 {
            bail!("grid step must be positive");
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        bail!("empty grid {spec:?}");
    }
    Ok(grid)
}

fn bench(a: BenchArgs) -> Result<()> {
    let p = &a.probe;
    let index = load_index(&p.index)?;
    let dist = distribution(p, index.alphabet())?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let probes = dist.sample_strings(&mut rng, index.m(), p.probes);
    if probes.is_empty() {
        bail!("no probes requested");
    }
    let n = index.len() as f64;
    let mut csv = String::from("k,mean_fraction_scanned,max_fraction_scanned,mean_bins_opened,max_bins_opened\n");
    let mut fit = Vec::new();
    for &k in &a.k_list {
        let (mut sum_f, mut max_f, mut sum_b, mut max_b) = (0.0f64, 0.0f64, 0u64, 0u64);
        for w in &probes {
            let s = index.knn_encoded(w, k)?.stats;
            let f = s.points_scanned as f64 / n;
            sum_f += f;
            max_f = max_f.max(f);
            sum_b += s.leaves_opened;
            max_b = max_b.max(s.leaves_opened);
        }
        let count = probes.len() as f64;
        let mean_f = sum_f / count;
        csv.push_str(&format!("{k},{mean_f},{max_f},{},{max_b}\n", sum_b as f64 / count));
        fit.push((k as f64, mean_f));
    }
    emit(p.csv.as_deref(), &csv)?;
    match distance_exponent(&fit, f64::MIN_POSITIVE, f64::INFINITY) {
        Ok(slope) => eprintln!("log-log slope of mean fraction scanned vs k: {slope:.3} (reference value about 0.5)"),
        Err(_) => eprintln!("log-log slope: needs at least two distinct k"),
    }
    Ok(())
}

fn stats(which: StatsCommand) -> Result<()> {
    match which {
        StatsCommand::Bins { index, csv } => {
            let index = load_index(&index)?;
            emit(csv.as_deref(), &bin_histogram(&index).to_csv())
        }
        StatsCommand::Balls { probe, radii, from_data } => {
            let index = load_index(&probe.index)?;
            let radii = parse_grid(&radii)?;
            let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
            let centers: Vec<Vec<u8>> = if from_data {
                sample(&mut rng, index.len(), probe.probes.min(index.len())).iter().map(|i| index.fragment(i).to_vec()).collect()
            } else {
                distribution(&probe, index.alphabet())?.sample_strings(&mut rng, index.m(), probe.probes)
            };
            let points: Vec<Vec<u8>> = (0..index.len()).map(|i| index.fragment(i).to_vec()).collect();
            let rows = ball_growth(&points, index.quasi_metric(), &centers, &radii)?;
            emit(probe.csv.as_deref(), &growth_csv(&rows))?;
            let fit: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.fraction)).collect();
            if let Ok(slope) = distance_exponent(&fit, f64::MIN_POSITIVE, f64::INFINITY) {
                eprintln!("distance exponent over the grid: {slope:.3}");
            }
            Ok(())
        }
        StatsCommand::Ratio { probe, k, mode } => {
            let index = load_index(&probe.index)?;
            let metric = index.quasi_metric().associated_metric(mode);
            let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
            let probes = distribution(&probe, index.alphabet())?.sample_strings(&mut rng, index.m(), probe.probes);
            let points: Vec<Vec<u8>> = (0..index.len()).map(|i| index.fragment(i).to_vec()).collect();
            let rows = qm_metric_ratio(&points, index.quasi_metric(), &metric, &k, &probes)?;
            emit(probe.csv.as_deref(), &ratio_csv(&rows))
        }
        StatsCommand::Concentration { probe, exact, eps, mode } => {
            let index = load_index(&probe.index)?;
            let grid = parse_grid(&eps)?;
            let metric = index.quasi_metric().associated_metric(mode);
            let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
            let size = probe.probes.min(index.len());
            let points: Vec<Vec<u8>> = sample(&mut rng, index.len(), size).iter().map(|i| index.fragment(i).to_vec()).collect();
            let space = EmpiricalMMSpace::from_points(&points, &metric, None)?;
            let est = if exact {
                concentration_exact(&space, &grid)?
            } else {
                concentration_anchor(&space, &grid, &(0..space.len()).collect::<Vec<_>>())?
            };
            emit(probe.csv.as_deref(), &est.to_csv())
        }
        StatsCommand::Overhead { probe, k, mode } => {
            let index = Arc::new(load_index(&probe.index)?);
            let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
            let probes = distribution(&probe, index.alphabet())?.sample_strings(&mut rng, index.m(), probe.probes);
            let bins = fragment_reduction(&index);
            let access = BinEnumeration(Arc::clone(&index));
            let replacement = MetricReplacement::new(index.quasi_metric(), mode);
            let metric_w = MetricBallWorkload {
                points: (0..index.len()).map(|i| index.fragment(i).to_vec()).collect(),
                metric: replacement.metric.clone(),
            };
            let metric_red = replacement.reduction(index.len());
            let mut csv = String::from("probe,radius,answers,bin_candidates,bin_beta,metric_candidates,metric_beta\n");
            for (i, w) in probes.iter().enumerate() {
                let knn = index.knn_encoded(w, k)?;
                let radius = knn.matches.last().map_or(0.0, |m| m.distance);
                let q = RangeQuery::new(w.clone(), radius)?;
                let b = bins.access_overhead(&*index, &access, &q)?;
                let m = metric_red.access_overhead(&*index, &LinearScan(&metric_w), &q)?;
                csv.push_str(&format!(
                    "{i},{radius},{},{},{},{},{}\n",
                    b.answers,
                    b.candidates,
                    b.ratio(),
                    m.candidates,
                    m.ratio()
                ));
            }
            eprintln!("metric replacement radius scale: {}/{}", replacement.num, replacement.den);
            emit(probe.csv.as_deref(), &csv)
        }
        StatsCommand::Certdist { probe, anchor, bin } => {
            let index = load_index(&probe.index)?;
            let x = index.encode(anchor.as_bytes())?;
            let anchor = if bin { CertAnchor::Bin(index.partition().bin_code(&x)) } else { CertAnchor::Point(x) };
            let dist = distribution(&probe, index.alphabet())?;
            let h = cert_value_distribution(&index, &anchor, &dist, probe.probes, probe.seed);
            emit(probe.csv.as_deref(), &histogram_csv(&h))
        }
        StatsCommand::Neighbourhoods { probe, radii, mode } => {
            let index = load_index(&probe.index)?;
            let radii = parse_grid(&radii)?;
            let metric = index.quasi_metric().associated_metric(mode);
            let dist = distribution(&probe, index.alphabet())?;
            let rows = neighbourhood_growth(&index, &metric, &dist, probe.probes, &radii, probe.seed);
            let mut csv = String::from("radius,fraction_quasi_metric,fraction_metric\n");
            for r in rows {
                csv.push_str(&format!("{},{},{}\n", r.radius, r.quasi_metric, r.metric));
            }
            emit(probe.csv.as_deref(), &csv)
        }
    }
}
