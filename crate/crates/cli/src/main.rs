//! `speclab`: run a spectral tower on an operator description file and write CSV/JSON artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use speclab::fractal;
use speclab::measure::{self, LebOptions};
use speclab::models;
use speclab::operators::{OperatorFile, Region};
use speclab::spectra::{self, Polynomial, RadiusMode};
use speclab::towers_demo::{array_tower_eval, EventuallyConstantArray, Predicate};
use speclab::{par, Error, OperatorHandle};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "speclab", version, about = "Towers of algorithms for spectral quantities of bounded operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// CSV file for the point set (or bands, vertices) produced by the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV file for the curve produced by the command (x,value,error).
    #[arg(long, global = true)]
    curve: Option<PathBuf>,
    /// JSON summary path; stdout when absent.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    /// Worker threads; SPECLAB_WORKERS takes precedence when set.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run every map on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    NormalFs,
    GTower,
    FTower,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
enum Pred {
    P,
    Q,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
enum Cmd {
    /// Spectrum estimate with error bound E (needs a resolvent control).
    Spectrum {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n: usize,
        /// Snap output points to the 2^-k lattice (duplicates removed).
        #[arg(long)]
        grid_exp: Option<u32>,
    },
    /// ε-pseudospectrum grid points.
    Pseudospectrum {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        grid_exp: Option<u32>,
    },
    /// Spectral radius.
    SpecRadius {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, value_enum, default_value = "normal-fs")]
        mode: Mode,
        /// Index for normal-fs and g-tower.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
    },
    /// ‖P_n p(A) P_n‖ for p given by ascending real coefficients or an enumeration index.
    PolyNorm {
        #[arg(long)]
        op: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        #[arg(long)]
        index: Option<u64>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// Capacity tower; the curve is the running minimum over enumerated polynomials.
    Capacity {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n3: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        n1: usize,
    },
    /// Essential numerical range sample.
    EssNumRange {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        n1: usize,
    },
    /// Spectral pollution indicator on the regions of the operator file or on --interval.
    Pollution {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n3: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        n1: usize,
        /// Open interval a,b.
        #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
        interval: Option<Vec<f64>>,
    },
    /// Lebesgue measure of the spectrum.
    LebSpec {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: u32,
        /// Measure on the real line (self-adjoint operators).
        #[arg(long)]
        real: bool,
    },
    /// Lebesgue measure of the ε-pseudospectrum.
    LebPseudo {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        real: bool,
    },
    /// Indicator of a null spectrum.
    LebZero {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: u32,
        #[arg(long)]
        n3: usize,
    },
    /// x ↦ |Sp(A) ∩ (−∞, x]| on a list of points.
    CumMeasure {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: u32,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        xs: Vec<f64>,
        /// Half-width of the sweep box.
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Mesh-count measure of the finite-section eigenvalues.
    MeshCount {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u32,
    },
    /// Box-counting dimension; the curve holds (k, cover size).
    BoxDim {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n1: u32,
        #[arg(long)]
        n2: u32,
    },
    /// Hausdorff dimension; the curve holds (d, h(d)).
    HausDim {
        #[arg(long)]
        op: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: u32,
        #[arg(long)]
        n3: u32,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Phase-union bands of the periodic Almost Mathieu operator (lo,hi CSV).
    AmBands {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Penrose graph: vertices to --out, edges to --edges.
    PenroseExport {
        #[arg(long)]
        generations: usize,
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Dimension from the δ-neighbourhood measures of a periodic phase-union spectrum.
    SausageFit {
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        q: Option<u64>,
        /// Use the last golden-mean convergent with denominator at most this.
        #[arg(long)]
        golden_max_q: Option<u64>,
        /// Use the Liouville-type rational with this base (see --terms).
        #[arg(long)]
        liouville_base: Option<u64>,
        #[arg(long, default_value_t = 3)]
        terms: u32,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-2)]
        delta_max: f64,
        #[arg(long, default_value_t = 1e-4)]
        delta_min: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
    /// Array decision tower on a random eventually-constant oracle drawn from --seed.
    TowersDemo {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum)]
        predicate: Pred,
        /// n_1, …, n_{k+1}.
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        cut: usize,
    },
}

/// What a command produced, before it is written out.
#[derive(Default)]
struct Report {
    value: Value,
    error: Option<f64>,
    extra: serde_json::Map<String, Value>,
    /// Header and rows for --out.
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    /// (x, value, error) rows for --curve.
    curve: Option<Vec<(f64, f64, f64)>>,
    /// Extra files written by the command itself.
    side: Vec<(PathBuf, Vec<&'static str>, Vec<Vec<String>>)>,
}

fn load_op(path: &Path) -> anyhow::Result<OperatorHandle> {
    let file = OperatorFile::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(file.build(base)?)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn point_rows(points: &[Complex64], grid_exp: Option<u32>) -> Vec<Vec<String>> {
    let mut pts: Vec<Complex64> = match grid_exp {
        Some(k) => {
            let s = 2f64.powi(k as i32);
            points.iter().map(|z| Complex64::new((z.re * s).round() / s, (z.im * s).round() / s)).collect()
        }
        None => points.to_vec(),
    };
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    pts.iter().map(|z| vec![fmt(z.re), fmt(z.im)]).collect()
}

fn positive(name: &str, v: f64) -> anyhow::Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive")).into())
    }
}

fn run(cmd: &Cmd, seed: u64) -> anyhow::Result<Report> {
    let mut r = Report::default();
    match cmd {
        Cmd::Spectrum { op, n, grid_exp } => {
            let a = load_op(op)?;
            let est = spectra::comp_spec(&a, *n)?;
            r.value = json!(est.points.len());
            r.error = Some(est.error);
            r.extra.insert("n_used".into(), json!(est.n));
            r.extra.insert("spacing".into(), json!(est.spacing));
            r.table = Some((vec!["re", "im"], point_rows(&est.points, *grid_exp)));
        }
        Cmd::Pseudospectrum { op, n, eps, grid_exp } => {
            positive("eps", *eps)?;
            let a = load_op(op)?;
            let pts = spectra::pseudo_spec(&a, *n, *eps)?;
            r.value = json!(pts.len());
            r.table = Some((vec!["re", "im"], point_rows(&pts, *grid_exp)));
        }
        Cmd::SpecRadius { op, mode, n, n1, n2 } => {
            let a = load_op(op)?;
            let need = |v: &Option<usize>, name: &str| v.ok_or_else(|| anyhow!(Error::Parse(format!("--{name} is required for this mode"))));
            let m = match mode {
                Mode::NormalFs => RadiusMode::NormalFiniteSection { n: need(n, "n")? },
                Mode::GTower => RadiusMode::GTower { n: need(n, "n")? },
                Mode::FTower => RadiusMode::FTower { n1: need(n1, "n1")?, n2: need(n2, "n2")? },
            };
            r.value = json!(spectra::spec_radius(&a, m)?);
        }
        Cmd::PolyNorm { op, coeffs, index, n, m } => {
            let a = load_op(op)?;
            let p = match (coeffs, index) {
                (Some(c), None) => Polynomial::real(c),
                (None, Some(k)) => spectra::monic_poly_enum(*k)?.to_poly(),
                _ => return Err(Error::Parse("give exactly one of --coeffs and --index".into()).into()),
            };
            r.value = json!(spectra::poly_norm(&a, &p, *n, *m)?);
            r.error = Some(1.0 / *m as f64);
        }
        Cmd::Capacity { op, n3, n2, n1 } => {
            let a = load_op(op)?;
            let c = spectra::capacity(&a, *n3, *n2, *n1)?;
            r.value = json!(c.value);
            r.extra.insert("best_index".into(), json!(c.best_index));
            let e = 1.0 / *n1 as f64;
            r.curve = Some(c.curve.iter().enumerate().map(|(k, &v)| ((k + 1) as f64, v, e)).collect());
        }
        Cmd::EssNumRange { op, n2, n1 } => {
            let a = load_op(op)?;
            let pts = spectra::ess_num_range(&a, *n2, *n1)?;
            r.value = json!(pts.len());
            r.table = Some((vec!["re", "im"], point_rows(&pts, None)));
        }
        Cmd::Pollution { op, n3, n2, n1, interval } => {
            let file = OperatorFile::load(op)?;
            let a = load_op(op)?;
            let regions = match interval {
                Some(v) => vec![Region::Interval { a: v[0], b: v[1] }],
                None => file.region.clone(),
            };
            let rep = spectra::pollution_indicator(&a, &regions, *n3, *n2, *n1)?;
            r.value = json!(rep.indicator);
            r.extra.insert("q".into(), json!(rep.q));
            r.extra.insert("upsilon".into(), json!(rep.upsilon));
            r.extra.insert("lipschitz_bound".into(), json!(rep.lipschitz_bound));
        }
        Cmd::LebSpec { op, n1, n2, real } => {
            let a = load_op(op)?;
            if *real {
                r.value = json!(measure::leb_spec_real(&a, *n1, *n2)?);
            } else {
                let m = measure::leb_spec(&a, *n1, *n2)?;
                r.value = json!(m.value);
                r.error = Some(m.quadrature_error);
                r.extra.insert("resolution".into(), json!(m.resolution));
            }
        }
        Cmd::LebPseudo { op, n, eps, real } => {
            positive("eps", *eps)?;
            let a = load_op(op)?;
            if *real {
                r.value = json!(measure::leb_pseudo_spec_real(&a, *n, *eps)?);
            } else {
                let m = measure::leb_pseudo_spec(&a, *n, *eps)?;
                r.value = json!(m.value);
                r.error = Some(m.quadrature_error);
            }
        }
        Cmd::LebZero { op, n1, n2, n3 } => {
            let a = load_op(op)?;
            r.value = json!(measure::leb_zero_indicator(&a, *n1, *n2, *n3)?);
        }
        Cmd::CumMeasure { op, n1, n2, xs, half_width } => {
            if xs.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Domain("xs must be sorted".into()).into());
            }
            let a = load_op(op)?;
            let opts = LebOptions { half_width: *half_width, ..Default::default() };
            let ys = measure::cumulative_measure_with(&a, xs, *n1, *n2, &opts)?;
            r.value = json!(ys);
            r.curve = Some(xs.iter().zip(&ys).map(|(&x, &y)| (x, y, 0.0)).collect());
        }
        Cmd::MeshCount { op, n, m } => {
            let a = load_op(op)?;
            r.value = json!(measure::finite_section_mesh_count(&a, *n, *m)?);
        }
        Cmd::BoxDim { op, n1, n2 } => {
            let a = load_op(op)?;
            let b = fractal::box_dim(&a, *n1, *n2)?;
            r.value = json!(b.value);
            r.curve = Some(b.counts.iter().map(|&(k, c)| (k as f64, c as f64, 0.0)).collect());
        }
        Cmd::HausDim { op, n1, n2, n3, threshold } => {
            let a = load_op(op)?;
            let h = match threshold {
                Some(t) => fractal::haus_dim_with(&a, *n1, *n2, *n3, *t)?,
                None => fractal::haus_dim(&a, *n1, *n2, *n3)?,
            };
            r.value = json!(h.value);
            r.error = Some(2f64.powi(-(*n3 as i32)));
            r.extra.insert("targets".into(), json!(h.targets));
            r.curve = Some(h.curve.iter().map(|&(d, v)| (d, v, 0.0)).collect());
        }
        Cmd::AmBands { p, q, lambda } => {
            let s = models::am_union_spectrum(*p, *q, *lambda)?;
            r.value = json!(s.measure());
            r.extra.insert("bands".into(), json!(s.bands.len()));
            r.table = Some((vec!["lo", "hi"], s.bands.iter().map(|&(a, b)| vec![fmt(a), fmt(b)]).collect()));
        }
        Cmd::PenroseExport { generations, edges } => {
            let (_, g) = models::penrose_laplacian(*generations)?;
            r.value = json!(g.vertices.len());
            r.extra.insert("edges".into(), json!(g.edges.len()));
            r.extra.insert("bandwidth".into(), json!(g.bandwidth));
            r.extra.insert("max_degree".into(), json!(g.max_degree()));
            let rows = g.vertices.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), fmt(v[0]), fmt(v[1])]).collect();
            r.table = Some((vec!["index", "x", "y"], rows));
            if let Some(path) = edges {
                let rows = g.edges.iter().map(|&(u, v)| vec![(u + 1).to_string(), (v + 1).to_string()]).collect();
                r.side.push((path.clone(), vec!["u", "v"], rows));
            }
        }
        Cmd::SausageFit { p, q, golden_max_q, liouville_base, terms, lambda, delta_max, delta_min, steps } => {
            let (p, q) = match (p, q, golden_max_q, liouville_base) {
                (Some(p), Some(q), None, None) => (*p, *q),
                (None, None, Some(mq), None) => *models::continued_fraction_convergents(&models::golden_cf(64), *mq)?
                    .last()
                    .ok_or_else(|| anyhow!(Error::Domain("no convergent below the bound".into())))?,
                (None, None, None, Some(b)) => models::liouville_rational(*b, *terms)?,
                _ => return Err(Error::Parse("give --p/--q, --golden-max-q or --liouville-base".into()).into()),
            };
            positive("delta_min", *delta_min)?;
            if !(delta_max > delta_min) || *steps < 3 {
                return Err(Error::Domain("need delta_max > delta_min and at least 3 steps".into()).into());
            }
            let s = models::am_union_spectrum(p, q, *lambda)?;
            let (lo, hi) = (delta_min.log10(), delta_max.log10());
            let data: Vec<(f64, f64)> = (0..*steps)
                .map(|k| {
                    let d = 10f64.powf(hi - (hi - lo) * k as f64 / (*steps - 1) as f64);
                    (d, fractal::sausage_measure(&s.bands, d))
                })
                .collect();
            let fit = fractal::sausage_dimension_fit(&data)?;
            r.value = json!(fit.dimension);
            r.error = Some(fit.residual);
            r.extra.insert("p".into(), json!(p));
            r.extra.insert("q".into(), json!(q));
            r.extra.insert("slope".into(), json!(fit.slope));
            r.curve = Some(data.iter().map(|&(d, m)| (d, m, 0.0)).collect());
        }
        Cmd::TowersDemo { k, predicate, indices, cut } => {
            if *k < 2 || *cut == 0 {
                return Err(Error::Domain("need k ≥ 2 and cut ≥ 1".into()).into());
            }
            let a = EventuallyConstantArray::random(*k, *cut, seed);
            let pr = match predicate {
                Pred::P => Predicate::P,
                Pred::Q => Predicate::Q,
            };
            r.value = json!(array_tower_eval(&a, pr, indices)?);
            r.extra.insert("truth".into(), json!(u8::from(a.truth(pr))));
        }
    }
    Ok(r)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn command_name(cmd: &Cmd) -> String {
    serde_json::to_value(cmd)
        .ok()
        .and_then(|v| v.get("name").and_then(|n| n.as_str()).map(str::to_string))
        .unwrap_or_default()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Parse(_)) => 2,
        Some(Error::Precondition(_)) => 3,
        Some(_) => 4,
        None => 2,
    }
}

fn setup_workers(cli: &Cli) -> anyhow::Result<usize> {
    let env = std::env::var("SPECLAB_WORKERS").ok().filter(|s| !s.is_empty());
    let workers = match env {
        Some(s) => Some(s.parse::<usize>().map_err(|_| Error::Parse(format!("SPECLAB_WORKERS={s} is not a count")))?),
        None => cli.workers,
    };
    if workers == Some(0) {
        return Err(Error::Parse("worker count must be positive".into()).into());
    }
    if cli.sequential || workers == Some(1) {
        par::set_sequential(true);
        return Ok(1);
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(w) = workers {
            rayon::ThreadPoolBuilder::new().num_threads(w).build_global().ok();
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        par::set_sequential(true);
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.cmd);
    let params = serde_json::to_value(&cli.cmd).unwrap_or(Value::Null);
    let t = Instant::now();
    let outcome = setup_workers(&cli).and_then(|w| run(&cli.cmd, cli.seed).map(|r| (w, r)));
    let (workers, report) = match outcome {
        Ok(x) => x,
        Err(e) => {
            eprintln!("speclab {name}: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let written = (|| -> anyhow::Result<()> {
        if let Some((header, rows)) = &report.table {
            if let Some(p) = &cli.out {
                write_csv(p, header, rows)?;
            }
        }
        if let (Some(c), Some(p)) = (&report.curve, &cli.curve) {
            let rows: Vec<Vec<String>> = c.iter().map(|&(x, v, e)| vec![fmt(x), fmt(v), fmt(e)]).collect();
            write_csv(p, &["x", "value", "error"], &rows)?;
        }
        for (p, header, rows) in &report.side {
            write_csv(p, header, rows)?;
        }
        let mut summary = json!({
            "schema_version": SCHEMA_VERSION,
            "command": name,
            "params": params,
            "value": report.value,
            "error": report.error,
            "seed": cli.seed,
            "wall_time": t.elapsed().as_secs_f64(),
            "workers": workers,
        });
        summary.as_object_mut().unwrap().extend(report.extra);
        let text = serde_json::to_string_pretty(&summary)? + "\n";
        match &cli.summary {
            Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    })();
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("speclab {name}: {e:#}");
            ExitCode::FAILURE
        }
    }
}
