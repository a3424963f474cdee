//! `shapecurve`: command-line front end to the shape analysis library.
//!
//! Every verb calls one library operation. The result document (JSON, CSV
//! or SVG) goes to `-o FILE`, or to standard output when no file is given;
//! with `-o`, a short `key value` summary is printed instead. Exit status is
//! 2 for unreadable input or bad options and 3 when a computation fails.
//! Set `RAYON_NUM_THREADS` to limit parallelism.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use shapecurve::geodesics::{
    completeness_probe, integrate_geodesic, karcher_mean, log_map, path_straighten, shape_distance_with,
    GeodesicOptions, KarcherOptions, LogOptions, ProbeScenario, ShapeDistanceOptions, StraightenOptions,
};
use shapecurve::io::{curve_to_json, parse_curve, path_to_json, read_curve, srv_to_json, CurveRecord};
use shapecurve::metrics::{path_functionals, sawtooth_path, MetricSpec, SobolevCoefficients, VelocityMode};
use shapecurve::path::PathOfCurves;
use shapecurve::reparam::{dp_match, joint_match, MatchOptions};
use shapecurve::srv::srvt;
use shapecurve::{validate_regular, DiscreteCurve, ShapeError, TangentField};

#[derive(Parser, Debug)]
#[command(name = "shapecurve", version, about = "Riemannian shape analysis of curves")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Metric, e.g. l2, almost:curv:A=1, almost:scaleinv, elastic:a=1,b=0.5, sobolev:1,0,1
    #[arg(long, global = true, default_value = "sobolev:1,0,1")]
    metric: String,
    /// Samples per curve; input curves are resampled to this size
    #[arg(short = 'n', long = "samples", global = true, default_value_t = 256)]
    n: usize,
    /// Time steps of discrete paths
    #[arg(short = 'T', long = "steps", global = true, default_value_t = 32)]
    steps: usize,
    /// Output file; the format follows its extension unless --format is given
    #[arg(short = 'o', long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Check that a curve file describes a regular curve
    Validate {
        file: PathBuf,
        /// Speed threshold; defaults to 1e-8 times the mean speed
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Square root velocity transform of a curve
    Srvt { file: PathBuf },
    /// Geodesic distance between two curves, or the matrix for several
    Distance {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        /// Shape distance: also minimize over reparametrizations
        #[arg(long)]
        shape: bool,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
    },
    /// Geodesic path between two curves by path straightening
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Optimal reparametrization aligning the second curve with the first
    Match {
        a: PathBuf,
        b: PathBuf,
        /// Reparametrize both curves
        #[arg(long)]
        joint: bool,
        /// Starting offsets tried for closed curves (default: one per sample)
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Karcher mean of a set of curves
    Mean {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Integrate a geodesic from a curve and an initial velocity
    Shoot {
        file: PathBuf,
        /// Initial velocity, in the curve file format
        #[arg(long, conflicts_with = "target", required_unless_present = "target")]
        velocity: Option<PathBuf>,
        /// Shoot towards this curve (initial velocity from the log map)
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Shrinking-circle completeness experiment
    Probe {
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// Sobolev coefficients a0,a1,... for sobolev-longtime
        #[arg(long, default_value = "1,0,1")]
        coeffs: String,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Lengths of sawtooth paths between concentric circles
    VanishDemo {
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        teeth: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 2.0)]
        r1: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scenario {
    L2Collapse,
    SobolevLongtime,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<ShapeError> for Failure {
    fn from(e: ShapeError) -> Self {
        match e {
            ShapeError::InvalidInput(_) | ShapeError::GridMismatch(_) | ShapeError::Unsupported(_) => {
                Failure::Usage(e.to_string())
            }
            ShapeError::Irregular { .. } | ShapeError::NoConvergence { .. } | ShapeError::NonFinite(_) => {
                Failure::Numeric(e.to_string())
            }
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// A result in every format it supports, plus the summary lines.
struct Document {
    json: Value,
    csv: Option<String>,
    svg: Option<String>,
    summary: Vec<(&'static str, String)>,
    default: Format,
    /// Printed instead of the default document when neither `-o` nor
    /// `--format` is given.
    plain: Option<String>,
}

impl Document {
    fn json(json: Value) -> Self {
        Self {
            json,
            csv: None,
            svg: None,
            summary: Vec::new(),
            default: Format::Json,
            plain: None,
        }
    }
}

fn metric(s: &str) -> Outcome<MetricSpec> {
    s.parse().map_err(Failure::from)
}

fn load(path: &Path, n: usize) -> Outcome<DiscreteCurve> {
    Ok(read_curve(path, Some(n))?)
}

fn name_of(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn path_document(path: &PathOfCurves, json: Value) -> Document {
    let stride = (path.curves.len() / 8).max(1);
    let mut shown: Vec<&DiscreteCurve> = path.curves.iter().step_by(stride).collect();
    if !std::ptr::eq(*shown.last().unwrap(), path.last()) {
        shown.push(path.last());
    }
    Document {
        json,
        csv: Some(render::path_csv(path)),
        svg: Some(render::svg(&shown)),
        summary: Vec::new(),
        default: Format::Json,
        plain: None,
    }
}

fn straighten_opts(cli: &Cli, max_iter: usize, tol: f64) -> StraightenOptions {
    StraightenOptions {
        steps: cli.steps,
        max_iter,
        tol,
        ..StraightenOptions::default()
    }
}

fn execute(cli: &Cli) -> Outcome<Document> {
    let n = cli.n;
    match &cli.verb {
        Verb::Validate { file, eps } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            let c = parse_curve(&text)?;
            let report = validate_regular(&c, eps.unwrap_or_else(|| c.default_regularity_eps()));
            let mut doc = Document::json(serde_json::to_value(&report).unwrap());
            doc.summary = vec![("ok", report.ok.to_string()), ("min_speed", render::num(report.min_speed))];
            Ok(doc)
        }
        Verb::Srvt { file } => {
            let c = load(file, n)?;
            let q = srvt(&c)?;
            let mut doc = Document::json(srv_to_json(&q));
            doc.summary = vec![("length", render::num(q.l2_norm().powi(2)))];
            Ok(doc)
        }
        Verb::Distance { files, shape, max_iter } => {
            let spec = metric(&cli.metric)?;
            let curves = files.iter().map(|f| load(f, n)).collect::<Outcome<Vec<_>>>()?;
            let opts = straighten_opts(cli, *max_iter, 1e-6);
            let pairs: Vec<(usize, usize)> =
                (0..curves.len()).flat_map(|i| (i + 1..curves.len()).map(move |j| (i, j))).collect();
            let values = pairs
                .par_iter()
                .map(|&(i, j)| -> Outcome<f64> {
                    if *shape {
                        let sd = ShapeDistanceOptions {
                            straighten: opts.clone(),
                            ..ShapeDistanceOptions::default()
                        };
                        Ok(shape_distance_with(&spec, &curves[i], &curves[j], &sd)?.0)
                    } else {
                        Ok(path_straighten(&spec, &curves[i], &curves[j], &opts)?.length)
                    }
                })
                .collect::<Outcome<Vec<f64>>>()?;
            let k = curves.len();
            let mut d = vec![vec![0.0; k]; k];
            for (&(i, j), v) in pairs.iter().zip(&values) {
                d[i][j] = *v;
                d[j][i] = *v;
            }
            let names: Vec<String> = files.iter().map(|f| name_of(f)).collect();
            let mut doc = Document {
                json: json!({ "metric": spec.to_string(), "curves": names, "distances": d }),
                csv: Some(render::matrix_csv(&names, &d)),
                svg: None,
                summary: Vec::new(),
                default: Format::Json,
                plain: None,
            };
            if k == 2 {
                doc.summary = vec![("distance", render::num(d[0][1]))];
                doc.plain = Some(format!("{}\n", render::num(d[0][1])));
            } else {
                doc.default = Format::Csv;
            }
            Ok(doc)
        }
        Verb::Geodesic { a, b, max_iter, tol } => {
            let spec = metric(&cli.metric)?;
            let (c0, c1) = (load(a, n)?, load(b, n)?);
            let r = path_straighten(&spec, &c0, &c1, &straighten_opts(cli, *max_iter, *tol))?;
            let mut doc = path_document(&r.path, path_to_json(&r.path));
            doc.summary = vec![
                ("length", render::num(r.length)),
                ("energy", render::num(r.energy)),
                ("converged", r.converged.to_string()),
                ("iterations", r.energy_history.len().saturating_sub(1).to_string()),
            ];
            Ok(doc)
        }
        Verb::Match { a, b, joint, seeds } => {
            let (c0, c1) = (load(a, n)?, load(b, n)?);
            let opts = MatchOptions {
                seeds: *seeds,
                ..MatchOptions::default()
            };
            if *joint {
                let r = joint_match(&c0, &c1, &opts)?;
                Ok(Document {
                    json: serde_json::to_value(&r).unwrap(),
                    csv: Some(render::reparam_csv(&[&r.phi0, &r.phi1])),
                    svg: None,
                    summary: vec![("distance", render::num(r.distance))],
                    default: Format::Json,
                    plain: None,
                })
            } else {
                let r = dp_match(&c0, &c1, &opts)?;
                let collapsed = r.collapse_intervals.iter().fold(0.0, |m, c| m + c.mass);
                Ok(Document {
                    json: serde_json::to_value(&r).unwrap(),
                    csv: Some(render::reparam_csv(&[&r.phi])),
                    svg: None,
                    summary: vec![
                        ("distance", render::num(r.distance)),
                        ("collapse_intervals", r.collapse_intervals.len().to_string()),
                        ("collapsed_mass", render::num(collapsed)),
                    ],
                    default: Format::Json,
                    plain: None,
                })
            }
        }
        Verb::Mean { files, max_iter, tol } => {
            let spec = metric(&cli.metric)?;
            let curves = files.iter().map(|f| load(f, n)).collect::<Outcome<Vec<_>>>()?;
            let r = karcher_mean(
                &spec,
                &curves,
                &KarcherOptions {
                    max_iter: *max_iter,
                    tol: *tol,
                    ..KarcherOptions::default()
                },
            )?;
            let mut shown: Vec<&DiscreteCurve> = curves.iter().collect();
            shown.push(&r.mean);
            Ok(Document {
                json: json!({
                    "mean": curve_to_json(&r.mean),
                    "sum_sq_distances": r.history,
                    "converged": r.converged,
                    "iterations": r.iterations,
                }),
                csv: Some(render::curve_csv(&r.mean)),
                svg: Some(render::svg(&shown)),
                summary: vec![
                    ("sum_sq_distance", render::num(*r.history.last().unwrap())),
                    ("converged", r.converged.to_string()),
                    ("iterations", r.iterations.to_string()),
                ],
                default: Format::Json,
                plain: None,
            })
        }
        Verb::Shoot {
            file,
            velocity,
            target,
            dt,
            horizon,
        } => {
            let spec = metric(&cli.metric)?;
            let c0 = load(file, n)?;
            let u0 = match (velocity, target) {
                (Some(v), _) => {
                    let text = std::fs::read_to_string(v)
                        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", v.display())))?;
                    let rec: CurveRecord = serde_json::from_str(&text)
                        .map_err(|e| Failure::Usage(format!("malformed velocity file: {e}")))?;
                    velocity_field(&rec, &c0)?
                }
                (None, Some(t)) => {
                    let c1 = load(t, n)?;
                    log_map(&spec, &c0, &c1, &LogOptions::default())?.velocity
                }
                (None, None) => return Err(Failure::Usage("shoot needs --velocity or --target".into())),
            };
            let run = integrate_geodesic(
                &spec,
                &c0,
                &u0,
                &GeodesicOptions {
                    dt: *dt,
                    horizon: *horizon,
                    adaptive: true,
                },
            )?;
            let json = json!({ "report": run.report, "path": path_to_json(&run.path) });
            let mut doc = path_document(&run.path, json);
            doc.summary = vec![
                ("blew_up", run.report.blew_up.to_string()),
                ("t_stop", render::num(run.report.t_stop)),
                ("min_speed", render::num(run.report.min_speed)),
            ];
            Ok(doc)
        }
        Verb::Probe {
            scenario,
            coeffs,
            horizon,
        } => {
            let values = coeffs
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(format!("bad --coeffs: {e}")))?;
            let coeffs = SobolevCoefficients::new(values)?;
            let scenario = match scenario {
                Scenario::L2Collapse => ProbeScenario::L2Collapse,
                Scenario::SobolevLongtime => ProbeScenario::SobolevLongtime,
            };
            let report = completeness_probe(scenario, &coeffs, *horizon)?;
            let mut doc = Document::json(serde_json::to_value(&report).unwrap());
            doc.summary = vec![
                ("blew_up", report.blew_up.to_string()),
                ("t_stop", render::num(report.t_stop)),
            ];
            Ok(doc)
        }
        Verb::VanishDemo { teeth, r0, r1 } => {
            let spec = metric(&cli.metric)?;
            let rows = teeth
                .par_iter()
                .map(|&k| -> Outcome<(usize, f64, f64)> {
                    let path = sawtooth_path(*r0, *r1, k, cli.steps)?;
                    let normal = path_functionals(&spec, &path, VelocityMode::NormalOnly)?.length;
                    let full = path_functionals(&spec, &path, VelocityMode::Full)?.length;
                    Ok((k, normal, full))
                })
                .collect::<Outcome<Vec<_>>>()?;
            let mut csv = String::from("teeth,normal_length,full_length\n");
            for (k, a, b) in &rows {
                csv.push_str(&format!("{k},{},{}\n", render::num(*a), render::num(*b)));
            }
            let json = Value::Array(
                rows.iter()
                    .map(|(k, a, b)| json!({ "teeth": k, "normal_length": a, "full_length": b }))
                    .collect(),
            );
            Ok(Document {
                json,
                csv: Some(csv),
                svg: None,
                summary: rows.iter().map(|(_, a, _)| ("normal_length", render::num(*a))).collect(),
                default: Format::Csv,
                plain: None,
            })
        }
    }
}

/// A velocity file uses the curve schema and must have one sample per grid
/// point of the (resampled) curve.
fn velocity_field(rec: &CurveRecord, c0: &DiscreteCurve) -> Outcome<TangentField> {
    if rec.topology != c0.topology() {
        return Err(Failure::Usage("velocity topology differs from the curve".into()));
    }
    if rec.points.len() != c0.len() {
        return Err(Failure::Usage(format!(
            "velocity has {} samples, the curve {} (set -n to match)",
            rec.points.len(),
            c0.len()
        )));
    }
    let mut values = Vec::with_capacity(rec.points.len());
    for p in &rec.points {
        if p.len() != c0.dim() {
            return Err(Failure::Usage("velocity dimension differs from the curve".into()));
        }
        let mut v = [0.0; 3];
        v[..p.len()].copy_from_slice(p);
        values.push(v);
    }
    Ok(TangentField::new(values))
}

fn emit(cli: &Cli, doc: Document) -> Outcome<()> {
    if let (None, None, Some(text)) = (&cli.output, cli.format, &doc.plain) {
        return write_stdout(text);
    }
    let format = cli.format.unwrap_or_else(|| {
        match cli.output.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            Some("svg") => Format::Svg,
            Some("json") => Format::Json,
            _ => doc.default,
        }
    });
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&doc.json).unwrap() + "\n",
        Format::Csv => doc
            .csv
            .ok_or_else(|| Failure::Usage("CSV output is not available for this command".into()))?,
        Format::Svg => doc
            .svg
            .ok_or_else(|| Failure::Usage("SVG output is not available for this command".into()))?,
    };
    match &cli.output {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            let summary: String = doc.summary.iter().map(|(k, v)| format!("{k} {v}\n")).collect();
            write_stdout(&summary)
        }
        None => write_stdout(&text),
    }
}

/// Writes to standard output; a closed pipe downstream is not an error.
fn write_stdout(text: &str) -> Outcome<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure::Usage(format!("cannot write to standard output: {e}")))
        }
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli).and_then(|doc| emit(&cli, doc)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
