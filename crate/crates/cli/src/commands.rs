use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use refinelab::analysis::{self, AnalysisError, DivergenceVerdict};
use refinelab::generators::{ExampleConfig, Family, GenError};
use refinelab::pslg::{self, Pslg};
use refinelab::refine::{self, EventKind, QueuePolicy, RefineError, RefinementConfig, RunStatus};
use refinelab::Algorithm;

use crate::output;
use crate::{EngineArgs, FamilyArg, GenerateArgs, RefineArgs, ScanArgs, SolveArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Engine(_) => 3,
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        match e {
            GenError::Solver(s) => CliError::Engine(s.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<RefineError> for CliError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::Engine(_) => CliError::Engine(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Bracket(_) | AnalysisError::Generator(_) | AnalysisError::Domain(_) => {
                CliError::Input(e.to_string())
            }
            AnalysisError::Refine(r) => r.into(),
            _ => CliError::Engine(e.to_string()),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_poly(path: &Path) -> Result<Pslg, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    pslg::parse_poly(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn example_config(a: &GenerateArgs) -> ExampleConfig {
    let base = match a.family {
        FamilyArg::Pav => ExampleConfig::pav(a.delta),
        FamilyArg::Pinwheel => ExampleConfig::pinwheel(a.n),
        FamilyArg::Example2 => ExampleConfig::example2(a.theta, a.a, a.delta),
        FamilyArg::Example2Opt => ExampleConfig::example2_optimized(a.delta),
    };
    base.with_scale(a.scale)
}

pub fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let cfg = example_config(&a);
    let p = cfg.generate()?;
    write(&a.output, &pslg::write_poly(&p))?;
    let angle = |p: &Pslg| p.min_input_angle_deg().map_err(|e| CliError::Input(e.to_string()));
    let (fan, whole) = (angle(&cfg.fan()?)?, angle(&p)?);
    println!("wrote {} ({} vertices, {} segments)", a.output.display(), p.vertices.len(), p.segments.len());
    println!("min input angle: {fan:.4} deg (configuration), {whole:.4} deg (with enclosure)");
    let skinny: Vec<String> = cfg.predicted_skinny_deg()?.iter().map(|x| format!("{x:.4}")).collect();
    println!("predicted skinny angle: {} deg", skinny.join(", "));
    if cfg.family == Family::Example2Opt {
        let s = refinelab::generators::example2_optimum()?;
        println!("theta = {:.4} deg, a = {:.6}", s.theta_deg, s.a);
    }
    Ok(())
}

fn engine_config(alpha: f64, e: &EngineArgs) -> RefinementConfig {
    RefinementConfig {
        alpha_deg: alpha,
        max_insertions: e.max_insertions,
        min_length_ratio: e.min_length_ratio,
        closed_diametral: e.closed,
        queue_policy: if e.fifo { QueuePolicy::Fifo } else { QueuePolicy::WorstFirst },
    }
}

#[derive(Debug, Serialize)]
struct RunReport {
    input: String,
    algorithm: Algorithm,
    config: RefinementConfig,
    status: RunStatus,
    insertions: usize,
    event_counts: BTreeMap<EventKind, usize>,
    triangles: usize,
    final_min_angle_deg: f64,
    shortest_subsegment_ratio: f64,
    verdict: DivergenceVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

pub fn refine(a: RefineArgs) -> Result<(), CliError> {
    let p = read_poly(&a.input)?;
    let cfg = engine_config(a.alpha, &a.engine);
    let alg: Algorithm = a.engine.alg.into();
    let start = Instant::now();
    let out = refine::refine(&p, &cfg, alg)?;
    let wall = start.elapsed().as_secs_f64();
    let verdict = analysis::classify(&out.trace, out.status);

    let mut event_counts = BTreeMap::new();
    for kind in [
        EventKind::SegmentSplit,
        EventKind::CircumcenterInsert,
        EventKind::CircumcenterRejectedForEncroachment,
        EventKind::VertexDeleted,
    ] {
        event_counts.insert(kind, out.trace.count(kind));
    }
    let report = RunReport {
        input: a.input.display().to_string(),
        algorithm: alg,
        config: cfg,
        status: out.status,
        insertions: out.insertions,
        event_counts,
        triangles: out.mesh.num_triangles(),
        final_min_angle_deg: out.final_min_angle_deg(),
        shortest_subsegment_ratio: out.shortest_subsegment() / out.initial_shortest,
        verdict,
        wall_time_s: (!a.no_timestamp).then_some(wall),
    };

    let prefix = a.out.clone().unwrap_or_else(|| a.input.with_extension(""));
    let with = |ext: &str| -> PathBuf {
        let mut s = prefix.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    write(&with(".report.json"), &to_json(&report))?;
    write(&with(".trace.jsonl"), &out.trace.to_jsonl())?;
    write(&with(".node"), &output::write_node(&out.mesh))?;
    write(&with(".ele"), &output::write_ele(&out.mesh))?;
    write(&with(".svg"), &output::write_svg(&out.mesh, cfg.alpha_deg))?;

    let status = serde_json::to_value(out.status).expect("status serializes");
    println!("status: {}", status.as_str().unwrap_or_default());
    println!(
        "insertions: {}, triangles: {}, min angle: {:.4} deg",
        out.insertions,
        out.mesh.num_triangles(),
        report.final_min_angle_deg
    );
    Ok(())
}

fn scan_target(name: &str, delta: f64) -> Result<Pslg, CliError> {
    let cfg = match name {
        "pav" => ExampleConfig::pav(delta),
        "pinwheel3" => ExampleConfig::pinwheel(3),
        "pinwheel4" => ExampleConfig::pinwheel(4),
        "pinwheel5" => ExampleConfig::pinwheel(5),
        "example2" => ExampleConfig::example2(75.0, 1.0, delta),
        "example2-opt" => ExampleConfig::example2_optimized(delta),
        path => return read_poly(Path::new(path)),
    };
    Ok(cfg.generate()?)
}

pub fn scan(a: ScanArgs) -> Result<(), CliError> {
    let p = scan_target(&a.target, a.delta)?;
    let base = engine_config(RefinementConfig::default().alpha_deg, &a.engine);
    let report = analysis::threshold_scan_pslg(&p, a.engine.alg.into(), a.lo, a.hi, a.tol, &base)?;
    let json = to_json(&report);
    if let Some(path) = &a.output {
        write(path, &json)?;
    }
    print!("{json}");
    eprintln!("threshold: {:.3} deg (bracket {:.3} .. {:.3})", report.threshold_deg, report.lo_deg, report.hi_deg);
    Ok(())
}

pub fn solve(a: SolveArgs) -> Result<(), CliError> {
    let guess = match a.guess.as_deref() {
        Some([t, x, a1, a2]) => [*t, *x, *a1, *a2],
        Some(_) => return Err(CliError::Input("--guess takes four values".into())),
        None => analysis::DEFAULT_GUESS,
    };
    let s = analysis::solve_optimum(guess).map_err(|e| match e {
        AnalysisError::Domain(_) => CliError::Input(e.to_string()),
        other => CliError::Engine(other.to_string()),
    })?;
    let json = to_json(&s);
    if let Some(path) = &a.output {
        write(path, &json)?;
    }
    print!("{json}");
    Ok(())
}
