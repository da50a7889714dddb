use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ptycho_core::bundleio::{
    read_bundle, render_field, write_atomic, write_bundle, write_complex_blob,
    write_trace_csv_with, BundleMeta, CsvOptions, LabelledTrace, RenderKind,
};
use ptycho_core::engine::{
    compare, run, sp_run, AlgoParams, ErrorTrace, Preset, Reconstruction, RunStatus,
};
use ptycho_core::simulate::{
    embed_centered, forward, make_phantom, make_probe, make_scan, ProbeConfig, ProbeObjectPair,
};
use ptycho_core::toygeom::{self, Circle, PlanePoint, SweepOrder};
use ptycho_core::{Complex64, ComplexField, Error, MetricRegion};

#[derive(Parser)]
#[command(
    name = "ptycho",
    version,
    about = "Generalized set-projection ptychography"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a noiseless or Poisson-noisy scan and write a bundle.
    Simulate(SimulateArgs),
    /// Reconstruct probe and object from a bundle with one algorithm.
    Reconstruct(ReconstructArgs),
    /// Run several algorithms from the same start and write one trace CSV.
    Compare(CompareArgs),
    /// Trajectories of projection algorithms on circles in the plane.
    Toy(ToyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProbePreset {
    Big,
    Small,
}

impl ProbePreset {
    fn config(self) -> ProbeConfig {
        match self {
            ProbePreset::Big => ProbeConfig::Big,
            ProbePreset::Small => ProbeConfig::Small,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    Fixed,
    Shuffled,
}

impl From<Order> for SweepOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Fixed => SweepOrder::Fixed,
            Order::Shuffled => SweepOrder::Shuffled,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Output bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// Object frame size in pixels.
    #[arg(long, default_value_t = 160)]
    object_size: usize,
    /// Phantom size, centered in the frame of unit transmission.
    #[arg(long, default_value_t = 128)]
    phantom_size: usize,
    #[arg(long, default_value_t = 0.4)]
    contrast: f64,
    #[arg(long, default_value_t = 1.0)]
    phase_range: f64,
    #[arg(long, default_value_t = 12)]
    cells: usize,
    /// Canonical probe: big (radius 20) or small (radius 10) in a 64-pixel window.
    #[arg(long, value_enum, default_value_t = ProbePreset::Big, conflicts_with = "probe_radius")]
    preset_probe: ProbePreset,
    /// Custom probe radius in pixels.
    #[arg(long)]
    probe_radius: Option<f64>,
    /// Probe window size.
    #[arg(long, default_value_t = 64)]
    probe_size: usize,
    /// Scan positions per side.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 12)]
    step: usize,
    #[arg(long, default_value_t = 2)]
    jitter: usize,
    /// Expected photons per pattern; noiseless when omitted.
    #[arg(long)]
    photons: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Input bundle directory.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    inner_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ptycho_core::projections::DEFAULT_EPS_FRAC)]
    eps_frac: f64,
    #[arg(long, default_value_t = ptycho_core::projections::DEFAULT_REG_FRAC)]
    reg_frac: f64,
    /// Skip the probe/object energy balancing after each concur step.
    #[arg(long)]
    no_renorm: bool,
    /// Start from the bundle's ground truth instead of the default guess.
    #[arg(long)]
    truth_init: bool,
    /// Radius of the hard-edged starting probe; defaults to 3/8 of the window.
    #[arg(long)]
    init_radius: Option<f64>,
    /// Largest translation searched when scoring the object; defaults to a
    /// quarter of the probe window.
    #[arg(long)]
    register_shift: Option<usize>,
    /// Add wall-clock milliseconds to the trace.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    run: RunArgs,
    /// dc, ar, dr, sf, raar, rrr, tlambda (optionally name:param) or sp.
    #[arg(long, default_value = "raar")]
    preset: String,
    /// Preset parameter for raar and rrr.
    #[arg(long, conflicts_with = "lambda")]
    beta: Option<f64>,
    /// Preset parameter for tlambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Sweep order for sp.
    #[arg(long, value_enum, default_value_t = Order::Fixed)]
    sp_order: Order,
    #[arg(long, default_value_t = 1.0)]
    sp_alpha_obj: f64,
    #[arg(long, default_value_t = 1.0)]
    sp_alpha_probe: f64,
    /// Prefix for the output files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated presets, each optionally name:param.
    #[arg(long, default_value = "dc,ar,sf,raar:0.75,rrr:0.5,tlambda:0.75")]
    presets: String,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ToyArgs {
    /// Circle as x,y,r; repeat for more circles.
    #[arg(long = "circle", allow_hyphen_values = true)]
    circles: Vec<String>,
    /// sp or a preset (dc, ar, raar:0.75, ...).
    #[arg(long, default_value = "sp")]
    algo: String,
    /// Relaxation per sp projection: one value for all or one per circle.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    relax: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Order::Fixed)]
    order: Order,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting point as x,y.
    #[arg(long, default_value = "1,7", allow_hyphen_values = true)]
    start: String,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

const DEFAULT_CIRCLES: [(f64, f64, f64); 3] = [(0.0, 0.0, 5.0), (6.0, 0.0, 5.0), (3.0, -1.0, 5.0)];
const CYCLE_WINDOW: usize = 100;
const CYCLE_TOL: f64 = 1e-9;

enum Failure {
    Usage(String),
    Diverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Diverged { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Toy(a) => toy(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diverged(msg)) => {
            eprintln!("ptycho: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("ptycho: {msg}");
            ExitCode::from(2)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let m = a.probe_size;
    let (probe, probe_name) = match a.probe_radius {
        Some(r) => {
            if !(r > 0.0 && r <= m as f64 / 2.0) {
                return Err(usage(format!(
                    "--probe-radius {r} must lie in (0, {}]",
                    m as f64 / 2.0
                )));
            }
            (
                make_probe(m, r, ProbeConfig::EDGE_SMOOTH)?,
                format!("radius:{r}"),
            )
        }
        None => {
            let cfg = a.preset_probe.config();
            if m != ProbeConfig::WINDOW {
                (
                    make_probe(m, cfg.radius(), ProbeConfig::EDGE_SMOOTH)?,
                    cfg.name().to_string(),
                )
            } else {
                (cfg.build(), cfg.name().to_string())
            }
        }
    };
    if a.phantom_size > a.object_size {
        return Err(usage(format!(
            "--phantom-size {} exceeds --object-size {}",
            a.phantom_size, a.object_size
        )));
    }
    let phantom = make_phantom(a.phantom_size, a.contrast, a.phase_range, a.cells, a.seed)?;
    let object = embed_centered(&phantom, a.object_size, Complex64::new(1.0, 0.0))?;
    let geom = make_scan(a.grid, a.grid, a.step, a.jitter, m, a.object_size, a.seed)?;
    let truth = ProbeObjectPair { probe, object };
    let data = forward(&truth, &geom, a.photons, a.seed)?;
    let meta = BundleMeta {
        seed: a.seed,
        probe_config: Some(probe_name),
    };
    write_bundle(&a.out, &data, &geom, Some(&truth), &meta)?;
    let budget = match a.photons {
        Some(p) => format!("{p} photons per pattern"),
        None => "noiseless".to_string(),
    };
    println!(
        "{}: J={} patterns of {m}x{m}, object {n}x{n}, {budget}",
        a.out.display(),
        geom.len(),
        n = a.object_size
    );
    Ok(())
}

enum Method {
    Projection(Preset),
    Sequential,
}

impl Method {
    fn label(&self) -> String {
        match self {
            Method::Projection(p) => p.to_string(),
            Method::Sequential => "sp".into(),
        }
    }
}

fn parse_method(name: &str, beta: Option<f64>, lambda: Option<f64>) -> Result<Method, Failure> {
    let lower = name.trim().to_ascii_lowercase();
    if lower == "sp" {
        if beta.is_some() || lambda.is_some() {
            return Err(usage("sp takes no --beta or --lambda"));
        }
        return Ok(Method::Sequential);
    }
    let preset: Preset = lower
        .parse()
        .map_err(|e: Error| usage(format!("{e}; sp is also accepted")))?;
    let flagged = match (preset, beta, lambda) {
        (p, None, None) => p,
        (Preset::Raar(_), Some(b), None) => Preset::Raar(b),
        (Preset::Rrr(_), Some(b), None) => Preset::Rrr(b),
        (Preset::TLambda(_), None, Some(l)) => Preset::TLambda(l),
        (p, _, _) => {
            let flag = if beta.is_some() { "--beta" } else { "--lambda" };
            return Err(usage(format!(
                "{flag} does not apply to preset {}",
                p.name()
            )));
        }
    };
    Ok(Method::Projection(flagged))
}

struct Prepared {
    data: ptycho_core::DiffractionStack,
    geom: ptycho_core::ScanGeometry,
    truth: Option<ptycho_core::GroundTruth>,
    init: ProbeObjectPair,
    region: MetricRegion,
    params: AlgoParams,
    comments: Vec<String>,
}

fn prepare(r: &RunArgs) -> Result<Prepared, Failure> {
    let bundle = read_bundle(&r.bundle)?;
    let m = bundle.geom.probe_size();
    let n = bundle.geom.object_size();
    let init_radius = r.init_radius.unwrap_or(m as f64 * 3.0 / 8.0);
    let register_shift = r.register_shift.unwrap_or(m / 4);
    let init = if r.truth_init {
        bundle
            .truth
            .clone()
            .ok_or_else(|| usage("--truth-init needs a bundle with ground truth"))?
    } else {
        ProbeObjectPair {
            probe: make_probe(m, init_radius, 0.0)
                .map_err(|e| usage(format!("--init-radius: {e}")))?,
            object: ComplexField::filled(n, n, Complex64::new(1.0, 0.0)),
        }
    };
    let region = MetricRegion::centered_half(n, n).with_max_shift(register_shift);
    let params = AlgoParams {
        iters: r.iters,
        inner_iters: r.inner_iters,
        eps_frac: r.eps_frac,
        reg_frac: r.reg_frac,
        renorm: !r.no_renorm,
        seed: r.seed,
        record_timing: r.timing,
        ..AlgoParams::default()
    };
    let comments = vec![
        format!("bundle={}", r.bundle.display()),
        format!("iters={}", r.iters),
        format!("inner_iters={}", r.inner_iters),
        format!("seed={}", r.seed),
        format!("eps_frac={:e}", r.eps_frac),
        format!("reg_frac={:e}", r.reg_frac),
        format!("renorm={}", !r.no_renorm),
        if r.truth_init {
            "init=truth".to_string()
        } else {
            format!("init=unit_object,aperture_probe:{init_radius}")
        },
        format!(
            "region={},{},{},{}",
            region.top, region.left, region.height, region.width
        ),
        format!("register_shift={register_shift}"),
    ];
    Ok(Prepared {
        data: bundle.data,
        geom: bundle.geom,
        truth: bundle.truth,
        init,
        region,
        params,
        comments,
    })
}

fn reconstruct(a: ReconstructArgs) -> Result<(), Failure> {
    let method = parse_method(&a.preset, a.beta, a.lambda)?;
    let mut p = prepare(&a.run)?;
    let mut comments = Vec::new();
    match &method {
        Method::Projection(preset) => {
            p.params.preset = *preset;
            comments.push(format!("preset={preset}"));
            match preset {
                Preset::Raar(b) | Preset::Rrr(b) => comments.push(format!("beta={b}")),
                Preset::TLambda(l) => comments.push(format!("lambda={l}")),
                _ => {}
            }
            let r = preset.relaxations();
            comments.push(format!("relaxations={},{},{}", r.a, r.b, r.c));
        }
        Method::Sequential => {
            p.params.sp_order = a.sp_order.into();
            p.params.sp_alpha_obj = a.sp_alpha_obj;
            p.params.sp_alpha_probe = a.sp_alpha_probe;
            comments.push("preset=sp".into());
            comments.push(format!("sp_order={:?}", a.sp_order).to_ascii_lowercase());
            comments.push(format!("sp_alpha_obj={}", a.sp_alpha_obj));
            comments.push(format!("sp_alpha_probe={}", a.sp_alpha_probe));
        }
    }
    p.params.validate().map_err(|e| usage(e.to_string()))?;
    comments.extend(p.comments.iter().cloned());

    let truth = p.truth.as_ref();
    let outcome = match method {
        Method::Projection(_) => run(&p.data, &p.geom, &p.init, &p.params, truth, &p.region),
        Method::Sequential => sp_run(&p.data, &p.geom, &p.init, &p.params, truth, &p.region),
    };
    let (rec, status) = match outcome {
        Ok(rec) => (Some(rec), RunStatus::Completed),
        Err(Error::Diverged { iteration, trace }) => {
            write_trace(
                &a.out,
                &method,
                *trace,
                RunStatus::Diverged { iteration },
                &comments,
            )?;
            return Err(Failure::Diverged(format!(
                "{} diverged at iteration {iteration}",
                method.label()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let Reconstruction { pair, trace } = rec.expect("completed run");
    let summary = summarize(&method.label(), &trace);
    write_trace(&a.out, &method, trace, status, &comments)?;
    write_field(&pair.object, &a.out, "object")?;
    write_field(&pair.probe, &a.out, "probe")?;
    println!("{summary}");
    Ok(())
}

fn summarize(label: &str, trace: &ErrorTrace) -> String {
    let mut s = format!("{label}: {} iterations", trace.len());
    if let Some(last) = trace.last() {
        let _ = write!(s, ", data_error {:.6e}", last.data_error);
        if let Some(e) = last.object_nrmse {
            let _ = write!(s, ", object_nrmse {e:.6e}");
        }
    }
    s
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn write_trace(
    prefix: &Path,
    method: &Method,
    trace: ErrorTrace,
    status: RunStatus,
    comments: &[String],
) -> Result<(), Failure> {
    let labelled = LabelledTrace {
        label: method.label(),
        trace,
        status,
    };
    let opts = CsvOptions {
        comments: comments.to_vec(),
        status_column: false,
    };
    write_trace_csv_with(&[labelled], &with_suffix(prefix, "_trace.csv"), &opts)?;
    Ok(())
}

fn write_field(f: &ComplexField, prefix: &Path, name: &str) -> Result<(), Failure> {
    write_complex_blob(f, &with_suffix(prefix, &format!("_{name}.c32")))?;
    render_field(
        f,
        RenderKind::Modulus,
        &with_suffix(prefix, &format!("_{name}_modulus.pgm")),
    )?;
    render_field(
        f,
        RenderKind::Phase,
        &with_suffix(prefix, &format!("_{name}_phase.pgm")),
    )?;
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<(), Failure> {
    let presets = a
        .presets
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Preset>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(e.to_string()))?;
    if presets.is_empty() {
        return Err(usage("--presets lists no presets"));
    }
    let p = prepare(&a.run)?;
    for &preset in &presets {
        AlgoParams {
            preset,
            ..p.params.clone()
        }
        .validate()
        .map_err(|e| usage(e.to_string()))?;
    }
    let entries = compare(
        &p.data,
        &p.geom,
        &p.init,
        &presets,
        &p.params,
        p.truth.as_ref(),
        &p.region,
    )?;
    let mut comments = vec![format!(
        "presets={}",
        presets
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )];
    comments.extend(p.comments.iter().cloned());
    let traces: Vec<LabelledTrace> = entries.iter().map(LabelledTrace::from).collect();
    let opts = CsvOptions {
        comments,
        status_column: true,
    };
    write_trace_csv_with(&traces, &a.out, &opts)?;
    let mut diverged = Vec::new();
    for e in &entries {
        println!("{}", summarize(&e.preset.to_string(), &e.trace));
        if let RunStatus::Diverged { iteration } = e.status {
            diverged.push(format!("{} at iteration {iteration}", e.preset));
        }
    }
    if diverged.is_empty() {
        Ok(())
    } else {
        Err(Failure::Diverged(format!(
            "diverged: {}",
            diverged.join(", ")
        )))
    }
}

fn parse_reals(spec: &str, count: usize, flag: &str) -> Result<Vec<f64>, Failure> {
    let values = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| {
            usage(format!(
                "{flag} {spec:?}: expected {count} comma-separated numbers"
            ))
        })?;
    if values.len() != count || values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!(
            "{flag} {spec:?}: expected {count} comma-separated numbers"
        )));
    }
    Ok(values)
}

fn toy(a: ToyArgs) -> Result<(), Failure> {
    let circles = if a.circles.is_empty() {
        DEFAULT_CIRCLES
            .iter()
            .map(|&(x, y, r)| Circle::new(PlanePoint::new(x, y), r))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        a.circles
            .iter()
            .map(|s| {
                let v = parse_reals(s, 3, "--circle")?;
                Circle::new(PlanePoint::new(v[0], v[1]), v[2])
                    .map_err(|e| usage(format!("--circle {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let s = parse_reals(&a.start, 2, "--start")?;
    let start = PlanePoint::new(s[0], s[1]);
    if a.iters == 0 {
        return Err(usage("--iters must be at least 1"));
    }

    let mut out = String::new();
    let circle_list: Vec<String> = circles
        .iter()
        .map(|c| format!("{}:{}:{}", c.center().x, c.center().y, c.radius()))
        .collect();
    let _ = writeln!(out, "# circles={}", circle_list.join(" "));
    let _ = writeln!(out, "# start={},{}", start.x, start.y);
    let _ = writeln!(out, "# iters={}", a.iters);
    let _ = writeln!(out, "# seed={}", a.seed);

    let (cycle, settle_step) = if a.algo.trim().eq_ignore_ascii_case("sp") {
        let relax = match a.relax.len() {
            1 => vec![a.relax[0]; circles.len()],
            k if k == circles.len() => a.relax.clone(),
            k => {
                return Err(usage(format!(
                    "--relax has {k} values for {} circles",
                    circles.len()
                )))
            }
        };
        let order: SweepOrder = a.order.into();
        let _ = writeln!(out, "# algo=sp");
        let _ = writeln!(
            out,
            "# order={}",
            format!("{:?}", a.order).to_ascii_lowercase()
        );
        let _ = writeln!(
            out,
            "# relax={}",
            relax
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        out.push_str("sweep,component,x,y\n");
        let sweeps = toygeom::sp_iterate(start, &circles, order, &relax, a.iters, a.seed)?;
        for (k, p) in sweeps.iter().enumerate() {
            let _ = writeln!(out, "{},point,{:.16e},{:.16e}", k + 1, p.x, p.y);
        }
        // within-sweep points expose oscillation that per-sweep snapshots can hide
        let every = toygeom::sp_trajectory(start, &circles, order, &relax, a.iters, a.seed, true)?;
        let window = (CYCLE_WINDOW * circles.len()).min(every.len() / 2);
        (
            toygeom::detect_limit_cycle(&every, window, 4 * circles.len(), CYCLE_TOL),
            last_step(&sweeps),
        )
    } else {
        let preset: Preset = a
            .algo
            .parse()
            .map_err(|e: Error| usage(format!("--algo: {e}; sp is also accepted")))?;
        let _ = writeln!(out, "# algo={preset}");
        let r = preset.relaxations();
        let _ = writeln!(out, "# relaxations={},{},{}", r.a, r.b, r.c);
        out.push_str("sweep,component,x,y\n");
        let iterates = toygeom::product_iterate(start, &circles, r, a.iters)?;
        let mut means = Vec::with_capacity(iterates.len());
        for (k, x) in iterates.iter().enumerate() {
            for (c, p) in x.components.iter().enumerate() {
                let _ = writeln!(out, "{},{c},{:.16e},{:.16e}", k + 1, p.x, p.y);
            }
            let m = x.mean();
            let _ = writeln!(out, "{},mean,{:.16e},{:.16e}", k + 1, m.x, m.y);
            means.push(m);
        }
        let window = CYCLE_WINDOW.min(means.len() / 2);
        (
            toygeom::detect_limit_cycle(&means, window, 8, CYCLE_TOL),
            last_step(&means),
        )
    };
    match cycle {
        Some(c) => {
            let _ = writeln!(
                out,
                "# cycle=true period={} min_step={:e}",
                c.period, c.min_step
            );
        }
        None => {
            let _ = writeln!(out, "# cycle=false");
        }
    }
    let _ = writeln!(out, "# final_step={settle_step:e}");
    write_atomic(&a.out, out.as_bytes())?;
    println!(
        "{}: {} sweeps, cycle {}",
        a.out.display(),
        a.iters,
        if cycle.is_some() {
            "detected"
        } else {
            "not detected"
        }
    );
    Ok(())
}

fn last_step(points: &[PlanePoint]) -> f64 {
    match points {
        [.., a, b] => a.distance(*b),
        _ => 0.0,
    }
}
