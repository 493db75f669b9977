//! `kfunc`: norms, K-functionals, K-curves and interpolation norms of
//! coefficient fields, with oracle verification of the fast paths.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kfunc_core::grid::{gen_field, load_field, store_field, CoeffField, Law};
use kfunc_core::interp::{
    default_window, fmt_num, interp_norm, k_curve, write_curve_csv, CurveMethod, QuadratureSpec, ThetaEta,
    DEFAULT_POINTS_PER_DECADE,
};
use kfunc_core::oracle::{cap_from_env, k_vertex_exhaustive, FunctionalForm};
use kfunc_core::solver::{k_dispatch, Case};
use kfunc_core::spaces::{outer_norm, x_norm, CouplePair, SpaceSide};
use kfunc_core::Error;

const PAIR_HELP: &str = "Couple `s0,q0,A0;s1,q1,A1`, positional or keyed (`s=0,q=1,A=lp(2)`). \
Inner spaces: lp(P), lorentz(P,TAU), sup. Exponents accept `inf`.";

#[derive(Parser)]
#[command(name = "kfunc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of a field in one space.
    Norm(NormArgs),
    /// K-functional at one t; prints `case,value`.
    Kfunc(KfuncArgs),
    /// K-curve on a log-spaced window as CSV `t,value`.
    Curve(CurveArgs),
    /// Real interpolation norm; prints `norm,tail`.
    Interp(InterpArgs),
    /// Fast paths against the vertex oracle on generated fields.
    Verify(VerifyArgs),
    /// Writes a generated field in the coefficient file format.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fast,
    Oracle,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    field: PathBuf,
    /// Space `s,q,A` (keyed or positional).
    #[arg(long)]
    space: SpaceSide,
    /// Print the q-th power of the norm.
    #[arg(long)]
    power: bool,
}

#[derive(Args)]
struct CoupleArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long, help = PAIR_HELP)]
    pair: CouplePair,
    /// sum, max or xi:V; defaults to the native form of the couple's case.
    #[arg(long)]
    form: Option<FunctionalForm>,
    #[arg(long, value_enum, default_value = "fast")]
    method: Method,
    /// Enumeration cap; defaults to KFUNC_CAP or 22.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct KfuncArgs {
    #[command(flatten)]
    couple: CoupleArgs,
    #[arg(long)]
    t: f64,
}

#[derive(Args)]
struct WindowArgs {
    /// Window bounds; both default to 6 decades either side of the crossover.
    #[arg(long, requires = "tmax")]
    tmin: Option<f64>,
    #[arg(long, requires = "tmin")]
    tmax: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_POINTS_PER_DECADE)]
    ppd: usize,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    couple: CoupleArgs,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct InterpArgs {
    #[command(flatten)]
    couple: CoupleArgs,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    theta: f64,
    /// Secondary exponent; `inf` takes the supremum.
    #[arg(long)]
    eta: f64,
}

#[derive(Args)]
struct GenFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    jmin: i32,
    #[arg(long, default_value_t = 1)]
    jmax: i32,
    /// Coefficients per layer.
    #[arg(long, default_value_t = 4)]
    size: usize,
    /// uniform or decay:RATE.
    #[arg(long, default_value = "uniform")]
    law: Law,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long, help = PAIR_HELP)]
    pair: CouplePair,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1e-2)]
    tmin: f64,
    #[arg(long, default_value_t = 1e2)]
    tmax: f64,
    /// Log-spaced t values per instance.
    #[arg(long, default_value_t = 5)]
    tpoints: usize,
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenFlags,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("verification failed")]
    VerifyFailed,
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Core(Error::CapExceeded { .. } | Error::Unsupported(_)) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read_field(path: &PathBuf) -> Result<CoeffField> {
    let file = File::open(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    Ok(load_field(BufReader::new(file))?)
}

fn resolve_cap(cap: Option<usize>) -> usize {
    cap.unwrap_or_else(cap_from_env)
}

fn fast_form(case: Case, form: Option<FunctionalForm>) -> Result<FunctionalForm> {
    match form {
        Some(f) if f != case.form() => Err(Error::Unsupported(format!(
            "the fast path for case {case} computes the {} form; use --method oracle for {f}",
            case.form()
        ))
        .into()),
        _ => Ok(case.form()),
    }
}

fn curve_method(args: &CoupleArgs, case: Case) -> Result<CurveMethod> {
    Ok(match args.method {
        Method::Fast => {
            fast_form(case, args.form)?;
            CurveMethod::Fast
        }
        Method::Oracle => CurveMethod::Oracle(args.form.unwrap_or(case.form())),
    })
}

fn window(w: &WindowArgs, field: &CoeffField, pair: &CouplePair) -> Result<QuadratureSpec> {
    Ok(match (w.tmin, w.tmax) {
        (Some(lo), Some(hi)) => QuadratureSpec::new(lo, hi, w.ppd)?,
        _ => {
            let d = default_window(field, pair);
            QuadratureSpec::new(d.t_lo, d.t_hi, w.ppd)?
        }
    })
}

fn cmd_norm(a: NormArgs, out: &mut impl Write) -> Result<()> {
    let field = read_field(&a.field)?;
    let v = if a.power {
        x_norm(&field, &a.space)?
    } else {
        outer_norm(&field, &a.space)
    };
    writeln!(out, "{}", fmt_num(v)).map_err(Error::from)?;
    Ok(())
}

fn cmd_kfunc(a: KfuncArgs, out: &mut impl Write) -> Result<()> {
    let c = &a.couple;
    let field = read_field(&c.field)?;
    let cap = resolve_cap(c.cap);
    let case = Case::of(&c.pair);
    let value = match c.method {
        Method::Fast => {
            fast_form(case, c.form)?;
            k_dispatch(a.t, &field, &c.pair, cap)?.value
        }
        Method::Oracle => {
            let form = c.form.unwrap_or(case.form());
            k_vertex_exhaustive(a.t, &field, &c.pair, form, cap)?.value
        }
    };
    writeln!(out, "{case},{}", fmt_num(value)).map_err(Error::from)?;
    Ok(())
}

fn cmd_curve(a: CurveArgs, out: &mut impl Write) -> Result<()> {
    let c = &a.couple;
    let field = read_field(&c.field)?;
    let method = curve_method(c, Case::of(&c.pair))?;
    let spec = window(&a.window, &field, &c.pair)?;
    let curve = k_curve(&field, &c.pair, &spec, method, resolve_cap(c.cap))?;
    write_curve_csv(&curve, out)?;
    Ok(())
}

fn cmd_interp(a: InterpArgs, out: &mut impl Write) -> Result<()> {
    let c = &a.couple;
    let te = ThetaEta::new(a.theta, a.eta)?;
    let field = read_field(&c.field)?;
    let method = curve_method(c, Case::of(&c.pair))?;
    let spec = window(&a.window, &field, &c.pair)?;
    let curve = k_curve(&field, &c.pair, &spec, method, resolve_cap(c.cap))?;
    let norm = interp_norm(&curve, te)?;
    writeln!(out, "norm,tail").map_err(Error::from)?;
    writeln!(out, "{},{}", fmt_num(norm.value), fmt_num(norm.tail)).map_err(Error::from)?;
    if norm.warning {
        eprintln!(
            "warning: tail corrections carry {:.2}% of the integral; widen the window",
            100.0 * norm.tail
        );
    }
    Ok(())
}

fn generate(g: &GenFlags, seed: u64) -> Result<CoeffField> {
    Ok(gen_field(seed, (g.jmin, g.jmax), g.size, g.law)?)
}

fn cmd_verify(a: VerifyArgs, out: &mut impl Write) -> Result<()> {
    let cap = resolve_cap(a.cap);
    let case = Case::of(&a.pair);
    let form = case.form();
    let levels = (a.gen.jmax as i64 - a.gen.jmin as i64 + 1).max(0) as usize;
    let per_instance = levels * a.gen.size;
    if a.trials > 0 && per_instance > cap {
        return Err(Error::Unsupported(format!(
            "instances carry up to {per_instance} coefficients, above the enumeration cap of {cap}; \
             lower --size or the level window, or raise --cap / KFUNC_CAP"
        ))
        .into());
    }
    let (lo_bound, hi_bound) = match case {
        Case::I | Case::II => (1.0 / 8.0, 8.0),
        Case::III | Case::IV => (0.5 - 1e-6, 2.0 + 1e-6),
    };
    let ts: Vec<f64> = if a.tpoints <= 1 {
        vec![a.tmin]
    } else {
        QuadratureSpec::new(a.tmin, a.tmax, 4)?;
        (0..a.tpoints)
            .map(|i| a.tmin * (a.tmax / a.tmin).powf(i as f64 / (a.tpoints - 1) as f64))
            .collect()
    };
    let io = |e: io::Error| CliError::from(Error::from(e));
    writeln!(out, "trial,t,fast,oracle,ratio").map_err(io)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut evaluations = 0usize;
    for trial in 0..a.trials {
        let field = generate(&a.gen, a.gen.seed.wrapping_add(trial as u64))?;
        for &t in &ts {
            let fast = k_dispatch(t, &field, &a.pair, cap)?.value;
            let oracle = k_vertex_exhaustive(t, &field, &a.pair, form, cap)?.value;
            let ratio = if fast == 0.0 && oracle == 0.0 { 1.0 } else { fast / oracle };
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            evaluations += 1;
            writeln!(out, "{trial},{},{},{},{}", fmt_num(t), fmt_num(fast), fmt_num(oracle), fmt_num(ratio))
                .map_err(io)?;
        }
    }
    let pass = evaluations == 0 || (lo >= lo_bound && hi <= hi_bound);
    if evaluations == 0 {
        writeln!(out, "# 0 instances, case {case}: PASS").map_err(io)?;
    } else {
        writeln!(
            out,
            "# {} instances, {evaluations} evaluations, case {case}, ratio in [{}, {}], bound [{}, {}]: {}",
            a.trials,
            fmt_num(lo),
            fmt_num(hi),
            fmt_num(lo_bound),
            fmt_num(hi_bound),
            if pass { "PASS" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn cmd_gen(a: GenArgs, out: &mut impl Write) -> Result<()> {
    let field = generate(&a.gen, a.gen.seed)?;
    match a.out {
        Some(path) => {
            let file = File::create(&path).map_err(Error::from)?;
            store_field(&field, BufWriter::new(file))?;
        }
        None => store_field(&field, out)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Norm(a) => cmd_norm(a, &mut out),
        Command::Kfunc(a) => cmd_kfunc(a, &mut out),
        Command::Curve(a) => cmd_curve(a, &mut out),
        Command::Interp(a) => cmd_interp(a, &mut out),
        Command::Verify(a) => cmd_verify(a, &mut out),
        Command::Gen(a) => cmd_gen(a, &mut out),
    };
    out.flush().map_err(Error::from)?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kfunc: {e}");
            ExitCode::from(e.code())
        }
    }
}
