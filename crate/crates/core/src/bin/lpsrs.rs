use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use lpsrs::io::{self, format_number, with_suffix};
use lpsrs::{
    band_amplitudes, build_lpsrs, check_superposition, compute_srs, default_cutoffs, ecss_predict_srs, ecss_tf_bounds,
    lowpass, bandpass, modal_interface_response, octave_grid, predict_component, synth_shock, upper_bound_abssum,
    BandMode, Combiner, Error, FrfSource, LpsrsConfig, SpectrumKind,
};

/// Environment variable naming a TOML file of default settings.
const CONFIG_ENV: &str = "LPSRS_CONFIG";

#[derive(Parser)]
#[command(name = "lpsrs", version, about = "Shock response spectra, LPSRS and shock transmissibility prediction")]
struct Cli {
    /// Oscillator damping ratio [default: 0.05]
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// SRS grid points per octave [default: 12]
    #[arg(long, global = true)]
    ppo: Option<u32>,
    /// Print summaries as JSON
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Print summaries as CSV (default)
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shock response spectrum of a record
    Srs(SrsArgs),
    /// LPSRS curves, platforms and band amplitudes
    Lpsrs(LpsrsArgs),
    /// Delay-compensated low-pass or band-pass filtering
    Filter(FilterArgs),
    /// Component-interface SRS and LPSRS from an equipment LPSRS and modal data
    Predict(PredictArgs),
    /// ECSS transmissibility corridor applied to an equipment SRS
    Ecss(EcssArgs),
    /// Damped-harmonic shock synthesis
    Synth(SynthArgs),
    /// Linear superposition report
    Check(CheckArgs),
}

#[derive(Args)]
struct RecordArgs {
    /// Record CSV (`time_s,accel_m_s2`, or one headerless column with --fs)
    input: PathBuf,
    /// Sample rate for headerless records, Hz
    #[arg(long)]
    fs: Option<f64>,
}

#[derive(Args)]
struct SrsArgs {
    #[command(flatten)]
    record: RecordArgs,
    /// Lowest grid frequency, Hz [default: 100]
    #[arg(long)]
    fmin: Option<f64>,
    /// Highest grid frequency, Hz [default: fs/10]
    #[arg(long)]
    fmax: Option<f64>,
    /// absolute-max, positive-max or negative-max
    #[arg(long, default_value = "absolute-max")]
    kind: SpectrumKind,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CutoffArgs {
    /// Cutoffs: `lo:hi:octave` or a comma list [default: octaves covering the content]
    #[arg(long)]
    cutoffs: Option<String>,
    /// Lowest SRS grid frequency, Hz [default: 100]
    #[arg(long)]
    fmin: Option<f64>,
    /// Minimum sample-rate/cutoff ratio after decimation [default: 40]
    #[arg(long)]
    rate_ratio: Option<f64>,
}

#[derive(Args)]
struct LpsrsArgs {
    #[command(flatten)]
    record: RecordArgs,
    #[command(flatten)]
    cut: CutoffArgs,
    /// Also print the superposition report
    #[arg(long)]
    check: bool,
    /// Band signals for --check: difference or bandpass
    #[arg(long, default_value = "bandpass")]
    mode: BandMode,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    record: RecordArgs,
    /// Low-pass cutoff, Hz
    #[arg(long, conflicts_with = "bandpass", required_unless_present = "bandpass")]
    lowpass: Option<f64>,
    /// Band-pass edges, Hz
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
    bandpass: Option<Vec<f64>>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Equipment LPSRS CSV (with its .json sidecar and .bands.csv)
    lpsrs: PathBuf,
    /// Modal CSV (`order,freq_hz,participation,mode_shape,eff_mass_kg`)
    modal: PathBuf,
    /// Predicted SRS output; the LPSRS goes to `<stem>.lpsrs.csv`
    #[arg(short, long)]
    output: PathBuf,
    /// Also print the modal upper bound (abs-sum or srss)
    #[arg(long)]
    upper_bound: Option<Combiner>,
    /// Equipment SRS for --upper-bound [default: top LPSRS curve]
    #[arg(long)]
    srs: Option<PathBuf>,
}

#[derive(Args)]
struct EcssArgs {
    /// Equipment SRS CSV
    srs: PathBuf,
    /// Sine FRF CSV (`freq_hz,magnitude`)
    frf: PathBuf,
    /// Transition frequency, Hz (> 2000)
    #[arg(long)]
    transition: f64,
    /// test or fem
    #[arg(long, default_value = "test")]
    source: FrfSource,
    /// Output path; writes `<stem>.lower.csv` and `<stem>.upper.csv`
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Component CSV (`amplitude_m_s2,freq_hz,damping,onset_s`)
    components: PathBuf,
    #[arg(long)]
    fs: f64,
    /// Record length, s
    #[arg(long)]
    duration: f64,
    #[arg(short, long)]
    output: PathBuf,
    /// Modal CSV; also writes the component-interface response
    #[arg(long)]
    modal: Option<PathBuf>,
    /// Component-interface output [default: `<stem>.component.csv`]
    #[arg(long, requires = "modal")]
    component_output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    record: RecordArgs,
    #[command(flatten)]
    cut: CutoffArgs,
    /// difference or bandpass
    #[arg(long, default_value = "bandpass")]
    mode: BandMode,
    /// Also write the report as JSON
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    xi: Option<f64>,
    ppo: Option<u32>,
    fmin: Option<f64>,
    rate_ratio: Option<f64>,
}

fn load_config() -> anyhow::Result<FileConfig> {
    let Some(path) = std::env::var_os(CONFIG_ENV) else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {CONFIG_ENV}={}", Path::new(&path).display()))?;
    let cfg = toml::from_str(&text).map_err(|e| anyhow!(Error::Data(format!("{}: {e}", Path::new(&path).display()))))?;
    Ok(cfg)
}

/// Resolved option values with their origin, recorded in sidecars.
struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    fn new() -> Self {
        Settings { map: BTreeMap::new() }
    }

    fn pick<T: Copy + ToString>(&mut self, name: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let (v, origin) = match (flag, file) {
            (Some(v), _) => (v, "flag"),
            (None, Some(v)) => (v, "config"),
            _ => (default, "default"),
        };
        self.map.insert(name.into(), format!("{} ({origin})", v.to_string()));
        v
    }

    fn note(&mut self, name: &str, value: impl ToString) {
        self.map.insert(name.into(), value.to_string());
    }
}

#[derive(Clone, Copy)]
enum Format {
    Csv,
    Json,
}

struct Ctx {
    xi: Option<f64>,
    ppo: Option<u32>,
    format: Format,
    file: FileConfig,
}

impl Ctx {
    fn lpsrs_config(&self, cut: &CutoffArgs, s: &mut Settings) -> LpsrsConfig {
        let d = LpsrsConfig::default();
        LpsrsConfig {
            damping: s.pick("xi", self.xi, self.file.xi, d.damping),
            points_per_octave: s.pick("ppo", self.ppo, self.file.ppo, d.points_per_octave),
            f_min: s.pick("fmin", cut.fmin, self.file.fmin, d.f_min),
            rate_ratio: s.pick("rate_ratio", cut.rate_ratio, self.file.rate_ratio, d.rate_ratio),
        }
    }
}

fn parse_cutoffs(list: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || anyhow!(Error::Domain(format!("invalid cutoff list `{list}` (lo:hi:octave or a comma list)")));
    if let Some((range, step)) = list.rsplit_once(':') {
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
        if step.trim() != "octave" || !(lo > 0.0 && hi >= lo) {
            return Err(bad());
        }
        let mut v = vec![];
        let mut f = lo;
        while f <= hi * (1.0 + 1e-9) {
            v.push(f);
            f *= 2.0;
        }
        return Ok(v);
    }
    list.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn cutoffs_for(cut: &CutoffArgs, x: &lpsrs::TimeSeries, cfg: &LpsrsConfig, s: &mut Settings) -> anyhow::Result<Vec<f64>> {
    let c = match &cut.cutoffs {
        Some(list) => {
            s.note("cutoffs", format!("{list} (flag)"));
            parse_cutoffs(list)?
        }
        None => {
            s.note("cutoffs", "automatic (default)");
            default_cutoffs(x, cfg.rate_ratio)?
        }
    };
    Ok(c)
}

fn print_table(format: Format, header: &[&str], rows: &[Vec<String>], json: &impl Serialize) -> anyhow::Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(json)?),
        Format::Csv => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.join(","));
            }
        }
    }
    Ok(())
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn cmd_srs(ctx: &Ctx, a: &SrsArgs) -> anyhow::Result<()> {
    let x = io::read_timeseries(&a.record.input, a.record.fs)?;
    let mut s = Settings::new();
    let d = LpsrsConfig::default();
    let xi = s.pick("xi", ctx.xi, ctx.file.xi, d.damping);
    let ppo = s.pick("ppo", ctx.ppo, ctx.file.ppo, d.points_per_octave);
    let fmin = s.pick("fmin", a.fmin, ctx.file.fmin, d.f_min);
    let fmax = s.pick("fmax", a.fmax, None, x.sample_rate() / 10.0);
    let grid = octave_grid(fmin, fmax, ppo)?;
    let curve = compute_srs(&x, &grid, xi, a.kind)?;
    io::write_srs(&a.output, &curve, &s.map)?;
    let peak = curve.amplitudes().iter().copied().fold(0.0, f64::max);
    print_table(
        ctx.format,
        &["points", "max_srs_m_s2"],
        &[vec![curve.len().to_string(), format_number(peak)]],
        &serde_json::json!({ "points": curve.len(), "max_srs_m_s2": io::round_sig(peak) }),
    )
}

#[derive(Serialize)]
struct PlatformRow {
    cutoff_hz: f64,
    platform_m_s2: f64,
    band_amplitude_m_s2: f64,
    flat: bool,
}

fn print_report(format: Format, r: &lpsrs::SuperpositionReport) -> anyhow::Result<()> {
    let mut rows: Vec<Vec<String>> = r
        .bands
        .iter()
        .map(|b| {
            vec![
                b.band.to_string(),
                format_number(b.lower_hz),
                format_number(b.upper_hz),
                format_number(b.band_peak),
                format_number(b.platform_difference),
                opt_num(b.ratio_db),
                b.desynchronized.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "total".into(),
        String::new(),
        String::new(),
        format_number(r.band_peak_sum),
        format_number(r.peak),
        opt_num(r.total_db),
        r.desynchronized.to_string(),
    ]);
    print_table(
        format,
        &["band", "lower_hz", "upper_hz", "band_peak_m_s2", "platform_difference_m_s2", "ratio_db", "desynchronized"],
        &rows,
        r,
    )
}

fn cmd_lpsrs(ctx: &Ctx, a: &LpsrsArgs) -> anyhow::Result<()> {
    let x = io::read_timeseries(&a.record.input, a.record.fs)?;
    let mut s = Settings::new();
    let cfg = ctx.lpsrs_config(&a.cut, &mut s);
    let cutoffs = cutoffs_for(&a.cut, &x, &cfg, &mut s)?;
    let set = build_lpsrs(&x, &cutoffs, &cfg)?;
    let bands = band_amplitudes(&set);
    io::write_lpsrs(&a.output, &set, &bands, &s.map)?;
    if a.check {
        let report = check_superposition(&x, &cutoffs, a.mode, &cfg)?;
        return print_report(ctx.format, &report);
    }
    let rows: Vec<PlatformRow> = set
        .cutoffs()
        .iter()
        .zip(set.platforms())
        .zip(&bands)
        .map(|((fc, p), b)| PlatformRow {
            cutoff_hz: io::round_sig(*fc),
            platform_m_s2: io::round_sig(p.amplitude),
            band_amplitude_m_s2: io::round_sig(*b),
            flat: p.flat,
        })
        .collect();
    let text: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format_number(r.cutoff_hz),
                format_number(r.platform_m_s2),
                format_number(r.band_amplitude_m_s2),
                r.flat.to_string(),
            ]
        })
        .collect();
    print_table(ctx.format, &["cutoff_hz", "platform_m_s2", "band_amplitude_m_s2", "flat"], &text, &rows)
}

fn cmd_filter(a: &FilterArgs) -> anyhow::Result<()> {
    let x = io::read_timeseries(&a.record.input, a.record.fs)?;
    let y = match (&a.lowpass, &a.bandpass) {
        (Some(fc), _) => lowpass(&x, *fc)?,
        (None, Some(b)) => bandpass(&x, b[0], b[1])?,
        _ => bail!(Error::Domain("give --lowpass or --bandpass".into())),
    };
    io::write_timeseries(&a.output, &y)?;
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: &PredictArgs) -> anyhow::Result<()> {
    let eq = io::read_lpsrs(&a.lpsrs)?;
    let modal = io::read_modal(&a.modal)?;
    let grid = eq
        .bands()
        .first()
        .map(|b| b.curve.frequencies().to_vec())
        .ok_or_else(|| anyhow!(Error::Contract(format!("{}: no band spectra (.bands.csv)", a.lpsrs.display()))))?;
    let pred = predict_component(&eq, &modal, &grid)?;
    let mut s = Settings::new();
    s.note("equipment_lpsrs", a.lpsrs.display());
    s.note("modal", a.modal.display());
    io::write_srs(&a.output, &pred.srs, &s.map)?;
    let lp_path = with_suffix(&a.output, ".lpsrs.csv");
    io::write_lpsrs(&lp_path, &pred.lpsrs, &pred.band_amplitudes, &s.map)?;

    let mut header = vec!["band", "cutoff_hz", "predicted_band_m_s2", "predicted_platform_m_s2"];
    let platforms = pred.lpsrs.platform_amplitudes();
    let mut rows: Vec<Vec<String>> = (0..eq.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                format_number(eq.cutoffs()[i]),
                format_number(pred.band_amplitudes[i]),
                format_number(platforms[i]),
            ]
        })
        .collect();
    let mut json = serde_json::json!({
        "cutoffs_hz": eq.cutoffs().iter().map(|v| io::round_sig(*v)).collect::<Vec<_>>(),
        "band_amplitudes_m_s2": pred.band_amplitudes.iter().map(|v| io::round_sig(*v)).collect::<Vec<_>>(),
        "platforms_m_s2": platforms.iter().map(|v| io::round_sig(*v)).collect::<Vec<_>>(),
    });
    if let Some(comb) = a.upper_bound {
        let srs = match &a.srs {
            Some(p) => io::read_srs(p, eq.damping_ratio())?,
            None => eq.curves()[eq.len() - 1].clone(),
        };
        let au = upper_bound_abssum(&srs, &modal, comb)?;
        header.push("upper_bound_m_s2");
        for r in &mut rows {
            r.push(format_number(au));
        }
        json["upper_bound_m_s2"] = serde_json::json!(io::round_sig(au));
        json["combiner"] = serde_json::json!(comb);
    }
    print_table(ctx.format, &header, &rows, &json)
}

fn cmd_ecss(ctx: &Ctx, a: &EcssArgs) -> anyhow::Result<()> {
    let d = LpsrsConfig::default();
    let srs = io::read_srs(&a.srs, ctx.xi.or(ctx.file.xi).unwrap_or(d.damping))?;
    let frf = io::read_frf(&a.frf, a.source)?;
    let bounds = ecss_tf_bounds(&frf, a.transition)?;
    let pred = ecss_predict_srs(&srs, &bounds)?;
    let mut s = Settings::new();
    s.note("transition_hz", format_number(a.transition));
    s.note("source", serde_json::to_value(a.source)?.as_str().unwrap_or_default());
    io::write_srs(&with_suffix(&a.output, ".lower.csv"), &pred.lower, &s.map)?;
    io::write_srs(&with_suffix(&a.output, ".upper.csv"), &pred.upper, &s.map)?;
    let rows: Vec<Vec<String>> = bounds
        .points()
        .iter()
        .map(|(f, l, u)| vec![format_number(*f), format_number(*l), format_number(*u)])
        .collect();
    let json: Vec<_> = bounds
        .points()
        .iter()
        .map(|(f, l, u)| serde_json::json!({"freq_hz": io::round_sig(*f), "lower": io::round_sig(*l), "upper": io::round_sig(*u)}))
        .collect();
    print_table(ctx.format, &["freq_hz", "tf_lower", "tf_upper"], &rows, &json)
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> anyhow::Result<()> {
    let comps = io::read_components(&a.components)?;
    if comps.is_empty() {
        bail!(Error::Data(format!("{}: no components", a.components.display())));
    }
    let x = synth_shock(&comps, a.fs, a.duration)?;
    io::write_timeseries(&a.output, &x)?;
    if let Some(m) = &a.modal {
        let modal = io::read_modal(m)?;
        let xi = ctx.xi.or(ctx.file.xi).unwrap_or(LpsrsConfig::default().damping);
        let y = modal_interface_response(&x, &modal, xi)?;
        let out = a
            .component_output
            .clone()
            .unwrap_or_else(|| with_suffix(&a.output, ".component.csv"));
        io::write_timeseries(&out, &y)?;
    }
    Ok(())
}

fn cmd_check(ctx: &Ctx, a: &CheckArgs) -> anyhow::Result<()> {
    let x = io::read_timeseries(&a.record.input, a.record.fs)?;
    let mut s = Settings::new();
    let cfg = ctx.lpsrs_config(&a.cut, &mut s);
    let cutoffs = cutoffs_for(&a.cut, &x, &cfg, &mut s)?;
    let report = check_superposition(&x, &cutoffs, a.mode, &cfg)?;
    if let Some(out) = &a.output {
        io::write_report(out, &report)?;
    }
    print_report(ctx.format, &report)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx {
        xi: cli.xi,
        ppo: cli.ppo,
        format: if cli.json { Format::Json } else { Format::Csv },
        file: load_config()?,
    };
    match &cli.command {
        Command::Srs(a) => cmd_srs(&ctx, a),
        Command::Lpsrs(a) => cmd_lpsrs(&ctx, a),
        Command::Filter(a) => cmd_filter(a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Ecss(a) => cmd_ecss(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Check(a) => cmd_check(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numeric = e.downcast_ref::<Error>().is_some_and(Error::is_numeric);
            ExitCode::from(if numeric { 3 } else { 2 })
        }
    }
}
