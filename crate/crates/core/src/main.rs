//! Command-line interface: butterfly sweeps, D_q analysis, crossing scans,
//! classical sections, FFT spectrum retrieval, and the verification suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 compute error,
//! 4 I/O error, 5 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use su2_butterfly::classical::{
    lyapunov_estimate, poincare_section, random_seeds, ClassicalParams,
};
use su2_butterfly::crossings::{find_crossings, ScanConfig, SectorSelect};
use su2_butterfly::dynamics::{autocorrelation, fft_spectrum, FftOptions, Window};
use su2_butterfly::floquet::{FloquetAssembler, ModelParams, Prefactor, Variant};
use su2_butterfly::fractal::{default_q_grid, dq_spectrum};
use su2_butterfly::io::{
    self, atomic_write, butterfly_rows, cache_key, cache_lookup, cache_store, crossing_rows,
    render, DatasetMeta, DatasetRow, DqRow, FftRow, IoError, OutputFormat, SectionRow,
    TypedDataset,
};
use su2_butterfly::spectrum::{butterfly_scan, floquet_eigenphases, ParityLabel};
use su2_butterfly::su2::SpinBasis;
use su2_butterfly::verify::run_verification;
use su2_butterfly::{CVec, HETA_PERIOD};

#[derive(Parser)]
#[command(name = "su2-butterfly", version, about = "Driven-SU(2) Floquet spectrum laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for all pseudo-random draws (recorded in outputs).
    #[arg(long, global = true, default_value_t = 0)]
    rng_seed: u64,
    /// Cache directory (overrides SU2_BUTTERFLY_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Xx,
    Xy,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Xx => Variant::Xx,
            VariantArg::Xy => Variant::Xy,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Total angular momentum J (integer or half-integer, e.g. 20 or 30.5).
    #[arg(long = "J", alias = "j")]
    j: f64,
    /// αJ, the scale-invariant rotation strength.
    #[arg(long, default_value_t = 1.0)]
    alpha_scaled: f64,
    #[arg(long, value_enum, default_value = "xx")]
    variant: VariantArg,
    /// Rational torsion prefactor numerator ν (with --mu; integer J only).
    #[arg(long, requires = "mu")]
    nu: Option<i64>,
    /// Rational torsion prefactor denominator μ.
    #[arg(long, requires = "nu")]
    mu: Option<i64>,
    /// Angle torsion prefactor β (diag e^{−iβm²}); exclusive with --nu/--mu.
    #[arg(long, conflicts_with_all = ["nu", "mu"])]
    beta: Option<f64>,
}

impl ModelArgs {
    fn to_params(&self, heta: f64) -> Result<ModelParams, CliError> {
        let basis = SpinBasis::from_j(self.j)
            .ok_or_else(|| CliError::Config(format!("J = {} must be a positive multiple of 1/2", self.j)))?;
        let prefactor = match (self.nu, self.mu, self.beta) {
            (Some(nu), Some(mu), None) => Prefactor::Rational { nu, mu },
            (None, None, Some(beta)) => Prefactor::Angle { beta },
            (None, None, None) => Prefactor::None,
            _ => unreachable!("clap enforces prefactor exclusivity"),
        };
        let params = ModelParams {
            two_j: basis.two_j(),
            alpha_scaled: self.alpha_scaled,
            heta,
            variant: self.variant.into(),
            prefactor,
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    fn params_json(&self, params: &ModelParams) -> serde_json::Value {
        serde_json::to_value(params).expect("params serialize")
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file path.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep ℏ_η and tabulate the eigenphase spectrum.
    Butterfly {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0)]
        heta_min: f64,
        #[arg(long, default_value_t = HETA_PERIOD)]
        heta_max: f64,
        /// Number of grid points (endpoint excluded).
        #[arg(long, default_value_t = 2048)]
        steps: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Generalized fractal dimension D_q of the spectrum at one ℏ_η.
    Dq {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        heta: f64,
        /// Analyze per parity sector (default for variant XX) or combined.
        #[arg(long, value_enum, default_value = "auto")]
        sector: SectorArg,
        /// Analyze the kicked-top control (first two factors) instead of F.
        #[arg(long)]
        kicked_top: bool,
        #[arg(long, default_value_t = -5.0)]
        q_min: f64,
        #[arg(long, default_value_t = 5.0)]
        q_max: f64,
        #[arg(long, default_value_t = 0.25)]
        q_step: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Locate and classify level crossings over an ℏ_η range.
    Crossings {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0)]
        heta_min: f64,
        #[arg(long, default_value_t = HETA_PERIOD)]
        heta_max: f64,
        #[arg(long, value_enum, default_value = "all")]
        sectors: SectorSelectArg,
        /// True-crossing gap threshold.
        #[arg(long, default_value_t = 1e-10)]
        tau_true: f64,
        /// Grid density multiplier c (spacing 4π/(c·J³)).
        #[arg(long, default_value_t = 10.0)]
        density_c: f64,
        /// Raise the scan J limit (default J ≤ 12).
        #[arg(long, default_value_t = 12.0)]
        max_j: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Poincaré section (x > 0) of the classical mean-field map.
    Classical {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long, value_enum, default_value = "xx")]
        variant: VariantArg,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Also estimate the maximal Lyapunov exponent per seed (stdout).
        #[arg(long)]
        lyapunov: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evolve |m₀⟩ stroboscopically and retrieve the spectrum by FFT.
    EvolveFft {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        heta: f64,
        /// Initial J_z eigenstate |m = m₀⟩.
        #[arg(long)]
        m0: f64,
        #[arg(long, default_value_t = 1024)]
        n_seq: usize,
        /// Pad non-power-of-two sequences instead of rejecting them.
        #[arg(long)]
        pad: bool,
        /// Apply a Hann window before the transform.
        #[arg(long)]
        hann: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the verification suite (exactly-known model properties).
    Verify {
        /// Total angular momentum J.
        #[arg(long = "J", alias = "j", default_value_t = 2.0)]
        j: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_scaled: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorArg {
    Auto,
    Even,
    Odd,
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorSelectArg {
    All,
    Even,
    Odd,
    Cross,
}

impl From<SectorSelectArg> for SectorSelect {
    fn from(v: SectorSelectArg) -> Self {
        match v {
            SectorSelectArg::All => SectorSelect::All,
            SectorSelectArg::Even => SectorSelect::Even,
            SectorSelectArg::Odd => SectorSelect::Odd,
            SectorSelectArg::Cross => SectorSelect::Cross,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Compute(String),
    Io(IoError),
    VerifyFailed,
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config(msg) => CliError::Config(msg),
            other => CliError::Io(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
            CliError::VerifyFailed => 5,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be ≥ 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(m) => eprintln!("config error: {m}"),
                CliError::Compute(m) => eprintln!("compute error: {m}"),
                CliError::Io(m) => eprintln!("{m}"),
                CliError::VerifyFailed => eprintln!("verification failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

/// Write dataset bytes to the output path, via the cache when enabled.
fn emit<R: DatasetRow>(
    ds: &TypedDataset<R>,
    out: &OutputArgs,
    cache_dir: Option<&PathBuf>,
    key_config: serde_json::Value,
) -> Result<(), CliError> {
    let dir = io::resolve_cache_dir(cache_dir.map(|p| p.as_path()));
    let key = cache_key(&key_config);
    if let Some(dir) = &dir {
        if let Some(bytes) = cache_lookup(dir, &key) {
            log::info!("cache hit {key}");
            atomic_write(&out.output, &bytes)?;
            return Ok(());
        }
    }
    let bytes = render(ds, out.format);
    atomic_write(&out.output, &bytes)?;
    if let Some(dir) = &dir {
        cache_store(dir, &key, &bytes);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let rng_seed = cli.rng_seed;
    match cli.command {
        Command::Butterfly { model, heta_min, heta_max, steps, out } => {
            if steps < 1 {
                return Err(CliError::Config("steps must be ≥ 1".into()));
            }
            if !(heta_max > heta_min) {
                return Err(CliError::Config("need heta_max > heta_min".into()));
            }
            let params = model.to_params(heta_min)?;
            let h = (heta_max - heta_min) / steps as f64;
            let grid: Vec<f64> = (0..steps).map(|k| heta_min + k as f64 * h).collect();
            let key_config = json!({
                "command": "butterfly",
                "params": model.params_json(&params),
                "heta_min": heta_min,
                "heta_max": heta_max,
                "steps": steps,
                "format": out.format,
                "rng_seed": rng_seed,
                "engine_version": su2_butterfly::ENGINE_VERSION,
            });
            let ds = butterfly_scan(&params, &grid, false).map_err(|e| CliError::Compute(e.to_string()))?;
            let meta = DatasetMeta::new("butterfly", key_config["params"].clone(), rng_seed);
            let typed = TypedDataset { meta, rows: butterfly_rows(&ds) };
            emit(&typed, &out, cli.cache_dir.as_ref(), key_config)
        }

        Command::Dq { model, heta, sector, kicked_top, q_min, q_max, q_step, out } => {
            let params = model.to_params(heta)?;
            if !(q_step > 0.0 && q_max >= q_min) {
                return Err(CliError::Config("bad q grid".into()));
            }
            let qs: Vec<f64> = if (q_min, q_max, q_step) == (-5.0, 5.0, 0.25) {
                default_q_grid()
            } else {
                let n = ((q_max - q_min) / q_step).round() as usize;
                (0..=n).map(|k| q_min + k as f64 * q_step).collect()
            };
            let assembler = FloquetAssembler::new(&params).map_err(|e| CliError::Config(e.to_string()))?;
            let set = if kicked_top {
                match assembler.kicked_top_blocks_at(heta) {
                    Some((be, bo)) => {
                        let e = su2_butterfly::spectrum::eigenphases(&be, false)
                            .map_err(|e| CliError::Compute(e.to_string()))?;
                        let o = su2_butterfly::spectrum::eigenphases(&bo, false)
                            .map_err(|e| CliError::Compute(e.to_string()))?;
                        merge_simple(e, o)
                    }
                    None => su2_butterfly::spectrum::eigenphases(&assembler.kicked_top_at(heta), false)
                        .map_err(|e| CliError::Compute(e.to_string()))?,
                }
            } else {
                floquet_eigenphases(&assembler, heta, false).map_err(|e| CliError::Compute(e.to_string()))?
            };
            let sectors: Vec<(String, Vec<f64>)> = match (sector, params.variant) {
                (SectorArg::Combined, _) | (SectorArg::Auto, Variant::Xy) => {
                    vec![("combined".into(), set.phases.clone())]
                }
                (SectorArg::Auto, Variant::Xx) => vec![
                    ("even".into(), set.sector_phases(ParityLabel::Even)),
                    ("odd".into(), set.sector_phases(ParityLabel::Odd)),
                ],
                (SectorArg::Even, _) => vec![("even".into(), set.sector_phases(ParityLabel::Even))],
                (SectorArg::Odd, _) => vec![("odd".into(), set.sector_phases(ParityLabel::Odd))],
            };
            let mut rows = Vec::new();
            for (name, phases) in &sectors {
                let curve = dq_spectrum(phases, &qs, None).map_err(|e| CliError::Compute(e.to_string()))?;
                for i in 0..curve.q_values.len() {
                    rows.push(DqRow {
                        sector: name.clone(),
                        q: curve.q_values[i],
                        d_q: curve.d_q[i],
                        r2: curve.fit_r2[i],
                        stderr: curve.fit_stderr[i],
                    });
                }
            }
            let key_config = json!({
                "command": "dq",
                "params": model.params_json(&params),
                "heta": heta,
                "kicked_top": kicked_top,
                "q": [q_min, q_max, q_step],
                "sectors": sectors.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
                "format": out.format,
                "rng_seed": rng_seed,
                "engine_version": su2_butterfly::ENGINE_VERSION,
            });
            let meta = DatasetMeta::new("dq", key_config["params"].clone(), rng_seed);
            emit(&TypedDataset { meta, rows }, &out, cli.cache_dir.as_ref(), key_config)
        }

        Command::Crossings { model, heta_min, heta_max, sectors, tau_true, density_c, max_j, out } => {
            let params = model.to_params(heta_min)?;
            if !(heta_max > heta_min) {
                return Err(CliError::Config("need heta_max > heta_min".into()));
            }
            let max_two_j = (2.0 * max_j).round() as u32;
            if params.two_j > max_two_j {
                return Err(CliError::Config(format!(
                    "J = {} exceeds the scan limit {max_j} (raise --max-j deliberately)",
                    params.j()
                )));
            }
            let cfg = ScanConfig {
                tau_true,
                density_multiplier: density_c,
                max_two_j,
                ..ScanConfig::default()
            };
            let records = find_crossings(&params, sectors.into(), (heta_min, heta_max), &cfg)
                .map_err(|e| CliError::Compute(e.to_string()))?;
            let key_config = json!({
                "command": "crossings",
                "params": model.params_json(&params),
                "heta_min": heta_min,
                "heta_max": heta_max,
                "sectors": format!("{:?}", SectorSelect::from(sectors)),
                "tau_true": tau_true,
                "density_c": density_c,
                "format": out.format,
                "rng_seed": rng_seed,
                "engine_version": su2_butterfly::ENGINE_VERSION,
            });
            let meta = DatasetMeta::new("crossings", key_config["params"].clone(), rng_seed);
            emit(&TypedDataset { meta, rows: crossing_rows(&records) }, &out, cli.cache_dir.as_ref(), key_config)
        }

        Command::Classical { alpha, eta, variant, seeds, steps, lyapunov, out } => {
            if seeds == 0 || steps == 0 {
                return Err(CliError::Config("seeds and steps must be ≥ 1".into()));
            }
            let p = ClassicalParams::new(alpha, eta);
            let seed_states = random_seeds(seeds, rng_seed);
            let clouds = poincare_section(&seed_states, &p, variant.into(), steps);
            let mut rows = Vec::new();
            for (sid, cloud) in clouds.iter().enumerate() {
                for &(step, y, z) in cloud {
                    rows.push(SectionRow { seed_id: sid as u64, step, y, z });
                }
            }
            if lyapunov {
                for (sid, s) in seed_states.iter().enumerate() {
                    let l = lyapunov_estimate(*s, &p, variant.into(), steps.max(10_000));
                    println!("lyapunov seed={sid} lambda={l}");
                }
            }
            let params_json = json!({
                "alpha": alpha, "eta": eta,
                "variant": Variant::from(variant),
                "seeds": seeds, "steps": steps,
                "torsion_sign": p.torsion_sign,
            });
            let key_config = json!({
                "command": "classical",
                "params": params_json,
                "format": out.format,
                "rng_seed": rng_seed,
                "engine_version": su2_butterfly::ENGINE_VERSION,
            });
            let meta = DatasetMeta::new("section", params_json, rng_seed);
            emit(&TypedDataset { meta, rows }, &out, cli.cache_dir.as_ref(), key_config)
        }

        Command::EvolveFft { model, heta, m0, n_seq, pad, hann, out } => {
            let params = model.to_params(heta)?;
            if n_seq < 2 {
                return Err(CliError::Config("n_seq must be ≥ 2".into()));
            }
            let basis = params.basis();
            let idx = m0 + basis.j();
            if idx < 0.0 || idx.fract().abs() > 1e-9 || idx as usize >= basis.dim() {
                return Err(CliError::Config(format!(
                    "m0 = {m0} is not in the m grid of J = {}",
                    basis.j()
                )));
            }
            let idx = idx as usize;
            let assembler = FloquetAssembler::new(&params).map_err(|e| CliError::Config(e.to_string()))?;
            let f = assembler.operator_at(heta);
            let phi0 = CVec::from_fn(basis.dim(), |i, _| {
                if i == idx {
                    num_complex::Complex64::new(1.0, 0.0)
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            });
            let seq = autocorrelation(&f, &phi0, n_seq, &format!("|m={m0}⟩"));
            let opts = FftOptions { pad, window: if hann { Window::Hann } else { Window::None } };
            let ps = fft_spectrum(&seq, opts).map_err(|e| CliError::Compute(e.to_string()))?;
            let norm = ps.normalized();
            let rows: Vec<FftRow> = ps
                .phases
                .iter()
                .zip(&norm)
                .map(|(&phase, &power)| FftRow { heta, phase, power })
                .collect();
            let key_config = json!({
                "command": "evolve-fft",
                "params": model.params_json(&params),
                "heta": heta, "m0": m0, "n_seq": n_seq, "pad": pad, "hann": hann,
                "format": out.format,
                "rng_seed": rng_seed,
                "engine_version": su2_butterfly::ENGINE_VERSION,
            });
            let meta = DatasetMeta::new("fft-power", key_config["params"].clone(), rng_seed);
            emit(&TypedDataset { meta, rows }, &out, cli.cache_dir.as_ref(), key_config)
        }

        Command::Verify { j, alpha_scaled } => {
            let basis = SpinBasis::from_j(j)
                .ok_or_else(|| CliError::Config(format!("J = {j} must be a positive multiple of 1/2")))?;
            let results = run_verification(basis.two_j(), alpha_scaled, rng_seed);
            let mut all_ok = true;
            for r in &results {
                println!("{} {} — {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                all_ok &= r.passed;
            }
            if all_ok {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
    }
}

fn merge_simple(
    even: su2_butterfly::spectrum::EigenphaseSet,
    odd: su2_butterfly::spectrum::EigenphaseSet,
) -> su2_butterfly::spectrum::EigenphaseSet {
    let mut entries: Vec<(f64, ParityLabel)> = even
        .phases
        .iter()
        .map(|&p| (p, ParityLabel::Even))
        .chain(odd.phases.iter().map(|&p| (p, ParityLabel::Odd)))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    su2_butterfly::spectrum::EigenphaseSet {
        phases: entries.iter().map(|e| e.0).collect(),
        parities: entries.iter().map(|e| e.1).collect(),
        vectors: None,
        residual: even.residual.max(odd.residual),
    }
}
