//! One binary, one subcommand per experiment. Every report embeds the
//! schema version, library version, resolved configuration and seed, so a
//! run is reproducible from its own output.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::process::ExitCode;
use thinsemi::congruence::ResidueMatrix;
use thinsemi::counting::{congruence_count, exponent_fit, leading_constant};
use thinsemi::dynamics::build_scheme;
use thinsemi::error::Error;
use thinsemi::renewal::{Renewal, TestFn};
use thinsemi::system::{GeneratorSystem, Word};
use thinsemi::thermo::{hausdorff_dimension_with, normalize, Flavor};

#[derive(Parser)]
#[command(name = "thinsemi", version, about = "Semigroup counting, transfer operators and expander experiments in SL2(Z)")]
struct Cli {
    /// Flat key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Root seed for all randomized experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hausdorff dimension of the limit set via the pressure equation.
    Dim(DimArgs),
    /// Congruence-class counting on a radius ladder.
    Count(CountArgs),
    /// Exact renewal-identity residuals at random thresholds.
    RenewalCheck(RenewalArgs),
    /// Decay rate of the congruence transfer operator on the complement.
    TransferGap(TransferArgs),
    /// Convolution flattening of cocycle measures on SL2(Z/q).
    Expander(ExpanderArgs),
    /// Denominator census for restricted continued fractions.
    Zaremba(ZarembaArgs),
    /// Run the full registered invariant suite.
    Validate,
}

#[derive(Args, Clone)]
struct DimArgs {
    /// Continued-fraction alphabet, e.g. 1,2
    #[arg(long)]
    alphabet: Option<String>,
    /// System description (cf:1,2 | schottky-sample[:ext] | @file)
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Also compute the independent Ulam-flavor value and report agreement.
    #[arg(long)]
    cross_check: bool,
    /// Write a sampled pressure curve s,P(-s tau) to this CSV path.
    #[arg(long)]
    pressure_csv: Option<String>,
    /// Number of pressure-curve samples on [0, 1].
    #[arg(long, default_value_t = 21)]
    pressure_samples: usize,
}

#[derive(Args, Clone)]
struct CountArgs {
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    rungs: Option<usize>,
    /// gamma_0 as dot-separated letter indices, e.g. 0.1.2
    #[arg(long)]
    gamma0: Option<String>,
    /// Target class xi as four residues a,b,c,d
    #[arg(long)]
    xi: Option<String>,
    /// CSV output path (columns R,total,class_id,count)
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Args, Clone)]
struct RenewalArgs {
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    a_samples: Option<usize>,
    #[arg(long)]
    q: Option<u32>,
}

#[derive(Args, Clone)]
struct TransferArgs {
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    q: Option<u32>,
    /// Real part a; defaults to the computed dimension delta.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args, Clone)]
struct ExpanderArgs {
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    system: Option<String>,
    /// Comma list of moduli.
    #[arg(long)]
    q_list: Option<String>,
    #[arg(long)]
    r: Option<usize>,
    /// a = delta + a_offset.
    #[arg(long)]
    a_offset: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Also report the Cayley gap per modulus.
    #[arg(long)]
    cayley: bool,
}

#[derive(Args, Clone)]
struct ZarembaArgs {
    #[arg(long)]
    alphabet: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    /// CSV output path for the density table.
    #[arg(long)]
    csv: Option<String>,
    /// List missing denominators below this bound.
    #[arg(long)]
    missing_below: Option<u64>,
}

#[derive(Serialize)]
struct Header {
    schema: u32,
    version: &'static str,
    seed: u64,
    config: BTreeMap<String, String>,
}

fn header(seed: u64, config: BTreeMap<String, String>) -> Header {
    Header {
        schema: 1,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
    }
}

struct Settings {
    file: BTreeMap<String, String>,
    seed: u64,
}

impl Settings {
    fn get<T: std::str::FromStr>(&self, key: &str, cli: Option<T>, default: T) -> Result<T, Error> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad value for `{}`: {}", key, raw))),
            None => Ok(default),
        }
    }

    fn get_opt(&self, key: &str, cli: Option<String>) -> Option<String> {
        cli.or_else(|| self.file.get(key).cloned())
    }
}

fn load_settings(cli: &Cli) -> Result<Settings, Error> {
    let mut file = BTreeMap::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path, e)))?;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key = value: `{}`", line)))?;
            file.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let seed = match cli.seed {
        Some(s) => s,
        None => file
            .get("seed")
            .map(|s| s.parse::<u64>().map_err(|_| Error::Config("bad seed".into())))
            .transpose()?
            .unwrap_or(0),
    };
    Ok(Settings { file, seed })
}

fn parse_system(
    settings: &Settings,
    alphabet: Option<String>,
    system: Option<String>,
) -> Result<GeneratorSystem, Error> {
    if let Some(alpha) = settings.get_opt("alphabet", alphabet) {
        let letters: Vec<i64> = alpha
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Config(format!("bad alphabet entry `{}`", t)))
            })
            .collect::<Result<_, _>>()?;
        return GeneratorSystem::continued_fraction(&letters);
    }
    let spec = settings
        .get_opt("system", system)
        .unwrap_or_else(|| "cf:1,2".to_string());
    if let Some(rest) = spec.strip_prefix("cf:") {
        let letters: Vec<i64> = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Config(format!("bad alphabet entry `{}`", t)))
            })
            .collect::<Result<_, _>>()?;
        GeneratorSystem::continued_fraction(&letters)
    } else if let Some(rest) = spec.strip_prefix("schottky-sample") {
        let ext = rest
            .strip_prefix(':')
            .map(|t| t.parse::<usize>().map_err(|_| Error::Config("bad extension".into())))
            .transpose()?
            .unwrap_or(0);
        GeneratorSystem::sample_schottky(ext)
    } else if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {}", path, e)))?;
        GeneratorSystem::from_config_text(&text)
    } else {
        Err(Error::Config(format!("unknown system `{}`", spec)))
    }
}

fn dimension_of(
    sys: &GeneratorSystem,
    tol: f64,
) -> Result<(f64, thinsemi::thermo::DimensionDiagnostics), Error> {
    let scheme = build_scheme(sys)?;
    hausdorff_dimension_with(&scheme, tol, Flavor::Collocation, &[12, 16, 24, 32, 48, 64])
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    let settings = load_settings(&cli)?;
    if let Some(threads) = cli.threads {
        if threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {}", e)))?;
        }
    }
    match &cli.command {
        Command::Dim(args) => cmd_dim(&settings, args),
        Command::Count(args) => cmd_count(&settings, args),
        Command::RenewalCheck(args) => cmd_renewal(&settings, args),
        Command::TransferGap(args) => cmd_transfer(&settings, args),
        Command::Expander(args) => cmd_expander(&settings, args),
        Command::Zaremba(args) => cmd_zaremba(&settings, args),
        Command::Validate => cmd_validate(),
    }
}

fn cmd_dim(settings: &Settings, args: &DimArgs) -> Result<bool, Error> {
    let sys = parse_system(settings, args.alphabet.clone(), args.system.clone())?;
    let tol = settings.get("tol", args.tol, 1e-8)?;
    let scheme = build_scheme(&sys)?;
    let (delta, diag) =
        hausdorff_dimension_with(&scheme, tol, Flavor::Collocation, &[12, 16, 24, 32, 48, 64])?;
    #[derive(Serialize)]
    struct Report {
        #[serde(flatten)]
        header: Header,
        delta: f64,
        drift: f64,
        ladder: Vec<thinsemi::thermo::DimensionRung>,
        delta_ulam: Option<f64>,
        flavor_agreement: Option<f64>,
    }
    let (delta_ulam, flavor_agreement) = if args.cross_check {
        let (du, _) = hausdorff_dimension_with(&scheme, 1e-6, Flavor::Ulam, &[2048, 4096])?;
        (Some(du), Some((delta - du).abs()))
    } else {
        (None, None)
    };
    if let Some(path) = settings.get_opt("pressure_csv", args.pressure_csv.clone()) {
        let n = args.pressure_samples.max(2);
        let ss: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let curve = thinsemi::thermo::pressure_curve(&scheme, &ss, 24)?;
        let mut csv = String::from("s,pressure\n");
        for (s, p) in curve {
            csv.push_str(&format!("{},{}\n", s, p));
        }
        std::fs::write(&path, csv).map_err(|e| Error::Config(format!("write {}: {}", path, e)))?;
    }
    let mut config = BTreeMap::new();
    config.insert("tol".into(), tol.to_string());
    config.insert("system".into(), describe_system(&sys));
    let report = Report {
        header: header(settings.seed, config),
        delta,
        drift: diag.drift,
        ladder: diag.ladder,
        delta_ulam,
        flavor_agreement,
    };
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(true)
}

fn describe_system(sys: &GeneratorSystem) -> String {
    match sys.kind {
        thinsemi::system::SystemKind::ContinuedFraction => format!(
            "cf:{}",
            sys.alphabet
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        thinsemi::system::SystemKind::Schottky => {
            format!("schottky[{} letters]", sys.letter_count())
        }
    }
}

fn parse_word(text: &str) -> Result<Word, Error> {
    let letters: Vec<u16> = text
        .split('.')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u16>()
                .map_err(|_| Error::Config(format!("bad word letter `{}`", t)))
        })
        .collect::<Result<_, _>>()?;
    Ok(Word(letters))
}

fn cmd_count(settings: &Settings, args: &CountArgs) -> Result<bool, Error> {
    let sys = parse_system(settings, args.alphabet.clone(), args.system.clone())?;
    let q = settings.get("q", args.q, 5u32)?;
    let r_min = settings.get("r_min", args.r_min, 100.0)?;
    let r_max = settings.get("r_max", args.r_max, 10_000.0)?;
    let rungs = settings.get("rungs", args.rungs, 5usize)?;
    if rungs < 1 || r_min <= 0.0 || r_max < r_min {
        return Err(Error::Config("need r_max >= r_min > 0 and rungs >= 1".into()));
    }
    let ladder: Vec<f64> = if rungs == 1 {
        vec![r_max]
    } else {
        (0..rungs)
            .map(|i| {
                let t = i as f64 / (rungs - 1) as f64;
                (r_min.ln() + t * (r_max.ln() - r_min.ln())).exp()
            })
            .collect()
    };
    let gamma0 = settings
        .get_opt("gamma0", args.gamma0.clone())
        .map(|t| parse_word(&t))
        .transpose()?;
    let xi = settings
        .get_opt("xi", args.xi.clone())
        .map(|t| -> Result<ResidueMatrix, Error> {
            let vals: Vec<u32> = t
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Config(format!("bad xi entry `{}`", v)))
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != 4 {
                return Err(Error::Config("xi needs four residues".into()));
            }
            Ok(ResidueMatrix {
                q,
                e: [vals[0] % q, vals[1] % q, vals[2] % q, vals[3] % q],
            })
        })
        .transpose()?;
    let report = congruence_count(&sys, q, &ladder, gamma0.as_ref(), xi.as_ref())?;
    let fit = exponent_fit(&report).ok();
    let c_hat = fit.as_ref().and_then(|f| leading_constant(&report, f.slope));
    // predicted constant from the RPF data, reported next to the fit; the
    // two differ by the norm-vs-distance correction and are never gated
    let c_star = if fit.is_some() {
        let scheme = build_scheme(&sys)?;
        let (delta, _) = hausdorff_dimension_with(
            &scheme,
            1e-8,
            Flavor::Collocation,
            &[16, 24, 32],
        )?;
        let fam = normalize(&scheme, delta, 32)?;
        let k0 = scheme.intervals[0].midpoint_f64();
        Some(thinsemi::counting::predicted_leading_constant(&scheme, &fam, delta, k0)?)
    } else {
        None
    };

    if let Some(path) = settings.get_opt("csv", args.csv.clone()) {
        let mut csv = String::from("R,total,class_id,count\n");
        for (i, r) in report.r_ladder.iter().enumerate() {
            let mut rows: Vec<(u64, u64)> = report.class_counts[i]
                .iter()
                .map(|(k, v)| (*k, *v))
                .collect();
            rows.sort_unstable();
            for (class_id, count) in rows {
                csv.push_str(&format!("{},{},{},{}\n", r, report.totals[i], class_id, count));
            }
        }
        std::fs::write(&path, csv).map_err(|e| Error::Config(format!("write {}: {}", path, e)))?;
    }

    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        header: Header,
        q: u32,
        group_order: u64,
        surjective: bool,
        r_ladder: Vec<f64>,
        totals: Vec<u64>,
        target_key: u64,
        target_class: Vec<u64>,
        deviation_max: Vec<f64>,
        deviation_l2: Vec<f64>,
        fitted_exponent: Option<f64>,
        fitted_stderr: Option<f64>,
        leading_constant: Option<f64>,
        c_star_predicted: Option<f64>,
    }
    let mut config = BTreeMap::new();
    config.insert("q".into(), q.to_string());
    config.insert("system".into(), describe_system(&sys));
    config.insert("rungs".into(), rungs.to_string());
    config.insert("r_min".into(), r_min.to_string());
    config.insert("r_max".into(), r_max.to_string());
    config.insert("include_identity".into(), "false".into());
    if let Some(g) = &gamma0 {
        config.insert("gamma0".into(), format!("{:?}", g.0));
    }
    let out = Out {
        header: header(settings.seed, config),
        q,
        group_order: report.group_order,
        surjective: report.surjective,
        r_ladder: report.r_ladder.clone(),
        totals: report.totals.clone(),
        target_key: report.target_key,
        target_class: report.target_class.clone(),
        deviation_max: report.deviation_max.clone(),
        deviation_l2: report.deviation_l2.clone(),
        fitted_exponent: fit.as_ref().map(|f| f.slope),
        fitted_stderr: fit.as_ref().map(|f| f.slope_stderr),
        leading_constant: c_hat,
        c_star_predicted: c_star,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(true)
}

fn cmd_renewal(settings: &Settings, args: &RenewalArgs) -> Result<bool, Error> {
    use rand::{Rng, SeedableRng};
    let sys = parse_system(settings, args.alphabet.clone(), args.system.clone())?;
    let samples = settings.get("a_samples", args.a_samples, 50usize)?;
    let q = settings.get("q", args.q, 1u32)?;
    let scheme = build_scheme(&sys)?;
    let renewal = Renewal::new(&scheme)?;
    let g = TestFn::one();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(settings.seed);
    let mut max_scalar: f64 = 0.0;
    let mut max_congruence: f64 = 0.0;
    let table = if q >= 2 {
        Some(thinsemi::congruence::GroupTable::build(q)?)
    } else {
        None
    };
    let phi = table.as_ref().map(|t| {
        let mut phi = vec![-1.0 / t.len() as f64; t.len()];
        phi[t.identity_index() as usize] += 1.0;
        phi
    });
    for _ in 0..samples {
        let a = rng.gen_range(-0.5..5.0);
        let iv = rng.gen_range(0..scheme.k());
        let t = rng.gen_range(0.05..0.95);
        let x = scheme.intervals[iv].lo_f + t * scheme.intervals[iv].width_f64();
        max_scalar = max_scalar.max(renewal.renewal_residual(a, x, &g)?);
        if let (Some(tb), Some(ph)) = (&table, &phi) {
            max_congruence =
                max_congruence.max(renewal.renewal_residual_congruence(tb, a, x, &g, ph)?);
        }
    }
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        header: Header,
        q: u32,
        samples: usize,
        max_residual_scalar: f64,
        max_residual_congruence: Option<f64>,
        pass: bool,
    }
    let pass = max_scalar < 1e-10 && (q < 2 || max_congruence < 1e-10);
    let mut config = BTreeMap::new();
    config.insert("q".into(), q.to_string());
    config.insert("a_samples".into(), samples.to_string());
    config.insert("system".into(), describe_system(&sys));
    let out = Out {
        header: header(settings.seed, config),
        q,
        samples,
        max_residual_scalar: max_scalar,
        max_residual_congruence: if q >= 2 { Some(max_congruence) } else { None },
        pass,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(pass)
}

fn cmd_transfer(settings: &Settings, args: &TransferArgs) -> Result<bool, Error> {
    let sys = parse_system(settings, args.alphabet.clone(), args.system.clone())?;
    let q = settings.get("q", args.q, 2u32)?;
    let b = settings.get("b", args.b, 0.0)?;
    let m = settings.get("m", args.m, 40usize)?;
    let trials = settings.get("trials", args.trials, 8usize)?;
    let resolution = settings.get("resolution", args.resolution, 16usize)?;
    let scheme = build_scheme(&sys)?;
    let a = match args.a {
        Some(a) => a,
        None => match settings.file.get("a") {
            Some(raw) => raw
                .parse::<f64>()
                .map_err(|_| Error::Config("bad value for `a`".into()))?,
            None => dimension_of(&sys, 1e-8)?.0,
        },
    };
    let report = thinsemi::congtransfer::complement_decay(
        &scheme,
        q,
        a,
        b,
        m,
        trials,
        resolution,
        settings.seed,
    )?;
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        header: Header,
        #[serde(flatten)]
        report: thinsemi::congtransfer::DecayReport,
        pass: bool,
    }
    let pass = report.rho_hat < 1.0;
    let mut config = BTreeMap::new();
    config.insert("q".into(), q.to_string());
    config.insert("a".into(), a.to_string());
    config.insert("b".into(), b.to_string());
    config.insert("m".into(), m.to_string());
    config.insert("trials".into(), trials.to_string());
    config.insert("resolution".into(), resolution.to_string());
    config.insert("system".into(), describe_system(&sys));
    let out = Out {
        header: header(settings.seed, config),
        report,
        pass,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(pass)
}

fn cmd_expander(settings: &Settings, args: &ExpanderArgs) -> Result<bool, Error> {
    let sys = parse_system(settings, args.alphabet.clone(), args.system.clone())?;
    let q_list: Vec<u32> = settings
        .get_opt("q_list", args.q_list.clone())
        .unwrap_or_else(|| "3,5,7,11,13".into())
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("bad modulus `{}`", t)))
        })
        .collect::<Result<_, _>>()?;
    let r = settings.get("r", args.r, 6usize)?;
    let a_offset = settings.get("a_offset", args.a_offset, 0.0)?;
    let b = settings.get("b", args.b, 0.0)?;
    let scheme = build_scheme(&sys)?;
    let (delta, _) = dimension_of(&sys, 1e-8)?;
    let fam = normalize(&scheme, delta + a_offset, 24)?;
    let x = scheme.intervals[0].midpoint_f64();
    #[derive(Serialize)]
    struct Row {
        q: u32,
        group_order: u64,
        mu_l1: f64,
        support: usize,
        norm: f64,
        ratio: f64,
        kappa1_measured: f64,
        majorant_c: f64,
        cayley_gap: Option<f64>,
    }
    use rayon::prelude::*;
    let rows: Result<Vec<Row>, Error> = q_list
        .par_iter()
        .map(|&q| {
            let rep = thinsemi::expander::build_mu(&scheme, &fam, q, b, x, &[2], r)?;
            let sub = thinsemi::congruence::NewSubspace::build(q)?;
            let (norm, ratio) =
                thinsemi::expander::convolution_norm_on_eq(&rep.mu, &sub, 200, settings.seed)?;
            let cay = if args.cayley {
                Some(thinsemi::expander::cayley_gap(sys.letter_matrices(), q, 500)?.gap)
            } else {
                None
            };
            Ok(Row {
                q,
                group_order: thinsemi::congruence::sl2_order(q as u64),
                mu_l1: rep.mu.l1,
                support: rep.mu.support_len(),
                norm,
                ratio,
                kappa1_measured: rep.kappa1_measured,
                majorant_c: rep.majorant_c,
                cayley_gap: cay,
            })
        })
        .collect();
    let rows = rows?;
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        header: Header,
        delta: f64,
        rows: Vec<Row>,
    }
    let mut config = BTreeMap::new();
    config.insert(
        "q_list".into(),
        q_list
            .iter()
            .map(|q| q.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    config.insert("r".into(), r.to_string());
    config.insert("a_offset".into(), a_offset.to_string());
    config.insert("b".into(), b.to_string());
    config.insert("system".into(), describe_system(&sys));
    let out = Out {
        header: header(settings.seed, config),
        delta,
        rows,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(true)
}

fn cmd_zaremba(settings: &Settings, args: &ZarembaArgs) -> Result<bool, Error> {
    let alpha: Vec<i64> = settings
        .get_opt("alphabet", args.alphabet.clone())
        .unwrap_or_else(|| "1,2".into())
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Config(format!("bad alphabet entry `{}`", t)))
        })
        .collect::<Result<_, _>>()?;
    let n = settings.get("n", args.n, 1000u64)?;
    let missing_below = settings.get("missing_below", args.missing_below, 100u64)?;
    let census = thinsemi::zaremba::denominator_census(&alpha, n)?;
    if let Some(path) = settings.get_opt("csv", args.csv.clone()) {
        let mut csv = String::from("d,in_census\n");
        for d in 1..=n {
            csv.push_str(&format!("{},{}\n", d, census.contains(d) as u8));
        }
        std::fs::write(&path, csv).map_err(|e| Error::Config(format!("write {}: {}", path, e)))?;
    }
    #[derive(Serialize)]
    struct Out {
        #[serde(flatten)]
        header: Header,
        alphabet: Vec<i64>,
        n: u64,
        count: u64,
        density: f64,
        missing_below: u64,
        missing: Vec<u64>,
    }
    let mut config = BTreeMap::new();
    config.insert(
        "alphabet".into(),
        alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","),
    );
    config.insert("n".into(), n.to_string());
    let out = Out {
        header: header(settings.seed, config),
        alphabet: alpha.clone(),
        n,
        count: census.count,
        density: census.density(),
        missing_below,
        missing: census.missing_below(missing_below),
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(true)
}

fn cmd_validate() -> Result<bool, Error> {
    let mut pass = 0usize;
    let mut fail = 0usize;
    for inv in thinsemi::validate::registry() {
        match (inv.run)() {
            Ok(detail) => {
                pass += 1;
                println!("PASS {:<36} [{}] {}", inv.name, inv.module, detail);
            }
            Err(detail) => {
                fail += 1;
                println!("FAIL {:<36} [{}] {}", inv.name, inv.module, detail);
            }
        }
    }
    println!("{} passed, {} failed", pass, fail);
    Ok(fail == 0)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e);
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Resource(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
