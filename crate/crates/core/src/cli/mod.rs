//! `ultradiff` command line.
//!
//! Every subcommand reads an optional JSON [`RunConfig`], writes CSV files to
//! `--out` and exits with 0 on success, 1 when a check fails and 2 on usage or
//! configuration errors. Floats are printed with 17 significant digits; lines
//! starting with `#` carry metadata (version, config hash, seed).

mod config;

pub use config::{RunConfig, SeriesParams, TGrid, Tolerances};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::asymptotics::{self, fit_power_exponent, log_grid_aligned, log_periodicity_deviation, LimitParams};
use crate::diffusion::solve_point_source;
use crate::hierarchy::{validate, Kernel, UltrametricHierarchy};
use crate::oracle;
use crate::scenario::ScenarioKind;
use crate::sink::{invert_transform, laplace_value, survival_talbot, SinkSpectrum};
use crate::spectrum::Spectrum;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Times used by `oracle-check` when the config has no `t_grid`.
pub const ORACLE_TIMES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Parser)]
#[command(name = "ultradiff", version, about = "Diffusion on ultrametric hierarchies")]
pub struct Cli {
    /// JSON run configuration (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Series truncation tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the summability and regularity conditions.
    Validate {
        #[arg(long)]
        require_limit: bool,
        #[arg(long, default_value_t = 32)]
        probe_depth: usize,
    },
    /// Eigenvalues and point-source coefficients.
    Spectrum {
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Point-source solution on spheres over the time grid.
    Solve {
        #[arg(long)]
        spheres: Option<usize>,
    },
    /// Sink poles and survival probability.
    Sink {
        #[arg(long)]
        poles: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Power law with log-periodic modulation against direct evaluation.
    Asym {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
        theorem: u8,
        /// Use the printed prefactors of theorems 3 and 4.
        #[arg(long)]
        as_printed: bool,
    },
    /// Analytic solution against the dense matrix exponential on a finite tree.
    OracleCheck {
        #[arg(long)]
        depth: Option<usize>,
        /// Also compare the survival probability with the configured sink.
        #[arg(long)]
        sink: bool,
        #[arg(long)]
        max_diff: Option<f64>,
    },
    /// Gillespie simulation against analytic occupations.
    Mc {
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        walkers: Option<usize>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECK,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Json(_) | Error::Scenario(_) => EXIT_USAGE,
            _ => EXIT_CHECK,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK,
        Err(e) => {
            eprintln!("ultradiff: error: {}", e.message);
            e.code
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn execute(cli: &Cli) -> CliResult<bool> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Validate {
            require_limit,
            probe_depth,
        } => ctx.validate(*require_limit, *probe_depth),
        Command::Spectrum { levels } => ctx.spectrum(*levels),
        Command::Solve { spheres } => ctx.solve(*spheres),
        Command::Sink { poles, nodes } => ctx.sink(*poles, *nodes),
        Command::Asym { theorem, as_printed } => ctx.asym(*theorem, *as_printed),
        Command::OracleCheck { depth, sink, max_diff } => ctx.oracle_check(*depth, *sink, *max_diff),
        Command::Mc { depth, walkers } => ctx.mc(*depth, *walkers),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    meta: Vec<String>,
    columns: &'static str,
    rows: Vec<String>,
}

impl Csv {
    fn new(ctx: &Context, columns: &'static str) -> Self {
        Self {
            meta: ctx.header.clone(),
            columns,
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.meta.push(format!("# {key} {value}"));
    }

    fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    fn write(&self, dir: &Path, name: &str) -> CliResult<PathBuf> {
        let mut text = String::new();
        for m in &self.meta {
            text.push_str(m);
            text.push('\n');
        }
        text.push_str(self.columns);
        text.push('\n');
        for r in &self.rows {
            text.push_str(r);
            text.push('\n');
        }
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::check(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

struct Context {
    cfg: RunConfig,
    kernel: Kernel,
    out: PathBuf,
    header: Vec<String>,
}

impl Context {
    fn new(cli: &Cli) -> CliResult<Self> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(t) = cli.tol {
            cfg.tolerances.series = t;
        }
        if let Some(o) = &cli.out {
            cfg.output = Some(o.clone());
        }
        cfg.normalise().map_err(|e| CliError::usage(e.to_string()))?;
        let kernel = cfg.scenario.kernel().map_err(|e| CliError::usage(e.to_string()))?;
        let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| CliError::usage(format!("{}: {e}", out.display())))?;
        let header = vec![
            format!("# ultradiff {}", env!("CARGO_PKG_VERSION")),
            format!("# config_sha256 {}", cfg.sha256()),
            format!("# seed {}", cfg.seed),
        ];
        Ok(Self {
            cfg,
            kernel,
            out,
            header,
        })
    }

    fn tol(&self) -> f64 {
        self.cfg.tolerances.series
    }

    fn hierarchy(&self) -> CliResult<UltrametricHierarchy> {
        self.cfg.scenario.hierarchy().map_err(|e| CliError::usage(e.to_string()))
    }

    fn spectrum_of(&self, h: &UltrametricHierarchy) -> CliResult<Spectrum> {
        Ok(Spectrum::new(h, self.kernel, self.tol())?)
    }

    fn grid(&self) -> Vec<f64> {
        self.cfg.t_grid.unwrap_or(TGrid::DEFAULT).points()
    }

    fn sink_rate(&self) -> CliResult<f64> {
        let k = self.cfg.sink_rate;
        if k > 0.0 {
            Ok(k)
        } else {
            Err(CliError::usage("this command needs sink_rate > 0"))
        }
    }

    fn validate(&self, require_limit: bool, probe_depth: usize) -> CliResult<bool> {
        let h = self.hierarchy()?;
        let report = validate(&h, &self.kernel, probe_depth).map_err(|e| CliError::usage(e.to_string()))?;
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
        let ok = report.certified(require_limit);
        if !ok {
            eprintln!(
                "ultradiff: not certified: summability {:?}, bounded {:?}, limit {:?}",
                report.restr.verdict, report.bounded.verdict, report.limit.verdict
            );
        }
        Ok(ok)
    }

    fn spectrum(&self, levels: Option<usize>) -> CliResult<bool> {
        let h = self.hierarchy()?;
        let spec = self.spectrum_of(&h)?;
        let n = levels.unwrap_or(if spec.is_finite_space() { spec.len() } else { spec.len().min(40) });
        let c = spec.point_source();
        let mut csv = Csv::new(self, "i,lambda,tail_bound,c_i");
        for i in 1..=n {
            let l = spec.eigenvalue(i)?;
            csv.row(&[i.to_string(), num(l.value), num(l.bound), num(c[i - 1])]);
        }
        if spec.is_finite_space() && n == spec.len() {
            // Constant mode of the finite space.
            csv.row(&[(n + 1).to_string(), num(0.0), num(0.0), num(c[n])]);
        }
        csv.write(&self.out, "spectrum.csv")?;
        Ok(true)
    }

    fn solve(&self, spheres: Option<usize>) -> CliResult<bool> {
        let h = self.hierarchy()?;
        let spec = self.spectrum_of(&h)?;
        let k_max = spheres.unwrap_or(self.cfg.spheres);
        let mut csv = Csv::new(self, "t,k,f_point,f_sphere_mass,terms_used,residual_bound");
        for t in self.grid() {
            let p = solve_point_source(&spec, t, k_max, self.tol())?;
            for k in 0..=k_max {
                csv.row(&[
                    num(t),
                    k.to_string(),
                    num(p.values[k]),
                    num(p.masses[k]),
                    p.terms_used.to_string(),
                    num(p.residual_bound),
                ]);
            }
        }
        csv.write(&self.out, "solve.csv")?;
        Ok(true)
    }

    fn sink(&self, poles: Option<usize>, nodes: Option<usize>) -> CliResult<bool> {
        let k = self.sink_rate()?;
        let h = self.hierarchy()?;
        let spec = self.spectrum_of(&h)?;
        let n = poles.unwrap_or(self.cfg.poles).min(spec.mode_count());
        let nodes = nodes.unwrap_or(self.cfg.talbot_nodes);
        let ss = SinkSpectrum::new(&spec, k, Some(n), self.tol())?;

        let mut pc = Csv::new(self, "i,lambda_i,nu_i,delta_i,b_i,residual");
        let identity = ss.survival_mass() - 1.0;
        pc.meta("k", num(k));
        pc.meta("interlaced", ss.interlaced());
        pc.meta("k_sum_b_over_nu_minus_1", num(identity));
        for p in ss.poles() {
            pc.row(&[
                p.index.to_string(),
                num(p.lambda),
                num(p.nu),
                num(p.delta),
                num(p.b),
                num(p.residual),
            ]);
        }

        let mut sc = Csv::new(self, "t,S_polesum,S_talbot,abs_diff");
        let mut worst = 0.0_f64;
        let pole_tol = self.tol().max(1e-12);
        for t in self.grid() {
            let a = ss.survival(t, pole_tol)?.value;
            let b = survival_talbot(&spec, k, t, nodes, self.tol())?;
            worst = worst.max((a - b).abs() / a.abs());
            sc.row(&[num(t), num(a), num(b), num((a - b).abs())]);
        }
        sc.meta("max_rel_diff", num(worst));
        pc.write(&self.out, "poles.csv")?;
        sc.write(&self.out, "survival.csv")?;
        let ok = ss.interlaced() && identity.abs() <= 1e-8 && worst <= 1e-6;
        if !ok {
            eprintln!(
                "ultradiff: sink check failed: interlaced {}, |k sum b/nu - 1| = {:e}, max relative Talbot diff {:e}",
                ss.interlaced(),
                identity.abs(),
                worst
            );
        }
        Ok(ok)
    }

    fn limit_params(&self, h: &UltrametricHierarchy) -> CliResult<LimitParams> {
        let s = &self.cfg.scenario;
        match s.kind {
            ScenarioKind::SelfSimilar => Ok(LimitParams::self_similar(
                s.p.unwrap_or_default(),
                s.xi.unwrap_or_default(),
            )),
            ScenarioKind::Perturbed => {
                let r = validate(h, &self.kernel, 64)?;
                if !r.limit.verdict.ok() {
                    return Err(CliError::check(format!(
                        "limit scenario not certified ({:?}); asymptotic laws need converging N_i e^(-theta i) and d_i - xi i",
                        r.limit.verdict
                    )));
                }
                Ok(LimitParams {
                    theta: r.bounded.theta,
                    xi: r.bounded.xi,
                    c: r.limit.c,
                    d: r.limit.d,
                })
            }
            ScenarioKind::Tree => Err(CliError::usage("asymptotic laws need an infinite hierarchy, not a tree")),
        }
    }

    fn asym(&self, theorem: u8, as_printed: bool) -> CliResult<bool> {
        let modes = self.cfg.modes;
        let alpha = self.kernel.alpha();
        let mut extra: Vec<(String, String)> = Vec::new();
        // Model first so a hypothesis violation is reported before any work.
        let (model, default_span, y_fn): (_, (f64, f64), Box<dyn Fn(f64) -> crate::Result<f64>>) = match theorem {
            2 => {
                let SeriesParams { a, b } = self.cfg.series;
                let model = asymptotics::theorem2(a, b, modes)?;
                let witness = asymptotics::DecayWitness {
                    a,
                    b,
                    bound: 1.0 + 1e-9,
                };
                let y = move |t: f64| {
                    asymptotics::brute_series(|m| a.powi(-(m as i32)), |m| b.powi(-(m as i32)), witness, t, 1e-30)
                        .map(|v| v.value)
                };
                (model, (1e6, 1e10), Box::new(y))
            }
            3 | 4 => {
                let h = self.hierarchy()?;
                let lim = self.limit_params(&h)?;
                let spec = self.spectrum_of(&h)?;
                if theorem == 3 {
                    let model = if as_printed {
                        asymptotics::theorem3_as_printed(&lim, alpha, modes)?
                    } else {
                        asymptotics::theorem3(&lim, alpha, modes)?
                    };
                    let tol = self.tol();
                    let y = move |t: f64| crate::diffusion::center_value(&spec, t, tol).map(|v| v.value);
                    (model, (1e3, 1e7), Box::new(y))
                } else {
                    let k = self.sink_rate()?;
                    let delta = asymptotics::limiting_delta(lim.theta, alpha * lim.xi)?;
                    let model = if as_printed {
                        asymptotics::theorem4_as_printed(&lim, alpha, k, delta, modes)?
                    } else {
                        asymptotics::theorem4(&lim, alpha, k, delta, modes)?
                    };
                    let ss = SinkSpectrum::new(&spec, k, None, self.tol())?;
                    let ds = ss.delta_sequence();
                    extra.push(("delta_limit".into(), num(delta)));
                    extra.push(("delta_estimate".into(), num(ds.limit_estimate)));
                    let pole_tol = self.tol().max(1e-12);
                    let y = move |t: f64| ss.survival(t, pole_tol).map(|v| v.value);
                    (model, (1e3, 1e7), Box::new(y))
                }
            }
            _ => return Err(CliError::usage(format!("unknown theorem {theorem}"))),
        };

        let t: Vec<f64> = match self.cfg.t_grid {
            Some(g) => g.points(),
            None => log_grid_aligned(default_span.0, default_span.1, model.log_period, 16),
        };
        let y: Vec<f64> = t.iter().map(|&ti| y_fn(ti)).collect::<crate::Result<_>>()?;
        let fit = fit_power_exponent(&t, &y, Some(model.log_period))?;
        let u: Vec<f64> = t.iter().zip(&y).map(|(ti, yi)| yi * ti.powf(model.beta)).collect();
        let g: Vec<f64> = t.iter().map(|&ti| model.modulation(ti)).collect::<crate::Result<_>>()?;
        let dev = log_periodicity_deviation(&t, &u, model.kappa())?;

        let mut csv = Csv::new(self, "t,y,beta_hat,u=y*t^beta,modulation_formula,ratio");
        csv.meta("theorem", theorem);
        csv.meta("as_printed", as_printed);
        csv.meta("beta", num(model.beta));
        csv.meta("beta_hat_stderr", num(fit.stderr));
        csv.meta("kappa", num(model.kappa()));
        csv.meta("log_periodicity_deviation", num(dev));
        for (k, v) in &extra {
            csv.meta(k, v);
        }
        for i in 0..t.len() {
            csv.row(&[num(t[i]), num(y[i]), num(fit.beta), num(u[i]), num(g[i]), num(u[i] / g[i])]);
        }
        csv.write(&self.out, &format!("asym_theorem{theorem}.csv"))?;
        let rel = (fit.beta - model.beta).abs() / model.beta;
        if rel > 0.02 {
            eprintln!(
                "ultradiff: fitted exponent {} is {:.2}% away from {}",
                fit.beta,
                100.0 * rel,
                model.beta
            );
            return Ok(false);
        }
        Ok(true)
    }

    fn oracle_check(&self, depth: Option<usize>, with_sink: bool, max_diff: Option<f64>) -> CliResult<bool> {
        let depth = depth.unwrap_or(self.cfg.depth);
        let limit = max_diff.unwrap_or(self.cfg.tolerances.oracle);
        let tree = self.cfg.scenario.finite_tree(depth)?;
        let h = tree.hierarchy()?;
        let spec = self.spectrum_of(&h)?;
        let levels = tree.levels();
        let sizes: Vec<f64> = (0..=levels).map(|j| h.sphere_size(j)).collect::<crate::Result<_>>()?;
        let times = self.cfg.t_grid.map(|g| g.points()).unwrap_or_else(|| ORACLE_TIMES.to_vec());
        let f0 = oracle::point_source(&tree);
        let free = oracle::build_rate_matrix(&tree, self.kernel, 0.0)?;
        let sunk = if with_sink {
            let k = self.sink_rate()?;
            let ss = SinkSpectrum::new(&spec, k, None, self.tol())?;
            Some((oracle::build_rate_matrix(&tree, self.kernel, k)?, ss))
        } else {
            None
        };

        let mut csv = Csv::new(self, "t,k,analytic,oracle,abs_diff");
        csv.meta("depth", depth);
        csv.meta("leaves", tree.leaf_count());
        let mut worst = 0.0_f64;
        for &t in &times {
            let p = solve_point_source(&spec, t, levels, self.tol())?;
            let m = oracle::project(&tree, &oracle::evolve(&free, &f0, t)?);
            for k in 0..=levels {
                let (a, o) = (p.values[k], m[k] / sizes[k]);
                worst = worst.max((a - o).abs());
                csv.row(&[num(t), k.to_string(), num(a), num(o), num((a - o).abs())]);
            }
            if let Some((g, ss)) = &sunk {
                let a = ss.survival(t, self.tol().max(1e-12))?.value;
                let o: f64 = oracle::evolve(g, &f0, t)?.iter().sum();
                worst = worst.max((a - o).abs());
                csv.row(&[num(t), "S".into(), num(a), num(o), num((a - o).abs())]);
            }
        }
        csv.meta("max_abs_diff", num(worst));
        csv.write(&self.out, "oracle_check.csv")?;
        let ok = worst <= limit;
        if !ok {
            eprintln!("ultradiff: oracle mismatch {worst:e} exceeds {limit:e}");
        }
        Ok(ok)
    }

    fn mc(&self, depth: Option<usize>, walkers: Option<usize>) -> CliResult<bool> {
        let depth = depth.unwrap_or(self.cfg.depth);
        let walkers = walkers.unwrap_or(self.cfg.walkers);
        let k = self.cfg.sink_rate;
        let tree = self.cfg.scenario.finite_tree(depth)?;
        let h = tree.hierarchy()?;
        let spec = self.spectrum_of(&h)?;
        let levels = tree.levels();
        let times = &self.cfg.mc_times;
        let res = oracle::gillespie(&tree, self.kernel, k, walkers, times, self.cfg.seed)?;
        let ss = if k > 0.0 {
            Some(SinkSpectrum::new(&spec, k, None, self.tol())?)
        } else {
            None
        };
        let c = spec.point_source();
        let w = walkers as f64;
        let z_of = |emp: f64, an: f64| -> (f64, f64) {
            let se = (an.clamp(0.0, 1.0) * (1.0 - an.clamp(0.0, 1.0)) / w).sqrt();
            let z = if se > 0.0 {
                (emp - an) / se
            } else if emp == an {
                0.0
            } else {
                f64::INFINITY
            };
            (se, z)
        };

        let mut csv = Csv::new(self, "t,k,empirical,analytic,stderr,z");
        csv.meta("depth", depth);
        csv.meta("walkers", walkers);
        csv.meta("sink_rate", num(k));
        let mut worst = 0.0_f64;
        for (i, &t) in times.iter().enumerate() {
            let analytic: Vec<f64> = if k > 0.0 {
                (0..=levels)
                    .map(|j| {
                        let v = invert_transform(|s| laplace_value(&spec, k, &c, j, s, self.tol()), t, 32)?;
                        Ok(v * h.sphere_size(j)?)
                    })
                    .collect::<crate::Result<_>>()?
            } else {
                solve_point_source(&spec, t, levels, self.tol())?.masses
            };
            for (j, &an) in analytic.iter().enumerate() {
                let emp = res.sphere_fraction(i, j).0;
                let (se, z) = z_of(emp, an);
                worst = worst.max(z.abs());
                csv.row(&[num(t), j.to_string(), num(emp), num(an), num(se), num(z)]);
            }
            if let Some(ss) = &ss {
                let an = ss.survival(t, self.tol().max(1e-12))?.value;
                let emp = res.survival_fraction(i).0;
                let (se, z) = z_of(emp, an);
                worst = worst.max(z.abs());
                csv.row(&[num(t), "S".into(), num(emp), num(an), num(se), num(z)]);
            }
        }
        csv.meta("max_abs_z", num(worst));
        csv.write(&self.out, "mc.csv")?;
        let ok = worst <= self.cfg.tolerances.z_max;
        if !ok {
            eprintln!("ultradiff: Monte Carlo |z| = {worst:.3} exceeds {}", self.cfg.tolerances.z_max);
        }
        Ok(ok)
    }
}
