//! Subcommand implementations.

use std::fs;
use std::sync::Mutex;

use bandit_lan::lan::ExpansionReport;
use bandit_lan::monte_carlo::{self, CellSummary, PullScale, StudyConfig};
use bandit_lan::stats::{self, HistogramSpec};
use bandit_lan::ReplicationRecord;

use crate::config::ConfigMap;
use crate::error::CliError;
use crate::output::{opt_real, real, RunDir};
use crate::selftest;
use crate::{Command, CommonArgs};

pub fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => simulate(args, false),
        Command::ReproduceFig(args) => simulate(args, true),
        Command::LanCheck(args) => lan_check(args),
        Command::Convergence(args) => convergence(args),
        Command::Selftest => run_selftest(),
        Command::Keys => {
            for (key, help) in crate::config::KNOWN_KEYS {
                println!("{key:<26} {help}");
            }
            Ok(())
        }
    }
}

/// Defaults of the histogram study: Thompson, logistic arms, `T = 500`,
/// `m1 ∈ {2, 10, 50, 75}` and 10,000 replications.
pub fn study_defaults(map: &mut ConfigMap) {
    map.set_default("policy.kind", "thompson");
    map.set_default("arms.family", "logistic_unit_var");
    map.set_default("study.T", "500");
    map.set_default("study.m1", "2,10,50,75");
    map.set_default("study.replications", "10000");
    map.set_default("study.base_seed", "2026");
    map.set_default("study.gap_scaling", "sqrt_t");
}

pub fn lan_check_defaults(map: &mut ConfigMap) {
    map.set_default("policy.kind", "rct");
    map.set_default("rct.weights", "0.5,0.5");
    map.set_default("arms.family", "logistic_unit_var");
    map.set_default("study.m1", "1");
    map.set_default("study.gap_scaling", "fixed");
    map.set_default("study.replications", "500");
    map.set_default("study.base_seed", "2026");
    map.set_default("lan.h", "1,1");
    map.set_default("lan.regime", "case_b_star");
    map.set_default("lan.info_weights", "empirical");
    map.set_default("lan.t_ladder", "200,2000,20000");
}

pub fn convergence_defaults(map: &mut ConfigMap) {
    map.set_default("policy.kind", "thompson");
    map.set_default("arms.family", "gaussian");
    map.set_default("arms.sigma2", "1");
    map.set_default("study.m1", "1");
    map.set_default("study.gap_scaling", "fixed");
    map.set_default("study.T", "100000");
    map.set_default("study.replications", "200");
    map.set_default("study.base_seed", "2026");
    map.set_default("convergence.checkpoints", "1000,10000,100000");
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn threads_used(threads: Option<usize>) -> usize {
    match threads {
        Some(n) if n > 0 => n,
        _ => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

fn records_csv(config: &StudyConfig, records: &[ReplicationRecord]) -> (Vec<String>, Vec<Vec<String>>) {
    let k = config.arms;
    let mut header: Vec<String> = ["policy", "m1", "T", "rep"].map(String::from).to_vec();
    header.extend((1..=k).map(|i| format!("D{i}")));
    header.extend((1..=k).map(|i| format!("tau_mu{i}")));
    header.extend(["tau_delta", "exact_llr", "quad_llr", "residual"].map(String::from));
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![config.policy.name().to_string(), real(r.m1), config.horizon.to_string(), r.rep.to_string()];
            row.extend(r.pulls.iter().map(u64::to_string));
            row.extend(r.tau_mu.iter().map(|&t| opt_real(t)));
            row.push(opt_real(r.tau_delta));
            row.push(opt_real(r.lan.map(|l| l.exact_llr)));
            row.push(opt_real(r.lan.map(|l| l.quad_llr)));
            row.push(opt_real(r.lan.map(|l| l.residual)));
            row
        })
        .collect();
    (header, rows)
}

fn summary_csv(config: &StudyConfig, summaries: &[CellSummary]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["policy", "m1", "T", "n_reps"].map(String::from).to_vec();
    header.extend((1..=config.arms).map(|i| format!("ks_tau_mu{i}")));
    header.extend(["ks_tau_delta", "n_missing", "median_D2", "q25_D2", "q75_D2"].map(String::from));
    let rows = summaries
        .iter()
        .map(|s| {
            let mut row = vec![config.policy.name().to_string(), real(s.m1), s.horizon.to_string(), s.n_reps.to_string()];
            row.extend(s.ks_tau_mu.iter().map(|ks| opt_real(ks.map(|k| k.distance))));
            row.push(opt_real(s.ks_tau_delta.map(|k| k.distance)));
            row.push(s.n_missing.to_string());
            row.extend([s.median_d2, s.q25_d2, s.q75_d2].map(real));
            row
        })
        .collect();
    (header, rows)
}

fn histogram_rows(samples: &[f64], spec: HistogramSpec) -> Result<Vec<Vec<String>>, CliError> {
    let counts = stats::histogram(samples, spec)?;
    let mut rows = Vec::with_capacity(counts.len());
    rows.push(vec![real(f64::NEG_INFINITY), real(spec.lo), counts[0].to_string()]);
    for i in 0..spec.bins {
        let (lo, hi) = spec.edges(i);
        rows.push(vec![real(lo), real(hi), counts[i + 1].to_string()]);
    }
    rows.push(vec![real(spec.hi), real(f64::INFINITY), counts[spec.bins + 1].to_string()]);
    Ok(rows)
}

/// Histogram file name for one statistic of one cell.
pub fn histogram_name(policy: &str, m1: f64, stat: &str) -> String {
    format!("hist_{policy}_m1-{m1}_{stat}.csv")
}

fn write_histograms(run: &mut RunDir, config: &StudyConfig, records: &[ReplicationRecord], spec: HistogramSpec) -> Result<(), CliError> {
    if config.arms != 2 {
        return Err(CliError::Config("reproduce-fig needs a two-armed design".into()));
    }
    let policy = config.policy.name();
    for (cell, &m1) in config.m1_grid.iter().enumerate() {
        let rows: Vec<&ReplicationRecord> = records.iter().filter(|r| r.cell == cell).collect();
        let d2: Vec<f64> = rows.iter().map(|r| r.pulls[1] as f64).collect();
        let panels: [(&str, Vec<f64>, HistogramSpec); 4] = [
            ("D2", d2, HistogramSpec::counts(config.horizon as u64)),
            ("tau_mu1", rows.iter().filter_map(|r| r.tau_mu[0]).collect(), spec),
            ("tau_mu2", rows.iter().filter_map(|r| r.tau_mu[1]).collect(), spec),
            ("tau_delta", rows.iter().filter_map(|r| r.tau_delta).collect(), spec),
        ];
        for (stat, samples, spec) in panels {
            let body = histogram_rows(&samples, spec)?;
            run.write_csv(&histogram_name(policy, m1, stat), &["bin_lo", "bin_hi", "count"], body)?;
        }
    }
    Ok(())
}

fn write_table(run: &mut RunDir, name: &str, (header, rows): (Vec<String>, Vec<Vec<String>>)) -> Result<(), CliError> {
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    run.write_csv(name, &header, rows)
}

fn simulate(args: &CommonArgs, figure: bool) -> Result<(), CliError> {
    let mut map = args.load()?;
    study_defaults(&mut map);
    let config = map.study()?;
    let hist_spec = map.histogram_spec()?;
    let dump = map.dump_trajectories()?;
    let name = if figure { "reproduce-fig" } else { "simulate" };
    let mut run = RunDir::create(&args.out, name, &map)?;

    let traj_dir = run.path().join("trajectories");
    if dump {
        fs::create_dir_all(&traj_dir).map_err(|e| CliError::io(&traj_dir, e))?;
    }
    let dump_error: Mutex<Option<CliError>> = Mutex::new(None);
    let hook = |cell: usize, rep: usize, traj: &bandit_lan::Trajectory| {
        if !dump {
            return;
        }
        let path = traj_dir.join(format!("cell{cell}_rep{rep}.csv"));
        let result = fs::File::create(&path)
            .and_then(|f| traj.write_csv(std::io::BufWriter::new(f)))
            .map_err(|e| CliError::io(&path, e));
        if let Err(e) = result {
            dump_error.lock().expect("lock").get_or_insert(e);
        }
    };
    let records = with_pool(args.threads, || monte_carlo::run_study_with(&config, &hook))??;
    if let Some(e) = dump_error.into_inner().expect("lock") {
        return Err(e);
    }
    if dump {
        for r in &records {
            run.register(format!("trajectories/cell{}_rep{}.csv", r.cell, r.rep));
        }
    }

    let summaries = monte_carlo::summarize(&records, &config);
    write_table(&mut run, "records.csv", records_csv(&config, &records))?;
    write_table(&mut run, "summary.csv", summary_csv(&config, &summaries))?;
    if figure {
        write_histograms(&mut run, &config, &records, hist_spec)?;
    }
    for s in &summaries {
        let ks: Vec<String> = s.ks_tau_mu.iter().map(|k| k.map_or("-".into(), |k| format!("{:.4}", k.distance))).collect();
        println!(
            "m1={} KS(tau_mu)=[{}] KS(tau_delta)={} missing={} median D2={}",
            s.m1,
            ks.join(", "),
            s.ks_tau_delta.map_or("-".into(), |k| format!("{:.4}", k.distance)),
            s.n_missing,
            s.median_d2
        );
    }
    let path = run.finish(&map, threads_used(args.threads))?;
    println!("{}", path.display());
    Ok(())
}

fn lan_check(args: &CommonArgs) -> Result<(), CliError> {
    let mut map = args.load()?;
    lan_check_defaults(&mut map);
    // study.T is taken from the ladder; fill it so the study validates
    let ladder = map.t_ladder()?;
    if ladder.is_empty() {
        return Err(CliError::Config("lan.t_ladder is empty".into()));
    }
    map.set_default("study.T", ladder[0].to_string());
    let base = map.study()?;
    let lan = base.lan.clone().ok_or_else(|| CliError::Config("lan-check needs lan.h".into()))?;
    if base.cells() != 1 {
        return Err(CliError::Config("lan-check uses a single study.m1 value".into()));
    }
    let mut run = RunDir::create(&args.out, "lan-check", &map)?;
    let p = base.arms;

    let mut header: Vec<String> = ["seed", "T", "exact_llr", "quad_llr", "residual"].map(String::from).to_vec();
    header.extend((1..=p).map(|j| format!("delta{j}")));
    for a in 1..=p {
        header.extend((1..=p).map(|b| format!("J{a}{b}")));
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &horizon in &ladder {
        let config = StudyConfig { horizon, ..base.clone() };
        let reports = with_pool(args.threads, || {
            monte_carlo::map_replications(&config, |e, traj| {
                let r = ExpansionReport::compute(traj, e.theta(), e.arms(), &lan.h, lan.regime, &lan.weights)?;
                Ok((e.seed(), r))
            })
        })??;
        let mut abs: Vec<f64> = Vec::with_capacity(reports.len());
        for (seed, r) in &reports {
            let mut row = vec![seed.to_string(), horizon.to_string(), real(r.exact_llr), real(r.quad_llr), real(r.residual)];
            row.extend(r.central_sequence.iter().map(|&v| real(v)));
            // row-major flattening
            for a in 0..p {
                row.extend((0..p).map(|b| real(r.info_matrix[(a, b)])));
            }
            rows.push(row);
            abs.push(r.residual.abs());
        }
        abs.sort_by(f64::total_cmp);
        let median = stats::quantile_sorted(&abs, 0.5);
        println!("T={horizon} median |residual|={median:.6}");
        summary.push(vec![
            horizon.to_string(),
            abs.len().to_string(),
            real(median),
            real(stats::quantile_sorted(&abs, 0.25)),
            real(stats::quantile_sorted(&abs, 0.75)),
        ]);
    }
    write_table(&mut run, "lan_check.csv", (header, rows))?;
    run.write_csv("lan_check_summary.csv", &["T", "n_reps", "median_abs_residual", "q25_abs_residual", "q75_abs_residual"], summary)?;
    let path = run.finish(&map, threads_used(args.threads))?;
    println!("{}", path.display());
    Ok(())
}

fn convergence(args: &CommonArgs) -> Result<(), CliError> {
    let mut map = args.load()?;
    convergence_defaults(&mut map);
    let config = map.study()?;
    let checkpoints = map.checkpoints()?.unwrap_or_default();
    let mut run = RunDir::create(&args.out, "convergence", &map)?;
    let rows = with_pool(args.threads, || monte_carlo::convergence_diag(&config, &checkpoints))??;
    let body = rows
        .iter()
        .map(|r| {
            println!(
                "m1={} T'={} arm={} median={:.4} [{:.4}, {:.4}] reference={}",
                r.m1,
                r.checkpoint,
                r.arm + 1,
                r.median,
                r.q25,
                r.q75,
                r.reference.map_or("-".into(), |v| format!("{v:.4}"))
            );
            vec![
                config.policy.name().to_string(),
                real(r.m1),
                r.checkpoint.to_string(),
                (r.arm + 1).to_string(),
                match r.scale {
                    PullScale::LogT => "log_t".to_string(),
                    PullScale::Linear => "linear".to_string(),
                },
                real(r.median),
                real(r.q25),
                real(r.q75),
                opt_real(r.reference),
            ]
        })
        .collect::<Vec<_>>();
    run.write_csv(
        "convergence.csv",
        &["policy", "m1", "checkpoint", "arm", "scale", "median", "q25", "q75", "reference"],
        body,
    )?;
    let path = run.finish(&map, threads_used(args.threads))?;
    println!("{}", path.display());
    Ok(())
}

fn run_selftest() -> Result<(), CliError> {
    let checks = selftest::run_checks()?;
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        if !c.passed() {
            failed += 1;
        }
        println!("{status} {:<36} {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance);
    }
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} selftest check(s) failed")));
    }
    Ok(())
}
