use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use golay_noma::analysis::{coherence_by_rank, coherence_exact, max_papr, max_symplectic_rank};
use golay_noma::gf2::{
    format_permutation_list, parse_permutation_list, quadratic_matrix, truth_table,
};
use golay_noma::golay::golay_sequence;
use golay_noma::matrix::Provenance;
use golay_noma::rng::derive_seed;
use golay_noma::search::{
    estimate_rank_pmf, exact_rank_pmf, min_trials, search_permutation_set, RankPmf,
};
use golay_noma::sim::{
    build_matrix, run_campaign, write_campaign_csv, CampaignGrid, OneOrMany, ScenarioConfig,
};
use golay_noma::tables::{
    rank_probabilities, EXAMPLE_C, EXAMPLE_PERMUTATION, EXAMPLE_QUADRATIC, EXAMPLE_SEQUENCE,
    PERMUTATION_SETS,
};
use golay_noma::{Family, Permutation, SpreadingMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    CoherenceArgs, Failure, GenArgs, MatrixArgs, MatrixFormat, PaprArgs, PrTableArgs, SearchArgs,
    SimulateArgs, VerifyArgs,
};

type Outcome = Result<(), Failure>;

/// Largest trial budget derived from `--eps` before asking for `--trials`.
const MAX_DERIVED_TRIALS: u64 = 100_000_000;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("note: no --seed given, using {s}");
        s
    })
}

/// Reads a JSON config. A sidecar (`{"command": .., "config": ..}`) yields its
/// `config` member after checking the command name.
fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)?;
    let mut doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", path.display()))
        .map_err(Failure::Usage)?;
    if let Some(cmd) = doc.get("command").and_then(Value::as_str) {
        if cmd != command {
            return Err(usage(format!(
                "{} was written by `{cmd}`, not `{command}`",
                path.display()
            )));
        }
        doc = doc
            .get_mut("config")
            .map(Value::take)
            .ok_or_else(|| usage(format!("{} has no config member", path.display())))?;
    }
    serde_json::from_value(doc)
        .with_context(|| format!("malformed config in {}", path.display()))
        .map_err(Failure::Usage)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Records the resolved configuration next to `out`, or on stderr when the
/// output went to stdout.
fn write_sidecar<C: Serialize>(
    out: Option<&Path>,
    command: &str,
    config: &C,
    extra: Value,
) -> Outcome {
    let mut doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.into()))?;
    match out {
        Some(p) => {
            let path = sidecar_path(p);
            std::fs::write(&path, text + "\n")
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Fills in permutations from `--perms` and the seed, then builds the matrix.
fn resolve_matrix(args: &mut MatrixArgs) -> Result<SpreadingMatrix, Failure> {
    let m = args.m.ok_or_else(|| usage("--m is required"))?;
    if !(1..=20).contains(&m) {
        return Err(usage(format!("--m {m} outside 1..=20")));
    }
    if let Some(path) = &args.perms {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(Failure::Usage)?;
        args.permutations = Some(parse_permutation_list(&text)?);
    }
    if args.family != Family::Golay && args.permutations.is_some() {
        return Err(usage("permutations only apply to the golay family"));
    }
    if args.family != Family::Zc && args.roots.is_some() {
        return Err(usage("roots only apply to the zc family"));
    }
    let seed = resolve_seed(args.seed);
    args.seed = Some(seed);
    let mut cfg = ScenarioConfig::new(args.family, 1usize << m, args.l, 0.1, 0.0, 1, seed);
    cfg.permutations = args.permutations.clone();
    cfg.zc_roots = args.roots.clone();
    let phi = build_matrix(&cfg)?;
    if let Provenance::Golay { permutations } = phi.provenance() {
        args.permutations = Some(permutations.clone());
    }
    Ok(phi)
}

fn provenance_json(phi: &SpreadingMatrix) -> Value {
    json!({ "M": phi.rows(), "N": phi.cols(), "provenance": phi.provenance() })
}

pub fn gen(mut args: GenArgs) -> Outcome {
    let out = args.out.take();
    if let Some(path) = &args.config {
        args = load_config(path, "gen")?;
    }
    let phi = resolve_matrix(&mut args.matrix)?;
    match (args.format, &out) {
        (MatrixFormat::Bin, None) => return Err(usage("binary output needs --out")),
        (MatrixFormat::Bin, Some(p)) => {
            let mut w = open_output(Some(p))?;
            phi.write_binary(&mut w)?;
            w.flush()?;
        }
        (MatrixFormat::Csv, _) => {
            let mut w = open_output(out.as_deref())?;
            phi.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    write_sidecar(out.as_deref(), "gen", &args, provenance_json(&phi))
}

struct MatrixRow {
    family: Family,
    m: usize,
    n: usize,
    l: usize,
    mu: Option<f64>,
    r_min: Option<usize>,
    max_papr_db: Option<f64>,
}

fn write_matrix_rows(out: Option<&Path>, rows: &[MatrixRow]) -> Outcome {
    let mut w = csv::Writer::from_writer(open_output(out)?);
    let res = (|| -> csv::Result<()> {
        w.write_record(["family", "M", "N", "L", "mu", "r_min", "max_papr_db"])?;
        let opt = |x: Option<String>| x.unwrap_or_default();
        for r in rows {
            w.write_record([
                r.family.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.l.to_string(),
                opt(r.mu.map(|v| v.to_string())),
                opt(r.r_min.map(|v| v.to_string())),
                opt(r.max_papr_db.map(|v| v.to_string())),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(|e| Failure::Runtime(e.into()))
}

/// Rank-formula coherence for Golay sets.
fn golay_coherence(args: &MatrixArgs) -> Result<(f64, Option<usize>), Failure> {
    let gamma = args.permutations.as_deref().unwrap_or_default();
    let rep = coherence_by_rank(gamma)?;
    Ok((rep.mu, rep.r_min))
}

pub fn coherence(mut args: CoherenceArgs) -> Outcome {
    let out = args.out.take();
    if let Some(path) = &args.config {
        args = load_config(path, "coherence")?;
    }
    let phi = resolve_matrix(&mut args.matrix)?;
    let (mu, r_min) = if args.matrix.family == Family::Golay {
        let (mu, r_min) = golay_coherence(&args.matrix)?;
        if args.exact {
            let exact = coherence_exact(&phi)?.mu;
            if exact != mu {
                return Err(Failure::Runtime(anyhow!(
                    "exhaustive coherence {exact} disagrees with rank formula {mu}"
                )));
            }
        }
        (mu, r_min)
    } else {
        (coherence_exact(&phi)?.mu, None)
    };
    let (papr, _) = max_papr(&phi, args.oversample)?;
    let row = MatrixRow {
        family: args.matrix.family,
        m: phi.rows(),
        n: phi.cols(),
        l: args.matrix.l,
        mu: Some(mu),
        r_min,
        max_papr_db: Some(papr.papr_db),
    };
    write_matrix_rows(out.as_deref(), &[row])?;
    write_sidecar(out.as_deref(), "coherence", &args, provenance_json(&phi))
}

pub fn papr(mut args: PaprArgs) -> Outcome {
    let out = args.out.take();
    if let Some(path) = &args.config {
        args = load_config(path, "papr")?;
    }
    let phi = resolve_matrix(&mut args.matrix)?;
    let (mu, r_min) = if args.matrix.family == Family::Golay {
        let (mu, r) = golay_coherence(&args.matrix)?;
        (Some(mu), r)
    } else {
        (None, None)
    };
    let (papr, col) = max_papr(&phi, args.oversample)?;
    let row = MatrixRow {
        family: args.matrix.family,
        m: phi.rows(),
        n: phi.cols(),
        l: args.matrix.l,
        mu,
        r_min,
        max_papr_db: Some(papr.papr_db),
    };
    write_matrix_rows(out.as_deref(), &[row])?;
    let mut extra = provenance_json(&phi);
    extra["worst_column"] = json!(col);
    write_sidecar(out.as_deref(), "papr", &args, extra)
}

pub fn pr_table(mut args: PrTableArgs) -> Outcome {
    let out = args.out.take();
    if let Some(path) = &args.config {
        args = load_config(path, "pr-table")?;
    }
    if args.m.is_empty() {
        return Err(usage("--m is required"));
    }
    let seed = resolve_seed(args.seed);
    args.seed = Some(seed);
    let mut w = csv::Writer::from_writer(open_output(out.as_deref())?);
    let mut violations = Vec::new();
    let write = |w: &mut csv::Writer<_>, rec: [String; 5]| {
        w.write_record(rec).map_err(|e| Failure::Runtime(e.into()))
    };
    write(
        &mut w,
        ["m", "r", "p_r", "trials", "seed"].map(String::from),
    )?;
    for &m in &args.m {
        let pmf = estimate_rank_pmf(m, args.trials, seed)?;
        if pmf.rank_zero_violations() > 0 {
            violations.push((m, pmf.rank_zero_violations()));
        }
        for r in (2..=max_symplectic_rank(m)).step_by(2) {
            write(
                &mut w,
                [
                    m.to_string(),
                    r.to_string(),
                    pmf.prob(r).to_string(),
                    args.trials.to_string(),
                    seed.to_string(),
                ],
            )?;
        }
    }
    w.flush()?;
    for (m, v) in &violations {
        eprintln!("warning: m = {m}: {v} pairs had rank 0");
    }
    write_sidecar(out.as_deref(), "pr-table", &args, json!({}))
}

/// Rank distribution used to size a search: exhaustive where cheap, the
/// built-in table where available, Monte-Carlo otherwise.
fn pmf_for(m: usize, seed: u64) -> Result<(RankPmf, &'static str), Failure> {
    if m <= 7 {
        return Ok((exact_rank_pmf(m)?, "exhaustive"));
    }
    let table = rank_probabilities(m);
    if !table.is_empty() {
        return Ok((RankPmf::from_probabilities(m, &table)?, "reference table"));
    }
    Ok((
        estimate_rank_pmf(m, 100_000, derive_seed(seed, &[1]))?,
        "estimated from 1e5 pairs",
    ))
}

pub fn search(mut args: SearchArgs) -> Outcome {
    let out = args.out.take();
    if let Some(path) = &args.config {
        args = load_config(path, "search")?;
    }
    let (Some(m), Some(l)) = (args.m, args.l) else {
        return Err(usage("--m and --L are required"));
    };
    if m < 3 || l < 2 {
        return Err(usage(format!(
            "search needs m >= 3 and L >= 2, got m = {m}, L = {l}"
        )));
    }
    let target = args.target_r.unwrap_or_else(|| max_symplectic_rank(m));
    args.target_r = Some(target);
    let seed = resolve_seed(args.seed);
    args.seed = Some(seed);

    let mut budget_info = json!({});
    let budget = match args.trials {
        Some(t) => t,
        None => {
            let (pmf, source) = pmf_for(m, seed)?;
            let tau = (l * (l - 1) / 2) as i32;
            let p = pmf.tail(target).powi(tau);
            let t = min_trials(p, args.eps)?;
            if t > MAX_DERIVED_TRIALS {
                return Err(usage(format!(
                    "success probability {p:.3e} needs {t} trials; pass --trials to search anyway"
                )));
            }
            budget_info =
                json!({ "success_probability": p, "pmf_source": source, "derived_trials": t });
            t
        }
    };
    args.trials = Some(budget);

    let outcome = search_permutation_set(m, l, target, budget, seed)?;
    let mut w = open_output(out.as_deref())?;
    w.write_all(format_permutation_list(&outcome.gamma).as_bytes())?;
    w.flush()?;
    if !outcome.achieved {
        eprintln!(
            "warning: target rank {target} not reached in {budget} trials; best set has r_min = {}",
            outcome.achieved_r_min
        );
    }
    let mut extra = json!({
        "achieved": outcome.achieved,
        "r_min": outcome.achieved_r_min,
        "coherence": outcome.coherence,
        "trials_used": outcome.trials_used,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut extra, budget_info) {
        a.extend(b);
    }
    write_sidecar(out.as_deref(), "search", &args, extra)
}

fn bits(v: &[u8]) -> String {
    v.iter().map(u8::to_string).collect::<Vec<_>>().join("")
}

pub fn verify_tables(args: VerifyArgs) -> Outcome {
    let wanted = |t: u8| args.table.is_none_or(|x| x == t);
    let mut diffs = Vec::new();
    let mut out = io::stdout().lock();

    if wanted(1) {
        let pi = Permutation::new(EXAMPLE_PERMUTATION.to_vec())?;
        let f = golay_sequence(&pi, EXAMPLE_C)?.to_bits();
        let q = truth_table(&quadratic_matrix(&pi), 0, false)?.to_bits();
        for (name, got, want) in [("f", &f, &EXAMPLE_SEQUENCE), ("Q", &q, &EXAMPLE_QUADRATIC)] {
            let ok = got[..] == want[..];
            writeln!(
                out,
                "table 1 {name}: reference {} computed {} {}",
                bits(want),
                bits(got),
                tag(ok)
            )?;
            if !ok {
                diffs.push(format!(
                    "table 1 {name}: expected {} got {}",
                    bits(want),
                    bits(got)
                ));
            }
        }
    }

    if wanted(2) {
        let seed = resolve_seed(args.seed);
        writeln!(out, "table 2: {} pairs per m, seed {seed}", args.trials)?;
        for m in 5..=10 {
            let pmf = estimate_rank_pmf(m, args.trials, derive_seed(seed, &[m as u64]))?;
            for (r, p) in rank_probabilities(m) {
                let tol = (5.0 * (p * (1.0 - p) / args.trials as f64).sqrt()).max(0.01);
                let got = pmf.prob(r);
                let ok = (got - p).abs() <= tol;
                writeln!(
                    out,
                    "table 2 m={m} r={r}: reference {p:.7} estimate {got:.7} tol {tol:.4} {}",
                    tag(ok)
                )?;
                if !ok {
                    diffs.push(format!(
                        "table 2 m={m} r={r}: expected {p} +/- {tol:.4}, got {got}"
                    ));
                }
            }
        }
    }

    if wanted(3) {
        for set in PERMUTATION_SETS {
            let gamma = set.parse();
            let full = coherence_by_rank(&gamma)?.mu;
            let worst_prefix = (set.l_min..=set.l_max)
                .map(|l| coherence_by_rank(&gamma[..l]).map(|r| r.mu))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let exact = if set.m <= 7 {
                Some(coherence_exact(&golay_noma::golay::spreading_matrix(&gamma, None)?)?.mu)
            } else {
                None
            };
            let ok = full == set.coherence
                && worst_prefix <= set.coherence
                && exact.is_none_or(|e| e == set.coherence);
            writeln!(
                out,
                "table 3 m={} L={}..{}: reference {} rank {} exhaustive {} {}",
                set.m,
                set.l_min,
                set.l_max,
                set.coherence,
                full,
                exact.map_or("-".to_string(), |e| e.to_string()),
                tag(ok)
            )?;
            if !ok {
                diffs.push(format!(
                    "table 3 m={} L={}..{}: expected {}, rank {full}, worst prefix {worst_prefix}, exhaustive {exact:?}",
                    set.m, set.l_min, set.l_max, set.coherence
                ));
            }
        }
    }

    if diffs.is_empty() {
        writeln!(out, "all rows match")?;
        Ok(())
    } else {
        Err(Failure::Mismatch(format!(
            "{} mismatching rows:\n{}",
            diffs.len(),
            diffs.join("\n")
        )))
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}

pub fn simulate(args: SimulateArgs) -> Outcome {
    let grid = match &args.config {
        Some(path) => {
            let mut g: CampaignGrid = load_config(path, "simulate")?;
            if let Some(s) = args.seed {
                g.seed = s;
            }
            g
        }
        None => {
            let m = args.m.ok_or_else(|| usage("--m is required"))?;
            if !(1..=20).contains(&m) {
                return Err(usage(format!("--m {m} outside 1..=20")));
            }
            CampaignGrid {
                m: 1usize << m,
                l: OneOrMany::Many(args.l.clone()),
                j: args.j,
                p_a: OneOrMany::Many(args.p_a.clone()),
                snr_db: OneOrMany::Many(args.snr.clone()),
                frames: args.frames,
                family: OneOrMany::Many(args.family.clone()),
                seed: resolve_seed(args.seed),
                permutations: None,
                zc_roots: None,
                stopping: args.stopping.into(),
                max_iter: args.max_iter,
                allow_empty: false,
            }
        }
    };
    grid.validate()?;
    let results = run_campaign(&grid);
    let mut w = open_output(args.out.as_deref())?;
    write_campaign_csv(&results, &mut w)?;
    w.flush()?;

    let mut points = Vec::new();
    for p in &results {
        let c = &p.config;
        let mut entry = json!({
            "family": c.family, "L": c.l, "p_a": c.p_a, "snr_db": c.snr_db, "N": c.devices(),
        });
        match &p.outcome {
            Ok(metrics) => entry["metrics"] = json!(metrics),
            Err(e) => {
                eprintln!(
                    "warning: {} L={} p_a={} snr={} dB failed: {e}",
                    c.family, c.l, c.p_a, c.snr_db
                );
                entry["error"] = json!(e.to_string());
            }
        }
        points.push(entry);
    }
    write_sidecar(
        args.out.as_deref(),
        "simulate",
        &grid,
        json!({ "points": points }),
    )
}
