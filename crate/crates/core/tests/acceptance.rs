//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every criterion reports even when an earlier one
//! fails. The process exits non-zero on failure only when
//! `ACCEPTANCE_STRICT=1`; the summary line lists failing criteria either way.

use std::time::Instant;

use golay_noma::analysis::{coherence_by_rank, coherence_exact, max_papr, DEFAULT_OVERSAMPLE};
use golay_noma::baselines::{random_matrix, zc_matrix, RandomKind, ZcConfig};
use golay_noma::gf2::{quadratic_matrix, truth_table};
use golay_noma::golay::{golay_sequence, spreading_matrix};
use golay_noma::rng::substream;
use golay_noma::search::{
    coherence_probability, estimate_rank_pmf, min_trials, random_pair, RankPmf,
};
use golay_noma::sim::{
    run_campaign, write_campaign_csv, CampaignGrid, OneOrMany, PointMetrics, StoppingRule,
};
use golay_noma::tables::{
    rank_probabilities, EXAMPLE_C, EXAMPLE_PERMUTATION, EXAMPLE_QUADRATIC, EXAMPLE_SEQUENCE,
    PERMUTATION_SETS,
};
use golay_noma::{Family, Permutation};

const SEED: u64 = 20_240_917;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, what: &str, pass: bool, detail: String, started: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id}] {what}: {detail} ({:.1?})", started.elapsed());
        if !pass {
            self.failed.push(id.to_string());
        }
    }
}

fn table_one(rep: &mut Report) {
    let t = Instant::now();
    let pi = Permutation::new(EXAMPLE_PERMUTATION.to_vec()).unwrap();
    let f = golay_sequence(&pi, EXAMPLE_C).unwrap().to_bits();
    let q = truth_table(&quadratic_matrix(&pi), 0, false)
        .unwrap()
        .to_bits();
    let pass = f == EXAMPLE_SEQUENCE && q == EXAMPLE_QUADRATIC;
    rep.line(
        "1",
        "length-8 example sequence",
        pass,
        format!("f = {f:?}, Q = {q:?}"),
        t,
    );
}

fn table_three(rep: &mut Report) {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut exact_checked = 0;
    for set in PERMUTATION_SETS {
        let gamma = set.parse();
        let by_rank = coherence_by_rank(&gamma).unwrap().mu;
        if by_rank != set.coherence {
            bad.push(format!("m={} L<={}: rank path {by_rank}", set.m, set.l_max));
        }
        if set.m <= 7 {
            let exact = coherence_exact(&spreading_matrix(&gamma, None).unwrap())
                .unwrap()
                .mu;
            exact_checked += 1;
            if exact != set.coherence {
                bad.push(format!("m={} L<={}: exact path {exact}", set.m, set.l_max));
            }
        }
    }
    rep.line(
        "2",
        "reference permutation-set coherence",
        bad.is_empty(),
        format!(
            "{} sets by rank, {exact_checked} exhaustively; mismatches {bad:?}",
            PERMUTATION_SETS.len()
        ),
        t,
    );
}

fn table_two(rep: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for m in 5..=10 {
        let pmf = estimate_rank_pmf(m, 100_000, SEED + m as u64).unwrap();
        let sum: f64 = pmf.p.values().sum();
        if (sum - 1.0).abs() > 1e-12 {
            bad.push(format!("m={m}: sum {sum}"));
        }
        for (r, p) in rank_probabilities(m) {
            if m >= 9 && p < 0.05 {
                continue;
            }
            let d = (pmf.prob(r) - p).abs();
            worst = worst.max(d);
            if d > 0.01 {
                bad.push(format!("m={m} r={r}: {} vs {p}", pmf.prob(r)));
            }
        }
    }
    rep.line(
        "3",
        "rank distribution at 1e5 pairs",
        bad.is_empty(),
        format!("max |delta| = {worst:.4} (tol 0.01); issues {bad:?}"),
        t,
    );
}

fn formulas(rep: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for m in 5..=10 {
        let pmf = RankPmf::from_probabilities(m, &rank_probabilities(m)).unwrap();
        for l in 2..=8 {
            let total: f64 = (1..=m / 2)
                .map(|h| coherence_probability(&pmf, l, 2 * h).unwrap())
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    let t4 = min_trials(0.7456074, 0.01).unwrap();
    let pmf7 = RankPmf::from_probabilities(7, &rank_probabilities(7)).unwrap();
    let p_opt = coherence_probability(&pmf7, 8, 6).unwrap();
    let budget = min_trials(p_opt, 0.01).unwrap();
    let pass = worst <= 1e-12 && t4 == 4 && budget <= 1_000_000;
    rep.line(
        "4",
        "set-probability and trial-count formulas",
        pass,
        format!("telescoping error {worst:.1e}; T(0.7456074, 0.01) = {t4}; m=7 L=8 P = {p_opt:.3e}, T = {budget}"),
        t,
    );
}

fn papr_bound(rep: &mut Report) {
    let t = Instant::now();
    let mut golay_max: f64 = 0.0;
    let mut columns = 0;
    for set in PERMUTATION_SETS.iter().filter(|s| (5..=8).contains(&s.m)) {
        let phi = spreading_matrix(&set.parse(), None).unwrap();
        columns += phi.cols();
        golay_max = golay_max.max(max_papr(&phi, DEFAULT_OVERSAMPLE).unwrap().0.papr_db);
    }
    let mut bipolar_max: f64 = 0.0;
    for k in 0..100 {
        let phi = random_matrix(RandomKind::Bipolar, 128, 512, SEED + k).unwrap();
        bipolar_max = bipolar_max.max(max_papr(&phi, DEFAULT_OVERSAMPLE).unwrap().0.papr_db);
    }
    rep.line(
        "5",
        "PAPR bound",
        golay_max <= 3.02 && bipolar_max > 3.0,
        format!("golay max {golay_max:.4} dB over {columns} columns (<= 3.02); bipolar max {bipolar_max:.2} dB (> 3)"),
        t,
    );
}

fn oracle_equivalence(rep: &mut Report) {
    let t = Instant::now();
    let mut pairs = 0;
    let mut bad = Vec::new();
    let mut check = |a: &Permutation, b: &Permutation| {
        let gamma = [a.clone(), b.clone()];
        let exact = coherence_exact(&spreading_matrix(&gamma, None).unwrap())
            .unwrap()
            .mu;
        let rank = coherence_by_rank(&gamma).unwrap().mu;
        pairs += 1;
        if exact != rank {
            bad.push(format!("{a} / {b}: {exact} vs {rank}"));
        }
    };
    for m in 3..=5 {
        let all = Permutation::all_canonical(m).unwrap();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                check(&all[i], &all[j]);
            }
        }
    }
    for m in 6..=7 {
        let mut rng = substream(SEED, &[m as u64]);
        for _ in 0..100 {
            let (a, b) = random_pair(m, &mut rng).unwrap();
            check(&a, &b);
        }
    }
    rep.line(
        "6",
        "exhaustive coherence equals rank-derived coherence",
        bad.is_empty(),
        format!("{pairs} pairs; mismatches {bad:?}"),
        t,
    );
}

fn zc_certificate(rep: &mut Report) {
    let t = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for p in [127usize, 257] {
        let cfg = ZcConfig::random(p, 4, SEED).unwrap();
        let mu = coherence_exact(&zc_matrix(&cfg).unwrap()).unwrap().mu;
        let want = 1.0 / (p as f64).sqrt();
        pass &= (mu - want).abs() <= 1e-9;
        detail.push(format!("p={p}: {mu:.12} vs {want:.12}"));
    }
    rep.line("7", "Zadoff-Chu coherence", pass, detail.join("; "), t);
}

const SNRS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const FAMILIES: [Family; 4] = [Family::Golay, Family::Zc, Family::Bipolar, Family::Gaussian];

fn campaign(stopping: StoppingRule) -> Vec<(Family, f64, PointMetrics)> {
    let grid = CampaignGrid {
        m: 128,
        l: OneOrMany::One(4),
        j: 7,
        p_a: OneOrMany::One(0.1),
        snr_db: SNRS.to_vec().into(),
        frames: 500,
        family: FAMILIES.to_vec().into(),
        seed: SEED,
        permutations: None,
        zc_roots: None,
        stopping,
        max_iter: None,
        allow_empty: false,
    };
    run_campaign(&grid)
        .into_iter()
        .map(|p| {
            (
                p.config.family,
                p.config.snr_db,
                p.outcome.expect("simulation point"),
            )
        })
        .collect()
}

fn point(res: &[(Family, f64, PointMetrics)], f: Family, snr: f64) -> &PointMetrics {
    &res.iter()
        .find(|(ff, s, _)| *ff == f && *s == snr)
        .unwrap()
        .2
}

fn aer_ordering(res: &[(Family, f64, PointMetrics)]) -> (bool, String) {
    let mut ok = true;
    let mut cells = Vec::new();
    for snr in SNRS {
        let g = point(res, Family::Golay, snr).somp.aer.mean;
        let b = point(res, Family::Bipolar, snr).somp.aer.mean;
        let n = point(res, Family::Gaussian, snr).somp.aer.mean;
        ok &= g <= b && g <= n;
        cells.push(format!("{snr}dB g={g:.5} b={b:.5} n={n:.5}"));
    }
    (ok, cells.join("; "))
}

fn simulation(rep: &mut Report) {
    let t = Instant::now();
    let res = campaign(StoppingRule::RowMax);
    for (f, snr, p) in &res {
        println!(
            "     {f:8} {snr:>4} dB  aer {:.5}±{:.5}  nmse {:7.2} dB  ser {:.5}±{:.5}  oracle nmse {:7.2} dB  iters {:.1}",
            p.somp.aer.mean,
            p.somp.aer.std_err,
            p.somp.nmse_db().unwrap(),
            p.somp.ser.unwrap().mean,
            p.somp.ser.unwrap().std_err,
            p.oracle.nmse_db().unwrap(),
            p.somp.mean_iterations,
        );
    }

    let (ok_a, detail_a) = aer_ordering(&res);
    rep.line(
        "8a",
        "golay AER <= bipolar and gaussian AER",
        ok_a,
        detail_a,
        t,
    );

    let t = Instant::now();
    let g = point(&res, Family::Golay, 15.0);
    let z = point(&res, Family::Zc, 15.0);
    let ratios = [
        ("aer", g.somp.aer.mean / z.somp.aer.mean),
        (
            "nmse",
            g.somp.nmse.unwrap().mean / z.somp.nmse.unwrap().mean,
        ),
        ("ser", g.somp.ser.unwrap().mean / z.somp.ser.unwrap().mean),
    ];
    let ok_b = ratios.iter().all(|(_, r)| (0.5..=2.0).contains(r));
    rep.line(
        "8b",
        "golay within a factor of 2 of ZC at 15 dB",
        ok_b,
        ratios
            .iter()
            .map(|(k, r)| format!("{k} ratio {r:.3}"))
            .collect::<Vec<_>>()
            .join(", "),
        t,
    );

    let t = Instant::now();
    let bad_c: Vec<String> = res
        .iter()
        .filter(|(_, _, p)| p.oracle.nmse.unwrap().mean > p.somp.nmse.unwrap().mean)
        .map(|(f, s, _)| format!("{f}@{s}"))
        .collect();
    rep.line(
        "8c",
        "oracle NMSE <= SOMP NMSE",
        bad_c.is_empty(),
        format!("{} points; violations {bad_c:?}", res.len()),
        t,
    );

    let t = Instant::now();
    let mut bad_d = Vec::new();
    for f in FAMILIES {
        for w in SNRS.windows(2) {
            let (a, b) = (&point(&res, f, w[0]).somp, &point(&res, f, w[1]).somp);
            let pairs = [
                ("aer", a.aer, b.aer),
                ("nmse", a.nmse.unwrap(), b.nmse.unwrap()),
                ("ser", a.ser.unwrap(), b.ser.unwrap()),
            ];
            for (k, x, y) in pairs {
                let slack = 2.0 * (x.std_err.powi(2) + y.std_err.powi(2)).sqrt();
                if y.mean > x.mean + slack {
                    bad_d.push(format!("{f} {k} {}->{}", w[0], w[1]));
                }
            }
        }
    }
    rep.line(
        "8d",
        "metrics non-increasing in SNR (2 s.e.)",
        bad_d.is_empty(),
        format!("violations {bad_d:?}"),
        t,
    );

    // Not a criterion: the same ordering check under the alternative stopping rule.
    let t = Instant::now();
    let (ok_f, detail_f) = aer_ordering(&campaign(StoppingRule::Frobenius));
    println!(
        "INFO [8a/frobenius] AER ordering with the Frobenius stopping rule: {} ({detail_f}) ({:.1?})",
        if ok_f { "holds" } else { "violated" },
        t.elapsed()
    );
}

fn determinism(rep: &mut Report) {
    let t = Instant::now();
    let grid: CampaignGrid = CampaignGrid {
        m: 64,
        l: vec![2, 3].into(),
        j: 7,
        p_a: OneOrMany::One(0.1),
        snr_db: vec![5.0, 15.0].into(),
        frames: 60,
        family: FAMILIES.to_vec().into(),
        seed: SEED,
        permutations: None,
        zc_roots: None,
        stopping: StoppingRule::RowMax,
        max_iter: None,
        allow_empty: false,
    };
    let csv_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let mut out = Vec::new();
        pool.install(|| write_campaign_csv(&run_campaign(&grid), &mut out))
            .unwrap();
        out
    };
    let base = csv_with(1);
    let same: Vec<bool> = [2, 3, 8].iter().map(|&n| csv_with(n) == base).collect();
    rep.line(
        "9",
        "campaign CSV identical across worker counts",
        same.iter().all(|&s| s),
        format!(
            "{} bytes; 1 vs 2/3/8 workers identical: {same:?}",
            base.len()
        ),
        t,
    );
}

fn main() {
    let mut rep = Report { failed: Vec::new() };
    table_one(&mut rep);
    table_three(&mut rep);
    table_two(&mut rep);
    formulas(&mut rep);
    papr_bound(&mut rep);
    oracle_equivalence(&mut rep);
    zc_certificate(&mut rep);
    simulation(&mut rep);
    determinism(&mut rep);
    if rep.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: FAILED criteria {:?}", rep.failed);
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
