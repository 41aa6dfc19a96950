//! Exit criteria on the canonical corpus. Prints one PASS/FAIL line per
//! criterion with indented detail, and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use ltcrank::dataset::{load_canonical, normalize_proxies, ModelSet, Normalization, Proxy};
use ltcrank::evaluation::{
    baseline_over_splits, baseline_table, fit_on_all, proxy_accuracy, run_protocol_full, Backbone, Baseline,
    Combo, ProtocolConfig, ProtocolOutcome, TiePolicy,
};
use ltcrank::gbdt::{fit_gbdt_traced, GbdtConfig};
use ltcrank::pairing::{enumerate_pairs, make_features, PairDataset, TaskId};
use ltcrank::predictor::ProxyPredictor;
use ltcrank::ranking::{borda_scores, held_out_recall, rank_all, RecallCurve};

const TASKS: [TaskId; 3] = [TaskId::SftCms, TaskId::SftRag, TaskId::SftCbqa];

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, name: &str, pass: bool, details: &[String]) {
        println!("{} {name}", if pass { "PASS" } else { "FAIL" });
        for d in details {
            println!("    {d}");
        }
        if !pass {
            self.failed += 1;
        }
    }
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn table1_individual(set: &ModelSet, gate: &mut Gate) {
    let expected: [(Proxy, [f64; 3]); 5] = [
        (Proxy::PplClm, [0.332, 0.380, 0.354]),
        (Proxy::PplSc, [0.703, 0.622, 0.609]),
        (Proxy::KshotCms, [0.573, 0.569, 0.525]),
        (Proxy::KshotRag, [0.696, 0.766, 0.704]),
        (Proxy::KshotCbqa, [0.437, 0.447, 0.467]),
    ];
    let start = Instant::now();
    let pairs = enumerate_pairs(set);
    let mut pass = pairs.len() == 1225;
    let mut details = Vec::new();
    for (proxy, want) in expected {
        for (task, want) in TASKS.iter().zip(want) {
            let got = proxy_accuracy(set, proxy, *task, &pairs).unwrap();
            let ok = within(got, want, 0.02);
            pass &= ok;
            details.push(format!(
                "{:<10} {:<8} {got:.4} (expected {want:.3} +/- 0.02){}",
                proxy.label(),
                task.label(),
                if ok { "" } else { "  <-- out of band" }
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 1.0;
    details.push(format!("elapsed {elapsed:.3}s (limit 1s)"));
    gate.report("AC1 individual proxy accuracy over all 1225 pairs", pass, &details);
}

fn table1_aggregated(set: &ModelSet, gate: &mut Gate) {
    let expected: [(Combo, [f64; 3]); 3] = [
        (Combo::MeanOfFive, [0.622, 0.598, 0.564]),
        (Combo::ScPlusRag, [0.744, 0.696, 0.642]),
        (Combo::ScPlusRagMinusClm, [0.763, 0.692, 0.635]),
    ];
    let mut details = Vec::new();
    let mut matched = None;
    for norm in [Normalization::MinMax, Normalization::ZScore] {
        let table = baseline_table(set, &TASKS, norm, TiePolicy::Exclude).unwrap();
        let mut all = true;
        for (combo, want) in expected {
            for (task, want) in TASKS.iter().zip(want) {
                let got = table.get(Baseline::Combo(combo), *task).unwrap();
                let ok = within(got, want, 0.02);
                all &= ok;
                details.push(format!(
                    "{norm:<6} {:<30} {:<8} {got:.4} (expected {want:.3}){}",
                    combo.label(),
                    task.label(),
                    if ok { "" } else { "  <-- out of band" }
                ));
            }
        }
        if all && matched.is_none() {
            matched = Some(norm);
        }
    }
    details.push(format!(
        "matching normalization: {}",
        matched.map_or("none".to_string(), |n| n.to_string())
    ));
    gate.report("AC2 aggregated proxies under one normalization", matched.is_some(), &details);
}

struct Protocols {
    gbdt: Vec<ProtocolOutcome>,
    logistic: Vec<ProtocolOutcome>,
    mlp: Vec<ProtocolOutcome>,
    elapsed: f64,
}

fn run_all(set: &ModelSet, cfg: &ProtocolConfig) -> Protocols {
    let start = Instant::now();
    let run = |b| {
        TASKS
            .iter()
            .map(|t| run_protocol_full(set, b, *t, cfg).unwrap())
            .collect::<Vec<_>>()
    };
    let gbdt = run(Backbone::Gbdt);
    let logistic = run(Backbone::Logistic);
    let mlp = run(Backbone::Mlp);
    Protocols {
        gbdt,
        logistic,
        mlp,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn supervised_protocol(set: &ModelSet, cfg: &ProtocolConfig, p: &Protocols, gate: &mut Gate) {
    let bands: [(&str, &[ProtocolOutcome], [f64; 3]); 3] = [
        ("gbdt", &p.gbdt, [0.753, 0.727, 0.753]),
        ("logistic", &p.logistic, [0.738, 0.688, 0.624]),
        ("mlp", &p.mlp, [0.778, 0.691, 0.673]),
    ];
    let mut details = Vec::new();
    let mut bands_ok = true;
    for (name, outcomes, want) in bands {
        for (k, task) in TASKS.iter().enumerate() {
            let r = outcomes[k].report(*task);
            let ok = within(r.mean, want[k], 0.05) && r.per_run.len() == 20;
            bands_ok &= ok;
            details.push(format!(
                "{name:<8} {:<8} {:.4} +/- {:.4} over {} runs (expected {:.3} +/- 0.05){}",
                task.label(),
                r.mean,
                r.std,
                r.per_run.len(),
                want[k],
                if ok { "" } else { "  <-- out of band" }
            ));
        }
    }
    let timing_ok = p.elapsed < 60.0;
    details.push(format!("9 protocols x 20 runs in {:.2}s (limit 60s)", p.elapsed));

    let mut fallback_ok = true;
    for (k, task) in TASKS.iter().enumerate() {
        let gbdt = p.gbdt[k].report(*task).mean;
        let five = baseline_over_splits(set, Baseline::Combo(Combo::MeanOfFive), *task, cfg, Normalization::MinMax)
            .unwrap()
            .mean;
        let rag = baseline_over_splits(set, Baseline::Proxy(Proxy::KshotRag), *task, cfg, Normalization::MinMax)
            .unwrap()
            .mean;
        let ok = gbdt >= five && (*task == TaskId::SftRag || gbdt >= rag);
        fallback_ok &= ok;
        details.push(format!(
            "fallback {:<8} gbdt {gbdt:.4} vs combine-five {five:.4}, kshot-rag {rag:.4}",
            task.label()
        ));
    }
    if !bands_ok {
        details.push(format!(
            "bands missed; fallback property {}",
            if fallback_ok { "holds" } else { "fails" }
        ));
    }
    gate.report(
        "AC3 supervised protocol means",
        timing_ok && (bands_ok || fallback_ok),
        &details,
    );
}

fn cross_task(p: &Protocols, gate: &mut Gate) {
    let mut pass = true;
    let mut details = Vec::new();
    for (s, source) in TASKS.iter().enumerate() {
        for (t, target) in TASKS.iter().enumerate() {
            if s == t {
                continue;
            }
            let transferred = p.gbdt[s].report(*target).mean;
            let direct = p.gbdt[t].report(*target).mean;
            let ok = (transferred - direct).abs() <= 0.04;
            pass &= ok;
            details.push(format!(
                "{:<8} -> {:<8} {transferred:.4} vs direct {direct:.4} (gap {:.4}){}",
                source.label(),
                target.label(),
                (transferred - direct).abs(),
                if ok { "" } else { "  <-- over 0.04" }
            ));
        }
    }
    gate.report("AC4 cross-task transfer within 0.04 of direct training", pass, &details);
}

fn quantiles(set: &ModelSet, p: &Protocols, gate: &mut Gate) {
    let mut pass = true;
    let mut details = Vec::new();
    for (k, task) in TASKS.iter().enumerate() {
        let rising = [
            ltcrank::evaluation::quantile_buckets(set, &ProxyPredictor(Proxy::KshotRag), "kshot_rag", *task, 5).unwrap(),
            p.gbdt[k].quantile_buckets(set, *task, 5).unwrap(),
        ];
        for r in &rising {
            let (b1, b5) = (r.buckets[0].accuracy, r.buckets[4].accuracy);
            let ok = b5 >= b1 + 0.2 && b5 >= 0.85;
            pass &= ok;
            details.push(format!(
                "{:<9} {:<8} bucket1 {b1:.4} bucket5 {b5:.4} (need b5 >= b1+0.2 and >= 0.85){}",
                r.predictor,
                task.label(),
                if ok { "" } else { "  <-- fails" }
            ));
        }
        let clm = ltcrank::evaluation::quantile_buckets(set, &ProxyPredictor(Proxy::PplClm), "ppl_clm", *task, 5).unwrap();
        let (b1, b5) = (clm.buckets[0].accuracy, clm.buckets[4].accuracy);
        let ok = b5 <= 0.5 && b5 <= b1;
        pass &= ok;
        details.push(format!(
            "ppl_clm   {:<8} bucket1 {b1:.4} bucket5 {b5:.4} (need b5 <= 0.5 and <= b1){}",
            task.label(),
            if ok { "" } else { "  <-- fails" }
        ));
    }
    gate.report("AC5 reliability across gap quantiles", pass, &details);
}

fn recall(set: &ModelSet, cfg: &ProtocolConfig, p: &Protocols, gate: &mut Gate) {
    let mut pass = true;
    let mut details = Vec::new();
    for (k, task) in TASKS.iter().enumerate() {
        let ranking = rank_all(set, Backbone::Gbdt, *task, cfg).unwrap();
        let curve = RecallCurve::new(&ranking, set, *task, 1, "gbdt").unwrap();
        let cutoff = curve.full_recall_cutoff();
        let ok = cutoff.is_some_and(|c| c <= 10);
        pass &= ok;
        let held = held_out_recall(&p.gbdt[k], set, *task, 1).unwrap();
        let rag = borda_scores(&ProxyPredictor(Proxy::KshotRag), set);
        let rag_curve = RecallCurve::new(&rag, set, *task, 1, "kshot_rag").unwrap();
        details.push(format!(
            "{:<8} rank-all top-1 cutoff {:?} (need <= 10); held-out mean recall@5 {:.3}; kshot-rag cutoff {:?}",
            task.label(),
            cutoff,
            held.recall[4],
            rag_curve.full_recall_cutoff()
        ));
    }
    gate.report("AC6 top-1 recall of Borda-aggregated gbdt (rank-all mode)", pass, &details);
}

fn importance(set: &ModelSet, cfg: &ProtocolConfig, p: &Protocols, gate: &mut Gate) {
    let mut pass = true;
    let mut details = Vec::new();
    for (k, task) in TASKS.iter().enumerate() {
        let model = fit_on_all(set, Backbone::Gbdt, *task, cfg).unwrap();
        let report = model.importance().unwrap().unwrap();
        let per_run = p.gbdt[k].mean_importance().unwrap().unwrap();
        let sum: f64 = report.normalized.iter().sum();
        let sums_ok = p.gbdt[k].runs.iter().all(|r| {
            let n = r.model.importance().unwrap().unwrap().normalized;
            (n.iter().sum::<f64>() - 1.0).abs() <= 1e-9
        });
        let ok = report.top_proxy() == Proxy::KshotRag && (sum - 1.0).abs() <= 1e-9 && sums_ok;
        pass &= ok;
        let shares: Vec<String> = Proxy::ALL
            .iter()
            .map(|p| format!("{} {:.3}", p.label(), report.normalized[p.index()]))
            .collect();
        details.push(format!("{:<8} {}", task.label(), shares.join(", ")));
        details.push(format!(
            "{:<8} per-split mean: top {} (kshot-rag {:.3})",
            "",
            per_run.top_proxy().label(),
            per_run.normalized[Proxy::KshotRag.index()]
        ));
    }
    gate.report("AC7 kshot-rag carries the most gain importance (full-corpus fit)", pass, &details);
}

fn numerics(set: &ModelSet, gate: &mut Gate) {
    let mut details = Vec::new();

    let lr = common::logistic_gradient_error();
    let mlp = common::mlp_gradient_error();
    let grad_ok = lr <= 1e-5 && mlp <= 1e-5;
    details.push(format!("gradient rel. error: logistic {lr:.2e}, mlp {mlp:.2e} (limit 1e-5)"));

    let mut mono_ok = true;
    for &task in &TASKS {
        let data = PairDataset::build(set, &set.ids(), task, false).unwrap();
        let (_, trace) = fit_gbdt_traced(&data.features, &data.labels, &GbdtConfig::default()).unwrap();
        mono_ok &= trace.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    }
    details.push(format!("gbdt training loss non-increasing: {mono_ok}"));

    let mut split_failures = 0;
    let cases = 300;
    for seed in 0..cases {
        if let Err(e) = common::check_split_case(&common::random_split_case(seed)) {
            split_failures += 1;
            details.push(format!("split case {seed}: {e}"));
        }
    }
    details.push(format!("best split vs brute force: {}/{cases} agree", cases - split_failures));

    let pairs = enumerate_pairs(set);
    let blocks_ok = pairs.len() == 1225
        && pairs.iter().all(|&(a, b)| {
            let f = make_features(set, a, b).unwrap();
            common::feature_blocks_hold(f.values(), set.get(a).unwrap(), set.get(b).unwrap())
        });
    details.push(format!("feature block identities on all pairs: {blocks_ok}"));

    let scaled = normalize_proxies(set, Normalization::MinMax);
    let invariant = Proxy::ALL.iter().all(|&p| {
        TASKS.iter().all(|&t| {
            proxy_accuracy(set, p, t, &pairs).unwrap() == proxy_accuracy(&scaled, p, t, &pairs).unwrap()
        })
    });
    details.push(format!("proxy accuracy unchanged by min-max scaling: {invariant}"));

    gate.report(
        "AC8 numerical properties",
        grad_ok && mono_ok && split_failures == 0 && blocks_ok && invariant,
        &details,
    );
}

fn main() -> ExitCode {
    let set = load_canonical().expect("canonical corpus loads");
    let cfg = ProtocolConfig::default();
    let mut gate = Gate { failed: 0 };

    table1_individual(&set, &mut gate);
    table1_aggregated(&set, &mut gate);
    let protocols = run_all(&set, &cfg);
    supervised_protocol(&set, &cfg, &protocols, &mut gate);
    cross_task(&protocols, &mut gate);
    quantiles(&set, &protocols, &mut gate);
    recall(&set, &cfg, &protocols, &mut gate);
    importance(&set, &cfg, &protocols, &mut gate);
    numerics(&set, &mut gate);

    println!("{} of 8 criteria failed", gate.failed);
    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
