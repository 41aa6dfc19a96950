use std::collections::HashMap;

use anyhow::{Context, Result};
use ltcrank::dataset::{load_canonical, parse_csv_with, ModelSet, Normalization, PerplexityForm, Proxy};
use ltcrank::evaluation::{
    baseline_over_splits, baseline_table, grouped_accuracy, run_protocol_full, Backbone, Baseline,
    GroupedMatrix, ModelDump, ProtocolConfig, ProtocolOutcome, SplitPlan,
};
use ltcrank::pairing::TaskId;
use ltcrank::predictor::{PairPredictor, ProxyPredictor};
use ltcrank::ranking::{borda_scores, held_out_recall, rank_all, recall_over_splits, true_ranking, RecallCurve};
use ltcrank::report::{fmt4, RunManifest, Table};
use serde_json::json;

use crate::output::Output;
use crate::predictors::PredictorSpec;
use crate::{BaselinesArgs, Cli, Command, Global, GroupedArgs, LtcArgs, RankArgs, TaskSelection, UsageError};

mod figures;

pub fn run(cli: &Cli) -> Result<()> {
    let mut ctx = Session::new(&cli.global)?;
    match &cli.command {
        Command::Ingest => ingest(&ctx),
        Command::Baselines(args) => baselines(&mut ctx, args),
        Command::Ltc(args) => ltc(&mut ctx, args),
        Command::Figures { which } => figures::run(&mut ctx, which),
        Command::Rank(args) => rank(&mut ctx, args),
        Command::Grouped(args) => grouped(&ctx, args),
    }
}

/// Loaded dataset plus settings shared by every command.
pub(crate) struct Session<'a> {
    pub global: &'a Global,
    pub set: ModelSet,
    pub normalization: Normalization,
    outcomes: HashMap<(Backbone, TaskId, usize), ProtocolOutcome>,
}

impl<'a> Session<'a> {
    fn new(global: &'a Global) -> Result<Self> {
        let set = match &global.dataset {
            Some(path) => {
                let form = if global.raw_perplexity {
                    PerplexityForm::Raw
                } else {
                    PerplexityForm::Inverted
                };
                parse_csv_with(path, form).with_context(|| format!("loading {}", path.display()))?
            }
            None => load_canonical()?,
        };
        Ok(Self {
            global,
            set,
            normalization: global.normalization.into(),
            outcomes: HashMap::new(),
        })
    }

    pub fn protocol(&self, runs: usize) -> Result<ProtocolConfig> {
        if runs == 0 {
            return Err(UsageError("--runs must be at least 1".into()).into());
        }
        Ok(ProtocolConfig {
            jobs: self.global.jobs,
            ..ProtocolConfig::default().with_seeds(self.global.seed_base, runs)
        })
    }

    pub fn plans(&self, runs: usize) -> Result<Vec<SplitPlan>> {
        let cfg = self.protocol(runs)?;
        let ids = self.set.ids();
        cfg.seeds
            .iter()
            .map(|&s| SplitPlan::new(&ids, s, cfg.train_fraction).map_err(Into::into))
            .collect()
    }

    /// Protocol outcome for a backbone trained on `task`, computed once.
    pub fn outcome(&mut self, backbone: Backbone, task: TaskId, runs: usize) -> Result<&ProtocolOutcome> {
        let key = (backbone, task, runs);
        if !self.outcomes.contains_key(&key) {
            let cfg = self.protocol(runs)?;
            let outcome = run_protocol_full(&self.set, backbone, task, &cfg)?;
            report_failures(&outcome);
            self.outcomes.insert(key, outcome);
        }
        Ok(&self.outcomes[&key])
    }

    pub fn output(&self, command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Result<Output> {
        let manifest = RunManifest::new(command, config, self.set.checksum(), seeds);
        Output::new(&self.global.out, manifest)
    }

    pub fn seeds(&self, runs: usize) -> Vec<u64> {
        (0..runs as u64).map(|i| self.global.seed_base + i).collect()
    }

    pub fn baseline_predictor(&self, b: Baseline) -> Box<dyn PairPredictor> {
        b.predictor(&self.set, self.normalization)
    }
}

fn report_failures(outcome: &ProtocolOutcome) {
    for f in &outcome.failures {
        eprintln!("warning: run {} (seed {}) failed and is excluded: {}", f.run, f.seed, f.message);
    }
}

pub(crate) fn tasks(sel: &TaskSelection) -> Result<Vec<TaskId>> {
    match &sel.tasks {
        None => Ok(TaskId::ALL.to_vec()),
        Some(list) if list.is_empty() => Err(UsageError("the task list is empty".into()).into()),
        Some(list) => {
            let mut out: Vec<TaskId> = Vec::new();
            for t in list {
                if !out.contains(t) {
                    out.push(*t);
                }
            }
            Ok(out)
        }
    }
}

fn task_names(tasks: &[TaskId]) -> Vec<&'static str> {
    tasks.iter().map(|t| t.as_str()).collect()
}

fn ingest(ctx: &Session) -> Result<()> {
    let set = &ctx.set;
    let columns: Vec<serde_json::Value> = Proxy::ALL
        .iter()
        .map(|&p| {
            let col = set.proxy_column(p);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            json!({"column": p.as_str(), "min": lo, "max": hi})
        })
        .collect();
    let summary = json!({
        "models": set.len(),
        "pairs": set.len() * (set.len() - 1) / 2,
        "sha256": set.checksum(),
        "proxies": columns,
    });
    let mut out = ctx.output(
        "ingest",
        json!({"dataset": ctx.global.dataset, "raw_perplexity": ctx.global.raw_perplexity}),
        Vec::new(),
    )?;
    println!("{} models, sha256 {}", set.len(), set.checksum());
    out.raw("dataset.csv", &set.to_csv())?;
    out.json("ingest.json", &summary)?;
    out.finish();
    Ok(())
}

fn baselines(ctx: &mut Session, args: &BaselinesArgs) -> Result<()> {
    let tasks = tasks(&args.tasks)?;
    let table = baseline_table(&ctx.set, &tasks, ctx.normalization, args.ties.into())?;
    let seeds = if args.over_splits { ctx.seeds(args.runs) } else { Vec::new() };
    let mut out = ctx.output(
        "baselines",
        json!({
            "tasks": task_names(&tasks),
            "normalization": ctx.normalization,
            "ties": format!("{:?}", args.ties).to_lowercase(),
            "over_splits": args.over_splits,
        }),
        seeds,
    )?;

    let mut csv = Table::new(std::iter::once("predictor").chain(task_names(&tasks)));
    for row in &table.rows {
        println!(
            "{:<36} {}",
            row.baseline.label(),
            row.accuracy.iter().map(|a| fmt4(*a)).collect::<Vec<_>>().join("  ")
        );
        csv.push(std::iter::once(row.baseline.name().to_string()).chain(row.accuracy.iter().map(|a| fmt4(*a))));
    }
    out.csv("table1.csv", &csv)?;
    out.json("table1.json", &table)?;

    if args.over_splits {
        let cfg = ctx.protocol(args.runs)?;
        let mut csv = Table::new(["predictor", "task", "mean", "std", "runs"]);
        let mut reports = Vec::new();
        for b in Baseline::all() {
            for &t in &tasks {
                let r = baseline_over_splits(&ctx.set, b, t, &cfg, ctx.normalization)?;
                csv.push([
                    b.name().to_string(),
                    t.as_str().to_string(),
                    fmt4(r.mean),
                    fmt4(r.std),
                    r.per_run.len().to_string(),
                ]);
                reports.push(r);
            }
        }
        out.csv("baselines_splits.csv", &csv)?;
        out.json("baselines_splits.json", &reports)?;
    }
    out.finish();
    Ok(())
}

fn ltc(ctx: &mut Session, args: &LtcArgs) -> Result<()> {
    let eval = tasks(&TaskSelection { tasks: args.eval.clone() })?;
    let mut cfg = ctx.protocol(args.runs)?;
    cfg.augment_flip = args.augment_flip;
    let outcome = run_protocol_full(&ctx.set, args.backbone, args.train, &cfg)?;
    report_failures(&outcome);

    let stem = format!("ltc_{}_{}", args.backbone, args.train);
    let mut out = ctx.output(
        "ltc",
        json!({
            "backbone": args.backbone,
            "train": args.train,
            "eval": task_names(&eval),
            "runs": args.runs,
            "augment_flip": args.augment_flip,
            "protocol": cfg,
        }),
        cfg.seeds.clone(),
    )?;

    let mut per_run = Table::new(["run", "seed", "eval_task", "accuracy", "test_pairs", "train_pairs"]);
    for (i, run) in outcome.runs.iter().enumerate() {
        for &t in &eval {
            per_run.push([
                i.to_string(),
                run.plan.seed.to_string(),
                t.as_str().to_string(),
                fmt4(run.accuracy[t.index()]),
                run.n_test_pairs[t.index()].to_string(),
                run.n_train_pairs.to_string(),
            ]);
        }
    }
    let reports: Vec<_> = eval.iter().map(|&t| outcome.report(t)).collect();
    let mut summary = Table::new(["eval_task", "mean", "std", "runs", "failed_runs"]);
    for r in &reports {
        println!(
            "{} trained on {} -> {}: {} +/- {} over {} runs",
            args.backbone,
            args.train,
            r.task,
            fmt4(r.mean),
            fmt4(r.std),
            r.per_run.len()
        );
        summary.push([
            r.task.as_str().to_string(),
            fmt4(r.mean),
            fmt4(r.std),
            r.per_run.len().to_string(),
            r.failures.len().to_string(),
        ]);
    }
    out.csv(&format!("{stem}_runs.csv"), &per_run)?;
    out.csv(&format!("{stem}_summary.csv"), &summary)?;
    out.json(&format!("{stem}.json"), &json!({"reports": reports, "failures": outcome.failures}))?;

    if let Some(importance) = outcome.mean_importance() {
        let importance = importance?;
        let mut csv = Table::new(["proxy", "gain", "normalized"]);
        for &p in Proxy::ALL {
            csv.push([
                p.as_str().to_string(),
                fmt4(importance.per_proxy_gain[p.index()]),
                fmt4(importance.normalized[p.index()]),
            ]);
        }
        out.csv(&format!("{stem}_importance.csv"), &csv)?;
        out.json(&format!("{stem}_importance.json"), &importance)?;
    }
    if !args.no_dumps {
        for run in &outcome.runs {
            let dump = ModelDump {
                format_version: ModelDump::FORMAT_VERSION,
                seed: run.plan.seed,
                train_task: args.train,
                train_ids: run.plan.train_ids.clone(),
                model: run.model.clone(),
            };
            out.raw(&format!("models/{stem}_seed{}.json", run.plan.seed), &(dump.to_json()? + "\n"))?;
        }
    }
    out.finish();
    Ok(())
}

/// Recall curve of one predictor in the chosen mode.
pub(crate) fn recall_curve(
    ctx: &mut Session,
    spec: PredictorSpec,
    task: TaskId,
    k: usize,
    rank_all_mode: bool,
    runs: usize,
) -> Result<RecallCurve> {
    Ok(match (spec, rank_all_mode) {
        (PredictorSpec::Baseline(b), true) => {
            let ranking = borda_scores(ctx.baseline_predictor(b).as_ref(), &ctx.set);
            RecallCurve::new(&ranking, &ctx.set, task, k, b.name())?
        }
        (PredictorSpec::Baseline(b), false) => {
            let plans = ctx.plans(runs)?;
            recall_over_splits(ctx.baseline_predictor(b).as_ref(), b.name(), &ctx.set, &plans, task, k)?
        }
        (PredictorSpec::Supervised(b), true) => {
            let cfg = ctx.protocol(runs)?;
            let ranking = rank_all(&ctx.set, b, task, &cfg)?;
            RecallCurve::new(&ranking, &ctx.set, task, k, b.as_str())?
        }
        (PredictorSpec::Supervised(b), false) => {
            let outcome = ctx.outcome(b, task, runs)?.clone();
            held_out_recall(&outcome, &ctx.set, task, k)?
        }
    })
}

fn rank(ctx: &mut Session, args: &RankArgs) -> Result<()> {
    let tasks = tasks(&args.tasks)?;
    let mode = if args.rank_all { "all" } else { "held_out" };
    let mut out = ctx.output(
        "rank",
        json!({
            "tasks": task_names(&tasks),
            "predictor": args.predictor.name(),
            "k": args.k,
            "mode": mode,
            "runs": args.runs,
        }),
        ctx.seeds(args.runs),
    )?;
    let name = args.predictor.name();
    for &task in &tasks {
        let mut ranking_csv = Table::new(["seed", "position", "id", "wins", "true_position", "sft"]);
        let full_set = args.rank_all || matches!(args.predictor, PredictorSpec::Baseline(_));
        if full_set {
            let ranking = match args.predictor {
                PredictorSpec::Baseline(b) => borda_scores(ctx.baseline_predictor(b).as_ref(), &ctx.set),
                PredictorSpec::Supervised(b) => rank_all(&ctx.set, b, task, &ctx.protocol(args.runs)?)?,
            };
            push_ranking(&mut ranking_csv, "", &ranking, &ctx.set, task)?;
        } else if let PredictorSpec::Supervised(b) = args.predictor {
            let outcome = ctx.outcome(b, task, args.runs)?.clone();
            for run in &outcome.runs {
                let test = ctx.set.subset(&run.plan.test_ids)?;
                let predictor = ltcrank::predictor::ComparatorPredictor(run.model.as_comparator());
                let ranking = borda_scores(&predictor, &test);
                push_ranking(&mut ranking_csv, &run.plan.seed.to_string(), &ranking, &test, task)?;
            }
        }
        out.csv(&format!("ranking_{name}_{task}.csv"), &ranking_csv)?;

        let mut recall_csv = Table::new(["k", "cutoff", "recall"]);
        for &k in &args.k {
            let curve = recall_curve(ctx, args.predictor, task, k, args.rank_all, args.runs)?;
            println!(
                "{name} {task} top-{k}: full recall at cutoff {}",
                curve
                    .full_recall_cutoff()
                    .map_or("never".to_string(), |c| c.to_string())
            );
            for (c, r) in curve.cutoffs.iter().zip(&curve.recall) {
                recall_csv.push([k.to_string(), c.to_string(), fmt4(*r)]);
            }
        }
        out.csv(&format!("recall_{name}_{task}.csv"), &recall_csv)?;
    }
    out.finish();
    Ok(())
}

fn push_ranking(
    table: &mut Table,
    seed: &str,
    ranking: &ltcrank::ranking::BordaRanking,
    set: &ModelSet,
    task: TaskId,
) -> Result<()> {
    let truth = true_ranking(set, task);
    for (pos, id) in ranking.ranking.iter().enumerate() {
        let true_pos = truth.iter().position(|t| t == id).map_or(0, |p| p + 1);
        table.push([
            seed.to_string(),
            (pos + 1).to_string(),
            id.to_string(),
            ranking.score(*id).unwrap_or(0).to_string(),
            true_pos.to_string(),
            set.get(*id)?.sft.get(task).to_string(),
        ]);
    }
    Ok(())
}

pub(crate) fn grouped_matrices(ctx: &Session, args: &GroupedArgs) -> Result<Vec<(Proxy, GroupedMatrix)>> {
    let tasks = tasks(&args.tasks)?;
    let mut out = Vec::new();
    for &task in &tasks {
        for &proxy in &args.proxies {
            let m = grouped_accuracy(&ctx.set, &ProxyPredictor(proxy), proxy.as_str(), task, args.factor)?;
            out.push((proxy, m));
        }
    }
    Ok(out)
}

pub(crate) fn grouped_table(m: &GroupedMatrix) -> Table {
    let mut t = Table::new(["group_a", "group_b", "pairs", "accuracy"]);
    for (i, a) in m.groups.iter().enumerate() {
        for (j, b) in m.groups.iter().enumerate() {
            if i == j {
                continue;
            }
            t.push([
                a.clone(),
                b.clone(),
                m.counts[i][j].to_string(),
                m.cells[i][j].map(fmt4).unwrap_or_default(),
            ]);
        }
    }
    t
}

fn grouped(ctx: &Session, args: &GroupedArgs) -> Result<()> {
    let matrices = grouped_matrices(ctx, args)?;
    let mut out = ctx.output(
        "grouped",
        json!({"factor": args.factor, "proxies": args.proxies, "tasks": args.tasks.tasks}),
        Vec::new(),
    )?;
    for (proxy, m) in &matrices {
        println!("{proxy} on {} by {}:", m.task, m.factor);
        for (i, a) in m.groups.iter().enumerate() {
            let cells: Vec<String> = m.cells[i]
                .iter()
                .map(|c| c.map_or("   -  ".to_string(), fmt4))
                .collect();
            println!("  {a:<12} {}", cells.join(" "));
        }
        let stem = format!("grouped_{}_{proxy}_{}", m.factor, m.task);
        out.csv(&format!("{stem}.csv"), &grouped_table(m))?;
        out.json(&format!("{stem}.json"), m)?;
    }
    out.finish();
    Ok(())
}
