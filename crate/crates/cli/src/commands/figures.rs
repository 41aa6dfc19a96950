use anyhow::Result;
use ltcrank::dataset::Proxy;
use ltcrank::evaluation::{fit_on_all, quantile_buckets, Backbone};
use ltcrank::gbdt::ImportanceReport;
use ltcrank::report::{fmt4, BarChart, LineChart, Series, Table};
use serde_json::json;

use super::{grouped_matrices, grouped_table, recall_curve, task_names, tasks, Session};
use crate::predictors::PredictorSpec;
use crate::{BucketsArgs, Figure, ImportanceArgs, RecallArgs};

pub fn run(ctx: &mut Session, which: &Figure) -> Result<()> {
    match which {
        Figure::Buckets(args) => buckets(ctx, args),
        Figure::Recall(args) => recall(ctx, args),
        Figure::Grouped(args) => grouped(ctx, args),
        Figure::Importance(args) => importance(ctx, args),
    }
}

fn names(specs: &[PredictorSpec]) -> Vec<&'static str> {
    specs.iter().map(|p| p.name()).collect()
}

fn buckets(ctx: &mut Session, args: &BucketsArgs) -> Result<()> {
    let tasks = tasks(&args.tasks)?;
    let mut out = ctx.output(
        "figures buckets",
        json!({"tasks": task_names(&tasks), "predictors": names(&args.predictors), "buckets": args.buckets, "runs": args.runs}),
        ctx.seeds(args.runs),
    )?;
    for &task in &tasks {
        let mut table = Table::new(["predictor", "bucket", "min_gap", "max_gap", "pairs", "accuracy"]);
        let mut series = Vec::new();
        for &spec in &args.predictors {
            let report = match spec {
                PredictorSpec::Baseline(b) => {
                    quantile_buckets(&ctx.set, ctx.baseline_predictor(b).as_ref(), b.name(), task, args.buckets)?
                }
                PredictorSpec::Supervised(b) => {
                    let outcome = ctx.outcome(b, task, args.runs)?.clone();
                    outcome.quantile_buckets(&ctx.set, task, args.buckets)?
                }
            };
            for b in &report.buckets {
                table.push([
                    report.predictor.clone(),
                    b.index.to_string(),
                    fmt4(b.min_gap),
                    fmt4(b.max_gap),
                    b.pairs.to_string(),
                    fmt4(b.accuracy),
                ]);
            }
            println!(
                "{:<10} {task}: {}",
                report.predictor,
                report.buckets.iter().map(|b| fmt4(b.accuracy)).collect::<Vec<_>>().join(" ")
            );
            series.push(Series::new(report.predictor, report.buckets.iter().map(|b| b.accuracy).collect()));
        }
        let chart = LineChart {
            title: format!("Accuracy by score-gap quantile, {}", task.label()),
            x_label: "gap quantile (small to large)".into(),
            y_label: "pairwise accuracy".into(),
            x: (1..=args.buckets).map(|i| i as f64).collect(),
            series,
        };
        out.csv(&format!("buckets_{task}.csv"), &table)?;
        out.svg(&format!("buckets_{task}.svg"), &chart.render())?;
    }
    out.finish();
    Ok(())
}

fn recall(ctx: &mut Session, args: &RecallArgs) -> Result<()> {
    let tasks = tasks(&args.tasks)?;
    let mode = if args.rank_all { "all" } else { "held_out" };
    let mut out = ctx.output(
        "figures recall",
        json!({"tasks": task_names(&tasks), "predictors": names(&args.predictors), "k": args.k, "mode": mode, "runs": args.runs}),
        ctx.seeds(args.runs),
    )?;
    for &task in &tasks {
        for &k in &args.k {
            let mut table = Table::new(["predictor", "cutoff", "recall"]);
            let mut series = Vec::new();
            let mut x = Vec::new();
            for &spec in &args.predictors {
                let curve = recall_curve(ctx, spec, task, k, args.rank_all, args.runs)?;
                for (c, r) in curve.cutoffs.iter().zip(&curve.recall) {
                    table.push([curve.predictor.clone(), c.to_string(), fmt4(*r)]);
                }
                println!(
                    "{:<10} {task} top-{k}: full recall at cutoff {}",
                    curve.predictor,
                    curve
                        .full_recall_cutoff()
                        .map_or("never".to_string(), |c| c.to_string())
                );
                x = curve.cutoffs.iter().map(|&c| c as f64).collect();
                series.push(Series::new(curve.predictor, curve.recall));
            }
            let chart = LineChart {
                title: format!("Top-{k} recall, {}", task.label()),
                x_label: "cutoff".into(),
                y_label: "recall".into(),
                x,
                series,
            };
            out.csv(&format!("recall_top{k}_{task}.csv"), &table)?;
            out.svg(&format!("recall_top{k}_{task}.svg"), &chart.render())?;
        }
    }
    out.finish();
    Ok(())
}

fn grouped(ctx: &mut Session, args: &crate::GroupedArgs) -> Result<()> {
    let matrices = grouped_matrices(ctx, args)?;
    let mut out = ctx.output(
        "figures grouped",
        json!({"factor": args.factor, "proxies": args.proxies, "tasks": args.tasks.tasks}),
        Vec::new(),
    )?;
    for (proxy, m) in &matrices {
        let stem = format!("grouped_{}_{proxy}_{}", m.factor, m.task);
        let series = m
            .groups
            .iter()
            .enumerate()
            .map(|(j, g)| {
                Series::new(
                    format!("vs {g}"),
                    (0..m.groups.len()).map(|i| m.cells[i][j].unwrap_or(f64::NAN)).collect(),
                )
            })
            .collect();
        let chart = BarChart {
            title: format!("{} accuracy between {} groups, {}", proxy.label(), m.factor, m.task.label()),
            x_label: m.factor.to_string(),
            y_label: "pairwise accuracy".into(),
            categories: m.groups.clone(),
            series,
        };
        out.csv(&format!("{stem}.csv"), &grouped_table(m))?;
        out.svg(&format!("{stem}.svg"), &chart.render())?;
    }
    out.finish();
    Ok(())
}

fn importance(ctx: &mut Session, args: &ImportanceArgs) -> Result<()> {
    let tasks = tasks(&args.tasks)?;
    let cfg = ctx.protocol(args.runs)?;
    let mode = if args.per_split { "per_split_mean" } else { "all_pairs" };
    let seeds = if args.per_split { cfg.seeds.clone() } else { vec![cfg.seeds[0]] };
    let mut out = ctx.output(
        "figures importance",
        json!({"tasks": task_names(&tasks), "mode": mode, "runs": args.runs, "gbdt": cfg.gbdt}),
        seeds,
    )?;
    let mut table = Table::new(["task", "proxy", "gain", "normalized"]);
    let mut reports: Vec<(String, ImportanceReport)> = Vec::new();
    for &task in &tasks {
        let report = if args.per_split {
            ctx.outcome(Backbone::Gbdt, task, args.runs)?
                .mean_importance()
                .expect("gbdt outcomes carry importance")?
        } else {
            fit_on_all(&ctx.set, Backbone::Gbdt, task, &cfg)?
                .importance()
                .expect("gbdt models carry importance")?
        };
        for &p in Proxy::ALL {
            table.push([
                task.as_str().to_string(),
                p.as_str().to_string(),
                fmt4(report.per_proxy_gain[p.index()]),
                fmt4(report.normalized[p.index()]),
            ]);
        }
        println!("{task}: most important proxy {}", report.top_proxy());
        reports.push((task.as_str().to_string(), report));
    }
    let chart = BarChart {
        title: "Normalized gain importance per proxy".into(),
        x_label: "task".into(),
        y_label: "share of gain".into(),
        categories: tasks.iter().map(|t| t.label().to_string()).collect(),
        series: Proxy::ALL
            .iter()
            .map(|p| Series::new(p.label(), reports.iter().map(|(_, r)| r.normalized[p.index()]).collect()))
            .collect(),
    };
    out.csv("importance.csv", &table)?;
    out.json("importance.json", &reports)?;
    out.svg("importance.svg", &chart.render())?;
    out.finish();
    Ok(())
}
