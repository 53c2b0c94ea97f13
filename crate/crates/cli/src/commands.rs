use mifs_core::clustering::{cluster_features, ClusterOptions, ClusterStop, RepresentativeRule};
use mifs_core::dataset::{generate_friedman, Dataset, TargetColumn};
use mifs_core::estimators::{mi_knn, EstimatorConfig};
use mifs_core::model_selection::{
    choose_k, max_k_for_folds, Aggregation, ChooseKOptions, KSelectionReport,
};
use mifs_core::selection::{forward_backward_select, forward_select, SelectionConfig, StopRule};
use serde_json::{json, Map, Value};
use std::f64::consts::LN_2;

use crate::report::{format_sig, to_value, write_csv, write_text, DatasetSummary, RunReport};
use crate::{
    AggregationArg, CliError, ClusterArgs, DataArgs, EstimateMiArgs, KGridArgs, MethodArg, RuleArg,
    SelectArgs, SelectKArgs, SynthArgs,
};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load(args: &DataArgs) -> Result<(Dataset, DatasetSummary), CliError> {
    let target = match &args.target {
        Some(t) => t
            .parse::<TargetColumn>()
            .unwrap_or_else(|never| match never {}),
        None => TargetColumn::Last,
    };
    let mut d = Dataset::load_csv(&args.input, !args.no_header, &target)?;
    if args.jitter {
        d = d.jittered(args.seed);
    }
    let standardized = !args.no_standardize;
    if standardized {
        d = d.standardize()?.0;
    }
    let summary = DatasetSummary::new(&args.input, &d, standardized, args.jitter);
    Ok((d, summary))
}

fn seeds(entries: &[(&str, u64)]) -> Map<String, Value> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect()
}

fn data_seeds(args: &DataArgs, mut entries: Vec<(&'static str, u64)>) -> Map<String, Value> {
    if args.jitter {
        entries.push(("jitter", args.seed));
    }
    seeds(&entries)
}

fn resolve(d: &Dataset, names: &[String]) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let name = name.trim();
        let j = d
            .feature_index(name)
            .ok_or_else(|| usage(format!("unknown feature '{name}'")))?;
        if out.contains(&j) {
            return Err(usage(format!("feature '{name}' listed twice")));
        }
        out.push(j);
    }
    Ok(out)
}

fn units(bits: bool) -> &'static str {
    if bits {
        "bits"
    } else {
        "nats"
    }
}

fn check_k(k: usize) -> Result<(), CliError> {
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    Ok(())
}

pub fn estimate_mi(args: &EstimateMiArgs, argv: Vec<String>) -> Result<(), CliError> {
    check_k(args.k)?;
    let (d, summary) = load(&args.data)?;
    let subsets: Vec<Vec<usize>> = if args.features.is_empty() {
        (0..d.n_features()).map(|j| vec![j]).collect()
    } else {
        args.features
            .iter()
            .map(|s| {
                let names: Vec<String> = s.split(',').map(str::to_string).collect();
                resolve(&d, &names)
            })
            .collect::<Result<_, _>>()?
    };
    let cfg = EstimatorConfig::new(args.k);
    let y = d.target_matrix();
    let mut estimates = Vec::with_capacity(subsets.len());
    for subset in &subsets {
        let x = d.feature_matrix(subset)?;
        let est = mi_knn(&x, &y, &cfg)?;
        let value = if args.bits { est.bits() } else { est.value };
        let names: Vec<&str> = subset
            .iter()
            .map(|&j| d.feature_names()[j].as_str())
            .collect();
        estimates.push(json!({
            "features": names,
            "indices": subset,
            "value": value,
            "n": est.n,
        }));
    }
    RunReport {
        command: argv,
        seeds: data_seeds(&args.data, Vec::new()),
        dataset: summary,
        payload: json!({
            "kind": "mi_estimates",
            "units": units(args.bits),
            "k": args.k,
            "estimates": estimates,
        }),
    }
    .write(args.data.out.as_deref())
}

/// Validated grid bounds for `choose_k`.
fn grid_bounds(g: &KGridArgs, n: usize) -> Result<(usize, usize), CliError> {
    if g.folds < 2 || g.folds > n {
        return Err(usage(format!(
            "--folds must be between 2 and {n}, got {}",
            g.folds
        )));
    }
    let bound = max_k_for_folds(n, g.folds);
    let k_max = match g.k_max {
        Some(k) if k > bound => {
            return Err(usage(format!(
                "--k-max {k} is too large: with {} folds of {n} samples K can be at most {bound}",
                g.folds
            )))
        }
        Some(k) => k,
        None => 30.min(n / 4).min(bound),
    };
    if g.k_min == 0 || g.k_min > k_max {
        return Err(usage(format!(
            "K grid {}..{k_max} is empty; --k-min must be between 1 and {k_max}",
            g.k_min
        )));
    }
    Ok((g.k_min, k_max))
}

fn aggregation(a: AggregationArg) -> Aggregation {
    match a {
        AggregationArg::Max => Aggregation::Max,
        AggregationArg::Mean => Aggregation::Mean,
    }
}

fn run_choose_k(
    d: &Dataset,
    features: &[usize],
    g: &KGridArgs,
    seed: u64,
) -> Result<KSelectionReport, CliError> {
    let (k_min, k_max) = grid_bounds(g, d.n_samples())?;
    let opts = ChooseKOptions {
        aggregation: aggregation(g.aggregation),
        ..Default::default()
    };
    Ok(choose_k(d, features, k_min, k_max, g.folds, seed, opts)?)
}

fn k_report_value(r: &KSelectionReport, bits: bool) -> Value {
    let mut r = r.clone();
    if bits {
        for c in &mut r.per_feature {
            for v in [
                &mut c.mean_true,
                &mut c.sd_true,
                &mut c.mean_permuted,
                &mut c.sd_permuted,
            ] {
                v.iter_mut().for_each(|x| *x /= LN_2);
            }
        }
    }
    to_value(&r)
}

pub fn select_k(args: &SelectKArgs, argv: Vec<String>) -> Result<(), CliError> {
    let (d, summary) = load(&args.data)?;
    let features = if args.features.is_empty() {
        (0..d.n_features()).collect()
    } else {
        resolve(&d, &args.features)?
    };
    let report = run_choose_k(&d, &features, &args.grid, args.data.seed)?;
    if let Some(path) = &args.t_csv {
        let rows: Vec<Vec<String>> = report
            .per_feature
            .iter()
            .flat_map(|c| {
                report
                    .k_grid
                    .iter()
                    .zip(&c.t)
                    .map(|(k, t)| vec![c.name.clone(), k.to_string(), format_sig(t.0)])
            })
            .collect();
        write_csv(path, &["feature", "K", "t_K"], &rows)?;
    }
    RunReport {
        command: argv,
        seeds: data_seeds(&args.data, vec![("k_selection", args.data.seed)]),
        dataset: summary,
        payload: json!({
            "kind": "k_selection",
            "units": units(args.bits),
            "chosen_k": report.chosen_k,
            "report": k_report_value(&report, args.bits),
        }),
    }
    .write(args.data.out.as_deref())
}

pub fn select(args: &SelectArgs, argv: Vec<String>) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(usage(format!(
            "--alpha must lie in [0, 1], got {}",
            args.alpha
        )));
    }
    if args.permutations == 0 {
        return Err(usage("--permutations must be at least 1"));
    }
    if let Some(k) = args.k {
        check_k(k)?;
    }
    let (d, summary) = load(&args.data)?;
    let m = d.n_features();
    if let Some(s) = args.max_size {
        if s == 0 || s > m {
            return Err(usage(format!(
                "--max-size must be between 1 and {m}, got {s}"
            )));
        }
    }
    if let Some(s) = args.cv {
        if s < 2 || s > d.n_samples() {
            return Err(usage(format!(
                "--cv must be between 2 and {}, got {s}",
                d.n_samples()
            )));
        }
    }
    let seed = args.data.seed;
    let k_report = match args.k {
        Some(_) => None,
        None => Some(run_choose_k(
            &d,
            &(0..m).collect::<Vec<_>>(),
            &args.grid,
            seed,
        )?),
    };
    let k = args
        .k
        .or(k_report.as_ref().map(|r| r.chosen_k))
        .expect("K is fixed or chosen");
    let config = SelectionConfig {
        alpha: args.alpha,
        permutations: args.permutations,
        max_size: args.max_size,
        stop_rule: if args.legacy_stop {
            StopRule::FirstDecrease
        } else {
            StopRule::Permutation
        },
        cv_folds: args.cv,
        ..SelectionConfig::new(k, seed)
    };
    let mut trace = match args.method {
        MethodArg::Forward => forward_select(&d, &config)?,
        MethodArg::ForwardBackward => forward_backward_select(&d, &config)?,
    };
    if args.bits {
        for s in &mut trace.steps {
            s.mi_value = s.mi_value.map(|v| v / LN_2);
        }
    }
    let selected: Vec<&str> = trace
        .final_set
        .iter()
        .map(|&j| d.feature_names()[j].as_str())
        .collect();
    let mut entries = vec![("selection", seed)];
    if k_report.is_some() {
        entries.insert(0, ("k_selection", seed));
    }
    RunReport {
        command: argv,
        seeds: data_seeds(&args.data, entries),
        dataset: summary,
        payload: json!({
            "kind": "selection",
            "units": units(args.bits),
            "k": k,
            "k_selection": k_report.as_ref().map(|r| k_report_value(r, args.bits)),
            "selected": selected,
            "trace": to_value(&trace),
        }),
    }
    .write(args.data.out.as_deref())
}

pub fn cluster(args: &ClusterArgs, argv: Vec<String>) -> Result<(), CliError> {
    check_k(args.k)?;
    let stop = match (args.clusters, args.min_similarity) {
        (Some(c), _) => ClusterStop::TargetCount(c),
        (None, Some(t)) if t.is_finite() => ClusterStop::MinSimilarity(t),
        (None, Some(t)) => return Err(usage(format!("--min-similarity must be finite, got {t}"))),
        (None, None) => unreachable!("clap requires one stop rule"),
    };
    let (d, summary) = load(&args.data)?;
    let m = d.n_features();
    if let ClusterStop::TargetCount(c) = stop {
        if c == 0 || c > m {
            return Err(usage(format!(
                "--clusters must be between 1 and {m}, got {c}"
            )));
        }
    }
    if m < 2 {
        return Err(usage("clustering needs at least two features"));
    }
    let options = ClusterOptions {
        stop,
        rule: match args.rule {
            RuleArg::MaxMi => RepresentativeRule::MaxMi,
            RuleArg::MemberAverage => RepresentativeRule::MemberAverage,
        },
        k: args.k,
        unsupervised: args.unsupervised,
    };
    let dendro = cluster_features(&d, &options)?;
    let names = d.feature_names();
    if let Some(path) = &args.merges_csv {
        let rows: Vec<Vec<String>> = dendro
            .merges
            .iter()
            .enumerate()
            .map(|(i, mg)| {
                vec![
                    (i + 1).to_string(),
                    mg.item_a.to_string(),
                    mg.item_b.to_string(),
                    format_sig(mg.similarity),
                    names[mg.representative].clone(),
                ]
            })
            .collect();
        write_csv(
            path,
            &["step", "item_a", "item_b", "similarity", "representative"],
            &rows,
        )?;
    }
    let clusters: Vec<Value> = dendro
        .clusters
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "members": c.members.iter().map(|&j| &names[j]).collect::<Vec<_>>(),
                "representative": names[c.representative],
            })
        })
        .collect();
    RunReport {
        command: argv,
        seeds: data_seeds(&args.data, Vec::new()),
        dataset: summary,
        payload: json!({
            "kind": "clustering",
            "clusters": clusters,
            "dendrogram": to_value(&dendro),
        }),
    }
    .write(args.data.out.as_deref())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let d = generate_friedman(args.n as usize, args.seed)?;
    let mut buf = Vec::new();
    d.write_csv(&mut buf)
        .map_err(|e| CliError::Data(format!("cannot format CSV: {e}")))?;
    let text = String::from_utf8(buf).expect("CSV output is UTF-8");
    write_text(args.out.as_deref(), &text)
}
