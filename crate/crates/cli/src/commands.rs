use std::collections::BTreeMap;
use std::time::Instant;

use osc_core::derivations::{check_grid, default_grid, dyadic_grid, index_profile, IndexProfile};
use osc_core::extend::{
    glue_extension, iterated_extension, layered_extension, limsup_extension, retract_report,
    scattered_extension, ExtensionReport, Method,
};
use osc_core::space::io::FieldDocument;
use osc_core::space::MetricCheck;
use osc_core::{instances, Error, Instance, Metric, Result, ScalarField, ScalePolicy, SubsetMask};
use serde::Serialize;

use crate::args::{
    Command, CompareArgs, Ex1Args, ExtendArgs, Format, IndexArgs, MethodKnobs, Profiling, Source,
    ValidateArgs,
};
use crate::output::{self, emit, index_label, plot_points, sizes, write_plot_data, PlotPoint};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate(args) => validate(args),
        Command::Index(args) => index(args),
        Command::Extend(args) => extend(args),
        Command::Compare(args) => compare(args),
        Command::Ex1(args) => ex1(args),
    }
}

/// `random:N:DIM` takes its seed from `--seed`.
fn seeded_spec(spec: &str, seed: u64) -> String {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 && parts[0].trim() == "random" {
        format!("random:{seed}:{}:{}", parts[1], parts[2])
    } else {
        spec.to_string()
    }
}

fn load(source: &Source) -> Result<Instance> {
    match (&source.instance, &source.generate) {
        (Some(path), None) => Instance::load(path),
        (None, Some(spec)) => instances::generate(&seeded_spec(spec, source.seed)),
        _ => Err(Error::InvalidParameter(
            "give exactly one of --instance or --generate".into(),
        )),
    }
}

fn metric_kind(metric: &Metric) -> &'static str {
    match metric {
        Metric::Matrix { .. } => "matrix",
        Metric::Cantor { .. } => "cantor",
        Metric::Euclidean { .. } => "euclidean",
    }
}

/// The requested grid, or the dyadic grid plus the triadic one on Cantor spaces.
fn grid(profiling: &Profiling, metric: Option<&Metric>) -> Result<Vec<f64>> {
    let grid = match &profiling.epsilon_grid {
        Some(grid) => grid.clone(),
        None if matches!(metric, Some(Metric::Cantor { .. }) | None) => default_grid(),
        None => dyadic_grid(),
    };
    check_grid(&grid)?;
    Ok(grid)
}

/// `f` restricted to the named subset, or to its own domain.
fn field_on(
    inst: &Instance,
    field: &str,
    subset: Option<&str>,
) -> Result<(SubsetMask, ScalarField)> {
    let f = inst.field(field)?;
    let domain = match subset {
        Some(name) => inst.subset(name)?.clone(),
        None => f.domain().clone(),
    };
    Ok((domain.clone(), f.restrict(&domain)?))
}

/// Like [`field_on`], but defaulting to the subset `Y` when the instance has one.
fn extension_inputs(
    inst: &Instance,
    field: &str,
    subset: Option<&str>,
) -> Result<(SubsetMask, ScalarField)> {
    let subset = subset.or_else(|| inst.subsets.contains_key("Y").then_some("Y"));
    field_on(inst, field, subset)
}

fn run_method(
    method: Method,
    inst: &Instance,
    y: &SubsetMask,
    f: &ScalarField,
    policy: ScalePolicy,
    knobs: &MethodKnobs,
) -> Result<ExtensionReport> {
    let space = &inst.space;
    match method {
        Method::Glue => glue_extension(space, y, f, knobs.epsilon, policy),
        Method::Iterated => iterated_extension(space, y, f, policy, knobs.rounds),
        Method::Layered => layered_extension(space, y, f, policy, knobs.max_layers),
        Method::Limsup => limsup_extension(space, y, f),
        Method::Scattered => scattered_extension(space, y, f, policy),
        Method::Retract => retract_report(space, y, f),
    }
}

fn millis(start: Instant, timing: bool) -> f64 {
    if timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

#[derive(Serialize)]
struct ValidateSummary<'a> {
    name: &'a str,
    points: usize,
    diameter: f64,
    resolution: f64,
    metric: &'static str,
    metric_check: MetricCheck,
    subsets: BTreeMap<&'a str, usize>,
    fields: BTreeMap<&'a str, usize>,
}

fn validate(args: ValidateArgs) -> Result<()> {
    let inst = load(&args.source)?;
    let space = &inst.space;
    let summary = ValidateSummary {
        name: space.name(),
        points: space.len(),
        diameter: space.diameter(),
        resolution: space.resolution(),
        metric: metric_kind(space.metric()),
        metric_check: space.validate()?,
        subsets: inst
            .subsets
            .iter()
            .map(|(k, v)| (k.as_str(), v.len()))
            .collect(),
        fields: inst
            .fields
            .iter()
            .map(|(k, v)| (k.as_str(), v.domain().len()))
            .collect(),
    };
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => output::json(&summary)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                key: String,
                value: String,
            }
            let check = &summary.metric_check;
            let pairs = [
                ("name", summary.name.to_string()),
                ("points", summary.points.to_string()),
                ("diameter", summary.diameter.to_string()),
                ("resolution", summary.resolution.to_string()),
                ("metric", summary.metric.to_string()),
                ("exhaustive", check.exhaustive.to_string()),
                ("triples_checked", check.triples_checked.to_string()),
            ];
            let rows: Vec<Row> = pairs
                .into_iter()
                .map(|(k, v)| Row {
                    key: k.into(),
                    value: v,
                })
                .collect();
            output::csv(&rows)?
        }
    };
    emit(&text, args.output.out.as_deref())
}

#[derive(Serialize)]
struct IndexRow {
    epsilon: f64,
    index: String,
    level_sizes: String,
}

fn index_rows(profile: &IndexProfile) -> Vec<IndexRow> {
    profile
        .entries
        .iter()
        .map(|e| IndexRow {
            epsilon: e.epsilon,
            index: index_label(&e.index),
            level_sizes: sizes(&e.level_sizes),
        })
        .collect()
}

#[derive(Serialize)]
struct IndexReport<'a> {
    instance: &'a str,
    field: &'a str,
    points: usize,
    profile: &'a IndexProfile,
}

fn index(args: IndexArgs) -> Result<()> {
    let inst = load(&args.source)?;
    let (p, f) = field_on(&inst, &args.field, args.subset.as_deref())?;
    let grid = grid(&args.profiling, Some(inst.space.metric()))?;
    let profile = index_profile(&inst.space, &f, &p, args.profiling.policy, &grid)?;
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => output::csv(&index_rows(&profile))?,
        Format::Json => output::json(&IndexReport {
            instance: inst.space.name(),
            field: &args.field,
            points: p.len(),
            profile: &profile,
        })?,
    };
    emit(&text, args.output.out.as_deref())?;
    write_plot_data(
        args.emit_plot_data.as_deref(),
        &plot_points(&args.field, &profile.entries),
    )
}

#[derive(Serialize)]
struct ExtendSummary {
    method: Method,
    restriction_error: f64,
    patched_points: usize,
    max_patch: f64,
    assertions_checked: usize,
    assertion_failures: usize,
}

fn extend(args: ExtendArgs) -> Result<()> {
    let inst = load(&args.source)?;
    let (y, f) = extension_inputs(&inst, &args.field, args.subset.as_deref())?;
    let report = run_method(args.method, &inst, &y, &f, args.policy, &args.knobs)?;
    if let Some(path) = &args.out {
        let mut doc = inst.to_document();
        let (domain, values) = report.field.iter().unzip();
        doc.fields
            .insert("F".into(), FieldDocument { domain, values });
        Instance::from_document(doc)?.save(path)?;
    }
    eprintln!(
        "{}: patched {} points of Y, max |F - f| before patch {}; assertion log {} ({} checks)",
        args.method,
        report.patch.patched_points,
        report.patch.max_magnitude,
        if report.assertion_log.is_empty() {
            "empty"
        } else {
            "NOT EMPTY"
        },
        report.assertions_checked
    );
    let text = match args.format.unwrap_or(Format::Json) {
        Format::Json => output::json(&report)?,
        Format::Csv => output::csv(&[ExtendSummary {
            method: report.method,
            restriction_error: report.restriction_error,
            patched_points: report.patch.patched_points,
            max_patch: report.patch.max_magnitude,
            assertions_checked: report.assertions_checked,
            assertion_failures: report.assertion_log.len(),
        }])?,
    };
    emit(&text, None)
}

#[derive(Serialize)]
struct CompareRow {
    method: Method,
    epsilon: f64,
    index: String,
    level_sizes: String,
    build_ms: f64,
    index_ms: f64,
    patched_points: usize,
    max_patch: f64,
}

fn compare(args: CompareArgs) -> Result<()> {
    if args.methods.len() < 2 {
        return Err(Error::InvalidParameter(
            "compare needs at least two methods".into(),
        ));
    }
    let inst = load(&args.source)?;
    let (y, f) = extension_inputs(&inst, &args.field, args.subset.as_deref())?;
    let grid = grid(&args.profiling, Some(inst.space.metric()))?;
    let policy = args.profiling.policy;
    let timing = !args.no_timing;
    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut columns = Vec::new();
    for &method in &args.methods {
        let start = Instant::now();
        let report = run_method(method, &inst, &y, &f, policy, &args.knobs)?;
        let build_ms = millis(start, timing);
        let start = Instant::now();
        let profile = index_profile(&inst.space, &report.field, &inst.space.all(), policy, &grid)?;
        let index_ms = millis(start, timing) / grid.len() as f64;
        for e in &profile.entries {
            rows.push(CompareRow {
                method,
                epsilon: e.epsilon,
                index: index_label(&e.index),
                level_sizes: sizes(&e.level_sizes),
                build_ms,
                index_ms,
                patched_points: report.patch.patched_points,
                max_patch: report.patch.max_magnitude,
            });
        }
        plot.extend(plot_points(method.name(), &profile.entries));
        columns.push(
            profile
                .entries
                .iter()
                .map(|e| index_label(&e.index))
                .collect::<Vec<_>>(),
        );
    }

    let header: Vec<String> = std::iter::once("epsilon".to_string())
        .chain(args.methods.iter().map(|m| m.name().to_string()))
        .collect();
    let table: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, eps)| {
            std::iter::once(format!("{eps:.6}"))
                .chain(columns.iter().map(|c| c[i].clone()))
                .collect()
        })
        .collect();
    output::print_table(&header, &table);

    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => output::csv(&rows)?,
        Format::Json => output::json(&rows)?,
    };
    emit(&text, args.output.out.as_deref())?;
    write_plot_data(args.emit_plot_data.as_deref(), &plot)
}

#[derive(Serialize)]
struct Ex1Row {
    depth: usize,
    method: Method,
    epsilon: f64,
    index: String,
    level_sizes: String,
    build_ms: f64,
    max_patch: f64,
}

fn ex1(args: Ex1Args) -> Result<()> {
    if args.depths.is_empty() {
        return Err(Error::InvalidParameter("give at least one depth".into()));
    }
    let grid = grid(&args.profiling, None)?;
    let policy = args.profiling.policy;
    let timing = !args.no_timing;
    let mut rows = Vec::new();
    let mut plot: Vec<PlotPoint> = Vec::new();
    for &depth in &args.depths {
        let inst = instances::generate(&format!("cantor:{depth}"))?;
        let (y, f) = extension_inputs(&inst, "f", None)?;
        let mut maxima = Vec::new();
        for method in [Method::Layered, Method::Limsup] {
            let start = Instant::now();
            let report = match method {
                Method::Layered => layered_extension(&inst.space, &y, &f, policy, args.max_layers)?,
                _ => limsup_extension(&inst.space, &y, &f)?,
            };
            let build_ms = millis(start, timing);
            let profile =
                index_profile(&inst.space, &report.field, &inst.space.all(), policy, &grid)?;
            for e in &profile.entries {
                rows.push(Ex1Row {
                    depth,
                    method,
                    epsilon: e.epsilon,
                    index: index_label(&e.index),
                    level_sizes: sizes(&e.level_sizes),
                    build_ms,
                    max_patch: report.patch.max_magnitude,
                });
            }
            plot.extend(plot_points(&format!("{method}-d{depth}"), &profile.entries));
            let top = match profile.max_finite() {
                Some(n) => n.to_string(),
                None => "not finite".to_string(),
            };
            maxima.push((
                method,
                top,
                profile.entries.iter().all(|e| e.index.at_most(3)),
            ));
        }
        for (method, top, within) in maxima {
            eprintln!(
                "depth {depth}: {method} largest index {top}{}",
                if method == Method::Layered {
                    if within {
                        " (at most 3)"
                    } else {
                        " (EXCEEDS 3)"
                    }
                } else {
                    ""
                }
            );
        }
    }
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => output::csv(&rows)?,
        Format::Json => output::json(&rows)?,
    };
    emit(&text, args.output.out.as_deref())?;
    write_plot_data(args.emit_plot_data.as_deref(), &plot)
}
