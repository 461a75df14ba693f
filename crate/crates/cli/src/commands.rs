use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use tenspart::expansion::{expand, subgraph_export};
use tenspart::lowrank::{approx_nonsymmetric_via_embedding, hooi, hooi_symmetric};
use tenspart::partition::{analyze, insignificant_indices, restrict_and_recurse};
use tenspart::preprocess::{bin_and_symmetrize, load_coordinate_file, normalize, save_coordinate_file};
use tenspart::{
    ExpansionConfig, LabelTable, PartitionOptions, PartitionReport, RankApproximation, RecordLog, SparseTensor3,
    TensorView,
};

use crate::args::{ApproxArgs, ExpandArgs, IngestArgs, InputFormat, NormalizeArgs, PartitionArgs, SolverArgs};
use crate::output::*;

/// Whether every solve converged. Results are written either way.
pub type Converged = bool;

/// Fraction of `max|u1|` below which an index is reported as insignificant.
const INSIGNIFICANT_REL: f64 = 1e-2;

fn ranks(v: &[usize]) -> [usize; 3] {
    [v[0], v[1], v[2]]
}

fn load_input(path: &Path, solver: &SolverArgs, symmetric: bool) -> CliResult<SparseTensor3> {
    let t = load_coordinate_file(path, None)?;
    Ok(normalize(&t, solver.normalize.into(), symmetric)?)
}

fn load_labels(path: Option<&PathBuf>, extent: usize) -> CliResult<Option<LabelTable>> {
    let Some(p) = path else { return Ok(None) };
    let table = LabelTable::load(p)?;
    table.check_extent(extent)?;
    Ok(Some(table))
}

fn summary(t: &SparseTensor3) -> String {
    let [l, m, n] = t.dims();
    format!("dims {l} {m} {n}  nnz {}  norm {}", t.nnz(), t.frobenius_norm())
}

#[derive(Serialize)]
struct TensorSummary {
    dims: [usize; 3],
    nnz: usize,
    frobenius_norm: f64,
    files: Vec<PathBuf>,
}

impl TensorSummary {
    fn of(t: &SparseTensor3, files: Vec<PathBuf>) -> Self {
        Self {
            dims: t.dims(),
            nnz: t.nnz(),
            frobenius_norm: t.frobenius_norm(),
            files,
        }
    }
}

pub fn ingest(a: &IngestArgs) -> CliResult<Converged> {
    let format = a.format.unwrap_or_else(|| {
        let csv = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if csv {
            InputFormat::LogCsv
        } else {
            InputFormat::Tns
        }
    });
    ensure_dir(&a.out)?;
    let tensor_path = a.out.join("tensor.tns");
    let mut files = vec![tensor_path.clone()];
    let tensor = match format {
        InputFormat::Tns => {
            if a.bin_size.is_some() || a.restrict {
                return Err(Failure::validation("--bin-size and --restrict apply to log-csv input"));
            }
            let dims = a.dims.as_deref().map(ranks);
            load_coordinate_file(&a.input, dims)?
        }
        InputFormat::LogCsv => {
            if a.dims.is_some() {
                return Err(Failure::validation("--dims applies to tns input"));
            }
            let bin = a.bin_size.ok_or_else(|| Failure::validation("log-csv input needs --bin-size"))?;
            let log = RecordLog::load(&a.input)?;
            let (t, labels) = bin_and_symmetrize(&log, bin, a.restrict)?;
            let labels_path = a.out.join("labels.txt");
            labels.save(&labels_path)?;
            let vocab_path = a.out.join("vocabulary.txt");
            LabelTable::new(log.vocabulary().to_vec()).save(&vocab_path)?;
            files.extend([labels_path, vocab_path]);
            t
        }
    };
    save_coordinate_file(&tensor, &tensor_path)?;
    println!("{}", summary(&tensor));
    let env = Envelope {
        tool: "tenspart",
        version: env!("CARGO_PKG_VERSION"),
        command: "ingest",
        config: a,
        inputs: digests([&a.input])?,
        warnings: Vec::new(),
        result: TensorSummary::of(&tensor, files),
    };
    write_json(&a.out.join("ingest.json"), &env)?;
    Ok(true)
}

pub fn normalize_cmd(a: &NormalizeArgs) -> CliResult<Converged> {
    let t = load_coordinate_file(&a.input, None)?;
    let n = normalize(&t, a.normalize.into(), a.symmetric)?;
    ensure_dir(&a.out)?;
    let path = a.out.join("tensor.tns");
    save_coordinate_file(&n, &path)?;
    println!("{}", summary(&n));
    let env = Envelope {
        tool: "tenspart",
        version: env!("CARGO_PKG_VERSION"),
        command: "normalize",
        config: a,
        inputs: digests([&a.input])?,
        warnings: Vec::new(),
        result: TensorSummary::of(&n, vec![path]),
    };
    write_json(&a.out.join("normalize.json"), &env)?;
    Ok(true)
}

#[derive(Serialize)]
struct ApproxSummary<'a> {
    ranks: [usize; 3],
    objective: f64,
    total_norm: f64,
    residual_norm: f64,
    iterations: usize,
    converged: bool,
    rank_deficient: bool,
    restarts_disagree: bool,
    restart_objectives: &'a [f64],
    objective_history: &'a [f64],
    core: &'a tenspart::DenseTensor3,
}

impl<'a> ApproxSummary<'a> {
    fn of(r: &'a RankApproximation, t: &SparseTensor3) -> Self {
        Self {
            ranks: r.ranks(),
            objective: r.objective(),
            total_norm: t.frobenius_norm(),
            residual_norm: r.residual_norm_sq(t).max(0.0).sqrt(),
            iterations: r.iterations,
            converged: r.converged,
            rank_deficient: r.rank_deficient,
            restarts_disagree: r.restarts_disagree,
            restart_objectives: &r.restart_objectives,
            objective_history: &r.objective_history,
            core: &r.core,
        }
    }
}

fn write_factors(out: &Path, r: &RankApproximation) -> CliResult<()> {
    write_text(&out.join("u.csv"), &matrix_csv(&r.u))?;
    write_text(&out.join("v.csv"), &matrix_csv(&r.v))?;
    write_text(&out.join("w.csv"), &matrix_csv(&r.w))
}

fn solver_warnings(r: &RankApproximation) -> Vec<String> {
    let mut w = Vec::new();
    if !r.converged {
        w.push(format!("solver stopped after {} iterations without converging", r.iterations));
    }
    if r.restarts_disagree {
        w.push("restarts reached different objectives".into());
    }
    if r.rank_deficient {
        w.push("a mode unfolding has lower rank than requested".into());
    }
    w
}

pub fn approx(a: &ApproxArgs) -> CliResult<Converged> {
    let t = load_input(&a.input, &a.solver, a.symmetric)?;
    let cfg = a.solver.config(a.symmetric);
    let rk = ranks(&a.rank);
    let view = TensorView::new(&t, cfg.execution);
    let r = if a.symmetric {
        hooi_symmetric(&view, rk, &cfg)?
    } else if a.via_embedding {
        approx_nonsymmetric_via_embedding(&t, rk, &cfg)?
    } else {
        hooi(&view, rk, &cfg)?
    };
    ensure_dir(&a.out)?;
    write_factors(&a.out, &r)?;
    let warnings = solver_warnings(&r);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let env = Envelope {
        tool: "tenspart",
        version: env!("CARGO_PKG_VERSION"),
        command: "approx",
        config: a,
        inputs: digests([&a.input])?,
        warnings,
        result: ApproxSummary::of(&r, &t),
    };
    write_json(&a.out.join("approx.json"), &env)?;
    println!("objective {}  residual {}  iterations {}", r.objective(), env.result.residual_norm, r.iterations);
    Ok(r.converged)
}

#[derive(Serialize)]
struct PartitionResult<'a> {
    approximation: ApproxSummary<'a>,
    /// Per mode, indices with `|u1|` below 1% of its maximum.
    insignificant: Vec<Vec<usize>>,
    diagonal_fraction: f64,
    report: &'a PartitionReport,
    nested: Vec<Nested>,
}

#[derive(Serialize)]
struct Nested {
    ranges_file: PathBuf,
    objective: f64,
    converged: bool,
    diagonal_fraction: f64,
    report: PartitionReport,
}

pub fn partition(a: &PartitionArgs) -> CliResult<Converged> {
    let t = load_input(&a.input, &a.solver, a.symmetric)?;
    let dims = t.dims();
    let cfg = a.solver.config(a.symmetric);
    let rk = ranks(&a.rank);
    let rows = load_labels(a.labels.as_ref(), dims[0])?;
    let cols = match &a.col_labels {
        Some(_) => load_labels(a.col_labels.as_ref(), dims[1])?,
        None if dims[0] == dims[1] => rows.clone(),
        None => None,
    };
    let slices = load_labels(a.slice_labels.as_ref(), dims[2])?;
    let mut labels = [rows, cols, slices];
    for (axis, l) in labels.iter_mut().enumerate() {
        l.get_or_insert_with(|| LabelTable::numbered(dims[axis]));
    }
    let opts = PartitionOptions {
        direction: a.direction.into(),
        corner_width: a.corner_width,
        top_k: a.top_k,
        labels,
    };
    let (approx, report, _) = analyze(&t, rk, a.symmetric, &cfg, &opts)?;
    let mut converged = approx.converged;
    let mut warnings = solver_warnings(&approx);

    let mut nested = Vec::new();
    for path in &a.recurse {
        let subsets = parse_index_ranges(path, dims)?;
        let (sub, sub_report, _) = restrict_and_recurse(&t, subsets, rk, &cfg, &opts)?;
        converged &= sub.converged;
        warnings.extend(solver_warnings(&sub).into_iter().map(|w| format!("{}: {w}", path.display())));
        nested.push(Nested {
            ranges_file: path.clone(),
            objective: sub.objective(),
            converged: sub.converged,
            diagonal_fraction: sub_report.split_blocks.diagonal_fraction(),
            report: sub_report,
        });
    }

    ensure_dir(&a.out)?;
    write_factors(&a.out, &approx)?;
    for m in &report.modes {
        write_text(&a.out.join(format!("perm_mode{}.txt", m.mode)), &permutation_text(&m.perm.order()))?;
    }
    write_text(&a.out.join("split_blocks.csv"), &table_csv(&report.split_blocks.matrix()))?;
    if let Some(c) = &report.corner_blocks {
        write_text(&a.out.join("corner_blocks.csv"), &table_csv(&c.matrix()))?;
    }
    let mut text = report.to_text();
    for n in &nested {
        text.push_str(&format!("\n== restricted to {} ==\n", n.ranges_file.display()));
        text.push_str(&n.report.to_text());
    }
    write_text(&a.out.join("partition.txt"), &text)?;

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut inputs = vec![&a.input];
    inputs.extend(a.labels.iter().chain(&a.col_labels).chain(&a.slice_labels).chain(&a.recurse));
    let result = PartitionResult {
        approximation: ApproxSummary::of(&approx, &t),
        insignificant: report.modes.iter().map(|m| insignificant_indices(&m.u1, INSIGNIFICANT_REL)).collect(),
        diagonal_fraction: report.split_blocks.diagonal_fraction(),
        report: &report,
        nested,
    };
    println!(
        "objective {}  split {} / {}  diagonal fraction {}",
        approx.objective(),
        report.modes[0].split.index,
        report.modes[1].split.index,
        result.diagonal_fraction
    );
    let env = Envelope {
        tool: "tenspart",
        version: env!("CARGO_PKG_VERSION"),
        command: "partition",
        config: a,
        inputs: digests(inputs)?,
        warnings,
        result,
    };
    write_json(&a.out.join("partition.json"), &env)?;
    Ok(converged)
}

pub fn expand_cmd(a: &ExpandArgs) -> CliResult<Converged> {
    if !(0.0..=1.0).contains(&a.theta) {
        return Err(Failure::validation(format!("--theta must lie in [0, 1], got {}", a.theta)));
    }
    let t = load_input(&a.input, &a.solver, true)?;
    let labels = load_labels(a.labels.as_ref(), t.dims()[0])?.unwrap_or_else(|| LabelTable::numbered(t.dims()[0]));
    let cfg = ExpansionConfig {
        terms: a.terms,
        theta: a.theta,
        threshold_mode: a.threshold_mode.into(),
        structure_margin: a.structure_margin,
        solver: a.solver.config(true),
    };
    let e = expand(Arc::new(t), &cfg)?;
    ensure_dir(&a.out)?;
    for (v, term) in e.terms.iter().enumerate() {
        let g = subgraph_export(term, &labels)?;
        write_text(&a.out.join(format!("term{}_edges.txt", v + 1)), &g.edge_list())?;
        write_text(&a.out.join(format!("term{}_w.csv", v + 1)), &g.w_csv())?;
        println!(
            "term {}: eigenvalues {} {}  structured {}  edges {}  residual {}",
            v + 1,
            term.eigenvalues[0],
            term.eigenvalues[1],
            term.structured,
            g.edges.len(),
            term.residual_norm_after
        );
    }
    let mut warnings = e.warnings.clone();
    if let Some(why) = &e.stopped_early {
        warnings.push(format!("stopped after {} terms: {why}", e.terms.len()));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut inputs = vec![&a.input];
    inputs.extend(&a.labels);
    let converged = e.all_converged();
    let env = Envelope {
        tool: "tenspart",
        version: env!("CARGO_PKG_VERSION"),
        command: "expand",
        config: a,
        inputs: digests(inputs)?,
        warnings,
        result: &e,
    };
    write_json(&a.out.join("expansion.json"), &env)?;
    Ok(converged)
}
