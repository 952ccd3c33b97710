use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use oversmooth::continuous::{self, Forcing, Integrator, OdeConfig, VectorField};
use oversmooth::harness::{self, GraphSource, RunConfig};
use oversmooth::io::{self, FitRecord, LoadedGraph};
use oversmooth::layers::Activation;
use oversmooth::measures::{verify_axioms, AxiomOptions, Verdict};
use oversmooth::{fit_decay, MeasureSeries};

use crate::{
    AxiomArgs, CtArgs, Dynamics, FitArgs, ForcingArg, IntegratorArg, PlotArgs, PropagateArgs,
};

/// Writes to `path`, or to standard output when there is none.
pub(crate) fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => io::write_text(p, contents)?,
        None => std::io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .context("writing to standard output")?,
    }
    Ok(())
}

/// Writes the dense-id to token map beside `out` when the edge list used
/// tokens other than `0..v`, and returns the sidecar's file name.
pub(crate) fn write_id_map(loaded: &LoadedGraph, out: &Path) -> anyhow::Result<Option<String>> {
    let identity = loaded.ids.iter().enumerate().all(|(i, t)| *t == i.to_string());
    if identity {
        return Ok(None);
    }
    let mut path = out.as_os_str().to_owned();
    path.push(".ids");
    let path = PathBuf::from(path);
    let mut text = String::from("# dense_id token\n");
    for (i, t) in loaded.ids.iter().enumerate() {
        let _ = writeln!(text, "{i} {t}");
    }
    io::write_text(&path, &text)?;
    Ok(path.file_name().map(|n| n.to_string_lossy().into_owned()))
}

pub(crate) fn propagate(a: PropagateArgs) -> anyhow::Result<()> {
    let loaded = a.graph.load()?;
    let cfg = RunConfig {
        model: a.model,
        graph: a.graph.source(),
        depth: a.layers,
        width: a.dim,
        seed: a.seed,
        weight_mode: a.weights,
        bias: a.bias.on(),
        measures: a.measure.clone(),
        p: a.p,
        normalization: a.normalization.into(),
        options: harness::ModelOptions {
            activation: a.activation.into(),
            ..Default::default()
        },
    };
    cfg.validate()?;
    let id_map = match &a.out {
        Some(out) => write_id_map(&loaded, out)?,
        None => None,
    };
    let series: Vec<MeasureSeries> = harness::propagate_record(&cfg, &loaded.graph)
        .with_context(|| format!("propagating {}", cfg.run_id()))?
        .into_values()
        .map(|s| match &id_map {
            Some(name) => s.with_metadata("id_map", name),
            None => s,
        })
        .collect();
    emit(a.out.as_deref(), &io::format_series(&series)?)
}

pub(crate) fn fit(a: FitArgs) -> anyhow::Result<()> {
    let series = io::read_series(&a.input)?;
    if series.is_empty() {
        bail!("{} holds no series", a.input.display());
    }
    let opts = a.fit.options();
    let records = series
        .iter()
        .map(|s| {
            let f = fit_decay(s, &opts).with_context(|| format!("fitting {} {}", s.run_id, s.measure))?;
            Ok(FitRecord::new(s, &f))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let json = io::format_fits(&records)?;
    match &a.out {
        Some(out) => {
            io::write_text(out, &json)?;
            for r in &records {
                println!(
                    "{} {} {} c2={:.6} r2_exp={:.4} r2_alg={:.4}",
                    r.run_id, r.measure, r.classification, r.c2, r.r2_exp, r.r2_alg
                );
            }
            Ok(())
        }
        None => emit(None, &json),
    }
}

fn verdict_line(name: &str, v: &Verdict) -> String {
    let mut line = format!("{name}: {} ({} trials)", if v.passed { "pass" } else { "FAIL" }, v.trials);
    if let Some(c) = &v.counterexample {
        let _ = write!(line, ", counterexample at trial {}: lhs {:e} rhs {:e}", c.trial, c.lhs, c.rhs);
    }
    line
}

pub(crate) fn axioms(a: AxiomArgs) -> anyhow::Result<()> {
    let loaded = a.graph.load()?;
    let measure = a.measure.with_options(a.p, a.normalization.into());
    let opts = AxiomOptions {
        trials: a.trials,
        tol: a.tol,
        dim: a.dim,
        positive: a.positive,
        seed: a.seed,
    };
    let report = verify_axioms(&measure, &loaded.graph, &opts)?;
    println!("measure {} on {} (graph_hash {})", measure, a.graph.source(), loaded.graph.content_hash());
    println!("{}", verdict_line("zero on constant rows", &report.zero_on_constant));
    println!("{}", verdict_line("positive on non-constant rows", &report.positive_on_nonconstant));
    println!("{}", verdict_line("subadditive", &report.subadditive));
    println!("node-similarity measure: {}", if report.all_passed() { "yes" } else { "no" });
    Ok(())
}

pub(crate) fn ct(a: CtArgs) -> anyhow::Result<()> {
    let loaded = a.graph.load()?;
    let g = &loaded.graph;
    let field = match a.dynamics {
        Dynamics::Heat => VectorField::Heat,
        Dynamics::Graphcon => VectorField::Graphcon {
            gamma: a.gamma,
            alpha: a.alpha,
            forcing: match a.forcing {
                ForcingArg::Laplacian => Forcing::NegLaplacian,
                ForcingArg::Gcn => Forcing::Gcn,
            },
            activation: a.activation.map_or(Activation::Identity, Into::into),
        },
        Dynamics::Gcn => VectorField::Gcn {
            activation: a.activation.map_or(Activation::Relu, Into::into),
        },
    };
    let integrator: Integrator = a.integrator.into();
    let cfg = OdeConfig {
        sample_stride: a.stride,
        integrator,
        seed: a.seed,
        measure: a.measure,
        ..OdeConfig::new(field, a.t_end, a.dt)
    };
    if a.integrator == IntegratorArg::Euler && a.dynamics == Dynamics::Heat {
        let bound = continuous::euler_heat_dt_bound(g);
        if a.dt > bound {
            eprintln!("warning: dt = {} exceeds the explicit Euler bound 1/lambda_max = {bound:.6}", a.dt);
        }
    }
    let dynamics = match a.dynamics {
        Dynamics::Heat => "heat",
        Dynamics::Graphcon => "graphcon",
        Dynamics::Gcn => "gcn",
    };
    let source = a.graph.source();
    let run_id = format!("{dynamics}:{}:{}", source.label(), a.seed);
    let x0 = harness::init_features(g.node_count(), a.dim, a.seed)?;
    let series = continuous::integrate_record(&cfg, g, &x0, &run_id)?
        .with_metadata("dynamics", dynamics)
        .with_metadata("integrator", format!("{integrator:?}").to_lowercase())
        .with_metadata("dt", a.dt)
        .with_metadata("t_end", a.t_end)
        .with_metadata("seed", a.seed)
        .with_metadata("graph", &source)
        .with_metadata("graph_hash", g.content_hash());
    emit(a.out.as_deref(), &io::format_series(std::slice::from_ref(&series))?)?;
    if a.out.is_some() {
        match continuous::detect_ct_oversmoothing(&series, &a.fit.options()) {
            Ok(f) => println!(
                "{run_id} {} {} c2={:.6} r2_exp={:.4}",
                series.measure, f.classification, f.c2, f.r2_exp
            ),
            Err(e) => println!("{run_id} {} fit failed: {e}", series.measure),
        }
    }
    Ok(())
}

pub(crate) fn plot(a: PlotArgs) -> anyhow::Result<()> {
    let mut series = Vec::new();
    for path in &a.input {
        series.extend(io::read_series(path)?);
    }
    if let Some(m) = &a.measure {
        series.retain(|s| &s.measure == m);
    }
    if series.is_empty() {
        bail!("no series to plot");
    }
    let title = a.title.clone().unwrap_or_else(|| {
        a.input
            .iter()
            .map(|p| GraphSource::File(p.clone()).label())
            .collect::<Vec<_>>()
            .join(", ")
    });
    let svg = io::plot_svg(&series, a.scale.into(), &title)?;
    io::write_text(&a.out, &svg)?;
    Ok(())
}
