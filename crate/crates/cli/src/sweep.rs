//! `sweep`: a TOML file of runs.
//!
//! ```toml
//! [fit]
//! skip_leading = 1
//!
//! [defaults]
//! depth = 64
//! measures = ["dirichlet", "mad"]
//!
//! [[run]]
//! models = ["gcn", "gat"]
//! graph = "grid:10x10"
//! seeds = [0, 1, 2]
//! ```
//!
//! Each `[[run]]` table is merged over `[defaults]` and expanded over its
//! optional `models` and `seeds` lists. Relative edge-list paths resolve
//! against the config file's directory.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;
use toml::{Table, Value};

use oversmooth::harness::{self, GraphSource, RunConfig};
use oversmooth::io::{self, FitRecord};
use oversmooth::FitOptions;

use crate::SweepArgs;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    #[serde(default)]
    fit: FitOptions,
    #[serde(default)]
    defaults: Table,
    #[serde(default)]
    run: Vec<Table>,
}

fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn take_list(t: &mut Table, key: &str, k: usize) -> anyhow::Result<Option<Vec<Value>>> {
    match t.remove(key) {
        None => Ok(None),
        Some(Value::Array(items)) if !items.is_empty() => Ok(Some(items)),
        Some(_) => bail!("run {k}: '{key}' must be a non-empty array"),
    }
}

/// Expands the config text into validated runs plus fit options.
pub(crate) fn parse_config(text: &str, base_dir: &Path) -> anyhow::Result<(Vec<RunConfig>, FitOptions)> {
    let file: SweepFile = toml::from_str(text)?;
    if file.run.is_empty() {
        bail!("no [[run]] tables");
    }
    let mut configs = Vec::new();
    for (k, run) in file.run.iter().enumerate() {
        let mut table = file.defaults.clone();
        merge(&mut table, run);
        let models = take_list(&mut table, "models", k)?;
        let seeds = take_list(&mut table, "seeds", k)?;
        if models.is_some() && table.contains_key("model") {
            bail!("run {k}: give either 'model' or 'models'");
        }
        if seeds.is_some() && table.contains_key("seed") {
            bail!("run {k}: give either 'seed' or 'seeds'");
        }
        let expand = |list: Option<Vec<Value>>| match list {
            Some(items) => items.into_iter().map(Some).collect(),
            None => vec![None],
        };
        let seeds: Vec<Option<Value>> = expand(seeds);
        for model in expand(models) {
            for seed in &seeds {
                let mut t = table.clone();
                if let Some(m) = &model {
                    t.insert("model".into(), m.clone());
                }
                if let Some(s) = seed {
                    t.insert("seed".into(), s.clone());
                }
                let mut cfg: RunConfig = Value::Table(t).try_into().with_context(|| format!("run {k}"))?;
                if let GraphSource::File(p) = &cfg.graph {
                    if p.is_relative() {
                        cfg.graph = GraphSource::File(base_dir.join(p));
                    }
                }
                cfg.validate().with_context(|| format!("run {k}"))?;
                configs.push(cfg);
            }
        }
    }
    let mut seen = BTreeSet::new();
    for c in &configs {
        if !seen.insert(c.run_id()) {
            bail!("run id '{}' occurs twice; runs must differ in model, graph or seed", c.run_id());
        }
    }
    Ok((configs, file.fit))
}

pub(crate) fn run(a: SweepArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let (configs, fit) = parse_config(&text, base).with_context(|| format!("in {}", a.config.display()))?;
    let rows = match a.threads {
        Some(n) => harness::sweep_with_threads(&configs, &fit, Some(n))?,
        None => harness::sweep(&configs, &fit)?,
    };

    let mut series = Vec::new();
    let mut records = Vec::new();
    let mut failures = 0;
    for row in &rows {
        match (&row.series, &row.fit) {
            (None, Err(e)) => {
                failures += 1;
                eprintln!("{} {}: run failed: {e}", row.run_id, row.measure);
            }
            (Some(s), Ok(f)) => {
                println!(
                    "{} {} {} c2={:.6} r2_exp={:.4}",
                    row.run_id, row.measure, f.classification, f.c2, f.r2_exp
                );
                records.push(FitRecord::new(s, f));
            }
            (Some(_), Err(e)) => println!("{} {} fit failed: {e}", row.run_id, row.measure),
            (None, Ok(_)) => unreachable!("fits need a series"),
        }
        if let Some(s) = &row.series {
            series.push(s.clone());
        }
    }
    io::write_series(&series, &a.out)?;
    if let Some(path) = &a.fits {
        io::write_text(path, &io::format_fits(&records)?)?;
    }
    if failures > 0 {
        bail!("{failures} of {} series failed", rows.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use oversmooth::harness::ModelKind;

    #[test]
    fn expands_models_and_seeds_over_defaults() {
        let text = r#"
            [fit]
            skip_leading = 1
            [defaults]
            depth = 8
            width = 4
            [defaults.options]
            drop_rate = 0.3
            [[run]]
            models = ["gcn", "gat"]
            graph = "ring:6"
            seeds = [1, 2]
            [[run]]
            model = "sage"
            graph = "edges.txt"
            options = { g2_p = 3.0 }
        "#;
        let (configs, fit) = parse_config(text, Path::new("/cfg")).unwrap();
        assert_eq!(fit.skip_leading, 1);
        assert_eq!(configs.len(), 5);
        assert_eq!(configs[0].model, ModelKind::Gcn);
        assert_eq!(configs[1].seed, 2);
        assert_eq!(configs[2].model, ModelKind::Gat);
        assert!(configs.iter().all(|c| c.depth == 8 && c.width == 4));
        assert_eq!(configs[4].graph, GraphSource::File("/cfg/edges.txt".into()));
        assert_eq!(configs[4].options.drop_rate, 0.3);
        assert_eq!(configs[4].options.g2_p, 3.0);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "",
            "[[run]]\nmodel = \"nosuch\"",
            "[[run]]\nmodel = \"gcn\"\ncolour = 1",
            "[[run]]\nmodel = \"gcn\"\nmodels = [\"gat\"]",
            "[[run]]\nmodel = \"gcn\"\n[[run]]\nmodel = \"gcn\"",
            "[[run]]\nmodel = \"gcn\"\ndepth = 0",
            "[[run]]\nseeds = []",
        ] {
            assert!(parse_config(text, Path::new(".")).is_err(), "{text:?}");
        }
    }
}
