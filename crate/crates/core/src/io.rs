//! Text formats: edge lists, labels, features, measure series, fit records
//! and SVG plots.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{FeatureMatrix, Matrix};
use crate::measures::{DecayClass, DecayFit, MeasureSeries};

pub const SERIES_HEADER: &str = "index,measure,value,run_id";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|reason| Error::Io {
        path: path.to_path_buf(),
        reason,
    })
}

/// Writes `contents` to `path`, reporting failures with the path.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|reason| Error::Io {
        path: path.to_path_buf(),
        reason,
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Content lines with 1-based numbers; blank and `#` lines are dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// A parsed edge list together with the original node tokens.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `ids[k]` is the token that became node `k`.
    pub ids: Vec<String>,
}

impl LoadedGraph {
    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect()
    }
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    parse_edge_list(&read_text(path)?, path)
}

/// Parses `u v` lines. If every token is a non-negative integer the ids are
/// used as-is; otherwise all tokens are remapped in first-seen order. An
/// optional `nodes: K` line fixes the node count.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<LoadedGraph> {
    let mut declared: Option<(usize, usize)> = None;
    let mut raw: Vec<(usize, &str, &str)> = Vec::new();
    for (line, content) in content_lines(text) {
        if let Some(rest) = content.strip_prefix("nodes:") {
            if declared.is_some() {
                return Err(parse_err(path, line, "repeated 'nodes:' header"));
            }
            let k = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, format!("bad node count '{}'", rest.trim())))?;
            declared = Some((k, line));
            continue;
        }
        let mut tokens = content.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(u), Some(v), None) => raw.push((line, u, v)),
            _ => return Err(parse_err(path, line, format!("expected 'u v', got '{content}'"))),
        }
    }

    let numeric = raw
        .iter()
        .all(|(_, u, v)| u.parse::<usize>().is_ok() && v.parse::<usize>().is_ok());
    let mut ids: Vec<String> = Vec::new();
    let mut edges = Vec::with_capacity(raw.len());
    if numeric {
        let mut max_id = None;
        for &(line, u, v) in &raw {
            let (a, b) = (u.parse::<usize>().unwrap(), v.parse::<usize>().unwrap());
            if a == b {
                return Err(parse_err(path, line, format!("self-edge on node {u}")));
            }
            if let Some((k, _)) = declared {
                if a.max(b) >= k {
                    return Err(parse_err(
                        path,
                        line,
                        format!("node {} exceeds declared count {k}", a.max(b)),
                    ));
                }
            }
            max_id = max_id.max(Some(a.max(b)));
            edges.push((a, b));
        }
        let v = declared.map_or(max_id.map_or(0, |m| m + 1), |(k, _)| k);
        ids = (0..v).map(|i| i.to_string()).collect();
    } else {
        let mut index: HashMap<&str, usize> = HashMap::new();
        for &(line, u, v) in &raw {
            if u == v {
                return Err(parse_err(path, line, format!("self-edge on node {u}")));
            }
            let mut pair = [0usize; 2];
            for (slot, t) in pair.iter_mut().zip([u, v]) {
                *slot = *index.entry(t).or_insert_with(|| {
                    ids.push(t.to_string());
                    ids.len() - 1
                });
            }
            edges.push((pair[0], pair[1]));
        }
        if let Some((k, line)) = declared {
            if ids.len() > k {
                return Err(parse_err(
                    path,
                    line,
                    format!("header declares {k} nodes but {} distinct ids appear", ids.len()),
                ));
            }
            // Isolated nodes declared by the header get synthetic tokens.
            let mut next = 0usize;
            while ids.len() < k {
                let token = format!("__isolated{next}");
                next += 1;
                if !index.contains_key(token.as_str()) {
                    ids.push(token);
                }
            }
        }
    }
    if ids.is_empty() {
        return Err(parse_err(path, 0, "no nodes"));
    }
    let graph = Graph::from_edges(ids.len(), &edges)?;
    Ok(LoadedGraph { graph, ids })
}

/// Serializes a graph as an edge list with a `nodes:` header.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = format!("nodes: {}\n", g.node_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(format!("unknown split '{s}'"))),
        }
    }
}

/// Node labels and optional split assignment, indexed by dense node id.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub labels: Vec<Option<usize>>,
    pub splits: Vec<Option<Split>>,
    /// `class_names[c]` is the token of dense class `c`.
    pub class_names: Vec<String>,
}

impl LabelSet {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Nodes that are labeled and assigned to `split`.
    pub fn mask(&self, split: Split) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_some() && self.splits[i] == Some(split))
            .collect()
    }

    /// Overrides split assignments from `node split` lines.
    pub fn apply_splits(&mut self, text: &str, path: &Path, ids: &HashMap<&str, usize>) -> Result<()> {
        for (line, content) in content_lines(text) {
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let [node, split] = tokens[..] else {
                return Err(parse_err(path, line, format!("expected 'node split', got '{content}'")));
            };
            let i = *ids
                .get(node)
                .ok_or_else(|| parse_err(path, line, format!("unknown node '{node}'")))?;
            self.splits[i] = Some(split.parse().map_err(|e: Error| parse_err(path, line, e.to_string()))?);
        }
        Ok(())
    }
}

/// Parses `node class [split]` lines against the graph's node tokens.
/// Integer class tokens are densified in numeric order, others in
/// first-seen order.
pub fn parse_labels(text: &str, path: &Path, graph: &LoadedGraph) -> Result<LabelSet> {
    let ids = graph.index_of();
    let v = graph.ids.len();
    let mut rows = Vec::new();
    for (line, content) in content_lines(text) {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let (node, class, split) = match tokens[..] {
            [n, c] => (n, c, None),
            [n, c, s] => (n, c, Some(s)),
            _ => {
                return Err(parse_err(path, line, format!("expected 'node class [split]', got '{content}'")))
            }
        };
        let i = *ids
            .get(node)
            .ok_or_else(|| parse_err(path, line, format!("unknown node '{node}'")))?;
        let split = split
            .map(|s| s.parse::<Split>().map_err(|e| parse_err(path, line, e.to_string())))
            .transpose()?;
        rows.push((line, i, class, split));
    }

    let mut class_names: Vec<String> = Vec::new();
    let numeric: Option<Vec<u64>> = rows.iter().map(|r| r.2.parse::<u64>().ok()).collect();
    match numeric {
        Some(mut nums) => {
            nums.sort_unstable();
            nums.dedup();
            class_names = nums.iter().map(|n| n.to_string()).collect();
        }
        None => {
            for r in &rows {
                if !class_names.iter().any(|c| c == r.2) {
                    class_names.push(r.2.to_string());
                }
            }
        }
    }
    let class_index: HashMap<&str, usize> =
        class_names.iter().enumerate().map(|(k, c)| (c.as_str(), k)).collect();

    let mut set = LabelSet {
        labels: vec![None; v],
        splits: vec![None; v],
        class_names: class_names.clone(),
    };
    for (line, i, class, split) in rows {
        // Numeric tokens such as "01" and "1" share a class.
        let key = class.parse::<u64>().map(|n| n.to_string()).unwrap_or_else(|_| class.to_string());
        let c = class_index[key.as_str()];
        if set.labels[i].is_some_and(|old| old != c) {
            return Err(parse_err(path, line, format!("conflicting labels for node '{}'", graph.ids[i])));
        }
        set.labels[i] = Some(c);
        if split.is_some() {
            set.splits[i] = split;
        }
    }
    Ok(set)
}

pub fn load_labels(path: &Path, graph: &LoadedGraph) -> Result<LabelSet> {
    parse_labels(&read_text(path)?, path, graph)
}

/// Parses `node f₁ f₂ …` lines; every node needs exactly one row.
pub fn parse_features(text: &str, path: &Path, graph: &LoadedGraph) -> Result<FeatureMatrix> {
    let ids = graph.index_of();
    let v = graph.ids.len();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; v];
    let mut width = None;
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let node = tokens.next().unwrap_or_default();
        let i = *ids
            .get(node)
            .ok_or_else(|| parse_err(path, line, format!("unknown node '{node}'")))?;
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("bad feature value '{t}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() || *width.get_or_insert(values.len()) != values.len() {
            return Err(parse_err(path, line, "inconsistent feature width"));
        }
        if rows[i].replace(values).is_some() {
            return Err(parse_err(path, line, format!("duplicate row for node '{node}'")));
        }
    }
    let width = width.ok_or_else(|| parse_err(path, 0, "no feature rows"))?;
    let mut data = Vec::with_capacity(v * width);
    for (i, row) in rows.into_iter().enumerate() {
        data.extend(row.ok_or_else(|| parse_err(path, 0, format!("missing features for node '{}'", graph.ids[i])))?);
    }
    Matrix::new(v, width, data)
}

pub fn load_features(path: &Path, graph: &LoadedGraph) -> Result<FeatureMatrix> {
    parse_features(&read_text(path)?, path, graph)
}

/// Fixed formatting with 17 significant digits, exact on round trip.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders series as CSV, rows sorted by `(run_id, measure, index)`.
/// Metadata becomes `# run_id key=value` lines ahead of the header.
pub fn format_series(series: &[MeasureSeries]) -> Result<String> {
    let mut sorted: Vec<&MeasureSeries> = series.iter().collect();
    sorted.sort_by(|a, b| (&a.run_id, &a.measure).cmp(&(&b.run_id, &b.measure)));
    for pair in sorted.windows(2) {
        if (&pair[0].run_id, &pair[0].measure) == (&pair[1].run_id, &pair[1].measure) {
            return Err(Error::invalid(format!(
                "duplicate series '{}' for run '{}'",
                pair[0].measure, pair[0].run_id
            )));
        }
    }
    let bad = |s: &str| s.is_empty() || s.contains([',', '\n', '\r', ' ']);
    let mut meta: BTreeMap<&str, BTreeMap<&str, &str>> = BTreeMap::new();
    for s in &sorted {
        if bad(&s.run_id) || bad(&s.measure) {
            return Err(Error::invalid(format!(
                "run id '{}' and measure '{}' must be non-empty without commas or whitespace",
                s.run_id, s.measure
            )));
        }
        let entry = meta.entry(&s.run_id).or_default();
        for (k, v) in &s.metadata {
            entry.insert(k, v);
        }
    }

    let mut out = String::new();
    for (run, kv) in &meta {
        for (k, v) in kv {
            let v = v.replace(['\n', '\r'], " ");
            let _ = writeln!(out, "# {run} {k}={v}");
        }
    }
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for s in sorted {
        for (t, v) in s.index.iter().zip(&s.values) {
            let _ = writeln!(out, "{t},{},{},{}", s.measure, format_value(*v), s.run_id);
        }
    }
    Ok(out)
}

pub fn write_series(series: &[MeasureSeries], path: &Path) -> Result<()> {
    write_text(path, &format_series(series)?)
}

pub fn parse_series(text: &str, path: &Path) -> Result<Vec<MeasureSeries>> {
    let mut meta: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut groups: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut saw_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(comment) = content.strip_prefix('#') {
            if let Some((run, kv)) = comment.trim().split_once(' ') {
                if let Some((k, v)) = kv.split_once('=') {
                    meta.entry(run.to_string()).or_default().insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        if !saw_header {
            if content != SERIES_HEADER {
                return Err(parse_err(path, line, format!("expected header '{SERIES_HEADER}'")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = content.split(',').collect();
        let [index, measure, value, run_id] = fields[..] else {
            return Err(parse_err(path, line, "expected 4 comma-separated fields"));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("bad number '{s}'")))
        };
        let entry = groups
            .entry((run_id.to_string(), measure.to_string()))
            .or_default();
        entry.0.push(num(index)?);
        entry.1.push(num(value)?);
    }
    if !saw_header {
        return Err(parse_err(path, 0, "missing header"));
    }
    groups
        .into_iter()
        .map(|((run_id, measure), (index, values))| {
            let mut s = MeasureSeries::new(measure, run_id.clone(), index, values)
                .map_err(|e| parse_err(path, 0, format!("run '{run_id}': {e}")))?;
            if let Some(m) = meta.get(&run_id) {
                s.metadata = m.clone();
            }
            Ok(s)
        })
        .collect()
}

pub fn read_series(path: &Path) -> Result<Vec<MeasureSeries>> {
    parse_series(&read_text(path)?, path)
}

/// One fitted series as written to `fit.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub run_id: String,
    pub measure: String,
    pub c1: f64,
    pub c2: f64,
    pub r2_exp: f64,
    pub r2_alg: f64,
    pub classification: DecayClass,
    pub floor_index: Option<usize>,
}

impl FitRecord {
    pub fn new(series: &MeasureSeries, fit: &DecayFit) -> Self {
        Self {
            run_id: series.run_id.clone(),
            measure: series.measure.clone(),
            c1: fit.c1,
            c2: fit.c2,
            r2_exp: fit.r2_exp,
            r2_alg: fit.r2_alg,
            classification: fit.classification,
            floor_index: fit.floor_index,
        }
    }
}

pub fn format_fits(records: &[FitRecord]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(records)
        .map_err(|e| Error::invalid(format!("serializing fits: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_fits(text: &str) -> Result<Vec<FitRecord>> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("reading fits: {e}")))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlotScale {
    /// log value against index.
    #[default]
    LogLinear,
    /// log value against log index; samples at index ≤ 0 are dropped.
    LogLog,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Static SVG line plot with a logarithmic value axis.
pub fn plot_svg(series: &[MeasureSeries], scale: PlotScale, title: &str) -> Result<String> {
    let (w, h, left, right, top, bottom) = (720.0, 480.0, 70.0, 200.0, 40.0, 50.0);
    let tx = |t: f64| match scale {
        PlotScale::LogLinear => Some(t),
        PlotScale::LogLog => (t > 0.0).then(|| t.log10()),
    };
    let curves: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let pts = s
                .index
                .iter()
                .zip(&s.values)
                .filter_map(|(&t, &v)| Some((tx(t)?, (v > 0.0).then(|| v.log10())?)))
                .collect();
            (format!("{} {}", s.run_id, s.measure), pts)
        })
        .collect();
    let all = || curves.iter().flat_map(|(_, p)| p.iter());
    if all().next().is_none() {
        return Err(Error::invalid("nothing to plot: no positive samples"));
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        all().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let (x0, x1) = widen(fold(|p| p.0));
    let (y0, y1) = widen(fold(|p| p.1));
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let mut meta: BTreeMap<&str, &BTreeMap<String, String>> = BTreeMap::new();
    for s in series {
        meta.entry(&s.run_id).or_insert(&s.metadata);
    }
    for (run, kv) in meta {
        for (k, v) in kv {
            let _ = writeln!(out, "<!-- {} {k}={} -->", escape(run), escape(v).replace("--", "- -"));
        }
    }
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (w - right + left) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let xl = match scale {
            PlotScale::LogLinear => format!("{xv:.3}"),
            PlotScale::LogLog => format!("1e{xv:.2}"),
        };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{xl}</text>"#,
            px(xv),
            h - bottom + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">1e{yv:.1}</text>"#,
            left - 6.0,
            py(yv) + 4.0
        );
    }
    let xlabel = match scale {
        PlotScale::LogLinear => "index",
        PlotScale::LogLog => "index (log scale)",
    };
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        (w - right + left) / 2.0,
        h - 12.0
    );
    for (k, (name, pts)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            w - right + 10.0,
            w - right + 28.0,
            w - right + 32.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
