//! On-disk formats: feature CSV, timing CSV, performance CSV, model bundle
//! and the header line that tags every output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context};
use metagl_core::features::{feature_names, SCHEMA_VERSION};
use metagl_core::learner::MetaLearnerState;
use metagl_core::perf::PerformanceMatrix;
use metagl_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::extract::FeatureRow;

/// `# <kind> schema_version=<v> config_hash=<h> [extra...]`
pub fn header_line(kind: &str, config_hash: &str, extra: &[(&str, &str)]) -> String {
    let mut s = format!("# {kind} schema_version={SCHEMA_VERSION} config_hash={config_hash}");
    for (k, v) in extra {
        s.push_str(&format!(" {k}={v}"));
    }
    s
}

/// Splits a leading `#` header into its kind and key/value pairs, returning
/// them with the rest of the text.
pub fn split_header(text: &str) -> anyhow::Result<(String, BTreeMap<String, String>, &str)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let first = first.trim_end_matches('\r');
    let Some(body) = first.strip_prefix('#') else {
        bail!("missing '#' header line");
    };
    let mut parts = body.split_whitespace();
    let kind = parts.next().unwrap_or_default().to_string();
    let mut kv = BTreeMap::new();
    for p in parts {
        if let Some((k, v)) = p.split_once('=') {
            kv.insert(k.to_string(), v.to_string());
        }
    }
    Ok((kind, kv, rest))
}

fn check_schema(kv: &BTreeMap<String, String>) -> anyhow::Result<()> {
    let found: u32 = kv
        .get("schema_version")
        .context("header has no schema_version")?
        .parse()
        .context("schema_version is not a number")?;
    if found != SCHEMA_VERSION {
        bail!("feature schema version {found} does not match this build ({SCHEMA_VERSION})");
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub const FEATURES_KIND: &str = "metagl-features";

pub fn feature_csv(rows: &[FeatureRow], config_hash: &str) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "{}", header_line(FEATURES_KIND, config_hash, &[]))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["graph_id".to_string()];
    header.extend(feature_names());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.id.clone()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

pub fn write_feature_csv(path: &Path, rows: &[FeatureRow], config_hash: &str) -> anyhow::Result<()> {
    write_atomic(path, &feature_csv(rows, config_hash)?)
}

pub fn write_timing_csv(path: &Path, rows: &[FeatureRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["graph_id", "nodes", "edges", "seconds"])?;
    for r in rows {
        w.write_record([r.id.clone(), r.nodes.to_string(), r.edges.to_string(), r.seconds.to_string()])?;
    }
    write_atomic(path, &w.into_inner()?)
}

/// Timing file written next to a feature CSV.
pub fn timing_path(features: &Path) -> std::path::PathBuf {
    features.with_extension("timing.csv")
}

#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub values: Matrix,
    pub config_hash: String,
}

pub fn parse_feature_csv(text: &str) -> anyhow::Result<FeatureTable> {
    let (kind, kv, body) = split_header(text)?;
    ensure!(kind == FEATURES_KIND, "not a feature file (header kind {kind:?})");
    check_schema(&kv)?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let names = feature_names();
    ensure!(
        header.len() == names.len() + 1 && header[0] == "graph_id" && header[1..] == names[..],
        "feature columns do not match the schema"
    );
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        let vals: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        rows.push(vals.with_context(|| format!("feature row {}", line + 1))?);
    }
    ensure!(!rows.is_empty(), "feature file has no rows");
    let values = Matrix::from_rows(&rows)?;
    ensure!(values.all_finite(), "feature file contains non-finite values");
    Ok(FeatureTable { ids, values, config_hash: kv.get("config_hash").cloned().unwrap_or_default() })
}

pub fn read_feature_csv(path: &Path) -> anyhow::Result<FeatureTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_feature_csv(&text).with_context(|| format!("in {}", path.display()))
}

/// Performance matrix as CSV: a `graph_id` column, then one column per
/// model. An empty cell is an unobserved entry.
pub fn perf_csv(p: &PerformanceMatrix) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["graph_id".to_string()];
    header.extend(p.model_ids().iter().cloned());
    w.write_record(&header)?;
    for i in 0..p.n_graphs() {
        let mut rec = vec![p.graph_ids()[i].clone()];
        rec.extend((0..p.n_models()).map(|j| p.get(i, j).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    Ok(w.into_inner()?)
}

pub fn write_perf_csv(path: &Path, p: &PerformanceMatrix) -> anyhow::Result<()> {
    write_atomic(path, &perf_csv(p)?)
}

pub fn parse_perf_csv(text: &str) -> anyhow::Result<PerformanceMatrix> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    ensure!(header.len() >= 2 && header[0] == "graph_id", "expected a graph_id column followed by model columns");
    let models = header[1..].to_vec();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut mask = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("performance row {}", line + 1))?;
        ensure!(rec.len() == header.len(), "performance row {} has {} cells", line + 1, rec.len());
        ids.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            let cell = cell.trim();
            if cell.is_empty() {
                values.push(0.0);
                mask.push(false);
            } else {
                let v: f64 = cell.parse().with_context(|| format!("performance row {}: {cell:?}", line + 1))?;
                values.push(v);
                mask.push(true);
            }
        }
    }
    ensure!(!ids.is_empty(), "performance file has no rows");
    let m = Matrix::from_vec(ids.len(), models.len(), values)?;
    Ok(PerformanceMatrix::new(m, mask, ids, models)?)
}

pub fn read_perf_csv(path: &Path) -> anyhow::Result<PerformanceMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_perf_csv(&text).with_context(|| format!("in {}", path.display()))
}

/// Reorders `p` to the graph order of `features`. Fails listing every id
/// present on one side only.
pub fn align(features: &FeatureTable, p: &PerformanceMatrix) -> anyhow::Result<PerformanceMatrix> {
    let pos: BTreeMap<&str, usize> = p.graph_ids().iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let feat: std::collections::BTreeSet<&str> = features.ids.iter().map(String::as_str).collect();
    let missing_perf: Vec<&str> = features.ids.iter().map(String::as_str).filter(|g| !pos.contains_key(g)).collect();
    let missing_feat: Vec<&str> = p.graph_ids().iter().map(String::as_str).filter(|g| !feat.contains(g)).collect();
    if !missing_perf.is_empty() || !missing_feat.is_empty() {
        bail!(
            "graph ids differ: without performance rows {:?}; without features {:?}",
            missing_perf,
            missing_feat
        );
    }
    ensure!(pos.len() == p.n_graphs(), "duplicate graph ids in the performance file");
    let order: Vec<usize> = features.ids.iter().map(|g| pos[g.as_str()]).collect();
    Ok(p.select_rows(&order))
}

pub const BUNDLE_FORMAT: &str = "metagl-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub format_version: u32,
    pub schema_version: u32,
    pub config_hash: String,
    pub state: MetaLearnerState,
}

pub fn bundle_json(state: &MetaLearnerState, config_hash: &str) -> anyhow::Result<Vec<u8>> {
    let b = Bundle {
        format: BUNDLE_FORMAT.into(),
        format_version: BUNDLE_VERSION,
        schema_version: state.schema_version,
        config_hash: config_hash.into(),
        state: state.clone(),
    };
    Ok(serde_json::to_vec(&b)?)
}

pub fn save_bundle(path: &Path, state: &MetaLearnerState, config_hash: &str) -> anyhow::Result<()> {
    write_atomic(path, &bundle_json(state, config_hash)?)
}

pub fn parse_bundle(bytes: &[u8]) -> anyhow::Result<Bundle> {
    #[derive(Deserialize)]
    struct Head {
        format: String,
        format_version: u32,
        schema_version: u32,
    }
    let head: Head = serde_json::from_slice(bytes).context("not a model bundle")?;
    ensure!(head.format == BUNDLE_FORMAT, "not a model bundle (format {:?})", head.format);
    ensure!(
        head.format_version == BUNDLE_VERSION,
        "bundle format version {} is not supported (expected {BUNDLE_VERSION})",
        head.format_version
    );
    ensure!(
        head.schema_version == SCHEMA_VERSION,
        "bundle was trained on feature schema {} but this build extracts schema {SCHEMA_VERSION}",
        head.schema_version
    );
    let b: Bundle = serde_json::from_slice(bytes).context("malformed model bundle")?;
    b.state.check_schema()?;
    Ok(b)
}

pub fn load_bundle(path: &Path) -> anyhow::Result<Bundle> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_bundle(&bytes).with_context(|| format!("in {}", path.display()))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    write_atomic(path, bytes)
}
