//! Selection latency and byte-for-byte reproducibility of every command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use metagl::commands::{cmd_features, cmd_select, cmd_synth, cmd_train};
use metagl::RunConfig;
use metagl_core::eval::synth::barabasi_albert;
use metagl_core::rng::seeded;

use crate::{ensure, Outcome};

fn small_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig { seed: 5, ..RunConfig::default() };
    cfg.synthetic.n_graphs = 30;
    cfg.paths.graph_dir = Some(dir.join("corpus/graphs"));
    cfg.paths.performance = Some(dir.join("corpus/performance.csv"));
    cfg.paths.output_dir = dir.join("out");
    cfg
}

pub fn selection_latency() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = small_config(tmp.path());
    let err = |e: metagl::Failure| e.to_string();
    cmd_synth(&cfg, &tmp.path().join("corpus")).map_err(err)?;
    cmd_features(&cfg).map_err(err)?;
    cmd_train(&cfg).map_err(err)?;

    let g = barabasi_albert(25_010, 4, &mut seeded(10)).map_err(|e| e.to_string())?;
    ensure!(g.edge_count() >= 100_000, "only {} edges", g.edge_count());
    let path = tmp.path().join("large.txt");
    std::fs::write(&path, g.to_edge_list()).map_err(|e| e.to_string())?;
    let sel = cmd_select(&cfg, &path, None).map_err(err)?;
    ensure!(sel.ranking.len() == 8, "{} models ranked", sel.ranking.len());
    ensure!(sel.total_seconds < 5.0, "selection took {:.2}s", sel.total_seconds);
    let split = sel.feature_seconds + sel.predict_seconds;
    ensure!(split <= sel.total_seconds + 1e-3, "feature + predict {split:.4}s exceeds total");
    Ok(format!(
        "{} edges: features {:.3}s + prediction {:.3}s, total {:.3}s",
        g.edge_count(),
        sel.feature_seconds,
        sel.predict_seconds,
        sel.total_seconds
    ))
}

/// Every file under `dir`, keyed by relative path, skipping wall-clock
/// timing files.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with(".timing.csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn metagl(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_metagl")).args(args).output().map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "metagl {} exited {:?}: {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(out.stdout)
}

const CONFIG: &str = r#"
seed = 9

[learner]
max_epochs = 60

[eval]
folds = 3
sparsities = [0.5]
perturbation_rates = [0.0, 0.2]

[synthetic]
n_graphs = 24
models = 6
"#;

/// Runs the full command chain into `dir`; returns stdout of each step.
fn pipeline(dir: &Path, config: &Path) -> Result<Vec<Vec<u8>>, String> {
    let s = |p: PathBuf| p.to_string_lossy().into_owned();
    let (c, corpus, out) = (s(config.to_path_buf()), s(dir.join("corpus")), s(dir.join("out")));
    let graphs = s(dir.join("corpus/graphs"));
    let perf = s(dir.join("corpus/performance.csv"));
    let graph = s(dir.join("corpus/graphs/watts-strogatz-002.txt"));
    let ranking = s(dir.join("out/ranking.csv"));
    let eval_out = s(dir.join("eval"));
    Ok(vec![
        metagl(&["synth", &corpus, "-c", &c])?,
        metagl(&["features", "-c", &c, "--graphs", &graphs, "--out-dir", &out])?,
        metagl(&["train", "-c", &c, "--perf", &perf, "--out-dir", &out])?,
        metagl(&["select", &graph, "-c", &c, "--out-dir", &out, "--out", &ranking])?,
        metagl(&["evaluate", "-c", &c, "--synthetic", "--out-dir", &eval_out])?,
        metagl(&["evaluate", "-c", &c, "--graphs", &graphs, "--perf", &perf, "--features", &s(dir.join("out/features.csv")), "--out-dir", &s(dir.join("eval-files"))])?,
    ])
}

pub fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, CONFIG).map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out_a = pipeline(&a, &config)?;
    let out_b = pipeline(&b, &config)?;
    ensure!(out_a == out_b, "stdout differs between runs");
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    ensure!(sa.keys().eq(sb.keys()), "different file sets");
    for (path, bytes) in &sa {
        ensure!(&sb[path] == bytes, "{} differs between runs", path.display());
    }
    ensure!(sa.len() > 30, "only {} files written", sa.len());
    Ok(format!("synth, features, train, select and evaluate: {} files byte-identical", sa.len()))
}
