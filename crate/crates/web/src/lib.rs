//! Browser bindings for the bound calculators. Every export returns a JSON
//! string, or an error message the page shows as is.

use privsearch::bounds::{achievable_rate, best_sequence, figure1_curve, PatternFamilyModel, Strategy};
use privsearch::constructions::{
    circular_family, disjoint_subfamily, exact_search_family, nested_gamma_subfamily, nested_max_depth,
    prop5_triple_scan, Prop5ScanReport,
};
use privsearch::patterns::PatternFamily;
use serde::Serialize;
use wasm_bindgen::prelude::*;

// Keeps a click from freezing the tab.
const MAX_FIGURE_K: usize = 400;
const MAX_SCAN_K: usize = 256;
const MAX_SERVERS: usize = 64;

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn parse_servers(list: &str) -> Result<Vec<usize>, String> {
    let servers = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("not a server count: {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if servers.iter().any(|&n| n > MAX_SERVERS) {
        return Err(format!("server counts above {MAX_SERVERS} are not supported here"));
    }
    Ok(servers)
}

/// Normalized bound of exact search for `K = 2..=k_max`, one series per entry of `servers` (e.g. `"2,3,5"`).
#[wasm_bindgen]
pub fn figure1(k_max: usize, servers: &str) -> Result<String, String> {
    if k_max > MAX_FIGURE_K {
        return Err(format!("K up to {MAX_FIGURE_K} in the browser"));
    }
    let servers = parse_servers(servers)?;
    let rows = figure1_curve(k_max, &servers).map_err(|e| e.to_string())?;
    to_json(&rows)
}

fn builtin(kind: &str, k: usize, m: usize) -> Result<PatternFamily, String> {
    let family = match kind {
        "exact" => exact_search_family(k),
        "circular" => circular_family(k),
        "disjoint" => disjoint_subfamily(k, m),
        "nested" => nested_gamma_subfamily(k, m, nested_max_depth(k, m)),
        other => return Err(format!("unknown family kind {other:?}")),
    };
    family.map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BoundView {
    label: String,
    #[serde(rename = "K")]
    k: usize,
    messages: usize,
    report: privsearch::bounds::ConverseReport,
    achievable_rate: f64,
    rate_upper_bound: f64,
}

/// Converse bound for a builtin family; `m` is ignored by exact and circular.
#[wasm_bindgen]
pub fn converse(kind: &str, k: usize, m: usize, servers: usize) -> Result<String, String> {
    if k > 1 << 16 {
        return Err("K up to 65536 in the browser".into());
    }
    let family = builtin(kind, k, m)?;
    let model = PatternFamilyModel::new(family.clone());
    let strategy = if family.mu() <= 10 {
        Strategy::Exhaustive
    } else {
        Strategy::Greedy
    };
    let report = best_sequence(&model, servers, strategy, None).map_err(|e| e.to_string())?;
    let view = BoundView {
        label: family.label().to_string(),
        k: family.k(),
        messages: family.mu(),
        achievable_rate: achievable_rate(&model, servers).map_err(|e| e.to_string())?,
        rate_upper_bound: report.rate_upper_bound(),
        report,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct Arc {
    index: usize,
    members: Vec<u32>,
}

#[derive(Serialize)]
struct ScanView {
    scan: Prop5ScanReport,
    /// Arcs of the best triple.
    best_arcs: Vec<Arc>,
    /// Arcs of the quarter-turn triple.
    quarter_arcs: Vec<Arc>,
}

fn arcs(family: &PatternFamily, indices: &[usize]) -> Vec<Arc> {
    indices
        .iter()
        .map(|&index| Arc {
            index,
            members: family.set(index).to_vec(),
        })
        .collect()
}

/// Arc-triple scan of the circular family, with the members of the highlighted arcs.
#[wasm_bindgen]
pub fn prop5(k: usize) -> Result<String, String> {
    if k > MAX_SCAN_K {
        return Err(format!("K up to {MAX_SCAN_K} in the browser"));
    }
    let scan = prop5_triple_scan(k).map_err(|e| e.to_string())?;
    let family = circular_family(k).map_err(|e| e.to_string())?;
    let (a, b, c) = scan.argmax;
    let q = scan.quarter_offset;
    let view = ScanView {
        best_arcs: arcs(&family, &[a, b, c]),
        quarter_arcs: arcs(&family, &[q.k1, q.k2, q.best_k3]),
        scan,
    };
    to_json(&view)
}
