//! CSV/JSON writers and console formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::compensator::CompensatorGains;
use crate::fne::FneSolution;
use crate::linalg::{self, Mat};
use crate::sim::{CostTable, SimulationResult};

/// `%g`-style formatting with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

/// Header `k,x1..xn,u1_1..,u2_applied_1..,u2_intended_1..,w_1..w_n,stage_cost_1,stage_cost_2`.
pub fn trajectory_header(n: usize, m1: usize, m2: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend((1..=m1).map(|i| format!("u1_{i}")));
    h.extend((1..=m2).map(|i| format!("u2_applied_{i}")));
    h.extend((1..=m2).map(|i| format!("u2_intended_{i}")));
    h.extend((1..=n).map(|i| format!("w_{i}")));
    h.push("stage_cost_1".into());
    h.push("stage_cost_2".into());
    h
}

/// One row per stage `k = 0..N`; the final row carries the terminal state and
/// terminal costs with empty input columns.
pub fn write_trajectory_csv(path: &Path, result: &SimulationResult) -> std::io::Result<()> {
    let n = result.x[0].len();
    let m1 = result.u1.first().map_or(0, |u| u.len());
    let m2 = result.u2_applied.first().map_or(0, |u| u.len());
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(trajectory_header(n, m1, m2))?;
    let horizon = result.horizon();
    for k in 0..=horizon {
        let mut row = vec![k.to_string()];
        row.extend(result.x[k].iter().map(|v| v.to_string()));
        if k < horizon {
            let vals = result.u1[k]
                .iter()
                .chain(result.u2_applied[k].iter())
                .chain(result.u2_intended[k].iter())
                .chain(result.w[k].iter());
            row.extend(vals.map(|v| v.to_string()));
            row.push(result.stage_costs1[k].to_string());
            row.push(result.stage_costs2[k].to_string());
        } else {
            row.extend(std::iter::repeat_n(String::new(), m1 + 2 * m2 + n));
            row.push(result.terminal_cost1.to_string());
            row.push(result.terminal_cost2.to_string());
        }
        writer.write_record(&row)?;
    }
    writer.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

type Rows = Vec<Vec<f64>>;

#[derive(Serialize)]
struct GainFile {
    k1: Vec<Rows>,
    k2: Vec<Rows>,
    p1: Vec<Rows>,
    p2: Vec<Rows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    compensator: Option<CompensatorFile>,
}

#[derive(Serialize)]
struct CompensatorFile {
    k: Vec<Rows>,
    l: Vec<Rows>,
    pbar: Vec<Rows>,
}

fn rows(ms: &[Mat]) -> Vec<Rows> {
    ms.iter().map(linalg::to_rows).collect()
}

pub fn write_gains(path: &Path, fne: &FneSolution, cf: Option<&CompensatorGains>) -> std::io::Result<()> {
    let file = GainFile {
        k1: rows(&fne.k1),
        k2: rows(&fne.k2),
        p1: rows(&fne.p1),
        p2: rows(&fne.p2),
        compensator: cf.map(|g| CompensatorFile {
            k: rows(&g.k),
            l: rows(&g.l),
            pbar: rows(&g.pbar),
        }),
    };
    write_json(path, &file)
}

/// Cost table as printed to the console.
pub fn format_cost_rows(rows: &[(String, f64, f64)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<8} {:>14} {:>14}\n", "case", "J1", "J2"));
    for (name, j1, j2) in rows {
        out.push_str(&format!("{:<8} {:>14} {:>14}\n", name, sig6(*j1), sig6(*j2)));
    }
    out
}

pub fn format_cost_table(table: &CostTable) -> String {
    let mut out = format_cost_rows(&[
        ("fne".into(), table.fne[0], table.fne[1]),
        ("ref".into(), table.reference[0], table.reference[1]),
        ("cf".into(), table.cf[0], table.cf[1]),
    ]);
    out.push_str(&format!(
        "J1 increase REF vs FNE: {}%\nJ1 improvement CF vs REF: {}%\nloss recovered by CF: {}%\n",
        sig6(table.ref_increase_pct),
        sig6(table.cf_improvement_pct),
        sig6(table.loss_recovered_pct)
    ));
    out
}

/// Separate file for wall-clock data so result files stay reproducible.
pub fn write_run_metadata(dir: &Path, command: &str) -> std::io::Result<()> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut f = fs::File::create(dir.join("run_metadata.json"))?;
    writeln!(
        f,
        "{{\n  \"command\": {},\n  \"unix_time\": {secs},\n  \"version\": \"{}\"\n}}",
        serde_json::to_string(command).map_err(std::io::Error::other)?,
        env!("CARGO_PKG_VERSION")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(325.31), "325.310");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(-0.0123456789), "-0.0123457");
        assert_eq!(sig6(1.5e-9), "1.50000e-9");
        assert_eq!(sig6(123456789.0), "1.23457e8");
    }

    #[test]
    fn header_layout() {
        let h = trajectory_header(2, 1, 1);
        assert_eq!(
            h.join(","),
            "k,x1,x2,u1_1,u2_applied_1,u2_intended_1,w_1,w_2,stage_cost_1,stage_cost_2"
        );
    }
}
