//! CSV tables and JSON summaries. Output is a pure function of its inputs so
//! repeated runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::metric_space::Space;
use crate::solver::Trajectory;

/// `run.csv` → `run.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn trajectory_csv(space: &Space, traj: &Trajectory) -> String {
    let mut s = String::from("step,time,");
    for c in space.point_columns() {
        s.push_str(&c);
        s.push(',');
    }
    s.push_str("weight\n");
    for (k, (t, mu)) in traj.times.iter().zip(&traj.states).enumerate() {
        for (p, w) in mu.iter() {
            let _ = write!(s, "{k},{t},");
            for v in p.components() {
                let _ = write!(s, "{v},");
            }
            let _ = writeln!(s, "{w}");
        }
    }
    s
}

/// Rows of numbers under a header.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;
    use crate::metric_space::Point;

    #[test]
    fn trajectory_layout() {
        let space = Space::interval(0.0, 1.0).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![
                DiscreteMeasure::dirac(Point::real(0.25), 1.0).unwrap(),
                DiscreteMeasure::new(vec![Point::real(0.25), Point::real(0.75)], vec![1.5, 0.1]).unwrap(),
            ],
            diagnostics: vec![],
        };
        let csv = trajectory_csv(&space, &traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("step,time,{},weight", space.point_columns().join(",")));
        assert_eq!(lines[1], "0,0,0.25,1");
        assert_eq!(lines[3], "1,0.5,0.75,0.1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn summary_sits_next_to_table() {
        assert_eq!(summary_path(Path::new("out/run.csv")), PathBuf::from("out/run.json"));
        let t = table_csv(&["a", "b"], &[vec![1.0, 0.5]]);
        assert_eq!(t, "a,b\n1,0.5\n");
    }
}
