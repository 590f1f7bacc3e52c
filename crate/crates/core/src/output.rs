//! CSV and SVG emission for result tables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiments::ResultTable;

/// Writes `table` as CSV: a `# config=<hash> seed=<n>` comment line, a
/// version comment, the header, then one row per grid point.
pub fn write_csv<W: Write>(table: &ResultTable, mut out: W) -> Result<()> {
    writeln!(out, "# config={} seed={}", table.config_hash, table.seed)?;
    writeln!(out, "# version={}", table.version)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(table: &ResultTable) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal line plot of the table's plot columns, one polyline per group.
pub fn svg_string(table: &ResultTable) -> String {
    let spec = table.plot;
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for row in &table.rows {
        let key = spec.group.map_or(0.0, |g| row[g]);
        let pt = (row[spec.x], row[spec.y]);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, pts)) => pts.push(pt),
            None => groups.push((key, vec![pt])),
        }
    }
    let finite = || table.rows.iter().filter(|r| r[spec.x].is_finite() && r[spec.y].is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = finite().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), r| (a.min(r[spec.x]), b.max(r[spec.x]), c.min(r[spec.y]), d.max(r[spec.y])),
    );
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<!-- config={} seed={} -->"#, table.config_hash, table.seed);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        table.columns[spec.x]
    );
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0, table.columns[spec.y]);
    for (v, anchor, x, y) in [
        (x0, "start", sx(x0), HEIGHT - MARGIN + 16.0),
        (x1, "end", sx(x1), HEIGHT - MARGIN + 16.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{v:.4}</text>"#);
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.4}</text>"#, MARGIN - 4.0, y + 4.0);
    }
    for (k, (key, pts)) in groups.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, coords.join(" "));
        if let Some(g) = spec.group {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}={key}</text>"#,
                WIDTH - MARGIN - 90.0,
                MARGIN + 16.0 * k as f64,
                table.columns[g]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<name>.csv` and `<name>.svg` into `dir`, creating it if needed.
/// Returns the CSV path.
pub fn write_table(table: &ResultTable, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", table.name));
    std::fs::write(&csv_path, csv_string(table))?;
    std::fs::write(dir.join(format!("{}.svg", table.name)), svg_string(table))?;
    Ok(csv_path)
}
