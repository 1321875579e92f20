//! Minimal SVG line plots of power tables: one panel per table panel,
//! sweep value on the x axis, rejection rate on the y axis.

use std::fmt::Write;

use super::power::PowerTable;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const W: f64 = 560.0;
const H: f64 = 300.0;
const ML: f64 = 60.0;
const MR: f64 = 170.0;
const MT: f64 = 36.0;
const MB: f64 = 46.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders the table as a standalone SVG document.
pub fn render_svg(table: &PowerTable, title: &str) -> String {
    let mut panels: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !panels.contains(&r.panel.as_str()) {
            panels.push(&r.panel);
        }
    }
    let total_h = H * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" viewBox="0 0 {W} {total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (pi, panel) in panels.iter().enumerate() {
        let oy = pi as f64 * H;
        let rows: Vec<_> = table.rows.iter().filter(|r| r.panel == *panel).collect();
        let mut xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let (xmin, xmax) = (xs[0], xs[xs.len() - 1]);
        let span = if xmax > xmin { xmax - xmin } else { 1.0 };
        let pw = W - ML - MR;
        let ph = H - MT - MB;
        let px = |v: f64| ML + if xmax > xmin { (v - xmin) / span * pw } else { pw / 2.0 };
        let py = |r: f64| oy + MT + (1.0 - r) * ph;
        let heading = if panel.is_empty() { title.to_string() } else { format!("{title}: {panel}") };
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="13">{}</text>"#, ML, oy + 20.0, esc(&heading));
        let _ = writeln!(
            out,
            r#"<rect x="{ML}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            oy + MT
        );
        for k in 0..=4 {
            let r = k as f64 / 4.0;
            let y = py(r);
            let _ = writeln!(out, r##"<line x1="{ML}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, ML + pw);
            let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, ML - 6.0, y + 4.0, fmt_tick(r));
        }
        for &v in &xs {
            let x = px(v);
            let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, oy + MT + ph + 16.0, fmt_tick(v));
        }
        let param = rows.first().map(|r| r.parameter.as_str()).unwrap_or("");
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            ML + pw / 2.0,
            oy + H - 10.0,
            esc(param)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">rejection rate</text>"#,
            oy + MT + ph / 2.0,
            oy + MT + ph / 2.0
        );
        let mut methods: Vec<&str> = Vec::new();
        for r in &rows {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
        }
        for (mi, method) in methods.iter().enumerate() {
            let color = PALETTE[mi % PALETTE.len()];
            let mut pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.method == *method).map(|r| (r.value, r.rate)).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = pts.iter().map(|&(v, r)| format!("{:.2},{:.2}", px(v), py(r))).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
            for &(v, r) in &pts {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(v), py(r));
            }
            let ly = oy + MT + 12.0 + 16.0 * mi as f64;
            let lx = ML + pw + 12.0;
            let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, esc(method));
        }
    }
    out.push_str("</svg>\n");
    out
}
