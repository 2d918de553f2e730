use std::fmt::Write;

use crate::harness::ProfileTable;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Profile curves of every method for `threshold` on a log-step axis, with
/// ±1 s.d. bands and a marker where a method's runs all become exact.
pub fn profile_svg(table: &ProfileTable, threshold: f64, title: &str) -> String {
    let methods = table.methods();
    let steps: Vec<u64> = table.rows.iter().map(|r| r.steps).collect();
    let lo = steps.iter().copied().min().unwrap_or(1).max(1) as f64;
    let hi = (steps.iter().copied().max().unwrap_or(10) as f64).max(lo * 1.01);
    let x = |s: u64| PAD + ((s.max(1) as f64).ln() - lo.ln()) / (hi.ln() - lo.ln()) * (W - 2.0 * PAD);
    let y = |f: f64| H - PAD - f.clamp(0.0, 1.0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{} (D = {threshold})</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} L{PAD},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{f}</text>"#, PAD - 6.0, y(f) + 4.0);
    }
    let mut decade = 10f64.powf(lo.log10().ceil());
    while decade <= hi {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">1e{}</text>"#,
            x(decade as u64),
            H - PAD + 16.0,
            decade.log10().round()
        );
        decade *= 10.0;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">environment steps</text>"#, W / 2.0, H - 12.0);

    for (k, m) in methods.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let rows = table.curve(m, threshold);
        if rows.is_empty() {
            continue;
        }
        let upper: Vec<String> = rows.iter().map(|r| format!("{:.1},{:.1}", x(r.steps), y(r.fraction + r.std))).collect();
        let lower: Vec<String> =
            rows.iter().rev().map(|r| format!("{:.1},{:.1}", x(r.steps), y(r.fraction - r.std))).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = rows.iter().map(|r| format!("{:.1},{:.1}", x(r.steps), y(r.fraction))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        if let Some(Some(at)) = table.converged_at.get(m.as_str()) {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="5" fill="{color}"/>"#, x(*at), y(1.0));
        }
        let ly = PAD + 16.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="3" fill="{color}"/>"#, W - PAD - 110.0, ly);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - PAD - 92.0, ly + 5.0, escape(m));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
