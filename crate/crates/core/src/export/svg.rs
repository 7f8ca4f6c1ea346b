//! Static vector drawings of chart series. Output depends only on the input
//! series, so reports built from equal data are byte-identical.

use std::f64::consts::PI;
use std::fmt::Write;

use super::html::escape;
use crate::stats::{ChartData, ChartKind};

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"];

pub fn render_chart(chart: &ChartData) -> String {
    match chart.kind {
        ChartKind::Bar => render_bar(chart),
        ChartKind::Pie => render_pie(chart),
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn render_bar(chart: &ChartData) -> String {
    let (width, height) = (640.0, 320.0);
    let (left, right, top, bottom) = (40.0, 10.0, 30.0, 80.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let peak = chart.series.iter().map(|p| p.value).fold(0.0_f64, f64::max);
    let scale = if peak > 0.0 { plot_h / peak } else { 0.0 };

    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" role="img">"#,
        w = num(width),
        h = num(height)
    );
    let _ = write!(svg, r#"<title>{}</title>"#, escape(&chart.title));
    let _ = write!(
        svg,
        r##"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="#333"/>"##,
        l = num(left),
        r = num(width - right),
        b = num(top + plot_h)
    );
    if chart.series.is_empty() {
        let _ = write!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, num(width / 2.0), num(height / 2.0));
    }
    let slot = if chart.series.is_empty() { 0.0 } else { plot_w / chart.series.len() as f64 };
    for (i, point) in chart.series.iter().enumerate() {
        let bar_h = point.value.max(0.0) * scale;
        let x = left + slot * i as f64 + slot * 0.1;
        let y = top + plot_h - bar_h;
        let cx = x + slot * 0.4;
        let _ = write!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            num(x),
            num(y),
            num(slot * 0.8),
            num(bar_h),
            PALETTE[0]
        );
        let _ = write!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{}</text>"#, num(cx), num(y - 3.0), num(point.value));
        let ly = top + plot_h + 12.0;
        let _ = write!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="10" text-anchor="end" transform="rotate(-45 {x} {y})">{}</text>"#,
            escape(&point.label),
            x = num(cx),
            y = num(ly)
        );
    }
    svg.push_str("</svg>");
    svg
}

fn render_pie(chart: &ChartData) -> String {
    let (cx, cy, r) = (150.0, 150.0, 120.0);
    let total: f64 = chart.series.iter().map(|p| p.value.max(0.0)).sum();

    let mut svg = String::new();
    let _ = write!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="460" height="300" viewBox="0 0 460 300" role="img">"#);
    let _ = write!(svg, r#"<title>{}</title>"#, escape(&chart.title));
    if total <= 0.0 {
        let _ = write!(svg, r##"<circle cx="{}" cy="{}" r="{}" fill="#ddd"/>"##, num(cx), num(cy), num(r));
        let _ = write!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, num(cx), num(cy));
    }
    let mut angle = -PI / 2.0;
    for (i, point) in chart.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let value = point.value.max(0.0);
        if total > 0.0 && value > 0.0 {
            let sweep = value / total * 2.0 * PI;
            if value >= total {
                let _ = write!(svg, r#"<circle cx="{}" cy="{}" r="{}" fill="{colour}"/>"#, num(cx), num(cy), num(r));
            } else {
                let (x0, y0) = (cx + r * angle.cos(), cy + r * angle.sin());
                let end = angle + sweep;
                let (x1, y1) = (cx + r * end.cos(), cy + r * end.sin());
                let large = if sweep > PI { 1 } else { 0 };
                let _ = write!(
                    svg,
                    r#"<path d="M {} {} L {} {} A {} {} 0 {large} 1 {} {} Z" fill="{colour}"/>"#,
                    num(cx),
                    num(cy),
                    num(x0),
                    num(y0),
                    num(r),
                    num(r),
                    num(x1),
                    num(y1)
                );
            }
            angle += sweep;
        }
        let ly = 40.0 + 24.0 * i as f64;
        let _ = write!(svg, r#"<rect x="300" y="{}" width="14" height="14" fill="{colour}"/>"#, num(ly));
        let _ = write!(
            svg,
            r#"<text x="320" y="{}" font-size="12">{}: {}</text>"#,
            num(ly + 11.0),
            escape(&point.label),
            num(point.value)
        );
    }
    svg.push_str("</svg>");
    svg
}
