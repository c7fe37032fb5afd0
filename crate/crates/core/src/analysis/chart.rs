//! Stacked-bar SVG rendering of distribution reports.
//!
//! One panel per report, one bar per demographic in [`Group::CHART_ORDER`],
//! segments stacked bottom to top as negative, neutral, positive. Output is
//! a pure function of the input, so identical reports give identical bytes.

use std::fmt::Write as _;

use super::DistributionReport;
use crate::templates::Group;

/// Plot-area height; a full bar is this tall.
pub const BAR_HEIGHT: f64 = 300.0;
const BAR_WIDTH: f64 = 28.0;
const BAR_GAP: f64 = 12.0;
const PAIR_GAP: f64 = 20.0;
const MARGIN_LEFT: f64 = 50.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PANEL_GAP: f64 = 40.0;
const LEGEND_WIDTH: f64 = 120.0;

const SEGMENTS: [(&str, &str); 3] = [
    ("negative", "#222222"),
    ("neutral", "#8c8c8c"),
    ("positive", "#d4d4d4"),
];

fn panel_width() -> f64 {
    let bars = Group::CHART_ORDER.len() as f64;
    bars * BAR_WIDTH + (bars - 1.0) * BAR_GAP + 2.0 * PAIR_GAP
}

fn bar_x(position: usize) -> f64 {
    // an extra gap after every pair
    position as f64 * (BAR_WIDTH + BAR_GAP) + (position / 2) as f64 * PAIR_GAP
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render all reports side by side in one SVG document.
pub fn render_stacked_chart(reports: &[DistributionReport]) -> String {
    let panels = reports.len().max(1) as f64;
    let plot_w = panel_width();
    let width = MARGIN_LEFT + panels * plot_w + (panels - 1.0) * PANEL_GAP + LEGEND_WIDTH + 20.0;
    let height = MARGIN_TOP + BAR_HEIGHT + MARGIN_BOTTOM;
    let base = MARGIN_TOP + BAR_HEIGHT;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (p, report) in reports.iter().enumerate() {
        let x0 = MARGIN_LEFT + p as f64 * (plot_w + PANEL_GAP);
        let _ = writeln!(
            svg,
            r#"<g class="panel" data-scorer="{}" data-context="{}">"#,
            esc(&report.scorer_name),
            report.context
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{} ({})</text>"#,
            x0 + plot_w / 2.0,
            MARGIN_TOP - 16.0,
            esc(&report.scorer_name),
            report.context
        );
        // y axis with ticks every 0.2
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{base:.2}" stroke="#000"/>"##,
            x = x0 - 6.0
        );
        for tick in 0..=5 {
            let frac = tick as f64 * 0.2;
            let y = base - frac * BAR_HEIGHT;
            let _ = writeln!(
                svg,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/><text x="{:.2}" y="{:.2}" text-anchor="end">{frac:.1}</text>"##,
                x0 - 10.0,
                x0 - 6.0,
                x0 - 12.0,
                y + 4.0
            );
        }
        if p == 0 {
            let _ = writeln!(
                svg,
                r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">fraction of samples</text>"#,
                MARGIN_TOP + BAR_HEIGHT / 2.0,
                MARGIN_TOP + BAR_HEIGHT / 2.0
            );
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#000"/>"##,
            x0 - 6.0,
            x0 + plot_w
        );

        for (pos, group) in Group::CHART_ORDER.iter().enumerate() {
            let x = x0 + bar_x(pos);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + BAR_WIDTH / 2.0,
                base + 16.0,
                group.display_name()
            );
            let Some(dist) = report.per_demographic.get(group) else {
                continue;
            };
            let _ = writeln!(svg, r#"<g class="bar" data-group="{group}" data-n="{}">"#, dist.n);
            let mut cumulative = 0.0;
            for ((name, fill), frac) in SEGMENTS.iter().zip(dist.fractions()) {
                // heights from rounded cumulative edges, so segments tile the bar exactly
                let bottom = base - round2(cumulative * BAR_HEIGHT);
                cumulative += frac;
                let top = base - round2(cumulative * BAR_HEIGHT);
                let h = bottom - top;
                if h <= 0.0 {
                    continue;
                }
                let _ = writeln!(
                    svg,
                    r##"<rect class="segment {name}" x="{x:.2}" y="{top:.2}" width="{BAR_WIDTH:.2}" height="{h:.2}" fill="{fill}" stroke="#000" stroke-width="0.5"/>"##
                );
            }
            let _ = writeln!(svg, "</g>");
        }
        let _ = writeln!(svg, "</g>");
    }

    let lx = MARGIN_LEFT + panels * plot_w + (panels - 1.0) * PANEL_GAP + 20.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, (name, fill)) in SEGMENTS.iter().enumerate().rev() {
        let y = MARGIN_TOP + (2 - i) as f64 * 18.0;
        let _ = writeln!(
            svg,
            r##"<rect x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{fill}" stroke="#000" stroke-width="0.5"/><text x="{:.2}" y="{:.2}">{name}</text>"##,
            lx + 18.0,
            y + 10.0
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
