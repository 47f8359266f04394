//! Static plots written as plain SVG with a fixed layout, so the same
//! report always produces the same bytes.

use std::fmt::Write;

use crate::report::Analysis;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 320.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 64.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn title(a: &Analysis) -> String {
    match &a.content {
        Some(c) => format!("scene {}", escape(c)),
        None => "all scenes".to_owned(),
    }
}

fn header(height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Tick spacing giving roughly five ticks over `span`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Scores with 95% intervals, one panel per analysis. The reference
/// condition has no interval.
pub fn score_plot(analyses: &[Analysis]) -> String {
    let height = PANEL * analyses.len() as f64;
    let mut out = header(height);
    for (k, a) in analyses.iter().enumerate() {
        let y0 = PANEL * k as f64;
        let n = a.jod.len();
        let interval = |i: usize| {
            a.bootstrap
                .as_ref()
                .and_then(|b| Some((b.ci_low[i]?, b.ci_high[i]?)))
        };
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for i in 0..n {
            lo = lo.min(a.jod[i]);
            hi = hi.max(a.jod[i]);
            if let Some((l, h)) = interval(i) {
                lo = lo.min(l);
                hi = hi.max(h);
            }
        }
        let step = tick_step((hi - lo).max(1.0));
        let lo = (lo / step).floor() * step;
        let hi = (hi / step).ceil() * step;
        let plot_h = PANEL - TOP - BOTTOM;
        let plot_w = WIDTH - LEFT - RIGHT;
        let y = |v: f64| y0 + TOP + plot_h * (hi - v) / (hi - lo);
        let x = |i: usize| LEFT + plot_w * (i as f64 + 0.5) / n as f64;

        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
            WIDTH / 2.0,
            y0 + 24.0,
            title(a)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{:.1}\" x2=\"{LEFT}\" y2=\"{:.1}\" stroke=\"black\"/>",
            y(hi),
            y(lo)
        );
        let mut t = lo;
        while t <= hi + 1e-9 {
            let _ = writeln!(
                out,
                "<line x1=\"{LEFT}\" y1=\"{0:.1}\" x2=\"{1}\" y2=\"{0:.1}\" stroke=\"#ddd\"/>\
                 <text x=\"{2}\" y=\"{3:.1}\" text-anchor=\"end\">{4}</text>",
                y(t),
                WIDTH - RIGHT,
                LEFT - 6.0,
                y(t) + 4.0,
                format_tick(t)
            );
            t += step;
        }
        let _ = writeln!(
            out,
            "<text transform=\"translate(16 {:.1}) rotate(-90)\" text-anchor=\"middle\">JOD</text>",
            y0 + TOP + plot_h / 2.0
        );
        for i in 0..n {
            if let Some((l, h)) = interval(i) {
                let _ = writeln!(
                    out,
                    "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#1f5fa8\" stroke-width=\"1.5\"/>\
                     <line x1=\"{3:.1}\" y1=\"{1:.1}\" x2=\"{4:.1}\" y2=\"{1:.1}\" stroke=\"#1f5fa8\"/>\
                     <line x1=\"{3:.1}\" y1=\"{2:.1}\" x2=\"{4:.1}\" y2=\"{2:.1}\" stroke=\"#1f5fa8\"/>",
                    x(i),
                    y(l),
                    y(h),
                    x(i) - 5.0,
                    x(i) + 5.0
                );
            }
            let _ = writeln!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"#1f5fa8\"/>\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                x(i),
                y(a.jod[i]),
                x(i),
                y0 + PANEL - BOTTOM + 20.0,
                escape(&a.conditions[i])
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn format_tick(t: f64) -> String {
    let s = format!("{t:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_owned() } else { s.to_owned() }
}

/// Conditions ordered by score; each pair of neighbours is joined by a solid
/// line when their difference is significant and a dashed one otherwise.
pub fn significance_graph(analyses: &[Analysis]) -> String {
    let panel = 160.0;
    let height = panel * analyses.len() as f64;
    let mut out = header(height);
    for (k, a) in analyses.iter().enumerate() {
        let y0 = panel * k as f64;
        let mut order: Vec<usize> = (0..a.jod.len()).collect();
        order.sort_by(|&i, &j| a.jod[i].total_cmp(&a.jod[j]).then(i.cmp(&j)));
        let (lo, hi) = (a.jod[order[0]], a.jod[*order.last().unwrap()]);
        let span = (hi - lo).max(1e-9);
        let x = |i: usize| LEFT + (WIDTH - LEFT - RIGHT) * (a.jod[i] - lo) / span;
        let line_y = y0 + 90.0;

        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
            WIDTH / 2.0,
            y0 + 24.0,
            title(a)
        );
        for w in order.windows(2) {
            let (i, j) = (w[0], w[1]);
            let (style, label) = match &a.bootstrap {
                Some(b) => {
                    let p = b.significance.p_values[i][j];
                    let dash = if b.significance.significant[i][j] { "" } else { " stroke-dasharray=\"6 4\"" };
                    let label = if p < 0.001 { "p<0.001".to_owned() } else { format!("p={p:.3}") };
                    (dash, label)
                }
                None => (" stroke-dasharray=\"2 4\" stroke-opacity=\"0.5\"", "untested".to_owned()),
            };
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{line_y:.1}\" x2=\"{:.1}\" y2=\"{line_y:.1}\" stroke=\"black\" stroke-width=\"2\"{style}/>\
                 <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{label}</text>",
                x(i),
                x(j),
                0.5 * (x(i) + x(j)),
                line_y - 8.0
            );
        }
        for (rank, &i) in order.iter().enumerate() {
            let label_y = if rank % 2 == 0 { line_y + 24.0 } else { line_y + 40.0 };
            let _ = writeln!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{line_y:.1}\" r=\"5\" fill=\"#1f5fa8\"/>\
                 <text x=\"{:.1}\" y=\"{label_y:.1}\" text-anchor=\"middle\">{} ({:.2})</text>",
                x(i),
                x(i),
                escape(&a.conditions[i]),
                a.jod[i]
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Every tested pair of conditions. Analyses without a bootstrap have no
/// tests and contribute no rows.
pub fn edge_list(analyses: &[Analysis]) -> String {
    let mut out = String::from("content,condition_a,condition_b,p_value,significant\n");
    for a in analyses {
        let Some(b) = &a.bootstrap else { continue };
        let content = a.content.as_deref().map(csv_field).unwrap_or_default();
        let n = a.conditions.len();
        for i in 0..n {
            for j in i + 1..n {
                let _ = writeln!(
                    out,
                    "{content},{},{},{},{}",
                    csv_field(&a.conditions[i]),
                    csv_field(&a.conditions[j]),
                    b.significance.p_values[i][j],
                    b.significance.significant[i][j]
                );
            }
        }
    }
    out
}
