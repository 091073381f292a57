use std::fmt::Write;

const SIZE: f64 = 400.0;
const PAD: f64 = 40.0;

/// ROC curve as a standalone SVG: unit square, chance diagonal, one polyline.
pub fn roc_svg(curve: &[(f64, f64)], title: &str) -> String {
    let span = SIZE - 2.0 * PAD;
    let x = |fpr: f64| PAD + fpr * span;
    let y = |tpr: f64| SIZE - PAD - tpr * span;
    let mut points = String::new();
    for &(fpr, tpr) in curve {
        let _ = write!(points, "{:.2},{:.2} ", x(fpr), y(tpr));
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.trim_end()
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">FPR</text>"#,
        SIZE / 2.0,
        SIZE - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 14 {})">TPR</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
