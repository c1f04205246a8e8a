use std::fmt::Write as _;

use super::metrics::Percentiles;
use super::roc::RocPoint;

const SIZE: f64 = 320.0;
const MARGIN: f64 = 40.0;

fn frame(title: &str, x_label: &str, y_label: &str, body: &str) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(out, r#"<text x="{MARGIN}" y="{}" font-size="14">{title}</text>"#, MARGIN - 12.0).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{x_label}</text>"#,
        MARGIN + SIZE / 2.0,
        full - 10.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="12" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">{y_label}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    )
    .unwrap();
    out.push_str(body);
    out.push_str("</svg>\n");
    out
}

/// Maps unit-square coordinates into the plot area (y up).
fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    let coords: Vec<String> = points
        .map(|(x, y)| {
            format!(
                "{:.2},{:.2}",
                MARGIN + x.clamp(0.0, 1.0) * SIZE,
                MARGIN + (1.0 - y.clamp(0.0, 1.0)) * SIZE
            )
        })
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// ROC curve as a standalone SVG document.
pub fn roc_svg(points: &[RocPoint]) -> String {
    let diagonal = polyline([(0.0, 0.0), (1.0, 1.0)].into_iter()).replace("steelblue", "lightgray");
    let curve = polyline(points.iter().map(|p| (p.fpr, p.tpr)));
    frame("ROC", "false positive rate", "true positive rate", &(diagonal + &curve))
}

/// Step plot of the per-video accuracy CDF.
pub fn cdf_svg(p: &Percentiles) -> String {
    let n = p.sorted().len() as f64;
    let mut pts = vec![(0.0, 0.0)];
    for (i, &a) in p.sorted().iter().enumerate() {
        pts.push((a, i as f64 / n));
        pts.push((a, (i + 1) as f64 / n));
    }
    pts.push((1.0, 1.0));
    frame("accuracy CDF", "accuracy", "fraction of videos", &polyline(pts.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presence::accuracy_percentiles;

    #[test]
    fn documents_are_well_formed_enough() {
        let svg = roc_svg(&[
            RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 },
            RocPoint { threshold: 0.5, tpr: 1.0, fpr: 0.0 },
            RocPoint { threshold: f64::NEG_INFINITY, tpr: 1.0, fpr: 1.0 },
        ]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        let cdf = cdf_svg(&accuracy_percentiles(&[0.5, 0.9]).unwrap());
        assert!(cdf.contains("accuracy CDF"));
    }
}
