//! Decision-region plots: uniform ambient samples colored by predicted label
//! under the training points colored by true label.

use std::fmt::Write as _;

use adaptrobust::{Classifier, LabeledDataset, Point, RandomStream};
use anyhow::{bail, Result};

pub const REGION_COLORS: [&str; 2] = ["#d62728", "#9467bd"];
pub const DATA_COLORS: [&str; 2] = ["#1f77b4", "#2ca02c"];

const PLOT: f64 = 480.0;
const MARGIN: f64 = 20.0;
const LEGEND: f64 = 150.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    /// Ambient points drawn uniformly over the data bounding box.
    pub samples: usize,
    pub seed: u64,
    pub title: String,
    /// Embedded verbatim (XML-escaped) as SVG metadata.
    pub metadata: String,
}

pub fn render_svg<C: Classifier + ?Sized>(
    h: &C,
    data: &LabeledDataset,
    spec: &RenderSpec,
) -> Result<String> {
    if data.dim() != 2 {
        bail!(
            "rendering is 2-D only; dataset has dimension {}",
            data.dim()
        );
    }
    let (lo, hi) = bounding_box(data);
    let px = |p: &[f64]| {
        (
            MARGIN + (p[0] - lo[0]) / (hi[0] - lo[0]) * PLOT,
            MARGIN + (hi[1] - p[1]) / (hi[1] - lo[1]) * PLOT,
        )
    };
    let width = PLOT + 2.0 * MARGIN + LEGEND;
    let height = PLOT + 2.0 * MARGIN;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )?;
    writeln!(svg, "<title>{}</title>", escape(&spec.title))?;
    writeln!(svg, "<metadata>\n{}</metadata>", escape(&spec.metadata))?;
    writeln!(
        svg,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    )?;

    writeln!(svg, r#"<g id="regions" fill-opacity="0.35">"#)?;
    let mut stream = RandomStream::new(spec.seed);
    let cell = (PLOT * PLOT / spec.samples.max(1) as f64)
        .sqrt()
        .clamp(1.5, 12.0);
    for _ in 0..spec.samples {
        let x = Point::new(vec![
            lo[0] + stream.uniform() * (hi[0] - lo[0]),
            lo[1] + stream.uniform() * (hi[1] - lo[1]),
        ])?;
        let (cx, cy) = px(x.coords());
        let color = REGION_COLORS[(h.predict(&x).0 as usize).min(1)];
        writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{color}"/>"#,
            cx - cell / 2.0,
            cy - cell / 2.0
        )?;
    }
    writeln!(svg, "</g>")?;

    writeln!(svg, r#"<g id="data" stroke="black" stroke-width="0.3">"#)?;
    for (p, y) in data.iter() {
        let (cx, cy) = px(p.coords());
        let color = DATA_COLORS[(y.0 as usize).min(1)];
        writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}"/>"#
        )?;
    }
    writeln!(svg, "</g>")?;

    writeln!(
        svg,
        r#"<g id="legend" font-family="sans-serif" font-size="12">"#
    )?;
    let entries = [
        (REGION_COLORS[0], "predicted 0"),
        (REGION_COLORS[1], "predicted 1"),
        (DATA_COLORS[0], "class 0"),
        (DATA_COLORS[1], "class 1"),
    ];
    for (i, (color, text)) in entries.iter().enumerate() {
        let y = MARGIN + 20.0 * i as f64;
        let x = PLOT + 2.0 * MARGIN;
        writeln!(
            svg,
            r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{color}"/>"#
        )?;
        writeln!(
            svg,
            r#"<text x="{}" y="{}">{text}</text>"#,
            x + 18.0,
            y + 10.0
        )?;
    }
    writeln!(svg, "</g>")?;
    writeln!(svg, "</svg>")?;
    Ok(svg)
}

/// Bounding box of the data, widened to a unit extent on flat axes.
fn bounding_box(data: &LabeledDataset) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in data.points() {
        for j in 0..2 {
            lo[j] = lo[j].min(p.coords()[j]);
            hi[j] = hi[j].max(p.coords()[j]);
        }
    }
    for j in 0..2 {
        if hi[j] - lo[j] <= 0.0 {
            lo[j] -= 0.5;
            hi[j] += 0.5;
        }
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use adaptrobust::Label;

    fn data() -> LabeledDataset {
        LabeledDataset::from_items([
            (Point::from([0.0, 0.0]), Label(0)),
            (Point::from([1.0, 1.0]), Label(1)),
        ])
        .unwrap()
    }

    fn spec(samples: usize) -> RenderSpec {
        RenderSpec {
            samples,
            seed: 1,
            title: "t".into(),
            metadata: "a=<1>".into(),
        }
    }

    #[test]
    fn four_colors_and_metadata() {
        let h = |x: &Point| Label(u32::from(x.coords()[0] > 0.5));
        let svg = render_svg(&h, &data(), &spec(500)).unwrap();
        for c in REGION_COLORS.iter().chain(&DATA_COLORS) {
            // once in the legend, at least once in the plot
            assert!(svg.matches(c).count() >= 2, "{c}");
        }
        assert!(svg.contains("a=&lt;1&gt;"));
        assert_eq!(svg, render_svg(&h, &data(), &spec(500)).unwrap());
    }

    #[test]
    fn zero_samples_draws_only_data() {
        let h = |_: &Point| Label(0);
        let svg = render_svg(&h, &data(), &spec(0)).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        let regions = svg
            .split(r#"<g id="regions""#)
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        assert!(!regions.contains("<rect"));
    }

    #[test]
    fn rejects_other_dimensions() {
        let d1 = LabeledDataset::from_items([(Point::from([0.0]), Label(0))]).unwrap();
        assert!(render_svg(&|_: &Point| Label(0), &d1, &spec(10)).is_err());
    }
}
