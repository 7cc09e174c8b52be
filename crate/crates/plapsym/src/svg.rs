//! Minimal static SVG line plots: fixed 800x600 viewBox, axes, legend.
//! No plotting dependency so the emitted bytes are fully deterministic.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// One named polyline.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

fn finite(points: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
}

fn range(series: &[Series], pick_y: bool) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for (x, y) in finite(&s.points) {
            let v = if pick_y { y } else { x };
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        // a flat series still needs a drawable band
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{:.4}", v)
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Renders series into a fixed-size SVG line chart.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = range(series, false);
    let (y0, y1) = range(series, true);
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y0) / (y1 - y0) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut s = String::with_capacity(4096);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"14\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"17\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));
    // axes box
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
        MARGIN_L,
        MARGIN_T,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));
    // four ticks per axis
    for i in 0..=3 {
        let fx = x0 + (x1 - x0) * i as f64 / 3.0;
        let fy = y0 + (y1 - y0) * i as f64 / 3.0;
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#333\">{}</text>\n",
            px(fx),
            HEIGHT - MARGIN_B + 20.0,
            fmt_tick(fx)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#333\">{}</text>\n",
            MARGIN_L - 6.0,
            py(fy) + 5.0,
            fmt_tick(fy)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 10.0,
        xml_escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        xml_escape(y_label)
    ));

    for (si, ser) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<(f64, f64)> = finite(&ser.points).collect();
        if pts.len() == 1 {
            s.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n",
                px(pts[0].0),
                py(pts[0].1),
                color
            ));
        } else if !pts.is_empty() {
            let mut path = String::new();
            for (x, y) in &pts {
                path.push_str(&format!("{},{} ", px(*x), py(*y)));
            }
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                path.trim_end(),
                color
            ));
        }
        // legend entry
        let ly = MARGIN_T + 18.0 + 20.0 * si as f64;
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            WIDTH - 190.0,
            ly - 4.0,
            WIDTH - 160.0,
            ly - 4.0,
            color
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#333\">{}</text>\n",
            WIDTH - 152.0,
            ly,
            xml_escape(&ser.label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Series> {
        vec![
            Series::new("u", vec![(0.0, 0.0), (0.5, 0.25), (1.0, 0.0)]),
            Series::new("u*", vec![(0.0, 0.01), (0.5, 0.24), (1.0, 0.01)]),
        ]
    }

    #[test]
    fn renders_well_formed_svg() {
        let svg = line_plot("profile", "x", "u", &sample());
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("viewBox=\"0 0 800 600\""));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">u*</text>"));
        assert!(svg.contains(">profile</text>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = line_plot("t", "x", "y", &sample());
        let b = line_plot("t", "x", "y", &sample());
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_and_hostile_inputs_stay_finite() {
        let flat = vec![Series::new("flat", vec![(0.0, 2.0), (1.0, 2.0)])];
        let svg = line_plot("flat", "x", "y", &flat);
        assert!(!svg.contains("NaN"));

        let empty: Vec<Series> = vec![Series::new("none", vec![])];
        let svg = line_plot("empty", "x", "y", &empty);
        assert!(!svg.contains("NaN"));
        assert_eq!(svg.matches("<polyline").count(), 0);

        let nasty = vec![Series::new(
            "a<b&c",
            vec![(0.0, 1.0), (f64::NAN, 5.0), (1.0, 2.0)],
        )];
        let svg = line_plot("x", "x", "y", &nasty);
        assert!(!svg.contains("NaN"));
        assert!(svg.contains("a&lt;b&amp;c"));
    }

    #[test]
    fn single_point_becomes_a_marker() {
        let one = vec![Series::new("dot", vec![(0.5, 0.5)])];
        let svg = line_plot("dot", "x", "y", &one);
        assert!(svg.contains("<circle"));
    }
}
