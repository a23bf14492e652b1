//! Dependency-free SVG panels: temporal gradient heat map, isochrone
//! contours, and neuron markers in the reference figure style.
//!
//! Color mapping (documented here because the reference figures leave it
//! open): heat cells run through a five-stop viridis-like ramp over the
//! run-wide spike-time range; silent neurons are gray, neurons that spiked
//! this iteration orange, tagged neurons red (faded red when tagged but
//! silent). The source carries a blue outlined box, targets white boxes
//! under the neuron disc.

use std::fmt::Write as _;

use spikepath::analysis::{FieldGrid, Polyline};
use spikepath::engine::IterationRecord;
use spikepath::network::{Environment, NodeId, Point2, SpatialNetwork};

const PANEL: f64 = 720.0;
const MARGIN: f64 = 24.0;
const TITLE_H: f64 = 40.0;

struct Frame {
    scale: f64,
    off_x: f64,
    off_y: f64,
    min_x: f64,
    max_y: f64,
}

impl Frame {
    fn new(env: &Environment) -> Self {
        let w = env.bbox.width();
        let h = env.bbox.height();
        let scale = (PANEL - 2.0 * MARGIN) / w.max(h);
        Self {
            scale,
            off_x: MARGIN,
            off_y: TITLE_H + MARGIN,
            min_x: env.bbox.min_x,
            max_y: env.bbox.max_y,
        }
    }

    /// World meters to pixel coordinates; y flips so north stays up.
    fn px(&self, p: Point2) -> (f64, f64) {
        (
            self.off_x + (p.x - self.min_x) * self.scale,
            self.off_y + (self.max_y - p.y) * self.scale,
        )
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Five-stop ramp from dark violet to yellow over t in [0, 1].
fn heat_color(t: f64) -> String {
    const STOPS: [(f64, [u8; 3]); 5] = [
        (0.00, [0x44, 0x01, 0x54]),
        (0.25, [0x3b, 0x52, 0x8b]),
        (0.50, [0x21, 0x91, 0x8c]),
        (0.75, [0x5e, 0xc9, 0x62]),
        (1.00, [0xfd, 0xe7, 0x25]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut lo = STOPS[0];
    let mut hi = STOPS[STOPS.len() - 1];
    for pair in STOPS.windows(2) {
        if t >= pair[0].0 && t <= pair[1].0 {
            lo = pair[0];
            hi = pair[1];
            break;
        }
    }
    let span = (hi.0 - lo.0).max(1e-12);
    let f = (t - lo.0) / span;
    let mix = |a: u8, b: u8| -> u8 { (f64::from(a) + f * (f64::from(b) - f64::from(a))).round() as u8 };
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.1[0], hi.1[0]),
        mix(lo.1[1], hi.1[1]),
        mix(lo.1[2], hi.1[2])
    )
}

pub struct PanelInputs<'a> {
    pub net: &'a SpatialNetwork,
    pub record: &'a IterationRecord,
    pub source: NodeId,
    pub targets: &'a [NodeId],
    pub grid: Option<&'a FieldGrid>,
    pub contours: &'a [(f64, Vec<Polyline>)],
    /// Run-wide spike-time range used for the heat ramp.
    pub time_range: (f64, f64),
    pub title: String,
}

/// Render one iteration panel.
pub fn render_panel(inputs: &PanelInputs<'_>) -> String {
    let env = inputs.net.environment();
    let frame = Frame::new(env);
    let mut svg = String::new();
    let height = PANEL + TITLE_H;
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL}\" height=\"{height}\" viewBox=\"0 0 {PANEL} {height}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");

    // Heat cells for unmasked grid values.
    if let Some(grid) = inputs.grid {
        let (lo, hi) = inputs.time_range;
        let span = (hi - lo).max(1e-12);
        let step_x = env.bbox.width() / grid.resolution as f64;
        let step_y = env.bbox.height() / grid.resolution as f64;
        let (w_px, h_px) = (step_x * frame.scale, step_y * frame.scale);
        svg.push_str("<g opacity=\"0.55\">\n");
        for row in 0..grid.resolution {
            for col in 0..grid.resolution {
                let Some(v) = grid.value(col, row) else {
                    continue;
                };
                let center = grid.cell_center(col, row);
                let (cx, cy) = frame.px(center);
                let _ = writeln!(
                    svg,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                    fmt(cx - w_px / 2.0),
                    fmt(cy - h_px / 2.0),
                    fmt(w_px),
                    fmt(h_px),
                    heat_color((v - lo) / span)
                );
            }
        }
        svg.push_str("</g>\n");
    }

    // Isochrone contours.
    svg.push_str("<g fill=\"none\" stroke=\"#333333\" stroke-width=\"1\">\n");
    for (_, polylines) in inputs.contours {
        for line in polylines {
            if line.len() < 2 {
                continue;
            }
            let points: Vec<String> = line
                .iter()
                .map(|&p| {
                    let (x, y) = frame.px(p);
                    format!("{},{}", fmt(x), fmt(y))
                })
                .collect();
            let _ = writeln!(svg, "<polyline points=\"{}\"/>", points.join(" "));
        }
    }
    svg.push_str("</g>\n");

    // Environment outline.
    svg.push_str("<g fill=\"none\" stroke=\"#aaaaaa\" stroke-width=\"1\">\n");
    for poly in &env.polygons {
        let points: Vec<String> = poly
            .iter()
            .map(|&p| {
                let (x, y) = frame.px(p);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect();
        let _ = writeln!(svg, "<polygon points=\"{}\"/>", points.join(" "));
    }
    svg.push_str("</g>\n");

    // Source/target boxes under the neuron discs.
    let box_half = 7.0;
    for &t in inputs.targets {
        let (x, y) = frame.px(inputs.net.position(t));
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" stroke=\"#333333\" stroke-width=\"1\"/>",
            fmt(x - box_half),
            fmt(y - box_half),
            fmt(2.0 * box_half),
            fmt(2.0 * box_half)
        );
    }
    {
        let (x, y) = frame.px(inputs.net.position(inputs.source));
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2.5\"/>",
            fmt(x - box_half),
            fmt(y - box_half),
            fmt(2.0 * box_half),
            fmt(2.0 * box_half)
        );
    }

    // Neuron discs: silent gray, spiked orange, tagged red.
    let tagged: std::collections::BTreeSet<NodeId> =
        inputs.record.tagged_after.iter().copied().collect();
    svg.push_str("<g stroke=\"none\">\n");
    for v in inputs.net.node_ids() {
        let spiked = inputs.record.spike_time[v.index()].is_some();
        let (fill, opacity) = match (tagged.contains(&v), spiked) {
            (true, true) => ("#d62728", "1.0"),
            (true, false) => ("#d62728", "0.35"),
            (false, true) => ("#ff8c00", "0.9"),
            (false, false) => ("#c8c8c8", "0.5"),
        };
        let (x, y) = frame.px(inputs.net.position(v));
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{fill}\" fill-opacity=\"{opacity}\"/>",
            fmt(x),
            fmt(y)
        );
    }
    svg.push_str("</g>\n");

    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"26\" font-family=\"sans-serif\" font-size=\"18\" fill=\"#222222\">{}</text>",
        fmt(MARGIN),
        inputs.title
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_ramp_ends() {
        assert_eq!(heat_color(0.0), "#440154");
        assert_eq!(heat_color(1.0), "#fde725");
        assert_eq!(heat_color(-3.0), "#440154");
    }

    #[test]
    fn panel_is_deterministic() {
        let net = spikepath::network::path_graph(4);
        let record = IterationRecord {
            index: 1,
            ttt: Some(21.2),
            spike_time: vec![Some(10.1), None, None, Some(21.2)],
            tagged_after: vec![NodeId(3)],
            newly_tagged: vec![],
            quiesced_at: 30.0,
            emissions: 2,
        };
        let inputs = PanelInputs {
            net: &net,
            record: &record,
            source: NodeId(0),
            targets: &[NodeId(3)],
            grid: None,
            contours: &[],
            time_range: (10.1, 21.2),
            title: "iteration 1   TTT 21.2 ms".into(),
        };
        let a = render_panel(&inputs);
        let b = render_panel(&inputs);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("#d62728"));
        assert!(a.trim_end().ends_with("</svg>"));
    }
}
