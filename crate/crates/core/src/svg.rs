//! Self-contained SVG rendering of the four figure kinds the pipeline
//! emits: probability heatmaps over the control plane and population
//! scatters with the fold curve and switching-line overlays.
//!
//! Rendering is a pure function of the data, so emitted files are
//! byte-identical across runs. Coordinates are written with two decimals;
//! overlay elements carry their data coordinates in `data-*` attributes.

use crate::cusp::fold_boundary_b;
use crate::model::ProbabilityGrid;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

/// Color of the negative vote / probability 0 end.
const COLOR_LOW: (u8, u8, u8) = (38, 84, 160);
/// Color of the positive vote / probability 1 end.
const COLOR_HIGH: (u8, u8, u8) = (197, 62, 46);

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RenderError {
    #[error("cannot render figure '{0}': empty data")]
    EmptyData(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// One population point in control-parameter coordinates, colored by vote.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterPoint {
    pub a: f64,
    pub b: f64,
    pub vote: u8,
}

/// Figure data accepted by [`render_svg`]. Axes are always behavior index
/// `b` horizontal and demographic index `a` vertical.
#[derive(Clone, Debug)]
pub enum Figure<'a> {
    /// Colored-cell rendering of a probability grid.
    Heatmap {
        title: &'a str,
        grid: &'a ProbabilityGrid,
    },
    /// Vote scatter with optional fold-curve polyline and dashed
    /// switching lines at `a = ±level`.
    Scatter {
        title: &'a str,
        points: &'a [ScatterPoint],
        a_range: (f64, f64),
        b_range: (f64, f64),
        cusp_curve: Option<&'a [(f64, f64)]>,
        switch_level: Option<f64>,
    },
}

impl Figure<'_> {
    fn title(&self) -> &str {
        match self {
            Figure::Heatmap { title, .. } | Figure::Scatter { title, .. } => title,
        }
    }
}

/// Map from data coordinates to pixel coordinates.
struct Frame {
    a_range: (f64, f64),
    b_range: (f64, f64),
}

impl Frame {
    fn x(&self, b: f64) -> f64 {
        let span = self.b_range.1 - self.b_range.0;
        MARGIN_LEFT + (b - self.b_range.0) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, a: f64) -> f64 {
        let span = self.a_range.1 - self.a_range.0;
        // SVG y grows downward; a grows upward.
        HEIGHT - MARGIN_BOTTOM - (a - self.a_range.0) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn ramp(p: f64) -> String {
    let lerp =
        |lo: u8, hi: u8| (lo as f64 + p.clamp(0.0, 1.0) * (hi as f64 - lo as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(COLOR_LOW.0, COLOR_HIGH.0),
        lerp(COLOR_LOW.1, COLOR_HIGH.1),
        lerp(COLOR_LOW.2, COLOR_HIGH.2)
    )
}

fn class_color(vote: u8) -> &'static str {
    if vote == 1 {
        "#c53e2e"
    } else {
        "#2654a0"
    }
}

/// Render a figure to SVG text.
pub fn figure_svg(figure: &Figure) -> Result<String, RenderError> {
    let (a_range, b_range) = match figure {
        Figure::Heatmap { grid, title } => {
            if grid.probabilities.is_empty() || grid.a_values.is_empty() || grid.b_values.is_empty()
            {
                return Err(RenderError::EmptyData(title.to_string()));
            }
            (
                (grid.a_values[0], *grid.a_values.last().unwrap()),
                (grid.b_values[0], *grid.b_values.last().unwrap()),
            )
        }
        Figure::Scatter {
            points,
            a_range,
            b_range,
            title,
            ..
        } => {
            if points.is_empty() {
                return Err(RenderError::EmptyData(title.to_string()));
            }
            (*a_range, *b_range)
        }
    };
    let frame = Frame { a_range, b_range };
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push('\n');
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        figure.title()
    );

    match figure {
        Figure::Heatmap { grid, .. } => heatmap_body(&mut svg, grid, &frame),
        Figure::Scatter {
            points,
            cusp_curve,
            switch_level,
            ..
        } => scatter_body(&mut svg, points, *cusp_curve, *switch_level, &frame),
    }

    axes(&mut svg, &frame);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Render a figure and write it to disk.
pub fn render_svg(figure: &Figure, path: &Path) -> Result<(), RenderError> {
    let text = figure_svg(figure)?;
    std::fs::write(path, text).map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn heatmap_body(svg: &mut String, grid: &ProbabilityGrid, frame: &Frame) {
    // Cell edges sit halfway between neighbouring grid points.
    let edges = |values: &[f64]| -> Vec<f64> {
        let mut edges = Vec::with_capacity(values.len() + 1);
        edges.push(values[0]);
        for pair in values.windows(2) {
            edges.push((pair[0] + pair[1]) / 2.0);
        }
        edges.push(*values.last().unwrap());
        edges
    };
    let a_edges = edges(&grid.a_values);
    let b_edges = edges(&grid.b_values);
    for (i, _) in grid.a_values.iter().enumerate() {
        for (j, _) in grid.b_values.iter().enumerate() {
            let p = grid.probability_at(i, j);
            let x0 = frame.x(b_edges[j]);
            let x1 = frame.x(b_edges[j + 1]);
            let y0 = frame.y(a_edges[i + 1]);
            let y1 = frame.y(a_edges[i]);
            let _ = writeln!(
                svg,
                r#"<rect class="cell" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                ramp(p)
            );
        }
    }
}

fn scatter_body(
    svg: &mut String,
    points: &[ScatterPoint],
    cusp_curve: Option<&[(f64, f64)]>,
    switch_level: Option<f64>,
    frame: &Frame,
) {
    for point in points {
        let _ = writeln!(
            svg,
            r#"<circle class="point point-{}" cx="{:.2}" cy="{:.2}" r="2.2" fill="{}" fill-opacity="0.75"/>"#,
            point.vote,
            frame.x(point.b),
            frame.y(point.a),
            class_color(point.vote)
        );
    }
    if let Some(curve) = cusp_curve {
        let mut coords = String::new();
        for (a, b) in curve {
            let _ = write!(coords, "{:.2},{:.2} ", frame.x(*b), frame.y(*a));
        }
        let _ = writeln!(
            svg,
            r##"<polyline class="cusp-curve" fill="none" stroke="#1a1a1a" stroke-width="1.8" points="{}"/>"##,
            coords.trim_end()
        );
    }
    if let Some(level) = switch_level {
        let fold_b = fold_boundary_b(level);
        let x = frame.x(fold_b);
        let _ = writeln!(
            svg,
            r##"<line class="switch-line" data-b="{fold_b}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1a1a1a" stroke-width="1.2" stroke-dasharray="6 4"/>"##,
            frame.y(frame.a_range.1),
            frame.y(frame.a_range.0)
        );
        for a in [level, -level] {
            let y = frame.y(a);
            let _ = writeln!(
                svg,
                r##"<line class="level-line" data-a="{a}" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#1a1a1a" stroke-width="1.2" stroke-dasharray="6 4"/>"##,
                frame.x(frame.b_range.0),
                frame.x(frame.b_range.1)
            );
        }
    }
}

fn axes(svg: &mut String, frame: &Frame) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        svg,
        r#"<path d="M {x0:.2} {y1:.2} L {x0:.2} {y0:.2} L {x1:.2} {y0:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let b = frame.b_range.0 + t * (frame.b_range.1 - frame.b_range.0);
        let x = frame.x(b);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{b:.2}</text>"#,
            y0 + 18.0
        );
        let a = frame.a_range.0 + t * (frame.a_range.1 - frame.a_range.0);
        let y = frame.y(a);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{a:.2}</text>"#,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">b</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">a</text>"#,
        (y0 + y1) / 2.0
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProbabilityGrid;

    #[test]
    fn empty_data_is_rejected() {
        let grid = ProbabilityGrid {
            a_values: vec![],
            b_values: vec![],
            probabilities: vec![],
        };
        assert!(matches!(
            figure_svg(&Figure::Heatmap {
                title: "empty",
                grid: &grid
            }),
            Err(RenderError::EmptyData(_))
        ));
        assert!(matches!(
            figure_svg(&Figure::Scatter {
                title: "empty",
                points: &[],
                a_range: (-1.0, 1.0),
                b_range: (-2.0, 4.0),
                cusp_curve: None,
                switch_level: None,
            }),
            Err(RenderError::EmptyData(_))
        ));
    }

    #[test]
    fn two_by_two_grid_has_four_cells_and_axes() {
        let grid = ProbabilityGrid {
            a_values: vec![0.0, 1.0],
            b_values: vec![0.0, 1.0],
            probabilities: vec![0.0, 0.25, 0.75, 1.0],
        };
        let svg = figure_svg(&Figure::Heatmap {
            title: "grid",
            grid: &grid,
        })
        .unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 4);
        assert!(svg.matches(r#"class="tick""#).count() >= 8);
        // Extremes of the ramp are the pure endpoint colors.
        assert!(svg.contains("#2654a0"));
        assert!(svg.contains("#c53e2e"));
    }

    #[test]
    fn scatter_point_count_and_switch_lines() {
        let points: Vec<ScatterPoint> = (0..25)
            .map(|i| ScatterPoint {
                a: -1.0 + i as f64 * 0.08,
                b: -2.0 + i as f64 * 0.24,
                vote: (i % 2) as u8,
            })
            .collect();
        let curve: Vec<(f64, f64)> = (0..11)
            .map(|i| {
                let a = -1.0 + i as f64 * 0.2;
                (a, fold_boundary_b(a))
            })
            .collect();
        let figure = Figure::Scatter {
            title: "votes",
            points: &points,
            a_range: (-1.0, 1.0),
            b_range: (-2.0, 4.0),
            cusp_curve: Some(&curve),
            switch_level: Some(0.5),
        };
        let svg = figure_svg(&figure).unwrap();
        assert_eq!(svg.matches(r#"class="point point-"#).count(), 25);
        assert!(svg.contains(r#"class="cusp-curve""#));
        assert!(svg.contains(r#"class="switch-line" data-b="1.19055"#));
        assert_eq!(svg.matches(r#"class="level-line""#).count(), 2);
        // Deterministic output.
        assert_eq!(svg, figure_svg(&figure).unwrap());
    }
}
