//! Static SVG charts.

use std::path::Path;

use plotters::prelude::*;

use crate::error::CliError;

const MAX_MARKERS: usize = 200;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    /// Markers only, no connecting lines.
    pub scatter: bool,
}

fn bounds(series: &[Series], log_x: bool, log_y: bool) -> Option<(f64, f64, f64, f64)> {
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_x || *x > 0.0) && (!log_y || *y > 0.0));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    let pad = |lo: f64, hi: f64, log: bool| {
        if log {
            (lo / 1.3, hi * 1.3)
        } else if hi > lo {
            let d = (hi - lo) * 0.05;
            (lo - d, hi + d)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = pad(x0, x1, log_x);
    let (y0, y1) = pad(y0, y1, log_y);
    Some((x0, x1, y0, y1))
}

pub fn draw(path: &Path, chart: &Chart, series: &[Series]) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("plot {}: {e}", path.display()));
    let Some((x0, x1, y0, y1)) = bounds(series, chart.log_x, chart.log_y) else {
        return Err(CliError::Runtime(format!("plot {}: no finite points", path.display())));
    };
    let root = SVGBackend::new(path, (820, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;

    macro_rules! render {
        ($xr:expr, $yr:expr) => {{
            let mut c = ChartBuilder::on(&root)
                .caption(chart.title, ("sans-serif", 22))
                .margin(16)
                .x_label_area_size(44)
                .y_label_area_size(72)
                .build_cartesian_2d($xr, $yr)
                .map_err(|e| err(&e))?;
            c.configure_mesh().x_desc(chart.x_label).y_desc(chart.y_label).draw().map_err(|e| err(&e))?;
            for (i, s) in series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                let pts: Vec<(f64, f64)> = s
                    .points
                    .iter()
                    .copied()
                    .filter(|(x, y)| x.is_finite() && y.is_finite() && (!chart.log_x || *x > 0.0) && (!chart.log_y || *y > 0.0))
                    .collect();
                if chart.scatter {
                    c.draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                        .map_err(|e| err(&e))?
                        .label(s.name.as_str())
                        .legend(move |(x, y)| Circle::new((x + 8, y), 4, color.filled()));
                } else {
                    c.draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                        .map_err(|e| err(&e))?
                        .label(s.name.as_str())
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
                    // markers only where they stay readable
                    if pts.len() <= MAX_MARKERS {
                        c.draw_series(pts.iter().map(|&p| Circle::new(p, 2, color.filled()))).map_err(|e| err(&e))?;
                    }
                }
            }
            if series.len() > 1 || series.first().is_some_and(|s| !s.name.is_empty()) {
                c.configure_series_labels().background_style(WHITE.mix(0.85)).border_style(BLACK).draw().map_err(|e| err(&e))?;
            }
        }};
    }

    match (chart.log_x, chart.log_y) {
        (false, false) => render!(x0..x1, y0..y1),
        (true, false) => render!((x0..x1).log_scale(), y0..y1),
        (false, true) => render!(x0..x1, (y0..y1).log_scale()),
        (true, true) => render!((x0..x1).log_scale(), (y0..y1).log_scale()),
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}
