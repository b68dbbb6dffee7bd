use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

const COLORS: [RGBColor; 4] = [BLUE, RED, GREEN, BLACK];

/// Line plot of one or more `(x, y)` series as an SVG file.
pub fn lines(path: &Path, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    let points = series.iter().flat_map(|(_, s)| s.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        return Ok(());
    }
    if !(y0 < y1) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let root = SVGBackend::new(path, (640, 400)).into_drawing_area();
    let err = |e: DrawingAreaErrorKind<_>| anyhow!("plot {}: {e:?}", path.display());
    root.fill(&WHITE).map_err(err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(err)?;
    chart.configure_mesh().disable_x_mesh().disable_y_mesh().draw().map_err(err)?;
    for (i, (_, s)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart.draw_series(LineSeries::new(s.iter().cloned(), &color)).map_err(err)?;
    }
    root.present().map_err(err)?;
    Ok(())
}
