//! Static SVG rendering of report plots. Output depends only on the plot
//! data, so equal reports give equal files.

use std::fs;
use std::path::Path;

use plotters::prelude::*;

use crate::report::{ExperimentReport, Plot};
use crate::CliError;

const SIZE: (u32, u32) = (720, 480);

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    let pad = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn render_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("plot rendering: {e}"))
}

/// Renders one plot. With `log_x` the abscissa is `log10 x`.
pub fn render_svg(plot: &Plot) -> Result<String, CliError> {
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    type Drawn = (String, bool, Vec<(f64, f64)>);
    let series: Vec<Drawn> = plot
        .series
        .iter()
        .map(|s| {
            let pts = s.points.iter().map(|&(x, y)| (tx(x), y)).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
            (s.label.clone(), s.reference, pts)
        })
        .collect();
    let all = series.iter().flat_map(|s| s.2.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let x_desc = if plot.log_x { format!("log10 {}", plot.x_label) } else { plot.x_label.clone() };

    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(render_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(&plot.title, ("sans-serif", 18))
            .margin(16)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(render_err)?;
        chart
            .configure_mesh()
            .x_desc(x_desc)
            .y_desc(plot.y_label.as_str())
            .draw()
            .map_err(render_err)?;
        for (i, (label, reference, pts)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if *reference {
                chart
                    .draw_series(DashedLineSeries::new(pts.iter().copied(), 6, 4, color.stroke_width(1)))
                    .map_err(render_err)?
                    .label(label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            } else {
                chart
                    .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                    .map_err(render_err)?
                    .label(label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
                chart
                    .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                    .map_err(render_err)?;
            }
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(render_err)?;
        root.present().map_err(render_err)?;
    }
    Ok(out)
}

/// Writes `plots/<name>.svg` for every plot of `report`. A report without
/// plots writes nothing.
pub fn emit_plots(report: &ExperimentReport, dir: &Path) -> Result<(), CliError> {
    if report.plots.is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for plot in &report.plots {
        let path = dir.join(format!("{}.svg", plot.name));
        fs::write(&path, render_svg(plot)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
