//! Gnuplot data and script emission. Values are scaled to unit peak here and
//! nowhere else.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use krphase::{Kind, UnitMode};

use crate::commands::{load_grid, resolve_input, CliResult};
use crate::Common;

fn axis_labels(kind: Kind, units: UnitMode) -> (String, String) {
    let (xu, pu) = match units {
        UnitMode::Millimeters => (" [mm]", " [1/mm]"),
        UnitMode::Dimensionless => ("", ""),
    };
    if kind.is_characteristic() {
        (format!("x'{pu}"), format!("p'{xu}"))
    } else {
        (format!("x{xu}"), format!("p{pu}"))
    }
}

pub fn plot(common: &Common, input: &Path) -> CliResult {
    let input = resolve_input(common, input);
    let grid = load_grid(&input)?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("grid")
        .to_string();
    fs::create_dir_all(&common.out_dir)?;
    let data_name = format!("{stem}_plot.dat");
    let script_name = format!("{stem}_plot.gp");

    let peak = grid.peak();
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let (nx, np) = grid.dim();
    let mut data = String::with_capacity(nx * np * 60);
    let _ = writeln!(data, "# {} scaled to unit peak (peak = {peak:e}); columns x p re im", grid.kind());
    for i in 0..nx {
        let x = grid.x_axis().coordinate(i);
        for j in 0..np {
            let v = grid.values()[(i, j)] * scale;
            let _ = writeln!(data, "{x:.9e} {:.9e} {:.9e} {:.9e}", grid.p_axis().coordinate(j), v.re, v.im);
        }
        data.push('\n');
    }
    fs::write(common.out_dir.join(&data_name), data)?;

    // heatmap on the left, surface on the right; complex kinds get a second row
    let rows: Vec<(&str, u32)> = if grid.kind().is_real() {
        vec![("", 3)]
    } else {
        vec![("Re ", 3), ("Im ", 4)]
    };
    let (xl, pl) = axis_labels(grid.kind(), grid.unit_mode());
    let mut gp = String::new();
    let _ = writeln!(gp, "# render with: gnuplot {script_name}");
    let _ = writeln!(gp, "set terminal pngcairo size 1400,{} enhanced", 600 * rows.len());
    let _ = writeln!(gp, "set output '{stem}.png'");
    let _ = writeln!(gp, "set multiplot layout {},2 title '{}'", rows.len(), grid.kind());
    let _ = writeln!(gp, "set xlabel '{xl}'\nset ylabel '{pl}'\nset palette rgb 33,13,10");
    for (prefix, col) in rows {
        let _ = writeln!(gp, "set title '{prefix}{}'", grid.kind());
        let _ = writeln!(gp, "set view map\nunset surface\nset pm3d at b");
        let _ = writeln!(gp, "splot '{data_name}' using 1:2:{col} with pm3d notitle");
        let _ = writeln!(gp, "set view 60,30\nset surface\nset pm3d at s");
        let _ = writeln!(gp, "splot '{data_name}' using 1:2:{col} with pm3d notitle");
    }
    let _ = writeln!(gp, "unset multiplot");
    fs::write(common.out_dir.join(&script_name), gp)?;
    println!(
        "wrote {} and {}",
        common.out_dir.join(&data_name).display(),
        common.out_dir.join(&script_name).display()
    );
    Ok(())
}
