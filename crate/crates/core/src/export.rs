//! CSV tables. Every table starts with a header row; floats use the
//! shortest round-trip representation.

use std::io::{self, Write};

use crate::dressed::{DressedComponents, NadsQuantities};
use crate::dynamics::{PopulationSeries, StateVector};
use crate::measurement::{DwellHistogram, EnsembleStats};

pub const TRAJECTORY_COLUMNS: &[&str] = &["t", "re_cg", "im_cg", "re_ce", "im_ce"];

pub const POPULATION_COLUMNS: &[&str] = &[
    "t",
    "p_g",
    "p_e",
    "p_G_real",
    "p_G_virtual",
    "p_E_real",
    "p_E_virtual",
    "intensity",
    "integrated_intensity",
];

pub const QUANTITY_COLUMNS: &[&str] = &[
    "t",
    "delta",
    "re_delta_na",
    "im_delta_na",
    "re_rabi_na",
    "im_rabi_na",
    "re_lambda1",
    "im_lambda1",
    "re_lambda2",
    "im_lambda2",
    "re_omega_G",
    "im_omega_G",
    "re_omega_E",
    "im_omega_E",
    "re_cos_half",
    "im_cos_half",
    "re_sin_half",
    "im_sin_half",
];

pub const COMPONENT_COLUMNS: &[&str] = &[
    "t",
    "re_G_real",
    "im_G_real",
    "re_G_virtual",
    "im_G_virtual",
    "re_E_real",
    "im_E_real",
    "re_E_virtual",
    "im_E_virtual",
];

pub const ENSEMBLE_COLUMNS: &[&str] =
    &["trajectory", "terminal_bare", "pointer", "loops", "photons_absorbed", "photons_emitted", "collapsed_at"];

pub const HISTOGRAM_COLUMNS: &[&str] = &["bin_start", "bin_end", "ground", "excited"];

fn header<W: Write>(w: &mut W, cols: &[&str]) -> io::Result<()> {
    writeln!(w, "{}", cols.join(","))
}

fn row<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    writeln!(w, "{}", cells.join(","))
}

pub fn write_trajectory<W: Write>(w: &mut W, trajectory: &[StateVector]) -> io::Result<()> {
    header(w, TRAJECTORY_COLUMNS)?;
    for s in trajectory {
        row(w, &[s.t, s.c_g.re, s.c_g.im, s.c_e.re, s.c_e.im])?;
    }
    Ok(())
}

pub fn write_populations<W: Write>(w: &mut W, series: &PopulationSeries) -> io::Result<()> {
    header(w, POPULATION_COLUMNS)?;
    for i in 0..series.len() {
        row(
            w,
            &[
                series.times[i],
                series.p_bare_g[i],
                series.p_bare_e[i],
                series.p_g_real[i],
                series.p_g_virtual[i],
                series.p_e_real[i],
                series.p_e_virtual[i],
                series.intensity[i],
                series.integrated_intensity[i],
            ],
        )?;
    }
    Ok(())
}

pub fn write_quantities<W: Write>(w: &mut W, quantities: &[NadsQuantities]) -> io::Result<()> {
    header(w, QUANTITY_COLUMNS)?;
    for q in quantities {
        row(
            w,
            &[
                q.t,
                q.delta,
                q.delta_na.re,
                q.delta_na.im,
                q.rabi_na.re,
                q.rabi_na.im,
                q.lambda1.re,
                q.lambda1.im,
                q.lambda2.re,
                q.lambda2.im,
                q.omega_ground.re,
                q.omega_ground.im,
                q.omega_excited.re,
                q.omega_excited.im,
                q.cos_half.re,
                q.cos_half.im,
                q.sin_half.re,
                q.sin_half.im,
            ],
        )?;
    }
    Ok(())
}

pub fn write_components<W: Write>(w: &mut W, components: &[DressedComponents]) -> io::Result<()> {
    header(w, COMPONENT_COLUMNS)?;
    for c in components {
        let g = c.ground_vector();
        let e = c.excited_vector();
        row(w, &[c.t, g[0].re, g[0].im, g[1].re, g[1].im, e[1].re, e[1].im, e[0].re, e[0].im])?;
    }
    Ok(())
}

pub fn write_ensemble<W: Write>(w: &mut W, stats: &EnsembleStats) -> io::Result<()> {
    header(w, ENSEMBLE_COLUMNS)?;
    for (i, o) in stats.outcomes.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{:?}",
            o.terminal_bare, o.pointer, o.loops, o.photons_absorbed, o.photons_emitted, o.collapsed_at
        )?;
    }
    Ok(())
}

pub fn write_histogram<W: Write>(w: &mut W, hist: &DwellHistogram) -> io::Result<()> {
    header(w, HISTOGRAM_COLUMNS)?;
    for i in 0..hist.ground.len() {
        writeln!(w, "{:?},{:?},{},{}", hist.edges[i], hist.edges[i + 1], hist.ground[i], hist.excited[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn trajectory_table() {
        let traj = [StateVector { t: 0.5, c_g: C64::new(1.0, -0.25), c_e: C64::new(0.0, 2.0) }];
        let mut out = Vec::new();
        write_trajectory(&mut out, &traj).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,re_cg,im_cg,re_ce,im_ce\n0.5,1.0,-0.25,0.0,2.0\n");
    }

    #[test]
    fn empty_tables_keep_header() {
        let mut out = Vec::new();
        write_populations(&mut out, &PopulationSeries::default()).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "t,p_g,p_e,p_G_real,p_G_virtual,p_E_real,p_E_virtual,intensity,integrated_intensity\n"
        );
    }
}
