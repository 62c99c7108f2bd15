//! Figure presets. Every panel is an ordinary `spectrum` or `evolve` run
//! with fixed parameters; [`Panel::invocation`] prints the equivalent command.

use std::fmt::Write as _;

use gausspt_core::analysis::{SweepAxis, SweepParam};
use gausspt_core::{
    evolve_observables_with_noise, spectrum_sweep, spectrum_table, Noise, SweepTable, SystemParams, TrajectoryGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl FigureId {
    pub fn name(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig8 => "fig8",
        }
    }
}

const EN_COLUMNS: &[&str] = &["t", "e_n", "antibunching"];
const OCCUPATION_COLUMNS: &[&str] = &["t", "n_p", "n_s"];
const EN_ONLY: &[&str] = &["t", "e_n"];

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Spectrum { s: f64, g_max: f64, points: usize },
    Series { s: f64, g: f64, r: f64, columns: &'static [&'static str] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    /// File stem, e.g. `fig3a`.
    pub name: String,
    pub kind: Kind,
}

/// Horizon and step count used when `--t-end`/`--steps` are not given:
/// several periods for `s = 1`, past the death event otherwise.
pub fn default_horizon(s: f64) -> (f64, usize) {
    if s == 1.0 {
        (20.0, 4000)
    } else {
        (10.0, 2000)
    }
}

pub fn panels(id: FigureId) -> Vec<Panel> {
    let stem = id.name();
    let named = |suffix: &str, kind: Kind| Panel { name: format!("{stem}{suffix}"), kind };
    let pair = |s: f64, r: f64, g_a: f64, g_b: f64| {
        vec![
            named("a", Kind::Series { s, g: g_a, r, columns: EN_COLUMNS }),
            named("b", Kind::Series { s, g: g_b, r, columns: EN_COLUMNS }),
            named("c", Kind::Series { s, g: g_a, r, columns: OCCUPATION_COLUMNS }),
            named("d", Kind::Series { s, g: g_b, r, columns: OCCUPATION_COLUMNS }),
        ]
    };
    match id {
        FigureId::Fig2 => vec![named("", Kind::Spectrum { s: 1.0, g_max: 1.5, points: 301 })],
        FigureId::Fig4 => vec![named("", Kind::Spectrum { s: 2.0, g_max: 3.0, points: 301 })],
        FigureId::Fig3 => pair(1.0, 1.0, 1.5, 0.7),
        FigureId::Fig5 => pair(2.0, 1.0, 2.3, 1.3),
        FigureId::Fig6 => pair(1.0, 2.0, 1.5, 0.7),
        FigureId::Fig7 => pair(2.0, 2.0, 2.3, 1.3),
        FigureId::Fig8 => vec![
            named("a", Kind::Series { s: 1.0, g: 1.5, r: 0.1, columns: EN_ONLY }),
            named("b", Kind::Series { s: 1.0, g: 0.7, r: 0.1, columns: EN_ONLY }),
            named("c", Kind::Series { s: 2.0, g: 2.3, r: 0.1, columns: EN_ONLY }),
            named("d", Kind::Series { s: 2.0, g: 1.3, r: 0.1, columns: EN_ONLY }),
        ],
    }
}

/// Result of one panel.
pub struct PanelData {
    pub table: SweepTable,
    pub diverged_at: Option<f64>,
}

impl Panel {
    pub fn grid(&self, t_end: Option<f64>, steps: Option<usize>) -> gausspt_core::Result<TrajectoryGrid> {
        let s = match self.kind {
            Kind::Spectrum { s, .. } | Kind::Series { s, .. } => s,
        };
        let (t_default, steps_default) = default_horizon(s);
        TrajectoryGrid::new(0.0, t_end.unwrap_or(t_default), steps.unwrap_or(steps_default))
    }

    pub fn compute(&self, grid: &TrajectoryGrid, noise: Noise) -> gausspt_core::Result<PanelData> {
        match self.kind {
            Kind::Spectrum { s, g_max, points } => {
                let template = SystemParams::new(1.0, s, 0.0, 0.0, 0.0)?;
                let ratios = SweepAxis::new(SweepParam::Coupling, 0.0, g_max, points)?.values();
                Ok(PanelData { table: spectrum_table(&spectrum_sweep(&template, &ratios)?), diverged_at: None })
            }
            Kind::Series { s, g, r, columns } => {
                let p = SystemParams::new(1.0, s, g, 0.0, r)?;
                let evolution = evolve_observables_with_noise(&p, grid, &noise.matrix(&p))?;
                let table = evolution.to_table().select(columns).expect("preset columns exist");
                Ok(PanelData { table, diverged_at: evolution.diverged_at.map(|k| grid.time(k)) })
            }
        }
    }

    /// The plain command that writes the same numbers (before column selection).
    pub fn invocation(&self, grid: &TrajectoryGrid, noise: Noise) -> String {
        let mut cmd = match self.kind {
            Kind::Spectrum { s, g_max, points } => {
                format!("gausspt spectrum --kappa 1 --s {s} --g-min 0 --g-max {g_max} --g-points {points}")
            }
            Kind::Series { s, g, r, .. } => format!(
                "gausspt evolve --kappa 1 --s {s} --coupling {g} --nth 0 --r {r} --t-end {} --steps {}",
                grid.t_end(),
                grid.n_steps()
            ),
        };
        if matches!(self.kind, Kind::Series { .. }) && noise == Noise::Off {
            cmd.push_str(" --noiseless");
        }
        cmd
    }
}

/// Standalone gnuplot script plotting every other column of `data_file`
/// against its first column.
pub fn gnuplot_script(data_file: &str, header: &[String]) -> String {
    let png = data_file.rsplit_once('.').map_or(data_file, |(stem, _)| stem);
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key autotitle columnhead");
    let _ = writeln!(out, "set xlabel '{}'", header.first().map_or("x", String::as_str));
    let _ = writeln!(out, "set terminal pngcairo size 900,560");
    let _ = writeln!(out, "set output '{png}.png'");
    let curves: Vec<String> = (2..=header.len())
        .map(|col| {
            let source = if col == 2 { format!("'{data_file}'") } else { "''".to_string() };
            format!("{source} using 1:{col} with lines")
        })
        .collect();
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    out
}
