//! Reductions of observable series and parameter-grid sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::TrajectoryGrid;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::observables::{evolve_observables_with_noise, ObservableSample};
use crate::spectrum::Noise;
use crate::table::SweepTable;

/// Default cap on the number of sweep grid points.
pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

/// Interior indices `i` with `x[i-1] < x[i] >= x[i+1]`.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1]).collect()
}

/// Interior indices `i` with `x[i-1] > x[i] <= x[i+1]`.
pub fn local_minima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] < x[i - 1] && x[i] <= x[i + 1]).collect()
}

/// First grid time after which the negativity stays exactly zero for the
/// rest of the series. `None` if the series ends entangled.
pub fn death_time(samples: &[ObservableSample]) -> Option<f64> {
    match samples.iter().rposition(|s| s.e_n > 0.0) {
        None => samples.first().map(|s| s.t),
        Some(last) => samples.get(last + 1).map(|s| s.t),
    }
}

/// Mean spacing of successive grid-local maxima of the negativity; needs at
/// least three maxima.
pub fn period_estimate(samples: &[ObservableSample]) -> Option<f64> {
    let e: Vec<f64> = samples.iter().map(|s| s.e_n).collect();
    let peaks = local_maxima(&e);
    if peaks.len() < 3 {
        return None;
    }
    let first = samples[peaks[0]].t;
    let last = samples[*peaks.last().unwrap()].t;
    Some((last - first) / (peaks.len() - 1) as f64)
}

pub fn max_en(samples: &[ObservableSample]) -> Option<f64> {
    samples.iter().map(|s| s.e_n).reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Coupling,
    Ratio,
    Squeeze,
    Thermal,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Coupling => "G",
            SweepParam::Ratio => "s",
            SweepParam::Squeeze => "r",
            SweepParam::Thermal => "n_th",
        }
    }

    fn apply(&self, p: SystemParams, value: f64) -> Result<SystemParams> {
        match self {
            SweepParam::Coupling => p.with_coupling(value),
            SweepParam::Ratio => p.with_ratio(value),
            SweepParam::Squeeze => p.with_squeeze(value),
            SweepParam::Thermal => p.with_n_th(value),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G" | "g" | "coupling" => Ok(SweepParam::Coupling),
            "s" => Ok(SweepParam::Ratio),
            "r" => Ok(SweepParam::Squeeze),
            "n_th" | "nth" => Ok(SweepParam::Thermal),
            other => Err(Error::invalid("axis", format!("unknown sweep parameter `{other}`"))),
        }
    }
}

/// One linearly spaced sweep axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn new(param: SweepParam, start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("axis", "count must be >= 1"));
        }
        if !start.is_finite() || !stop.is_finite() || start > stop {
            return Err(Error::invalid("axis", format!("need finite start <= stop, got {start}..{stop}")));
        }
        Ok(Self { param, start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| if k + 1 == self.count { self.stop } else { self.start + k as f64 * step }).collect()
    }
}

/// `G=0.8:3:12` means 12 values of `G` from 0.8 to 3 inclusive.
impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("axis", format!("expected NAME=START:STOP:COUNT, got `{s}`"));
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').map(str::trim).collect();
        let [start, stop, count] = parts[..] else { return Err(bad()) };
        SweepAxis::new(
            name.parse()?,
            start.parse().map_err(|_| bad())?,
            stop.parse().map_err(|_| bad())?,
            count.parse().map_err(|_| bad())?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    FullSeries,
    #[default]
    DeathTime,
    MaxEn,
    PeriodEstimate,
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Reduction::FullSeries => "full_series",
            Reduction::DeathTime => "death_time",
            Reduction::MaxEn => "max_en",
            Reduction::PeriodEstimate => "period_estimate",
        }
    }

    pub fn apply(&self, samples: &[ObservableSample]) -> Option<f64> {
        match self {
            Reduction::FullSeries => None,
            Reduction::DeathTime => death_time(samples),
            Reduction::MaxEn => max_en(samples),
            Reduction::PeriodEstimate => period_estimate(samples),
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full_series" => Ok(Reduction::FullSeries),
            "death_time" => Ok(Reduction::DeathTime),
            "max_en" => Ok(Reduction::MaxEn),
            "period_estimate" => Ok(Reduction::PeriodEstimate),
            other => Err(Error::invalid("reduction", format!("unknown reduction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    pub reduction: Reduction,
    pub max_points: usize,
}

impl SweepSpec {
    pub fn new(axes: Vec<SweepAxis>, reduction: Reduction) -> Result<Self> {
        let spec = Self { axes, reduction, max_points: DEFAULT_MAX_POINTS };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_max_points(mut self, max_points: usize) -> Result<Self> {
        self.max_points = max_points;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(Error::invalid("axes", format!("need 1 to 3 axes, got {}", self.axes.len())));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::invalid("axes", format!("axis `{}` given twice", a.param.name())));
            }
        }
        let total = self.axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.count));
        match total {
            Some(n) if n <= self.max_points => Ok(()),
            _ => Err(Error::invalid("axes", format!("grid exceeds the cap of {} points", self.max_points))),
        }
    }

    /// Every grid point as a parameter set, first axis varying slowest.
    pub fn points(&self, template: &SystemParams) -> Result<Vec<SystemParams>> {
        let mut points = vec![*template];
        for axis in &self.axes {
            let values = axis.values();
            points = points
                .into_iter()
                .flat_map(|p| values.iter().map(move |&v| axis.param.apply(p, v)))
                .collect::<Result<_>>()?;
        }
        Ok(points)
    }
}

const PARAM_COLUMNS: [&str; 4] = ["G", "s", "r", "n_th"];

fn param_cells(p: &SystemParams) -> [Option<f64>; 4] {
    [Some(p.coupling_g()), Some(p.s()), Some(p.squeeze_r()), Some(p.n_th())]
}

/// Evolve every grid point and reduce it. Rows come back in grid order
/// regardless of how the work was scheduled; divergence is flagged in the
/// `diverged` column and the reduction runs on the truncated series.
pub fn run_sweep(template: &SystemParams, spec: &SweepSpec, grid: &TrajectoryGrid, noise: Noise) -> Result<SweepTable> {
    spec.validate()?;
    let points = spec.points(template)?;
    let per_point: Vec<SweepTable> = points
        .par_iter()
        .map(|p| {
            let evolution = evolve_observables_with_noise(p, grid, &noise.matrix(p))?;
            let diverged = Some(if evolution.diverged_at.is_some() { 1.0 } else { 0.0 });
            let params = param_cells(p);
            let table = match spec.reduction {
                Reduction::FullSeries => {
                    let mut header = PARAM_COLUMNS.to_vec();
                    header.extend(["t", "e_n", "antibunching", "n_p", "n_s", "diverged"]);
                    let mut t = SweepTable::new(header);
                    for s in &evolution.samples {
                        let mut row = params.to_vec();
                        row.extend([Some(s.t), Some(s.e_n), s.antibunch, Some(s.n_p), Some(s.n_s), diverged]);
                        t.push(row);
                    }
                    t
                }
                reduction => {
                    let mut header = PARAM_COLUMNS.to_vec();
                    header.extend([reduction.name(), "diverged"]);
                    let mut t = SweepTable::new(header);
                    let mut row = params.to_vec();
                    row.extend([reduction.apply(&evolution.samples), diverged]);
                    t.push(row);
                    t
                }
            };
            Ok(table)
        })
        .collect::<Result<_>>()?;

    let mut iter = per_point.into_iter();
    let mut out = iter.next().expect("sweep has at least one point");
    for t in iter {
        out.extend(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params_from_ratio;

    fn series(e: &[f64]) -> Vec<ObservableSample> {
        e.iter()
            .enumerate()
            .map(|(k, &e_n)| ObservableSample { t: k as f64 * 0.5, e_n, antibunch: None, n_p: 0.0, n_s: 0.0 })
            .collect()
    }

    #[test]
    fn death_time_cases() {
        assert_eq!(death_time(&series(&[0.0, 0.0, 0.0])), Some(0.0));
        assert_eq!(death_time(&series(&[1.0, 0.5, 0.0, 0.0])), Some(1.0));
        assert_eq!(death_time(&series(&[1.0, 0.0, 0.2, 0.0])), Some(1.5));
        assert_eq!(death_time(&series(&[1.0, 0.0, 0.2])), None);
        assert_eq!(death_time(&[]), None);
    }

    #[test]
    fn period_cases() {
        let periodic: Vec<f64> = (0..200).map(|k| (k as f64 * 0.5 * 0.7).sin()).collect();
        let p = period_estimate(&series(&periodic)).unwrap();
        let expected = 2.0 * std::f64::consts::PI / 0.7;
        assert!((p - expected).abs() <= 2.0 * 0.5, "{p} vs {expected}");
        let monotone: Vec<f64> = (0..50).map(|k| k as f64).collect();
        assert_eq!(period_estimate(&series(&monotone)), None);
        assert_eq!(period_estimate(&series(&[0.0, 1.0, 0.0, 1.0, 0.0])), None);
    }

    #[test]
    fn extrema_helpers() {
        let x = [0.0, 1.0, 1.0, 0.0, -1.0, 0.0];
        assert_eq!(local_maxima(&x), vec![1]);
        assert_eq!(local_minima(&x), vec![4]);
        assert!(local_maxima(&[1.0]).is_empty());
    }

    #[test]
    fn parse_axis() {
        let a: SweepAxis = "G=0.8:3:12".parse().unwrap();
        assert_eq!(a.param, SweepParam::Coupling);
        assert_eq!(a.values().len(), 12);
        assert_eq!(a.values()[11], 3.0);
        assert!("G=3:1:4".parse::<SweepAxis>().is_err());
        assert!("x=0:1:2".parse::<SweepAxis>().is_err());
        assert!("G=0:1".parse::<SweepAxis>().is_err());
        assert!("G=0:1:0".parse::<SweepAxis>().is_err());
        assert_eq!("r=1:1:1".parse::<SweepAxis>().unwrap().values(), vec![1.0]);
    }

    #[test]
    fn spec_validation() {
        let g: SweepAxis = "G=0:1:1000".parse().unwrap();
        let r: SweepAxis = "r=0:1:1000".parse().unwrap();
        let s: SweepAxis = "s=0:1:10".parse().unwrap();
        let n: SweepAxis = "n_th=0:1:2".parse().unwrap();
        assert!(SweepSpec::new(vec![g, r], Reduction::MaxEn).is_ok());
        assert!(SweepSpec::new(vec![g, r, s], Reduction::MaxEn).is_err());
        assert!(SweepSpec::new(vec![g, g], Reduction::MaxEn).is_err());
        assert!(SweepSpec::new(vec![], Reduction::MaxEn).is_err());
        assert!(SweepSpec::new(vec![g, s, n, r], Reduction::MaxEn).is_err());
        assert!(SweepSpec::new(vec![g], Reduction::MaxEn).unwrap().with_max_points(10).is_err());
    }

    #[test]
    fn points_order() {
        let spec =
            SweepSpec::new(vec!["G=1:2:2".parse().unwrap(), "r=0:1:3".parse().unwrap()], Reduction::MaxEn).unwrap();
        let pts = spec.points(&SystemParams::balanced()).unwrap();
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p.coupling_g(), p.squeeze_r())).collect();
        assert_eq!(pairs, vec![(1.0, 0.0), (1.0, 0.5), (1.0, 1.0), (2.0, 0.0), (2.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn unbalanced_death_sweep() {
        let template = params_from_ratio(1.0, 2.0, 1.0, 0.0, 1.0).unwrap();
        let grid = TrajectoryGrid::new(0.0, 4.0, 800).unwrap();
        let spec = SweepSpec::new(vec!["G=0.8:3:5".parse().unwrap(), "r=1:2:2".parse().unwrap()], Reduction::DeathTime)
            .unwrap();
        let table = run_sweep(&template, &spec, &grid, Noise::Physical).unwrap();
        assert_eq!(table.header().join(","), "G,s,r,n_th,death_time,diverged");
        let death = table.column("death_time").unwrap();
        assert_eq!(death.len(), 10);
        for pair in death.chunks(2) {
            let (r1, r2) = (pair[0].unwrap(), pair[1].unwrap());
            assert!(r2 > r1, "{r2} <= {r1}");
        }
        // identical reruns, identical bytes
        assert_eq!(table.to_csv(), run_sweep(&template, &spec, &grid, Noise::Physical).unwrap().to_csv());
    }

    #[test]
    fn full_series_rows() {
        let grid = TrajectoryGrid::new(0.0, 0.1, 10).unwrap();
        let spec = SweepSpec::new(vec!["G=1:2:2".parse().unwrap()], Reduction::FullSeries).unwrap();
        let table = run_sweep(&SystemParams::balanced(), &spec, &grid, Noise::Physical).unwrap();
        assert_eq!(table.rows().len(), 22);
    }
}
