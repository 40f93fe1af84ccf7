use super::metrics::nmse_db;
use super::runner::{run_sweep, ExperimentSpec, MetricRecord, Outcome};
use crate::channel::{covariance_from_aoa_range, synthesize_multipath_channel, AoaRange};
use crate::error::{invalid, Result};
use crate::estimators::MmseFilter;
use crate::linalg::{complex_normal_vec, CVec};

const DEFAULT_TRAINING_NOISE_STD: f64 = 0.1;

/// AoA ranges for `cells` co-pilot UEs: equal widths, centers `separation` apart and
/// symmetric about broadside. Cell 0 holds the desired UE.
pub fn co_pilot_ranges(cells: usize, width: f64, separation: f64) -> Result<Vec<AoaRange>> {
    let offset = separation * (cells as f64 - 1.0) / 2.0;
    (0..cells)
        .map(|l| AoaRange::centered(separation * l as f64 - offset, width))
        .collect()
}

/// Contaminated LS (`ls`) versus covariance-aided MMSE (`mmse`) for one desired UE whose
/// pilot is reused by one UE in every other cell. Channels are multipath with AoAs drawn
/// inside each UE's range; the filter uses the matching grid covariances.
pub fn decontamination(spec: &ExperimentSpec, methods: &[String], threads: usize) -> Result<Vec<MetricRecord>> {
    let cells = spec.geometry.cells;
    let spacing = spec.geometry.antenna_spacing;
    let p = &spec.params;
    let ranges = co_pilot_ranges(cells, p.aoa_width, p.aoa_separation)?;
    let (paths, grid) = (p.paths, p.grid_points);
    run_sweep(spec, threads, |point| {
        let m = point.m;
        let sigma = point.noise_std.unwrap_or(DEFAULT_TRAINING_NOISE_STD);
        let covs = ranges
            .iter()
            .map(|r| covariance_from_aoa_range(*r, m, spacing, grid))
            .collect::<Result<Vec<_>>>()?;
        let filter = MmseFilter::new(&covs[0], &covs[1..], sigma * sigma)?;
        let ranges = ranges.clone();
        let methods = methods.to_vec();
        Ok(move |rng: &mut crate::rng::SimRng| -> Result<Vec<Outcome>> {
            let mut channels = Vec::with_capacity(cells);
            for r in &ranges {
                channels.push(synthesize_multipath_channel(paths, *r, m, spacing, rng)?.1);
            }
            let mut ls: CVec = channels.iter().fold(CVec::zeros(m), |acc, h| acc + h);
            if sigma > 0.0 {
                ls += complex_normal_vec(rng, m, sigma * sigma);
            }
            let truth = channels[0].as_slice();
            let mut out = Vec::new();
            for method in &methods {
                let est = match method.as_str() {
                    "ls" => ls.clone(),
                    "mmse" => filter.apply(&ls)?,
                    other => return Err(invalid(format!("unsupported method {other}"))),
                };
                out.push(Outcome { nmse_db: Some(nmse_db(est.as_slice(), truth)?), ..Outcome::new(method.clone()) });
            }
            Ok(out)
        })
    })
}
