use super::metrics::to_db;
use super::precoding::{interference_power, mrt_precoder};
use super::runner::{run_sweep, ExperimentSpec, MetricRecord, Outcome};
use crate::error::{invalid, Result};
use crate::estimators::ls_estimate;
use crate::linalg::{complex_normal_mat, dot_t, CMat, CVec};
use crate::training::{make_orthogonal_pilots, tdd_uplink_measure, PilotSet};

const DEFAULT_DOWNLINK_NOISE_VAR: f64 = 1.0;
const DEFAULT_TRAINING_NOISE_STD: f64 = 0.1;

fn rows(m: &CMat) -> Vec<CVec> {
    (0..m.nrows()).map(|i| m.row(i).transpose()).collect()
}

/// Downlink SINR at UE 0 of cell 0 for MRT on pilot-reuse LS estimates (`contaminated_mrt`)
/// and on the true channels (`perfect_csi_mrt`), as a function of the array size.
///
/// Every cell serves `K` UEs with the same τ = K orthogonal pilots; all links are i.i.d.
/// Rayleigh and every UE gets unit downlink power.
pub fn sinr_vs_antennas(spec: &ExperimentSpec, methods: &[String], threads: usize) -> Result<Vec<MetricRecord>> {
    let cells = spec.geometry.cells;
    let ues = spec.geometry.ues_per_cell;
    let dl_noise = spec.params.downlink_noise_var.unwrap_or(DEFAULT_DOWNLINK_NOISE_VAR);
    if !(dl_noise >= 0.0) {
        return Err(invalid("downlink_noise_var must be nonnegative"));
    }
    run_sweep(spec, threads, |point| {
        let m = point.m;
        let sigma = point.noise_std.unwrap_or(DEFAULT_TRAINING_NOISE_STD);
        let pilots = make_orthogonal_pilots(ues, ues)?;
        let reuse: Vec<PilotSet> = vec![pilots.clone(); cells];
        let methods = methods.to_vec();
        Ok(move |rng: &mut crate::rng::SimRng| -> Result<Vec<Outcome>> {
            // links[l][j]: K×M block from BS l to the UEs of cell j
            let links: Vec<Vec<CMat>> = (0..cells)
                .map(|_| (0..cells).map(|_| complex_normal_mat(rng, ues, m, 1.0)).collect())
                .collect();
            let mut contaminated = Vec::with_capacity(cells);
            for block in &links {
                let batch = tdd_uplink_measure(&reuse, block, sigma, rng)?;
                let est = ls_estimate(&batch, &pilots)?;
                contaminated.push(rows(est.estimate.as_matrix().expect("matrix estimate")));
            }
            let tagged: Vec<CVec> = links.iter().map(|b| b[0].row(0).transpose()).collect();
            let powers = vec![1.0; ues];
            let mut out = Vec::new();
            for method in &methods {
                let csi: Vec<Vec<CVec>> = match method.as_str() {
                    "contaminated_mrt" => contaminated.clone(),
                    "perfect_csi_mrt" => (0..cells).map(|l| rows(&links[l][l])).collect(),
                    other => return Err(invalid(format!("unsupported method {other}"))),
                };
                let mut signal = 0.0;
                let mut interference = 0.0;
                for (l, per_cell) in csi.iter().enumerate() {
                    let w = mrt_precoder(per_cell)?;
                    if l == 0 {
                        signal = dot_t(&tagged[0], &w[0]).norm_sqr();
                        interference += interference_power(&tagged[0], &w[1..], &powers[1..]);
                    } else {
                        interference += interference_power(&tagged[l], &w, &powers);
                    }
                }
                out.push(Outcome {
                    sinr_db: Some(to_db(signal / (interference + dl_noise))),
                    interference: Some(interference),
                    ..Outcome::new(method.clone())
                });
            }
            Ok(out)
        })
    })
}
