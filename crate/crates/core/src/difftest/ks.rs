//! Two-sample Kolmogorov–Smirnov comparison of measurement histograms.

use serde::Serialize;

use crate::simulator::{fidelity, sample, Statevector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KsError {
    #[error("sample has no shots")]
    EmptySample,
    #[error("samples cover different outcome spaces ({0} vs {1} qubits)")]
    OutcomeSpaceMismatch(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    #[serde(rename = "K")]
    pub k: f64,
    pub p: f64,
    pub shots: (u64, u64),
}

/// Kolmogorov survival function `2·Σ_{j≥1} (−1)^{j−1}·e^{−2j²λ²}`, summed
/// until a term drops below 1e-12. Returns 1 when the series has not
/// settled within 100 terms (λ near 0).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    let mut sum = 0.0;
    for j in 1..=100u32 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u32 % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            return (2.0 * sum).clamp(0.0, 1.0);
        }
    }
    1.0
}

/// K is the largest gap between the two empirical CDFs over basis states in
/// index order; p uses the asymptotic Kolmogorov distribution with the usual
/// small-sample correction.
pub fn ks_two_sample(a: &crate::simulator::MeasurementSample, b: &crate::simulator::MeasurementSample) -> Result<KsResult, KsError> {
    if a.shots == 0 || b.shots == 0 {
        return Err(KsError::EmptySample);
    }
    if a.qubit_count != b.qubit_count {
        return Err(KsError::OutcomeSpaceMismatch(a.qubit_count, b.qubit_count));
    }
    let (ca, cb) = (a.dense_counts(), b.dense_counts());
    let (ma, mb) = (a.shots as f64, b.shots as f64);
    let (mut fa, mut fb, mut k) = (0u64, 0u64, 0.0f64);
    for (x, y) in ca.iter().zip(&cb) {
        fa += x;
        fb += y;
        k = k.max((fa as f64 / ma - fb as f64 / mb).abs());
    }
    let ne = ma * mb / (ma + mb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * k;
    Ok(KsResult { k, p: kolmogorov_q(lambda), shots: (a.shots, b.shots) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsRow {
    pub shots: u64,
    pub trials: usize,
    #[serde(rename = "frac_K_gt_t")]
    pub frac_k_gt_t: f64,
    #[serde(rename = "median_K")]
    pub median_k: f64,
    /// Trials whose K exceeded the threshold although the statevectors agree.
    pub false_positives: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

/// Summarise K values for one shots setting. `sv_pass` gives, per trial,
/// whether the statevector oracle judged the pair equivalent.
pub fn ks_row(shots: u64, ks: &[f64], sv_pass: &[bool], threshold: f64) -> KsRow {
    let above = ks.iter().filter(|&&k| k > threshold).count();
    let false_positives = ks.iter().zip(sv_pass).filter(|(&k, &ok)| k > threshold && ok).count();
    let mut sorted = ks.to_vec();
    KsRow {
        shots,
        trials: ks.len(),
        frac_k_gt_t: if ks.is_empty() { 0.0 } else { above as f64 / ks.len() as f64 },
        median_k: median(&mut sorted),
        false_positives,
    }
}

/// Sample the pair `(lhs, rhs)` with independent seeded streams `trials`
/// times per shots setting and tabulate K against the threshold.
pub fn ks_experiment(lhs: &Statevector, rhs: &Statevector, shots: &[u64], trials: usize, threshold: f64, rng_seed: u64) -> Vec<KsRow> {
    let same = fidelity(lhs, rhs).map(|f| f >= 1.0 - 1e-9).unwrap_or(false);
    shots
        .iter()
        .map(|&s| {
            let ks: Vec<f64> = (0..trials)
                .map(|t| {
                    let a = sample(lhs, s, crate::rng::derive_seed(rng_seed, &[s, t as u64, 0]));
                    let b = sample(rhs, s, crate::rng::derive_seed(rng_seed, &[s, t as u64, 1]));
                    ks_two_sample(&a, &b).expect("non-empty samples").k
                })
                .collect();
            ks_row(s, &ks, &vec![same; trials], threshold)
        })
        .collect()
}
