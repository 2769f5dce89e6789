//! Fiber link budget: from intrinsic QBER to maximum secure distance.

use crate::channel::{NoiseModel, RngStream};
use crate::error::{Error, Result};
use crate::mdi::{qber_exact, qber_protected_exact};

/// Resolution of the distance search, km.
pub const DISTANCE_RESOLUTION_KM: f64 = 0.01;
/// Upper end of the distance search bracket, km.
pub const MAX_SEARCH_KM: f64 = 1000.0;
/// Minimum Monte Carlo sample count for [`intrinsic_error`].
pub const MIN_INTRINSIC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Fiber attenuation, dB/km.
    pub beta: f64,
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Dark-count probability per detection gate.
    pub y0: f64,
    /// QBER above which no secure key can be distilled.
    pub threshold: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            mu: 0.5,
            y0: 1e-6,
            threshold: 0.11,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("y0", self.y0),
            ("threshold", self.threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.threshold >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be below 0.5, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// `μ 10^{-β l / 10}`.
pub fn signal_prob(params: &LinkParams, l: f64) -> f64 {
    params.mu * 10f64.powf(-params.beta * l / 10.0)
}

/// `(e_int P_sig + ½ Y0) / (P_sig + Y0)`: signal errors plus random dark clicks
/// over all clicks.
pub fn total_qber(params: &LinkParams, l: f64, e_int: f64) -> f64 {
    let p_sig = signal_prob(params, l);
    (e_int * p_sig + 0.5 * params.y0) / (p_sig + params.y0)
}

/// Largest `l` in `[0, 1000]` km with `total_qber ≤ threshold`, to 0.01 km.
pub fn max_secure_distance(params: &LinkParams, e_int: f64) -> f64 {
    let ok = |l: f64| total_qber(params, l, e_int) <= params.threshold;
    if e_int >= params.threshold || !ok(0.0) {
        return 0.0;
    }
    if ok(MAX_SEARCH_KM) {
        return MAX_SEARCH_KM;
    }
    let (mut lo, mut hi) = (0.0, MAX_SEARCH_KM);
    while hi - lo > DISTANCE_RESOLUTION_KM {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Intrinsic error above which even zero length exceeds the threshold.
pub fn zero_length_error_limit(params: &LinkParams) -> f64 {
    (params.threshold * (params.mu + params.y0) - 0.5 * params.y0) / params.mu
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

/// Unprotected and protected intrinsic error from the same rotation draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicPair {
    pub unprotected: Estimate,
    pub protected: Estimate,
}

/// Mean intrinsic QBER under two-arm Gaussian drift with spread `sigma`.
pub fn intrinsic_error(sigma: f64, protected: bool, samples: usize, seed: u64) -> Result<Estimate> {
    let pair = intrinsic_error_pair(sigma, samples, seed)?;
    Ok(if protected {
        pair.protected
    } else {
        pair.unprotected
    })
}

/// Both estimates of [`intrinsic_error`]; sample `i` uses stream `(seed, i)`.
pub fn intrinsic_error_pair(sigma: f64, samples: usize, seed: u64) -> Result<IntrinsicPair> {
    if samples < MIN_INTRINSIC_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "intrinsic error needs at least {MIN_INTRINSIC_SAMPLES} samples, got {samples}"
        )));
    }
    let model = NoiseModel::TwoArmGaussian { sigma };
    model.validate()?;
    let (unprot, prot): (Vec<f64>, Vec<f64>) = (0..samples as u64)
        .map(|i| {
            let u = model.sample(&mut RngStream::new(seed, i).rng()).unitary();
            (qber_exact(&u), qber_protected_exact(&u))
        })
        .unzip();
    Ok(IntrinsicPair {
        unprotected: Estimate::from_samples(&unprot),
        protected: Estimate::from_samples(&prot),
    })
}

/// One point of the distance-versus-noise curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceCurvePoint {
    pub sigma: f64,
    pub l_max_unprotected: f64,
    pub l_max_protected: f64,
    pub intrinsic: IntrinsicPair,
}

pub fn distance_curve_point(
    params: &LinkParams,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<DistanceCurvePoint> {
    params.validate()?;
    let intrinsic = intrinsic_error_pair(sigma, samples, seed)?;
    Ok(DistanceCurvePoint {
        sigma,
        l_max_unprotected: max_secure_distance(params, intrinsic.unprotected.mean),
        l_max_protected: max_secure_distance(params, intrinsic.protected.mean),
        intrinsic,
    })
}
