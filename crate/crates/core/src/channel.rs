//! Channel rotations and the stochastic noise regimes that produce them.
//!
//! A relative channel error is an SU(2) rotation by `angle` about a unit
//! `axis`. [`NoiseModel`] describes how a rotation is drawn for each pulse;
//! [`RngStream`] keys every draw by `(seed, stream_id)` so that pulse `i`
//! sees the same noise no matter which worker evaluates it.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{c, Mat2};

/// Tolerance on `||axis|| = 1`.
pub const AXIS_NORM_TOL: f64 = 1e-12;
/// Rotation vectors shorter than this are treated as the identity about ẑ.
pub const MIN_ROTATION_NORM: f64 = 1e-12;
/// Per-component jitter used by the bias regime unless overridden.
pub const DEFAULT_JITTER_SIGMA: f64 = 0.02;

pub const X_AXIS: [f64; 3] = [1.0, 0.0, 0.0];
pub const Y_AXIS: [f64; 3] = [0.0, 1.0, 0.0];
pub const Z_AXIS: [f64; 3] = [0.0, 0.0, 1.0];

/// Rotation by `angle` radians about the unit vector `axis`.
///
/// Angles are folded into `[0, π]` on construction; a rotation by `α > π`
/// about `n` is stored as `2π - α` about `-n`, which is the same element of
/// SO(3) and differs in SU(2) only by a global sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec {
    axis: [f64; 3],
    angle: f64,
}

impl RotationSpec {
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = norm3(&axis);
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_NORM_TOL {
            return Err(Error::NonUnitAxis { norm });
        }
        if !angle.is_finite() || angle < 0.0 {
            return Err(Error::InvalidAngle(angle));
        }
        Ok(Self::folded(axis, angle))
    }

    /// Identity rotation.
    pub fn identity() -> Self {
        Self {
            axis: Z_AXIS,
            angle: 0.0,
        }
    }

    /// Rotation whose axis is `v / ||v||` and angle `||v||`.
    pub fn from_rotation_vector(v: [f64; 3]) -> Self {
        let angle = norm3(&v);
        if angle < MIN_ROTATION_NORM {
            return Self::identity();
        }
        let axis = [v[0] / angle, v[1] / angle, v[2] / angle];
        Self::folded(axis, angle)
    }

    fn folded(axis: [f64; 3], angle: f64) -> Self {
        let a = angle.rem_euclid(TAU);
        if a > PI {
            Self {
                axis: [-axis[0], -axis[1], -axis[2]],
                angle: TAU - a,
            }
        } else {
            Self { axis, angle: a }
        }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// `sin²(α/2)`, the weight every error formula is built from.
    pub fn sin2_half(&self) -> f64 {
        let s = (self.angle / 2.0).sin();
        s * s
    }

    pub fn unitary(&self) -> Mat2 {
        su2_from_axis_angle(self)
    }
}

/// `cos(α/2) I - i sin(α/2) (n·σ)`, written as `[[a, b], [-b*, a*]]` with
/// `a = cos(α/2) - i n_z sin(α/2)` and `b = (-n_y - i n_x) sin(α/2)`.
pub fn su2_from_axis_angle(spec: &RotationSpec) -> Mat2 {
    let [nx, ny, nz] = spec.axis;
    let (s, co) = (spec.angle / 2.0).sin_cos();
    let a = c(co, -nz * s);
    let b = c(-ny * s, -nx * s);
    Mat2::from_rows([[a, b], [-b.conj(), a.conj()]])
}

/// `u_a† u_b`: the error Bob's photon carries relative to Alice's.
pub fn relative_rotation(u_a: &Mat2, u_b: &Mat2) -> Mat2 {
    u_a.dagger() * *u_b
}

/// Coordinate axis selector for the bias regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CardinalAxis {
    X,
    Y,
    Z,
}

impl CardinalAxis {
    pub fn unit(self) -> [f64; 3] {
        match self {
            CardinalAxis::X => X_AXIS,
            CardinalAxis::Y => Y_AXIS,
            CardinalAxis::Z => Z_AXIS,
        }
    }
}

impl fmt::Display for CardinalAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CardinalAxis::X => "x",
            CardinalAxis::Y => "y",
            CardinalAxis::Z => "z",
        })
    }
}

impl FromStr for CardinalAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(CardinalAxis::X),
            "y" => Ok(CardinalAxis::Y),
            "z" => Ok(CardinalAxis::Z),
            other => Err(Error::InvalidParameter(format!(
                "unknown axis {other:?}, expected x, y or z"
            ))),
        }
    }
}

/// How the relative channel rotation is drawn for each pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Bias along a coordinate axis plus isotropic Gaussian jitter on the
    /// rotation vector.
    FixedAxisBias {
        axis: CardinalAxis,
        bias: f64,
        #[serde(default = "default_jitter")]
        jitter_sigma: f64,
    },
    /// The same rotation on every pulse.
    FixedAxisSweep { axis: [f64; 3], angle: f64 },
    /// Fixed angle about a uniformly random axis.
    HaarAxis { angle: f64 },
    /// Each arm drifts about ŷ with standard deviation `sigma`; the relative
    /// angle is the difference of the two draws.
    TwoArmGaussian { sigma: f64 },
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER_SIGMA
}

impl NoiseModel {
    /// A model with no channel error at all.
    pub fn noiseless() -> Self {
        NoiseModel::FixedAxisSweep {
            axis: Z_AXIS,
            angle: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_scale = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            }
        };
        match *self {
            NoiseModel::FixedAxisBias {
                bias, jitter_sigma, ..
            } => {
                if !bias.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "bias {bias} is not finite"
                    )));
                }
                check_scale("jitter_sigma", jitter_sigma)
            }
            NoiseModel::FixedAxisSweep { axis, angle } => {
                RotationSpec::new(axis, angle).map(|_| ())
            }
            NoiseModel::HaarAxis { angle } => check_scale("angle", angle),
            NoiseModel::TwoArmGaussian { sigma } => check_scale("sigma", sigma),
        }
    }

    /// Draws one relative rotation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RotationSpec {
        match *self {
            NoiseModel::FixedAxisBias {
                axis,
                bias,
                jitter_sigma,
            } => {
                let e = axis.unit();
                let mut v = [0.0; 3];
                for (vi, ei) in v.iter_mut().zip(e) {
                    let g: f64 = rng.sample(StandardNormal);
                    *vi = bias * ei + jitter_sigma * g;
                }
                RotationSpec::from_rotation_vector(v)
            }
            NoiseModel::FixedAxisSweep { axis, angle } => RotationSpec::folded(axis, angle),
            NoiseModel::HaarAxis { angle } => RotationSpec::folded(haar_axis(rng), angle),
            NoiseModel::TwoArmGaussian { sigma } => {
                let g_a: f64 = rng.sample(StandardNormal);
                let g_b: f64 = rng.sample(StandardNormal);
                RotationSpec::folded(Y_AXIS, (sigma * (g_b - g_a)).abs())
            }
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::FixedAxisBias {
                axis,
                bias,
                jitter_sigma,
            } => write!(
                f,
                "fixed-axis-bias(axis={axis}, bias={bias}, jitter={jitter_sigma})"
            ),
            NoiseModel::FixedAxisSweep { axis, angle } => write!(
                f,
                "fixed-axis-sweep(axis=[{}, {}, {}], angle={angle})",
                axis[0], axis[1], axis[2]
            ),
            NoiseModel::HaarAxis { angle } => write!(f, "haar-axis(angle={angle})"),
            NoiseModel::TwoArmGaussian { sigma } => write!(f, "two-arm-gaussian(sigma={sigma})"),
        }
    }
}

/// Uniform point on the unit sphere from a normalized Gaussian 3-vector.
pub fn haar_axis<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = norm3(&v);
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Identifies an independent, reproducible random stream.
///
/// The generator is ChaCha8 seeded from `seed` with its 64-bit stream
/// selector set to `stream_id`, so equal keys give equal draws on every
/// platform and distinct pulses never share state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Derives an independent seed for sub-task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x51_7cc1_b727_220a)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws one rotation from `model` on a fresh generator for `stream`.
pub fn sample_rotation(model: &NoiseModel, stream: RngStream) -> RotationSpec {
    model.sample(&mut stream.rng())
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{pauli, ONE, UNITARITY_TOL, ZERO};

    #[test]
    fn zero_angle_is_identity() {
        let u = RotationSpec::new(Y_AXIS, 0.0).unwrap().unitary();
        assert!(u.max_abs_diff(&Mat2::identity()) < 1e-15);
    }

    #[test]
    fn pi_about_y() {
        let u = RotationSpec::new(Y_AXIS, PI).unwrap().unitary();
        let expected = Mat2::from_rows([[ZERO, -ONE], [ONE, ZERO]]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
        assert!(u.max_abs_diff(&pauli::Y.scale(c(0.0, -1.0))) < 1e-15);
    }

    #[test]
    fn rotation_about_z_is_diagonal_phase() {
        for alpha in [0.1, 0.7, 2.0, 3.0] {
            let u = RotationSpec::new(Z_AXIS, alpha).unwrap().unitary();
            let e = |t: f64| c(t.cos(), t.sin());
            let expected = Mat2::from_rows([[e(-alpha / 2.0), ZERO], [ZERO, e(alpha / 2.0)]]);
            assert!(u.max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(matches!(
            RotationSpec::new([1.0, 1.0, 0.0], 0.3),
            Err(Error::NonUnitAxis { .. })
        ));
        assert!(matches!(
            RotationSpec::new(Y_AXIS, -0.1),
            Err(Error::InvalidAngle(_))
        ));
    }

    #[test]
    fn angles_fold_into_zero_pi() {
        let r = RotationSpec::new(Y_AXIS, 1.5 * PI).unwrap();
        assert!((r.angle() - 0.5 * PI).abs() < 1e-15);
        assert_eq!(r.axis(), [-0.0, -1.0, -0.0]);
        let direct = RotationSpec::new(Y_AXIS, 1.5 * PI).unwrap().unitary();
        let unfolded = {
            let (s, co) = (0.75 * PI).sin_cos();
            Mat2::identity().scale_real(co) - pauli::Y.scale(c(0.0, s))
        };
        // same rotation up to a global sign
        assert!(direct.max_abs_diff(&unfolded.scale_real(-1.0)) < 1e-15);
    }

    #[test]
    fn bias_without_jitter_is_exact() {
        let model = NoiseModel::FixedAxisBias {
            axis: CardinalAxis::Y,
            bias: 0.5,
            jitter_sigma: 0.0,
        };
        let r = sample_rotation(&model, RngStream::new(3, 9));
        assert_eq!(r.axis(), Y_AXIS);
        assert!((r.angle() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_arm_without_spread_is_identity() {
        let model = NoiseModel::TwoArmGaussian { sigma: 0.0 };
        for id in 0..20 {
            let r = sample_rotation(&model, RngStream::new(1, id));
            assert_eq!(r.axis(), Y_AXIS);
            assert_eq!(r.angle(), 0.0);
        }
    }

    #[test]
    fn haar_axis_second_moment() {
        let model = NoiseModel::HaarAxis { angle: 0.9 };
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|i| {
                let z = sample_rotation(&model, RngStream::new(42, i)).axis()[2];
                z * z
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "mean n_z^2 = {mean}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let model = NoiseModel::HaarAxis { angle: 0.4 };
        let a: Vec<_> = (0..50)
            .map(|i| sample_rotation(&model, RngStream::new(7, i)))
            .collect();
        let b: Vec<_> = (0..50)
            .map(|i| sample_rotation(&model, RngStream::new(7, i)))
            .collect();
        assert_eq!(a, b);
        let other = sample_rotation(&model, RngStream::new(8, 0));
        assert_ne!(a[0], other);
    }

    #[test]
    fn bias_mean_angle_tracks_bias() {
        let bias = 0.8;
        let model = NoiseModel::FixedAxisBias {
            axis: CardinalAxis::Y,
            bias,
            jitter_sigma: DEFAULT_JITTER_SIGMA,
        };
        let n = 100_000u64;
        let angles: Vec<f64> = (0..n)
            .map(|i| sample_rotation(&model, RngStream::new(5, i)).angle())
            .collect();
        let mean = angles.iter().sum::<f64>() / n as f64;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        // transverse jitter adds a second-order bias of σ²/b
        let expected = bias + DEFAULT_JITTER_SIGMA.powi(2) / bias;
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn relative_rotation_cases() {
        let u = RotationSpec::new([0.6, 0.0, 0.8], 1.1).unwrap().unitary();
        assert!(relative_rotation(&u, &u).max_abs_diff(&Mat2::identity()) < 1e-12);
        assert!(relative_rotation(&Mat2::identity(), &u).max_abs_diff(&u) < 1e-15);
    }

    #[test]
    fn noise_model_config_round_trip() {
        let models = [
            NoiseModel::FixedAxisBias {
                axis: CardinalAxis::Z,
                bias: 0.3,
                jitter_sigma: 0.02,
            },
            NoiseModel::FixedAxisSweep {
                axis: Y_AXIS,
                angle: 0.5,
            },
            NoiseModel::HaarAxis { angle: 0.2 },
            NoiseModel::TwoArmGaussian { sigma: 0.1 },
        ];
        for m in models {
            let text = toml::to_string(&m).unwrap();
            let back: NoiseModel = toml::from_str(&text).unwrap();
            assert_eq!(m, back, "{text}");
        }
        let m: NoiseModel =
            toml::from_str("kind = \"fixed-axis-bias\"\naxis = \"y\"\nbias = 0.4").unwrap();
        assert_eq!(
            m,
            NoiseModel::FixedAxisBias {
                axis: CardinalAxis::Y,
                bias: 0.4,
                jitter_sigma: DEFAULT_JITTER_SIGMA
            }
        );
    }

    #[test]
    fn sampled_unitaries_are_unitary() {
        let model = NoiseModel::HaarAxis { angle: 2.5 };
        for i in 0..200 {
            let u = sample_rotation(&model, RngStream::new(11, i)).unitary();
            assert!(u.is_unitary(UNITARITY_TOL));
        }
    }
}
