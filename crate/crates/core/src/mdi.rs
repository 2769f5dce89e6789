//! Joint-state assembly at the relay, QBER from Bell projectors, and
//! guessing probabilities for unprotected and twirl-protected operation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use crate::channel::RotationSpec;
use crate::design12::{build_twirl_set, twirl_channel, TwirlSet};
use crate::error::{Error, Result};
use crate::qmath::{c, real_overlap, tensor, trace_distance, Complex, Mat2, Mat4, ONE, ZERO};

/// Encoding basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

impl Basis {
    /// The two basis kets, ordered by bit value.
    pub fn kets(self) -> [[Complex; 2]; 2] {
        let s = c(FRAC_1_SQRT_2, 0.0);
        match self {
            Basis::Z => [[ONE, ZERO], [ZERO, ONE]],
            Basis::X => [[s, s], [s, -s]],
        }
    }

    /// Projectors `|e_0><e_0|` and `|e_1><e_1|`.
    pub fn projectors(self) -> [Mat2; 2] {
        self.kets().map(|k| Mat2::projector(&k))
    }
}

/// BB84 state for `bit` in `basis`: |0>, |1>, |+> or |->.
pub fn prepare_state(basis: Basis, bit: u8) -> Mat2 {
    Mat2::projector(&basis.kets()[usize::from(bit & 1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// State vector in the |00>, |01>, |10>, |11> basis.
    pub fn ket(self) -> [Complex; 4] {
        let s = c(FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PhiPlus => [s, ZERO, ZERO, s],
            BellState::PhiMinus => [s, ZERO, ZERO, -s],
            BellState::PsiPlus => [ZERO, s, s, ZERO],
            BellState::PsiMinus => [ZERO, s, -s, ZERO],
        }
    }

    /// Ψ± flags anti-correlated Z-basis bits.
    pub fn is_psi(self) -> bool {
        matches!(self, BellState::PsiPlus | BellState::PsiMinus)
    }

    /// Φ− and Ψ− flag anti-correlated X-basis bits.
    pub fn is_minus(self) -> bool {
        matches!(self, BellState::PhiMinus | BellState::PsiMinus)
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "Phi+",
            BellState::PhiMinus => "Phi-",
            BellState::PsiPlus => "Psi+",
            BellState::PsiMinus => "Psi-",
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellState::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown Bell state {s:?}")))
    }
}

/// The four Bell-basis projectors of an ideal Bell-state measurement.
#[derive(Debug, Clone)]
pub struct BellProjectors {
    projectors: [Mat4; 4],
}

impl BellProjectors {
    pub fn new() -> Self {
        Self {
            projectors: BellState::ALL.map(|b| Mat4::projector(&b.ket())),
        }
    }

    pub fn get(&self, state: BellState) -> &Mat4 {
        &self.projectors[state.index()]
    }

    /// `Tr(ρ P_b)` for each Bell state, in [`BellState::ALL`] order.
    pub fn probabilities(&self, rho: &Mat4) -> [f64; 4] {
        self.projectors.map(|p| real_overlap(rho.trace_product(&p)))
    }
}

impl Default for BellProjectors {
    fn default() -> Self {
        Self::new()
    }
}

static BELL_PROJECTORS: LazyLock<BellProjectors> = LazyLock::new(BellProjectors::new);
static STANDARD_SET: LazyLock<TwirlSet> = LazyLock::new(build_twirl_set);

/// Shared projector instance.
pub fn bell_projectors() -> &'static BellProjectors {
    &BELL_PROJECTORS
}

/// Shared reference twirl set.
pub fn standard_twirl_set() -> &'static TwirlSet {
    &STANDARD_SET
}

/// Joint state `ρ_init ⊗ (u ρ_init u†)` with `ρ_init = |0><0|`.
pub fn joint_state(u_rel: &Mat2) -> Mat4 {
    let rho0 = prepare_state(Basis::Z, 0);
    tensor(&rho0, &u_rel.conjugate(&rho0))
}

/// `Tr(ρ_joint P_Ψ+) + Tr(ρ_joint P_Ψ−)` for the same-bit Z configuration.
pub fn qber_exact(u_rel: &Mat2) -> f64 {
    let rho = joint_state(u_rel);
    let p = bell_projectors();
    let overlap = rho.trace_product(p.get(BellState::PsiPlus))
        + rho.trace_product(p.get(BellState::PsiMinus));
    real_overlap(overlap)
}

/// [`qber_exact`] averaged over `V_k† u V_k` for every element of `set`.
pub fn qber_twirled(set: &TwirlSet, u_rel: &Mat2) -> f64 {
    set.conjugates(u_rel).map(|w| qber_exact(&w)).sum::<f64>() / set.len() as f64
}

/// [`qber_twirled`] over the reference twelve-element design.
pub fn qber_protected_exact(u_rel: &Mat2) -> f64 {
    qber_twirled(standard_twirl_set(), u_rel)
}

/// Trace distances and guessing probabilities for the bit and phase channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessReport {
    pub t_bit: f64,
    pub t_phase: f64,
    pub p_guess_bit: f64,
    pub p_guess_phase: f64,
    pub p_guess_total: f64,
    /// Set by the closed-form evaluator when the rotation lies outside the
    /// small-angle region where the formulas need no absolute value.
    pub outside_validity: bool,
}

impl GuessReport {
    pub fn from_distances(t_bit: f64, t_phase: f64, outside_validity: bool) -> Self {
        let p_guess_bit = 0.5 * (1.0 + t_bit);
        let p_guess_phase = 0.5 * (1.0 + t_phase);
        Self {
            t_bit,
            t_phase,
            p_guess_bit,
            p_guess_phase,
            p_guess_total: p_guess_bit * p_guess_phase,
            outside_validity,
        }
    }
}

/// Dephases the second qubit in `basis`: `Σ_j (I ⊗ Π_j) m (I ⊗ Π_j)`.
pub fn dephase_second(m: &Mat4, basis: Basis) -> Mat4 {
    basis
        .projectors()
        .iter()
        .map(|p| {
            let k = tensor(&Mat2::identity(), p);
            k * *m * k
        })
        .sum()
}

/// Trace distance between the two joint states Bob can produce in `basis`,
/// as resolved by projections onto that basis at the relay.
///
/// Alice holds her bit-0 state in the same basis. Bob's two states pass
/// through `u_rel` (or its twirl when `protected`), are tensored with
/// Alice's, dephased in the measurement basis, and compared with the 4x4
/// spectral trace distance.
pub fn measured_trace_distance(
    set: &TwirlSet,
    u_rel: &Mat2,
    basis: Basis,
    protected: bool,
) -> Result<f64> {
    let alice = prepare_state(basis, 0);
    let evolve = |rho: &Mat2| -> Result<Mat2> {
        if protected {
            twirl_channel(set, u_rel, rho)
        } else {
            Ok(u_rel.conjugate(rho))
        }
    };
    let right = tensor(&alice, &evolve(&prepare_state(basis, 1))?);
    let wrong = tensor(&alice, &evolve(&prepare_state(basis, 0))?);
    trace_distance(
        &dephase_second(&right, basis),
        &dephase_second(&wrong, basis),
    )
}

/// Guessing report computed from density matrices.
pub fn guess_report_numeric(spec: &RotationSpec, protected: bool) -> Result<GuessReport> {
    guess_report_numeric_with(standard_twirl_set(), spec, protected)
}

pub fn guess_report_numeric_with(
    set: &TwirlSet,
    spec: &RotationSpec,
    protected: bool,
) -> Result<GuessReport> {
    let u = spec.unitary();
    let t_bit = measured_trace_distance(set, &u, Basis::Z, protected)?;
    let t_phase = measured_trace_distance(set, &u, Basis::X, protected)?;
    Ok(GuessReport::from_distances(t_bit, t_phase, false))
}

/// Closed-form guessing report.
///
/// Unprotected: `T_bit = |1 - 2(1 - n_z²) s|`, `T_phase = |1 - 2(1 - n_x²) s|`
/// with `s = sin²(α/2)`; valid without the absolute value while both
/// `(1 - n²) s ≤ ½`. Protected: `T = |1 - η|`, `η = 4/3 s`, valid for
/// `α ≤ 2π/3`.
pub fn guess_report_analytic(spec: &RotationSpec, protected: bool) -> GuessReport {
    let s = spec.sin2_half();
    if protected {
        let eta = 4.0 / 3.0 * s;
        let t = (1.0 - eta).abs();
        GuessReport::from_distances(t, t, spec.angle() > 2.0 * PI / 3.0)
    } else {
        let [nx, _, nz] = spec.axis();
        let w_bit = (1.0 - nz * nz) * s;
        let w_phase = (1.0 - nx * nx) * s;
        GuessReport::from_distances(
            (1.0 - 2.0 * w_bit).abs(),
            (1.0 - 2.0 * w_phase).abs(),
            w_bit > 0.5 || w_phase > 0.5,
        )
    }
}

/// Axis that maximizes the unprotected total guessing probability.
pub const GOOD_AXIS: [f64; 3] = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
/// Axis that minimizes it.
pub const BAD_AXIS: [f64; 3] = [0.0, 1.0, 0.0];

/// `(1 - (2/3) sin²(α/2))²`.
pub fn protected_envelope(alpha: f64) -> f64 {
    let s = (alpha / 2.0).sin().powi(2);
    (1.0 - 2.0 / 3.0 * s).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{X_AXIS, Y_AXIS, Z_AXIS};
    use crate::qmath::UNITARITY_TOL;

    fn ry(alpha: f64) -> Mat2 {
        RotationSpec::new(Y_AXIS, alpha).unwrap().unitary()
    }

    #[test]
    fn prepared_states() {
        assert_eq!(prepare_state(Basis::Z, 0), Mat2::projector(&[ONE, ZERO]));
        let plus = prepare_state(Basis::X, 0);
        for z in plus.rows().iter().flatten() {
            assert!((*z - c(0.5, 0.0)).norm() < 1e-15);
        }
        let overlap = prepare_state(Basis::Z, 0).trace_product(&plus);
        assert!((overlap - c(0.5, 0.0)).norm() < 1e-15);
        for b in [Basis::Z, Basis::X] {
            for bit in [0, 1] {
                assert!(prepare_state(b, bit).is_density(UNITARITY_TOL));
            }
        }
    }

    #[test]
    fn projectors_form_resolution_of_identity() {
        let p = bell_projectors();
        let sum: Mat4 = BellState::ALL.iter().map(|b| *p.get(*b)).sum();
        assert!(sum.max_abs_diff(&Mat4::identity()) < 1e-15);
        for a in BellState::ALL {
            let pa = *p.get(a);
            assert!((pa * pa).max_abs_diff(&pa) < 1e-12);
            assert!(pa.is_hermitian(1e-12));
            for b in BellState::ALL {
                if a != b {
                    assert!((pa * *p.get(b)).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qber_identity_is_zero() {
        assert_eq!(qber_exact(&Mat2::identity()), 0.0);
        assert_eq!(qber_protected_exact(&Mat2::identity()), 0.0);
    }

    #[test]
    fn qber_y_rotation() {
        for alpha in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let s = (alpha / 2.0_f64).sin().powi(2);
            assert!((qber_exact(&ry(alpha)) - s).abs() < 1e-14);
            assert!((qber_protected_exact(&ry(alpha)) - 2.0 / 3.0 * s).abs() < 1e-14);
        }
        let q = qber_exact(&ry(38.73_f64.to_radians()));
        assert!((q - 0.110).abs() < 5e-4, "{q}");
        let q = qber_protected_exact(&ry(47.9_f64.to_radians()));
        assert!((q - 0.110).abs() < 5e-4, "{q}");
    }

    #[test]
    fn qber_z_rotation_is_immune() {
        for alpha in [0.3, 1.2, 2.9] {
            let u = RotationSpec::new(Z_AXIS, alpha).unwrap().unitary();
            assert!(qber_exact(&u).abs() < 1e-15);
        }
    }

    #[test]
    fn protected_qber_is_axis_blind() {
        for alpha in [0.2, 0.9, 1.7] {
            let q: Vec<f64> = [X_AXIS, Y_AXIS, Z_AXIS]
                .iter()
                .map(|a| qber_protected_exact(&RotationSpec::new(*a, alpha).unwrap().unitary()))
                .collect();
            assert!(
                (q[0] - q[1]).abs() < 1e-12 && (q[1] - q[2]).abs() < 1e-12,
                "{q:?}"
            );
        }
    }

    #[test]
    fn guess_at_zero_angle() {
        for protected in [false, true] {
            let r = guess_report_numeric(&RotationSpec::identity(), protected).unwrap();
            assert!((r.t_bit - 1.0).abs() < 1e-12);
            assert!((r.t_phase - 1.0).abs() < 1e-12);
            assert!((r.p_guess_total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn guess_bad_axis_matches_closed_form() {
        for alpha in [0.1, 0.6, 1.2, 1.5] {
            let spec = RotationSpec::new(BAD_AXIS, alpha).unwrap();
            let s = (alpha / 2.0_f64).sin().powi(2);
            let num = guess_report_numeric(&spec, false).unwrap();
            assert!((num.p_guess_total - (1.0 - s).powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn protected_guess_at_quarter_turn() {
        for axis in [X_AXIS, Y_AXIS, Z_AXIS, GOOD_AXIS] {
            let spec = RotationSpec::new(axis, PI / 2.0).unwrap();
            let r = guess_report_numeric(&spec, true).unwrap();
            assert!((r.p_guess_total - 4.0 / 9.0).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn analytic_cases() {
        for alpha in [0.0, 0.5, 1.5, 3.0] {
            let r = guess_report_analytic(&RotationSpec::new(Z_AXIS, alpha).unwrap(), false);
            assert_eq!(r.p_guess_bit, 1.0);
            let r =
                guess_report_analytic(&RotationSpec::new([0.6, 0.0, 0.8], alpha).unwrap(), true);
            assert!(
                (r.p_guess_total - protected_envelope(alpha)).abs() < 1e-15
                    || alpha > 2.0 * PI / 3.0
            );
            let s = (alpha / 2.0_f64).sin().powi(2);
            let r = guess_report_analytic(&RotationSpec::new(GOOD_AXIS, alpha).unwrap(), false);
            assert!((r.p_guess_bit - (1.0 - 0.5 * s)).abs() < 1e-15);
            assert!((r.p_guess_phase - (1.0 - 0.5 * s)).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_flags_large_rotations() {
        let r = guess_report_analytic(&RotationSpec::new(BAD_AXIS, 2.0).unwrap(), false);
        assert!(r.outside_validity);
        assert!(r.t_bit >= 0.0);
        let r = guess_report_analytic(&RotationSpec::new(BAD_AXIS, 2.5).unwrap(), true);
        assert!(r.outside_validity);
        let r = guess_report_analytic(&RotationSpec::new(BAD_AXIS, 1.0).unwrap(), true);
        assert!(!r.outside_validity);
    }

    #[test]
    fn bell_labels_parse() {
        for b in BellState::ALL {
            assert_eq!(b.label().parse::<BellState>().unwrap(), b);
        }
        assert!("phi".parse::<BellState>().is_err());
    }
}
