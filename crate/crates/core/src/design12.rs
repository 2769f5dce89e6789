//! The twelve-element single-qubit unitary 2-design and its twirl.
//!
//! The set is the Pauli group together with the eight 120° Clifford
//! rotations about the cube diagonals (the binary tetrahedral group modulo
//! phases). Twirling any unitary channel over it produces the depolarizing
//! channel `(1 - η) ρ + η I/2` with `1 - η = (|Tr U|² - 1) / 3`.

use std::fmt;

use rand::Rng;

use crate::channel::{haar_axis, RngStream, RotationSpec};
use crate::error::Result;
use crate::qmath::{c, pauli, Complex, Mat2, ONE, ZERO};

/// Unitarity tolerance for design elements.
pub const ELEMENT_UNITARITY_TOL: f64 = 1e-12;
/// Certification tolerances below this are unreachable in double precision.
pub const CERTIFICATION_FLOOR: f64 = 10.0 * f64::EPSILON;
/// Slack on the range check `η ∈ [0, 4/3]`.
pub const ETA_RANGE_SLACK: f64 = 1e-12;

/// Which family an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwirlGroup {
    /// `I, iX, -iY, iZ`.
    Pauli,
    /// 120° rotations, first orientation.
    CliffordXyz,
    /// 120° rotations, conjugate orientation.
    CliffordConj,
}

impl fmt::Display for TwirlGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwirlGroup::Pauli => "pauli",
            TwirlGroup::CliffordXyz => "clifford-xyz",
            TwirlGroup::CliffordConj => "clifford-conj",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwirlElement {
    pub matrix: Mat2,
    pub group: TwirlGroup,
}

/// Ordered set of twirling unitaries, indexed from 1 in user-facing output.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirlSet {
    elements: Vec<TwirlElement>,
}

const fn h(re: f64, im: f64) -> Complex {
    c(0.5 * re, 0.5 * im)
}

/// The twelve reference matrices `V_1 ... V_12`, in order.
pub const STANDARD_ELEMENTS: [Mat2; 12] = [
    Mat2::from_rows([[ONE, ZERO], [ZERO, ONE]]),
    Mat2::from_rows([[ZERO, c(0.0, 1.0)], [c(0.0, 1.0), ZERO]]),
    Mat2::from_rows([[ZERO, c(-1.0, 0.0)], [ONE, ZERO]]),
    Mat2::from_rows([[c(0.0, 1.0), ZERO], [ZERO, c(0.0, -1.0)]]),
    Mat2::from_rows([[h(1.0, -1.0), h(-1.0, -1.0)], [h(1.0, -1.0), h(1.0, 1.0)]]),
    Mat2::from_rows([[h(1.0, 1.0), h(1.0, -1.0)], [h(-1.0, -1.0), h(1.0, -1.0)]]),
    Mat2::from_rows([[h(1.0, 1.0), h(-1.0, 1.0)], [h(1.0, 1.0), h(1.0, -1.0)]]),
    Mat2::from_rows([[h(1.0, -1.0), h(1.0, 1.0)], [h(-1.0, 1.0), h(1.0, 1.0)]]),
    Mat2::from_rows([[h(1.0, 1.0), h(1.0, 1.0)], [h(-1.0, 1.0), h(1.0, -1.0)]]),
    Mat2::from_rows([[h(1.0, -1.0), h(-1.0, 1.0)], [h(1.0, 1.0), h(1.0, 1.0)]]),
    Mat2::from_rows([[h(1.0, -1.0), h(1.0, -1.0)], [h(-1.0, -1.0), h(1.0, 1.0)]]),
    Mat2::from_rows([[h(1.0, 1.0), h(-1.0, -1.0)], [h(1.0, -1.0), h(1.0, -1.0)]]),
];

fn standard_group(index0: usize) -> TwirlGroup {
    match index0 {
        0..=3 => TwirlGroup::Pauli,
        4..=7 => TwirlGroup::CliffordXyz,
        _ => TwirlGroup::CliffordConj,
    }
}

impl TwirlSet {
    /// The reference twelve-element design.
    pub fn standard() -> Self {
        build_twirl_set()
    }

    /// An arbitrary set, e.g. a subset or a deliberately broken design.
    pub fn from_elements(elements: Vec<TwirlElement>) -> Self {
        Self { elements }
    }

    /// The four Pauli elements only (a 1-design, not a 2-design).
    pub fn pauli_only() -> Self {
        Self::from_elements(build_twirl_set().elements.into_iter().take(4).collect())
    }

    /// Copy of this set with element `index` (1-based) replaced by `matrix`.
    pub fn with_replaced(&self, index: usize, matrix: Mat2) -> Self {
        let mut elements = self.elements.clone();
        elements[index - 1].matrix = matrix;
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Element `k`, 1-based.
    pub fn get(&self, k: usize) -> &TwirlElement {
        &self.elements[k - 1]
    }

    pub fn elements(&self) -> &[TwirlElement] {
        &self.elements
    }

    pub fn matrices(&self) -> impl Iterator<Item = &Mat2> + '_ {
        self.elements.iter().map(|e| &e.matrix)
    }

    /// `V_k† u V_k` for every element, in order.
    pub fn conjugates(&self, u: &Mat2) -> impl Iterator<Item = Mat2> + '_ {
        let u = *u;
        self.matrices().map(move |v| v.dagger() * u * *v)
    }

    /// Frame potential `(1/N²) Σ_{j,k} |Tr(V_j† V_k)|⁴`; equals 2 exactly for a
    /// qubit 2-design and exceeds it otherwise.
    pub fn frame_potential(&self) -> f64 {
        let n = self.len() as f64;
        let mut total = 0.0;
        for a in self.matrices() {
            for b in self.matrices() {
                total += a.dagger().trace_product(b).norm_sqr().powi(2);
            }
        }
        total / (n * n)
    }
}

/// Builds `V_1 ... V_12` with their group labels.
pub fn build_twirl_set() -> TwirlSet {
    TwirlSet {
        elements: STANDARD_ELEMENTS
            .iter()
            .enumerate()
            .map(|(i, m)| TwirlElement {
                matrix: *m,
                group: standard_group(i),
            })
            .collect(),
    }
}

/// `(1/N) Σ_k (V_k† u V_k) ρ (V_k† u V_k)†`.
pub fn twirl_channel(set: &TwirlSet, u: &Mat2, rho: &Mat2) -> Result<Mat2> {
    u.ensure_unitary()?;
    Ok(twirl_unchecked(set, u, rho))
}

fn twirl_unchecked(set: &TwirlSet, u: &Mat2, rho: &Mat2) -> Mat2 {
    let sum: Mat2 = set.conjugates(u).map(|w| w.conjugate(rho)).sum();
    sum.scale_real(1.0 / set.len() as f64)
}

/// Depolarization strength of the twirled channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingParams {
    pub eta: f64,
}

impl DepolarizingParams {
    /// Surviving fraction `1 - η`.
    pub fn survival(&self) -> f64 {
        1.0 - self.eta
    }

    /// `(1 - η) ρ + η I/2`.
    pub fn apply(&self, rho: &Mat2) -> Mat2 {
        rho.scale_real(1.0 - self.eta) + Mat2::identity().scale_real(self.eta / 2.0)
    }
}

/// `η = 1 - (|Tr u|² - 1) / 3`, left unclamped.
///
/// # Panics
///
/// If `η` falls outside `[0, 4/3]` by more than [`ETA_RANGE_SLACK`], which
/// only a non-unitary argument can cause.
pub fn depolarization_eta(u: &Mat2) -> DepolarizingParams {
    let eta = 1.0 - (u.trace().norm_sqr() - 1.0) / 3.0;
    assert!(
        (-ETA_RANGE_SLACK..=4.0 / 3.0 + ETA_RANGE_SLACK).contains(&eta),
        "eta = {eta} out of range; argument is not unitary"
    );
    DepolarizingParams { eta }
}

/// Outcome of [`certify_two_design`].
#[derive(Debug, Clone)]
pub struct CertificationReport {
    pub trials: usize,
    pub tol: f64,
    /// Largest `||twirl(u, ρ) - [(1-η)ρ + η I/2]||_max` over all trials.
    pub worst_deviation: f64,
    /// The `(u, ρ)` pair that produced `worst_deviation`.
    pub worst_pair: Option<(Mat2, Mat2)>,
    /// Largest first-moment residual `||(1/N) Σ_k V_k† σ_j V_k ρ||_max`.
    pub worst_cross_term: f64,
    /// 1-based indices of elements that are not unitary.
    pub non_unitary: Vec<usize>,
    /// 1-based indices of elements that differ from the reference matrices
    /// (only checked for twelve-element sets).
    pub differs_from_reference: Vec<usize>,
    pub frame_potential: f64,
    /// The requested tolerance is below what double precision can certify.
    pub below_floor: bool,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        !self.below_floor
            && self.non_unitary.is_empty()
            && self.differs_from_reference.is_empty()
            && self.worst_deviation <= self.tol
            && self.worst_cross_term <= self.tol
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "two-design certification: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        writeln!(f, "  trials:              {}", self.trials)?;
        writeln!(f, "  tolerance:           {:e}", self.tol)?;
        writeln!(f, "  worst twirl residual {:e}", self.worst_deviation)?;
        writeln!(f, "  worst cross term     {:e}", self.worst_cross_term)?;
        writeln!(
            f,
            "  frame potential      {:.12} (2 for a 2-design)",
            self.frame_potential
        )?;
        if self.below_floor {
            writeln!(
                f,
                "  tolerance is below the double-precision floor {CERTIFICATION_FLOOR:e}"
            )?;
        }
        for k in &self.non_unitary {
            writeln!(f, "  element V_{k} is not unitary")?;
        }
        for k in &self.differs_from_reference {
            writeln!(f, "  element V_{k} differs from the reference design")?;
        }
        if self.worst_deviation > self.tol {
            if let Some((u, rho)) = &self.worst_pair {
                writeln!(f, "  worst u = {u:?}")?;
                writeln!(f, "  worst rho = {rho:?}")?;
            }
        }
        Ok(())
    }
}

/// Checks numerically that twirling over `set` yields the depolarizing channel.
///
/// Each trial draws a rotation with a Haar axis and angle uniform in `[0, π]`
/// and a density matrix with a uniformly random Bloch vector, both from
/// stream `(seed, trial)`.
pub fn certify_two_design(
    set: &TwirlSet,
    trials: usize,
    tol: f64,
    seed: u64,
) -> CertificationReport {
    let mut report = CertificationReport {
        trials,
        tol,
        worst_deviation: 0.0,
        worst_pair: None,
        worst_cross_term: 0.0,
        non_unitary: Vec::new(),
        differs_from_reference: Vec::new(),
        frame_potential: set.frame_potential(),
        below_floor: tol < CERTIFICATION_FLOOR,
    };

    for (i, e) in set.elements().iter().enumerate() {
        if !e.matrix.is_unitary(ELEMENT_UNITARITY_TOL) {
            report.non_unitary.push(i + 1);
        }
    }
    if set.len() == STANDARD_ELEMENTS.len() {
        for (i, (e, r)) in set
            .elements()
            .iter()
            .zip(STANDARD_ELEMENTS.iter())
            .enumerate()
        {
            if e.matrix.max_abs_diff(r) > ELEMENT_UNITARITY_TOL {
                report.differs_from_reference.push(i + 1);
            }
        }
    }

    let first_moments: Vec<Mat2> = pauli::XYZ
        .iter()
        .map(|s| {
            let sum: Mat2 = set.conjugates(s).sum();
            sum.scale_real(1.0 / set.len() as f64)
        })
        .collect();

    for trial in 0..trials {
        let mut rng = RngStream::new(seed, trial as u64).rng();
        let spec = RotationSpec::new(
            haar_axis(&mut rng),
            rng.random_range(0.0..=std::f64::consts::PI),
        )
        .expect("haar axis is unit");
        let u = spec.unitary();
        let rho = random_density(&mut rng);

        let twirled = twirl_unchecked(set, &u, &rho);
        let expected = depolarization_eta(&u).apply(&rho);
        let dev = twirled.max_abs_diff(&expected);
        if dev > report.worst_deviation || report.worst_pair.is_none() {
            report.worst_deviation = report.worst_deviation.max(dev);
            report.worst_pair = Some((u, rho));
        }

        for m in &first_moments {
            let left = (*m * rho).max_abs();
            let right = (rho * *m).max_abs();
            report.worst_cross_term = report.worst_cross_term.max(left).max(right);
        }
    }
    report
}

/// `½(I + r·σ)` with `r` uniform in the unit ball.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let n = haar_axis(rng);
    let r = rng.random::<f64>().cbrt();
    let bloch = pauli::XYZ
        .iter()
        .zip(n)
        .map(|(s, ni)| s.scale_real(r * ni))
        .sum::<Mat2>();
    (Mat2::identity() + bloch).scale_real(0.5)
}
