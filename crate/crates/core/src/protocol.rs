//! Event-level sifting protocol with beacon-synchronized twirling.
//!
//! Each pulse draws bases and bits for both parties, a beacon index `k`,
//! and a relative channel rotation. In protected mode both prepared states
//! are scrambled by `V_k` before transmission, the relay announces a raw
//! Bell outcome, and the parties undo the scrambling classically through a
//! [`LookupTable`] before sifting and parity mapping.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{NoiseModel, RngStream, RotationSpec};
use crate::design12::TwirlSet;
use crate::error::{Error, Result};
use crate::mdi::{bell_projectors, prepare_state, standard_twirl_set, Basis, BellState};
use crate::qmath::{tensor, Mat4};

/// Overlap modulus required to identify a mapped Bell vector.
pub const LOOKUP_MATCH_TOL: f64 = 1e-9;
/// Tolerance on Born probabilities (negativity and normalization).
pub const BORN_TOL: f64 = 1e-10;

/// Maps `(k, raw announcement)` to the effective Bell state
/// `(V_k† ⊗ V_k†)|ψ_C>`, up to global phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupTable {
    rows: Vec<[BellState; 4]>,
}

/// Rows of the classical look-up table as published, one per element group
/// (`V_1..V_4`, `V_5..V_8`, `V_9..V_12`), columns in [`BellState::ALL`] order.
pub const PUBLISHED_GROUP_ROWS: [[BellState; 4]; 3] = {
    use BellState::*;
    [
        [PhiPlus, PhiMinus, PsiPlus, PsiMinus],
        [PhiPlus, PsiPlus, PhiMinus, PsiMinus],
        [PhiMinus, PhiPlus, PsiMinus, PsiPlus],
    ]
};

impl LookupTable {
    /// The published twelve-row table, expanded from [`PUBLISHED_GROUP_ROWS`].
    pub fn published() -> Self {
        Self {
            rows: (0..12).map(|i| PUBLISHED_GROUP_ROWS[i / 4]).collect(),
        }
    }

    pub fn from_rows(rows: Vec<[BellState; 4]>) -> Self {
        Self { rows }
    }

    /// Number of beacon values.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[BellState; 4]] {
        &self.rows
    }

    /// Effective state for announcement `announced` under beacon `k` (1-based).
    pub fn reverse(&self, k: usize, announced: BellState) -> BellState {
        self.rows[k - 1][announced.index()]
    }

    /// Raw announcement that reverses to `effective` under beacon `k`.
    pub fn forward(&self, k: usize, effective: BellState) -> Option<BellState> {
        BellState::ALL
            .into_iter()
            .find(|&b| self.reverse(k, b) == effective)
    }

    /// Every row is a permutation of the Bell basis.
    pub fn is_bijective(&self) -> bool {
        self.rows.iter().all(|row| {
            let mut seen = [false; 4];
            row.iter().for_each(|b| seen[b.index()] = true);
            seen.iter().all(|&s| s)
        })
    }

    /// Cell-by-cell comparison against `reference`.
    pub fn compare(&self, reference: &LookupTable) -> TableComparison {
        let mut mismatches = Vec::new();
        let mut matched = 0;
        for (i, (ours, theirs)) in self.rows.iter().zip(&reference.rows).enumerate() {
            for b in BellState::ALL {
                let (o, t) = (ours[b.index()], theirs[b.index()]);
                if o == t {
                    matched += 1;
                } else {
                    mismatches.push(CellMismatch {
                        k: i + 1,
                        announced: b,
                        computed: o,
                        reference: t,
                    });
                }
            }
        }
        TableComparison {
            total: 4 * self.rows.len().max(reference.rows.len()),
            matched,
            mismatches,
        }
    }
}

impl fmt::Display for LookupTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beacon")?;
        for b in BellState::ALL {
            write!(f, "  {:>5}", b.label())?;
        }
        writeln!(f)?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(f, "V_{:<4}", i + 1)?;
            for b in row {
                write!(f, "  {:>5}", b.label())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellMismatch {
    pub k: usize,
    pub announced: BellState,
    pub computed: BellState,
    pub reference: BellState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableComparison {
    pub total: usize,
    pub matched: usize,
    pub mismatches: Vec<CellMismatch>,
}

impl TableComparison {
    pub fn all_match(&self) -> bool {
        self.matched == self.total
    }
}

impl fmt::Display for TableComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "look-up table: {}/{} cells match the published table",
            self.matched, self.total
        )?;
        for m in &self.mismatches {
            writeln!(
                f,
                "  V_{:<2} announced {:>4}: computed {:>4}, published {:>4}",
                m.k,
                m.announced.label(),
                m.computed.label(),
                m.reference.label()
            )?;
        }
        Ok(())
    }
}

/// Applies `V_k† ⊗ V_k†` to each Bell vector and identifies the image.
pub fn build_lookup_table(set: &TwirlSet) -> Result<LookupTable> {
    let mut rows = Vec::with_capacity(set.len());
    for (i, v) in set.matrices().enumerate() {
        let vd = v.dagger();
        let op = tensor(&vd, &vd);
        let mut row = [BellState::PhiPlus; 4];
        for b in BellState::ALL {
            let image = op.apply(&b.ket());
            let (best, overlap) = BellState::ALL
                .into_iter()
                .map(|cand| {
                    let ket = cand.ket();
                    let ov: num_complex::Complex64 =
                        ket.iter().zip(&image).map(|(x, y)| x.conj() * y).sum();
                    (cand, ov.norm())
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("four candidates");
            if overlap <= 1.0 - LOOKUP_MATCH_TOL {
                return Err(Error::LookupConstruction {
                    k: i + 1,
                    state: b,
                    overlap,
                });
            }
            row[b.index()] = best;
        }
        rows.push(row);
    }
    Ok(LookupTable { rows })
}

/// Draws an ideal Bell-measurement outcome with Born weights `Tr(ρ P_b)`.
pub fn sample_bell_outcome<R: Rng + ?Sized>(rho_joint: &Mat4, rng: &mut R) -> Result<BellState> {
    let probs = born_probabilities(rho_joint)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (b, p) in BellState::ALL.into_iter().zip(probs) {
        acc += p;
        if u < acc {
            return Ok(b);
        }
    }
    // u landed in the rounding gap above the cumulative sum
    Ok(BellState::ALL
        .into_iter()
        .rev()
        .find(|b| probs[b.index()] > 0.0)
        .unwrap_or(BellState::PsiMinus))
}

/// Born weights of the four Bell outcomes, validated and clipped at zero.
pub fn born_probabilities(rho_joint: &Mat4) -> Result<[f64; 4]> {
    let mut probs = bell_projectors().probabilities(rho_joint);
    for p in &mut probs {
        if *p < -BORN_TOL {
            return Err(Error::NegativeProbability(*p));
        }
        *p = p.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > BORN_TOL {
        return Err(Error::InvalidParameter(format!(
            "Bell probabilities sum to {total}, state is not normalized"
        )));
    }
    Ok(probs)
}

/// What the relay broadcast for a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Announcement {
    Bell(BellState),
    NoCoincidence,
}

impl fmt::Display for Announcement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Announcement::Bell(b) => write!(f, "{b}"),
            Announcement::NoCoincidence => f.write_str("none"),
        }
    }
}

/// Everything that happened to one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub index: u64,
    /// Shared beacon value `1..=12`; `None` without twirling.
    pub beacon_k: Option<u8>,
    pub basis_a: Basis,
    pub basis_b: Basis,
    pub bit_a: u8,
    pub bit_b: u8,
    pub rotation: RotationSpec,
    pub announced: Announcement,
    /// Announcement after look-up reversal.
    pub effective: Option<BellState>,
    /// Bases matched and a coincidence was recorded.
    pub sifted: bool,
    /// Bob's bit after parity mapping differs from Alice's (sifted pulses only).
    pub error: bool,
}

/// Integer tallies; merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionTally {
    pub pulses: u64,
    pub sifted_z_pairs: u64,
    pub sifted_x_pairs: u64,
    pub z_errors: u64,
    pub x_errors: u64,
    /// Basis-mismatched pulses.
    pub discarded: u64,
    pub no_coincidence: u64,
}

impl SessionTally {
    pub fn record(&mut self, r: &PulseRecord) {
        self.pulses += 1;
        if matches!(r.announced, Announcement::NoCoincidence) {
            self.no_coincidence += 1;
        } else if !r.sifted {
            self.discarded += 1;
        } else {
            match r.basis_a {
                Basis::Z => {
                    self.sifted_z_pairs += 1;
                    self.z_errors += u64::from(r.error);
                }
                Basis::X => {
                    self.sifted_x_pairs += 1;
                    self.x_errors += u64::from(r.error);
                }
            }
        }
    }

    pub fn merge(mut self, other: SessionTally) -> SessionTally {
        self.pulses += other.pulses;
        self.sifted_z_pairs += other.sifted_z_pairs;
        self.sifted_x_pairs += other.sifted_x_pairs;
        self.z_errors += other.z_errors;
        self.x_errors += other.x_errors;
        self.discarded += other.discarded;
        self.no_coincidence += other.no_coincidence;
        self
    }
}

/// Error rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub se: f64,
    /// No sifted pairs; `value` and `se` are reported as 0.
    pub undefined: bool,
}

impl Rate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                value: 0.0,
                se: 0.0,
                undefined: true,
            };
        }
        let p = errors as f64 / trials as f64;
        Self {
            value: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
            undefined: false,
        }
    }
}

/// Aggregated sifted-key statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionResult {
    pub tally: SessionTally,
    pub qber_z: Rate,
    pub qber_x: Rate,
}

impl From<SessionTally> for SessionResult {
    fn from(tally: SessionTally) -> Self {
        Self {
            tally,
            qber_z: Rate::from_counts(tally.z_errors, tally.sifted_z_pairs),
            qber_x: Rate::from_counts(tally.x_errors, tally.sifted_x_pairs),
        }
    }
}

/// Session parameters plus the reversal table.
#[derive(Debug, Clone)]
pub struct Session {
    model: NoiseModel,
    protected: bool,
    seed: u64,
    set: TwirlSet,
    table: LookupTable,
}

const PULSE_CHUNK: u64 = 4096;

impl Session {
    pub fn new(model: NoiseModel, protected: bool, seed: u64) -> Result<Self> {
        let set = standard_twirl_set().clone();
        let table = build_lookup_table(&set)?;
        Self::with_table(model, protected, seed, set, table)
    }

    /// Session that reverses with an explicit table, e.g. to measure the
    /// effect of a wrong one.
    pub fn with_table(
        model: NoiseModel,
        protected: bool,
        seed: u64,
        set: TwirlSet,
        table: LookupTable,
    ) -> Result<Self> {
        model.validate()?;
        if table.len() != set.len() {
            return Err(Error::InvalidParameter(format!(
                "look-up table has {} rows for {} twirl elements",
                table.len(),
                set.len()
            )));
        }
        Ok(Self {
            model,
            protected,
            seed,
            set,
            table,
        })
    }

    pub fn table(&self) -> &LookupTable {
        &self.table
    }

    /// Simulates pulse `index` on its own random stream.
    pub fn pulse(&self, index: u64) -> Result<PulseRecord> {
        let mut rng = RngStream::new(self.seed, index).rng();
        let basis = |rng: &mut rand_chacha::ChaCha8Rng| {
            if rng.random::<bool>() {
                Basis::X
            } else {
                Basis::Z
            }
        };
        let basis_a = basis(&mut rng);
        let bit_a = u8::from(rng.random::<bool>());
        let basis_b = basis(&mut rng);
        let bit_b = u8::from(rng.random::<bool>());
        // drawn in both modes so the two share bases, bits and noise per seed
        let k = rng.random_range(1..=self.set.len());
        let rotation = self.model.sample(&mut rng);
        let u_rel = rotation.unitary();

        let rho_a = prepare_state(basis_a, bit_a);
        let rho_b = prepare_state(basis_b, bit_b);
        let rho_joint = if self.protected {
            let v = self.set.get(k).matrix;
            tensor(&v.conjugate(&rho_a), &(u_rel * v).conjugate(&rho_b))
        } else {
            tensor(&rho_a, &u_rel.conjugate(&rho_b))
        };
        let raw = sample_bell_outcome(&rho_joint, &mut rng)?;
        let effective = if self.protected {
            self.table.reverse(k, raw)
        } else {
            raw
        };

        let sifted = basis_a == basis_b;
        let flip = match basis_a {
            Basis::Z => effective.is_psi(),
            Basis::X => effective.is_minus(),
        };
        let bob_key_bit = bit_b ^ u8::from(flip);
        Ok(PulseRecord {
            index,
            beacon_k: self.protected.then_some(k as u8),
            basis_a,
            basis_b,
            bit_a,
            bit_b,
            rotation,
            announced: Announcement::Bell(raw),
            effective: Some(effective),
            sifted,
            error: sifted && bob_key_bit != bit_a,
        })
    }

    /// Runs pulses `0..pulses`, sharded across worker threads.
    pub fn run(&self, pulses: u64) -> Result<SessionResult> {
        if pulses == 0 {
            return Err(Error::InvalidParameter("pulses must be at least 1".into()));
        }
        let chunks = pulses.div_ceil(PULSE_CHUNK);
        let tally = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut t = SessionTally::default();
                let end = ((c + 1) * PULSE_CHUNK).min(pulses);
                for i in c * PULSE_CHUNK..end {
                    t.record(&self.pulse(i)?);
                }
                Ok::<_, Error>(t)
            })
            .try_reduce(SessionTally::default, |a, b| Ok(a.merge(b)))?;
        Ok(tally.into())
    }
}

/// Runs a full session with the reference design and brute-force table.
pub fn run_session(
    pulses: u64,
    model: NoiseModel,
    protected: bool,
    seed: u64,
) -> Result<SessionResult> {
    Session::new(model, protected, seed)?.run(pulses)
}
