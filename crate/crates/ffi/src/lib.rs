//! C ABI for the mdi-twirl simulator.
//!
//! Every fallible function returns an [`MdiStatus`] and writes its result
//! through an out-pointer. Sessions are opaque handles owned by the caller
//! and released with [`mdi_session_free`]. Panics never cross the boundary;
//! they surface as [`MdiStatus::Panic`]. A description of the most recent
//! failure on the calling thread is available from [`mdi_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mdi_twirl::channel::{CardinalAxis, NoiseModel, RotationSpec};
use mdi_twirl::design12::{certify_two_design, depolarization_eta, TwirlSet};
use mdi_twirl::link_budget::{self, LinkParams};
use mdi_twirl::mdi::{
    guess_report_analytic, guess_report_numeric, qber_exact, qber_protected_exact,
};
use mdi_twirl::protocol::{build_lookup_table, LookupTable, Session, SessionResult};
use mdi_twirl::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A matrix failed a unitarity, Hermiticity or density check.
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdiNoiseKind {
    /// Same rotation on every pulse: `axis`, `angle`.
    FixedAxisSweep = 0,
    /// Cardinal-axis bias with Gaussian jitter: `axis` (must be x, y or z),
    /// `bias`, `jitter_sigma`.
    FixedAxisBias = 1,
    /// Fixed `angle` about a uniformly random axis.
    HaarAxis = 2,
    /// Two-arm drift about y with spread `sigma`.
    TwoArmGaussian = 3,
}

/// Channel model; fields not used by `kind` are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MdiNoise {
    pub kind: MdiNoiseKind,
    pub axis: [f64; 3],
    pub angle: f64,
    pub bias: f64,
    pub jitter_sigma: f64,
    pub sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MdiSessionResult {
    pub pulses: u64,
    pub sifted_z: u64,
    pub errors_z: u64,
    pub sifted_x: u64,
    pub errors_x: u64,
    pub discarded: u64,
    pub no_coincidence: u64,
    pub qber_z: f64,
    pub se_z: f64,
    pub qber_x: f64,
    pub se_x: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MdiGuessReport {
    pub t_bit: f64,
    pub t_phase: f64,
    pub p_guess_bit: f64,
    pub p_guess_phase: f64,
    pub p_guess_total: f64,
    pub outside_validity: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MdiLinkParams {
    pub beta: f64,
    pub mu: f64,
    pub y0: f64,
    pub threshold: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MdiDesignReport {
    pub certified: bool,
    pub worst_deviation: f64,
    pub frame_potential: f64,
    /// Cells of the brute-force look-up table that match the published one.
    pub table_matched: u32,
    pub table_total: u32,
}

/// Opaque protocol session.
pub struct MdiSession {
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MdiStatus {
    match e {
        Error::Io(_) => MdiStatus::Io,
        Error::NotHermitian { .. }
        | Error::NotUnitary { .. }
        | Error::NotDensity
        | Error::NonFinite
        | Error::NegativeProbability(_)
        | Error::LookupConstruction { .. } => MdiStatus::Numerical,
        _ => MdiStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (MdiStatus, String)>) -> MdiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MdiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&msg);
            MdiStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (MdiStatus, String)>;
}

impl<T> IntoFfi<T> for Result<T, Error> {
    fn ffi(self) -> Result<T, (MdiStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (MdiStatus, String) {
    (MdiStatus::NullPointer, format!("{name} is null"))
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn write_out<T>(p: *mut T, v: T, name: &str) -> Result<(), (MdiStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `axis` must be null or point to three readable doubles.
unsafe fn read_rotation(axis: *const f64, angle: f64) -> Result<RotationSpec, (MdiStatus, String)> {
    if axis.is_null() {
        return Err(null("axis"));
    }
    let a = [*axis, *axis.add(1), *axis.add(2)];
    RotationSpec::new(a, angle).ffi()
}

fn cardinal(axis: [f64; 3]) -> Result<CardinalAxis, (MdiStatus, String)> {
    [CardinalAxis::X, CardinalAxis::Y, CardinalAxis::Z]
        .into_iter()
        .find(|c| c.unit() == axis)
        .ok_or((
            MdiStatus::InvalidArgument,
            "bias axis must be a unit coordinate axis".into(),
        ))
}

impl MdiNoise {
    fn model(&self) -> Result<NoiseModel, (MdiStatus, String)> {
        let m = match self.kind {
            MdiNoiseKind::FixedAxisSweep => NoiseModel::FixedAxisSweep {
                axis: self.axis,
                angle: self.angle,
            },
            MdiNoiseKind::FixedAxisBias => NoiseModel::FixedAxisBias {
                axis: cardinal(self.axis)?,
                bias: self.bias,
                jitter_sigma: self.jitter_sigma,
            },
            MdiNoiseKind::HaarAxis => NoiseModel::HaarAxis { angle: self.angle },
            MdiNoiseKind::TwoArmGaussian => NoiseModel::TwoArmGaussian { sigma: self.sigma },
        };
        m.validate().ffi()?;
        Ok(m)
    }
}

impl From<SessionResult> for MdiSessionResult {
    fn from(r: SessionResult) -> Self {
        let t = r.tally;
        Self {
            pulses: t.pulses,
            sifted_z: t.sifted_z_pairs,
            errors_z: t.z_errors,
            sifted_x: t.sifted_x_pairs,
            errors_x: t.x_errors,
            discarded: t.discarded,
            no_coincidence: t.no_coincidence,
            qber_z: r.qber_z.value,
            se_z: r.qber_z.se,
            qber_x: r.qber_x.value,
            se_x: r.qber_x.se,
        }
    }
}

impl From<MdiLinkParams> for LinkParams {
    fn from(p: MdiLinkParams) -> Self {
        LinkParams {
            beta: p.beta,
            mu: p.mu,
            y0: p.y0,
            threshold: p.threshold,
        }
    }
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn mdi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated) and returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Default link parameters: 0.2 dB/km, 0.5 photons, 1e-6 dark counts, 11%.
#[no_mangle]
pub extern "C" fn mdi_link_params_default() -> MdiLinkParams {
    let p = LinkParams::default();
    MdiLinkParams {
        beta: p.beta,
        mu: p.mu,
        y0: p.y0,
        threshold: p.threshold,
    }
}

/// Z-basis QBER of a relative rotation, optionally twirled.
///
/// # Safety
/// `axis` must point to three doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_qber(
    axis: *const f64,
    angle: f64,
    protected: bool,
    out: *mut f64,
) -> MdiStatus {
    guard(|| {
        let u = read_rotation(axis, angle)?.unitary();
        let q = if protected {
            qber_protected_exact(&u)
        } else {
            qber_exact(&u)
        };
        write_out(out, q, "out")
    })
}

/// Depolarization parameter of the twirled channel.
///
/// # Safety
/// As for [`mdi_qber`].
#[no_mangle]
pub unsafe extern "C" fn mdi_depolarization_eta(
    axis: *const f64,
    angle: f64,
    out: *mut f64,
) -> MdiStatus {
    guard(|| {
        let u = read_rotation(axis, angle)?.unitary();
        write_out(out, depolarization_eta(&u).eta, "out")
    })
}

/// Trace distances and guessing probabilities, from density matrices when
/// `numeric` and from the closed forms otherwise.
///
/// # Safety
/// As for [`mdi_qber`].
#[no_mangle]
pub unsafe extern "C" fn mdi_guess_report(
    axis: *const f64,
    angle: f64,
    protected: bool,
    numeric: bool,
    out: *mut MdiGuessReport,
) -> MdiStatus {
    guard(|| {
        let spec = read_rotation(axis, angle)?;
        let r = if numeric {
            guess_report_numeric(&spec, protected).ffi()?
        } else {
            guess_report_analytic(&spec, protected)
        };
        let r = MdiGuessReport {
            t_bit: r.t_bit,
            t_phase: r.t_phase,
            p_guess_bit: r.p_guess_bit,
            p_guess_phase: r.p_guess_phase,
            p_guess_total: r.p_guess_total,
            outside_validity: r.outside_validity,
        };
        write_out(out, r, "out")
    })
}

/// Total QBER after `l` km for intrinsic error `e_int`.
///
/// # Safety
/// `params` must be readable; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_total_qber(
    params: *const MdiLinkParams,
    l: f64,
    e_int: f64,
    out: *mut f64,
) -> MdiStatus {
    guard(|| {
        let p: LinkParams = params
            .as_ref()
            .ok_or_else(|| null("params"))?
            .to_owned()
            .into();
        p.validate().ffi()?;
        write_out(out, link_budget::total_qber(&p, l, e_int), "out")
    })
}

/// Maximum secure distance in km for intrinsic error `e_int`.
///
/// # Safety
/// As for [`mdi_total_qber`].
#[no_mangle]
pub unsafe extern "C" fn mdi_max_secure_distance(
    params: *const MdiLinkParams,
    e_int: f64,
    out: *mut f64,
) -> MdiStatus {
    guard(|| {
        let p: LinkParams = params
            .as_ref()
            .ok_or_else(|| null("params"))?
            .to_owned()
            .into();
        p.validate().ffi()?;
        write_out(out, link_budget::max_secure_distance(&p, e_int), "out")
    })
}

/// Monte Carlo intrinsic error under two-arm drift; `samples` ≥ 1000.
///
/// # Safety
/// `mean` and `se` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_intrinsic_error(
    sigma: f64,
    protected: bool,
    samples: usize,
    seed: u64,
    mean: *mut f64,
    se: *mut f64,
) -> MdiStatus {
    guard(|| {
        if mean.is_null() || se.is_null() {
            return Err(null("mean/se"));
        }
        let e = link_budget::intrinsic_error(sigma, protected, samples, seed).ffi()?;
        write_out(mean, e.mean, "mean")?;
        write_out(se, e.se, "se")
    })
}

/// Certifies the reference design over `trials` random pairs and compares
/// its brute-force look-up table with the published one.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_verify_design(
    trials: usize,
    tol: f64,
    seed: u64,
    out: *mut MdiDesignReport,
) -> MdiStatus {
    guard(|| {
        let set = TwirlSet::standard();
        let cert = certify_two_design(&set, trials, tol, seed);
        let cmp = build_lookup_table(&set)
            .ffi()?
            .compare(&LookupTable::published());
        let r = MdiDesignReport {
            certified: cert.passed(),
            worst_deviation: cert.worst_deviation,
            frame_potential: cert.frame_potential,
            table_matched: cmp.matched as u32,
            table_total: cmp.total as u32,
        };
        write_out(out, r, "out")
    })
}

/// Creates a session; release it with [`mdi_session_free`].
///
/// # Safety
/// `noise` must be readable; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_session_new(
    noise: *const MdiNoise,
    protected: bool,
    seed: u64,
    out: *mut *mut MdiSession,
) -> MdiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = noise.as_ref().ok_or_else(|| null("noise"))?.model()?;
        let inner = Session::new(model, protected, seed).ffi()?;
        write_out(out, Box::into_raw(Box::new(MdiSession { inner })), "out")
    })
}

/// Simulates pulses `0..pulses`; deterministic for a given session.
///
/// # Safety
/// `session` must come from [`mdi_session_new`] and not be freed; `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mdi_session_run(
    session: *const MdiSession,
    pulses: u64,
    out: *mut MdiSessionResult,
) -> MdiStatus {
    guard(|| {
        let s = session.as_ref().ok_or_else(|| null("session"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = s.inner.run(pulses).ffi()?;
        write_out(out, r.into(), "out")
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must be null or come from [`mdi_session_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn mdi_session_free(session: *mut MdiSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
