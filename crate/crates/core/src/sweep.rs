//! Seeded parameter sweeps behind the command-line subcommands.
//!
//! Grid points run in parallel; point `i` draws only from streams derived
//! from `(seed, i)` and sums its samples sequentially, so rows are identical
//! regardless of thread count and are emitted in grid order.

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{
    derive_seed, haar_axis, CardinalAxis, NoiseModel, RngStream, RotationSpec, Y_AXIS,
};
use crate::config::{
    AlphaSweepConfig, BiasSweepConfig, DistanceSweepConfig, PguessSweepConfig, ProtocolConfig,
    SectionConfig, VerifyConfig,
};
use crate::csv::{fmt_num, CsvDoc};
use crate::design12::{certify_two_design, CertificationReport, TwirlSet};
use crate::error::{Error, Result};
use crate::link_budget::{
    intrinsic_error_pair, max_secure_distance, zero_length_error_limit, Estimate,
};
use crate::mdi::{
    guess_report_numeric, joint_state, protected_envelope, qber_exact, qber_protected_exact,
    standard_twirl_set, BAD_AXIS, GOOD_AXIS,
};
use crate::protocol::{
    build_lookup_table, sample_bell_outcome, LookupTable, PulseRecord, Session, SessionResult,
    TableComparison,
};
use crate::qmath::{c, Mat2};

/// First upward crossing of `threshold` by linear interpolation.
pub fn first_crossing(xs: &[f64], ys: &[f64], threshold: f64) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    (1..xs.len()).find_map(|i| {
        let (y0, y1) = (ys[i - 1], ys[i]);
        (y0 < threshold && y1 >= threshold)
            .then(|| xs[i - 1] + (threshold - y0) / (y1 - y0) * (xs[i] - xs[i - 1]))
    })
}

/// First downward crossing of `threshold`.
pub fn first_descent(xs: &[f64], ys: &[f64], threshold: f64) -> Option<f64> {
    let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
    first_crossing(xs, &neg, -threshold)
}

fn header_doc<C: SectionConfig>(cfg: &C, columns: &[&str]) -> CsvDoc {
    let mut doc = CsvDoc::new(columns.iter().copied());
    doc.meta("mdi-twirl", C::SECTION);
    doc.meta_block(&cfg.to_toml());
    doc
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), fmt_num)
}

/// Rate estimated from Bernoulli trials.
fn binomial(errors: usize, trials: usize) -> Estimate {
    let p = errors as f64 / trials as f64;
    Estimate {
        mean: p,
        se: (p * (1.0 - p) / trials as f64).sqrt(),
    }
}

// ---------------------------------------------------------------- alpha

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaRow {
    pub alpha_deg: f64,
    pub unprotected_exact: f64,
    pub unprotected_sampled: Estimate,
    pub protected_exact: f64,
    pub protected_sampled: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub rows: Vec<AlphaRow>,
    pub crossing_unprotected: Option<f64>,
    pub crossing_protected: Option<f64>,
}

/// QBER versus rotation angle about ŷ.
///
/// Exact columns come from the density matrices. Sampled columns draw Born
/// outcomes of the same-bit Z configuration; in protected mode each sample
/// also draws its twirl element.
pub fn sweep_alpha(cfg: &AlphaSweepConfig) -> Result<AlphaSweep> {
    cfg.validate()?;
    let set = standard_twirl_set();
    let xs = cfg.grid().points();
    let rows = xs
        .par_iter()
        .enumerate()
        .map(|(i, &alpha_deg)| {
            let u = RotationSpec::new(Y_AXIS, alpha_deg.to_radians())?.unitary();
            let mut rng = RngStream::new(cfg.seed, i as u64).rng();
            let (mut err_u, mut err_p) = (0, 0);
            for _ in 0..cfg.samples {
                err_u += usize::from(sample_bell_outcome(&joint_state(&u), &mut rng)?.is_psi());
                let v = set.get(rng.random_range(1..=set.len())).matrix;
                let w = v.dagger() * u * v;
                err_p += usize::from(sample_bell_outcome(&joint_state(&w), &mut rng)?.is_psi());
            }
            Ok(AlphaRow {
                alpha_deg,
                unprotected_exact: qber_exact(&u),
                unprotected_sampled: binomial(err_u, cfg.samples),
                protected_exact: qber_protected_exact(&u),
                protected_sampled: binomial(err_p, cfg.samples),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ys_u: Vec<f64> = rows.iter().map(|r| r.unprotected_exact).collect();
    let ys_p: Vec<f64> = rows.iter().map(|r| r.protected_exact).collect();
    Ok(AlphaSweep {
        crossing_unprotected: first_crossing(&xs, &ys_u, cfg.threshold),
        crossing_protected: first_crossing(&xs, &ys_p, cfg.threshold),
        rows,
    })
}

impl AlphaSweep {
    pub fn to_csv(&self, cfg: &AlphaSweepConfig) -> CsvDoc {
        let mut cols = vec!["alpha_deg"];
        let (u, p) = (cfg.protection.unprotected(), cfg.protection.protected());
        if u {
            cols.extend([
                "qber_unprotected_exact",
                "qber_unprotected_sampled",
                "se_unprotected_sampled",
            ]);
        }
        if p {
            cols.extend([
                "qber_protected_exact",
                "qber_protected_sampled",
                "se_protected_sampled",
            ]);
        }
        let mut doc = header_doc(cfg, &cols);
        doc.meta("grid_resolution_deg", fmt_num(cfg.grid().resolution()));
        if u {
            doc.meta("crossing_unprotected_deg", opt(self.crossing_unprotected));
        }
        if p {
            doc.meta("crossing_protected_deg", opt(self.crossing_protected));
        }
        for r in &self.rows {
            let mut v = vec![r.alpha_deg];
            if u {
                v.extend([
                    r.unprotected_exact,
                    r.unprotected_sampled.mean,
                    r.unprotected_sampled.se,
                ]);
            }
            if p {
                v.extend([
                    r.protected_exact,
                    r.protected_sampled.mean,
                    r.protected_sampled.se,
                ]);
            }
            doc.push_numeric(&v);
        }
        doc
    }
}

// ----------------------------------------------------------------- bias

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRow {
    pub axis: CardinalAxis,
    pub bias_rad: f64,
    pub unprotected: Estimate,
    pub protected: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasPanel {
    pub axis: CardinalAxis,
    pub rows: Vec<BiasRow>,
    pub crossing_unprotected: Option<f64>,
    pub crossing_protected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSweep {
    pub panels: Vec<BiasPanel>,
}

pub const BIAS_PANELS: [CardinalAxis; 2] = [CardinalAxis::Y, CardinalAxis::Z];

/// Mean QBER under a fixed-axis bias with Gaussian jitter, for the ŷ and ẑ
/// panels. Both modes evaluate the same rotation draws.
pub fn sweep_bias(cfg: &BiasSweepConfig) -> Result<BiasSweep> {
    cfg.validate()?;
    let xs = cfg.grid().points();
    let panels = BIAS_PANELS
        .iter()
        .enumerate()
        .map(|(panel, &axis)| {
            let panel_seed = derive_seed(cfg.seed, panel as u64);
            let rows = xs
                .par_iter()
                .enumerate()
                .map(|(i, &bias)| {
                    let model = NoiseModel::FixedAxisBias {
                        axis,
                        bias,
                        jitter_sigma: cfg.jitter_sigma,
                    };
                    let mut rng = RngStream::new(panel_seed, i as u64).rng();
                    let (u, p): (Vec<f64>, Vec<f64>) = (0..cfg.samples)
                        .map(|_| {
                            let w = model.sample(&mut rng).unitary();
                            (qber_exact(&w), qber_protected_exact(&w))
                        })
                        .unzip();
                    BiasRow {
                        axis,
                        bias_rad: bias,
                        unprotected: Estimate::from_samples(&u),
                        protected: Estimate::from_samples(&p),
                    }
                })
                .collect::<Vec<_>>();
            let ys_u: Vec<f64> = rows.iter().map(|r| r.unprotected.mean).collect();
            let ys_p: Vec<f64> = rows.iter().map(|r| r.protected.mean).collect();
            BiasPanel {
                axis,
                crossing_unprotected: first_crossing(&xs, &ys_u, cfg.threshold),
                crossing_protected: first_crossing(&xs, &ys_p, cfg.threshold),
                rows,
            }
        })
        .collect();
    Ok(BiasSweep { panels })
}

impl BiasSweep {
    pub fn panel(&self, axis: CardinalAxis) -> Option<&BiasPanel> {
        self.panels.iter().find(|p| p.axis == axis)
    }

    pub fn to_csv(&self, cfg: &BiasSweepConfig) -> CsvDoc {
        let mut cols = vec!["axis", "bias_rad"];
        let (u, p) = (cfg.protection.unprotected(), cfg.protection.protected());
        if u {
            cols.extend(["qber_unprotected", "se_unprotected"]);
        }
        if p {
            cols.extend(["qber_protected", "se_protected"]);
        }
        let mut doc = header_doc(cfg, &cols);
        doc.meta("grid_resolution_rad", fmt_num(cfg.grid().resolution()));
        for panel in &self.panels {
            if u {
                doc.meta(
                    &format!("crossing_unprotected_rad_{}", panel.axis),
                    opt(panel.crossing_unprotected),
                );
            }
            if p {
                doc.meta(
                    &format!("crossing_protected_rad_{}", panel.axis),
                    opt(panel.crossing_protected),
                );
            }
        }
        for panel in &self.panels {
            for r in &panel.rows {
                let mut cells = vec![r.axis.to_string(), fmt_num(r.bias_rad)];
                if u {
                    cells.extend([fmt_num(r.unprotected.mean), fmt_num(r.unprotected.se)]);
                }
                if p {
                    cells.extend([fmt_num(r.protected.mean), fmt_num(r.protected.se)]);
                }
                doc.push_row(cells);
            }
        }
        doc
    }
}

// --------------------------------------------------------------- pguess

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PguessRow {
    pub alpha_deg: f64,
    pub good_axis: f64,
    pub bad_axis: f64,
    /// Mean over uniformly random rotation axes.
    pub turbulent: Estimate,
    pub protected: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PguessSweep {
    pub rows: Vec<PguessRow>,
}

/// Total guessing probability versus rotation angle, all from density
/// matrices; the turbulent series averages over `samples` Haar axes.
pub fn sweep_pguess(cfg: &PguessSweepConfig) -> Result<PguessSweep> {
    cfg.validate()?;
    let xs = cfg.grid().points();
    let rows = xs
        .par_iter()
        .enumerate()
        .map(|(i, &alpha_deg)| {
            let alpha = alpha_deg.to_radians();
            let total = |axis: [f64; 3], protected: bool| -> Result<f64> {
                Ok(
                    guess_report_numeric(&RotationSpec::new(axis, alpha)?, protected)?
                        .p_guess_total,
                )
            };
            let mut rng = RngStream::new(cfg.seed, i as u64).rng();
            let turbulent = (0..cfg.samples)
                .map(|_| total(haar_axis(&mut rng), false))
                .collect::<Result<Vec<_>>>()?;
            Ok(PguessRow {
                alpha_deg,
                good_axis: total(GOOD_AXIS, false)?,
                bad_axis: total(BAD_AXIS, false)?,
                turbulent: Estimate::from_samples(&turbulent),
                protected: total(Y_AXIS, true)?,
                envelope: protected_envelope(alpha),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PguessSweep { rows })
}

impl PguessSweep {
    pub fn to_csv(&self, cfg: &PguessSweepConfig) -> CsvDoc {
        let mut cols = vec!["alpha_deg"];
        let (u, p) = (cfg.protection.unprotected(), cfg.protection.protected());
        if u {
            cols.extend([
                "p_total_good_axis",
                "p_total_bad_axis",
                "p_total_turbulent_sampled",
                "se_turbulent_sampled",
            ]);
        }
        if p {
            cols.extend(["p_total_protected", "p_total_envelope"]);
        }
        let mut doc = header_doc(cfg, &cols);
        doc.meta("good_axis", format!("{:?}", GOOD_AXIS));
        doc.meta("bad_axis", format!("{:?}", BAD_AXIS));
        for r in &self.rows {
            let mut v = vec![r.alpha_deg];
            if u {
                v.extend([r.good_axis, r.bad_axis, r.turbulent.mean, r.turbulent.se]);
            }
            if p {
                v.extend([r.protected, r.envelope]);
            }
            doc.push_numeric(&v);
        }
        doc
    }
}

// ------------------------------------------------------------- distance

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub sigma_rad: f64,
    pub l_max_unprotected: f64,
    pub l_max_protected: f64,
    pub e_int_unprotected: Estimate,
    pub e_int_protected: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSweep {
    pub rows: Vec<DistanceRow>,
    /// Intrinsic error at which even zero length breaches the threshold.
    pub e_int_limit: f64,
    pub zero_crossing_unprotected: Option<f64>,
    pub zero_crossing_protected: Option<f64>,
}

impl DistanceSweep {
    pub fn crossing_ratio(&self) -> Option<f64> {
        Some(self.zero_crossing_protected? / self.zero_crossing_unprotected?)
    }
}

/// Maximum secure distance versus two-arm drift spread.
///
/// Every grid point reuses streams `(seed, 0..samples)`, so the curves are
/// driven by common random numbers and stay monotone in σ. The σ at which a
/// curve reaches zero is interpolated on intrinsic error against the
/// zero-length limit.
pub fn sweep_distance(cfg: &DistanceSweepConfig) -> Result<DistanceSweep> {
    cfg.validate()?;
    let link = cfg.link();
    let xs = cfg.grid().points();
    let rows = xs
        .par_iter()
        .map(|&sigma| {
            let e = intrinsic_error_pair(sigma, cfg.samples, cfg.seed)?;
            Ok(DistanceRow {
                sigma_rad: sigma,
                l_max_unprotected: max_secure_distance(&link, e.unprotected.mean),
                l_max_protected: max_secure_distance(&link, e.protected.mean),
                e_int_unprotected: e.unprotected,
                e_int_protected: e.protected,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e_int_limit = zero_length_error_limit(&link);
    let e_u: Vec<f64> = rows.iter().map(|r| r.e_int_unprotected.mean).collect();
    let e_p: Vec<f64> = rows.iter().map(|r| r.e_int_protected.mean).collect();
    Ok(DistanceSweep {
        zero_crossing_unprotected: first_crossing(&xs, &e_u, e_int_limit),
        zero_crossing_protected: first_crossing(&xs, &e_p, e_int_limit),
        e_int_limit,
        rows,
    })
}

impl DistanceSweep {
    pub fn to_csv(&self, cfg: &DistanceSweepConfig) -> CsvDoc {
        let mut cols = vec!["sigma_rad"];
        let (u, p) = (cfg.protection.unprotected(), cfg.protection.protected());
        if u {
            cols.extend([
                "l_max_unprotected",
                "e_int_unprotected",
                "se_e_int_unprotected",
            ]);
        }
        if p {
            cols.extend(["l_max_protected", "e_int_protected", "se_e_int_protected"]);
        }
        let mut doc = header_doc(cfg, &cols);
        doc.meta("grid_resolution_rad", fmt_num(cfg.grid().resolution()));
        doc.meta("e_int_zero_length_limit", fmt_num(self.e_int_limit));
        if u {
            doc.meta(
                "zero_crossing_unprotected_rad",
                opt(self.zero_crossing_unprotected),
            );
        }
        if p {
            doc.meta(
                "zero_crossing_protected_rad",
                opt(self.zero_crossing_protected),
            );
        }
        if u && p {
            doc.meta("zero_crossing_ratio", opt(self.crossing_ratio()));
        }
        for r in &self.rows {
            let mut v = vec![r.sigma_rad];
            if u {
                v.extend([
                    r.l_max_unprotected,
                    r.e_int_unprotected.mean,
                    r.e_int_unprotected.se,
                ]);
            }
            if p {
                v.extend([
                    r.l_max_protected,
                    r.e_int_protected.mean,
                    r.e_int_protected.se,
                ]);
            }
            doc.push_numeric(&v);
        }
        doc
    }
}

// --------------------------------------------------------------- verify

/// Outcome of [`verify_design`].
#[derive(Debug)]
pub struct DesignVerification {
    pub certification: CertificationReport,
    /// `Err` when some image is not a Bell state, e.g. for a corrupted set.
    pub table: std::result::Result<(LookupTable, TableComparison), Error>,
}

impl DesignVerification {
    pub fn passed(&self) -> bool {
        self.certification.passed() && matches!(&self.table, Ok((_, cmp)) if cmp.all_match())
    }
}

/// Perturbs element `k` by a small phase so it stays unitary but leaves the
/// design.
pub fn corrupt_set(set: &TwirlSet, k: usize) -> TwirlSet {
    let phase = Mat2::from_rows([
        [c(1.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.3f64.cos(), 0.3f64.sin())],
    ]);
    set.with_replaced(k, set.get(k).matrix * phase)
}

/// Certifies the design numerically and compares its brute-force look-up
/// table with the published one.
pub fn verify_design(cfg: &VerifyConfig) -> Result<DesignVerification> {
    cfg.validate()?;
    let set = match cfg.corrupt_element {
        Some(k) => corrupt_set(standard_twirl_set(), k),
        None => standard_twirl_set().clone(),
    };
    let certification = certify_two_design(&set, cfg.samples, cfg.tolerance, cfg.seed);
    let table = build_lookup_table(&set).map(|t| {
        let cmp = t.compare(&LookupTable::published());
        (t, cmp)
    });
    Ok(DesignVerification {
        certification,
        table,
    })
}

impl DesignVerification {
    /// Cell-by-cell comparison; empty when the table could not be built.
    pub fn to_csv(&self, cfg: &VerifyConfig) -> CsvDoc {
        let mut doc = header_doc(cfg, &["k", "announced", "computed", "published", "match"]);
        doc.meta(
            "certification",
            if self.certification.passed() {
                "pass"
            } else {
                "fail"
            },
        );
        doc.meta(
            "worst_twirl_residual",
            fmt_num(self.certification.worst_deviation),
        );
        doc.meta(
            "frame_potential",
            fmt_num(self.certification.frame_potential),
        );
        match &self.table {
            Ok((table, cmp)) => {
                doc.meta(
                    "table_cells_matched",
                    format!("{}/{}", cmp.matched, cmp.total),
                );
                let published = LookupTable::published();
                for (k, (row, reference)) in table.rows().iter().zip(published.rows()).enumerate() {
                    for (j, (computed, expected)) in row.iter().zip(reference).enumerate() {
                        let announced = crate::mdi::BellState::ALL[j];
                        doc.push_row(vec![
                            (k + 1).to_string(),
                            announced.label().into(),
                            computed.label().into(),
                            expected.label().into(),
                            u8::from(computed == expected).to_string(),
                        ]);
                    }
                }
            }
            Err(e) => {
                doc.meta("table_error", e);
            }
        }
        doc
    }
}

// ------------------------------------------------------------- protocol

/// Summary of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub protected: bool,
    pub result: SessionResult,
    /// Pulse records, kept only when an event log was requested.
    pub events: Option<Vec<PulseRecord>>,
}

/// Runs the sifting protocol once per selected mode.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<Vec<ProtocolRun>> {
    cfg.validate()?;
    cfg.protection
        .modes()
        .into_iter()
        .map(|protected| {
            let session = Session::new(cfg.noise, protected, cfg.seed)?;
            let pulses = cfg.samples as u64;
            let result = session.run(pulses)?;
            let events = cfg
                .events
                .as_ref()
                .map(|_| {
                    (0..pulses)
                        .into_par_iter()
                        .map(|i| session.pulse(i))
                        .collect::<Result<Vec<_>>>()
                })
                .transpose()?;
            Ok(ProtocolRun {
                protected,
                result,
                events,
            })
        })
        .collect()
}

fn mode_label(protected: bool) -> &'static str {
    if protected {
        "protected"
    } else {
        "unprotected"
    }
}

/// Summary CSV with one row per mode.
pub fn protocol_summary_csv(cfg: &ProtocolConfig, runs: &[ProtocolRun]) -> CsvDoc {
    let mut doc = header_doc(
        cfg,
        &[
            "mode",
            "pulses",
            "sifted_z",
            "errors_z",
            "qber_z",
            "se_z",
            "sifted_x",
            "errors_x",
            "qber_x",
            "se_x",
            "discarded",
            "no_coincidence",
        ],
    );
    doc.meta("noise", cfg.noise);
    for run in runs {
        let t = &run.result.tally;
        doc.push_row(vec![
            mode_label(run.protected).into(),
            t.pulses.to_string(),
            t.sifted_z_pairs.to_string(),
            t.z_errors.to_string(),
            fmt_num(run.result.qber_z.value),
            fmt_num(run.result.qber_z.se),
            t.sifted_x_pairs.to_string(),
            t.x_errors.to_string(),
            fmt_num(run.result.qber_x.value),
            fmt_num(run.result.qber_x.se),
            t.discarded.to_string(),
            t.no_coincidence.to_string(),
        ]);
    }
    doc
}

/// Per-pulse event log for one run.
pub fn protocol_events_csv(cfg: &ProtocolConfig, run: &ProtocolRun) -> Option<CsvDoc> {
    let events = run.events.as_ref()?;
    let mut doc = header_doc(
        cfg,
        &[
            "index",
            "k",
            "basis_a",
            "bit_a",
            "basis_b",
            "bit_b",
            "announced",
            "effective",
            "sifted",
            "error",
        ],
    );
    doc.meta("mode", mode_label(run.protected));
    for r in events {
        doc.push_row(vec![
            r.index.to_string(),
            r.beacon_k.map_or_else(|| "-".into(), |k| k.to_string()),
            r.basis_a.to_string(),
            r.bit_a.to_string(),
            r.basis_b.to_string(),
            r.bit_b.to_string(),
            r.announced.to_string(),
            r.effective
                .map_or_else(|| "-".into(), |b| b.label().to_string()),
            u8::from(r.sifted).to_string(),
            u8::from(r.error).to_string(),
        ]);
    }
    Some(doc)
}

/// Event-log path for one mode: `stem.mode.ext` when both modes run.
pub fn events_path(base: &std::path::Path, protected: bool, both: bool) -> std::path::PathBuf {
    if !both {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{}.{}", mode_label(protected), ext.to_string_lossy()),
        None => format!("{stem}.{}", mode_label(protected)),
    };
    base.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Protection;
    use crate::mdi::BellState;

    #[test]
    fn crossing_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.05, 0.15, 0.3];
        let x = first_crossing(&xs, &ys, 0.11).unwrap();
        assert!((x - 1.6).abs() < 1e-12);
        assert_eq!(first_crossing(&xs, &ys, 0.5), None);
        assert_eq!(first_descent(&xs, &[3.0, 2.0, 1.0, 0.0], 1.5), Some(1.5));
    }

    #[test]
    fn alpha_crossings_exact_mode() {
        let cfg = AlphaSweepConfig {
            samples: 1,
            ..Default::default()
        };
        let s = sweep_alpha(&cfg).unwrap();
        assert!((s.crossing_unprotected.unwrap() - 38.7394).abs() < 0.05);
        assert!((s.crossing_protected.unwrap() - 47.9329).abs() < 0.05);
        let r0 = s.rows[0];
        assert_eq!(r0.unprotected_sampled.mean, 0.0);
        assert!(r0.protected_exact.abs() < 1e-15);
    }

    #[test]
    fn alpha_sampled_tracks_exact() {
        let cfg = AlphaSweepConfig {
            samples: 4000,
            steps: 4,
            start_deg: 30.0,
            stop_deg: 60.0,
            ..Default::default()
        };
        for r in sweep_alpha(&cfg).unwrap().rows {
            assert!(
                (r.unprotected_sampled.mean - r.unprotected_exact).abs()
                    < 4.0 * r.unprotected_sampled.se
            );
            assert!(
                (r.protected_sampled.mean - r.protected_exact).abs() < 4.0 * r.protected_sampled.se
            );
        }
    }

    #[test]
    fn csv_columns_follow_protection() {
        let cfg = AlphaSweepConfig {
            samples: 1,
            steps: 2,
            protection: Protection::Protected,
            ..Default::default()
        };
        let doc = sweep_alpha(&cfg).unwrap().to_csv(&cfg);
        assert_eq!(
            doc.header(),
            [
                "alpha_deg",
                "qber_protected_exact",
                "qber_protected_sampled",
                "se_protected_sampled"
            ]
        );
        assert!(doc.meta_lines().iter().any(|m| m.starts_with("seed = ")));
    }

    #[test]
    fn pguess_small_grid_bounds() {
        let cfg = PguessSweepConfig {
            samples: 200,
            steps: 7,
            ..Default::default()
        };
        let s = sweep_pguess(&cfg).unwrap();
        assert!((s.rows[0].good_axis - 1.0).abs() < 1e-12);
        for r in &s.rows {
            assert!((r.protected - r.envelope).abs() < 1e-9);
            assert!(
                r.bad_axis <= r.turbulent.mean + 1e-12 && r.turbulent.mean <= r.good_axis + 1e-12
            );
        }
    }

    #[test]
    fn distance_baseline_and_dominance() {
        let cfg = DistanceSweepConfig {
            samples: 1000,
            steps: 11,
            ..Default::default()
        };
        let s = sweep_distance(&cfg).unwrap();
        assert!((s.rows[0].l_max_unprotected - 257.4649).abs() < 0.02);
        for r in &s.rows {
            assert!(r.l_max_protected >= r.l_max_unprotected);
        }
        let ratio = s.crossing_ratio().unwrap();
        assert!((1.15..=1.30).contains(&ratio), "{ratio}");
    }

    #[test]
    fn corrupted_design_names_element() {
        let cfg = VerifyConfig {
            corrupt_element: Some(7),
            ..Default::default()
        };
        let v = verify_design(&cfg).unwrap();
        assert!(!v.passed());
        assert_eq!(v.certification.differs_from_reference, vec![7]);
    }

    #[test]
    fn tolerance_below_floor_fails() {
        let cfg = VerifyConfig {
            tolerance: 1e-15,
            ..Default::default()
        };
        assert!(!verify_design(&cfg).unwrap().certification.passed());
    }

    #[test]
    fn verification_csv_lists_every_cell() {
        let cfg = VerifyConfig::default();
        let v = verify_design(&cfg).unwrap();
        assert!(v.certification.passed());
        let doc = v.to_csv(&cfg);
        assert_eq!(doc.rows().len(), 48);
        assert_eq!(doc.rows()[0][1], BellState::PhiPlus.label());
    }

    #[test]
    fn protocol_noiseless_protected() {
        let cfg = ProtocolConfig {
            protection: Protection::Protected,
            ..Default::default()
        };
        let runs = run_protocol(&cfg).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(
            runs[0].result.tally.z_errors + runs[0].result.tally.x_errors,
            0
        );
    }

    #[test]
    fn protocol_event_log() {
        let cfg = ProtocolConfig {
            samples: 50,
            events: Some("ev.csv".into()),
            ..Default::default()
        };
        let runs = run_protocol(&cfg).unwrap();
        let doc = protocol_events_csv(&cfg, &runs[1]).unwrap();
        assert_eq!(doc.rows().len(), 50);
        let sifted = doc.rows().iter().filter(|r| r[8] == "1").count() as u64;
        let t = runs[1].result.tally;
        assert_eq!(sifted, t.sifted_x_pairs + t.sifted_z_pairs);
    }

    #[test]
    fn events_path_inserts_mode() {
        let p = std::path::Path::new("out/log.csv");
        assert_eq!(
            events_path(p, true, true),
            std::path::Path::new("out/log.protected.csv")
        );
        assert_eq!(events_path(p, false, false), p);
    }
}
