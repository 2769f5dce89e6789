//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p mdi-twirl --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mdi_twirl::channel::{haar_axis, CardinalAxis, NoiseModel, RngStream, RotationSpec, Y_AXIS};
use mdi_twirl::config::{
    AlphaSweepConfig, BiasSweepConfig, DistanceSweepConfig, PguessSweepConfig,
};
use mdi_twirl::design12::{certify_two_design, TwirlSet};
use mdi_twirl::mdi::{
    guess_report_analytic, guess_report_numeric, qber_exact, qber_protected_exact,
};
use mdi_twirl::protocol::{build_lookup_table, LookupTable, Session};
use mdi_twirl::sweep;
use rand::Rng;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    /// `None` when no runtime bound applies.
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "design certification",
            budget: Some(Duration::from_secs(1)),
            run: design_certification,
        },
        Criterion {
            id: 2,
            name: "look-up table vs published",
            budget: Some(Duration::from_secs(1)),
            run: lookup_table,
        },
        Criterion {
            id: 3,
            name: "alpha-sweep thresholds",
            budget: Some(Duration::from_secs(5)),
            run: alpha_thresholds,
        },
        Criterion {
            id: 4,
            name: "bias thresholds",
            budget: Some(Duration::from_secs(60)),
            run: bias_thresholds,
        },
        Criterion {
            id: 5,
            name: "guessing-probability envelope",
            budget: Some(Duration::from_secs(30)),
            run: pguess_envelope,
        },
        Criterion {
            id: 6,
            name: "analytic-numeric oracle equivalence",
            budget: None,
            run: oracle_equivalence,
        },
        Criterion {
            id: 7,
            name: "protocol convergence",
            budget: Some(Duration::from_secs(60)),
            run: protocol_convergence,
        },
        Criterion {
            id: 8,
            name: "distance model",
            budget: Some(Duration::from_secs(120)),
            run: distance_model,
        },
        Criterion {
            id: 9,
            name: "CSV determinism",
            budget: None,
            run: determinism,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut o = (c.run)();
        let elapsed = start.elapsed();
        if let Some(budget) = c.budget {
            if elapsed > budget {
                o.pass = false;
                o.detail
                    .push_str(&format!("; runtime {elapsed:.2?} exceeds {budget:?}"));
            }
        }
        failed += usize::from(!o.pass);
        println!(
            "{} [{}] {} ({:.2?}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed,
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn design_certification() -> Outcome {
    let r = certify_two_design(&TwirlSet::standard(), 100, 1e-10, SEED);
    outcome(
        r.passed(),
        format!(
            "worst residual {:.2e} over {} pairs, frame potential {:.12}",
            r.worst_deviation, r.trials, r.frame_potential
        ),
    )
}

fn lookup_table() -> Outcome {
    let table = match build_lookup_table(&TwirlSet::standard()) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("table construction failed: {e}")),
    };
    let cmp = table.compare(&LookupTable::published());
    let cells: Vec<String> = cmp
        .mismatches
        .iter()
        .map(|m| format!("V{}:{}->{}!={}", m.k, m.announced, m.computed, m.reference))
        .collect();
    outcome(
        cmp.all_match(),
        format!(
            "{}/{} cells match; mismatches {}",
            cmp.matched,
            cmp.total,
            cells.join(" ")
        ),
    )
}

fn alpha_thresholds() -> Outcome {
    let cfg = AlphaSweepConfig::default();
    let s = match sweep::sweep_alpha(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (Some(u), Some(p)) = (s.crossing_unprotected, s.crossing_protected) else {
        return outcome(false, "a series never crosses 0.11");
    };
    outcome(
        (u - 38.7).abs() <= 0.3 && (p - 47.9).abs() <= 0.3,
        format!("unprotected {u:.4} deg (38.7 +- 0.3), protected {p:.4} deg (47.9 +- 0.3)"),
    )
}

fn bias_thresholds() -> Outcome {
    let cfg = BiasSweepConfig::default();
    let s = match sweep::sweep_bias(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let y = s.panel(CardinalAxis::Y).expect("y panel");
    let z = s.panel(CardinalAxis::Z).expect("z panel");
    let (Some(u), Some(p)) = (y.crossing_unprotected, y.crossing_protected) else {
        return outcome(false, "a y-axis series never crosses 0.11");
    };
    let z_max = z
        .rows
        .iter()
        .map(|r| r.unprotected.mean)
        .fold(0.0, f64::max);
    outcome(
        (u - 0.68).abs() <= 0.01 && (p - 0.84).abs() <= 0.01 && z_max < 0.005,
        format!("y: unprotected {u:.4} rad, protected {p:.4} rad; z unprotected max {z_max:.2e}"),
    )
}

fn pguess_envelope() -> Outcome {
    let cfg = PguessSweepConfig::default();
    let s = match sweep::sweep_pguess(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let env_err = s
        .rows
        .iter()
        .map(|r| (r.protected - r.envelope).abs())
        .fold(0.0, f64::max);
    let mut formula_err: f64 = 0.0;
    for r in &s.rows {
        let alpha = r.alpha_deg.to_radians();
        for (axis, numeric) in [
            (mdi_twirl::mdi::GOOD_AXIS, r.good_axis),
            (mdi_twirl::mdi::BAD_AXIS, r.bad_axis),
        ] {
            let spec = RotationSpec::new(axis, alpha).expect("unit axis");
            formula_err = formula_err
                .max((guess_report_analytic(&spec, false).p_guess_total - numeric).abs());
        }
    }
    let bounded = s
        .rows
        .iter()
        .all(|r| r.bad_axis - 1e-12 <= r.turbulent.mean && r.turbulent.mean <= r.good_axis + 1e-12);
    outcome(
        env_err <= 1e-9 && formula_err <= 1e-10 && bounded,
        format!(
            "envelope err {env_err:.2e}, good/bad formula err {formula_err:.2e}, turbulent bounded: {bounded}"
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    const TARGET: usize = 500;
    let mut rng = RngStream::new(SEED, 6).rng();
    // rotations inside each formula's validity region, unprotected then protected
    let mut checked = [0usize; 2];
    let mut worst: f64 = 0.0;
    while checked.iter().any(|&n| n < TARGET) {
        let spec = RotationSpec::new(
            haar_axis(&mut rng),
            rng.random_range(0.0..=std::f64::consts::PI),
        )
        .expect("haar axis is unit");
        for (slot, protected) in [false, true].into_iter().enumerate() {
            let a = guess_report_analytic(&spec, protected);
            if a.outside_validity || checked[slot] == TARGET {
                continue;
            }
            let n = match guess_report_numeric(&spec, protected) {
                Ok(n) => n,
                Err(e) => return outcome(false, e.to_string()),
            };
            worst = worst
                .max((a.t_bit - n.t_bit).abs())
                .max((a.t_phase - n.t_phase).abs())
                .max((a.p_guess_total - n.p_guess_total).abs());
            checked[slot] += 1;
        }
    }
    outcome(
        worst <= 1e-10,
        format!(
            "{} unprotected + {} protected rotations, worst deviation {worst:.2e}",
            checked[0], checked[1]
        ),
    )
}

fn protocol_convergence() -> Outcome {
    const PULSES: u64 = 220_000;
    let mut notes = Vec::new();
    let mut pass = true;
    for alpha in [0.2, 0.5, 0.8] {
        let model = NoiseModel::FixedAxisSweep {
            axis: Y_AXIS,
            angle: alpha,
        };
        let u = RotationSpec::new(Y_AXIS, alpha)
            .expect("unit axis")
            .unitary();
        for (protected, exact) in [(false, qber_exact(&u)), (true, qber_protected_exact(&u))] {
            let r = match Session::new(model, protected, SEED).and_then(|s| s.run(PULSES)) {
                Ok(r) => r,
                Err(e) => return outcome(false, e.to_string()),
            };
            let sifted = r.tally.sifted_z_pairs + r.tally.sifted_x_pairs;
            let dz = (r.qber_z.value - exact).abs() / r.qber_z.se;
            let dx = (r.qber_x.value - exact).abs() / r.qber_x.se;
            pass &= dz < 3.0 && dx < 3.0 && sifted >= 50_000;
            notes.push(format!(
                "a={alpha} {}: z {:.1}SE x {:.1}SE",
                if protected { "prot" } else { "unprot" },
                dz,
                dx
            ));
        }
    }
    let haar = NoiseModel::HaarAxis { angle: 0.6 };
    match Session::new(haar, true, SEED).and_then(|s| s.run(PULSES)) {
        Ok(r) => {
            let se = r.qber_z.se.hypot(r.qber_x.se);
            let d = (r.qber_x.value - r.qber_z.value).abs();
            pass &= d < 3.0 * se;
            notes.push(format!("haar |x-z| {:.1}SE", d / se));
        }
        Err(e) => return outcome(false, e.to_string()),
    }
    outcome(pass, notes.join(", "))
}

fn distance_model() -> Outcome {
    let cfg = DistanceSweepConfig::default();
    let s = match sweep::sweep_distance(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let base = s.rows[0];
    let baseline_ok = (base.l_max_unprotected - 257.5).abs() <= 0.5
        && (base.l_max_protected - 257.5).abs() <= 0.5;
    let dominates = s
        .rows
        .iter()
        .all(|r| r.l_max_protected >= r.l_max_unprotected);
    let unprotected_dies = s.rows.iter().find(|r| r.l_max_unprotected == 0.0);
    let protected_alive_there = unprotected_dies.is_some_and(|r| r.l_max_protected > 0.0);
    let ratio = s.crossing_ratio();
    let ratio_ok = ratio.is_some_and(|r| (1.15..=1.30).contains(&r));
    outcome(
        baseline_ok && dominates && protected_alive_there && ratio_ok,
        format!(
            "baseline {:.3} km, dominance {dominates}, sigma* {:?} / {:?}, ratio {:?}",
            base.l_max_unprotected, s.zero_crossing_unprotected, s.zero_crossing_protected, ratio
        ),
    )
}

fn run_cli(
    dir: &Path,
    tag: &str,
    args: &[&str],
    threads: Option<&str>,
) -> Result<Vec<Vec<u8>>, String> {
    let out = dir.join(format!("{tag}.csv"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mdi-twirl"));
    cmd.args(args).arg("--out").arg(&out);
    let events = dir.join(format!("{tag}-events.csv"));
    if args[0] == "run-protocol" {
        cmd.arg("--events").arg(&events);
    }
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    let status = cmd.output().map_err(|e| e.to_string())?.status;
    let expected = if args[0] == "verify-design" {
        [0, 2]
    } else {
        [0, 0]
    };
    if !status.code().is_some_and(|c| expected.contains(&c)) {
        return Err(format!("{} exited with {status}", args[0]));
    }
    let mut files = vec![std::fs::read(&out).map_err(|e| e.to_string())?];
    if args[0] == "run-protocol" {
        for mode in ["unprotected", "protected"] {
            let p = dir.join(format!("{tag}-events.{mode}.csv"));
            files.push(std::fs::read(p).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let seed = SEED.to_string();
    let cases: [&[&str]; 6] = [
        &["sweep-alpha", "--samples", "2000"],
        &["sweep-bias", "--samples", "1000"],
        &["sweep-pguess", "--samples", "500"],
        &["sweep-distance", "--samples", "2000"],
        &["verify-design"],
        &[
            "run-protocol",
            "--samples",
            "20000",
            "--noise",
            "haar",
            "--angle",
            "0.7",
        ],
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (i, case) in cases.iter().enumerate() {
        let mut args: Vec<&str> = case.to_vec();
        args.extend(["--seed", seed.as_str()]);
        // same paths both times: the event-log path is part of the recorded config
        let a = run_cli(dir.path(), &i.to_string(), &args, None);
        // a single worker must give the same bytes as the default pool
        let b = run_cli(dir.path(), &i.to_string(), &args, Some("1"));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let same = a == b;
                pass &= same;
                notes.push(format!(
                    "{} {}",
                    case[0],
                    if same { "identical" } else { "DIFFERS" }
                ));
            }
            (Err(e), _) | (_, Err(e)) => {
                pass = false;
                notes.push(e);
            }
        }
    }
    outcome(pass, notes.join(", "))
}
