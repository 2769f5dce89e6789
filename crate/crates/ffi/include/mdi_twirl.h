#ifndef MDI_TWIRL_H
#define MDI_TWIRL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MdiStatus {
  MDI_STATUS_OK = 0,
  MDI_STATUS_NULL_POINTER = 1,
  MDI_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A matrix failed a unitarity, Hermiticity or density check.
   */
  MDI_STATUS_NUMERICAL = 3,
  MDI_STATUS_IO = 4,
  MDI_STATUS_PANIC = 5,
} MdiStatus;

typedef enum MdiNoiseKind {
  /**
   * Same rotation on every pulse: `axis`, `angle`.
   */
  MDI_NOISE_KIND_FIXED_AXIS_SWEEP = 0,
  /**
   * Cardinal-axis bias with Gaussian jitter: `axis` (must be x, y or z),
   * `bias`, `jitter_sigma`.
   */
  MDI_NOISE_KIND_FIXED_AXIS_BIAS = 1,
  /**
   * Fixed `angle` about a uniformly random axis.
   */
  MDI_NOISE_KIND_HAAR_AXIS = 2,
  /**
   * Two-arm drift about y with spread `sigma`.
   */
  MDI_NOISE_KIND_TWO_ARM_GAUSSIAN = 3,
} MdiNoiseKind;

/**
 * Opaque protocol session.
 */
typedef struct MdiSession MdiSession;

typedef struct MdiLinkParams {
  double beta;
  double mu;
  double y0;
  double threshold;
} MdiLinkParams;

typedef struct MdiGuessReport {
  double t_bit;
  double t_phase;
  double p_guess_bit;
  double p_guess_phase;
  double p_guess_total;
  bool outside_validity;
} MdiGuessReport;

typedef struct MdiDesignReport {
  bool certified;
  double worst_deviation;
  double frame_potential;
  /**
   * Cells of the brute-force look-up table that match the published one.
   */
  uint32_t table_matched;
  uint32_t table_total;
} MdiDesignReport;

/**
 * Channel model; fields not used by `kind` are ignored.
 */
typedef struct MdiNoise {
  enum MdiNoiseKind kind;
  double axis[3];
  double angle;
  double bias;
  double jitter_sigma;
  double sigma;
} MdiNoise;

typedef struct MdiSessionResult {
  uint64_t pulses;
  uint64_t sifted_z;
  uint64_t errors_z;
  uint64_t sifted_x;
  uint64_t errors_x;
  uint64_t discarded;
  uint64_t no_coincidence;
  double qber_z;
  double se_z;
  double qber_x;
  double se_x;
} MdiSessionResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; static storage.
 */
const char *mdi_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t mdi_last_error(char *buf, size_t len);

/**
 * Default link parameters: 0.2 dB/km, 0.5 photons, 1e-6 dark counts, 11%.
 */
struct MdiLinkParams mdi_link_params_default(void);

/**
 * Z-basis QBER of a relative rotation, optionally twirled.
 *
 * # Safety
 * `axis` must point to three doubles; `out` must be valid for writes.
 */
enum MdiStatus mdi_qber(const double *axis, double angle, bool protected_, double *out);

/**
 * Depolarization parameter of the twirled channel.
 *
 * # Safety
 * As for [`mdi_qber`].
 */
enum MdiStatus mdi_depolarization_eta(const double *axis, double angle, double *out);

/**
 * Trace distances and guessing probabilities, from density matrices when
 * `numeric` and from the closed forms otherwise.
 *
 * # Safety
 * As for [`mdi_qber`].
 */
enum MdiStatus mdi_guess_report(const double *axis,
                                double angle,
                                bool protected_,
                                bool numeric,
                                struct MdiGuessReport *out);

/**
 * Total QBER after `l` km for intrinsic error `e_int`.
 *
 * # Safety
 * `params` must be readable; `out` must be valid for writes.
 */
enum MdiStatus mdi_total_qber(const struct MdiLinkParams *params,
                              double l,
                              double e_int,
                              double *out);

/**
 * Maximum secure distance in km for intrinsic error `e_int`.
 *
 * # Safety
 * As for [`mdi_total_qber`].
 */
enum MdiStatus mdi_max_secure_distance(const struct MdiLinkParams *params,
                                       double e_int,
                                       double *out);

/**
 * Monte Carlo intrinsic error under two-arm drift; `samples` ≥ 1000.
 *
 * # Safety
 * `mean` and `se` must be valid for writes.
 */
enum MdiStatus mdi_intrinsic_error(double sigma,
                                   bool protected_,
                                   size_t samples,
                                   uint64_t seed,
                                   double *mean,
                                   double *se);

/**
 * Certifies the reference design over `trials` random pairs and compares
 * its brute-force look-up table with the published one.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum MdiStatus mdi_verify_design(size_t trials,
                                 double tol,
                                 uint64_t seed,
                                 struct MdiDesignReport *out);

/**
 * Creates a session; release it with [`mdi_session_free`].
 *
 * # Safety
 * `noise` must be readable; `out` must be valid for writes.
 */
enum MdiStatus mdi_session_new(const struct MdiNoise *noise,
                               bool protected_,
                               uint64_t seed,
                               struct MdiSession **out);

/**
 * Simulates pulses `0..pulses`; deterministic for a given session.
 *
 * # Safety
 * `session` must come from [`mdi_session_new`] and not be freed; `out`
 * must be valid for writes.
 */
enum MdiStatus mdi_session_run(const struct MdiSession *session,
                               uint64_t pulses,
                               struct MdiSessionResult *out);

/**
 * Releases a session. Null is ignored.
 *
 * # Safety
 * `session` must be null or come from [`mdi_session_new`], freed once.
 */
void mdi_session_free(struct MdiSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDI_TWIRL_H */
