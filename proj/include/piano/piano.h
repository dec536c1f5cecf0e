#ifndef PIANO_PIANO_H
#define PIANO_PIANO_H

/*
 * C interface to the acoustic proximity-authentication simulator.
 *
 * Every fallible call returns a piano_status. On failure a description of the
 * most recent error on the calling thread is available from piano_last_error().
 * Handles are opaque and must be released with their matching _destroy call.
 * Strings returned by the library stay valid until the owning handle is
 * destroyed.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PIANO_BUILDING)
#    define PIANO_API __declspec(dllexport)
#  else
#    define PIANO_API __declspec(dllimport)
#  endif
#else
#  define PIANO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum piano_status {
    PIANO_OK = 0,
    PIANO_ERR_INVALID_ARGUMENT = 1,
    PIANO_ERR_CONFIG = 2,
    PIANO_ERR_RANGE = 3,
    PIANO_ERR_NO_ROOT = 4,
    PIANO_ERR_IO = 5,
    PIANO_ERR_INTERNAL = 6
} piano_status;

PIANO_API const char* piano_version(void);
PIANO_API const char* piano_status_message(piano_status status);
/* Thread-local; empty string if the last call on this thread succeeded. */
PIANO_API const char* piano_last_error(void);

/* ---- Simulator ---------------------------------------------------------- */

typedef struct piano_simulator piano_simulator;

/*
 * config_json may be NULL or "{}" for defaults. Unknown keys and invalid
 * values fail with PIANO_ERR_CONFIG. See README.md for the schema.
 */
PIANO_API piano_status piano_simulator_create(const char* config_json, piano_simulator** out);
PIANO_API void piano_simulator_destroy(piano_simulator* sim);

/* One of "silent", "office", "home", "street", "restaurant". */
PIANO_API piano_status piano_simulator_set_environment(piano_simulator* sim, const char* environment);
/* NULL or "" disables dumping. Campaigns then write recordings and signals as WAV. */
PIANO_API piano_status piano_simulator_set_wav_dump_dir(piano_simulator* sim, const char* dir);
/* 0 selects the hardware concurrency. Results do not depend on this value. */
PIANO_API piano_status piano_simulator_set_threads(piano_simulator* sim, unsigned threads);

/* ---- Reports ------------------------------------------------------------ */

typedef struct piano_report piano_report;

PIANO_API const char* piano_report_csv(const piano_report* report);
PIANO_API const char* piano_report_json(const piano_report* report);
PIANO_API void piano_report_destroy(piano_report* report);

/* ---- Authentication ----------------------------------------------------- */

typedef enum piano_verdict { PIANO_ACCEPT = 0, PIANO_REJECT = 1 } piano_verdict;

typedef enum piano_reject_reason {
    PIANO_REASON_NONE = 0,
    PIANO_REASON_NOT_PAIRED = 1,
    PIANO_REASON_SIGNAL_NOT_PRESENT = 2,
    PIANO_REASON_DISTANCE_EXCEEDED = 3
} piano_reject_reason;

typedef struct piano_auth_result {
    piano_verdict verdict;
    piano_reject_reason reason;
    int has_distance;      /* nonzero when both signals were located */
    double distance_m;     /* clamped at 0 */
    double raw_distance_m; /* may be negative */
} piano_auth_result;

/*
 * One session with the devices distance_m apart along a line. If distance_m
 * is not positive the device positions from the config's "devices" section
 * are used instead. transcript may be NULL; otherwise it receives a report
 * whose JSON is the session transcript.
 */
PIANO_API piano_status piano_authenticate(piano_simulator* sim, double distance_m, uint64_t seed,
                                          piano_auth_result* result, piano_report** transcript);

/* ---- Campaigns ---------------------------------------------------------- */

PIANO_API piano_status piano_range_campaign(piano_simulator* sim, const double* distances_m,
                                            size_t count, unsigned trials, uint64_t seed,
                                            piano_report** out);

/* kind: "zero_effort", "guessing_replay" or "all_frequency". Other attack
 * parameters come from the config's "attack" section. */
PIANO_API piano_status piano_attack_campaign(piano_simulator* sim, const char* kind,
                                             double device_distance_m, unsigned trials,
                                             uint64_t seed, piano_report** out);

/* Rows labelled "action", "action-cc" and "echo-secure". */
PIANO_API piano_status piano_detector_comparison(piano_simulator* sim, const double* distances_m,
                                                 size_t count, unsigned trials, uint64_t seed,
                                                 piano_report** out);

PIANO_API piano_status piano_multiuser_campaign(piano_simulator* sim, unsigned users,
                                                const double* distances_m, size_t count,
                                                unsigned trials, uint64_t seed, piano_report** out);

/* ---- Error model -------------------------------------------------------- */

typedef struct piano_error_model {
    double sigma_m;
    double detect_range_m;
    double bt_range_m;
} piano_error_model;

PIANO_API piano_error_model piano_error_model_default(void);

PIANO_API piano_status piano_frr_far(const piano_error_model* model, double threshold_m,
                                     double* frr, double* far_);
PIANO_API piano_status piano_frr_far_table(const piano_error_model* model,
                                           const double* thresholds_m, size_t count,
                                           piano_report** out);
/* model may be NULL; only its ranges are used. */
PIANO_API piano_status piano_fit_sigma(double frr_target, double threshold_m,
                                       const piano_error_model* model, double* sigma_m);

PIANO_API piano_status piano_guessing_probability(unsigned bins, unsigned signals, double* out);

/* ---- Reference signals -------------------------------------------------- */

typedef struct piano_signal piano_signal;

PIANO_API piano_status piano_signal_generate(const piano_simulator* sim, uint64_t seed,
                                             piano_signal** out);
PIANO_API piano_status piano_signal_load(const piano_simulator* sim, const char* wav_path,
                                         const char* json_path, piano_signal** out);
PIANO_API piano_status piano_signal_save(const piano_signal* signal, const char* wav_path,
                                         const char* json_path);
PIANO_API size_t piano_signal_tone_count(const piano_signal* signal);
/* Copies up to capacity frequencies; returns the number of tones. */
PIANO_API size_t piano_signal_frequencies(const piano_signal* signal, double* buffer, size_t capacity);
PIANO_API void piano_signal_destroy(piano_signal* signal);

/*
 * Locates signal in a mono 16-bit WAV recording. *location is -1 when the
 * signal is not present. trace_csv may be NULL; otherwise every evaluated
 * window is written to it as "index,norm_power".
 */
PIANO_API piano_status piano_detect_wav(const piano_simulator* sim, const piano_signal* signal,
                                        const char* recording_wav, const char* trace_csv,
                                        int64_t* location);

#ifdef __cplusplus
}
#endif

#endif
