#pragma once

// Experiment harness: ranging-error campaigns, the Gaussian FRR/FAR model,
// attack campaigns, detector comparison and multi-user interference.

#include "core/adversary.hpp"
#include "core/channel.hpp"
#include "core/protocol.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace piano {

struct ErrorModel {
    double sigma_m = 0.0702;
    double detect_range_m = 2.5;  // d_s
    double bt_range_m = 10.0;

    void validate() const;
};

struct FrrFar {
    double frr = 0.0;
    double far = 0.0;
};

// FRR = mean over d in (0, tau] of Pr[N(d, sigma) > tau];
// FAR = mean over d in (tau, bt_range] of Pr[N(d, sigma) <= tau], zero for d >= d_s.
FrrFar frr_far_model(double threshold_m, const ErrorModel& model);

// sigma such that the model's FRR at `threshold_m` equals `frr_target`.
double fit_sigma(double frr_target, double threshold_m, ErrorModel model = {});

struct FrrFarRow {
    double threshold_m = 0.0;
    double frr = 0.0;
    double far = 0.0;
};

struct FrrFarTable {
    ErrorModel model;
    std::vector<FrrFarRow> rows;

    std::string to_csv() const;
    std::string to_json() const;
};

FrrFarTable frr_far_table(std::span<const double> thresholds, const ErrorModel& model);

// Everything needed to run simulated sessions.
struct SimulationSetup {
    ChannelConfig channel;
    SessionConfig session;
    AuthPolicy policy;
    Environment environment = Environment::Office;
    double auth_sample_rate = 44100.0;
    double vouch_sample_rate = 44100.0;
    unsigned min_trials = 10;
    unsigned threads = 0;  // 0: hardware concurrency
    std::string wav_dump_dir;  // empty: no dumps
};

// Sessions with the authenticating device at the origin and the vouching
// device `distance_m` away along x (a configured wall sits at the midpoint).
SessionResult run_session(const SimulationSetup& setup, double distance_m, std::uint64_t seed,
                          const RunOptions& options = {});

struct ErrorRow {
    std::string label;
    double distance_m = 0.0;
    unsigned trials = 0;
    unsigned not_present = 0;
    double mean_abs_error_m = 0.0;  // over trials with an estimate
    double std_abs_error_m = 0.0;
    double mean_estimate_m = 0.0;
};

struct TrialRecord {
    std::string label;
    double distance_m = 0.0;
    unsigned trial = 0;
    std::uint64_t seed = 0;
    std::optional<double> estimate_m;
    std::string transcript_json;  // empty for baselines without a transcript
};

struct ExperimentReport {
    std::string name;
    std::vector<ErrorRow> rows;
    std::vector<TrialRecord> trials;

    const ErrorRow* find(const std::string& label, double distance_m) const;
    unsigned total_not_present() const;
    std::string to_csv() const;
    std::string to_json() const;
};

ExperimentReport distance_error_campaign(const SimulationSetup& setup, std::span<const double> distances,
                                         unsigned trials, std::uint64_t seed);

struct AttackRow {
    std::string label;
    double per_tone_power = 0.0;
    unsigned trials = 0;
    unsigned accepted = 0;
    unsigned not_paired = 0;
    unsigned not_present = 0;
    unsigned distance_exceeded = 0;
};

struct AttackReport {
    std::vector<AttackRow> rows;
    std::vector<TrialRecord> trials;

    unsigned total_accepted() const;
    std::string to_csv() const;
    std::string to_json() const;
};

// Runs `trials` sessions with the attacker injected; legitimate devices are
// `device_distance_m` apart. AllFrequency trials cycle through `power_sweep`
// (defaults to six log-spaced values over [beta/4, 4 alpha R_f]).
AttackReport attack_campaign(const SimulationSetup& setup, const AttackScenario& scenario,
                             double device_distance_m, unsigned trials, std::uint64_t seed,
                             std::vector<double> power_sweep = {});

// Default P_a sweep relative to the R_f of a reference signal with N/2 tones.
std::vector<double> default_power_sweep(const SimulationSetup& setup, std::size_t count = 6);

struct EchoConfig {
    double mean_processing_s = 0.1;
    double sigma_processing_s = 0.02;
};

// One-way baseline: the vouching device answers a request after a random
// processing delay; distance = s * (elapsed - mean delay). nullopt if not detected.
std::optional<double> run_echo_secure(const SimulationSetup& setup, double distance_m, std::uint64_t seed,
                                      const EchoConfig& echo);

// Rows labelled "action", "action-cc" and "echo-secure" per distance.
ExperimentReport detector_comparison(const SimulationSetup& setup, std::span<const double> distances,
                                     unsigned trials, std::uint64_t seed, const EchoConfig& echo = {});

// `users` - 1 additional device pairs run their own sessions at random times
// and positions around the measured pair.
ExperimentReport multiuser_campaign(const SimulationSetup& setup, unsigned users,
                                    std::span<const double> distances, unsigned trials, std::uint64_t seed);

}  // namespace piano
