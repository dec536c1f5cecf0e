#include "piano/piano.h"

#include "core/adversary.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/spectrum.hpp"
#include "core/wav.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <string>

struct piano_simulator {
    piano::SimulatorConfig config;
};

struct piano_report {
    std::string csv;
    std::string json;
};

struct piano_signal {
    piano::ReferenceSignal signal;
};

namespace {

thread_local std::string last_error;

piano_status status_for(piano::ErrorCode code) {
    using piano::ErrorCode;
    switch (code) {
        case ErrorCode::Config: return PIANO_ERR_CONFIG;
        case ErrorCode::OutOfRange: return PIANO_ERR_RANGE;
        case ErrorCode::NoRoot: return PIANO_ERR_NO_ROOT;
        case ErrorCode::Io: return PIANO_ERR_IO;
        default: return PIANO_ERR_INVALID_ARGUMENT;
    }
}

// Runs `body`, translating exceptions into status codes and the thread's last error.
template <class F>
piano_status guarded(F&& body) {
    last_error.clear();
    try {
        body();
        return PIANO_OK;
    } catch (const piano::Error& e) {
        last_error = e.what();
        return status_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
        return PIANO_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return PIANO_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return PIANO_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return PIANO_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw piano::Error(piano::ErrorCode::InvalidArgument, what);
}

std::span<const double> distances(const double* p, std::size_t n) {
    require(p != nullptr && n > 0, "at least one distance is required");
    return {p, n};
}

piano::ErrorModel to_model(const piano_error_model* m) {
    piano::ErrorModel model;
    if (m) {
        model.sigma_m = m->sigma_m;
        model.detect_range_m = m->detect_range_m;
        model.bt_range_m = m->bt_range_m;
    }
    return model;
}

template <class R>
piano_report* make_report(const R& r) {
    return new piano_report{r.to_csv(), r.to_json()};
}

piano_reject_reason to_c(piano::RejectReason r) {
    switch (r) {
        case piano::RejectReason::None: return PIANO_REASON_NONE;
        case piano::RejectReason::NotPaired: return PIANO_REASON_NOT_PAIRED;
        case piano::RejectReason::SignalNotPresent: return PIANO_REASON_SIGNAL_NOT_PRESENT;
        case piano::RejectReason::DistanceExceeded: return PIANO_REASON_DISTANCE_EXCEEDED;
    }
    return PIANO_REASON_NONE;
}

std::string transcript_csv(const piano::SessionTranscript& t) {
    std::string csv = "verdict,reason,estimated_distance_m,raw_distance_m\n";
    csv += piano::to_string(t.decision.verdict);
    csv += ',';
    csv += piano::to_string(t.decision.reason);
    csv += ',';
    if (t.decision.estimated_distance_m) csv += std::to_string(*t.decision.estimated_distance_m);
    csv += ',';
    if (t.raw_distance_m) csv += std::to_string(*t.raw_distance_m);
    csv += '\n';
    return csv;
}

}  // namespace

extern "C" {

const char* piano_version(void) { return "0.1.0"; }

const char* piano_status_message(piano_status status) {
    switch (status) {
        case PIANO_OK: return "ok";
        case PIANO_ERR_INVALID_ARGUMENT: return "invalid argument";
        case PIANO_ERR_CONFIG: return "configuration error";
        case PIANO_ERR_RANGE: return "value out of range";
        case PIANO_ERR_NO_ROOT: return "no root in bracket";
        case PIANO_ERR_IO: return "I/O error";
        case PIANO_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* piano_last_error(void) { return last_error.c_str(); }

piano_status piano_simulator_create(const char* config_json, piano_simulator** out) {
    return guarded([&] {
        require(out != nullptr, "output pointer is null");
        *out = nullptr;
        auto sim = std::make_unique<piano_simulator>();
        if (config_json) sim->config = piano::parse_config(config_json);
        *out = sim.release();
    });
}

void piano_simulator_destroy(piano_simulator* sim) { delete sim; }

piano_status piano_simulator_set_environment(piano_simulator* sim, const char* environment) {
    return guarded([&] {
        require(sim && environment, "null argument");
        try {
            sim->config.setup.environment = piano::parse_environment(environment);
        } catch (const piano::Error& e) {
            throw piano::Error(piano::ErrorCode::Config, e.what());
        }
    });
}

piano_status piano_simulator_set_wav_dump_dir(piano_simulator* sim, const char* dir) {
    return guarded([&] {
        require(sim != nullptr, "null simulator");
        sim->config.setup.wav_dump_dir = dir ? dir : "";
    });
}

piano_status piano_simulator_set_threads(piano_simulator* sim, unsigned threads) {
    return guarded([&] {
        require(sim != nullptr, "null simulator");
        sim->config.setup.threads = threads;
    });
}

const char* piano_report_csv(const piano_report* report) { return report ? report->csv.c_str() : ""; }
const char* piano_report_json(const piano_report* report) { return report ? report->json.c_str() : ""; }
void piano_report_destroy(piano_report* report) { delete report; }

piano_status piano_authenticate(piano_simulator* sim, double distance_m, uint64_t seed, piano_auth_result* result,
                                piano_report** transcript) {
    return guarded([&] {
        require(sim && result, "null argument");
        if (transcript) *transcript = nullptr;
        const auto& cfg = sim->config;
        piano::SessionResult r;
        if (distance_m > 0.0) {
            r = piano::run_session(cfg.setup, distance_m, seed);
        } else {
            if (!cfg.authenticating || !cfg.vouching)
                throw piano::Error(piano::ErrorCode::Config,
                                   "distance not given and the config has no device positions");
            piano::ChannelConfig channel = cfg.setup.channel;
            channel.noise = piano::EnvironmentNoise::preset(cfg.setup.environment);
            r = piano::run_authentication(*cfg.authenticating, *cfg.vouching, cfg.setup.policy, seed, channel,
                                          cfg.setup.session);
        }
        const auto& d = r.decision;
        result->verdict = d.verdict == piano::Verdict::Accept ? PIANO_ACCEPT : PIANO_REJECT;
        result->reason = to_c(d.reason);
        result->has_distance = r.transcript.raw_distance_m.has_value() ? 1 : 0;
        result->distance_m = d.estimated_distance_m.value_or(NAN);
        result->raw_distance_m = r.transcript.raw_distance_m.value_or(NAN);
        if (transcript) *transcript = new piano_report{transcript_csv(r.transcript), r.transcript.to_json()};
    });
}

piano_status piano_range_campaign(piano_simulator* sim, const double* distances_m, size_t count, unsigned trials,
                                  uint64_t seed, piano_report** out) {
    return guarded([&] {
        require(sim && out, "null argument");
        *out = make_report(piano::distance_error_campaign(sim->config.setup, distances(distances_m, count), trials, seed));
    });
}

piano_status piano_attack_campaign(piano_simulator* sim, const char* kind, double device_distance_m, unsigned trials,
                                   uint64_t seed, piano_report** out) {
    return guarded([&] {
        require(sim && out, "null argument");
        require(device_distance_m > 0.0, "device distance must be positive");
        auto scenario = sim->config.attack;
        if (kind) scenario.kind = piano::parse_attack_kind(kind);
        *out = make_report(piano::attack_campaign(sim->config.setup, scenario, device_distance_m, trials, seed,
                                                  sim->config.power_sweep));
    });
}

piano_status piano_detector_comparison(piano_simulator* sim, const double* distances_m, size_t count,
                                       unsigned trials, uint64_t seed, piano_report** out) {
    return guarded([&] {
        require(sim && out, "null argument");
        *out = make_report(piano::detector_comparison(sim->config.setup, distances(distances_m, count), trials, seed,
                                                      sim->config.echo));
    });
}

piano_status piano_multiuser_campaign(piano_simulator* sim, unsigned users, const double* distances_m, size_t count,
                                      unsigned trials, uint64_t seed, piano_report** out) {
    return guarded([&] {
        require(sim && out, "null argument");
        *out = make_report(
            piano::multiuser_campaign(sim->config.setup, users, distances(distances_m, count), trials, seed));
    });
}

piano_error_model piano_error_model_default(void) {
    const piano::ErrorModel m;
    return {m.sigma_m, m.detect_range_m, m.bt_range_m};
}

piano_status piano_frr_far(const piano_error_model* model, double threshold_m, double* frr, double* far_) {
    return guarded([&] {
        require(model && frr && far_, "null argument");
        const auto r = piano::frr_far_model(threshold_m, to_model(model));
        *frr = r.frr;
        *far_ = r.far;
    });
}

piano_status piano_frr_far_table(const piano_error_model* model, const double* thresholds_m, size_t count,
                                 piano_report** out) {
    return guarded([&] {
        require(model && out && thresholds_m && count > 0, "null argument");
        *out = make_report(piano::frr_far_table({thresholds_m, count}, to_model(model)));
    });
}

piano_status piano_fit_sigma(double frr_target, double threshold_m, const piano_error_model* model, double* sigma_m) {
    return guarded([&] {
        require(sigma_m != nullptr, "null argument");
        *sigma_m = piano::fit_sigma(frr_target, threshold_m, to_model(model));
    });
}

piano_status piano_guessing_probability(unsigned bins, unsigned signals, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        require(bins >= 2 && bins <= 1000, "bins must lie in [2, 1000]");
        *out = piano::guessing_success_probability(bins, signals);
    });
}

piano_status piano_signal_generate(const piano_simulator* sim, uint64_t seed, piano_signal** out) {
    return guarded([&] {
        require(sim && out, "null argument");
        const auto& session = sim->config.setup.session;
        auto rng = piano::make_rng(seed);
        auto spec = piano::sample_spec(rng, session.grid, session.signal);
        *out = new piano_signal{piano::synthesize(spec, session.signal.theta)};
    });
}

piano_status piano_signal_load(const piano_simulator* sim, const char* wav_path, const char* json_path,
                               piano_signal** out) {
    return guarded([&] {
        require(sim && wav_path && json_path && out, "null argument");
        const auto& session = sim->config.setup.session;
        *out = new piano_signal{piano::load_signal(wav_path, json_path, session.grid, session.signal)};
    });
}

piano_status piano_signal_save(const piano_signal* signal, const char* wav_path, const char* json_path) {
    return guarded([&] {
        require(signal && wav_path && json_path, "null argument");
        piano::save_signal(signal->signal, wav_path, json_path);
    });
}

size_t piano_signal_tone_count(const piano_signal* signal) { return signal ? signal->signal.spec.tone_count() : 0; }

size_t piano_signal_frequencies(const piano_signal* signal, double* buffer, size_t capacity) {
    if (!signal) return 0;
    const auto& f = signal->signal.spec.frequencies_hz;
    for (size_t i = 0; i < f.size() && i < capacity && buffer; ++i) buffer[i] = f[i];
    return f.size();
}

void piano_signal_destroy(piano_signal* signal) { delete signal; }

piano_status piano_detect_wav(const piano_simulator* sim, const piano_signal* signal, const char* recording_wav,
                              const char* trace_csv, int64_t* location) {
    return guarded([&] {
        require(sim && signal && recording_wav && location, "null argument");
        const auto& session = sim->config.setup.session;
        const auto rec = piano::read_wav(recording_wav);
        std::ofstream trace_out;
        piano::WindowTrace trace;
        if (trace_csv) {
            trace_out.open(trace_csv);
            if (!trace_out) throw piano::Error(piano::ErrorCode::Io, std::string("cannot write ") + trace_csv);
            trace_out << "index,norm_power\n";
            trace = [&](std::size_t i, const piano::NormalizedPower& p) {
                trace_out << i << ',';
                if (p.is_rejected())
                    trace_out << "-inf";
                else
                    trace_out << p.value();
                trace_out << '\n';
            };
        }
        const auto outcome = piano::detect(rec.samples, signal->signal, session.grid, session.detection, trace);
        *location = outcome.location ? static_cast<int64_t>(*outcome.location) : -1;
    });
}

}  // extern "C"
