#include "core/eval.hpp"

#include "core/error.hpp"
#include "core/random.hpp"
#include "core/wav.hpp"

#include "json.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace piano {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double integrate(const auto& f, double a, double b) {
    if (!(b > a)) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12);
}

// Integrand is flat except within a few sigma of `edge`; split there.
double integrate_split(const auto& f, double a, double b, double edge, double width) {
    double lo = std::clamp(edge - width, a, b);
    double hi = std::clamp(edge + width, a, b);
    return integrate(f, a, lo) + integrate(f, lo, hi) + integrate(f, hi, b);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::string format_distance(double d) {
    std::ostringstream os;
    os.precision(3);
    os << std::fixed << d;
    return os.str();
}

ErrorRow summarize(const std::string& label, double distance, const std::vector<std::optional<double>>& estimates) {
    ErrorRow row;
    row.label = label;
    row.distance_m = distance;
    row.trials = static_cast<unsigned>(estimates.size());
    std::vector<double> errors;
    double est_sum = 0.0;
    for (const auto& e : estimates) {
        if (!e) {
            ++row.not_present;
            continue;
        }
        errors.push_back(std::abs(*e - distance));
        est_sum += *e;
    }
    if (!errors.empty()) {
        const double n = static_cast<double>(errors.size());
        double sum = 0.0;
        for (double e : errors) sum += e;
        row.mean_abs_error_m = sum / n;
        double var = 0.0;
        for (double e : errors) var += (e - row.mean_abs_error_m) * (e - row.mean_abs_error_m);
        row.std_abs_error_m = errors.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        row.mean_estimate_m = est_sum / n;
    } else {
        row.mean_abs_error_m = std::numeric_limits<double>::quiet_NaN();
        row.std_abs_error_m = std::numeric_limits<double>::quiet_NaN();
        row.mean_estimate_m = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

void check_trials(const SimulationSetup& setup, unsigned trials) {
    if (trials < setup.min_trials)
        throw Error(ErrorCode::InvalidArgument, "campaign: " + std::to_string(trials) +
                                                    " trials per cell is below the minimum of " +
                                                    std::to_string(setup.min_trials));
}

void dump_artifacts(const SimulationSetup& setup, const SessionResult& r, const std::string& stem) {
    if (setup.wav_dump_dir.empty() || !r.recording_A) return;
    const std::filesystem::path dir(setup.wav_dump_dir);
    std::filesystem::create_directories(dir);
    write_wav(dir / (stem + "_rec_A.wav"), r.recording_A->samples, static_cast<std::uint32_t>(r.recording_A->sample_rate));
    write_wav(dir / (stem + "_rec_V.wav"), r.recording_V->samples, static_cast<std::uint32_t>(r.recording_V->sample_rate));
    save_signal(*r.signal_A, dir / (stem + "_S_A.wav"), dir / (stem + "_S_A.json"));
    save_signal(*r.signal_V, dir / (stem + "_S_V.wav"), dir / (stem + "_S_V.json"));
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

nlohmann::json json_number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

nlohmann::json trials_json(const std::vector<TrialRecord>& trials) {
    auto arr = nlohmann::json::array();
    for (const auto& t : trials) {
        nlohmann::json j{{"label", t.label}, {"distance_m", t.distance_m}, {"trial", t.trial}, {"seed", t.seed}};
        j["estimate_m"] = t.estimate_m ? nlohmann::json(*t.estimate_m) : nlohmann::json(nullptr);
        if (!t.transcript_json.empty()) j["transcript"] = nlohmann::json::parse(t.transcript_json);
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace

void ErrorModel::validate() const {
    if (!(sigma_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "error model: sigma must be positive");
    if (!(detect_range_m > 0.0 && detect_range_m < bt_range_m))
        throw Error(ErrorCode::InvalidArgument, "error model: require 0 < d_s < bluetooth range");
}

FrrFar frr_far_model(double threshold_m, const ErrorModel& model) {
    model.validate();
    const double tau = threshold_m;
    if (!(tau > 0.0 && tau < model.detect_range_m))
        throw Error(ErrorCode::OutOfRange, "frr_far_model: threshold must lie in (0, d_s)");
    const double sigma = model.sigma_m;
    const double width = 12.0 * sigma;

    auto false_reject = [&](double d) { return normal_cdf((d - tau) / sigma); };
    auto false_accept = [&](double d) { return normal_cdf((tau - d) / sigma); };

    FrrFar out;
    out.frr = integrate_split(false_reject, 0.0, tau, tau, width) / tau;
    // Beyond d_s the signal is not present and every attempt is rejected.
    out.far = integrate_split(false_accept, tau, model.detect_range_m, tau, width) / (model.bt_range_m - tau);
    return out;
}

double fit_sigma(double frr_target, double threshold_m, ErrorModel model) {
    if (!(frr_target > 0.0 && frr_target < 1.0))
        throw Error(ErrorCode::InvalidArgument, "fit_sigma: FRR target must lie in (0, 1)");
    constexpr double lo = 1e-4, hi = 1.0;
    auto residual = [&](double sigma) {
        model.sigma_m = sigma;
        return frr_far_model(threshold_m, model).frr - frr_target;
    };
    const double r_lo = residual(lo), r_hi = residual(hi);
    if (r_lo * r_hi > 0.0)
        throw Error(ErrorCode::NoRoot, "fit_sigma: no sigma in (1e-4, 1) reaches FRR " + std::to_string(frr_target));
    boost::math::tools::eps_tolerance<double> tol(40);
    const auto [a, b] = boost::math::tools::bisect(residual, lo, hi, tol);
    return 0.5 * (a + b);
}

FrrFarTable frr_far_table(std::span<const double> thresholds, const ErrorModel& model) {
    FrrFarTable table;
    table.model = model;
    for (double t : thresholds) {
        const auto r = frr_far_model(t, model);
        table.rows.push_back({t, r.frr, r.far});
    }
    return table;
}

std::string FrrFarTable::to_csv() const {
    std::ostringstream os;
    os << "threshold_m,frr,far\n";
    for (const auto& r : rows) os << csv_number(r.threshold_m) << ',' << csv_number(r.frr) << ',' << csv_number(r.far) << '\n';
    return os.str();
}

std::string FrrFarTable::to_json() const {
    nlohmann::json j;
    j["model"] = {{"sigma_m", model.sigma_m}, {"detect_range_m", model.detect_range_m}, {"bt_range_m", model.bt_range_m}};
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back({{"threshold_m", r.threshold_m}, {"frr", r.frr}, {"far", r.far}});
    j["rows"] = arr;
    return j.dump(2);
}

SessionResult run_session(const SimulationSetup& setup, double distance_m, std::uint64_t seed,
                          const RunOptions& options) {
    DeviceConfig a{"authenticating", {0.0, 0.0, 0.0}, setup.auth_sample_rate};
    DeviceConfig v{"vouching", {distance_m, 0.0, 0.0}, setup.vouch_sample_rate};
    ChannelConfig channel = setup.channel;
    channel.noise = EnvironmentNoise::preset(setup.environment);
    if (channel.wall_attenuation_db > 0.0 && !channel.wall_x) channel.wall_x = distance_m / 2.0;
    RunOptions opts = options;
    if (!setup.wav_dump_dir.empty()) opts.keep_artifacts = true;
    return run_authentication(a, v, setup.policy, seed, channel, setup.session, opts);
}

const ErrorRow* ExperimentReport::find(const std::string& label, double distance_m) const {
    for (const auto& r : rows)
        if (r.label == label && std::abs(r.distance_m - distance_m) < 1e-9) return &r;
    return nullptr;
}

unsigned ExperimentReport::total_not_present() const {
    unsigned n = 0;
    for (const auto& r : rows) n += r.not_present;
    return n;
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream os;
    os << "label,distance_m,trials,not_present,mean_abs_error_m,std_abs_error_m,mean_estimate_m\n";
    for (const auto& r : rows)
        os << r.label << ',' << csv_number(r.distance_m) << ',' << r.trials << ',' << r.not_present << ','
           << csv_number(r.mean_abs_error_m) << ',' << csv_number(r.std_abs_error_m) << ','
           << csv_number(r.mean_estimate_m) << '\n';
    return os.str();
}

std::string ExperimentReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"label", r.label},
                       {"distance_m", r.distance_m},
                       {"trials", r.trials},
                       {"not_present", r.not_present},
                       {"mean_abs_error_m", json_number(r.mean_abs_error_m)},
                       {"std_abs_error_m", json_number(r.std_abs_error_m)},
                       {"mean_estimate_m", json_number(r.mean_estimate_m)}});
    j["rows"] = arr;
    j["trials"] = trials_json(trials);
    return j.dump(2);
}

namespace {

// Runs `trials` sessions per distance and summarizes them under `label`.
void run_cells(const SimulationSetup& setup, std::span<const double> distances, unsigned trials,
               std::uint64_t seed, const std::string& label, ExperimentReport& report,
               const std::function<RunOptions(std::uint64_t trial_seed)>& options_for = {}) {
    const std::size_t total = distances.size() * trials;
    std::vector<SessionResult> results(total);
    parallel_for(total, setup.threads, [&](std::size_t i) {
        const std::uint64_t trial_seed = derive_seed(seed, i);
        const RunOptions opts = options_for ? options_for(trial_seed) : RunOptions{};
        results[i] = run_session(setup, distances[i / trials], trial_seed, opts);
        dump_artifacts(setup, results[i], label + "_d" + format_distance(distances[i / trials]) + "_t" +
                                              std::to_string(i % trials));
        results[i].recording_A.reset();
        results[i].recording_V.reset();
    });
    for (std::size_t c = 0; c < distances.size(); ++c) {
        std::vector<std::optional<double>> estimates;
        for (unsigned t = 0; t < trials; ++t) {
            const auto& r = results[c * trials + t];
            estimates.push_back(r.transcript.raw_distance_m);
            report.trials.push_back({label, distances[c], t, r.transcript.seed, r.transcript.raw_distance_m,
                                     r.transcript.to_json()});
        }
        report.rows.push_back(summarize(label, distances[c], estimates));
    }
}

SimulationSetup logging_only(SimulationSetup setup) {
    setup.policy.enforce_threshold = false;
    return setup;
}

}  // namespace

ExperimentReport distance_error_campaign(const SimulationSetup& setup, std::span<const double> distances,
                                         unsigned trials, std::uint64_t seed) {
    check_trials(setup, trials);
    for (double d : distances)
        if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "distance_error_campaign: distances must be positive");
    ExperimentReport report;
    report.name = "range";
    run_cells(logging_only(setup), distances, trials, seed, to_string(setup.environment), report);
    return report;
}

std::vector<double> default_power_sweep(const SimulationSetup& setup, std::size_t count) {
    const auto& grid = setup.session.grid;
    CandidateSet half(grid.size() / 2);
    for (std::size_t i = 0; i < half.size(); ++i) half[i] = 2 * i;
    const auto ref = synthesize(make_spec(grid, half, setup.session.signal), setup.session.signal.theta);
    const auto& p = setup.session.detection;
    const double lo = p.beta_ratio * ref.nominal_power / 4.0;
    const double hi = 4.0 * p.alpha * ref.nominal_power;
    std::vector<double> sweep(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
        sweep[i] = lo * std::pow(hi / lo, u);
    }
    return sweep;
}

unsigned AttackReport::total_accepted() const {
    unsigned n = 0;
    for (const auto& r : rows) n += r.accepted;
    return n;
}

std::string AttackReport::to_csv() const {
    std::ostringstream os;
    os << "label,per_tone_power,trials,accepted,not_paired,not_present,distance_exceeded\n";
    for (const auto& r : rows)
        os << r.label << ',' << csv_number(r.per_tone_power) << ',' << r.trials << ',' << r.accepted << ','
           << r.not_paired << ',' << r.not_present << ',' << r.distance_exceeded << '\n';
    return os.str();
}

std::string AttackReport::to_json() const {
    nlohmann::json j;
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"label", r.label},
                       {"per_tone_power", r.per_tone_power},
                       {"trials", r.trials},
                       {"accepted", r.accepted},
                       {"not_paired", r.not_paired},
                       {"not_present", r.not_present},
                       {"distance_exceeded", r.distance_exceeded}});
    j["rows"] = arr;
    j["trials"] = trials_json(trials);
    return j.dump(2);
}

AttackReport attack_campaign(const SimulationSetup& setup, const AttackScenario& scenario, double device_distance_m,
                             unsigned trials, std::uint64_t seed, std::vector<double> power_sweep) {
    check_trials(setup, trials);
    if (scenario.kind == AttackKind::AllFrequency && power_sweep.empty()) {
        power_sweep = scenario.per_tone_power > 0.0 ? std::vector<double>{scenario.per_tone_power}
                                                    : default_power_sweep(setup);
    }
    if (scenario.kind != AttackKind::AllFrequency) power_sweep = {0.0};

    std::vector<SessionResult> results(trials);
    std::vector<std::size_t> variant(trials);
    parallel_for(trials, setup.threads, [&](std::size_t i) {
        const std::uint64_t trial_seed = derive_seed(seed, i);
        AttackScenario s = scenario;
        variant[i] = i % power_sweep.size();
        s.per_tone_power = power_sweep[variant[i]];
        s.guess_seed = derive_seed(trial_seed, 0xa77ac4);
        RunOptions opts;
        opts.hook = attack_hook(s, setup.channel, setup.session.grid, setup.session.signal);
        results[i] = run_session(setup, device_distance_m, trial_seed, opts);
        results[i].recording_A.reset();
        results[i].recording_V.reset();
    });

    AttackReport report;
    for (std::size_t v = 0; v < power_sweep.size(); ++v) {
        AttackRow row;
        row.label = to_string(scenario.kind);
        row.per_tone_power = power_sweep[v];
        report.rows.push_back(row);
    }
    for (unsigned i = 0; i < trials; ++i) {
        auto& row = report.rows[variant[i]];
        const auto& d = results[i].decision;
        ++row.trials;
        if (d.verdict == Verdict::Accept) ++row.accepted;
        switch (d.reason) {
            case RejectReason::NotPaired: ++row.not_paired; break;
            case RejectReason::SignalNotPresent: ++row.not_present; break;
            case RejectReason::DistanceExceeded: ++row.distance_exceeded; break;
            case RejectReason::None: break;
        }
        report.trials.push_back({row.label, device_distance_m, i, results[i].transcript.seed,
                                 results[i].transcript.raw_distance_m, results[i].transcript.to_json()});
    }
    return report;
}

std::optional<double> run_echo_secure(const SimulationSetup& setup, double distance_m, std::uint64_t seed,
                                      const EchoConfig& echo) {
    const auto& session = setup.session;
    ChannelConfig channel = setup.channel;
    channel.noise = EnvironmentNoise::preset(setup.environment, derive_seed(seed, 3));
    if (channel.wall_attenuation_db > 0.0 && !channel.wall_x) channel.wall_x = distance_m / 2.0;
    const double rate = channel.scene_rate;

    Rng rng = make_rng(derive_seed(seed, 1));
    const auto signal = synthesize(sample_spec(rng, session.grid, session.signal), session.signal.theta);
    std::normal_distribution<double> processing(echo.mean_processing_s, echo.sigma_processing_s);
    const double delay_s = echo.sigma_processing_s > 0.0 ? std::max(0.0, processing(rng)) : echo.mean_processing_s;

    const double request = std::round(session.first_playback_s * rate);
    AcousticScene scene;
    scene.seed = derive_seed(seed, 2);
    scene.duration = static_cast<std::size_t>(std::llround(session.recording_s * rate));
    scene.emissions.push_back({"vouching", std::vector<double>(signal.samples.begin(), signal.samples.end()),
                               request + delay_s * rate, {distance_m, 0.0, 0.0}});
    scene.recorders.push_back({"authenticating", {0.0, 0.0, 0.0}, setup.auth_sample_rate, 0.0,
                               static_cast<std::size_t>(std::llround(session.recording_s * setup.auth_sample_rate))});
    const auto rec = record(scene, "authenticating", channel);
    const auto outcome = detect(rec.samples, signal, session.grid, session.detection);
    if (!outcome.location) return std::nullopt;
    const double request_local = request * setup.auth_sample_rate / rate;
    const double elapsed = (static_cast<double>(*outcome.location) - request_local) / setup.auth_sample_rate;
    return channel.speed_of_sound * (elapsed - echo.mean_processing_s);
}

ExperimentReport detector_comparison(const SimulationSetup& setup, std::span<const double> distances,
                                     unsigned trials, std::uint64_t seed, const EchoConfig& echo) {
    check_trials(setup, trials);
    ExperimentReport report;
    report.name = "compare";
    const auto base = logging_only(setup);
    run_cells(base, distances, trials, seed, "action", report);

    auto cc = base;
    cc.session.detector = DetectorKind::CrossCorrelation;
    run_cells(cc, distances, trials, seed, "action-cc", report);

    const std::size_t total = distances.size() * trials;
    std::vector<std::optional<double>> echo_estimates(total);
    parallel_for(total, setup.threads, [&](std::size_t i) {
        echo_estimates[i] = run_echo_secure(base, distances[i / trials], derive_seed(seed, i), echo);
    });
    for (std::size_t c = 0; c < distances.size(); ++c) {
        std::vector<std::optional<double>> cell(echo_estimates.begin() + c * trials,
                                                echo_estimates.begin() + (c + 1) * trials);
        for (unsigned t = 0; t < trials; ++t)
            report.trials.push_back({"echo-secure", distances[c], t, derive_seed(seed, c * trials + t), cell[t], {}});
        report.rows.push_back(summarize("echo-secure", distances[c], cell));
    }
    return report;
}

ExperimentReport multiuser_campaign(const SimulationSetup& setup, unsigned users, std::span<const double> distances,
                                    unsigned trials, std::uint64_t seed) {
    check_trials(setup, trials);
    if (users == 0) throw Error(ErrorCode::InvalidArgument, "multiuser_campaign: need at least one user");
    const auto base = logging_only(setup);
    ExperimentReport report;
    report.name = "multiuser";
    if (users == 1) {
        run_cells(base, distances, trials, seed, to_string(setup.environment), report);
        return report;
    }

    const auto& session = setup.session;
    auto options_for = [&](std::uint64_t trial_seed) {
        RunOptions opts;
        opts.hook = [&session, users, trial_seed](AcousticScene& scene, const SessionTiming& timing) {
            // Separate stream: the measured pair's own draws are unchanged.
            Rng rng = make_rng(derive_seed(trial_seed, 0x5eed0f));
            std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
            std::uniform_real_distribution<double> radius(2.0, 4.0);
            std::uniform_real_distribution<double> spread(0.5, 2.0);
            const double length = static_cast<double>(session.signal.length);
            const double gap = timing.second_playback - timing.first_playback;
            std::uniform_real_distribution<double> start(-length - gap, static_cast<double>(timing.duration));
            const Vec3 centre{(timing.authenticating.x + timing.vouching.x) / 2.0, 0.0, 0.0};
            for (unsigned u = 1; u < users; ++u) {
                const double th = angle(rng), r = radius(rng), sep = spread(rng), phi = angle(rng);
                const Vec3 mid{centre.x + r * std::cos(th), r * std::sin(th), 0.0};
                const Vec3 p1{mid.x - sep / 2.0 * std::cos(phi), mid.y - sep / 2.0 * std::sin(phi), 0.0};
                const Vec3 p2{mid.x + sep / 2.0 * std::cos(phi), mid.y + sep / 2.0 * std::sin(phi), 0.0};
                const auto s1 = synthesize(sample_spec(rng, session.grid, session.signal), session.signal.theta);
                const auto s2 = synthesize(sample_spec(rng, session.grid, session.signal), session.signal.theta);
                const double t1 = std::round(start(rng));
                const std::string id = "user" + std::to_string(u);
                scene.emissions.push_back({id + "_a", std::vector<double>(s1.samples.begin(), s1.samples.end()), t1, p1});
                scene.emissions.push_back(
                    {id + "_v", std::vector<double>(s2.samples.begin(), s2.samples.end()), t1 + gap, p2});
            }
        };
        return opts;
    };
    run_cells(base, distances, trials, seed, "multiuser", report, options_for);
    return report;
}

}  // namespace piano
