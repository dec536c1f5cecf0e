// Command-line front end; talks to the simulator only through the C API.

#include "piano/piano.h"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
    std::uint64_t seed = 1;
    std::string env;
    std::string config_path;
    std::string out = "csv";
    std::string wav_dump;
    unsigned threads = 0;
};

struct CliError {
    int exit_code;
    std::string message;
};

void check(piano_status s) {
    if (s == PIANO_OK) return;
    const int code = s == PIANO_ERR_CONFIG ? kExitConfig : kExitFailure;
    std::string msg = piano_status_message(s);
    if (*piano_last_error()) msg += std::string(": ") + piano_last_error();
    throw CliError{code, msg};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError{kExitConfig, "cannot read config file " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Owns a simulator built from the common flags.
class Simulator {
public:
    explicit Simulator(const Common& c) {
        const std::string json = c.config_path.empty() ? std::string() : read_file(c.config_path);
        check(piano_simulator_create(json.empty() ? nullptr : json.c_str(), &sim_));
        if (!c.env.empty()) check(piano_simulator_set_environment(sim_, c.env.c_str()));
        if (!c.wav_dump.empty()) check(piano_simulator_set_wav_dump_dir(sim_, c.wav_dump.c_str()));
        check(piano_simulator_set_threads(sim_, c.threads));
    }
    ~Simulator() { piano_simulator_destroy(sim_); }
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    piano_simulator* get() const { return sim_; }

private:
    piano_simulator* sim_ = nullptr;
};

class Report {
public:
    ~Report() { piano_report_destroy(report_); }
    piano_report** out() { return &report_; }
    void print(const std::string& format) const {
        std::cout << (format == "json" ? piano_report_json(report_) : piano_report_csv(report_));
        if (format == "json") std::cout << '\n';
    }

private:
    piano_report* report_ = nullptr;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--seed", c.seed, "Campaign seed");
    app->add_option("--env", c.env, "Noise environment")
        ->check(CLI::IsMember({"silent", "office", "home", "street", "restaurant"}));
    app->add_option("--config", c.config_path, "JSON configuration file");
    app->add_option("--out", c.out, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--wav-dump", c.wav_dump, "Directory for recordings and signals");
    app->add_option("--threads", c.threads, "Worker threads (0: all cores)");
}

std::vector<double> default_distances() { return {0.5, 1.0, 1.5, 2.0}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acoustic proximity authentication simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", piano_version());

    Common common;
    std::vector<double> dists = default_distances();
    unsigned trials = 10;

    auto* range = app.add_subcommand("range", "Ranging error per distance");
    add_common(range, common);
    range->add_option("--distances", dists, "Distances in metres");
    range->add_option("--trials", trials, "Trials per distance");

    double auth_distance = 0.5;
    auto* auth = app.add_subcommand("auth", "Run one authentication session and print its transcript");
    add_common(auth, common);
    auth->add_option("--distance", auth_distance, "Device separation in metres (<= 0: use config positions)");

    std::vector<double> thresholds{0.5, 1.0, 1.5, 2.0};
    double sigma = piano_error_model_default().sigma_m;
    double detect_range = piano_error_model_default().detect_range_m;
    double bt_range = piano_error_model_default().bt_range_m;
    auto* frrfar = app.add_subcommand("frrfar", "Gaussian FRR/FAR model table");
    add_common(frrfar, common);
    frrfar->add_option("--thresholds", thresholds, "Thresholds in metres");
    frrfar->add_option("--sigma", sigma, "Ranging error standard deviation in metres");
    frrfar->add_option("--detect-range", detect_range, "Detection range d_s in metres");
    frrfar->add_option("--bt-range", bt_range, "Pairing range in metres");

    double frr_target = 0.028;
    double fit_threshold = 1.0;
    auto* fit = app.add_subcommand("fit-sigma", "Fit sigma to an observed FRR at one threshold");
    add_common(fit, common);
    fit->add_option("--frr", frr_target, "Target FRR as a fraction");
    fit->add_option("--threshold", fit_threshold, "Threshold in metres");
    fit->add_option("--detect-range", detect_range, "Detection range d_s in metres");
    fit->add_option("--bt-range", bt_range, "Pairing range in metres");

    std::string attack_kind = "guessing_replay";
    double attack_distance = 3.0;
    auto* attack = app.add_subcommand("attack", "Spoofing campaign");
    add_common(attack, common);
    attack->add_option("--kind", attack_kind, "Attack kind")
        ->check(CLI::IsMember({"zero_effort", "guessing_replay", "all_frequency"}));
    attack->add_option("--distance", attack_distance, "Separation of the legitimate devices in metres");
    attack->add_option("--trials", trials, "Number of trials");

    auto* compare = app.add_subcommand("compare", "Frequency detection vs. cross-correlation vs. one-way ranging");
    add_common(compare, common);
    compare->add_option("--distances", dists, "Distances in metres");
    compare->add_option("--trials", trials, "Trials per distance");

    unsigned users = 3;
    auto* multi = app.add_subcommand("multiuser", "Ranging with other device pairs playing nearby");
    add_common(multi, common);
    multi->add_option("--users", users, "Device pairs in the room, including the measured one");
    multi->add_option("--distances", dists, "Distances in metres");
    multi->add_option("--trials", trials, "Trials per distance");

    std::string wav_path, json_path, recording, trace;
    auto* signal = app.add_subcommand("signal", "Generate a reference signal or locate one in a recording");
    add_common(signal, common);
    signal->add_option("--wav", wav_path, "Reference signal WAV")->required();
    signal->add_option("--json", json_path, "Reference signal JSON sidecar")->required();
    signal->add_option("--detect", recording, "Recording to search; without it a new signal is written");
    signal->add_option("--trace", trace, "Per-window normalized power CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*range) {
            Simulator sim(common);
            Report r;
            check(piano_range_campaign(sim.get(), dists.data(), dists.size(), trials, common.seed, r.out()));
            r.print(common.out);
        } else if (*auth) {
            Simulator sim(common);
            piano_auth_result result{};
            Report r;
            check(piano_authenticate(sim.get(), auth_distance, common.seed, &result, r.out()));
            r.print(common.out);
            return result.verdict == PIANO_ACCEPT ? 0 : 3;
        } else if (*frrfar) {
            Simulator sim(common);
            const piano_error_model model{sigma, detect_range, bt_range};
            Report r;
            check(piano_frr_far_table(&model, thresholds.data(), thresholds.size(), r.out()));
            r.print(common.out);
        } else if (*fit) {
            Simulator sim(common);
            const piano_error_model model{sigma, detect_range, bt_range};
            double fitted = 0.0;
            check(piano_fit_sigma(frr_target, fit_threshold, &model, &fitted));
            if (common.out == "json")
                std::printf("{\"frr\": %.17g, \"threshold_m\": %.17g, \"sigma_m\": %.17g}\n", frr_target, fit_threshold,
                            fitted);
            else
                std::printf("frr,threshold_m,sigma_m\n%.9g,%.9g,%.9g\n", frr_target, fit_threshold, fitted);
        } else if (*attack) {
            Simulator sim(common);
            Report r;
            check(piano_attack_campaign(sim.get(), attack_kind.c_str(), attack_distance, trials, common.seed, r.out()));
            r.print(common.out);
        } else if (*compare) {
            Simulator sim(common);
            Report r;
            check(piano_detector_comparison(sim.get(), dists.data(), dists.size(), trials, common.seed, r.out()));
            r.print(common.out);
        } else if (*multi) {
            Simulator sim(common);
            Report r;
            check(piano_multiuser_campaign(sim.get(), users, dists.data(), dists.size(), trials, common.seed, r.out()));
            r.print(common.out);
        } else if (*signal) {
            Simulator sim(common);
            piano_signal* sig = nullptr;
            if (recording.empty()) {
                check(piano_signal_generate(sim.get(), common.seed, &sig));
                const piano_status s = piano_signal_save(sig, wav_path.c_str(), json_path.c_str());
                piano_signal_destroy(sig);
                check(s);
            } else {
                check(piano_signal_load(sim.get(), wav_path.c_str(), json_path.c_str(), &sig));
                std::int64_t location = -1;
                const piano_status s = piano_detect_wav(sim.get(), sig, recording.c_str(),
                                                        trace.empty() ? nullptr : trace.c_str(), &location);
                piano_signal_destroy(sig);
                check(s);
                if (location < 0)
                    std::cout << "location,present\n,0\n";
                else
                    std::cout << "location,present\n" << location << ",1\n";
            }
        }
    } catch (const CliError& e) {
        std::cerr << "piano: " << e.message << '\n';
        return e.exit_code;
    }
    return 0;
}
