// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include "oracles.hpp"

#include "core/adversary.hpp"
#include "core/channel.hpp"
#include "core/eval.hpp"
#include "core/spectrum.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace piano;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail = o.detail;
    if (limit_s > 0.0 && secs >= limit_s) {
        o.pass = false;
        detail += " (over time limit)";
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SimulationSetup office_setup() {
    SimulationSetup s;
    s.environment = Environment::Office;
    return s;
}

}  // namespace

int main() {
    const double thresholds[] = {0.5, 1.0, 1.5, 2.0};

    criterion(1, "FRR table from fitted sigma", 1.0, [&] {
        ErrorModel m;
        m.sigma_m = fit_sigma(0.028, 1.0, m);
        const double expected[] = {0.056, 0.028, 0.019, 0.014};
        bool ok = true;
        std::ostringstream os;
        os << "sigma=" << m.sigma_m << " FRR%";
        for (int i = 0; i < 4; ++i) {
            const double frr = frr_far_model(thresholds[i], m).frr;
            ok = ok && std::abs(frr - expected[i]) <= 0.003;
            os << ' ' << fmt("%.2f", 100 * frr);
        }
        return Outcome{ok, os.str()};
    });

    criterion(2, "FAR table from fitted sigma", 1.0, [&] {
        ErrorModel m;
        m.sigma_m = fit_sigma(0.028, 1.0, m);
        const double expected[] = {0.003, 0.003, 0.003, 0.004};
        bool ok = true;
        std::ostringstream os;
        os << "FAR%";
        for (int i = 0; i < 4; ++i) {
            const double far = frr_far_model(thresholds[i], m).far;
            ok = ok && std::abs(far - expected[i]) <= 0.0015;
            os << ' ' << fmt("%.3f", 100 * far);
        }
        return Outcome{ok, os.str()};
    });

    criterion(3, "office ranging accuracy", 60.0, [&] {
        const auto r = distance_error_campaign(office_setup(), thresholds, 30, 1001);
        bool ok = true;
        std::ostringstream os;
        os << "mean |error| m:";
        for (const auto& row : r.rows) {
            ok = ok && row.not_present == 0 && row.mean_abs_error_m <= 0.15;
            os << ' ' << row.distance_m << "->" << fmt("%.4f", row.mean_abs_error_m);
            if (row.not_present) os << '(' << row.not_present << " absent)";
        }
        return Outcome{ok, os.str()};
    });

    criterion(4, "emergent range gate", 60.0, [&] {
        const double d[] = {2.0, 3.0};
        const auto r = distance_error_campaign(office_setup(), d, 30, 1002);
        const unsigned present_2 = r.rows[0].trials - r.rows[0].not_present;
        const unsigned absent_3 = r.rows[1].not_present;
        return Outcome{present_2 >= 28 && absent_3 == 30,
                       fmt("present at 2.0 m %u/30, absent at 3.0 m %u/30", present_2, absent_3)};
    });

    criterion(5, "60 dB wall", 120.0, [&] {
        auto s = office_setup();
        s.channel.wall_attenuation_db = 60.0;
        unsigned rejected = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto r = run_session(s, 0.5, derive_seed(1005, seed));
            rejected += r.decision.verdict == Verdict::Reject && r.decision.reason == RejectReason::SignalNotPresent;
        }
        return Outcome{rejected == 100, fmt("signal not present %u/100", rejected)};
    });

    criterion(6, "spoofing at 3 m", 300.0, [&] {
        const auto s = office_setup();
        AttackScenario replay;
        replay.kind = AttackKind::GuessingReplay;
        const auto r = attack_campaign(s, replay, 3.0, 100, 1006);
        AttackScenario all;
        all.kind = AttackKind::AllFrequency;
        const auto a = attack_campaign(s, all, 3.0, 100, 2006);
        const unsigned accepted = r.total_accepted() + a.total_accepted();
        return Outcome{accepted == 0, fmt("accepted replay %u/100, all-frequency %u/100 over %zu powers",
                                          r.total_accepted(), a.total_accepted(), a.rows.size())};
    });

    criterion(7, "guessing probability", 0.0, [&] {
        const auto subsets = oracle::admissible_subsets(4);
        const double p = guessing_success_probability(4, 1);
        return Outcome{subsets.size() == 14 && p == 1.0 / 14.0, fmt("%zu sets, p=%.6f", subsets.size(), p)};
    });

    criterion(8, "detector comparison at 1 m", 60.0, [&] {
        const double d[] = {1.0};
        EchoConfig echo;
        echo.sigma_processing_s = 0.02;
        const auto r = detector_comparison(office_setup(), d, 10, 1008, echo);
        const double action = r.find("action", 1.0)->mean_abs_error_m;
        const double cc = r.find("action-cc", 1.0)->mean_abs_error_m;
        const double es = r.find("echo-secure", 1.0)->mean_abs_error_m;
        return Outcome{cc >= 10.0 * action && es >= 1.0,
                       fmt("action %.4f m, action-cc %.3f m, echo-secure %.3f m", action, cc, es)};
    });

    criterion(9, "coarse-to-fine matches exhaustive scan", 0.0, [&] {
        const auto grid = default_grid();
        const DetectionParams params;
        ChannelConfig channel;
        channel.noise = EnvironmentNoise::preset(Environment::Office);
        unsigned within = 0;
        long worst = 0;
        for (std::uint64_t i = 0; i < 100; ++i) {
            Rng rng = make_rng(derive_seed(1009, i));
            const auto s = synthesize(sample_spec(rng, grid));
            std::uniform_real_distribution<double> dist(0.3, 2.2), emit(500.0, 6000.0);
            AcousticScene scene;
            scene.seed = i;
            scene.duration = 12000;
            const double d = dist(rng);
            scene.emissions.push_back({"src", std::vector<double>(s.samples.begin(), s.samples.end()),
                                       std::round(emit(rng)), {d, 0, 0}});
            scene.recorders.push_back({"mic", {0, 0, 0}, 44100.0, 0.0, 12000});
            auto c = channel;
            c.noise.seed = i;
            const auto rec = record(scene, "mic", c);
            const auto fast = detect(rec.samples, s, grid, params);
            const auto slow = oracle::exhaustive_scan(rec.samples, s, grid, params);
            if (!fast.location || slow.peak.is_rejected()) {
                within += !fast.location && slow.peak.is_rejected();
                continue;
            }
            const long diff = std::labs(static_cast<long>(*fast.location) - static_cast<long>(slow.index));
            worst = std::max(worst, diff);
            within += diff <= 10;
        }
        return Outcome{within == 100, fmt("%u/100 within 10 samples, worst %ld", within, worst)};
    });

    criterion(10, "single session wall-clock", 3.0, [&] {
        const auto r = run_session(office_setup(), 1.0, 1010);
        return Outcome{r.decision.estimated_distance_m.has_value(),
                       fmt("estimate %.3f m", r.decision.estimated_distance_m.value_or(NAN))};
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
