#include "core/config.hpp"

#include "core/error.hpp"

#include "json.hpp"

#include <set>

namespace piano {

namespace {

using nlohmann::json;

// Reads keys out of one JSON object and complains about any left unread.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(std::string("'") + key + "' has the wrong type");
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    std::optional<Section> child(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return Section(j_.at(key), path_ + "." + key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.contains(k)) fail("unknown key '" + k + "'");
    }

    [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorCode::Config, path_ + ": " + msg); }

private:
    const json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

Vec3 parse_position(Section& s) {
    std::vector<double> p;
    s.get("position", p);
    if (p.empty()) return {};
    if (p.size() < 2 || p.size() > 3) s.fail("position must have 2 or 3 coordinates");
    return {p[0], p[1], p.size() == 3 ? p[2] : 0.0};
}

DeviceConfig parse_device(Section s, const std::string& id, double default_rate) {
    DeviceConfig d{id, {}, default_rate};
    d.position = parse_position(s);
    s.get("sample_rate", d.sample_rate);
    s.finish();
    if (!(d.sample_rate > 0.0)) s.fail("sample_rate must be positive");
    return d;
}

void parse_channel(Section s, ChannelConfig& c) {
    s.get("speed_of_sound", c.speed_of_sound);
    s.get("attenuation_exponent", c.attenuation_exponent);
    s.get("gain_at_1m", c.gain_at_1m);
    s.get("self_gain", c.self_gain);
    s.get("smoothing_kernel", c.smoothing_kernel);
    s.get("wander_rms_samples", c.wander_rms_samples);
    s.get("wall_attenuation_db", c.wall_attenuation_db);
    s.get("wall_x", c.wall_x);
    s.get("scene_rate", c.scene_rate);
    s.finish();
}

void parse_signal(Section s, SessionConfig& session) {
    double low = session.grid.band_low_hz, high = session.grid.band_high_hz;
    std::size_t bins = session.grid.size();
    s.get("band_low_hz", low);
    s.get("band_high_hz", high);
    s.get("bins", bins);
    auto& d = session.signal;
    s.get("length", d.length);
    s.get("sample_rate", d.sample_rate);
    s.get("amplitude_budget", d.amplitude_budget);
    s.get("random_phase", d.random_phase);
    s.get("bin_centred", d.bin_centred);
    s.get("theta", d.theta);
    s.finish();
    session.grid = build_grid(low, high, bins);
    if (d.length == 0 || (d.length & (d.length - 1)) != 0) s.fail("length must be a power of two");
    if (!(d.sample_rate > 0.0)) s.fail("sample_rate must be positive");
    if (!(d.amplitude_budget > 0.0 && d.amplitude_budget <= 32767.0)) s.fail("amplitude_budget must lie in (0, 32767]");
}

void parse_detection(Section s, DetectionParams& p) {
    s.get("alpha", p.alpha);
    s.get("beta_ratio", p.beta_ratio);
    s.get("epsilon", p.epsilon);
    s.get("theta", p.theta);
    s.get("coarse_step", p.coarse_step);
    s.get("fine_step", p.fine_step);
    s.get("fine_radius", p.fine_radius);
    s.finish();
}

void parse_protocol(Section s, SessionConfig& session, AuthPolicy& policy) {
    s.get("threshold_m", policy.threshold_m);
    s.get("pairing_range_m", policy.pairing_range_m);
    s.get("enforce_threshold", policy.enforce_threshold);
    s.get("first_playback_s", session.first_playback_s);
    s.get("playback_gap_s", session.playback_gap_s);
    s.get("recording_s", session.recording_s);
    s.get("max_start_offset_s", session.max_start_offset_s);
    s.get("disjoint_sets", session.disjoint_sets);
    s.get("drop_channel", session.drop_channel);
    std::string detector = session.detector == DetectorKind::Frequency ? "frequency" : "cross_correlation";
    s.get("detector", detector);
    s.finish();
    if (detector == "frequency")
        session.detector = DetectorKind::Frequency;
    else if (detector == "cross_correlation")
        session.detector = DetectorKind::CrossCorrelation;
    else
        s.fail("detector must be 'frequency' or 'cross_correlation'");
    if (!(session.first_playback_s >= 0.0 && session.playback_gap_s >= 0.0 && session.recording_s > 0.0 &&
          session.max_start_offset_s >= 0.0))
        s.fail("timings must be non-negative and recording_s positive");
}

void parse_attack(Section s, AttackScenario& a, std::vector<double>& sweep) {
    std::optional<std::string> kind, target;
    s.get("kind", kind);
    s.get("target", target);
    s.get("standoff_m", a.standoff_m);
    s.get("per_tone_power", a.per_tone_power);
    s.get("continuous", a.continuous);
    s.get("power_sweep", sweep);
    s.finish();
    if (kind) a.kind = parse_attack_kind(*kind);
    if (target) {
        if (*target == "authenticating")
            a.target = AttackTarget::Authenticating;
        else if (*target == "vouching")
            a.target = AttackTarget::Vouching;
        else if (*target == "both")
            a.target = AttackTarget::Both;
        else
            s.fail("target must be 'authenticating', 'vouching' or 'both'");
    }
    if (!(a.standoff_m > 0.0)) s.fail("standoff_m must be positive");
    for (double p : sweep)
        if (!(p > 0.0)) s.fail("power_sweep entries must be positive");
}

}  // namespace

SimulatorConfig parse_config(std::string_view text) {
    SimulatorConfig cfg;
    if (text.empty()) return cfg;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("config: ") + e.what());
    }
    try {
        Section s(root, "config");
        auto& setup = cfg.setup;
        std::string env = to_string(setup.environment);
        s.get("environment", env);
        setup.environment = parse_environment(env);
        s.get("min_trials", setup.min_trials);
        s.get("threads", setup.threads);
        s.get("wav_dump_dir", setup.wav_dump_dir);
        if (auto c = s.child("channel")) parse_channel(*c, setup.channel);
        if (auto c = s.child("signal")) parse_signal(*c, setup.session);
        if (auto c = s.child("detection")) parse_detection(*c, setup.session.detection);
        if (auto c = s.child("protocol")) parse_protocol(*c, setup.session, setup.policy);
        if (auto c = s.child("attack")) parse_attack(*c, cfg.attack, cfg.power_sweep);
        if (auto c = s.child("error_model")) {
            c->get("sigma_m", cfg.error_model.sigma_m);
            c->get("detect_range_m", cfg.error_model.detect_range_m);
            c->get("bt_range_m", cfg.error_model.bt_range_m);
            c->finish();
        }
        if (auto c = s.child("echo")) {
            c->get("mean_processing_s", cfg.echo.mean_processing_s);
            c->get("sigma_processing_s", cfg.echo.sigma_processing_s);
            c->finish();
            if (!(cfg.echo.mean_processing_s >= 0.0 && cfg.echo.sigma_processing_s >= 0.0))
                c->fail("processing delays must be non-negative");
        }
        if (auto c = s.child("devices")) {
            if (auto d = c->child("authenticating")) {
                cfg.authenticating = parse_device(*d, "authenticating", setup.auth_sample_rate);
                setup.auth_sample_rate = cfg.authenticating->sample_rate;
            }
            if (auto d = c->child("vouching")) {
                cfg.vouching = parse_device(*d, "vouching", setup.vouch_sample_rate);
                setup.vouch_sample_rate = cfg.vouching->sample_rate;
            }
            c->finish();
        }
        s.finish();

        setup.channel.validate();
        setup.session.detection.validate();
        setup.policy.validate();
        cfg.error_model.validate();
        if (setup.min_trials == 0) s.fail("min_trials must be at least 1");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        throw Error(ErrorCode::Config, std::string("config: ") + e.what());
    }
    return cfg;
}

}  // namespace piano
