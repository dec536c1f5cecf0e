#include "core/protocol.hpp"

#include "core/error.hpp"
#include "core/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace piano {

double estimate_distance(const SessionMeasurements& m, double speed_of_sound) {
    return 0.5 * speed_of_sound *
           (-static_cast<double>(m.l_VV - m.l_VA) / m.f_V + static_cast<double>(m.l_AV - m.l_AA) / m.f_A);
}

double estimate_distance(std::int64_t auth_difference, std::int64_t vouch_difference, double f_A,
                         double f_V, double speed_of_sound) {
    return 0.5 * speed_of_sound *
           (static_cast<double>(vouch_difference) / f_V + static_cast<double>(auth_difference) / f_A);
}

void AuthPolicy::validate() const {
    if (!(threshold_m > 0.0 && threshold_m < pairing_range_m))
        throw Error(ErrorCode::InvalidArgument, "auth policy: require 0 < threshold < pairing range");
}

const char* to_string(Verdict v) noexcept { return v == Verdict::Accept ? "accept" : "reject"; }

const char* to_string(RejectReason r) noexcept {
    switch (r) {
        case RejectReason::None: return "none";
        case RejectReason::NotPaired: return "not_paired";
        case RejectReason::SignalNotPresent: return "signal_not_present";
        case RejectReason::DistanceExceeded: return "distance_exceeded";
    }
    return "unknown";
}

AuthDecision decide(double raw_distance_m, const AuthPolicy& policy) {
    AuthDecision d;
    d.estimated_distance_m = std::max(0.0, raw_distance_m);
    if (policy.enforce_threshold && *d.estimated_distance_m > policy.threshold_m) {
        d.verdict = Verdict::Reject;
        d.reason = RejectReason::DistanceExceeded;
    } else {
        d.verdict = Verdict::Accept;
    }
    return d;
}

bool SecureChannel::send(Message message) {
    if (!usable()) return false;
    log_.push_back(message);
    queue_.push_back(std::move(message));
    return true;
}

std::optional<SecureChannel::Message> SecureChannel::receive(const std::string& to) {
    auto it = std::find_if(queue_.begin(), queue_.end(), [&](const Message& m) { return m.to == to; });
    if (it == queue_.end()) return std::nullopt;
    Message m = std::move(*it);
    queue_.erase(it);
    return m;
}

namespace {

class ByteWriter {
public:
    template <class T>
    void put(const T& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    std::vector<std::uint8_t> bytes;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size())
            throw Error(ErrorCode::InvalidArgument, "deserialize_signal: truncated payload");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_signal(const ReferenceSignal& signal) {
    ByteWriter w;
    const auto& spec = signal.spec;
    w.put(static_cast<std::uint32_t>(spec.candidates.size()));
    for (auto c : spec.candidates) w.put(static_cast<std::uint32_t>(c));
    for (double p : spec.phases) w.put(p);
    w.put(static_cast<std::uint32_t>(spec.length));
    w.put(spec.sample_rate);
    w.put(spec.amplitude_budget);
    w.put(static_cast<std::uint8_t>(spec.bin_centred));
    w.put(signal.nominal_power);
    for (auto s : signal.samples) w.put(s);
    return std::move(w.bytes);
}

ReferenceSignal deserialize_signal(const std::vector<std::uint8_t>& bytes, const FrequencyGrid& grid) {
    ByteReader r(bytes);
    const auto n = r.get<std::uint32_t>();
    if (n == 0 || n >= grid.size()) throw Error(ErrorCode::InvalidArgument, "deserialize_signal: bad tone count");
    CandidateSet candidates(n);
    for (auto& c : candidates) c = r.get<std::uint32_t>();
    std::vector<double> phases(n);
    for (auto& p : phases) p = r.get<double>();
    SignalDefaults d;
    d.length = r.get<std::uint32_t>();
    d.sample_rate = r.get<double>();
    d.amplitude_budget = r.get<double>();
    d.bin_centred = r.get<std::uint8_t>() != 0;
    ReferenceSignal signal;
    signal.spec = make_spec(grid, std::move(candidates), d);
    signal.spec.phases = std::move(phases);
    signal.nominal_power = r.get<double>();
    signal.samples.resize(d.length);
    for (auto& s : signal.samples) s = r.get<std::int16_t>();
    if (!r.done()) throw Error(ErrorCode::InvalidArgument, "deserialize_signal: trailing bytes");
    return signal;
}

std::string SessionTranscript::to_json() const {
    using nlohmann::json;
    auto opt = [](const auto& v) -> json { return v ? json(*v) : json(nullptr); };
    json j;
    j["seed"] = seed;
    j["true_distance_m"] = true_distance_m;
    j["detector"] = detector == DetectorKind::Frequency ? "frequency" : "cross_correlation";
    j["verdict"] = to_string(decision.verdict);
    j["reason"] = to_string(decision.reason);
    j["estimated_distance_m"] = opt(decision.estimated_distance_m);
    j["raw_distance_m"] = opt(raw_distance_m);
    j["freqs_A_hz"] = freqs_A_hz;
    j["freqs_V_hz"] = freqs_V_hz;
    j["locations"] = {{"l_AA", opt(l_AA)}, {"l_AV", opt(l_AV)}, {"l_VA", opt(l_VA)}, {"l_VV", opt(l_VV)}};
    j["vouch_difference"] = opt(vouch_difference);
    j["f_A"] = f_A;
    j["f_V"] = f_V;
    json msgs = json::array();
    for (const auto& m : messages)
        msgs.push_back({{"from", m.from}, {"to", m.to}, {"kind", m.kind}, {"bytes", m.bytes}});
    j["messages"] = msgs;
    return j.dump();
}

namespace {

// One side of the session. Drives itself through the protocol steps; the
// orchestrator supplies the shared acoustic scene.
class Endpoint {
public:
    Endpoint(DeviceConfig config, const SessionConfig& session) : config_(std::move(config)), session_(session) {}

    const DeviceConfig& config() const { return config_; }

    // Authenticating device only.
    void construct_signals(Rng& rng) {
        const auto& grid = session_.grid;
        own_ = synthesize(sample_spec(rng, grid, session_.signal), session_.signal.theta);
        CandidateSet pool;
        if (session_.disjoint_sets) {
            for (std::size_t c = 0; c < grid.size(); ++c)
                if (!std::binary_search(own_->spec.candidates.begin(), own_->spec.candidates.end(), c))
                    pool.push_back(c);
        } else {
            pool.resize(grid.size());
            std::iota(pool.begin(), pool.end(), std::size_t{0});
        }
        // Identical sets would make S_A and S_V indistinguishable.
        SignalSpec spec;
        do {
            spec = sample_spec_from(rng, grid, pool, session_.signal);
        } while (spec.candidates == own_->spec.candidates);
        peer_ = synthesize(spec, session_.signal.theta);
    }

    bool send_signals(SecureChannel& channel, const std::string& to) const {
        return channel.send({config_.id, to, "signal_A", serialize_signal(*own_)}) &&
               channel.send({config_.id, to, "signal_V", serialize_signal(*peer_)});
    }

    bool receive_signals(SecureChannel& channel) {
        auto a = channel.receive(config_.id);
        auto v = channel.receive(config_.id);
        if (!a || !v) return false;
        peer_ = deserialize_signal(a->payload, session_.grid);  // S_A
        own_ = deserialize_signal(v->payload, session_.grid);   // S_V
        return true;
    }

    const ReferenceSignal& signal_A(bool authenticating) const { return authenticating ? *own_ : *peer_; }
    const ReferenceSignal& signal_V(bool authenticating) const { return authenticating ? *peer_ : *own_; }
    const ReferenceSignal& own_signal() const { return *own_; }

    // Returns (location of S_A, location of S_V) in this device's recording.
    std::pair<std::optional<std::int64_t>, std::optional<std::int64_t>> locate(const Recording& rec, bool authenticating) {
        const auto& sa = signal_A(authenticating);
        const auto& sv = signal_V(authenticating);
        if (session_.detector == DetectorKind::CrossCorrelation) {
            return {static_cast<std::int64_t>(cross_correlate_detect(rec.samples, sa)),
                    static_cast<std::int64_t>(cross_correlate_detect(rec.samples, sv))};
        }
        auto [da, dv] = detect_pair(rec.samples, sa, sv, session_.grid, session_.detection);
        auto conv = [](const DetectionOutcome& o) -> std::optional<std::int64_t> {
            if (!o.location) return std::nullopt;
            return static_cast<std::int64_t>(*o.location);
        };
        return {conv(da), conv(dv)};
    }

private:
    DeviceConfig config_;
    const SessionConfig& session_;
    std::optional<ReferenceSignal> own_;
    std::optional<ReferenceSignal> peer_;
};

std::vector<double> to_waveform(const std::vector<std::int16_t>& samples) {
    return std::vector<double>(samples.begin(), samples.end());
}

}  // namespace

SessionResult run_authentication(const DeviceConfig& authenticating, const DeviceConfig& vouching,
                                 const AuthPolicy& policy, std::uint64_t seed,
                                 const ChannelConfig& channel, const SessionConfig& session,
                                 const RunOptions& options) {
    policy.validate();
    channel.validate();
    session.detection.validate();

    SessionResult result;
    auto& tr = result.transcript;
    tr.seed = seed;
    tr.true_distance_m = distance(authenticating.position, vouching.position);
    tr.detector = session.detector;
    tr.f_A = authenticating.sample_rate;
    tr.f_V = vouching.sample_rate;

    auto finish = [&](AuthDecision d, const SecureChannel* pipe) {
        tr.decision = d;
        result.decision = d;
        if (pipe)
            for (const auto& m : pipe->log()) tr.messages.push_back({m.from, m.to, m.kind, m.payload.size()});
        return result;
    };
    auto reject = [](RejectReason why) {
        AuthDecision d;
        d.verdict = Verdict::Reject;
        d.reason = why;
        return d;
    };

    const bool in_range = tr.true_distance_m <= policy.pairing_range_m;
    SecureChannel pipe(in_range, session.drop_channel);
    if (!pipe.usable()) return finish(reject(RejectReason::NotPaired), &pipe);

    Endpoint a(authenticating, session);
    Endpoint v(vouching, session);

    // Construct the signals.
    Rng signal_rng = make_rng(derive_seed(seed, 1));
    a.construct_signals(signal_rng);
    tr.freqs_A_hz = a.signal_A(true).spec.frequencies_hz;
    tr.freqs_V_hz = a.signal_V(true).spec.frequencies_hz;

    // Share them over the secure channel.
    if (!a.send_signals(pipe, vouching.id) || !v.receive_signals(pipe))
        return finish(reject(RejectReason::NotPaired), &pipe);

    // Play and record.
    const double rate = channel.scene_rate;
    Rng timing_rng = make_rng(derive_seed(seed, 4));
    std::uniform_real_distribution<double> offset(-session.max_start_offset_s, session.max_start_offset_s);
    const double v_start = std::round(offset(timing_rng) * rate);

    SessionTiming timing;
    timing.first_playback = std::round(session.first_playback_s * rate);
    timing.second_playback = timing.first_playback + std::round(session.playback_gap_s * rate);
    timing.duration = static_cast<std::size_t>(std::llround(session.recording_s * rate));
    timing.authenticating = authenticating.position;
    timing.vouching = vouching.position;

    AcousticScene scene;
    scene.seed = derive_seed(seed, 2);
    scene.duration = timing.duration;
    scene.emissions.push_back({authenticating.id, to_waveform(a.own_signal().samples), timing.first_playback,
                               authenticating.position});
    scene.emissions.push_back({vouching.id, to_waveform(v.own_signal().samples), timing.second_playback,
                               vouching.position});
    scene.recorders.push_back({authenticating.id, authenticating.position, authenticating.sample_rate, 0.0,
                               static_cast<std::size_t>(std::llround(session.recording_s * authenticating.sample_rate))});
    scene.recorders.push_back({vouching.id, vouching.position, vouching.sample_rate, v_start,
                               static_cast<std::size_t>(std::llround(session.recording_s * vouching.sample_rate))});
    if (options.hook) options.hook(scene, timing);

    ChannelConfig ch = channel;
    ch.noise.seed = derive_seed(seed, 3);
    const Recording rec_a = record(scene, authenticating.id, ch);
    const Recording rec_v = record(scene, vouching.id, ch);
    if (options.keep_artifacts) {
        result.recording_A = rec_a;
        result.recording_V = rec_v;
        result.signal_A = a.signal_A(true);
        result.signal_V = a.signal_V(true);
    }

    // Each device locates both signals.
    const auto [l_aa, l_av] = a.locate(rec_a, true);
    const auto [l_va, l_vv] = v.locate(rec_v, false);
    tr.l_AA = l_aa;
    tr.l_AV = l_av;
    tr.l_VA = l_va;
    tr.l_VV = l_vv;
    if (!l_aa || !l_av || !l_va || !l_vv) return finish(reject(RejectReason::SignalNotPresent), &pipe);

    // Only the vouching device's local difference crosses the channel.
    const std::int64_t vouch_diff = *l_va - *l_vv;
    std::vector<std::uint8_t> payload(sizeof vouch_diff);
    std::memcpy(payload.data(), &vouch_diff, sizeof vouch_diff);
    if (!pipe.send({vouching.id, authenticating.id, "vouch_difference", payload}))
        return finish(reject(RejectReason::NotPaired), &pipe);
    const auto reply = pipe.receive(authenticating.id);
    std::int64_t received = 0;
    std::memcpy(&received, reply->payload.data(), sizeof received);
    tr.vouch_difference = received;

    // Estimate and decide.
    const double raw = estimate_distance(*l_av - *l_aa, received, authenticating.sample_rate,
                                         vouching.sample_rate, channel.speed_of_sound);
    tr.raw_distance_m = raw;
    return finish(decide(raw, policy), &pipe);
}

}  // namespace piano
