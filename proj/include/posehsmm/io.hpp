#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "posehsmm/simulator.hpp"
#include "posehsmm/summarizer.hpp"

// Line-oriented text records. Every file opens with `format: v1` and a
// `kind:` line; header fields are `name: value`, body lines start with a
// keyword. Floats are written with 17 significant digits so they read back
// to the same double.

namespace posehsmm::io {

inline constexpr std::string_view kFormatLine = "format: v1";

inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, r.ptr};
}

/// Shortest text that reads back to the same double; for report records.
inline std::string format_shortest(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(ErrorCode::ParseError, "not a number: '" + std::string(s) + "'");
    return x;
}

inline std::size_t parse_count(std::string_view s) {
    std::size_t x = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail(ErrorCode::ParseError, "not a count: '" + std::string(s) + "'");
    return x;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

/// Pulls non-blank, non-comment lines and checks their shape.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    }

    std::string line() {
        std::string l;
        require(next(l), ErrorCode::ParseError, "unexpected end of file after line " + std::to_string(number_));
        return l;
    }

    /// Reads `name: value` and returns value.
    std::string field(std::string_view name) {
        const std::string l = line();
        const std::string prefix = std::string(name) + ":";
        require(l.rfind(prefix, 0) == 0, ErrorCode::ParseError,
                "line " + std::to_string(number_) + ": expected '" + prefix + "'");
        const auto v = l.find_first_not_of(' ', prefix.size());
        return v == std::string::npos ? std::string() : l.substr(v);
    }

    std::size_t count_field(std::string_view name) { return parse_count(field(name)); }

    /// Body line starting with `keyword`; returns the remaining tokens.
    std::vector<std::string_view> record(std::string_view keyword, std::string& storage) {
        storage = line();
        auto tokens = split(storage);
        require(!tokens.empty() && tokens.front() == keyword, ErrorCode::ParseError,
                "line " + std::to_string(number_) + ": expected '" + std::string(keyword) + "' record");
        tokens.erase(tokens.begin());
        return tokens;
    }

    void expect_header(std::string_view kind) {
        const std::string first = line();
        require(first.rfind("format:", 0) == 0, ErrorCode::ParseError, "missing format line");
        require(first == kFormatLine, ErrorCode::UnsupportedVersion, "unsupported " + first);
        const std::string k = field("kind");
        require(k == kind, ErrorCode::ParseError, "expected a " + std::string(kind) + " file, found " + k);
    }

    std::size_t line_number() const noexcept { return number_; }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

/// Peeks at the `kind:` of a file without consuming the stream.
inline std::string file_kind(std::istream& in) {
    const auto pos = in.tellg();
    LineReader r(in);
    const std::string first = r.line();
    require(first == kFormatLine, ErrorCode::UnsupportedVersion, "unsupported " + first);
    std::string kind = r.field("kind");
    in.clear();
    in.seekg(pos);
    return kind;
}

inline void write_header(std::ostream& out, std::string_view kind) {
    out << kFormatLine << "\nkind: " << kind << '\n';
}

inline void expect_count(std::span<const std::string_view> tokens, std::size_t n, std::string_view what) {
    require(tokens.size() == n, ErrorCode::ParseError,
            std::string(what) + ": expected " + std::to_string(n) + " fields, found " + std::to_string(tokens.size()));
}

inline ChannelId parse_channel_or_throw(std::string_view s) {
    const auto c = parse_channel(s);
    require(c.has_value(), ErrorCode::ParseError, "unknown channel '" + std::string(s) + "'");
    return *c;
}

inline Pose parse_pose_or_throw(std::string_view s) {
    const auto p = parse_pose(s);
    require(p.has_value(), ErrorCode::ParseError, "unknown pose '" + std::string(s) + "'");
    return *p;
}

inline Scene parse_scene_or_throw(std::string_view s) {
    const auto p = parse_scene(s);
    require(p.has_value(), ErrorCode::ParseError, "unknown scene '" + std::string(s) + "'");
    return *p;
}

inline Direction parse_direction_or_throw(std::string_view s) {
    const auto d = parse_direction(s);
    require(d.has_value(), ErrorCode::ParseError, "unknown direction '" + std::string(s) + "'");
    return *d;
}

inline std::vector<ChannelId> parse_channel_list(std::string_view s) {
    std::vector<ChannelId> out;
    for (auto tok : split(s)) out.push_back(parse_channel_or_throw(tok));
    return out;
}

inline void write_channel_list(std::ostream& out, std::span<const ChannelId> channels) {
    out << "channels:";
    for (ChannelId c : channels) out << ' ' << channel_name(c);
    out << '\n';
}

// ---------------------------------------------------------------------------
// State spaces: `state <pose> <scene>` per index.

inline void write_states(std::ostream& out, const StateSpace& space) {
    out << "states: " << space.size() << '\n';
    for (const StateId& s : space.states()) out << "state " << pose_name(s.pose) << ' ' << scene_name(s.scene) << '\n';
}

inline StateSpace read_states(LineReader& r) {
    const std::size_t q = r.count_field("states");
    std::vector<StateId> states;
    std::string buf;
    for (std::size_t i = 0; i < q; ++i) {
        const auto t = r.record("state", buf);
        expect_count(t, 2, "state");
        states.push_back({parse_pose_or_throw(t[0]), parse_scene_or_throw(t[1]), i});
    }
    return StateSpace(std::move(states));
}

// ---------------------------------------------------------------------------
// Feature streams: one line per tick, channel groups separated by `|`, an
// unavailable channel written as `-`.

inline void write_stream(std::ostream& out, const FeatureStream& s) {
    write_header(out, "feature-stream");
    out << "feature_dim: " << s.feature_dim() << '\n';
    write_channel_list(out, s.channels());
    out << "ticks: " << s.size() << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
        out << (t + 1);
        for (std::size_t c = 0; c < s.channels().size(); ++c) {
            out << (c == 0 ? " " : " | ");
            const ChannelReading& r = s[t].readings[c];
            if (!r.available) {
                out << '-';
                continue;
            }
            for (std::size_t n = 0; n < r.values.size(); ++n) out << (n ? " " : "") << format_double(r.values[n]);
        }
        out << '\n';
    }
}

inline FeatureStream read_stream(std::istream& in) {
    LineReader r(in);
    r.expect_header("feature-stream");
    const std::size_t f = r.count_field("feature_dim");
    const std::vector<ChannelId> channels = parse_channel_list(r.field("channels"));
    const std::size_t n = r.count_field("ticks");
    FeatureStream s(channels, f);
    for (std::size_t t = 1; t <= n; ++t) {
        const std::string l = r.line();
        const auto tokens = split(l);
        const auto bad_line = [&](const char* what) {
            fail(ErrorCode::ParseError, "line " + std::to_string(r.line_number()) + ": " + what);
        };
        if (tokens.empty() || parse_count(tokens[0]) != t) bad_line("ticks must run consecutively from 1");
        FeatureFrame frame;
        std::size_t i = 1;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            if (c > 0) {
                if (i >= tokens.size() || tokens[i] != "|") bad_line("expected '|' between channels");
                ++i;
            }
            if (i >= tokens.size()) bad_line("missing channel");
            ChannelReading reading{channels[c], std::vector<double>(f, 0.0), true};
            if (tokens[i] == "-") {
                reading.available = false;
                ++i;
            } else {
                for (std::size_t k = 0; k < f; ++k, ++i) {
                    if (i >= tokens.size() || tokens[i] == "|") bad_line("feature vector shorter than F");
                    reading.values[k] = parse_double(tokens[i]);
                }
            }
            frame.readings.push_back(std::move(reading));
        }
        if (i != tokens.size()) bad_line("trailing fields");
        s.push_back(std::move(frame));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Ground truth sidecar.

struct TruthFile {
    StateSpace states;
    Segmentation segmentation;
    std::vector<Scene> scene_track;
    std::optional<TransitionTruth> transition;
};

inline void write_truth(std::ostream& out, const GroundTruth& truth) {
    write_header(out, "ground-truth");
    out << "length: " << truth.segmentation.length << '\n';
    write_states(out, truth.generating_model.states);
    out << "segments: " << truth.segmentation.segments.size() << '\n';
    for (const Segment& s : truth.segmentation.segments)
        out << "segment " << s.start << ' ' << s.duration << ' ' << s.state << '\n';
    std::vector<Segment> runs;  // run-length scene track, state = scene
    for (std::size_t t = 0; t < truth.scene_track.size(); ++t) {
        const auto sc = static_cast<StateIndex>(truth.scene_track[t]);
        if (!runs.empty() && runs.back().state == sc)
            ++runs.back().duration;
        else
            runs.push_back({t + 1, 1, sc});
    }
    out << "scenes: " << runs.size() << '\n';
    for (const Segment& s : runs)
        out << "scene " << s.start << ' ' << s.duration << ' ' << scene_name(static_cast<Scene>(s.state)) << '\n';
    if (!truth.transition) {
        out << "transition: none\n";
        return;
    }
    const TransitionTruth& tr = *truth.transition;
    out << "transition: " << pose_name(tr.from) << ' ' << pose_name(tr.to) << ' ' << direction_name(tr.direction)
        << '\n';
    out << "pseudo_pose_ticks:";
    for (Tick t : tr.pseudo_pose_ticks) out << ' ' << t;
    out << '\n';
}

inline TruthFile read_truth(std::istream& in) {
    LineReader r(in);
    r.expect_header("ground-truth");
    TruthFile tf;
    tf.segmentation.length = r.count_field("length");
    tf.states = read_states(r);
    std::string buf;
    const std::size_t n_seg = r.count_field("segments");
    for (std::size_t u = 0; u < n_seg; ++u) {
        const auto t = r.record("segment", buf);
        expect_count(t, 3, "segment");
        tf.segmentation.segments.push_back({parse_count(t[0]), parse_count(t[1]), parse_count(t[2])});
        require(tf.segmentation.segments.back().state < tf.states.size(), ErrorCode::ParseError,
                "segment state outside the listed states");
    }
    validate(tf.segmentation);
    const std::size_t n_runs = r.count_field("scenes");
    for (std::size_t u = 0; u < n_runs; ++u) {
        const auto t = r.record("scene", buf);
        expect_count(t, 3, "scene");
        const Tick start = parse_count(t[0]), len = parse_count(t[1]);
        require(start == tf.scene_track.size() + 1, ErrorCode::ParseError, "scene runs must tile the sequence");
        tf.scene_track.insert(tf.scene_track.end(), len, parse_scene_or_throw(t[2]));
    }
    require(tf.scene_track.size() == tf.segmentation.length, ErrorCode::ParseError,
            "scene track length differs from the segmentation");
    const std::string tr = r.field("transition");
    if (tr != "none") {
        const auto t = split(tr);
        expect_count(t, 3, "transition");
        TransitionTruth truth{parse_pose_or_throw(t[0]), parse_pose_or_throw(t[1]), parse_direction_or_throw(t[2]), {}};
        for (auto tok : split(r.field("pseudo_pose_ticks"))) truth.pseudo_pose_ticks.push_back(parse_count(tok));
        tf.transition = std::move(truth);
    }
    return tf;
}

// ---------------------------------------------------------------------------
// HSMM models. The body (everything after the kind line) is shared with the
// transition library file.

inline void write_model_body(std::ostream& out, const HsmmModel& m) {
    m.validate();
    const std::size_t q = m.num_states();
    out << "feature_dim: " << m.emissions.feature_dim() << '\n';
    out << "max_duration: " << m.max_duration() << '\n';
    std::vector<ChannelId> channels;
    for (const auto& cm : m.emissions.models()) channels.push_back(cm.channel());
    write_channel_list(out, channels);
    write_states(out, m.states);
    out << "pi";
    for (double p : m.initial.probs) out << ' ' << format_double(p);
    out << '\n';
    for (StateIndex i = 0; i < q; ++i) {
        out << "transition";
        for (StateIndex j = 0; j < q; ++j) out << ' ' << format_double(m.transitions(i, j));
        out << '\n';
    }
    const bool gaussian = m.durations.kind() == DurationModel::Kind::gaussian;
    out << "durations: " << (gaussian ? "gaussian" : "table") << '\n';
    for (StateIndex i = 0; i < q; ++i) {
        out << "duration";
        if (gaussian) {
            out << ' ' << format_double(m.durations.means()[i]) << ' ' << format_double(m.durations.stddevs()[i]);
        } else {
            for (double w : m.durations.log_pmf_row(i)) out << ' ' << format_double(w);
        }
        out << '\n';
    }
    for (const auto& cm : m.emissions.models())
        for (StateIndex i = 0; i < q; ++i) {
            out << "emission " << channel_name(cm.channel()) << ' ' << i;
            for (double mu : cm.means().row(i)) out << ' ' << format_double(mu);
            out << '\n';
        }
    out << "end\n";
}

inline std::vector<double> parse_doubles(std::span<const std::string_view> tokens) {
    std::vector<double> out;
    for (auto t : tokens) out.push_back(parse_double(t));
    return out;
}

inline HsmmModel read_model_body(LineReader& r) {
    const std::size_t f = r.count_field("feature_dim");
    const Tick max_d = r.count_field("max_duration");
    const std::vector<ChannelId> channels = parse_channel_list(r.field("channels"));
    HsmmModel m;
    m.states = read_states(r);
    const std::size_t q = m.states.size();
    std::string buf;
    auto pi = r.record("pi", buf);
    expect_count(pi, q, "pi");
    m.initial = {parse_doubles(pi)};
    Grid<double> a(q, q);
    for (StateIndex i = 0; i < q; ++i) {
        const auto t = r.record("transition", buf);
        expect_count(t, q, "transition");
        for (StateIndex j = 0; j < q; ++j) a(i, j) = parse_double(t[j]);
    }
    m.transitions = TransitionMatrix(std::move(a));
    const std::string kind = r.field("durations");
    require(kind == "gaussian" || kind == "table", ErrorCode::ParseError, "unknown duration kind " + kind);
    if (kind == "gaussian") {
        std::vector<double> means, sds;
        for (StateIndex i = 0; i < q; ++i) {
            const auto t = r.record("duration", buf);
            expect_count(t, 2, "duration");
            means.push_back(parse_double(t[0]));
            sds.push_back(parse_double(t[1]));
        }
        m.durations = DurationModel::gaussian(std::move(means), std::move(sds), max_d);
    } else {
        Grid<double> logs(q, max_d);
        for (StateIndex i = 0; i < q; ++i) {
            const auto t = r.record("duration", buf);
            expect_count(t, max_d, "duration");
            for (Tick d = 0; d < max_d; ++d) logs(i, d) = parse_double(t[d]);
        }
        m.durations = DurationModel::from_log_pmf(std::move(logs));
    }
    std::vector<ChannelEmissionModel> models;
    for (ChannelId c : channels) {
        Grid<double> means(q, f);
        for (StateIndex i = 0; i < q; ++i) {
            const auto t = r.record("emission", buf);
            expect_count(t, f + 2, "emission");
            require(parse_channel_or_throw(t[0]) == c && parse_count(t[1]) == i, ErrorCode::ParseError,
                    "emission rows out of order");
            for (std::size_t n = 0; n < f; ++n) means(i, n) = parse_double(t[n + 2]);
        }
        models.emplace_back(c, std::move(means));
    }
    m.emissions = EmissionSet(std::move(models));
    r.record("end", buf);
    m.validate();
    return m;
}

inline void write_model(std::ostream& out, const HsmmModel& m) {
    write_header(out, "hsmm-model");
    write_model_body(out, m);
}

inline HsmmModel read_model(std::istream& in) {
    LineReader r(in);
    r.expect_header("hsmm-model");
    return read_model_body(r);
}

// ---------------------------------------------------------------------------
// Transition library: parameters, then per chain its key and both models.

inline void write_library(std::ostream& out, const TransitionLibrary& lib) {
    write_header(out, "transition-library");
    out << "k_max: " << lib.params.k_max << '\n';
    out << "static_threshold: " << format_double(lib.params.static_threshold) << '\n';
    out << "ratio_threshold: " << format_double(lib.params.ratio_threshold) << '\n';
    out << "chains: " << lib.chains.size() << '\n';
    for (const TransitionChain& c : lib.chains) {
        out << "chain " << pose_name(c.key.from) << ' ' << pose_name(c.key.to) << ' '
            << direction_name(c.key.direction) << ' ' << c.length << '\n';
        write_model_body(out, c.keyframe_model);
        write_model_body(out, c.full_rate_model);
    }
}

inline TransitionLibrary read_library(std::istream& in) {
    LineReader r(in);
    r.expect_header("transition-library");
    TransitionLibrary lib;
    lib.params.k_max = r.count_field("k_max");
    lib.params.static_threshold = parse_double(r.field("static_threshold"));
    lib.params.ratio_threshold = parse_double(r.field("ratio_threshold"));
    const std::size_t n = r.count_field("chains");
    std::string buf;
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = r.record("chain", buf);
        expect_count(t, 4, "chain");
        TransitionChain c;
        c.key = {parse_pose_or_throw(t[0]), parse_pose_or_throw(t[1]), parse_direction_or_throw(t[2])};
        c.length = parse_count(t[3]);
        c.keyframe_model = read_model_body(r);
        c.full_rate_model = read_model_body(r);
        require(c.keyframe_model.num_states() == c.length && c.full_rate_model.num_states() == c.length,
                ErrorCode::ParseError, "chain models disagree with the chain length");
        require(lib.chains.empty() || lib.chains.back().key < c.key, ErrorCode::ParseError,
                "library chains must be sorted and unique");
        lib.chains.push_back(std::move(c));
    }
    return lib;
}

// ---------------------------------------------------------------------------
// Decoder output.

struct SegmentationFile {
    StateSpace states;
    Segmentation segmentation;
    double log_prob = kNegInf;
    std::vector<double> per_segment_scores;
};

inline void write_segmentation(std::ostream& out, const DecodeResult& d, const StateSpace& states) {
    write_header(out, "segmentation");
    out << "length: " << d.segmentation.length << '\n';
    out << "log_prob: " << format_double(d.log_prob) << '\n';
    write_states(out, states);
    out << "segments: " << d.segmentation.segments.size() << '\n';
    for (std::size_t u = 0; u < d.segmentation.segments.size(); ++u) {
        const Segment& s = d.segmentation.segments[u];
        out << "segment " << s.start << ' ' << s.duration << ' ' << s.state << ' ' << pose_name(states[s.state].pose)
            << ' ' << scene_name(states[s.state].scene) << ' ' << format_double(d.per_segment_scores[u]) << '\n';
    }
}

inline SegmentationFile read_segmentation(std::istream& in) {
    LineReader r(in);
    r.expect_header("segmentation");
    SegmentationFile sf;
    sf.segmentation.length = r.count_field("length");
    sf.log_prob = parse_double(r.field("log_prob"));
    sf.states = read_states(r);
    const std::size_t n = r.count_field("segments");
    std::string buf;
    for (std::size_t u = 0; u < n; ++u) {
        const auto t = r.record("segment", buf);
        expect_count(t, 6, "segment");
        const Segment s{parse_count(t[0]), parse_count(t[1]), parse_count(t[2])};
        require(s.state < sf.states.size(), ErrorCode::ParseError, "segment state outside the listed states");
        sf.segmentation.segments.push_back(s);
        sf.per_segment_scores.push_back(parse_double(t[5]));
    }
    validate(sf.segmentation);
    return sf;
}

// ---------------------------------------------------------------------------
// Summaries, keyframes and transition records. Only the transition record is
// read back (by evaluate); the others are terminal outputs.

inline void write_history(std::ostream& out, std::span<const HistoryRecord> records, double tick_seconds) {
    write_header(out, "history");
    out << "tick_seconds: " << format_shortest(tick_seconds) << '\n';
    out << "windows: " << records.size() << '\n';
    out << "# window <start tick> <ticks> <pose> <symbol> <scene> <confidence> <start s> <end s>\n";
    for (const HistoryRecord& h : records) {
        const double begin = static_cast<double>(h.window_start - 1) * tick_seconds;
        const double end = static_cast<double>(h.window_start - 1 + h.window_len) * tick_seconds;
        out << "window " << h.window_start << ' ' << h.window_len << ' ' << pose_name(h.label) << ' '
            << pose_symbol(h.label) << ' ' << scene_name(h.scene) << ' ' << format_shortest(h.confidence) << ' '
            << format_shortest(begin) << ' ' << format_shortest(end) << '\n';
    }
}

inline void write_keyframes(std::ostream& out, const KeyframeSet& kf) {
    write_header(out, "keyframes");
    out << "k_max: " << kf.k_max << '\n';
    out << "threshold: " << format_shortest(kf.threshold) << '\n';
    out << "static: " << (kf.static_clip ? "yes" : "no") << '\n';
    out << "keyframes: " << kf.frames.size() << '\n';
    out << "# keyframe <frame> <view> <modality> <score> <stage>\n";
    for (const Keyframe& k : kf.frames)
        out << "keyframe " << k.frame_index << ' ' << view_name(k.channel.view) << ' '
            << modality_name(k.channel.modality) << ' ' << format_shortest(k.score) << ' ' << k.stage << '\n';
}

inline void write_transition(std::ostream& out, const TransitionRecord& t) {
    write_header(out, "transition");
    out << "transition " << pose_name(t.from) << ' ' << pose_name(t.to) << ' ' << direction_name(t.direction) << ' '
        << format_double(t.log_prob) << ' ' << t.n_pseudo_poses << '\n';
}

inline TransitionRecord read_transition(std::istream& in) {
    LineReader r(in);
    r.expect_header("transition");
    std::string buf;
    const auto t = r.record("transition", buf);
    expect_count(t, 5, "transition");
    return {parse_pose_or_throw(t[0]), parse_pose_or_throw(t[1]), parse_direction_or_throw(t[2]), parse_double(t[3]),
            parse_count(t[4])};
}

// ---------------------------------------------------------------------------
// File helpers.

template <typename Fn>
auto with_input(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::InvalidArgument, "cannot open " + path);
    return fn(in);
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::InvalidArgument, "cannot write " + path);
    fn(out);
    out.flush();
    require(out.good(), ErrorCode::InvalidArgument, "write failed: " + path);
}

inline void save_model(const std::string& path, const HsmmModel& m) {
    with_output(path, [&](std::ostream& o) { write_model(o, m); });
}

inline HsmmModel load_model(const std::string& path) {
    return with_input(path, [](std::istream& i) { return read_model(i); });
}

inline FeatureStream load_stream(const std::string& path) {
    return with_input(path, [](std::istream& i) { return read_stream(i); });
}

inline TruthFile load_truth(const std::string& path) {
    return with_input(path, [](std::istream& i) { return read_truth(i); });
}

}  // namespace posehsmm::io
