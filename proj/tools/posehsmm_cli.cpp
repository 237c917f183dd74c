#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posehsmm/io.hpp"
#include "posehsmm/training.hpp"

namespace fs = std::filesystem;
using namespace posehsmm;
using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

// ---------------------------------------------------------------------------
// Scenario configuration: built-in preset, optionally overridden by a JSON
// file. Relative config paths and unknown preset names are looked up in
// $POSEHSMM_CONFIG_DIR.

std::optional<fs::path> config_dir() {
    if (const char* d = std::getenv("POSEHSMM_CONFIG_DIR"); d != nullptr && *d != '\0') return fs::path(d);
    return std::nullopt;
}

fs::path resolve_config(const std::string& name) {
    fs::path p(name);
    if (p.is_relative() && !fs::exists(p))
        if (const auto dir = config_dir(); dir && fs::exists(*dir / p)) return *dir / p;
    require(fs::exists(p), ErrorCode::InvalidArgument, "config file not found: " + name);
    return p;
}

SceneRegime regime_from(const json& j, SceneRegime r) {
    r.noise = j.value("noise", r.noise);
    r.dropout = j.value("dropout", r.dropout);
    return r;
}

void apply_overrides(ScenarioConfig& c, const json& j) {
    require(j.is_object(), ErrorCode::InvalidArgument, "scenario config must be a JSON object");
    c.num_poses = j.value("num_poses", c.num_poses);
    c.scene_doubling = j.value("scene_doubling", c.scene_doubling);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    if (j.contains("channels")) {
        c.channels.clear();
        for (const auto& name : j.at("channels")) c.channels.push_back(io::parse_channel_or_throw(name.get<std::string>()));
    }
    if (j.contains("bright")) c.bright = regime_from(j.at("bright"), c.bright);
    if (j.contains("dark")) c.dark = regime_from(j.at("dark"), c.dark);
    if (j.contains("start_scene")) c.start_scene = io::parse_scene_or_throw(j.at("start_scene").get<std::string>());
    c.scene_switch = j.value("scene_switch", c.scene_switch);
    c.duration_means = j.value("duration_means", c.duration_means);
    c.duration_stddevs = j.value("duration_stddevs", c.duration_stddevs);
    c.max_duration = j.value("max_duration", c.max_duration);
    c.length = j.value("length", c.length);
    c.world_seed = j.value("world_seed", c.world_seed);
    c.hold_min = j.value("hold_min", c.hold_min);
    c.hold_max = j.value("hold_max", c.hold_max);
    c.step_min = j.value("step_min", c.step_min);
    c.step_max = j.value("step_max", c.step_max);
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    require(in.good(), ErrorCode::InvalidArgument, "cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
}

ScenarioConfig load_scenario(const std::string& preset, const std::string& config_file) {
    std::optional<ScenarioConfig> c = scenario_preset(preset);
    if (!c) {
        const auto dir = config_dir();
        require(dir && fs::exists(*dir / (preset + ".json")), ErrorCode::InvalidArgument,
                "unknown preset '" + preset + "'");
        const json j = read_json(*dir / (preset + ".json"));
        c = scenario_preset(j.value("base", std::string("bc-sim")));
        require(c.has_value(), ErrorCode::InvalidArgument, "preset file names an unknown base preset");
        apply_overrides(*c, j);
    }
    if (!config_file.empty()) apply_overrides(*c, read_json(resolve_config(config_file)));
    return *c;
}

// ---------------------------------------------------------------------------
// Output helpers: write to a file when a path is given, stdout otherwise.

template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
    } else {
        io::with_output(path, fn);
    }
}

std::string truth_path_for(const std::string& out, const std::string& truth_out) {
    return truth_out.empty() ? out + ".truth" : truth_out;
}

void add_keyframe_flags(CLI::App* cmd, KeyframeParams& p) {
    cmd->add_option("--k-max", p.k_max, "Keyframe budget per clip")->capture_default_str()->check(CLI::Range(2, 64));
    cmd->add_option("--th", p.static_threshold, "Minimum endpoint dissimilarity for motion")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--ratio-th", p.ratio_threshold, "Stage-2 acceptance ratio against the best candidate")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
}

// ---------------------------------------------------------------------------
// Evaluation.

struct EvalRow {
    std::string name;
    std::string kind;
    std::size_t frames = 0;
    double frame_accuracy = 0.0;
    std::size_t windows = 0;
    double detection_rate = 0.0;
    bool transition_correct = false;
};

EvalRow evaluate_pair(const std::string& truth_path, const std::string& predicted_path, const HistoryParams& hp) {
    const io::TruthFile truth = io::load_truth(truth_path);
    std::ifstream in(predicted_path);
    require(in.good(), ErrorCode::InvalidArgument, "cannot open " + predicted_path);
    const std::string kind = io::file_kind(in);
    EvalRow row{predicted_path, kind};
    if (kind == "transition") {
        require(truth.transition.has_value(), ErrorCode::LabelMismatch,
                truth_path + " has no transition to compare against");
        const TransitionRecord rec = io::read_transition(in);
        row.transition_correct = rec.key() == TransitionKey{truth.transition->from, truth.transition->to,
                                                            truth.transition->direction};
        return row;
    }
    require(kind == "segmentation", ErrorCode::InvalidArgument,
            predicted_path + ": cannot evaluate a " + kind + " file");
    const io::SegmentationFile pred = io::read_segmentation(in);
    require(pred.segmentation.length == truth.segmentation.length, ErrorCode::LabelMismatch,
            "prediction and truth cover different lengths");
    const auto [p_pose, p_scene] = label_tracks(pred.segmentation, pred.states);
    const auto [t_pose, t_scene] = label_tracks(truth.segmentation, truth.states);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < p_pose.size(); ++t) hits += p_pose[t] == t_pose[t] ? 1 : 0;
    row.frames = p_pose.size();
    row.frame_accuracy = static_cast<double>(hits) / static_cast<double>(row.frames);
    const auto predicted = summarize_labels(p_pose, p_scene, hp);
    const auto reference = summarize_labels(t_pose, truth.scene_track, hp);
    row.windows = reference.size();
    row.detection_rate = window_detection_rate(predicted, reference);
    return row;
}

void print_evaluation(const std::vector<EvalRow>& rows, std::ostream& out) {
    std::size_t n_seq = 0, n_tr = 0, tr_hits = 0, frames = 0, windows = 0;
    double frame_hits = 0.0, window_hits = 0.0;
    out << std::left << std::setw(32) << "file" << std::right << std::setw(8) << "frames" << std::setw(12)
        << "frame_acc" << std::setw(9) << "windows" << std::setw(12) << "detection" << std::setw(12) << "transition"
        << '\n';
    for (const EvalRow& r : rows) {
        out << std::left << std::setw(32) << r.name << std::right << std::fixed << std::setprecision(4);
        if (r.kind == "transition") {
            out << std::setw(8) << "-" << std::setw(12) << "-" << std::setw(9) << "-" << std::setw(12) << "-"
                << std::setw(12) << (r.transition_correct ? "correct" : "wrong") << '\n';
            ++n_tr;
            tr_hits += r.transition_correct ? 1 : 0;
        } else {
            out << std::setw(8) << r.frames << std::setw(12) << r.frame_accuracy << std::setw(9) << r.windows
                << std::setw(12) << r.detection_rate << std::setw(12) << "-" << '\n';
            ++n_seq;
            frames += r.frames;
            windows += r.windows;
            frame_hits += r.frame_accuracy * static_cast<double>(r.frames);
            window_hits += r.detection_rate * static_cast<double>(r.windows);
        }
    }
    out.unsetf(std::ios::floatfield);
    out << '\n';
    for (const EvalRow& r : rows) {
        if (r.kind == "transition") {
            out << "record transition_correct " << r.name << ' ' << (r.transition_correct ? 1 : 0) << '\n';
        } else {
            out << "record frame_accuracy " << r.name << ' ' << io::format_shortest(r.frame_accuracy) << '\n';
            out << "record detection_rate " << r.name << ' ' << io::format_shortest(r.detection_rate) << '\n';
        }
    }
    if (n_seq > 0) {
        out << "record frame_accuracy all " << io::format_shortest(frame_hits / static_cast<double>(frames)) << '\n';
        out << "record detection_rate all " << io::format_shortest(window_hits / static_cast<double>(windows)) << '\n';
    }
    if (n_tr > 0)
        out << "record transition_accuracy all "
            << io::format_shortest(static_cast<double>(tr_hits) / static_cast<double>(n_tr)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pose history and transition analysis with hidden semi-Markov models"};
    app.require_subcommand(1);

    // simulate
    std::string preset = "bc-sim", config_file, out, truth_out;
    std::uint64_t seed = 1;
    std::optional<std::size_t> length;
    auto* simulate = app.add_subcommand("simulate", "Sample a labeled feature stream");
    simulate->add_option("--preset", preset, "bc-sim, do-sim, mixed-sim or a preset file in the config dir")
        ->capture_default_str();
    simulate->add_option("--config", config_file, "JSON overrides applied over the preset");
    simulate->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    simulate->add_option("--length", length, "Sequence length in ticks");
    simulate->add_option("--out", out, "Stream file")->required();
    simulate->add_option("--truth-out", truth_out, "Ground-truth sidecar (default <out>.truth)");

    // simulate-clip
    std::string from_name, to_name, direction_name_arg;
    auto* simulate_clip = app.add_subcommand("simulate-clip", "Sample one labeled transition clip");
    simulate_clip->add_option("--from", from_name, "Initial pose")->required();
    simulate_clip->add_option("--to", to_name, "Final pose")->required();
    simulate_clip->add_option("--direction", direction_name_arg, "left or right")->required();
    simulate_clip->add_option("--preset", preset)->capture_default_str();
    simulate_clip->add_option("--config", config_file);
    simulate_clip->add_option("--seed", seed)->capture_default_str();
    simulate_clip->add_option("--out", out, "Clip stream file")->required();
    simulate_clip->add_option("--truth-out", truth_out, "Ground-truth sidecar (default <out>.truth)");

    // train
    std::vector<std::string> streams, labels;
    std::optional<Tick> d_max;
    std::string model_out;
    auto* train = app.add_subcommand("train", "Fit an HSMM from labeled streams");
    train->add_option("--stream", streams, "Feature stream (repeatable)")->required();
    train->add_option("--labels", labels, "Ground-truth sidecar aligned with each stream")->required();
    train->add_option("--out-model", model_out, "Model file")->required();
    train->add_option("--d-max", d_max, "Duration truncation (default 3x the largest mean)")->check(CLI::PositiveNumber);

    // decode
    std::string model_path, stream_path;
    auto* decode = app.add_subcommand("decode", "Most likely segmentation of a stream");
    decode->add_option("--model", model_path)->required();
    decode->add_option("--stream", stream_path)->required();
    decode->add_option("--out", out, "Segmentation file (default stdout)");

    // summarize
    HistoryParams hp;
    double tick_seconds = 1.0;
    std::string segmentation_path;
    auto* summarize = app.add_subcommand("summarize", "Windowed pose history");
    summarize->add_option("--model", model_path);
    summarize->add_option("--stream", stream_path);
    summarize->add_option("--segmentation", segmentation_path, "Summarize an existing decode instead");
    summarize->add_option("--sample-every", hp.sample_every)->capture_default_str()->check(CLI::PositiveNumber);
    summarize->add_option("--window", hp.window)->capture_default_str()->check(CLI::PositiveNumber);
    summarize->add_option("--consistency", hp.consistency)->capture_default_str();
    summarize->add_option("--tick-seconds", tick_seconds)->capture_default_str()->check(CLI::PositiveNumber);
    summarize->add_option("--out", out);

    // keyframes
    KeyframeParams kp;
    auto* keyframes = app.add_subcommand("keyframes", "Keyframes of a transition clip");
    keyframes->add_option("--stream", stream_path)->required();
    add_keyframe_flags(keyframes, kp);
    keyframes->add_option("--out", out);

    // train-transitions
    std::vector<std::string> clips, clip_truths;
    std::string library_out;
    auto* train_transitions = app.add_subcommand("train-transitions", "Build a pseudo-pose chain library");
    train_transitions->add_option("--clip", clips, "Clip stream (repeatable)")->required();
    train_transitions->add_option("--truth", clip_truths, "Sidecar with the clip's transition label")->required();
    add_keyframe_flags(train_transitions, kp);
    train_transitions->add_option("--out-library", library_out)->required();

    // classify-transition
    std::string library_path;
    bool full_rate = false;
    auto* classify = app.add_subcommand("classify-transition", "Label a clip with (from, to, direction)");
    classify->add_option("--library", library_path)->required();
    classify->add_option("--stream", stream_path)->required();
    classify->add_flag("--full-rate", full_rate, "Score the whole clip with tick-level durations");
    classify->add_option("--out", out);

    // evaluate
    std::vector<std::string> truths, predictions;
    auto* evaluate = app.add_subcommand("evaluate", "Compare predictions with ground truth");
    evaluate->add_option("--truth", truths, "Ground-truth sidecar (repeatable)")->required();
    evaluate->add_option("--predicted", predictions, "Segmentation or transition file, paired in order")->required();
    evaluate->add_option("--sample-every", hp.sample_every)->capture_default_str()->check(CLI::PositiveNumber);
    evaluate->add_option("--window", hp.window)->capture_default_str()->check(CLI::PositiveNumber);
    evaluate->add_option("--consistency", hp.consistency)->capture_default_str();
    evaluate->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate) {
            ScenarioConfig c = load_scenario(preset, config_file);
            c.seed = seed;
            if (length) c.length = *length;
            const SimulatedSequence s = sample_sequence(c);
            io::with_output(out, [&](std::ostream& o) { io::write_stream(o, s.stream); });
            io::with_output(truth_path_for(out, truth_out), [&](std::ostream& o) { io::write_truth(o, s.truth); });
        } else if (*simulate_clip) {
            ScenarioConfig c = load_scenario(preset, config_file);
            c.seed = seed;
            const SimulatedSequence s =
                sample_transition_clip(io::parse_pose_or_throw(from_name), io::parse_pose_or_throw(to_name),
                                       io::parse_direction_or_throw(direction_name_arg), c);
            io::with_output(out, [&](std::ostream& o) { io::write_stream(o, s.stream); });
            io::with_output(truth_path_for(out, truth_out), [&](std::ostream& o) { io::write_truth(o, s.truth); });
        } else if (*train) {
            require(streams.size() == labels.size(), ErrorCode::InvalidArgument,
                    "give one --labels file per --stream");
            std::vector<FeatureStream> loaded;
            std::vector<std::vector<StateIndex>> label_tracks_;
            std::optional<StateSpace> space;
            for (std::size_t i = 0; i < streams.size(); ++i) {
                loaded.push_back(io::load_stream(streams[i]));
                const io::TruthFile t = io::load_truth(labels[i]);
                require(!space || *space == t.states, ErrorCode::LabelMismatch, "sidecars list different states");
                space = t.states;
                label_tracks_.push_back(decode_segments(t.segmentation));
            }
            std::vector<LabeledSequence> data;
            for (std::size_t i = 0; i < loaded.size(); ++i) data.push_back({&loaded[i], label_tracks_[i]});
            const HsmmModel m = train_hsmm(data, *space, {.max_duration = d_max});
            io::save_model(model_out, m);
        } else if (*decode) {
            const HsmmModel m = io::load_model(model_path);
            const DecodeResult d = hsmm_viterbi(io::load_stream(stream_path), m);
            emit(out, [&](std::ostream& o) { io::write_segmentation(o, d, m.states); });
        } else if (*summarize) {
            std::vector<HistoryRecord> records;
            if (!segmentation_path.empty()) {
                const io::SegmentationFile sf =
                    io::with_input(segmentation_path, [](std::istream& i) { return io::read_segmentation(i); });
                const auto [poses, scenes] = label_tracks(sf.segmentation, sf.states);
                records = summarize_labels(poses, scenes, hp);
            } else {
                require(!model_path.empty() && !stream_path.empty(), ErrorCode::InvalidArgument,
                        "summarize needs --model and --stream, or --segmentation");
                records = summarize_history(io::load_stream(stream_path), io::load_model(model_path), hp);
            }
            emit(out, [&](std::ostream& o) { io::write_history(o, records, tick_seconds); });
        } else if (*keyframes) {
            const KeyframeSet kf = select_keyframes(io::load_stream(stream_path), kp);
            emit(out, [&](std::ostream& o) { io::write_keyframes(o, kf); });
        } else if (*train_transitions) {
            require(clips.size() == clip_truths.size(), ErrorCode::InvalidArgument,
                    "give one --truth file per --clip");
            std::vector<FeatureStream> loaded;
            std::vector<TrainingClip> training;
            loaded.reserve(clips.size());
            for (std::size_t i = 0; i < clips.size(); ++i) {
                loaded.push_back(io::load_stream(clips[i]));
                const io::TruthFile t = io::load_truth(clip_truths[i]);
                require(t.transition.has_value(), ErrorCode::LabelMismatch, clip_truths[i] + " has no transition");
                training.push_back({&loaded.back(), {t.transition->from, t.transition->to, t.transition->direction}});
            }
            const TransitionLibrary lib = build_transition_library(training, kp);
            io::with_output(library_out, [&](std::ostream& o) { io::write_library(o, lib); });
        } else if (*classify) {
            const TransitionLibrary lib =
                io::with_input(library_path, [](std::istream& i) { return io::read_library(i); });
            const TransitionRecord r =
                classify_transition(io::load_stream(stream_path), lib, lib.params,
                                    full_rate ? ChainScoring::full_rate : ChainScoring::keyframes);
            emit(out, [&](std::ostream& o) { io::write_transition(o, r); });
        } else if (*evaluate) {
            require(truths.size() == predictions.size(), ErrorCode::InvalidArgument,
                    "give one --predicted file per --truth");
            std::vector<EvalRow> rows;
            for (std::size_t i = 0; i < truths.size(); ++i) rows.push_back(evaluate_pair(truths[i], predictions[i], hp));
            emit(out, [&](std::ostream& o) { print_evaluation(rows, o); });
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::NoFeasiblePath ? kExitInfeasible : kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return 0;
}
