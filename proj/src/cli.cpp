#include "sketchrec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sketchrec/corpus.hpp"
#include "sketchrec/eval.hpp"
#include "sketchrec/scoring.hpp"
#include "sketchrec/similarity.hpp"

namespace sketchrec {

namespace {

// Option values before type resolution; absent means "not given".
struct RawOptions {
    std::optional<std::string> events;
    std::optional<std::string> model;
    std::optional<std::string> user;
    std::optional<std::string> mode;
    std::optional<std::string> m;
    std::optional<std::string> candidates;
    std::optional<std::uint32_t> knn;
    std::optional<double> threshold;
    std::optional<std::uint32_t> depth;
    std::optional<double> ranking_cap;
    std::optional<std::uint32_t> top;
    std::optional<double> merge;
    std::optional<std::uint64_t> seed;
    bool objective = false;
    bool objective_given = false;
    std::optional<std::string> config;
};

const std::map<std::string, int>& known_config_keys() {
    // Config-file keys mirror the long flag names. Keys that do not apply to
    // the current command are ignored so one file can serve several commands.
    static const std::map<std::string, int> keys = {
        {"events", 0},   {"model", 0},       {"user", 0},  {"mode", 0},
        {"m", 0},        {"knn", 0},         {"threshold", 0},
        {"depth", 0},    {"ranking-cap", 0}, {"candidates", 0},
        {"top", 0},      {"merge", 0},       {"seed", 0},  {"objective", 0},
    };
    return keys;
}

std::string trim(std::string_view text) {
    const auto begin = text.find_first_not_of(" \t");
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = text.find_last_not_of(" \t");
    return std::string(text.substr(begin, end - begin + 1));
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::runtime_error("config file line " +
                                     std::to_string(line_number) +
                                     ": expected key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        if (!known_config_keys().contains(key)) {
            throw std::runtime_error("config file line " +
                                     std::to_string(line_number) +
                                     ": unknown key \"" + key + "\"");
        }
        values[key] = trim(stripped.substr(eq + 1));
    }
    return values;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* first = text.c_str();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("config key \"" + key + "\": bad value \"" +
                                 text + "\"");
    }
    return value;
}

template <>
double parse_number<double>(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
        throw std::runtime_error("config key \"" + key + "\": bad value \"" +
                                 text + "\"");
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw std::runtime_error("config key \"" + key + "\": bad value \"" + text +
                             "\"");
}

// Fills option values the command line left unset from the config file.
void apply_config(RawOptions& raw) {
    if (!raw.config) {
        return;
    }
    const auto values = parse_config_file(*raw.config);
    auto fill_string = [&](std::optional<std::string>& slot, const char* key) {
        auto it = values.find(key);
        if (!slot && it != values.end()) {
            slot = it->second;
        }
    };
    auto fill_u32 = [&](std::optional<std::uint32_t>& slot, const char* key) {
        auto it = values.find(key);
        if (!slot && it != values.end()) {
            slot = parse_number<std::uint32_t>(key, it->second);
        }
    };
    auto fill_u64 = [&](std::optional<std::uint64_t>& slot, const char* key) {
        auto it = values.find(key);
        if (!slot && it != values.end()) {
            slot = parse_number<std::uint64_t>(key, it->second);
        }
    };
    auto fill_double = [&](std::optional<double>& slot, const char* key) {
        auto it = values.find(key);
        if (!slot && it != values.end()) {
            slot = parse_number<double>(key, it->second);
        }
    };
    fill_string(raw.events, "events");
    fill_string(raw.model, "model");
    fill_string(raw.user, "user");
    fill_string(raw.mode, "mode");
    fill_string(raw.m, "m");
    fill_string(raw.candidates, "candidates");
    fill_u32(raw.knn, "knn");
    fill_double(raw.threshold, "threshold");
    fill_u32(raw.depth, "depth");
    fill_double(raw.ranking_cap, "ranking-cap");
    fill_u32(raw.top, "top");
    fill_double(raw.merge, "merge");
    fill_u64(raw.seed, "seed");
    if (!raw.objective_given) {
        auto it = values.find("objective");
        if (it != values.end()) {
            raw.objective = parse_bool("objective", it->second);
        }
    }
}

const std::string& require(const std::optional<std::string>& value,
                           const char* flag) {
    if (!value) {
        throw std::runtime_error(std::string("missing required --") + flag);
    }
    return *value;
}

NeighborPolicy resolve_policy(const RawOptions& raw) {
    if (raw.knn && raw.threshold) {
        throw std::runtime_error("--knn and --threshold are mutually exclusive");
    }
    if (raw.threshold) {
        return NeighborPolicy::threshold(*raw.threshold);
    }
    return NeighborPolicy::knn(raw.knn.value_or(20));
}

ScoringConfig resolve_scoring(const RawOptions& raw) {
    ScoringConfig config;
    config.depth_t = raw.depth.value_or(1);
    config.ranking_cap_M = raw.ranking_cap;
    config.top_n = raw.top.value_or(10);
    if (raw.candidates) {
        if (*raw.candidates == "neighbors") {
            config.candidate_policy = CandidatePolicy::kNeighborsOfProfile;
        } else if (*raw.candidates == "complement") {
            config.candidate_policy = CandidatePolicy::kComplementOfProfile;
        } else {
            throw std::runtime_error("--candidates must be neighbors or complement");
        }
    }
    config.validate();
    return config;
}

// "auto" resolves against the ingested user count once it is known.
std::size_t resolve_sketch_width(const std::optional<std::string>& m,
                                 std::size_t user_count) {
    if (!m || *m == "auto") {
        return auto_sketch_width(user_count);
    }
    const std::size_t value = parse_number<std::size_t>("m", *m);
    if (value == 0) {
        throw std::runtime_error("--m must be a positive integer or \"auto\"");
    }
    return value;
}

Corpus ingest_corpus(const std::string& events_path,
                     const std::optional<std::string>& m,
                     const std::optional<double>& merge_theta,
                     std::map<std::string, std::string>* merge_map,
                     std::ostream& err) {
    std::vector<PurchaseEvent> events;
    const EventLogReport report =
        read_event_log_file(events_path, events, MalformedRowPolicy::kAbort);
    if (report.aborted) {
        std::string message = "malformed event log";
        if (!report.errors.empty()) {
            message += ": line " + std::to_string(report.errors.front().first) +
                       ": " + report.errors.front().second;
        }
        throw std::runtime_error(message);
    }

    std::set<std::string> users;
    for (const PurchaseEvent& event : events) {
        users.insert(event.user_id);
    }
    Corpus corpus(resolve_sketch_width(m, users.size()));
    for (const PurchaseEvent& event : events) {
        corpus.record_event(event.user_id, event.product_id, event.quantity);
    }
    corpus.freeze();

    if (merge_theta) {
        MergeResult merged = merge_similar_items(corpus, *merge_theta);
        if (merged.corpus.product_count() < corpus.product_count()) {
            err << "info: merged " << corpus.product_count() << " items into "
                << merged.corpus.product_count() << " at threshold "
                << *merge_theta << "\n";
        }
        if (merge_map != nullptr) {
            *merge_map = std::move(merged.representative);
        }
        return std::move(merged.corpus);
    }
    return corpus;
}

int cmd_build(const RawOptions& raw, std::ostream& out, std::ostream& err) {
    const std::string& events_path = require(raw.events, "events");
    const std::string& model_path = require(raw.model, "model");
    const SimilarityMode mode =
        raw.mode ? parse_similarity_mode(*raw.mode) : SimilarityMode::kExact;
    const NeighborPolicy policy = resolve_policy(raw);

    const Corpus corpus = ingest_corpus(events_path, raw.m, raw.merge, nullptr, err);

    BuildStats stats;
    const auto start = std::chrono::steady_clock::now();
    const SimilarityModel model = build_model(corpus, policy, mode, &stats);
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;

    std::ofstream file(model_path);
    if (!file) {
        throw std::runtime_error("cannot write model file: " + model_path);
    }
    model.write(file);
    if (!file.flush()) {
        throw std::runtime_error("failed writing model file: " + model_path);
    }

    // Wall time stays on the diagnostic stream so the stdout report is
    // byte-identical across runs.
    char buffer[192];
    std::snprintf(buffer, sizeof buffer, "%s,%s,%zu,%zu,%llu,%llu\n",
                  std::string(to_string(mode)).c_str(), policy.to_string().c_str(),
                  corpus.product_count(), corpus.user_count(),
                  static_cast<unsigned long long>(corpus.event_count()),
                  static_cast<unsigned long long>(stats.pair_evaluations));
    out << "mode,policy,products,users,events,pair_evaluations\n" << buffer;
    std::snprintf(buffer, sizeof buffer, "build wall time: %.3f ms\n",
                  elapsed.count());
    err << buffer;
    return 0;
}

int cmd_recommend(const RawOptions& raw, std::ostream& out, std::ostream& err) {
    const std::string& model_path = require(raw.model, "model");
    const std::string& events_path = require(raw.events, "events");
    const std::string& user = require(raw.user, "user");
    const ScoringConfig config = resolve_scoring(raw);

    std::ifstream model_file(model_path);
    if (!model_file) {
        throw std::runtime_error("cannot open model file: " + model_path);
    }
    const SimilarityModel model = SimilarityModel::read(model_file);

    // Profiles are recomputed from the event log at query time; the model
    // file only carries the global item-to-item state.
    const Corpus corpus = ingest_corpus(events_path, raw.m, raw.merge, nullptr, err);

    const UserProfile profile = corpus.user_profile(user);
    if (profile.purchased.empty()) {
        return 0;  // unknown user or no purchases: nothing to suggest
    }
    const std::vector<Recommendation> recommendations =
        raw.objective ? recommend_objective(model, profile, config)
                      : recommend_subjective(corpus, model, profile, config);
    char buffer[192];
    for (std::size_t rank = 0; rank < recommendations.size(); ++rank) {
        const Recommendation& rec = recommendations[rank];
        std::snprintf(buffer, sizeof buffer, "%zu %s %.6f %s\n", rank + 1,
                      rec.product_id.c_str(), rec.score,
                      rec.best_source_item.c_str());
        out << buffer;
    }
    return 0;
}

int cmd_eval_sketch(const RawOptions& raw, std::ostream& out, std::ostream&) {
    if (!raw.seed) {
        throw std::runtime_error("eval-sketch needs --seed for reproducible reports");
    }
    std::vector<std::size_t> widths = {256, 1024, 4096};
    if (raw.m) {
        if (*raw.m == "auto") {
            throw std::runtime_error("--m auto is not meaningful for eval-sketch");
        }
        widths = {parse_number<std::size_t>("m", *raw.m)};
        if (widths[0] == 0) {
            throw std::runtime_error("--m must be a positive integer");
        }
    }
    const std::vector<std::size_t> cardinalities = {0, 100, 500, 1000, 2000};
    const std::vector<SketchEvalRow> rows =
        run_sketch_eval(cardinalities, widths, 200, *raw.seed);
    write_sketch_eval_csv(out, rows);
    return 0;
}

int cmd_compare(const RawOptions& raw, std::ostream& out, std::ostream& err) {
    const std::string& events_path = require(raw.events, "events");
    const NeighborPolicy policy = resolve_policy(raw);
    const ScoringConfig config = resolve_scoring(raw);

    const Corpus corpus = ingest_corpus(events_path, raw.m, raw.merge, nullptr, err);
    const CompareReport report =
        compare_exact_vs_sketch(corpus, policy, config, raw.objective);
    write_compare_csv(out, report);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Item-based recommendations from purchase logs, with exact or "
                 "linear-counting-sketch similarity"};
    app.require_subcommand(1);
    RawOptions raw;

    auto add_common = [&raw](CLI::App* cmd) {
        cmd->add_option("--config", raw.config,
                        "flat key=value config file; flags take precedence");
    };
    auto add_policy = [&raw](CLI::App* cmd) {
        CLI::Option* knn = cmd->add_option("--knn", raw.knn, "keep the k most similar items");
        CLI::Option* threshold = cmd->add_option(
            "--threshold", raw.threshold, "keep items with similarity >= tau");
        knn->excludes(threshold);
        threshold->excludes(knn);
    };
    std::vector<CLI::Option*> objective_flags;
    auto add_scoring = [&raw, &objective_flags](CLI::App* cmd) {
        cmd->add_option("--depth", raw.depth, "preference recursion depth (0-2)");
        cmd->add_option("--ranking-cap", raw.ranking_cap,
                        "cap for the saturating rank transform of quantities");
        cmd->add_option("--candidates", raw.candidates,
                        "candidate pool: neighbors or complement");
        cmd->add_option("--top", raw.top, "number of suggestions");
        objective_flags.push_back(
            cmd->add_flag("--objective", raw.objective,
                          "rank by plain similarity instead of preference-weighted"));
    };

    CLI::App* build = app.add_subcommand(
        "build", "ingest an event log and write the similarity model");
    build->add_option("--events", raw.events, "event log CSV path");
    build->add_option("--model", raw.model, "output model path");
    build->add_option("--mode", raw.mode, "similarity mode: exact or sketch");
    build->add_option("--m", raw.m, "sketch width in bits, or \"auto\"");
    build->add_option("--merge", raw.merge,
                      "merge items with similarity >= theta before building");
    add_policy(build);
    add_common(build);

    CLI::App* recommend =
        app.add_subcommand("recommend", "print ranked suggestions for a user");
    recommend->add_option("--model", raw.model, "model file path");
    recommend->add_option("--events", raw.events, "event log CSV path");
    recommend->add_option("--user", raw.user, "user id");
    recommend->add_option("--merge", raw.merge,
                          "apply the same merge threshold used at build time");
    add_scoring(recommend);
    add_common(recommend);

    CLI::App* eval = app.add_subcommand(
        "eval-sketch", "sketch accuracy sweep over synthetic sets");
    eval->add_option("--seed", raw.seed, "RNG seed (required)");
    eval->add_option("--m", raw.m, "restrict the sweep to one sketch width");
    add_common(eval);

    CLI::App* compare = app.add_subcommand(
        "compare", "build exact and sketch models and report their agreement");
    compare->add_option("--events", raw.events, "event log CSV path");
    compare->add_option("--m", raw.m, "sketch width in bits, or \"auto\"");
    compare->add_option("--merge", raw.merge,
                        "merge items with similarity >= theta before comparing");
    add_policy(compare);
    add_scoring(compare);
    add_common(compare);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    // The --objective flag default is indistinguishable from "not given";
    // track presence for config-file precedence.
    raw.objective_given = app.count_all("--objective") > 0;

    try {
        apply_config(raw);
        if (build->parsed()) return cmd_build(raw, out, err);
        if (recommend->parsed()) return cmd_recommend(raw, out, err);
        if (eval->parsed()) return cmd_eval_sketch(raw, out, err);
        if (compare->parsed()) return cmd_compare(raw, out, err);
        throw std::runtime_error("no command given");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sketchrec
