#include "sketchrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "sketchrec/hash.hpp"

namespace sketchrec {

namespace {

std::string id_token(std::uint64_t value) {
    char buffer[20];
    std::snprintf(buffer, sizeof buffer, "u%016llx",
                  static_cast<unsigned long long>(value));
    return buffer;
}

// n distinct fresh ids, appended to `out` and registered in `seen`.
void draw_distinct(SplitMix64& rng, std::size_t n,
                   std::unordered_set<std::uint64_t>& seen,
                   std::vector<std::uint64_t>& out) {
    while (out.size() < n) {
        const std::uint64_t id = rng.next();
        if (seen.insert(id).second) {
            out.push_back(id);
        }
    }
}

struct TrialResult {
    double rel_err_cardinality = 0.0;
    double abs_err_jaccard = 0.0;
};

TrialResult run_trial(std::size_t cardinality, std::size_t width,
                      std::uint64_t stream_seed) {
    SplitMix64 rng(stream_seed);
    TrialResult result;

    std::unordered_set<std::uint64_t> seen;
    std::vector<std::uint64_t> set_a;
    draw_distinct(rng, cardinality, seen, set_a);

    LinearCountingSketch sketch_a(width);
    for (std::uint64_t id : set_a) {
        sketch_a.insert(id_token(id));
    }
    const double estimate = sketch_a.estimate().value;
    result.rel_err_cardinality =
        cardinality == 0
            ? std::abs(estimate)
            : std::abs(estimate - static_cast<double>(cardinality)) /
                  static_cast<double>(cardinality);

    // Second set shares the first half of A; true Jaccard comes from the
    // exact construction.
    const std::size_t shared = cardinality / 2;
    std::vector<std::uint64_t> set_b(set_a.begin(),
                                     set_a.begin() + static_cast<std::ptrdiff_t>(shared));
    draw_distinct(rng, cardinality, seen, set_b);

    LinearCountingSketch sketch_b(width);
    for (std::uint64_t id : set_b) {
        sketch_b.insert(id_token(id));
    }
    const std::size_t union_size = 2 * cardinality - shared;
    const double true_jaccard =
        union_size == 0 ? 0.0
                        : static_cast<double>(shared) / static_cast<double>(union_size);
    result.abs_err_jaccard =
        std::abs(estimate_jaccard(sketch_a, sketch_b) - true_jaccard);
    return result;
}

double median(std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

std::vector<SketchEvalRow> run_sketch_eval(const std::vector<std::size_t>& cardinalities,
                                           const std::vector<std::size_t>& widths,
                                           std::size_t trials, std::uint64_t seed) {
    struct Cell {
        std::size_t cardinality;
        std::size_t width;
    };
    std::vector<Cell> cells;
    for (std::size_t n : cardinalities) {
        for (std::size_t m : widths) {
            cells.push_back(Cell{n, m});
        }
    }

    std::vector<std::vector<TrialResult>> results(cells.size());
    for (auto& cell_results : results) {
        cell_results.resize(trials);
    }

    const auto total = static_cast<std::int64_t>(cells.size() * trials);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t flat = 0; flat < total; ++flat) {
        const std::size_t cell = static_cast<std::size_t>(flat) / trials;
        const std::size_t trial = static_cast<std::size_t>(flat) % trials;
        const std::uint64_t stream_seed = splitmix64_mix(
            seed ^ (static_cast<std::uint64_t>(cell) << 32) ^ trial);
        results[cell][trial] =
            run_trial(cells[cell].cardinality, cells[cell].width, stream_seed);
    }

    std::vector<SketchEvalRow> rows;
    rows.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        SketchEvalRow row;
        row.cardinality = cells[c].cardinality;
        row.width = cells[c].width;
        row.trials = trials;
        std::vector<double> rel_errs;
        rel_errs.reserve(trials);
        double jaccard_err_sum = 0.0;
        for (const TrialResult& r : results[c]) {
            rel_errs.push_back(r.rel_err_cardinality);
            jaccard_err_sum += r.abs_err_jaccard;
        }
        row.median_rel_err_cardinality = median(rel_errs);
        row.mae_jaccard = trials == 0 ? 0.0 : jaccard_err_sum / static_cast<double>(trials);
        rows.push_back(row);
    }
    return rows;
}

void write_sketch_eval_csv(std::ostream& out, const std::vector<SketchEvalRow>& rows) {
    out << "n,m,trials,median_rel_err_cardinality,mae_jaccard\n";
    char buffer[160];
    for (const SketchEvalRow& row : rows) {
        std::snprintf(buffer, sizeof buffer, "%zu,%zu,%zu,%.6f,%.6f\n",
                      row.cardinality, row.width, row.trials,
                      row.median_rel_err_cardinality, row.mae_jaccard);
        out << buffer;
    }
}

namespace {

double set_overlap_jaccard(const std::vector<Neighbor>& a,
                           const std::vector<Neighbor>& b) {
    std::set<std::string> ids_a, ids_b, unions;
    for (const Neighbor& n : a) ids_a.insert(n.product_id);
    for (const Neighbor& n : b) ids_b.insert(n.product_id);
    if (ids_a.empty() && ids_b.empty()) {
        return 1.0;  // identical (empty) neighbor sets
    }
    unions = ids_a;
    unions.insert(ids_b.begin(), ids_b.end());
    std::size_t intersection = 0;
    for (const std::string& id : ids_a) {
        intersection += ids_b.count(id);
    }
    return static_cast<double>(intersection) / static_cast<double>(unions.size());
}

}  // namespace

CompareReport compare_exact_vs_sketch(const Corpus& corpus,
                                      const NeighborPolicy& policy,
                                      const ScoringConfig& config,
                                      bool objective) {
    const SimilarityModel exact = build_model(corpus, policy, SimilarityMode::kExact);
    const SimilarityModel sketch = build_model(corpus, policy, SimilarityMode::kSketch);

    CompareReport report;
    for (const std::string& id : corpus.product_ids()) {
        report.neighbor_overlap.emplace_back(
            id, set_overlap_jaccard(exact.neighbors(id), sketch.neighbors(id)));
    }

    auto top_recommendation = [&](const SimilarityModel& model,
                                  const UserProfile& profile) -> std::string {
        const std::vector<Recommendation> recs =
            objective ? recommend_objective(model, profile, config)
                      : recommend_subjective(corpus, model, profile, config);
        return recs.empty() ? std::string() : recs.front().product_id;
    };

    for (const std::string& user : corpus.user_ids()) {
        const UserProfile profile = corpus.user_profile(user);
        ++report.users_compared;
        if (top_recommendation(exact, profile) == top_recommendation(sketch, profile)) {
            ++report.top1_matches;
        }
    }
    report.top1_agreement =
        report.users_compared == 0
            ? 1.0
            : static_cast<double>(report.top1_matches) /
                  static_cast<double>(report.users_compared);
    return report;
}

void write_compare_csv(std::ostream& out, const CompareReport& report) {
    out << "metric,id,value\n";
    char buffer[160];
    for (const auto& [id, overlap] : report.neighbor_overlap) {
        std::snprintf(buffer, sizeof buffer, "neighbor_overlap,%s,%.6f\n", id.c_str(),
                      overlap);
        out << buffer;
    }
    std::snprintf(buffer, sizeof buffer, "top1_agreement,,%.6f\n",
                  report.top1_agreement);
    out << buffer;
}

}  // namespace sketchrec
