#ifndef SKETCHREC_EVAL_HPP
#define SKETCHREC_EVAL_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sketchrec/corpus.hpp"
#include "sketchrec/scoring.hpp"
#include "sketchrec/similarity.hpp"

namespace sketchrec {

struct SketchEvalRow {
    std::size_t cardinality = 0;   // true distinct count per trial
    std::size_t width = 0;         // sketch bits
    std::size_t trials = 0;
    double median_rel_err_cardinality = 0.0;
    double mae_jaccard = 0.0;
};

// Synthetic accuracy sweep: per (cardinality, width) cell and trial, draws a
// fresh set of that many distinct ids, measures the cardinality estimate's
// relative error, then measures |estimated - true| Jaccard against a second
// set sharing half the ids. Trials run in parallel but each one derives its
// own generator from (seed, cell, trial), so the output is identical for a
// fixed seed at any thread count.
std::vector<SketchEvalRow> run_sketch_eval(const std::vector<std::size_t>& cardinalities,
                                           const std::vector<std::size_t>& widths,
                                           std::size_t trials, std::uint64_t seed);

// CSV: n,m,trials,median_rel_err_cardinality,mae_jaccard
void write_sketch_eval_csv(std::ostream& out, const std::vector<SketchEvalRow>& rows);

struct CompareReport {
    // Per item: Jaccard overlap between the exact-mode and sketch-mode
    // neighbor id sets (1.0 when both are empty).
    std::vector<std::pair<std::string, double>> neighbor_overlap;
    std::size_t users_compared = 0;
    std::size_t top1_matches = 0;
    double top1_agreement = 1.0;  // matches / users; 1.0 with no users
};

// Builds exact and sketch models over the same frozen corpus and quantifies
// their agreement: per-item neighbor-set overlap plus the share of users
// whose top-1 recommendation coincides (two empty lists count as a match).
CompareReport compare_exact_vs_sketch(const Corpus& corpus,
                                      const NeighborPolicy& policy,
                                      const ScoringConfig& config,
                                      bool objective);

// CSV: metric,id,value
void write_compare_csv(std::ostream& out, const CompareReport& report);

}  // namespace sketchrec

#endif
