#ifndef SKETCHREC_SCORING_HPP
#define SKETCHREC_SCORING_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sketchrec/corpus.hpp"
#include "sketchrec/similarity.hpp"

namespace sketchrec {

enum class CandidatePolicy {
    kNeighborsOfProfile,   // union of the profile items' neighbor sets
    kComplementOfProfile,  // every known product the user has not bought
};

struct ScoringConfig {
    // Preference recursion depth; deeper than 2 buys little accuracy and is
    // rejected by validate().
    std::uint32_t depth_t = 1;
    // When set, the base preference switches from the buyer-normalized
    // quantity to the saturating rank transform rho with this cap.
    std::optional<double> ranking_cap_M;
    CandidatePolicy candidate_policy = CandidatePolicy::kNeighborsOfProfile;
    std::uint32_t top_n = 10;

    void validate() const;  // throws std::invalid_argument
};

struct Recommendation {
    std::string product_id;
    double score = 0.0;             // > 0
    std::string best_source_item;   // profile item attaining the max score
};

// Quad precision keeps rho strictly increasing through quantity 64 and
// strictly below the cap, which double arithmetic cannot represent.
using rank_value = __float128;

// Saturating rank transform cap * (1 - 2^-quantity): 0 at quantity 0 and
// approaching (never reaching) the cap. Quantities past 112 collapse to the
// quantity-112 value, the largest representable below the cap.
rank_value rho(std::uint64_t quantity, double cap);

// Products eligible for recommendation; already-purchased items are always
// excluded.
std::set<std::string> candidates(const SimilarityModel& model,
                                 const UserProfile& profile,
                                 CandidatePolicy policy);

// Recursive user preference for a product. Depth 0 is the base preference
// (normalized quantity, or rho of the raw count when a ranking cap is set);
// depth t folds in the preferences of neighboring items weighted by their
// similarity, with the self term weighted 1.
double gamma(const Corpus& corpus, const SimilarityModel& model,
             std::string_view user_id, std::string_view product_id,
             std::uint32_t t, const ScoringConfig& config);

// gamma(p) * J(p, c): item-pair similarity biased by the user's attachment
// to p.
double subjective_similarity(const Corpus& corpus, const SimilarityModel& model,
                             std::string_view user_id, std::string_view p,
                             std::string_view c, const ScoringConfig& config);

// Candidates ranked by max over profile items of J(p, c); descending score,
// ties by ascending product id, zero scores dropped, at most top_n entries.
// An empty profile yields an empty list.
std::vector<Recommendation> recommend_objective(const SimilarityModel& model,
                                                const UserProfile& profile,
                                                const ScoringConfig& config);

// As recommend_objective with J replaced by the subjective similarity.
std::vector<Recommendation> recommend_subjective(const Corpus& corpus,
                                                 const SimilarityModel& model,
                                                 const UserProfile& profile,
                                                 const ScoringConfig& config);

}  // namespace sketchrec

#endif
