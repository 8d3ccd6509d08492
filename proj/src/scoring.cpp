#include "sketchrec/scoring.hpp"

#include <algorithm>
#include <stdexcept>

namespace sketchrec {

void ScoringConfig::validate() const {
    if (depth_t > 2) {
        throw std::invalid_argument("preference depth is capped at 2");
    }
    if (ranking_cap_M && !(*ranking_cap_M > 0.0)) {
        throw std::invalid_argument("ranking cap must be positive");
    }
    if (top_n == 0) {
        throw std::invalid_argument("top_n must be at least 1");
    }
}

rank_value rho(std::uint64_t quantity, double cap) {
    if (!(cap > 0.0)) {
        throw std::invalid_argument("ranking cap must be positive");
    }
    const unsigned steps = quantity > 112 ? 112u : static_cast<unsigned>(quantity);
    rank_value tail = 1;  // 2^-steps
    for (unsigned i = 0; i < steps; ++i) {
        tail *= rank_value(0.5);
    }
    return rank_value(cap) * (rank_value(1) - tail);
}

std::set<std::string> candidates(const SimilarityModel& model,
                                 const UserProfile& profile,
                                 CandidatePolicy policy) {
    std::set<std::string> out;
    if (policy == CandidatePolicy::kNeighborsOfProfile) {
        for (const auto& [product, quantity] : profile.purchased) {
            for (const Neighbor& neighbor : model.neighbors(product)) {
                if (!profile.purchased.contains(neighbor.product_id)) {
                    out.insert(neighbor.product_id);
                }
            }
        }
    } else {
        for (std::string& id : model.product_ids()) {
            if (!profile.purchased.contains(id)) {
                out.insert(std::move(id));
            }
        }
    }
    return out;
}

double gamma(const Corpus& corpus, const SimilarityModel& model,
             std::string_view user_id, std::string_view product_id,
             std::uint32_t t, const ScoringConfig& config) {
    config.validate();
    if (t > config.depth_t) {
        throw std::invalid_argument("preference depth exceeds the configured cap");
    }
    if (!model.contains(product_id)) {
        throw std::out_of_range("unknown product: " + std::string(product_id));
    }
    if (t == 0) {
        if (config.ranking_cap_M) {
            return static_cast<double>(
                rho(corpus.purchase_count(product_id, user_id), *config.ranking_cap_M));
        }
        return corpus.normalized_quantity(product_id, user_id);
    }
    // Self term carries similarity 1; neighbors carry their stored value.
    double total = gamma(corpus, model, user_id, product_id, t - 1, config);
    for (const Neighbor& neighbor : model.neighbors(product_id)) {
        total += gamma(corpus, model, user_id, neighbor.product_id, t - 1, config) *
                 neighbor.similarity;
    }
    return total;
}

double subjective_similarity(const Corpus& corpus, const SimilarityModel& model,
                             std::string_view user_id, std::string_view p,
                             std::string_view c, const ScoringConfig& config) {
    if (!model.contains(c)) {
        throw std::out_of_range("unknown product: " + std::string(c));
    }
    return gamma(corpus, model, user_id, p, config.depth_t, config) *
           model.pair_similarity(p, c);
}

namespace {

void sort_and_cap(std::vector<Recommendation>& out, std::uint32_t top_n) {
    std::sort(out.begin(), out.end(),
              [](const Recommendation& a, const Recommendation& b) {
                  if (a.score != b.score) {
                      return a.score > b.score;
                  }
                  return a.product_id < b.product_id;
              });
    if (out.size() > top_n) {
        out.resize(top_n);
    }
}

}  // namespace

std::vector<Recommendation> recommend_objective(const SimilarityModel& model,
                                                const UserProfile& profile,
                                                const ScoringConfig& config) {
    config.validate();
    std::vector<Recommendation> out;
    if (profile.purchased.empty()) {
        return out;
    }
    for (const std::string& candidate :
         candidates(model, profile, config.candidate_policy)) {
        double best = 0.0;
        const std::string* source = nullptr;
        for (const auto& [product, quantity] : profile.purchased) {
            const double similarity = model.pair_similarity(product, candidate);
            if (similarity > best) {
                best = similarity;
                source = &product;
            }
        }
        if (best > 0.0) {
            out.push_back(Recommendation{candidate, best, *source});
        }
    }
    sort_and_cap(out, config.top_n);
    return out;
}

std::vector<Recommendation> recommend_subjective(const Corpus& corpus,
                                                 const SimilarityModel& model,
                                                 const UserProfile& profile,
                                                 const ScoringConfig& config) {
    config.validate();
    std::vector<Recommendation> out;
    if (profile.purchased.empty()) {
        return out;
    }
    // gamma depends on the profile item only, not the candidate.
    std::vector<std::pair<const std::string*, double>> preferences;
    preferences.reserve(profile.purchased.size());
    for (const auto& [product, quantity] : profile.purchased) {
        preferences.emplace_back(
            &product,
            gamma(corpus, model, profile.user_id, product, config.depth_t, config));
    }
    for (const std::string& candidate :
         candidates(model, profile, config.candidate_policy)) {
        double best = 0.0;
        const std::string* source = nullptr;
        for (const auto& [product, preference] : preferences) {
            const double score =
                preference * model.pair_similarity(*product, candidate);
            if (score > best) {
                best = score;
                source = product;
            }
        }
        if (best > 0.0) {
            out.push_back(Recommendation{candidate, best, *source});
        }
    }
    sort_and_cap(out, config.top_n);
    return out;
}

}  // namespace sketchrec
