#ifndef SKETCHREC_SIMILARITY_HPP
#define SKETCHREC_SIMILARITY_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sketchrec/corpus.hpp"

namespace sketchrec {

// Neighbor selection rule: either the k most similar items or every item
// whose similarity clears a threshold.
struct NeighborPolicy {
    enum class Kind { kKnn, kThreshold };

    Kind kind = Kind::kKnn;
    std::uint32_t k = 20;
    double tau = 0.0;

    static NeighborPolicy knn(std::uint32_t k);        // k >= 1
    static NeighborPolicy threshold(double tau);       // 0 < tau <= 1

    std::string to_string() const;                     // "knn:20" / "threshold:0.2"
    static NeighborPolicy parse(std::string_view text);
};

enum class SimilarityMode { kExact, kSketch };

std::string_view to_string(SimilarityMode mode) noexcept;
SimilarityMode parse_similarity_mode(std::string_view text);

struct Neighbor {
    std::string product_id;
    double similarity = 0.0;  // in (0, 1]

    bool operator==(const Neighbor&) const = default;
};

// Precomputed per-item neighbor lists. Lists hold no self-pairs, are sorted
// by similarity descending with ties broken by ascending product id, and
// never store similarities of exactly 0. Immutable once built; reads are
// thread-safe.
class SimilarityModel {
public:
    SimilarityModel(SimilarityMode mode, NeighborPolicy policy)
        : mode_(mode), policy_(policy) {}

    SimilarityMode mode() const noexcept { return mode_; }
    const NeighborPolicy& policy() const noexcept { return policy_; }

    bool contains(std::string_view product_id) const;
    std::size_t product_count() const noexcept { return neighbors_.size(); }
    std::vector<std::string> product_ids() const;  // ascending

    // Throws std::out_of_range for products the model does not know.
    const std::vector<Neighbor>& neighbors(std::string_view product_id) const;

    // The neighbor set plus the item itself.
    std::set<std::string> neighbors_plus(std::string_view product_id) const;

    // The model's view of J(p, q): 1 when p == q, the stored value when q is
    // a neighbor of p, otherwise 0.
    double pair_similarity(std::string_view p, std::string_view q) const;

    void set_neighbors(std::string product_id, std::vector<Neighbor> list);
    void set_sketch(std::string product_id, LinearCountingSketch sketch);
    const std::map<std::string, LinearCountingSketch, std::less<>>& sketches() const {
        return sketches_;
    }

    // Versioned text format; writing a loaded model reproduces the input
    // byte for byte.
    void write(std::ostream& out) const;
    static SimilarityModel read(std::istream& in);

private:
    SimilarityMode mode_;
    NeighborPolicy policy_;
    std::map<std::string, std::vector<Neighbor>, std::less<>> neighbors_;
    std::map<std::string, LinearCountingSketch, std::less<>> sketches_;
};

// Exact Jaccard similarity of the two items' buyer sets; 0 when both are
// empty (unknown products count as empty).
double exact_jaccard(const Corpus& corpus, std::string_view p, std::string_view c);

// Jaccard estimated from the two items' sketches; unknown products behave
// as empty sketches.
double approx_jaccard(const Corpus& corpus, std::string_view p, std::string_view c);

struct BuildStats {
    std::uint64_t pair_evaluations = 0;  // similarity computations performed
};

// Off-line all-pairs model build over a frozen corpus. Every product gets a
// neighbor list (possibly empty). The pair space is partitioned across
// OpenMP threads; output is deterministic and identical to the serial
// reference below.
SimilarityModel build_model(const Corpus& corpus, const NeighborPolicy& policy,
                            SimilarityMode mode, BuildStats* stats = nullptr);

// Plain single-threaded all-pairs build, kept as the reference the parallel
// kernel is tested against.
SimilarityModel build_model_serial(const Corpus& corpus,
                                   const NeighborPolicy& policy,
                                   SimilarityMode mode,
                                   BuildStats* stats = nullptr);

struct MergeResult {
    Corpus corpus;
    std::map<std::string, std::string> representative;  // original -> cluster rep
};

// Single-linkage clustering of items whose exact Jaccard reaches theta.
// Each cluster becomes one synthetic item named after its lexicographically
// smallest member, with element-wise summed purchase counts and the union
// of buyer sets. Throws unless 0 < theta <= 1.
MergeResult merge_similar_items(const Corpus& corpus, double theta);

}  // namespace sketchrec

#endif
