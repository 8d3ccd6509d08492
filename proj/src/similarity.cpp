#include "sketchrec/similarity.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sketchrec {

NeighborPolicy NeighborPolicy::knn(std::uint32_t k) {
    if (k == 0) {
        throw std::invalid_argument("knn policy needs k >= 1");
    }
    NeighborPolicy policy;
    policy.kind = Kind::kKnn;
    policy.k = k;
    return policy;
}

NeighborPolicy NeighborPolicy::threshold(double tau) {
    if (!(tau > 0.0) || tau > 1.0) {
        throw std::invalid_argument("threshold policy needs tau in (0, 1]");
    }
    NeighborPolicy policy;
    policy.kind = Kind::kThreshold;
    policy.tau = tau;
    return policy;
}

std::string NeighborPolicy::to_string() const {
    char buffer[48];
    if (kind == Kind::kKnn) {
        std::snprintf(buffer, sizeof buffer, "knn:%u", k);
    } else {
        std::snprintf(buffer, sizeof buffer, "threshold:%g", tau);
    }
    return buffer;
}

NeighborPolicy NeighborPolicy::parse(std::string_view text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw std::invalid_argument("bad neighbor policy: " + std::string(text));
    }
    const std::string_view kind = text.substr(0, colon);
    const std::string value(text.substr(colon + 1));
    if (kind == "knn") {
        const unsigned long k = std::strtoul(value.c_str(), nullptr, 10);
        if (k == 0 || std::to_string(k) != value) {
            throw std::invalid_argument("bad knn policy: " + std::string(text));
        }
        return knn(static_cast<std::uint32_t>(k));
    }
    if (kind == "threshold") {
        char* end = nullptr;
        const double tau = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size()) {
            throw std::invalid_argument("bad threshold policy: " + std::string(text));
        }
        return threshold(tau);
    }
    throw std::invalid_argument("bad neighbor policy: " + std::string(text));
}

std::string_view to_string(SimilarityMode mode) noexcept {
    return mode == SimilarityMode::kExact ? "exact" : "sketch";
}

SimilarityMode parse_similarity_mode(std::string_view text) {
    if (text == "exact") return SimilarityMode::kExact;
    if (text == "sketch") return SimilarityMode::kSketch;
    throw std::invalid_argument("bad similarity mode: " + std::string(text));
}

bool SimilarityModel::contains(std::string_view product_id) const {
    return neighbors_.find(product_id) != neighbors_.end();
}

std::vector<std::string> SimilarityModel::product_ids() const {
    std::vector<std::string> out;
    out.reserve(neighbors_.size());
    for (const auto& [id, list] : neighbors_) {
        out.push_back(id);
    }
    return out;
}

const std::vector<Neighbor>& SimilarityModel::neighbors(
    std::string_view product_id) const {
    auto it = neighbors_.find(product_id);
    if (it == neighbors_.end()) {
        throw std::out_of_range("unknown product: " + std::string(product_id));
    }
    return it->second;
}

std::set<std::string> SimilarityModel::neighbors_plus(
    std::string_view product_id) const {
    std::set<std::string> out;
    for (const Neighbor& neighbor : neighbors(product_id)) {
        out.insert(neighbor.product_id);
    }
    out.insert(std::string(product_id));
    return out;
}

double SimilarityModel::pair_similarity(std::string_view p,
                                        std::string_view q) const {
    if (p == q) {
        return 1.0;
    }
    for (const Neighbor& neighbor : neighbors(p)) {
        if (neighbor.product_id == q) {
            return neighbor.similarity;
        }
    }
    return 0.0;
}

void SimilarityModel::set_neighbors(std::string product_id,
                                    std::vector<Neighbor> list) {
    neighbors_[std::move(product_id)] = std::move(list);
}

void SimilarityModel::set_sketch(std::string product_id,
                                 LinearCountingSketch sketch) {
    sketches_.insert_or_assign(std::move(product_id), std::move(sketch));
}

double exact_jaccard(const Corpus& corpus, std::string_view p,
                     std::string_view c) {
    const auto& users_p = corpus.buyers(p);
    const auto& users_c = corpus.buyers(c);
    if (users_p.empty() && users_c.empty()) {
        return 0.0;
    }
    // Sorted-merge intersection count over the two buyer maps.
    std::size_t intersection = 0;
    auto it_p = users_p.begin();
    auto it_c = users_c.begin();
    while (it_p != users_p.end() && it_c != users_c.end()) {
        if (it_p->first < it_c->first) {
            ++it_p;
        } else if (it_c->first < it_p->first) {
            ++it_c;
        } else {
            ++intersection;
            ++it_p;
            ++it_c;
        }
    }
    const std::size_t unions = users_p.size() + users_c.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

double approx_jaccard(const Corpus& corpus, std::string_view p,
                      std::string_view c) {
    const LinearCountingSketch empty(corpus.sketch_width());
    const LinearCountingSketch& sketch_p =
        corpus.has_product(p) ? corpus.sketch(p) : empty;
    const LinearCountingSketch& sketch_c =
        corpus.has_product(c) ? corpus.sketch(c) : empty;
    return estimate_jaccard(sketch_p, sketch_c);
}

namespace {

struct Candidate {
    std::uint32_t index;
    double similarity;
};

// Applies the neighbor policy to one item's candidates. Candidates arrive in
// ascending index order; indices follow ascending product id.
std::vector<Neighbor> select_neighbors(std::vector<Candidate>& candidates,
                                       const NeighborPolicy& policy,
                                       const std::vector<std::string>& ids) {
    if (policy.kind == NeighborPolicy::Kind::kThreshold) {
        std::erase_if(candidates,
                      [&](const Candidate& c) { return c.similarity < policy.tau; });
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.similarity != b.similarity) {
                      return a.similarity > b.similarity;
                  }
                  return a.index < b.index;
              });
    if (policy.kind == NeighborPolicy::Kind::kKnn && candidates.size() > policy.k) {
        candidates.resize(policy.k);
    }
    std::vector<Neighbor> out;
    out.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        out.push_back(Neighbor{ids[c.index], c.similarity});
    }
    return out;
}

// Shared state for the exact-mode row kernel: per-item buyer-set sizes and
// the user -> item-indices inverted index, which yields intersection counts
// without touching pairs that share no buyer.
struct ExactIndex {
    std::vector<std::size_t> set_sizes;
    std::vector<std::vector<std::uint32_t>> user_items;

    ExactIndex(const Corpus& corpus, const std::vector<std::string>& ids) {
        set_sizes.resize(ids.size());
        std::map<std::string, std::vector<std::uint32_t>> by_user;
        for (std::uint32_t i = 0; i < ids.size(); ++i) {
            const auto& buyer_counts = corpus.buyers(ids[i]);
            set_sizes[i] = buyer_counts.size();
            for (const auto& [user, count] : buyer_counts) {
                by_user[user].push_back(i);
            }
        }
        user_items.reserve(by_user.size());
        for (auto& [user, items] : by_user) {
            user_items.push_back(std::move(items));
        }
    }
};

// Scratch buffers reused across rows within one thread.
struct RowScratch {
    std::vector<std::uint32_t> counts;
    std::vector<std::uint32_t> touched;
    std::vector<Candidate> candidates;
};

std::vector<Neighbor> exact_row(const ExactIndex& index,
                                const std::vector<const std::vector<std::uint32_t>*>& items_of_user,
                                std::uint32_t row,
                                const NeighborPolicy& policy,
                                const std::vector<std::string>& ids,
                                RowScratch& scratch,
                                std::uint64_t& evaluations) {
    scratch.touched.clear();
    scratch.candidates.clear();
    for (const auto* items : items_of_user) {
        for (std::uint32_t other : *items) {
            if (other == row) {
                continue;
            }
            if (scratch.counts[other]++ == 0) {
                scratch.touched.push_back(other);
            }
        }
    }
    std::sort(scratch.touched.begin(), scratch.touched.end());
    for (std::uint32_t other : scratch.touched) {
        const std::size_t intersection = scratch.counts[other];
        scratch.counts[other] = 0;
        const std::size_t unions =
            index.set_sizes[row] + index.set_sizes[other] - intersection;
        const double similarity =
            static_cast<double>(intersection) / static_cast<double>(unions);
        scratch.candidates.push_back(
            Candidate{other, similarity});
    }
    evaluations += scratch.touched.size();
    return select_neighbors(scratch.candidates, policy, ids);
}

std::vector<Neighbor> sketch_row(const std::vector<const LinearCountingSketch*>& sketches,
                                 std::uint32_t row,
                                 const NeighborPolicy& policy,
                                 const std::vector<std::string>& ids,
                                 RowScratch& scratch,
                                 std::uint64_t& evaluations) {
    scratch.candidates.clear();
    for (std::uint32_t other = 0; other < sketches.size(); ++other) {
        if (other == row) {
            continue;
        }
        const double similarity = estimate_jaccard(*sketches[row], *sketches[other]);
        ++evaluations;
        if (similarity > 0.0) {
            scratch.candidates.push_back(Candidate{other, similarity});
        }
    }
    return select_neighbors(scratch.candidates, policy, ids);
}

SimilarityModel assemble(const Corpus& corpus, const NeighborPolicy& policy,
                         SimilarityMode mode, const std::vector<std::string>& ids,
                         std::vector<std::vector<Neighbor>>& rows) {
    SimilarityModel model(mode, policy);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        model.set_neighbors(ids[i], std::move(rows[i]));
    }
    if (mode == SimilarityMode::kSketch) {
        for (const std::string& id : ids) {
            model.set_sketch(id, corpus.sketch(id));
        }
    }
    return model;
}

void require_frozen(const Corpus& corpus) {
    if (!corpus.frozen()) {
        throw std::logic_error("corpus must be frozen before building a model");
    }
}

// Per-row lists of the inverted-index entries for the row item's buyers.
std::vector<std::vector<const std::vector<std::uint32_t>*>> rows_by_buyer(
    const ExactIndex& index, std::size_t item_count) {
    std::vector<std::vector<const std::vector<std::uint32_t>*>> out(item_count);
    for (const auto& items : index.user_items) {
        for (std::uint32_t item : items) {
            out[item].push_back(&items);
        }
    }
    return out;
}

}  // namespace

SimilarityModel build_model(const Corpus& corpus, const NeighborPolicy& policy,
                            SimilarityMode mode, BuildStats* stats) {
    require_frozen(corpus);
    const std::vector<std::string> ids = corpus.product_ids();
    const auto count = static_cast<std::int64_t>(ids.size());
    std::vector<std::vector<Neighbor>> rows(ids.size());
    std::uint64_t evaluations = 0;

    if (mode == SimilarityMode::kExact) {
        const ExactIndex index(corpus, ids);
        const auto buyer_rows = rows_by_buyer(index, ids.size());
#pragma omp parallel reduction(+ : evaluations)
        {
            RowScratch scratch;
            scratch.counts.assign(ids.size(), 0);
#pragma omp for schedule(dynamic, 8)
            for (std::int64_t i = 0; i < count; ++i) {
                rows[static_cast<std::size_t>(i)] =
                    exact_row(index, buyer_rows[static_cast<std::size_t>(i)],
                              static_cast<std::uint32_t>(i), policy, ids, scratch,
                              evaluations);
            }
        }
    } else {
        std::vector<const LinearCountingSketch*> sketches;
        sketches.reserve(ids.size());
        for (const std::string& id : ids) {
            sketches.push_back(&corpus.sketch(id));
        }
#pragma omp parallel reduction(+ : evaluations)
        {
            RowScratch scratch;
#pragma omp for schedule(dynamic, 8)
            for (std::int64_t i = 0; i < count; ++i) {
                rows[static_cast<std::size_t>(i)] =
                    sketch_row(sketches, static_cast<std::uint32_t>(i), policy, ids,
                               scratch, evaluations);
            }
        }
    }
    if (stats != nullptr) {
        stats->pair_evaluations = evaluations;
    }
    return assemble(corpus, policy, mode, ids, rows);
}

SimilarityModel build_model_serial(const Corpus& corpus,
                                   const NeighborPolicy& policy,
                                   SimilarityMode mode, BuildStats* stats) {
    require_frozen(corpus);
    const std::vector<std::string> ids = corpus.product_ids();
    std::vector<std::vector<Neighbor>> rows(ids.size());
    std::uint64_t evaluations = 0;
    std::vector<Candidate> candidates;

    for (std::uint32_t i = 0; i < ids.size(); ++i) {
        candidates.clear();
        for (std::uint32_t j = 0; j < ids.size(); ++j) {
            if (j == i) {
                continue;
            }
            const double similarity =
                mode == SimilarityMode::kExact
                    ? exact_jaccard(corpus, ids[i], ids[j])
                    : estimate_jaccard(corpus.sketch(ids[i]), corpus.sketch(ids[j]));
            ++evaluations;
            if (similarity > 0.0) {
                candidates.push_back(Candidate{j, similarity});
            }
        }
        rows[i] = select_neighbors(candidates, policy, ids);
    }
    if (stats != nullptr) {
        stats->pair_evaluations = evaluations;
    }
    return assemble(corpus, policy, mode, ids, rows);
}

namespace {

// Union-find over item indices.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) {
            parent_[i] = static_cast<std::uint32_t>(i);
        }
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void merge(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            // Attach the larger index under the smaller so the root is the
            // lexicographically smallest member (ids are sorted by index).
            if (a < b) {
                parent_[b] = a;
            } else {
                parent_[a] = b;
            }
        }
    }

private:
    std::vector<std::uint32_t> parent_;
};

}  // namespace

MergeResult merge_similar_items(const Corpus& corpus, double theta) {
    if (!(theta > 0.0) || theta > 1.0) {
        throw std::invalid_argument("merge threshold must be in (0, 1]");
    }
    require_frozen(corpus);
    const std::vector<std::string> ids = corpus.product_ids();
    const ExactIndex index(corpus, ids);

    // Intersection counts for co-occurring unordered pairs.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> pair_counts;
    for (const auto& items : index.user_items) {
        for (std::size_t a = 0; a < items.size(); ++a) {
            for (std::size_t b = a + 1; b < items.size(); ++b) {
                ++pair_counts[{items[a], items[b]}];
            }
        }
    }

    DisjointSets clusters(ids.size());
    for (const auto& [pair, intersection] : pair_counts) {
        const std::size_t unions =
            index.set_sizes[pair.first] + index.set_sizes[pair.second] - intersection;
        const double similarity =
            static_cast<double>(intersection) / static_cast<double>(unions);
        if (similarity >= theta) {
            clusters.merge(pair.first, pair.second);
        }
    }

    // Merged purchase columns: element-wise sums over each cluster.
    std::map<std::string, std::map<std::string, std::uint64_t>> merged_columns;
    std::map<std::string, std::string> representative;
    for (std::uint32_t i = 0; i < ids.size(); ++i) {
        const std::string& rep = ids[clusters.find(i)];
        representative[ids[i]] = rep;
        auto& column = merged_columns[rep];
        for (const auto& [user, count] : corpus.buyers(ids[i])) {
            column[user] += count;
        }
    }

    MergeResult result{Corpus(corpus.sketch_width()), std::move(representative)};
    for (const auto& [rep, column] : merged_columns) {
        for (const auto& [user, count] : column) {
            result.corpus.record_event(user, rep, count);
        }
    }
    result.corpus.freeze();
    return result;
}

namespace {

constexpr std::string_view kModelMagic = "sketchrec-model";
constexpr std::string_view kModelVersion = "v1";

std::string format_similarity(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", value);
    return buffer;
}

[[noreturn]] void model_parse_error(std::size_t line_number, const std::string& what) {
    throw std::runtime_error("model file line " + std::to_string(line_number) +
                             ": " + what);
}

}  // namespace

void SimilarityModel::write(std::ostream& out) const {
    out << kModelMagic << ' ' << kModelVersion << " mode=" << to_string(mode_)
        << " policy=" << policy_.to_string() << '\n';
    for (const auto& [id, list] : neighbors_) {
        out << "item " << id << " :";
        for (const Neighbor& neighbor : list) {
            out << ' ' << neighbor.product_id << '='
                << format_similarity(neighbor.similarity);
        }
        out << '\n';
    }
    for (const auto& [id, sketch] : sketches_) {
        out << "sketch " << id << " : " << sketch.serialize() << '\n';
    }
}

SimilarityModel SimilarityModel::read(std::istream& in) {
    std::string line;
    std::size_t line_number = 1;
    if (!std::getline(in, line)) {
        model_parse_error(line_number, "empty file");
    }
    std::istringstream header(line);
    std::string magic, version, mode_field, policy_field;
    if (!(header >> magic >> version >> mode_field >> policy_field) ||
        magic != kModelMagic) {
        model_parse_error(line_number, "bad header");
    }
    if (version != kModelVersion) {
        model_parse_error(line_number, "unsupported version: " + version);
    }
    if (mode_field.rfind("mode=", 0) != 0 || policy_field.rfind("policy=", 0) != 0) {
        model_parse_error(line_number, "bad header fields");
    }
    SimilarityModel model(parse_similarity_mode(mode_field.substr(5)),
                          NeighborPolicy::parse(policy_field.substr(7)));

    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string tag, id, colon;
        if (!(row >> tag >> id >> colon) || colon != ":") {
            model_parse_error(line_number, "expected \"item|sketch <id> : ...\"");
        }
        if (tag == "item") {
            std::vector<Neighbor> list;
            std::string token;
            while (row >> token) {
                const std::size_t eq = token.find('=');
                if (eq == std::string::npos || eq == 0) {
                    model_parse_error(line_number, "bad neighbor token: " + token);
                }
                char* end = nullptr;
                const std::string value = token.substr(eq + 1);
                const double similarity = std::strtod(value.c_str(), &end);
                if (value.empty() || end != value.c_str() + value.size()) {
                    model_parse_error(line_number, "bad similarity: " + value);
                }
                list.push_back(Neighbor{token.substr(0, eq), similarity});
            }
            model.set_neighbors(id, std::move(list));
        } else if (tag == "sketch") {
            std::string width, hex;
            if (!(row >> width >> hex)) {
                model_parse_error(line_number, "bad sketch line");
            }
            model.set_sketch(id, LinearCountingSketch::deserialize(width + " " + hex));
        } else {
            model_parse_error(line_number, "unknown record type: " + tag);
        }
    }
    return model;
}

}  // namespace sketchrec
