#ifndef SKETCHREC_CORPUS_HPP
#define SKETCHREC_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sketchrec/sketch.hpp"

namespace sketchrec {

// The set of items a user has purchased, with quantities.
struct UserProfile {
    std::string user_id;
    std::map<std::string, std::uint64_t> purchased;  // product -> quantity
};

struct PurchaseEvent {
    std::int64_t timestamp = 0;  // epoch seconds; carried through, unused by scoring
    std::string user_id;
    std::string product_id;
    std::uint64_t quantity = 0;
};

// Ids appear verbatim in the CSV log and the model file, so they must be
// non-empty and free of whitespace, ',' and '='.
bool valid_id(std::string_view id) noexcept;

// Sparse product x user purchase-count matrix together with per-user profiles
// and per-item distinct-buyer sets and sketches. Append-only: events only
// accumulate, there are no deletions.
//
// Ingestion is single-writer; after freeze() the corpus is read-only and all
// queries may run concurrently.
class Corpus {
public:
    explicit Corpus(std::size_t sketch_m);

    // Applies one purchase: the (product, user) count grows by quantity, the
    // user joins the item's distinct-buyer set and sketch, and the user's
    // profile is updated. Throws on quantity == 0, invalid ids, or a frozen
    // corpus.
    void record_event(std::string_view user_id, std::string_view product_id,
                      std::uint64_t quantity);

    void freeze() noexcept { frozen_ = true; }
    bool frozen() const noexcept { return frozen_; }

    std::size_t sketch_width() const noexcept { return sketch_m_; }
    std::size_t product_count() const noexcept { return items_.size(); }
    std::size_t user_count() const noexcept { return profiles_.size(); }
    std::uint64_t event_count() const noexcept { return events_; }

    bool has_product(std::string_view product_id) const;
    std::vector<std::string> product_ids() const;  // ascending
    std::vector<std::string> user_ids() const;     // ascending

    // Unknown users yield an empty profile.
    UserProfile user_profile(std::string_view user_id) const;

    // Purchase count m[product, user]; 0 when absent.
    std::uint64_t purchase_count(std::string_view product_id,
                                 std::string_view user_id) const;

    // Count divided by the mean count over the item's buyers; 0 for
    // non-buyers, 1 when the user bought exactly the per-buyer average.
    double normalized_quantity(std::string_view product_id,
                               std::string_view user_id) const;

    // Distinct buyers of a product with their counts; an empty map for
    // unknown products.
    const std::map<std::string, std::uint64_t>& buyers(std::string_view product_id) const;

    // Throws std::out_of_range for unknown products.
    const LinearCountingSketch& sketch(std::string_view product_id) const;

private:
    struct Item {
        std::map<std::string, std::uint64_t> buyer_counts;
        std::uint64_t total_quantity = 0;
        LinearCountingSketch sketch;

        explicit Item(std::size_t m) : sketch(m) {}
    };

    std::size_t sketch_m_;
    bool frozen_ = false;
    std::uint64_t events_ = 0;
    std::map<std::string, Item, std::less<>> items_;
    std::map<std::string, std::map<std::string, std::uint64_t>, std::less<>> profiles_;
};

enum class MalformedRowPolicy {
    kAbort,         // fail on the first malformed row
    kSkipAndCount,  // skip malformed rows, collecting line numbers
};

struct EventLogReport {
    std::size_t applied = 0;  // rows parsed successfully
    std::size_t skipped = 0;
    std::vector<std::pair<std::size_t, std::string>> errors;  // line number, message
    bool aborted = false;

    bool ok() const noexcept { return !aborted && skipped == 0; }
};

// Parses the event log (UTF-8 CSV, header "timestamp,user_id,product_id,quantity",
// no quoting; fields must not contain commas). Parsed rows are appended to
// `out`. Under kAbort the first malformed row stops parsing and sets
// `aborted`; nothing is appended for the bad row either way.
EventLogReport read_event_log(std::istream& in, std::vector<PurchaseEvent>& out,
                              MalformedRowPolicy policy);

// Throws std::runtime_error when the file cannot be opened.
EventLogReport read_event_log_file(const std::filesystem::path& path,
                                   std::vector<PurchaseEvent>& out,
                                   MalformedRowPolicy policy);

// Reads the log and applies every row via record_event in file order.
// Under kAbort a malformed row leaves the corpus untouched.
EventLogReport load_events(const std::filesystem::path& path, Corpus& corpus,
                           MalformedRowPolicy policy);

// Accepts integer epoch seconds or ISO-8601 (YYYY-MM-DD, optionally
// Thh:mm:ss and a Z/+hh:mm/-hh:mm zone); returns epoch seconds.
std::optional<std::int64_t> parse_timestamp(std::string_view text) noexcept;

// Next power of two >= user_count / 10 (at least 1).
std::size_t auto_sketch_width(std::size_t user_count) noexcept;

}  // namespace sketchrec

#endif
