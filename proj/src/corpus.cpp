#include "sketchrec/corpus.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace sketchrec {

bool valid_id(std::string_view id) noexcept {
    if (id.empty()) {
        return false;
    }
    for (char c : id) {
        if (c == ',' || c == '=' ||
            std::isspace(static_cast<unsigned char>(c)) != 0) {
            return false;
        }
    }
    return true;
}

Corpus::Corpus(std::size_t sketch_m) : sketch_m_(sketch_m) {
    if (sketch_m == 0) {
        throw std::invalid_argument("sketch width must be at least 1");
    }
}

void Corpus::record_event(std::string_view user_id, std::string_view product_id,
                          std::uint64_t quantity) {
    if (frozen_) {
        throw std::logic_error("corpus is frozen");
    }
    if (quantity == 0) {
        throw std::invalid_argument("quantity must be positive");
    }
    if (!valid_id(user_id) || !valid_id(product_id)) {
        throw std::invalid_argument("ids must be non-empty and free of whitespace, ',' and '='");
    }
    auto [item_it, item_inserted] =
        items_.try_emplace(std::string(product_id), sketch_m_);
    Item& item = item_it->second;
    auto [buyer_it, new_buyer] =
        item.buyer_counts.try_emplace(std::string(user_id), 0);
    buyer_it->second += quantity;
    item.total_quantity += quantity;
    if (new_buyer) {
        item.sketch.insert(user_id);
    }
    profiles_[std::string(user_id)][std::string(product_id)] += quantity;
    ++events_;
}

bool Corpus::has_product(std::string_view product_id) const {
    return items_.find(product_id) != items_.end();
}

std::vector<std::string> Corpus::product_ids() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [id, item] : items_) {
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> Corpus::user_ids() const {
    std::vector<std::string> out;
    out.reserve(profiles_.size());
    for (const auto& [id, profile] : profiles_) {
        out.push_back(id);
    }
    return out;
}

UserProfile Corpus::user_profile(std::string_view user_id) const {
    UserProfile profile;
    profile.user_id = std::string(user_id);
    auto it = profiles_.find(user_id);
    if (it != profiles_.end()) {
        profile.purchased = it->second;
    }
    return profile;
}

std::uint64_t Corpus::purchase_count(std::string_view product_id,
                                     std::string_view user_id) const {
    auto item_it = items_.find(product_id);
    if (item_it == items_.end()) {
        return 0;
    }
    auto buyer_it = item_it->second.buyer_counts.find(std::string(user_id));
    return buyer_it == item_it->second.buyer_counts.end() ? 0 : buyer_it->second;
}

double Corpus::normalized_quantity(std::string_view product_id,
                                   std::string_view user_id) const {
    const std::uint64_t count = purchase_count(product_id, user_id);
    if (count == 0) {
        return 0.0;
    }
    const Item& item = items_.find(product_id)->second;
    const double mean = static_cast<double>(item.total_quantity) /
                        static_cast<double>(item.buyer_counts.size());
    return static_cast<double>(count) / mean;
}

const std::map<std::string, std::uint64_t>& Corpus::buyers(
    std::string_view product_id) const {
    static const std::map<std::string, std::uint64_t> kEmpty;
    auto it = items_.find(product_id);
    return it == items_.end() ? kEmpty : it->second.buyer_counts;
}

const LinearCountingSketch& Corpus::sketch(std::string_view product_id) const {
    auto it = items_.find(product_id);
    if (it == items_.end()) {
        throw std::out_of_range("unknown product: " + std::string(product_id));
    }
    return it->second.sketch;
}

namespace {

bool parse_u64(std::string_view text, std::uint64_t& out) {
    if (text.empty()) {
        return false;
    }
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_fixed_digits(std::string_view text, std::size_t pos, int count,
                        int& out) {
    if (pos + static_cast<std::size_t>(count) > text.size()) {
        return false;
    }
    int value = 0;
    for (int i = 0; i < count; ++i) {
        const char c = text[pos + static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') {
            return false;
        }
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, int m, int d) noexcept {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_leap(int y) noexcept {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) noexcept {
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) {
        return 29;
    }
    return kDays[m - 1];
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) noexcept {
    if (text.empty()) {
        return std::nullopt;
    }
    // Integer epoch seconds, optionally negative.
    const bool maybe_epoch =
        (text[0] == '-' && text.size() > 1) || (text[0] >= '0' && text[0] <= '9');
    if (maybe_epoch && text.find('-', 1) == std::string_view::npos) {
        std::int64_t value = 0;
        auto [ptr, ec] =
            std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc() && ptr == text.data() + text.size()) {
            return value;
        }
        return std::nullopt;
    }

    // ISO-8601 date, optional time, optional zone.
    int year = 0, month = 0, day = 0;
    if (!parse_fixed_digits(text, 0, 4, year) || text.size() < 10 ||
        text[4] != '-' || !parse_fixed_digits(text, 5, 2, month) ||
        text[7] != '-' || !parse_fixed_digits(text, 8, 2, day)) {
        return std::nullopt;
    }
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    int hour = 0, minute = 0, second = 0;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == 't')) {
        if (!parse_fixed_digits(text, pos + 1, 2, hour) ||
            pos + 3 >= text.size() || text[pos + 3] != ':' ||
            !parse_fixed_digits(text, pos + 4, 2, minute) ||
            pos + 6 >= text.size() || text[pos + 6] != ':' ||
            !parse_fixed_digits(text, pos + 7, 2, second)) {
            return std::nullopt;
        }
        if (hour > 23 || minute > 59 || second > 60) {
            return std::nullopt;
        }
        pos += 9;
    }
    std::int64_t zone_offset = 0;
    if (pos < text.size()) {
        const char c = text[pos];
        if (c == 'Z' || c == 'z') {
            pos += 1;
        } else if (c == '+' || c == '-') {
            int zh = 0, zm = 0;
            if (!parse_fixed_digits(text, pos + 1, 2, zh) ||
                pos + 3 >= text.size() || text[pos + 3] != ':' ||
                !parse_fixed_digits(text, pos + 4, 2, zm) || zh > 23 || zm > 59) {
                return std::nullopt;
            }
            zone_offset = (c == '+' ? 1 : -1) * (zh * 3600 + zm * 60);
            pos += 6;
        }
    }
    if (pos != text.size()) {
        return std::nullopt;
    }
    const std::int64_t days = days_from_civil(year, month, day);
    return days * 86400 + hour * 3600 + minute * 60 + second - zone_offset;
}

namespace {

constexpr std::string_view kEventLogHeader = "timestamp,user_id,product_id,quantity";

// Splits on commas; returns false unless exactly four fields result.
bool split_row(std::string_view line, std::string_view fields[4]) {
    int count = 0;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (count == 4) {
            return false;
        }
        if (comma == std::string_view::npos) {
            fields[count++] = line.substr(start);
            break;
        }
        fields[count++] = line.substr(start, comma - start);
        start = comma + 1;
    }
    return count == 4;
}

}  // namespace

EventLogReport read_event_log(std::istream& in, std::vector<PurchaseEvent>& out,
                              MalformedRowPolicy policy) {
    EventLogReport report;
    std::string line;
    std::size_t line_number = 0;

    auto fail = [&](const std::string& message) {
        report.errors.emplace_back(line_number, message);
        if (policy == MalformedRowPolicy::kAbort) {
            report.aborted = true;
            return true;
        }
        ++report.skipped;
        return false;
    };

    if (!std::getline(in, line)) {
        line_number = 1;
        fail("missing header line");
        return report;
    }
    ++line_number;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kEventLogHeader) {
        report.errors.emplace_back(line_number, "bad header, expected \"" +
                                                    std::string(kEventLogHeader) + "\"");
        report.aborted = true;  // wrong format regardless of policy
        return report;
    }

    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::string_view fields[4];
        if (!split_row(line, fields)) {
            if (fail("expected 4 comma-separated fields")) return report;
            continue;
        }
        const std::optional<std::int64_t> ts = parse_timestamp(fields[0]);
        if (!ts) {
            if (fail("bad timestamp: \"" + std::string(fields[0]) + "\"")) return report;
            continue;
        }
        if (!valid_id(fields[1])) {
            if (fail("bad user id: \"" + std::string(fields[1]) + "\"")) return report;
            continue;
        }
        if (!valid_id(fields[2])) {
            if (fail("bad product id: \"" + std::string(fields[2]) + "\"")) return report;
            continue;
        }
        std::uint64_t quantity = 0;
        if (!parse_u64(fields[3], quantity) || quantity == 0) {
            if (fail("quantity must be a positive integer, got \"" +
                     std::string(fields[3]) + "\"")) {
                return report;
            }
            continue;
        }
        out.push_back(PurchaseEvent{*ts, std::string(fields[1]),
                                    std::string(fields[2]), quantity});
        ++report.applied;
    }
    return report;
}

EventLogReport read_event_log_file(const std::filesystem::path& path,
                                   std::vector<PurchaseEvent>& out,
                                   MalformedRowPolicy policy) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open event log: " + path.string());
    }
    return read_event_log(in, out, policy);
}

EventLogReport load_events(const std::filesystem::path& path, Corpus& corpus,
                           MalformedRowPolicy policy) {
    std::vector<PurchaseEvent> events;
    EventLogReport report = read_event_log_file(path, events, policy);
    if (report.aborted) {
        return report;
    }
    for (const PurchaseEvent& event : events) {
        corpus.record_event(event.user_id, event.product_id, event.quantity);
    }
    return report;
}

std::size_t auto_sketch_width(std::size_t user_count) noexcept {
    const std::size_t target = (user_count + 9) / 10;
    return std::bit_ceil(target < 1 ? std::size_t{1} : target);
}

}  // namespace sketchrec
