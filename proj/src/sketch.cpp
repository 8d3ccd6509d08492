#include "sketchrec/sketch.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sketchrec/hash.hpp"

namespace sketchrec {

LinearCountingSketch::LinearCountingSketch(std::size_t m)
    : m_(m), bytes_((m + 7) / 8, 0) {
    if (m == 0) {
        throw std::invalid_argument("sketch width must be at least 1");
    }
}

void LinearCountingSketch::insert(std::string_view element) {
    const std::size_t bucket = fnv1a64(element) % m_;
    bytes_[bucket >> 3] |= static_cast<std::uint8_t>(0x80u >> (bucket & 7));
    ++inserted_events_;
}

bool LinearCountingSketch::bit(std::size_t index) const {
    if (index >= m_) {
        throw std::out_of_range("bit index exceeds sketch width");
    }
    return (bytes_[index >> 3] & (0x80u >> (index & 7))) != 0;
}

std::size_t LinearCountingSketch::zero_count() const noexcept {
    std::size_t ones = 0;
    std::size_t i = 0;
    for (; i + 8 <= bytes_.size(); i += 8) {
        std::uint64_t word;
        std::memcpy(&word, bytes_.data() + i, 8);
        ones += static_cast<std::size_t>(std::popcount(word));
    }
    for (; i < bytes_.size(); ++i) {
        ones += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(bytes_[i])));
    }
    return m_ - ones;
}

CardinalityEstimate LinearCountingSketch::estimate() const noexcept {
    const std::size_t zeros = zero_count();
    CardinalityEstimate out;
    if (zeros == m_) {
        return out;  // empty sketch, exactly 0
    }
    out.saturated = (zeros == 0);
    const std::size_t clamped = out.saturated ? 1 : zeros;
    out.value = -static_cast<double>(m_) *
                std::log(static_cast<double>(clamped) / static_cast<double>(m_));
    if (out.value == 0.0) {
        out.value = 0.0;  // normalize -0.0 (width-1 sketch saturates at 0)
    }
    return out;
}

LinearCountingSketch sketch_union(const LinearCountingSketch& a,
                                  const LinearCountingSketch& b) {
    if (a.m_ != b.m_) {
        throw std::invalid_argument("cannot union sketches of different widths");
    }
    LinearCountingSketch out(a.m_);
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) {
        out.bytes_[i] = a.bytes_[i] | b.bytes_[i];
    }
    out.inserted_events_ = a.inserted_events_ + b.inserted_events_;
    return out;
}

double estimate_intersection(const LinearCountingSketch& a,
                             const LinearCountingSketch& b) {
    const double union_est = sketch_union(a, b).estimate().value;
    const double inter = a.estimate().value + b.estimate().value - union_est;
    return inter > 0.0 ? inter : 0.0;
}

double estimate_jaccard(const LinearCountingSketch& a,
                        const LinearCountingSketch& b) {
    const double union_est = sketch_union(a, b).estimate().value;
    if (union_est <= 0.0) {
        return 0.0;
    }
    double inter = a.estimate().value + b.estimate().value - union_est;
    if (inter < 0.0) {
        inter = 0.0;
    }
    const double jaccard = inter / union_est;
    if (jaccard < 0.0) return 0.0;
    if (jaccard > 1.0) return 1.0;
    return jaccard;
}

std::string LinearCountingSketch::serialize() const {
    static const char* kHexDigits = "0123456789abcdef";
    std::string out = std::to_string(m_);
    out += ' ';
    out.reserve(out.size() + bytes_.size() * 2);
    for (std::uint8_t byte : bytes_) {
        out += kHexDigits[byte >> 4];
        out += kHexDigits[byte & 0x0f];
    }
    return out;
}

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

}  // namespace

LinearCountingSketch LinearCountingSketch::deserialize(std::string_view text) {
    const std::size_t space = text.find(' ');
    if (space == std::string_view::npos || space == 0) {
        throw std::invalid_argument("malformed sketch: expected \"<m> <hex>\"");
    }
    std::size_t m = 0;
    for (char c : text.substr(0, space)) {
        if (c < '0' || c > '9') {
            throw std::invalid_argument("malformed sketch: non-decimal width");
        }
        m = m * 10 + static_cast<std::size_t>(c - '0');
    }
    if (m == 0) {
        throw std::invalid_argument("malformed sketch: width must be at least 1");
    }
    const std::string_view hex = text.substr(space + 1);
    LinearCountingSketch out(m);
    if (hex.size() != out.bytes_.size() * 2) {
        throw std::invalid_argument("malformed sketch: hex length does not match width");
    }
    for (std::size_t i = 0; i < out.bytes_.size(); ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("malformed sketch: invalid hex digit");
        }
        out.bytes_[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    if (m % 8 != 0) {
        const std::uint8_t tail_mask =
            static_cast<std::uint8_t>(0xffu >> (m % 8));
        if (out.bytes_.back() & tail_mask) {
            throw std::invalid_argument("malformed sketch: bits set past width");
        }
    }
    return out;
}

}  // namespace sketchrec
