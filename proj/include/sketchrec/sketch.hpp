#ifndef SKETCHREC_SKETCH_HPP
#define SKETCHREC_SKETCH_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sketchrec {

struct CardinalityEstimate {
    double value = 0.0;      // estimated number of distinct elements, >= 0
    bool saturated = false;  // zero-bit count was clamped to 1 (all bits set)
};

// Linear-counting sketch: an m-bit vector where each element sets the bucket
// at hash % m. The distinct count is estimated as -m * ln(zero_bits / m).
//
// Insertions need exclusive access; a fully built sketch is immutable value
// data and safe for concurrent readers.
class LinearCountingSketch {
public:
    // Throws std::invalid_argument when m == 0.
    explicit LinearCountingSketch(std::size_t m);

    std::size_t width() const noexcept { return m_; }

    // Number of insert() calls, kept for diagnostics only. Not serialized
    // and ignored by same_bits().
    std::uint64_t inserted_events() const noexcept { return inserted_events_; }

    // Idempotent: re-inserting an element leaves the bits unchanged.
    void insert(std::string_view element);

    bool bit(std::size_t index) const;
    std::size_t zero_count() const noexcept;
    std::size_t ones_count() const noexcept { return m_ - zero_count(); }

    // Saturation (no zero bits left) clamps the count to 1 and sets the flag
    // instead of failing; the estimate is then m * ln(m).
    CardinalityEstimate estimate() const noexcept;

    bool same_bits(const LinearCountingSketch& other) const noexcept {
        return m_ == other.m_ && bytes_ == other.bytes_;
    }

    // "<m> <hex>": width in decimal, then the bit vector as lowercase hex,
    // MSB-first within each byte, bit 0 in the first byte's high bit.
    // Round-trips bit-exactly; inserted_events resets to 0 on deserialize.
    std::string serialize() const;
    static LinearCountingSketch deserialize(std::string_view text);

    friend LinearCountingSketch sketch_union(const LinearCountingSketch& a,
                                             const LinearCountingSketch& b);

private:
    std::size_t m_ = 0;
    std::vector<std::uint8_t> bytes_;  // ceil(m/8) bytes, unused tail bits zero
    std::uint64_t inserted_events_ = 0;
};

// Bitwise OR of two sketches of equal width; throws std::invalid_argument on
// mismatched widths. Commutative, associative, idempotent.
LinearCountingSketch sketch_union(const LinearCountingSketch& a,
                                  const LinearCountingSketch& b);

// Inclusion-exclusion intersection estimate est(a) + est(b) - est(a|b),
// clamped below at 0.
double estimate_intersection(const LinearCountingSketch& a,
                             const LinearCountingSketch& b);

// Intersection estimate over union estimate, clamped to [0, 1]; returns 0
// when the union estimate is 0. Symmetric in its arguments bit-for-bit.
double estimate_jaccard(const LinearCountingSketch& a,
                        const LinearCountingSketch& b);

}  // namespace sketchrec

#endif
