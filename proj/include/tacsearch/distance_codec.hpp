#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tacsearch {

// A root-to-leaf path in the balanced binary tree over 1..2^L, stored as the
// 1-based bucket index at each level: entry k is which of the 2^k equal
// buckets the number falls in. Consecutive entries refine each other:
// t_{k+1} in {2*t_k - 1, 2*t_k}. Lexicographic order on entries equals
// numeric order of the encoded values, and a shared prefix of length p bounds
// the numeric gap below 2^(L-p).
struct DistancePath {
    std::vector<int> entries;

    int levels() const { return static_cast<int>(entries.size()); }
    bool operator==(const DistancePath& other) const { return entries == other.entries; }
};

inline constexpr int kDefaultDistanceLevels = 6;  // range 1..64

// Largest representable value at a level count.
int distance_max_value(int levels);

// Bucket path of n: entry k = ceil(n / 2^(L-k)). Values above 2^L clamp to
// 2^L. Throws DomainError for n < 1, ConfigError for a bad level count.
DistancePath encode_distance(long long n, int levels = kDefaultDistanceLevels);

// Validates both invariants and returns the final entry. decode after encode
// is the identity on 1..2^L (clamped above). Throws ValidationError.
int decode_distance(const DistancePath& path);

void validate_distance_path(const DistancePath& path);

// Lexicographic comparison (-1/0/+1); equals numeric comparison of decoded
// values. Level mismatch throws ContractError.
int compare_distance(const DistancePath& a, const DistancePath& b);

// <num_box><|num-t-of-d|>...</num_box> with one token per level in order.
std::string serialize_distance_tokens(const DistancePath& path);

// Exact inverse of serialize_distance_tokens; validates the grammar, the
// level order and the path invariants. Throws ParseError / ValidationError.
DistancePath parse_distance_tokens(std::string_view text);

}  // namespace tacsearch
