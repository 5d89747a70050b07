#include "tacsearch/distance_codec.hpp"

#include <algorithm>

#include "tacsearch/errors.hpp"

namespace tacsearch {

namespace {
constexpr int kMaxLevels = 20;

void check_levels(int levels) {
    if (levels < 1 || levels > kMaxLevels)
        throw ConfigError("distance levels must lie in [1, " +
                          std::to_string(kMaxLevels) + "]");
}
}  // namespace

int distance_max_value(int levels) {
    check_levels(levels);
    return 1 << levels;
}

DistancePath encode_distance(long long n, int levels) {
    check_levels(levels);
    if (n < 1) throw DomainError("distance must be at least 1, got " + std::to_string(n));
    const long long max_value = 1LL << levels;
    const long long clamped = std::min(n, max_value);

    DistancePath path;
    path.entries.reserve(levels);
    for (int k = 1; k <= levels; ++k) {
        const long long bucket_width = 1LL << (levels - k);
        path.entries.push_back(
            static_cast<int>((clamped + bucket_width - 1) / bucket_width));
    }
    return path;
}

void validate_distance_path(const DistancePath& path) {
    check_levels(path.levels());
    for (int k = 1; k <= path.levels(); ++k) {
        const int entry = path.entries[k - 1];
        if (entry < 1 || entry > (1 << k))
            throw ValidationError("level " + std::to_string(k) + " entry " +
                                  std::to_string(entry) + " out of range 1..2^k");
        if (k > 1) {
            const int prev = path.entries[k - 2];
            if (entry != 2 * prev - 1 && entry != 2 * prev)
                throw ValidationError("entry " + std::to_string(entry) + " at level " +
                                      std::to_string(k) + " does not refine parent bucket " +
                                      std::to_string(prev));
        }
    }
}

int decode_distance(const DistancePath& path) {
    validate_distance_path(path);
    return path.entries.back();
}

int compare_distance(const DistancePath& a, const DistancePath& b) {
    if (a.levels() != b.levels())
        throw ContractError("compare_distance: level mismatch (" +
                            std::to_string(a.levels()) + " vs " +
                            std::to_string(b.levels()) + ")");
    for (int k = 0; k < a.levels(); ++k) {
        if (a.entries[k] != b.entries[k]) return a.entries[k] < b.entries[k] ? -1 : 1;
    }
    return 0;
}

std::string serialize_distance_tokens(const DistancePath& path) {
    validate_distance_path(path);
    std::string out = "<num_box>";
    for (int k = 1; k <= path.levels(); ++k) {
        out += "<|num-";
        out += std::to_string(path.entries[k - 1]);
        out += "-of-";
        out += std::to_string(1 << k);
        out += "|>";
    }
    out += "</num_box>";
    return out;
}

DistancePath parse_distance_tokens(std::string_view text) {
    constexpr std::string_view kOpen = "<num_box>";
    constexpr std::string_view kClose = "</num_box>";
    if (text.substr(0, kOpen.size()) != kOpen)
        throw ParseError("distance tokens must start with <num_box>");
    if (text.size() < kOpen.size() + kClose.size() ||
        text.substr(text.size() - kClose.size()) != kClose)
        throw ParseError("distance tokens must end with </num_box>");
    std::string_view body =
        text.substr(kOpen.size(), text.size() - kOpen.size() - kClose.size());

    DistancePath path;
    int level = 0;
    while (!body.empty()) {
        ++level;
        constexpr std::string_view kTokenOpen = "<|num-";
        if (body.substr(0, kTokenOpen.size()) != kTokenOpen)
            throw ParseError("expected <|num-t-of-d|> token at level " +
                             std::to_string(level));
        body.remove_prefix(kTokenOpen.size());
        size_t end = body.find("|>");
        if (end == std::string_view::npos)
            throw ParseError("unterminated token at level " + std::to_string(level));
        std::string_view inner = body.substr(0, end);
        body.remove_prefix(end + 2);

        size_t sep = inner.find("-of-");
        if (sep == std::string_view::npos)
            throw ParseError("token missing -of- separator at level " +
                             std::to_string(level));
        auto read_int = [&](std::string_view s) {
            if (s.empty()) throw ParseError("empty number in distance token");
            int value = 0;
            for (char c : s) {
                if (c < '0' || c > '9')
                    throw ParseError("non-digit in distance token");
                value = value * 10 + (c - '0');
                if (value > (1 << kMaxLevels))
                    throw ParseError("distance token value out of range");
            }
            return value;
        };
        int numerator = read_int(inner.substr(0, sep));
        int denominator = read_int(inner.substr(sep + 4));
        if (denominator != (1 << level))
            throw ParseError("level " + std::to_string(level) + " token denominator " +
                             std::to_string(denominator) + " must be " +
                             std::to_string(1 << level));
        path.entries.push_back(numerator);
    }
    if (path.entries.empty()) throw ParseError("distance token string has no levels");
    validate_distance_path(path);
    return path;
}

}  // namespace tacsearch
