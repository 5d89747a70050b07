#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tacsearch {

// Escapes backslash, tab and newline as \\, \t, \n so the value fits in one
// tab-separated field.
std::string escape_field(std::string_view raw);

// Inverse of escape_field. Throws ParseError on a dangling or unknown escape.
std::string unescape_field(std::string_view escaped);

std::vector<std::string> split_tabs(std::string_view line);

// Whitespace tokenization used for desk-scale tactic "tokens".
std::vector<std::string> split_whitespace(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

// Compact decimal formatting used in dumps and CSVs ("%.10g").
std::string format_double(double value);

// 53-bit uniform draw in [0,1) from a raw 64-bit RNG output.
double unit_double(unsigned long long bits);

// splitmix64-style mix for deriving independent seed streams.
unsigned long long mix_seed(unsigned long long base, unsigned long long salt);

}  // namespace tacsearch
