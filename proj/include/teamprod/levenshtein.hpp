#pragma once

#include <teamprod/util/text.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

namespace teamprod {

/// Unit-cost edit distance over code points (two-row dynamic program).
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
            diag = up;
        }
    }
    return row[b.size()];
}

/// UTF-8 convenience overload; distances count characters, not bytes.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(std::u32string_view(text::decode_utf8(a)), std::u32string_view(text::decode_utf8(b)));
}

}  // namespace teamprod
