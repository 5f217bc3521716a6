#pragma once

// Line-level diff with a canonical alignment:
//   1. the common prefix is matched;
//   2. the common suffix of the remainder is matched;
//   3. the middle is aligned by walking the LCS table forwards, taking a match
//      whenever the heads are equal, otherwise deleting when that keeps the
//      LCS length (ties favour deletion) and inserting otherwise.
// A middle larger than `max_cells` is reported as one replace hunk.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace teamprod::diff {

struct Hunk {
    std::size_t pre_start = 0;   // first removed line in the old text
    std::size_t removed = 0;     // number of removed lines
    std::size_t post_start = 0;  // first added line in the new text
    std::size_t added = 0;

    friend bool operator==(const Hunk&, const Hunk&) = default;
};

inline constexpr std::size_t default_max_cells = std::size_t{1} << 24;

namespace detail {

inline void intern(const std::vector<std::string>& a, const std::vector<std::string>& b, std::vector<std::uint32_t>& ia,
                   std::vector<std::uint32_t>& ib) {
    std::unordered_map<std::string_view, std::uint32_t> ids;
    auto id_of = [&](const std::string& s) {
        auto [it, inserted] = ids.emplace(s, static_cast<std::uint32_t>(ids.size()));
        return it->second;
    };
    ia.reserve(a.size());
    ib.reserve(b.size());
    for (const auto& s : a) ia.push_back(id_of(s));
    for (const auto& s : b) ib.push_back(id_of(s));
}

}  // namespace detail

/// Replace hunks, ascending, turning `before` into `after`.
inline std::vector<Hunk> diff_lines(const std::vector<std::string>& before, const std::vector<std::string>& after,
                                    std::size_t max_cells = default_max_cells) {
    std::vector<std::uint32_t> a, b;
    detail::intern(before, after, a, b);
    const std::size_t n = a.size(), m = b.size();
    std::size_t prefix = 0;
    while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
    std::size_t suffix = 0;
    while (suffix < n - prefix && suffix < m - prefix && a[n - 1 - suffix] == b[m - 1 - suffix]) ++suffix;

    const std::size_t rows = n - prefix - suffix, cols = m - prefix - suffix;
    std::vector<Hunk> hunks;
    if (rows == 0 && cols == 0) return hunks;
    if (rows == 0 || cols == 0 || rows * cols > max_cells) {
        hunks.push_back({prefix, rows, prefix, cols});
        return hunks;
    }

    // lcs[i][j] = LCS length of a[prefix+i..] and b[prefix+j..] within the middle.
    const std::size_t width = cols + 1;
    std::vector<std::uint32_t> lcs((rows + 1) * width, 0);
    for (std::size_t i = rows; i-- > 0;) {
        for (std::size_t j = cols; j-- > 0;) {
            if (a[prefix + i] == b[prefix + j])
                lcs[i * width + j] = lcs[(i + 1) * width + j + 1] + 1;
            else
                lcs[i * width + j] = std::max(lcs[(i + 1) * width + j], lcs[i * width + j + 1]);
        }
    }

    std::size_t i = 0, j = 0;
    Hunk open{};
    bool in_hunk = false;
    auto close = [&] {
        if (in_hunk) hunks.push_back(open);
        in_hunk = false;
    };
    auto touch = [&] {
        if (!in_hunk) {
            open = {prefix + i, 0, prefix + j, 0};
            in_hunk = true;
        }
    };
    while (i < rows || j < cols) {
        if (i < rows && j < cols && a[prefix + i] == b[prefix + j]) {
            close();
            ++i;
            ++j;
        } else if (j == cols || (i < rows && lcs[(i + 1) * width + j] >= lcs[i * width + j + 1])) {
            touch();
            ++open.removed;
            ++i;
        } else {
            touch();
            ++open.added;
            ++j;
        }
    }
    close();
    return hunks;
}

struct PairedLines {
    std::vector<std::pair<std::size_t, std::size_t>> modifications;  // (removed idx, added idx)
    std::vector<std::size_t> deletions;
    std::vector<std::size_t> additions;
};

/// Positional pairing inside one replace hunk: the i-th removed line becomes
/// the i-th added line; leftovers are pure deletions or additions. Indices are
/// positions within the hunk.
inline PairedLines pair_hunk_lines(std::size_t removed, std::size_t added) {
    PairedLines out;
    std::size_t common = std::min(removed, added);
    for (std::size_t k = 0; k < common; ++k) out.modifications.emplace_back(k, k);
    for (std::size_t k = common; k < removed; ++k) out.deletions.push_back(k);
    for (std::size_t k = common; k < added; ++k) out.additions.push_back(k);
    return out;
}

}  // namespace teamprod::diff
