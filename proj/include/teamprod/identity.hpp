#pragma once

// Author disambiguation. A declared heuristic stand-in: explicit alias map,
// then case-folded e-mail, then (optionally) normalized name.

#include <teamprod/ingest.hpp>
#include <teamprod/util/csv.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace teamprod::ingest {

using NameEmail = std::pair<std::string, std::string>;

struct Identity {
    std::string canonical_id;
    std::set<NameEmail> aliases;

    friend bool operator==(const Identity&, const Identity&) = default;
};

struct AliasEntry {
    std::string name;  // empty matches any name
    std::string email;
    std::string canonical_id;
};

struct IdentityHeuristics {
    bool merge_by_email = true;
    bool merge_by_name = false;
};

inline std::vector<AliasEntry> read_alias_map(std::string_view text) {
    csv::Table t(text, "alias map");
    t.require({"name", "email", "canonical_id"});
    std::vector<AliasEntry> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        AliasEntry e{t.at(i, "name"), t.at(i, "email"), t.at(i, "canonical_id")};
        if (e.email.empty() || e.canonical_id.empty())
            throw Error(ErrorKind::malformed_input,
                        "alias map row " + std::to_string(i + 2) + ": email and canonical_id are required");
        out.push_back(std::move(e));
    }
    return out;
}

namespace identity_detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

inline void unite_by_key(DisjointSets& sets, const std::vector<std::string>& keys) {
    std::map<std::string, std::size_t> first;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i].empty()) continue;
        auto [it, inserted] = first.emplace(keys[i], i);
        if (!inserted) sets.unite(it->second, i);
    }
}

}  // namespace identity_detail

/// Resolves every (name, email) pair in the stream onto one identity. The
/// canonical id of a group is the smallest alias-map id that applies to it,
/// otherwise its lexicographically smallest case-folded e-mail.
inline std::pair<CommitStream, std::vector<Identity>> resolve_identities(CommitStream stream,
                                                                         const std::vector<AliasEntry>& alias_map = {},
                                                                         const IdentityHeuristics& heuristics = {}) {
    std::vector<NameEmail> pairs;
    std::map<NameEmail, std::size_t> pair_index;
    for (const auto& c : stream) {
        NameEmail p{c.author_name, c.author_email};
        if (pair_index.emplace(p, pairs.size()).second) pairs.push_back(p);
    }
    const std::size_t n = pairs.size();
    identity_detail::DisjointSets sets(n);

    std::vector<std::string> mapped(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto email = text::ascii_lower(pairs[i].second);
        auto name = text::normalize_name(pairs[i].first);
        for (const auto& e : alias_map) {
            if (text::ascii_lower(e.email) != email) continue;
            if (!e.name.empty() && text::normalize_name(e.name) != name) continue;
            if (mapped[i].empty() || e.canonical_id < mapped[i]) mapped[i] = e.canonical_id;
        }
    }
    identity_detail::unite_by_key(sets, mapped);
    // A pair whose own e-mail is some alias target joins that target's group.
    {
        std::map<std::string, std::size_t> target_owner;
        for (std::size_t i = 0; i < n; ++i)
            if (!mapped[i].empty()) target_owner.emplace(text::ascii_lower(mapped[i]), i);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = target_owner.find(text::ascii_lower(pairs[i].second));
            if (it != target_owner.end()) sets.unite(i, it->second);
        }
    }
    if (heuristics.merge_by_email) {
        std::vector<std::string> keys(n);
        for (std::size_t i = 0; i < n; ++i) keys[i] = text::ascii_lower(pairs[i].second);
        identity_detail::unite_by_key(sets, keys);
    }
    if (heuristics.merge_by_name) {
        std::vector<std::string> keys(n);
        for (std::size_t i = 0; i < n; ++i) keys[i] = text::normalize_name(pairs[i].first);
        identity_detail::unite_by_key(sets, keys);
    }

    std::map<std::size_t, Identity> groups;
    std::map<std::size_t, std::string> group_mapped;
    for (std::size_t i = 0; i < n; ++i) {
        auto root = sets.find(i);
        groups[root].aliases.insert(pairs[i]);
        if (!mapped[i].empty()) {
            auto& gm = group_mapped[root];
            if (gm.empty() || mapped[i] < gm) gm = mapped[i];
        }
    }
    std::vector<Identity> identities;
    std::map<std::size_t, std::string> canonical;
    for (auto& [root, ident] : groups) {
        std::string id;
        if (auto it = group_mapped.find(root); it != group_mapped.end()) {
            id = it->second;
        } else {
            for (const auto& [name, email] : ident.aliases) {
                auto e = text::ascii_lower(email);
                if (!e.empty() && (id.empty() || e < id)) id = e;
            }
            if (id.empty()) id = ident.aliases.begin()->first;
        }
        ident.canonical_id = id;
        canonical[root] = id;
        identities.push_back(std::move(ident));
    }
    std::sort(identities.begin(), identities.end(),
              [](const Identity& a, const Identity& b) { return a.canonical_id < b.canonical_id; });
    for (auto& c : stream) c.author_id = canonical[sets.find(pair_index.at({c.author_name, c.author_email}))];
    return {std::move(stream), std::move(identities)};
}

inline std::string write_identities(const std::vector<Identity>& identities) {
    std::ostringstream os;
    csv::write_row(os, {"canonical_id", "name", "email"});
    for (const auto& id : identities)
        for (const auto& [name, email] : id.aliases) csv::write_row(os, {id.canonical_id, name, email});
    return os.str();
}

}  // namespace teamprod::ingest
