#pragma once

#include <teamprod/error.hpp>

#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace teamprod::kv {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Flat `key = value` document. `#` starts a comment line; later keys override
/// earlier ones.
class Document {
public:
    Document() = default;

    static Document parse(std::string_view text, std::string_view what = "config") {
        Document doc;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::malformed_input,
                            std::string(what) + ":" + std::to_string(lineno) + ": expected key = value");
            auto key = trim(std::string_view(t).substr(0, eq));
            if (key.empty())
                throw Error(ErrorKind::malformed_input, std::string(what) + ":" + std::to_string(lineno) + ": empty key");
            doc.values_[key] = trim(std::string_view(t).substr(eq + 1));
        }
        return doc;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    const std::map<std::string, std::string>& values() const { return values_; }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_or(const std::string& key, std::string fallback) const {
        return get(key).value_or(std::move(fallback));
    }

    long long integer_or(const std::string& key, long long fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        char* end = nullptr;
        long long out = std::strtoll(v->c_str(), &end, 10);
        if (v->empty() || end != v->c_str() + v->size())
            throw Error(ErrorKind::malformed_input, "config key '" + key + "' expects an integer");
        return out;
    }

    double number_or(const std::string& key, double fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        char* end = nullptr;
        double out = std::strtod(v->c_str(), &end);
        if (v->empty() || end != v->c_str() + v->size())
            throw Error(ErrorKind::malformed_input, "config key '" + key + "' expects a number");
        return out;
    }

    bool boolean_or(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw Error(ErrorKind::malformed_input, "config key '" + key + "' expects a boolean");
    }

    std::vector<std::string> list_or(const std::string& key, std::vector<std::string> fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        std::vector<std::string> out;
        for (auto& item : split(*v, ','))
            if (!item.empty()) out.push_back(item);
        return out;
    }

    /// Keys starting with `prefix.`, with the prefix removed.
    Document section(const std::string& prefix) const {
        Document out;
        auto p = prefix + ".";
        for (const auto& [k, v] : values_)
            if (k.compare(0, p.size(), p) == 0) out.values_[k.substr(p.size())] = v;
        return out;
    }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace teamprod::kv
