#pragma once

// Profile-driven tokenizer and file-level code metrics: NLOC, tokens,
// functions, cyclomatic complexity and Halstead counts/effort.

#include <teamprod/error.hpp>
#include <teamprod/util/csv.hpp>
#include <teamprod/util/kv.hpp>
#include <teamprod/util/text.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace teamprod::metrics {

enum class TokenClass { operand, op, other };

inline std::string_view to_string(TokenClass c) {
    switch (c) {
        case TokenClass::operand: return "operand";
        case TokenClass::op: return "operator";
        case TokenClass::other: return "other";
    }
    return "other";
}

inline TokenClass parse_token_class(std::string_view s) {
    if (s == "operand") return TokenClass::operand;
    if (s == "operator") return TokenClass::op;
    if (s == "other") return TokenClass::other;
    throw Error(ErrorKind::malformed_input, "unknown token class '" + std::string(s) + "'");
}

/// Lexical kinds the classifier table maps onto token classes.
enum class TokenKind {
    identifier,
    number,
    string,
    keyword,             // flow and other reserved words
    literal_keyword,     // true/false/null and friends
    definition_keyword,  // def, class, struct ...
    defined_name,        // the name introduced by a definition
    symbol,              // punctuation and operator symbols
};

inline constexpr std::array<std::pair<TokenKind, std::string_view>, 8> token_kind_names{{
    {TokenKind::identifier, "identifier"},
    {TokenKind::number, "number"},
    {TokenKind::string, "string"},
    {TokenKind::keyword, "keyword"},
    {TokenKind::literal_keyword, "literal_keyword"},
    {TokenKind::definition_keyword, "definition_keyword"},
    {TokenKind::defined_name, "defined_name"},
    {TokenKind::symbol, "symbol"},
}};

struct Token {
    std::string text;
    TokenClass cls = TokenClass::other;
    int line = 1;
    int end_line = 1;
    TokenKind kind = TokenKind::symbol;

    friend bool operator==(const Token&, const Token&) = default;
};

enum class BlockStyle { indent, brace };

struct LanguageProfile {
    std::string name;
    std::vector<std::string> extensions;
    std::vector<std::string> line_comments;
    std::vector<std::pair<std::string, std::string>> block_comments;
    std::vector<std::string> string_delimiters;
    std::set<std::string> multiline_delimiters;
    std::string string_prefixes;
    char escape = '\\';
    std::string line_continuation;
    std::string preprocessor;  // line prefix whose lines are skipped entirely
    BlockStyle block_style = BlockStyle::brace;
    std::set<std::string> definition_keywords;
    std::set<std::string> function_keywords;  // definition keywords that open a function
    std::set<std::string> keywords;
    std::set<std::string> literal_keywords;
    std::set<std::string> decision_keywords;
    std::set<std::string> decision_operators;
    std::vector<std::string> operators;  // longest match wins
    std::map<TokenKind, TokenClass> classifier{
        {TokenKind::identifier, TokenClass::operand},        {TokenKind::number, TokenClass::operand},
        {TokenKind::string, TokenClass::operand},            {TokenKind::keyword, TokenClass::op},
        {TokenKind::literal_keyword, TokenClass::operand},   {TokenKind::definition_keyword, TokenClass::other},
        {TokenKind::defined_name, TokenClass::other},        {TokenKind::symbol, TokenClass::op},
    };

    TokenClass classify(TokenKind k) const { return classifier.at(k); }

    bool matches_path(std::string_view path) const {
        auto ext = std::filesystem::path(std::string(path)).extension().string();
        ext = text::ascii_lower(ext);
        return std::find(extensions.begin(), extensions.end(), ext) != extensions.end();
    }

    /// Parses the declarative profile format: `key = value` lines whose list
    /// values are whitespace separated (commas are legitimate operators).
    static LanguageProfile parse(std::string_view text) {
        auto doc = kv::Document::parse(text, "language profile");
        auto words = [&](const std::string& key) {
            std::vector<std::string> out;
            std::istringstream in(doc.get_or(key, ""));
            std::string w;
            while (in >> w) out.push_back(w);
            return out;
        };
        auto word_set = [&](const std::string& key) {
            auto w = words(key);
            return std::set<std::string>(w.begin(), w.end());
        };
        LanguageProfile p;
        p.name = doc.get_or("name", "");
        if (p.name.empty()) throw Error(ErrorKind::malformed_input, "language profile without a name");
        for (auto e : words("extensions")) p.extensions.push_back(text::ascii_lower(e));
        p.line_comments = words("line_comments");
        auto bc = words("block_comments");
        if (bc.size() % 2 != 0) throw Error(ErrorKind::malformed_input, "block_comments needs start/end pairs");
        for (std::size_t i = 0; i < bc.size(); i += 2) p.block_comments.emplace_back(bc[i], bc[i + 1]);
        p.string_delimiters = words("string_delimiters");
        p.multiline_delimiters = word_set("multiline_delimiters");
        p.string_prefixes = doc.get_or("string_prefixes", "");
        auto esc = doc.get_or("escape", "\\");
        p.escape = esc.empty() ? '\0' : esc[0];
        p.line_continuation = doc.get_or("line_continuation", "");
        p.preprocessor = doc.get_or("preprocessor", "");
        auto style = doc.get_or("block_style", "brace");
        if (style == "indent")
            p.block_style = BlockStyle::indent;
        else if (style == "brace")
            p.block_style = BlockStyle::brace;
        else
            throw Error(ErrorKind::malformed_input, "block_style must be indent or brace");
        p.definition_keywords = word_set("definition_keywords");
        p.function_keywords = word_set("function_keywords");
        p.keywords = word_set("keywords");
        p.literal_keywords = word_set("literal_keywords");
        p.decision_keywords = word_set("decision_keywords");
        p.decision_operators = word_set("decision_operators");
        p.operators = words("operators");
        std::stable_sort(p.operators.begin(), p.operators.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        std::stable_sort(p.string_delimiters.begin(), p.string_delimiters.end(),
                         [](const auto& a, const auto& b) { return a.size() > b.size(); });
        for (const auto& [kind, key] : token_kind_names)
            if (auto v = doc.get("class." + std::string(key))) p.classifier[kind] = parse_token_class(*v);
        return p;
    }
};

inline constexpr std::string_view python_profile_text = R"(
name = python
extensions = .py .pyw .pyi
line_comments = #
string_delimiters = """ ''' " '
multiline_delimiters = """ '''
string_prefixes = rRbBuUfF
escape = \
line_continuation = \
block_style = indent
definition_keywords = def class
function_keywords = def
literal_keywords = True False None
keywords = and as assert async await break continue del elif else except finally for from global if import in is lambda nonlocal not or pass raise return try while with yield
decision_keywords = if elif for while except and or
operators = **= //= >>= <<= -> := ** // == != <= >= << >> += -= *= /= %= &= |= ^= @= + - * / % @ & | ^ ~ < > ( ) [ ] { } , : . ; =
)";

inline constexpr std::string_view c_like_profile_text = R"(
name = c-like
extensions = .c .h .cc .cpp .cxx .hpp .hh .hxx .java .cs .js .jsx .ts .tsx .go .swift .kt .scala .rs .php .m
line_comments = //
block_comments = /* */
string_delimiters = " ' `
multiline_delimiters = `
string_prefixes = LuU8R
escape = \
preprocessor = #
block_style = brace
definition_keywords = class struct union enum namespace interface function fn func
function_keywords = function fn func
literal_keywords = true false null nullptr NULL nil undefined this self super
keywords = if else for while do switch case default break continue return goto sizeof new delete throw throws try catch finally typeof instanceof in of const static public private protected virtual override final inline extern volatile register unsigned signed int char short long float double void bool boolean auto typedef template typename operator let var using import package export yield await async mut pub impl trait match loop where as go defer select chan map type
decision_keywords = if for while case catch
decision_operators = && || ?
operators = >>>= <<= >>= ... ->* -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^= :: ?. ?? => .* + - * / % & | ^ ~ ! < > = ( ) [ ] { } , ; : . ? @
)";

inline const LanguageProfile& python_profile() {
    static const LanguageProfile p = LanguageProfile::parse(python_profile_text);
    return p;
}

inline const LanguageProfile& c_like_profile() {
    static const LanguageProfile p = LanguageProfile::parse(c_like_profile_text);
    return p;
}

/// Built-in profiles plus any loaded from profile files; later registrations
/// take precedence for shared extensions.
class ProfileRegistry {
public:
    ProfileRegistry() : profiles_{python_profile(), c_like_profile()} {}

    void add(LanguageProfile p) { profiles_.insert(profiles_.begin(), std::move(p)); }

    const LanguageProfile* for_path(std::string_view path) const {
        for (const auto& p : profiles_)
            if (p.matches_path(path)) return &p;
        return nullptr;
    }

    const LanguageProfile* by_name(std::string_view name) const {
        for (const auto& p : profiles_)
            if (p.name == name) return &p;
        return nullptr;
    }

private:
    std::vector<LanguageProfile> profiles_;
};

// --- lexing and structure -----------------------------------------------------

struct FunctionSpan {
    std::size_t first = 0;  // token index range [first, last]
    std::size_t last = 0;
    std::size_t name = 0;   // index of the defined name token (or first when anonymous)
};

struct Analysis {
    std::vector<Token> tokens;
    std::vector<FunctionSpan> functions;
    std::vector<int> owner;  // innermost function per token, -1 = top level
    std::size_t lex_warnings = 0;
};

namespace detail {

inline bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
inline bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

class Lexer {
public:
    Lexer(std::string_view src, const LanguageProfile& p) : s_(src), p_(p) {}

    struct Raw {
        Token token;
        int indent = 0;           // column of the first token of the physical line
        bool line_start = false;  // first token on its physical line
    };

    std::vector<Raw> run() {
        std::vector<Raw> out;
        int current_line_first = -1;
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '\n') {
                ++line_;
                ++i_;
                col_ = 0;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                col_ += c == '\t' ? 8 - (col_ % 8) : 1;
                ++i_;
                continue;
            }
            if (!p_.line_continuation.empty() && starts_with(p_.line_continuation)) {
                auto after = i_ + p_.line_continuation.size();
                auto nl = s_.find_first_not_of(" \t\r", after);
                if (nl == std::string_view::npos || s_[nl] == '\n') {
                    i_ = after;
                    continue;
                }
            }
            if (!p_.preprocessor.empty() && at_line_start() && starts_with(p_.preprocessor)) {
                skip_preprocessor();
                continue;
            }
            if (skip_comment()) continue;

            Raw raw;
            raw.token.line = line_;
            int start_col = col_;
            if (current_line_first != line_) {
                raw.line_start = true;
                current_line_first = line_;
                line_indent_ = start_col;
            }
            raw.indent = line_indent_;
            lex_token(raw.token);
            raw.token.end_line = line_;
            raw.token.cls = p_.classify(raw.token.kind);
            out.push_back(std::move(raw));
        }
        return out;
    }

    std::size_t warnings() const { return warnings_; }

private:
    bool starts_with(std::string_view what) const { return s_.substr(i_, what.size()) == what; }

    bool at_line_start() const {
        for (std::size_t k = i_; k-- > 0;) {
            if (s_[k] == '\n') return true;
            if (s_[k] != ' ' && s_[k] != '\t' && s_[k] != '\r') return false;
        }
        return true;
    }

    void advance(std::size_t n) {
        for (std::size_t k = 0; k < n && i_ < s_.size(); ++k) {
            if (s_[i_] == '\n') {
                ++line_;
                col_ = 0;
            } else {
                ++col_;
            }
            ++i_;
        }
    }

    void skip_preprocessor() {
        while (i_ < s_.size()) {
            auto nl = s_.find('\n', i_);
            if (nl == std::string_view::npos) {
                advance(s_.size() - i_);
                return;
            }
            bool continued = nl > i_ && s_.substr(i_, nl - i_).find_last_not_of(" \t\r") != std::string_view::npos &&
                             s_[s_.substr(0, nl).find_last_not_of(" \t\r")] == '\\';
            advance(nl - i_);
            if (!continued) return;
            advance(1);
        }
    }

    bool skip_comment() {
        for (const auto& lc : p_.line_comments) {
            if (starts_with(lc)) {
                auto nl = s_.find('\n', i_);
                advance((nl == std::string_view::npos ? s_.size() : nl) - i_);
                return true;
            }
        }
        for (const auto& [open, close] : p_.block_comments) {
            if (starts_with(open)) {
                auto end = s_.find(close, i_ + open.size());
                if (end == std::string_view::npos) {
                    ++warnings_;
                    advance(s_.size() - i_);
                } else {
                    advance(end + close.size() - i_);
                }
                return true;
            }
        }
        return false;
    }

    const std::string* delimiter_at(std::size_t pos) const {
        for (const auto& d : p_.string_delimiters)
            if (s_.substr(pos, d.size()) == d) return &d;
        return nullptr;
    }

    void lex_string(Token& t, std::size_t prefix_len, const std::string& delim) {
        auto start = i_;
        advance(prefix_len + delim.size());
        bool multiline = p_.multiline_delimiters.count(delim) != 0;
        while (true) {
            if (i_ >= s_.size()) {
                ++warnings_;
                break;
            }
            char c = s_[i_];
            if (c == '\n' && !multiline) {
                ++warnings_;
                break;
            }
            if (p_.escape && c == p_.escape && i_ + 1 < s_.size() && (multiline || s_[i_ + 1] != '\n')) {
                advance(2);
                continue;
            }
            if (starts_with(delim)) {
                advance(delim.size());
                break;
            }
            advance(1);
        }
        t.text = std::string(s_.substr(start, i_ - start));
        t.kind = TokenKind::string;
    }

    void lex_token(Token& t) {
        auto c = static_cast<unsigned char>(s_[i_]);
        if (const auto* d = delimiter_at(i_)) {
            lex_string(t, 0, *d);
            return;
        }
        if (is_ident_start(c)) {
            auto j = i_;
            while (j < s_.size() && is_ident_char(static_cast<unsigned char>(s_[j]))) ++j;
            auto word = s_.substr(i_, j - i_);
            if (word.size() <= 3 && !p_.string_prefixes.empty() &&
                word.find_first_not_of(p_.string_prefixes) == std::string_view::npos) {
                if (const auto* d = delimiter_at(j)) {
                    lex_string(t, word.size(), *d);
                    return;
                }
            }
            t.text = std::string(word);
            advance(word.size());
            if (p_.definition_keywords.count(t.text))
                t.kind = TokenKind::definition_keyword;
            else if (p_.literal_keywords.count(t.text))
                t.kind = TokenKind::literal_keyword;
            else if (p_.keywords.count(t.text))
                t.kind = TokenKind::keyword;
            else
                t.kind = TokenKind::identifier;
            return;
        }
        if (std::isdigit(c) || (c == '.' && i_ + 1 < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
            auto j = i_ + 1;
            while (j < s_.size()) {
                auto d = static_cast<unsigned char>(s_[j]);
                if (std::isalnum(d) || d == '_' || d == '.' || d == '\'') {
                    ++j;
                } else if ((d == '+' || d == '-') && (s_[j - 1] == 'e' || s_[j - 1] == 'E' || s_[j - 1] == 'p' || s_[j - 1] == 'P') &&
                           !(s_.substr(i_, 2) == "0x" || s_.substr(i_, 2) == "0X")) {
                    ++j;
                } else {
                    break;
                }
            }
            t.text = std::string(s_.substr(i_, j - i_));
            t.kind = TokenKind::number;
            advance(j - i_);
            return;
        }
        for (const auto& op : p_.operators) {
            if (starts_with(op)) {
                t.text = op;
                t.kind = TokenKind::symbol;
                advance(op.size());
                return;
            }
        }
        // Anything else is a one-byte symbol.
        t.text = std::string(1, s_[i_]);
        t.kind = TokenKind::symbol;
        advance(1);
    }

    std::string_view s_;
    const LanguageProfile& p_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 0;
    int line_indent_ = 0;
    std::size_t warnings_ = 0;
};

inline bool is_open_bracket(const Token& t) {
    return t.kind == TokenKind::symbol && (t.text == "(" || t.text == "[" || t.text == "{");
}
inline bool is_close_bracket(const Token& t) {
    return t.kind == TokenKind::symbol && (t.text == ")" || t.text == "]" || t.text == "}");
}

/// Marks names introduced by definition keywords (`def f`, `class C`).
inline void mark_defined_names(std::vector<Lexer::Raw>& raw) {
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
        if (raw[i].token.kind != TokenKind::definition_keyword) continue;
        auto& next = raw[i + 1].token;
        if (next.kind == TokenKind::identifier) next.kind = TokenKind::defined_name;
    }
}

inline void indent_functions(const std::vector<Lexer::Raw>& raw, const LanguageProfile& p, Analysis& a) {
    // A logical line starts at a physical-line-first token outside brackets.
    std::vector<bool> logical_start(raw.size(), false);
    int depth = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].line_start && depth == 0) logical_start[i] = true;
        if (is_open_bracket(raw[i].token)) ++depth;
        if (is_close_bracket(raw[i].token) && depth > 0) --depth;
    }
    struct Open {
        std::size_t span;
        int indent;
    };
    std::vector<Open> stack;
    auto close_until = [&](int indent, std::size_t before) {
        while (!stack.empty() && stack.back().indent >= indent) {
            a.functions[stack.back().span].last = before - 1;
            stack.pop_back();
        }
    };
    std::size_t line_first = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& t = raw[i].token;
        if (logical_start[i]) {
            line_first = i;
            // A deeper-or-equal indented line after the header closes nothing;
            // dedent to the function's own level ends its body.
            if (!stack.empty()) {
                bool past_header = raw[i].token.line > a.tokens[a.functions[stack.back().span].first].line;
                if (past_header) close_until(raw[i].indent, i);
            }
        }
        if (t.kind == TokenKind::definition_keyword && p.function_keywords.count(t.text)) {
            FunctionSpan span{line_first, raw.size() - 1, i + 1 < raw.size() ? i + 1 : i};
            stack.push_back({a.functions.size(), raw[line_first].indent});
            a.functions.push_back(span);
        }
    }
    for (auto& o : stack) a.functions[o.span].last = raw.size() - 1;
}

inline void brace_functions(const std::vector<Lexer::Raw>& raw, Analysis& a) {
    struct Frame {
        bool function;
        std::size_t span;
    };
    std::vector<Frame> frames;
    std::size_t stmt_start = 0;
    int function_depth = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& t = raw[i].token;
        if (t.kind != TokenKind::symbol) continue;
        if (t.text == ";") {
            stmt_start = i + 1;
        } else if (t.text == "{") {
            std::optional<std::size_t> name;
            if (function_depth == 0) {
                int paren = 0;
                bool assignment = false;
                for (std::size_t k = stmt_start; k < i; ++k) {
                    const auto& u = raw[k].token;
                    if (u.kind == TokenKind::symbol && u.text == "(") {
                        if (paren == 0 && k > stmt_start && !name) {
                            const auto& prev = raw[k - 1].token;
                            if ((prev.kind == TokenKind::identifier || prev.kind == TokenKind::defined_name) && !assignment)
                                name = k - 1;
                        }
                        ++paren;
                    } else if (u.kind == TokenKind::symbol && u.text == ")") {
                        --paren;
                    } else if (u.kind == TokenKind::symbol && u.text == "=" && paren == 0) {
                        assignment = true;
                    }
                }
            }
            if (name) {
                frames.push_back({true, a.functions.size()});
                a.functions.push_back({stmt_start, raw.size() - 1, *name});
                ++function_depth;
            } else {
                frames.push_back({false, 0});
            }
            stmt_start = i + 1;
        } else if (t.text == "}") {
            if (!frames.empty()) {
                if (frames.back().function) {
                    a.functions[frames.back().span].last = i;
                    --function_depth;
                }
                frames.pop_back();
            }
            stmt_start = i + 1;
        }
    }
    for (auto& f : frames)
        if (f.function) a.functions[f.span].last = raw.size() - 1;
}

}  // namespace detail

/// Lexes `text` and recognises function definitions. Names introduced by
/// definitions are reclassified through the profile's classifier table.
inline Analysis analyze(std::string_view text, const LanguageProfile& profile) {
    detail::Lexer lexer(text, profile);
    auto raw = lexer.run();
    Analysis a;
    a.lex_warnings = lexer.warnings();
    detail::mark_defined_names(raw);
    a.tokens.reserve(raw.size());
    for (const auto& r : raw) a.tokens.push_back(r.token);
    if (profile.block_style == BlockStyle::indent)
        detail::indent_functions(raw, profile, a);
    else
        detail::brace_functions(raw, a);
    for (const auto& f : a.functions) {
        auto& name = a.tokens[f.name];
        if (name.kind == TokenKind::identifier) name.kind = TokenKind::defined_name;
    }
    for (auto& t : a.tokens) t.cls = profile.classify(t.kind);
    a.owner.assign(a.tokens.size(), -1);
    // Spans are recorded outer-first, so later (inner) spans overwrite.
    for (std::size_t f = 0; f < a.functions.size(); ++f)
        for (std::size_t k = a.functions[f].first; k <= a.functions[f].last && k < a.tokens.size(); ++k)
            a.owner[k] = static_cast<int>(f);
    return a;
}

inline std::vector<Token> tokenize(std::string_view text, const LanguageProfile& profile) {
    return analyze(text, profile).tokens;
}

// --- metrics --------------------------------------------------------------------

struct Halstead {
    long long eta1 = 0;  // distinct operators
    long long eta2 = 0;  // distinct operands
    long long n1 = 0;    // total operators
    long long n2 = 0;    // total operands
    double effort = 0.0;

    friend bool operator==(const Halstead&, const Halstead&) = default;
};

struct FileMetricVector {
    long long nloc = 0;
    long long token_count = 0;
    long long function_count = 0;
    long long cyclomatic = 0;
    Halstead halstead;

    friend bool operator==(const FileMetricVector&, const FileMetricVector&) = default;

    FileMetricVector& operator+=(const FileMetricVector& o) {
        nloc += o.nloc;
        token_count += o.token_count;
        function_count += o.function_count;
        cyclomatic += o.cyclomatic;
        halstead.eta1 += o.halstead.eta1;
        halstead.eta2 += o.halstead.eta2;
        halstead.n1 += o.halstead.n1;
        halstead.n2 += o.halstead.n2;
        halstead.effort += o.halstead.effort;
        return *this;
    }
};

/// E = (N1 + N2) * log2(eta1 + eta2) * (eta1 / 2) * (N2 / eta2); zero when
/// there are no operands or no vocabulary.
inline double halstead_effort(long long eta1, long long eta2, long long n1, long long n2) {
    if (eta2 == 0 || eta1 + eta2 == 0) return 0.0;
    auto length = static_cast<double>(n1 + n2);
    auto vocabulary = static_cast<double>(eta1 + eta2);
    return length * std::log2(vocabulary) * (static_cast<double>(eta1) / 2.0) *
           (static_cast<double>(n2) / static_cast<double>(eta2));
}

inline bool is_decision(const Token& t, const LanguageProfile& p) {
    if (t.kind == TokenKind::keyword) return p.decision_keywords.count(t.text) != 0;
    if (t.kind == TokenKind::symbol) return p.decision_operators.count(t.text) != 0;
    return false;
}

inline FileMetricVector file_metrics(const Analysis& a, const LanguageProfile& profile) {
    FileMetricVector m;
    m.token_count = static_cast<long long>(a.tokens.size());
    m.function_count = static_cast<long long>(a.functions.size());

    std::set<int> lines;
    std::set<std::string> operators, operands;
    std::vector<long long> decisions(a.functions.size(), 0);
    long long top_decisions = 0;
    bool top_tokens = false;
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
        const auto& t = a.tokens[i];
        for (int l = t.line; l <= t.end_line; ++l) lines.insert(l);
        if (t.cls == TokenClass::op) {
            ++m.halstead.n1;
            operators.insert(t.text);
        } else if (t.cls == TokenClass::operand) {
            ++m.halstead.n2;
            operands.insert(t.text);
        }
        bool decision = is_decision(t, profile);
        if (a.owner[i] >= 0) {
            decisions[static_cast<std::size_t>(a.owner[i])] += decision ? 1 : 0;
        } else {
            top_tokens = true;
            top_decisions += decision ? 1 : 0;
        }
    }
    m.nloc = static_cast<long long>(lines.size());
    m.halstead.eta1 = static_cast<long long>(operators.size());
    m.halstead.eta2 = static_cast<long long>(operands.size());
    m.halstead.effort = halstead_effort(m.halstead.eta1, m.halstead.eta2, m.halstead.n1, m.halstead.n2);
    for (auto d : decisions) m.cyclomatic += 1 + d;
    if (top_tokens) m.cyclomatic += 1 + top_decisions;
    return m;
}

inline FileMetricVector file_metrics(std::string_view text, const LanguageProfile& profile) {
    return file_metrics(analyze(text, profile), profile);
}

/// Component-wise |post - pre|.
inline FileMetricVector commit_code_delta(const FileMetricVector& pre, const FileMetricVector& post) {
    auto d = [](long long a, long long b) { return a > b ? a - b : b - a; };
    FileMetricVector out;
    out.nloc = d(pre.nloc, post.nloc);
    out.token_count = d(pre.token_count, post.token_count);
    out.function_count = d(pre.function_count, post.function_count);
    out.cyclomatic = d(pre.cyclomatic, post.cyclomatic);
    out.halstead.eta1 = d(pre.halstead.eta1, post.halstead.eta1);
    out.halstead.eta2 = d(pre.halstead.eta2, post.halstead.eta2);
    out.halstead.n1 = d(pre.halstead.n1, post.halstead.n1);
    out.halstead.n2 = d(pre.halstead.n2, post.halstead.n2);
    out.halstead.effort = std::fabs(post.halstead.effort - pre.halstead.effort);
    return out;
}

// --- export -----------------------------------------------------------------------

struct MetricRow {
    std::string commit_hash;
    std::string path;
    FileMetricVector values;
};

inline std::string write_metric_rows(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    csv::write_row(os, {"commit_hash", "path", "nloc", "tokens", "functions", "cyclomatic", "eta1", "eta2", "n1", "n2",
                        "effort"});
    for (const auto& r : rows) {
        const auto& v = r.values;
        csv::write_row(os, {r.commit_hash, r.path, std::to_string(v.nloc), std::to_string(v.token_count),
                            std::to_string(v.function_count), std::to_string(v.cyclomatic),
                            std::to_string(v.halstead.eta1), std::to_string(v.halstead.eta2),
                            std::to_string(v.halstead.n1), std::to_string(v.halstead.n2),
                            csv::format_number(v.halstead.effort)});
    }
    return os.str();
}

inline std::vector<MetricRow> read_metric_rows(std::string_view text) {
    csv::Table t(text, "metrics");
    t.require({"commit_hash", "path", "nloc", "tokens", "functions", "cyclomatic", "eta1", "eta2", "n1", "n2", "effort"});
    std::vector<MetricRow> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        MetricRow r;
        r.commit_hash = t.at(i, "commit_hash");
        r.path = t.at(i, "path");
        r.values.nloc = t.integer(i, "nloc");
        r.values.token_count = t.integer(i, "tokens");
        r.values.function_count = t.integer(i, "functions");
        r.values.cyclomatic = t.integer(i, "cyclomatic");
        r.values.halstead.eta1 = t.integer(i, "eta1");
        r.values.halstead.eta2 = t.integer(i, "eta2");
        r.values.halstead.n1 = t.integer(i, "n1");
        r.values.halstead.n2 = t.integer(i, "n2");
        r.values.halstead.effort = t.number(i, "effort");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace teamprod::metrics
