#include "relemb/dataset.hpp"

#include "relemb/csv.hpp"
#include "relemb/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

namespace relemb {

namespace {

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_words(std::string_view normalized) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto sp = normalized.find(' ', start);
        if (sp == std::string_view::npos)
            sp = normalized.size();
        if (sp > start)
            words.emplace_back(normalized.substr(start, sp - start));
        start = sp + 1;
    }
    return words;
}

} // namespace

std::size_t Relation::attribute_index(std::string_view attr) const {
    auto it = std::find(attributes.begin(), attributes.end(), attr);
    if (it == attributes.end())
        throw SchemaError("relation '" + name + "' has no attribute '" + std::string(attr) + "'");
    return static_cast<std::size_t>(it - attributes.begin());
}

bool Relation::has_attribute(std::string_view attr) const {
    return std::find(attributes.begin(), attributes.end(), attr) != attributes.end();
}

Relation parse_relation(std::istream& in, const std::string& name, const DelimitedFormat& format) {
    csv::Reader reader(in, format.delimiter);
    auto header = reader.next();
    if (!header)
        throw ParseError("relation '" + name + "': missing header");

    std::vector<std::string> lowered_nulls;
    for (const auto& m : format.null_markers)
        lowered_nulls.push_back(ascii_lower(trim(m)));
    auto is_null = [&](const std::string& v) {
        auto low = ascii_lower(v);
        return std::find(lowered_nulls.begin(), lowered_nulls.end(), low) != lowered_nulls.end();
    };

    std::vector<std::string> columns;
    for (auto& h : *header) {
        auto col = trim(h);
        if (std::find(columns.begin(), columns.end(), col) != columns.end())
            throw SchemaError("relation '" + name + "': duplicate header '" + col + "'");
        columns.push_back(std::move(col));
    }

    std::optional<std::size_t> key_pos;
    if (format.key_column) {
        auto it = std::find(columns.begin(), columns.end(), *format.key_column);
        if (it == columns.end())
            throw SchemaError("relation '" + name + "': key column '" + *format.key_column + "' not in header");
        key_pos = static_cast<std::size_t>(it - columns.begin());
    }

    Relation rel;
    rel.name = name;
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (!key_pos || i != *key_pos)
            rel.attributes.push_back(columns[i]);

    std::size_t row_index = 0;
    while (auto rec = reader.next()) {
        if (rec->size() == 1 && rec->front().empty() && columns.size() > 1)
            continue; // blank line
        ++row_index;
        if (rec->size() != columns.size())
            throw ParseError("relation '" + name + "': row " + std::to_string(row_index) + " (line " +
                             std::to_string(reader.line()) + ") has " + std::to_string(rec->size()) +
                             " fields, expected " + std::to_string(columns.size()));
        std::vector<Cell> row;
        row.reserve(rel.attributes.size());
        for (std::size_t i = 0; i < rec->size(); ++i) {
            auto v = trim((*rec)[i]);
            if (key_pos && i == *key_pos) {
                rel.row_keys.push_back(v);
                continue;
            }
            row.push_back(is_null(v) ? Cell::null() : Cell::value(std::move(v)));
        }
        rel.rows.push_back(std::move(row));
    }
    return rel;
}

Relation load_relation(const std::filesystem::path& path, const DelimitedFormat& format) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path.string());
    return parse_relation(in, format.name.value_or(path.stem().string()), format);
}

std::string normalize_value(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        if (ch == '_')
            out.push_back('-');
        else
            out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string simple_token(std::string_view raw) {
    auto norm = normalize_value(raw);
    std::replace(norm.begin(), norm.end(), ' ', '_');
    return norm;
}

TokenizationKind parse_tokenization(std::string_view s) {
    auto low = ascii_lower(s);
    if (low == "simple" || low == "s")
        return TokenizationKind::simple;
    if (low == "flatten" || low == "f")
        return TokenizationKind::flatten;
    if (low == "overlap" || low == "o")
        return TokenizationKind::overlap;
    throw ConfigError("unknown tokenization strategy '" + std::string(s) + "'");
}

std::string to_string(TokenizationKind k) {
    switch (k) {
    case TokenizationKind::simple: return "simple";
    case TokenizationKind::flatten: return "flatten";
    case TokenizationKind::overlap: return "overlap";
    }
    return "?";
}

std::vector<std::string> tokenize_cell(std::string_view value, const TokenizationStrategy& strategy) {
    auto norm = normalize_value(value);
    if (norm.empty())
        return {};
    bool whole = strategy.kind == TokenizationKind::simple ||
                 (strategy.kind == TokenizationKind::overlap && strategy.overlap_set.contains(norm));
    if (whole) {
        std::replace(norm.begin(), norm.end(), ' ', '_');
        return {std::move(norm)};
    }
    return split_words(norm);
}

std::vector<std::string> tokenize_cell(const Cell& cell, const TokenizationStrategy& strategy) {
    if (cell.is_null())
        return {};
    if (cell.placeholder)
        return {*cell.text};
    return tokenize_cell(*cell.text, strategy);
}

namespace {

std::string cell_identity(const Cell& c) {
    return c.placeholder ? *c.text : normalize_value(*c.text);
}

std::unordered_set<std::string> distinct_values(const Relation& r) {
    std::unordered_set<std::string> out;
    for (const auto& row : r.rows)
        for (const auto& c : row)
            if (!c.is_null()) {
                auto v = cell_identity(c);
                if (!v.empty())
                    out.insert(std::move(v));
            }
    return out;
}

} // namespace

OverlapReport compute_overlap(const Relation& r1, const Relation& r2) {
    auto a = distinct_values(r1);
    auto b = distinct_values(r2);
    OverlapReport rep;
    for (const auto& v : a)
        if (b.contains(v))
            rep.shared.insert(v);
    rep.distinct_total = a.size() + b.size() - rep.shared.size();
    return rep;
}

std::size_t count_distinct_values(const std::vector<Relation>& relations) {
    std::unordered_set<std::string> all;
    for (const auto& r : relations) {
        auto d = distinct_values(r);
        all.insert(d.begin(), d.end());
    }
    return all.size();
}

std::string round_numeric(std::string_view value, int sig_figs) {
    if (sig_figs < 1)
        throw ConfigError("sig_figs must be positive");
    const std::string text = trim(value);
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }
    std::string digits;
    long long frac_len = 0;
    bool seen_dot = false, seen_digit = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            seen_digit = true;
            if (seen_dot)
                ++frac_len;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit)
        return std::string(value);
    long long exponent = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E')
            return std::string(value);
        ++i;
        bool exp_neg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            exp_neg = text[i] == '-';
            ++i;
        }
        if (i >= text.size())
            return std::string(value);
        for (; i < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i])))
                return std::string(value);
            exponent = exponent * 10 + (text[i] - '0');
            if (exponent > 100000)
                return std::string(value);
        }
        if (exp_neg)
            exponent = -exponent;
    }

    // value = digits * 10^(exponent - frac_len)
    auto first = digits.find_first_not_of('0');
    if (first == std::string::npos)
        return "0";
    digits.erase(0, first);
    // value = 0.digits * 10^E
    long long E = static_cast<long long>(digits.size()) + exponent - frac_len;

    const auto k = static_cast<std::size_t>(sig_figs);
    if (digits.size() > k) {
        bool round_up = digits[k] >= '5';
        digits.resize(k);
        if (round_up) {
            std::size_t pos = k;
            while (pos > 0) {
                --pos;
                if (digits[pos] == '9') {
                    digits[pos] = '0';
                } else {
                    ++digits[pos];
                    break;
                }
                if (pos == 0) {
                    digits.insert(digits.begin(), '1');
                    digits.resize(k);
                    ++E;
                }
            }
        }
    }
    while (digits.size() > 1 && digits.back() == '0')
        digits.pop_back();

    const auto m = static_cast<long long>(digits.size());
    std::string out = negative ? "-" : "";
    bool fixed = E >= -2 && (E <= 7 || (E == 8 && digits == "1"));
    if (fixed) {
        if (E <= 0) {
            out += "0.";
            out.append(static_cast<std::size_t>(-E), '0');
            out += digits;
        } else if (E >= m) {
            out += digits;
            out.append(static_cast<std::size_t>(E - m), '0');
        } else {
            out += digits.substr(0, static_cast<std::size_t>(E));
            out += '.';
            out += digits.substr(static_cast<std::size_t>(E));
        }
    } else {
        out += digits[0];
        if (m > 1) {
            out += '.';
            out += digits.substr(1);
        }
        out += 'e';
        out += std::to_string(E - 1);
    }
    return out;
}

Relation apply_numeric(Relation r, const NumericConfig& cfg) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < r.attributes.size(); ++i)
        if (cfg.attributes.contains(r.attributes[i]))
            cols.push_back(i);
    for (auto& row : r.rows)
        for (auto c : cols)
            if (!row[c].is_null() && !row[c].placeholder)
                row[c].text = round_numeric(*row[c].text, cfg.sig_figs);
    return r;
}

namespace {

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto p = s.find(sep, start);
        if (p == std::string_view::npos)
            p = s.size();
        auto item = trim(s.substr(start, p - start));
        if (!item.empty())
            out.push_back(item);
        start = p + 1;
    }
    return out;
}

} // namespace

FunctionalDependency parse_fd(std::string_view text) {
    FunctionalDependency fd;
    auto body = trim(text);
    if (body.size() > 2 && (body[0] == '1' || body[0] == '2') && body[1] == ':') {
        fd.scope = body[0] == '1' ? FunctionalDependency::Scope::first : FunctionalDependency::Scope::second;
        body = trim(std::string_view(body).substr(2));
    }
    auto arrow = body.find("->");
    if (arrow == std::string::npos)
        throw ConfigError("functional dependency '" + std::string(text) + "' lacks '->'");
    fd.lhs = split_list(std::string_view(body).substr(0, arrow), ',');
    fd.rhs = split_list(std::string_view(body).substr(arrow + 2), ',');
    return fd;
}

namespace {

struct DisjointSets {
    std::map<std::string, std::string> parent;

    const std::string& find(const std::string& x) {
        auto it = parent.try_emplace(x, x).first;
        if (it->second == x)
            return it->first;
        const std::string& root = find(it->second);
        it->second = root;
        return root;
    }
    void unite(const std::string& a, const std::string& b) {
        std::string ra = find(a), rb = find(b);
        if (ra == rb)
            return;
        // smaller label becomes the root so classes are order independent
        if (rb < ra)
            std::swap(ra, rb);
        parent[rb] = ra;
    }
};

struct CellRef {
    Relation* rel;
    std::size_t row;
};

void validate_fd(const FunctionalDependency& fd, const std::vector<Relation*>& rels) {
    if (fd.lhs.empty() || fd.rhs.empty())
        throw ConfigError("functional dependency needs non-empty lhs and rhs");
    for (const auto& a : fd.lhs)
        if (std::find(fd.rhs.begin(), fd.rhs.end(), a) != fd.rhs.end())
            throw ConfigError("functional dependency lhs and rhs overlap on '" + a + "'");
    for (auto* r : rels) {
        for (const auto& a : fd.lhs)
            if (!r->has_attribute(a))
                throw ConfigError("functional dependency references unknown attribute '" + a + "' in '" +
                                  r->name + "'");
        for (const auto& a : fd.rhs)
            if (!r->has_attribute(a))
                throw ConfigError("functional dependency references unknown attribute '" + a + "' in '" +
                                  r->name + "'");
    }
}

std::size_t next_placeholder_number(const Relation& a, const Relation& b) {
    std::size_t next = 1;
    for (const Relation* r : {&a, &b})
        for (const auto& row : r->rows)
            for (const auto& c : row)
                if (c.placeholder && c.text->starts_with(kPlaceholderPrefix)) {
                    try {
                        next = std::max(next, std::stoul(c.text->substr(kPlaceholderPrefix.size())) + 1);
                    } catch (const std::exception&) {
                    }
                }
    return next;
}

} // namespace

SkolemResult apply_skolem(Relation r1, Relation r2, const std::vector<FunctionalDependency>& fds) {
    std::size_t counter = next_placeholder_number(r1, r2);
    std::size_t created = 0;
    auto fresh = [&] {
        ++created;
        return Cell::skolem(std::string(kPlaceholderPrefix) + std::to_string(counter++));
    };

    std::vector<std::vector<Relation*>> scopes;
    for (const auto& fd : fds) {
        std::vector<Relation*> rels;
        if (fd.scope != FunctionalDependency::Scope::second)
            rels.push_back(&r1);
        if (fd.scope != FunctionalDependency::Scope::first)
            rels.push_back(&r2);
        validate_fd(fd, rels);
        scopes.push_back(std::move(rels));
    }

    constexpr int kMaxRounds = 64;
    bool changed = true;
    for (int round = 0; changed && round < kMaxRounds; ++round) {
        changed = false;
        for (std::size_t f = 0; f < fds.size(); ++f) {
            const auto& fd = fds[f];
            const auto& rels = scopes[f];

            std::map<std::vector<std::string>, std::vector<CellRef>> groups;
            for (auto* r : rels) {
                std::vector<std::size_t> lhs_idx;
                for (const auto& a : fd.lhs)
                    lhs_idx.push_back(r->attribute_index(a));
                for (std::size_t i = 0; i < r->rows.size(); ++i) {
                    std::vector<std::string> key;
                    bool has_null = false;
                    for (auto li : lhs_idx) {
                        const auto& c = r->rows[i][li];
                        if (c.is_null()) {
                            has_null = true;
                            break;
                        }
                        key.push_back(cell_identity(c));
                    }
                    if (!has_null)
                        groups[std::move(key)].push_back({r, i});
                }
            }

            for (const auto& attr : fd.rhs) {
                auto cell_at = [&](const CellRef& ref) -> Cell& {
                    return ref.rel->rows[ref.row][ref.rel->attribute_index(attr)];
                };

                // conflicting values inside a group are merged dataset-wide
                DisjointSets sets;
                for (const auto& [key, members] : groups) {
                    std::vector<std::string> vals;
                    for (const auto& m : members) {
                        const auto& c = cell_at(m);
                        if (!c.is_null())
                            vals.push_back(cell_identity(c));
                    }
                    std::sort(vals.begin(), vals.end());
                    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
                    for (std::size_t v = 1; v < vals.size(); ++v)
                        sets.unite(vals[0], vals[v]);
                }
                std::map<std::string, std::vector<std::string>> classes;
                for (const auto& [v, p] : sets.parent)
                    classes[sets.find(v)].push_back(v);
                std::unordered_map<std::string, Cell> replacement;
                for (const auto& [root, members] : classes) {
                    if (members.size() < 2)
                        continue;
                    Cell ph = fresh();
                    for (const auto& v : members)
                        replacement.emplace(v, ph);
                }
                if (!replacement.empty()) {
                    for (auto* r : rels) {
                        auto ai = r->attribute_index(attr);
                        for (auto& row : r->rows) {
                            auto& c = row[ai];
                            if (c.is_null())
                                continue;
                            auto it = replacement.find(cell_identity(c));
                            if (it != replacement.end()) {
                                c = it->second;
                                changed = true;
                            }
                        }
                    }
                }

                for (const auto& [key, members] : groups) {
                    std::optional<Cell> known;
                    bool any_null = false;
                    for (const auto& m : members) {
                        const auto& c = cell_at(m);
                        if (c.is_null())
                            any_null = true;
                        else if (!known)
                            known = c;
                    }
                    if (!any_null)
                        continue;
                    Cell fill = known ? *known : fresh();
                    for (const auto& m : members) {
                        auto& c = cell_at(m);
                        if (c.is_null()) {
                            c = fill;
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    return {std::move(r1), std::move(r2), created};
}

} // namespace relemb
