#include "soplog/structure.hpp"

#include "soplog/error.hpp"
#include "text_cursor.hpp"

#include <algorithm>
#include <sstream>

namespace soplog {

std::uint32_t log_ceil(std::uint64_t n) {
    if (n < 2) throw Error("log_ceil: argument must be >= 2, got " + std::to_string(n));
    std::uint32_t l = 0;
    while (l < 64 && (std::uint64_t{1} << l) < n) ++l;
    return l;
}

std::uint64_t sat_pow(std::uint64_t x, std::uint64_t e) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 0; i < e; ++i) {
        if (x != 0 && r > UINT64_MAX / x) return UINT64_MAX;
        r *= x;
    }
    return r;
}

namespace {

struct BuiltinEntry {
    std::string_view name;
    Builtin b;
};

constexpr BuiltinEntry kBuiltins[] = {
    {"LEQ", Builtin::Leq},   {"SUCC", Builtin::Succ}, {"BIT", Builtin::Bit},
    {"ZERO", Builtin::Zero}, {"ONE", Builtin::One},   {"MAX", Builtin::Max},
    {"LOGN", Builtin::Logn}, {"LOGN_MINUS_1", Builtin::LognMinus1},
};

} // namespace

std::optional<Builtin> builtin_from_name(std::string_view name) {
    for (const auto& e : kBuiltins)
        if (e.name == name) return e.b;
    return std::nullopt;
}

std::string_view builtin_name(Builtin b) {
    for (const auto& e : kBuiltins)
        if (e.b == b) return e.name;
    return "?";
}

bool builtin_is_relation(Builtin b) { return b == Builtin::Leq || b == Builtin::Succ || b == Builtin::Bit; }

bool is_reserved_name(std::string_view name) { return builtin_from_name(name).has_value(); }

Element builtin_constant(Builtin b, std::size_t n) {
    switch (b) {
    case Builtin::Zero: return 0;
    case Builtin::One: return 1;
    case Builtin::Max: return static_cast<Element>(n - 1);
    case Builtin::Logn: return log_ceil(n);
    case Builtin::LognMinus1: return log_ceil(n) - 1;
    default: throw Error("builtin_constant: " + std::string(builtin_name(b)) + " is a relation");
    }
}

bool builtin_holds(Builtin b, Element x, Element y) {
    switch (b) {
    case Builtin::Leq: return x <= y;
    case Builtin::Succ: return y == x + 1;
    case Builtin::Bit: return y < 32 && ((x >> y) & 1u) != 0;
    default: throw Error("builtin_holds: " + std::string(builtin_name(b)) + " is a constant");
    }
}

// ---------------------------------------------------------------------------
// Vocabulary

void Vocabulary::add_relation(const std::string& name, int arity) {
    if (is_reserved_name(name)) throw StructureError("reserved symbol: " + name);
    if (has_symbol(name)) throw StructureError("duplicate symbol: " + name);
    if (arity < 1) throw StructureError("relation " + name + " must have arity >= 1");
    relations_.push_back({name, arity});
}

void Vocabulary::add_constant(const std::string& name) {
    if (is_reserved_name(name)) throw StructureError("reserved symbol: " + name);
    if (has_symbol(name)) throw StructureError("duplicate symbol: " + name);
    constants_.push_back(name);
}

std::optional<int> Vocabulary::relation_arity(std::string_view name) const {
    for (const auto& r : relations_)
        if (r.name == name) return r.arity;
    return std::nullopt;
}

bool Vocabulary::has_constant(std::string_view name) const {
    return std::find(constants_.begin(), constants_.end(), name) != constants_.end();
}

bool Vocabulary::has_symbol(std::string_view name) const {
    return relation_arity(name).has_value() || has_constant(name);
}

// ---------------------------------------------------------------------------
// RelationValue

RelationValue::RelationValue(int arity, std::vector<Tuple> tuples) : arity_(arity), tuples_(std::move(tuples)) {
    if (arity < 1) throw Error("relation arity must be >= 1");
    for (const auto& t : tuples_)
        if (static_cast<int>(t.size()) != arity)
            throw Error("tuple of length " + std::to_string(t.size()) + " in relation of arity " +
                        std::to_string(arity));
    std::sort(tuples_.begin(), tuples_.end());
    tuples_.erase(std::unique(tuples_.begin(), tuples_.end()), tuples_.end());
}

bool RelationValue::contains(const Tuple& t) const { return std::binary_search(tuples_.begin(), tuples_.end(), t); }

bool RelationValue::operator<(const RelationValue& o) const {
    if (arity_ != o.arity_) return arity_ < o.arity_;
    if (tuples_.size() != o.tuples_.size()) return tuples_.size() < o.tuples_.size();
    return tuples_ < o.tuples_;
}

std::string format_relation(const RelationValue& r) {
    std::string out = "{";
    for (std::size_t i = 0; i < r.tuples().size(); ++i) {
        if (i) out += ' ';
        out += '(';
        const auto& t = r.tuples()[i];
        for (std::size_t j = 0; j < t.size(); ++j) {
            if (j) out += ',';
            out += std::to_string(t[j]);
        }
        out += ')';
    }
    return out + "}";
}

// ---------------------------------------------------------------------------
// Structure

namespace {
constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 24;

std::uint64_t tuple_code(const Element* t, int arity, std::size_t n) {
    std::uint64_t c = 0;
    for (int i = 0; i < arity; ++i) c = c * n + t[i];
    return c;
}
} // namespace

Structure::Structure(Vocabulary vocab, std::size_t n, std::map<std::string, RelationValue> relations,
                     std::map<std::string, Element> constants)
    : vocab_(std::move(vocab)), n_(n) {
    if (n < 3) throw StructureError("domain size < 3 (got " + std::to_string(n) + ")");
    for (const auto& rs : vocab_.relations()) {
        auto it = relations.find(rs.name);
        if (it == relations.end()) throw StructureError("missing interpretation for relation " + rs.name);
        if (it->second.arity() != rs.arity)
            throw StructureError("relation " + rs.name + " interpreted with arity " +
                                 std::to_string(it->second.arity()) + ", declared " + std::to_string(rs.arity));
        for (const auto& t : it->second.tuples())
            for (Element e : t)
                if (e >= n) throw StructureError("tuple out of range in relation " + rs.name + ": element " +
                                                 std::to_string(e) + " (n = " + std::to_string(n) + ")");
        relations_.push_back(it->second);
        relations.erase(it);
    }
    if (!relations.empty()) throw StructureError("relation not in vocabulary: " + relations.begin()->first);
    for (const auto& c : vocab_.constants()) {
        auto it = constants.find(c);
        if (it == constants.end()) throw StructureError("missing interpretation for constant " + c);
        if (it->second >= n)
            throw StructureError("constant out of range: " + c + " = " + std::to_string(it->second) +
                                 " (n = " + std::to_string(n) + ")");
        constants_.emplace(c, it->second);
        constants.erase(it);
    }
    if (!constants.empty()) throw StructureError("constant not in vocabulary: " + constants.begin()->first);

    dense_.resize(relations_.size());
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        std::uint64_t space = sat_pow(n_, relations_[i].arity());
        if (space > kDenseLimit) continue;
        dense_[i].assign(space, 0);
        for (const auto& t : relations_[i].tuples()) dense_[i][tuple_code(t.data(), relations_[i].arity(), n_)] = 1;
    }
}

const RelationValue& Structure::relation(std::string_view name) const {
    int idx = relation_index(name);
    if (idx < 0) throw StructureError("unknown relation: " + std::string(name));
    return relations_[idx];
}

Element Structure::constant(std::string_view name) const {
    auto it = constants_.find(name);
    if (it != constants_.end()) return it->second;
    if (auto b = builtin_from_name(name); b && !builtin_is_relation(*b)) return builtin_constant(*b, n_);
    throw StructureError("unknown constant: " + std::string(name));
}

int Structure::relation_index(std::string_view name) const {
    const auto& rs = vocab_.relations();
    for (std::size_t i = 0; i < rs.size(); ++i)
        if (rs[i].name == name) return static_cast<int>(i);
    return -1;
}

bool Structure::holds(int index, const Element* args) const {
    const auto& rel = relations_[index];
    for (int i = 0; i < rel.arity(); ++i)
        if (args[i] >= n_) return false;
    if (!dense_[index].empty()) return dense_[index][tuple_code(args, rel.arity(), n_)] != 0;
    return rel.contains(Tuple(args, args + rel.arity()));
}

bool Structure::holds(std::string_view name, const Tuple& args) const {
    if (auto b = builtin_from_name(name)) {
        if (!builtin_is_relation(*b) || args.size() != 2) throw StructureError("bad built-in atom " + std::string(name));
        return builtin_holds(*b, args[0], args[1]);
    }
    int idx = relation_index(name);
    if (idx < 0) throw StructureError("unknown relation: " + std::string(name));
    if (static_cast<int>(args.size()) != relations_[idx].arity()) throw StructureError("arity mismatch at " + std::string(name));
    return holds(idx, args.data());
}

std::variant<Element, RelationValue> Structure::builtin(std::string_view name) const {
    auto b = builtin_from_name(name);
    if (!b) throw StructureError("unknown built-in: " + std::string(name));
    if (!builtin_is_relation(*b)) return builtin_constant(*b, n_);
    std::vector<Tuple> tuples;
    for (Element i = 0; i < n_; ++i)
        for (Element j = 0; j < n_; ++j)
            if (builtin_holds(*b, i, j)) tuples.push_back({i, j});
    return RelationValue(2, std::move(tuples));
}

// ---------------------------------------------------------------------------
// Encoding

std::string BitString::str() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

BitString BitString::parse(std::string_view text) {
    BitString out;
    int line = 1, col = 1;
    for (char c : text) {
        if (c == '0' || c == '1') {
            out.bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != '\n' && c != '\r' && c != ' ' && c != '\t') {
            throw ParseError(std::string("unexpected character '") + c + "' in bit string", line, col);
        }
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return out;
}

std::uint64_t encoded_length(const Vocabulary& vocab, std::size_t n) {
    std::uint64_t len = 0;
    for (const auto& r : vocab.relations()) len += sat_pow(n, r.arity);
    len += vocab.constants().size() * log_ceil(n);
    return len;
}

BitString encode(const Structure& s) {
    BitString out;
    std::size_t n = s.size();
    out.bits.reserve(encoded_length(s.vocabulary(), n));
    const auto& rels = s.vocabulary().relations();
    for (std::size_t i = 0; i < rels.size(); ++i) {
        int r = rels[i].arity;
        std::uint64_t space = sat_pow(n, r);
        std::size_t start = out.bits.size();
        out.bits.resize(start + space, 0);
        for (const auto& t : s.relation(rels[i].name).tuples()) out.bits[start + tuple_code(t.data(), r, n)] = 1;
    }
    std::uint32_t width = log_ceil(n);
    for (const auto& c : s.vocabulary().constants()) {
        Element v = s.constant(c);
        for (std::uint32_t b = width; b-- > 0;) out.bits.push_back(static_cast<std::uint8_t>((v >> b) & 1u));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

struct Located {
    int line;
    int col;
};

[[noreturn]] void fail_at(const Located& at, const std::string& msg) {
    throw StructureError(std::to_string(at.line) + ":" + std::to_string(at.col) + ": " + msg);
}

} // namespace

Structure load_structure(std::string_view text, const Vocabulary* expected) {
    detail::TextCursor cur(text);
    std::optional<std::size_t> n;
    Vocabulary vocab;
    std::map<std::string, RelationValue> rels;
    std::map<std::string, Element> consts;

    auto declare = [&](const std::string& name, const Located& at) {
        if (is_reserved_name(name)) fail_at(at, "reserved symbol: " + name);
        if (vocab.has_symbol(name)) fail_at(at, "duplicate symbol: " + name);
    };

    while (true) {
        cur.skip_space();
        if (cur.at_end()) break;
        if (cur.accept(';')) continue;
        Located at{cur.line(), cur.column()};
        std::string kw = cur.ident("'domain', 'rel' or 'const'");
        if (kw == "domain") {
            if (n) fail_at(at, "duplicate domain statement");
            std::uint64_t v = cur.number("domain size");
            if (v < 3) fail_at(at, "domain size < 3 (got " + std::to_string(v) + ")");
            if (v > UINT32_MAX) fail_at(at, "domain size too large");
            n = v;
        } else if (kw == "rel") {
            if (!n) fail_at(at, "'domain' must precede relations");
            Located nat{cur.line(), cur.column() + 1};
            std::string name = cur.ident("relation name");
            declare(name, nat);
            std::uint64_t arity = cur.number("arity");
            if (arity < 1 || arity > 16) fail_at(at, "relation arity must be in 1..16");
            cur.expect('{');
            std::vector<Tuple> tuples;
            while (!cur.accept('}')) {
                Located tat{cur.line(), cur.column()};
                cur.expect('(');
                Tuple t;
                if (!cur.accept(')')) {
                    do {
                        std::uint64_t e = cur.number("element");
                        if (e >= *n)
                            fail_at(tat, "tuple out of range in relation " + name + ": element " + std::to_string(e) +
                                             " (n = " + std::to_string(*n) + ")");
                        t.push_back(static_cast<Element>(e));
                    } while (cur.accept(','));
                    cur.expect(')');
                }
                if (t.size() != arity)
                    fail_at(tat, "tuple of length " + std::to_string(t.size()) + " in relation " + name + " of arity " +
                                     std::to_string(arity));
                tuples.push_back(std::move(t));
                cur.accept(',');
            }
            vocab.add_relation(name, static_cast<int>(arity));
            rels.emplace(name, RelationValue(static_cast<int>(arity), std::move(tuples)));
        } else if (kw == "const") {
            if (!n) fail_at(at, "'domain' must precede constants");
            std::string name = cur.ident("constant name");
            declare(name, at);
            std::uint64_t e = cur.number("element");
            if (e >= *n)
                fail_at(at, "constant out of range: " + name + " = " + std::to_string(e) + " (n = " + std::to_string(*n) +
                                ")");
            vocab.add_constant(name);
            consts.emplace(name, static_cast<Element>(e));
        } else {
            fail_at(at, "unknown statement '" + kw + "'");
        }
    }
    if (!n) throw StructureError("missing 'domain' statement");

    if (expected) {
        for (const auto& r : expected->relations()) {
            auto a = vocab.relation_arity(r.name);
            if (!a) throw StructureError("missing interpretation for relation " + r.name);
            if (*a != r.arity) throw StructureError("relation " + r.name + " has arity " + std::to_string(*a) +
                                                    ", vocabulary says " + std::to_string(r.arity));
        }
        for (const auto& c : expected->constants())
            if (!vocab.has_constant(c)) throw StructureError("missing interpretation for constant " + c);
        for (const auto& r : vocab.relations())
            if (!expected->relation_arity(r.name)) throw StructureError("relation not in vocabulary: " + r.name);
        for (const auto& c : vocab.constants())
            if (!expected->has_constant(c)) throw StructureError("constant not in vocabulary: " + c);
        return Structure(*expected, *n, std::move(rels), std::move(consts));
    }
    return Structure(std::move(vocab), *n, std::move(rels), std::move(consts));
}

Vocabulary load_vocabulary(std::string_view text) {
    detail::TextCursor cur(text);
    Vocabulary vocab;
    while (true) {
        cur.skip_space();
        if (cur.at_end()) break;
        if (cur.accept(';')) continue;
        Located at{cur.line(), cur.column()};
        std::string kw = cur.ident("'rel' or 'const'");
        if (kw == "rel") {
            std::string name = cur.ident("relation name");
            std::uint64_t arity = cur.number("arity");
            if (arity < 1 || arity > 16) fail_at(at, "relation arity must be in 1..16");
            if (is_reserved_name(name)) fail_at(at, "reserved symbol: " + name);
            if (vocab.has_symbol(name)) fail_at(at, "duplicate symbol: " + name);
            vocab.add_relation(name, static_cast<int>(arity));
        } else if (kw == "const") {
            std::string name = cur.ident("constant name");
            if (is_reserved_name(name)) fail_at(at, "reserved symbol: " + name);
            if (vocab.has_symbol(name)) fail_at(at, "duplicate symbol: " + name);
            vocab.add_constant(name);
        } else {
            fail_at(at, "unknown statement '" + kw + "'");
        }
    }
    return vocab;
}

std::string format_structure(const Structure& s) {
    std::ostringstream out;
    out << "domain " << s.size() << "\n";
    for (const auto& r : s.vocabulary().relations())
        out << "rel " << r.name << " " << r.arity << " " << format_relation(s.relation(r.name)) << "\n";
    for (const auto& c : s.vocabulary().constants()) out << "const " << c << " " << s.constant(c) << "\n";
    return out.str();
}

std::string format_vocabulary(const Vocabulary& v) {
    std::ostringstream out;
    for (const auto& r : v.relations()) out << "rel " << r.name << " " << r.arity << "\n";
    for (const auto& c : v.constants()) out << "const " << c << "\n";
    return out.str();
}

} // namespace soplog
