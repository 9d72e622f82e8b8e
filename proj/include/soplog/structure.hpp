#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace soplog {

using Element = std::uint32_t;
using Tuple = std::vector<Element>;

// Exact ceil(log2 n) for n >= 2.
std::uint32_t log_ceil(std::uint64_t n);

// x^e with saturation at UINT64_MAX.
std::uint64_t sat_pow(std::uint64_t x, std::uint64_t e);

enum class Builtin { Leq, Succ, Bit, Zero, One, Max, Logn, LognMinus1 };

std::optional<Builtin> builtin_from_name(std::string_view name);
std::string_view builtin_name(Builtin b);
bool builtin_is_relation(Builtin b);
bool is_reserved_name(std::string_view name);

// Value of a built-in constant in a domain of size n.
Element builtin_constant(Builtin b, std::size_t n);
// Truth of a built-in binary relation.
bool builtin_holds(Builtin b, Element x, Element y);

struct RelationSymbol {
    std::string name;
    int arity = 1;

    bool operator==(const RelationSymbol&) const = default;
};

class Vocabulary {
public:
    void add_relation(const std::string& name, int arity);
    void add_constant(const std::string& name);

    const std::vector<RelationSymbol>& relations() const { return relations_; }
    const std::vector<std::string>& constants() const { return constants_; }

    std::optional<int> relation_arity(std::string_view name) const;
    bool has_constant(std::string_view name) const;
    bool has_symbol(std::string_view name) const;

    bool operator==(const Vocabulary&) const = default;

private:
    std::vector<RelationSymbol> relations_;
    std::vector<std::string> constants_;
};

// A finite relation: canonical sorted, duplicate-free tuple list.
class RelationValue {
public:
    RelationValue() = default;
    explicit RelationValue(int arity, std::vector<Tuple> tuples = {});

    int arity() const { return arity_; }
    std::size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    const std::vector<Tuple>& tuples() const { return tuples_; }
    bool contains(const Tuple& t) const;

    bool operator==(const RelationValue&) const = default;
    bool operator<(const RelationValue& o) const;

private:
    int arity_ = 1;
    std::vector<Tuple> tuples_;
};

std::string format_relation(const RelationValue& r);

class Structure {
public:
    // Validates every invariant; throws StructureError.
    Structure(Vocabulary vocab, std::size_t n, std::map<std::string, RelationValue> relations,
              std::map<std::string, Element> constants);

    std::size_t size() const { return n_; }
    const Vocabulary& vocabulary() const { return vocab_; }

    const RelationValue& relation(std::string_view name) const;
    Element constant(std::string_view name) const;

    // Dense lookup; index is the position in vocabulary().relations().
    int relation_index(std::string_view name) const;
    bool holds(int index, const Element* args) const;
    bool holds(std::string_view name, const Tuple& args) const;

    // Derived interpretation of a reserved symbol.
    std::variant<Element, RelationValue> builtin(std::string_view name) const;

private:
    Vocabulary vocab_;
    std::size_t n_;
    std::vector<RelationValue> relations_;
    std::vector<std::vector<std::uint8_t>> dense_;
    std::map<std::string, Element, std::less<>> constants_;
};

struct BitString {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    std::string str() const;
    static BitString parse(std::string_view text);
    bool operator==(const BitString&) const = default;
};

// Closed-form length of bin(A) for the given shape.
std::uint64_t encoded_length(const Vocabulary& vocab, std::size_t n);
BitString encode(const Structure& s);

// Structure file: `domain n`, `rel R r { (..) .. }`, `const c e`, `#` comments.
// Statements may be separated by newlines or `;`. If `expected` is given, the
// file must interpret exactly that vocabulary.
Structure load_structure(std::string_view text, const Vocabulary* expected = nullptr);
// Vocabulary file: `rel R r` and `const c` statements.
Vocabulary load_vocabulary(std::string_view text);
std::string format_structure(const Structure& s);
std::string format_vocabulary(const Vocabulary& v);

} // namespace soplog
