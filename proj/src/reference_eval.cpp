// Straightforward recursive evaluator over the AST. It shares no code with the
// compiled evaluator and is only meant for small n and small formulas.

#include "soplog/error.hpp"
#include "soplog/semantics.hpp"

#include <functional>
#include <set>

namespace soplog {

namespace {

struct RefEnv {
    std::map<std::string, Element> fo;
    std::map<std::string, std::set<Tuple>> so;
};

class Reference {
public:
    explicit Reference(const Structure& s) : s_(s), n_(s.size()) {}

    bool eval(const Formula& f, RefEnv& env) {
        switch (f.kind()) {
        case NodeKind::RelAtom: {
            Tuple args = terms(f, env);
            return s_.holds(f.rel(), args) != f.negated();
        }
        case NodeKind::Equal: {
            Tuple args = terms(f, env);
            return (args[0] == args[1]) != f.negated();
        }
        case NodeKind::SOAtom: {
            auto it = env.so.find(f.so().name);
            if (it == env.so.end()) throw EvalError("unassigned SO variable " + f.so().name);
            return (it->second.count(terms(f, env)) > 0) != f.negated();
        }
        case NodeKind::And:
            for (const auto& c : f.children())
                if (!eval(c, env)) return false;
            return true;
        case NodeKind::Or:
            for (const auto& c : f.children())
                if (eval(c, env)) return true;
            return false;
        case NodeKind::ExistsFO: {
            const std::string& x = f.vars()[0];
            auto saved = env.fo;
            bool found = false;
            for (Element e = 0; e < n_ && !found; ++e) {
                env.fo[x] = e;
                found = eval(f.body(), env);
            }
            env.fo = saved;
            return found;
        }
        case NodeKind::ForallIn: {
            auto it = env.so.find(f.so().name);
            if (it == env.so.end()) throw EvalError("unassigned SO variable " + f.so().name);
            std::set<Tuple> guard = it->second;
            auto saved = env.fo;
            bool all = true;
            for (const Tuple& t : guard) {
                std::map<std::string, Element> bind;
                bool consistent = true;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    auto [pos, added] = bind.emplace(f.vars()[i], t[i]);
                    if (!added && pos->second != t[i]) consistent = false;
                }
                if (!consistent) continue;
                for (const auto& [name, e] : bind) env.fo[name] = e;
                if (!eval(f.body(), env)) {
                    all = false;
                    break;
                }
            }
            env.fo = saved;
            return all;
        }
        case NodeKind::ExistsSO:
        case NodeKind::ForallSO: {
            bool existential = f.kind() == NodeKind::ExistsSO;
            const SOVar& X = f.so();
            std::vector<Tuple> all = all_tuples(X.arity);
            std::uint64_t bound = 1;
            std::uint32_t logn = log_ceil(n_);
            for (int i = 0; i < X.exponent; ++i) bound *= logn;
            auto saved = env.so.find(X.name) == env.so.end() ? std::optional<std::set<Tuple>>()
                                                              : std::optional<std::set<Tuple>>(env.so[X.name]);
            std::set<Tuple> current;
            // include/exclude recursion over the tuple list; stops at the first decisive value
            std::function<bool(std::size_t)> search = [&](std::size_t i) -> bool {
                if (i == all.size()) {
                    env.so[X.name] = current;
                    return eval(f.body(), env) == existential;
                }
                if (search(i + 1)) return true;
                if (current.size() < bound) {
                    current.insert(all[i]);
                    bool hit = search(i + 1);
                    current.erase(all[i]);
                    if (hit) return true;
                }
                return false;
            };
            bool hit = search(0);
            if (saved)
                env.so[X.name] = *saved;
            else
                env.so.erase(X.name);
            return existential ? hit : !hit;
        }
        }
        return false;
    }

private:
    Tuple terms(const Formula& f, const RefEnv& env) const {
        Tuple out;
        for (const auto& t : f.terms()) {
            if (t.is_var()) {
                auto it = env.fo.find(t.name);
                if (it == env.fo.end()) throw EvalError("unassigned free variable " + t.name);
                out.push_back(it->second);
            } else {
                out.push_back(s_.constant(t.name));
            }
        }
        return out;
    }

    std::vector<Tuple> all_tuples(int arity) const {
        std::vector<Tuple> out{Tuple{}};
        for (int i = 0; i < arity; ++i) {
            std::vector<Tuple> next;
            for (const auto& t : out)
                for (Element e = 0; e < n_; ++e) {
                    Tuple u = t;
                    u.push_back(e);
                    next.push_back(std::move(u));
                }
            out = std::move(next);
        }
        return out;
    }

    const Structure& s_;
    std::size_t n_;
};

} // namespace

bool reference_evaluate(const Structure& s, const Formula& f, const Valuation& v) {
    RefEnv env;
    env.fo = v.fo;
    for (const auto& [name, r] : v.so) env.so[name] = std::set<Tuple>(r.tuples().begin(), r.tuples().end());
    return Reference(s).eval(f, env);
}

} // namespace soplog
