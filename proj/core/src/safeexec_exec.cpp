#include <algorithm>
#include <cfenv>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "nsar/errors.hpp"
#include "nsar/safeexec.hpp"

#include "json.hpp"
#include "safeexec_ast.hpp"

namespace nsar::exec {

namespace {

using ast::BinOpKind;
using ast::CmpKind;
using ast::Expr;

struct RuntimeFailure {
    std::string message;
};
struct LimitFailure {
    std::string message;
};

[[noreturn]] void rt_fail(const std::string& message) { throw RuntimeFailure{message}; }

const char* type_name(const Value& v) {
    switch (v.data.index()) {
        case 0: return "NoneType";
        case 1: return "bool";
        case 2: return "int";
        case 3: return "float";
        case 4: return "str";
        case 5: return "list";
        default: return "dict";
    }
}

bool is_numberish(const Value& v) {
    return v.data.index() >= 1 && v.data.index() <= 3;
}
bool is_intish(const Value& v) { return v.data.index() == 1 || v.data.index() == 2; }

std::int64_t as_int(const Value& v) {
    if (const auto* b = std::get_if<bool>(&v.data)) return *b ? 1 : 0;
    return std::get<std::int64_t>(v.data);
}
double as_double(const Value& v) {
    if (const auto* d = std::get_if<double>(&v.data)) return *d;
    return static_cast<double>(as_int(v));
}

bool truthy(const Value& v) {
    switch (v.data.index()) {
        case 0: return false;
        case 1: return std::get<bool>(v.data);
        case 2: return std::get<std::int64_t>(v.data) != 0;
        case 3: return std::get<double>(v.data) != 0.0;
        case 4: return !std::get<std::string>(v.data).empty();
        case 5: return !std::get<std::shared_ptr<const ValueList>>(v.data)->empty();
        default: return !std::get<std::shared_ptr<const ValueDict>>(v.data)->empty();
    }
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_add_overflow(a, b, &out)) rt_fail("integer overflow in '+'");
    return out;
}
std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_sub_overflow(a, b, &out)) rt_fail("integer overflow in '-'");
    return out;
}
std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) rt_fail("integer overflow in '*'");
    return out;
}

std::int64_t floordiv_int(std::int64_t a, std::int64_t b) {
    if (b == 0) rt_fail("integer division or modulo by zero");
    if (a == std::numeric_limits<std::int64_t>::min() && b == -1) {
        rt_fail("integer overflow in '//'");
    }
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::int64_t mod_int(std::int64_t a, std::int64_t b) {
    if (b == 0) rt_fail("integer division or modulo by zero");
    if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return 0;
    std::int64_t r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) r += b;
    return r;
}

double mod_double(double a, double b) {
    if (b == 0.0) rt_fail("float modulo by zero");
    double r = std::fmod(a, b);
    if (r != 0.0 && ((r < 0.0) != (b < 0.0))) r += b;
    return r;
}

// Three-way compare for <, <=, >, >=. Numbers cross-compare; strings and
// lists compare lexicographically; anything else is a type error.
int order_cmp(const Value& a, const Value& b) {
    if (is_numberish(a) && is_numberish(b)) {
        if (is_intish(a) && is_intish(b)) {
            std::int64_t x = as_int(a), y = as_int(b);
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        double x = as_double(a), y = as_double(b);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.data.index() == 4 && b.data.index() == 4) {
        int c = std::get<std::string>(a.data).compare(std::get<std::string>(b.data));
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (a.data.index() == 5 && b.data.index() == 5) {
        const auto& la = *std::get<std::shared_ptr<const ValueList>>(a.data);
        const auto& lb = *std::get<std::shared_ptr<const ValueList>>(b.data);
        std::size_t n = std::min(la.size(), lb.size());
        for (std::size_t i = 0; i < n; ++i) {
            int c = order_cmp(la[i], lb[i]);
            if (c != 0) return c;
        }
        return la.size() < lb.size() ? -1 : (la.size() > lb.size() ? 1 : 0);
    }
    rt_fail(std::string("'<' not supported between instances of '") + type_name(a) +
            "' and '" + type_name(b) + "'");
}

class Interp {
public:
    Interp(const FactSet& facts, const ExecLimits& limits)
        : limits_(limits), start_(std::chrono::steady_clock::now()) {
        ValueList triples;
        triples.reserve(facts.facts.size());
        for (const Fact& f : facts.facts) {
            ValueList triple;
            triple.reserve(3);
            triple.emplace_back(f.entity);
            triple.emplace_back(f.attribute);
            if (const auto* i = std::get_if<std::int64_t>(&f.value)) {
                triple.emplace_back(*i);
            } else if (const auto* d = std::get_if<double>(&f.value)) {
                triple.emplace_back(*d);
            } else {
                triple.emplace_back(std::get<std::string>(f.value));
            }
            triples.emplace_back(std::move(triple));
        }
        env_["facts"] = Value(std::move(triples));
    }

    ExecOutcome run(const Program::Impl& program) {
        ExecOutcome outcome;
        std::optional<Value> last_bare;
        try {
            for (const ast::Statement& st : program.statements) {
                Value v = eval(*st.expr);
                if (st.target.has_value()) {
                    env_[*st.target] = std::move(v);
                } else {
                    last_bare = std::move(v);
                }
            }
            auto it = env_.find("answer");
            if (it != env_.end()) {
                outcome.answer = it->second;
            } else if (last_bare.has_value()) {
                outcome.answer = std::move(*last_bare);
            } else {
                outcome.status = ExecStatus::runtime_error;
                outcome.message = "program produced no answer (no 'answer' binding "
                                  "and no bare expression)";
            }
        } catch (const RuntimeFailure& f) {
            outcome.status = ExecStatus::runtime_error;
            outcome.message = f.message;
            outcome.answer.reset();
        } catch (const LimitFailure& f) {
            outcome.status = ExecStatus::limit_exceeded;
            outcome.message = f.message;
            outcome.answer.reset();
        }
        outcome.steps_used = steps_;
        return outcome;
    }

private:
    std::map<std::string, Value> env_;
    const ExecLimits& limits_;
    std::chrono::steady_clock::time_point start_;
    std::int64_t steps_ = 0;

    void tick() {
        if (++steps_ > limits_.max_steps) {
            throw LimitFailure{"step limit exceeded (" +
                               std::to_string(limits_.max_steps) + ")"};
        }
        if ((steps_ & 0x3FF) == 0 &&
            std::chrono::steady_clock::now() - start_ > limits_.wall_clock_cap) {
            throw LimitFailure{"wall clock cap exceeded"};
        }
    }

    void check_len(std::size_t n) {
        if (n > static_cast<std::size_t>(limits_.max_collection_len)) {
            throw LimitFailure{"collection length limit exceeded (" +
                               std::to_string(limits_.max_collection_len) + ")"};
        }
    }

    Value eval(const Expr& e) {
        tick();
        switch (e.kind) {
            case Expr::Kind::int_lit: return Value(e.int_value);
            case Expr::Kind::real_lit: return Value(e.real_value);
            case Expr::Kind::str_lit: return Value(e.text);
            case Expr::Kind::bool_lit: return Value(e.bool_value);
            case Expr::Kind::none_lit: return Value();
            case Expr::Kind::name: {
                auto it = env_.find(e.text);
                if (it == env_.end()) rt_fail("name '" + e.text + "' is not defined");
                return it->second;
            }
            case Expr::Kind::list_display: {
                ValueList items;
                items.reserve(e.items.size());
                check_len(e.items.size());
                for (const auto& item : e.items) items.push_back(eval(*item));
                return Value(std::move(items));
            }
            case Expr::Kind::dict_display: {
                ValueDict entries;
                entries.reserve(e.pairs.size());
                check_len(e.pairs.size());
                for (const auto& [k, v] : e.pairs) {
                    Value key = eval(*k);
                    Value value = eval(*v);
                    bool replaced = false;
                    for (auto& existing : entries) {
                        if (value_equal(existing.first, key)) {
                            existing.second = value;
                            replaced = true;
                            break;
                        }
                    }
                    if (!replaced) entries.emplace_back(std::move(key), std::move(value));
                }
                return Value(std::move(entries));
            }
            case Expr::Kind::unary_neg: return negate(eval(*e.lhs));
            case Expr::Kind::unary_not: return Value(!truthy(eval(*e.lhs)));
            case Expr::Kind::binop: return binop(e.bin_op, eval(*e.lhs), eval(*e.rhs));
            case Expr::Kind::compare: return compare(e);
            case Expr::Kind::bool_and: {
                Value v;
                for (const auto& item : e.items) {
                    v = eval(*item);
                    if (!truthy(v)) return v;
                }
                return v;
            }
            case Expr::Kind::bool_or: {
                Value v;
                for (const auto& item : e.items) {
                    v = eval(*item);
                    if (truthy(v)) return v;
                }
                return v;
            }
            case Expr::Kind::conditional:
                return truthy(eval(*e.cond)) ? eval(*e.lhs) : eval(*e.else_e);
            case Expr::Kind::subscript: return subscript(eval(*e.lhs), eval(*e.rhs));
            case Expr::Kind::call: return call(e);
            case Expr::Kind::list_comp: return comprehension(e);
        }
        rt_fail("unreachable expression kind");
    }

    Value negate(const Value& v) {
        if (const auto* d = std::get_if<double>(&v.data)) return Value(-*d);
        if (is_intish(v)) {
            std::int64_t x = as_int(v);
            if (x == std::numeric_limits<std::int64_t>::min()) {
                rt_fail("integer overflow in unary '-'");
            }
            return Value(-x);
        }
        rt_fail(std::string("bad operand type for unary '-': '") + type_name(v) + "'");
    }

    Value binop(BinOpKind op, const Value& a, const Value& b) {
        switch (op) {
            case BinOpKind::add:
                if (is_numberish(a) && is_numberish(b)) {
                    if (is_intish(a) && is_intish(b)) {
                        return Value(checked_add(as_int(a), as_int(b)));
                    }
                    return Value(as_double(a) + as_double(b));
                }
                if (a.data.index() == 4 && b.data.index() == 4) {
                    return Value(std::get<std::string>(a.data) +
                                 std::get<std::string>(b.data));
                }
                if (a.data.index() == 5 && b.data.index() == 5) {
                    const auto& la = *std::get<std::shared_ptr<const ValueList>>(a.data);
                    const auto& lb = *std::get<std::shared_ptr<const ValueList>>(b.data);
                    check_len(la.size() + lb.size());
                    ValueList out;
                    out.reserve(la.size() + lb.size());
                    out.insert(out.end(), la.begin(), la.end());
                    out.insert(out.end(), lb.begin(), lb.end());
                    return Value(std::move(out));
                }
                rt_fail(std::string("unsupported operand types for '+': '") +
                        type_name(a) + "' and '" + type_name(b) + "'");
            case BinOpKind::sub:
                if (is_numberish(a) && is_numberish(b)) {
                    if (is_intish(a) && is_intish(b)) {
                        return Value(checked_sub(as_int(a), as_int(b)));
                    }
                    return Value(as_double(a) - as_double(b));
                }
                rt_fail(std::string("unsupported operand types for '-': '") +
                        type_name(a) + "' and '" + type_name(b) + "'");
            case BinOpKind::mul: {
                if (is_numberish(a) && is_numberish(b)) {
                    if (is_intish(a) && is_intish(b)) {
                        return Value(checked_mul(as_int(a), as_int(b)));
                    }
                    return Value(as_double(a) * as_double(b));
                }
                const Value* seq = nullptr;
                const Value* count = nullptr;
                if ((a.data.index() == 5 || a.data.index() == 4) && is_intish(b)) {
                    seq = &a;
                    count = &b;
                } else if ((b.data.index() == 5 || b.data.index() == 4) && is_intish(a)) {
                    seq = &b;
                    count = &a;
                }
                if (seq != nullptr) return repeat_sequence(*seq, as_int(*count));
                rt_fail(std::string("unsupported operand types for '*': '") +
                        type_name(a) + "' and '" + type_name(b) + "'");
            }
            case BinOpKind::div: {
                if (!is_numberish(a) || !is_numberish(b)) {
                    rt_fail(std::string("unsupported operand types for '/': '") +
                            type_name(a) + "' and '" + type_name(b) + "'");
                }
                double y = as_double(b);
                if (y == 0.0) rt_fail("division by zero");
                return Value(as_double(a) / y);
            }
            case BinOpKind::floordiv:
                if (is_numberish(a) && is_numberish(b)) {
                    if (is_intish(a) && is_intish(b)) {
                        return Value(floordiv_int(as_int(a), as_int(b)));
                    }
                    double y = as_double(b);
                    if (y == 0.0) rt_fail("float floor division by zero");
                    return Value(std::floor(as_double(a) / y));
                }
                rt_fail(std::string("unsupported operand types for '//': '") +
                        type_name(a) + "' and '" + type_name(b) + "'");
            case BinOpKind::mod:
                if (is_numberish(a) && is_numberish(b)) {
                    if (is_intish(a) && is_intish(b)) {
                        return Value(mod_int(as_int(a), as_int(b)));
                    }
                    return Value(mod_double(as_double(a), as_double(b)));
                }
                rt_fail(std::string("unsupported operand types for '%': '") +
                        type_name(a) + "' and '" + type_name(b) + "'");
        }
        rt_fail("unreachable operator");
    }

    Value repeat_sequence(const Value& seq, std::int64_t count) {
        if (count < 0) count = 0;
        // Reject before multiplying so huge counts cannot overflow size math.
        auto guarded_len = [&](std::size_t unit) {
            if (unit != 0 &&
                static_cast<std::uint64_t>(count) >
                    static_cast<std::uint64_t>(limits_.max_collection_len)) {
                throw LimitFailure{"collection length limit exceeded (" +
                                   std::to_string(limits_.max_collection_len) + ")"};
            }
            std::size_t total = unit * static_cast<std::size_t>(count);
            check_len(total);
            return total;
        };
        if (const auto* s = std::get_if<std::string>(&seq.data)) {
            std::string out;
            out.reserve(guarded_len(s->size()));
            for (std::int64_t i = 0; i < count; ++i) out += *s;
            return Value(std::move(out));
        }
        const auto& list = *std::get<std::shared_ptr<const ValueList>>(seq.data);
        ValueList out;
        out.reserve(guarded_len(list.size()));
        for (std::int64_t i = 0; i < count; ++i) {
            out.insert(out.end(), list.begin(), list.end());
        }
        return Value(std::move(out));
    }

    bool cmp_one(CmpKind op, const Value& a, const Value& b) {
        switch (op) {
            case CmpKind::eq: return value_equal(a, b);
            case CmpKind::ne: return !value_equal(a, b);
            case CmpKind::lt: return order_cmp(a, b) < 0;
            case CmpKind::le: return order_cmp(a, b) <= 0;
            case CmpKind::gt: return order_cmp(a, b) > 0;
            case CmpKind::ge: return order_cmp(a, b) >= 0;
        }
        rt_fail("unreachable comparison");
    }

    Value compare(const Expr& e) {
        Value prev = eval(*e.cmp_operands[0]);
        for (std::size_t i = 0; i < e.cmp_ops.size(); ++i) {
            Value cur = eval(*e.cmp_operands[i + 1]);
            if (!cmp_one(e.cmp_ops[i], prev, cur)) return Value(false);
            prev = std::move(cur);
        }
        return Value(true);
    }

    Value subscript(const Value& target, const Value& index) {
        if (const auto* list_ptr =
                std::get_if<std::shared_ptr<const ValueList>>(&target.data)) {
            const ValueList& list = **list_ptr;
            if (!is_intish(index)) {
                rt_fail(std::string("list indices must be integers, not '") +
                        type_name(index) + "'");
            }
            std::int64_t i = as_int(index);
            if (i < 0) i += static_cast<std::int64_t>(list.size());
            if (i < 0 || i >= static_cast<std::int64_t>(list.size())) {
                rt_fail("list index out of range");
            }
            return list[static_cast<std::size_t>(i)];
        }
        if (const auto* s = std::get_if<std::string>(&target.data)) {
            if (!is_intish(index)) rt_fail("string indices must be integers");
            std::int64_t i = as_int(index);
            if (i < 0) i += static_cast<std::int64_t>(s->size());
            if (i < 0 || i >= static_cast<std::int64_t>(s->size())) {
                rt_fail("string index out of range");
            }
            return Value(std::string(1, (*s)[static_cast<std::size_t>(i)]));
        }
        if (const auto* dict_ptr =
                std::get_if<std::shared_ptr<const ValueDict>>(&target.data)) {
            for (const auto& [k, v] : **dict_ptr) {
                if (value_equal(k, index)) return v;
            }
            rt_fail("key not found: " + repr(index));
        }
        rt_fail(std::string("'") + type_name(target) + "' is not subscriptable");
    }

    Value comprehension(const Expr& e) {
        Value iterable = eval(*e.rhs);
        const auto* list_ptr =
            std::get_if<std::shared_ptr<const ValueList>>(&iterable.data);
        if (list_ptr == nullptr) {
            rt_fail(std::string("'") + type_name(iterable) +
                    "' is not iterable in this subset");
        }
        // Shadow the loop variable and restore it afterwards.
        std::optional<Value> saved;
        auto it = env_.find(e.text);
        if (it != env_.end()) saved = it->second;

        ValueList out;
        for (const Value& item : **list_ptr) {
            env_[e.text] = item;
            if (e.cond != nullptr && !truthy(eval(*e.cond))) continue;
            out.push_back(eval(*e.lhs));
            check_len(out.size());
        }
        if (saved.has_value()) {
            env_[e.text] = std::move(*saved);
        } else {
            env_.erase(e.text);
        }
        return Value(std::move(out));
    }

    const ValueList& want_list(const Value& v, const char* fn) {
        const auto* p = std::get_if<std::shared_ptr<const ValueList>>(&v.data);
        if (p == nullptr) {
            rt_fail(std::string(fn) + "() expects a list in this subset, got '" +
                    type_name(v) + "'");
        }
        return **p;
    }

    Value call(const Expr& e) {
        std::vector<Value> args;
        args.reserve(e.items.size());
        for (const auto& a : e.items) args.push_back(eval(*a));
        const std::string& fn = e.text;

        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi) {
                rt_fail(fn + "() takes " + std::to_string(lo) +
                        (hi == lo ? "" : " to " + std::to_string(hi)) +
                        " arguments, got " + std::to_string(args.size()));
            }
        };

        if (fn == "max" || fn == "min") {
            const bool is_max = fn == "max";
            if (args.empty()) rt_fail(fn + "() expected at least 1 argument, got 0");
            std::vector<const Value*> pool;
            if (args.size() == 1) {
                const ValueList& list = want_list(args[0], fn.c_str());
                if (list.empty()) rt_fail(fn + "() arg is an empty sequence");
                for (const Value& v : list) pool.push_back(&v);
            } else {
                for (const Value& v : args) pool.push_back(&v);
            }
            const Value* best = pool[0];
            for (std::size_t i = 1; i < pool.size(); ++i) {
                int c = order_cmp(*pool[i], *best);
                if (is_max ? c > 0 : c < 0) best = pool[i];
            }
            return *best;
        }
        if (fn == "sum") {
            arity(1, 1);
            const ValueList& list = want_list(args[0], "sum");
            bool real = false;
            for (const Value& v : list) {
                if (v.data.index() == 3) real = true;
                else if (!is_intish(v)) {
                    rt_fail(std::string("unsupported operand type for sum(): '") +
                            type_name(v) + "'");
                }
            }
            if (real) {
                double total = 0.0;
                for (const Value& v : list) total += as_double(v);
                return Value(total);
            }
            std::int64_t total = 0;
            for (const Value& v : list) total = checked_add(total, as_int(v));
            return Value(total);
        }
        if (fn == "len") {
            arity(1, 1);
            const Value& v = args[0];
            if (const auto* l = std::get_if<std::shared_ptr<const ValueList>>(&v.data)) {
                return Value(static_cast<std::int64_t>((*l)->size()));
            }
            if (const auto* d = std::get_if<std::shared_ptr<const ValueDict>>(&v.data)) {
                return Value(static_cast<std::int64_t>((*d)->size()));
            }
            if (const auto* s = std::get_if<std::string>(&v.data)) {
                return Value(static_cast<std::int64_t>(s->size()));
            }
            rt_fail(std::string("object of type '") + type_name(v) + "' has no len()");
        }
        if (fn == "sorted") {
            arity(1, 1);
            ValueList out = want_list(args[0], "sorted");
            std::stable_sort(out.begin(), out.end(), [](const Value& a, const Value& b) {
                return order_cmp(a, b) < 0;
            });
            return Value(std::move(out));
        }
        if (fn == "abs") {
            arity(1, 1);
            const Value& v = args[0];
            if (const auto* d = std::get_if<double>(&v.data)) return Value(std::fabs(*d));
            if (is_intish(v)) {
                std::int64_t x = as_int(v);
                if (x == std::numeric_limits<std::int64_t>::min()) {
                    rt_fail("integer overflow in abs()");
                }
                return Value(x < 0 ? -x : x);
            }
            rt_fail(std::string("bad operand type for abs(): '") + type_name(v) + "'");
        }
        if (fn == "int") {
            arity(1, 1);
            return to_int(args[0]);
        }
        if (fn == "float") {
            arity(1, 1);
            return to_float(args[0]);
        }
        if (fn == "str") {
            arity(1, 1);
            if (const auto* s = std::get_if<std::string>(&args[0].data)) return Value(*s);
            return Value(repr(args[0]));
        }
        if (fn == "round") {
            arity(1, 2);
            return round_value(args);
        }
        rt_fail("call to unknown builtin '" + fn + "'");
    }

    Value to_int(const Value& v) {
        if (is_intish(v)) return Value(as_int(v));
        if (const auto* d = std::get_if<double>(&v.data)) {
            double t = std::trunc(*d);
            if (!std::isfinite(t) || t < -9.3e18 || t > 9.3e18) {
                rt_fail("cannot convert float to int: out of range");
            }
            return Value(static_cast<std::int64_t>(t));
        }
        if (const auto* s = std::get_if<std::string>(&v.data)) {
            std::string_view body = *s;
            while (!body.empty() && (body.front() == ' ' || body.front() == '\t')) {
                body.remove_prefix(1);
            }
            while (!body.empty() && (body.back() == ' ' || body.back() == '\t')) {
                body.remove_suffix(1);
            }
            std::int64_t out = 0;
            auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), out);
            if (ec != std::errc{} || p != body.data() + body.size() || body.empty()) {
                rt_fail("invalid literal for int(): '" + *s + "'");
            }
            return Value(out);
        }
        rt_fail(std::string("int() argument must be a number or string, not '") +
                type_name(v) + "'");
    }

    Value to_float(const Value& v) {
        if (is_numberish(v)) return Value(as_double(v));
        if (const auto* s = std::get_if<std::string>(&v.data)) {
            const char* begin = s->c_str();
            char* end = nullptr;
            double out = std::strtod(begin, &end);
            while (end != nullptr && (*end == ' ' || *end == '\t')) ++end;
            if (end == begin || end == nullptr || *end != '\0') {
                rt_fail("could not convert string to float: '" + *s + "'");
            }
            return Value(out);
        }
        rt_fail(std::string("float() argument must be a number or string, not '") +
                type_name(v) + "'");
    }

    Value round_value(const std::vector<Value>& args) {
        const Value& v = args[0];
        if (!is_numberish(v)) {
            rt_fail(std::string("type '") + type_name(v) + "' cannot be rounded");
        }
        if (args.size() == 1) {
            if (is_intish(v)) return Value(as_int(v));
            double x = std::get<double>(v.data);
            // Banker's rounding, matching the source idiom.
            double r = std::nearbyint(x);
            if (!std::isfinite(r) || r < -9.3e18 || r > 9.3e18) {
                rt_fail("rounded value out of int range");
            }
            return Value(static_cast<std::int64_t>(r));
        }
        if (!is_intish(args[1])) rt_fail("round() ndigits must be an integer");
        std::int64_t nd = as_int(args[1]);
        double x = as_double(v);
        double scale = std::pow(10.0, static_cast<double>(nd));
        return Value(std::nearbyint(x * scale) / scale);
    }
};

nlohmann::json value_to_json(const Value& v);

nlohmann::json value_to_json(const Value& v) {
    switch (v.data.index()) {
        case 0: return nullptr;
        case 1: return std::get<bool>(v.data);
        case 2: return std::get<std::int64_t>(v.data);
        case 3: return std::get<double>(v.data);
        case 4: return std::get<std::string>(v.data);
        case 5: {
            nlohmann::json arr = nlohmann::json::array();
            for (const Value& item : *std::get<std::shared_ptr<const ValueList>>(v.data)) {
                arr.push_back(value_to_json(item));
            }
            return arr;
        }
        default: {
            // Dicts serialize as [[key, value], ...] so non-string keys survive.
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [k, val] :
                 *std::get<std::shared_ptr<const ValueDict>>(v.data)) {
                arr.push_back({value_to_json(k), value_to_json(val)});
            }
            return nlohmann::json{{"__dict__", arr}};
        }
    }
}

Value value_from_json(const nlohmann::json& j) {
    if (j.is_null()) return Value();
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_number_float()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_array()) {
        ValueList items;
        for (const auto& item : j) items.push_back(value_from_json(item));
        return Value(std::move(items));
    }
    if (j.is_object() && j.contains("__dict__")) {
        ValueDict entries;
        for (const auto& pair : j.at("__dict__")) {
            entries.emplace_back(value_from_json(pair.at(0)), value_from_json(pair.at(1)));
        }
        return Value(std::move(entries));
    }
    return Value();
}

}  // namespace

std::string repr(const Value& v) {
    switch (v.data.index()) {
        case 0: return "None";
        case 1: return std::get<bool>(v.data) ? "True" : "False";
        case 2: return std::to_string(std::get<std::int64_t>(v.data));
        case 3: {
            double d = std::get<double>(v.data);
            char buf[64];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
            std::string s(buf, ptr);
            if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
                s += ".0";
            }
            return s;
        }
        case 4: {
            std::string out = "'";
            for (char c : std::get<std::string>(v.data)) {
                switch (c) {
                    case '\'': out += "\\'"; break;
                    case '\\': out += "\\\\"; break;
                    case '\n': out += "\\n"; break;
                    case '\t': out += "\\t"; break;
                    case '\r': out += "\\r"; break;
                    default: out.push_back(c);
                }
            }
            out.push_back('\'');
            return out;
        }
        case 5: {
            std::string out = "[";
            const auto& list = *std::get<std::shared_ptr<const ValueList>>(v.data);
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (i > 0) out += ", ";
                out += repr(list[i]);
            }
            out.push_back(']');
            return out;
        }
        default: {
            std::string out = "{";
            const auto& dict = *std::get<std::shared_ptr<const ValueDict>>(v.data);
            for (std::size_t i = 0; i < dict.size(); ++i) {
                if (i > 0) out += ", ";
                out += repr(dict[i].first) + ": " + repr(dict[i].second);
            }
            out.push_back('}');
            return out;
        }
    }
}

bool value_equal(const Value& a, const Value& b) {
    if (is_numberish(a) && is_numberish(b)) {
        if (is_intish(a) && is_intish(b)) return as_int(a) == as_int(b);
        return as_double(a) == as_double(b);
    }
    if (a.data.index() != b.data.index()) return false;
    switch (a.data.index()) {
        case 0: return true;
        case 4: return std::get<std::string>(a.data) == std::get<std::string>(b.data);
        case 5: {
            const auto& la = *std::get<std::shared_ptr<const ValueList>>(a.data);
            const auto& lb = *std::get<std::shared_ptr<const ValueList>>(b.data);
            if (la.size() != lb.size()) return false;
            for (std::size_t i = 0; i < la.size(); ++i) {
                if (!value_equal(la[i], lb[i])) return false;
            }
            return true;
        }
        case 6: {
            const auto& da = *std::get<std::shared_ptr<const ValueDict>>(a.data);
            const auto& db = *std::get<std::shared_ptr<const ValueDict>>(b.data);
            if (da.size() != db.size()) return false;
            for (const auto& [k, v] : da) {
                bool found = false;
                for (const auto& [k2, v2] : db) {
                    if (value_equal(k, k2)) {
                        if (!value_equal(v, v2)) return false;
                        found = true;
                        break;
                    }
                }
                if (!found) return false;
            }
            return true;
        }
        default: return false;
    }
}

std::string_view to_string(ExecStatus s) {
    switch (s) {
        case ExecStatus::ok: return "ok";
        case ExecStatus::parse_error: return "parse_error";
        case ExecStatus::unsupported_construct: return "unsupported_construct";
        case ExecStatus::runtime_error: return "runtime_error";
        case ExecStatus::limit_exceeded: return "limit_exceeded";
    }
    return "unknown";
}

ExecStatus exec_status_from_string(std::string_view s) {
    if (s == "ok") return ExecStatus::ok;
    if (s == "parse_error") return ExecStatus::parse_error;
    if (s == "unsupported_construct") return ExecStatus::unsupported_construct;
    if (s == "runtime_error") return ExecStatus::runtime_error;
    if (s == "limit_exceeded") return ExecStatus::limit_exceeded;
    throw InvalidArgumentError("unknown exec status: " + std::string(s));
}

ExecOutcome execute(const Program& program, const FactSet& facts,
                    const ExecLimits& limits) {
    if (!program.impl_) {
        ExecOutcome outcome;
        outcome.status = ExecStatus::parse_error;
        outcome.message = "empty program";
        return outcome;
    }
    Interp interp(facts, limits);
    return interp.run(*program.impl_);
}

ExecOutcome run_source(std::string_view source, const FactSet& facts,
                       const ExecLimits& limits) {
    ExecOutcome outcome;
    Program program;
    try {
        program = parse_program(source);
    } catch (const UnsupportedConstructError& err) {
        outcome.status = ExecStatus::unsupported_construct;
        outcome.message = err.what();
        return outcome;
    } catch (const ParseError& err) {
        outcome.status = ExecStatus::parse_error;
        outcome.message = std::string(err.what()) + " at line " +
                          std::to_string(err.line()) + ", column " +
                          std::to_string(err.column());
        return outcome;
    }
    if (program.statement_count() == 0) {
        outcome.status = ExecStatus::parse_error;
        outcome.message = "no statements";
        return outcome;
    }
    return execute(program, facts, limits);
}

std::string outcome_to_json(const ExecOutcome& outcome) {
    nlohmann::json j;
    j["status"] = std::string(to_string(outcome.status));
    j["answer"] = outcome.answer.has_value() ? value_to_json(*outcome.answer)
                                             : nlohmann::json(nullptr);
    j["steps_used"] = outcome.steps_used;
    if (outcome.message.has_value()) j["message"] = *outcome.message;
    return j.dump();
}

ExecOutcome outcome_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ExecOutcome outcome;
    outcome.status = exec_status_from_string(j.at("status").get<std::string>());
    if (j.contains("answer") && !j.at("answer").is_null()) {
        outcome.answer = value_from_json(j.at("answer"));
    }
    outcome.steps_used = j.value("steps_used", std::int64_t{0});
    if (j.contains("message")) outcome.message = j.at("message").get<std::string>();
    return outcome;
}

}  // namespace nsar::exec
