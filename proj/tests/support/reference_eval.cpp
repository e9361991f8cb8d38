#include "reference_eval.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <variant>
#include <vector>

namespace refeval {

namespace {

struct RV;
using List = std::vector<RV>;
using Dict = std::vector<std::pair<RV, RV>>;

struct RV {
    std::variant<std::monostate, bool, long long, double, std::string,
                 std::shared_ptr<List>, std::shared_ptr<Dict>>
        v;
};

struct RtErr {
    std::string msg;
};
struct PErr {
    std::string msg;
};
struct UErr {
    std::string what;
};

using Env = std::map<std::string, RV>;
using Thunk = std::function<RV(Env&)>;

bool intish(const RV& x) { return x.v.index() == 1 || x.v.index() == 2; }
bool numish(const RV& x) { return x.v.index() >= 1 && x.v.index() <= 3; }

long long ival(const RV& x) {
    if (x.v.index() == 1) return std::get<bool>(x.v) ? 1 : 0;
    return std::get<long long>(x.v);
}
double dval(const RV& x) {
    if (x.v.index() == 3) return std::get<double>(x.v);
    return static_cast<double>(ival(x));
}

bool truthy(const RV& x) {
    switch (x.v.index()) {
        case 0: return false;
        case 1: return std::get<bool>(x.v);
        case 2: return std::get<long long>(x.v) != 0;
        case 3: return std::get<double>(x.v) != 0.0;
        case 4: return !std::get<std::string>(x.v).empty();
        case 5: return !std::get<std::shared_ptr<List>>(x.v)->empty();
        default: return !std::get<std::shared_ptr<Dict>>(x.v)->empty();
    }
}

bool eq(const RV& a, const RV& b);

int cmp(const RV& a, const RV& b) {
    if (numish(a) && numish(b)) {
        if (intish(a) && intish(b)) {
            long long x = ival(a), y = ival(b);
            return x < y ? -1 : (x > y ? 1 : 0);
        }
        double x = dval(a), y = dval(b);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.v.index() == 4 && b.v.index() == 4) {
        const auto& x = std::get<std::string>(a.v);
        const auto& y = std::get<std::string>(b.v);
        return x < y ? -1 : (x > y ? 1 : 0);
    }
    if (a.v.index() == 5 && b.v.index() == 5) {
        const auto& x = *std::get<std::shared_ptr<List>>(a.v);
        const auto& y = *std::get<std::shared_ptr<List>>(b.v);
        for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
            int c = cmp(x[i], y[i]);
            if (c != 0) return c;
        }
        return x.size() < y.size() ? -1 : (x.size() > y.size() ? 1 : 0);
    }
    throw RtErr{"order comparison on incompatible types"};
}

bool eq(const RV& a, const RV& b) {
    if (numish(a) && numish(b)) {
        if (intish(a) && intish(b)) return ival(a) == ival(b);
        return dval(a) == dval(b);
    }
    if (a.v.index() != b.v.index()) return false;
    switch (a.v.index()) {
        case 0: return true;
        case 4: return std::get<std::string>(a.v) == std::get<std::string>(b.v);
        case 5: {
            const auto& x = *std::get<std::shared_ptr<List>>(a.v);
            const auto& y = *std::get<std::shared_ptr<List>>(b.v);
            if (x.size() != y.size()) return false;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (!eq(x[i], y[i])) return false;
            }
            return true;
        }
        case 6: {
            const auto& x = *std::get<std::shared_ptr<Dict>>(a.v);
            const auto& y = *std::get<std::shared_ptr<Dict>>(b.v);
            if (x.size() != y.size()) return false;
            for (const auto& [k, val] : x) {
                bool hit = false;
                for (const auto& [k2, val2] : y) {
                    if (eq(k, k2)) {
                        if (!eq(val, val2)) return false;
                        hit = true;
                        break;
                    }
                }
                if (!hit) return false;
            }
            return true;
        }
        default: return false;
    }
}

std::string repr(const RV& x) {
    switch (x.v.index()) {
        case 0: return "None";
        case 1: return std::get<bool>(x.v) ? "True" : "False";
        case 2: return std::to_string(std::get<long long>(x.v));
        case 3: {
            char buf[64];
            auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), std::get<double>(x.v));
            std::string s(buf, p);
            if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
                s += ".0";
            }
            return s;
        }
        case 4: {
            std::string out = "'";
            for (char c : std::get<std::string>(x.v)) {
                if (c == '\'') out += "\\'";
                else if (c == '\\') out += "\\\\";
                else if (c == '\n') out += "\\n";
                else if (c == '\t') out += "\\t";
                else if (c == '\r') out += "\\r";
                else out.push_back(c);
            }
            return out + "'";
        }
        case 5: {
            std::string out = "[";
            const auto& list = *std::get<std::shared_ptr<List>>(x.v);
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (i) out += ", ";
                out += repr(list[i]);
            }
            return out + "]";
        }
        default: {
            std::string out = "{";
            const auto& dict = *std::get<std::shared_ptr<Dict>>(x.v);
            for (std::size_t i = 0; i < dict.size(); ++i) {
                if (i) out += ", ";
                out += repr(dict[i].first) + ": " + repr(dict[i].second);
            }
            return out + "}";
        }
    }
}

long long add_ll(long long a, long long b) {
    __int128 r = static_cast<__int128>(a) + b;
    if (r > std::numeric_limits<long long>::max() ||
        r < std::numeric_limits<long long>::min()) {
        throw RtErr{"overflow"};
    }
    return static_cast<long long>(r);
}
long long sub_ll(long long a, long long b) {
    __int128 r = static_cast<__int128>(a) - b;
    if (r > std::numeric_limits<long long>::max() ||
        r < std::numeric_limits<long long>::min()) {
        throw RtErr{"overflow"};
    }
    return static_cast<long long>(r);
}
long long mul_ll(long long a, long long b) {
    __int128 r = static_cast<__int128>(a) * b;
    if (r > std::numeric_limits<long long>::max() ||
        r < std::numeric_limits<long long>::min()) {
        throw RtErr{"overflow"};
    }
    return static_cast<long long>(r);
}

// Tokenizing recursive-descent parser that emits closures; nothing is
// evaluated until the whole program parses.
class Builder {
public:
    explicit Builder(std::string src) : src_(std::move(src)) { next(); }

    std::vector<std::pair<std::string, Thunk>> program() {
        std::vector<std::pair<std::string, Thunk>> statements;  // target ("" = bare)
        while (tok_ != T::eof) {
            if (tok_ == T::nl) {
                next();
                continue;
            }
            std::string target;
            if (tok_ == T::name && peek_is_assign()) {
                target = text_;
                next();
                next();  // '='
            }
            Thunk body = expr();
            statements.emplace_back(target, std::move(body));
            if (tok_ != T::nl && tok_ != T::eof) throw PErr{"trailing tokens"};
        }
        return statements;
    }

private:
    enum class T {
        eof, nl, num_i, num_d, str, name,
        kw_true, kw_false, kw_none, kw_and, kw_or, kw_not, kw_if, kw_else,
        kw_for, kw_in,
        assign, plus, minus, star, slash, dslash, percent,
        lt, le, gt, ge, eq2, ne, lpar, rpar, lbr, rbr, lcur, rcur,
        comma, colon, dot, other,
    };

    std::string src_;
    std::size_t i_ = 0;
    int depth_ = 0;
    T tok_ = T::eof;
    std::string text_;
    long long num_i_ = 0;
    double num_d_ = 0;

    bool peek_is_assign() {
        // single '=' directly after the current name token
        std::size_t save = i_;
        int save_depth = depth_;
        T st = tok_;
        std::string stx = text_;
        bool yes;
        try {
            next();
            yes = tok_ == T::assign;
        } catch (...) {
            yes = false;
        }
        i_ = save;
        depth_ = save_depth;
        tok_ = st;
        text_ = stx;
        return yes;
    }

    void next() {
        for (;;) {
            while (i_ < src_.size() &&
                   (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\r')) {
                ++i_;
            }
            if (i_ < src_.size() && src_[i_] == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
            }
            if (i_ < src_.size() && src_[i_] == '\\' && i_ + 1 < src_.size() &&
                src_[i_ + 1] == '\n') {
                i_ += 2;
                continue;
            }
            if (i_ < src_.size() && src_[i_] == '\n' && depth_ > 0) {
                ++i_;
                continue;
            }
            break;
        }
        if (i_ >= src_.size()) {
            tok_ = T::eof;
            return;
        }
        char c = src_[i_];
        if (c == '\n') {
            ++i_;
            tok_ = T::nl;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = i_;
            while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_])))
                ++i_;
            bool real = false;
            if (i_ < src_.size() && src_[i_] == '.') {
                real = true;
                ++i_;
                while (i_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[i_])))
                    ++i_;
            }
            if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
                real = true;
                ++i_;
                if (i_ < src_.size() && (src_[i_] == '+' || src_[i_] == '-')) ++i_;
                while (i_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[i_])))
                    ++i_;
            }
            std::string lex = src_.substr(start, i_ - start);
            if (real) {
                tok_ = T::num_d;
                num_d_ = std::strtod(lex.c_str(), nullptr);
            } else {
                tok_ = T::num_i;
                auto [p, ec] = std::from_chars(lex.data(), lex.data() + lex.size(), num_i_);
                if (ec != std::errc{}) throw PErr{"int literal out of range"};
            }
            return;
        }
        if (c == '"' || c == '\'') {
            char q = c;
            ++i_;
            std::string out;
            while (i_ < src_.size() && src_[i_] != q) {
                if (src_[i_] == '\n') throw PErr{"unterminated string"};
                if (src_[i_] == '\\' && i_ + 1 < src_.size()) {
                    char e = src_[i_ + 1];
                    if (e == 'n') out.push_back('\n');
                    else if (e == 't') out.push_back('\t');
                    else if (e == 'r') out.push_back('\r');
                    else out.push_back(e);
                    i_ += 2;
                    continue;
                }
                out.push_back(src_[i_++]);
            }
            if (i_ >= src_.size()) throw PErr{"unterminated string"};
            ++i_;
            tok_ = T::str;
            text_ = std::move(out);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i_;
            while (i_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[i_])) ||
                    src_[i_] == '_'))
                ++i_;
            std::string w = src_.substr(start, i_ - start);
            static const char* kForbidden[] = {
                "import", "from", "while", "def", "class", "lambda", "return",
                "yield", "with", "try", "except", "finally", "raise", "assert",
                "del", "global", "nonlocal", "pass", "break", "continue", "is"};
            for (const char* f : kForbidden) {
                if (w == f) throw UErr{w};
            }
            if (i_ < src_.size() && (src_[i_] == '"' || src_[i_] == '\'') && w.size() <= 2) {
                throw UErr{"string prefix"};
            }
            if (w == "True") tok_ = T::kw_true;
            else if (w == "False") tok_ = T::kw_false;
            else if (w == "None") tok_ = T::kw_none;
            else if (w == "and") tok_ = T::kw_and;
            else if (w == "or") tok_ = T::kw_or;
            else if (w == "not") tok_ = T::kw_not;
            else if (w == "if") tok_ = T::kw_if;
            else if (w == "else") tok_ = T::kw_else;
            else if (w == "for") tok_ = T::kw_for;
            else if (w == "in") tok_ = T::kw_in;
            else {
                tok_ = T::name;
                text_ = std::move(w);
            }
            return;
        }
        char n = i_ + 1 < src_.size() ? src_[i_ + 1] : '\0';
        auto two = [&](T t) {
            tok_ = t;
            i_ += 2;
        };
        auto one = [&](T t) {
            tok_ = t;
            ++i_;
        };
        switch (c) {
            case '=': n == '=' ? two(T::eq2) : one(T::assign); return;
            case '!':
                if (n == '=') { two(T::ne); return; }
                throw PErr{"unexpected '!'"};
            case '<': n == '=' ? two(T::le) : one(T::lt); return;
            case '>': n == '=' ? two(T::ge) : one(T::gt); return;
            case '+':
                if (n == '=') throw UErr{"augmented assignment"};
                one(T::plus);
                return;
            case '-':
                if (n == '=') throw UErr{"augmented assignment"};
                one(T::minus);
                return;
            case '*':
                if (n == '*') throw UErr{"operator '**'"};
                if (n == '=') throw UErr{"augmented assignment"};
                one(T::star);
                return;
            case '/':
                if (n == '/') {
                    if (i_ + 2 < src_.size() && src_[i_ + 2] == '=') {
                        throw UErr{"augmented assignment"};
                    }
                    two(T::dslash);
                    return;
                }
                if (n == '=') throw UErr{"augmented assignment"};
                one(T::slash);
                return;
            case '%':
                if (n == '=') throw UErr{"augmented assignment"};
                one(T::percent);
                return;
            case '(': ++depth_; one(T::lpar); return;
            case ')': if (depth_) --depth_; one(T::rpar); return;
            case '[': ++depth_; one(T::lbr); return;
            case ']': if (depth_) --depth_; one(T::rbr); return;
            case '{': ++depth_; one(T::lcur); return;
            case '}': if (depth_) --depth_; one(T::rcur); return;
            case ',': one(T::comma); return;
            case ':': one(T::colon); return;
            case '.': one(T::dot); return;
            case ';': throw UErr{"semicolon statement separator"};
            default: throw PErr{std::string("unexpected character '") + c + "'"};
        }
    }

    void expect(T t, const char* what) {
        if (tok_ != t) throw PErr{std::string("expected ") + what};
        next();
    }

    Thunk expr() { return ternary(); }

    Thunk ternary() {
        Thunk value = disj();
        if (tok_ != T::kw_if) return value;
        next();
        Thunk cond = disj();
        expect(T::kw_else, "else");
        Thunk other = ternary();
        return [value, cond, other](Env& env) {
            return truthy(cond(env)) ? value(env) : other(env);
        };
    }

    Thunk disj() {
        Thunk lhs = conj();
        while (tok_ == T::kw_or) {
            next();
            Thunk rhs = conj();
            Thunk prev = lhs;
            lhs = [prev, rhs](Env& env) {
                RV a = prev(env);
                return truthy(a) ? a : rhs(env);
            };
        }
        return lhs;
    }

    Thunk conj() {
        Thunk lhs = negation();
        while (tok_ == T::kw_and) {
            next();
            Thunk rhs = negation();
            Thunk prev = lhs;
            lhs = [prev, rhs](Env& env) {
                RV a = prev(env);
                return truthy(a) ? rhs(env) : a;
            };
        }
        return lhs;
    }

    Thunk negation() {
        if (tok_ == T::kw_not) {
            next();
            Thunk inner = negation();
            return [inner](Env& env) { return RV{!truthy(inner(env))}; };
        }
        return relation();
    }

    Thunk relation() {
        Thunk first = sum();
        if (tok_ == T::kw_in) throw UErr{"membership test"};
        std::vector<int> ops;
        std::vector<Thunk> rest;
        for (;;) {
            int op;
            if (tok_ == T::lt) op = 0;
            else if (tok_ == T::le) op = 1;
            else if (tok_ == T::gt) op = 2;
            else if (tok_ == T::ge) op = 3;
            else if (tok_ == T::eq2) op = 4;
            else if (tok_ == T::ne) op = 5;
            else break;
            next();
            ops.push_back(op);
            rest.push_back(sum());
        }
        if (ops.empty()) return first;
        return [first, ops, rest](Env& env) {
            RV prev = first(env);
            for (std::size_t i = 0; i < ops.size(); ++i) {
                RV cur = rest[i](env);
                bool ok;
                switch (ops[i]) {
                    case 0: ok = cmp(prev, cur) < 0; break;
                    case 1: ok = cmp(prev, cur) <= 0; break;
                    case 2: ok = cmp(prev, cur) > 0; break;
                    case 3: ok = cmp(prev, cur) >= 0; break;
                    case 4: ok = eq(prev, cur); break;
                    default: ok = !eq(prev, cur); break;
                }
                if (!ok) return RV{false};
                prev = cur;
            }
            return RV{true};
        };
    }

    static RV arith(int op, const RV& a, const RV& b) {
        switch (op) {
            case 0:  // +
                if (numish(a) && numish(b)) {
                    if (intish(a) && intish(b)) return RV{add_ll(ival(a), ival(b))};
                    return RV{dval(a) + dval(b)};
                }
                if (a.v.index() == 4 && b.v.index() == 4) {
                    return RV{std::get<std::string>(a.v) + std::get<std::string>(b.v)};
                }
                if (a.v.index() == 5 && b.v.index() == 5) {
                    auto out = std::make_shared<List>(*std::get<std::shared_ptr<List>>(a.v));
                    const auto& rhs = *std::get<std::shared_ptr<List>>(b.v);
                    out->insert(out->end(), rhs.begin(), rhs.end());
                    return RV{out};
                }
                throw RtErr{"bad '+' operands"};
            case 1:  // -
                if (!numish(a) || !numish(b)) throw RtErr{"bad '-' operands"};
                if (intish(a) && intish(b)) return RV{sub_ll(ival(a), ival(b))};
                return RV{dval(a) - dval(b)};
            case 2: {  // *
                if (numish(a) && numish(b)) {
                    if (intish(a) && intish(b)) return RV{mul_ll(ival(a), ival(b))};
                    return RV{dval(a) * dval(b)};
                }
                const RV* seq = nullptr;
                long long count = 0;
                if ((a.v.index() == 5 || a.v.index() == 4) && intish(b)) {
                    seq = &a;
                    count = ival(b);
                } else if ((b.v.index() == 5 || b.v.index() == 4) && intish(a)) {
                    seq = &b;
                    count = ival(a);
                } else {
                    throw RtErr{"bad '*' operands"};
                }
                if (count < 0) count = 0;
                if (seq->v.index() == 4) {
                    std::string out;
                    for (long long i = 0; i < count; ++i) {
                        out += std::get<std::string>(seq->v);
                    }
                    return RV{out};
                }
                auto out = std::make_shared<List>();
                const auto& unit = *std::get<std::shared_ptr<List>>(seq->v);
                for (long long i = 0; i < count; ++i) {
                    out->insert(out->end(), unit.begin(), unit.end());
                }
                return RV{out};
            }
            case 3: {  // /
                if (!numish(a) || !numish(b)) throw RtErr{"bad '/' operands"};
                double y = dval(b);
                if (y == 0.0) throw RtErr{"division by zero"};
                return RV{dval(a) / y};
            }
            case 4:  // //
                if (!numish(a) || !numish(b)) throw RtErr{"bad '//' operands"};
                if (intish(a) && intish(b)) {
                    long long x = ival(a), y = ival(b);
                    if (y == 0) throw RtErr{"division by zero"};
                    if (x == std::numeric_limits<long long>::min() && y == -1) {
                        throw RtErr{"overflow"};
                    }
                    long long q = x / y;
                    if ((x % y != 0) && ((x < 0) != (y < 0))) --q;
                    return RV{q};
                }
                if (dval(b) == 0.0) throw RtErr{"division by zero"};
                return RV{std::floor(dval(a) / dval(b))};
            default:  // %
                if (!numish(a) || !numish(b)) throw RtErr{"bad '%' operands"};
                if (intish(a) && intish(b)) {
                    long long x = ival(a), y = ival(b);
                    if (y == 0) throw RtErr{"modulo by zero"};
                    if (x == std::numeric_limits<long long>::min() && y == -1) {
                        return RV{0LL};
                    }
                    long long r = x % y;
                    if (r != 0 && ((r < 0) != (y < 0))) r += y;
                    return RV{r};
                }
                if (dval(b) == 0.0) throw RtErr{"modulo by zero"};
                {
                    double r = std::fmod(dval(a), dval(b));
                    if (r != 0.0 && ((r < 0.0) != (dval(b) < 0.0))) r += dval(b);
                    return RV{r};
                }
        }
    }

    Thunk sum() {
        Thunk lhs = product();
        for (;;) {
            int op;
            if (tok_ == T::plus) op = 0;
            else if (tok_ == T::minus) op = 1;
            else break;
            next();
            Thunk rhs = product();
            Thunk prev = lhs;
            lhs = [prev, rhs, op](Env& env) { return arith(op, prev(env), rhs(env)); };
        }
        return lhs;
    }

    Thunk product() {
        Thunk lhs = unary();
        for (;;) {
            int op;
            if (tok_ == T::star) op = 2;
            else if (tok_ == T::slash) op = 3;
            else if (tok_ == T::dslash) op = 4;
            else if (tok_ == T::percent) op = 5;
            else break;
            next();
            Thunk rhs = unary();
            Thunk prev = lhs;
            lhs = [prev, rhs, op](Env& env) { return arith(op, prev(env), rhs(env)); };
        }
        return lhs;
    }

    Thunk unary() {
        if (tok_ == T::minus) {
            next();
            Thunk inner = unary();
            return [inner](Env& env) {
                RV x = inner(env);
                if (x.v.index() == 3) return RV{-std::get<double>(x.v)};
                if (intish(x)) {
                    long long v = ival(x);
                    if (v == std::numeric_limits<long long>::min()) throw RtErr{"overflow"};
                    return RV{-v};
                }
                throw RtErr{"bad unary '-' operand"};
            };
        }
        if (tok_ == T::plus) throw UErr{"unary '+'"};
        return postfix();
    }

    Thunk postfix() {
        bool callable_name = tok_ == T::name;
        std::string name = text_;
        Thunk base = atom();
        for (;;) {
            if (tok_ == T::dot) throw UErr{"attribute access"};
            if (tok_ == T::lbr) {
                next();
                if (tok_ == T::colon) throw UErr{"slice"};
                Thunk index = expr();
                if (tok_ == T::colon) throw UErr{"slice"};
                expect(T::rbr, "]");
                Thunk prev = base;
                base = [prev, index](Env& env) { return subscript(prev(env), index(env)); };
                callable_name = false;
                continue;
            }
            if (tok_ == T::lpar) {
                if (!callable_name) throw UErr{"call of a non-builtin expression"};
                static const char* kBuiltins[] = {"max", "min", "sum", "len", "sorted",
                                                  "abs", "int", "float", "str", "round"};
                bool ok = false;
                for (const char* b : kBuiltins) {
                    if (name == b) ok = true;
                }
                if (!ok) throw UErr{"call to '" + name + "'"};
                next();
                std::vector<Thunk> args;
                if (tok_ != T::rpar) {
                    for (;;) {
                        args.push_back(expr());
                        if (tok_ == T::comma) {
                            next();
                            if (tok_ == T::rpar) break;
                            continue;
                        }
                        break;
                    }
                }
                expect(T::rpar, ")");
                base = [name, args](Env& env) {
                    std::vector<RV> vals;
                    vals.reserve(args.size());
                    for (const Thunk& t : args) vals.push_back(t(env));
                    return builtin(name, vals);
                };
                callable_name = false;
                continue;
            }
            break;
        }
        return base;
    }

    static RV subscript(const RV& target, const RV& index) {
        if (target.v.index() == 5) {
            const auto& list = *std::get<std::shared_ptr<List>>(target.v);
            if (!intish(index)) throw RtErr{"list index must be int"};
            long long i = ival(index);
            if (i < 0) i += static_cast<long long>(list.size());
            if (i < 0 || i >= static_cast<long long>(list.size())) {
                throw RtErr{"index out of range"};
            }
            return list[static_cast<std::size_t>(i)];
        }
        if (target.v.index() == 4) {
            const auto& s = std::get<std::string>(target.v);
            if (!intish(index)) throw RtErr{"string index must be int"};
            long long i = ival(index);
            if (i < 0) i += static_cast<long long>(s.size());
            if (i < 0 || i >= static_cast<long long>(s.size())) {
                throw RtErr{"index out of range"};
            }
            return RV{std::string(1, s[static_cast<std::size_t>(i)])};
        }
        if (target.v.index() == 6) {
            for (const auto& [k, v] : *std::get<std::shared_ptr<Dict>>(target.v)) {
                if (eq(k, index)) return v;
            }
            throw RtErr{"key not found"};
        }
        throw RtErr{"not subscriptable"};
    }

    static RV builtin(const std::string& name, std::vector<RV>& args) {
        auto want_list = [&](const RV& x) -> const List& {
            if (x.v.index() != 5) throw RtErr{name + "() expects a list"};
            return *std::get<std::shared_ptr<List>>(x.v);
        };
        if (name == "max" || name == "min") {
            bool is_max = name == "max";
            std::vector<const RV*> pool;
            if (args.empty()) throw RtErr{"no arguments"};
            if (args.size() == 1) {
                const List& list = want_list(args[0]);
                if (list.empty()) throw RtErr{"empty sequence"};
                for (const RV& x : list) pool.push_back(&x);
            } else {
                for (const RV& x : args) pool.push_back(&x);
            }
            const RV* best = pool[0];
            for (std::size_t i = 1; i < pool.size(); ++i) {
                int c = cmp(*pool[i], *best);
                if (is_max ? c > 0 : c < 0) best = pool[i];
            }
            return *best;
        }
        if (name == "sum") {
            if (args.size() != 1) throw RtErr{"sum() arity"};
            const List& list = want_list(args[0]);
            bool real = false;
            for (const RV& x : list) {
                if (x.v.index() == 3) real = true;
                else if (!intish(x)) throw RtErr{"sum() of non-number"};
            }
            if (real) {
                double total = 0;
                for (const RV& x : list) total += dval(x);
                return RV{total};
            }
            long long total = 0;
            for (const RV& x : list) total = add_ll(total, ival(x));
            return RV{total};
        }
        if (name == "len") {
            if (args.size() != 1) throw RtErr{"len() arity"};
            const RV& x = args[0];
            if (x.v.index() == 5) {
                return RV{static_cast<long long>(
                    std::get<std::shared_ptr<List>>(x.v)->size())};
            }
            if (x.v.index() == 6) {
                return RV{static_cast<long long>(
                    std::get<std::shared_ptr<Dict>>(x.v)->size())};
            }
            if (x.v.index() == 4) {
                return RV{static_cast<long long>(std::get<std::string>(x.v).size())};
            }
            throw RtErr{"len() of unsized"};
        }
        if (name == "sorted") {
            if (args.size() != 1) throw RtErr{"sorted() arity"};
            auto out = std::make_shared<List>(want_list(args[0]));
            std::stable_sort(out->begin(), out->end(),
                             [](const RV& a, const RV& b) { return cmp(a, b) < 0; });
            return RV{out};
        }
        if (name == "abs") {
            if (args.size() != 1) throw RtErr{"abs() arity"};
            const RV& x = args[0];
            if (x.v.index() == 3) return RV{std::fabs(std::get<double>(x.v))};
            if (intish(x)) {
                long long v = ival(x);
                if (v == std::numeric_limits<long long>::min()) throw RtErr{"overflow"};
                return RV{v < 0 ? -v : v};
            }
            throw RtErr{"abs() of non-number"};
        }
        if (name == "int") {
            if (args.size() != 1) throw RtErr{"int() arity"};
            const RV& x = args[0];
            if (intish(x)) return RV{ival(x)};
            if (x.v.index() == 3) {
                double t = std::trunc(std::get<double>(x.v));
                if (!std::isfinite(t) || t < -9.3e18 || t > 9.3e18) throw RtErr{"range"};
                return RV{static_cast<long long>(t)};
            }
            if (x.v.index() == 4) {
                std::string s = std::get<std::string>(x.v);
                std::size_t b = s.find_first_not_of(" \t");
                std::size_t e = s.find_last_not_of(" \t");
                if (b == std::string::npos) throw RtErr{"bad int literal"};
                s = s.substr(b, e - b + 1);
                long long out = 0;
                auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
                if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
                    throw RtErr{"bad int literal"};
                }
                return RV{out};
            }
            throw RtErr{"int() of bad type"};
        }
        if (name == "float") {
            if (args.size() != 1) throw RtErr{"float() arity"};
            const RV& x = args[0];
            if (numish(x)) return RV{dval(x)};
            if (x.v.index() == 4) {
                const std::string& s = std::get<std::string>(x.v);
                char* end = nullptr;
                double out = std::strtod(s.c_str(), &end);
                while (end && (*end == ' ' || *end == '\t')) ++end;
                if (end == s.c_str() || *end != '\0') throw RtErr{"bad float literal"};
                return RV{out};
            }
            throw RtErr{"float() of bad type"};
        }
        if (name == "str") {
            if (args.size() != 1) throw RtErr{"str() arity"};
            if (args[0].v.index() == 4) return args[0];
            return RV{repr(args[0])};
        }
        if (name == "round") {
            if (args.empty() || args.size() > 2) throw RtErr{"round() arity"};
            const RV& x = args[0];
            if (!numish(x)) throw RtErr{"round() of non-number"};
            if (args.size() == 1) {
                if (intish(x)) return RV{ival(x)};
                double r = std::nearbyint(std::get<double>(x.v));
                if (!std::isfinite(r) || r < -9.3e18 || r > 9.3e18) throw RtErr{"range"};
                return RV{static_cast<long long>(r)};
            }
            if (!intish(args[1])) throw RtErr{"round() ndigits"};
            double scale = std::pow(10.0, static_cast<double>(ival(args[1])));
            return RV{std::nearbyint(dval(x) * scale) / scale};
        }
        throw RtErr{"unknown builtin"};
    }

    Thunk atom() {
        switch (tok_) {
            case T::num_i: {
                long long v = num_i_;
                next();
                return [v](Env&) { return RV{v}; };
            }
            case T::num_d: {
                double v = num_d_;
                next();
                return [v](Env&) { return RV{v}; };
            }
            case T::str: {
                std::string v = text_;
                next();
                return [v](Env&) { return RV{v}; };
            }
            case T::kw_true:
                next();
                return [](Env&) { return RV{true}; };
            case T::kw_false:
                next();
                return [](Env&) { return RV{false}; };
            case T::kw_none:
                next();
                return [](Env&) { return RV{}; };
            case T::name: {
                std::string n = text_;
                next();
                return [n](Env& env) {
                    auto it = env.find(n);
                    if (it == env.end()) throw RtErr{"undefined name " + n};
                    return it->second;
                };
            }
            case T::lpar: {
                next();
                Thunk inner = expr();
                if (tok_ == T::comma) throw UErr{"tuple"};
                expect(T::rpar, ")");
                return inner;
            }
            case T::lbr: return list_atom();
            case T::lcur: return dict_atom();
            case T::kw_for: throw UErr{"for loop"};
            case T::kw_if: throw UErr{"if statement"};
            default: throw PErr{"expected expression"};
        }
    }

    Thunk list_atom() {
        next();  // [
        if (tok_ == T::rbr) {
            next();
            return [](Env&) { return RV{std::make_shared<List>()}; };
        }
        Thunk first = expr();
        if (tok_ == T::kw_for) {
            next();
            if (tok_ == T::lpar) throw UErr{"tuple unpacking in comprehension"};
            if (tok_ != T::name) throw PErr{"expected comprehension variable"};
            std::string var = text_;
            next();
            if (tok_ == T::comma) throw UErr{"tuple unpacking in comprehension"};
            expect(T::kw_in, "in");
            Thunk source = disj();
            Thunk filter;
            if (tok_ == T::kw_if) {
                next();
                filter = disj();
            }
            if (tok_ == T::kw_for) throw UErr{"nested comprehension"};
            expect(T::rbr, "]");
            return [first, var, source, filter](Env& env) {
                RV iter = source(env);
                if (iter.v.index() != 5) throw RtErr{"not iterable"};
                auto out = std::make_shared<List>();
                bool had = env.count(var) > 0;
                RV saved = had ? env[var] : RV{};
                for (const RV& item : *std::get<std::shared_ptr<List>>(iter.v)) {
                    env[var] = item;
                    if (filter && !truthy(filter(env))) continue;
                    out->push_back(first(env));
                }
                if (had) env[var] = saved;
                else env.erase(var);
                return RV{out};
            };
        }
        std::vector<Thunk> items;
        items.push_back(first);
        while (tok_ == T::comma) {
            next();
            if (tok_ == T::rbr) break;
            items.push_back(expr());
        }
        expect(T::rbr, "]");
        return [items](Env& env) {
            auto out = std::make_shared<List>();
            out->reserve(items.size());
            for (const Thunk& t : items) out->push_back(t(env));
            return RV{out};
        };
    }

    Thunk dict_atom() {
        next();  // {
        std::vector<std::pair<Thunk, Thunk>> entries;
        if (tok_ != T::rcur) {
            for (;;) {
                Thunk key = expr();
                if (tok_ != T::colon) throw UErr{"set display"};
                next();
                Thunk value = expr();
                if (tok_ == T::kw_for) throw UErr{"dict comprehension"};
                entries.emplace_back(std::move(key), std::move(value));
                if (tok_ == T::comma) {
                    next();
                    if (tok_ == T::rcur) break;
                    continue;
                }
                break;
            }
        }
        expect(T::rcur, "}");
        return [entries](Env& env) {
            auto out = std::make_shared<Dict>();
            for (const auto& [kt, vt] : entries) {
                RV k = kt(env);
                RV v = vt(env);
                bool replaced = false;
                for (auto& e : *out) {
                    if (eq(e.first, k)) {
                        e.second = v;
                        replaced = true;
                        break;
                    }
                }
                if (!replaced) out->emplace_back(std::move(k), std::move(v));
            }
            return RV{out};
        };
    }
};

}  // namespace

Result evaluate(const std::string& source, const nsar::FactSet& facts) {
    std::vector<std::pair<std::string, Thunk>> statements;
    try {
        Builder builder(source);
        statements = builder.program();
    } catch (const UErr& u) {
        return {"unsupported_construct", ""};
    } catch (const PErr&) {
        return {"parse_error", ""};
    }
    if (statements.empty()) return {"parse_error", ""};

    Env env;
    {
        auto triples = std::make_shared<List>();
        for (const nsar::Fact& f : facts.facts) {
            auto triple = std::make_shared<List>();
            triple->push_back(RV{f.entity});
            triple->push_back(RV{f.attribute});
            if (const auto* i = std::get_if<std::int64_t>(&f.value)) {
                triple->push_back(RV{static_cast<long long>(*i)});
            } else if (const auto* d = std::get_if<double>(&f.value)) {
                triple->push_back(RV{*d});
            } else {
                triple->push_back(RV{std::get<std::string>(f.value)});
            }
            triples->push_back(RV{triple});
        }
        env["facts"] = RV{triples};
    }

    try {
        bool has_bare = false;
        RV last_bare;
        for (const auto& [target, thunk] : statements) {
            RV v = thunk(env);
            if (target.empty()) {
                has_bare = true;
                last_bare = v;
            } else {
                env[target] = v;
            }
        }
        auto it = env.find("answer");
        if (it != env.end()) return {"ok", repr(it->second)};
        if (has_bare) return {"ok", repr(last_bare)};
        return {"runtime_error", ""};
    } catch (const RtErr&) {
        return {"runtime_error", ""};
    }
}

}  // namespace refeval
