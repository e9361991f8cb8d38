#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "nsar/errors.hpp"
#include "nsar/safeexec.hpp"

#include "safeexec_ast.hpp"

namespace nsar::exec {

namespace {

using ast::Expr;
using ast::ExprPtr;

bool is_builtin_name(std::string_view name) {
    static constexpr std::array<std::string_view, 10> kBuiltins = {
        "max", "min", "sum", "len", "sorted", "abs", "int", "float", "str", "round"};
    for (auto b : kBuiltins) {
        if (b == name) return true;
    }
    return false;
}

// Keywords that immediately identify a construct outside the subset.
std::string_view forbidden_keyword_construct(std::string_view word) {
    if (word == "import" || word == "from") return "import";
    if (word == "while") return "while loop";
    if (word == "def") return "function definition";
    if (word == "class") return "class definition";
    if (word == "lambda") return "lambda";
    if (word == "return") return "return";
    if (word == "yield") return "yield";
    if (word == "with") return "with statement";
    if (word == "try" || word == "except" || word == "finally" || word == "raise") {
        return "exception handling";
    }
    if (word == "assert") return "assert";
    if (word == "del") return "del";
    if (word == "global" || word == "nonlocal") return "scope declaration";
    if (word == "pass") return "pass";
    if (word == "break" || word == "continue") return "loop control";
    if (word == "is") return "identity test";
    return {};
}

enum class Tok {
    end,
    newline,
    int_lit,
    real_lit,
    str_lit,
    name,
    kw_true,
    kw_false,
    kw_none,
    kw_and,
    kw_or,
    kw_not,
    kw_if,
    kw_else,
    kw_for,
    kw_in,
    assign,     // =
    augassign,  // += -= *= /= //= %=
    plus,
    minus,
    star,
    slash,
    dslash,
    percent,
    dstar,
    lt,
    le,
    gt,
    ge,
    eq,
    ne,
    lparen,
    rparen,
    lbracket,
    rbracket,
    lbrace,
    rbrace,
    comma,
    colon,
    dot,
    semicolon,
};

struct Token {
    Tok kind = Tok::end;
    std::size_t line = 1;
    std::size_t col = 1;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        int depth = 0;  // () [] {} nesting: newlines inside brackets vanish
        for (;;) {
            skip_trivia(depth > 0);
            if (pos_ >= src_.size()) {
                emit_newline(out);
                out.push_back(make(Tok::end));
                return out;
            }
            char c = src_[pos_];
            if (c == '\n') {
                ++pos_;
                ++line_;
                line_start_ = pos_;
                if (depth == 0) emit_newline(out);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && pos_ + 1 < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                out.push_back(number());
                continue;
            }
            if (c == '"' || c == '\'') {
                out.push_back(string_lit(c));
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                out.push_back(word());
                continue;
            }
            Token t = punct();
            switch (t.kind) {
                case Tok::lparen: case Tok::lbracket: case Tok::lbrace: ++depth; break;
                case Tok::rparen: case Tok::rbracket: case Tok::rbrace:
                    if (depth > 0) --depth;
                    break;
                default: break;
            }
            out.push_back(std::move(t));
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t line_start_ = 0;

    std::size_t col() const { return pos_ - line_start_ + 1; }

    Token make(Tok kind) const {
        Token t;
        t.kind = kind;
        t.line = line_;
        t.col = col();
        return t;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, line_, col());
    }

    void emit_newline(std::vector<Token>& out) {
        if (!out.empty() && out.back().kind != Tok::newline) {
            out.push_back(make(Tok::newline));
        }
    }

    void skip_trivia(bool swallow_newlines) {
        for (;;) {
            while (pos_ < src_.size() &&
                   (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\r')) {
                ++pos_;
            }
            if (pos_ < src_.size() && src_[pos_] == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
                continue;
            }
            if (swallow_newlines && pos_ < src_.size() && src_[pos_] == '\n') {
                ++pos_;
                ++line_;
                line_start_ = pos_;
                continue;
            }
            if (pos_ < src_.size() && src_[pos_] == '\\' && pos_ + 1 < src_.size() &&
                src_[pos_ + 1] == '\n') {  // explicit line continuation
                pos_ += 2;
                ++line_;
                line_start_ = pos_;
                continue;
            }
            return;
        }
    }

    Token number() {
        Token t = make(Tok::int_lit);
        std::size_t begin = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
        bool real = false;
        if (pos_ < src_.size() && src_[pos_] == '.' &&
            !(pos_ + 1 < src_.size() && src_[pos_ + 1] == '.')) {
            real = true;
            ++pos_;
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                real = true;
                while (pos_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    ++pos_;
                }
            } else {
                pos_ = mark;
            }
        }
        std::string_view lexeme = src_.substr(begin, pos_ - begin);
        if (real) {
            t.kind = Tok::real_lit;
            t.real_value = std::strtod(std::string(lexeme).c_str(), nullptr);
        } else {
            auto [p, ec] =
                std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), t.int_value);
            if (ec != std::errc{}) {
                fail("integer literal out of range: " + std::string(lexeme));
            }
        }
        return t;
    }

    Token string_lit(char quote) {
        Token t = make(Tok::str_lit);
        ++pos_;
        std::string out;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == quote) {
                ++pos_;
                t.text = std::move(out);
                return t;
            }
            if (c == '\n') fail("unterminated string literal");
            if (c == '\\') {
                ++pos_;
                if (pos_ >= src_.size()) fail("dangling escape");
                char esc = src_[pos_];
                switch (esc) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '0': out.push_back('\0'); break;
                    default: out.push_back(esc); break;
                }
                ++pos_;
                continue;
            }
            out.push_back(c);
            ++pos_;
        }
        fail("unterminated string literal");
    }

    Token word() {
        Token t = make(Tok::name);
        std::size_t begin = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        std::string_view w = src_.substr(begin, pos_ - begin);

        // f"..." / r'...' style prefixes.
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
            w.size() <= 2) {
            bool prefixy = true;
            for (char c : w) {
                char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (lc != 'f' && lc != 'r' && lc != 'b' && lc != 'u') prefixy = false;
            }
            if (prefixy) {
                throw UnsupportedConstructError("string prefix '" + std::string(w) + "'",
                                                t.line, t.col);
            }
        }

        if (auto construct = forbidden_keyword_construct(w); !construct.empty()) {
            throw UnsupportedConstructError(std::string(construct), t.line, t.col);
        }
        if (w == "True") t.kind = Tok::kw_true;
        else if (w == "False") t.kind = Tok::kw_false;
        else if (w == "None") t.kind = Tok::kw_none;
        else if (w == "and") t.kind = Tok::kw_and;
        else if (w == "or") t.kind = Tok::kw_or;
        else if (w == "not") t.kind = Tok::kw_not;
        else if (w == "if") t.kind = Tok::kw_if;
        else if (w == "else") t.kind = Tok::kw_else;
        else if (w == "for") t.kind = Tok::kw_for;
        else if (w == "in") t.kind = Tok::kw_in;
        else t.text = std::string(w);
        return t;
    }

    Token punct() {
        Token t = make(Tok::end);
        char c = src_[pos_];
        char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
        auto two = [&](Tok kind) {
            t.kind = kind;
            pos_ += 2;
            return t;
        };
        auto one = [&](Tok kind) {
            t.kind = kind;
            ++pos_;
            return t;
        };
        switch (c) {
            case '=': return n == '=' ? two(Tok::eq) : one(Tok::assign);
            case '!':
                if (n == '=') return two(Tok::ne);
                fail("unexpected '!'");
            case '<': return n == '=' ? two(Tok::le) : one(Tok::lt);
            case '>': return n == '=' ? two(Tok::ge) : one(Tok::gt);
            case '+': return n == '=' ? two(Tok::augassign) : one(Tok::plus);
            case '-': return n == '=' ? two(Tok::augassign) : one(Tok::minus);
            case '%': return n == '=' ? two(Tok::augassign) : one(Tok::percent);
            case '*':
                if (n == '=') return two(Tok::augassign);
                if (n == '*') return two(Tok::dstar);
                return one(Tok::star);
            case '/':
                if (n == '=') return two(Tok::augassign);
                if (n == '/') {
                    if (pos_ + 2 < src_.size() && src_[pos_ + 2] == '=') {
                        pos_ += 3;
                        t.kind = Tok::augassign;
                        return t;
                    }
                    return two(Tok::dslash);
                }
                return one(Tok::slash);
            case '(': return one(Tok::lparen);
            case ')': return one(Tok::rparen);
            case '[': return one(Tok::lbracket);
            case ']': return one(Tok::rbracket);
            case '{': return one(Tok::lbrace);
            case '}': return one(Tok::rbrace);
            case ',': return one(Tok::comma);
            case ':': return one(Tok::colon);
            case '.': return one(Tok::dot);
            case ';': return one(Tok::semicolon);
            default:
                fail(std::string("unexpected character '") + c + "'");
        }
    }
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    std::vector<ast::Statement> parse_statements() {
        std::vector<ast::Statement> out;
        for (;;) {
            while (at(Tok::newline)) advance();
            if (at(Tok::end)) break;
            out.push_back(statement());
            if (at(Tok::semicolon)) {
                throw UnsupportedConstructError("semicolon statement separator",
                                                peek().line, peek().col);
            }
            if (!at(Tok::newline) && !at(Tok::end)) {
                fail("expected end of statement");
            }
        }
        return out;
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }
    bool at(Tok kind) const { return peek().kind == kind; }
    const Token& advance() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message, peek().line, peek().col);
    }
    [[noreturn]] void unsupported(const std::string& construct) const {
        throw UnsupportedConstructError(construct, peek().line, peek().col);
    }

    void expect(Tok kind, const char* what) {
        if (!at(kind)) fail(std::string("expected ") + what);
        advance();
    }

    ExprPtr node(Expr::Kind kind) const {
        auto e = std::make_unique<Expr>();
        e->kind = kind;
        e->line = peek().line;
        e->col = peek().col;
        return e;
    }

    ast::Statement statement() {
        ast::Statement st;
        st.line = peek().line;
        if (at(Tok::kw_if)) unsupported("if statement");
        if (at(Tok::name) && peek(1).kind == Tok::assign) {
            st.target = peek().text;
            advance();
            advance();
            st.expr = expression();
            if (at(Tok::assign)) unsupported("chained assignment");
            return st;
        }
        if (at(Tok::name) && peek(1).kind == Tok::augassign) {
            unsupported("augmented assignment");
        }
        st.expr = expression();
        if (at(Tok::assign)) unsupported("assignment to a non-name target");
        if (at(Tok::comma)) unsupported("tuple");
        return st;
    }

    ExprPtr expression() { return conditional(); }

    ExprPtr conditional() {
        ExprPtr value = or_expr();
        if (!at(Tok::kw_if)) return value;
        auto e = node(Expr::Kind::conditional);
        advance();
        e->lhs = std::move(value);
        e->cond = or_expr();
        expect(Tok::kw_else, "'else' in conditional expression");
        e->else_e = conditional();
        return e;
    }

    ExprPtr or_expr() {
        ExprPtr first = and_expr();
        if (!at(Tok::kw_or)) return first;
        auto e = node(Expr::Kind::bool_or);
        e->items.push_back(std::move(first));
        while (at(Tok::kw_or)) {
            advance();
            e->items.push_back(and_expr());
        }
        return e;
    }

    ExprPtr and_expr() {
        ExprPtr first = not_expr();
        if (!at(Tok::kw_and)) return first;
        auto e = node(Expr::Kind::bool_and);
        e->items.push_back(std::move(first));
        while (at(Tok::kw_and)) {
            advance();
            e->items.push_back(not_expr());
        }
        return e;
    }

    ExprPtr not_expr() {
        if (at(Tok::kw_not)) {
            auto e = node(Expr::Kind::unary_not);
            advance();
            e->lhs = not_expr();
            return e;
        }
        return comparison();
    }

    static bool is_cmp(Tok kind) {
        return kind == Tok::lt || kind == Tok::le || kind == Tok::gt ||
               kind == Tok::ge || kind == Tok::eq || kind == Tok::ne;
    }

    ExprPtr comparison() {
        ExprPtr first = arith();
        if (at(Tok::kw_in)) unsupported("membership test");
        if (!is_cmp(peek().kind)) return first;
        auto e = node(Expr::Kind::compare);
        e->cmp_operands.push_back(std::move(first));
        while (is_cmp(peek().kind)) {
            switch (advance().kind) {
                case Tok::lt: e->cmp_ops.push_back(ast::CmpKind::lt); break;
                case Tok::le: e->cmp_ops.push_back(ast::CmpKind::le); break;
                case Tok::gt: e->cmp_ops.push_back(ast::CmpKind::gt); break;
                case Tok::ge: e->cmp_ops.push_back(ast::CmpKind::ge); break;
                case Tok::eq: e->cmp_ops.push_back(ast::CmpKind::eq); break;
                default: e->cmp_ops.push_back(ast::CmpKind::ne); break;
            }
            e->cmp_operands.push_back(arith());
        }
        return e;
    }

    ExprPtr arith() {
        ExprPtr lhs = term();
        while (at(Tok::plus) || at(Tok::minus)) {
            auto e = node(Expr::Kind::binop);
            e->bin_op = at(Tok::plus) ? ast::BinOpKind::add : ast::BinOpKind::sub;
            advance();
            e->lhs = std::move(lhs);
            e->rhs = term();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr term() {
        ExprPtr lhs = factor();
        for (;;) {
            ast::BinOpKind op;
            if (at(Tok::star)) op = ast::BinOpKind::mul;
            else if (at(Tok::slash)) op = ast::BinOpKind::div;
            else if (at(Tok::dslash)) op = ast::BinOpKind::floordiv;
            else if (at(Tok::percent)) op = ast::BinOpKind::mod;
            else if (at(Tok::dstar)) unsupported("operator '**'");
            else break;
            auto e = node(Expr::Kind::binop);
            e->bin_op = op;
            advance();
            e->lhs = std::move(lhs);
            e->rhs = factor();
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr factor() {
        if (at(Tok::minus)) {
            auto e = node(Expr::Kind::unary_neg);
            advance();
            e->lhs = factor();
            return e;
        }
        if (at(Tok::plus)) unsupported("unary '+'");
        return postfix();
    }

    ExprPtr postfix() {
        ExprPtr base = primary();
        for (;;) {
            if (at(Tok::dot)) unsupported("attribute access");
            if (at(Tok::lbracket)) {
                auto e = node(Expr::Kind::subscript);
                advance();
                e->lhs = std::move(base);
                if (at(Tok::colon)) unsupported("slice");
                e->rhs = expression();
                if (at(Tok::colon)) unsupported("slice");
                expect(Tok::rbracket, "']'");
                base = std::move(e);
                continue;
            }
            if (at(Tok::lparen)) {
                if (base->kind != Expr::Kind::name) {
                    unsupported("call of a non-builtin expression");
                }
                if (!is_builtin_name(base->text)) {
                    unsupported("call to '" + base->text + "'");
                }
                auto e = node(Expr::Kind::call);
                e->text = base->text;
                advance();
                if (!at(Tok::rparen)) {
                    for (;;) {
                        if (at(Tok::star) || at(Tok::dstar)) unsupported("starred argument");
                        if (at(Tok::name) && peek(1).kind == Tok::assign) {
                            unsupported("keyword argument");
                        }
                        e->items.push_back(expression());
                        if (at(Tok::comma)) {
                            advance();
                            if (at(Tok::rparen)) break;
                            continue;
                        }
                        break;
                    }
                }
                expect(Tok::rparen, "')'");
                base = std::move(e);
                continue;
            }
            break;
        }
        return base;
    }

    ExprPtr primary() {
        switch (peek().kind) {
            case Tok::int_lit: {
                auto e = node(Expr::Kind::int_lit);
                e->int_value = advance().int_value;
                return e;
            }
            case Tok::real_lit: {
                auto e = node(Expr::Kind::real_lit);
                e->real_value = advance().real_value;
                return e;
            }
            case Tok::str_lit: {
                auto e = node(Expr::Kind::str_lit);
                e->text = advance().text;
                return e;
            }
            case Tok::kw_true:
            case Tok::kw_false: {
                auto e = node(Expr::Kind::bool_lit);
                e->bool_value = advance().kind == Tok::kw_true;
                return e;
            }
            case Tok::kw_none: {
                advance();
                return node(Expr::Kind::none_lit);
            }
            case Tok::name: {
                auto e = node(Expr::Kind::name);
                e->text = advance().text;
                return e;
            }
            case Tok::lparen: {
                advance();
                ExprPtr inner = expression();
                if (at(Tok::comma)) unsupported("tuple");
                expect(Tok::rparen, "')'");
                return inner;
            }
            case Tok::lbracket: return list_or_comprehension();
            case Tok::lbrace: return dict_display();
            case Tok::kw_for: unsupported("for loop");
            default: fail("expected an expression");
        }
    }

    ExprPtr list_or_comprehension() {
        auto open = peek();
        advance();  // [
        if (at(Tok::rbracket)) {
            advance();
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::list_display;
            e->line = open.line;
            e->col = open.col;
            return e;
        }
        ExprPtr first = expression();
        if (at(Tok::kw_for)) {
            auto e = std::make_unique<Expr>();
            e->kind = Expr::Kind::list_comp;
            e->line = open.line;
            e->col = open.col;
            e->lhs = std::move(first);
            advance();
            if (at(Tok::lparen)) unsupported("tuple unpacking in comprehension");
            if (!at(Tok::name)) fail("expected a comprehension variable name");
            e->text = advance().text;
            if (at(Tok::comma)) unsupported("tuple unpacking in comprehension");
            expect(Tok::kw_in, "'in'");
            e->rhs = or_expr();
            if (at(Tok::kw_if)) {
                advance();
                e->cond = or_expr();
            }
            if (at(Tok::kw_for)) unsupported("nested comprehension");
            expect(Tok::rbracket, "']'");
            return e;
        }
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::list_display;
        e->line = open.line;
        e->col = open.col;
        e->items.push_back(std::move(first));
        while (at(Tok::comma)) {
            advance();
            if (at(Tok::rbracket)) break;
            e->items.push_back(expression());
        }
        expect(Tok::rbracket, "']'");
        return e;
    }

    ExprPtr dict_display() {
        auto open = peek();
        advance();  // {
        auto e = std::make_unique<Expr>();
        e->kind = Expr::Kind::dict_display;
        e->line = open.line;
        e->col = open.col;
        if (at(Tok::rbrace)) {
            advance();
            return e;
        }
        for (;;) {
            ExprPtr key = expression();
            if (!at(Tok::colon)) unsupported("set display");
            advance();
            ExprPtr value = expression();
            if (at(Tok::kw_for)) unsupported("dict comprehension");
            e->pairs.emplace_back(std::move(key), std::move(value));
            if (at(Tok::comma)) {
                advance();
                if (at(Tok::rbrace)) break;
                continue;
            }
            break;
        }
        expect(Tok::rbrace, "'}'");
        return e;
    }
};

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

std::string_view trim_ascii(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::size_t Program::statement_count() const {
    return impl_ ? impl_->statements.size() : 0;
}

Program parse_program(std::string_view source) {
    Lexer lexer(source);
    Parser parser(lexer.run());
    auto impl = std::make_shared<Program::Impl>();
    impl->statements = parser.parse_statements();
    Program program;
    program.impl_ = std::move(impl);
    program.source_ = std::string(source);
    return program;
}

std::string extract_code_block(std::string_view model_output) {
    auto lines = split_lines(model_output);

    // First fenced block wins.
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!trim_ascii(lines[i]).starts_with("```")) continue;
        std::string body;
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            if (trim_ascii(lines[j]).starts_with("```")) break;
            if (!body.empty()) body.push_back('\n');
            body.append(lines[j]);
        }
        return body;
    }

    // No fences: the longest suffix of lines that parses as statements.
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string candidate;
        bool has_content = false;
        for (std::size_t j = i; j < lines.size(); ++j) {
            if (j > i) candidate.push_back('\n');
            candidate.append(lines[j]);
            if (!trim_ascii(lines[j]).empty()) has_content = true;
        }
        if (!has_content) continue;
        try {
            Program p = parse_program(candidate);
            if (p.statement_count() > 0) return candidate;
        } catch (const ParseError&) {
            // keep shrinking the suffix
        }
    }
    return "";
}

}  // namespace nsar::exec
