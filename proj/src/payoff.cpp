#include "treexp/payoff.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace treexp::dsl {

// ---------------------------------------------------------------------------
// lexer

namespace {

enum class Tok {
    number, ident, plus, minus, star, slash, caret, lparen, rparen, comma,
    lt, le, gt, ge, eq, end
};

struct Token {
    Tok kind = Tok::end;
    std::size_t offset = 0;
    double number = 0.0;
    std::string text{};
};

struct Lexer {
    std::string_view src;
    std::size_t pos = 0;

    Token next() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
        const std::size_t at = pos;
        if (pos >= src.size()) return {Tok::end, at};
        const char c = src[pos];
        switch (c) {
            case '+': ++pos; return {Tok::plus, at};
            case '-': ++pos; return {Tok::minus, at};
            case '*': ++pos; return {Tok::star, at};
            case '/': ++pos; return {Tok::slash, at};
            case '^': ++pos; return {Tok::caret, at};
            case '(': ++pos; return {Tok::lparen, at};
            case ')': ++pos; return {Tok::rparen, at};
            case ',': ++pos; return {Tok::comma, at};
            case '<':
                ++pos;
                if (pos < src.size() && src[pos] == '=') { ++pos; return {Tok::le, at}; }
                return {Tok::lt, at};
            case '>':
                ++pos;
                if (pos < src.size() && src[pos] == '=') { ++pos; return {Tok::ge, at}; }
                return {Tok::gt, at};
            case '=':
                ++pos;
                if (pos < src.size() && src[pos] == '=') ++pos;  // '=' and '==' both compare
                return {Tok::eq, at};
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* begin = src.data() + pos;
            const char* end = src.data() + src.size();
            auto [ptr, ec] = std::from_chars(begin, end, value);
            if (ec != std::errc{} || ptr == begin)
                throw ParseError(ErrorKind::syntax, at, "malformed number", {"number"});
            pos += static_cast<std::size_t>(ptr - begin);
            Token t{Tok::number, at};
            t.number = value;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos;
            while (end < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[end])) || src[end] == '_'))
                ++end;
            Token t{Tok::ident, at};
            t.text = std::string(src.substr(pos, end - pos));
            pos = end;
            return t;
        }
        throw ParseError(ErrorKind::syntax, at, "unexpected character", {"token"});
    }
};

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

struct Parser {
    Lexer lexer;
    Token tok;

    explicit Parser(std::string_view src) : lexer{src} { tok = lexer.next(); }

    void advance() { tok = lexer.next(); }

    [[noreturn]] void fail(std::vector<std::string> expected) {
        throw ParseError(ErrorKind::syntax, tok.offset, "unexpected token",
                         std::move(expected));
    }

    void expect(Tok kind, const char* what) {
        if (tok.kind != kind) fail({what});
        advance();
    }

    ExprPtr parse_expr() { return parse_cmp(); }

    // operands of a binary node are parsed into locals before the node is
    // built: initializing the node inline would copy the left operand into a
    // partially constructed aggregate that a throwing right operand leaks
    // under gcc

    ExprPtr parse_cmp() {
        ExprPtr lhs = parse_addsub();
        while (true) {
            CmpOp op;
            switch (tok.kind) {
                case Tok::lt: op = CmpOp::lt; break;
                case Tok::le: op = CmpOp::le; break;
                case Tok::gt: op = CmpOp::gt; break;
                case Tok::ge: op = CmpOp::ge; break;
                case Tok::eq: op = CmpOp::eq; break;
                default: return lhs;
            }
            advance();
            ExprPtr rhs = parse_addsub();
            lhs = make({Cmp{op, std::move(lhs), std::move(rhs)}});
        }
    }

    ExprPtr parse_addsub() {
        ExprPtr lhs = parse_muldiv();
        while (tok.kind == Tok::plus || tok.kind == Tok::minus) {
            const BinOp op = tok.kind == Tok::plus ? BinOp::add : BinOp::sub;
            advance();
            ExprPtr rhs = parse_muldiv();
            lhs = make({Bin{op, std::move(lhs), std::move(rhs)}});
        }
        return lhs;
    }

    ExprPtr parse_muldiv() {
        ExprPtr lhs = parse_unary();
        while (tok.kind == Tok::star || tok.kind == Tok::slash) {
            const BinOp op = tok.kind == Tok::star ? BinOp::mul : BinOp::div;
            advance();
            ExprPtr rhs = parse_unary();
            lhs = make({Bin{op, std::move(lhs), std::move(rhs)}});
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (tok.kind == Tok::minus) {
            advance();
            ExprPtr operand = parse_unary();
            // fold a negated literal so that printed negative numbers reparse
            // to the identical node
            if (const auto* lit = std::get_if<Lit>(&operand->node))
                return make({Lit{-lit->value}});
            return make({Call{Fn::neg, {operand}}});
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (tok.kind == Tok::caret) {
            advance();
            ExprPtr exponent = parse_unary();  // right-assoc, allows a^-b
            return make({Bin{BinOp::pow, std::move(base), std::move(exponent)}});
        }
        return base;
    }

    int parse_step_index() {
        expect(Tok::lparen, "(");
        if (tok.kind != Tok::number || tok.number != std::floor(tok.number) || tok.number < 0)
            fail({"nonnegative integer"});
        const int index = static_cast<int>(tok.number);
        advance();
        expect(Tok::rparen, ")");
        return index;
    }

    std::vector<ExprPtr> parse_args() {
        expect(Tok::lparen, "(");
        std::vector<ExprPtr> args;
        if (tok.kind != Tok::rparen) {
            args.push_back(parse_expr());
            while (tok.kind == Tok::comma) {
                advance();
                args.push_back(parse_expr());
            }
        }
        expect(Tok::rparen, ")");
        return args;
    }

    ExprPtr parse_atom() {
        if (tok.kind == Tok::number) {
            const double v = tok.number;
            advance();
            return make({Lit{v}});
        }
        if (tok.kind == Tok::lparen) {
            advance();
            ExprPtr inner = parse_expr();
            expect(Tok::rparen, ")");
            return inner;
        }
        if (tok.kind == Tok::ident) {
            const std::string name = tok.text;
            const std::size_t at = tok.offset;
            advance();
            if (name == "B") return make({Var{Feature::terminal_value}});
            if (name == "QV") return make({Var{Feature::terminal_qv}});
            if (name == "MAXB") return make({Var{Feature::running_max}});
            if (name == "inf") return make({Lit{std::numeric_limits<double>::infinity()}});
            if (name == "ninf") return make({Lit{-std::numeric_limits<double>::infinity()}});
            if (name == "B_at") return make({At{FeatureAt::value_at, parse_step_index()}});
            if (name == "QV_at") return make({At{FeatureAt::qv_at, parse_step_index()}});
            if (name == "AHAT_at") return make({At{FeatureAt::rate_at, parse_step_index()}});

            Fn fn;
            std::size_t arity;
            if (name == "max") { fn = Fn::max; arity = 2; }
            else if (name == "min") { fn = Fn::min; arity = 2; }
            else if (name == "abs") { fn = Fn::abs; arity = 1; }
            else if (name == "exp") { fn = Fn::exp; arity = 1; }
            else if (name == "ind") { fn = Fn::ind; arity = 1; }
            else if (name == "neg") { fn = Fn::neg; arity = 1; }
            else
                throw ParseError(ErrorKind::unknown_identifier, at,
                                 "unknown identifier '" + name + "'");
            auto args = parse_args();
            if (args.size() != arity)
                throw ParseError(ErrorKind::arity, at,
                                 name + " takes " + std::to_string(arity) + " argument(s), got " +
                                     std::to_string(args.size()));
            return make({Call{fn, std::move(args)}});
        }
        fail({"number", "identifier", "("});
    }
};

}  // namespace

ExprPtr parse(std::string_view source) {
    Parser p(source);
    ExprPtr e = p.parse_expr();
    if (p.tok.kind != Tok::end) p.fail({"end of input"});
    return e;
}

// ---------------------------------------------------------------------------
// printer

namespace {

// precedence levels: cmp 1, addsub 2, muldiv 3, unary minus 4, pow 5, atom 6
int precedence(const Expr& e) {
    struct V {
        // negative finite literals print with a leading minus sign and bind
        // like a unary minus; inf/ninf are plain identifiers
        int operator()(const Lit& l) const {
            return l.value < 0 && std::isfinite(l.value) ? 4 : 6;
        }
        int operator()(const Var&) const { return 6; }
        int operator()(const At&) const { return 6; }
        int operator()(const Cmp&) const { return 1; }
        int operator()(const Bin& b) const {
            switch (b.op) {
                case BinOp::add:
                case BinOp::sub: return 2;
                case BinOp::mul:
                case BinOp::div: return 3;
                case BinOp::pow: return 5;
            }
            return 6;
        }
        int operator()(const Call& c) const { return c.fn == Fn::neg ? 4 : 6; }
    };
    return std::visit(V{}, e.node);
}

std::string number_text(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "ninf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void print_into(const Expr& e, std::string& out);

void print_child(const ExprPtr& child, int min_prec, std::string& out) {
    if (precedence(*child) < min_prec) {
        out += '(';
        print_into(*child, out);
        out += ')';
    } else {
        print_into(*child, out);
    }
}

void print_into(const Expr& e, std::string& out) {
    struct V {
        std::string& out;
        void operator()(const Lit& l) const { out += number_text(l.value); }
        void operator()(const Var& v) const {
            switch (v.feature) {
                case Feature::terminal_value: out += "B"; break;
                case Feature::terminal_qv: out += "QV"; break;
                case Feature::running_max: out += "MAXB"; break;
            }
        }
        void operator()(const At& a) const {
            switch (a.feature) {
                case FeatureAt::value_at: out += "B_at("; break;
                case FeatureAt::qv_at: out += "QV_at("; break;
                case FeatureAt::rate_at: out += "AHAT_at("; break;
            }
            out += std::to_string(a.index);
            out += ')';
        }
        void operator()(const Cmp& c) const {
            print_child(c.lhs, 1, out);
            switch (c.op) {
                case CmpOp::lt: out += " < "; break;
                case CmpOp::le: out += " <= "; break;
                case CmpOp::gt: out += " > "; break;
                case CmpOp::ge: out += " >= "; break;
                case CmpOp::eq: out += " == "; break;
            }
            print_child(c.rhs, 2, out);  // right operand must not re-associate
        }
        void operator()(const Bin& b) const {
            const int prec = b.op == BinOp::pow ? 5 : (b.op == BinOp::mul || b.op == BinOp::div)
                                                          ? 3
                                                          : 2;
            if (b.op == BinOp::pow) {
                print_child(b.lhs, 6, out);  // left of ^ must be atomic
                out += " ^ ";
                print_child(b.rhs, 4, out);  // right-assoc; unary minus allowed bare
                return;
            }
            print_child(b.lhs, prec, out);
            switch (b.op) {
                case BinOp::add: out += " + "; break;
                case BinOp::sub: out += " - "; break;
                case BinOp::mul: out += " * "; break;
                case BinOp::div: out += " / "; break;
                case BinOp::pow: break;
            }
            print_child(b.rhs, prec + 1, out);
        }
        void operator()(const Call& c) const {
            if (c.fn == Fn::neg) {
                out += '-';
                print_child(c.args[0], 4, out);
                return;
            }
            switch (c.fn) {
                case Fn::max: out += "max("; break;
                case Fn::min: out += "min("; break;
                case Fn::abs: out += "abs("; break;
                case Fn::exp: out += "exp("; break;
                case Fn::ind: out += "ind("; break;
                case Fn::neg: break;
            }
            for (std::size_t i = 0; i < c.args.size(); ++i) {
                if (i > 0) out += ", ";
                print_into(*c.args[i], out);
            }
            out += ')';
        }
    };
    std::visit(V{out}, e.node);
}

}  // namespace

std::string print(const Expr& e) {
    std::string out;
    print_into(e, out);
    return out;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    struct V {
        const Expr& other;
        bool operator()(const Lit& l) const {
            const auto& o = std::get<Lit>(other.node);
            return l.value == o.value || (std::isnan(l.value) && std::isnan(o.value));
        }
        bool operator()(const Var& v) const { return v.feature == std::get<Var>(other.node).feature; }
        bool operator()(const At& a) const {
            const auto& o = std::get<At>(other.node);
            return a.feature == o.feature && a.index == o.index;
        }
        bool operator()(const Bin& b) const {
            const auto& o = std::get<Bin>(other.node);
            return b.op == o.op && equal(*b.lhs, *o.lhs) && equal(*b.rhs, *o.rhs);
        }
        bool operator()(const Cmp& c) const {
            const auto& o = std::get<Cmp>(other.node);
            return c.op == o.op && equal(*c.lhs, *o.lhs) && equal(*c.rhs, *o.rhs);
        }
        bool operator()(const Call& c) const {
            const auto& o = std::get<Call>(other.node);
            if (c.fn != o.fn || c.args.size() != o.args.size()) return false;
            for (std::size_t i = 0; i < c.args.size(); ++i)
                if (!equal(*c.args[i], *o.args[i])) return false;
            return true;
        }
    };
    return std::visit(V{b}, a.node);
}

// ---------------------------------------------------------------------------
// evaluation

void bind_check(const Expr& e, int num_steps) {
    struct V {
        int K;
        void operator()(const Lit&) const {}
        void operator()(const Var&) const {}
        void operator()(const At& a) const {
            if (a.index < 0 || a.index > K)
                throw BindError("step index " + std::to_string(a.index) +
                                " out of range 0.." + std::to_string(K));
        }
        void operator()(const Bin& b) const {
            bind_check(*b.lhs, K);
            bind_check(*b.rhs, K);
        }
        void operator()(const Cmp& c) const {
            bind_check(*c.lhs, K);
            bind_check(*c.rhs, K);
        }
        void operator()(const Call& c) const {
            for (const auto& a : c.args) bind_check(*a, K);
        }
    };
    std::visit(V{num_steps}, e.node);
}

namespace {

struct PathFeatures {
    std::vector<double> values;  // B_0..B_K
    RealizedQV rqv;
    double running_max;
};

PathFeatures features_of(const Lattice& lat, const PathId& path) {
    PathFeatures f{lat.values(path), realized_qv(lat, path), 0.0};
    f.running_max = f.values[0];
    for (double v : f.values) f.running_max = std::max(f.running_max, v);
    return f;
}

XReal eval_node(const Expr& e, const PathFeatures& f) {
    struct V {
        const PathFeatures& f;
        XReal operator()(const Lit& l) const { return XReal(l.value); }
        XReal operator()(const Var& v) const {
            switch (v.feature) {
                case Feature::terminal_value: return XReal(f.values.back());
                case Feature::terminal_qv: return XReal(f.rqv.qv.back());
                case Feature::running_max: return XReal(f.running_max);
            }
            return XReal(0.0);
        }
        XReal operator()(const At& a) const {
            const std::size_t k = static_cast<std::size_t>(a.index);
            switch (a.feature) {
                case FeatureAt::value_at: return XReal(f.values[k]);
                case FeatureAt::qv_at: return XReal(f.rqv.qv[k]);
                case FeatureAt::rate_at: return k == 0 ? XReal(0.0) : XReal(f.rqv.ahat[k - 1]);
            }
            return XReal(0.0);
        }
        XReal operator()(const Bin& b) const {
            const XReal l = eval_node(*b.lhs, f);
            const XReal r = eval_node(*b.rhs, f);
            switch (b.op) {
                case BinOp::add: return xadd(l, r);
                case BinOp::sub: return xsub(l, r);
                case BinOp::mul: return xmul(l, r);
                case BinOp::div: return xdiv(l, r);
                case BinOp::pow: return xpow(l, r);
            }
            return XReal(0.0);
        }
        XReal operator()(const Cmp& c) const {
            const XReal l = eval_node(*c.lhs, f);
            const XReal r = eval_node(*c.rhs, f);
            bool v = false;
            switch (c.op) {
                case CmpOp::lt: v = l < r; break;
                case CmpOp::le: v = l <= r; break;
                case CmpOp::gt: v = l > r; break;
                case CmpOp::ge: v = l >= r; break;
                case CmpOp::eq: v = l == r; break;
            }
            return XReal(v ? 1.0 : 0.0);
        }
        XReal operator()(const Call& c) const {
            const XReal a0 = eval_node(*c.args[0], f);
            switch (c.fn) {
                case Fn::max: return xmax(a0, eval_node(*c.args[1], f));
                case Fn::min: return xmin(a0, eval_node(*c.args[1], f));
                case Fn::abs: return xabs(a0);
                case Fn::exp: return xexp(a0);
                case Fn::ind: return a0;  // identity on {0,1} arguments
                case Fn::neg: return xneg(a0);
            }
            return XReal(0.0);
        }
    };
    return std::visit(V{f}, e.node);
}

}  // namespace

XReal evaluate(const Expr& e, const Lattice& lat, const PathId& path) {
    return eval_node(e, features_of(lat, path));
}

RandomVariable to_random_variable(const ExprPtr& e, const Lattice& lat) {
    bind_check(*e, lat.steps());
    return RandomVariable::from_function(lat,
                                         [&](const PathId& p) { return evaluate(*e, lat, p); });
}

}  // namespace treexp::dsl
