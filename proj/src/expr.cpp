#include "lipreach/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "lipreach/errors.hpp"

namespace lipreach {

struct Expr::Node {
    enum class Kind { number, variable, neg, add, sub, mul, div, pow, call } kind = Kind::number;
    double value = 0;
    std::size_t index = 0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Node::Kind;

struct FunctionInfo {
    const char* name;
    std::size_t min_args;
    std::size_t max_args;
};

constexpr FunctionInfo kFunctions[] = {
    {"min", 2, 64}, {"max", 2, 64}, {"abs", 1, 1},  {"sqrt", 1, 1}, {"exp", 1, 1},   {"log", 1, 1},
    {"sin", 1, 1},  {"cos", 1, 1},  {"floor", 1, 1}, {"pow", 2, 2},  {"clamp", 3, 3},
};

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

    NodePtr parse() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression '" + s_ + "': " + what, 0, static_cast<int>(pos_) + 1);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static NodePtr make(Kind k, std::vector<NodePtr> args) {
        auto n = std::make_shared<Expr::Node>();
        n->kind = k;
        n->args = std::move(args);
        return n;
    }

    NodePtr expr() {
        NodePtr left = term();
        while (true) {
            if (eat('+')) left = make(Kind::add, {left, term()});
            else if (eat('-')) left = make(Kind::sub, {left, term()});
            else return left;
        }
    }
    NodePtr term() {
        NodePtr left = unary();
        while (true) {
            if (eat('*')) left = make(Kind::mul, {left, unary()});
            else if (eat('/')) left = make(Kind::div, {left, unary()});
            else return left;
        }
    }
    NodePtr unary() {
        if (eat('-')) return make(Kind::neg, {unary()});
        if (eat('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) return make(Kind::pow, {base, unary()});
        return base;
    }
    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!eat(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<Expr::Node>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string name = s_.substr(start, pos_ - start);
            if (eat('(')) return call(name, start);
            if (name == "pi") {
                auto n = std::make_shared<Expr::Node>();
                n->value = std::numbers::pi;
                return n;
            }
            auto it = std::find(vars_.begin(), vars_.end(), name);
            if (it == vars_.end()) {
                pos_ = start;
                fail("unknown variable '" + name + "'");
            }
            auto n = std::make_shared<Expr::Node>();
            n->kind = Kind::variable;
            n->index = static_cast<std::size_t>(it - vars_.begin());
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
    NodePtr call(const std::string& name, std::size_t start) {
        const FunctionInfo* info = nullptr;
        for (const auto& f : kFunctions)
            if (name == f.name) info = &f;
        if (!info) {
            pos_ = start;
            fail("unknown function '" + name + "'");
        }
        std::vector<NodePtr> args;
        if (!eat(')')) {
            do args.push_back(expr());
            while (eat(','));
            if (!eat(')')) fail("expected ')' or ','");
        }
        if (args.size() < info->min_args || args.size() > info->max_args) {
            pos_ = start;
            fail("wrong number of arguments to " + name);
        }
        auto n = std::make_shared<Expr::Node>();
        n->kind = Kind::call;
        n->name = name;
        n->args = std::move(args);
        return n;
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, std::span<const double> v) {
    auto arg = [&](std::size_t i) { return eval_node(*n.args[i], v); };
    switch (n.kind) {
        case Kind::number: return n.value;
        case Kind::variable: return v[n.index];
        case Kind::neg: return -arg(0);
        case Kind::add: return arg(0) + arg(1);
        case Kind::sub: return arg(0) - arg(1);
        case Kind::mul: return arg(0) * arg(1);
        case Kind::div: return arg(0) / arg(1);
        case Kind::pow: return std::pow(arg(0), arg(1));
        case Kind::call: break;
    }
    const std::string& f = n.name;
    if (f == "min" || f == "max") {
        double r = arg(0);
        for (std::size_t i = 1; i < n.args.size(); ++i) r = f == "min" ? std::min(r, arg(i)) : std::max(r, arg(i));
        return r;
    }
    if (f == "abs") return std::abs(arg(0));
    if (f == "sqrt") return std::sqrt(arg(0));
    if (f == "exp") return std::exp(arg(0));
    if (f == "log") return std::log(arg(0));
    if (f == "sin") return std::sin(arg(0));
    if (f == "cos") return std::cos(arg(0));
    if (f == "floor") return std::floor(arg(0));
    if (f == "pow") return std::pow(arg(0), arg(1));
    return std::clamp(arg(0), arg(1), std::max(arg(1), arg(2)));  // clamp
}

}  // namespace

Expr Expr::compile(const std::string& text, const std::vector<std::string>& variables) {
    Expr e;
    e.root_ = Parser(text, variables).parse();
    e.text_ = text;
    return e;
}

double Expr::eval(std::span<const double> values) const { return eval_node(*root_, values); }

}  // namespace lipreach
