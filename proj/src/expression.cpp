#include "aiprobe/expression.hpp"

#include "aiprobe/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace aiprobe {

struct Expression::Node {
    enum class Kind { literal, reference, add, subtract, multiply, divide, power, negate };
    Kind kind;
    double value = 0.0;     // literal
    std::string name;       // reference
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

    using Node = Expression::Node;
    using NodePtr = std::shared_ptr<const Node>;

    class ExprParser {
      public:
        explicit ExprParser(std::string_view text) : text_(text) {}

        NodePtr run() {
            NodePtr node = parse_sum();
            skip_ws();
            if (pos_ != text_.size())
                throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "' in expression '" +
                                 std::string(text_) + "'");
            return node;
        }

      private:
        void skip_ws() {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }

        bool consume(char c) {
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == c) {
                ++pos_;
                return true;
            }
            return false;
        }

        char peek() {
            skip_ws();
            return pos_ < text_.size() ? text_[pos_] : '\0';
        }

        NodePtr make(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
            auto node = std::make_shared<Node>();
            node->kind = kind;
            node->lhs = std::move(lhs);
            node->rhs = std::move(rhs);
            return node;
        }

        NodePtr parse_sum() {
            NodePtr node = parse_product();
            for (;;) {
                if (consume('+')) node = make(Node::Kind::add, node, parse_product());
                else if (consume('-')) node = make(Node::Kind::subtract, node, parse_product());
                else return node;
            }
        }

        NodePtr parse_product() {
            NodePtr node = parse_power();
            for (;;) {
                if (consume('*')) node = make(Node::Kind::multiply, node, parse_power());
                else if (consume('/')) node = make(Node::Kind::divide, node, parse_power());
                else return node;
            }
        }

        NodePtr parse_power() {
            NodePtr node = parse_unary();
            while (consume('^')) node = make(Node::Kind::power, node, parse_unary());
            return node;
        }

        NodePtr parse_unary() {
            if (consume('-')) {
                auto node = std::make_shared<Node>();
                node->kind = Node::Kind::negate;
                node->lhs = parse_unary();
                return node;
            }
            return parse_primary();
        }

        NodePtr parse_primary() {
            skip_ws();
            if (pos_ >= text_.size()) throw ParseError("expression '" + std::string(text_) + "' ends unexpectedly");
            char c = text_[pos_];
            if (c == '(') {
                ++pos_;
                NodePtr inner = parse_sum();
                if (!consume(')')) throw ParseError("missing ')' in expression '" + std::string(text_) + "'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_reference();
            throw ParseError("unexpected character '" + std::string(1, c) + "' in expression '" + std::string(text_) +
                             "'");
        }

        NodePtr parse_number() {
            const char* begin = text_.data() + pos_;
            const char* end = text_.data() + text_.size();
            double value = 0.0;
            auto res = std::from_chars(begin, end, value);
            if (res.ec != std::errc{})
                throw ParseError("bad numeric literal in expression '" + std::string(text_) + "'");
            pos_ = static_cast<std::size_t>(res.ptr - text_.data());
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::literal;
            node->value = value;
            return node;
        }

        NodePtr parse_reference() {
            std::string name;
            auto ident_char = [](char ch) {
                return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
            };
            while (pos_ < text_.size() && ident_char(text_[pos_])) name.push_back(text_[pos_++]);
            if (pos_ < text_.size() && text_[pos_] == '.') {
                name.push_back(text_[pos_++]);
                if (pos_ >= text_.size() || !ident_char(text_[pos_]))
                    throw ParseError("dangling '.' in reference '" + name + "'");
                while (pos_ < text_.size() && ident_char(text_[pos_])) name.push_back(text_[pos_++]);
            }
            auto node = std::make_shared<Node>();
            node->kind = Node::Kind::reference;
            node->name = std::move(name);
            return node;
        }

        std::string_view text_;
        std::size_t pos_ = 0;
    };

    double eval_node(const Node& node, const std::map<std::string, double>& bindings) {
        switch (node.kind) {
            case Node::Kind::literal: return node.value;
            case Node::Kind::reference: {
                auto it = bindings.find(node.name);
                if (it == bindings.end()) throw ConstraintError("unbound name '" + node.name + "' in expression");
                return it->second;
            }
            case Node::Kind::negate: return -eval_node(*node.lhs, bindings);
            case Node::Kind::add: return eval_node(*node.lhs, bindings) + eval_node(*node.rhs, bindings);
            case Node::Kind::subtract: return eval_node(*node.lhs, bindings) - eval_node(*node.rhs, bindings);
            case Node::Kind::multiply: return eval_node(*node.lhs, bindings) * eval_node(*node.rhs, bindings);
            case Node::Kind::divide: {
                double denom = eval_node(*node.rhs, bindings);
                if (denom == 0.0) throw ConstraintError("division by zero in expression");
                return eval_node(*node.lhs, bindings) / denom;
            }
            case Node::Kind::power: {
                double base = eval_node(*node.lhs, bindings);
                double exponent = eval_node(*node.rhs, bindings);
                if (exponent != std::floor(exponent))
                    throw ConstraintError("power exponent must be an integer, got " + format_double(exponent));
                return std::pow(base, exponent);
            }
        }
        throw ConstraintError("corrupt expression node");
    }

    void collect_references(const Node& node, std::set<std::string>& into) {
        if (node.kind == Node::Kind::reference) into.insert(node.name);
        if (node.lhs) collect_references(*node.lhs, into);
        if (node.rhs) collect_references(*node.rhs, into);
    }

} // namespace

Expression Expression::parse(std::string_view text) {
    Expression expr;
    expr.text_ = std::string(text);
    expr.root_ = ExprParser(text).run();
    std::set<std::string> refs;
    collect_references(*expr.root_, refs);
    expr.references_.assign(refs.begin(), refs.end());
    return expr;
}

double Expression::evaluate(const std::map<std::string, double>& bindings) const {
    if (!root_) throw ConstraintError("evaluating an empty expression");
    return eval_node(*root_, bindings);
}

} // namespace aiprobe
