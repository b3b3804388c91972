#include "core/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "core/error.hpp"

namespace srfe {

int op_arity(Op) { return 2; }

const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    default: return "pdiv";
  }
}

const char* op_infix_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    default: return "/";
  }
}

Op op_from_name(const std::string& name) {
  if (name == "add") return Op::Add;
  if (name == "sub") return Op::Sub;
  if (name == "mul") return Op::Mul;
  if (name == "pdiv" || name == "div") return Op::PDiv;
  fail(ErrorCode::ParseError, "unknown function name: " + name);
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<double>& EvalScratch::buffer(int slot, int n) {
  if (static_cast<size_t>(slot) >= buffers_.size()) buffers_.resize(static_cast<size_t>(slot) + 1);
  auto& b = buffers_[static_cast<size_t>(slot)];
  b.resize(static_cast<size_t>(n));
  return b;
}

Expr Expr::constant(double value) {
  require(std::isfinite(value), ErrorCode::NonFiniteInput, "constants must be finite");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Constant;
  node->value = value;
  return Expr(std::move(node));
}

Expr Expr::variable(int index) {
  require(index >= 0, ErrorCode::InvalidArgument, "variable index must be nonnegative");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Variable;
  node->var_index = index;
  return Expr(std::move(node));
}

Expr Expr::function(Op op, std::vector<Expr> children) {
  require(static_cast<int>(children.size()) == op_arity(op), ErrorCode::InvalidArgument,
          std::string("arity mismatch for ") + op_name(op));
  auto node = std::make_shared<Node>();
  node->kind = Kind::Function;
  node->op = op;
  int size = 1;
  int depth = 0;
  for (const Expr& c : children) {
    size += c.size();
    depth = std::max(depth, c.depth());
  }
  node->size = size;
  node->depth = depth + 1;
  node->children = std::move(children);
  return Expr(std::move(node));
}

double Expr::evaluate(std::span<const double> row) const {
  switch (node_->kind) {
    case Kind::Constant:
      return node_->value;
    case Kind::Variable:
      require(node_->var_index < static_cast<int>(row.size()), ErrorCode::VariableOutOfRange,
              "variable x" + std::to_string(node_->var_index) + " exceeds row width " +
                  std::to_string(row.size()));
      return row[static_cast<size_t>(node_->var_index)];
    default: {
      double a = node_->children[0].evaluate(row);
      double b = node_->children[1].evaluate(row);
      return apply_op(node_->op, a, b);
    }
  }
}

namespace {

void eval_node(const Expr& e, const Matrix& X, std::span<double> out, EvalScratch& scratch,
               int level) {
  const int n = X.rows;
  switch (e.kind()) {
    case Expr::Kind::Constant: {
      std::fill(out.begin(), out.end(), e.constant_value());
      return;
    }
    case Expr::Kind::Variable: {
      const int j = e.variable_index();
      require(j < X.cols, ErrorCode::VariableOutOfRange,
              "variable x" + std::to_string(j) + " exceeds column count " + std::to_string(X.cols));
      const double* base = X.data.data() + j;
      for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = base[static_cast<size_t>(i) * X.cols];
      return;
    }
    default: {
      auto children = e.children();
      auto& a = scratch.buffer(2 * level, n);
      auto& b = scratch.buffer(2 * level + 1, n);
      eval_node(children[0], X, a, scratch, level + 1);
      eval_node(children[1], X, b, scratch, level + 1);
      const Op op = e.op();
      for (int i = 0; i < n; ++i) {
        out[static_cast<size_t>(i)] =
            apply_op(op, a[static_cast<size_t>(i)], b[static_cast<size_t>(i)]);
      }
      return;
    }
  }
}

}  // namespace

void Expr::evaluate_batch(const Matrix& X, std::span<double> out, EvalScratch& scratch) const {
  require(static_cast<int>(out.size()) == X.rows, ErrorCode::LengthMismatch,
          "output span does not match row count");
  eval_node(*this, X, out, scratch, 0);
}

std::vector<double> Expr::evaluate_batch(const Matrix& X) const {
  EvalScratch scratch;
  std::vector<double> out(static_cast<size_t>(X.rows));
  evaluate_batch(X, out, scratch);
  return out;
}

std::string Expr::to_infix() const {
  switch (node_->kind) {
    case Kind::Constant: return format_double(node_->value);
    case Kind::Variable: return "x" + std::to_string(node_->var_index);
    default:
      return "(" + node_->children[0].to_infix() + " " + op_infix_symbol(node_->op) + " " +
             node_->children[1].to_infix() + ")";
  }
}

std::string Expr::to_prefix() const {
  switch (node_->kind) {
    case Kind::Constant: return format_double(node_->value);
    case Kind::Variable: return "x" + std::to_string(node_->var_index);
    default:
      return std::string("(") + op_name(node_->op) + " " + node_->children[0].to_prefix() + " " +
             node_->children[1].to_prefix() + ")";
  }
}

namespace {

struct PrefixParser {
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  std::string next_token() {
    skip_ws();
    require(pos < text.size(), ErrorCode::ParseError, "unexpected end of formula");
    if (text[pos] == '(' || text[pos] == ')') return std::string(1, text[pos++]);
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')') {
      ++pos;
    }
    return std::string(text.substr(start, pos - start));
  }

  Expr parse() {
    std::string tok = next_token();
    if (tok == "(") {
      Op op = op_from_name(next_token());
      std::vector<Expr> children;
      children.reserve(2);
      for (int i = 0; i < op_arity(op); ++i) children.push_back(parse());
      skip_ws();
      require(pos < text.size() && text[pos] == ')', ErrorCode::ParseError,
              "expected ')' in formula");
      ++pos;
      return Expr::function(op, std::move(children));
    }
    require(tok != ")", ErrorCode::ParseError, "unexpected ')'");
    if (tok.size() >= 2 && tok[0] == 'x' &&
        std::all_of(tok.begin() + 1, tok.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return Expr::variable(std::stoi(tok.substr(1)));
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    require(ec == std::errc{} && ptr == tok.data() + tok.size(), ErrorCode::ParseError,
            "bad token in formula: " + tok);
    return Expr::constant(value);
  }
};

}  // namespace

Expr Expr::parse_prefix(const std::string& text) {
  PrefixParser parser{text};
  Expr result = parser.parse();
  parser.skip_ws();
  require(parser.pos == text.size(), ErrorCode::ParseError, "trailing input after formula");
  return result;
}

namespace {

// Preorder index: 0 is the node itself, then its children's subtrees in order.
Expr subtree_preorder(const Expr& e, int index) {
  if (index == 0) return e;
  int offset = 1;
  for (const Expr& c : e.children()) {
    if (index < offset + c.size()) return subtree_preorder(c, index - offset);
    offset += c.size();
  }
  fail(ErrorCode::InvalidArgument, "subtree index out of range");
}

// Rebuilds only along the path to the replaced node; untouched branches are
// shared with the original tree.
Expr replace_preorder(const Expr& e, int index, const Expr& replacement) {
  if (index == 0) return replacement;
  int offset = 1;
  auto children = e.children();
  std::vector<Expr> rebuilt;
  rebuilt.reserve(children.size());
  for (const Expr& c : children) {
    if (index >= offset && index < offset + c.size()) {
      rebuilt.push_back(replace_preorder(c, index - offset, replacement));
    } else {
      rebuilt.push_back(c);
    }
    offset += c.size();
  }
  return Expr::function(e.op(), std::move(rebuilt));
}

}  // namespace

Expr Expr::subtree_at(int index) const {
  require(index >= 0 && index < size(), ErrorCode::InvalidArgument, "subtree index out of range");
  return subtree_preorder(*this, index);
}

Expr Expr::replace_at(int index, const Expr& replacement) const {
  require(index >= 0 && index < size(), ErrorCode::InvalidArgument, "subtree index out of range");
  return replace_preorder(*this, index, replacement);
}

bool Expr::identical_to(const Expr& other) const {
  if (node_ == other.node_) return true;
  if (node_->kind != other.node_->kind) return false;
  switch (node_->kind) {
    case Kind::Constant: return node_->value == other.node_->value;
    case Kind::Variable: return node_->var_index == other.node_->var_index;
    default: {
      if (node_->op != other.node_->op) return false;
      for (size_t i = 0; i < node_->children.size(); ++i) {
        if (!node_->children[i].identical_to(other.node_->children[i])) return false;
      }
      return true;
    }
  }
}

}  // namespace srfe
