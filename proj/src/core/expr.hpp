#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace srfe {

enum class Op : std::uint8_t { Add, Sub, Mul, PDiv };

int op_arity(Op op);
const char* op_name(Op op);          // prefix form: add, sub, mul, pdiv
const char* op_infix_symbol(Op op);  // +, -, *, /
Op op_from_name(const std::string& name);

// Division is protected: pdiv(a, b) = 1.0 whenever |b| < kProtectedDivEps.
constexpr double kProtectedDivEps = 1e-3;

// Every function result saturates to [-kEvalCap, kEvalCap], which keeps
// evaluation finite for any finite inputs (deep product chains would
// otherwise overflow to infinity).
constexpr double kEvalCap = 1e12;

inline double apply_op(Op op, double a, double b) {
  double r;
  switch (op) {
    case Op::Add: r = a + b; break;
    case Op::Sub: r = a - b; break;
    case Op::Mul: r = a * b; break;
    default: r = (b < kProtectedDivEps && b > -kProtectedDivEps) ? 1.0 : a / b; break;
  }
  if (r > kEvalCap) return kEvalCap;
  if (r < -kEvalCap) return -kEvalCap;
  return r;
}

// Scratch buffers for batch evaluation; reusing one of these across calls
// avoids re-allocating a column per tree node.
class EvalScratch {
public:
  std::vector<double>& buffer(int slot, int n);

private:
  std::vector<std::vector<double>> buffers_;
};

// Immutable expression tree. Copies share structure; a value is never
// modified after construction, so trees are safe to read concurrently.
class Expr {
public:
  enum class Kind : std::uint8_t { Constant, Variable, Function };

  static Expr constant(double value);
  static Expr variable(int index);
  static Expr function(Op op, std::vector<Expr> children);

  Kind kind() const { return node_->kind; }
  bool is_terminal() const { return node_->kind != Kind::Function; }

  double constant_value() const { return node_->value; }
  int variable_index() const { return node_->var_index; }
  Op op() const { return node_->op; }
  std::span<const Expr> children() const { return node_->children; }

  int size() const { return node_->size; }    // total node count
  int depth() const { return node_->depth; }  // leaf depth = 1

  // Evaluates one row. Throws VariableOutOfRange if a variable index is
  // not covered by the row.
  double evaluate(std::span<const double> row) const;

  // Column-wise evaluation over all rows of X; out must have X.rows slots.
  void evaluate_batch(const Matrix& X, std::span<double> out, EvalScratch& scratch) const;
  std::vector<double> evaluate_batch(const Matrix& X) const;

  std::string to_infix() const;   // "(x0 + (x1 * 2))"
  std::string to_prefix() const;  // "(add x0 (mul x1 2))"
  static Expr parse_prefix(const std::string& text);

  // Subtrees indexed in preorder; index 0 is the tree itself.
  Expr subtree_at(int index) const;
  Expr replace_at(int index, const Expr& replacement) const;

  bool identical_to(const Expr& other) const;  // structural equality

private:
  struct Node {
    Kind kind;
    Op op = Op::Add;
    double value = 0.0;
    int var_index = 0;
    std::vector<Expr> children;
    int size = 1;
    int depth = 1;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace srfe
