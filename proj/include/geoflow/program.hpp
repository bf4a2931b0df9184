#pragma once

// Straight-line evaluation tape for a batch of expressions.
//
// Shared subtrees (by pointer or by structure) are evaluated once. A Program is
// immutable after construction; run() takes caller-owned scratch so one
// Program can be used from several threads.

#include <span>
#include <vector>

#include "geoflow/expr.hpp"

namespace geoflow {

class Program {
public:
  Program() = default;
  explicit Program(std::span<const Expr> outputs);

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t slot_count() const { return ops_.size(); }

  void run(std::span<const double> point, std::span<double> out, std::vector<double>& work) const;
  std::vector<double> operator()(std::span<const double> point) const;

private:
  struct Op {
    NodeKind kind;
    int index;  // variable index or exponent
    int first;  // operand range in args_
    int count;
    double value;
  };
  std::vector<Op> ops_;
  std::vector<int> args_;
  std::vector<int> outputs_;
};

}  // namespace geoflow
