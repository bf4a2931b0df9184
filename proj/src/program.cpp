#include "geoflow/program.hpp"

#include <cmath>
#include <unordered_map>

namespace geoflow {

namespace {

double ipow(double b, int k) {
  if (k < 0) return 1.0 / ipow(b, -k);
  double r = 1.0;
  while (k != 0) {
    if ((k & 1) != 0) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

}  // namespace

Program::Program(std::span<const Expr> outputs) {
  std::unordered_map<const Node*, int> by_pointer;
  std::unordered_map<std::uint64_t, std::vector<std::pair<Expr, int>>> by_hash;

  // iterative post-order so deep trees do not exhaust the stack
  auto emit = [&](const Expr& root) -> int {
    std::vector<std::pair<Expr, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (by_pointer.count(e.node()) != 0) continue;
      auto& bucket = by_hash[e.hash()];
      bool found = false;
      for (auto& [other, slot] : bucket) {
        if (other == e) {
          by_pointer.emplace(e.node(), slot);
          found = true;
          break;
        }
      }
      if (found) continue;
      if (!expanded) {
        stack.emplace_back(e, true);
        for (const Expr& a : e.args()) {
          if (by_pointer.count(a.node()) == 0) stack.emplace_back(a, false);
        }
        continue;
      }
      Op op{e.kind(), e.index(), static_cast<int>(args_.size()), static_cast<int>(e.args().size()), e.value()};
      for (const Expr& a : e.args()) args_.push_back(by_pointer.at(a.node()));
      int slot = static_cast<int>(ops_.size());
      ops_.push_back(op);
      by_pointer.emplace(e.node(), slot);
      bucket.emplace_back(e, slot);
    }
    return by_pointer.at(root.node());
  };

  for (const Expr& e : outputs) outputs_.push_back(emit(e));
}

void Program::run(std::span<const double> point, std::span<double> out, std::vector<double>& work) const {
  work.resize(ops_.size());
  double* w = work.data();
  const int* a = args_.data();
  for (std::size_t s = 0; s < ops_.size(); ++s) {
    const Op& op = ops_[s];
    const int* arg = a + op.first;
    double v = 0.0;
    switch (op.kind) {
      case NodeKind::Constant: v = op.value; break;
      case NodeKind::Variable: v = point[static_cast<std::size_t>(op.index)]; break;
      case NodeKind::Sum:
        for (int i = 0; i < op.count; ++i) v += w[arg[i]];
        break;
      case NodeKind::Product:
        v = 1.0;
        for (int i = 0; i < op.count; ++i) v *= w[arg[i]];
        break;
      case NodeKind::Quotient: v = w[arg[0]] / w[arg[1]]; break;
      case NodeKind::Negation: v = -w[arg[0]]; break;
      case NodeKind::Power: v = ipow(w[arg[0]], op.index); break;
      case NodeKind::Sin: v = std::sin(w[arg[0]]); break;
      case NodeKind::Cos: v = std::cos(w[arg[0]]); break;
      case NodeKind::Exp: v = std::exp(w[arg[0]]); break;
      case NodeKind::Log: v = std::log(w[arg[0]]); break;
      case NodeKind::Sqrt: v = std::sqrt(w[arg[0]]); break;
    }
    w[s] = v;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = w[outputs_[i]];
}

std::vector<double> Program::operator()(std::span<const double> point) const {
  std::vector<double> out(outputs_.size());
  std::vector<double> work;
  run(point, out, work);
  return out;
}

}  // namespace geoflow
