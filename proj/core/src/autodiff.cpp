#include "spanqa/autodiff.hpp"

#include <stdexcept>

#include "spanqa/errors.hpp"

namespace spanqa::ad {

std::size_t ParamStore::add(std::string name, Matrix value) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw std::out_of_range("no parameter named " + name);
}

std::size_t ParamStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParamStore::all_finite() const noexcept {
  for (const auto& v : values_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out.add(names_[i], Matrix::Zero(values_[i].rows(), values_[i].cols()));
  }
  return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                         std::to_string(b.cols()));
  }
}

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, const Node&)> back) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(back), -1});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[v.index];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::parameter(const ParamStore& store, std::size_t slot) {
  Var v = push(store[slot]);
  nodes_[v.index].slot = static_cast<long>(slot);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols() != B.rows()) {
    throw Error(Errc::ShapeMismatch, "matmul: inner dimensions " + std::to_string(A.cols()) + " and " +
                                         std::to_string(B.rows()));
  }
  return push(A * B, [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad * t.value(b).transpose());
    t.accumulate(b, t.value(a).transpose() * self.grad);
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, self.grad);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad);
    t.accumulate(b, -self.grad);
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, const Node& self) {
    t.accumulate(a, self.grad.cwiseProduct(t.value(b)));
    t.accumulate(b, self.grad.cwiseProduct(t.value(a)));
  });
}

Var Tape::add_col(Var m, Var col) {
  const Matrix& M = value(m);
  const Matrix& C = value(col);
  if (C.cols() != 1 || C.rows() != M.rows()) {
    throw Error(Errc::ShapeMismatch, "add_col: bias of " + std::to_string(C.rows()) + "x" +
                                         std::to_string(C.cols()) + " for " + std::to_string(M.rows()) + " rows");
  }
  Matrix out = M.colwise() + C.col(0);
  return push(std::move(out), [m, col](Tape& t, const Node& self) {
    t.accumulate(m, self.grad);
    t.accumulate(col, self.grad.rowwise().sum());
  });
}

Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, const Node& self) { t.accumulate(a, self.grad * s); });
}

Var Tape::add_scalar(Var a, double s) {
  return push(value(a).array() + s, [a](Tape& t, const Node& self) { t.accumulate(a, self.grad); });
}

Var Tape::tanh(Var a) {
  Matrix y = value(a).array().tanh();
  return push(std::move(y), [a](Tape& t, const Node& self) {
    t.accumulate(a, self.grad.cwiseProduct((1.0 - self.value.array().square()).matrix()));
  });
}

Var Tape::exp(Var a) {
  Matrix y = value(a).array().exp();
  return push(std::move(y), [a](Tape& t, const Node& self) {
    t.accumulate(a, self.grad.cwiseProduct(self.value));
  });
}

Var Tape::square(Var a) {
  return push(value(a).array().square(), [a](Tape& t, const Node& self) {
    t.accumulate(a, 2.0 * self.grad.cwiseProduct(t.value(a)));
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Matrix y = value(a).cwiseMax(lo).cwiseMin(hi);
  return push(std::move(y), [a, lo, hi](Tape& t, const Node& self) {
    const Matrix& x = t.value(a);
    Matrix pass = ((x.array() >= lo) && (x.array() <= hi)).cast<double>();
    t.accumulate(a, self.grad.cwiseProduct(pass));
  });
}

Var Tape::transpose(Var a) {
  return push(value(a).transpose(), [a](Tape& t, const Node& self) { t.accumulate(a, self.grad.transpose()); });
}

Var Tape::sum(Var a) {
  Matrix s(1, 1);
  s(0, 0) = value(a).sum();
  return push(std::move(s), [a](Tape& t, const Node& self) {
    const Matrix& x = t.value(a);
    t.accumulate(a, Matrix::Constant(x.rows(), x.cols(), self.grad(0, 0)));
  });
}

Var Tape::mean_cols(Var a) {
  const Matrix& x = value(a);
  const double n = static_cast<double>(x.cols());
  Matrix m = x.rowwise().sum() / n;
  return push(std::move(m), [a, n](Tape& t, const Node& self) {
    const Matrix& x = t.value(a);
    Matrix g = self.grad.col(0).replicate(1, x.cols()) / n;
    t.accumulate(a, g);
  });
}

Var Tape::repeat_cols(Var col, Eigen::Index n) {
  const Matrix& c = value(col);
  if (c.cols() != 1) throw Error(Errc::ShapeMismatch, "repeat_cols expects a column vector");
  return push(c.replicate(1, n), [col](Tape& t, const Node& self) {
    t.accumulate(col, self.grad.rowwise().sum());
  });
}

Var Tape::vcat(Var top, Var bottom) {
  const Matrix& A = value(top);
  const Matrix& B = value(bottom);
  if (A.cols() != B.cols()) throw Error(Errc::ShapeMismatch, "vcat: column counts differ");
  Matrix out(A.rows() + B.rows(), A.cols());
  out << A, B;
  const Eigen::Index split = A.rows();
  return push(std::move(out), [top, bottom, split](Tape& t, const Node& self) {
    t.accumulate(top, self.grad.topRows(split));
    t.accumulate(bottom, self.grad.bottomRows(self.grad.rows() - split));
  });
}

Var Tape::gather_cols(Var table, const std::vector<int>& ids) {
  const Matrix& T = value(table);
  Matrix out(T.rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= T.cols()) {
      throw Error(Errc::ShapeMismatch, "token id " + std::to_string(ids[j]) + " outside vocabulary of " +
                                           std::to_string(T.cols()));
    }
    out.col(static_cast<Eigen::Index>(j)) = T.col(ids[j]);
  }
  return push(std::move(out), [table, ids](Tape& t, const Node& self) {
    const Matrix& T = t.value(table);
    Matrix g = Matrix::Zero(T.rows(), T.cols());
    for (std::size_t j = 0; j < ids.size(); ++j) g.col(ids[j]) += self.grad.col(static_cast<Eigen::Index>(j));
    t.accumulate(table, g);
  });
}

Var Tape::log_softmax_cols(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).maxCoeff();
    const double lse = m + std::log((x.col(j).array() - m).exp().sum());
    y.col(j) = x.col(j).array() - lse;
  }
  return push(std::move(y), [a](Tape& t, const Node& self) {
    // d/dx_i of sum_k g_k y_k = g_i - softmax_i * sum_k g_k
    Matrix soft = self.value.array().exp();
    Matrix g = self.grad - soft * self.grad.colwise().sum().asDiagonal();
    t.accumulate(a, g);
  });
}

Var Tape::pick_sum(Var a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& entries) {
  const Matrix& x = value(a);
  Matrix s(1, 1);
  s(0, 0) = 0.0;
  for (auto [r, c] : entries) {
    if (r < 0 || r >= x.rows() || c < 0 || c >= x.cols()) {
      throw Error(Errc::ShapeMismatch, "pick_sum index (" + std::to_string(r) + "," + std::to_string(c) +
                                           ") outside " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    s(0, 0) += x(r, c);
  }
  return push(std::move(s), [a, entries](Tape& t, const Node& self) {
    const Matrix& x = t.value(a);
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (auto [r, c] : entries) g(r, c) += self.grad(0, 0);
    t.accumulate(a, g);
  });
}

ParamStore Tape::backward(Var root, const ParamStore& store) {
  if (consumed_) throw Error(Errc::GraphReuse, "backward() already ran on this tape");
  consumed_ = true;
  if (value(root).size() != 1) throw Error(Errc::ShapeMismatch, "backward() needs a scalar root");

  ParamStore grads = store.zeros_like();
  nodes_[root.index].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.slot >= 0) grads[static_cast<std::size_t>(n.slot)] += n.grad;
    if (n.back) n.back(*this, n);
  }
  return grads;
}

}  // namespace spanqa::ad
