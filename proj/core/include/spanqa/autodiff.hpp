#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace spanqa::ad {

using Matrix = Eigen::MatrixXd;

// Named, flat store of dense parameter blocks. Gradients use the same type.
class ParamStore {
 public:
  std::size_t add(std::string name, Matrix value);

  std::size_t size() const noexcept { return values_.size(); }
  Matrix& operator[](std::size_t i) { return values_[i]; }
  const Matrix& operator[](std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  // Throws std::out_of_range.
  std::size_t index_of(const std::string& name) const;

  std::size_t scalar_count() const noexcept;
  bool all_finite() const noexcept;
  // Same names and shapes, all zeros.
  ParamStore zeros_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

struct Var {
  std::size_t index = 0;
};

// Records a forward computation; backward() replays it in reverse once.
class Tape {
 public:
  Var constant(Matrix value);
  // Leaf whose gradient is reported under slot `slot` of the store.
  Var parameter(const ParamStore& store, std::size_t slot);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  double scalar(Var v) const { return nodes_[v.index].value(0, 0); }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var add_col(Var m, Var col);  // col broadcast over every column of m
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var tanh(Var a);
  Var exp(Var a);
  Var square(Var a);
  // Elementwise clamp; the gradient is zero where the input was clipped.
  Var clamp(Var a, double lo, double hi);
  Var transpose(Var a);
  Var sum(Var a);  // 1x1
  Var mean_cols(Var a);  // rows x 1
  Var repeat_cols(Var col, Eigen::Index n);
  Var vcat(Var top, Var bottom);
  Var gather_cols(Var table, const std::vector<int>& ids);
  Var log_softmax_cols(Var a);
  // Sum of the selected (row, col) entries, as 1x1.
  Var pick_sum(Var a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& entries);
  // Value copy with no path back to `a`.
  Var detach(Var a) { return constant(value(a)); }

  // Gradient of scalar `root` w.r.t. every parameter slot of `store`; slots
  // never read by the recorded computation get zeros.
  // Throws Error{GraphReuse} on a second call.
  ParamStore backward(Var root, const ParamStore& store);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Node&)> back;
    long slot = -1;
  };

  Var push(Matrix value, std::function<void(Tape&, const Node&)> back = nullptr);
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace spanqa::ad
