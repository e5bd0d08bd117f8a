#include "hhpnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hhpnet/kernels.hpp"

namespace hhpnet::ad {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Batch rows of a tensor of rank >= 1: rank-1 tensors are a single row.
std::size_t batch_rows(const Tensor& t) { return t.rank() <= 1 ? 1 : t.dim(0); }

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("Tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t width = data_.size() / batch_rows(*this);
  return std::span<double>(data_).subspan(r * width, width);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t width = data_.size() / batch_rows(*this);
  return std::span<const double>(data_).subspan(r * width, width);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (product(shape) != data_.size()) {
    throw ShapeError("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

// ---------------------------------------------------------------------------
// Graph plumbing

Var Graph::push(Tensor value, std::vector<std::size_t> inputs, std::function<void(Graph&, std::size_t)> backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(inputs), std::move(backward), nullptr});
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_of(std::size_t index) {
  Node& n = nodes_[index];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Graph::input(Tensor value) { return push(std::move(value), {}, nullptr); }

Var Graph::param(Parameter& p) {
  Var v = push(p.value, {}, nullptr);
  nodes_[v.index].param = &p;
  return v;
}

void Graph::backward(Var output) {
  if (nodes_.at(output.index).value.size() != 1) {
    throw ShapeError("backward: output must have one element, got " + shape_string(value(output).shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  grad_of(output.index)[0] = 1.0;
  for (std::size_t i = output.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (n.param->grad.shape() != n.value.shape()) n.param->grad = Tensor(n.value.shape());
      kernels::axpy(1.0, nodes_[i].grad.data(), n.param->grad.data());
    }
  }
}

// ---------------------------------------------------------------------------
// Layers

Var Graph::dense(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (wv.rank() != 2 || bv.rank() != 1 || xv.rank() < 1 || xv.rank() > 2) {
    throw ShapeError("dense: expected x [B, m] or [m], w [m, k], b [k]");
  }
  const std::size_t m = wv.dim(0), k = wv.dim(1);
  const std::size_t rows = batch_rows(xv);
  if (xv.size() / rows != m || xv.shape().back() != m || bv.dim(0) != k) {
    throw ShapeError("dense: x " + shape_string(xv.shape()) + ", w " + shape_string(wv.shape()) + ", b " +
                     shape_string(bv.shape()));
  }
  Tensor out(xv.rank() == 1 ? Shape{k} : Shape{rows, k});
  for (std::size_t r = 0; r < rows; ++r) std::copy(bv.data().begin(), bv.data().end(), out.row(r).begin());
  kernels::gemm_acc(rows, m, k, xv.data(), m, 1, wv.data(), out.data());
  return push(std::move(out), {x.index, w.index, b.index}, [rows, m](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& xv = g.nodes_[in[0]].value;
    const Tensor& wv = g.nodes_[in[1]].value;
    Tensor& gx = g.grad_of(in[0]);
    Tensor& gw = g.grad_of(in[1]);
    Tensor& gb = g.grad_of(in[2]);
    // dW = x^T gy, read through strides instead of a transposed copy.
    kernels::gemm_acc(m, rows, wv.dim(1), xv.data(), 1, m, gy.data(), gw.data());

    // dx = gy W^T against an explicit transpose, which is cheap next to the batch.
    const std::size_t k = wv.dim(1);
    std::vector<double> wt(m * k);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < k; ++j) wt[j * m + i] = wv[i * k + j];
    }
    kernels::gemm_acc(rows, k, m, gy.data(), k, 1, wt, gx.data());
    for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, gy.row(r), gb.data());
  });
}

Var Graph::conv1d(Var x, Var filters, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& fv = value(filters);
  const Tensor& bv = value(bias);
  if (xv.rank() != 2 || fv.rank() != 2 || bv.rank() != 1 || bv.dim(0) != fv.dim(0)) {
    throw ShapeError("conv1d: expected x [B, n], filters [F, k], bias [F]");
  }
  const std::size_t rows = xv.dim(0), n = xv.dim(1), nf = fv.dim(0), k = fv.dim(1);
  if (k % 2 == 0) throw ShapeError("conv1d: kernel size must be odd for same padding");
  if (k > n) throw ShapeError("conv1d: kernel size " + std::to_string(k) + " exceeds input length " + std::to_string(n));
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({rows, n, nf});
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t f = 0; f < nf; ++f) {
        double acc = bv[f];
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + j) - half;
          if (src >= 0 && src < static_cast<std::ptrdiff_t>(n)) acc += fv.at(f, j) * xv.at(r, static_cast<std::size_t>(src));
        }
        out[(r * n + p) * nf + f] = acc;
      }
    }
  }
  return push(std::move(out), {x.index, filters.index, bias.index}, [rows, n, nf, k, half](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& xv = g.nodes_[in[0]].value;
    const Tensor& fv = g.nodes_[in[1]].value;
    Tensor& gx = g.grad_of(in[0]);
    Tensor& gf = g.grad_of(in[1]);
    Tensor& gb = g.grad_of(in[2]);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t f = 0; f < nf; ++f) {
          const double go = gy[(r * n + p) * nf + f];
          gb[f] += go;
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + j) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
            gf.at(f, j) += go * xv.at(r, static_cast<std::size_t>(src));
            gx.at(r, static_cast<std::size_t>(src)) += go * fv.at(f, j);
          }
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Var Graph::leaky_relu(Var x, double slope) {
  if (!(slope > 0.0)) throw std::invalid_argument("leaky_relu: slope must be positive");
  Tensor out = value(x);
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return push(std::move(out), {x.index}, [slope](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& xv = g.nodes_[in].value;
    Tensor& gx = g.grad_of(in);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += xv[i] > 0.0 ? gy[i] : slope * gy[i];
  });
}

Var Graph::sigmoid(Var x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& y = g.nodes_[self].value;
    Tensor& gx = g.grad_of(in);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
  });
}

Var Graph::exp(Var x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::exp(v);
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& y = g.nodes_[self].value;
    Tensor& gx = g.grad_of(in);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i];
  });
}

Var Graph::square(Var x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = v * v;
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const Tensor& gy = g.nodes_[self].grad;
    const Tensor& xv = g.nodes_[in].value;
    Tensor& gx = g.grad_of(in);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += 2.0 * xv[i] * gy[i];
  });
}

Var Graph::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  const Tensor& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor& gy = g.nodes_[self].grad;
    // Snapshot operand values: a and b may be the same node.
    const Tensor av = g.nodes_[in[0]].value;
    const Tensor bv = g.nodes_[in[1]].value;
    Tensor& ga = g.grad_of(in[0]);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    Tensor& gb = g.grad_of(in[1]);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
  });
}

Var Graph::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  kernels::axpy(1.0, value(b).data(), out.data());
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor gy = g.nodes_[self].grad;
    kernels::axpy(1.0, gy.data(), g.grad_of(in[0]).data());
    kernels::axpy(1.0, gy.data(), g.grad_of(in[1]).data());
  });
}

Var Graph::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  Tensor out = value(a);
  kernels::axpy(-1.0, value(b).data(), out.data());
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor gy = g.nodes_[self].grad;
    kernels::axpy(1.0, gy.data(), g.grad_of(in[0]).data());
    kernels::axpy(-1.0, gy.data(), g.grad_of(in[1]).data());
  });
}

Var Graph::scale(Var x, double factor) {
  Tensor out = value(x);
  for (double& v : out.data()) v *= factor;
  return push(std::move(out), {x.index}, [factor](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    kernels::axpy(factor, g.nodes_[self].grad.data(), g.grad_of(in).data());
  });
}

Var Graph::add_scalar(Var x, double offset) {
  Tensor out = value(x);
  for (double& v : out.data()) v += offset;
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    kernels::axpy(1.0, g.nodes_[self].grad.data(), g.grad_of(in).data());
  });
}

// ---------------------------------------------------------------------------
// Shape ops and reductions

Var Graph::concat(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() == 1 && bv.rank() == 1) {
    std::vector<double> data(av.data().begin(), av.data().end());
    data.insert(data.end(), bv.data().begin(), bv.data().end());
    const std::size_t n = data.size();
    Tensor out({n}, std::move(data));
    const std::size_t na = av.size();
    return push(std::move(out), {a.index, b.index}, [na](Graph& g, std::size_t self) {
      const auto in = g.nodes_[self].inputs;
      const auto gy = g.nodes_[self].grad.data();
      kernels::axpy(1.0, gy.subspan(0, na), g.grad_of(in[0]).data());
      kernels::axpy(1.0, gy.subspan(na), g.grad_of(in[1]).data());
    });
  }
  if (av.rank() < 2 || bv.rank() < 2 || av.dim(0) != bv.dim(0)) {
    throw ShapeError("concat: incompatible shapes " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  const std::size_t rows = av.dim(0), wa = av.size() / rows, wb = bv.size() / rows;
  Tensor out({rows, wa + wb});
  for (std::size_t r = 0; r < rows; ++r) {
    auto o = out.row(r);
    std::copy(av.row(r).begin(), av.row(r).end(), o.begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), o.begin() + static_cast<std::ptrdiff_t>(wa));
  }
  return push(std::move(out), {a.index, b.index}, [rows, wa, wb](Graph& g, std::size_t self) {
    const auto in = g.nodes_[self].inputs;
    const Tensor& gy = g.nodes_[self].grad;
    Tensor& ga = g.grad_of(in[0]);
    Tensor& gb = g.grad_of(in[1]);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto gr = gy.row(r);
      kernels::axpy(1.0, gr.subspan(0, wa), ga.row(r));
      kernels::axpy(1.0, gr.subspan(wa, wb), gb.row(r));
    }
  });
}

Var Graph::flatten(Var x) {
  const Tensor& xv = value(x);
  if (xv.rank() < 1) throw ShapeError("flatten: scalar input");
  const std::size_t rows = xv.rank() == 1 ? 1 : xv.dim(0);
  Tensor out = xv.rank() == 1 ? xv : xv.reshaped({rows, xv.size() / rows});
  return push(std::move(out), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    kernels::axpy(1.0, g.nodes_[self].grad.data(), g.grad_of(in).data());
  });
}

Var Graph::slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || begin >= end || end > xv.dim(1)) {
    throw ShapeError("slice_cols: invalid range on " + shape_string(xv.shape()));
  }
  const std::size_t rows = xv.dim(0), width = end - begin;
  Tensor out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = xv.row(r).subspan(begin, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return push(std::move(out), {x.index}, [rows, begin, width](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const Tensor& gy = g.nodes_[self].grad;
    Tensor& gx = g.grad_of(in);
    for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, gy.row(r), gx.row(r).subspan(begin, width));
  });
}

Var Graph::sum(Var x) {
  const Tensor& xv = value(x);
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return push(Tensor({1}, std::vector<double>{total}), {x.index}, [](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    const double go = g.nodes_[self].grad[0];
    for (double& v : g.grad_of(in).data()) v += go;
  });
}

Var Graph::softmax_cross_entropy(Var logits, std::vector<std::size_t> labels) {
  const Tensor& lv = value(logits);
  if (lv.rank() != 2 || labels.size() != lv.dim(0)) {
    throw ShapeError("softmax_cross_entropy: expected logits [B, K] and B labels");
  }
  const std::size_t rows = lv.dim(0), classes = lv.dim(1);
  Tensor out({rows});
  Tensor probs({rows, classes});
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] >= classes) throw ShapeError("softmax_cross_entropy: label out of range");
    const auto z = lv.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom);
    auto pr = probs.row(r);
    for (std::size_t j = 0; j < classes; ++j) pr[j] = std::exp(z[j] - zmax - log_denom);
    out[r] = -(z[labels[r]] - zmax - log_denom);
  }
  return push(std::move(out), {logits.index},
              [rows, classes, labels = std::move(labels), probs = std::move(probs)](Graph& g, std::size_t self) {
                const std::size_t in = g.nodes_[self].inputs[0];
                const Tensor& gy = g.nodes_[self].grad;
                Tensor& gl = g.grad_of(in);
                for (std::size_t r = 0; r < rows; ++r) {
                  const auto pr = probs.row(r);
                  auto gr = gl.row(r);
                  for (std::size_t j = 0; j < classes; ++j) {
                    gr[j] += gy[r] * (pr[j] - (j == labels[r] ? 1.0 : 0.0));
                  }
                }
              });
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<Var(Graph&)>& f, std::span<Parameter* const> params,
                  const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon <= 1e-2)) {
    throw std::invalid_argument("grad_check: epsilon must lie in (0, 1e-2]");
  }
  auto evaluate = [&f]() {
    Graph g;
    const Var out = f(g);
    if (g.value(out).size() != 1) throw ShapeError("grad_check: function output is not scalar");
    return g.value(out)[0];
  };

  for (Parameter* p : params) p->grad = Tensor(p->value.shape());
  double f0 = 0.0;
  {
    Graph g;
    const Var out = f(g);
    if (g.value(out).size() != 1) throw ShapeError("grad_check: function output is not scalar");
    f0 = g.value(out)[0];
    g.backward(out);
  }
  const double floor = std::max(options.floor, options.relative_floor * std::abs(f0));
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t i : coords) {
      const double original = p.value[i];
      p.value[i] = original + options.epsilon;
      const double plus = evaluate();
      p.value[i] = original - options.epsilon;
      const double minus = evaluate();
      p.value[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace hhpnet::ad
