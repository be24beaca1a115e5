// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/ops.hpp"

#include <cmath>
#include <utility>

namespace ssvt::ops {

namespace {

bool tracked(const Tensor& t) { return TensorAccess::wants_grad(t); }

ComputeGraph* graph_for(const Tensor& a) {
  ComputeGraph* g = ComputeGraph::current();
  return (g && tracked(a)) ? g : nullptr;
}

ComputeGraph* graph_for(const Tensor& a, const Tensor& b) {
  ComputeGraph* g = ComputeGraph::current();
  return (g && (tracked(a) || tracked(b))) ? g : nullptr;
}

ComputeGraph* graph_for(const Tensor& a, const Tensor& b, const Tensor& c) {
  ComputeGraph* g = ComputeGraph::current();
  return (g && (tracked(a) || tracked(b) || tracked(c))) ? g : nullptr;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()) + " differ");
  }
}

void require_rank(const Tensor& t, Index rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + shape_str(t.shape()));
  }
}

// Rows of a [..., d] tensor.
Index leading_rows(const Tensor& t, Index d) { return t.size() / d; }

Eigen::Map<const MatRM> mat_view(const Tensor& t, Index rows, Index cols) {
  return {t.array().data(), rows, cols};
}

Eigen::Map<const MatRM> mat_view(const Array& a, Index rows, Index cols) {
  return {a.data(), rows, cols};
}

Eigen::Map<MatRM> mat_view_mut(Array& a, Index rows, Index cols) {
  return {a.data(), rows, cols};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::from_array(a.shape(), a.array() + b.array());
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb] {
      const Array& go = out.grad();
      if (ta) TensorAccess::grad_buffer(a) += go;
      if (tb) TensorAccess::grad_buffer(b) += go;
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = Tensor::from_array(a.shape(), a.array() - b.array());
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb] {
      const Array& go = out.grad();
      if (ta) TensorAccess::grad_buffer(a) += go;
      if (tb) TensorAccess::grad_buffer(b) -= go;
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::from_array(a.shape(), a.array() * b.array());
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb] {
      const Array& go = out.grad();
      if (ta) TensorAccess::grad_buffer(a) += go * b.array();
      if (tb) TensorAccess::grad_buffer(b) += go * a.array();
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double s) {
  Tensor out = Tensor::from_array(a.shape(), a.array() + s);
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out] { TensorAccess::grad_buffer(a) += out.grad(); });
  }
  return out;
}

Tensor mul_scalar(const Tensor& a, double s) {
  Tensor out = Tensor::from_array(a.shape(), a.array() * s);
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, s] { TensorAccess::grad_buffer(a) += out.grad() * s; });
  }
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = Tensor::from_array(a.shape(), a.array().exp());
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out] {
      TensorAccess::grad_buffer(a) += out.grad() * out.array();
    });
  }
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = Tensor::from_array(a.shape(), a.array().log());
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out] {
      TensorAccess::grad_buffer(a) += out.grad() / a.array();
    });
  }
  return out;
}

Tensor gelu(const Tensor& a) {
  static const double kC = std::sqrt(2.0 / M_PI);
  static constexpr double kCube = 0.044715;
  const Array& x = a.array();
  Array u = kC * (x + kCube * x.cube());
  Array t = u.tanh();
  Tensor out = Tensor::from_array(a.shape(), 0.5 * x * (1.0 + t));
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, t = std::move(t)] {
      const Array& x = a.array();
      Array du = kC * (1.0 + 3.0 * kCube * x.square());
      Array dgelu = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t.square()) * du;
      TensorAccess::grad_buffer(a) += out.grad() * dgelu;
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  Array out_data(m * n);
  mat_view_mut(out_data, m, n).noalias() = mat_view(a, m, k) * mat_view(b, k, n);
  Tensor out = Tensor::from_array({m, n}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb, m, k, n] {
      auto go = mat_view(out.grad(), m, n);
      if (ta) {
        mat_view_mut(TensorAccess::grad_buffer(a), m, k).noalias() +=
            go * mat_view(b, k, n).transpose();
      }
      if (tb) {
        mat_view_mut(TensorAccess::grad_buffer(b), k, n).noalias() +=
            mat_view(a, m, k).transpose() * go;
      }
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const Index n = a.dim(0), m = a.dim(1), k = a.dim(2), p = b.dim(2);
  if (b.dim(0) != n || b.dim(1) != k) {
    throw ShapeError("bmm: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " are incompatible");
  }
  Array out_data(n * m * p);
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<MatRM> o(out_data.data() + i * m * p, m, p);
    Eigen::Map<const MatRM> ai(a.array().data() + i * m * k, m, k);
    Eigen::Map<const MatRM> bi(b.array().data() + i * k * p, k, p);
    o.noalias() = ai * bi;
  }
  Tensor out = Tensor::from_array({n, m, p}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb, n, m, k, p] {
      const Array& go = out.grad();
      for (Index i = 0; i < n; ++i) {
        Eigen::Map<const MatRM> gi(go.data() + i * m * p, m, p);
        Eigen::Map<const MatRM> ai(a.array().data() + i * m * k, m, k);
        Eigen::Map<const MatRM> bi(b.array().data() + i * k * p, k, p);
        if (ta) {
          Eigen::Map<MatRM> ga(TensorAccess::grad_buffer(a).data() + i * m * k, m, k);
          ga.noalias() += gi * bi.transpose();
        }
        if (tb) {
          Eigen::Map<MatRM> gb(TensorAccess::grad_buffer(b).data() + i * k * p, k, p);
          gb.noalias() += ai.transpose() * gi;
        }
      }
    });
  }
  return out;
}

Tensor bmm_nt(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "bmm_nt");
  require_rank(b, 3, "bmm_nt");
  const Index n = a.dim(0), m = a.dim(1), k = a.dim(2), p = b.dim(1);
  if (b.dim(0) != n || b.dim(2) != k) {
    throw ShapeError("bmm_nt: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " are incompatible");
  }
  Array out_data(n * m * p);
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<MatRM> o(out_data.data() + i * m * p, m, p);
    Eigen::Map<const MatRM> ai(a.array().data() + i * m * k, m, k);
    Eigen::Map<const MatRM> bi(b.array().data() + i * p * k, p, k);
    o.noalias() = ai * bi.transpose();
  }
  Tensor out = Tensor::from_array({n, m, p}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb, n, m, k, p] {
      const Array& go = out.grad();
      for (Index i = 0; i < n; ++i) {
        Eigen::Map<const MatRM> gi(go.data() + i * m * p, m, p);
        Eigen::Map<const MatRM> ai(a.array().data() + i * m * k, m, k);
        Eigen::Map<const MatRM> bi(b.array().data() + i * p * k, p, k);
        if (ta) {
          Eigen::Map<MatRM> ga(TensorAccess::grad_buffer(a).data() + i * m * k, m, k);
          ga.noalias() += gi * bi;
        }
        if (tb) {
          Eigen::Map<MatRM> gb(TensorAccess::grad_buffer(b).data() + i * p * k, p, k);
          gb.noalias() += gi.transpose() * ai;
        }
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape) + " (element count differs)");
  }
  Tensor out = Tensor::from_array(std::move(shape), a.array());
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out] { TensorAccess::grad_buffer(a) += out.grad(); });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const Index m = a.dim(0), n = a.dim(1);
  Array out_data(n * m);
  mat_view_mut(out_data, n, m) = mat_view(a, m, n).transpose();
  Tensor out = Tensor::from_array({n, m}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, m, n] {
      mat_view_mut(TensorAccess::grad_buffer(a), m, n) +=
          mat_view(out.grad(), n, m).transpose();
    });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_rows");
  require_rank(b, 2, "concat_rows");
  if (a.dim(1) != b.dim(1)) {
    throw ShapeError("concat_rows: column counts differ, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  const Index ra = a.dim(0), rb = b.dim(0), c = a.dim(1);
  Array out_data((ra + rb) * c);
  out_data.head(ra * c) = a.array();
  out_data.tail(rb * c) = b.array();
  Tensor out = Tensor::from_array({ra + rb, c}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a, b)) {
    const bool ta = tracked(a), tb = tracked(b);
    g->record({a, b}, out, [a, b, out, ta, tb, ra, rb, c] {
      const Array& go = out.grad();
      if (ta) TensorAccess::grad_buffer(a) += go.head(ra * c);
      if (tb) TensorAccess::grad_buffer(b) += go.tail(rb * c);
    });
  }
  return out;
}

Tensor take_rows(const Tensor& a, std::vector<Index> rows) {
  require_rank(a, 2, "take_rows");
  const Index r = a.dim(0), c = a.dim(1);
  for (Index idx : rows) {
    if (idx < 0 || idx >= r) {
      throw ContractError("take_rows: row index " + std::to_string(idx) +
                          " out of range for " + shape_str(a.shape()));
    }
  }
  const Index nr = static_cast<Index>(rows.size());
  Array out_data(nr * c);
  for (Index j = 0; j < nr; ++j) {
    out_data.segment(j * c, c) = a.array().segment(rows[static_cast<std::size_t>(j)] * c, c);
  }
  Tensor out = Tensor::from_array({nr, c}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, rows = std::move(rows), c] {
      const Array& go = out.grad();
      Array& ga = TensorAccess::grad_buffer(a);
      for (std::size_t j = 0; j < rows.size(); ++j) {
        ga.segment(rows[j] * c, c) += go.segment(static_cast<Index>(j) * c, c);
      }
    });
  }
  return out;
}

namespace {

// [d0,d1,d2,d3] -> [d0,d2,d1,d3], copying d3-length blocks.
void swap12_copy(const Array& src, Array& dst, Index d0, Index d1, Index d2, Index d3) {
  for (Index i = 0; i < d0; ++i) {
    for (Index j = 0; j < d1; ++j) {
      for (Index k = 0; k < d2; ++k) {
        const Index s = ((i * d1 + j) * d2 + k) * d3;
        const Index t = ((i * d2 + k) * d1 + j) * d3;
        dst.segment(t, d3) = src.segment(s, d3);
      }
    }
  }
}

}  // namespace

Tensor swap_axes12(const Tensor& a) {
  require_rank(a, 4, "swap_axes12");
  const Index d0 = a.dim(0), d1 = a.dim(1), d2 = a.dim(2), d3 = a.dim(3);
  Array out_data(a.size());
  swap12_copy(a.array(), out_data, d0, d1, d2, d3);
  Tensor out = Tensor::from_array({d0, d2, d1, d3}, std::move(out_data));
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, d0, d1, d2, d3] {
      Array swapped(a.size());
      swap12_copy(out.grad(), swapped, d0, d2, d1, d3);
      TensorAccess::grad_buffer(a) += swapped;
    });
  }
  return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(bias, 1, "add_row_bias");
  const Index d = bias.dim(0);
  if (x.rank() < 1 || x.dim(x.rank() - 1) != d) {
    throw ShapeError("add_row_bias: last dimension of " + shape_str(x.shape()) +
                     " does not match bias " + shape_str(bias.shape()));
  }
  const Index rows = leading_rows(x, d);
  Array out_data(x.size());
  mat_view_mut(out_data, rows, d) =
      mat_view(x, rows, d).rowwise() + mat_view(bias, 1, d).row(0);
  Tensor out = Tensor::from_array(x.shape(), std::move(out_data));
  if (ComputeGraph* g = graph_for(x, bias)) {
    const bool tx = tracked(x), tb = tracked(bias);
    g->record({x, bias}, out, [x, bias, out, tx, tb, rows, d] {
      const Array& go = out.grad();
      if (tx) TensorAccess::grad_buffer(x) += go;
      if (tb) {
        mat_view_mut(TensorAccess::grad_buffer(bias), 1, d).row(0) +=
            mat_view(go, rows, d).colwise().sum();
      }
    });
  }
  return out;
}

Tensor add_tiled_rows(const Tensor& x, const Tensor& rows) {
  require_rank(x, 2, "add_tiled_rows");
  require_rank(rows, 2, "add_tiled_rows");
  const Index n = x.dim(0), d = x.dim(1), t = rows.dim(0);
  if (rows.dim(1) != d || t <= 0 || n % t != 0) {
    throw ShapeError("add_tiled_rows: cannot tile " + shape_str(rows.shape()) +
                     " over " + shape_str(x.shape()));
  }
  const Index reps = n / t;
  Array out_data(x.size());
  for (Index b = 0; b < reps; ++b) {
    out_data.segment(b * t * d, t * d) =
        x.array().segment(b * t * d, t * d) + rows.array();
  }
  Tensor out = Tensor::from_array(x.shape(), std::move(out_data));
  if (ComputeGraph* g = graph_for(x, rows)) {
    const bool tx = tracked(x), tr = tracked(rows);
    g->record({x, rows}, out, [x, rows, out, tx, tr, reps, t, d] {
      const Array& go = out.grad();
      if (tx) TensorAccess::grad_buffer(x) += go;
      if (tr) {
        Array& gr = TensorAccess::grad_buffer(rows);
        for (Index b = 0; b < reps; ++b) {
          gr += go.segment(b * t * d, t * d);
        }
      }
    });
  }
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(gamma, 1, "layernorm");
  require_rank(beta, 1, "layernorm");
  const Index d = gamma.dim(0);
  if (beta.dim(0) != d || x.rank() < 1 || x.dim(x.rank() - 1) != d) {
    throw ShapeError("layernorm: last dimension of " + shape_str(x.shape()) +
                     " must match gamma " + shape_str(gamma.shape()) + " and beta " +
                     shape_str(beta.shape()));
  }
  if (!(eps > 0.0)) {
    throw ContractError("layernorm: eps must be positive");
  }
  const Index rows = leading_rows(x, d);
  Array normalized(x.size());
  Array inv_std(rows);
  Array out_data(x.size());
  auto xm = mat_view(x, rows, d);
  auto nm = mat_view_mut(normalized, rows, d);
  auto om = mat_view_mut(out_data, rows, d);
  const auto& gv = gamma.array();
  const auto& bv = beta.array();
  for (Index r = 0; r < rows; ++r) {
    const double mu = xm.row(r).mean();
    const double var = (xm.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    nm.row(r) = ((xm.row(r).array() - mu) * is).matrix();
    om.row(r) = (nm.row(r).array() * gv.transpose() + bv.transpose()).matrix();
  }
  Tensor out = Tensor::from_array(x.shape(), std::move(out_data));
  if (ComputeGraph* g = graph_for(x, gamma, beta)) {
    const bool tx = tracked(x), tg = tracked(gamma), tb = tracked(beta);
    g->record({x, gamma, beta}, out,
              [x, gamma, beta, out, tx, tg, tb, rows, d,
               normalized = std::move(normalized), inv_std = std::move(inv_std)] {
      auto go = mat_view(out.grad(), rows, d);
      auto nm = mat_view(normalized, rows, d);
      const auto& gv = gamma.array();
      if (tg) {
        mat_view_mut(TensorAccess::grad_buffer(gamma), 1, d).row(0) +=
            (go.array() * nm.array()).colwise().sum().matrix();
      }
      if (tb) {
        mat_view_mut(TensorAccess::grad_buffer(beta), 1, d).row(0) += go.colwise().sum();
      }
      if (tx) {
        auto gx = mat_view_mut(TensorAccess::grad_buffer(x), rows, d);
        for (Index r = 0; r < rows; ++r) {
          Eigen::ArrayXd h = go.row(r).transpose().array() * gv;
          const double mean_h = h.mean();
          const double mean_hn = (h * nm.row(r).transpose().array()).mean();
          gx.row(r) += ((h - mean_h - nm.row(r).transpose().array() * mean_hn) *
                        inv_std[r]).matrix().transpose();
        }
      }
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() < 1) {
    throw ShapeError("softmax_rows: expected rank >= 1");
  }
  if (!x.array().isFinite().all()) {
    throw NumericError("softmax_rows: input contains non-finite values");
  }
  const Index d = x.dim(x.rank() - 1);
  const Index rows = leading_rows(x, d);
  Array out_data(x.size());
  auto xm = mat_view(x, rows, d);
  auto om = mat_view_mut(out_data, rows, d);
  for (Index r = 0; r < rows; ++r) {
    const double m = xm.row(r).maxCoeff();
    Eigen::ArrayXd e = (xm.row(r).transpose().array() - m).exp();
    om.row(r) = (e / e.sum()).matrix().transpose();
  }
  Tensor out = Tensor::from_array(x.shape(), std::move(out_data));
  if (ComputeGraph* g = graph_for(x)) {
    g->record({x}, out, [x, out, rows, d] {
      auto go = mat_view(out.grad(), rows, d);
      auto pm = mat_view(out, rows, d);
      auto gx = mat_view_mut(TensorAccess::grad_buffer(x), rows, d);
      for (Index r = 0; r < rows; ++r) {
        const double dot = (go.row(r).array() * pm.row(r).array()).sum();
        gx.row(r) += (pm.row(r).array() * (go.row(r).array() - dot)).matrix();
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = Tensor::scalar(a.array().sum());
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out] {
      TensorAccess::grad_buffer(a) += out.grad()[0];
    });
  }
  return out;
}

Tensor mean(const Tensor& a) {
  const double inv_n = 1.0 / static_cast<double>(a.size());
  Tensor out = Tensor::scalar(a.array().sum() * inv_n);
  if (ComputeGraph* g = graph_for(a)) {
    g->record({a}, out, [a, out, inv_n] {
      TensorAccess::grad_buffer(a) += out.grad()[0] * inv_n;
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& target, const Tensor& pred) {
  require_rank(target, 2, "cross_entropy");
  require_rank(pred, 2, "cross_entropy");
  require_same_shape(target, pred, "cross_entropy");
  const Index b = target.dim(0);
  Array clamped = pred.array().max(kLogClamp);
  const double loss = -(target.array() * clamped.log()).sum() / static_cast<double>(b);
  Tensor out = Tensor::scalar(loss);
  if (ComputeGraph* g = graph_for(target, pred)) {
    const bool tt = tracked(target), tp = tracked(pred);
    g->record({target, pred}, out,
              [target, pred, out, tt, tp, b, clamped = std::move(clamped)] {
      const double g0 = out.grad()[0] / static_cast<double>(b);
      if (tp) {
        // d/dpred of -t*log(max(pred, c)) is -t/pred above the clamp, 0 below.
        TensorAccess::grad_buffer(pred) +=
            (pred.array() > kLogClamp)
                .select(-g0 * target.array() / clamped, Array::Zero(pred.size()));
      }
      if (tt) {
        TensorAccess::grad_buffer(target) += -g0 * clamped.log();
      }
    });
  }
  return out;
}

}  // namespace ssvt::ops
