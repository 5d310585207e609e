#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmf/errors.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

/// A trainable tensor. grad always has value's shape and accumulates across
/// backward calls until zero_grad.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string name_, Tensor value_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

/// The closed primitive set the reverse pass knows how to differentiate.
enum class OpKind {
  MatVec,    // (R×C)·(C) -> (R)
  MatVecT,   // (R×C)ᵀ·(R) -> (C)
  KMode,     // tensor ×_k matrix
  Outer,     // v_1 ⊗ ... ⊗ v_M
  Tanh,
  Relu,
  Sigmoid,
  Concat,
  PadOne,
  Add,
  Hadamard,
  Flatten,
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::MatVec: return "matvec";
    case OpKind::MatVecT: return "matvec_t";
    case OpKind::KMode: return "kmode_product";
    case OpKind::Outer: return "outer_product";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Concat: return "concat";
    case OpKind::PadOne: return "pad_one";
    case OpKind::Add: return "add";
    case OpKind::Hadamard: return "hadamard";
    case OpKind::Flatten: return "flatten";
  }
  return "?";
}

inline Tensor tanh_map(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return out;
}
inline Tensor relu_map(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return out;
}
inline Tensor sigmoid_map(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  return out;
}

/// Records one training step's forward computation and runs the reverse pass
/// over it. Nodes are visited in exact reverse recording order, so a run is
/// bitwise deterministic. A tape belongs to a single thread.
class Tape {
 public:
  using ValueId = std::size_t;

  /// Constant leaf (no gradient flows into it).
  ValueId input(Tensor v) {
    nodes_.push_back(Node{true, nullptr, OpKind::Add, {}, 0, std::move(v)});
    return nodes_.size() - 1;
  }

  /// Parameter leaf; backward accumulates into p.grad.
  ValueId param(Parameter& p) {
    nodes_.push_back(Node{true, &p, OpKind::Add, {}, 0, p.value});
    return nodes_.size() - 1;
  }

  /// Parameter leaf ingested under another shape with the same element count
  /// (e.g. a core tensor viewed as its flattened matrix). The adjoint is
  /// reshaped back onto the parameter.
  ValueId param_view(Parameter& p, const Shape& view) {
    nodes_.push_back(Node{true, &p, OpKind::Add, {}, 0, p.value.reshaped(view)});
    return nodes_.size() - 1;
  }

  /// Records one primitive application. `mode` is only meaningful for KMode.
  ValueId record(OpKind kind, std::span<const ValueId> args, std::size_t mode = 0) {
    std::vector<const Tensor*> ins;
    ins.reserve(args.size());
    for (ValueId a : args) ins.push_back(&node(a).out);
    Tensor out = eval(kind, ins, mode);
    nodes_.push_back(Node{false, nullptr, kind,
                          std::vector<ValueId>(args.begin(), args.end()), mode,
                          std::move(out)});
    return nodes_.size() - 1;
  }

  ValueId record(OpKind kind, std::initializer_list<ValueId> args, std::size_t mode = 0) {
    std::vector<ValueId> a(args);
    return record(kind, std::span<const ValueId>(a), mode);
  }

  ValueId matvec(ValueId m, ValueId x) { return record(OpKind::MatVec, {m, x}); }
  ValueId matvec_t(ValueId m, ValueId x) { return record(OpKind::MatVecT, {m, x}); }
  ValueId kmode(ValueId t, ValueId m, std::size_t k) {
    return record(OpKind::KMode, {t, m}, k);
  }
  ValueId outer(std::span<const ValueId> vs) { return record(OpKind::Outer, vs); }
  ValueId tanh(ValueId x) { return record(OpKind::Tanh, {x}); }
  ValueId relu(ValueId x) { return record(OpKind::Relu, {x}); }
  ValueId sigmoid(ValueId x) { return record(OpKind::Sigmoid, {x}); }
  ValueId concat(std::span<const ValueId> vs) { return record(OpKind::Concat, vs); }
  ValueId pad_one(ValueId x) { return record(OpKind::PadOne, {x}); }
  ValueId add(ValueId a, ValueId b) { return record(OpKind::Add, {a, b}); }
  ValueId hadamard(ValueId a, ValueId b) { return record(OpKind::Hadamard, {a, b}); }
  ValueId flatten(ValueId x) { return record(OpKind::Flatten, {x}); }

  const Tensor& value(ValueId id) const { return node(id).out; }

  /// Recorded primitive applications (leaves excluded).
  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const Node& nd : nodes_)
      if (!nd.leaf) ++n;
    return n;
  }

  std::size_t count(OpKind k) const {
    std::size_t n = 0;
    for (const Node& nd : nodes_)
      if (!nd.leaf && nd.kind == k) ++n;
    return n;
  }

  /// Entries that contract indices: matvec, matvecᵀ, k-mode and outer products.
  std::size_t contraction_entries() const {
    return count(OpKind::MatVec) + count(OpKind::MatVecT) + count(OpKind::KMode) +
           count(OpKind::Outer);
  }

  /// Recomputes every node from the leaves and compares bitwise with what was
  /// recorded.
  bool replay_matches() const {
    for (const Node& nd : nodes_) {
      if (nd.leaf) continue;
      std::vector<const Tensor*> ins;
      ins.reserve(nd.args.size());
      for (ValueId a : nd.args) ins.push_back(&node(a).out);
      Tensor redo = eval(nd.kind, ins, nd.mode);
      if (!redo.same_shape(nd.out)) return false;
      for (std::size_t i = 0; i < redo.size(); ++i)
        if (redo[i] != nd.out[i]) return false;
    }
    return true;
  }

  /// Accumulates d(seed·root)/dp into every reachable Parameter's grad.
  void backward(ValueId root, const Tensor& seed) {
    const Node& top = node(root);
    if (!seed.same_shape(top.out))
      throw ShapeError("backward: seed shape " + seed.shape().str() +
                       " does not match output shape " + top.out.shape().str());
    std::vector<Tensor> adj(nodes_.size());
    std::vector<char> has(nodes_.size(), 0);
    adj[root] = seed;
    has[root] = 1;
    for (std::size_t i = root + 1; i-- > 0;) {
      if (!has[i]) continue;
      const Node& nd = nodes_[i];
      const Tensor& g = adj[i];
      if (nd.leaf) {
        if (nd.param != nullptr) axpy_into(nd.param->grad, g);
        continue;
      }
      propagate(nd, g, adj, has);
    }
  }

 private:
  struct Node {
    bool leaf;
    Parameter* param;
    OpKind kind;
    std::vector<ValueId> args;
    std::size_t mode;
    Tensor out;
  };

  const Node& node(ValueId id) const {
    if (id >= nodes_.size())
      throw std::invalid_argument("tape value id out of range");
    return nodes_[id];
  }

  static Tensor eval(OpKind kind, const std::vector<const Tensor*>& ins,
                     std::size_t mode) {
    auto arity = [&](std::size_t n) {
      if (ins.size() != n)
        throw std::invalid_argument(std::string(op_name(kind)) + ": expected " +
                                    std::to_string(n) + " inputs, got " +
                                    std::to_string(ins.size()));
    };
    switch (kind) {
      case OpKind::MatVec: arity(2); return mmf::matvec(*ins[0], *ins[1]);
      case OpKind::MatVecT: arity(2); return mmf::matvec_t(*ins[0], *ins[1]);
      case OpKind::KMode: arity(2); return mmf::kmode_product(*ins[0], *ins[1], mode);
      case OpKind::Outer: {
        std::vector<Tensor> vs;
        vs.reserve(ins.size());
        for (const Tensor* t : ins) vs.push_back(*t);
        return mmf::outer_product(std::span<const Tensor>(vs));
      }
      case OpKind::Tanh: arity(1); return tanh_map(*ins[0]);
      case OpKind::Relu: arity(1); return relu_map(*ins[0]);
      case OpKind::Sigmoid: arity(1); return sigmoid_map(*ins[0]);
      case OpKind::Concat: {
        std::vector<Tensor> vs;
        vs.reserve(ins.size());
        for (const Tensor* t : ins) vs.push_back(*t);
        return mmf::concat(std::span<const Tensor>(vs));
      }
      case OpKind::PadOne: arity(1); return mmf::pad_one(*ins[0]);
      case OpKind::Add: arity(2); return mmf::add(*ins[0], *ins[1]);
      case OpKind::Hadamard: arity(2); return mmf::hadamard(*ins[0], *ins[1]);
      case OpKind::Flatten: arity(1); return mmf::flatten(*ins[0]);
    }
    throw std::invalid_argument("unsupported operation kind " +
                                std::to_string(static_cast<int>(kind)));
  }

  void accumulate(std::vector<Tensor>& adj, std::vector<char>& has, ValueId id,
                  const Tensor& g) {
    if (!has[id]) {
      adj[id] = Tensor(nodes_[id].out.shape());
      has[id] = 1;
    }
    axpy_into(adj[id], g);
  }

  void propagate(const Node& nd, const Tensor& g, std::vector<Tensor>& adj,
                 std::vector<char>& has) {
    switch (nd.kind) {
      case OpKind::MatVec: {  // y = M x
        const Tensor& m = nodes_[nd.args[0]].out;
        const Tensor& x = nodes_[nd.args[1]].out;
        accumulate(adj, has, nd.args[0], mmf::outer_product({g, x}));
        accumulate(adj, has, nd.args[1], mmf::matvec_t(m, g));
        return;
      }
      case OpKind::MatVecT: {  // y = Mᵀ x
        const Tensor& m = nodes_[nd.args[0]].out;
        const Tensor& x = nodes_[nd.args[1]].out;
        accumulate(adj, has, nd.args[0], mmf::outer_product({x, g}));
        accumulate(adj, has, nd.args[1], mmf::matvec(m, g));
        return;
      }
      case OpKind::KMode: {  // y = t ×_k M
        const Tensor& t = nodes_[nd.args[0]].out;
        const Tensor& m = nodes_[nd.args[1]].out;
        accumulate(adj, has, nd.args[0], mmf::kmode_product(g, transpose(m), nd.mode));
        // dM = unfold(g,k) · unfold(t,k)ᵀ — the matricized outer-product form.
        accumulate(adj, has, nd.args[1],
                   mmf::matmul(unfold(g, nd.mode), transpose(unfold(t, nd.mode))));
        return;
      }
      case OpKind::Outer: {
        const std::size_t m_count = nd.args.size();
        std::vector<const Tensor*> vs(m_count);
        for (std::size_t m = 0; m < m_count; ++m) vs[m] = &nodes_[nd.args[m]].out;
        std::vector<Tensor> dv;
        dv.reserve(m_count);
        for (std::size_t m = 0; m < m_count; ++m) dv.emplace_back(vs[m]->shape());
        std::vector<std::size_t> idx(m_count, 0);
        for (std::size_t flat = 0; flat < g.size(); ++flat) {
          const double gv = g[flat];
          if (gv != 0.0) {
            for (std::size_t m = 0; m < m_count; ++m) {
              double p = gv;
              for (std::size_t j = 0; j < m_count; ++j)
                if (j != m) p *= (*vs[j])[idx[j]];
              dv[m][idx[m]] += p;
            }
          }
          for (std::size_t m = m_count; m-- > 0;) {
            if (++idx[m] < vs[m]->size()) break;
            idx[m] = 0;
          }
        }
        for (std::size_t m = 0; m < m_count; ++m)
          accumulate(adj, has, nd.args[m], dv[m]);
        return;
      }
      case OpKind::Tanh: {
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i)
          dx[i] *= 1.0 - nd.out[i] * nd.out[i];
        accumulate(adj, has, nd.args[0], dx);
        return;
      }
      case OpKind::Relu: {
        const Tensor& x = nodes_[nd.args[0]].out;
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i)
          if (x[i] <= 0.0) dx[i] = 0.0;
        accumulate(adj, has, nd.args[0], dx);
        return;
      }
      case OpKind::Sigmoid: {
        Tensor dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i)
          dx[i] *= nd.out[i] * (1.0 - nd.out[i]);
        accumulate(adj, has, nd.args[0], dx);
        return;
      }
      case OpKind::Concat: {
        std::size_t off = 0;
        for (ValueId a : nd.args) {
          const std::size_t len = nodes_[a].out.size();
          Tensor slice(Shape({len}));
          std::copy(g.data() + off, g.data() + off + len, slice.data());
          accumulate(adj, has, a, slice);
          off += len;
        }
        return;
      }
      case OpKind::PadOne: {
        const std::size_t len = nodes_[nd.args[0]].out.size();
        Tensor dx(Shape({len}));
        std::copy(g.data() + 1, g.data() + 1 + len, dx.data());
        accumulate(adj, has, nd.args[0], dx);
        return;
      }
      case OpKind::Add:
        accumulate(adj, has, nd.args[0], g);
        accumulate(adj, has, nd.args[1], g);
        return;
      case OpKind::Hadamard: {
        const Tensor& a = nodes_[nd.args[0]].out;
        const Tensor& b = nodes_[nd.args[1]].out;
        accumulate(adj, has, nd.args[0], mmf::hadamard(g, b));
        accumulate(adj, has, nd.args[1], mmf::hadamard(g, a));
        return;
      }
      case OpKind::Flatten: {
        accumulate(adj, has, nd.args[0],
                   g.reshaped(nodes_[nd.args[0]].out.shape()));
        return;
      }
    }
    throw std::invalid_argument("unsupported operation in backward");
  }

  std::vector<Node> nodes_;
};

/// Central finite differences of a scalar functional w.r.t. one parameter:
/// entry i = (f(p+eps·e_i) − f(p−eps·e_i)) / (2·eps). The verification oracle
/// for every analytic adjoint.
inline Tensor finite_diff_grad(const std::function<double()>& f, Parameter& p,
                               double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be > 0");
  Tensor out(p.value.shape());
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    p.value[i] = saved + eps;
    const double fp = f();
    p.value[i] = saved - eps;
    const double fm = f();
    p.value[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: non-finite functional value at parameter '" +
                         p.name + "' entry " + std::to_string(i));
    out[i] = (fp - fm) / (2.0 * eps);
  }
  return out;
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
  return std::fabs(analytic - numeric) / denom;
}

struct GradCheckEntry {
  std::string param;
  double max_rel_err;
  bool pass;
};

struct GradCheckReport {
  double eps = 0.0;
  double tol = 0.0;
  std::vector<GradCheckEntry> entries;
  bool pass = true;

  std::string str() const {
    std::string s;
    for (const GradCheckEntry& e : entries) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3e", e.max_rel_err);
      s += (e.pass ? "pass " : "FAIL ") + e.param + " max_rel_err=" + buf + "\n";
    }
    s += pass ? "grad check: pass\n" : "grad check: FAIL\n";
    return s;
  }
};

/// Compares analytic gradients against central finite differences for every
/// parameter. `loss` must be a deterministic pure re-evaluation;
/// `backward_pass` must populate grads for exactly one evaluation of `loss`.
/// `corrupt` flips the sign of the named parameter's analytic gradient — a
/// negative control for the checker itself.
inline GradCheckReport grad_check(std::span<Parameter* const> params,
                                  const std::function<double()>& loss,
                                  const std::function<void()>& backward_pass,
                                  double eps, double tol,
                                  std::string_view corrupt = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("grad_check: tol must be > 0");
  for (Parameter* p : params) p->zero_grad();
  backward_pass();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) {
    Tensor g = p->grad;
    if (!corrupt.empty() && p->name == corrupt)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i];
    analytic.push_back(std::move(g));
  }
  GradCheckReport report;
  report.eps = eps;
  report.tol = tol;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor numeric = finite_diff_grad(loss, *params[pi], eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, relative_error(analytic[pi][i], numeric[i]));
    const bool ok = worst < tol;
    report.entries.push_back({params[pi]->name, worst, ok});
    report.pass = report.pass && ok;
  }
  return report;
}

}  // namespace mmf
