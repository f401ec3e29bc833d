#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "amazonnet/errors.hpp"
#include "amazonnet/rng.hpp"

namespace amazonnet {

using Shape = std::vector<int64_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

inline void check_shape_valid(const Shape& s) {
  if (s.empty() || s.size() > 4)
    throw ShapeError("tensor rank must be 1..4, got " + shape_str(s));
  for (int64_t e : s)
    if (e < 1) throw ShapeError("tensor extents must be >= 1, got " + shape_str(s));
}

// Dense row-major tensor. Conv tensors use [batch, channel, height, width].
// Forward ops never mutate input buffers; gradients accumulate additively.
template <typename S>
struct TensorT {
  Shape shape;
  std::vector<S> data;
  bool requires_grad = false;
  std::vector<S> grad;                 // empty until first accumulation
  const void* tape_tag = nullptr;      // tape that produced this tensor

  TensorT() = default;
  explicit TensorT(Shape s) : shape(std::move(s)) {
    check_shape_valid(shape);
    data.assign(static_cast<size_t>(shape_numel(shape)), S(0));
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
  void zero_grad() { grad.assign(data.size(), S(0)); }
  bool has_grad() const { return grad.size() == data.size(); }
};

template <typename S>
using TensorPtr = std::shared_ptr<TensorT<S>>;

template <typename S>
TensorPtr<S> make_tensor(Shape shape) {
  return std::make_shared<TensorT<S>>(std::move(shape));
}

template <typename S>
void check_all_finite(const TensorT<S>& t, const char* op) {
  for (S v : t.data)
    if (!std::isfinite(v))
      throw NumericError(std::string(op) + " produced a non-finite value");
}

// Reverse-mode tape: one record per executed op, in execution order, each
// holding the closure that applies its backward rule. Backward replays the
// records exactly once, in reverse.
template <typename S>
class TapeT {
 public:
  void record(const TensorPtr<S>& out, std::function<void()> backward_fn) {
    out->tape_tag = this;
    entries_.push_back(std::move(backward_fn));
  }

  size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the records in reverse. Every
  // requires_grad tensor reachable from loss ends with grad accumulated.
  void backward(const TensorPtr<S>& loss) {
    if (loss->numel() != 1)
      throw ContractError("backward requires a scalar loss, got shape " +
                          shape_str(loss->shape));
    if (entries_.empty() || loss->tape_tag != this)
      throw ContractError("backward on a loss detached from this tape");
    loss->ensure_grad();
    loss->grad[0] += S(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }

 private:
  std::vector<std::function<void()>> entries_;
};

// ---- basic constructors ----

template <typename S>
TensorPtr<S> zeros(const Shape& shape) {
  return make_tensor<S>(shape);
}

template <typename S>
TensorPtr<S> ones(const Shape& shape) {
  auto t = make_tensor<S>(shape);
  std::fill(t->data.begin(), t->data.end(), S(1));
  return t;
}

template <typename S>
TensorPtr<S> full(const Shape& shape, S value) {
  auto t = make_tensor<S>(shape);
  std::fill(t->data.begin(), t->data.end(), value);
  return t;
}

template <typename S>
TensorPtr<S> randn(const Shape& shape, Rng& rng, double mean = 0.0, double std = 1.0) {
  auto t = make_tensor<S>(shape);
  for (auto& v : t->data) v = static_cast<S>(mean + std * rng.next_gaussian());
  return t;
}

template <typename S>
TensorPtr<S> from_values(const Shape& shape, const std::vector<S>& values) {
  auto t = make_tensor<S>(shape);
  if (static_cast<int64_t>(values.size()) != t->numel())
    throw ShapeError("from_values: buffer length does not match shape");
  t->data = values;
  return t;
}

// ---- elementwise ops ----

template <typename S>
void check_same_shape(const TensorT<S>& a, const TensorT<S>& b, const char* op) {
  if (a.shape != b.shape)
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
}

template <typename S>
TensorPtr<S> add(TapeT<S>* tape, const TensorPtr<S>& a, const TensorPtr<S>& b) {
  check_same_shape(*a, *b, "add");
  auto out = make_tensor<S>(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] + b->data[i];
  check_all_finite(*out, "add");
  out->requires_grad = a->requires_grad || b->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

template <typename S>
TensorPtr<S> mul(TapeT<S>* tape, const TensorPtr<S>& a, const TensorPtr<S>& b) {
  check_same_shape(*a, *b, "mul");
  auto out = make_tensor<S>(a->shape);
  for (size_t i = 0; i < out->data.size(); ++i) out->data[i] = a->data[i] * b->data[i];
  check_all_finite(*out, "mul");
  out->requires_grad = a->requires_grad || b->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += b->data[i] * out->grad[i];
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += a->data[i] * out->grad[i];
      }
    });
  }
  return out;
}

// Subgradient at x == 0 is 0.
template <typename S>
TensorPtr<S> relu(TapeT<S>* tape, const TensorPtr<S>& x) {
  auto out = make_tensor<S>(x->shape);
  for (size_t i = 0; i < out->data.size(); ++i)
    out->data[i] = x->data[i] > S(0) ? x->data[i] : S(0);
  check_all_finite(*out, "relu");
  out->requires_grad = x->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [x, out] {
      x->ensure_grad();
      for (size_t i = 0; i < x->grad.size(); ++i)
        if (x->data[i] > S(0)) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <typename S>
TensorPtr<S> sigmoid(TapeT<S>* tape, const TensorPtr<S>& x) {
  auto out = make_tensor<S>(x->shape);
  for (size_t i = 0; i < out->data.size(); ++i) {
    const S v = x->data[i];
    // Stable in both tails: never exponentiates a large positive argument.
    if (v >= S(0)) {
      out->data[i] = S(1) / (S(1) + std::exp(-v));
    } else {
      const S e = std::exp(v);
      out->data[i] = e / (S(1) + e);
    }
  }
  check_all_finite(*out, "sigmoid");
  out->requires_grad = x->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [x, out] {
      x->ensure_grad();
      for (size_t i = 0; i < x->grad.size(); ++i) {
        const S s = out->data[i];
        x->grad[i] += s * (S(1) - s) * out->grad[i];
      }
    });
  }
  return out;
}

template <typename S>
TensorPtr<S> sum(TapeT<S>* tape, const TensorPtr<S>& x) {
  auto out = make_tensor<S>(Shape{1});
  S acc = S(0);
  for (S v : x->data) acc += v;
  out->data[0] = acc;
  check_all_finite(*out, "sum");
  out->requires_grad = x->requires_grad;
  if (tape && out->requires_grad) {
    tape->record(out, [x, out] {
      x->ensure_grad();
      const S g = out->grad[0];
      for (auto& gv : x->grad) gv += g;
    });
  }
  return out;
}

// Concatenate rank-4 tensors along the channel axis. Batch/height/width must
// agree; backward slices the gradient back onto each part.
template <typename S>
TensorPtr<S> concat_channels(TapeT<S>* tape, const std::vector<TensorPtr<S>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  for (const auto& p : parts)
    if (p->shape.size() != 4)
      throw ShapeError("concat_channels: all parts must be rank 4, got " +
                       shape_str(p->shape));
  const int64_t n = parts[0]->shape[0];
  const int64_t h = parts[0]->shape[2];
  const int64_t w = parts[0]->shape[3];
  int64_t c_total = 0;
  for (const auto& p : parts) {
    if (p->shape[0] != n || p->shape[2] != h || p->shape[3] != w)
      throw ShapeError("concat_channels: non-channel dims mismatch " +
                       shape_str(parts[0]->shape) + " vs " + shape_str(p->shape));
    c_total += p->shape[1];
  }
  auto out = make_tensor<S>(Shape{n, c_total, h, w});
  const int64_t plane = h * w;
  bool needs_grad = false;
  for (int64_t ni = 0; ni < n; ++ni) {
    int64_t c_off = 0;
    for (const auto& p : parts) {
      const int64_t pc = p->shape[1];
      const S* src = p->data.data() + ni * pc * plane;
      S* dst = out->data.data() + (ni * c_total + c_off) * plane;
      std::copy(src, src + pc * plane, dst);
      c_off += pc;
    }
  }
  for (const auto& p : parts) needs_grad = needs_grad || p->requires_grad;
  out->requires_grad = needs_grad;
  if (tape && needs_grad) {
    tape->record(out, [parts, out, n, c_total, plane] {
      for (int64_t ni = 0; ni < n; ++ni) {
        int64_t c_off = 0;
        for (const auto& p : parts) {
          const int64_t pc = p->shape[1];
          if (p->requires_grad) {
            p->ensure_grad();
            const S* g = out->grad.data() + (ni * c_total + c_off) * plane;
            S* dst = p->grad.data() + ni * pc * plane;
            for (int64_t i = 0; i < pc * plane; ++i) dst[i] += g[i];
          }
          c_off += pc;
        }
      }
    });
  }
  return out;
}

// ---- gradient checking ----

template <typename S>
struct GradCheckReport {
  bool deterministic = true;   // f evaluated twice gave bit-identical output
  bool passed = false;
  S max_rel_err = S(0);
  size_t worst_index = 0;
  size_t checked = 0;
  std::vector<size_t> excluded;
};

// Compares the analytic gradient of scalar-valued f w.r.t. x against central
// finite differences. f must be deterministic (dropout disabled); elements
// matched by `exclude` (e.g. relu inputs within `step` of the kink) are
// reported as excluded rather than failed.
template <typename S>
GradCheckReport<S> grad_check(
    const std::function<TensorPtr<S>(TapeT<S>*, const TensorPtr<S>&)>& f,
    const TensorPtr<S>& x, S step, S tol,
    const std::function<bool(size_t)>& exclude = nullptr) {
  GradCheckReport<S> report;

  const S base0 = f(nullptr, x)->data[0];
  const S base1 = f(nullptr, x)->data[0];
  if (std::memcmp(&base0, &base1, sizeof(S)) != 0) {
    report.deterministic = false;
    return report;
  }

  x->requires_grad = true;
  x->zero_grad();
  TapeT<S> tape;
  auto loss = f(&tape, x);
  if (loss->numel() != 1) throw ContractError("grad_check: f must be scalar-valued");
  tape.backward(loss);
  std::vector<S> analytic = x->grad;

  for (size_t i = 0; i < x->data.size(); ++i) {
    if (exclude && exclude(i)) {
      report.excluded.push_back(i);
      continue;
    }
    const S saved = x->data[i];
    x->data[i] = saved + step;
    const S fp = f(nullptr, x)->data[0];
    x->data[i] = saved - step;
    const S fm = f(nullptr, x)->data[0];
    x->data[i] = saved;
    const S numeric = (fp - fm) / (S(2) * step);
    const S a = analytic[i];
    const S denom = std::max(std::abs(a), std::abs(numeric));
    const S err = denom < S(1e-8) ? std::abs(a - numeric)
                                  : std::abs(a - numeric) / denom;
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_index = i;
    }
    ++report.checked;
  }
  report.passed = report.deterministic && report.max_rel_err < tol;
  return report;
}

}  // namespace amazonnet
