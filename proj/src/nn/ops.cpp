#include "windcast/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "windcast/common/error.hpp"
#include "windcast/common/rng.hpp"

namespace windcast::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

// ---------------------------------------------------------------- broadcast

struct BroadcastPlan {
    enum class Mode { Same, RepeatB, RepeatA, General };
    Mode mode = Mode::Same;
    Shape out;
    std::size_t a_size = 0;
    std::size_t b_size = 0;
    std::shared_ptr<std::vector<std::size_t>> a_index;
    std::shared_ptr<std::vector<std::size_t>> b_index;
};

bool is_suffix(const Shape& small, const Shape& big) {
    // strip leading unit dims of the smaller shape
    std::size_t lead = 0;
    while (lead < small.size() && small[lead] == 1 && small.size() - lead > 0) ++lead;
    const std::size_t n = small.size() - lead;
    if (n > big.size()) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (small[lead + i] != big[big.size() - n + i]) return false;
    }
    return small.size() <= big.size();
}

BroadcastPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
    BroadcastPlan plan;
    plan.a_size = shape_size(a);
    plan.b_size = shape_size(b);
    if (a == b) {
        plan.out = a;
        return plan;
    }
    if (is_suffix(b, a)) {
        plan.mode = BroadcastPlan::Mode::RepeatB;
        plan.out = a;
        return plan;
    }
    if (is_suffix(a, b)) {
        plan.mode = BroadcastPlan::Mode::RepeatA;
        plan.out = b;
        return plan;
    }
    const std::size_t rank = std::max(a.size(), b.size());
    Shape pa(rank, 1), pb(rank, 1);
    std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
    std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
    plan.out.assign(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        if (pa[i] == pb[i] || pb[i] == 1) {
            plan.out[i] = pa[i];
        } else if (pa[i] == 1) {
            plan.out[i] = pb[i];
        } else {
            shape_error(op, a, b);
        }
    }
    std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
    std::size_t acc_a = 1, acc_b = 1;
    for (std::size_t i = rank; i-- > 0;) {
        sa[i] = pa[i] == 1 ? 0 : acc_a;
        sb[i] = pb[i] == 1 ? 0 : acc_b;
        acc_a *= pa[i];
        acc_b *= pb[i];
    }
    const std::size_t n = shape_size(plan.out);
    plan.mode = BroadcastPlan::Mode::General;
    plan.a_index = std::make_shared<std::vector<std::size_t>>(n);
    plan.b_index = std::make_shared<std::vector<std::size_t>>(n);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t oa = 0, ob = 0;
    for (std::size_t k = 0; k < n; ++k) {
        (*plan.a_index)[k] = oa;
        (*plan.b_index)[k] = ob;
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            oa += sa[d];
            ob += sb[d];
            if (idx[d] < plan.out[d]) break;
            oa -= sa[d] * idx[d];
            ob -= sb[d] * idx[d];
            idx[d] = 0;
        }
    }
    return plan;
}

template <typename F>
void for_each_pair(const BroadcastPlan& plan, F&& f) {
    const std::size_t n = shape_size(plan.out);
    switch (plan.mode) {
    case BroadcastPlan::Mode::Same:
        for (std::size_t i = 0; i < n; ++i) f(i, i, i);
        break;
    case BroadcastPlan::Mode::RepeatB:
        for (std::size_t i = 0; i < n; ++i) f(i, i, i % plan.b_size);
        break;
    case BroadcastPlan::Mode::RepeatA:
        for (std::size_t i = 0; i < n; ++i) f(i, i % plan.a_size, i);
        break;
    case BroadcastPlan::Mode::General: {
        const auto& ai = *plan.a_index;
        const auto& bi = *plan.b_index;
        for (std::size_t i = 0; i < n; ++i) f(i, ai[i], bi[i]);
        break;
    }
    }
}

enum class BinaryKind { Add, Sub, Mul };

Var binary(const char* op, BinaryKind kind, Var a, Var b) {
    Tape& tape = a.tape();
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    BroadcastPlan plan = plan_broadcast(op, av.shape(), bv.shape());
    Tensor out(plan.out);
    double* o = out.data();
    const double* pa = av.data();
    const double* pb = bv.data();
    switch (kind) {
    case BinaryKind::Add:
        for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] + pb[ib]; });
        break;
    case BinaryKind::Sub:
        for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] - pb[ib]; });
        break;
    case BinaryKind::Mul:
        for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = pa[ia] * pb[ib]; });
        break;
    }
    const std::size_t ida = a.id(), idb = b.id();
    return tape.record(std::move(out), {a, b}, [plan, ida, idb, kind](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        double* ga = t.grad_sink(ida);
        double* gb = t.grad_sink(idb);
        const double* va = t.value(ida).data();
        const double* vb = t.value(idb).data();
        switch (kind) {
        case BinaryKind::Add:
            for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                if (ga) ga[ia] += g[i];
                if (gb) gb[ib] += g[i];
            });
            break;
        case BinaryKind::Sub:
            for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                if (ga) ga[ia] += g[i];
                if (gb) gb[ib] -= g[i];
            });
            break;
        case BinaryKind::Mul:
            for_each_pair(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                if (ga) ga[ia] += g[i] * vb[ib];
                if (gb) gb[ib] += g[i] * va[ia];
            });
            break;
        }
    });
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    Tape& tape = a.tape();
    const Tensor& av = a.value();
    Tensor out(av.shape());
    const double* x = av.data();
    double* y = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) y[i] = fwd(x[i]);
    const std::size_t ida = a.id();
    return tape.record(std::move(out), {a}, [ida, deriv](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double* g = t.grad(self).data();
        const double* xv = t.value(ida).data();
        const double* yv = t.value(self).data();
        const std::size_t n = t.value(self).size();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * deriv(xv[i], yv[i]);
    });
}

// product of dims before axis, the axis itself, and after it
struct AxisSplit {
    std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

} // namespace

Var add(Var a, Var b) { return binary("add", BinaryKind::Add, a, b); }
Var sub(Var a, Var b) { return binary("sub", BinaryKind::Sub, a, b); }
Var mul(Var a, Var b) { return binary("mul", BinaryKind::Mul, a, b); }

Var scale(Var a, double factor) {
    return unary(
        a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
    return unary(
        a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var matmul(Var a, Var b) {
    Tape& tape = a.tape();
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const Shape& sa = av.shape();
    const Shape& sb = bv.shape();
    if (sa.empty() || sb.size() < 2) shape_error("matmul", sa, sb);

    if (sb.size() == 2) {
        const std::size_t k = sb[0], m = sb[1];
        if (sa.back() != k) shape_error("matmul", sa, sb);
        const std::size_t rows = av.size() / (k == 0 ? 1 : k);
        Shape so = sa;
        so.back() = m;
        Tensor out(so);
        const double* pa = av.data();
        const double* pb = bv.data();
        double* po = out.data();
        for (std::size_t r = 0; r < rows; ++r) {
            double* orow = po + r * m;
            const double* arow = pa + r * k;
            for (std::size_t q = 0; q < k; ++q) {
                const double x = arow[q];
                if (x == 0.0) continue;
                const double* brow = pb + q * m;
                for (std::size_t j = 0; j < m; ++j) orow[j] += x * brow[j];
            }
        }
        const std::size_t ida = a.id(), idb = b.id();
        return tape.record(std::move(out), {a, b}, [ida, idb, rows, k, m](Tape& t, std::size_t self) {
            const double* g = t.grad(self).data();
            if (double* ga = t.grad_sink(ida)) {
                const double* pb2 = t.value(idb).data();
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* grow = g + r * m;
                    double* garow = ga + r * k;
                    for (std::size_t q = 0; q < k; ++q) {
                        const double* brow = pb2 + q * m;
                        double acc = 0.0;
                        for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
                        garow[q] += acc;
                    }
                }
            }
            if (double* gb = t.grad_sink(idb)) {
                const double* pa2 = t.value(ida).data();
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* grow = g + r * m;
                    const double* arow = pa2 + r * k;
                    for (std::size_t q = 0; q < k; ++q) {
                        const double x = arow[q];
                        if (x == 0.0) continue;
                        double* gbrow = gb + q * m;
                        for (std::size_t j = 0; j < m; ++j) gbrow[j] += x * grow[j];
                    }
                }
            }
        });
    }

    // batched
    if (sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()) ||
        sa[sa.size() - 1] != sb[sb.size() - 2]) {
        shape_error("matmul", sa, sb);
    }
    const std::size_t n = sa[sa.size() - 2], k = sa.back(), m = sb.back();
    const std::size_t batches = av.size() / std::max<std::size_t>(n * k, 1);
    Shape so = sa;
    so.back() = m;
    Tensor out(so);
    {
        const double* pa = av.data();
        const double* pb = bv.data();
        double* po = out.data();
        for (std::size_t bt = 0; bt < batches; ++bt) {
            const double* A = pa + bt * n * k;
            const double* B = pb + bt * k * m;
            double* O = po + bt * n * m;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t q = 0; q < k; ++q) {
                    const double x = A[i * k + q];
                    for (std::size_t j = 0; j < m; ++j) O[i * m + j] += x * B[q * m + j];
                }
        }
    }
    const std::size_t ida = a.id(), idb = b.id();
    return tape.record(std::move(out), {a, b}, [ida, idb, batches, n, k, m](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        const double* pa = t.value(ida).data();
        const double* pb = t.value(idb).data();
        double* ga = t.grad_sink(ida);
        double* gb = t.grad_sink(idb);
        for (std::size_t bt = 0; bt < batches; ++bt) {
            const double* A = pa + bt * n * k;
            const double* B = pb + bt * k * m;
            const double* G = g + bt * n * m;
            if (ga) {
                double* GA = ga + bt * n * k;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t q = 0; q < k; ++q) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < m; ++j) acc += G[i * m + j] * B[q * m + j];
                        GA[i * k + q] += acc;
                    }
            }
            if (gb) {
                double* GB = gb + bt * k * m;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t q = 0; q < k; ++q) {
                        const double x = A[i * k + q];
                        for (std::size_t j = 0; j < m; ++j) GB[q * m + j] += x * G[i * m + j];
                    }
            }
        }
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    const Shape& s = av.shape();
    if (s.size() < 2) throw Error(ErrorKind::ShapeMismatch, "transpose needs rank >= 2, got " + to_string(s));
    const std::size_t r = s[s.size() - 2], c = s.back();
    const std::size_t batches = av.size() / std::max<std::size_t>(r * c, 1);
    Shape so = s;
    std::swap(so[so.size() - 2], so[so.size() - 1]);
    Tensor out(so);
    for (std::size_t b = 0; b < batches; ++b)
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = av[b * r * c + i * c + j];
    const std::size_t ida = a.id();
    return a.tape().record(std::move(out), {a}, [ida, batches, r, c](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double* g = t.grad(self).data();
        for (std::size_t b = 0; b < batches; ++b)
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ga[b * r * c + i * c + j] += g[b * r * c + j * r + i];
    });
}

Var reshape(Var a, Shape shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    const std::size_t ida = a.id();
    return a.tape().record(std::move(out), {a}, [ida](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const Tensor& g = t.grad(self);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw Error(ErrorKind::EmptyFeatureList, "concat of zero tensors");
    const Shape& s0 = parts.front().shape();
    if (axis >= s0.size()) throw Error(ErrorKind::ShapeMismatch, "concat axis out of range for " + to_string(s0));
    std::vector<std::size_t> extents;
    std::size_t total = 0;
    for (const Var& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != s0.size()) shape_error("concat", s0, s);
        for (std::size_t d = 0; d < s.size(); ++d)
            if (d != axis && s[d] != s0[d]) shape_error("concat", s0, s);
        extents.push_back(s[axis]);
        total += s[axis];
    }
    Shape so = s0;
    so[axis] = total;
    const AxisSplit sp = split_axis(so, axis);
    Tensor out(so);
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const double* src = parts[pi].value().data();
        const std::size_t ext = extents[pi];
        for (std::size_t o = 0; o < sp.outer; ++o) {
            std::copy_n(src + o * ext * sp.inner, ext * sp.inner,
                        out.data() + (o * total + offset) * sp.inner);
        }
        offset += ext;
    }
    std::vector<std::size_t> ids;
    for (const Var& p : parts) ids.push_back(p.id());
    return parts.front().tape().record(std::move(out), parts, [ids, extents, sp, total](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < ids.size(); ++pi) {
            const std::size_t ext = extents[pi];
            if (double* gp = t.grad_sink(ids[pi])) {
                for (std::size_t o = 0; o < sp.outer; ++o) {
                    const double* src = g + (o * total + off) * sp.inner;
                    double* dst = gp + o * ext * sp.inner;
                    for (std::size_t i = 0; i < ext * sp.inner; ++i) dst[i] += src[i];
                }
            }
            off += ext;
        }
    });
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length) {
    const Tensor& av = a.value();
    const Shape& s = av.shape();
    if (axis >= s.size() || start + length > s[axis]) {
        throw Error(ErrorKind::ShapeMismatch, "slice [" + std::to_string(start) + ", " +
                                                  std::to_string(start + length) + ") on axis " +
                                                  std::to_string(axis) + " of " + to_string(s));
    }
    const AxisSplit sp = split_axis(s, axis);
    Shape so = s;
    so[axis] = length;
    Tensor out(so);
    for (std::size_t o = 0; o < sp.outer; ++o) {
        std::copy_n(av.data() + (o * sp.extent + start) * sp.inner, length * sp.inner,
                    out.data() + o * length * sp.inner);
    }
    const std::size_t ida = a.id();
    return a.tape().record(std::move(out), {a}, [ida, sp, start, length](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double* g = t.grad(self).data();
        for (std::size_t o = 0; o < sp.outer; ++o) {
            double* dst = ga + (o * sp.extent + start) * sp.inner;
            const double* src = g + o * length * sp.inner;
            for (std::size_t i = 0; i < length * sp.inner; ++i) dst[i] += src[i];
        }
    });
}

namespace {

Var reduce_axis(Var a, std::size_t axis, double factor_scale) {
    const Tensor& av = a.value();
    const Shape& s = av.shape();
    if (axis >= s.size()) throw Error(ErrorKind::ShapeMismatch, "reduction axis out of range for " + to_string(s));
    const AxisSplit sp = split_axis(s, axis);
    Shape so;
    for (std::size_t d = 0; d < s.size(); ++d)
        if (d != axis) so.push_back(s[d]);
    Tensor out(so);
    const double f = factor_scale > 0 ? factor_scale : 1.0 / static_cast<double>(std::max<std::size_t>(sp.extent, 1));
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t e = 0; e < sp.extent; ++e)
            for (std::size_t i = 0; i < sp.inner; ++i)
                out[o * sp.inner + i] += f * av[(o * sp.extent + e) * sp.inner + i];
    const std::size_t ida = a.id();
    return a.tape().record(std::move(out), {a}, [ida, sp, f](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double* g = t.grad(self).data();
        for (std::size_t o = 0; o < sp.outer; ++o)
            for (std::size_t e = 0; e < sp.extent; ++e)
                for (std::size_t i = 0; i < sp.inner; ++i)
                    ga[(o * sp.extent + e) * sp.inner + i] += f * g[o * sp.inner + i];
    });
}

Var reduce_all(Var a, bool average) {
    const Tensor& av = a.value();
    double acc = 0.0;
    for (double x : av.values()) acc += x;
    const double f = average ? 1.0 / static_cast<double>(std::max<std::size_t>(av.size(), 1)) : 1.0;
    const std::size_t ida = a.id();
    return a.tape().record(Tensor::scalar(acc * f), {a}, [ida, f](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double g = t.grad(self)[0] * f;
        const std::size_t n = t.value(ida).size();
        for (std::size_t i = 0; i < n; ++i) ga[i] += g;
    });
}

} // namespace

Var sum(Var a, std::size_t axis) { return reduce_axis(a, axis, 1.0); }
Var mean(Var a, std::size_t axis) { return reduce_axis(a, axis, -1.0); }
Var sum_all(Var a) { return reduce_all(a, false); }
Var mean_all(Var a) { return reduce_all(a, true); }

Var elu(Var a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
        [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

Var sigmoid(Var a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var softmax(Var a) {
    const Tensor& av = a.value();
    if (av.rank() == 0) throw Error(ErrorKind::ShapeMismatch, "softmax of a scalar");
    const std::size_t d = av.shape().back();
    const std::size_t rows = d == 0 ? 0 : av.size() / d;
    Tensor out(av.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = av.data() + r * d;
        double* y = out.data() + r * d;
        double mx = x[0];
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, x[j]);
        double total = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            y[j] = std::exp(x[j] - mx);
            total += y[j];
        }
        for (std::size_t j = 0; j < d; ++j) y[j] /= total;
    }
    const std::size_t ida = a.id();
    return a.tape().record(std::move(out), {a}, [ida, rows, d](Tape& t, std::size_t self) {
        double* ga = t.grad_sink(ida);
        if (!ga) return;
        const double* g = t.grad(self).data();
        const double* y = t.value(self).data();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += g[r * d + j] * y[r * d + j];
            for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += y[r * d + j] * (g[r * d + j] - dot);
        }
    });
}

Var layer_norm(Var x, Var gain, Var bias) {
    const Tensor& xv = x.value();
    if (xv.rank() == 0) throw Error(ErrorKind::ShapeMismatch, "layer_norm of a scalar");
    const std::size_t d = xv.shape().back();
    if (gain.value().size() != d || bias.value().size() != d) {
        shape_error("layer_norm", xv.shape(), gain.shape());
    }
    const std::size_t rows = d == 0 ? 0 : xv.size() / d;
    Tensor out(xv.shape());
    auto xhat = std::make_shared<std::vector<double>>(xv.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    const double* gv = gain.value().data();
    const double* bv = bias.value().data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + kLayerNormEpsilon);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mu) * is;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = gv[j] * h + bv[j];
        }
    }
    const std::size_t idx = x.id(), idg = gain.id(), idb = bias.id();
    return x.tape().record(std::move(out), {x, gain, bias},
                           [idx, idg, idb, rows, d, xhat, inv_std](Tape& t, std::size_t self) {
        const double* g = t.grad(self).data();
        const double* gv2 = t.value(idg).data();
        double* gx = t.grad_sink(idx);
        double* gg = t.grad_sink(idg);
        double* gb = t.grad_sink(idb);
        const auto& h = *xhat;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = g + r * d;
            const double* hr = h.data() + r * d;
            if (gg)
                for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * hr[j];
            if (gb)
                for (std::size_t j = 0; j < d; ++j) gb[j] += gr[j];
            if (gx) {
                double mean_dh = 0.0, mean_dh_h = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = gr[j] * gv2[j];
                    mean_dh += dh;
                    mean_dh_h += dh * hr[j];
                }
                mean_dh /= static_cast<double>(d);
                mean_dh_h /= static_cast<double>(d);
                const double is = (*inv_std)[r];
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = gr[j] * gv2[j];
                    gx[r * d + j] += is * (dh - mean_dh - hr[j] * mean_dh_h);
                }
            }
        }
    });
}

Var dropout(Var x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) return x;
    const Tensor& xv = x.value();
    auto mask = std::make_shared<std::vector<double>>(xv.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double m = rng.uniform() < rate ? 0.0 : keep_scale;
        (*mask)[i] = m;
        out[i] = xv[i] * m;
    }
    const std::size_t idx = x.id();
    return x.tape().record(std::move(out), {x}, [idx, mask](Tape& t, std::size_t self) {
        double* gx = t.grad_sink(idx);
        if (!gx) return;
        const double* g = t.grad(self).data();
        for (std::size_t i = 0; i < mask->size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
}

Var embedding(Var table, std::span<const std::size_t> indices, const Shape& leading) {
    const Tensor& tv = table.value();
    if (tv.rank() != 2) throw Error(ErrorKind::ShapeMismatch, "embedding table must be 2-D, got " + to_string(tv.shape()));
    if (shape_size(leading) != indices.size()) {
        throw Error(ErrorKind::ShapeMismatch, "embedding: " + std::to_string(indices.size()) +
                                                  " indices for leading shape " + to_string(leading));
    }
    const std::size_t rows = tv.dim(0), d = tv.dim(1);
    Shape so = leading;
    so.push_back(d);
    Tensor out(so);
    auto idx = std::make_shared<std::vector<std::size_t>>(indices.begin(), indices.end());
    for (std::size_t i = 0; i < idx->size(); ++i) {
        const std::size_t r = (*idx)[i];
        if (r >= rows) {
            throw Error(ErrorKind::ShapeMismatch, "embedding index " + std::to_string(r) +
                                                      " out of range for table of " + std::to_string(rows) + " rows");
        }
        std::copy_n(tv.data() + r * d, d, out.data() + i * d);
    }
    const std::size_t idt = table.id();
    return table.tape().record(std::move(out), {table}, [idt, idx, d](Tape& t, std::size_t self) {
        double* gt = t.grad_sink(idt);
        if (!gt) return;
        const double* g = t.grad(self).data();
        for (std::size_t i = 0; i < idx->size(); ++i) {
            double* dst = gt + (*idx)[i] * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
        }
    });
}

} // namespace windcast::nn
