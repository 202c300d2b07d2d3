#include "casumm/graph.hpp"

#include <algorithm>
#include <cmath>

#include "casumm/errors.hpp"

namespace casumm::nn {

using detail::check;

namespace {

constexpr double kProbEps = 1e-12;   // clamp for log-domain losses
constexpr double kLayerNormEps = 1e-5;

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParameterStore

Parameter& ParameterStore::add(const std::string& name, std::vector<int> shape) {
    check(index_.find(name) == index_.end(), "duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor::zeros(shape);
    p->grad = Tensor::zeros(std::move(shape));
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParameterStore::add_uniform(const std::string& name, std::vector<int> shape,
                                       double scale, Rng& rng) {
    Parameter& p = add(name, std::move(shape));
    for (auto& x : p.value.v) x = rng.uniform(-scale, scale);
    return p;
}

Parameter* ParameterStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParameterStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

std::vector<Parameter*> ParameterStore::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

void ParameterStore::zero_grads() {
    for (auto& p : params_) p->grad.fill(0.0);
}

// ---------------------------------------------------------------------------
// Graph

Graph::Id Graph::emplace(Tensor val, std::function<void(Graph&)> back) {
    Node n;
    n.grad = Tensor::zeros(val.shape);
    n.val = std::move(val);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

const Tensor& Graph::value(Id id) const { return node(id).val; }
const Tensor& Graph::grad(Id id) const { return node(id).grad; }

double Graph::scalar_value(Id id) const {
    check(node(id).val.numel() == 1, "scalar_value: node is not a scalar");
    return node(id).val.v[0];
}

Graph::Id Graph::input(Tensor t) { return emplace(std::move(t), nullptr); }

Graph::Id Graph::param(Parameter& p) {
    Id id = emplace(p.value, nullptr);
    node(id).parameter = &p;
    node(id).back = [id](Graph& g) {
        Node& n = g.node(id);
        for (int i = 0; i < n.grad.numel(); ++i) n.parameter->grad.v[i] += n.grad.v[i];
    };
    return id;
}

Graph::Id Graph::add(Id a, Id b) {
    const Tensor& ta = node(a).val;
    const Tensor& tb = node(b).val;
    if (ta.same_shape(tb)) {
        Tensor out = ta;
        for (int i = 0; i < out.numel(); ++i) out.v[i] += tb.v[i];
        Id id = emplace(std::move(out), nullptr);
        node(id).back = [id, a, b](Graph& g) {
            const Tensor& gr = g.node(id).grad;
            Tensor& ga = g.node(a).grad;
            Tensor& gb = g.node(b).grad;
            for (int i = 0; i < gr.numel(); ++i) {
                ga.v[i] += gr.v[i];
                gb.v[i] += gr.v[i];
            }
        };
        return id;
    }
    if (tb.numel() == 1) {
        Tensor out = ta;
        double c = tb.v[0];
        for (auto& x : out.v) x += c;
        Id id = emplace(std::move(out), nullptr);
        node(id).back = [id, a, b](Graph& g) {
            const Tensor& gr = g.node(id).grad;
            Tensor& ga = g.node(a).grad;
            double s = 0.0;
            for (int i = 0; i < gr.numel(); ++i) {
                ga.v[i] += gr.v[i];
                s += gr.v[i];
            }
            g.node(b).grad.v[0] += s;
        };
        return id;
    }
    // row-vector broadcast: a is [r,c], b is [1,c] or [c]
    check(ta.shape.size() == 2 && tb.numel() == ta.cols(),
          "add: incompatible shapes " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor out = ta;
    int r = ta.rows(), c = ta.cols();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out.v[static_cast<std::size_t>(i) * c + j] += tb.v[j];
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, b, r, c](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        Tensor& gb = g.node(b).grad;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                double v = gr.v[static_cast<std::size_t>(i) * c + j];
                ga.v[static_cast<std::size_t>(i) * c + j] += v;
                gb.v[j] += v;
            }
    };
    return id;
}

Graph::Id Graph::sub(Id a, Id b) {
    const Tensor& ta = node(a).val;
    const Tensor& tb = node(b).val;
    check(ta.same_shape(tb), "sub: shape mismatch");
    Tensor out = ta;
    for (int i = 0; i < out.numel(); ++i) out.v[i] -= tb.v[i];
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, b](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        Tensor& gb = g.node(b).grad;
        for (int i = 0; i < gr.numel(); ++i) {
            ga.v[i] += gr.v[i];
            gb.v[i] -= gr.v[i];
        }
    };
    return id;
}

Graph::Id Graph::mul(Id a, Id b) {
    const Tensor& ta = node(a).val;
    const Tensor& tb = node(b).val;
    if (ta.same_shape(tb)) {
        Tensor out = ta;
        for (int i = 0; i < out.numel(); ++i) out.v[i] *= tb.v[i];
        Id id = emplace(std::move(out), nullptr);
        node(id).back = [id, a, b](Graph& g) {
            const Tensor& gr = g.node(id).grad;
            const Tensor& va = g.node(a).val;
            const Tensor& vb = g.node(b).val;
            Tensor& ga = g.node(a).grad;
            Tensor& gb = g.node(b).grad;
            for (int i = 0; i < gr.numel(); ++i) {
                ga.v[i] += gr.v[i] * vb.v[i];
                gb.v[i] += gr.v[i] * va.v[i];
            }
        };
        return id;
    }
    // single-element broadcast on either side
    Id big = a, small = b;
    if (node(a).val.numel() == 1 && node(b).val.numel() != 1) std::swap(big, small);
    check(node(small).val.numel() == 1,
          "mul: incompatible shapes " + ta.shape_str() + " vs " + tb.shape_str());
    Tensor out = node(big).val;
    double c = node(small).val.v[0];
    for (auto& x : out.v) x *= c;
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, big, small](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& vb = g.node(big).val;
        double c2 = g.node(small).val.v[0];
        Tensor& gbig = g.node(big).grad;
        double s = 0.0;
        for (int i = 0; i < gr.numel(); ++i) {
            gbig.v[i] += gr.v[i] * c2;
            s += gr.v[i] * vb.v[i];
        }
        g.node(small).grad.v[0] += s;
    };
    return id;
}

Graph::Id Graph::scale(Id a, double c) {
    Tensor out = node(a).val;
    for (auto& x : out.v) x *= c;
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, c](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        for (int i = 0; i < gr.numel(); ++i) ga.v[i] += c * gr.v[i];
    };
    return id;
}

Graph::Id Graph::minimum(Id a, Id b) {
    const Tensor& ta = node(a).val;
    const Tensor& tb = node(b).val;
    check(ta.same_shape(tb), "minimum: shape mismatch");
    Tensor out = ta;
    for (int i = 0; i < out.numel(); ++i) out.v[i] = std::min(ta.v[i], tb.v[i]);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, b](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& va = g.node(a).val;
        const Tensor& vb = g.node(b).val;
        Tensor& ga = g.node(a).grad;
        Tensor& gb = g.node(b).grad;
        for (int i = 0; i < gr.numel(); ++i) {
            if (va.v[i] <= vb.v[i]) ga.v[i] += gr.v[i];
            else gb.v[i] += gr.v[i];
        }
    };
    return id;
}

Graph::Id Graph::matmul(Id a, Id b) {
    const Tensor& ta = node(a).val;
    const Tensor& tb = node(b).val;
    check(ta.shape.size() == 2 && tb.shape.size() == 2 && ta.cols() == tb.rows(),
          "matmul: incompatible shapes " + ta.shape_str() + " x " + tb.shape_str());
    int n = ta.rows(), k = ta.cols(), m = tb.cols();
    Tensor out = Tensor::zeros({n, m});
    for (int i = 0; i < n; ++i) {
        const double* ai = &ta.v[static_cast<std::size_t>(i) * k];
        double* oi = &out.v[static_cast<std::size_t>(i) * m];
        for (int kk = 0; kk < k; ++kk) {
            double av = ai[kk];
            if (av == 0.0) continue;
            const double* bk = &tb.v[static_cast<std::size_t>(kk) * m];
            for (int j = 0; j < m; ++j) oi[j] += av * bk[j];
        }
    }
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, b, n, k, m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& va = g.node(a).val;
        const Tensor& vb = g.node(b).val;
        Tensor& ga = g.node(a).grad;
        Tensor& gb = g.node(b).grad;
        // dA += G * B^T
        for (int i = 0; i < n; ++i) {
            const double* gi = &gr.v[static_cast<std::size_t>(i) * m];
            double* gai = &ga.v[static_cast<std::size_t>(i) * k];
            for (int kk = 0; kk < k; ++kk) {
                const double* bk = &vb.v[static_cast<std::size_t>(kk) * m];
                double s = 0.0;
                for (int j = 0; j < m; ++j) s += gi[j] * bk[j];
                gai[kk] += s;
            }
        }
        // dB += A^T * G
        for (int kk = 0; kk < k; ++kk) {
            double* gbk = &gb.v[static_cast<std::size_t>(kk) * m];
            for (int i = 0; i < n; ++i) {
                double av = va.v[static_cast<std::size_t>(i) * k + kk];
                if (av == 0.0) continue;
                const double* gi = &gr.v[static_cast<std::size_t>(i) * m];
                for (int j = 0; j < m; ++j) gbk[j] += av * gi[j];
            }
        }
    };
    return id;
}

Graph::Id Graph::transpose(Id a) {
    const Tensor& ta = node(a).val;
    check(ta.shape.size() == 2, "transpose: tensor is not 2-D");
    int n = ta.rows(), m = ta.cols();
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out.at2(j, i) = ta.at2(i, j);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, n, m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) ga.v[static_cast<std::size_t>(i) * m + j] += gr.v[static_cast<std::size_t>(j) * n + i];
    };
    return id;
}

Graph::Id Graph::concat(const std::vector<Id>& parts, int axis) {
    check(!parts.empty(), "concat: no parts");
    check(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
    // normalize 1-D parts to rows for axis handling
    for (Id p : parts) check(node(p).val.shape.size() == 2, "concat: parts must be 2-D");
    int rows0 = node(parts[0]).val.rows();
    int cols0 = node(parts[0]).val.cols();
    int total = 0;
    for (Id p : parts) {
        const Tensor& t = node(p).val;
        if (axis == 0) {
            check(t.cols() == cols0, "concat: column mismatch");
            total += t.rows();
        } else {
            check(t.rows() == rows0, "concat: row mismatch");
            total += t.cols();
        }
    }
    Tensor out = axis == 0 ? Tensor::zeros({total, cols0}) : Tensor::zeros({rows0, total});
    int off = 0;
    for (Id p : parts) {
        const Tensor& t = node(p).val;
        if (axis == 0) {
            std::copy(t.v.begin(), t.v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(off) * cols0);
            off += t.rows();
        } else {
            for (int i = 0; i < rows0; ++i)
                for (int j = 0; j < t.cols(); ++j)
                    out.at2(i, off + j) = t.at2(i, j);
            off += t.cols();
        }
    }
    std::vector<Id> ps = parts;
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, ps, axis](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        int off2 = 0;
        for (Id p : ps) {
            Tensor& gp = g.node(p).grad;
            const Tensor& vp = g.node(p).val;
            if (axis == 0) {
                int c = vp.cols();
                for (int i = 0; i < vp.rows(); ++i)
                    for (int j = 0; j < c; ++j)
                        gp.v[static_cast<std::size_t>(i) * c + j] +=
                            gr.v[static_cast<std::size_t>(off2 + i) * c + j];
                off2 += vp.rows();
            } else {
                int c = vp.cols();
                int gc = gr.cols();
                for (int i = 0; i < vp.rows(); ++i)
                    for (int j = 0; j < c; ++j)
                        gp.v[static_cast<std::size_t>(i) * c + j] +=
                            gr.v[static_cast<std::size_t>(i) * gc + off2 + j];
                off2 += c;
            }
        }
    };
    return id;
}

Graph::Id Graph::slice(Id a, int axis, int start, int len) {
    const Tensor& ta = node(a).val;
    check(ta.shape.size() == 2, "slice: tensor is not 2-D");
    check(axis == 0 || axis == 1, "slice: axis must be 0 or 1");
    int n = ta.rows(), m = ta.cols();
    int limit = axis == 0 ? n : m;
    check(start >= 0 && len >= 0 && start + len <= limit, "slice: range out of bounds");
    Tensor out = axis == 0 ? Tensor::zeros({len, m}) : Tensor::zeros({n, len});
    if (axis == 0) {
        std::copy(ta.v.begin() + static_cast<std::ptrdiff_t>(start) * m,
                  ta.v.begin() + static_cast<std::ptrdiff_t>(start + len) * m, out.v.begin());
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < len; ++j) out.at2(i, j) = ta.at2(i, start + j);
    }
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, axis, start, len, n, m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        if (axis == 0) {
            for (int i = 0; i < len; ++i)
                for (int j = 0; j < m; ++j)
                    ga.v[static_cast<std::size_t>(start + i) * m + j] += gr.v[static_cast<std::size_t>(i) * m + j];
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < len; ++j)
                    ga.v[static_cast<std::size_t>(i) * m + start + j] += gr.v[static_cast<std::size_t>(i) * len + j];
        }
    };
    return id;
}

Graph::Id Graph::rows(Id a, std::vector<int> idx) {
    const Tensor& ta = node(a).val;
    check(ta.shape.size() == 2, "rows: tensor is not 2-D");
    int m = ta.cols();
    for (int r : idx) check(r >= 0 && r < ta.rows(), "rows: index out of range");
    Tensor out = Tensor::zeros({static_cast<int>(idx.size()), m});
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(ta.v.begin() + static_cast<std::ptrdiff_t>(idx[i]) * m,
                  ta.v.begin() + static_cast<std::ptrdiff_t>(idx[i] + 1) * m,
                  out.v.begin() + static_cast<std::ptrdiff_t>(i) * m);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, idx = std::move(idx), m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < m; ++j)
                ga.v[static_cast<std::size_t>(idx[i]) * m + j] += gr.v[i * static_cast<std::size_t>(m) + j];
    };
    return id;
}

Graph::Id Graph::tanh_(Id a) {
    Tensor out = node(a).val;
    for (auto& x : out.v) x = std::tanh(x);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& y = g.node(id).val;
        Tensor& ga = g.node(a).grad;
        for (int i = 0; i < gr.numel(); ++i) ga.v[i] += gr.v[i] * (1.0 - y.v[i] * y.v[i]);
    };
    return id;
}

Graph::Id Graph::sigmoid_(Id a) {
    Tensor out = node(a).val;
    for (auto& x : out.v) x = stable_sigmoid(x);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& y = g.node(id).val;
        Tensor& ga = g.node(a).grad;
        for (int i = 0; i < gr.numel(); ++i) ga.v[i] += gr.v[i] * y.v[i] * (1.0 - y.v[i]);
    };
    return id;
}

Graph::Id Graph::softmax(Id a, int axis) {
    const Tensor& ta = node(a).val;
    Tensor out = ta;
    bool is_1d = ta.shape.size() == 1;
    check(is_1d || ta.shape.size() == 2, "softmax: tensor must be 1-D or 2-D");
    if (is_1d) check(axis == 0, "softmax: axis must be 0 for 1-D input");
    int n = is_1d ? 1 : ta.rows();
    int m = is_1d ? ta.numel() : ta.cols();
    // axis 1 (or 1-D): softmax over each row; axis 0: over each column
    auto run = [&](int count, int len, auto at_ref, auto at_out) {
        for (int i = 0; i < count; ++i) {
            double mx = at_ref(i, 0);
            for (int j = 1; j < len; ++j) mx = std::max(mx, at_ref(i, j));
            double z = 0.0;
            for (int j = 0; j < len; ++j) {
                double e = std::exp(at_ref(i, j) - mx);
                at_out(i, j) = e;
                z += e;
            }
            for (int j = 0; j < len; ++j) at_out(i, j) /= z;
        }
    };
    if (is_1d || axis == 1) {
        run(n, m,
            [&](int i, int j) { return ta.v[static_cast<std::size_t>(i) * m + j]; },
            [&](int i, int j) -> double& { return out.v[static_cast<std::size_t>(i) * m + j]; });
    } else {
        run(m, n,
            [&](int j, int i) { return ta.v[static_cast<std::size_t>(i) * m + j]; },
            [&](int j, int i) -> double& { return out.v[static_cast<std::size_t>(i) * m + j]; });
    }
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, axis, is_1d, n, m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& y = g.node(id).val;
        Tensor& ga = g.node(a).grad;
        auto backrun = [&](int count, int len, auto idx) {
            for (int i = 0; i < count; ++i) {
                double dot = 0.0;
                for (int j = 0; j < len; ++j) dot += gr.v[idx(i, j)] * y.v[idx(i, j)];
                for (int j = 0; j < len; ++j)
                    ga.v[idx(i, j)] += y.v[idx(i, j)] * (gr.v[idx(i, j)] - dot);
            }
        };
        if (is_1d || axis == 1) {
            backrun(n, m, [m](int i, int j) { return static_cast<std::size_t>(i) * m + j; });
        } else {
            backrun(m, n, [m](int j, int i) { return static_cast<std::size_t>(i) * m + j; });
        }
    };
    return id;
}

Graph::Id Graph::layer_norm(Id a, Id gain, Id bias) {
    const Tensor& ta = node(a).val;
    bool is_1d = ta.shape.size() == 1;
    check(is_1d || ta.shape.size() == 2, "layer_norm: tensor must be 1-D or 2-D");
    int n = is_1d ? 1 : ta.rows();
    int m = is_1d ? ta.numel() : ta.cols();
    check(node(gain).val.numel() == m && node(bias).val.numel() == m,
          "layer_norm: gain/bias size mismatch");
    Tensor out = ta;
    Tensor xhat = Tensor::zeros(ta.shape);
    Tensor inv_std = Tensor::zeros({n});
    const Tensor& gv = node(gain).val;
    const Tensor& bv = node(bias).val;
    for (int i = 0; i < n; ++i) {
        const double* x = &ta.v[static_cast<std::size_t>(i) * m];
        double mu = 0.0;
        for (int j = 0; j < m; ++j) mu += x[j];
        mu /= m;
        double var = 0.0;
        for (int j = 0; j < m; ++j) var += (x[j] - mu) * (x[j] - mu);
        var /= m;
        double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std.v[i] = is;
        for (int j = 0; j < m; ++j) {
            double xh = (x[j] - mu) * is;
            xhat.v[static_cast<std::size_t>(i) * m + j] = xh;
            out.v[static_cast<std::size_t>(i) * m + j] = xh * gv.v[j] + bv.v[j];
        }
    }
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std),
                     n, m](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& gv2 = g.node(gain).val;
        Tensor& ga = g.node(a).grad;
        Tensor& gg = g.node(gain).grad;
        Tensor& gb = g.node(bias).grad;
        for (int i = 0; i < n; ++i) {
            const double* go = &gr.v[static_cast<std::size_t>(i) * m];
            const double* xh = &xhat.v[static_cast<std::size_t>(i) * m];
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (int j = 0; j < m; ++j) {
                double dxh = go[j] * gv2.v[j];
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * xh[j];
                gg.v[j] += go[j] * xh[j];
                gb.v[j] += go[j];
            }
            mean_dxhat /= m;
            mean_dxhat_xhat /= m;
            double is = inv_std.v[i];
            for (int j = 0; j < m; ++j) {
                double dxh = go[j] * gv2.v[j];
                ga.v[static_cast<std::size_t>(i) * m + j] +=
                    is * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
            }
        }
    };
    return id;
}

Graph::Id Graph::log_(Id a) {
    Tensor out = node(a).val;
    for (auto& x : out.v) x = std::log(x);
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& x = g.node(a).val;
        Tensor& ga = g.node(a).grad;
        for (int i = 0; i < gr.numel(); ++i) ga.v[i] += gr.v[i] / x.v[i];
    };
    return id;
}

Graph::Id Graph::pick(Id a, int flat_index) {
    const Tensor& ta = node(a).val;
    check(flat_index >= 0 && flat_index < ta.numel(), "pick: index out of range");
    Id id = emplace(Tensor::scalar(ta.v[static_cast<std::size_t>(flat_index)]), nullptr);
    node(id).back = [id, a, flat_index](Graph& g) {
        g.node(a).grad.v[static_cast<std::size_t>(flat_index)] += g.node(id).grad.v[0];
    };
    return id;
}

Graph::Id Graph::nll(Id probs, int index) {
    const Tensor& tp = node(probs).val;
    check(index >= 0 && index < tp.numel(), "nll: index out of range");
    double p = tp.v[static_cast<std::size_t>(index)];
    double pc = std::max(p, kProbEps);
    Id id = emplace(Tensor::scalar(-std::log(pc)), nullptr);
    node(id).back = [id, probs, index](Graph& g) {
        double p2 = g.node(probs).val.v[static_cast<std::size_t>(index)];
        if (p2 > kProbEps)
            g.node(probs).grad.v[static_cast<std::size_t>(index)] -= g.node(id).grad.v[0] / p2;
    };
    return id;
}

Graph::Id Graph::bce(Id probs, Id labels) {
    const Tensor& tp = node(probs).val;
    const Tensor& ty = node(labels).val;
    check(tp.same_shape(ty), "bce: shape mismatch");
    Tensor out = tp;
    for (int i = 0; i < out.numel(); ++i) {
        double p = std::min(std::max(tp.v[i], kProbEps), 1.0 - kProbEps);
        double y = ty.v[i];
        out.v[i] = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, probs, labels](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        const Tensor& tp2 = g.node(probs).val;
        const Tensor& ty2 = g.node(labels).val;
        Tensor& gp = g.node(probs).grad;
        Tensor& gy = g.node(labels).grad;
        for (int i = 0; i < gr.numel(); ++i) {
            double p = tp2.v[i];
            double y = ty2.v[i];
            if (p > kProbEps && p < 1.0 - kProbEps)
                gp.v[i] += gr.v[i] * (p - y) / (p * (1.0 - p));
            double pc = std::min(std::max(p, kProbEps), 1.0 - kProbEps);
            gy.v[i] += gr.v[i] * (std::log(1.0 - pc) - std::log(pc));
        }
    };
    return id;
}

Graph::Id Graph::scatter_sum(Id a, std::vector<int> dst, int out_size) {
    const Tensor& ta = node(a).val;
    check(static_cast<int>(dst.size()) == ta.numel(), "scatter_sum: index count mismatch");
    for (int d : dst) check(d >= 0 && d < out_size, "scatter_sum: index out of range");
    Tensor out = Tensor::zeros({1, out_size});
    for (int i = 0; i < ta.numel(); ++i) out.v[static_cast<std::size_t>(dst[i])] += ta.v[i];
    Id id = emplace(std::move(out), nullptr);
    node(id).back = [id, a, dst = std::move(dst)](Graph& g) {
        const Tensor& gr = g.node(id).grad;
        Tensor& ga = g.node(a).grad;
        for (std::size_t i = 0; i < dst.size(); ++i)
            ga.v[i] += gr.v[static_cast<std::size_t>(dst[i])];
    };
    return id;
}

Graph::Id Graph::sum(Id a) {
    const Tensor& ta = node(a).val;
    double s = 0.0;
    for (double x : ta.v) s += x;
    Id id = emplace(Tensor::scalar(s), nullptr);
    node(id).back = [id, a](Graph& g) {
        double gr = g.node(id).grad.v[0];
        Tensor& ga = g.node(a).grad;
        for (auto& x : ga.v) x += gr;
    };
    return id;
}

Graph::Id Graph::mean(Id a) {
    const Tensor& ta = node(a).val;
    check(ta.numel() > 0, "mean: empty tensor");
    double s = 0.0;
    for (double x : ta.v) s += x;
    int n = ta.numel();
    Id id = emplace(Tensor::scalar(s / n), nullptr);
    node(id).back = [id, a, n](Graph& g) {
        double gr = g.node(id).grad.v[0] / n;
        Tensor& ga = g.node(a).grad;
        for (auto& x : ga.v) x += gr;
    };
    return id;
}

void Graph::backward(Id id) {
    check(node(id).val.numel() == 1, "backward: output is not a scalar");
    for (auto& n : nodes_) n.grad.fill(0.0);
    node(id).grad.v[0] = 1.0;
    for (Id i = id; i >= 0; --i) {
        if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back(*this);
    }
}

}  // namespace casumm::nn
