#include "shapeshot/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

using detail::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                             shape_to_string(t.shape()));
    }
}

bool wants_grad(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

std::vector<double>& parent_grad(Node& self, std::size_t i) { return self.parents[i]->grad_buffer(); }

const std::vector<double>& parent_values(const Node& self, std::size_t i) { return self.parents[i]->values; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!wants_grad(self, p)) continue;
            auto& g = parent_grad(self, p);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    }, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        if (wants_grad(self, 0)) {
            auto& g = parent_grad(self, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (wants_grad(self, 1)) {
            auto& g = parent_grad(self, 1);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    }, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        const auto& av = parent_values(self, 0);
        const auto& bv = parent_values(self, 1);
        if (wants_grad(self, 0)) {
            auto& g = parent_grad(self, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
        }
        if (wants_grad(self, 1)) {
            auto& g = parent_grad(self, 1);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
        }
    }, "mul");
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.values().begin(), a.values().end());
    for (auto& v : out) v *= factor;
    return make_result(a.shape(), std::move(out), {a}, [factor](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    }, "scale");
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (auto& v : out) v = v > 0.0 ? v : 0.0;
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (self.values[i] > 0.0) g[i] += self.grad[i];
        }
    }, "relu", FiniteCheck::skip);
}

Tensor log(const Tensor& x) {
    std::vector<double> out(x.numel());
    const auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(xv[i] > 0.0)) throw NumericError("log of non-positive value");
        out[i] = std::log(xv[i]);
    }
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        const auto& xv = parent_values(self, 0);
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / xv[i];
    }, "log");
}

Tensor sqrt(const Tensor& x) {
    std::vector<double> out(x.numel());
    const auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (xv[i] < 0.0) throw NumericError("sqrt of negative value");
        out[i] = std::sqrt(xv[i]);
    }
    return make_result(x.shape(), std::move(out), {x}, [](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (self.values[i] > 0.0) g[i] += self.grad[i] * 0.5 / self.values[i];
        }
    }, "sqrt");
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    return make_result({1}, {total}, {x}, [](Node& self) {
        auto& g = parent_grad(self, 0);
        for (auto& gi : g) gi += self.grad[0];
    }, "sum");
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    }
    return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
        const auto& av = parent_values(self, 0);
        const auto& bv = parent_values(self, 1);
        const auto& go = self.grad;
        if (wants_grad(self, 0)) {
            auto& ga = parent_grad(self, 0);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
                    ga[i * k + p] += acc;
                }
        }
        if (wants_grad(self, 1)) {
            auto& gb = parent_grad(self, 1);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = av[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * go[i * n + j];
                }
        }
    }, "matmul");
}

namespace {

std::pair<std::size_t, std::size_t> softmax_layout(const Tensor& logits, const char* op) {
    if (logits.rank() == 1) return {1, logits.dim(0)};
    if (logits.rank() == 2) return {logits.dim(0), logits.dim(1)};
    throw DimensionError(std::string(op) + ": expected rank 1 or 2, got " + shape_to_string(logits.shape()));
}

}  // namespace

Tensor log_softmax(const Tensor& logits) {
    const auto [rows, cols] = softmax_layout(logits, "log_softmax");
    const auto x = logits.values();
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x.data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(row[c] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = row[c] - lse;
    }
    return make_result(logits.shape(), std::move(out), {logits}, [rows, cols](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            double gsum = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gsum += self.grad[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t i = r * cols + c;
                g[i] += self.grad[i] - std::exp(self.values[i]) * gsum;
            }
        }
    }, "log_softmax");
}

Tensor softmax(const Tensor& logits) {
    const auto [rows, cols] = softmax_layout(logits, "softmax");
    const auto x = logits.values();
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = x.data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = std::exp(row[c] - mx);
            s += out[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= s;
    }
    return make_result(logits.shape(), std::move(out), {logits}, [rows, cols](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += self.grad[r * cols + c] * self.values[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c) {
                const std::size_t i = r * cols + c;
                g[i] += self.values[i] * (self.grad[i] - dot);
            }
        }
    }, "softmax", FiniteCheck::skip);
}

Tensor max_pool2x2(const Tensor& x) {
    require_rank(x, 4, "max_pool2x2");
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) throw DimensionError("max_pool2x2: spatial size below 2 in " + shape_to_string(x.shape()));
    const auto xv = x.values();
    std::vector<double> out(n * c * oh * ow);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t in_base = plane * h * w;
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                std::size_t best = in_base + (2 * i) * w + 2 * j;
                for (std::size_t di = 0; di < 2; ++di)
                    for (std::size_t dj = 0; dj < 2; ++dj) {
                        const std::size_t idx = in_base + (2 * i + di) * w + 2 * j + dj;
                        if (xv[idx] > xv[best]) best = idx;
                    }
                const std::size_t o = plane * oh * ow + i * ow + j;
                out[o] = xv[best];
                (*argmax)[o] = best;
            }
    }
    return make_result({n, c, oh, ow}, std::move(out), {x}, [argmax](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t o = 0; o < self.grad.size(); ++o) g[(*argmax)[o]] += self.grad[o];
    }, "max_pool2x2", FiniteCheck::skip);
}

Tensor global_avg_pool(const Tensor& x) {
    require_rank(x, 4, "global_avg_pool");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    const auto xv = x.values();
    std::vector<double> out(n * c);
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        double s = 0.0;
        for (std::size_t k = 0; k < hw; ++k) s += xv[plane * hw + k];
        out[plane] = s / static_cast<double>(hw);
    }
    return make_result({n, c}, std::move(out), {x}, [hw](Node& self) {
        auto& g = parent_grad(self, 0);
        const double inv = 1.0 / static_cast<double>(hw);
        for (std::size_t plane = 0; plane < self.grad.size(); ++plane) {
            const double gp = self.grad[plane] * inv;
            for (std::size_t k = 0; k < hw; ++k) g[plane * hw + k] += gp;
        }
    }, "global_avg_pool", FiniteCheck::skip);
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    require_rank(x, 4, "add_channel_bias");
    require_rank(bias, 1, "add_channel_bias");
    const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (bias.dim(0) != c) {
        throw DimensionError("add_channel_bias: bias " + shape_to_string(bias.shape()) + " vs input " +
                             shape_to_string(x.shape()));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    const auto bv = bias.values();
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch) {
            double* p = out.data() + (b * c + ch) * hw;
            for (std::size_t k = 0; k < hw; ++k) p[k] += bv[ch];
        }
    return make_result(x.shape(), std::move(out), {x, bias}, [n, c, hw](Node& self) {
        if (wants_grad(self, 0)) {
            auto& g = parent_grad(self, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (wants_grad(self, 1)) {
            auto& g = parent_grad(self, 1);
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t ch = 0; ch < c; ++ch) {
                    const double* p = self.grad.data() + (b * c + ch) * hw;
                    double s = 0.0;
                    for (std::size_t k = 0; k < hw; ++k) s += p[k];
                    g[ch] += s;
                }
        }
    }, "add_channel_bias");
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
    }
    std::vector<double> out(x.values().begin(), x.values().end());
    return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }, "reshape", FiniteCheck::skip);
}

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "pairwise_sq_dist");
    require_rank(b, 2, "pairwise_sq_dist");
    const std::size_t n = a.dim(0), k = b.dim(0), d = a.dim(1);
    if (b.dim(1) != d) {
        throw DimensionError("pairwise_sq_dist: feature sizes differ " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    const auto av = a.values(), bv = b.values();
    std::vector<double> out(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                const double diff = av[i * d + t] - bv[j * d + t];
                s += diff * diff;
            }
            out[i * k + j] = s;
        }
    return make_result({n, k}, std::move(out), {a, b}, [n, k, d](Node& self) {
        const auto& av = parent_values(self, 0);
        const auto& bv = parent_values(self, 1);
        const bool ga_on = wants_grad(self, 0), gb_on = wants_grad(self, 1);
        std::vector<double>* ga = ga_on ? &parent_grad(self, 0) : nullptr;
        std::vector<double>* gb = gb_on ? &parent_grad(self, 1) : nullptr;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                const double go = self.grad[i * k + j];
                if (go == 0.0) continue;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = 2.0 * go * (av[i * d + t] - bv[j * d + t]);
                    if (ga) (*ga)[i * d + t] += diff;
                    if (gb) (*gb)[j * d + t] -= diff;
                }
            }
    }, "pairwise_sq_dist");
}

Tensor group_mean(const Tensor& x, const std::vector<std::size_t>& group_sizes) {
    require_rank(x, 2, "group_mean");
    const std::size_t d = x.dim(1);
    std::size_t total = 0;
    for (auto g : group_sizes) {
        if (g == 0) throw DimensionError("group_mean: empty group");
        total += g;
    }
    if (total != x.dim(0)) {
        throw DimensionError("group_mean: group sizes cover " + std::to_string(total) + " rows, tensor has " +
                             std::to_string(x.dim(0)));
    }
    const auto xv = x.values();
    std::vector<double> out(group_sizes.size() * d, 0.0);
    std::size_t row = 0;
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        double* o = out.data() + g * d;
        for (std::size_t r = 0; r < group_sizes[g]; ++r, ++row)
            for (std::size_t t = 0; t < d; ++t) o[t] += xv[row * d + t];
        for (std::size_t t = 0; t < d; ++t) o[t] /= static_cast<double>(group_sizes[g]);
    }
    return make_result({group_sizes.size(), d}, std::move(out), {x}, [group_sizes, d](Node& self) {
        auto& gx = parent_grad(self, 0);
        std::size_t row = 0;
        for (std::size_t g = 0; g < group_sizes.size(); ++g) {
            const double inv = 1.0 / static_cast<double>(group_sizes[g]);
            for (std::size_t r = 0; r < group_sizes[g]; ++r, ++row)
                for (std::size_t t = 0; t < d; ++t) gx[row * d + t] += self.grad[g * d + t] * inv;
        }
    }, "group_mean", FiniteCheck::skip);
}

Tensor pick(const Tensor& x, const std::vector<std::size_t>& index) {
    require_rank(x, 2, "pick");
    const std::size_t n = x.dim(0), k = x.dim(1);
    if (index.size() != n) throw DimensionError("pick: index count differs from row count");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (index[i] >= k) throw DimensionError("pick: index out of range");
        out[i] = x.values()[i * k + index[i]];
    }
    return make_result({n}, std::move(out), {x}, [index, k](Node& self) {
        auto& g = parent_grad(self, 0);
        for (std::size_t i = 0; i < index.size(); ++i) g[i * k + index[i]] += self.grad[i];
    }, "pick", FiniteCheck::skip);
}

}  // namespace shapeshot
