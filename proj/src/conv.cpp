#include <algorithm>

#include <Eigen/Core>

#include "shapeshot/errors.hpp"
#include "shapeshot/ops.hpp"

namespace shapeshot {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

struct ConvGeometry {
    std::size_t n, c_in, h, w;
    std::size_t c_out, kh, kw;
    std::size_t stride, pad;
    std::size_t oh, ow;

    std::size_t patch() const { return c_in * kh * kw; }
    std::size_t out_pixels() const { return oh * ow; }
};

// cols is [C_in*kH*kW, oh*ow] row-major for one image.
void im2col(const double* image, const ConvGeometry& g, double* cols) {
    const std::size_t opix = g.out_pixels();
    const long h = static_cast<long>(g.h), w = static_cast<long>(g.w), pad = static_cast<long>(g.pad);
    for (std::size_t c = 0; c < g.c_in; ++c)
        for (std::size_t ki = 0; ki < g.kh; ++ki)
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                double* row = cols + ((c * g.kh + ki) * g.kw + kj) * opix;
                const double* plane = image + c * g.h * g.w;
                for (std::size_t oi = 0; oi < g.oh; ++oi) {
                    double* dst = row + oi * g.ow;
                    const long ii = static_cast<long>(oi * g.stride + ki) - pad;
                    if (ii < 0 || ii >= h) {
                        std::fill(dst, dst + g.ow, 0.0);
                        continue;
                    }
                    const double* src = plane + ii * w;
                    if (g.stride == 1) {
                        // Valid output columns satisfy 0 <= oj + kj - pad < w.
                        const long shift = static_cast<long>(kj) - pad;
                        const long ow = static_cast<long>(g.ow);
                        const long lo = std::min(std::max(0L, -shift), ow);
                        const long hi = std::max(std::min(ow, w - shift), lo);
                        std::fill(dst, dst + lo, 0.0);
                        std::copy(src + lo + shift, src + hi + shift, dst + lo);
                        std::fill(dst + hi, dst + ow, 0.0);
                        continue;
                    }
                    for (std::size_t oj = 0; oj < g.ow; ++oj) {
                        const long jj = static_cast<long>(oj * g.stride + kj) - pad;
                        dst[oj] = (jj >= 0 && jj < w) ? src[jj] : 0.0;
                    }
                }
            }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* image) {
    const std::size_t opix = g.out_pixels();
    for (std::size_t c = 0; c < g.c_in; ++c)
        for (std::size_t ki = 0; ki < g.kh; ++ki)
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
                const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * opix;
                for (std::size_t oi = 0; oi < g.oh; ++oi) {
                    const long ii = static_cast<long>(oi * g.stride + ki) - static_cast<long>(g.pad);
                    if (ii < 0 || ii >= static_cast<long>(g.h)) continue;
                    for (std::size_t oj = 0; oj < g.ow; ++oj) {
                        const long jj = static_cast<long>(oj * g.stride + kj) - static_cast<long>(g.pad);
                        if (jj < 0 || jj >= static_cast<long>(g.w)) continue;
                        image[(c * g.h + ii) * g.w + jj] += row[oi * g.ow + oj];
                    }
                }
            }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, std::size_t padding) {
    if (input.rank() != 4 || kernel.rank() != 4) {
        throw DimensionError("conv2d: expected rank-4 input and kernel, got " + shape_to_string(input.shape()) +
                             " and " + shape_to_string(kernel.shape()));
    }
    if (stride == 0) throw ContractError("conv2d: stride must be positive");
    ConvGeometry g{};
    g.n = input.dim(0);
    g.c_in = input.dim(1);
    g.h = input.dim(2);
    g.w = input.dim(3);
    g.c_out = kernel.dim(0);
    g.kh = kernel.dim(2);
    g.kw = kernel.dim(3);
    g.stride = stride;
    g.pad = padding;
    if (kernel.dim(1) != g.c_in) {
        throw DimensionError("conv2d: input has " + std::to_string(g.c_in) + " channels but kernel expects " +
                             std::to_string(kernel.dim(1)));
    }
    if (g.kh > g.h + 2 * padding || g.kw > g.w + 2 * padding) {
        throw DimensionError("conv2d: kernel " + shape_to_string(kernel.shape()) + " larger than padded input " +
                             shape_to_string(input.shape()));
    }
    g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
    g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

    const std::size_t in_image = g.c_in * g.h * g.w;
    const std::size_t out_image = g.c_out * g.out_pixels();
    std::vector<double> out(g.n * out_image);
    std::vector<double> cols(g.patch() * g.out_pixels());
    ConstMap k(kernel.values().data(), g.c_out, g.patch());
    for (std::size_t b = 0; b < g.n; ++b) {
        im2col(input.values().data() + b * in_image, g, cols.data());
        ConstMap c(cols.data(), g.patch(), g.out_pixels());
        MutMap o(out.data() + b * out_image, g.c_out, g.out_pixels());
        o.noalias() = k * c;
    }

    return make_result({g.n, g.c_out, g.oh, g.ow}, std::move(out), {input, kernel}, [g](detail::Node& self) {
        const auto& in = self.parents[0];
        const auto& ker = self.parents[1];
        const std::size_t in_image = g.c_in * g.h * g.w;
        const std::size_t out_image = g.c_out * g.out_pixels();
        std::vector<double> cols(g.patch() * g.out_pixels());
        ConstMap k(ker->values.data(), g.c_out, g.patch());
        double* gin = in->requires_grad ? in->grad_buffer().data() : nullptr;
        double* gker = ker->requires_grad ? ker->grad_buffer().data() : nullptr;
        for (std::size_t b = 0; b < g.n; ++b) {
            ConstMap go(self.grad.data() + b * out_image, g.c_out, g.out_pixels());
            if (gker) {
                im2col(in->values.data() + b * in_image, g, cols.data());
                ConstMap c(cols.data(), g.patch(), g.out_pixels());
                MutMap gk(gker, g.c_out, g.patch());
                gk.noalias() += go * c.transpose();
            }
            if (gin) {
                MutMap gc(cols.data(), g.patch(), g.out_pixels());
                gc.noalias() = k.transpose() * go;
                col2im_add(cols.data(), g, gin + b * in_image);
            }
        }
    }, "conv2d");
}

}  // namespace shapeshot
