#include "sbir/ops.hpp"

#include <algorithm>
#include <cmath>

namespace sbir {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

Tensor make_op(Shape shape, Array values, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward_fn) {
    if (shape_numel(shape) != values.size())
        throw std::logic_error("op produced wrong number of values");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->id = next_node_id();
    bool needs_grad = false;
    node->parents.reserve(inputs.size());
    for (const Tensor& t : inputs) {
        needs_grad = needs_grad || t.node()->requires_grad;
        node->parents.push_back(t.node());
    }
    node->requires_grad = needs_grad;
    if (needs_grad) node->backward = std::move(backward_fn);
    return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void require_rank2(const Tensor& a, const char* op) {
    if (a.rank() != 2)
        throw std::invalid_argument(std::string(op) + ": expected a 2D tensor");
}

// Treats a 1D tensor as a single row; returns (rows, cols).
std::pair<int, int> row_view_dims(const Tensor& a, const char* op) {
    if (a.rank() == 1) return {1, a.dim(0)};
    if (a.rank() == 2) return {a.dim(0), a.dim(1)};
    throw std::invalid_argument(std::string(op) + ": expected a 1D or 2D tensor");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    return make_op(a.shape(), a.values() + b.values(), {a, b}, [](TensorNode& n) {
        n.parents[0]->grad += n.grad;
        n.parents[1]->grad += n.grad;
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    return make_op(a.shape(), a.values() - b.values(), {a, b}, [](TensorNode& n) {
        n.parents[0]->grad += n.grad;
        n.parents[1]->grad -= n.grad;
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    return make_op(a.shape(), a.values() * b.values(), {a, b}, [](TensorNode& n) {
        n.parents[0]->grad += n.grad * n.parents[1]->values;
        n.parents[1]->grad += n.grad * n.parents[0]->values;
    });
}

Tensor scale(const Tensor& a, double c) {
    return make_op(a.shape(), a.values() * c, {a}, [c](TensorNode& n) {
        n.parents[0]->grad += n.grad * c;
    });
}

Tensor relu(const Tensor& a) {
    return make_op(a.shape(), a.values().max(0.0), {a}, [](TensorNode& n) {
        // Subgradient 0 at the kink.
        n.parents[0]->grad +=
            n.grad * (n.parents[0]->values > 0.0).cast<double>();
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw std::invalid_argument("reshape: element count mismatch");
    return make_op(std::move(shape), a.values(), {a}, [](TensorNode& n) {
        n.parents[0]->grad += n.grad;
    });
}

Tensor flatten(const Tensor& a) {
    return reshape(a, {static_cast<int>(a.numel())});
}

Tensor transpose2d(const Tensor& a) {
    require_rank2(a, "transpose2d");
    const int r = a.dim(0), c = a.dim(1);
    Array out(a.numel());
    RowMap(out.data(), c, r) = ConstRowMap(a.values().data(), r, c).transpose();
    return make_op({c, r}, std::move(out), {a}, [r, c](TensorNode& n) {
        RowMap(n.parents[0]->grad.data(), r, c) +=
            ConstRowMap(n.grad.data(), c, r).transpose();
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const int cols = parts[0].rank() == 1 ? parts[0].dim(0) : parts[0].dim(1);
    int rows = 0;
    for (const Tensor& p : parts) {
        auto [r, c] = row_view_dims(p, "concat_rows");
        if (c != cols) throw std::invalid_argument("concat_rows: column mismatch");
        rows += r;
    }
    Array out(static_cast<Eigen::Index>(rows) * cols);
    Eigen::Index off = 0;
    std::vector<Tensor> inputs;
    for (const Tensor& p : parts) {
        out.segment(off, p.numel()) = p.values();
        off += p.numel();
        inputs.push_back(p);
    }
    return make_op({rows, cols}, std::move(out), std::move(inputs), [](TensorNode& n) {
        Eigen::Index off = 0;
        for (auto& parent : n.parents) {
            parent->grad += n.grad.segment(off, parent->values.size());
            off += parent->values.size();
        }
    });
}

Tensor slice_rows(const Tensor& a, int row_begin, int row_end) {
    require_rank2(a, "slice_rows");
    const int r = a.dim(0), c = a.dim(1);
    if (row_begin < 0 || row_end > r || row_begin >= row_end)
        throw std::invalid_argument("slice_rows: bad range");
    const int out_rows = row_end - row_begin;
    Array out = a.values().segment(static_cast<Eigen::Index>(row_begin) * c,
                                   static_cast<Eigen::Index>(out_rows) * c);
    return make_op({out_rows, c}, std::move(out), {a}, [row_begin, c](TensorNode& n) {
        n.parents[0]->grad.segment(static_cast<Eigen::Index>(row_begin) * c,
                                   n.grad.size()) += n.grad;
    });
}

Tensor slice_cols(const Tensor& a, int col_begin, int col_end) {
    require_rank2(a, "slice_cols");
    const int r = a.dim(0), c = a.dim(1);
    if (col_begin < 0 || col_end > c || col_begin >= col_end)
        throw std::invalid_argument("slice_cols: bad range");
    const int out_cols = col_end - col_begin;
    Array out(static_cast<Eigen::Index>(r) * out_cols);
    RowMap(out.data(), r, out_cols) =
        ConstRowMap(a.values().data(), r, c).middleCols(col_begin, out_cols);
    return make_op({r, out_cols}, std::move(out), {a},
                   [r, c, col_begin, out_cols](TensorNode& n) {
        RowMap(n.parents[0]->grad.data(), r, c).middleCols(col_begin, out_cols) +=
            ConstRowMap(n.grad.data(), r, out_cols);
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
    const int rows = parts[0].dim(0);
    int cols = 0;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (p.dim(0) != rows) throw std::invalid_argument("concat_cols: row mismatch");
        cols += p.dim(1);
    }
    Array out(static_cast<Eigen::Index>(rows) * cols);
    RowMap view(out.data(), rows, cols);
    int off = 0;
    std::vector<Tensor> inputs;
    std::vector<int> widths;
    for (const Tensor& p : parts) {
        view.middleCols(off, p.dim(1)) =
            ConstRowMap(p.values().data(), rows, p.dim(1));
        off += p.dim(1);
        widths.push_back(p.dim(1));
        inputs.push_back(p);
    }
    return make_op({rows, cols}, std::move(out), std::move(inputs),
                   [rows, cols, widths](TensorNode& n) {
        ConstRowMap gview(n.grad.data(), rows, cols);
        int off = 0;
        for (size_t i = 0; i < n.parents.size(); ++i) {
            RowMap(n.parents[i]->grad.data(), rows, widths[i]) +=
                gview.middleCols(off, widths[i]);
            off += widths[i];
        }
    });
}

Tensor sum(const Tensor& a) {
    return make_op({1}, Array::Constant(1, a.values().sum()), {a}, [](TensorNode& n) {
        n.parents[0]->grad += n.grad(0);
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    return make_op({1}, Array::Constant(1, a.values().mean()), {a},
                   [inv](TensorNode& n) { n.parents[0]->grad += n.grad(0) * inv; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw std::invalid_argument("matmul: inner dimension mismatch");
    Array out(static_cast<Eigen::Index>(m) * n);
    RowMap(out.data(), m, n) = ConstRowMap(a.values().data(), m, k) *
                               ConstRowMap(b.values().data(), k, n);
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
        ConstRowMap g(node.grad.data(), m, n);
        ConstRowMap av(node.parents[0]->values.data(), m, k);
        ConstRowMap bv(node.parents[1]->values.data(), k, n);
        RowMap(node.parents[0]->grad.data(), m, k) += g * bv.transpose();
        RowMap(node.parents[1]->grad.data(), k, n) += av.transpose() * g;
    });
}

Tensor add_rowwise(const Tensor& a, const Tensor& bias) {
    require_rank2(a, "add_rowwise");
    const int m = a.dim(0), n = a.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != n)
        throw std::invalid_argument("add_rowwise: bias length mismatch");
    Array out(a.numel());
    RowMap(out.data(), m, n) =
        ConstRowMap(a.values().data(), m, n).rowwise() +
        Eigen::Map<const Eigen::RowVectorXd>(bias.values().data(), n);
    return make_op({m, n}, std::move(out), {a, bias}, [m, n](TensorNode& node) {
        node.parents[0]->grad += node.grad;
        Eigen::Map<Eigen::RowVectorXd>(node.parents[1]->grad.data(), n) +=
            ConstRowMap(node.grad.data(), m, n).colwise().sum();
    });
}

Tensor softmax(const Tensor& a) {
    auto [rows, cols] = row_view_dims(a, "softmax");
    if (cols == 0) throw std::invalid_argument("softmax: empty axis");
    Array out(a.numel());
    ConstRowMap x(a.values().data(), rows, cols);
    RowMap y(out.data(), rows, cols);
    for (int i = 0; i < rows; ++i) {
        Eigen::ArrayXd shifted = x.row(i).array() - x.row(i).maxCoeff();
        Eigen::ArrayXd e = shifted.exp();
        y.row(i) = (e / e.sum()).matrix();
    }
    check_finite(out, "softmax");
    return make_op(a.shape(), std::move(out), {a}, [rows, cols](TensorNode& n) {
        ConstRowMap y(n.values.data(), rows, cols);
        ConstRowMap g(n.grad.data(), rows, cols);
        RowMap dx(n.parents[0]->grad.data(), rows, cols);
        for (int i = 0; i < rows; ++i) {
            const double dot = y.row(i).dot(g.row(i));
            dx.row(i) += (y.row(i).array() * (g.row(i).array() - dot)).matrix();
        }
    });
}

Tensor log_softmax(const Tensor& a) {
    auto [rows, cols] = row_view_dims(a, "log_softmax");
    if (cols == 0) throw std::invalid_argument("log_softmax: empty axis");
    Array out(a.numel());
    ConstRowMap x(a.values().data(), rows, cols);
    RowMap y(out.data(), rows, cols);
    for (int i = 0; i < rows; ++i) {
        Eigen::ArrayXd shifted = x.row(i).array() - x.row(i).maxCoeff();
        y.row(i) = (shifted - std::log(shifted.exp().sum())).matrix();
    }
    check_finite(out, "log_softmax");
    return make_op(a.shape(), std::move(out), {a}, [rows, cols](TensorNode& n) {
        ConstRowMap y(n.values.data(), rows, cols);
        ConstRowMap g(n.grad.data(), rows, cols);
        RowMap dx(n.parents[0]->grad.data(), rows, cols);
        for (int i = 0; i < rows; ++i) {
            const double gsum = g.row(i).sum();
            dx.row(i) += (g.row(i).array() - y.row(i).array().exp() * gsum).matrix();
        }
    });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& shift, double eps) {
    auto [rows, cols] = row_view_dims(a, "layer_norm");
    if (gain.numel() != cols || shift.numel() != cols)
        throw std::invalid_argument("layer_norm: gain/shift length mismatch");
    Array out(a.numel());
    ConstRowMap x(a.values().data(), rows, cols);
    RowMap y(out.data(), rows, cols);
    const auto& g = gain.values();
    const auto& b = shift.values();
    for (int i = 0; i < rows; ++i) {
        Eigen::ArrayXd row = x.row(i).array();
        const double mu = row.mean();
        const double var = (row - mu).square().mean();
        const double inv_s = 1.0 / std::sqrt(var + eps);
        y.row(i) = (((row - mu) * inv_s) * g + b).matrix();
    }
    check_finite(out, "layer_norm");
    return make_op(a.shape(), std::move(out), {a, gain, shift},
                   [rows, cols, eps](TensorNode& n) {
        ConstRowMap x(n.parents[0]->values.data(), rows, cols);
        ConstRowMap dy(n.grad.data(), rows, cols);
        RowMap dx(n.parents[0]->grad.data(), rows, cols);
        const Eigen::Map<const Array> g(n.parents[1]->values.data(), cols);
        Eigen::Map<Array> dgain(n.parents[1]->grad.data(), cols);
        Eigen::Map<Array> dshift(n.parents[2]->grad.data(), cols);
        for (int i = 0; i < rows; ++i) {
            Eigen::ArrayXd row = x.row(i).array();
            const double mu = row.mean();
            const double var = (row - mu).square().mean();
            const double inv_s = 1.0 / std::sqrt(var + eps);
            Eigen::ArrayXd xhat = (row - mu) * inv_s;
            Eigen::ArrayXd gy = dy.row(i).array();
            dgain += gy * xhat;
            dshift += gy;
            Eigen::ArrayXd dxhat = gy * g;
            const double m1 = dxhat.mean();
            const double m2 = (dxhat * xhat).mean();
            dx.row(i) += (inv_s * (dxhat - m1 - xhat * m2)).matrix();
        }
    });
}

namespace {

struct ConvDims {
    int c_in, h, w, c_out, kh, kw, stride, pad, out_h, out_w;
};

// im2col patch matrix: [c_in*kh*kw x out_h*out_w], zero padded.
RowMat im2col(const Array& input, const ConvDims& d) {
    RowMat patches = RowMat::Zero(static_cast<Eigen::Index>(d.c_in) * d.kh * d.kw,
                                  static_cast<Eigen::Index>(d.out_h) * d.out_w);
    for (int ci = 0; ci < d.c_in; ++ci) {
        const double* chan = input.data() + static_cast<Eigen::Index>(ci) * d.h * d.w;
        for (int u = 0; u < d.kh; ++u)
            for (int v = 0; v < d.kw; ++v) {
                const Eigen::Index row =
                    (static_cast<Eigen::Index>(ci) * d.kh + u) * d.kw + v;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    const int y = oy * d.stride - d.pad + u;
                    if (y < 0 || y >= d.h) continue;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int x = ox * d.stride - d.pad + v;
                        if (x < 0 || x >= d.w) continue;
                        patches(row, static_cast<Eigen::Index>(oy) * d.out_w + ox) =
                            chan[static_cast<Eigen::Index>(y) * d.w + x];
                    }
                }
            }
    }
    return patches;
}

void col2im_accumulate(const RowMat& dpatches, const ConvDims& d, Array& dinput) {
    for (int ci = 0; ci < d.c_in; ++ci) {
        double* chan = dinput.data() + static_cast<Eigen::Index>(ci) * d.h * d.w;
        for (int u = 0; u < d.kh; ++u)
            for (int v = 0; v < d.kw; ++v) {
                const Eigen::Index row =
                    (static_cast<Eigen::Index>(ci) * d.kh + u) * d.kw + v;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    const int y = oy * d.stride - d.pad + u;
                    if (y < 0 || y >= d.h) continue;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int x = ox * d.stride - d.pad + v;
                        if (x < 0 || x >= d.w) continue;
                        chan[static_cast<Eigen::Index>(y) * d.w + x] +=
                            dpatches(row, static_cast<Eigen::Index>(oy) * d.out_w + ox);
                    }
                }
            }
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.rank() != 3) throw std::invalid_argument("conv2d: input must be C x H x W");
    if (kernels.rank() != 4)
        throw std::invalid_argument("conv2d: kernels must be C_out x C_in x kh x kw");
    if (stride <= 0) throw std::invalid_argument("conv2d: stride must be positive");
    if (padding < 0) throw std::invalid_argument("conv2d: padding must be non-negative");
    ConvDims d;
    d.c_in = input.dim(0);
    d.h = input.dim(1);
    d.w = input.dim(2);
    d.c_out = kernels.dim(0);
    d.kh = kernels.dim(2);
    d.kw = kernels.dim(3);
    d.stride = stride;
    d.pad = padding;
    if (kernels.dim(1) != d.c_in)
        throw std::invalid_argument("conv2d: kernel channel mismatch");
    if (d.kh > d.h + 2 * padding || d.kw > d.w + 2 * padding)
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    d.out_h = (d.h + 2 * padding - d.kh) / stride + 1;
    d.out_w = (d.w + 2 * padding - d.kw) / stride + 1;

    RowMat patches = im2col(input.values(), d);
    ConstRowMap kmat(kernels.values().data(), d.c_out,
                     static_cast<Eigen::Index>(d.c_in) * d.kh * d.kw);
    Array out(static_cast<Eigen::Index>(d.c_out) * d.out_h * d.out_w);
    RowMap(out.data(), d.c_out, static_cast<Eigen::Index>(d.out_h) * d.out_w) =
        kmat * patches;

    // Patches are rebuilt in the backward pass instead of captured; the
    // im2col buffer dominates memory otherwise.
    return make_op({d.c_out, d.out_h, d.out_w}, std::move(out), {input, kernels},
                   [d](TensorNode& n) {
        const Eigen::Index krows = static_cast<Eigen::Index>(d.c_in) * d.kh * d.kw;
        const Eigen::Index ncols = static_cast<Eigen::Index>(d.out_h) * d.out_w;
        ConstRowMap g(n.grad.data(), d.c_out, ncols);
        RowMat patches = im2col(n.parents[0]->values, d);
        RowMap(n.parents[1]->grad.data(), d.c_out, krows) += g * patches.transpose();
        ConstRowMap kmat(n.parents[1]->values.data(), d.c_out, krows);
        RowMat dpatches = kmat.transpose() * g;
        col2im_accumulate(dpatches, d, n.parents[0]->grad);
    });
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
    if (input.rank() != 3)
        throw std::invalid_argument("add_channel_bias: input must be C x H x W");
    const int c = input.dim(0);
    const Eigen::Index hw = static_cast<Eigen::Index>(input.dim(1)) * input.dim(2);
    if (bias.numel() != c)
        throw std::invalid_argument("add_channel_bias: bias length mismatch");
    Array out = input.values();
    for (int ci = 0; ci < c; ++ci) out.segment(ci * hw, hw) += bias.value_at(ci);
    return make_op(input.shape(), std::move(out), {input, bias},
                   [c, hw](TensorNode& n) {
        n.parents[0]->grad += n.grad;
        for (int ci = 0; ci < c; ++ci)
            n.parents[1]->grad(ci) += n.grad.segment(ci * hw, hw).sum();
    });
}

Tensor instance_norm(const Tensor& input, const Tensor& gain, const Tensor& shift,
                     double eps) {
    if (input.rank() != 3)
        throw std::invalid_argument("instance_norm: input must be C x H x W");
    const int c = input.dim(0);
    const Eigen::Index hw = static_cast<Eigen::Index>(input.dim(1)) * input.dim(2);
    if (gain.numel() != c || shift.numel() != c)
        throw std::invalid_argument("instance_norm: gain/shift length mismatch");
    Array out(input.numel());
    for (int ci = 0; ci < c; ++ci) {
        const auto chan = input.values().segment(ci * hw, hw);
        const double mu = chan.mean();
        const double var = (chan - mu).square().mean();
        const double inv_s = 1.0 / std::sqrt(var + eps);
        out.segment(ci * hw, hw) =
            ((chan - mu) * inv_s) * gain.value_at(ci) + shift.value_at(ci);
    }
    check_finite(out, "instance_norm");
    return make_op(input.shape(), std::move(out), {input, gain, shift},
                   [c, hw, eps](TensorNode& n) {
        for (int ci = 0; ci < c; ++ci) {
            const auto chan = n.parents[0]->values.segment(ci * hw, hw);
            const double mu = chan.mean();
            const double var = (chan - mu).square().mean();
            const double inv_s = 1.0 / std::sqrt(var + eps);
            Array xhat = (chan - mu) * inv_s;
            const auto gy = n.grad.segment(ci * hw, hw);
            n.parents[1]->grad(ci) += (gy * xhat).sum();
            n.parents[2]->grad(ci) += gy.sum();
            Array dxhat = gy * n.parents[1]->values(ci);
            const double m1 = dxhat.mean();
            const double m2 = (dxhat * xhat).mean();
            n.parents[0]->grad.segment(ci * hw, hw) += inv_s * (dxhat - m1 - xhat * m2);
        }
    });
}

Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w) {
    if (input.rank() != 3)
        throw std::invalid_argument("adaptive_avg_pool2d: input must be C x H x W");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("adaptive_avg_pool2d: output dims must be positive");
    if (out_h > h || out_w > w)
        throw std::invalid_argument("adaptive_avg_pool2d: output larger than input");
    auto lo = [](int i, int in, int out) { return (i * in) / out; };
    auto hi = [](int i, int in, int out) { return ((i + 1) * in + out - 1) / out; };
    Array out(static_cast<Eigen::Index>(c) * out_h * out_w);
    for (int ci = 0; ci < c; ++ci) {
        const double* chan = input.values().data() + static_cast<Eigen::Index>(ci) * h * w;
        for (int i = 0; i < out_h; ++i)
            for (int j = 0; j < out_w; ++j) {
                const int y0 = lo(i, h, out_h), y1 = hi(i, h, out_h);
                const int x0 = lo(j, w, out_w), x1 = hi(j, w, out_w);
                double acc = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x)
                        acc += chan[static_cast<Eigen::Index>(y) * w + x];
                out((static_cast<Eigen::Index>(ci) * out_h + i) * out_w + j) =
                    acc / ((y1 - y0) * (x1 - x0));
            }
    }
    return make_op({c, out_h, out_w}, std::move(out), {input},
                   [c, h, w, out_h, out_w, lo, hi](TensorNode& n) {
        for (int ci = 0; ci < c; ++ci) {
            double* chan = n.parents[0]->grad.data() + static_cast<Eigen::Index>(ci) * h * w;
            for (int i = 0; i < out_h; ++i)
                for (int j = 0; j < out_w; ++j) {
                    const int y0 = lo(i, h, out_h), y1 = hi(i, h, out_h);
                    const int x0 = lo(j, w, out_w), x1 = hi(j, w, out_w);
                    const double share =
                        n.grad((static_cast<Eigen::Index>(ci) * out_h + i) * out_w + j) /
                        ((y1 - y0) * (x1 - x0));
                    for (int y = y0; y < y1; ++y)
                        for (int x = x0; x < x1; ++x)
                            chan[static_cast<Eigen::Index>(y) * w + x] += share;
                }
        }
    });
}

Tensor gather(const Tensor& a, Shape out_shape, std::vector<std::int64_t> indices) {
    if (shape_numel(out_shape) != static_cast<std::int64_t>(indices.size()))
        throw std::invalid_argument("gather: index count does not match output shape");
    Array out(static_cast<Eigen::Index>(indices.size()));
    const Array& src = a.values();
    for (size_t i = 0; i < indices.size(); ++i) {
        const std::int64_t j = indices[i];
        if (j < 0 || j >= a.numel()) throw std::invalid_argument("gather: index out of range");
        out(static_cast<Eigen::Index>(i)) = src(j);
    }
    return make_op(std::move(out_shape), std::move(out), {a},
                   [indices = std::move(indices)](TensorNode& n) {
        for (size_t i = 0; i < indices.size(); ++i)
            n.parents[0]->grad(indices[i]) += n.grad(static_cast<Eigen::Index>(i));
    });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    auto [rows, cols] = row_view_dims(logits, "cross_entropy");
    if (static_cast<int>(labels.size()) != rows)
        throw std::invalid_argument("cross_entropy: label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= cols)
            throw std::invalid_argument("cross_entropy: label out of range");
    Array probs(logits.numel());
    ConstRowMap x(logits.values().data(), rows, cols);
    RowMap p(probs.data(), rows, cols);
    double loss = 0.0;
    for (int i = 0; i < rows; ++i) {
        Eigen::ArrayXd shifted = x.row(i).array() - x.row(i).maxCoeff();
        const double lse = std::log(shifted.exp().sum());
        loss -= shifted(labels[static_cast<size_t>(i)]) - lse;
        p.row(i) = (shifted - lse).exp().matrix();
    }
    loss /= rows;
    return make_op({1}, Array::Constant(1, loss), {logits},
                   [rows, cols, labels, probs](TensorNode& n) {
        const double g = n.grad(0) / rows;
        RowMap dx(n.parents[0]->grad.data(), rows, cols);
        ConstRowMap p(probs.data(), rows, cols);
        for (int i = 0; i < rows; ++i) {
            dx.row(i) += (p.row(i) * g);
            dx(i, labels[static_cast<size_t>(i)]) -= g;
        }
    });
}

Tensor squared_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "squared_distance");
    Array diff = a.values() - b.values();
    return make_op({1}, Array::Constant(1, diff.square().sum()), {a, b},
                   [](TensorNode& n) {
        Array diff = n.parents[0]->values - n.parents[1]->values;
        n.parents[0]->grad += 2.0 * n.grad(0) * diff;
        n.parents[1]->grad -= 2.0 * n.grad(0) * diff;
    });
}

}  // namespace sbir
