#include "cegncde/autodiff.hpp"

#include "cegncde/errors.hpp"

#include <cmath>
#include <limits>

namespace cegncde::ad {

namespace {

void same_tape(Var a, Var b, const char* op) {
    if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
        throw std::invalid_argument(std::string(op) + ": operands on different tapes");
    }
}

void same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
    }
}

}  // namespace

const Mat& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Mat value) { return record(std::move(value), false, nullptr); }

Var Tape::parameter(Mat value) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Mat value, bool needs_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Mat Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id())];
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var root, double seed) {
    if (root.tape() != this) throw std::invalid_argument("Tape::backward: root from another tape");
    if (root.value().size() != 1) throw ShapeError("Tape::backward: root must be 1 x 1, got " + shape_string(root.value()));
    for (auto& n : nodes_) n.grad.resize(0, 0);
    accumulate(root.id(), Mat::Constant(1, 1, seed));
    for (int id = root.id(); id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
        n.backward(*this, id);
    }
}

Var matmul(Var a, Var b) {
    same_tape(a, b, "matmul");
    const Mat& av = a.value();
    const Mat& bv = b.value();
    if (av.cols() != bv.rows()) throw ShapeError("matmul: " + shape_string(av) + " * " + shape_string(bv));
    Tape& t = *a.tape();
    bool ng = t.needs_grad(a.id()) || t.needs_grad(b.id());
    int ia = a.id(), ib = b.id();
    return t.record(av * bv, ng, [ia, ib](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
        if (tp.needs_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
    });
}

Var add(Var a, Var b) {
    same_tape(a, b, "add");
    same_shape(a.value(), b.value(), "add");
    Tape& t = *a.tape();
    int ia = a.id(), ib = b.id();
    return t.record(a.value() + b.value(), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, int self) {
        tp.accumulate(ia, tp.upstream(self));
        tp.accumulate(ib, tp.upstream(self));
    });
}

Var sub(Var a, Var b) {
    same_tape(a, b, "sub");
    same_shape(a.value(), b.value(), "sub");
    Tape& t = *a.tape();
    int ia = a.id(), ib = b.id();
    return t.record(a.value() - b.value(), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, int self) {
        tp.accumulate(ia, tp.upstream(self));
        tp.accumulate(ib, -tp.upstream(self));
    });
}

Var hadamard(Var a, Var b) {
    same_tape(a, b, "hadamard");
    same_shape(a.value(), b.value(), "hadamard");
    Tape& t = *a.tape();
    int ia = a.id(), ib = b.id();
    return t.record(a.value().cwiseProduct(b.value()), t.needs_grad(ia) || t.needs_grad(ib),
                    [ia, ib](Tape& tp, int self) {
                        const Mat& g = tp.upstream(self);
                        if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                        if (tp.needs_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                    });
}

Var scale(Var a, double k) {
    Tape& t = *a.tape();
    int ia = a.id();
    return t.record(a.value() * k, t.needs_grad(ia),
                    [ia, k](Tape& tp, int self) { tp.accumulate(ia, tp.upstream(self) * k); });
}

Var affine(Var a, double alpha, double beta) {
    Tape& t = *a.tape();
    int ia = a.id();
    Mat v = (a.value() * alpha).array() + beta;
    return t.record(std::move(v), t.needs_grad(ia),
                    [ia, alpha](Tape& tp, int self) { tp.accumulate(ia, tp.upstream(self) * alpha); });
}

Var add_row(Var a, Var bias) {
    same_tape(a, bias, "add_row");
    const Mat& av = a.value();
    const Mat& bv = bias.value();
    if (bv.rows() != 1 || bv.cols() != av.cols()) {
        throw ShapeError("add_row: bias " + shape_string(bv) + " for " + shape_string(av));
    }
    Tape& t = *a.tape();
    int ia = a.id(), ib = bias.id();
    Mat v = av.rowwise() + bv.row(0);
    return t.record(std::move(v), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        tp.accumulate(ia, g);
        if (tp.needs_grad(ib)) tp.accumulate(ib, g.colwise().sum());
    });
}

Var transpose(Var a) {
    Tape& t = *a.tape();
    int ia = a.id();
    return t.record(a.value().transpose(), t.needs_grad(ia),
                    [ia](Tape& tp, int self) { tp.accumulate(ia, tp.upstream(self).transpose()); });
}

Var relu(Var a) {
    Tape& t = *a.tape();
    int ia = a.id();
    return t.record(a.value().cwiseMax(0.0), t.needs_grad(ia), [ia](Tape& tp, int self) {
        const Mat& x = tp.value(ia);
        Mat g = tp.upstream(self);
        for (Eigen::Index k = 0; k < g.size(); ++k)
            if (!(x.data()[k] > 0.0)) g.data()[k] = 0.0;
        tp.accumulate(ia, g);
    });
}

Var sigmoid(Var a) {
    Tape& t = *a.tape();
    int ia = a.id();
    Mat v = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return t.record(std::move(v), t.needs_grad(ia), [ia](Tape& tp, int self) {
        const Mat& y = tp.value(self);
        tp.accumulate(ia, tp.upstream(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
    });
}

Var tanh(Var a) {
    Tape& t = *a.tape();
    int ia = a.id();
    Mat v = a.value().unaryExpr([](double x) { return std::tanh(x); });
    return t.record(std::move(v), t.needs_grad(ia), [ia](Tape& tp, int self) {
        const Mat& y = tp.value(self);
        tp.accumulate(ia, tp.upstream(self).cwiseProduct((1.0 - y.array().square()).matrix()));
    });
}

Var concat_cols(Var a, Var b) {
    same_tape(a, b, "concat_cols");
    const Mat& av = a.value();
    const Mat& bv = b.value();
    if (av.rows() != bv.rows()) throw ShapeError("concat_cols: " + shape_string(av) + " | " + shape_string(bv));
    Mat v(av.rows(), av.cols() + bv.cols());
    v << av, bv;
    Tape& t = *a.tape();
    int ia = a.id(), ib = b.id();
    Eigen::Index left = av.cols(), right = bv.cols();
    return t.record(std::move(v), t.needs_grad(ia) || t.needs_grad(ib), [ia, ib, left, right](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        if (tp.needs_grad(ia)) tp.accumulate(ia, g.leftCols(left));
        if (tp.needs_grad(ib)) tp.accumulate(ib, g.rightCols(right));
    });
}

Var masked_row_softmax(Var logits, const Mat& mask) {
    const Mat& x = logits.value();
    same_shape(x, mask, "masked_row_softmax");
    Mat y = Mat::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            if (mask(i, j) != 0.0) peak = std::max(peak, x(i, j));
        if (peak == -std::numeric_limits<double>::infinity()) {
            throw ShapeError("masked_row_softmax: row " + std::to_string(i) + " has empty support");
        }
        double total = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (mask(i, j) != 0.0) {
                y(i, j) = std::exp(x(i, j) - peak);
                total += y(i, j);
            }
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) y(i, j) /= total;
    }
    Tape& t = *logits.tape();
    int ia = logits.id();
    return t.record(std::move(y), t.needs_grad(ia), [ia](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        const Mat& yv = tp.value(self);
        Vec inner = g.cwiseProduct(yv).rowwise().sum();
        Mat gx = yv.cwiseProduct((g.colwise() - inner));
        tp.accumulate(ia, gx);
    });
}

Var row_softmax(Var logits) {
    return masked_row_softmax(logits, Mat::Ones(logits.rows(), logits.cols()));
}

Var contract_channels(Var field, const Mat& control) {
    const Mat& f = field.value();
    const Eigen::Index n = control.rows();
    const Eigen::Index channels = control.cols();
    if (channels == 0 || f.rows() != n || f.cols() % channels != 0) {
        throw ShapeError("contract_channels: field " + shape_string(f) + " vs control " + shape_string(control));
    }
    const Eigen::Index width = f.cols() / channels;
    Mat out = Mat::Zero(n, width);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < width; ++k) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < channels; ++c) acc += f(i, k * channels + c) * control(i, c);
            out(i, k) = acc;
        }
    Tape& t = *field.tape();
    int ia = field.id();
    return t.record(std::move(out), t.needs_grad(ia), [ia, control, width, channels](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        Mat gf(g.rows(), width * channels);
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index k = 0; k < width; ++k)
                for (Eigen::Index c = 0; c < channels; ++c) gf(i, k * channels + c) = g(i, k) * control(i, c);
        tp.accumulate(ia, gf);
    });
}

Var column_affine(Var a, const Vec& col_scale, const Vec& col_shift) {
    const Mat& av = a.value();
    if (col_scale.size() != av.cols() || col_shift.size() != av.cols()) {
        throw ShapeError("column_affine: " + std::to_string(col_scale.size()) + " scales for " + shape_string(av));
    }
    Mat v = (av * col_scale.asDiagonal()).rowwise() + col_shift.transpose();
    Tape& t = *a.tape();
    int ia = a.id();
    return t.record(std::move(v), t.needs_grad(ia), [ia, col_scale](Tape& tp, int self) {
        tp.accumulate(ia, tp.upstream(self) * col_scale.asDiagonal());
    });
}

Var weighted_abs_error(Var a, const Mat& target, const Mat& weight) {
    const Mat& av = a.value();
    same_shape(av, target, "weighted_abs_error");
    same_shape(av, weight, "weighted_abs_error");
    double total = 0.0;
    for (Eigen::Index k = 0; k < av.size(); ++k) {
        total += weight.data()[k] * std::abs(av.data()[k] - target.data()[k]);
    }
    Tape& t = *a.tape();
    int ia = a.id();
    return t.record(Mat::Constant(1, 1, total), t.needs_grad(ia), [ia, target, weight](Tape& tp, int self) {
        const Mat& x = tp.value(ia);
        const double g = tp.upstream(self)(0, 0);
        Mat gx(x.rows(), x.cols());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double d = x.data()[k] - target.data()[k];
            const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            gx.data()[k] = g * weight.data()[k] * sign;
        }
        tp.accumulate(ia, gx);
    });
}

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, double k) { return scale(a, k); }

}  // namespace cegncde::ad
