#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation as a node holding its value and a backward
// closure. Gradients are accumulated by walking the nodes in reverse creation
// order, so the unrolled solver steps are differentiated exactly as executed.

#include "cegncde/tensor.hpp"

#include <deque>
#include <functional>

namespace cegncde::ad {

class Tape;

class Var {
public:
    Var() = default;

    const Mat& value() const;
    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Mat value);
    Var parameter(Mat value);

    // Record an op result. `backward` receives the node id and must push the
    // node's gradient into its inputs via accumulate().
    Var record(Mat value, bool needs_grad, Backward backward);

    const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    // Gradient of the last backward() root w.r.t. `v`; zeros if `v` was not reached.
    Mat grad(Var v) const;

    // Seeds d(root)/d(root) = seed. `root` must be 1 x 1.
    void backward(Var root, double seed = 1.0);

    template <class Expr>
    void accumulate(int id, const Expr& g) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    const Mat& upstream(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        Backward backward;
        bool needs_grad = false;
    };
    std::deque<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double k);
// alpha * a + beta, elementwise.
Var affine(Var a, double alpha, double beta);
// a + bias broadcast over rows; bias is 1 x cols.
Var add_row(Var a, Var bias);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var concat_cols(Var a, Var b);

// Row softmax restricted to entries where mask != 0; entries outside the
// support are exactly 0. Throws ShapeError for a row with empty support.
Var masked_row_softmax(Var logits, const Mat& mask);
Var row_softmax(Var logits);

// field is N x (d*C) holding an [N x d x C] tensor (index k*C + c); control is
// N x C. Returns out(i, k) = sum_c field(i, k*C + c) * control(i, c).
Var contract_channels(Var field, const Mat& control);

// out(i, j) = a(i, j) * col_scale(j) + col_shift(j).
Var column_affine(Var a, const Vec& col_scale, const Vec& col_shift);

// sum over entries of weight(i, j) * |a(i, j) - target(i, j)| as a 1 x 1 node.
// Subgradient of |x| at 0 is 0.
Var weighted_abs_error(Var a, const Mat& target, const Mat& weight);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, double k);

}  // namespace cegncde::ad
