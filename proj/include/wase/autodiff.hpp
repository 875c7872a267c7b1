#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wase/errors.hpp"
#include "wase/tensor.hpp"

namespace wase {

// Handle into a Tape.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode computation tape. Records every operation in creation
// order (already topological) and replays adjoints in reverse. One tape
// per training context; a tape is confined to one thread at a time.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor t) { return push(std::move(t), nullptr); }

    Var scalar(double v) { return leaf(Tensor::scalar(v)); }

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }

    double scalar_value(Var v) const { return value(v).scalar_value(); }

    // Gradient of the last backward() target w.r.t. v. Zeros if v was
    // not on the path.
    Tensor grad(Var v) const {
        const Node& n = nodes_[check(v)];
        if (n.grad.empty()) return Tensor(n.value.shape());
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        bindings_.clear();
        kink_ = false;
    }

    // Marks proximity to a non-smooth point (hinge at the margin, clamped
    // log). The finite-difference checker skips coordinates whose
    // evaluations set this flag.
    void note_kink() { kink_ = true; }
    bool kink_observed() const { return kink_; }

    // Associates a leaf with a named parameter so a ParameterStore can
    // collect its gradient after backward().
    void bind_parameter(Var v, std::string name) { bindings_.emplace_back(v, std::move(name)); }
    const std::vector<std::pair<Var, std::string>>& parameter_bindings() const { return bindings_; }

    // ---- arithmetic ----

    Var add(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        require_same_shape(x, y, "add");
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] + y[i];
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            t.accumulate(b, n.grad);
        });
    }

    Var sub(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        require_same_shape(x, y, "sub");
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] - y[i];
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            t.accumulate(a, n.grad);
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] -= n.grad[i];
        });
    }

    Var neg(Var a) { return scale(a, -1.0); }

    // Elementwise product.
    Var mul(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        require_same_shape(x, y, "mul");
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] * y[i];
        return push(std::move(out), [a, b](Tape& t, const Node& n) {
            const Tensor& x = t.value(a);
            const Tensor& y = t.value(b);
            Tensor& ga = t.grad_buffer(a);
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < n.grad.numel(); ++i) {
                ga[i] += n.grad[i] * y[i];
                gb[i] += n.grad[i] * x[i];
            }
        });
    }

    Var scale(Var a, double c) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = c * x[i];
        return push(std::move(out), [a, c](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += c * n.grad[i];
        });
    }

    Var add_const(Var a, double c) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = x[i] + c;
        return push(std::move(out), [a](Tape& t, const Node& n) { t.accumulate(a, n.grad); });
    }

    // Vector (or matrix) scaled by a scalar variable.
    Var scale_by(Var a, Var s) {
        const Tensor& x = value(a);
        const double sv = scalar_value(s);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = sv * x[i];
        return push(std::move(out), [a, s](Tape& t, const Node& n) {
            const Tensor& x = t.value(a);
            const double sv = t.scalar_value(s);
            Tensor& ga = t.grad_buffer(a);
            double gs = 0.0;
            for (std::size_t i = 0; i < x.numel(); ++i) {
                ga[i] += sv * n.grad[i];
                gs += n.grad[i] * x[i];
            }
            t.grad_buffer(s)[0] += gs;
        });
    }

    // ---- linear algebra ----

    // matmul covers [m x k]*[k x n], [m x k]*[k] and [k]*[k x n].
    Var matmul(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        if (x.rank() == 2 && y.rank() == 2) {
            if (x.extent(1) != y.extent(0)) throw matmul_error(x, y);
            const std::size_t m = x.extent(0), k = x.extent(1), n = y.extent(1);
            Tensor out({m, n});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double xv = x.at(i, p);
                    if (xv == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += xv * y.at(p, j);
                }
            }
            return push(std::move(out), [a, b](Tape& t, const Node& nd) {
                const Tensor& x = t.value(a);
                const Tensor& y = t.value(b);
                Tensor& ga = t.grad_buffer(a);
                Tensor& gb = t.grad_buffer(b);
                const std::size_t m = x.extent(0), k = x.extent(1), n = y.extent(1);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        ga.at(i, p) += unrolled_dot(nd.grad.data() + i * n, y.data() + p * n, n);
                    }
                }
                for (std::size_t p = 0; p < k; ++p) {
                    for (std::size_t i = 0; i < m; ++i) {
                        const double xv = x.at(i, p);
                        if (xv == 0.0) continue;
                        double* gbrow = gb.data() + p * n;
                        const double* grow = nd.grad.data() + i * n;
                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += xv * grow[j];
                    }
                }
            });
        }
        if (x.rank() == 2 && y.rank() == 1) {
            if (x.extent(1) != y.extent(0)) throw matmul_error(x, y);
            const std::size_t m = x.extent(0), k = x.extent(1);
            Tensor out({m});
            for (std::size_t i = 0; i < m; ++i) {
                out[i] = unrolled_dot(x.data() + i * k, y.data(), k);
            }
            return push(std::move(out), [a, b](Tape& t, const Node& nd) {
                const Tensor& x = t.value(a);
                const Tensor& y = t.value(b);
                Tensor& ga = t.grad_buffer(a);
                Tensor& gb = t.grad_buffer(b);
                const std::size_t m = x.extent(0), k = x.extent(1);
                for (std::size_t i = 0; i < m; ++i) {
                    const double g = nd.grad[i];
                    if (g == 0.0) continue;
                    double* garow = ga.data() + i * k;
                    const double* xrow = x.data() + i * k;
                    double* gbp = gb.data();
                    const double* yp = y.data();
                    for (std::size_t p = 0; p < k; ++p) {
                        garow[p] += g * yp[p];
                        gbp[p] += g * xrow[p];
                    }
                }
            });
        }
        if (x.rank() == 1 && y.rank() == 2) {
            if (x.extent(0) != y.extent(0)) throw matmul_error(x, y);
            const std::size_t k = x.extent(0), n = y.extent(1);
            Tensor out({n});
            for (std::size_t p = 0; p < k; ++p) {
                const double xv = x[p];
                if (xv == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) out[j] += xv * y.at(p, j);
            }
            return push(std::move(out), [a, b](Tape& t, const Node& nd) {
                const Tensor& x = t.value(a);
                const Tensor& y = t.value(b);
                Tensor& ga = t.grad_buffer(a);
                Tensor& gb = t.grad_buffer(b);
                const std::size_t k = x.extent(0), n = y.extent(1);
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += nd.grad[j] * y.at(p, j);
                        gb.at(p, j) += x[p] * nd.grad[j];
                    }
                    ga[p] += acc;
                }
            });
        }
        throw matmul_error(x, y);
    }

    Var dot(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        require_same_shape(x, y, "dot");
        const double acc = unrolled_dot(x.data(), y.data(), x.numel());
        return push(Tensor::scalar(acc), [a, b](Tape& t, const Node& n) {
            const double g = n.grad[0];
            const Tensor& x = t.value(a);
            const Tensor& y = t.value(b);
            Tensor& ga = t.grad_buffer(a);
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < x.numel(); ++i) {
                ga[i] += g * y[i];
                gb[i] += g * x[i];
            }
        });
    }

    Var transpose(Var a) {
        const Tensor& x = value(a);
        if (x.rank() != 2) throw ShapeError("transpose expects rank-2, got " + x.shape_string());
        const std::size_t m = x.extent(0), n = x.extent(1);
        Tensor out({n, m});
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) out.at(j, i) = x.at(i, j);
        return push(std::move(out), [a](Tape& t, const Node& nd) {
            Tensor& ga = t.grad_buffer(a);
            const std::size_t m = ga.extent(0), n = ga.extent(1);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += nd.grad.at(j, i);
        });
    }

    // ---- structure ----

    Var concat(const std::vector<Var>& parts) {
        if (parts.empty()) throw ShapeError("concat of zero parts");
        std::size_t total = 0;
        for (Var p : parts) {
            if (value(p).rank() != 1) {
                throw ShapeError("concat expects rank-1 parts, got " + value(p).shape_string());
            }
            total += value(p).numel();
        }
        Tensor out({total});
        std::size_t off = 0;
        for (Var p : parts) {
            const Tensor& x = value(p);
            std::copy(x.data(), x.data() + x.numel(), out.data() + off);
            off += x.numel();
        }
        return push(std::move(out), [parts](Tape& t, const Node& n) {
            std::size_t off = 0;
            for (Var p : parts) {
                Tensor& gp = t.grad_buffer(p);
                for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += n.grad[off + i];
                off += gp.numel();
            }
        });
    }

    Var slice(Var a, std::size_t start, std::size_t len) {
        const Tensor& x = value(a);
        if (x.rank() != 1 || start + len > x.numel()) {
            throw ShapeError("slice [" + std::to_string(start) + ", +" + std::to_string(len) +
                             ") out of range for " + x.shape_string());
        }
        Tensor out({len});
        std::copy(x.data() + start, x.data() + start + len, out.data());
        return push(std::move(out), [a, start, len](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < len; ++i) ga[start + i] += n.grad[i];
        });
    }

    // Row of a rank-2 tensor (embedding lookup).
    Var row(Var table, std::size_t r) {
        const Tensor& x = value(table);
        if (x.rank() != 2 || r >= x.extent(0)) {
            throw ShapeError("row " + std::to_string(r) + " out of range for " + x.shape_string());
        }
        const std::size_t d = x.extent(1);
        Tensor out({d});
        std::copy(x.data() + r * d, x.data() + (r + 1) * d, out.data());
        return push(std::move(out), [table, r, d](Tape& t, const Node& n) {
            Tensor& gt = t.grad_buffer(table);
            for (std::size_t i = 0; i < d; ++i) gt[r * d + i] += n.grad[i];
        });
    }

    Var stack_rows(const std::vector<Var>& rows) {
        if (rows.empty()) throw ShapeError("stack_rows of zero rows");
        const std::size_t d = value(rows[0]).numel();
        for (Var r : rows) {
            if (value(r).rank() != 1 || value(r).numel() != d) {
                throw ShapeError("stack_rows: inconsistent row shape " + value(r).shape_string());
            }
        }
        Tensor out({rows.size(), d});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Tensor& x = value(rows[i]);
            std::copy(x.data(), x.data() + d, out.data() + i * d);
        }
        return push(std::move(out), [rows, d](Tape& t, const Node& n) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                Tensor& gr = t.grad_buffer(rows[i]);
                for (std::size_t j = 0; j < d; ++j) gr[j] += n.grad[i * d + j];
            }
        });
    }

    // ---- nonlinearities ----

    Var sigmoid(Var a) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid(x[i]);
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                const double s = n.value[i];
                ga[i] += n.grad[i] * s * (1.0 - s);
            }
        });
    }

    Var tanh_op(Var a) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(x[i]);
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                const double y = n.value[i];
                ga[i] += n.grad[i] * (1.0 - y * y);
            }
        });
    }

    Var exp_op(Var a) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::exp(x[i]);
        require_finite(out, "exp");
        return push(std::move(out), [a](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[i] * n.value[i];
        });
    }

    // log with a floor; flags the checker when the floor engages.
    Var log_clamped(Var a, double floor = 1e-12) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        bool clamped = false;
        for (std::size_t i = 0; i < out.numel(); ++i) {
            if (x[i] < floor) {
                out[i] = std::log(floor);
                clamped = true;
            } else {
                out[i] = std::log(x[i]);
            }
        }
        if (clamped) note_kink();
        return push(std::move(out), [a, floor](Tape& t, const Node& n) {
            const Tensor& x = t.value(a);
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                if (x[i] >= floor) ga[i] += n.grad[i] / x[i];
            }
        });
    }

    // Hinge; subgradient 0 at the kink, which is flagged when within 1e-6.
    Var relu(Var a) {
        const Tensor& x = value(a);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < out.numel(); ++i) {
            out[i] = x[i] > 0.0 ? x[i] : 0.0;
            if (std::fabs(x[i]) < 1e-6) note_kink();
        }
        return push(std::move(out), [a](Tape& t, const Node& n) {
            const Tensor& x = t.value(a);
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                if (x[i] > 0.0) ga[i] += n.grad[i];
            }
        });
    }

    // ---- reductions ----

    Var sum(Var a) {
        const Tensor& x = value(a);
        double acc = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) acc += x[i];
        return push(Tensor::scalar(acc), [a](Tape& t, const Node& n) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[0];
        });
    }

    Var mean(Var a) {
        const std::size_t n = value(a).numel();
        return scale(sum(a), 1.0 / static_cast<double>(n));
    }

    Var sum_sq_diff(Var a, Var b) {
        const Tensor& x = value(a);
        const Tensor& y = value(b);
        require_same_shape(x, y, "sum_sq_diff");
        double acc = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const double d = x[i] - y[i];
            acc += d * d;
        }
        return push(Tensor::scalar(acc), [a, b](Tape& t, const Node& n) {
            const double g = n.grad[0];
            const Tensor& x = t.value(a);
            const Tensor& y = t.value(b);
            Tensor& ga = t.grad_buffer(a);
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < x.numel(); ++i) {
                const double d = 2.0 * g * (x[i] - y[i]);
                ga[i] += d;
                gb[i] -= d;
            }
        });
    }

    // ---- softmax family (max-shifted) ----

    Var softmax(Var a) {
        const Tensor& x = value(a);
        if (x.rank() != 1 || x.numel() == 0) {
            throw ShapeError("softmax expects a non-empty vector, got " + x.shape_string());
        }
        Tensor out({x.numel()});
        softmax_fill(x.data(), out.data(), x.numel(), 1);
        return push(std::move(out), [a](Tape& t, const Node& n) {
            softmax_backward(n.value.data(), n.grad.data(), t.grad_buffer(a).data(), n.value.numel(), 1);
        });
    }

    Var softmax_rows(Var a) {
        const Tensor& x = value(a);
        if (x.rank() != 2) throw ShapeError("softmax_rows expects rank-2, got " + x.shape_string());
        Tensor out(x.shape());
        const std::size_t m = x.extent(0), n = x.extent(1);
        for (std::size_t i = 0; i < m; ++i) softmax_fill(x.data() + i * n, out.data() + i * n, n, 1);
        return push(std::move(out), [a, m, n](Tape& t, const Node& nd) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < m; ++i) {
                softmax_backward(nd.value.data() + i * n, nd.grad.data() + i * n, ga.data() + i * n,
                                 n, 1);
            }
        });
    }

    Var softmax_cols(Var a) {
        const Tensor& x = value(a);
        if (x.rank() != 2) throw ShapeError("softmax_cols expects rank-2, got " + x.shape_string());
        Tensor out(x.shape());
        const std::size_t m = x.extent(0), n = x.extent(1);
        for (std::size_t j = 0; j < n; ++j) softmax_fill(x.data() + j, out.data() + j, m, n);
        return push(std::move(out), [a, m, n](Tape& t, const Node& nd) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t j = 0; j < n; ++j) {
                softmax_backward(nd.value.data() + j, nd.grad.data() + j, ga.data() + j, m, n);
            }
        });
    }

    // Negative log softmax probability of the gold index, computed via
    // a shifted log-sum-exp. Backward is softmax(x) - onehot(gold).
    Var cross_entropy(Var logits, std::size_t gold) {
        const Tensor& x = value(logits);
        if (x.rank() != 1 || gold >= x.numel()) {
            throw ShapeError("cross_entropy: gold index " + std::to_string(gold) +
                             " out of range for " + x.shape_string());
        }
        double mx = x[0];
        for (std::size_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
        double lse = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) lse += std::exp(x[i] - mx);
        lse = mx + std::log(lse);
        return push(Tensor::scalar(lse - x[gold]), [logits, gold](Tape& t, const Node& n) {
            const double g = n.grad[0];
            const Tensor& x = t.value(logits);
            Tensor& ga = t.grad_buffer(logits);
            double mx = x[0];
            for (std::size_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
            double z = 0.0;
            for (std::size_t i = 0; i < x.numel(); ++i) z += std::exp(x[i] - mx);
            for (std::size_t i = 0; i < x.numel(); ++i) {
                const double p = std::exp(x[i] - mx) / z;
                ga[i] += g * (p - (i == gold ? 1.0 : 0.0));
            }
        });
    }

    // Probability of one index under softmax(logits); used where a loss
    // needs P itself rather than -log P.
    Var softmax_prob(Var logits, std::size_t index) {
        Var s = softmax(logits);
        return slice(s, index, 1);
    }

    // ---- backward ----

    void backward(Var loss) {
        const Tensor& lv = value(loss);
        if (lv.numel() != 1) {
            throw ShapeError("backward expects a scalar loss, got shape " + lv.shape_string());
        }
        grad_buffer(loss)[0] += 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.back || n.grad.empty()) continue;
            n.back(*this, n);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, const Node&)> back;
    };

    std::int32_t check(Var v) const {
        if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
            throw Error("invalid tape handle");
        }
        return v.id;
    }

    Var push(Tensor value, std::function<void(Tape&, const Node&)> back) {
        nodes_.push_back(Node{std::move(value), Tensor(), std::move(back)});
        return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    Tensor& grad_buffer(Var v) {
        Node& n = nodes_[check(v)];
        if (n.grad.empty()) n.grad = Tensor(n.value.shape());
        return n.grad;
    }

    void accumulate(Var v, const Tensor& g) {
        Tensor& buf = grad_buffer(v);
        for (std::size_t i = 0; i < buf.numel(); ++i) buf[i] += g[i];
    }

    // Four independent accumulator chains let the CPU overlap the
    // floating-point adds; summation order is fixed, so results stay
    // deterministic run to run.
    static double unrolled_dot(const double* x, const double* y, std::size_t n) {
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            a0 += x[i] * y[i];
            a1 += x[i + 1] * y[i + 1];
            a2 += x[i + 2] * y[i + 2];
            a3 += x[i + 3] * y[i + 3];
        }
        for (; i < n; ++i) a0 += x[i] * y[i];
        return (a0 + a1) + (a2 + a3);
    }

    static double stable_sigmoid(double x) {
        if (x >= 0.0) {
            const double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    static void softmax_fill(const double* in, double* out, std::size_t n, std::size_t stride) {
        double mx = in[0];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i * stride]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(in[i * stride] - mx);
            out[i * stride] = e;
            z += e;
        }
        for (std::size_t i = 0; i < n; ++i) out[i * stride] /= z;
    }

    static void softmax_backward(const double* y, const double* g, double* gx, std::size_t n,
                                 std::size_t stride) {
        double dotgy = 0.0;
        for (std::size_t i = 0; i < n; ++i) dotgy += g[i * stride] * y[i * stride];
        for (std::size_t i = 0; i < n; ++i) {
            gx[i * stride] += y[i * stride] * (g[i * stride] - dotgy);
        }
    }

    static ShapeError matmul_error(const Tensor& a, const Tensor& b) {
        return ShapeError("matmul: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<Var, std::string>> bindings_;
    bool kink_ = false;
};

}  // namespace wase
