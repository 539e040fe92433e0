#include "ctgfm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ctgfm::nn {

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("non-finite value produced by ") + op);
        }
    }
}

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Tensor& ensure_grad(Node& n) {
    if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
    return n.grad;
}

NodePtr make_node(Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backprop, const char* op) {
    check_finite(value, op);
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    n->requires_grad =
        std::any_of(n->inputs.begin(), n->inputs.end(),
                    [](const NodePtr& p) { return p->requires_grad; });
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

}  // namespace

NodePtr leaf(Tensor value, bool requires_grad) {
    check_finite(value, "leaf");
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr constant(Tensor value) { return leaf(std::move(value), false); }

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    require(a->value.rank() == 2 && b->value.rank() == 2, "matmul: rank-2 operands required");
    const std::size_t m = a->value.rows(), k = a->value.cols(), n = b->value.cols();
    require(b->value.rows() == k, "matmul: inner dimensions disagree");

    Tensor out({m, n});
    const auto& A = a->value.data();
    const auto& B = b->value.data();
    auto& C = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = B.data() + p * n;
            double* crow = C.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }

    auto bp = [m, k, n](Node& self) {
        const auto& G = self.grad.data();
        const auto& A = self.inputs[0]->value.data();
        const auto& B = self.inputs[1]->value.data();
        if (self.inputs[0]->requires_grad) {
            auto& dA = ensure_grad(*self.inputs[0]).data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* grow = G.data() + i * n;
                    const double* brow = B.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    dA[i * k + p] += s;
                }
        }
        if (self.inputs[1]->requires_grad) {
            auto& dB = ensure_grad(*self.inputs[1]).data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = A[i * k + p];
                    if (aip == 0.0) continue;
                    const double* grow = G.data() + i * n;
                    double* brow = dB.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
                }
        }
    };
    return make_node(std::move(out), {a, b}, bp, "matmul");
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    require(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
    auto bp = [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            if (!self.inputs[k]->requires_grad) continue;
            auto& d = ensure_grad(*self.inputs[k]).data();
            const auto& g = self.grad.data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
        }
    };
    return make_node(std::move(out), {a, b}, bp, "add");
}

NodePtr add_rowwise(const NodePtr& a, const NodePtr& bias) {
    require(a->value.rank() == 2, "add_rowwise: rank-2 input required");
    require(bias->value.rank() == 1 && bias->value.size() == a->value.cols(),
            "add_rowwise: bias length must equal column count");
    const std::size_t m = a->value.rows(), n = a->value.cols();
    Tensor out = a->value;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += bias->value[j];
    auto bp = [m, n](Node& self) {
        const auto& g = self.grad.data();
        if (self.inputs[0]->requires_grad) {
            auto& d = ensure_grad(*self.inputs[0]).data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
        }
        if (self.inputs[1]->requires_grad) {
            auto& db = ensure_grad(*self.inputs[1]).data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
        }
    };
    return make_node(std::move(out), {a, bias}, bp, "add_rowwise");
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    require(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
    auto bp = [](Node& self) {
        const auto& g = self.grad.data();
        const auto& av = self.inputs[0]->value.data();
        const auto& bv = self.inputs[1]->value.data();
        if (self.inputs[0]->requires_grad) {
            auto& d = ensure_grad(*self.inputs[0]).data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * bv[i];
        }
        if (self.inputs[1]->requires_grad) {
            auto& d = ensure_grad(*self.inputs[1]).data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * av[i];
        }
    };
    return make_node(std::move(out), {a, b}, bp, "mul");
}

NodePtr scale(const NodePtr& a, double c) {
    Tensor out = a->value;
    for (double& v : out.data()) v *= c;
    auto bp = [c](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        const auto& g = self.grad.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * g[i];
    };
    return make_node(std::move(out), {a}, bp, "scale");
}

NodePtr transpose(const NodePtr& a) {
    require(a->value.rank() == 2, "transpose: rank-2 input required");
    const std::size_t m = a->value.rows(), n = a->value.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a->value.at(i, j);
    auto bp = [m, n](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) d.at(i, j) += self.grad.at(j, i);
    };
    return make_node(std::move(out), {a}, bp, "transpose");
}

NodePtr softmax_rows(const NodePtr& a) {
    require(a->value.rank() == 2, "softmax_rows: rank-2 input required");
    const std::size_t m = a->value.rows(), n = a->value.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double mx = a->value.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, a->value.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(a->value.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
    }
    Tensor saved = out;
    auto bp = [m, n, saved = std::move(saved)](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += self.grad.at(i, j) * saved.at(i, j);
            for (std::size_t j = 0; j < n; ++j)
                d.at(i, j) += saved.at(i, j) * (self.grad.at(i, j) - dot);
        }
    };
    return make_node(std::move(out), {a}, bp, "softmax_rows");
}

NodePtr slice_cols(const NodePtr& a, std::size_t c0, std::size_t c1) {
    require(a->value.rank() == 2, "slice_cols: rank-2 input required");
    require(c0 < c1 && c1 <= a->value.cols(), "slice_cols: bad column range");
    const std::size_t m = a->value.rows(), n = a->value.cols(), w = c1 - c0;
    Tensor out({m, w});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out.at(i, j) = a->value.at(i, c0 + j);
    auto bp = [m, n, w, c0](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) d[i * n + c0 + j] += self.grad.at(i, j);
    };
    return make_node(std::move(out), {a}, bp, "slice_cols");
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const std::size_t m = parts[0]->value.rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        require(p->value.rank() == 2 && p->value.rows() == m, "concat_cols: row mismatch");
        total += p->value.cols();
    }
    Tensor out({m, total});
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p->value.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) out.at(i, off + j) = p->value.at(i, j);
        off += w;
    }
    auto bp = [m, total](Node& self) {
        std::size_t off = 0;
        for (auto& in : self.inputs) {
            const std::size_t w = in->value.cols();
            if (in->requires_grad) {
                auto& d = ensure_grad(*in);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < w; ++j) d.at(i, j) += self.grad.at(i, off + j);
            }
            off += w;
        }
    };
    return make_node(std::move(out), parts, bp, "concat_cols");
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    const std::size_t n = parts[0]->value.cols();
    std::size_t total = 0;
    for (const auto& p : parts) {
        require(p->value.rank() == 2 && p->value.cols() == n, "concat_rows: column mismatch");
        total += p->value.rows();
    }
    Tensor out({total, n});
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data().begin(), p->value.data().end(),
                  out.data().begin() + static_cast<std::ptrdiff_t>(off));
        off += p->value.size();
    }
    auto bp = [](Node& self) {
        std::size_t off = 0;
        for (auto& in : self.inputs) {
            if (in->requires_grad) {
                auto& d = ensure_grad(*in).data();
                for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[off + i];
            }
            off += in->value.size();
        }
    };
    return make_node(std::move(out), parts, bp, "concat_rows");
}

NodePtr reshape(const NodePtr& a, std::vector<std::size_t> shape) {
    require(Tensor::count(shape) == a->value.size(), "reshape: element count mismatch");
    Tensor out(std::move(shape), a->value.data());
    auto bp = [](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    };
    return make_node(std::move(out), {a}, bp, "reshape");
}

NodePtr flatten_row(const NodePtr& a) { return reshape(a, {1, a->value.size()}); }

NodePtr sum(const NodePtr& a) {
    double s = 0.0;
    for (double v : a->value.data()) s += v;
    auto bp = [](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        const double g = self.grad[0];
        for (double& v : d) v += g;
    };
    return make_node(Tensor::scalar(s), {a}, bp, "sum");
}

NodePtr mean_all(const NodePtr& a) {
    return scale(sum(a), 1.0 / static_cast<double>(a->value.size()));
}

NodePtr dropout(const NodePtr& a, double rate, Rng& rng) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    if (rate == 0.0) return a;
    const double keep = 1.0 - rate;
    Tensor mask(a->value.shape());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    auto bp = [mask = std::move(mask)](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * mask[i];
    };
    return make_node(std::move(out), {a}, bp, "dropout");
}

NodePtr batchnorm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                  Tensor& running_mean, Tensor& running_var, Mode mode,
                  double momentum, double eps) {
    require(x->value.rank() == 2, "batchnorm: rank-2 input required");
    const std::size_t m = x->value.rows(), n = x->value.cols();
    require(gamma->value.size() == n && beta->value.size() == n &&
                running_mean.size() == n && running_var.size() == n,
            "batchnorm: feature-dimension mismatch");

    Tensor xhat({m, n});
    std::vector<double> inv_std(n);

    if (mode == Mode::train) {
        std::vector<double> mu(n, 0.0), var(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) mu[j] += x->value.at(i, j);
        for (std::size_t j = 0; j < n; ++j) mu[j] /= static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double d = x->value.at(i, j) - mu[j];
                var[j] += d * d;
            }
        for (std::size_t j = 0; j < n; ++j) var[j] /= static_cast<double>(m);
        for (std::size_t j = 0; j < n; ++j) {
            inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
            running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * mu[j];
            running_var[j] = (1.0 - momentum) * running_var[j] + momentum * var[j];
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                xhat.at(i, j) = (x->value.at(i, j) - mu[j]) * inv_std[j];
    } else {
        for (std::size_t j = 0; j < n; ++j)
            inv_std[j] = 1.0 / std::sqrt(running_var[j] + eps);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                xhat.at(i, j) = (x->value.at(i, j) - running_mean[j]) * inv_std[j];
    }

    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.at(i, j) = gamma->value[j] * xhat.at(i, j) + beta->value[j];

    const bool train = mode == Mode::train;
    auto bp = [m, n, train, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        const auto& gammav = self.inputs[1]->value;
        if (self.inputs[1]->requires_grad) {
            auto& dg = ensure_grad(*self.inputs[1]);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) dg[j] += self.grad.at(i, j) * xhat.at(i, j);
        }
        if (self.inputs[2]->requires_grad) {
            auto& db = ensure_grad(*self.inputs[2]);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) db[j] += self.grad.at(i, j);
        }
        if (!self.inputs[0]->requires_grad) return;
        auto& dx = ensure_grad(*self.inputs[0]);
        if (train) {
            // gradient through the batch statistics
            for (std::size_t j = 0; j < n; ++j) {
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    const double dxh = self.grad.at(i, j) * gammav[j];
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xhat.at(i, j);
                }
                const double inv_m = 1.0 / static_cast<double>(m);
                for (std::size_t i = 0; i < m; ++i) {
                    const double dxh = self.grad.at(i, j) * gammav[j];
                    dx.at(i, j) += inv_std[j] * (dxh - inv_m * sum_dxhat -
                                                 xhat.at(i, j) * inv_m * sum_dxhat_xhat);
                }
            }
        } else {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    dx.at(i, j) += self.grad.at(i, j) * gammav[j] * inv_std[j];
        }
    };
    return make_node(std::move(out), {x, gamma, beta}, bp, "batchnorm");
}

NodePtr weighted_row_sse(const NodePtr& pred, const Tensor& target,
                         const std::vector<double>& row_weights) {
    require(pred->value.rank() == 2 && pred->value.same_shape(target),
            "weighted_row_sse: prediction/target shape mismatch");
    const std::size_t m = pred->value.rows(), n = pred->value.cols();
    require(row_weights.size() == m, "weighted_row_sse: weight count mismatch");

    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (row_weights[i] == 0.0) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = pred->value.at(i, j) - target.at(i, j);
            s += d * d;
        }
        loss += row_weights[i] * s;
    }
    auto bp = [m, n, target, row_weights](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]);
        const double g = self.grad[0];
        for (std::size_t i = 0; i < m; ++i) {
            const double w = row_weights[i];
            if (w == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j)
                d.at(i, j) += g * 2.0 * w * (self.inputs[0]->value.at(i, j) - target.at(i, j));
        }
    };
    return make_node(Tensor::scalar(loss), {pred}, bp, "weighted_row_sse");
}

NodePtr cross_entropy(const NodePtr& logits, const std::vector<int>& labels) {
    require(logits->value.rank() == 2, "cross_entropy: rank-2 logits required");
    const std::size_t m = logits->value.rows(), n = logits->value.cols();
    require(labels.size() == m, "cross_entropy: label count mismatch");
    for (int y : labels)
        require(y >= 0 && static_cast<std::size_t>(y) < n, "cross_entropy: label out of range");

    Tensor probs({m, n});
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double mx = logits->value.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits->value.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(logits->value.at(i, j) - mx);
            probs.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < n; ++j) probs.at(i, j) /= z;
        loss += std::log(z) + mx - logits->value.at(i, static_cast<std::size_t>(labels[i]));
    }
    loss /= static_cast<double>(m);

    auto bp = [m, n, probs = std::move(probs), labels](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]);
        const double g = self.grad[0] / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double onehot = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
                d.at(i, j) += g * (probs.at(i, j) - onehot);
            }
    };
    return make_node(Tensor::scalar(loss), {logits}, bp, "cross_entropy");
}

NodePtr mse(const NodePtr& a, const Tensor& b) {
    require(a->value.same_shape(b), "mse: shape mismatch");
    const std::size_t total = a->value.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        const double d = a->value[i] - b[i];
        loss += d * d;
    }
    loss /= static_cast<double>(total);
    auto bp = [b, total](Node& self) {
        if (!self.inputs[0]->requires_grad) return;
        auto& d = ensure_grad(*self.inputs[0]).data();
        const double g = self.grad[0] * 2.0 / static_cast<double>(total);
        for (std::size_t i = 0; i < total; ++i)
            d[i] += g * (self.inputs[0]->value[i] - b[i]);
    };
    return make_node(Tensor::scalar(loss), {a}, bp, "mse");
}

void backward(const NodePtr& loss) {
    if (loss->value.size() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar");
    }
    // iterative post-order DFS
    std::vector<NodePtr> order;
    std::unordered_set<const Node*> visited;
    std::vector<std::pair<NodePtr, std::size_t>> stack{{loss, 0}};
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx == 0 && visited.count(node.get())) {
            stack.pop_back();
            continue;
        }
        if (idx < node->inputs.size()) {
            NodePtr child = node->inputs[idx++];
            if (!visited.count(child.get())) stack.emplace_back(child, 0);
        } else {
            visited.insert(node.get());
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss->grad = Tensor::scalar(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = **it;
        if (n.requires_grad && n.backprop && n.grad.size() != 0) n.backprop(n);
    }
}

double grad_check(
    const std::function<NodePtr(const std::vector<NodePtr>&)>& build_loss,
    const std::vector<Tensor>& params, double eps) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) {
        throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
    }

    auto eval = [&](const std::vector<Tensor>& p, bool with_grad)
        -> std::pair<double, std::vector<Tensor>> {
        std::vector<NodePtr> leaves;
        leaves.reserve(p.size());
        for (const auto& t : p) leaves.push_back(leaf(t, with_grad));
        NodePtr loss = build_loss(leaves);
        if (loss->value.size() != 1) {
            throw std::invalid_argument("grad_check: loss must be a scalar");
        }
        if (!std::isfinite(loss->value[0])) {
            throw std::runtime_error("grad_check: non-finite loss");
        }
        std::vector<Tensor> grads;
        if (with_grad) {
            backward(loss);
            for (auto& l : leaves) {
                grads.push_back(l->grad.size() ? l->grad : Tensor(l->value.shape()));
            }
        }
        return {loss->value[0], std::move(grads)};
    };

    auto [base_loss, analytic] = eval(params, true);
    (void)base_loss;

    double max_rel = 0.0;
    std::vector<Tensor> work = params;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size(); ++i) {
            const double orig = work[t][i];
            work[t][i] = orig + eps;
            const double fp = eval(work, false).first;
            work[t][i] = orig - eps;
            const double fm = eval(work, false).first;
            work[t][i] = orig;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double rel = std::abs(analytic[t][i] - numeric) /
                               std::max(1.0, std::abs(numeric));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace ctgfm::nn
