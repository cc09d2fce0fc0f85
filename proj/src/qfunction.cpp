#include "rlab/qfunction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace rlab {

int QArch::param_count() const {
    const int out = out_dim();
    switch (kind) {
        case QKind::tabular: return obs_dim * out;
        case QKind::linear: return out * obs_dim + out;
        case QKind::mlp: return hidden * obs_dim + hidden + out * hidden + out;
    }
    return 0;
}

namespace {

void validate_arch(const QArch& a) {
    if (a.obs_dim <= 0 || a.actions <= 0)
        throw std::invalid_argument("QArch: obs_dim and actions must be > 0");
    if (a.kind == QKind::mlp && a.hidden <= 0)
        throw std::invalid_argument("QArch: hidden must be > 0 for mlp");
    if (a.head == QHead::categorical) {
        if (a.support.atoms < 2)
            throw std::invalid_argument("QArch: categorical head needs >= 2 atoms");
        if (!(a.support.v_max > a.support.v_min))
            throw std::invalid_argument("QArch: v_max must exceed v_min");
    }
}

} // namespace

QFunction::QFunction(const QArch& arch) : arch_(arch) {
    validate_arch(arch);
    params_.assign(static_cast<size_t>(arch.param_count()), 0.0);
    const int out = arch_.out_dim();
    if (arch_.kind == QKind::mlp) {
        w1_ = 0;
        b1_ = arch_.hidden * arch_.obs_dim;
        w2_ = b1_ + arch_.hidden;
        b2_ = w2_ + out * arch_.hidden;
    } else {
        w_ = 0;
        b_ = out * arch_.obs_dim; // unused for tabular
    }
}

QFunction::QFunction(const QArch& arch, Rng& init_rng) : QFunction(arch) {
    // Uniform fan-in scaling; biases and tables start at zero.
    const int out = arch_.out_dim();
    if (arch_.kind == QKind::linear) {
        const double s = 1.0 / std::sqrt(static_cast<double>(arch_.obs_dim));
        for (int i = 0; i < out * arch_.obs_dim; ++i)
            params_[static_cast<size_t>(w_ + i)] = init_rng.uniform(-s, s);
    } else if (arch_.kind == QKind::mlp) {
        const double s1 = 1.0 / std::sqrt(static_cast<double>(arch_.obs_dim));
        for (int i = 0; i < arch_.hidden * arch_.obs_dim; ++i)
            params_[static_cast<size_t>(w1_ + i)] = init_rng.uniform(-s1, s1);
        const double s2 = 1.0 / std::sqrt(static_cast<double>(arch_.hidden));
        for (int i = 0; i < out * arch_.hidden; ++i)
            params_[static_cast<size_t>(w2_ + i)] = init_rng.uniform(-s2, s2);
    }
}

void QFunction::check_obs(const Obs& s) const {
    if (s.dim() != arch_.obs_dim)
        throw std::invalid_argument("QFunction: observation dimension mismatch (got " +
                                    std::to_string(s.dim()) + ", expected " +
                                    std::to_string(arch_.obs_dim) + ")");
}

void QFunction::forward(const Obs& s, QWorkspace& ws) const {
    check_obs(s);
    const int out = arch_.out_dim();
    ws.logits.assign(static_cast<size_t>(out), 0.0);
    const double* P = params_.data();
    switch (arch_.kind) {
        case QKind::tabular: {
            s.for_nonzero([&](int j, double x) {
                const double* col = P + w_ + static_cast<size_t>(j) * out;
                for (int o = 0; o < out; ++o) ws.logits[static_cast<size_t>(o)] += x * col[o];
            });
            break;
        }
        case QKind::linear: {
            const int D = arch_.obs_dim;
            for (int o = 0; o < out; ++o) ws.logits[static_cast<size_t>(o)] = P[b_ + o];
            s.for_nonzero([&](int j, double x) {
                for (int o = 0; o < out; ++o)
                    ws.logits[static_cast<size_t>(o)] += x * P[w_ + o * D + j];
            });
            break;
        }
        case QKind::mlp: {
            const int D = arch_.obs_dim;
            const int H = arch_.hidden;
            ws.h_pre.assign(static_cast<size_t>(H), 0.0);
            for (int i = 0; i < H; ++i) ws.h_pre[static_cast<size_t>(i)] = P[b1_ + i];
            s.for_nonzero([&](int j, double x) {
                const double* col = P + w1_;
                for (int i = 0; i < H; ++i)
                    ws.h_pre[static_cast<size_t>(i)] += x * col[static_cast<size_t>(i) * D + j];
            });
            ws.h.resize(static_cast<size_t>(H));
            for (int i = 0; i < H; ++i)
                ws.h[static_cast<size_t>(i)] = std::max(0.0, ws.h_pre[static_cast<size_t>(i)]);
            const double* __restrict hv = ws.h.data();
            for (int o = 0; o < out; ++o) {
                const double* __restrict row = P + w2_ + static_cast<size_t>(o) * H;
                double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                int i = 0;
                for (; i + 4 <= H; i += 4) {
                    a0 += row[i] * hv[i];
                    a1 += row[i + 1] * hv[i + 1];
                    a2 += row[i + 2] * hv[i + 2];
                    a3 += row[i + 3] * hv[i + 3];
                }
                double acc = P[b2_ + o] + ((a0 + a1) + (a2 + a3));
                for (; i < H; ++i) acc += row[i] * hv[i];
                ws.logits[static_cast<size_t>(o)] = acc;
            }
            break;
        }
    }
}

void QFunction::forward_block(const Obs& s, int action, QWorkspace& ws) const {
    check_obs(s);
    const int K = arch_.per_action();
    const int base = action * K;
    ws.logits.assign(static_cast<size_t>(K), 0.0);
    const double* P = params_.data();
    switch (arch_.kind) {
        case QKind::tabular: {
            const int out = arch_.out_dim();
            s.for_nonzero([&](int j, double x) {
                const double* col = P + w_ + static_cast<size_t>(j) * out;
                for (int k = 0; k < K; ++k) ws.logits[static_cast<size_t>(k)] += x * col[base + k];
            });
            break;
        }
        case QKind::linear: {
            const int D = arch_.obs_dim;
            for (int k = 0; k < K; ++k) ws.logits[static_cast<size_t>(k)] = P[b_ + base + k];
            s.for_nonzero([&](int j, double x) {
                for (int k = 0; k < K; ++k)
                    ws.logits[static_cast<size_t>(k)] += x * P[w_ + (base + k) * D + j];
            });
            break;
        }
        case QKind::mlp: {
            const int D = arch_.obs_dim;
            const int H = arch_.hidden;
            ws.h_pre.resize(static_cast<size_t>(H));
            double* __restrict hpre = ws.h_pre.data();
            const double* __restrict bb1 = P + b1_;
            for (int i = 0; i < H; ++i) hpre[i] = bb1[i];
            s.for_nonzero([&](int j, double x) {
                const double* __restrict col = P + w1_ + j;
                for (int i = 0; i < H; ++i) hpre[i] += x * col[static_cast<size_t>(i) * D];
            });
            ws.h.resize(static_cast<size_t>(H));
            double* __restrict hv = ws.h.data();
            for (int i = 0; i < H; ++i) hv[i] = std::max(0.0, hpre[i]);
            for (int k = 0; k < K; ++k) {
                const int o = base + k;
                const double* __restrict row = P + w2_ + static_cast<size_t>(o) * H;
                // Four partial sums break the FMA dependency chain.
                double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                int i = 0;
                for (; i + 4 <= H; i += 4) {
                    a0 += row[i] * hv[i];
                    a1 += row[i + 1] * hv[i + 1];
                    a2 += row[i + 2] * hv[i + 2];
                    a3 += row[i + 3] * hv[i + 3];
                }
                double acc = P[b2_ + o] + ((a0 + a1) + (a2 + a3));
                for (; i < H; ++i) acc += row[i] * hv[i];
                ws.logits[static_cast<size_t>(k)] = acc;
            }
            break;
        }
    }
}

void QFunction::block_probs(const QWorkspace& ws, std::vector<double>& probs) const {
    const int K = arch_.support.atoms;
    probs.resize(static_cast<size_t>(K));
    double mx = ws.logits[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, ws.logits[static_cast<size_t>(k)]);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        const double e = std::exp(ws.logits[static_cast<size_t>(k)] - mx);
        probs[static_cast<size_t>(k)] = e;
        sum += e;
    }
    for (int k = 0; k < K; ++k) probs[static_cast<size_t>(k)] /= sum;
}

void QFunction::action_probs(const QWorkspace& ws, int action, std::vector<double>& probs) const {
    const int K = arch_.support.atoms;
    probs.resize(static_cast<size_t>(K));
    const double* block = ws.logits.data() + static_cast<size_t>(action) * K;
    double mx = block[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, block[k]);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        const double e = std::exp(block[k] - mx);
        probs[static_cast<size_t>(k)] = e;
        sum += e;
    }
    for (int k = 0; k < K; ++k) probs[static_cast<size_t>(k)] /= sum;
}

void QFunction::q_values(const Obs& s, std::vector<double>& out) const {
    QWorkspace ws;
    forward(s, ws);
    const int A = arch_.actions;
    out.resize(static_cast<size_t>(A));
    if (arch_.head == QHead::scalar) {
        std::copy(ws.logits.begin(), ws.logits.end(), out.begin());
        return;
    }
    const int K = arch_.support.atoms;
    std::vector<double> probs;
    for (int a = 0; a < A; ++a) {
        action_probs(ws, a, probs);
        double mean = 0.0;
        for (int k = 0; k < K; ++k) mean += probs[static_cast<size_t>(k)] * arch_.support.atom(k);
        out[static_cast<size_t>(a)] = mean;
    }
}

std::vector<double> QFunction::q_values(const Obs& s) const {
    std::vector<double> out;
    q_values(s, out);
    return out;
}

std::vector<double> QFunction::distributions(const Obs& s) const {
    if (arch_.head != QHead::categorical)
        throw std::logic_error("QFunction::distributions: scalar head has no distributions");
    QWorkspace ws;
    forward(s, ws);
    const int A = arch_.actions;
    const int K = arch_.support.atoms;
    std::vector<double> out(static_cast<size_t>(A * K));
    std::vector<double> probs;
    for (int a = 0; a < A; ++a) {
        action_probs(ws, a, probs);
        std::copy(probs.begin(), probs.end(), out.begin() + static_cast<size_t>(a) * K);
    }
    return out;
}

int QFunction::greedy_action(const Obs& s, QWorkspace& ws) const {
    forward(s, ws);
    const int A = arch_.actions;
    if (arch_.head == QHead::scalar) {
        int best = 0;
        for (int a = 1; a < A; ++a)
            if (ws.logits[static_cast<size_t>(a)] > ws.logits[static_cast<size_t>(best)]) best = a;
        return best;
    }
    const int K = arch_.support.atoms;
    int best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
        action_probs(ws, a, ws.probs);
        double mean = 0.0;
        for (int k = 0; k < K; ++k) mean += ws.probs[static_cast<size_t>(k)] * arch_.support.atom(k);
        if (mean > best_q) {
            best_q = mean;
            best = a;
        }
    }
    return best;
}

double QFunction::max_q(const Obs& s, QWorkspace& ws) const {
    forward(s, ws);
    const int A = arch_.actions;
    if (arch_.head == QHead::scalar) {
        double best = ws.logits[0];
        for (int a = 1; a < A; ++a) best = std::max(best, ws.logits[static_cast<size_t>(a)]);
        return best;
    }
    const int K = arch_.support.atoms;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
        action_probs(ws, a, ws.probs);
        double mean = 0.0;
        for (int k = 0; k < K; ++k) mean += ws.probs[static_cast<size_t>(k)] * arch_.support.atom(k);
        best = std::max(best, mean);
    }
    return best;
}

void QFunction::backprop_action_block(const Obs& s, QWorkspace& ws, int action,
                                      std::span<const double> dblock,
                                      std::span<double> grad) const {
    const int K = arch_.per_action();
    if (static_cast<int>(dblock.size()) != K)
        throw std::invalid_argument("backprop_action_block: dblock size mismatch");
    const int base = action * K; // first output row of this action's block
    const double* P = params_.data();
    double* G = grad.data();
    switch (arch_.kind) {
        case QKind::tabular: {
            const int out = arch_.out_dim();
            s.for_nonzero([&](int j, double x) {
                double* col = G + w_ + static_cast<size_t>(j) * out;
                for (int k = 0; k < K; ++k) col[base + k] += x * dblock[static_cast<size_t>(k)];
            });
            break;
        }
        case QKind::linear: {
            const int D = arch_.obs_dim;
            for (int k = 0; k < K; ++k) G[b_ + base + k] += dblock[static_cast<size_t>(k)];
            s.for_nonzero([&](int j, double x) {
                for (int k = 0; k < K; ++k)
                    G[w_ + (base + k) * D + j] += x * dblock[static_cast<size_t>(k)];
            });
            break;
        }
        case QKind::mlp: {
            const int D = arch_.obs_dim;
            const int H = arch_.hidden;
            // Output layer rows of the chosen block + hidden gradient.
            auto& dh = ws.dh;
            dh.assign(static_cast<size_t>(H), 0.0);
            const double* __restrict hv = ws.h.data();
            double* __restrict dhv = dh.data();
            for (int k = 0; k < K; ++k) {
                const double d = dblock[static_cast<size_t>(k)];
                const int o = base + k;
                double* __restrict grow = G + w2_ + static_cast<size_t>(o) * H;
                for (int i = 0; i < H; ++i) grow[i] += d * hv[i];
                const double* __restrict row = P + w2_ + static_cast<size_t>(o) * H;
                for (int i = 0; i < H; ++i) dhv[i] += d * row[i];
                G[b2_ + o] += d;
            }
            // ReLU mask, then first layer.
            const double* __restrict hp = ws.h_pre.data();
            for (int i = 0; i < H; ++i)
                if (hp[i] <= 0.0) dhv[i] = 0.0;
            double* __restrict gb1 = G + b1_;
            for (int i = 0; i < H; ++i) gb1[i] += dhv[i];
            s.for_nonzero([&](int j, double x) {
                double* __restrict col = G + w1_ + j;
                for (int i = 0; i < H; ++i) col[static_cast<size_t>(i) * D] += x * dhv[i];
            });
            break;
        }
    }
}

// ---------------------------------------------------------------------------

void c51_project(const CategoricalSupport& support, std::span<const double> probs,
                 double reward, double effective_discount, std::span<double> out) {
    const int K = support.atoms;
    if (static_cast<int>(probs.size()) != K || static_cast<int>(out.size()) != K)
        throw std::invalid_argument("c51_project: size mismatch");
    if (effective_discount < 0.0 || effective_discount >= 1.0 + 1e-12)
        throw std::invalid_argument("c51_project: effective_discount must be in [0, 1]");
    std::fill(out.begin(), out.end(), 0.0);
    const double dz = support.delta();
    for (int j = 0; j < K; ++j) {
        const double mass = probs[static_cast<size_t>(j)];
        if (mass == 0.0) continue;
        double z = reward + effective_discount * support.atom(j);
        z = std::min(std::max(z, support.v_min), support.v_max);
        const double b = (z - support.v_min) / dz;
        int lo = static_cast<int>(std::floor(b));
        int hi = static_cast<int>(std::ceil(b));
        lo = std::min(std::max(lo, 0), K - 1);
        hi = std::min(std::max(hi, 0), K - 1);
        if (lo == hi) {
            out[static_cast<size_t>(lo)] += mass;
        } else {
            out[static_cast<size_t>(lo)] += mass * (static_cast<double>(hi) - b);
            out[static_cast<size_t>(hi)] += mass * (b - static_cast<double>(lo));
        }
    }
}

double td_loss_and_grad(const QFunction& qf, std::span<const Obs* const> states,
                        std::span<const int> actions, std::span<const double> targets,
                        std::span<const double> weights, double huber_delta,
                        std::span<double> grad, std::span<double> per_sample_td,
                        QWorkspace& ws) {
    const size_t B = states.size();
    if (actions.size() != B || targets.size() != B || weights.size() != B)
        throw std::invalid_argument("td_loss_and_grad: batch size mismatch");
    if (qf.arch().head != QHead::scalar)
        throw std::logic_error("td_loss_and_grad: requires a scalar head");
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(B);
    double dq = 0.0;
    for (size_t i = 0; i < B; ++i) {
        qf.forward_block(*states[i], actions[i], ws);
        const double q = ws.logits[0];
        const double e = q - targets[i];
        const double ae = std::abs(e);
        double l;
        if (ae <= huber_delta) {
            l = 0.5 * e * e;
            dq = e;
        } else {
            l = huber_delta * (ae - 0.5 * huber_delta);
            dq = e > 0.0 ? huber_delta : -huber_delta;
        }
        loss += weights[i] * l * inv_b;
        if (!per_sample_td.empty()) per_sample_td[i] = ae;
        const double d = weights[i] * dq * inv_b;
        qf.backprop_action_block(*states[i], ws, actions[i], std::span<const double>(&d, 1),
                                 grad);
    }
    if (!std::isfinite(loss)) throw DivergenceError("td loss is non-finite");
    return loss;
}

double c51_loss_and_grad(const QFunction& qf, std::span<const Obs* const> states,
                         std::span<const int> actions,
                         std::span<const double> projected_targets,
                         std::span<const double> weights, std::span<double> grad,
                         std::span<double> per_sample_ce, QWorkspace& ws) {
    const size_t B = states.size();
    const int K = qf.arch().support.atoms;
    if (actions.size() != B || weights.size() != B ||
        projected_targets.size() != B * static_cast<size_t>(K))
        throw std::invalid_argument("c51_loss_and_grad: batch size mismatch");
    if (qf.arch().head != QHead::categorical)
        throw std::logic_error("c51_loss_and_grad: requires a categorical head");
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (size_t i = 0; i < B; ++i) {
        qf.forward_block(*states[i], actions[i], ws);
        const double* m = projected_targets.data() + i * static_cast<size_t>(K);
        // Cross-entropy via log-sum-exp: -sum_k m_k log p_k =
        // logsumexp(logits) - sum_k m_k logit_k, since sum_k m_k = 1.
        // One log instead of K, and the exps double as the softmax.
        const double* lg = ws.logits.data();
        double mx = lg[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, lg[k]);
        ws.probs.resize(static_cast<size_t>(K));
        double sum = 0.0;
        double dot = 0.0;
        for (int k = 0; k < K; ++k) {
            const double e = std::exp(lg[k] - mx);
            ws.probs[static_cast<size_t>(k)] = e;
            sum += e;
            dot += m[k] * (lg[k] - mx);
        }
        const double ce = std::log(sum) - dot;
        const double inv_sum = 1.0 / sum;
        ws.dblock.resize(static_cast<size_t>(K));
        const double scale = weights[i] * inv_b;
        for (int k = 0; k < K; ++k)
            ws.dblock[static_cast<size_t>(k)] =
                scale * (ws.probs[static_cast<size_t>(k)] * inv_sum - m[k]);
        loss += weights[i] * ce * inv_b;
        if (!per_sample_ce.empty()) per_sample_ce[i] = ce;
        qf.backprop_action_block(*states[i], ws, actions[i], ws.dblock, grad);
    }
    if (!std::isfinite(loss)) throw DivergenceError("c51 loss is non-finite");
    return loss;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'L', 'Q', 'F', '0', '0', '0', '1'};

template <class T>
void put(std::ofstream& f, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const QFunction& qf, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    f.write(kMagic, sizeof(kMagic));
    const QArch& a = qf.arch();
    put<int32_t>(f, static_cast<int32_t>(a.kind));
    put<int32_t>(f, static_cast<int32_t>(a.head));
    put<int32_t>(f, a.obs_dim);
    put<int32_t>(f, a.hidden);
    put<int32_t>(f, a.actions);
    put<int32_t>(f, a.support.atoms);
    put<double>(f, a.support.v_min);
    put<double>(f, a.support.v_max);
    put<int64_t>(f, static_cast<int64_t>(qf.params().size()));
    f.write(reinterpret_cast<const char*>(qf.params().data()),
            static_cast<std::streamsize>(qf.params().size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

QFunction load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    QArch a;
    a.kind = static_cast<QKind>(take<int32_t>(f));
    a.head = static_cast<QHead>(take<int32_t>(f));
    a.obs_dim = take<int32_t>(f);
    a.hidden = take<int32_t>(f);
    a.actions = take<int32_t>(f);
    a.support.atoms = take<int32_t>(f);
    a.support.v_min = take<double>(f);
    a.support.v_max = take<double>(f);
    const int64_t count = take<int64_t>(f);
    if (count != a.param_count())
        throw std::runtime_error("checkpoint: parameter count does not match architecture");
    QFunction qf(a);
    f.read(reinterpret_cast<char*>(qf.params().data()),
           static_cast<std::streamsize>(count) * static_cast<std::streamsize>(sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: truncated parameter vector");
    return qf;
}

} // namespace rlab
