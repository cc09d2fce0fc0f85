#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlab/observation.hpp"
#include "rlab/rng.hpp"

namespace rlab {

enum class QKind { tabular, linear, mlp };
enum class QHead { scalar, categorical };

/// Thrown when a loss goes non-finite; the run harness records the run as
/// diverged instead of crashing.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed atom support for the categorical head: K evenly spaced atoms on
/// [v_min, v_max].
struct CategoricalSupport {
    double v_min = -1.0;
    double v_max = 1.0;
    int atoms = 51;

    double delta() const { return (v_max - v_min) / static_cast<double>(atoms - 1); }
    double atom(int i) const { return v_min + static_cast<double>(i) * delta(); }
};

struct QArch {
    QKind kind = QKind::tabular;
    QHead head = QHead::scalar;
    int obs_dim = 1;
    int hidden = 64; // mlp only
    int actions = 2;
    CategoricalSupport support;

    int per_action() const { return head == QHead::categorical ? support.atoms : 1; }
    int out_dim() const { return actions * per_action(); }
    int param_count() const;
};

/// Reusable forward/backward scratch so the training loop never allocates.
struct QWorkspace {
    std::vector<double> h_pre;
    std::vector<double> h;
    std::vector<double> logits;
    std::vector<double> probs;
    std::vector<double> dblock;
    std::vector<double> dh;
    std::vector<double> scratch;
};

/// Action-value approximator over a flat parameter vector, with the gradient
/// computation written out by hand. The tabular kind is a bias-free linear
/// map, which reduces to table lookup on one-hot observations.
class QFunction {
public:
    explicit QFunction(const QArch& arch); // zero-initialized
    QFunction(const QArch& arch, Rng& init_rng);

    const QArch& arch() const { return arch_; }
    int param_count() const { return static_cast<int>(params_.size()); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// Raw output layer: length actions (scalar) or actions*atoms logits
    /// (categorical). Fills ws.h_pre/ws.h for the mlp kind.
    void forward(const Obs& s, QWorkspace& ws) const;

    /// Output layer restricted to one action's block (length 1 or atoms into
    /// ws.logits); the losses only ever read the sampled action, so this
    /// skips the other actions' output rows.
    void forward_block(const Obs& s, int action, QWorkspace& ws) const;

    /// Softmax of a block-forwarded categorical output.
    void block_probs(const QWorkspace& ws, std::vector<double>& probs) const;

    /// Scalar action values; for the categorical head these are the
    /// distribution means over the support.
    void q_values(const Obs& s, std::vector<double>& out) const;
    std::vector<double> q_values(const Obs& s) const;

    /// Per-action probability vectors (categorical head only), length
    /// actions*atoms, each action block summing to 1.
    std::vector<double> distributions(const Obs& s) const;

    /// Softmax probabilities of one action's block from forwarded logits.
    void action_probs(const QWorkspace& ws, int action, std::vector<double>& probs) const;

    int greedy_action(const Obs& s, QWorkspace& ws) const;
    double max_q(const Obs& s, QWorkspace& ws) const;

    /// Accumulates d(loss)/d(params) into grad given d(loss)/d(logits of the
    /// chosen action block). Requires the workspace state left by forward(s).
    void backprop_action_block(const Obs& s, QWorkspace& ws, int action,
                               std::span<const double> dblock,
                               std::span<double> grad) const;

private:
    void check_obs(const Obs& s) const;

    QArch arch_;
    std::vector<double> params_;
    // layout offsets
    int w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0; // mlp
    int w_ = 0, b_ = 0;                      // linear / tabular (w only)
};

/// Distributes each atom's mass onto clamp(reward + discount * z_j) against
/// the same support, splitting linearly between the two nearest atoms.
/// `out` must have length support.atoms; overwritten. Conserves total mass.
void c51_project(const CategoricalSupport& support, std::span<const double> probs,
                 double reward, double effective_discount, std::span<double> out);

/// Weighted Huber regression loss over a batch, mean_i w_i * huber(q_i - y_i).
/// Accumulates the gradient into grad (caller zeroes). per_sample_td may be
/// empty; otherwise it receives |q_i - y_i|. Throws DivergenceError when the
/// loss is non-finite.
double td_loss_and_grad(const QFunction& qf, std::span<const Obs* const> states,
                        std::span<const int> actions, std::span<const double> targets,
                        std::span<const double> weights, double huber_delta,
                        std::span<double> grad, std::span<double> per_sample_td,
                        QWorkspace& ws);

/// Weighted cross-entropy between projected target distributions (row-major
/// batch x atoms) and the predicted distribution of the taken action.
/// per_sample_ce receives each sample's cross-entropy (the prioritization
/// signal for the categorical head).
double c51_loss_and_grad(const QFunction& qf, std::span<const Obs* const> states,
                         std::span<const int> actions,
                         std::span<const double> projected_targets,
                         std::span<const double> weights, std::span<double> grad,
                         std::span<double> per_sample_ce, QWorkspace& ws);

/// Flat-vector checkpoint with an architecture header, little-endian 64-bit
/// floats.
void save_checkpoint(const QFunction& qf, const std::string& path);
QFunction load_checkpoint(const std::string& path);

} // namespace rlab
