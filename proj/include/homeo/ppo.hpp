#pragma once

// Recurrent PPO: rollout collection over parallel environment workers,
// generalized advantage estimation, and the clipped-surrogate update with
// sequence-preserving minibatches.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "homeo/environment.hpp"
#include "homeo/network.hpp"

namespace homeo {

struct PpoConfig {
  double learning_rate = 1e-3;
  int n_workers = 16;
  int rollout_steps = 32;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int n_minibatches = 4;
  int update_epochs = 4;
  bool normalize_advantage = true;
  double clip_coef = 0.1;
  bool clip_value_loss = true;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::int64_t total_timesteps = 25000;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::int64_t batch_steps() const { return std::int64_t{n_workers} * rollout_steps; }
  /// Iterations needed to cover total_timesteps (rounded up).
  std::int64_t iterations() const;
};

/// Time-major storage: row t, column = stream (worker * agents + agent).
struct RolloutBatch {
  std::vector<Eigen::MatrixXd> observations;
  Eigen::MatrixXi actions;
  Eigen::MatrixXd log_probs;
  Eigen::MatrixXd values;
  Eigen::MatrixXd rewards;
  Eigen::MatrixXd dones;   // episode ended after step t
  Eigen::MatrixXd starts;  // obs at step t opens an episode
  RecurrentState initial_state;
  Eigen::RowVectorXd bootstrap_values;
  Eigen::MatrixXd advantages;
  Eigen::MatrixXd returns;

  int steps() const { return static_cast<int>(observations.size()); }
  int streams() const { return static_cast<int>(actions.cols()); }
};

struct CompletedEpisode {
  int worker = 0;
  int length = 0;
  bool truncated = false;
};

/// Owns one environment per worker. Workers are auto-reset on episode end and
/// the recurrent state of the affected streams is zeroed.
class RolloutCollector {
 public:
  RolloutCollector(std::vector<std::unique_ptr<Environment>> envs, std::uint64_t seed);

  RolloutBatch collect(const PolicyNetwork& network, int steps);

  int worker_count() const { return static_cast<int>(envs_.size()); }
  int agents_per_worker() const { return agents_; }
  int stream_count() const { return worker_count() * agents_; }
  std::int64_t total_env_steps() const { return env_steps_; }

  /// Episodes finished since the last call.
  std::vector<CompletedEpisode> drain_completed();

 private:
  std::vector<std::unique_ptr<Environment>> envs_;
  int agents_ = 1;
  int obs_size_ = 1;
  std::mt19937_64 rng_;
  Eigen::MatrixXd obs_;
  RecurrentState state_;
  Eigen::RowVectorXd next_start_;
  std::int64_t env_steps_ = 0;
  std::vector<CompletedEpisode> completed_;
};

struct Advantages {
  Eigen::MatrixXd advantages;
  Eigen::MatrixXd returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t;
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; returns = A + V.
Advantages compute_gae(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                       const Eigen::MatrixXd& dones, const Eigen::RowVectorXd& bootstrap_values,
                       double gamma, double lambda);
void compute_gae(RolloutBatch& batch, double gamma, double lambda);

/// In place (x - mean) / (std + 1e-8) over all entries, sample std.
void normalize_advantages(Eigen::MatrixXd& advantages);

/// Rescales grad so its L2 norm is at most max_norm. Returns the norm before clipping.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

struct MinibatchData {
  Eigen::MatrixXi actions;
  Eigen::MatrixXd old_log_probs;
  Eigen::MatrixXd old_values;
  Eigen::MatrixXd advantages;
  Eigen::MatrixXd returns;
};

struct LossTerms {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  std::vector<Eigen::MatrixXd> dlogits;
  std::vector<Eigen::RowVectorXd> dvalues;
};

/// Loss = -min(r A, clip(r) A) + c_v * value_loss - c_e * entropy, averaged
/// over the minibatch, with adjoints w.r.t. logits and values.
LossTerms ppo_loss(const SequenceOutput& forward_pass, const MinibatchData& data,
                   const PpoConfig& config);

class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-5);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;  // before clipping, averaged over minibatches
};

/// Stream indices for one epoch: a shuffled partition into n_minibatches parts.
std::vector<std::vector<int>> partition_streams(int streams, int n_minibatches, std::mt19937_64& rng);

/// Recomputes log pi(a_t) for the stored actions by replaying the recorded
/// starts and initial states.
Eigen::MatrixXd replay_log_probs(const RolloutBatch& batch, const PolicyNetwork& network);

/// Runs update_epochs passes of clipped-surrogate minibatch updates.
/// Throws std::runtime_error on a non-finite loss.
UpdateStats ppo_update(const RolloutBatch& batch, PolicyNetwork& network, Adam& optimizer,
                       const PpoConfig& config, std::mt19937_64& rng);

/// Columns of batch restricted to the given streams.
SequenceInput slice_sequence(const RolloutBatch& batch, const std::vector<int>& streams);
MinibatchData slice_minibatch(const RolloutBatch& batch, const std::vector<int>& streams);

}  // namespace homeo
