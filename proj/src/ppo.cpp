#include "homeo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace homeo {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

void PpoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid PPO config: ") + what);
  };
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(n_workers > 0, "n_workers must be positive");
  require(rollout_steps > 0, "rollout_steps must be positive");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0,1)");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0,1]");
  require(n_minibatches > 0, "n_minibatches must be positive");
  require(update_epochs > 0, "update_epochs must be positive");
  require(clip_coef > 0.0, "clip_coef must be positive");
  require(entropy_coef >= 0.0, "entropy_coef must be non-negative");
  require(value_coef >= 0.0, "value_coef must be non-negative");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(total_timesteps > 0, "total_timesteps must be positive");
}

std::int64_t PpoConfig::iterations() const {
  return (total_timesteps + batch_steps() - 1) / batch_steps();
}

RolloutCollector::RolloutCollector(std::vector<std::unique_ptr<Environment>> envs, std::uint64_t seed)
    : envs_(std::move(envs)), rng_(make_rng(seed, 1)) {
  if (envs_.empty()) throw std::invalid_argument("rollout collection needs at least one worker");
  agents_ = envs_.front()->agent_count();
  obs_size_ = envs_.front()->observation_size();
  for (const auto& env : envs_) {
    if (env->agent_count() != agents_ || env->observation_size() != obs_size_) {
      throw std::invalid_argument("all workers must run the same environment layout");
    }
  }
  const int streams = stream_count();
  obs_ = MatrixXd::Zero(obs_size_, streams);
  for (int w = 0; w < worker_count(); ++w) {
    auto obs = envs_[w]->reset(seed * 1000003ULL + 7919ULL * static_cast<std::uint64_t>(w + 1));
    for (int k = 0; k < agents_; ++k) {
      obs_.col(w * agents_ + k) = Eigen::Map<const VectorXd>(obs[k].data(), obs_size_);
    }
  }
  next_start_ = RowVectorXd::Ones(streams);
}

RolloutBatch RolloutCollector::collect(const PolicyNetwork& network, int steps) {
  const int streams = stream_count();
  if (network.shape().observation_size != obs_size_) {
    throw std::invalid_argument("network observation size does not match the environment");
  }
  if (state_.hidden.cols() != streams) state_ = network.initial_state(streams);

  RolloutBatch batch;
  batch.observations.reserve(steps);
  batch.actions = MatrixXi::Zero(steps, streams);
  batch.log_probs = MatrixXd::Zero(steps, streams);
  batch.values = MatrixXd::Zero(steps, streams);
  batch.rewards = MatrixXd::Zero(steps, streams);
  batch.dones = MatrixXd::Zero(steps, streams);
  batch.starts = MatrixXd::Zero(steps, streams);
  batch.initial_state = state_;

  std::vector<int> actions(agents_);
  for (int t = 0; t < steps; ++t) {
    batch.observations.push_back(obs_);
    batch.starts.row(t) = next_start_;
    auto out = network.forward(obs_, state_);
    state_ = std::move(out.state);
    for (int s = 0; s < streams; ++s) {
      const auto sample = sample_action(out.probs.col(s), rng_);
      batch.actions(t, s) = sample.index;
      batch.log_probs(t, s) = sample.log_prob;
      batch.values(t, s) = out.values(s);
    }
    for (int w = 0; w < worker_count(); ++w) {
      for (int k = 0; k < agents_; ++k) actions[k] = batch.actions(t, w * agents_ + k);
      auto result = envs_[w]->step(actions);
      ++env_steps_;
      const bool done = result.done();
      std::vector<Observation> next_obs;
      if (done) {
        completed_.push_back({w, envs_[w]->elapsed_steps(), result.truncated});
        next_obs = envs_[w]->reset();
      } else {
        next_obs = std::move(result.observations);
      }
      for (int k = 0; k < agents_; ++k) {
        const int s = w * agents_ + k;
        batch.rewards(t, s) = result.rewards[k];
        batch.dones(t, s) = done ? 1.0 : 0.0;
        obs_.col(s) = Eigen::Map<const VectorXd>(next_obs[k].data(), obs_size_);
        next_start_(s) = done ? 1.0 : 0.0;
        if (done) {
          state_.hidden.col(s).setZero();
          state_.cell.col(s).setZero();
        }
      }
    }
  }
  batch.bootstrap_values = network.forward(obs_, state_).values;
  return batch;
}

std::vector<CompletedEpisode> RolloutCollector::drain_completed() {
  std::vector<CompletedEpisode> out;
  out.swap(completed_);
  return out;
}

Advantages compute_gae(const MatrixXd& rewards, const MatrixXd& values, const MatrixXd& dones,
                       const RowVectorXd& bootstrap_values, double gamma, double lambda) {
  const Eigen::Index steps = rewards.rows(), streams = rewards.cols();
  if (values.rows() != steps || values.cols() != streams || dones.rows() != steps ||
      dones.cols() != streams || bootstrap_values.size() != streams) {
    throw std::invalid_argument("GAE inputs have inconsistent shapes");
  }
  Advantages out{MatrixXd::Zero(steps, streams), MatrixXd::Zero(steps, streams)};
  for (Eigen::Index s = 0; s < streams; ++s) {
    double running = 0.0;
    for (Eigen::Index t = steps; t-- > 0;) {
      const double next_value = t + 1 < steps ? values(t + 1, s) : bootstrap_values(s);
      const double live = 1.0 - dones(t, s);
      const double delta = rewards(t, s) + gamma * next_value * live - values(t, s);
      running = delta + gamma * lambda * live * running;
      out.advantages(t, s) = running;
    }
  }
  out.returns = out.advantages + values;
  return out;
}

void compute_gae(RolloutBatch& batch, double gamma, double lambda) {
  auto adv = compute_gae(batch.rewards, batch.values, batch.dones, batch.bootstrap_values, gamma, lambda);
  batch.advantages = std::move(adv.advantages);
  batch.returns = std::move(adv.returns);
}

void normalize_advantages(MatrixXd& advantages) {
  const double n = static_cast<double>(advantages.size());
  if (n < 2) return;
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().sum() / (n - 1.0);
  advantages = ((advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
}

double clip_grad_norm(VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad *= max_norm / (norm + 1e-6);
  return norm;
}

LossTerms ppo_loss(const SequenceOutput& fp, const MinibatchData& data, const PpoConfig& config) {
  const Eigen::Index steps = data.actions.rows(), batch = data.actions.cols();
  if (static_cast<Eigen::Index>(fp.logits.size()) != steps) {
    throw std::invalid_argument("forward pass length does not match the minibatch");
  }
  const double n = static_cast<double>(steps * batch);
  const double eps = config.clip_coef;
  LossTerms out;
  out.dlogits.resize(steps);
  out.dvalues.resize(steps);
  double clipped_count = 0.0;

  for (Eigen::Index t = 0; t < steps; ++t) {
    const MatrixXd& logits = fp.logits[t];
    const MatrixXd probs = softmax_columns(logits);
    MatrixXd& dl = out.dlogits[t];
    dl = MatrixXd::Zero(logits.rows(), batch);
    RowVectorXd& dv = out.dvalues[t];
    dv = RowVectorXd::Zero(batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto p = probs.col(b);
      const VectorXd log_p = (logits.col(b).array() - logits.col(b).maxCoeff()).matrix();
      const VectorXd log_probs = log_p.array() - std::log(log_p.array().exp().sum());
      const int a = data.actions(t, b);
      const double log_ratio = log_probs(a) - data.old_log_probs(t, b);
      const double ratio = std::exp(log_ratio);
      const double adv = data.advantages(t, b);

      const double surrogate1 = -adv * ratio;
      const double surrogate2 = -adv * std::clamp(ratio, 1.0 - eps, 1.0 + eps);
      out.policy_loss += std::max(surrogate1, surrogate2);
      if (std::abs(ratio - 1.0) > eps) clipped_count += 1.0;
      out.approx_kl += (ratio - 1.0) - log_ratio;
      const double d_logp = surrogate1 >= surrogate2 ? -adv * ratio / n : 0.0;

      double entropy = 0.0;
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (p(k) > 0.0) entropy -= p(k) * log_probs(k);
      }
      out.entropy += entropy;

      // d(log pi_a)/dz = e_a - p;  dH/dz_k = -p_k (log p_k + H).
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        const double onehot = k == a ? 1.0 : 0.0;
        dl(k, b) = d_logp * (onehot - p(k)) +
                   config.entropy_coef / n * p(k) * (log_probs(k) + entropy);
      }

      const double v = fp.values[t](b);
      const double target = data.returns(t, b);
      const double unclipped = (v - target) * (v - target);
      double dvalue = v - target;
      double value_term = 0.5 * unclipped;
      if (config.clip_value_loss) {
        const double old_v = data.old_values(t, b);
        const double delta = v - old_v;
        const double v_clipped = old_v + std::clamp(delta, -eps, eps);
        const double clipped = (v_clipped - target) * (v_clipped - target);
        if (clipped > unclipped) {
          value_term = 0.5 * clipped;
          dvalue = std::abs(delta) < eps ? v_clipped - target : 0.0;
        }
      }
      out.value_loss += value_term;
      dv(b) = config.value_coef * dvalue / n;
    }
  }
  out.policy_loss /= n;
  out.value_loss /= n;
  out.entropy /= n;
  out.approx_kl /= n;
  out.clip_fraction = clipped_count / n;
  out.total = out.policy_loss + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
  return out;
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(VectorXd::Zero(size)), v_(VectorXd::Zero(size)) {}

void Adam::step(VectorXd& params, const VectorXd& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) {
    throw std::invalid_argument("optimizer size does not match parameters");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

std::vector<std::vector<int>> partition_streams(int streams, int n_minibatches, std::mt19937_64& rng) {
  if (n_minibatches < 1 || n_minibatches > streams) {
    throw std::invalid_argument("n_minibatches must lie in [1, streams]");
  }
  std::vector<int> order(streams);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> parts(n_minibatches);
  for (int i = 0; i < streams; ++i) parts[static_cast<std::size_t>(i) * n_minibatches / streams].push_back(order[i]);
  return parts;
}

SequenceInput slice_sequence(const RolloutBatch& batch, const std::vector<int>& streams) {
  SequenceInput in;
  in.observations.reserve(batch.observations.size());
  for (const auto& obs : batch.observations) in.observations.push_back(obs(Eigen::all, streams));
  in.starts = batch.starts(Eigen::all, streams);
  in.initial.hidden = batch.initial_state.hidden(Eigen::all, streams);
  in.initial.cell = batch.initial_state.cell(Eigen::all, streams);
  return in;
}

MinibatchData slice_minibatch(const RolloutBatch& batch, const std::vector<int>& streams) {
  MinibatchData d;
  d.actions = batch.actions(Eigen::all, streams);
  d.old_log_probs = batch.log_probs(Eigen::all, streams);
  d.old_values = batch.values(Eigen::all, streams);
  d.advantages = batch.advantages(Eigen::all, streams);
  d.returns = batch.returns(Eigen::all, streams);
  return d;
}

MatrixXd replay_log_probs(const RolloutBatch& batch, const PolicyNetwork& network) {
  std::vector<int> all(batch.streams());
  std::iota(all.begin(), all.end(), 0);
  const auto fp = network.forward_sequence(slice_sequence(batch, all));
  MatrixXd out(batch.steps(), batch.streams());
  for (int t = 0; t < batch.steps(); ++t) {
    const MatrixXd probs = softmax_columns(fp.logits[t]);
    for (int s = 0; s < batch.streams(); ++s) out(t, s) = std::log(probs(batch.actions(t, s), s));
  }
  return out;
}

UpdateStats ppo_update(const RolloutBatch& batch, PolicyNetwork& network, Adam& optimizer,
                       const PpoConfig& config, std::mt19937_64& rng) {
  if (batch.advantages.rows() != batch.steps() || batch.advantages.cols() != batch.streams()) {
    throw std::invalid_argument("advantages must be computed before the update");
  }
  UpdateStats stats;
  int updates = 0;
  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    for (const auto& streams : partition_streams(batch.streams(), config.n_minibatches, rng)) {
      const auto fp = network.forward_sequence(slice_sequence(batch, streams));
      auto data = slice_minibatch(batch, streams);
      if (config.normalize_advantage) normalize_advantages(data.advantages);
      const auto loss = ppo_loss(fp, data, config);
      if (!std::isfinite(loss.total)) {
        std::ostringstream os;
        os << "non-finite PPO loss at epoch " << epoch << ": policy=" << loss.policy_loss
           << " value=" << loss.value_loss << " entropy=" << loss.entropy
           << " max|param|=" << network.parameters().cwiseAbs().maxCoeff();
        throw std::runtime_error(os.str());
      }
      VectorXd grad = network.backward(fp, loss.dlogits, loss.dvalues);
      stats.grad_norm += clip_grad_norm(grad, config.max_grad_norm);
      optimizer.step(network.parameters(), grad);
      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;
      ++updates;
    }
  }
  const double k = updates > 0 ? 1.0 / updates : 0.0;
  stats.policy_loss *= k;
  stats.value_loss *= k;
  stats.entropy *= k;
  stats.clip_fraction *= k;
  stats.approx_kl *= k;
  stats.grad_norm *= k;
  return stats;
}

}  // namespace homeo
