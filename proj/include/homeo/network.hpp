#pragma once

// Recurrent actor-critic: ReLU encoder -> LSTM cell -> {softmax policy, value}.
// Parameters live in one flat vector so the optimizer, gradient clipping and
// checkpoints treat them uniformly. Gradients are hand-derived reverse mode
// through time.

#include <Eigen/Dense>
#include <cstddef>
#include <random>
#include <vector>

namespace homeo {

struct NetworkShape {
  int observation_size = 1;
  int encoder_size = 16;
  int recurrent_size = 16;
  int action_count = 2;

  std::size_t parameter_count() const;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Column b holds the state of stream b.
struct RecurrentState {
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd cell;

  static RecurrentState zeros(int size, int batch);
  int batch() const { return static_cast<int>(hidden.cols()); }
};

struct PolicyOutput {
  Eigen::MatrixXd logits;  // actions x batch
  Eigen::MatrixXd probs;
  Eigen::RowVectorXd values;
  RecurrentState state;
};

/// Time-major input for training. starts(t, b) == 1 resets stream b's state
/// to zero before step t, which also cuts the gradient path at that point.
struct SequenceInput {
  std::vector<Eigen::MatrixXd> observations;
  Eigen::MatrixXd starts;
  RecurrentState initial;
};

struct SequenceTape {
  struct Step {
    Eigen::MatrixXd input;
    Eigen::MatrixXd encoder_pre;
    Eigen::MatrixXd encoded;
    Eigen::MatrixXd hidden_prev;
    Eigen::MatrixXd cell_prev;
    Eigen::MatrixXd in_gate, forget_gate, cell_gate, out_gate;
    Eigen::MatrixXd cell_tanh;
    Eigen::MatrixXd hidden;
    Eigen::RowVectorXd keep;
  };
  std::vector<Step> steps;
};

struct SequenceOutput {
  std::vector<Eigen::MatrixXd> logits;
  std::vector<Eigen::RowVectorXd> values;
  RecurrentState final_state;
  SequenceTape tape;
};

class PolicyNetwork {
 public:
  /// All parameters zero.
  explicit PolicyNetwork(NetworkShape shape);
  /// Orthogonal weights (gain 1, policy head 0.01), zero biases.
  static PolicyNetwork initialized(NetworkShape shape, std::mt19937_64& rng);

  const NetworkShape& shape() const { return shape_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  RecurrentState initial_state(int batch) const {
    return RecurrentState::zeros(shape_.recurrent_size, batch);
  }

  /// One step for a batch of observations (obs_size x batch).
  PolicyOutput forward(const Eigen::MatrixXd& observations, const RecurrentState& state) const;

  SequenceOutput forward_sequence(const SequenceInput& input) const;

  /// Gradient of L = sum_t <dlogits_t, logits_t> + <dvalues_t, values_t>,
  /// i.e. the chain rule applied to caller-supplied output adjoints.
  Eigen::VectorXd backward(const SequenceOutput& forward_pass,
                           const std::vector<Eigen::MatrixXd>& dlogits,
                           const std::vector<Eigen::RowVectorXd>& dvalues) const;

 private:
  struct Offsets {
    std::size_t enc_w, enc_b, ih_w, hh_w, lstm_b, pi_w, pi_b, v_w, v_b, total;
  };
  static Offsets offsets_for(const NetworkShape& s);

  NetworkShape shape_;
  Offsets off_;
  Eigen::VectorXd params_;
};

/// Column-wise numerically stable softmax.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

struct ActionSample {
  int index = 0;
  double log_prob = 0.0;
};

ActionSample sample_action(const Eigen::Ref<const Eigen::VectorXd>& probs, std::mt19937_64& rng);

/// Orthogonal matrix (rows x cols) scaled by gain.
Eigen::MatrixXd orthogonal_matrix(int rows, int cols, double gain, std::mt19937_64& rng);

}  // namespace homeo
