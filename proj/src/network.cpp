#include "homeo/network.hpp"

#include <cmath>
#include <stdexcept>

namespace homeo {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;
using CVecMap = Eigen::Map<const VectorXd>;
using VecMap = Eigen::Map<VectorXd>;

MatrixXd sigmoid(const MatrixXd& x) { return (1.0 + (-x.array()).exp()).inverse().matrix(); }

}  // namespace

std::size_t NetworkShape::parameter_count() const {
  const std::size_t o = observation_size, e = encoder_size, h = recurrent_size, a = action_count;
  return e * o + e + 4 * h * e + 4 * h * h + 4 * h + a * h + a + h + 1;
}

RecurrentState RecurrentState::zeros(int size, int batch) {
  return {MatrixXd::Zero(size, batch), MatrixXd::Zero(size, batch)};
}

PolicyNetwork::Offsets PolicyNetwork::offsets_for(const NetworkShape& s) {
  const std::size_t o = s.observation_size, e = s.encoder_size, h = s.recurrent_size,
                    a = s.action_count;
  Offsets off{};
  std::size_t p = 0;
  off.enc_w = p, p += e * o;
  off.enc_b = p, p += e;
  off.ih_w = p, p += 4 * h * e;
  off.hh_w = p, p += 4 * h * h;
  off.lstm_b = p, p += 4 * h;
  off.pi_w = p, p += a * h;
  off.pi_b = p, p += a;
  off.v_w = p, p += h;
  off.v_b = p, p += 1;
  off.total = p;
  return off;
}

PolicyNetwork::PolicyNetwork(NetworkShape shape) : shape_(shape), off_(offsets_for(shape)) {
  if (shape.observation_size < 1 || shape.encoder_size < 1 || shape.recurrent_size < 1 ||
      shape.action_count < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  params_ = VectorXd::Zero(static_cast<Eigen::Index>(off_.total));
}

MatrixXd orthogonal_matrix(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  MatrixXd g(big, small);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
  const MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows < cols) q.transposeInPlace();
  return gain * q;
}

PolicyNetwork PolicyNetwork::initialized(NetworkShape shape, std::mt19937_64& rng) {
  PolicyNetwork net(shape);
  const int o = shape.observation_size, e = shape.encoder_size, h = shape.recurrent_size,
            a = shape.action_count;
  double* p = net.params_.data();
  Map(p + net.off_.enc_w, e, o) = orthogonal_matrix(e, o, 1.0, rng);
  Map(p + net.off_.ih_w, 4 * h, e) = orthogonal_matrix(4 * h, e, 1.0, rng);
  Map(p + net.off_.hh_w, 4 * h, h) = orthogonal_matrix(4 * h, h, 1.0, rng);
  Map(p + net.off_.pi_w, a, h) = orthogonal_matrix(a, h, 0.01, rng);
  Map(p + net.off_.v_w, 1, h) = orthogonal_matrix(1, h, 1.0, rng);
  return net;
}

MatrixXd softmax_columns(const MatrixXd& logits) {
  MatrixXd out = logits;
  for (Eigen::Index b = 0; b < out.cols(); ++b) {
    auto col = out.col(b);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return out;
}

ActionSample sample_action(const Eigen::Ref<const VectorXd>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double draw = u(rng);
  double cumulative = 0.0;
  int chosen = -1;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    chosen = static_cast<int>(k);
    cumulative += probs[k];
    if (draw < cumulative) break;
  }
  if (chosen < 0) throw std::invalid_argument("probability vector has no positive mass");
  return {chosen, std::log(probs[chosen])};
}

PolicyOutput PolicyNetwork::forward(const MatrixXd& observations, const RecurrentState& state) const {
  SequenceInput in;
  in.observations = {observations};
  in.starts = MatrixXd::Zero(1, observations.cols());
  in.initial = state;
  auto seq = forward_sequence(in);
  PolicyOutput out;
  out.logits = std::move(seq.logits[0]);
  out.probs = softmax_columns(out.logits);
  out.values = std::move(seq.values[0]);
  out.state = std::move(seq.final_state);
  return out;
}

SequenceOutput PolicyNetwork::forward_sequence(const SequenceInput& input) const {
  const int h = shape_.recurrent_size;
  const Eigen::Index batch = input.initial.hidden.cols();
  if (input.initial.hidden.rows() != h || input.initial.cell.rows() != h ||
      input.initial.cell.cols() != batch) {
    throw std::invalid_argument("recurrent state shape does not match the network");
  }
  if (input.starts.rows() != static_cast<Eigen::Index>(input.observations.size()) ||
      input.starts.cols() != batch) {
    throw std::invalid_argument("starts must be steps x batch");
  }
  const double* p = params_.data();
  const int o = shape_.observation_size, e = shape_.encoder_size, a = shape_.action_count;
  CMap enc_w(p + off_.enc_w, e, o);
  CVecMap enc_b(p + off_.enc_b, e);
  CMap ih_w(p + off_.ih_w, 4 * h, e);
  CMap hh_w(p + off_.hh_w, 4 * h, h);
  CVecMap lstm_b(p + off_.lstm_b, 4 * h);
  CMap pi_w(p + off_.pi_w, a, h);
  CVecMap pi_b(p + off_.pi_b, a);
  CMap v_w(p + off_.v_w, 1, h);
  const double v_b = p[off_.v_b];

  SequenceOutput out;
  const std::size_t steps = input.observations.size();
  out.logits.reserve(steps);
  out.values.reserve(steps);
  out.tape.steps.reserve(steps);

  MatrixXd hidden = input.initial.hidden;
  MatrixXd cell = input.initial.cell;
  for (std::size_t t = 0; t < steps; ++t) {
    const MatrixXd& x = input.observations[t];
    if (x.rows() != o || x.cols() != batch) {
      throw std::invalid_argument("observation shape does not match the network");
    }
    SequenceTape::Step st;
    st.keep = (1.0 - input.starts.row(static_cast<Eigen::Index>(t)).array()).matrix();
    st.hidden_prev = hidden.array().rowwise() * st.keep.array();
    st.cell_prev = cell.array().rowwise() * st.keep.array();
    st.input = x;
    st.encoder_pre = enc_w * x;
    st.encoder_pre.colwise() += enc_b;
    st.encoded = st.encoder_pre.cwiseMax(0.0);

    MatrixXd gates = ih_w * st.encoded;
    gates.noalias() += hh_w * st.hidden_prev;
    gates.colwise() += lstm_b;
    st.in_gate = sigmoid(gates.topRows(h));
    st.forget_gate = sigmoid(gates.middleRows(h, h));
    st.cell_gate = gates.middleRows(2 * h, h).array().tanh();
    st.out_gate = sigmoid(gates.bottomRows(h));
    cell = st.forget_gate.cwiseProduct(st.cell_prev) + st.in_gate.cwiseProduct(st.cell_gate);
    st.cell_tanh = cell.array().tanh();
    hidden = st.out_gate.cwiseProduct(st.cell_tanh);
    st.hidden = hidden;

    MatrixXd logits = pi_w * hidden;
    logits.colwise() += pi_b;
    RowVectorXd values = (v_w * hidden).array() + v_b;
    out.logits.push_back(std::move(logits));
    out.values.push_back(std::move(values));
    out.tape.steps.push_back(std::move(st));
  }
  out.final_state = {hidden, cell};
  return out;
}

VectorXd PolicyNetwork::backward(const SequenceOutput& fp, const std::vector<MatrixXd>& dlogits,
                                 const std::vector<RowVectorXd>& dvalues) const {
  const auto& steps = fp.tape.steps;
  if (dlogits.size() != steps.size() || dvalues.size() != steps.size()) {
    throw std::invalid_argument("adjoint count must match the recorded sequence length");
  }
  const int o = shape_.observation_size, e = shape_.encoder_size, h = shape_.recurrent_size,
            a = shape_.action_count;
  const double* p = params_.data();
  CMap ih_w(p + off_.ih_w, 4 * h, e);
  CMap hh_w(p + off_.hh_w, 4 * h, h);
  CMap pi_w(p + off_.pi_w, a, h);
  CMap v_w(p + off_.v_w, 1, h);

  VectorXd grad = VectorXd::Zero(params_.size());
  double* g = grad.data();
  Map g_enc_w(g + off_.enc_w, e, o);
  VecMap g_enc_b(g + off_.enc_b, e);
  Map g_ih_w(g + off_.ih_w, 4 * h, e);
  Map g_hh_w(g + off_.hh_w, 4 * h, h);
  VecMap g_lstm_b(g + off_.lstm_b, 4 * h);
  Map g_pi_w(g + off_.pi_w, a, h);
  VecMap g_pi_b(g + off_.pi_b, a);
  Map g_v_w(g + off_.v_w, 1, h);

  if (steps.empty()) return grad;
  const Eigen::Index batch = steps.front().hidden.cols();
  MatrixXd dh_next = MatrixXd::Zero(h, batch);
  MatrixXd dc_next = MatrixXd::Zero(h, batch);
  MatrixXd dgates(4 * h, batch);

  for (std::size_t t = steps.size(); t-- > 0;) {
    const auto& st = steps[t];
    const MatrixXd& dl = dlogits[t];
    const RowVectorXd& dv = dvalues[t];

    g_pi_w.noalias() += dl * st.hidden.transpose();
    g_pi_b += dl.rowwise().sum();
    g_v_w.noalias() += dv * st.hidden.transpose();
    g[off_.v_b] += dv.sum();

    MatrixXd dh = dh_next;
    dh.noalias() += pi_w.transpose() * dl;
    dh.noalias() += v_w.transpose() * dv;

    const MatrixXd d_out = dh.cwiseProduct(st.cell_tanh);
    const MatrixXd dc = (dh.cwiseProduct(st.out_gate).array() * (1.0 - st.cell_tanh.array().square())).matrix() + dc_next;
    dgates.topRows(h) = (dc.array() * st.cell_gate.array() * st.in_gate.array() * (1.0 - st.in_gate.array())).matrix();
    dgates.middleRows(h, h) = (dc.array() * st.cell_prev.array() * st.forget_gate.array() * (1.0 - st.forget_gate.array())).matrix();
    dgates.middleRows(2 * h, h) = (dc.array() * st.in_gate.array() * (1.0 - st.cell_gate.array().square())).matrix();
    dgates.bottomRows(h) = (d_out.array() * st.out_gate.array() * (1.0 - st.out_gate.array())).matrix();

    g_ih_w.noalias() += dgates * st.encoded.transpose();
    g_hh_w.noalias() += dgates * st.hidden_prev.transpose();
    g_lstm_b += dgates.rowwise().sum();

    const MatrixXd d_encoded = ih_w.transpose() * dgates;
    const MatrixXd d_pre = (d_encoded.array() * (st.encoder_pre.array() > 0.0).cast<double>()).matrix();
    g_enc_w.noalias() += d_pre * st.input.transpose();
    g_enc_b += d_pre.rowwise().sum();

    // Reset columns contribute nothing to the previous step.
    dh_next.noalias() = hh_w.transpose() * dgates;
    dh_next = dh_next.array().rowwise() * st.keep.array();
    dc_next = (dc.array() * st.forget_gate.array()).rowwise() * st.keep.array();
  }
  return grad;
}

}  // namespace homeo
