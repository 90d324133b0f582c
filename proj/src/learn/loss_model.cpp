#include "byzsgd/learn/loss_model.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "byzsgd/rng.hpp"

namespace byzsgd::learn {

namespace {

void check_dims(int model_dim, const ParamVector& w, const Batch& batch, int feature_dim) {
  if (w.size() != model_dim) throw std::invalid_argument("loss model: parameter dimension mismatch");
  if (batch.size() == 0) throw std::invalid_argument("loss model: empty batch");
  if (batch.example(0).features.size() != feature_dim)
    throw std::invalid_argument("loss model: feature dimension mismatch");
}

}  // namespace

// ---------------------------------------------------------------- Quadratic

QuadraticModel::QuadraticModel(int d, double alpha, double beta, uint64_t seed)
    : d_(d), alpha_(alpha), beta_(beta) {
  if (d < 1) throw std::invalid_argument("quadratic: d must be >= 1");
  if (!(alpha > 0.0) || !(beta >= alpha))
    throw std::invalid_argument("quadratic: need 0 < alpha <= beta");

  spectrum_.resize(d);
  if (d == 1) {
    spectrum_[0] = alpha;
  } else {
    // log-spaced eigenvalues, endpoints pinned exactly
    const double la = std::log(alpha), lb = std::log(beta);
    for (int i = 0; i < d; ++i) spectrum_[i] = std::exp(la + (lb - la) * i / (d - 1));
    spectrum_[0] = alpha;
    spectrum_[d - 1] = beta;
  }

  RngFactory rf(seed);
  auto rng = rf.stream("quad_rotation");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd raw(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) raw(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  rotation_ = qr.householderQ();
  // fix column signs so the rotation is a deterministic function of the seed
  for (int j = 0; j < d; ++j)
    if (rotation_(0, j) < 0) rotation_.col(j) = -rotation_.col(j);

  auto wrng = rf.stream("quad_minimizer");
  w_star_.resize(d);
  for (int i = 0; i < d; ++i) w_star_[i] = gauss(wrng);
}

ParamVector QuadraticModel::hessian_apply(const ParamVector& v) const {
  return rotation_ * (spectrum_.asDiagonal() * (rotation_.transpose() * v));
}

double QuadraticModel::loss_gap(const ParamVector& w) const {
  const ParamVector diff = w - w_star_;
  return 0.5 * diff.dot(hessian_apply(diff));
}

ParamVector QuadraticModel::full_gradient(const ParamVector& w) const {
  return hessian_apply(w - w_star_);
}

double QuadraticModel::loss(const ParamVector& w, const Batch& batch) const {
  check_dims(d_, w, batch, d_);
  const ParamVector diff = w - w_star_;
  const double quad = 0.5 * diff.dot(hessian_apply(diff));
  double noise_sum = 0.0;
  for (int i = 0; i < batch.size(); ++i) noise_sum += batch.example(i).features.dot(diff);
  return quad + noise_sum / batch.size();
}

ParamVector QuadraticModel::gradient(const ParamVector& w, const Batch& batch) const {
  check_dims(d_, w, batch, d_);
  ParamVector noise = batch.example(0).features;
  for (int i = 1; i < batch.size(); ++i) noise += batch.example(i).features;
  return full_gradient(w) + noise / static_cast<double>(batch.size());
}

double QuadraticModel::gradient_bound(double radius, const Dataset& data) const {
  double z_max = 0.0;
  for (const auto& ex : data.examples) z_max = std::max(z_max, ex.features.norm());
  return beta_ * radius + z_max;
}

Dataset QuadraticModel::make_noise_dataset(int m, double noise_scale, uint64_t seed) const {
  Dataset out;
  out.kind = DatasetKind::GradientNoise;
  out.feature_dim = d_;
  out.num_classes = 0;
  out.examples.resize(m);
  auto rng = RngFactory(seed).stream("quad_noise");
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i + 1 < m; i += 2) {
    Eigen::VectorXd z(d_);
    for (int j = 0; j < d_; ++j) z[j] = noise_scale * gauss(rng);
    out.examples[i].features = z;
    out.examples[i + 1].features = -z;
  }
  if (m % 2 == 1) out.examples[m - 1].features = Eigen::VectorXd::Zero(d_);
  return out;
}

// ------------------------------------------------------------------ Softmax

SoftmaxModel::SoftmaxModel(int feature_dim, int num_classes, double reg)
    : feature_dim_(feature_dim), num_classes_(num_classes), reg_(reg) {
  if (feature_dim < 1 || num_classes < 2)
    throw std::invalid_argument("softmax: need feature_dim >= 1 and num_classes >= 2");
  if (reg < 0) throw std::invalid_argument("softmax: reg must be >= 0");
}

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

static Eigen::VectorXd softmax_probs(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - mx).exp();
  return p / p.sum();
}

double SoftmaxModel::loss(const ParamVector& w, const Batch& batch) const {
  check_dims(dim(), w, batch, feature_dim_);
  RowMajorMap W(w.data(), num_classes_, feature_dim_);
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const Example& ex = batch.example(i);
    Eigen::VectorXd logits = W * ex.features;
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    total += lse - logits[ex.label];
  }
  return total / batch.size() + 0.5 * reg_ * w.squaredNorm();
}

ParamVector SoftmaxModel::gradient(const ParamVector& w, const Batch& batch) const {
  check_dims(dim(), w, batch, feature_dim_);
  RowMajorMap W(w.data(), num_classes_, feature_dim_);
  ParamVector grad = ParamVector::Zero(dim());
  RowMajorMutMap G(grad.data(), num_classes_, feature_dim_);
  for (int i = 0; i < batch.size(); ++i) {
    const Example& ex = batch.example(i);
    Eigen::VectorXd p = softmax_probs(W * ex.features);
    p[ex.label] -= 1.0;
    G.noalias() += p * ex.features.transpose();
  }
  grad /= static_cast<double>(batch.size());
  grad += reg_ * w;
  return grad;
}

int SoftmaxModel::predict(const ParamVector& w, const Example& ex) const {
  RowMajorMap W(w.data(), num_classes_, feature_dim_);
  Eigen::VectorXd logits = W * ex.features;
  int best = 0;
  for (int c = 1; c < num_classes_; ++c)
    if (logits[c] > logits[best]) best = c;
  return best;
}

double SoftmaxModel::gradient_bound(double max_feature_norm, double w_radius) const {
  // ||(p - e_y) x^T||_F <= sqrt(2) ||x||, plus the regularizer term
  return std::sqrt(2.0) * max_feature_norm + reg_ * w_radius;
}

// ----------------------------------------------------------------- Tiny MLP

TinyMlpModel::TinyMlpModel(int feature_dim, int hidden, int num_classes, double sharpness,
                           double reg)
    : feature_dim_(feature_dim),
      hidden_(hidden),
      num_classes_(num_classes),
      dim_(hidden * feature_dim + hidden + num_classes * hidden + num_classes),
      sharpness_(sharpness),
      reg_(reg) {
  if (feature_dim < 1 || hidden < 1 || num_classes < 2)
    throw std::invalid_argument("tiny_mlp: bad layer sizes");
  if (!(sharpness > 0)) throw std::invalid_argument("tiny_mlp: sharpness must be positive");
}

namespace {

double softplus(double x, double s) {
  const double sx = s * x;
  if (sx > 30.0) return x + std::log1p(std::exp(-sx)) / s;
  return std::log1p(std::exp(sx)) / s;
}

double softplus_deriv(double x, double s) {
  const double sx = s * x;
  if (sx > 30.0) return 1.0 / (1.0 + std::exp(-sx));
  const double e = std::exp(sx);
  return e / (1.0 + e);
}

struct MlpViews {
  RowMajorMap W1, W2;
  Eigen::Map<const Eigen::VectorXd> b1, b2;
};

MlpViews views(const ParamVector& w, int d, int h, int c) {
  const double* p = w.data();
  return MlpViews{RowMajorMap(p, h, d), RowMajorMap(p + h * d + h, c, h),
                  Eigen::Map<const Eigen::VectorXd>(p + h * d, h),
                  Eigen::Map<const Eigen::VectorXd>(p + h * d + h + c * h, c)};
}

}  // namespace

double TinyMlpModel::loss(const ParamVector& w, const Batch& batch) const {
  check_dims(dim_, w, batch, feature_dim_);
  auto v = views(w, feature_dim_, hidden_, num_classes_);
  double total = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const Example& ex = batch.example(i);
    Eigen::VectorXd a1 = v.W1 * ex.features + v.b1;
    for (int k = 0; k < hidden_; ++k) a1[k] = softplus(a1[k], sharpness_);
    Eigen::VectorXd logits = v.W2 * a1 + v.b2;
    const double mx = logits.maxCoeff();
    total += mx + std::log((logits.array() - mx).exp().sum()) - logits[ex.label];
  }
  return total / batch.size() + 0.5 * reg_ * w.squaredNorm();
}

ParamVector TinyMlpModel::gradient(const ParamVector& w, const Batch& batch) const {
  check_dims(dim_, w, batch, feature_dim_);
  auto v = views(w, feature_dim_, hidden_, num_classes_);
  const int d = feature_dim_, h = hidden_, c = num_classes_;
  ParamVector grad = ParamVector::Zero(dim_);
  RowMajorMutMap gW1(grad.data(), h, d);
  Eigen::Map<Eigen::VectorXd> gb1(grad.data() + h * d, h);
  RowMajorMutMap gW2(grad.data() + h * d + h, c, h);
  Eigen::Map<Eigen::VectorXd> gb2(grad.data() + h * d + h + c * h, c);

  for (int i = 0; i < batch.size(); ++i) {
    const Example& ex = batch.example(i);
    Eigen::VectorXd pre = v.W1 * ex.features + v.b1;
    Eigen::VectorXd act(h), dact(h);
    for (int k = 0; k < h; ++k) {
      act[k] = softplus(pre[k], sharpness_);
      dact[k] = softplus_deriv(pre[k], sharpness_);
    }
    Eigen::VectorXd p = softmax_probs(v.W2 * act + v.b2);
    p[ex.label] -= 1.0;

    gb2 += p;
    gW2.noalias() += p * act.transpose();
    Eigen::VectorXd dpre = (v.W2.transpose() * p).cwiseProduct(dact);
    gb1 += dpre;
    gW1.noalias() += dpre * ex.features.transpose();
  }
  grad /= static_cast<double>(batch.size());
  grad += reg_ * w;
  return grad;
}

int TinyMlpModel::predict(const ParamVector& w, const Example& ex) const {
  auto v = views(w, feature_dim_, hidden_, num_classes_);
  Eigen::VectorXd a1 = v.W1 * ex.features + v.b1;
  for (int k = 0; k < hidden_; ++k) a1[k] = softplus(a1[k], sharpness_);
  Eigen::VectorXd logits = v.W2 * a1 + v.b2;
  int best = 0;
  for (int k = 1; k < num_classes_; ++k)
    if (logits[k] > logits[best]) best = k;
  return best;
}

ParamVector TinyMlpModel::init_params(uint64_t seed) const {
  auto rng = RngFactory(seed).stream("mlp_init");
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamVector w(dim_);
  const double scale1 = 1.0 / std::sqrt(static_cast<double>(feature_dim_));
  const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  int pos = 0;
  for (int i = 0; i < hidden_ * feature_dim_; ++i) w[pos++] = scale1 * gauss(rng);
  for (int i = 0; i < hidden_; ++i) w[pos++] = 0.0;
  for (int i = 0; i < num_classes_ * hidden_; ++i) w[pos++] = scale2 * gauss(rng);
  for (int i = 0; i < num_classes_; ++i) w[pos++] = 0.0;
  return w;
}

}  // namespace byzsgd::learn
