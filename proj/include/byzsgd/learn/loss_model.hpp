#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string_view>

#include "byzsgd/learn/dataset.hpp"
#include "byzsgd/types.hpp"

namespace byzsgd::learn {

/// Evaluatable loss with an exact analytic gradient over mini-batches.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual int dim() const = 0;
  virtual std::string_view kind() const = 0;
  virtual bool is_classifier() const = 0;

  virtual double loss(const ParamVector& w, const Batch& batch) const = 0;
  virtual ParamVector gradient(const ParamVector& w, const Batch& batch) const = 0;

  /// Predicted class index (classifiers only; -1 otherwise).
  virtual int predict(const ParamVector& w, const Example& ex) const {
    (void)w;
    (void)ex;
    return -1;
  }
};

/// Quadratic loss with a known curvature spectrum and minimizer.
///
/// The population loss is L(w) = 1/2 (w-w*)^T H (w-w*) with H = Q^T D Q,
/// D = diag(spectrum), Q orthogonal. Per-example losses add a linear noise
/// term z_j . (w-w*); noise vectors are generated in (z, -z) pairs so the
/// full-dataset gradient cancels the noise exactly, keeping alpha, beta, G
/// and w* ground truth for the convergence and tolerance checks.
class QuadraticModel : public LossModel {
 public:
  QuadraticModel(int d, double alpha, double beta, uint64_t seed);

  int dim() const override { return d_; }
  std::string_view kind() const override { return "quadratic"; }
  bool is_classifier() const override { return false; }

  double loss(const ParamVector& w, const Batch& batch) const override;
  ParamVector gradient(const ParamVector& w, const Batch& batch) const override;

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const ParamVector& minimizer() const { return w_star_; }

  ParamVector hessian_apply(const ParamVector& v) const;
  /// Exact L(w) - L(w*) of the population loss.
  double loss_gap(const ParamVector& w) const;
  /// Exact population gradient H (w - w*).
  ParamVector full_gradient(const ParamVector& w) const;

  /// Lipschitz bound G on batch gradients for ||w - w*|| <= radius, given
  /// a dataset produced by make_noise_dataset.
  double gradient_bound(double radius, const Dataset& data) const;

  /// Per-example gradients are H(w-w*) + z_j; z pairs (z, -z) sum to zero.
  Dataset make_noise_dataset(int m, double noise_scale, uint64_t seed) const;

 private:
  int d_;
  double alpha_, beta_;
  Eigen::MatrixXd rotation_;   // Q
  Eigen::VectorXd spectrum_;   // D diagonal, ascending, spectrum_[0]=alpha
  ParamVector w_star_;
};

/// Multinomial logistic regression with L2 regularization of strength reg;
/// the regularized batch loss is reg-strongly convex. Parameters are the
/// C x d weight matrix flattened row-major.
class SoftmaxModel : public LossModel {
 public:
  SoftmaxModel(int feature_dim, int num_classes, double reg);

  int dim() const override { return num_classes_ * feature_dim_; }
  std::string_view kind() const override { return "softmax_regression"; }
  bool is_classifier() const override { return true; }

  double loss(const ParamVector& w, const Batch& batch) const override;
  ParamVector gradient(const ParamVector& w, const Batch& batch) const override;
  int predict(const ParamVector& w, const Example& ex) const override;

  double alpha() const { return reg_; }
  /// Smoothness bound for features with norm <= max_feature_norm.
  double beta_bound(double max_feature_norm) const {
    return 0.5 * max_feature_norm * max_feature_norm + reg_;
  }
  /// Gradient-norm bound over ||w|| <= w_radius and bounded features.
  double gradient_bound(double max_feature_norm, double w_radius) const;

  int num_classes() const { return num_classes_; }
  int feature_dim() const { return feature_dim_; }

 private:
  int feature_dim_, num_classes_;
  double reg_;
};

/// One-hidden-layer MLP with a smooth ReLU substitute
/// act(x) = log(1 + exp(s x)) / s, differentiable everywhere so
/// finite-difference gradient checks hold at every point.
class TinyMlpModel : public LossModel {
 public:
  TinyMlpModel(int feature_dim, int hidden, int num_classes, double sharpness = 8.0,
               double reg = 0.0);

  int dim() const override { return dim_; }
  std::string_view kind() const override { return "tiny_mlp"; }
  bool is_classifier() const override { return true; }

  double loss(const ParamVector& w, const Batch& batch) const override;
  ParamVector gradient(const ParamVector& w, const Batch& batch) const override;
  int predict(const ParamVector& w, const Example& ex) const override;

  int hidden() const { return hidden_; }
  ParamVector init_params(uint64_t seed) const;

 private:
  int feature_dim_, hidden_, num_classes_, dim_;
  double sharpness_, reg_;
};

}  // namespace byzsgd::learn
