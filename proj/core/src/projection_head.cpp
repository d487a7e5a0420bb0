#include "activation.hpp"
#include "hypml/encoder.hpp"
#include "hypml/error.hpp"

namespace hypml::encoder {

Matrix semi_orthogonal(Index rows, Index cols, Rng& rng) {
  const Index tall = std::max(rows, cols);
  const Index thin = std::min(rows, cols);
  const Eigen::MatrixXd gaussian = detail::normal_fill(tall, thin, 1.0, rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, thin);
  // Fix column signs so the factorization (and the draw) is unique.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(thin).triangularView<Eigen::Upper>();
  for (Index j = 0; j < thin; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows >= cols) return q;
  return q.transpose();
}

ProjectionHead::ProjectionHead(Index in_dim, Index out_dim, Rng& rng) {
  require(in_dim > 0 && out_dim > 0, ErrorKind::Config, "head dimensions must be positive");
  params_.add("head.weight", semi_orthogonal(in_dim, out_dim, rng), true);
  params_.add("head.bias", Matrix::Zero(1, out_dim), false);
}

Matrix ProjectionHead::forward(const Matrix& inputs) const {
  require(inputs.cols() == in_dim(), ErrorKind::Data, "projection head: input width mismatch");
  Matrix out = inputs * weight();
  out.rowwise() += bias().row(0);
  return out;
}

Matrix ProjectionHead::backward(const Matrix& inputs, const Matrix& upstream, std::span<Matrix> grads) const {
  grads[0] += inputs.transpose() * upstream;
  grads[1] += upstream.colwise().sum();
  return upstream * weight().transpose();
}

}  // namespace hypml::encoder
