#include "cavitymc/oracle.hpp"

#include <Eigen/Eigenvalues>

#include "cavitymc/errors.hpp"

namespace cavitymc {
namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Cplx = std::complex<double>;

// Basis |s, n>, s in {ground=0, excited=1}, n in 0..n_max:
// index = s*(n_max+1) + n.
struct Ops {
  Mat a, sigma;  // annihilation and lowering operators
  int dim;
};

Ops build_ops(int n_max) {
  const int np = n_max + 1;
  const int dim = 2 * np;
  Ops ops{Mat::Zero(dim, dim), Mat::Zero(dim, dim), dim};
  for (int s = 0; s < 2; ++s)
    for (int n = 1; n <= n_max; ++n)
      ops.a(s * np + n - 1, s * np + n) = std::sqrt(double(n));
  for (int n = 0; n < np; ++n) ops.sigma(n, np + n) = 1.0;  // |g,n><e,n|
  return ops;
}

Mat kron(const Mat& A, const Mat& B) {
  Mat out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

// Column-major vectorization: vec(A rho B) = (B^T kron A) vec(rho).
Mat liouvillian(const OracleConfig& cfg, const Ops& ops) {
  const Cplx im(0.0, 1.0);
  const int dim = ops.dim;
  const Mat id = Mat::Identity(dim, dim);
  const Mat ad = ops.a.adjoint();
  const Mat sd = ops.sigma.adjoint();

  // Drive written as i eta (a† - a) so that <a> obeys the real-amplitude
  // field equation da/dt = (i dc - kappa) a - i g sigma + eta.
  Mat H = -cfg.delta_c * (ad * ops.a) - cfg.delta_a_eff * (sd * ops.sigma) +
          cfg.g * (ad * ops.sigma + sd * ops.a) + im * cfg.eta * (ad - ops.a);

  Mat L = -im * (kron(id, H) - kron(H.transpose(), id));
  const Mat jumps[2] = {std::sqrt(2.0 * cfg.kappa) * ops.a,
                        std::sqrt(2.0 * cfg.gamma) * ops.sigma};
  for (const Mat& c : jumps) {
    const Mat cdc = c.adjoint() * c;
    L += kron(c.conjugate(), c) -
         0.5 * (kron(id, cdc) + kron(cdc.transpose(), id));
  }
  return L;
}

}  // namespace

Eigen::MatrixXcd oracle_steady_state(const OracleConfig& cfg) {
  if (cfg.n_max < 1) throw ConfigError("oracle n_max must be >= 1");
  if (!(cfg.gamma > 0.0) || !(cfg.kappa > 0.0))
    throw ConfigError("oracle decay rates must be positive");

  const Ops ops = build_ops(cfg.n_max);
  const int dim = ops.dim;
  const int dim2 = dim * dim;
  const Mat L = liouvillian(cfg, ops);

  // Replace the first row by the trace functional.
  Mat A = L;
  Vec b = Vec::Zero(dim2);
  A.row(0).setZero();
  for (int i = 0; i < dim; ++i) A(0, i * dim + i) = 1.0;
  b(0) = 1.0;

  Eigen::FullPivLU<Mat> lu(A);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible())
    throw ToleranceError(
        "steady state is not unique: Liouvillian null space is not "
        "one-dimensional within tolerance");
  const Vec x = lu.solve(b);

  Mat rho = Eigen::Map<const Mat>(x.data(), dim, dim);
  rho = 0.5 * (rho + rho.adjoint()).eval();  // remove numerical skew
  rho /= rho.trace();

  const StateChecks checks = oracle_state_checks(rho, cfg);
  if (checks.trace_deviation > 1e-10 || checks.hermiticity > 1e-10 ||
      checks.min_eigenvalue < -1e-8 || checks.residual > 1e-8)
    throw ToleranceError("oracle steady state violates invariants");
  return rho;
}

OracleObservables oracle_observables(const Eigen::MatrixXcd& rho,
                                     const OracleConfig& cfg) {
  const Ops ops = build_ops(cfg.n_max);
  auto expect = [&rho](const Mat& op) { return (rho * op).trace(); };
  OracleObservables obs;
  obs.mean_a = expect(ops.a);
  obs.mean_sigma = expect(ops.sigma);
  obs.photon_number = expect(ops.a.adjoint() * ops.a).real();
  obs.excitation = expect(ops.sigma.adjoint() * ops.sigma).real();
  obs.interaction_real = expect(ops.a.adjoint() * ops.sigma).real();
  return obs;
}

StateChecks oracle_state_checks(const Eigen::MatrixXcd& rho,
                                const OracleConfig& cfg) {
  const Ops ops = build_ops(cfg.n_max);
  const Mat L = liouvillian(cfg, ops);
  StateChecks c;
  c.hermiticity = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.trace_deviation = std::abs(rho.trace() - 1.0);
  const Mat sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  const Vec x = Eigen::Map<const Vec>(rho.data(), rho.size());
  const double rate = std::max(
      {cfg.kappa, cfg.gamma, std::abs(cfg.g), std::abs(cfg.delta_c),
       std::abs(cfg.delta_a_eff), std::abs(cfg.eta)});
  c.residual = (L * x).norm() / rate;
  return c;
}

}  // namespace cavitymc
