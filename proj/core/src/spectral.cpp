#include "hdxgeo/spectral.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hdxgeo/rng.hpp"

namespace hdxgeo {

namespace {

// Budget 50*sqrt(n)*log10(1/tol), truncated by a hard ceiling so the
// reorthogonalization basis stays in memory.  Restarting is not worth the
// complexity for the spectra this library meets; the ceiling has never been
// the binding constraint in practice.
constexpr int kMaxLanczosBasis = 600;
constexpr int kResidualCheckStride = 16;

int iteration_budget(int n, double tol) {
  double digits = std::max(1.0, -std::log10(std::max(tol, 1e-16)));
  double cap = 50.0 * std::sqrt(static_cast<double>(n)) * digits;
  cap = std::min(cap, static_cast<double>(kMaxLanczosBasis));
  return std::min(n, static_cast<int>(cap) + 2);
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

struct RitzSummary {
  double extreme_abs = 0.0;
  double top = 0.0;
  double bottom = 0.0;
  double residual = 0.0;
};

// Extreme Ritz data of the current tridiagonal section.  The residual of a
// Ritz pair (theta, V s) is |beta_j * s_last|.
RitzSummary ritz_extremes(const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& beta, int j,
                          double beta_next) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if (j == 1) {
    RitzSummary s;
    s.top = s.bottom = alpha[0];
    s.extreme_abs = std::abs(alpha[0]);
    s.residual = std::abs(beta_next);
    return s;
  }
  es.computeFromTridiagonal(alpha.head(j), beta.head(j - 1),
                            Eigen::ComputeEigenvectors);
  const auto& ev = es.eigenvalues();
  RitzSummary s;
  s.top = ev[j - 1];
  s.bottom = ev[0];
  int which = std::abs(ev[0]) > std::abs(ev[j - 1]) ? 0 : j - 1;
  s.extreme_abs = std::abs(ev[which]);
  s.residual = std::abs(beta_next * es.eigenvectors()(j - 1, which));
  return s;
}

}  // namespace

SymOp SymOp::from_dense(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail("symmetric operator needs a square matrix");
  auto keep = std::make_shared<Eigen::MatrixXd>(m);
  SymOp op;
  op.n = static_cast<int>(m.rows());
  op.apply = [keep](const double* x, double* y) {
    Eigen::Map<const Eigen::VectorXd> xv(x, keep->rows());
    Eigen::Map<Eigen::VectorXd> yv(y, keep->rows());
    yv.noalias() = (*keep) * xv;
  };
  return op;
}

NormalizedAdjacency::NormalizedAdjacency(const WeightedGraph& g) : graph(&g) {
  inv_sqrt_deg.resize(g.n);
  top_vec.resize(g.n);
  stationary.resize(g.n);
  double total = 0.0;
  for (int v = 0; v < g.n; ++v) total += g.degree[v];
  for (int v = 0; v < g.n; ++v) {
    if (!(g.degree[v] > 0.0)) {
      std::ostringstream os;
      os << "degenerate degree at vertex " << v;
      throw std::invalid_argument(os.str());
    }
    inv_sqrt_deg[v] = 1.0 / std::sqrt(g.degree[v]);
    top_vec[v] = std::sqrt(g.degree[v] / total);
    stationary[v] = g.degree[v] / total;
  }
}

void NormalizedAdjacency::apply(const double* x, double* y) const {
  const WeightedGraph& g = *graph;
  for (int u = 0; u < g.n; ++u) {
    double acc = 0.0;
    for (std::int64_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k)
      acc += g.w[k] * inv_sqrt_deg[g.col[k]] * x[g.col[k]];
    y[u] = acc * inv_sqrt_deg[u];
  }
}

Eigen::MatrixXd NormalizedAdjacency::dense() const {
  const WeightedGraph& g = *graph;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int u = 0; u < g.n; ++u)
    for (std::int64_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k)
      m(u, g.col[k]) = g.w[k] * inv_sqrt_deg[u] * inv_sqrt_deg[g.col[k]];
  return m;
}

SymOp NormalizedAdjacency::op() const {
  SymOp s;
  s.n = graph->n;
  s.apply = [this](const double* x, double* y) { apply(x, y); };
  return s;
}

SpectralReport deflated_abs_extreme(const SymOp& op, double lambda_top,
                                    const Eigen::VectorXd& phi, double tol) {
  const int n = op.n;
  if (n < 1) fail("empty operator");
  const bool deflate = lambda_top != 0.0;
  if (deflate && phi.size() != n) fail("deflation vector has wrong size");

  const int cap = iteration_budget(n, tol);
  Eigen::MatrixXd basis(n, cap);
  Eigen::VectorXd alpha(cap), beta(cap);
  Eigen::VectorXd v(n), w(n);

  RandomStream rs(derive_seed(0x9d2c5680u, "lanczos-start",
                              static_cast<std::uint64_t>(n)));
  for (int i = 0; i < n; ++i) v[i] = rs.normal();
  v.normalize();

  SpectralReport rep;
  rep.method = EigenMethod::iterative;
  rep.converged = false;

  int j = 0;
  double scale = 0.0;
  bool breakdown = false;
  while (j < cap) {
    basis.col(j) = v;
    op.apply(v.data(), w.data());
    if (deflate) w -= (lambda_top * phi.dot(v)) * phi;
    alpha[j] = v.dot(w);
    scale = std::max({scale, std::abs(alpha[j]), j > 0 ? beta[j - 1] : 0.0});
    w -= alpha[j] * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    // Full reorthogonalization, applied twice: keeps the basis orthonormal
    // to machine precision so Ritz values never duplicate.
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    beta[j] = w.norm();
    ++j;
    if (beta[j - 1] <= 1e-13 * std::max(1.0, scale)) {
      breakdown = true;  // invariant subspace: Ritz values are exact
      break;
    }
    v = w / beta[j - 1];
    bool check = breakdown || j == cap || j % kResidualCheckStride == 0;
    if (check) {
      RitzSummary s = ritz_extremes(alpha, beta, j, beta[j - 1]);
      rep.second_abs = s.extreme_abs;
      rep.top = s.top;
      rep.bottom = s.bottom;
      rep.residual = s.residual;
      rep.iterations = j;
      if (s.residual <= tol * std::max(1.0, scale)) {
        rep.converged = true;
        return rep;
      }
    }
  }
  RitzSummary s = ritz_extremes(alpha, beta, j, breakdown ? 0.0 : beta[j - 1]);
  rep.second_abs = s.extreme_abs;
  rep.top = s.top;
  rep.bottom = s.bottom;
  rep.residual = s.residual;
  rep.iterations = j;
  if (breakdown || s.residual <= tol * std::max(1.0, scale)) {
    rep.converged = true;
    return rep;
  }
  std::ostringstream os;
  os << "eigensolver failed to converge: residual " << s.residual << " after "
     << j << " iterations";
  fail(os.str());
}

SpectralReport second_abs_eigenvalue(const NormalizedAdjacency& a,
                                     std::optional<EigenMethod> method,
                                     double tol, int dense_cutoff) {
  const int n = a.graph->n;
  EigenMethod m = method.value_or(n <= dense_cutoff ? EigenMethod::dense
                                                    : EigenMethod::iterative);
  if (m == EigenMethod::dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense(),
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    SpectralReport rep;
    rep.method = EigenMethod::dense;
    rep.top = ev[n - 1];
    rep.bottom = ev[0];
    rep.second_abs = n >= 2 ? std::max(std::abs(ev[n - 2]), std::abs(ev[0]))
                            : 0.0;
    return rep;
  }
  SpectralReport rep = deflated_abs_extreme(a.op(), 1.0, a.top_vec, tol);
  // Deflation moves the known top eigenvalue 1 to 0; everything else is
  // untouched, so the extreme |Ritz| is the second largest magnitude.
  rep.top = 1.0;
  return rep;
}

double rank1_deflated_norm(const SymOp& op, const Eigen::MatrixXd& r,
                           double tol) {
  const int n = op.n;
  if (r.rows() != n || r.cols() != n)
    fail("deflation matrix has wrong shape");
  double mx = r.cwiseAbs().maxCoeff();
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, mx))
    throw std::invalid_argument("deflation matrix is not symmetric");
  // Eigenvectors are needed below to hand the top direction to the solver.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
  const auto& ev = es.eigenvalues();
  double top = ev[n - 1];
  double slack = 1e-9 * std::max(1.0, std::abs(top));
  if (top < -slack)
    throw std::invalid_argument("deflation matrix is not PSD");
  for (int i = 0; i + 1 < n; ++i)
    if (std::abs(ev[i]) > slack)
      throw std::invalid_argument("deflation matrix is not rank one");
  if (top <= slack) return deflated_abs_extreme(op, 0.0, {}, tol).second_abs;
  return deflated_abs_extreme(op, top, es.eigenvectors().col(n - 1), tol)
      .second_abs;
}

double rank1_deflated_norm(const SymOp& op, const Eigen::VectorXd& v,
                           double scale, double tol) {
  if (scale < 0.0)
    throw std::invalid_argument("deflation scale must be nonnegative");
  if (v.size() != op.n) fail("deflation vector has wrong size");
  double nv = v.norm();
  if (scale == 0.0 || nv == 0.0)
    return deflated_abs_extreme(op, 0.0, {}, tol).second_abs;
  return deflated_abs_extreme(op, scale * nv * nv, v / nv, tol).second_abs;
}

double row_sum_bound(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double rayleigh_lower_bound(const WeightedGraph& g,
                            const Eigen::MatrixXd& embedding) {
  if (embedding.rows() != g.n) fail("embedding has wrong number of rows");
  if (g.edge_count == 0) fail("graph has no edges");
  double total = 0.0;
  for (int v = 0; v < g.n; ++v) total += g.degree[v];

  double num = 0.0;  // E over the stationary edge measure
  for (int u = 0; u < g.n; ++u)
    for (std::int64_t k = g.row_ptr[u]; k < g.row_ptr[u + 1]; ++k) {
      int vtx = g.col[k];
      if (vtx <= u) continue;
      num += 2.0 * g.w[k] / total *
             (embedding.row(u) - embedding.row(vtx)).squaredNorm();
    }

  Eigen::VectorXd pi(g.n);
  for (int v = 0; v < g.n; ++v) pi[v] = g.degree[v] / total;
  Eigen::RowVectorXd mean = pi.transpose() * embedding;
  double second = 0.0;
  for (int v = 0; v < g.n; ++v)
    second += pi[v] * embedding.row(v).squaredNorm();
  double den = 2.0 * (second - mean.squaredNorm());
  if (!(den > 1e-14 * std::max(1.0, second)))
    throw std::domain_error("degenerate embedding: zero variance under pi");
  return 1.0 - num / den;
}

double rayleigh_lower_bound(const WeightedGraph& g,
                            const Eigen::MatrixXd& embedding,
                            const Eigen::VectorXd& stationary) {
  if (stationary.size() != g.n) fail("stationary vector has wrong size");
  double total = 0.0;
  for (int v = 0; v < g.n; ++v) total += g.degree[v];
  double sum = 0.0;
  for (int v = 0; v < g.n; ++v) {
    sum += stationary[v];
    if (std::abs(stationary[v] - g.degree[v] / total) > 1e-9)
      throw std::invalid_argument(
          "stationary vector does not match the degree distribution");
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("stationary vector does not sum to 1");
  return rayleigh_lower_bound(g, embedding);
}

TrickleDownResult trickle_down_check(double skeleton_second, double link_max,
                                     double tol) {
  if (link_max >= 1.0)
    throw std::invalid_argument("vacuous input: link bound must be below 1");
  TrickleDownResult r;
  r.bound = link_max / (1.0 - link_max);
  r.margin = r.bound + tol - skeleton_second;
  r.pass = r.margin >= 0.0;
  return r;
}

Eigen::VectorXd dense_spectrum(const NormalizedAdjacency& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense(),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace hdxgeo
