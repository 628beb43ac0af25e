#include "macrolab/thermo.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace macrolab {

namespace {

HermitianOperator linear_combination(const ObservableFamily& family,
                                     const VectorXd& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != family.size())
    throw InvalidInput("α has the wrong number of components");
  if (!alpha.allFinite()) throw InvalidInput("α must be finite");
  MatrixXc k = MatrixXc::Zero(family.d, family.d);
  for (std::size_t i = 0; i < family.size(); ++i)
    k += alpha(static_cast<Index>(i)) * family.generators[i].matrix();
  return HermitianOperator(std::move(k), 1e-9);
}

// Eigenbasis of Σ α_i A_i with normalized Boltzmann weights.
struct GibbsData {
  SpectralDecomposition dec;
  VectorXd weights;
  double log_z = 0.0;
};

GibbsData gibbs_data(const ObservableFamily& family, const VectorXd& alpha) {
  GibbsData g;
  g.dec = hermitian_eig(linear_combination(family, alpha));
  const double top = g.dec.eigenvalues.maxCoeff();
  g.weights = (g.dec.eigenvalues.array() - top).exp().matrix();
  const double z = g.weights.sum();
  g.weights /= z;
  g.log_z = top + std::log(z);
  return g;
}

double entropy_of_weights(const VectorXd& w) {
  double s = 0.0;
  for (Index k = 0; k < w.size(); ++k)
    if (w(k) > 0.0) s -= w(k) * std::log(w(k));
  return s;
}

VectorXd check_point(const EntropyProfile& profile, const VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != profile.size())
    throw InvalidInput("x has the wrong number of components");
  if (!x.allFinite()) throw InvalidInput("x must be finite");
  return x;
}

}  // namespace

double free_energy(const ObservableFamily& family, const VectorXd& alpha) {
  const VectorXd g = hermitian_eigenvalues(linear_combination(family, alpha));
  const double top = g.maxCoeff();
  return top + std::log((g.array() - top).exp().sum());
}

HermitianOperator gibbs_state(const ObservableFamily& family, const VectorXd& alpha) {
  const GibbsData g = gibbs_data(family, alpha);
  const MatrixXc rho = g.dec.eigenvectors * g.weights.cast<Complex>().asDiagonal() *
                       g.dec.eigenvectors.adjoint();
  return HermitianOperator(0.5 * (rho + rho.adjoint()), 1e-10);
}

double von_neumann_entropy(const HermitianOperator& rho) {
  return entropy_of_weights(hermitian_eigenvalues(rho));
}

FreeEnergySurface::FreeEnergySurface(ObservableFamily family)
    : family_(std::move(family)) {}

VectorXd FreeEnergySurface::gradient(const VectorXd& alpha) const {
  const GibbsData g = gibbs_data(family_, alpha);
  VectorXd grad(static_cast<Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    const MatrixXc a = g.dec.eigenvectors.adjoint() * family_.generators[i].matrix() *
                       g.dec.eigenvectors;
    grad(static_cast<Index>(i)) = (a.diagonal().real().array() * g.weights.array()).sum();
  }
  return grad;
}

FreeEnergySurface::Evaluation FreeEnergySurface::evaluate(const VectorXd& alpha) const {
  const GibbsData g = gibbs_data(family_, alpha);
  const Index m = static_cast<Index>(size());
  const Index d = family_.d;
  std::vector<MatrixXc> rotated;
  rotated.reserve(size());
  for (const auto& a : family_.generators)
    rotated.push_back(g.dec.eigenvectors.adjoint() * a.matrix() * g.dec.eigenvectors);

  Evaluation out;
  out.value = g.log_z;
  out.gradient.resize(m);
  for (Index i = 0; i < m; ++i)
    out.gradient(i) = (rotated[i].diagonal().real().array() * g.weights.array()).sum();

  // Divided differences of the normalized exponential.
  MatrixXd phi(d, d);
  const VectorXd& e = g.dec.eigenvalues;
  for (Index k = 0; k < d; ++k)
    for (Index l = 0; l < d; ++l) {
      const double gap = e(k) - e(l);
      // (w_k - w_l)/gap, written with a non-positive exponent so that an
      // underflowed weight never meets an overflowed exponential.
      if (std::abs(gap) < 1e-12)
        phi(k, l) = 0.5 * (g.weights(k) + g.weights(l));
      else if (gap > 0.0)
        phi(k, l) = -g.weights(k) * std::expm1(-gap) / gap;
      else
        phi(k, l) = g.weights(l) * std::expm1(gap) / gap;
    }
  out.hessian.resize(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = i; j < m; ++j) {
      double s = 0.0;
      for (Index k = 0; k < d; ++k)
        for (Index l = 0; l < d; ++l)
          s += (rotated[i](k, l) * rotated[j](l, k)).real() * phi(k, l);
      out.hessian(i, j) = out.hessian(j, i) = s - out.gradient(i) * out.gradient(j);
    }
  return out;
}

MatrixXd gibbs_covariance(const ObservableFamily& family, const VectorXd& alpha) {
  const MatrixXc rho = gibbs_state(family, alpha).matrix();
  const Index m = static_cast<Index>(family.size());
  std::vector<MatrixXc> centered;
  for (const auto& a : family.generators) {
    const double mean = (rho * a.matrix()).trace().real();
    centered.push_back(a.matrix() - mean * MatrixXc::Identity(family.d, family.d));
  }
  MatrixXd cov(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      cov(i, j) = 0.5 * (rho * (centered[i] * centered[j] + centered[j] * centered[i]))
                            .trace()
                            .real();
  return cov;
}

const char* to_string(Membership m) {
  switch (m) {
    case Membership::Interior: return "interior";
    case Membership::Boundary: return "boundary";
    case Membership::Outside: return "outside";
  }
  return "unknown";
}

EntropyProfile::EntropyProfile(ObservableFamily family, DualSolverSettings settings)
    : surface_(std::move(family)), settings_(settings) {
  const auto& fam = surface_.family();
  const Index m = static_cast<Index>(fam.size());
  log_d_ = std::log(static_cast<double>(fam.d));
  const auto at_zero = surface_.evaluate(VectorXd::Zero(m));
  x0_ = at_zero.gradient;
  box_lower_.resize(m);
  box_upper_.resize(m);
  for (Index i = 0; i < m; ++i) {
    const VectorXd ev = hermitian_eigenvalues(fam.generators[i]);
    box_lower_(i) = ev(0);
    box_upper_(i) = ev(ev.size() - 1);
  }
  // Directions c with Σ c_i A_i ∝ I have zero variance in every state; they
  // fix Σ c_i x_i, so Newton runs on the complementary range only.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(at_zero.hessian);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Index> range, null;
  for (Index k = 0; k < m; ++k)
    (es.eigenvalues()(k) > 1e-12 * scale ? range : null).push_back(k);
  range_basis_.resize(m, static_cast<Index>(range.size()));
  null_basis_.resize(m, static_cast<Index>(null.size()));
  for (std::size_t k = 0; k < range.size(); ++k)
    range_basis_.col(static_cast<Index>(k)) = es.eigenvectors().col(range[k]);
  for (std::size_t k = 0; k < null.size(); ++k)
    null_basis_.col(static_cast<Index>(k)) = es.eigenvectors().col(null[k]);
}

EntropyResult EntropyProfile::solve(const VectorXd& x_in) const {
  const VectorXd x = check_point(*this, x_in);
  const Index m = static_cast<Index>(size());
  EntropyResult result;
  result.alpha = VectorXd::Zero(m);

  if (null_basis_.cols() > 0) {
    const double drift = (null_basis_.transpose() * (x - x0_)).cwiseAbs().maxCoeff();
    if (drift > settings_.affine_tol * (1.0 + x.norm())) return result;
  }
  if (range_basis_.cols() == 0) {
    result.value = log_d_;
    result.membership = Membership::Interior;
    return result;
  }

  const MatrixXd& B = range_basis_;
  VectorXd beta = VectorXd::Zero(B.cols());
  auto objective = [&](const VectorXd& b) {
    const VectorXd a = B * b;
    return surface_.value(a) - a.dot(x);
  };

  auto finish = [&](double f, Membership membership, int iterations) {
    result.alpha = B * beta;
    result.iterations = iterations;
    result.membership = membership;
    result.value = membership == Membership::Outside
                       ? kNegInf
                       : std::clamp(f, 0.0, log_d_);
    return result;
  };

  double f = objective(beta);
  for (int it = 0; it < settings_.max_iterations; ++it) {
    const auto ev = surface_.evaluate(B * beta);
    const VectorXd g = B.transpose() * (ev.gradient - x);
    const MatrixXd h = B.transpose() * ev.hessian * B;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    const double curvature = es.eigenvalues()(0);
    if (g.norm() <= settings_.gradient_tol)
      return finish(f, curvature < settings_.boundary_curvature ? Membership::Boundary
                                                                : Membership::Interior,
                    it);

    // Newton direction with the spectrum floored, so near-flat directions
    // produce long steps instead of a breakdown.
    const VectorXd coeff = es.eigenvectors().transpose() * g;
    VectorXd step = VectorXd::Zero(g.size());
    for (Index k = 0; k < g.size(); ++k)
      step -= es.eigenvectors().col(k) * (coeff(k) / std::max(es.eigenvalues()(k), 1e-20));
    const double slope = g.dot(step);

    double t = 1.0;
    double f_new = objective(beta + step);
    while (!(f_new <= f + 1e-4 * t * slope)) {
      t *= 0.5;
      if (t < 1e-12) break;
      f_new = objective(beta + t * step);
    }
    // No representable decrease left: accept as converged only when the
    // gradient is already at rounding level.
    const bool stalled = t < 1e-12 || !(f_new < f);
    if (stalled && g.norm() <= 1e-7)
      return finish(f, curvature < settings_.boundary_curvature ? Membership::Boundary
                                                                : Membership::Interior,
                    it);
    if (t < 1e-12) {
      std::ostringstream msg;
      msg << "entropy_mu: line search stalled with gradient norm " << g.norm();
      throw Inconclusive(msg.str());
    }
    const double decrease = f - f_new;
    beta += t * step;
    f = f_new;
    if (beta.norm() > settings_.divergence_threshold)
      return finish(f,
                    decrease > settings_.decrease_floor ? Membership::Outside
                                                        : Membership::Boundary,
                    it + 1);
  }
  std::ostringstream msg;
  msg << "entropy_mu: no verdict after " << settings_.max_iterations
      << " Newton iterations";
  throw Inconclusive(msg.str());
}

double entropy_mu(const EntropyProfile& profile, const VectorXd& x) {
  return profile.mu(x);
}

Membership dom_membership(const EntropyProfile& profile, const VectorXd& x) {
  return profile.membership(x);
}

double entropy_mu_oracle(const ObservableFamily& family, const VectorXd& x) {
  const Index m = static_cast<Index>(family.size());
  if (x.size() != m) throw InvalidInput("x has the wrong number of components");
  if (!x.allFinite()) throw InvalidInput("x must be finite");
  const FreeEnergySurface surface(family);
  auto residual = [&](const VectorXd& a) -> VectorXd { return surface.gradient(a) - x; };

  VectorXd alpha = VectorXd::Zero(m);
  VectorXd r = residual(alpha);
  double lambda = 1e-3;
  const double h = 1e-5;
  for (int it = 0; it < 500 && r.norm() > 1e-11; ++it) {
    MatrixXd jac(m, m);
    for (Index j = 0; j < m; ++j) {
      VectorXd e = VectorXd::Zero(m);
      e(j) = h;
      jac.col(j) = (residual(alpha + e) - residual(alpha - e)) / (2.0 * h);
    }
    const MatrixXd jtj = jac.transpose() * jac;
    const VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e12) {
      MatrixXd lhs = jtj;
      for (Index k = 0; k < m; ++k) lhs(k, k) += lambda * (jtj(k, k) + 1e-30);
      const VectorXd delta = -lhs.ldlt().solve(jtr);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const VectorXd r_new = residual(alpha + delta);
      if (r_new.norm() < r.norm()) {
        alpha += delta;
        r = r_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  if (r.norm() > 1e-7) return kNegInf;
  return von_neumann_entropy(gibbs_state(family, alpha));
}

SampleCloud sample_grid(const EntropyProfile& profile, double step) {
  if (!(step > 0.0)) throw InvalidInput("grid step must be positive");
  const Index m = static_cast<Index>(profile.size());
  const VectorXd& x0 = profile.x0();
  Eigen::VectorXi lo(m), hi(m);
  for (Index i = 0; i < m; ++i) {
    lo(i) = static_cast<int>(std::ceil((profile.box_lower()(i) - x0(i)) / step - 1e-12));
    hi(i) = static_cast<int>(std::floor((profile.box_upper()(i) - x0(i)) / step + 1e-12));
  }
  SampleCloud cloud;
  cloud.step = step;
  Eigen::VectorXi k = lo;
  while (true) {
    VectorXd p = x0 + step * k.cast<double>();
    cloud.mu.push_back(profile.mu(p));
    cloud.points.push_back(std::move(p));
    Index axis = 0;
    while (axis < m && ++k(axis) > hi(axis)) {
      k(axis) = lo(axis);
      ++axis;
    }
    if (axis == m) break;
  }
  return cloud;
}

double ladder_level(double s0, double s1, double C, double epsilon, std::size_t k) {
  if (k == 0) return s0;
  return s0 - std::pow(C / (C - epsilon), static_cast<double>(k - 1)) * (s0 - s1);
}

ContourLadder contour_ladder(const EntropyProfile& profile, double epsilon,
                             const LadderSettings& settings) {
  if (!(epsilon > 0.0)) throw InvalidInput("contour_ladder: ε must be positive");
  return contour_ladder(profile, epsilon, sample_grid(profile, settings.grid_step),
                        settings);
}

ContourLadder contour_ladder(const EntropyProfile& profile, double epsilon,
                             const SampleCloud& cloud, const LadderSettings& settings) {
  if (!(epsilon > 0.0)) throw InvalidInput("contour_ladder: ε must be positive");
  ContourLadder ladder;
  ladder.epsilon = epsilon;
  ladder.x0 = profile.x0();
  ladder.grid_step = cloud.step;
  ladder.C = settings.c_slack * std::max(profile.box_diameter(), epsilon);
  if (epsilon >= ladder.C) throw InvalidInput("contour_ladder: ε must be below C");

  const double s0 = profile.mu(profile.x0());
  double min_mu = s0;
  for (double v : cloud.mu)
    if (std::isfinite(v)) min_mu = std::min(min_mu, v);
  const double delta = settings.search_fraction * (s0 - min_mu);
  if (!(delta > 0.0))
    throw Inconclusive("contour_ladder: sampled μ is flat; no room below s_0");

  auto within_ball = [&](double s) {
    for (std::size_t k = 0; k < cloud.size(); ++k)
      if (cloud.mu[k] >= s && (cloud.points[k] - ladder.x0).norm() > epsilon)
        return false;
    return true;
  };
  double lo = s0 - delta, hi = s0;
  double s1 = s0;
  if (within_ball(lo)) {
    s1 = lo;
  } else {
    for (int step = 0; step < settings.bisection_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      (within_ball(mid) ? hi : lo) = mid;
    }
    s1 = hi;
  }
  if (!(s1 < s0))
    throw Inconclusive("contour_ladder: no sampled level below s_0 fits in B_ε(x_0)");

  ladder.levels.push_back(s0);
  for (std::size_t k = 1;; ++k) {
    if (k >= settings.max_levels)
      throw Inconclusive("contour_ladder: level budget exhausted before s_n < 0");
    const double s = ladder_level(s0, s1, ladder.C, epsilon, k);
    ladder.levels.push_back(s);
    if (s < 0.0) break;
  }
  return ladder;
}

namespace {

// Integer grid coordinates relative to the cloud anchor, for neighbour lookup.
struct GridIndex {
  struct Hash {
    std::size_t operator()(const std::vector<int>& v) const {
      std::size_t h = 1469598103934665603ull;
      for (int c : v) h = (h ^ static_cast<std::size_t>(c + 1000003)) * 1099511628211ull;
      return h;
    }
  };
  std::unordered_map<std::vector<int>, std::size_t, Hash> lookup;
  std::vector<std::vector<int>> coords;

  GridIndex(const SampleCloud& cloud, const VectorXd& anchor) {
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      std::vector<int> c(static_cast<std::size_t>(anchor.size()));
      for (Index i = 0; i < anchor.size(); ++i)
        c[static_cast<std::size_t>(i)] = static_cast<int>(
            std::lround((cloud.points[k](i) - anchor(i)) / cloud.step));
      lookup.emplace(c, k);
      coords.push_back(std::move(c));
    }
  }
};

}  // namespace

std::vector<double> ladder_inclusion_excess(const ContourLadder& ladder,
                                            const SampleCloud& cloud) {
  const GridIndex grid(cloud, ladder.x0);
  const int reach = static_cast<int>(std::ceil(ladder.epsilon / cloud.step));
  const std::size_t m = static_cast<std::size_t>(ladder.x0.size());
  std::vector<double> excess;
  for (std::size_t k = 1; k < ladder.levels.size(); ++k) {
    const double s = ladder.levels[k], s_prev = ladder.levels[k - 1];
    std::vector<std::size_t> outer;
    for (std::size_t q = 0; q < cloud.size(); ++q)
      if (cloud.mu[q] >= s_prev) outer.push_back(q);
    double worst = 0.0;
    for (std::size_t q = 0; q < cloud.size(); ++q) {
      if (!(cloud.mu[q] >= s)) continue;
      // Scan the cube of grid neighbours first; fall back to all of X_{s_{k-1}}.
      bool found = false;
      std::vector<int> offset(m, -reach);
      while (!found) {
        std::vector<int> c = grid.coords[q];
        for (std::size_t i = 0; i < m; ++i) c[i] += offset[i];
        const auto it = grid.lookup.find(c);
        if (it != grid.lookup.end() && cloud.mu[it->second] >= s_prev &&
            (cloud.points[it->second] - cloud.points[q]).norm() <= ladder.epsilon)
          found = true;
        std::size_t axis = 0;
        while (axis < m && ++offset[axis] > reach) offset[axis++] = -reach;
        if (axis == m) break;
      }
      if (found) continue;
      double dist = std::numeric_limits<double>::infinity();
      for (std::size_t o : outer)
        dist = std::min(dist, (cloud.points[o] - cloud.points[q]).norm());
      worst = std::max(worst, dist - ladder.epsilon);
    }
    excess.push_back(worst);
  }
  return excess;
}

std::size_t MeshPointSet::point_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers) total += layer.size();
  return total;
}

std::vector<VectorXd> MeshPointSet::all_points() const {
  std::vector<VectorXd> out;
  for (const auto& layer : layers) out.insert(out.end(), layer.begin(), layer.end());
  return out;
}

std::vector<double> mesh_density_radii(const MeshPointSet& mesh,
                                       const ContourLadder& ladder,
                                       const SampleCloud& cloud) {
  std::vector<double> radii;
  const std::size_t n = ladder.levels.size() - 1;
  for (std::size_t k = 0; k + 1 < n && k < mesh.layers.size(); ++k) {
    std::vector<const VectorXd*> net;
    for (std::size_t i = 0; i <= k; ++i)
      for (const auto& p : mesh.layers[i]) net.push_back(&p);
    double worst = 0.0;
    for (std::size_t q = 0; q < cloud.size(); ++q) {
      if (!(cloud.mu[q] >= ladder.levels[k + 1])) continue;
      double best = std::numeric_limits<double>::infinity();
      for (const VectorXd* p : net) best = std::min(best, (*p - cloud.points[q]).norm());
      worst = std::max(worst, best);
    }
    radii.push_back(worst);
  }
  return radii;
}

MeshPointSet mesh_points(const EntropyProfile& profile, const ContourLadder& ladder,
                         double eta, double resolution) {
  if (!(eta > 0.0)) throw InvalidInput("mesh_points: η must be positive");
  if (ladder.levels.size() < 2) throw InvalidInput("mesh_points: ladder has no levels");
  const double root_m = std::sqrt(static_cast<double>(profile.size()));
  if (resolution <= 0.0) resolution = eta / (2.0 * root_m);
  if (resolution > eta / root_m) {
    std::ostringstream msg;
    msg << "mesh_points: resolution " << resolution << " exceeds η/√m = "
        << eta / root_m << "; the η-net cannot be certified";
    throw InvalidInput(msg.str());
  }
  const SampleCloud cloud = sample_grid(profile, resolution);
  std::size_t origin = cloud.size();
  for (std::size_t q = 0; q < cloud.size(); ++q)
    if ((cloud.points[q] - ladder.x0).norm() < 1e-12) origin = q;
  if (origin == cloud.size()) throw Inconclusive("mesh_points: x_0 missing from grid");

  const std::size_t n = ladder.levels.size() - 1;
  std::vector<bool> chosen(cloud.size(), false);
  chosen[origin] = true;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> net{origin};
    for (std::size_t q = 0; q < cloud.size(); ++q) {
      if (!(cloud.mu[q] >= ladder.levels[k])) continue;
      bool covered = false;
      for (std::size_t p : net)
        if ((cloud.points[p] - cloud.points[q]).norm() <= eta) {
          covered = true;
          break;
        }
      if (!covered) net.push_back(q);
    }
    for (std::size_t p : net) chosen[p] = true;
  }

  MeshPointSet mesh;
  mesh.eta = eta;
  mesh.resolution = resolution;
  mesh.layers.resize(n);
  mesh.mu.resize(n);
  mesh.layers[0].push_back(cloud.points[origin]);
  mesh.mu[0].push_back(cloud.mu[origin]);
  for (std::size_t q = 0; q < cloud.size(); ++q) {
    if (!chosen[q] || q == origin) continue;
    // Only x_0 attains s_0, so other points start at layer 1.
    std::size_t layer = 1;
    while (layer < n && !(cloud.mu[q] >= ladder.levels[layer])) ++layer;
    if (layer == n) continue;
    mesh.layers[layer].push_back(cloud.points[q]);
    mesh.mu[layer].push_back(cloud.mu[q]);
  }

  const auto radii = mesh_density_radii(mesh, ladder, cloud);
  for (std::size_t k = 0; k < radii.size(); ++k)
    if (radii[k] > 2.0 * eta + 1e-12) {
      std::ostringstream msg;
      msg << "mesh_points: layers 0.." << k << " are only " << radii[k]
          << "-dense in sampled X_{s_" << k + 1 << "}, above 2η = " << 2.0 * eta
          << "; use ε <= η or a finer resolution";
      throw Inconclusive(msg.str());
    }
  return mesh;
}

}  // namespace macrolab
