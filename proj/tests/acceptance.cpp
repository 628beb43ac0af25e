// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criterion numbers given as arguments restrict the run.

#include "macrolab/commands.hpp"
#include "macrolab/random.hpp"

#include <array>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace macrolab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

double binary_entropy(double x) {
  const double p = 0.5 * (1.0 + x), q = 0.5 * (1.0 - x);
  return -(p > 0 ? p * std::log(p) : 0.0) - (q > 0 ? q * std::log(q) : 0.0);
}

VectorXd random_in_ball(Rng& rng, Index m, double radius) {
  VectorXd x(m);
  do {
    for (Index i = 0; i < m; ++i) x(i) = rng.uniform(-radius, radius);
  } while (x.norm() > radius);
  return x;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion1(Verdict& v) {
  const auto family = ObservableFamily::make({pauli_x(), pauli_y()});
  const std::array<int, 5> ns{1, 2, 3, 4, 5};
  double worst = 0.0;
  for (const auto& row : commutator_decay_profile(family, ns))
    worst = std::max(worst, std::abs(row.norm - 2.0 / (2 * row.n + 1)));
  v.detail << "max |‖[H1,H2]‖ - 2/(2n+1)| = " << worst;
  v.require(worst <= 1e-9, "tolerance 1e-9");
}

void criterion2(Verdict& v) {
  const auto family = ObservableFamily::make({pauli_z()});
  const EntropyProfile profile(family);
  double worst_mu = 0.0;
  for (int k = 1; k <= 21; ++k) {
    const double x = -1.0 + k / 11.0;
    worst_mu = std::max(worst_mu, std::abs(profile.mu(vec({x})) - binary_entropy(x)));
  }
  double worst_fenchel = 0.0;
  const FreeEnergySurface& surface = profile.surface();
  for (int k = 0; k < 9; ++k) {
    const VectorXd a = vec({-2.0 + 0.5 * k});
    const auto ev = surface.evaluate(a);
    worst_fenchel =
        std::max(worst_fenchel, std::abs(profile.mu(ev.gradient) + a.dot(ev.gradient) - ev.value));
  }
  v.detail << "max |μ - h| = " << worst_mu << ", max Fenchel gap = " << worst_fenchel;
  v.require(worst_mu <= 1e-6, "μ tolerance 1e-6");
  v.require(worst_fenchel <= 1e-7, "Fenchel tolerance 1e-7");
}

void criterion3(Verdict& v) {
  Rng rng(2024);
  const std::array<ObservableFamily, 3> families{
      ObservableFamily::make({pauli_z()}), ObservableFamily::make({pauli_z(), pauli_x()}),
      ObservableFamily::make({pauli_x(), pauli_y(), pauli_z()})};
  double worst = 0.0;
  for (const auto& family : families) {
    const EntropyProfile profile(family);
    for (int k = 0; k < 20; ++k) {
      const VectorXd x = random_in_ball(rng, static_cast<Index>(family.size()), 0.9);
      worst = std::max(worst, std::abs(entropy_mu(profile, x) - entropy_mu_oracle(family, x)));
    }
  }
  v.detail << "max |solver - oracle| over 60 points = " << worst;
  v.require(worst <= 1e-6, "tolerance 1e-6");
}

void criterion4(Verdict& v) {
  const EntropyProfile profile(ObservableFamily::make({pauli_z(), pauli_x()}));
  Rng rng(4);
  int audited = 0, wrong = 0;
  for (int k = 0; k < 200; ++k) {
    const VectorXd x = vec({rng.uniform(-1.3, 1.3), rng.uniform(-1.3, 1.3)});
    const double r = x.norm();
    if (std::abs(r - 1.0) < 0.05) continue;
    ++audited;
    const Membership expected = r < 1.0 ? Membership::Interior : Membership::Outside;
    if (dom_membership(profile, x) != expected) ++wrong;
  }
  v.detail << wrong << " misclassified of " << audited << " points at margin >= 0.05";
  v.require(wrong == 0, "zero misclassifications");
}

void criterion5(Verdict& v) {
  const EntropyProfile profile(ObservableFamily::make({pauli_z(), pauli_x()}));
  const double eps = 0.3;
  const auto cloud = sample_grid(profile, 0.05);
  const auto ladder = contour_ladder(profile, eps, cloud);
  const auto& s = ladder.levels;
  const double q = ladder.C / (ladder.C - eps);
  bool decreasing = true;
  double recursion = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k) {
    decreasing = decreasing && s[k] < s[k - 1];
    if (k >= 2) recursion = std::max(recursion, std::abs((s[k] - s[0]) - q * (s[k - 1] - s[0])));
  }
  double excess = -std::numeric_limits<double>::infinity();
  for (double e : ladder_inclusion_excess(ladder, cloud)) excess = std::max(excess, e);
  v.detail << s.size() << " levels, |s0 - log 2| = " << std::abs(s[0] - std::log(2.0))
           << ", recursion residual = " << recursion << ", terminal = " << s.back()
           << ", worst inclusion excess = " << excess;
  v.require(std::abs(s[0] - std::log(2.0)) <= 1e-8, "s0 = log 2");
  v.require(decreasing, "strictly decreasing");
  v.require(recursion <= 1e-12, "geometric recursion");
  v.require(s.back() < 0.0, "terminal level < 0");
  v.require(excess <= 0.0, "sampled inclusion");
}

void criterion6(Verdict& v) {
  const EntropyProfile profile(ObservableFamily::make({pauli_z()}));
  const std::array<int, 2> ns{2, 5};
  const auto rec = rank_rate(profile, vec({0.0}), 0.25, ns, BoxKind::Closed, {});
  const double d2 = rec[0].target_sup_mu - rec[0].rate;
  const double d5 = rec[1].target_sup_mu - rec[1].rate;
  v.detail << "ranks " << rec[0].rank << ", " << rec[1].rank << "; deficits " << d2 << " -> "
           << d5;
  v.require(rec[0].rank == 20 && rec[1].rank == 924, "binomial ranks 20 and 924");
  for (const auto& r : rec)
    v.require(r.rate <= r.target_sup_mu + 2.0 / (2 * r.n + 1), "rate upper bound");
  v.require(d5 < d2, "deficit shrinks");
}

void criterion7(Verdict& v) {
  MatrixXc rho = MatrixXc::Zero(2, 2);
  rho(0, 0) = 0.9;
  rho(1, 1) = 0.1;
  const auto state = ProductState::make(rho);
  const double s = mean_entropy_product(state);
  v.detail << "S(ρ) = " << s << "; |β/(2n+1) - S| =";
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (int n : {2, 4, 6, 9, 12}) {
    const double gap = std::abs(beta_min_rank(state, 0.1, n).beta / window_sites(n) - s);
    v.detail << " " << gap << " (n=" << n << ")";
    monotone = monotone && gap < prev;
    prev = gap;
  }
  MatrixXc uniform = MatrixXc::Identity(2, 2) * 0.5;
  const auto rank = beta_min_rank(ProductState::make(uniform), 0.2, 1).rank;
  v.detail << "; uniform rank = " << rank;
  v.require(std::abs(s - 0.325083) < 1e-6, "S(ρ) closed form");
  v.require(monotone, "monotone decrease");
  v.require(rank == 7, "uniform rank 7");
}

void criterion8(Verdict& v) {
  const auto family = ObservableFamily::make({pauli_x(), pauli_y(), pauli_z()});
  const std::array<int, 5> ns{1, 2, 3, 4, 5};
  const auto rows = convergence_experiment(family, ns);
  double worst_commutator = 0.0;
  v.detail << "max error by n:";
  for (const auto& row : rows) {
    worst_commutator = std::max(worst_commutator, row.max_commutator);
    v.detail << " " << row.max_error;
  }
  v.detail << "; max commutator = " << worst_commutator;
  v.require(worst_commutator < 1e-11, "commutators < 1e-11");
  v.require(rows.back().max_error < 0.8 * rows.front().max_error, "error(5) < 0.8 error(1)");
}

void criterion9(Verdict& v) {
  VectorXd diag(2);
  diag << 1.0, 2.0;
  const auto commuting = ObservableFamily::make({pauli_z(), HermitianOperator::diagonal(diag)});
  const auto single = ObservableFamily::make({pauli_x()});
  double worst_commuting = 0.0, worst_single = 0.0;
  for (int n : {1, 2, 3, 4}) {
    const auto set = build_mean_observables(commuting, n);
    worst_commuting = std::max(
        worst_commuting, approximation_error(sequential_joint_cluster(set).model, set).max_error);
    const auto one = build_mean_observables(single, n);
    worst_single = std::max(
        worst_single, approximation_error(sequential_joint_cluster(one).model, one).max_error);
  }
  v.detail << "commuting family max ‖H - Y‖ = " << worst_commuting
           << ", m = 1 max error = " << worst_single;
  v.require(worst_commuting <= 1e-9, "commuting fixed point 1e-9");
  v.require(worst_single <= 1e-10, "m = 1 exact 1e-10");
}

void criterion10(Verdict& v) {
  MatrixXc zz = kron(pauli_z().matrix(), pauli_z().matrix());
  const auto phi = Interaction::make(2, 2, {{2, HermitianOperator(zz)}});
  const std::array<Interaction, 1> phis{phi};
  const int M = 2;
  for (int n : {3, 4, 5}) {
    const auto k = coarse_grain(phis, M, n);
    const auto h = build_interaction_means(phis, n);
    const double measured = operator_norm(k.operators[0] - h.operators[0]);
    const double bound = coarse_grain_tail(phi, M).max() + coarse_grain_boundary_bound(phi, M, n);
    v.detail << "n=" << n << ": " << measured << " <= " << bound << " + " << 2.0 / (2 * n + 1)
             << "; ";
    v.require(measured <= bound + 2.0 / (2 * n + 1), "bound at n=" + std::to_string(n));
  }
}

void criterion11(Verdict& v) {
  const fs::path root = fs::temp_directory_path() / "macrolab_acceptance_determinism";
  fs::remove_all(root);
  const auto cfg = parse_config(R"({
    "family": "pauli_xz", "n_values": [1, 2], "epsilon": 0.3, "x": [0.2, 0.1],
    "x_grid": {"min": -1, "max": 1, "step": 0.25}, "random_points": 10,
    "rho": [[0.9, 0], [0, 0.1]], "eps_values": [0.1, 0.2], "write_model": true,
    "interactions": [{"d": 2, "range": 2,
                      "terms": {"2": [[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]]}}],
    "M": [1]
  })", 17);
  std::size_t compared = 0;
  for (const auto& name : command_names()) {
    const auto a = run_command(name, cfg, root / "a");
    const auto b = run_command(name, cfg, root / "b");
    v.require(a == b, name + " file lists");
    for (const auto& f : a) {
      ++compared;
      v.require(slurp(root / "a" / f) == slurp(root / "b" / f), name + "/" + f);
    }
  }
  v.detail << compared << " artifacts from " << command_names().size()
           << " commands compared byte for byte";
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  const std::array<std::pair<const char*, std::function<void(Verdict&)>>, 11> criteria{{
      {"commutator decay identity", criterion1},
      {"Legendre duality", criterion2},
      {"oracle cross-check", criterion3},
      {"domain geometry", criterion4},
      {"contour ladder", criterion5},
      {"rank rates", criterion6},
      {"beta entropy", criterion7},
      {"convergence trend", criterion8},
      {"fixed points", criterion9},
      {"coarse-graining", criterion10},
      {"determinism", criterion11},
  }};
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion '" << argv[a] << "'\n";
      return 2;
    }
    selected[static_cast<std::size_t>(k - 1)] = true;
  }
  int failures = 0, run = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++run;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " ("
              << criteria[i].first << "): " << v.detail.str() << " [" << secs << " s]"
              << std::endl;
  }
  std::cout << run - failures << "/" << run << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
