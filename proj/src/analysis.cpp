#include "cavitymc/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <tuple>

#include "cavitymc/errors.hpp"

namespace cavitymc {
namespace {

// Group key (trap_depth, delta_c); doubles compare exactly because every
// interval inherits them verbatim from the sweep grid.
using GroupKey = std::pair<double, double>;

// Contributions are sorted by (atom_index, interval start) before any
// floating-point accumulation so aggregation is permutation-invariant
// bit for bit.
struct Entry {
  std::uint64_t atom;
  double start;
  double value;
  bool operator<(const Entry& o) const {
    return atom != o.atom ? atom < o.atom : start < o.start;
  }
};

template <typename Filter>
std::map<GroupKey, std::vector<Entry>> gather_probe_entries(
    const std::vector<AtomRunResult>& runs, Filter&& filter,
    double (*extract)(const IntervalRecord&)) {
  std::map<GroupKey, std::vector<Entry>> groups;
  for (const auto& run : runs) {
    const GroupKey key{run.trap_depth_hold, run.probe_delta_c};
    for (const auto& rec : run.intervals) {
      if (rec.kind != IntervalKind::probe) continue;
      if (!filter(rec)) continue;
      groups[key].push_back({run.atom_index, rec.start, extract(rec)});
    }
  }
  return groups;
}

long count_atoms(const std::vector<Entry>& sorted) {
  long atoms = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (i == 0 || sorted[i].atom != sorted[i - 1].atom) ++atoms;
  return atoms;
}

}  // namespace

std::vector<SpectrumPoint> transmission_spectrum(
    const std::vector<AtomRunResult>& runs, bool qualified_only) {
  if (runs.empty()) throw ConfigError("transmission_spectrum: no runs");
  auto groups = gather_probe_entries(
      runs,
      [&](const IntervalRecord& rec) { return !qualified_only || rec.qualified; },
      +[](const IntervalRecord& rec) { return rec.mean_transmission_rel; });

  std::vector<SpectrumPoint> out;
  for (auto& [key, entries] : groups) {
    if (entries.empty()) continue;
    std::sort(entries.begin(), entries.end());
    SpectrumPoint pt;
    pt.trap_depth = key.first;
    pt.delta_c = key.second;
    pt.power_nw = display_power_nw(pt.trap_depth);
    pt.n_intervals = long(entries.size());
    pt.n_atoms = count_atoms(entries);
    double sum = 0.0;
    for (const auto& e : entries) sum += e.value;
    pt.mean_value = sum / double(entries.size());
    if (entries.size() > 1) {
      double m2 = 0.0;
      for (const auto& e : entries) {
        const double d = e.value - pt.mean_value;
        m2 += d * d;
      }
      pt.std_error =
          std::sqrt(m2 / double(entries.size() - 1) / double(entries.size()));
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<LossRatePoint> loss_rate_spectrum(
    const std::vector<AtomRunResult>& runs) {
  if (runs.empty()) throw ConfigError("loss_rate_spectrum: no runs");
  auto probe = gather_probe_entries(
      runs, [](const IntervalRecord&) { return true; },
      +[](const IntervalRecord& rec) { return rec.exposure; });

  std::map<GroupKey, std::vector<Entry>> cooling;
  std::map<GroupKey, std::tuple<long, long, long>> counts;  // probe/cool losses, atoms
  for (const auto& run : runs) {
    if (!run.triggered || run.intervals.empty()) continue;
    const GroupKey key{run.trap_depth_hold, run.probe_delta_c};
    auto& [n_probe, n_cool, n_atoms] = counts[key];
    ++n_atoms;
    if (run.lost) (run.loss_during_probe ? n_probe : n_cool) += 1;
    for (const auto& rec : run.intervals)
      if (rec.kind == IntervalKind::cooling)
        cooling[key].push_back({run.atom_index, rec.start, rec.exposure});
  }

  std::vector<LossRatePoint> out;
  for (auto& [key, entries] : probe) {
    std::sort(entries.begin(), entries.end());
    double t_probe = 0.0;
    for (const auto& e : entries) t_probe += e.value;
    if (!(t_probe > 0.0)) continue;
    double t_cool = 0.0;
    auto cit = cooling.find(key);
    if (cit != cooling.end()) {
      std::sort(cit->second.begin(), cit->second.end());
      for (const auto& e : cit->second) t_cool += e.value;
    }

    LossRatePoint pt;
    pt.trap_depth = key.first;
    pt.delta_c = key.second;
    pt.power_nw = display_power_nw(pt.trap_depth);
    const auto& [n_probe_loss, n_cool_loss, n_atoms] = counts[key];
    pt.n_loss_probe = n_probe_loss;
    pt.n_loss_cooling = n_cool_loss;
    pt.n_atoms = n_atoms;
    pt.probe_exposure = t_probe;
    pt.cooling_exposure = t_cool;
    pt.probe_rate = double(n_probe_loss) / t_probe;
    pt.baseline_rate = t_cool > 0.0 ? double(n_cool_loss) / t_cool : 0.0;
    pt.excess_rate = pt.probe_rate - pt.baseline_rate;
    double var = double(n_probe_loss) / (t_probe * t_probe);
    if (t_cool > 0.0) var += double(n_cool_loss) / (t_cool * t_cool);
    pt.std_error = std::sqrt(var);
    out.push_back(pt);
  }
  return out;
}

double CouplingHistogram::fraction_below(double g) const {
  if (!(g > 0.0) || density.empty()) return 0.0;
  double frac = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    const double lo = edge(i);
    const double hi = edge(i + 1);
    if (g >= hi)
      frac += density[i] * bin_width;
    else {
      frac += density[i] * (g - lo);
      break;
    }
  }
  return frac;
}

CouplingHistogram coupling_distribution(const std::vector<AtomRunResult>& runs,
                                        bool qualified_only, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("coupling bin width must be > 0");
  CouplingHistogram hist;
  hist.bin_width = bin_width;

  std::vector<Entry> entries;
  for (const auto& run : runs)
    for (const auto& rec : run.intervals) {
      if (rec.kind != IntervalKind::probe) continue;
      if (qualified_only && !rec.qualified) continue;
      entries.push_back({run.atom_index, rec.start, rec.mean_coupling});
    }
  if (entries.empty()) return hist;
  std::sort(entries.begin(), entries.end());

  hist.n_intervals = long(entries.size());
  double sum = 0.0;
  std::vector<long> bins;
  for (const auto& e : entries) {
    sum += e.value;
    const auto idx = std::size_t(e.value / bin_width);
    if (idx >= bins.size()) bins.resize(idx + 1, 0);
    ++bins[idx];
  }
  hist.mean = sum / double(entries.size());
  hist.density.resize(bins.size());
  const double norm = 1.0 / (double(entries.size()) * bin_width);
  for (std::size_t i = 0; i < bins.size(); ++i)
    hist.density[i] = double(bins[i]) * norm;
  return hist;
}

LocalizationResult axial_localization(const std::vector<AtomRunResult>& runs,
                                      bool qualified_only,
                                      const PhysicalParams& p) {
  std::array<std::uint64_t, kAxialBins> counts{};
  std::uint64_t total = 0;
  for (const auto& run : runs)
    for (const auto& rec : run.intervals) {
      if (rec.kind != IntervalKind::probe) continue;
      if (qualified_only && !rec.qualified) continue;
      for (std::size_t i = 0; i < kAxialBins; ++i) {
        counts[i] += rec.axial_hist[i];
        total += rec.axial_hist[i];
      }
    }
  if (total < 1000)
    throw ToleranceError("axial_localization: fewer than 1e3 position samples");

  LocalizationResult res;
  res.n_samples = total;
  const double bin_width = 0.5 * p.lambda_trap / double(kAxialBins);
  for (std::size_t i = 0; i < kAxialBins; ++i)
    res.density[i] = double(counts[i]) / (double(total) * bin_width);

  const auto& d = res.density;
  std::size_t m = 0;
  for (std::size_t i = 1; i < kAxialBins; ++i)
    if (d[i] > d[m]) m = i;
  const double half = 0.5 * d[m];
  auto center = [&](std::size_t i) {
    return -0.25 * p.lambda_trap + (double(i) + 0.5) * bin_width;
  };

  double x_left = -0.25 * p.lambda_trap;
  for (std::size_t i = m; i-- > 0;)
    if (d[i] < half) {
      x_left = center(i) + (half - d[i]) / (d[i + 1] - d[i]) * bin_width;
      break;
    }
  double x_right = 0.25 * p.lambda_trap;
  for (std::size_t i = m + 1; i < kAxialBins; ++i)
    if (d[i] < half) {
      x_right = center(i) - (half - d[i]) / (d[i - 1] - d[i]) * bin_width;
      break;
    }
  res.fwhm = x_right - x_left;
  return res;
}

std::vector<AttributionPoint> heating_attribution(
    const std::vector<AtomRunResult>& runs) {
  if (runs.empty()) throw ConfigError("heating_attribution: no runs");
  std::map<GroupKey, std::vector<std::pair<Entry, const HeatingBudget*>>> groups;
  for (const auto& run : runs) {
    const GroupKey key{run.trap_depth_hold, run.probe_delta_c};
    for (const auto& rec : run.intervals)
      if (rec.kind == IntervalKind::probe)
        groups[key].push_back({{run.atom_index, rec.start, 0.0}, &rec.budget});
  }

  std::vector<AttributionPoint> out;
  for (auto& [key, entries] : groups) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    AttributionPoint pt;
    pt.trap_depth = key.first;
    pt.delta_c = key.second;
    for (const auto& [tag, budget] : entries) pt.totals += *budget;
    const double probe_heat = pt.totals.spont_recoil + pt.totals.dipole_fluct;
    if (probe_heat != 0.0) {
      pt.defined = true;
      pt.spont_share = pt.totals.spont_recoil / probe_heat;
      pt.dipole_share = pt.totals.dipole_fluct / probe_heat;
    }
    out.push_back(pt);
  }
  return out;
}

namespace {

// theta = (b, a1, c1, w1, a2, c2, w2); L(x) = 1 / (1 + (2(x-c)/w)^2),
// so w is directly the FWHM.
void eval_model(const Eigen::Matrix<double, 7, 1>& th, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y, Eigen::VectorXd& r,
                Eigen::MatrixXd* jac) {
  const auto n = x.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = th(0);
    if (jac) (*jac)(i, 0) = 1.0;
    for (int k = 0; k < 2; ++k) {
      const double a = th(1 + 3 * k);
      const double c = th(2 + 3 * k);
      const double w = th(3 + 3 * k);
      const double u = 2.0 * (x(i) - c) / w;
      const double L = 1.0 / (1.0 + u * u);
      m += a * L;
      if (jac) {
        const double L2 = L * L;
        (*jac)(i, 1 + 3 * k) = L;
        (*jac)(i, 2 + 3 * k) = a * 4.0 * u * L2 / w;
        (*jac)(i, 3 + 3 * k) = a * 2.0 * u * u * L2 / w;
      }
    }
    r(i) = m - y(i);
  }
}

}  // namespace

PeakFitResult fit_normal_modes(const std::vector<double>& delta_c,
                               const std::vector<double>& value,
                               const std::vector<double>& std_error) {
  if (delta_c.size() != value.size())
    throw ConfigError("fit_normal_modes: mismatched input lengths");
  if (!std_error.empty() && std_error.size() != value.size())
    throw ConfigError("fit_normal_modes: mismatched std_error length");
  const std::size_t n = delta_c.size();
  if (n < 8)
    throw FitError("fit_normal_modes: need at least 8 points spanning both peaks");

  // Work in 2pi MHz units for conditioning.
  const double scale = mhz(1.0);
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {delta_c[i] / scale, value[i]};
  std::sort(pts.begin(), pts.end());
  Eigen::VectorXd x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i) = pts[i].first;
    y(i) = pts[i].second;
  }
  const double ymin = y.minCoeff();
  const double ymax = y.maxCoeff();
  const double range = std::max(ymax - ymin, 1e-12);
  const double span = x(n - 1) - x(0);

  // Seed from the two largest local maxima (endpoints allowed).
  std::vector<std::size_t> maxima;
  for (std::size_t i = 0; i < n; ++i) {
    const bool up = i == 0 || y(i) > y(i - 1);
    const bool down = i + 1 == n || y(i) >= y(i + 1);
    if (up && down) maxima.push_back(i);
  }
  std::sort(maxima.begin(), maxima.end(),
            [&](std::size_t a, std::size_t b) { return y(a) > y(b); });
  std::size_t i1, i2;
  if (maxima.size() >= 2) {
    i1 = maxima[0];
    i2 = maxima[1];
  } else {
    i1 = maxima.empty() ? n / 2 : maxima[0];
    i2 = i1 + 1 < n ? i1 + 1 : i1 - 1;
  }
  if (x(i1) > x(i2)) std::swap(i1, i2);

  auto half_width = [&](std::size_t m) {
    const double half = ymin + 0.5 * (y(m) - ymin);
    double left = x(0), right = x(n - 1);
    for (std::size_t j = m; j-- > 0;)
      if (y(j) < half) {
        left = x(j);
        break;
      }
    for (std::size_t j = m + 1; j < n; ++j)
      if (y(j) < half) {
        right = x(j);
        break;
      }
    return std::clamp(right - left, std::max(span / double(n), 0.5), span);
  };

  Eigen::Matrix<double, 7, 1> theta;
  theta << ymin, std::max(y(i1) - ymin, 1e-3 * range), x(i1), half_width(i1),
      std::max(y(i2) - ymin, 1e-3 * range), x(i2), half_width(i2);

  // Levenberg-Marquardt with analytic Jacobian.
  Eigen::VectorXd r(n), rt(n);
  Eigen::MatrixXd jac(n, 7);
  eval_model(theta, x, y, r, &jac);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  int iterations = 0;
  for (int outer = 0; outer < 300; ++outer) {
    const Eigen::Matrix<double, 7, 7> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 7, 1> grad = jac.transpose() * r;
    bool stepped = false;
    double drop = 0.0;
    while (lambda <= 1e12) {
      Eigen::Matrix<double, 7, 7> a = jtj;
      for (int k = 0; k < 7; ++k)
        a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::Matrix<double, 7, 1> step = a.ldlt().solve(-grad);
      Eigen::Matrix<double, 7, 1> trial = theta + step;
      trial(3) = std::max(std::fabs(trial(3)), 1e-3);
      trial(6) = std::max(std::fabs(trial(6)), 1e-3);
      eval_model(trial, x, y, rt, nullptr);
      const double trial_cost = 0.5 * rt.squaredNorm();
      if (trial_cost < cost) {
        drop = cost - trial_cost;
        theta = trial;
        r = rt;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 4.0;
    }
    ++iterations;
    if (!stepped || drop <= 1e-15 * std::max(cost, 1e-300)) break;
    eval_model(theta, x, y, r, &jac);
  }

  struct Peak {
    double a, c, w;
  };
  Peak lo{theta(1), theta(2), std::fabs(theta(3))};
  Peak hi{theta(4), theta(5), std::fabs(theta(6))};
  if (lo.c > hi.c) std::swap(lo, hi);

  PeakFitResult res;
  res.background = theta(0);
  res.center_lo = lo.c * scale;
  res.fwhm_lo = lo.w * scale;
  res.height_lo = lo.a;
  res.center_hi = hi.c * scale;
  res.fwhm_hi = hi.w * scale;
  res.height_hi = hi.a;
  res.residual_rms = std::sqrt(r.squaredNorm() / double(n));
  res.iterations = iterations;

  double noise_allowance = 0.0;
  if (!std_error.empty()) {
    double s2 = 0.0;
    for (double s : std_error) s2 += s * s;
    noise_allowance = 2.0 * std::sqrt(s2 / double(std_error.size()));
  }
  if (res.residual_rms > std::max(0.15 * range, noise_allowance))
    throw FitError("fit_normal_modes: residual above threshold");
  if (lo.a < 0.02 * range || hi.a < 0.02 * range)
    throw FitError("fit_normal_modes: peak amplitude collapsed");
  if (hi.c - lo.c < 0.25 * (lo.w + hi.w))
    throw FitError("fit_normal_modes: peaks merged");
  if (lo.c < x(0) - 0.5 * span || hi.c > x(n - 1) + 0.5 * span)
    throw FitError("fit_normal_modes: peak center outside the scanned range");
  return res;
}

}  // namespace cavitymc
