#include "fastsurv/cph.hpp"

#include "fastsurv/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

namespace fastsurv {

namespace {

void refresh_weights(LinearPredictor& lp) {
  lp.stabilizer = lp.eta.size() > 0 ? lp.eta.maxCoeff() : 0.0;
  lp.weights = (lp.eta.array() - lp.stabilizer).exp().matrix();
}

// S0 over each tie-group prefix [0, group.end).
std::vector<double> group_risk_sums(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto& groups = data.groups();
  std::vector<double> s0(groups.size());
  CompensatedSum acc;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t j = groups[g].begin; j < groups[g].end; ++j) {
      acc.add(eta.weights[static_cast<Eigen::Index>(j)]);
    }
    s0[g] = acc.value();
  }
  return s0;
}

// Suffix sums over groups of events_g / S0_g^power; entry g covers groups g..G-1,
// i.e. every event whose risk set contains the members of group g.
std::vector<double> event_share_suffix(const SortedSurvivalDataset& data,
                                       const std::vector<double>& s0, int power) {
  const auto& groups = data.groups();
  std::vector<double> out(groups.size());
  CompensatedSum acc;
  for (std::size_t g = groups.size(); g-- > 0;) {
    if (groups[g].events > 0.0) {
      const double share = power == 1 ? 1.0 / s0[g] : 1.0 / (s0[g] * s0[g]);
      acc.add(groups[g].events * share);
    }
    out[g] = acc.value();
  }
  return out;
}

}  // namespace

LinearPredictor make_linear_predictor(Vector eta) {
  LinearPredictor lp;
  lp.eta = std::move(eta);
  if (!lp.eta.allFinite()) throw NumericError("linear predictor contains non-finite values");
  refresh_weights(lp);
  return lp;
}

LinearPredictor compute_eta(const SortedSurvivalDataset& data, const Vector& beta) {
  if (static_cast<std::size_t>(beta.size()) != data.p()) {
    throw ValidationError("coefficient vector has length " + std::to_string(beta.size()) +
                          " but the data has " + std::to_string(data.p()) + " features");
  }
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (!std::isfinite(beta[j])) {
      throw NumericError("coefficient " + std::to_string(j) + " ('" +
                         data.feature_names()[static_cast<std::size_t>(j)] + "') is not finite");
    }
  }
  LinearPredictor lp;
  const Eigen::Index nonzero = (beta.array() != 0.0).count();
  if (4 * nonzero < beta.size()) {
    lp.eta = Vector::Zero(static_cast<Eigen::Index>(data.n()));
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (beta[j] != 0.0) lp.eta.noalias() += beta[j] * data.x().col(j);
    }
  } else {
    lp.eta = data.x() * beta;
  }
  if (!lp.eta.allFinite()) {
    Eigen::Index row = 0;
    for (; row < lp.eta.size() && std::isfinite(lp.eta[row]); ++row) {
    }
    Eigen::Index worst = 0;
    (data.x().row(row).transpose().array() * beta.array()).abs().maxCoeff(&worst);
    throw NumericError("linear predictor overflowed; largest contribution from coefficient " +
                       std::to_string(worst) + " ('" +
                       data.feature_names()[static_cast<std::size_t>(worst)] + "')");
  }
  refresh_weights(lp);
  return lp;
}

void update_eta(LinearPredictor& eta, const SortedSurvivalDataset& data, std::size_t feature,
                double delta_beta) {
  if (!std::isfinite(delta_beta)) {
    throw NumericError("non-finite update for coefficient " + std::to_string(feature));
  }
  if (delta_beta == 0.0) return;
  Vector next = eta.eta + delta_beta * data.x().col(static_cast<Eigen::Index>(feature));
  if (!next.allFinite()) {
    throw NumericError("linear predictor overflowed while updating coefficient " +
                       std::to_string(feature) + " ('" + data.feature_names()[feature] + "')");
  }
  eta.eta = std::move(next);
  refresh_weights(eta);
  ++eta.version;
}

double cph_loss(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto s0 = group_risk_sums(data, eta);
  const auto& groups = data.groups();
  CompensatedSum total;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].events > 0.0) total.add(groups[g].events * (eta.stabilizer + std::log(s0[g])));
  }
  const auto& event = data.event();
  for (Eigen::Index i = 0; i < event.size(); ++i) {
    if (event[i] != 0.0) total.add(-eta.eta[i]);
  }
  return total.value();
}

RiskSetCumulants risk_set_cumulants(const SortedSurvivalDataset& data, const LinearPredictor& eta,
                                    std::size_t feature) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto col = data.x().col(static_cast<Eigen::Index>(feature));
  RiskSetCumulants out{Vector(n), Vector(n), Vector(n), Vector(n)};
  CompensatedSum s0, s1, s2, s3;
  for (const auto& g : data.groups()) {
    for (std::size_t j = g.begin; j < g.end; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      const double w = eta.weights[r];
      const double x = col[r];
      s0.add(w);
      s1.add(w * x);
      s2.add(w * x * x);
      s3.add(w * x * x * x);
    }
    for (std::size_t j = g.begin; j < g.end; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      out.s0[r] = s0.value();
      out.s1[r] = s1.value();
      out.s2[r] = s2.value();
      out.s3[r] = s3.value();
    }
  }
  return out;
}

CoordinateDerivatives coordinate_partials(const SortedSurvivalDataset& data,
                                          const LinearPredictor& eta, std::size_t feature,
                                          int order) {
  if (order < 1 || order > 3) throw ValidationError("derivative order must be 1, 2 or 3");
  if (feature >= data.p()) throw ValidationError("feature index out of range");

  const auto l = static_cast<Eigen::Index>(feature);
  const double* x = data.x().col(l).data();
  const double* w = eta.weights.data();
  const double center = data.feature_centers()[l];

  CompensatedSum s0, s1, s2, s3;
  CompensatedSum m1, m2, m3;
  for (const auto& g : data.groups()) {
    for (std::size_t j = g.begin; j < g.end; ++j) {
      const double xc = x[j] - center;
      const double wx = w[j] * xc;
      s0.add(w[j]);
      s1.add(wx);
      if (order >= 2) s2.add(wx * xc);
      if (order >= 3) s3.add(wx * xc * xc);
    }
    if (g.events == 0.0) continue;
    const double inv = 1.0 / s0.value();
    const double mu1 = s1.value() * inv;
    m1.add(g.events * mu1);
    if (order >= 2) {
      const double mu2 = s2.value() * inv;
      m2.add(g.events * std::max(0.0, mu2 - mu1 * mu1));
      if (order >= 3) {
        const double mu3 = s3.value() * inv;
        m3.add(g.events * (mu3 + 2.0 * mu1 * mu1 * mu1 - 3.0 * mu2 * mu1));
      }
    }
  }

  CoordinateDerivatives out;
  out.feature = feature;
  out.eta_version = eta.version;
  out.d1 = m1.value() - data.centered_event_sums()[l];
  out.d2 = m2.value();
  if (order >= 3) out.d3 = m3.value();
  return out;
}

double central_moment(const SortedSurvivalDataset& data, const LinearPredictor& eta,
                      std::size_t feature, int r, std::size_t event_position) {
  if (r < 1) throw ValidationError("central moment order must be >= 1");
  if (event_position >= data.n() || data.event()[static_cast<Eigen::Index>(event_position)] == 0.0) {
    throw ValidationError("central moment requested for a position that is not an event");
  }
  if (r == 1) return 0.0;
  const std::size_t end = data.tie_group_end(event_position);
  const auto col = data.x().col(static_cast<Eigen::Index>(feature));
  CompensatedSum s0, s1;
  for (std::size_t j = 0; j < end; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    s0.add(eta.weights[k]);
    s1.add(eta.weights[k] * col[k]);
  }
  const double mean = s1.value() / s0.value();
  CompensatedSum moment;
  for (std::size_t j = 0; j < end; ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    moment.add(eta.weights[k] * std::pow(col[k] - mean, r));
  }
  return moment.value() / s0.value();
}

LipschitzTable lipschitz_constants(const SortedSurvivalDataset& data) {
  const auto p = static_cast<Eigen::Index>(data.p());
  LipschitzTable table{Vector::Zero(p), Vector::Zero(p)};
  const double cubic_scale = 1.0 / (6.0 * std::sqrt(3.0));
  for (Eigen::Index l = 0; l < p; ++l) {
    const auto col = data.x().col(l);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double l2 = 0.0;
    double l3 = 0.0;
    for (const auto& g : data.groups()) {
      for (std::size_t j = g.begin; j < g.end; ++j) {
        lo = std::min(lo, col[static_cast<Eigen::Index>(j)]);
        hi = std::max(hi, col[static_cast<Eigen::Index>(j)]);
      }
      if (g.events == 0.0) continue;
      const double range = hi - lo;
      l2 += g.events * range * range;
      l3 += g.events * range * range * range;
    }
    table.l2[l] = 0.25 * l2;
    table.l3[l] = cubic_scale * l3;
  }
  return table;
}

Vector eta_gradient(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto s0 = group_risk_sums(data, eta);
  const auto share = event_share_suffix(data, s0, 1);
  Vector grad(static_cast<Eigen::Index>(data.n()));
  for (std::size_t k = 0; k < data.n(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    grad[r] = eta.weights[r] * share[data.group_of(k)] - data.event()[r];
  }
  return grad;
}

Vector full_beta_gradient(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  return data.x().transpose() * eta_gradient(data, eta);
}

Vector eta_hessian_diagonal(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto s0 = group_risk_sums(data, eta);
  const auto share = event_share_suffix(data, s0, 1);
  const auto share_sq = event_share_suffix(data, s0, 2);
  Vector diag(static_cast<Eigen::Index>(data.n()));
  for (std::size_t k = 0; k < data.n(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const double w = eta.weights[r];
    const std::size_t g = data.group_of(k);
    diag[r] = std::max(0.0, w * share[g] - w * w * share_sq[g]);
  }
  return diag;
}

Vector eta_hessian_upper_diagonal(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto s0 = group_risk_sums(data, eta);
  const auto share = event_share_suffix(data, s0, 1);
  Vector diag(static_cast<Eigen::Index>(data.n()));
  for (std::size_t k = 0; k < data.n(); ++k) {
    diag[static_cast<Eigen::Index>(k)] = eta.weights[static_cast<Eigen::Index>(k)] * share[data.group_of(k)];
  }
  return diag;
}

Matrix beta_hessian(const SortedSurvivalDataset& data, const LinearPredictor& eta) {
  const auto p = static_cast<Eigen::Index>(data.p());
  const Matrix centered = data.x().rowwise() - data.feature_centers().transpose();
  const auto s0 = group_risk_sums(data, eta);
  const auto share = event_share_suffix(data, s0, 1);

  Vector row_weight(static_cast<Eigen::Index>(data.n()));
  for (std::size_t k = 0; k < data.n(); ++k) {
    row_weight[static_cast<Eigen::Index>(k)] =
        eta.weights[static_cast<Eigen::Index>(k)] * share[data.group_of(k)];
  }

  const auto& groups = data.groups();
  Eigen::Index event_groups = 0;
  for (const auto& g : groups) event_groups += g.events > 0.0 ? 1 : 0;
  Matrix means(event_groups, p);
  Vector s1 = Vector::Zero(p);
  Eigen::Index next = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t j = groups[g].begin; j < groups[g].end; ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      s1.noalias() += eta.weights[r] * centered.row(r).transpose();
    }
    if (groups[g].events == 0.0) continue;
    means.row(next++) = (std::sqrt(groups[g].events) / s0[g]) * s1.transpose();
  }

  Matrix hessian = centered.transpose() * row_weight.asDiagonal() * centered;
  hessian.noalias() -= means.transpose() * means;
  return 0.5 * (hessian + hessian.transpose());
}

}  // namespace fastsurv
